//! Symmetry shifts: subtract `s1 Ne + s2 Ne^2` to lower the 1-norm.
//!
//! `s2` minimizes the surrogate `sum_{p >= q} |g_ppqq - s2|` over spin-orbital
//! pairs, then `s1` minimizes `sum_{i sigma} |mu_i - s1|` for the eigenvalues
//! `mu` of the adjusted one-body matrix of the two-body-shifted tensors.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensors::{one_body_adjust, sym_eigh, SpatialTensors, Tensor4};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetryShift {
    /// Coefficient of `Ne`.
    pub s1: f64,
    /// Coefficient of `Ne^2`.
    pub s2: f64,
}

/// Weighted least-absolute-deviation problem
/// `min_s sum_nu w_nu |lam_nu - sum_u s_u tau[u][nu]|`.
#[derive(Clone, Debug, PartialEq)]
pub struct L1Problem {
    pub lam: Vec<f64>,
    pub tau: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl L1Problem {
    pub fn objective(&self, s: &[f64]) -> f64 {
        (0..self.lam.len())
            .map(|nu| {
                let fit: f64 = self.tau.iter().zip(s).map(|(row, su)| row[nu] * su).sum();
                self.weights[nu] * (self.lam[nu] - fit).abs()
            })
            .sum()
    }

    fn validate(&self) -> Result<()> {
        let c = self.lam.len();
        if self.tau.is_empty() {
            return Err(Error::Contract("at least one symmetry is required".into()));
        }
        if self.weights.len() != c || self.tau.iter().any(|r| r.len() != c) {
            return Err(Error::Dimension("lam, tau rows and weights must have equal length".into()));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Contract("weights must be positive".into()));
        }
        Ok(())
    }
}

/// Solve the problem as the linear program
/// `min sum w t  s.t.  tau s - t <= lam,  -tau s - t <= -lam`.
pub fn solve_l1(prob: &L1Problem) -> Result<(Vec<f64>, f64)> {
    prob.validate()?;
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let s: Vec<_> = prob.tau.iter().map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for nu in 0..prob.lam.len() {
        let t = lp.add_var(prob.weights[nu], (0.0, f64::INFINITY));
        let mut up: Vec<_> = s.iter().zip(&prob.tau).map(|(v, row)| (*v, row[nu])).collect();
        up.push((t, -1.0));
        lp.add_constraint(&up[..], ComparisonOp::Le, prob.lam[nu]);
        let mut down: Vec<_> = s.iter().zip(&prob.tau).map(|(v, row)| (*v, -row[nu])).collect();
        down.push((t, -1.0));
        lp.add_constraint(&down[..], ComparisonOp::Le, -prob.lam[nu]);
    }
    let sol = lp.solve().map_err(|e| Error::LinearProgram(e.to_string()))?;
    let values: Vec<f64> = s.iter().map(|v| sol[*v]).collect();
    let obj = prob.objective(&values);
    Ok((values, obj))
}

/// Smallest `v` among `values` whose cumulative weight reaches half the total:
/// the smallest minimizer of `sum w |v_nu - v|`.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::Dimension("weighted median needs equally many values and weights".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for &i in &order {
        acc += weights[i];
        if acc >= 0.5 * total {
            return Ok(values[i]);
        }
    }
    Ok(values[*order.last().unwrap()])
}

/// Diagonal elements `g_iijj` over spin-orbital pairs `p >= q`, folded onto
/// spatial pairs: weight 3 for `i = j`, 4 for `i > j`.
pub fn two_body_problem(t: &SpatialTensors) -> L1Problem {
    let n = t.n_orb();
    let g = t.tbt();
    let (mut lam, mut weights) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in 0..=i {
            lam.push(g[(i, i, j, j)]);
            weights.push(if i == j { 3.0 } else { 4.0 });
        }
    }
    let tau = vec![vec![1.0; lam.len()]];
    L1Problem { lam, tau, weights }
}

pub fn shift_two_body(t: &SpatialTensors) -> (SpatialTensors, f64) {
    let prob = two_body_problem(t);
    let s2 = weighted_median(&prob.lam, &prob.weights).expect("nonempty");
    (apply_shift(t, SymmetryShift { s1: 0.0, s2 }), s2)
}

/// Returns the shifted eigenvalues `mu - s1` and `s1`.
pub fn shift_one_body(t: &SpatialTensors) -> (Vec<f64>, f64) {
    let mu: Vec<f64> = sym_eigh(&one_body_adjust(t)).0.iter().copied().collect();
    let s1 = weighted_median(&mu, &vec![2.0; mu.len()]).expect("nonempty");
    (mu.iter().map(|m| m - s1).collect(), s1)
}

/// Tensors of `H - s1 Ne - s2 Ne^2`; `e0` is left alone.
pub fn apply_shift(t: &SpatialTensors, s: SymmetryShift) -> SpatialTensors {
    let n = t.n_orb();
    let h = t.obt() - DMatrix::<f64>::identity(n, n) * s.s1;
    let mut g: Tensor4 = t.tbt().clone();
    for i in 0..n {
        for k in 0..n {
            g[(i, i, k, k)] -= s.s2;
        }
    }
    SpatialTensors::from_parts_trusted(t.e0(), h, g)
}

/// Two-step optimal shift and the shifted tensors.
pub fn optimal_shift(t: &SpatialTensors) -> (SymmetryShift, SpatialTensors) {
    let (t2, s2) = shift_two_body(t);
    let (_, s1) = shift_one_body(&t2);
    let s = SymmetryShift { s1, s2 };
    (s, apply_shift(t, s))
}
