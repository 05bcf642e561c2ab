//! Interaction-picture split `H = H0 + H_R` with a single mean-field-solvable
//! fragment `H0 = U (sum mu_i n_i + sum lam_ij n_i n_j) U^dagger`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fragments::{
    cartan_supermatrix, generator_gradient, generator_matrix, n_generators, n_lambda, pair_products, unpack_lambda,
    CsaFragment, OrbitalRotation,
};
use crate::optim::{minimize, CostFunction, Minimum, OptimizerConfig};
use crate::tensors::{SpatialTensors, Tensor4};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PictureSplit {
    /// `H0`, with `mu` present.
    pub h0: CsaFragment,
    pub residual: SpatialTensors,
    /// Achieved `|h - h0|^2 + |g - g0|^2`.
    pub fit_residual_norm: f64,
}

/// One-body tensor `sum_a mu_a u_pa u_qa`, exactly symmetric.
pub fn occupation_matrix(u: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let n = u.nrows();
    DMatrix::from_fn(n, n, |p, q| (0..n).map(|a| mu[a] * (u[(p, a)] * u[(q, a)])).sum())
}

impl PictureSplit {
    /// One- and two-body tensors of `H0` (no constant).
    pub fn h0_tensors(&self) -> SpatialTensors {
        let u = &self.h0.rotation.u;
        let mu = self.h0.mu.as_deref().expect("H0 carries one-body coefficients");
        let n = u.nrows();
        SpatialTensors::from_parts_trusted(0.0, occupation_matrix(u, mu), Tensor4::from_supermatrix(n, &cartan_supermatrix(u, &self.h0.lam)))
    }
}

/// Squared distance between `(h, g)` and an `H0` ansatz, parameters
/// `(theta, mu, lam lower triangle)`.
pub struct PictureFitCost<'a> {
    n: usize,
    h: &'a DMatrix<f64>,
    g: DMatrix<f64>,
}

impl<'a> PictureFitCost<'a> {
    pub fn new(t: &'a SpatialTensors) -> Self {
        Self { n: t.n_orb(), h: t.obt(), g: t.tbt().to_supermatrix() }
    }

    fn unpack<'x>(&self, x: &'x [f64]) -> (DMatrix<f64>, &'x [f64], DMatrix<f64>) {
        let k = n_generators(self.n);
        (generator_matrix(self.n, &x[..k]), &x[k..k + self.n], unpack_lambda(self.n, &x[k + self.n..]))
    }
}

impl CostFunction for PictureFitCost<'_> {
    fn dim(&self) -> usize {
        n_generators(self.n) + self.n + n_lambda(self.n)
    }

    fn cost(&self, x: &[f64]) -> f64 {
        let (a, mu, lam) = self.unpack(x);
        let u = a.exp();
        let dh = self.h - occupation_matrix(&u, mu);
        let p = pair_products(&u);
        let dg = &self.g - &p * lam * p.transpose();
        dh.norm_squared() + dg.norm_squared()
    }

    fn cost_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.n;
        let k = n_generators(n);
        let (a, mu, lam) = self.unpack(x);
        let u = a.exp();
        let dh = self.h - occupation_matrix(&u, mu);
        let p = pair_products(&u);
        let pl = &p * &lam;
        let dg = &self.g - &pl * p.transpose();

        // mu_a: -2 (u^T Dh u)_aa
        let dhu = &dh * &u;
        for a in 0..n {
            grad[k + a] = -2.0 * (0..n).map(|q| u[(q, a)] * dhu[(q, a)]).sum::<f64>();
        }
        let xm = p.transpose() * (&dg * &p);
        let mut c = k + n;
        for i in 0..n {
            for j in 0..=i {
                grad[c] = if i == j { -2.0 * xm[(i, i)] } else { -2.0 * (xm[(i, j)] + xm[(j, i)]) };
                c += 1;
            }
        }
        let dpl = &dg * &pl;
        let gu = DMatrix::from_fn(n, n, |pp, cc| {
            -4.0 * dhu[(pp, cc)] * mu[cc] - 8.0 * (0..n).map(|q| u[(q, cc)] * dpl[(pp * n + q, cc)]).sum::<f64>()
        });
        generator_gradient(&a, &gu, &mut grad[..k]);
        dh.norm_squared() + dg.norm_squared()
    }
}

/// Joint fit of `(theta, mu, lam)`. The first start is `theta = 0`,
/// `mu = diag(h)`, `lam = 0`; `cfg.restarts` more draw every parameter
/// uniformly from `[-0.05, 0.05]` but keep `mu = diag(h)`.
pub fn split_interaction(t: &SpatialTensors, cfg: &OptimizerConfig) -> Result<PictureSplit> {
    let n = t.n_orb();
    let k = n_generators(n);
    let cost = PictureFitCost::new(t);
    let dim = cost.dim();
    let diag: Vec<f64> = (0..n).map(|i| t.obt()[(i, i)]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = Vec::with_capacity(cfg.restarts + 1);
    let mut x0 = vec![0.0; dim];
    x0[k..k + n].copy_from_slice(&diag);
    starts.push(x0);
    for _ in 0..cfg.restarts {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.05..=0.05)).collect();
        x[k..k + n].copy_from_slice(&diag);
        starts.push(x);
    }
    let results: Vec<Result<Minimum>> = starts.par_iter().map(|x| minimize(&cost, x, cfg)).collect();
    let mut best: Option<Minimum> = None;
    for r in results {
        let m = r?;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let (a, mu, lam) = cost.unpack(&best.x);
    let h0 = CsaFragment {
        rotation: OrbitalRotation { theta: Some(best.x[..k].to_vec()), u: a.exp() },
        lam,
        mu: Some(mu.to_vec()),
    };
    let mut split = PictureSplit { h0, residual: t.clone(), fit_residual_norm: best.value };
    split.residual = t - &split.h0_tensors();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hamiltonian_splits_trivially() {
        let t = SpatialTensors::zeros(2);
        let s = split_interaction(&t, &OptimizerConfig { restarts: 0, ..Default::default() }).unwrap();
        assert_eq!(s.fit_residual_norm, 0.0);
        assert_eq!(s.residual.max_abs(), 0.0);
    }

    #[test]
    fn representable_hamiltonian_leaves_no_residual() {
        let lam = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.2]);
        let u = DMatrix::identity(2, 2);
        let g = Tensor4::from_supermatrix(2, &cartan_supermatrix(&u, &lam));
        let h = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -0.4]);
        let t = SpatialTensors::new(0.0, h, g).unwrap();
        let s = split_interaction(&t, &OptimizerConfig { restarts: 0, ..Default::default() }).unwrap();
        assert!(s.fit_residual_norm < 1e-8, "{}", s.fit_residual_norm);
    }
}
