//! Fock-space spectra: the spectral range `Delta E` behind the 1-norm lower
//! bound `Delta E / 2`, particle-number sector spectra, and the two-unitary
//! LCU that attains the bound.
//!
//! The Hamiltonian conserves the number of electrons of each spin, so every
//! computation runs block by block over `(n_alpha, n_beta)` sectors.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensors::SpatialTensors;

/// Largest spin-orbital count handled.
pub const MAX_SPIN_ORBITALS: usize = 20;
/// Sectors up to this dimension are diagonalized densely.
pub const DENSE_SECTOR_LIMIT: usize = 600;
/// Convergence target for iterative extremal eigenvalues.
pub const EIGEN_TOL: f64 = 1e-7;

#[inline]
fn excite(p: usize, q: usize, s: u64) -> Option<(f64, u64)> {
    if s >> q & 1 == 0 {
        return None;
    }
    let t = s ^ (1 << q);
    if t >> p & 1 == 1 {
        return None;
    }
    let below = |m: u64, k: usize| (m & ((1u64 << k) - 1)).count_ones();
    let parity = below(s, q) + below(t, p);
    Some((if parity % 2 == 1 { -1.0 } else { 1.0 }, t | (1 << p)))
}

/// Sparse symmetric matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(64).for_each(|(r, yr)| {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yr = acc;
        });
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k] as usize)] += self.vals[k];
            }
        }
        m
    }
}

/// Matrix-free view of the Hamiltonian in the occupation basis; bit `p` of a
/// basis state is spin orbital `p = 2 i + sigma`.
#[derive(Clone, Debug)]
pub struct FockOperator {
    t: SpatialTensors,
}

impl FockOperator {
    pub fn new(t: &SpatialTensors) -> Result<Self> {
        if 2 * t.n_orb() > MAX_SPIN_ORBITALS {
            return Err(Error::Capability(format!("{} spin orbitals exceed the limit of {MAX_SPIN_ORBITALS}", 2 * t.n_orb())));
        }
        Ok(Self { t: t.clone() })
    }

    pub fn n_spin_orb(&self) -> usize {
        2 * self.t.n_orb()
    }

    /// `H |s>` as `(coefficient, state)` pairs with repeats summed.
    fn column(&self, s: u64, out: &mut HashMap<u64, f64>) {
        out.clear();
        let n = self.t.n_orb();
        let h = self.t.obt();
        let g = self.t.tbt();
        let e0 = self.t.e0();
        if e0 != 0.0 {
            *out.entry(s).or_default() += e0;
        }
        for sp in 0..2 {
            for k in 0..n {
                for l in 0..n {
                    let Some((c1, mid)) = excite(2 * k + sp, 2 * l + sp, s) else { continue };
                    if h[(k, l)] != 0.0 {
                        *out.entry(mid).or_default() += c1 * h[(k, l)];
                    }
                    for sg in 0..2 {
                        for i in 0..n {
                            for j in 0..n {
                                let v = g[(i, j, k, l)];
                                if v == 0.0 {
                                    continue;
                                }
                                if let Some((c2, fin)) = excite(2 * i + sg, 2 * j + sg, mid) {
                                    *out.entry(fin).or_default() += c1 * c2 * v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Basis states with the given numbers of alpha and beta electrons.
    pub fn sector_states(&self, n_alpha: usize, n_beta: usize) -> Vec<u64> {
        let ns = self.n_spin_orb();
        let alpha_mask: u64 = (0..ns).step_by(2).map(|p| 1u64 << p).sum();
        (0u64..1 << ns)
            .filter(|s| (s & alpha_mask).count_ones() as usize == n_alpha && (s & !alpha_mask).count_ones() as usize == n_beta)
            .collect()
    }

    pub fn sector_matrix(&self, n_alpha: usize, n_beta: usize) -> SparseMatrix {
        self.matrix_on(&self.sector_states(n_alpha, n_beta))
    }

    fn matrix_on(&self, states: &[u64]) -> SparseMatrix {
        let index: HashMap<u64, u32> = states.iter().enumerate().map(|(k, s)| (*s, k as u32)).collect();
        let rows: Vec<Vec<(u32, f64)>> = states
            .par_iter()
            .map_init(HashMap::new, |buf, &s| {
                // H is symmetric, so the column of s is also its row.
                self.column(s, buf);
                let mut row: Vec<(u32, f64)> = buf
                    .iter()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(t, v)| (*index.get(t).expect("operator leaves the sector"), *v))
                    .collect();
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(states.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { dim: states.len(), row_ptr, cols, vals }
    }

    /// Dense matrix over the whole Fock space (small systems only).
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        let ns = self.n_spin_orb();
        if ns > 12 {
            return Err(Error::Capability(format!("dense Fock matrix on {ns} spin orbitals")));
        }
        let states: Vec<u64> = (0..1u64 << ns).collect();
        Ok(self.matrix_on(&states).to_dense())
    }

    /// `y = H x` over the whole Fock space.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let dim = 1usize << self.n_spin_orb();
        assert_eq!(x.len(), dim);
        assert_eq!(y.len(), dim);
        y.par_iter_mut().enumerate().for_each_init(HashMap::new, |buf, (s, ys)| {
            self.column(s as u64, buf);
            *ys = buf.iter().map(|(t, v)| v * x[*t as usize]).sum();
        });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRange {
    pub e_min: f64,
    pub e_max: f64,
    /// `Iterative` if any sector needed the Lanczos path.
    pub method: SpectrumMethod,
    /// Largest eigen-residual norm among the extremal pairs.
    pub residual: f64,
}

impl SpectralRange {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.e_max - self.e_min)
    }
}

struct Extremes {
    min: f64,
    max: f64,
    residual: f64,
    iterative: bool,
}

fn dense_extremes(m: &SparseMatrix) -> Extremes {
    let eig = SymmetricEigen::new(m.to_dense());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in eig.eigenvalues.iter() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    Extremes { min: lo, max: hi, residual: 0.0, iterative: false }
}

/// One Lanczos pass with full reorthogonalization from `start`; returns Ritz
/// pairs for the lowest and highest values and their residual norms.
fn lanczos_pass(m: &SparseMatrix, start: &[f64], steps: usize) -> [(f64, Vec<f64>, f64); 2] {
    let dim = m.dim();
    let steps = steps.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let norm = start.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut q: Vec<f64> = start.iter().map(|v| v / norm).collect();
    let mut w = vec![0.0; dim];
    let mut last_beta = 0.0;
    for k in 0..steps {
        m.apply(&q, &mut w);
        let a: f64 = w.iter().zip(&q).map(|(x, y)| x * y).sum();
        alpha.push(a);
        basis.push(q.clone());
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bnorm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        last_beta = bnorm;
        if k + 1 == steps || bnorm < 1e-12 {
            break;
        }
        beta.push(bnorm);
        q = w.iter().map(|v| v / bnorm).collect();
    }
    let k = alpha.len();
    let tri = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(tri);
    let pick = |want_max: bool| {
        let mut best = 0;
        for i in 1..k {
            let better = if want_max { eig.eigenvalues[i] > eig.eigenvalues[best] } else { eig.eigenvalues[i] < eig.eigenvalues[best] };
            if better {
                best = i;
            }
        }
        let y = eig.eigenvectors.column(best);
        let mut v = vec![0.0; dim];
        for (c, b) in y.iter().zip(&basis) {
            v.iter_mut().zip(b).for_each(|(x, z)| *x += c * z);
        }
        (eig.eigenvalues[best], v, (last_beta * y[k - 1]).abs())
    };
    [pick(false), pick(true)]
}

fn lanczos_extremes(m: &SparseMatrix, seed: u64) -> Result<Extremes> {
    let dim = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let steps = 120.min(dim);
    let mut ends = lanczos_pass(m, &start, steps);
    let mut y = vec![0.0; dim];
    let true_residual = |val: f64, v: &[f64], y: &mut [f64]| {
        m.apply(v, y);
        y.iter().zip(v).map(|(a, b)| (a - val * b).powi(2)).sum::<f64>().sqrt()
    };
    let mut res = [f64::INFINITY; 2];
    for _restart in 0..30 {
        for e in 0..2 {
            res[e] = true_residual(ends[e].0, &ends[e].1, &mut y);
        }
        if res[0] <= EIGEN_TOL && res[1] <= EIGEN_TOL {
            return Ok(Extremes { min: ends[0].0, max: ends[1].0, residual: res[0].max(res[1]), iterative: true });
        }
        for e in 0..2 {
            if res[e] > EIGEN_TOL {
                let next = lanczos_pass(m, &ends[e].1, steps);
                ends[e] = next[e].clone();
            }
        }
    }
    Err(Error::NoConvergence { residual: res[0].max(res[1]) })
}

fn sector_extremes(op: &FockOperator, a: usize, b: usize) -> Result<Extremes> {
    let m = op.sector_matrix(a, b);
    if m.dim() <= DENSE_SECTOR_LIMIT {
        Ok(dense_extremes(&m))
    } else {
        lanczos_extremes(&m, (a * 64 + b) as u64)
    }
}

/// `E_min` and `E_max` over the whole Fock space.
pub fn spectral_range(t: &SpatialTensors) -> Result<SpectralRange> {
    let op = FockOperator::new(t)?;
    let n = t.n_orb();
    let sectors: Vec<(usize, usize)> = (0..=n).flat_map(|a| (0..=n).map(move |b| (a, b))).collect();
    let parts: Vec<Result<Extremes>> = sectors.par_iter().map(|&(a, b)| sector_extremes(&op, a, b)).collect();
    let mut out = SpectralRange { e_min: f64::INFINITY, e_max: f64::NEG_INFINITY, method: SpectrumMethod::Dense, residual: 0.0 };
    for p in parts {
        let p = p?;
        out.e_min = out.e_min.min(p.min);
        out.e_max = out.e_max.max(p.max);
        out.residual = out.residual.max(p.residual);
        if p.iterative {
            out.method = SpectrumMethod::Iterative;
        }
    }
    Ok(out)
}

/// All eigenvalues (ascending) with exactly `n_elec` electrons.
pub fn sector_spectrum(t: &SpatialTensors, n_elec: usize) -> Result<Vec<f64>> {
    let op = FockOperator::new(t)?;
    let n = t.n_orb();
    if n_elec > 2 * n {
        return Err(Error::Contract(format!("{n_elec} electrons in {} spin orbitals", 2 * n)));
    }
    let mut all = Vec::new();
    for a in n_elec.saturating_sub(n)..=n_elec.min(n) {
        let m = op.sector_matrix(a, n_elec - a);
        if m.dim() > 4 * DENSE_SECTOR_LIMIT {
            return Err(Error::Capability(format!("sector of dimension {} is too large for a full spectrum", m.dim())));
        }
        all.extend(SymmetricEigen::new(m.to_dense()).eigenvalues.iter().copied());
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// `H = gamma + coefficient (U_plus + U_minus)` with
/// `U_pm = H_s +- i sqrt(1 - H_s^2)`, `H_s = (H - gamma) / (Delta E / 2)`.
#[derive(Clone, Debug)]
pub struct MinimalLcu {
    pub gamma: f64,
    pub coefficient: f64,
    pub u_plus: DMatrix<Complex64>,
    pub u_minus: DMatrix<Complex64>,
}

impl MinimalLcu {
    /// Sum of the absolute LCU coefficients, `Delta E / 2`.
    pub fn one_norm(&self) -> f64 {
        2.0 * self.coefficient.abs()
    }
}

pub fn minimal_lcu(t: &SpatialTensors) -> Result<MinimalLcu> {
    let op = FockOperator::new(t)?;
    if op.n_spin_orb() > 8 {
        return Err(Error::Capability("minimal LCU is built densely for at most 8 spin orbitals".into()));
    }
    let h = op.dense()?;
    let eig = SymmetricEigen::new(h);
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    let gamma = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let dim = eig.eigenvalues.len();
    let scaled: DVector<f64> = eig.eigenvalues.map(|e| if half > 0.0 { ((e - gamma) / half).clamp(-1.0, 1.0) } else { 0.0 });
    let v = eig.eigenvectors.map(Complex64::from);
    let build = |sign: f64| {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            scaled.iter().map(|x| Complex64::new(*x, sign * (1.0 - x * x).max(0.0).sqrt())),
        ));
        &v * d * v.adjoint()
    };
    Ok(MinimalLcu { gamma, coefficient: 0.5 * half, u_plus: build(1.0), u_minus: build(-1.0) })
}
