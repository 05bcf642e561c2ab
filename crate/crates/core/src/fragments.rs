//! Orbital rotations, double factorization, greedy CSA and the fragment
//! 1-norms.
//!
//! A fragment is `U (sum_{ij} lam_ij sum_{s s'} n_{i s} n_{j s'}) U^dagger`;
//! in chemist-tensor form `F_pqrs = sum_ab lam_ab u_pa u_qa u_rb u_sb`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{minimize, CostFunction, OptimizerConfig};
use crate::tensors::{one_body_adjust, sym_eigh, SpatialTensors, Tensor4};

/// Number of generator amplitudes `theta_ij`, `i > j`.
pub fn n_generators(n: usize) -> usize {
    n * (n.saturating_sub(1)) / 2
}

/// Antisymmetric generator with `A_ij = theta` for `i > j`, amplitudes
/// ordered `(1,0), (2,0), (2,1), (3,0), ...`.
pub fn generator_matrix(n: usize, theta: &[f64]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut t = 0;
    for i in 0..n {
        for j in 0..i {
            a[(i, j)] = theta[t];
            a[(j, i)] = -theta[t];
            t += 1;
        }
    }
    a
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalRotation {
    /// Generator amplitudes; absent for rotations taken from an eigenbasis.
    pub theta: Option<Vec<f64>>,
    pub u: DMatrix<f64>,
}

pub fn make_rotation(n: usize, theta: &[f64]) -> Result<OrbitalRotation> {
    if theta.len() != n_generators(n) {
        return Err(Error::Dimension(format!("{n} orbitals need {} amplitudes, got {}", n_generators(n), theta.len())));
    }
    let u = generator_matrix(n, theta).exp();
    Ok(OrbitalRotation { theta: Some(theta.to_vec()), u })
}

impl OrbitalRotation {
    pub fn identity(n: usize) -> Self {
        Self { theta: Some(vec![0.0; n_generators(n)]), u: DMatrix::identity(n, n) }
    }

    /// Wrap an orthogonal matrix. Columns may be negated to make `det = +1`;
    /// fragments only see products `u_pa u_qa`, so this changes nothing.
    pub fn from_matrix(mut u: DMatrix<f64>) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n {
            return Err(Error::Dimension("rotation must be square".into()));
        }
        let defect = (u.transpose() * &u - DMatrix::<f64>::identity(n, n)).amax();
        if defect > 1e-10 {
            return Err(Error::Contract(format!("matrix not orthogonal (|u^T u - 1| = {defect:e})")));
        }
        if n > 0 && u.determinant() < 0.0 {
            u.column_mut(0).neg_mut();
        }
        Ok(Self { theta: None, u })
    }

    pub fn n_orb(&self) -> usize {
        self.u.nrows()
    }
}

/// `h' = u h u^T`, `g'` contracted with `u` on all four indices.
pub fn rotate_tensors(r: &OrbitalRotation, t: &SpatialTensors) -> SpatialTensors {
    let u = &r.u;
    let h = u * t.obt() * u.transpose();
    let h = (&h + h.transpose()) * 0.5;
    SpatialTensors::from_parts_trusted(t.e0(), h, t.tbt().rotate(u))
}

/// `P_{(pq), a} = u_pa u_qa`
pub(crate) fn pair_products(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    DMatrix::from_fn(n * n, n, |pq, a| u[(pq / n, a)] * u[(pq % n, a)])
}

/// Chemist tensor of a Cartan polynomial `lam` in the rotated orbital basis.
pub fn cartan_tensor(u: &DMatrix<f64>, lam: &DMatrix<f64>) -> Tensor4 {
    Tensor4::from_supermatrix(u.nrows(), &cartan_supermatrix(u, lam))
}

/// `P lam P^T`, symmetrized so that `F_pqrs = F_rspq` holds exactly.
pub(crate) fn cartan_supermatrix(u: &DMatrix<f64>, lam: &DMatrix<f64>) -> DMatrix<f64> {
    let p = pair_products(u);
    let f = &p * lam * p.transpose();
    (&f + f.transpose()) * 0.5
}

pub trait Fragment {
    fn rotation(&self) -> &OrbitalRotation;
    /// Symmetric coefficient matrix of `n_i n_j` products.
    fn lambda_matrix(&self) -> DMatrix<f64>;

    fn tensor(&self) -> Tensor4 {
        cartan_tensor(&self.rotation().u, &self.lambda_matrix())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfFragment {
    pub rotation: OrbitalRotation,
    pub eps: Vec<f64>,
    pub sign: f64,
}

impl Fragment for DfFragment {
    fn rotation(&self) -> &OrbitalRotation {
        &self.rotation
    }

    fn lambda_matrix(&self) -> DMatrix<f64> {
        let n = self.eps.len();
        DMatrix::from_fn(n, n, |a, b| self.sign * self.eps[a] * self.eps[b])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsaFragment {
    pub rotation: OrbitalRotation,
    pub lam: DMatrix<f64>,
    /// One-body occupation coefficients, only for the interaction-picture fragment.
    pub mu: Option<Vec<f64>>,
}

impl Fragment for CsaFragment {
    fn rotation(&self) -> &OrbitalRotation {
        &self.rotation
    }

    fn lambda_matrix(&self) -> DMatrix<f64> {
        self.lam.clone()
    }
}

/// Eigen-decompose the `(ij),(kl)` supermatrix and split each retained
/// eigenvector into a rotation and `eps = sqrt(|w|) d`.
pub fn double_factorize(t: &SpatialTensors, tol: f64) -> Result<Vec<DfFragment>> {
    if !(tol > 0.0) {
        return Err(Error::Contract("factorization tolerance must be positive".into()));
    }
    let n = t.n_orb();
    let g = t.tbt().to_supermatrix();
    let asym = (&g - g.transpose()).amax();
    if asym > 1e-12 * g.amax().max(1.0) {
        return Err(Error::Symmetry(format!("supermatrix asymmetric by {asym:e}")));
    }
    let (w, v) = sym_eigh(&g);
    let mut order: Vec<usize> = (0..w.len()).filter(|&m| w[m].abs() > tol).collect();
    order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(order.len());
    for m in order {
        let l = DMatrix::from_fn(n, n, |i, j| v[(i * n + j, m)]);
        let l = (&l + l.transpose()) * 0.5;
        let (d, u) = sym_eigh(&l);
        let scale = w[m].abs().sqrt();
        out.push(DfFragment {
            rotation: OrbitalRotation::from_matrix(u)?,
            eps: d.iter().map(|x| x * scale).collect(),
            sign: w[m].signum(),
        });
    }
    Ok(out)
}

pub fn fragments_tensor<F: Fragment>(n: usize, frags: &[F]) -> Tensor4 {
    let mut acc = Tensor4::zeros(n);
    for f in frags {
        acc = &acc + &f.tensor();
    }
    acc
}

/// Packs `(theta, lam lower triangle incl. diagonal)`.
pub(crate) fn n_lambda(n: usize) -> usize {
    n * (n + 1) / 2
}

pub(crate) fn unpack_lambda(n: usize, x: &[f64]) -> DMatrix<f64> {
    let mut lam = DMatrix::zeros(n, n);
    let mut c = 0;
    for i in 0..n {
        for j in 0..=i {
            lam[(i, j)] = x[c];
            lam[(j, i)] = x[c];
            c += 1;
        }
    }
    lam
}

/// Gradient of `<G, exp(A)>` with respect to the generator amplitudes, given
/// `G = d cost / d u` at `u = exp(A)`.
pub(crate) fn generator_gradient(a: &DMatrix<f64>, gu: &DMatrix<f64>, out: &mut [f64]) {
    let n = a.nrows();
    // Adjoint Frechet derivative: top-right block of exp([[A^T, G], [0, A^T]]).
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    let at = a.transpose();
    big.view_mut((0, 0), (n, n)).copy_from(&at);
    big.view_mut((n, n), (n, n)).copy_from(&at);
    big.view_mut((0, n), (n, n)).copy_from(gu);
    let e = big.exp();
    let m = e.view((0, n), (n, n));
    let mut t = 0;
    for i in 0..n {
        for j in 0..i {
            out[t] = m[(i, j)] - m[(j, i)];
            t += 1;
        }
    }
}

/// Squared 2-norm distance between a residual tensor and one Cartan fragment.
pub struct CsaFitCost<'a> {
    n: usize,
    target: &'a DMatrix<f64>,
}

impl<'a> CsaFitCost<'a> {
    /// `target` is the `(ij),(kl)` supermatrix; it must carry the 8-fold symmetry.
    pub fn new(n: usize, target: &'a DMatrix<f64>) -> Self {
        Self { n, target }
    }

    pub fn unpack(&self, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let k = n_generators(self.n);
        (generator_matrix(self.n, &x[..k]), unpack_lambda(self.n, &x[k..]))
    }
}

impl CostFunction for CsaFitCost<'_> {
    fn dim(&self) -> usize {
        n_generators(self.n) + n_lambda(self.n)
    }

    fn cost(&self, x: &[f64]) -> f64 {
        let (a, lam) = self.unpack(x);
        let p = pair_products(&a.exp());
        let d = self.target - &p * lam * p.transpose();
        d.norm_squared()
    }

    fn cost_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.n;
        let k = n_generators(n);
        let (a, lam) = self.unpack(x);
        let u = a.exp();
        let p = pair_products(&u);
        let pl = &p * &lam;
        let d = self.target - &pl * p.transpose();
        // d/d lam_ab of |D|^2 is -2 (P^T D P)_ab, doubled off the diagonal.
        let dp = &d * &p;
        let xm = p.transpose() * &dp;
        let mut c = k;
        for i in 0..n {
            for j in 0..=i {
                grad[c] = if i == j { -2.0 * xm[(i, i)] } else { -2.0 * (xm[(i, j)] + xm[(j, i)]) };
                c += 1;
            }
        }
        // d/du_pc = -8 sum_q u_qc [D P lam]_{(pq), c}
        let dpl = &d * &pl;
        let gu = DMatrix::from_fn(n, n, |pp, cc| -8.0 * (0..n).map(|q| u[(q, cc)] * dpl[(pp * n + q, cc)]).sum::<f64>());
        generator_gradient(&a, &gu, &mut grad[..k]);
        d.norm_squared()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsaConfig {
    /// Stop once the sum of squared residual entries is at most this.
    pub stop_tol: f64,
    pub max_frags: usize,
    pub seed: u64,
    /// Random restarts per fragment when the zero start stalls.
    pub restarts: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for CsaConfig {
    fn default() -> Self {
        Self { stop_tol: 1e-6, max_frags: 500, seed: 0, restarts: 3, optimizer: OptimizerConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsaDecomposition {
    pub fragments: Vec<CsaFragment>,
    /// Sum of squared residual entries after each extraction.
    pub residual_history: Vec<f64>,
}

impl CsaDecomposition {
    pub fn residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

/// Greedy CSA: repeatedly fit one fragment to the residual and subtract it.
/// Each fit starts at zero; if that leaves the residual practically unchanged,
/// seeded random starts (uniform in `[-0.01, 0.01]`) are tried.
pub fn csa_greedy(t: &SpatialTensors, cfg: &CsaConfig) -> Result<CsaDecomposition> {
    if !(cfg.stop_tol > 0.0) {
        return Err(Error::Contract("CSA stop tolerance must be positive".into()));
    }
    let n = t.n_orb();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut residual = t.tbt().to_supermatrix();
    let mut current = residual.norm_squared();
    let mut fragments = Vec::new();
    let mut history = Vec::new();
    while current > cfg.stop_tol && fragments.len() < cfg.max_frags {
        let cost = CsaFitCost::new(n, &residual);
        let dim = cost.dim();
        let mut best = minimize(&cost, &vec![0.0; dim], &cfg.optimizer)?;
        let mut attempt = 0;
        while best.value > 0.999 * current && attempt < cfg.restarts {
            let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.01..=0.01)).collect();
            let m = minimize(&cost, &x0, &cfg.optimizer)?;
            if m.value < best.value {
                best = m;
            }
            attempt += 1;
        }
        if best.value >= current * (1.0 - 1e-12) {
            return Err(Error::Stagnation { residual: current });
        }
        let (a, lam) = cost.unpack(&best.x);
        let u = a.exp();
        residual -= cartan_supermatrix(&u, &lam);
        current = residual.norm_squared();
        history.push(current);
        let k = n_generators(n);
        fragments.push(CsaFragment { rotation: OrbitalRotation { theta: Some(best.x[..k].to_vec()), u }, lam, mu: None });
    }
    Ok(CsaDecomposition { fragments, residual_history: history })
}

/// Eigenvalues of the one-body operator left after mapping every
/// occupation product to reflections.
pub fn one_body_spectrum(t: &SpatialTensors) -> Vec<f64> {
    sym_eigh(&one_body_adjust(t)).0.iter().copied().collect()
}

/// `lam_1 = sum |mu_i|`, `lam_2 = sum_m (sum_ij |lam_ij| - 1/2 sum_i |lam_ii|)`.
pub fn lambda_fermionic<F: Fragment>(mu: &[f64], frags: &[F]) -> (f64, f64) {
    let l1 = mu.iter().map(|m| m.abs()).sum();
    let l2 = frags.iter().map(|f| fermionic_fragment_norm(&f.lambda_matrix())).sum();
    (l1, l2)
}

pub fn fermionic_fragment_norm(lam: &DMatrix<f64>) -> f64 {
    let all: f64 = lam.iter().map(|v| v.abs()).sum();
    let diag: f64 = lam.diagonal().iter().map(|v| v.abs()).sum();
    all - 0.5 * diag
}

/// Largest orbital count accepted by the `3^N` enumerations.
pub const MAX_ENUM_ORBITALS: usize = 16;

/// Half-range of `q(R) = 1/4 (R^T lam R - 2 tr lam)` over `R in {-2, 0, 2}^N`:
/// the spectral half-width of the reflection-pair polynomial of one fragment.
pub fn lambda_sqrt_matrix(lam: &DMatrix<f64>) -> Result<f64> {
    let n = lam.nrows();
    if n > MAX_ENUM_ORBITALS {
        return Err(Error::Capability(format!("{n} orbitals exceed the 3^N enumeration limit of {MAX_ENUM_ORBITALS}")));
    }
    let tr = lam.trace();
    let (lo, hi) = enumerate_range(n, |r| {
        let mut q = 0.0;
        for i in 0..n {
            if r[i] != 0.0 {
                for j in 0..n {
                    q += lam[(i, j)] * r[i] * r[j];
                }
            }
        }
        0.25 * (q - 2.0 * tr)
    }, [-2.0, 0.0, 2.0]);
    Ok(0.5 * (hi - lo))
}

pub fn lambda_sqrt_fragment<F: Fragment>(f: &F) -> Result<f64> {
    lambda_sqrt_matrix(&f.lambda_matrix())
}

/// Literal half-range of the full fragment polynomial
/// `sum_ij lam_ij N_i N_j` over spatial occupations `N_i in {0, 1, 2}`.
pub fn lambda_sqrt_literal(lam: &DMatrix<f64>) -> Result<f64> {
    let n = lam.nrows();
    if n > MAX_ENUM_ORBITALS {
        return Err(Error::Capability(format!("{n} orbitals exceed the 3^N enumeration limit of {MAX_ENUM_ORBITALS}")));
    }
    let (lo, hi) = enumerate_range(n, |occ| {
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += lam[(i, j)] * occ[i] * occ[j];
            }
        }
        q
    }, [0.0, 1.0, 2.0]);
    Ok(0.5 * (hi - lo))
}

/// Min and max of `f` over `levels^n`, split over the leading digit in parallel.
fn enumerate_range(n: usize, f: impl Fn(&[f64]) -> f64 + Sync, levels: [f64; 3]) -> (f64, f64) {
    if n == 0 {
        let v = f(&[]);
        return (v, v);
    }
    let total = 3usize.pow(n as u32);
    let block = 3usize.pow(n.saturating_sub(6) as u32).max(1);
    let chunks = total.div_ceil(block);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = vec![0.0; n];
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for idx in c * block..((c + 1) * block).min(total) {
                let mut x = idx;
                for slot in r.iter_mut() {
                    *slot = levels[x % 3];
                    x /= 3;
                }
                let v = f(&r);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (lo, hi)
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)))
}

/// `1/2 (sum_i |eps_i|)^2`
pub fn lambda_complete_square(f: &DfFragment) -> f64 {
    let s: f64 = f.eps.iter().map(|e| e.abs()).sum();
    0.5 * s * s
}

/// Reflection-pair terms of one fragment above `cutoff`: `i < j` pairs carry
/// four spin combinations, `i = j` one opposite-spin pair.
pub fn reflection_pair_count(lam: &DMatrix<f64>, cutoff: f64) -> usize {
    let n = lam.nrows();
    let mut count = 0;
    for i in 0..n {
        if lam[(i, i)].abs() > cutoff {
            count += 1;
        }
        for j in 0..i {
            if lam[(i, j)].abs() > cutoff {
                count += 4;
            }
        }
    }
    count
}
