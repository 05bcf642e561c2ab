//! Second-quantized molecular Hamiltonian in chemist notation.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = e0 + sum_{sigma} sum_{ij} h_ij E^{i sigma}_{j sigma}
//!        + sum_{sigma sigma'} sum_{ijkl} g_ijkl E^{i sigma}_{j sigma} E^{k sigma'}_{l sigma'}
//! ```
//!
//! over `N` spatial orbitals, with `E^p_q = a_p^dagger a_q`. Spin orbitals are
//! interleaved: spatial orbital `i` with spin `sigma` is spin orbital `2 i + sigma`.

use std::ops::{Add, Index, IndexMut, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when validating tensor symmetries.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense real 4-index tensor of side `n`, stored row-major in `(i, j, k, l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for n = {n}, got {}",
                n * n * n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        t[(i, j, k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm (square root of the sum of squares).
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Reshape to the `n^2 x n^2` supermatrix `G[(ij), (kl)]`.
    pub fn to_supermatrix(&self) -> DMatrix<f64> {
        let m = self.n * self.n;
        DMatrix::from_row_slice(m, m, &self.data)
    }

    pub fn from_supermatrix(n: usize, g: &DMatrix<f64>) -> Self {
        let m = n * n;
        assert_eq!(g.shape(), (m, m));
        let mut data = Vec::with_capacity(m * m);
        for r in 0..m {
            for c in 0..m {
                data.push(g[(r, c)]);
            }
        }
        Self { n, data }
    }

    /// Largest deviation from the 8-fold real-orbital permutational symmetry.
    pub fn eightfold_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self[(i, j, k, l)];
                        worst = worst
                            .max((v - self[(j, i, k, l)]).abs())
                            .max((v - self[(i, j, l, k)]).abs())
                            .max((v - self[(k, l, i, j)]).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest deviation from `t_ijkl = t_klij`.
    pub fn pair_swap_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self[(i, j, k, l)] - self[(k, l, i, j)]).abs());
                    }
                }
            }
        }
        worst
    }

    /// Contract every index with `u`: `t'_pqrs = sum u_pi u_qj u_rk u_sl t_ijkl`.
    pub fn rotate(&self, u: &DMatrix<f64>) -> Self {
        let n = self.n;
        assert_eq!(u.shape(), (n, n));
        // Four single-index transforms, each O(n^5).
        let mut cur = self.data.clone();
        let mut next = vec![0.0; cur.len()];
        let n2 = n * n;
        let n3 = n2 * n;
        for _ in 0..4 {
            // next[p, a, b, c] = sum_i u[p, i] cur[a, b, c, i]  (cyclic shift of axes)
            next.iter_mut().for_each(|v| *v = 0.0);
            for a in 0..n3 {
                let src = &cur[a * n..(a + 1) * n];
                for p in 0..n {
                    let mut acc = 0.0;
                    for (i, s) in src.iter().enumerate() {
                        acc += u[(p, i)] * s;
                    }
                    next[p * n3 + a] = acc;
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Self { n, data: cur }
    }
}

impl Index<(usize, usize, usize, usize)> for Tensor4 {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i, j, k, l)]
    }
}

impl IndexMut<(usize, usize, usize, usize)> for Tensor4 {
    #[inline]
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut f64 {
        let o = self.offset(i, j, k, l);
        &mut self.data[o]
    }
}

impl Add for &Tensor4 {
    type Output = Tensor4;
    fn add(self, rhs: &Tensor4) -> Tensor4 {
        assert_eq!(self.n, rhs.n);
        Tensor4 { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Tensor4 {
    type Output = Tensor4;
    fn sub(self, rhs: &Tensor4) -> Tensor4 {
        assert_eq!(self.n, rhs.n);
        Tensor4 { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// Constant, one-electron matrix and two-electron tensor over spatial orbitals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialTensors {
    e0: f64,
    obt: DMatrix<f64>,
    tbt: Tensor4,
}

impl SpatialTensors {
    /// Validates symmetry; inputs that violate it are rejected, never symmetrized.
    pub fn new(e0: f64, obt: DMatrix<f64>, tbt: Tensor4) -> Result<Self> {
        let n = tbt.dim();
        if obt.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "one-electron matrix is {}x{}, two-electron tensor has side {n}",
                obt.nrows(),
                obt.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::Dimension("zero orbitals".into()));
        }
        let hmax = obt.amax();
        let hdef = (&obt - obt.transpose()).amax();
        if hdef > SYMMETRY_TOL * hmax {
            return Err(Error::Symmetry(format!("one-electron matrix asymmetric by {hdef:e}")));
        }
        let gdef = tbt.eightfold_defect();
        if gdef > SYMMETRY_TOL * tbt.max_abs() {
            return Err(Error::Symmetry(format!("two-electron tensor breaks 8-fold symmetry by {gdef:e}")));
        }
        if !e0.is_finite() || obt.iter().any(|v| !v.is_finite()) || tbt.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("non-finite tensor entry".into()));
        }
        Ok(Self { e0, obt, tbt })
    }

    pub fn zeros(n: usize) -> Self {
        Self { e0: 0.0, obt: DMatrix::zeros(n, n), tbt: Tensor4::zeros(n) }
    }

    #[inline]
    pub fn n_orb(&self) -> usize {
        self.tbt.dim()
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn obt(&self) -> &DMatrix<f64> {
        &self.obt
    }

    pub fn tbt(&self) -> &Tensor4 {
        &self.tbt
    }

    pub fn with_e0(&self, e0: f64) -> Self {
        Self { e0, ..self.clone() }
    }

    /// Rebuild from parts produced by exact arithmetic on already-valid tensors.
    pub(crate) fn from_parts_trusted(e0: f64, obt: DMatrix<f64>, tbt: Tensor4) -> Self {
        debug_assert_eq!(obt.nrows(), tbt.dim());
        Self { e0, obt, tbt }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts_trusted(self.e0 * s, &self.obt * s, self.tbt.scale(s))
    }

    pub fn max_abs(&self) -> f64 {
        self.obt.amax().max(self.tbt.max_abs())
    }
}

impl Add for &SpatialTensors {
    type Output = SpatialTensors;
    fn add(self, rhs: &SpatialTensors) -> SpatialTensors {
        SpatialTensors::from_parts_trusted(self.e0 + rhs.e0, &self.obt + &rhs.obt, &self.tbt + &rhs.tbt)
    }
}

impl Sub for &SpatialTensors {
    type Output = SpatialTensors;
    fn sub(self, rhs: &SpatialTensors) -> SpatialTensors {
        SpatialTensors::from_parts_trusted(self.e0 - rhs.e0, &self.obt - &rhs.obt, &self.tbt - &rhs.tbt)
    }
}

/// `h_ij + 2 sum_k g_ijkk`: the one-body operator left over once every
/// occupation-number product of the two-body part is mapped to reflections.
pub fn one_body_adjust(t: &SpatialTensors) -> DMatrix<f64> {
    let n = t.n_orb();
    let g = t.tbt();
    DMatrix::from_fn(n, n, |i, j| t.obt()[(i, j)] + 2.0 * (0..n).map(|k| g[(i, j, k, k)]).sum::<f64>())
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix.
pub fn sym_eigh(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&a| eig.eigenvalues[a]));
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &a) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(a));
    }
    (vals, vecs)
}

/// Two-electron operator with separate same-spin and opposite-spin blocks:
///
/// ```text
/// sum_sigma sum same_ijkl E^{i s}_{j s} E^{k s}_{l s} + sum_{s != s'} sum opposite_ijkl E^{i s}_{j s} E^{k s'}_{l s'}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinTensor2e {
    same: Tensor4,
    opposite: Tensor4,
}

impl SpinTensor2e {
    pub fn new(same: Tensor4, opposite: Tensor4) -> Result<Self> {
        if same.dim() != opposite.dim() {
            return Err(Error::Dimension("spin blocks differ in size".into()));
        }
        for (name, b) in [("same-spin", &same), ("opposite-spin", &opposite)] {
            let d = b.pair_swap_defect();
            if d > SYMMETRY_TOL * b.max_abs() {
                return Err(Error::Symmetry(format!("{name} block breaks g_ijkl = g_klij by {d:e}")));
            }
        }
        Ok(Self { same, opposite })
    }

    pub fn n_orb(&self) -> usize {
        self.same.dim()
    }

    pub fn same(&self) -> &Tensor4 {
        &self.same
    }

    pub fn opposite(&self) -> &Tensor4 {
        &self.opposite
    }

    /// Whole Hamiltonian (minus `e0`) as one two-electron operator: the
    /// one-body part is diagonalized and absorbed into the same-spin block.
    pub fn from_spatial(t: &SpatialTensors) -> Self {
        let (mu, u) = sym_eigh(t.obt());
        let absorbed = absorb_tensor(mu.as_slice(), &u);
        Self { same: &absorbed + t.tbt(), opposite: t.tbt().clone() }
    }
}

fn absorb_tensor(mu: &[f64], u: &DMatrix<f64>) -> Tensor4 {
    let n = mu.len();
    Tensor4::from_fn(n, |i, j, k, l| {
        (0..n).map(|m| mu[m] * ((u[(i, m)] * u[(j, m)]) * (u[(k, m)] * u[(l, m)]))).sum()
    })
}

/// Rewrite `U (sum_{i sigma} mu_i n_{i sigma}) U^dagger` as a same-spin
/// two-electron tensor using `n^2 = n`.
pub fn absorb_one_body(mu: &[f64], u: &DMatrix<f64>) -> Result<SpinTensor2e> {
    let n = mu.len();
    if u.shape() != (n, n) {
        return Err(Error::Dimension(format!("rotation is {}x{}, expected {n}x{n}", u.nrows(), u.ncols())));
    }
    let defect = (u.transpose() * u - DMatrix::<f64>::identity(n, n)).amax();
    if defect > 1e-10 {
        return Err(Error::Contract(format!("rotation not orthogonal (|u^T u - 1| = {defect:e})")));
    }
    Ok(SpinTensor2e { same: absorb_tensor(mu, u), opposite: Tensor4::zeros(n) })
}
