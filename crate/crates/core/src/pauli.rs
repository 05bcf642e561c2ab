//! Sparse Pauli operators and the Jordan-Wigner image of [`SpatialTensors`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensors::{one_body_adjust, SpatialTensors};

/// Coefficients below this magnitude are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

/// Largest register the bitmask encoding supports.
pub const MAX_QUBITS: usize = 64;

/// Pauli string on `n` qubits as symplectic bitmasks; qubit `q` carries
/// `X` if only bit `q` of `x` is set, `Z` if only `z`, `Y` if both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliWord {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliWord {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS);
        Self { n: n_qubits as u8, x: 0, z: 0 }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Self {
        assert!(n_qubits <= MAX_QUBITS);
        let mask = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        assert!(x & !mask == 0 && z & !mask == 0, "bits beyond register");
        Self { n: n_qubits as u8, x, z }
    }

    /// Single-letter word, `letter` in `XYZ`.
    pub fn single(n_qubits: usize, qubit: usize, letter: char) -> Self {
        let b = 1u64 << qubit;
        match letter {
            'X' => Self::from_masks(n_qubits, b, 0),
            'Y' => Self::from_masks(n_qubits, b, b),
            'Z' => Self::from_masks(n_qubits, 0, b),
            _ => Self::identity(n_qubits),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn letter(&self, q: usize) -> char {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            _ => 'Z',
        }
    }

    fn letter_rank(&self, q: usize) -> u8 {
        match self.letter(q) {
            'I' => 0,
            'X' => 1,
            'Y' => 2,
            _ => 3,
        }
    }

    /// Product `self * other = i^k * word`; returns `(k mod 4, word)`.
    pub fn mul(&self, other: &PauliWord) -> (u8, PauliWord) {
        debug_assert_eq!(self.n, other.n);
        // Y = i X Z; X^x1 Z^z1 X^x2 Z^z2 = (-1)^{|z1 & x2|} X^(x1^x2) Z^(z1^z2).
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = (self.x & self.z).count_ones() + (other.x & other.z).count_ones() + 2 * (self.z & other.x).count_ones()
            + 3 * (x & z).count_ones();
        ((k % 4) as u8, PauliWord { n: self.n, x, z })
    }

    /// Dense `2^n x 2^n` matrix; basis state index bit `q` is qubit `q`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        let y_count = (self.x & self.z).count_ones();
        for col in 0..dim {
            let row = col ^ self.x as usize;
            // Z^z acts first on |col>, then X^x, then overall i^{#Y}.
            let sign = if ((col as u64) & self.z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(row, col)] = i_pow(y_count) * sign;
        }
        m
    }
}

pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `true` iff the words anticommute (odd symplectic product).
pub fn anticommutes(a: &PauliWord, b: &PauliWord) -> Result<bool> {
    if a.n != b.n {
        return Err(Error::Dimension(format!("{} vs {} qubits", a.n, b.n)));
    }
    Ok(((a.x & b.z) ^ (a.z & b.x)).count_ones() % 2 == 1)
}

impl Ord for PauliWord {
    /// Lexicographic over letters `I < X < Y < Z`, qubit 0 first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            let diff = (self.x ^ other.x) | (self.z ^ other.z);
            if diff == 0 {
                return Ordering::Equal;
            }
            let q = diff.trailing_zeros() as usize;
            self.letter_rank(q).cmp(&other.letter_rank(q))
        })
    }
}

impl PartialOrd for PauliWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits() {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::Capability(format!("{n} qubits")));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, c) in s.chars().enumerate() {
            let b = 1u64 << q;
            match c {
                'I' => {}
                'X' => x |= b,
                'Y' => {
                    x |= b;
                    z |= b
                }
                'Z' => z |= b,
                _ => return Err(Error::Parse { line: 0, msg: format!("bad Pauli letter `{c}`") }),
            }
        }
        Ok(PauliWord { n: n as u8, x, z })
    }
}

/// Real-coefficient sum of Pauli words. The identity coefficient is kept
/// apart from the other terms.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliPolynomial {
    n_qubits: usize,
    identity: f64,
    terms: BTreeMap<PauliWord, f64>,
}

impl PauliPolynomial {
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS);
        Self { n_qubits, identity: 0.0, terms: BTreeMap::new() }
    }

    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = (PauliWord, f64)>) -> Self {
        let mut p = Self::new(n_qubits);
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p.prune();
        p
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.identity
    }

    /// Non-identity terms in lexicographic word order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliWord, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &PauliWord) -> f64 {
        if w.is_identity() {
            self.identity
        } else {
            self.terms.get(w).copied().unwrap_or(0.0)
        }
    }

    pub fn add_term(&mut self, w: PauliWord, c: f64) {
        assert_eq!(w.n_qubits(), self.n_qubits);
        if w.is_identity() {
            self.identity += c;
        } else {
            *self.terms.entry(w).or_insert(0.0) += c;
        }
    }

    pub(crate) fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= PRUNE_TOL);
        if self.identity.abs() < PRUNE_TOL {
            self.identity = 0.0;
        }
    }

    pub fn add(&self, other: &PauliPolynomial) -> PauliPolynomial {
        let mut out = self.clone();
        out.identity += other.identity;
        for (w, c) in &other.terms {
            *out.terms.entry(*w).or_insert(0.0) += c;
        }
        out.prune();
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::identity(dim, dim) * Complex64::from(self.identity);
        for (w, c) in &self.terms {
            m += w.to_dense() * Complex64::from(*c);
        }
        m
    }

    /// One term per line, `coefficient letters`, identity first.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if self.identity != 0.0 {
            s.push_str(&format!("{:e} {}\n", self.identity, PauliWord::identity(self.n_qubits)));
        }
        for (w, c) in &self.terms {
            s.push_str(&format!("{c:e} {w}\n"));
        }
        s
    }

    pub fn from_text(n_qubits: usize, text: &str) -> Result<Self> {
        let mut p = Self::new(n_qubits);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (c, w) = line
                .split_once(char::is_whitespace)
                .ok_or(Error::Parse { line: i + 1, msg: "expected `coefficient word`".into() })?;
            let c: f64 = c.parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad coefficient `{c}`") })?;
            let w: PauliWord = w.trim().parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad word `{w}`") })?;
            if w.n_qubits() != n_qubits {
                return Err(Error::Parse { line: i + 1, msg: format!("word has {} qubits, expected {n_qubits}", w.n_qubits()) });
            }
            p.add_term(w, c);
        }
        p.prune();
        Ok(p)
    }
}

/// `sum_k |c_k|` over non-identity words.
pub fn lambda_pauli(p: &PauliPolynomial) -> f64 {
    p.terms.values().map(|c| c.abs()).sum()
}

/// Complex-coefficient sum used while expanding fermionic products.
#[derive(Clone, Debug, Default)]
pub(crate) struct ComplexPauliSum {
    pub terms: HashMap<PauliWord, Complex64>,
}

impl ComplexPauliSum {
    pub fn mul(&self, other: &ComplexPauliSum) -> ComplexPauliSum {
        let mut out: HashMap<PauliWord, Complex64> = HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let (k, w) = wa.mul(wb);
                *out.entry(w).or_default() += ca * cb * i_pow(k as u32);
            }
        }
        ComplexPauliSum { terms: out }
    }

    pub fn accumulate(&mut self, other: &ComplexPauliSum, scale: f64) {
        for (w, c) in &other.terms {
            *self.terms.entry(*w).or_default() += c * scale;
        }
    }
}

/// `a_p^dagger a_q` under Jordan-Wigner with `|1>` = occupied:
/// `a_p = Z_0 .. Z_{p-1} (X_p + i Y_p) / 2`.
pub(crate) fn jw_excitation(n_qubits: usize, p: usize, q: usize) -> ComplexPauliSum {
    let ladder = |site: usize, dagger: bool| {
        let string = (1u64 << site) - 1;
        let xw = PauliWord::from_masks(n_qubits, 1 << site, string);
        let yw = PauliWord::from_masks(n_qubits, 1 << site, string | (1 << site));
        let ysign = if dagger { -0.5 } else { 0.5 };
        let mut terms = HashMap::new();
        terms.insert(xw, Complex64::new(0.5, 0.0));
        terms.insert(yw, Complex64::new(0.0, ysign));
        ComplexPauliSum { terms }
    };
    ladder(p, true).mul(&ladder(q, false))
}

/// Jordan-Wigner image of the Hamiltonian, spin orbital `2 i + sigma` on qubit `2 i + sigma`.
pub fn jordan_wigner(t: &SpatialTensors) -> PauliPolynomial {
    let n = t.n_orb();
    let nq = 2 * n;
    assert!(nq <= MAX_QUBITS);
    let h = t.obt();
    let g = t.tbt();

    // Spin-summed spatial excitations E_ij = sum_sigma a^dag_{i sigma} a_{j sigma}.
    let mut e: Vec<ComplexPauliSum> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut s = ComplexPauliSum::default();
            for sigma in 0..2 {
                s.accumulate(&jw_excitation(nq, 2 * i + sigma, 2 * j + sigma), 1.0);
            }
            s.terms.retain(|_, c| c.norm() > 0.0);
            e.push(s);
        }
    }

    let mut acc = ComplexPauliSum::default();
    acc.terms.insert(PauliWord::identity(nq), Complex64::new(t.e0(), 0.0));
    for i in 0..n {
        for j in 0..n {
            if h[(i, j)] != 0.0 {
                acc.accumulate(&e[i * n + j], h[(i, j)]);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = g[(i, j, k, l)];
                    if v != 0.0 {
                        acc.accumulate(&e[i * n + j].mul(&e[k * n + l]), v);
                    }
                }
            }
        }
    }

    let scale = t.max_abs().max(1.0);
    let mut out = PauliPolynomial::new(nq);
    for (w, c) in acc.terms {
        debug_assert!(c.im.abs() <= 1e-10 * scale, "non-Hermitian JW image: {w} {c}");
        out.add_term(w, c.re);
    }
    out.prune();
    out
}

/// Pauli 1-norm straight from the integrals (Majorana form):
///
/// `sum_ij |h_ij + 2 sum_k g_ijkk| + sum_{i>k, j>l} |g_ijkl - g_ilkj| + 1/2 sum_ijkl |g_ijkl|`.
pub fn lambda_pauli_closed_form(t: &SpatialTensors) -> f64 {
    let n = t.n_orb();
    let g = t.tbt();
    let one: f64 = one_body_adjust(t).iter().map(|v| v.abs()).sum();
    let mut same = 0.0;
    for i in 0..n {
        for k in 0..i {
            for j in 0..n {
                for l in 0..j {
                    same += (g[(i, j, k, l)] - g[(i, l, k, j)]).abs();
                }
            }
        }
    }
    let opposite: f64 = 0.5 * g.as_slice().iter().map(|v| v.abs()).sum::<f64>();
    one + same + opposite
}
