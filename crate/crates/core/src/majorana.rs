//! Majorana form of two-electron operators and the analytic separation of the
//! one-body content hidden in a two-electron tensor.
//!
//! Majoranas are `gamma_{p,0} = a_p + a_p^dagger` and
//! `gamma_{p,1} = -i (a_p - a_p^dagger)` for spin orbital `p = 2 i + sigma`.
//! A monomial is a strictly increasing list of codes `2 p + flavor`; its stored
//! coefficient multiplies `i^(deg/2)` times the ordered product, which keeps
//! every coefficient of a Hermitian operator real.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::pauli::{i_pow, PauliPolynomial, PauliWord, PRUNE_TOL};
use crate::tensors::{SpatialTensors, SpinTensor2e};

pub type Monomial = Vec<u16>;

#[inline]
pub fn code(mode: usize, flavor: usize) -> u16 {
    (2 * mode + flavor) as u16
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajoranaPolynomial {
    n_modes: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl MajoranaPolynomial {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes, terms: BTreeMap::new() }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &[u16]) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Add `value * gamma_{codes[0]} gamma_{codes[1]} ...` (no `i` prefactor,
    /// arbitrary order, distinct codes). The result must be Hermitian.
    fn add_raw_product(&mut self, codes: &[u16], value: Complex64) {
        let (sign, sorted) = sort_with_sign(codes);
        let deg = sorted.len() as u32;
        let c = value * sign * i_pow((4 - (deg / 2) % 4) % 4);
        debug_assert!(c.im.abs() <= 1e-12 * c.norm().max(1.0), "non-Hermitian monomial {sorted:?}: {c}");
        *self.terms.entry(sorted).or_insert(0.0) += c.re;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= PRUNE_TOL);
    }

    /// Sum of `|c|` over all stored monomials.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Jordan-Wigner translation, monomial by monomial.
    pub fn to_pauli(&self) -> PauliPolynomial {
        let nq = self.n_modes;
        let mut out = PauliPolynomial::new(nq);
        for (mono, c) in &self.terms {
            let mut word = PauliWord::identity(nq);
            let mut k: u32 = (mono.len() as u32 / 2) % 4;
            for &g in mono {
                let (mode, flavor) = ((g / 2) as usize, (g % 2) as usize);
                let string = (1u64 << mode) - 1;
                let z = if flavor == 0 { string } else { string | (1 << mode) };
                let (dk, w) = word.mul(&PauliWord::from_masks(nq, 1 << mode, z));
                k += dk as u32;
                word = w;
            }
            let phase = i_pow(k);
            debug_assert!(phase.im == 0.0, "Majorana monomial mapped to anti-Hermitian word");
            out.add_term(word, phase.re * c);
        }
        out.prune();
        out
    }
}

/// Insertion sort counting transpositions; equal adjacent codes are not expected.
fn sort_with_sign(codes: &[u16]) -> (f64, Monomial) {
    let mut v = codes.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (sign, v)
}

/// Product of Majorana codes reduced with `gamma^2 = 1` and anticommutation.
fn reduce_product(codes: &[u16]) -> (f64, Monomial) {
    let mut v = codes.to_vec();
    let mut sign = 1.0;
    // Bubble sort; cancel equal neighbours as they meet.
    let mut changed = true;
    while changed {
        changed = false;
        let mut i = 0;
        while i + 1 < v.len() {
            if v[i] > v[i + 1] {
                v.swap(i, i + 1);
                sign = -sign;
                changed = true;
            } else if v[i] == v[i + 1] {
                v.drain(i..i + 2);
                changed = true;
                continue;
            }
            i += 1;
        }
    }
    (sign, v)
}

/// The three pieces of a Hamiltonian in Majorana form.
#[derive(Clone, Debug, PartialEq)]
pub struct MajoranaSplit {
    pub constant: f64,
    /// `one_body[(p, q)]` multiplies `i gamma_{p,0} gamma_{q,1}` (spin-orbital indices).
    pub one_body: DMatrix<f64>,
    /// Degree-4 monomials.
    pub two_body: MajoranaPolynomial,
}

impl MajoranaSplit {
    /// Reassemble all degrees into one polynomial (constant excluded).
    pub fn to_polynomial(&self) -> MajoranaPolynomial {
        let mut p = self.two_body.clone();
        let ns = self.one_body.nrows();
        for a in 0..ns {
            for b in 0..ns {
                let v = self.one_body[(a, b)];
                if v != 0.0 {
                    p.add_raw_product(&[code(a, 0), code(b, 1)], Complex64::new(0.0, v));
                }
            }
        }
        p.prune();
        p
    }

    pub fn to_pauli(&self) -> PauliPolynomial {
        let mut p = self.to_polynomial().to_pauli();
        p.add_term(PauliWord::identity(self.one_body.nrows()), self.constant);
        p
    }
}

/// Closed-form separation for spin-symmetric tensors (same `g` in every spin
/// block, one-body `h`); `e0` is not included in the constant.
pub fn majorana_separate(t: &SpatialTensors) -> MajoranaSplit {
    let n = t.n_orb();
    let ns = 2 * n;
    let h = t.obt();
    let g = t.tbt();

    let mut constant = 0.0;
    for i in 0..n {
        constant += h[(i, i)];
        for j in 0..n {
            constant += 0.5 * g[(i, j, j, i)] + g[(i, i, j, j)];
        }
    }

    let mut one_body = DMatrix::zeros(ns, ns);
    for i in 0..n {
        for j in 0..n {
            let v = 0.5 * (h[(i, j)] + 2.0 * (0..n).map(|k| g[(i, j, k, k)]).sum::<f64>());
            for s in 0..2 {
                one_body[(2 * i + s, 2 * j + s)] = v;
            }
        }
    }

    let mut two_body = MajoranaPolynomial::new(ns);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = g[(i, j, k, l)];
                    if v != 0.0 {
                        for (s, sp) in [(0, 1), (1, 0)] {
                            let p = [code(2 * i + s, 0), code(2 * j + s, 1), code(2 * k + sp, 0), code(2 * l + sp, 1)];
                            two_body.add_raw_product(&p, Complex64::from(-0.25 * v));
                        }
                    }
                    if i > k && l > j {
                        let d = g[(i, j, k, l)] - g[(i, l, k, j)];
                        if d != 0.0 {
                            for s in 0..2 {
                                let p = [code(2 * i + s, 0), code(2 * j + s, 1), code(2 * k + s, 0), code(2 * l + s, 1)];
                                two_body.add_raw_product(&p, Complex64::from(-0.5 * d));
                            }
                        }
                    }
                }
            }
        }
    }
    two_body.prune();
    MajoranaSplit { constant, one_body, two_body }
}

/// Majorana expansion by direct operator algebra, for any spin-blocked operator
/// `one (spin-diagonal) + same + opposite`.
pub fn majorana_expand(one: Option<&DMatrix<f64>>, two: &SpinTensor2e) -> MajoranaSplit {
    let n = two.n_orb();
    let ns = 2 * n;
    // E^p_q = 1/4 (g_p0 g_q0 + g_p1 g_q1 + i g_p0 g_q1 - i g_p1 g_q0)
    let excitation = |p: usize, q: usize| -> [(Complex64, [u16; 2]); 4] {
        [
            (Complex64::new(0.25, 0.0), [code(p, 0), code(q, 0)]),
            (Complex64::new(0.25, 0.0), [code(p, 1), code(q, 1)]),
            (Complex64::new(0.0, 0.25), [code(p, 0), code(q, 1)]),
            (Complex64::new(0.0, -0.25), [code(p, 1), code(q, 0)]),
        ]
    };
    let mut raw: HashMap<Monomial, Complex64> = HashMap::new();
    let mut push = |codes: &[u16], c: Complex64| {
        let (sign, m) = reduce_product(codes);
        *raw.entry(m).or_default() += c * sign;
    };
    if let Some(h) = one {
        for i in 0..n {
            for j in 0..n {
                let v = h[(i, j)];
                if v == 0.0 {
                    continue;
                }
                for s in 0..2 {
                    for (c, codes) in excitation(2 * i + s, 2 * j + s) {
                        push(&codes, c * v);
                    }
                }
            }
        }
    }
    for (block, spins) in [(two.same(), [(0, 0), (1, 1)]), (two.opposite(), [(0, 1), (1, 0)])] {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = block[(i, j, k, l)];
                        if v == 0.0 {
                            continue;
                        }
                        for (s, sp) in spins {
                            let left = excitation(2 * i + s, 2 * j + s);
                            let right = excitation(2 * k + sp, 2 * l + sp);
                            for (ca, a) in &left {
                                for (cb, b) in &right {
                                    push(&[a[0], a[1], b[0], b[1]], ca * cb * v);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let mut constant = 0.0;
    let mut one_body = DMatrix::zeros(ns, ns);
    let mut two_body = MajoranaPolynomial::new(ns);
    for (m, c) in raw {
        match m.len() {
            0 => constant += c.re,
            2 => {
                // c gamma_a gamma_b = i x gamma_a gamma_b
                let x = (c / Complex64::i()).re;
                let (a, b) = (m[0] as usize, m[1] as usize);
                match (a % 2, b % 2) {
                    (0, 1) => one_body[(a / 2, b / 2)] += x,
                    (1, 0) => one_body[(b / 2, a / 2)] -= x,
                    // g_p0 g_q0 and g_p1 g_q1 cancel for Hermitian input
                    _ => debug_assert!(x.abs() < 1e-10, "same-flavor quadratic {m:?}: {x}"),
                }
            }
            4 => {
                two_body.terms.insert(m, -c.re);
            }
            d => debug_assert!(c.norm() < 1e-10, "unexpected degree {d}"),
        }
    }
    two_body.prune();
    MajoranaSplit { constant, one_body, two_body }
}

/// Spin-symmetric tensors viewed as a spin-blocked operator with one-body part.
pub fn majorana_expand_spatial(t: &SpatialTensors) -> MajoranaSplit {
    let two = SpinTensor2e::new(t.tbt().clone(), t.tbt().clone()).expect("validated tensors");
    majorana_expand(Some(t.obt()), &two)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensors::Tensor4;

    #[test]
    fn zero_operator_has_empty_split() {
        let s = majorana_separate(&SpatialTensors::zeros(2));
        assert_eq!(s.constant, 0.0);
        assert_eq!(s.one_body.amax(), 0.0);
        assert!(s.two_body.is_empty());
    }

    #[test]
    fn single_orbital_split() {
        let mut g = Tensor4::zeros(1);
        g[(0, 0, 0, 0)] = 1.0;
        let t = SpatialTensors::new(0.0, DMatrix::zeros(1, 1), g).unwrap();
        let s = majorana_separate(&t);
        assert_eq!(s.constant, 1.5);
        assert_eq!(s.one_body[(0, 0)], 1.0);
        assert_eq!(s.one_body[(1, 1)], 1.0);
        assert_eq!(s.one_body[(0, 1)], 0.0);
        // only the opposite-spin quartic survives
        assert_eq!(s.two_body.len(), 1);
    }

    #[test]
    fn reduce_cancels_pairs() {
        // g3 g1 g3 = -g1 g3 g3 = -g1
        assert_eq!(reduce_product(&[3, 1, 3]), (-1.0, vec![1]));
        assert_eq!(reduce_product(&[2, 2]), (1.0, vec![]));
        assert_eq!(reduce_product(&[1, 0]), (-1.0, vec![0, 1]));
    }
}
