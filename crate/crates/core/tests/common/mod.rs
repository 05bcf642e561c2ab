//! Shared test oracles: dense Fock-space operators built directly from
//! creation/annihilation rules, random symmetric tensors and fixture loading.
#![allow(dead_code)]

use std::path::PathBuf;

use lcu_core::fcidump::{read_fcidump, to_chemist};
use lcu_core::majorana::MajoranaPolynomial;
use lcu_core::tensors::{SpatialTensors, SpinTensor2e, Tensor4};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn fixture(name: &str) -> SpatialTensors {
    let rec = read_fcidump(data_dir().join(format!("{name}.fcidump"))).expect("fixture readable");
    to_chemist(&rec).expect("fixture valid")
}

/// `a_p |s>`: sign from occupied modes below `p`.
pub fn annihilate(p: usize, s: usize) -> Option<(f64, usize)> {
    if s >> p & 1 == 0 {
        return None;
    }
    let sign = if (s & ((1 << p) - 1)).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    Some((sign, s ^ (1 << p)))
}

pub fn create(p: usize, s: usize) -> Option<(f64, usize)> {
    if s >> p & 1 == 1 {
        return None;
    }
    let sign = if (s & ((1 << p) - 1)).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    Some((sign, s | (1 << p)))
}

/// `a_p^dagger a_q |s>`
pub fn excite(p: usize, q: usize, s: usize) -> Option<(f64, usize)> {
    let (s1, t) = annihilate(q, s)?;
    let (s2, u) = create(p, t)?;
    Some((s1 * s2, u))
}

/// Dense matrix of `one (spin-diagonal) + spin-blocked two-body`, no constant.
pub fn dense_spin_operator(n: usize, one: Option<&DMatrix<f64>>, same: &Tensor4, opposite: &Tensor4) -> DMatrix<f64> {
    let ns = 2 * n;
    let dim = 1 << ns;
    let mut h = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        if let Some(o) = one {
            for i in 0..n {
                for j in 0..n {
                    for sg in 0..2 {
                        if let Some((c, t)) = excite(2 * i + sg, 2 * j + sg, s) {
                            h[(t, s)] += c * o[(i, j)];
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        for sg in 0..2 {
                            for sp in 0..2 {
                                let v = if sg == sp { same[(i, j, k, l)] } else { opposite[(i, j, k, l)] };
                                if v == 0.0 {
                                    continue;
                                }
                                if let Some((c1, t)) = excite(2 * k + sp, 2 * l + sp, s) {
                                    if let Some((c2, u)) = excite(2 * i + sg, 2 * j + sg, t) {
                                        h[(u, s)] += c1 * c2 * v;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    h
}

pub fn dense_hamiltonian(t: &SpatialTensors) -> DMatrix<f64> {
    let n = t.n_orb();
    let mut h = dense_spin_operator(n, Some(t.obt()), t.tbt(), t.tbt());
    for d in 0..h.nrows() {
        h[(d, d)] += t.e0();
    }
    h
}

pub fn dense_spin2e(s: &SpinTensor2e) -> DMatrix<f64> {
    dense_spin_operator(s.n_orb(), None, s.same(), s.opposite())
}

/// Dense Majorana `gamma_{p, flavor}` on `ns` modes.
pub fn dense_majorana(ns: usize, p: usize, flavor: usize) -> DMatrix<Complex64> {
    let dim = 1 << ns;
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        if let Some((c, t)) = annihilate(p, s) {
            let v = if flavor == 0 { Complex64::from(c) } else { Complex64::new(0.0, -c) };
            m[(t, s)] += v;
        }
        if let Some((c, t)) = create(p, s) {
            let v = if flavor == 0 { Complex64::from(c) } else { Complex64::new(0.0, c) };
            m[(t, s)] += v;
        }
    }
    m
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(Complex64::from)
}

pub fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Random tensors with exact 8-fold symmetry.
pub fn random_tensors(n: usize, seed: u64) -> SpatialTensors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let mut g = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if k * n + l > i * n + j {
                        continue;
                    }
                    let v = rng.gen_range(-0.5..0.5);
                    for (a, b, c, d) in [(i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k), (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i)] {
                        g[(a, b, c, d)] = v;
                    }
                }
            }
        }
    }
    SpatialTensors::new(rng.gen_range(-1.0..1.0), h, g).unwrap()
}

/// Dense matrix of a Majorana polynomial, each monomial carrying `i^(deg/2)`.
pub fn dense_majorana_poly(p: &MajoranaPolynomial) -> DMatrix<Complex64> {
    let ns = p.n_modes();
    let dim = 1 << ns;
    let mut out = DMatrix::zeros(dim, dim);
    for (mono, c) in p.terms() {
        let mut m = DMatrix::<Complex64>::identity(dim, dim);
        for &g in mono {
            m *= dense_majorana(ns, (g / 2) as usize, (g % 2) as usize);
        }
        let phase = match (mono.len() / 2) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        out += m * (phase * c);
    }
    out
}
