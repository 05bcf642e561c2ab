//! FCIDUMP reading and writing.
//!
//! Header `&FCI NORB=.., NELEC=.., MS2=.., ... &END` (or a lone `/`), then
//! lines `value i j k l` with 1-based indices. `i j k l` all zero is the core
//! energy, `k = l = 0` is a core Hamiltonian entry, anything else an
//! electron-repulsion integral `(ij|kl)`. Lines `value i 0 0 0` (orbital
//! energies) are ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensors::{SpatialTensors, Tensor4};

#[derive(Clone, Debug, PartialEq)]
pub struct FcidumpRecord {
    pub n_orb: usize,
    pub n_elec: usize,
    pub ms2: i64,
    pub core_energy: f64,
    pub core_h: DMatrix<f64>,
    /// `(ij|kl)`, permutational symmetry fully expanded.
    pub eri: Tensor4,
}

#[derive(Default)]
struct Header {
    norb: Option<usize>,
    nelec: Option<usize>,
    ms2: Option<i64>,
}

fn parse_header_token(hdr: &mut Header, key: &str, value: &str, line: usize) -> Result<()> {
    let bad = |what: &str| Error::Parse { line, msg: format!("bad {what} value `{value}`") };
    match key {
        "NORB" => hdr.norb = Some(value.parse().map_err(|_| bad("NORB"))?),
        "NELEC" => hdr.nelec = Some(value.parse().map_err(|_| bad("NELEC"))?),
        "MS2" => hdr.ms2 = Some(value.parse().map_err(|_| bad("MS2"))?),
        _ => {}
    }
    Ok(())
}

fn parse_value(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse().ok()
}

pub fn parse_fcidump(text: &str) -> Result<FcidumpRecord> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut hdr = Header::default();
    let mut saw_start = false;
    let mut last_key: Option<String> = None;
    let mut body_start = None;

    for (lineno, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut rest = line;
        if !saw_start {
            let upper = rest.to_ascii_uppercase();
            if let Some(stripped) = upper.strip_prefix("&FCI") {
                saw_start = true;
                rest = &line[line.len() - stripped.len()..];
            } else {
                return Err(Error::Parse { line: lineno, msg: "expected `&FCI` header".into() });
            }
        }
        let upper = rest.to_ascii_uppercase();
        let (content, done) = if let Some(pos) = upper.find("&END") {
            (&rest[..pos], true)
        } else if let Some(pos) = upper.find('/') {
            (&rest[..pos], true)
        } else {
            (rest, false)
        };
        // Tokens are `KEY=value`, or bare values continuing a list (ORBSYM).
        for tok in content.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            if let Some((k, v)) = tok.split_once('=') {
                let key = k.trim().to_ascii_uppercase();
                if !v.trim().is_empty() {
                    parse_header_token(&mut hdr, &key, v.trim(), lineno)?;
                }
                last_key = Some(key);
            } else if let Some(key) = &last_key {
                if key != "ORBSYM" {
                    // Value after `KEY=` separated by whitespace.
                    parse_header_token(&mut hdr, key, tok, lineno)?;
                }
            } else {
                return Err(Error::Parse { line: lineno, msg: format!("unexpected header token `{tok}`") });
            }
        }
        if done {
            body_start = Some(lineno);
            break;
        }
    }
    let end_line = body_start.ok_or(Error::Parse { line: text.lines().count().max(1), msg: "header not terminated by &END".into() })?;
    let norb = hdr.norb.ok_or(Error::Parse { line: end_line, msg: "header lacks NORB".into() })?;
    if norb == 0 {
        return Err(Error::Parse { line: end_line, msg: "NORB must be positive".into() });
    }
    let nelec = hdr.nelec.ok_or(Error::Parse { line: end_line, msg: "header lacks NELEC".into() })?;
    let ms2 = hdr.ms2.unwrap_or(0);

    let mut core_energy = 0.0;
    let mut core_h = DMatrix::zeros(norb, norb);
    let mut eri = Tensor4::zeros(norb);

    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::Parse { line: lineno, msg: format!("expected `value i j k l`, got {} fields", toks.len()) });
        }
        let value = parse_value(toks[0]).ok_or(Error::Parse { line: lineno, msg: format!("bad value `{}`", toks[0]) })?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
            let v: i64 = tok.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad index `{tok}`") })?;
            if v < 0 || v as usize > norb {
                return Err(Error::IndexRange { line: lineno, index: v, norb });
            }
            *slot = v as usize;
        }
        match idx {
            [0, 0, 0, 0] => core_energy = value,
            [_, 0, 0, 0] => {}
            [i, j, 0, 0] if j > 0 => {
                core_h[(i - 1, j - 1)] = value;
                core_h[(j - 1, i - 1)] = value;
            }
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
                for (a, b, c, d) in [
                    (i, j, k, l),
                    (j, i, k, l),
                    (i, j, l, k),
                    (j, i, l, k),
                    (k, l, i, j),
                    (l, k, i, j),
                    (k, l, j, i),
                    (l, k, j, i),
                ] {
                    eri[(a, b, c, d)] = value;
                }
            }
            _ => return Err(Error::Parse { line: lineno, msg: "index pattern is neither integral, core Hamiltonian nor core energy".into() }),
        }
    }

    Ok(FcidumpRecord { n_orb: norb, n_elec: nelec, ms2, core_energy, core_h, eri })
}

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<FcidumpRecord> {
    parse_fcidump(&std::fs::read_to_string(path)?)
}

/// Writes unique entries only (`i >= j`, `k >= l`, `ij >= kl`); zeros are skipped.
pub fn serialize_fcidump(rec: &FcidumpRecord) -> String {
    let n = rec.n_orb;
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(out, " &FCI NORB={n},NELEC={},MS2={},", rec.n_elec, rec.ms2);
    let _ = writeln!(out, "  ORBSYM={orbsym},");
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    for i in 0..n {
        for j in 0..=i {
            let ij = i * (i + 1) / 2 + j;
            for k in 0..n {
                for l in 0..=k {
                    if k * (k + 1) / 2 + l > ij {
                        continue;
                    }
                    let v = rec.eri[(i, j, k, l)];
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = rec.core_h[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{v:e} {} {} 0 0", i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", rec.core_energy);
    out
}

/// Convert to chemist-notation tensors: `g_ijkl = (ij|kl)/2`,
/// `h_ij = core_h_ij - sum_k g_ikkj`, `e0 = core_energy`.
pub fn to_chemist(rec: &FcidumpRecord) -> Result<SpatialTensors> {
    let n = rec.n_orb;
    let g = rec.eri.scale(0.5);
    let h = DMatrix::from_fn(n, n, |i, j| rec.core_h[(i, j)] - (0..n).map(|k| g[(i, k, k, j)]).sum::<f64>());
    SpatialTensors::new(rec.core_energy, h, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = " &FCI NORB=1,NELEC=1,MS2=1,\n ORBSYM=1,\n ISYM=1,\n &END\n -1.0 1 1 0 0\n 0.5 0 0 0 0\n";

    #[test]
    fn single_entry_file() {
        let rec = parse_fcidump(TINY).unwrap();
        assert_eq!(rec.n_orb, 1);
        assert_eq!(rec.core_h[(0, 0)], -1.0);
        assert_eq!(rec.core_energy, 0.5);
    }

    #[test]
    fn slash_terminated_header_and_fortran_exponents() {
        let text = "&FCI NORB= 2, NELEC= 2, MS2= 0,\n ORBSYM=1,1,\n/\n0.5D+00 1 1 1 1\n";
        let rec = parse_fcidump(text).unwrap();
        assert_eq!(rec.n_orb, 2);
        assert_eq!(rec.eri[(0, 0, 0, 0)], 0.5);
    }

    #[test]
    fn header_errors_carry_line_numbers() {
        let err = parse_fcidump("&FCI NELEC=2,\n&END\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_fcidump("\nNORB=2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_fcidump("&FCI NORB=x,NELEC=2,\n&END\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn index_out_of_range() {
        let text = "&FCI NORB=1,NELEC=1,MS2=1,\n&END\n1.0 2 1 0 0\n";
        assert!(matches!(parse_fcidump(text), Err(Error::IndexRange { line: 3, index: 2, .. })));
        let text = "&FCI NORB=1,NELEC=1,MS2=1,\n&END\n1.0 -1 1 0 0\n";
        assert!(matches!(parse_fcidump(text), Err(Error::IndexRange { line: 3, .. })));
    }

    #[test]
    fn chemist_conversion_single_orbital() {
        let text = "&FCI NORB=1,NELEC=1,MS2=1,\n&END\n0.8 1 1 1 1\n-1.0 1 1 0 0\n";
        let t = to_chemist(&parse_fcidump(text).unwrap()).unwrap();
        assert_eq!(t.tbt()[(0, 0, 0, 0)], 0.4);
        assert_eq!(t.obt()[(0, 0)], -1.0 - 0.4);
    }

    #[test]
    fn chemist_conversion_without_eri() {
        let rec = parse_fcidump(TINY).unwrap();
        let t = to_chemist(&rec).unwrap();
        assert_eq!(t.obt(), &rec.core_h);
        assert_eq!(t.tbt().max_abs(), 0.0);
        assert_eq!(t.e0(), 0.5);
    }
}
