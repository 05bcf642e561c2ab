//! End-to-end pipeline: FCIDUMP in, one row of 1-norms out, plus table
//! rendering in JSON, text and markdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fcidump::{read_fcidump, to_chemist};
use crate::fragments::{
    csa_greedy, double_factorize, lambda_complete_square, lambda_fermionic, lambda_sqrt_fragment, lambda_sqrt_literal,
    one_body_spectrum, reflection_pair_count, CsaConfig, CsaDecomposition, Fragment,
};
use crate::grouping::{lambda_ac, sorted_insertion};
use crate::optim::{oo_pauli, OptimizerConfig, OrbitalOptimum};
use crate::pauli::{jordan_wigner, lambda_pauli};
use crate::picture::{split_interaction, PictureSplit};
use crate::shift::{optimal_shift, SymmetryShift};
use crate::spectra::spectral_range;
use crate::tensors::SpatialTensors;

/// Environment variable naming the decomposition cache directory.
pub const CACHE_ENV: &str = "LCU_CACHE_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "de2")]
    HalfSpectralRange,
    #[serde(rename = "pauli")]
    Pauli,
    #[serde(rename = "oo-pauli")]
    OoPauli,
    #[serde(rename = "ac")]
    Ac,
    #[serde(rename = "oo-ac")]
    OoAc,
    #[serde(rename = "df")]
    Df,
    #[serde(rename = "gcsa-f")]
    GcsaF,
    #[serde(rename = "gcsa-sr")]
    GcsaSr,
}

impl Method {
    /// Table column order.
    pub const ALL: [Method; 8] = [
        Method::HalfSpectralRange,
        Method::Pauli,
        Method::OoPauli,
        Method::Ac,
        Method::OoAc,
        Method::Df,
        Method::GcsaF,
        Method::GcsaSr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::HalfSpectralRange => "de2",
            Method::Pauli => "pauli",
            Method::OoPauli => "oo-pauli",
            Method::Ac => "ac",
            Method::OoAc => "oo-ac",
            Method::Df => "df",
            Method::GcsaF => "gcsa-f",
            Method::GcsaSr => "gcsa-sr",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            Method::HalfSpectralRange => "dE/2",
            Method::Pauli => "Pauli",
            Method::OoPauli => "OO-Pauli",
            Method::Ac => "AC",
            Method::OoAc => "OO-AC",
            Method::Df => "DF",
            Method::GcsaF => "GCSA-F",
            Method::GcsaSr => "GCSA-SR",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Parse a comma-separated method list; `all` selects every method.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if tok == "all" {
            out.extend(Method::ALL);
        } else {
            out.push(tok.parse()?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    Schrodinger,
    Interaction,
}

impl FromStr for Picture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schrodinger" => Ok(Picture::Schrodinger),
            "interaction" => Ok(Picture::Interaction),
            _ => Err(Error::Contract(format!("unknown picture `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub shift: bool,
    pub picture: Picture,
    pub seed: u64,
    pub csa_tol: f64,
    pub df_tol: f64,
    pub count_cutoff: f64,
    pub optimizer: OptimizerConfig,
    /// Also report the literal occupation-range norm of each CSA fragment.
    pub diagnostics: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            shift: false,
            picture: Picture::Schrodinger,
            seed: 0,
            csa_tol: 1e-6,
            df_tol: 1e-12,
            count_cutoff: 1e-6,
            optimizer: OptimizerConfig::default(),
            diagnostics: false,
        }
    }
}

impl RunConfig {
    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig { seed: self.seed, ..self.optimizer.clone() }
    }

    fn csa(&self) -> CsaConfig {
        CsaConfig { stop_tol: self.csa_tol, seed: self.seed, optimizer: self.optimizer(), ..CsaConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodEntry {
    pub method: Method,
    pub lambda: f64,
    /// Number of unitaries in the LCU, when defined.
    pub unitary_count: Option<usize>,
    pub log2_ceil: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub molecule: String,
    pub picture: Picture,
    pub shift_applied: bool,
    pub shift: Option<SymmetryShift>,
    pub entries: Vec<MethodEntry>,
    pub diagnostics: BTreeMap<String, f64>,
    pub version: String,
    pub config: RunConfig,
}

impl NormReport {
    pub fn lambda(&self, m: Method) -> Option<f64> {
        self.entries.iter().find(|e| e.method == m).map(|e| e.lambda)
    }

    pub fn entry(&self, m: Method) -> Option<&MethodEntry> {
        self.entries.iter().find(|e| e.method == m)
    }
}

pub fn log2_ceil(m: usize) -> u32 {
    if m <= 1 {
        0
    } else {
        usize::BITS - (m - 1).leading_zeros()
    }
}

fn entry(method: Method, lambda: f64, count: Option<usize>) -> MethodEntry {
    MethodEntry { method, lambda, unitary_count: count, log2_ceil: count.map(log2_ceil) }
}

/// On-disk store for expensive decompositions, keyed by a hash of the
/// tensors, the kind of decomposition and its configuration.
#[derive(Debug)]
pub struct DecompositionCache {
    dir: Option<PathBuf>,
    write_lock: Mutex<()>,
}

impl DecompositionCache {
    pub fn disabled() -> Self {
        Self { dir: None, write_lock: Mutex::new(()) }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), write_lock: Mutex::new(()) }
    }

    /// Directory from `LCU_CACHE_DIR`, disabled when unset.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::at(PathBuf::from(d)),
            _ => Self::disabled(),
        }
    }

    fn key(t: &SpatialTensors, kind: &str, config: &impl Serialize) -> Result<String> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(t)?);
        h.update(kind.as_bytes());
        h.update(serde_json::to_vec(config)?);
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn get_or_compute<T, C>(&self, t: &SpatialTensors, kind: &str, config: &C, compute: impl FnOnce() -> Result<T>) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        C: Serialize,
    {
        let Some(dir) = &self.dir else { return compute() };
        let path = dir.join(format!("{kind}-{}.json", Self::key(t, kind, config)?));
        if let Ok(bytes) = std::fs::read(&path) {
            if let Ok(v) = serde_json::from_slice(&bytes) {
                return Ok(v);
            }
        }
        let value = compute()?;
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        std::fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(&value)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(value)
    }
}

/// Every selected 1-norm for one set of tensors (already shifted or split).
pub fn compute_norms(
    t: &SpatialTensors,
    cfg: &RunConfig,
    cache: &DecompositionCache,
) -> Result<(Vec<MethodEntry>, BTreeMap<String, f64>)> {
    let has = |m: Method| cfg.methods.contains(&m);
    let n = t.n_orb();
    let opt_cfg = cfg.optimizer();
    let csa_cfg = cfg.csa();

    let need_oo = has(Method::OoPauli) || has(Method::OoAc);
    let need_csa = has(Method::GcsaF) || has(Method::GcsaSr);
    let (oo, (csa, range)) = rayon::join(
        || -> Result<Option<OrbitalOptimum>> {
            need_oo.then(|| cache.get_or_compute(t, "oo-pauli", &opt_cfg, || oo_pauli(t, &opt_cfg))).transpose()
        },
        || {
            rayon::join(
                || -> Result<Option<CsaDecomposition>> {
                    need_csa.then(|| cache.get_or_compute(t, "gcsa", &csa_cfg, || csa_greedy(t, &csa_cfg))).transpose()
                },
                || has(Method::HalfSpectralRange).then(|| spectral_range(t)).transpose(),
            )
        },
    );
    let (oo, csa, range) = (oo?, csa?, range?);

    let mut entries = Vec::new();
    let mut diag = BTreeMap::new();
    let mu = one_body_spectrum(t);

    if let Some(r) = range {
        entries.push(entry(Method::HalfSpectralRange, r.half_width(), None));
        diag.insert("e_min".into(), r.e_min);
        diag.insert("e_max".into(), r.e_max);
    }
    if has(Method::Pauli) || has(Method::Ac) {
        let jw = jordan_wigner(t);
        if has(Method::Pauli) {
            entries.push(entry(Method::Pauli, lambda_pauli(&jw), Some(jw.len())));
        }
        if has(Method::Ac) {
            let part = sorted_insertion(&jw);
            entries.push(entry(Method::Ac, lambda_ac(&part), Some(part.len())));
        }
    }
    if let Some(oo) = &oo {
        let jw = jordan_wigner(&oo.rotated);
        if has(Method::OoPauli) {
            entries.push(entry(Method::OoPauli, lambda_pauli(&jw), Some(jw.len())));
        }
        if has(Method::OoAc) {
            let part = sorted_insertion(&jw);
            entries.push(entry(Method::OoAc, lambda_ac(&part), Some(part.len())));
        }
    }
    let l1: f64 = mu.iter().map(|m| m.abs()).sum();
    if has(Method::Df) {
        let frags = double_factorize(t, cfg.df_tol)?;
        let l2: f64 = frags.iter().map(lambda_complete_square).sum();
        let counted = frags.iter().filter(|f| f.eps.iter().map(|e| e * e).sum::<f64>() > cfg.count_cutoff).count();
        entries.push(entry(Method::Df, l1 + l2, Some(counted + 1)));
        diag.insert("df_fragments".into(), frags.len() as f64);
    }
    if let Some(csa) = &csa {
        let frags = &csa.fragments;
        diag.insert("gcsa_fragments".into(), frags.len() as f64);
        diag.insert("gcsa_residual".into(), csa.residual());
        if has(Method::GcsaF) {
            let (a, b) = lambda_fermionic(&mu, frags);
            let pairs: usize = frags.iter().map(|f| reflection_pair_count(&f.lam, cfg.count_cutoff)).sum();
            entries.push(entry(Method::GcsaF, a + b, Some(pairs + 2 * n)));
        }
        if has(Method::GcsaSr) {
            let mut l2 = 0.0;
            for f in frags {
                l2 += lambda_sqrt_fragment(f)?;
            }
            entries.push(entry(Method::GcsaSr, l1 + l2, Some(2 * frags.len() + 1)));
            if cfg.diagnostics {
                let mut lit = 0.0;
                for f in frags {
                    lit += lambda_sqrt_literal(&f.lambda_matrix())?;
                }
                diag.insert("gcsa_sr_literal".into(), l1 + lit);
            }
        }
    }
    entries.sort_by_key(|e| e.method);
    Ok((entries, diag))
}

fn molecule_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

/// Load, optionally shift or split, and compute every selected norm.
pub fn run_pipeline(path: &Path, cfg: &RunConfig, cache: &DecompositionCache) -> Result<NormReport> {
    let t = to_chemist(&read_fcidump(path)?)?;
    run_tensors(&molecule_id(path), &t, cfg, cache)
}

pub fn run_tensors(molecule: &str, t: &SpatialTensors, cfg: &RunConfig, cache: &DecompositionCache) -> Result<NormReport> {
    let mut diagnostics = BTreeMap::new();
    let (work, shift) = match cfg.picture {
        Picture::Interaction => {
            let opt = cfg.optimizer();
            let split: PictureSplit = cache.get_or_compute(t, "picture", &opt, || split_interaction(t, &opt))?;
            diagnostics.insert("picture_fit".into(), split.fit_residual_norm);
            (split.residual, None)
        }
        Picture::Schrodinger if cfg.shift => {
            let (s, shifted) = optimal_shift(t);
            (shifted, Some(s))
        }
        Picture::Schrodinger => (t.clone(), None),
    };
    let (entries, diag) = compute_norms(&work, cfg, cache)?;
    diagnostics.extend(diag);
    let report = NormReport {
        molecule: molecule.to_string(),
        picture: cfg.picture,
        shift_applied: shift.is_some(),
        shift,
        entries,
        diagnostics,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
    };
    check_lower_bound(&report)?;
    Ok(report)
}

/// Every 1-norm must sit at or above `Delta E / 2`.
pub fn check_lower_bound(r: &NormReport) -> Result<()> {
    let Some(bound) = r.lambda(Method::HalfSpectralRange) else { return Ok(()) };
    for e in &r.entries {
        if e.lambda < bound - 1e-9 {
            return Err(Error::Contract(format!(
                "{}: {} 1-norm {} below the spectral bound {}",
                r.molecule,
                e.method.name(),
                e.lambda,
                bound
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(Error::Contract(format!("unknown format `{s}`"))),
        }
    }
}

/// Three significant figures, never in exponent form.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (2 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new digit (0.9996 -> 1.000).
    let rounded: f64 = s.parse().unwrap_or(x);
    if rounded.abs() > 0.0 && (rounded.abs().log10().floor() as i32) > mag {
        let d = (2 - mag - 1).max(0) as usize;
        return format!("{x:.d$}");
    }
    s
}

fn cell(e: Option<&MethodEntry>) -> String {
    match e {
        None => "-".into(),
        Some(e) => match e.log2_ceil {
            Some(l) => format!("{}({l})", sig3(e.lambda)),
            None => sig3(e.lambda),
        },
    }
}

fn columns(reports: &[NormReport]) -> Vec<Method> {
    Method::ALL.into_iter().filter(|m| reports.iter().any(|r| r.entry(*m).is_some())).collect()
}

fn row_label(r: &NormReport) -> [String; 2] {
    let shift = match r.picture {
        Picture::Interaction => "H_R".to_string(),
        Picture::Schrodinger if r.shift_applied => "yes".to_string(),
        Picture::Schrodinger => "--".to_string(),
    };
    [r.molecule.clone(), shift]
}

pub fn emit_table(reports: &[NormReport], format: Format) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Contract("no reports to emit".into()));
    }
    let cols = columns(reports);
    let header: Vec<String> = ["System", "Shift"].iter().map(|s| s.to_string()).chain(cols.iter().map(|m| m.header().to_string())).collect();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| row_label(r).into_iter().chain(cols.iter().map(|m| cell(r.entry(*m)))).collect())
        .collect();
    let mut out = String::new();
    match format {
        Format::Json => {
            out = serde_json::to_string_pretty(reports)?;
            out.push('\n');
        }
        Format::Text => {
            let widths: Vec<usize> =
                (0..header.len()).map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0)).collect();
            let line = |cells: &[String]| -> String {
                let parts: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(c, (s, w))| if c < 2 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                    .collect();
                parts.join("  ").trim_end().to_string()
            };
            let _ = writeln!(out, "{}", line(&header));
            for r in &rows {
                let _ = writeln!(out, "{}", line(r));
            }
        }
        Format::Markdown => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
            for r in &rows {
                let _ = writeln!(out, "| {} |", r.join(" | "));
            }
        }
    }
    Ok(out)
}
