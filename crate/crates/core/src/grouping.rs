//! Sorted-insertion grouping of Pauli terms into mutually anticommuting sets.
//!
//! Each group `K_n` forms `a_n A_n` with `A_n = sum_k c_k P_k / a_n` unitary and
//! `a_n = sqrt(sum_k c_k^2)`, so the grouped 1-norm is `sum_n a_n`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{anticommutes, PauliPolynomial, PauliWord};

#[derive(Clone, Debug, PartialEq)]
pub struct AcGroup {
    members: Vec<(PauliWord, f64)>,
    norm: f64,
}

impl AcGroup {
    fn new(w: PauliWord, c: f64) -> Self {
        Self { members: vec![(w, c)], norm: c.abs() }
    }

    fn accepts(&self, w: &PauliWord) -> bool {
        self.members.iter().all(|(m, _)| anticommutes(m, w).unwrap_or(false))
    }

    fn push(&mut self, w: PauliWord, c: f64) {
        self.members.push((w, c));
        self.norm = self.members.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    }

    pub fn members(&self) -> &[(PauliWord, f64)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `a_n`
    pub fn norm(&self) -> f64 {
        self.norm
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcPartition {
    pub groups: Vec<AcGroup>,
    /// Identity coefficient, kept out of every group.
    pub identity: f64,
}

impl AcPartition {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Terms in descending `|c|` (ties by word order); each joins the first group
/// it anticommutes with entirely, or opens a new one.
pub fn sorted_insertion(p: &PauliPolynomial) -> AcPartition {
    let mut terms: Vec<(PauliWord, f64)> = p.terms().map(|(w, c)| (*w, *c)).collect();
    terms.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
    let mut groups: Vec<AcGroup> = Vec::new();
    for (w, c) in terms {
        match groups.iter_mut().find(|g| g.accepts(&w)) {
            Some(g) => g.push(w, c),
            None => groups.push(AcGroup::new(w, c)),
        }
    }
    AcPartition { groups, identity: p.identity_coefficient() }
}

pub fn lambda_ac(part: &AcPartition) -> f64 {
    part.groups.iter().map(|g| g.norm).sum()
}

/// `theta_k = 1/2 arcsin(c_k / sqrt(sum_{i <= k} c_i^2))` in member order.
pub fn group_angles(g: &AcGroup) -> Result<Vec<(PauliWord, f64)>> {
    if g.is_empty() || g.norm == 0.0 {
        return Err(Error::Contract("group with zero norm has no rotation angles".into()));
    }
    let mut partial = 0.0;
    let mut out = Vec::with_capacity(g.len());
    for (w, c) in &g.members {
        partial += c * c;
        let ratio = if partial > 0.0 { (c / partial.sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
        out.push((*w, 0.5 * ratio.asin()));
    }
    Ok(out)
}

/// Dense `prod_asc e^{i theta_k P_k} prod_desc e^{i theta_k P_k}`, k running
/// over all members including the first. Equals `A_n` up to a global phase.
pub fn reconstruct_group_unitary(g: &AcGroup) -> Result<DMatrix<Complex64>> {
    let angles = group_angles(g)?;
    let nq = angles[0].0.n_qubits();
    if nq > 10 {
        return Err(Error::Capability(format!("dense reconstruction on {nq} qubits")));
    }
    let dim = 1usize << nq;
    let rot = |w: &PauliWord, th: f64| {
        DMatrix::<Complex64>::identity(dim, dim) * Complex64::from(th.cos()) + w.to_dense() * Complex64::new(0.0, th.sin())
    };
    let mut m = DMatrix::<Complex64>::identity(dim, dim);
    for (w, th) in angles.iter().chain(angles.iter().rev()) {
        m *= rot(w, *th);
    }
    Ok(m)
}

/// `(1/a_n) sum_k c_k P_k` as a dense matrix.
pub fn group_operator(g: &AcGroup) -> DMatrix<Complex64> {
    let nq = g.members[0].0.n_qubits();
    let dim = 1usize << nq;
    let mut m = DMatrix::zeros(dim, dim);
    for (w, c) in &g.members {
        m += w.to_dense() * Complex64::from(c / g.norm);
    }
    m
}
