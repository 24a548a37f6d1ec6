//! Eigenmatrix coalescence metric and damping classification.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::postselected_hamiltonian;
use crate::model::LindbladModel;
use crate::propagator::{eigen_decompose, PropagatorSpectrum};

pub const DEFAULT_REALITY_TOL: f64 = 1e-9;
pub const DEFAULT_EP_THRESHOLD: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Damping {
    Overdamped,
    Underdamped,
}

impl Damping {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Overdamped => "overdamped",
            Self::Underdamped => "underdamped",
        }
    }
}

/// Largest modulus of the Hilbert–Schmidt overlap `⟨ρ_m|ρ_n⟩` over pairs of
/// distinct transient eigenmatrices. `1` marks a coalescence.
pub fn inner_product_metric(s: &PropagatorSpectrum) -> Result<f64> {
    let transients: Vec<usize> = s.transient_indices().collect();
    if transients.len() < 2 {
        return Err(Error::TooFewTransients(transients.len()));
    }
    let mut ip = 0.0_f64;
    for (a, &m) in transients.iter().enumerate() {
        for &n in &transients[a + 1..] {
            ip = ip.max(s.eigenmatrices[m].dotc(&s.eigenmatrices[n]).norm());
        }
    }
    Ok(ip)
}

fn is_real(l: C64, reality_tol: f64) -> bool {
    l.im.abs() < reality_tol * l.norm().max(1.0)
}

/// Number of transient eigenvalues that are real within `reality_tol`.
pub fn count_real_transients(s: &PropagatorSpectrum, reality_tol: f64) -> usize {
    s.transient_indices().filter(|&k| is_real(s.eigenvalues[k], reality_tol)).count()
}

/// Overdamped when every transient eigenvalue is real.
pub fn classify_damping(s: &PropagatorSpectrum, reality_tol: f64) -> Damping {
    if s.transient_indices().all(|k| is_real(s.eigenvalues[k], reality_tol)) {
        Damping::Overdamped
    } else {
        Damping::Underdamped
    }
}

pub fn is_ep(s: &PropagatorSpectrum, threshold: f64) -> bool {
    inner_product_metric(s).map(|ip| ip >= threshold).unwrap_or(false)
}

/// True for an exact coherent degeneracy, where eigenvectors are arbitrary
/// inside the degenerate subspace and the metric is meaningless.
pub fn degenerate_unreliable(s: &PropagatorSpectrum, dissipation: f64) -> bool {
    if dissipation >= 1e-10 {
        return false;
    }
    let t = s.transient_eigenvalues();
    t.iter()
        .enumerate()
        .any(|(i, a)| t[i + 1..].iter().any(|b| (a - b).norm() < 1e-10))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpObservables {
    pub ip: f64,
    pub damping: Damping,
    pub n_real_transients: usize,
    /// All `N²` eigenvalues of `G(T)`, descending real part.
    pub eigenvalues: Vec<C64>,
    pub steady_index: usize,
    pub degenerate: bool,
}

impl EpObservables {
    pub fn transient_eigenvalues(&self) -> impl Iterator<Item = C64> + '_ {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(move |(k, _)| *k != self.steady_index)
            .map(|(_, l)| *l)
    }
}

/// Bundles the metric, the damping class and the eigenvalues of a spectrum.
/// `dissipation` is the largest dissipator strength of the model.
pub fn observe(s: &PropagatorSpectrum, dissipation: f64, reality_tol: f64) -> Result<EpObservables> {
    Ok(EpObservables {
        ip: inner_product_metric(s)?,
        damping: classify_damping(s, reality_tol),
        n_real_transients: count_real_transients(s, reality_tol),
        eigenvalues: s.eigenvalues.clone(),
        steady_index: s.steady_index,
        degenerate: degenerate_unreliable(s, dissipation),
    })
}

/// Smallest distance between two eigenvalues of the no-jump Hamiltonian at
/// time `t`; zero at its exceptional point.
pub fn postselected_splitting(model: &LindbladModel, t: f64) -> Result<f64> {
    let h = postselected_hamiltonian(model, t);
    let e = eigen_decompose(h.as_matrix())?.values;
    let mut split = f64::INFINITY;
    for (i, a) in e.iter().enumerate() {
        for b in &e[i + 1..] {
            split = split.min((a - b).norm());
        }
    }
    Ok(split)
}
