//! One-period propagator `G(T)` of a periodic Liouvillian and its spectrum.

mod expm;
mod integrate;
mod spectrum;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub use self::expm::{expm, matrix_exponential};
pub use self::integrate::{IntegratorOptions, Scheme, Steps};
pub(crate) use self::integrate::{propagate, Generator};
pub use self::spectrum::{
    complex_schur, eigen_decompose, fix_phase, spectrum, spectrum_from_real, EigenDecomposition, PropagatorSpectrum,
    STEADY_TRACE_MIN,
};

use crate::error::Result;
use crate::liouvillian::{hermitian_basis_matrix, LiouvillianParts, RealLiouvillianParts};
use crate::model::LindbladModel;

/// `ℒ(t)` in the Hermitian operator basis, as a real generator.
pub(crate) struct RealLiouvillianGenerator<'a> {
    model: &'a LindbladModel,
    parts: RealLiouvillianParts,
}

impl<'a> RealLiouvillianGenerator<'a> {
    pub(crate) fn new(model: &'a LindbladModel) -> Self {
        Self::with_parts(model, &LiouvillianParts::new(model))
    }

    pub(crate) fn with_parts(model: &'a LindbladModel, parts: &LiouvillianParts) -> Self {
        Self { model, parts: RealLiouvillianParts::new(parts) }
    }
}

impl Generator for RealLiouvillianGenerator<'_> {
    type Scalar = f64;

    fn dim(&self) -> usize {
        self.parts.coherent.nrows()
    }

    fn period(&self) -> f64 {
        self.model.period()
    }

    fn at(&self, t: f64) -> DMatrix<f64> {
        self.parts.at(self.model, t)
    }

    fn switch_times(&self) -> Option<Vec<f64>> {
        self.model.switch_times()
    }

    fn scale(&self) -> f64 {
        self.model.generator_scale()
    }
}

fn to_vectorized(model: &LindbladModel, g: &DMatrix<f64>) -> DMatrix<C64> {
    let u = hermitian_basis_matrix(model.dim());
    &u * g.map(|x| C64::new(x, 0.0)) * u.adjoint()
}

/// `G(T)` in the Hermitian operator basis `(traceless…, 𝟙/√N)`. Real, with
/// last row `(0, …, 0, 1)`.
pub fn one_period_propagator_real(
    model: &LindbladModel,
    steps: Steps,
    opts: &IntegratorOptions,
) -> Result<DMatrix<f64>> {
    model.validate()?;
    propagate(&RealLiouvillianGenerator::new(model), 0.0, model.period(), steps, opts)
}

/// `G(T)` acting on column-stacked density matrices, with the default
/// integrator settings.
pub fn one_period_propagator(model: &LindbladModel, steps: Steps) -> Result<DMatrix<C64>> {
    one_period_propagator_with(model, steps, &IntegratorOptions::default())
}

pub fn one_period_propagator_with(
    model: &LindbladModel,
    steps: Steps,
    opts: &IntegratorOptions,
) -> Result<DMatrix<C64>> {
    Ok(to_vectorized(model, &one_period_propagator_real(model, steps, opts)?))
}

/// Propagator over an arbitrary window `[t0, t1]`.
pub fn interval_propagator(
    model: &LindbladModel,
    t0: f64,
    t1: f64,
    steps: Steps,
    opts: &IntegratorOptions,
) -> Result<DMatrix<C64>> {
    model.validate()?;
    let g = propagate(&RealLiouvillianGenerator::new(model), t0, t1, steps, opts)?;
    Ok(to_vectorized(model, &g))
}

/// Spectral data of `G(T)` with the default integrator settings.
pub fn propagator_spectrum(model: &LindbladModel) -> Result<PropagatorSpectrum> {
    propagator_spectrum_with(model, &IntegratorOptions::default())
}

pub fn propagator_spectrum_with(model: &LindbladModel, opts: &IntegratorOptions) -> Result<PropagatorSpectrum> {
    spectrum_from_real(&one_period_propagator_real(model, Steps::Auto, opts)?, model.dim())
}

/// `G(T)` on column-stacked density matrices, built from pre-assembled
/// (possibly mutated) superoperator pieces.
#[doc(hidden)]
pub fn one_period_propagator_from_parts(
    model: &LindbladModel,
    parts: &LiouvillianParts,
    steps: Steps,
    opts: &IntegratorOptions,
) -> Result<DMatrix<C64>> {
    model.validate()?;
    let gen = RealLiouvillianGenerator::with_parts(model, parts);
    Ok(to_vectorized(model, &propagate(&gen, 0.0, model.period(), steps, opts)?))
}
