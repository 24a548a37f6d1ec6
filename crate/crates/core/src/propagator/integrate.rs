//! Time-ordered exponentials `𝕋 exp ∫ A(t) dt` of a periodic generator.
//!
//! Piecewise-constant generators are propagated exactly, one exponential per
//! constant segment. Smooth ones use exponential (commutator-free) steps:
//! every step is the exponential of a linear combination of generator
//! samples, so any left null vector of the generator (for a Liouvillian,
//! `vec(𝟙)†`) is preserved to rounding at every step count.

use nalgebra::{ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use super::expm::expm;
use crate::error::{Error, Result};

/// Step count for smooth generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Steps {
    /// Exact for piecewise-constant generators; otherwise double the step
    /// count until successive results agree to the tolerance.
    Auto,
    /// Exactly this many uniform steps, even for piecewise-constant inputs.
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `exp(Δt·A(t + Δt/2))`, second order.
    Midpoint,
    /// Two-exponential commutator-free Magnus step on Gauss nodes, fourth order.
    Magnus4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub scheme: Scheme,
    /// Max-norm agreement between successive step doublings.
    pub tolerance: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { scheme: Scheme::Magnus4, tolerance: 1e-10, max_steps: 1 << 20 }
    }
}

/// A periodic matrix-valued generator.
pub(crate) trait Generator {
    type Scalar: ComplexField<RealField = f64> + Copy;

    fn dim(&self) -> usize;

    fn period(&self) -> f64;

    fn at(&self, t: f64) -> DMatrix<Self::Scalar>;

    /// Switching instants in `[0, period)` if the generator is piecewise
    /// constant.
    fn switch_times(&self) -> Option<Vec<f64>>;

    /// Rough bound on `‖A(t)‖`.
    fn scale(&self) -> f64;
}

fn max_abs_diff<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (*x - *y).modulus()).fold(0.0, f64::max)
}

/// Segment boundaries of `[t0, t1]` for a piecewise-constant generator.
fn segment_bounds(t0: f64, t1: f64, period: f64, switches: &[f64]) -> Vec<f64> {
    let mut bounds = vec![t0];
    let first = (t0 / period).floor() as i64;
    let last = (t1 / period).ceil() as i64;
    for k in first..=last {
        let base = k as f64 * period;
        // period starts count as switches too
        for s in std::iter::once(0.0).chain(switches.iter().copied()) {
            let t = base + s;
            if t > t0 && t < t1 {
                bounds.push(t);
            }
        }
    }
    bounds.push(t1);
    bounds.sort_by(f64::total_cmp);
    bounds.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * period);
    bounds
}

fn exact_piecewise<G: Generator>(gen: &G, t0: f64, t1: f64, switches: &[f64]) -> Result<DMatrix<G::Scalar>> {
    let n = gen.dim();
    let mut u = DMatrix::<G::Scalar>::identity(n, n);
    for w in segment_bounds(t0, t1, gen.period(), switches).windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = gen.at(0.5 * (a + b)).map(|z| z * G::Scalar::from_real(b - a));
        u = expm(&step)? * u;
    }
    Ok(u)
}

fn stepped<G: Generator>(gen: &G, t0: f64, t1: f64, steps: usize, scheme: Scheme) -> Result<DMatrix<G::Scalar>> {
    let n = gen.dim();
    let h = (t1 - t0) / steps as f64;
    let mut u = DMatrix::<G::Scalar>::identity(n, n);
    let sqrt3_6 = 3f64.sqrt() / 6.0;
    let (c1, c2) = (0.5 - sqrt3_6, 0.5 + sqrt3_6);
    let (a1, a2) = (0.25 + sqrt3_6, 0.25 - sqrt3_6);
    for j in 0..steps {
        let t = t0 + j as f64 * h;
        match scheme {
            Scheme::Midpoint => {
                let step = gen.at(t + 0.5 * h).map(|z| z * G::Scalar::from_real(h));
                u = expm(&step)? * u;
            }
            Scheme::Magnus4 => {
                let early = gen.at(t + c1 * h);
                let late = gen.at(t + c2 * h);
                let first = early.zip_map(&late, |x, y| {
                    (x * G::Scalar::from_real(a1) + y * G::Scalar::from_real(a2)) * G::Scalar::from_real(h)
                });
                let second = early.zip_map(&late, |x, y| {
                    (x * G::Scalar::from_real(a2) + y * G::Scalar::from_real(a1)) * G::Scalar::from_real(h)
                });
                u = expm(&second)? * (expm(&first)? * u);
            }
        }
    }
    Ok(u)
}

/// Propagator over `[t0, t1]`.
pub(crate) fn propagate<G: Generator>(
    gen: &G,
    t0: f64,
    t1: f64,
    steps: Steps,
    opts: &IntegratorOptions,
) -> Result<DMatrix<G::Scalar>> {
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!("bad interval [{t0}, {t1}]")));
    }
    if t1 == t0 {
        return Ok(DMatrix::identity(gen.dim(), gen.dim()));
    }
    match steps {
        Steps::Fixed(0) => Err(Error::InvalidArgument("step count must be positive".into())),
        Steps::Fixed(k) => stepped(gen, t0, t1, k, opts.scheme),
        Steps::Auto => {
            if let Some(switches) = gen.switch_times() {
                return exact_piecewise(gen, t0, t1, &switches);
            }
            let span = t1 - t0;
            let initial = ((span * gen.scale()).ceil() as usize).clamp(4, opts.max_steps).next_power_of_two();
            let mut k = initial;
            let mut prev = stepped(gen, t0, t1, k, opts.scheme)?;
            loop {
                if k >= opts.max_steps {
                    return Err(Error::NotConverged { steps: k, last_delta: f64::NAN });
                }
                k *= 2;
                let next = stepped(gen, t0, t1, k, opts.scheme)?;
                let delta = max_abs_diff(&next, &prev);
                if delta < opts.tolerance {
                    return Ok(next);
                }
                if k >= opts.max_steps {
                    return Err(Error::NotConverged { steps: k, last_delta: delta });
                }
                prev = next;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar-like 2×2 rotation generator with time-dependent rate.
    struct Rotation {
        rate: fn(f64) -> f64,
        piecewise: Option<Vec<f64>>,
    }

    impl Generator for Rotation {
        type Scalar = f64;
        fn dim(&self) -> usize {
            2
        }
        fn period(&self) -> f64 {
            1.0
        }
        fn at(&self, t: f64) -> DMatrix<f64> {
            let w = (self.rate)(t);
            DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0])
        }
        fn switch_times(&self) -> Option<Vec<f64>> {
            self.piecewise.clone()
        }
        fn scale(&self) -> f64 {
            3.0
        }
    }

    fn rot(theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
    }

    #[test]
    fn commuting_generator_matches_integral() {
        // A(t) commutes with itself, so U = exp(∫A) exactly; ∫ 2+cos(2πt) over [0,1] = 2
        let g = Rotation { rate: |t| 2.0 + (std::f64::consts::TAU * t).cos(), piecewise: None };
        let u = propagate(&g, 0.0, 1.0, Steps::Auto, &IntegratorOptions::default()).unwrap();
        assert!(max_abs_diff(&u, &rot(2.0)) < 1e-10);
        let opts = IntegratorOptions { scheme: Scheme::Midpoint, ..Default::default() };
        let u = propagate(&g, 0.0, 1.0, Steps::Auto, &opts).unwrap();
        assert!(max_abs_diff(&u, &rot(2.0)) < 1e-9);
    }

    #[test]
    fn piecewise_exact_matches_fixed_steps() {
        let g = Rotation { rate: |t| if t.rem_euclid(1.0) < 0.5 { 3.0 } else { -1.0 }, piecewise: Some(vec![0.5]) };
        let exact = propagate(&g, 0.0, 1.0, Steps::Auto, &IntegratorOptions::default()).unwrap();
        assert!(max_abs_diff(&exact, &rot(1.0)) < 1e-14);
        let opts = IntegratorOptions { scheme: Scheme::Midpoint, ..Default::default() };
        let fixed = propagate(&g, 0.0, 1.0, Steps::Fixed(64), &opts).unwrap();
        assert!(max_abs_diff(&exact, &fixed) < 1e-13);
        // interval straddling a period boundary
        let u = propagate(&g, 0.25, 1.75, Steps::Auto, &IntegratorOptions::default()).unwrap();
        assert!(max_abs_diff(&u, &rot(0.75 - 0.5 + 1.5 - 0.25)) < 1e-14);
    }

    #[test]
    fn non_convergence_reports_delta() {
        let g = Rotation { rate: |t| 50.0 * (40.0 * t).sin(), piecewise: None };
        let opts = IntegratorOptions { max_steps: 16, tolerance: 1e-14, ..Default::default() };
        match propagate(&g, 0.0, 1.0, Steps::Auto, &opts) {
            Err(Error::NotConverged { steps, last_delta }) => {
                assert_eq!(steps, 16);
                assert!(last_delta > 1e-14);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn segments_cover_interval() {
        let b = segment_bounds(0.0, 2.0, 1.0, &[0.5]);
        assert_eq!(b, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}
