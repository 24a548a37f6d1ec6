//! Bloch-vector form `ds/dt = A(t)s + b(t)` of single-qubit models driven by
//! `σ_x` and damped by `σ₋`, `σ₊` or `σ_z` channels.

use std::io::Write;

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LindbladModel, PeriodicSchedule};
use crate::propagator::{propagate, propagator_spectrum, Generator, IntegratorOptions, Steps};

const STRUCTURE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Channel {
    Lower,
    Raise,
    Dephase,
    Null,
}

/// Reduced model: `J(t) = drive·s_H(t)` and one rate per channel.
#[derive(Clone, Debug)]
pub struct BlochSystem {
    drive: f64,
    drive_schedule: PeriodicSchedule,
    channels: Vec<(Channel, f64, PeriodicSchedule)>,
    omega: f64,
    switches: Option<Vec<f64>>,
    scale: f64,
}

fn small(z: C64) -> bool {
    z.norm() <= STRUCTURE_TOL
}

fn classify(f: &DMatrix<C64>) -> Option<(Channel, f64)> {
    let (a, b, c, d) = (f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)]);
    if small(a) && small(c) && small(d) {
        return Some(if small(b) { (Channel::Null, 0.0) } else { (Channel::Lower, b.norm_sqr()) });
    }
    if small(a) && small(b) && small(d) {
        return Some((Channel::Raise, c.norm_sqr()));
    }
    if small(b) && small(c) {
        if small(a + d) {
            return Some((Channel::Dephase, a.norm_sqr()));
        }
        if small(a - d) {
            // multiples of the identity generate nothing
            return Some((Channel::Null, 0.0));
        }
    }
    None
}

impl BlochSystem {
    pub fn from_model(model: &LindbladModel) -> Result<Self> {
        model.validate()?;
        if model.dim() != 2 {
            return Err(Error::NoBlochReduction(format!("dimension {} is not a qubit", model.dim())));
        }
        let h = model.hamiltonian_op.as_matrix();
        let x = h[(0, 1)];
        if !(small(h[(0, 0)]) && small(h[(1, 1)]) && small(h[(1, 0)] - x) && x.im.abs() <= STRUCTURE_TOL) {
            return Err(Error::NoBlochReduction("Hamiltonian is not proportional to σ_x".into()));
        }
        let mut channels = Vec::with_capacity(model.dissipators.len());
        for (k, d) in model.dissipators.iter().enumerate() {
            let (ch, w) = classify(d.op.as_matrix()).ok_or_else(|| {
                Error::NoBlochReduction(format!("dissipator {k} is not a multiple of σ₋, σ₊ or σ_z"))
            })?;
            channels.push((ch, w, d.schedule));
        }
        Ok(Self {
            // H = x·s(t)·σ_x = −J(t)σ_x
            drive: -x.re,
            drive_schedule: model.hamiltonian_schedule,
            channels,
            omega: model.omega,
            switches: model.switch_times(),
            scale: model.generator_scale(),
        })
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }

    pub fn drive_at(&self, t: f64) -> f64 {
        self.drive * self.drive_schedule.value(t)
    }

    /// `(γ₋, γ₊, γ_z)` at time `t`.
    pub fn rates_at(&self, t: f64) -> (f64, f64, f64) {
        let mut r = (0.0, 0.0, 0.0);
        for (ch, w, s) in &self.channels {
            let g = w * s.value(t);
            match ch {
                Channel::Lower => r.0 += g,
                Channel::Raise => r.1 += g,
                Channel::Dephase => r.2 += g,
                Channel::Null => {}
            }
        }
        r
    }

    pub fn a_at(&self, t: f64) -> Matrix3<f64> {
        let j = self.drive_at(t);
        let (gm, gp, gz) = self.rates_at(t);
        let perp = 0.5 * (gm + gp) + 2.0 * gz;
        Matrix3::new(
            -perp, 0.0, 0.0,
            0.0, -perp, 2.0 * j,
            0.0, -2.0 * j, -(gm + gp),
        )
    }

    pub fn b_at(&self, t: f64) -> Vector3<f64> {
        let (gm, gp, _) = self.rates_at(t);
        Vector3::new(0.0, 0.0, gm - gp)
    }
}

/// `[[A, b], [0, 0]]`, so that `(s, 1)` evolves linearly.
struct Augmented<'a>(&'a BlochSystem);

impl Generator for Augmented<'_> {
    type Scalar = f64;

    fn dim(&self) -> usize {
        4
    }

    fn period(&self) -> f64 {
        self.0.period()
    }

    fn at(&self, t: f64) -> DMatrix<f64> {
        let a = self.0.a_at(t);
        let b = self.0.b_at(t);
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (3, 3)).copy_from(&a);
        m.view_mut((0, 3), (3, 1)).copy_from(&b);
        m
    }

    fn switch_times(&self) -> Option<Vec<f64>> {
        self.0.switches.clone()
    }

    fn scale(&self) -> f64 {
        self.0.scale
    }
}

/// Affine one-period map `s(T) = B(T)s(0) + c(T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPropagator {
    pub b_matrix: Matrix3<f64>,
    pub affine_part: Vector3<f64>,
    pub lambda1: f64,
}

impl BlochPropagator {
    /// Lower-right `(s_y, s_z)` block.
    pub fn b2(&self) -> Matrix2<f64> {
        self.b_matrix.fixed_view::<2, 2>(1, 1).into_owned()
    }

    /// Eigenvalues of `B₂(T)`, larger real part first.
    pub fn b2_eigenvalues(&self) -> [C64; 2] {
        let b = self.b2();
        let half_tr = 0.5 * (b[(0, 0)] + b[(1, 1)]);
        let disc = C64::new(0.25 * (b[(0, 0)] - b[(1, 1)]).powi(2) + b[(0, 1)] * b[(1, 0)], 0.0);
        let r = disc.sqrt();
        [half_tr + r, half_tr - r]
    }

    pub fn eigenvalues(&self) -> [C64; 3] {
        let [l2, l3] = self.b2_eigenvalues();
        [C64::new(self.lambda1, 0.0), l2, l3]
    }

    /// Stroboscopic fixed point `(𝟙 − B)⁻¹c`, if `1` is not an eigenvalue.
    pub fn fixed_point(&self) -> Option<Vector3<f64>> {
        (Matrix3::identity() - self.b_matrix).lu().solve(&self.affine_part)
    }
}

pub fn bloch_propagator(sys: &BlochSystem, steps: Steps) -> Result<BlochPropagator> {
    bloch_propagator_with(sys, steps, &IntegratorOptions::default())
}

pub fn bloch_propagator_with(sys: &BlochSystem, steps: Steps, opts: &IntegratorOptions) -> Result<BlochPropagator> {
    let m = propagate(&Augmented(sys), 0.0, sys.period(), steps, opts)?;
    let b_matrix: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
    let affine_part = Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]);
    Ok(BlochPropagator { lambda1: b_matrix[(0, 0)], b_matrix, affine_part })
}

#[derive(Clone, Debug, Serialize)]
pub struct CrosscheckReport {
    pub liouvillian: Vec<C64>,
    /// `{1} ∪ eig(B(T))`, ordered to match `liouvillian`.
    pub bloch: Vec<C64>,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl CrosscheckReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Compares the spectrum of `G(T)` with `{1} ∪ eig(B(T))` under the best
/// one-to-one pairing.
pub fn spectral_crosscheck(model: &LindbladModel) -> Result<CrosscheckReport> {
    let sys = BlochSystem::from_model(model)?;
    let bp = bloch_propagator(&sys, Steps::Auto)?;
    let g = propagator_spectrum(model)?;
    let mut bloch = vec![C64::new(1.0, 0.0)];
    bloch.extend(bp.eigenvalues());
    let liouvillian = g.eigenvalues;
    let mut best = (f64::INFINITY, Vec::new());
    for p in permutations(4) {
        let dev = p.iter().enumerate().map(|(i, &j)| (liouvillian[i] - bloch[j]).norm()).fold(0.0, f64::max);
        if dev < best.0 {
            best = (dev, p);
        }
    }
    let bloch = best.1.iter().map(|&j| bloch[j]).collect();
    Ok(CrosscheckReport { liouvillian, bloch, max_deviation: best.0, tolerance: 1e-8 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub s_z: f64,
}

impl TrajectorySample {
    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.s_x, self.s_y, self.s_z)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for s in &self.samples {
            wr.serialize(s).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let samples = rd.deserialize().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)?;
        Ok(Self { samples })
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("CSV: {other:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    pub t_end: f64,
    pub sample_dt: f64,
    /// Only report `t = nT`.
    pub stroboscopic: bool,
}

/// Integrates the Bloch equation from `s0`.
///
/// Samples sit at `k·sample_dt`, or at exact multiples of the period when
/// stroboscopic. Piecewise-constant systems are propagated exactly between
/// samples; smooth ones take at least 16 fourth-order steps per sample.
pub fn trajectory(sys: &BlochSystem, s0: Vector3<f64>, opts: &TrajectoryOptions) -> Result<Trajectory> {
    let TrajectoryOptions { t_end, sample_dt, stroboscopic } = *opts;
    if !(sample_dt > 0.0 && sample_dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("sample_dt must be positive, got {sample_dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if s0.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!("|s0| = {} lies outside the Bloch ball", s0.norm())));
    }
    let sample = |t: f64, s: &Vector3<f64>| TrajectorySample { t, s_x: s.x, s_y: s.y, s_z: s.z };
    let mut samples = vec![sample(0.0, &s0)];
    let integ = IntegratorOptions::default();

    if stroboscopic {
        let period = sys.period();
        let bp = bloch_propagator(sys, Steps::Auto)?;
        let n = (t_end / period + 1e-9).floor() as usize;
        let mut s = s0;
        for k in 1..=n {
            s = bp.b_matrix * s + bp.affine_part;
            samples.push(sample(k as f64 * period, &s));
        }
        return Ok(Trajectory { samples });
    }

    let n = (t_end / sample_dt + 1e-9).floor() as usize;
    let steps = if sys.switches.is_some() {
        Steps::Auto
    } else {
        Steps::Fixed(16.max((sample_dt * sys.scale * 4.0).ceil() as usize))
    };
    let gen = Augmented(sys);
    let mut s = s0;
    for k in 1..=n {
        let (t0, t1) = ((k - 1) as f64 * sample_dt, k as f64 * sample_dt);
        let m = propagate(&gen, t0, t1, steps, &integ)?;
        let v = m.view((0, 0), (3, 3)) * s + m.view((0, 3), (3, 1));
        s = Vector3::new(v[0], v[1], v[2]);
        samples.push(sample(t1, &s));
    }
    Ok(Trajectory { samples })
}
