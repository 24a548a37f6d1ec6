//! Operators, periodic schedules and the Lindblad problem definition.
//!
//! All quantities are in units of the drive strength `J = 1`; dissipation
//! strengths and modulation frequencies are dimensionless multiples of it.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the entrywise Hermiticity check of the Hamiltonian operator.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Square N×N complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries_row_major(&self) -> Vec<C64> {
        self.0.transpose().iter().copied().collect()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    /// Largest entrywise modulus of `M - M†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl From<ComplexMatrix> for DMatrix<C64> {
    fn from(m: ComplexMatrix) -> Self {
        m.0
    }
}

/// Wire form: `{"dim": n, "re": [...], "im": [...]}` in row-major order, or a
/// bare operator name such as `"minus"` when reading.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Named(String),
    Explicit {
        dim: usize,
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self.entries_row_major();
        MatrixRepr::Explicit {
            dim: self.dim(),
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match MatrixRepr::deserialize(d)? {
            MatrixRepr::Named(name) => pauli_by_name(&name).map_err(D::Error::custom),
            MatrixRepr::Explicit { dim, re, im } => {
                let im = if im.is_empty() { vec![0.0; re.len()] } else { im };
                if im.len() != re.len() {
                    return Err(D::Error::custom("re and im lengths differ"));
                }
                let entries: Vec<C64> = re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect();
                ComplexMatrix::from_row_major(dim, &entries).map_err(D::Error::custom)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliName {
    X,
    Y,
    Z,
    Plus,
    Minus,
    Identity,
}

impl FromStr for PauliName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" | "sx" | "sigma_x" => Ok(Self::X),
            "y" | "sy" | "sigma_y" => Ok(Self::Y),
            "z" | "sz" | "sigma_z" => Ok(Self::Z),
            "plus" | "+" | "sigma_plus" => Ok(Self::Plus),
            "minus" | "-" | "sigma_minus" => Ok(Self::Minus),
            "identity" | "id" | "i" => Ok(Self::Identity),
            other => Err(Error::InvalidArgument(format!("unknown Pauli operator {other:?}"))),
        }
    }
}

/// The 2×2 operators in the basis where `σ_z = diag(1, -1)`.
///
/// `σ₋` is `[[0,1],[0,0]]`: it lowers the `σ_z = -1` state into the `σ_z = +1`
/// state, so the spontaneous-emission fixed point sits at Bloch vector
/// `(0, 0, +1)`. `σ₊` is its adjoint.
pub fn pauli(name: PauliName) -> ComplexMatrix {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let entries = match name {
        PauliName::X => [o, l, l, o],
        PauliName::Y => [o, -i, i, o],
        PauliName::Z => [l, o, o, -l],
        PauliName::Plus => [o, o, l, o],
        PauliName::Minus => [o, l, o, o],
        PauliName::Identity => [l, o, o, l],
    };
    ComplexMatrix(DMatrix::from_row_slice(2, 2, &entries))
}

/// Parses an operator name; see [`PauliName`].
pub fn pauli_by_name(name: &str) -> Result<ComplexMatrix> {
    name.parse().map(pauli)
}

fn default_duty() -> f64 {
    0.5
}

/// A real, time-periodic scalar waveform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PeriodicSchedule {
    Constant {
        base: f64,
    },
    /// `(base/2)·[(2-δ) + δ·cos(Ωt)]`
    OffsetCosine {
        base: f64,
        delta: f64,
        omega: f64,
    },
    /// `base` during the first `duty` fraction of each period, zero after.
    SquareWave {
        base: f64,
        omega: f64,
        #[serde(default = "default_duty")]
        duty: f64,
    },
}

impl PeriodicSchedule {
    pub fn constant(base: f64) -> Self {
        Self::Constant { base }
    }

    pub fn offset_cosine(base: f64, delta: f64, omega: f64) -> Self {
        Self::OffsetCosine { base, delta, omega }
    }

    pub fn square_wave(base: f64, omega: f64) -> Self {
        Self::SquareWave { base, omega, duty: 0.5 }
    }

    /// Modulation frequency, `None` for a constant.
    pub fn omega(&self) -> Option<f64> {
        match *self {
            Self::Constant { .. } => None,
            Self::OffsetCosine { omega, .. } | Self::SquareWave { omega, .. } => Some(omega),
        }
    }

    pub fn base(&self) -> f64 {
        match *self {
            Self::Constant { base } | Self::OffsetCosine { base, .. } | Self::SquareWave { base, .. } => {
                base
            }
        }
    }

    /// Waveform value at time `t`. Time is reduced to one period before the
    /// waveform is evaluated.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { base } => base,
            Self::OffsetCosine { base, delta, omega } => {
                let period = TAU / omega;
                let tau = t.rem_euclid(period);
                0.5 * base * ((2.0 - delta) + delta * (omega * tau).cos())
            }
            Self::SquareWave { base, omega, duty } => {
                let period = TAU / omega;
                let tau = t.rem_euclid(period);
                if tau < duty * period {
                    base
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact average over one period.
    pub fn period_average(&self) -> f64 {
        match *self {
            Self::Constant { base } => base,
            Self::OffsetCosine { base, delta, .. } => 0.5 * base * (2.0 - delta),
            Self::SquareWave { base, duty, .. } => base * duty,
        }
    }

    /// Exact minimum over one period.
    pub fn min_value(&self) -> f64 {
        match *self {
            Self::Constant { base } => base,
            Self::OffsetCosine { base, delta, .. } => {
                let a = 0.5 * base * 2.0;
                let b = 0.5 * base * (2.0 - 2.0 * delta);
                a.min(b)
            }
            Self::SquareWave { base, .. } => base.min(0.0),
        }
    }

    /// Exact maximum over one period.
    pub fn max_value(&self) -> f64 {
        match *self {
            Self::Constant { base } => base,
            Self::OffsetCosine { base, delta, .. } => {
                let a = 0.5 * base * 2.0;
                let b = 0.5 * base * (2.0 - 2.0 * delta);
                a.max(b)
            }
            Self::SquareWave { base, .. } => base.max(0.0),
        }
    }

    /// Switching instants within one period if the waveform is piecewise
    /// constant, `None` for a smooth time dependence.
    pub fn switch_fractions(&self) -> Option<Vec<f64>> {
        match *self {
            Self::Constant { .. } => Some(Vec::new()),
            Self::OffsetCosine { delta, .. } if delta == 0.0 => Some(Vec::new()),
            Self::OffsetCosine { .. } => None,
            Self::SquareWave { duty, .. } => Some(vec![duty]),
        }
    }

    fn check_parameters(&self) -> Option<String> {
        match *self {
            Self::Constant { base } if !base.is_finite() => Some("non-finite base".into()),
            Self::OffsetCosine { base, delta, omega }
                if !(base.is_finite() && delta.is_finite() && omega.is_finite()) =>
            {
                Some("non-finite parameter".into())
            }
            Self::OffsetCosine { omega, .. } if omega <= 0.0 => Some(format!("omega {omega} must be > 0")),
            Self::SquareWave { base, omega, duty } if !(base.is_finite() && omega.is_finite()) => {
                let _ = duty;
                Some("non-finite parameter".into())
            }
            Self::SquareWave { omega, .. } if omega <= 0.0 => Some(format!("omega {omega} must be > 0")),
            Self::SquareWave { duty, .. } if !(duty > 0.0 && duty < 1.0) => {
                Some(format!("duty {duty} must lie in (0, 1)"))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dissipator {
    pub op: ComplexMatrix,
    pub schedule: PeriodicSchedule,
}

/// Hamiltonian `H_S(t) = J(t)·hamiltonian_op` plus dissipators `(F_k, γ_k(t))`
/// sharing a single modulation frequency `omega`.
///
/// For fully static models `omega` is a reference frequency that only fixes
/// the period over which the propagator is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladModel {
    pub hamiltonian_op: ComplexMatrix,
    pub hamiltonian_schedule: PeriodicSchedule,
    pub dissipators: Vec<Dissipator>,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelViolation {
    NonHermitianHamiltonian { residual: f64 },
    NegativeDissipation { index: usize, min_value: f64 },
    MismatchedOmega { component: String, omega: f64, model_omega: f64 },
    DimensionMismatch { component: String, dim: usize, expected: usize },
    BadOmega(f64),
    BadSchedule { component: String, reason: String },
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonHermitianHamiltonian { residual } => {
                write!(f, "non-Hermitian Hamiltonian (residual {residual:e})")
            }
            Self::NegativeDissipation { index, min_value } => {
                write!(f, "negative dissipation in dissipator {index} (minimum {min_value})")
            }
            Self::MismatchedOmega { component, omega, model_omega } => {
                write!(f, "{component} has omega {omega}, model omega is {model_omega}")
            }
            Self::DimensionMismatch { component, dim, expected } => {
                write!(f, "{component} has dimension {dim}, expected {expected}")
            }
            Self::BadOmega(w) => write!(f, "model omega {w} must be finite and > 0"),
            Self::BadSchedule { component, reason } => write!(f, "{component}: {reason}"),
        }
    }
}

impl LindbladModel {
    pub fn dim(&self) -> usize {
        self.hamiltonian_op.dim()
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    /// Every invariant violation, empty for a valid model.
    pub fn violations(&self) -> Vec<ModelViolation> {
        let mut out = Vec::new();
        let n = self.dim();
        if !(self.omega.is_finite() && self.omega > 0.0) {
            out.push(ModelViolation::BadOmega(self.omega));
        }
        let residual = self.hamiltonian_op.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            out.push(ModelViolation::NonHermitianHamiltonian { residual });
        }
        let check_schedule = |name: String, s: &PeriodicSchedule, out: &mut Vec<ModelViolation>| {
            if let Some(reason) = s.check_parameters() {
                out.push(ModelViolation::BadSchedule { component: name.clone(), reason });
            }
            if let Some(w) = s.omega() {
                if (w - self.omega).abs() > 1e-12 * self.omega.abs().max(1.0) {
                    out.push(ModelViolation::MismatchedOmega {
                        component: name,
                        omega: w,
                        model_omega: self.omega,
                    });
                }
            }
        };
        check_schedule("hamiltonian schedule".into(), &self.hamiltonian_schedule, &mut out);
        for (k, d) in self.dissipators.iter().enumerate() {
            if d.op.dim() != n {
                out.push(ModelViolation::DimensionMismatch {
                    component: format!("dissipator {k}"),
                    dim: d.op.dim(),
                    expected: n,
                });
            }
            check_schedule(format!("dissipator {k} schedule"), &d.schedule, &mut out);
            let min_value = d.schedule.min_value();
            if min_value < 0.0 {
                out.push(ModelViolation::NegativeDissipation { index: k, min_value });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }

    /// Merged switching instants in `[0, T)` if every schedule is piecewise
    /// constant.
    pub fn switch_times(&self) -> Option<Vec<f64>> {
        let period = self.period();
        let mut fractions = self.hamiltonian_schedule.switch_fractions()?;
        for d in &self.dissipators {
            fractions.extend(d.schedule.switch_fractions()?);
        }
        fractions.sort_by(f64::total_cmp);
        fractions.dedup();
        Some(fractions.into_iter().map(|f| f * period).collect())
    }

    /// Largest dissipation strength reached over a period.
    pub fn max_dissipation(&self) -> f64 {
        self.dissipators
            .iter()
            .map(|d| d.schedule.max_value().abs())
            .fold(0.0, f64::max)
    }

    /// Upper bound for `‖ℒ(t)‖` used to size integration steps.
    pub(crate) fn generator_scale(&self) -> f64 {
        let h = self.hamiltonian_schedule.max_value().abs().max(self.hamiltonian_schedule.min_value().abs());
        let hn: f64 = self.hamiltonian_op.as_matrix().iter().map(|z| z.norm()).sum();
        let dn: f64 = self
            .dissipators
            .iter()
            .map(|d| {
                let f: f64 = d.op.as_matrix().iter().map(|z| z.norm_sqr()).sum();
                d.schedule.max_value().abs() * f
            })
            .sum();
        2.0 * h * hn + 2.0 * dn
    }
}

/// How the model is modulated in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    /// Constant drive and dissipation.
    Static,
    /// `J(t) = (J/2)[(2-δ) + δ cos Ωt]`, constant dissipation.
    DriveCos,
    /// `J(t) = J·Square(Ωt)`, constant dissipation.
    DriveSquare,
    /// `γ(t) = (γ/2)[1 + cos Ωt]`, constant drive.
    DissCos,
    /// `γ(t) = γ·Square(Ωt)`, constant drive.
    DissSquare,
}

impl ModelFamily {
    pub const MODULATED: [ModelFamily; 4] =
        [Self::DriveCos, Self::DriveSquare, Self::DissCos, Self::DissSquare];

    pub fn is_drive_modulation(self) -> bool {
        matches!(self, Self::DriveCos | Self::DriveSquare)
    }

    pub fn is_diss_modulation(self) -> bool {
        matches!(self, Self::DissCos | Self::DissSquare)
    }

    pub fn is_square(self) -> bool {
        matches!(self, Self::DriveSquare | Self::DissSquare)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Static => "static",
            Self::DriveCos => "drive-cos",
            Self::DriveSquare => "drive-square",
            Self::DissCos => "diss-cos",
            Self::DissSquare => "diss-square",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Self::Static),
            "drive-cos" => Ok(Self::DriveCos),
            "drive-square" => Ok(Self::DriveSquare),
            "diss-cos" => Ok(Self::DissCos),
            "diss-square" => Ok(Self::DissSquare),
            other => Err(Error::InvalidArgument(format!("unknown model family {other:?}"))),
        }
    }
}

/// The single dissipator channel of a family model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DissipatorKind {
    /// Spontaneous emission, `F = σ₋`.
    Minus,
    /// Phase noise, `F = σ_z`.
    Z,
}

impl DissipatorKind {
    pub const ALL: [DissipatorKind; 2] = [Self::Minus, Self::Z];

    pub fn operator(self) -> ComplexMatrix {
        match self {
            Self::Minus => pauli(PauliName::Minus),
            Self::Z => pauli(PauliName::Z),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Minus => "minus",
            Self::Z => "z",
        }
    }
}

impl fmt::Display for DissipatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DissipatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minus" | "sigma-minus" => Ok(Self::Minus),
            "z" | "sigma-z" => Ok(Self::Z),
            other => Err(Error::InvalidArgument(format!("unknown dissipator {other:?}"))),
        }
    }
}

/// Parameters selecting one member of a model family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub family: ModelFamily,
    pub dissipator: DissipatorKind,
    pub gamma: f64,
    pub omega: f64,
    /// Drive modulation depth; only read by `DriveCos`.
    pub delta: f64,
    pub duty: f64,
}

impl FamilyPoint {
    pub fn new(family: ModelFamily, dissipator: DissipatorKind, gamma: f64, omega: f64) -> Self {
        Self { family, dissipator, gamma, omega, delta: 1.0, duty: 0.5 }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// The qubit model `H_S = -J(t)σ_x` with a single dissipator.
    pub fn build(&self) -> LindbladModel {
        let Self { family, dissipator, gamma, omega, delta, duty } = *self;
        let drive = match family {
            ModelFamily::DriveCos => PeriodicSchedule::offset_cosine(1.0, delta, omega),
            ModelFamily::DriveSquare => PeriodicSchedule::SquareWave { base: 1.0, omega, duty },
            _ => PeriodicSchedule::constant(1.0),
        };
        let strength = match family {
            ModelFamily::DissCos => PeriodicSchedule::offset_cosine(gamma, 1.0, omega),
            ModelFamily::DissSquare => PeriodicSchedule::SquareWave { base: gamma, omega, duty },
            _ => PeriodicSchedule::constant(gamma),
        };
        LindbladModel {
            hamiltonian_op: pauli(PauliName::X).scale(-1.0),
            hamiltonian_schedule: drive,
            dissipators: vec![Dissipator { op: dissipator.operator(), schedule: strength }],
            omega,
        }
    }
}
