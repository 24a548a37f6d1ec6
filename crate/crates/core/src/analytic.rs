//! Closed-form exceptional-point predictions for the qubit families: the
//! coalescence condition of the square-wave-driven `σ₋` model, resonance
//! ladders, small-γ contour slopes and the static / fast-modulation limits.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DissipatorKind, ModelFamily};

/// Grid size for the sign-change pre-scan in α.
pub const ALPHA_GRID: usize = 10_000;
pub const ROOT_DEDUP: f64 = 1e-9;

/// Which coefficient is modulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    Drive,
    Dissipation,
}

impl Modulation {
    pub fn of(family: ModelFamily) -> Option<Self> {
        if family.is_drive_modulation() {
            Some(Self::Drive)
        } else if family.is_diss_modulation() {
            Some(Self::Dissipation)
        } else {
            None
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Drive => "drive",
            Self::Dissipation => "diss",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drive" => Ok(Self::Drive),
            "diss" | "dissipation" => Ok(Self::Dissipation),
            other => Err(Error::InvalidArgument(format!("unknown modulation {other:?}"))),
        }
    }
}

/// `1/cosh(x)` without overflow.
fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Coalescence condition of the square-wave drive divided by `cosh x`:
///
/// `tanh(x)·cos α·cos β + sin α·sin β − sign·sin β / cosh(x)`
///
/// with `γ₋ = 8 sin α`, `β = 2π cos α / Ω` and `x = πγ₋ / (4Ω)` (units of `J`).
pub fn contour_residual(alpha: f64, omega: f64, sign: f64) -> f64 {
    let x = 2.0 * PI * alpha.sin() / omega;
    let beta = 2.0 * PI * alpha.cos() / omega;
    x.tanh() * alpha.cos() * beta.cos() + alpha.sin() * beta.sin() - sign * beta.sin() * sech(x)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() { lo } else { hi }
}

/// All `γ₋` on the square-wave-drive EP contour at modulation frequency
/// `omega`, ascending.
///
/// α = π/2 solves the condition for every Ω without a coalescence (β = 0,
/// both sides vanish) and is excluded.
pub fn ep_contour_square_drive(omega: f64) -> Result<Vec<f64>> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!("omega must be finite and > 0, got {omega}")));
    }
    let mut roots = Vec::new();
    let h = FRAC_PI_2 / ALPHA_GRID as f64;
    for sign in [1.0, -1.0] {
        let f = |a: f64| contour_residual(a, omega, sign);
        let mut a0 = 0.5 * h;
        let mut f0 = f(a0);
        for k in 1..ALPHA_GRID {
            let a1 = (k as f64 + 0.5) * h;
            let f1 = f(a1);
            if f0 == 0.0 {
                roots.push(a0);
            } else if (f0 < 0.0) != (f1 < 0.0) {
                roots.push(bisect(f, a0, a1));
            }
            a0 = a1;
            f0 = f1;
        }
    }
    let mut gammas: Vec<f64> = roots.into_iter().map(|a| 8.0 * a.sin()).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup_by(|a, b| (*a - *b).abs() <= ROOT_DEDUP);
    Ok(gammas)
}

/// Smallest `|residual|` over both signs at `γ₋`.
pub fn contour_residual_at_gamma(gamma: f64, omega: f64) -> f64 {
    let alpha = (gamma / 8.0).clamp(-1.0, 1.0).asin();
    contour_residual(alpha, omega, 1.0).abs().min(contour_residual(alpha, omega, -1.0).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResonanceKind {
    /// Contour lines reach `γ → 0` here.
    Ep,
    /// Raised eigenmatrix overlap that stays below 1.
    EnhancedIp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub index: u32,
    pub omega: f64,
    pub kind: ResonanceKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceLadder {
    pub modulation: Modulation,
    pub dissipator: DissipatorKind,
    pub entries: Vec<LadderEntry>,
}

impl ResonanceLadder {
    pub fn ep_frequencies(&self) -> Vec<f64> {
        self.entries.iter().filter(|e| e.kind == ResonanceKind::Ep).map(|e| e.omega).collect()
    }
}

/// Resonances up to `max_index`.
///
/// Drive modulation: `Ω_n = 2/n`, `n = 1..=max_index`. Dissipation
/// modulation: odd subharmonics `Ω_m = 4/(2m+1)`, `m = 0..=max_index`,
/// followed by the even companions `4/(2m)`, `m = 1..=max_index`, marked
/// [`ResonanceKind::EnhancedIp`].
pub fn resonance_ladder(modulation: Modulation, dissipator: DissipatorKind, max_index: u32) -> Result<ResonanceLadder> {
    if max_index < 1 {
        return Err(Error::InvalidArgument("max_index must be at least 1".into()));
    }
    let entries = match modulation {
        Modulation::Drive => (1..=max_index)
            .map(|n| LadderEntry { index: n, omega: 2.0 / n as f64, kind: ResonanceKind::Ep })
            .collect(),
        Modulation::Dissipation => {
            let odd = (0..=max_index).map(|m| LadderEntry {
                index: m,
                omega: 4.0 / (2 * m + 1) as f64,
                kind: ResonanceKind::Ep,
            });
            let even = (1..=max_index).map(|m| LadderEntry {
                index: m,
                omega: 4.0 / (2 * m) as f64,
                kind: ResonanceKind::EnhancedIp,
            });
            odd.chain(even).collect()
        }
    };
    Ok(ResonanceLadder { modulation, dissipator, entries })
}

/// Small-γ slopes `dγ/dΩ` of the two contour lines leaving resonance
/// `index`, as `(+s, −s)`.
pub fn ep_slopes(modulation: Modulation, dissipator: DissipatorKind, index: u32) -> Result<(f64, f64)> {
    let s = match (modulation, dissipator) {
        (Modulation::Drive, _) if index == 0 => {
            return Err(Error::InvalidArgument("drive resonances start at index 1".into()))
        }
        (Modulation::Drive, DissipatorKind::Minus) => 4.0 * index as f64,
        (Modulation::Drive, DissipatorKind::Z) => index as f64,
        (Modulation::Dissipation, DissipatorKind::Minus) => 2.0 * PI * ((2 * index + 1) as f64).powi(2),
        (Modulation::Dissipation, DissipatorKind::Z) => 0.5 * PI * ((2 * index + 1) as f64).powi(2),
    };
    Ok((s, -s))
}

/// Static EP of `H = −Jσ_x` with a constant dissipator.
pub fn static_ep(dissipator: DissipatorKind) -> f64 {
    match dissipator {
        DissipatorKind::Minus => 8.0,
        DissipatorKind::Z => 2.0,
    }
}

/// `(γ_static, γ_fast)`: the EP strength for Ω → 0 and the line it settles
/// to for Ω → ∞, where the modulated coefficient is replaced by its period
/// average. Square waves use a half-period duty cycle; `delta` only enters
/// for `DriveCos`.
pub fn static_and_highfreq_eps(family: ModelFamily, dissipator: DissipatorKind, delta: f64) -> (f64, f64) {
    let g = static_ep(dissipator);
    match family {
        ModelFamily::Static => (g, g),
        // EP strength scales with the mean drive
        ModelFamily::DriveCos => (g, g * (2.0 - delta) / 2.0),
        ModelFamily::DriveSquare => (g, g * 0.5),
        // mean rate is half the nominal γ
        ModelFamily::DissCos | ModelFamily::DissSquare => (g, 2.0 * g),
    }
}
