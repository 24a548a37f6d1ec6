//! Rectangular `(γ, Ω)` sweeps, EP contour extraction and contour geometry.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epmetrics::{observe, postselected_splitting, Damping, EpObservables, DEFAULT_EP_THRESHOLD, DEFAULT_REALITY_TOL};
use crate::error::{Error, Result};
use crate::model::{DissipatorKind, FamilyPoint, ModelFamily};
use crate::propagator::{propagator_spectrum_with, IntegratorOptions};

/// Column header of the sweep CSV.
pub const SWEEP_CSV_HEADER: [&str; 14] = [
    "gamma",
    "omega",
    "ip",
    "damping",
    "n_real_transients",
    "lambda_re_1",
    "lambda_re_2",
    "lambda_re_3",
    "lambda_re_4",
    "lambda_im_1",
    "lambda_im_2",
    "lambda_im_3",
    "lambda_im_4",
    "flags",
];

pub const CONTOUR_CSV_HEADER: [&str; 4] = ["gamma", "omega", "ip", "source"];

pub const FLAG_DEGENERATE: &str = "degenerate-unreliable";

/// Largest relative eigenvalue gap still treated as a possible coalescence
/// when scanning for contour candidates between grid points.
const GAP_FLOOR: f64 = 0.5;
/// Grid maxima of the metric at or above this are polished towards the peak.
const PEAK_FLOOR: f64 = 0.9;
/// Refinement stops early once the metric is this close to 1.
const IP_SETTLED: f64 = 1.0 - 1e-9;

/// Inclusive uniform grid written `lo:hi:count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridRange {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let r = Self { lo, hi, count };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("range {self} has non-finite bounds")));
        }
        if self.count < 2 {
            return Err(Error::InvalidArgument(format!("range {self} needs at least 2 points")));
        }
        if self.lo >= self.hi {
            return Err(Error::InvalidArgument(format!("range {self} needs lo < hi")));
        }
        Ok(())
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.value(k)).collect()
    }

    pub fn pitch(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl fmt::Display for GridRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.count)
    }
}

impl FromStr for GridRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected lo:hi:count, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi, count)
    }
}

fn default_delta() -> f64 {
    1.0
}

fn default_reality_tol() -> f64 {
    DEFAULT_REALITY_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: ModelFamily,
    pub dissipator: DissipatorKind,
    pub gamma: GridRange,
    pub omega: GridRange,
    /// Drive modulation depth; only read by `drive-cos`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_reality_tol")]
    pub reality_tol: f64,
    #[serde(default)]
    pub integrator: IntegratorOptions,
}

impl SweepSpec {
    pub fn new(family: ModelFamily, dissipator: DissipatorKind, gamma: GridRange, omega: GridRange) -> Self {
        Self {
            family,
            dissipator,
            gamma,
            omega,
            delta: 1.0,
            reality_tol: DEFAULT_REALITY_TOL,
            integrator: IntegratorOptions::default(),
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == ModelFamily::Static {
            return Err(Error::InvalidArgument("sweeps need a modulated family".into()));
        }
        self.gamma.validate()?;
        self.omega.validate()?;
        if self.gamma.lo < 0.0 {
            return Err(Error::InvalidArgument(format!("gamma range {} goes negative", self.gamma)));
        }
        if self.omega.lo <= 0.0 {
            return Err(Error::InvalidArgument(format!("omega range {} must stay above 0", self.omega)));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidArgument("delta must be finite".into()));
        }
        if !(self.reality_tol > 0.0) {
            return Err(Error::InvalidArgument("reality_tol must be > 0".into()));
        }
        Ok(())
    }

    pub fn point(&self, gamma: f64, omega: f64) -> FamilyPoint {
        FamilyPoint::new(self.family, self.dissipator, gamma, omega).with_delta(self.delta)
    }

    /// Observables of a single parameter point, on or off the grid.
    pub fn evaluate(&self, gamma: f64, omega: f64) -> Result<EpObservables> {
        evaluate_point(&self.point(gamma, omega), &self.integrator, self.reality_tol)
    }
}

pub fn evaluate_point(p: &FamilyPoint, opts: &IntegratorOptions, reality_tol: f64) -> Result<EpObservables> {
    let m = p.build();
    let s = propagator_spectrum_with(&m, opts)?;
    observe(&s, m.max_dissipation(), reality_tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub gamma: f64,
    pub omega: f64,
    pub outcome: std::result::Result<EpObservables, String>,
}

impl Cell {
    pub fn observables(&self) -> Option<&EpObservables> {
        self.outcome.as_ref().ok()
    }

    pub fn ip(&self) -> Option<f64> {
        self.observables().map(|o| o.ip)
    }

    /// Observables usable for contour work: no error and no exact
    /// coherent degeneracy.
    fn reliable(&self) -> Option<&EpObservables> {
        self.observables().filter(|o| !o.degenerate)
    }
}

/// Sweep result, cells in row-major order `i_γ · n_Ω + j_Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDiagram {
    pub spec: SweepSpec,
    pub cells: Vec<Cell>,
}

impl PhaseDiagram {
    pub fn n_gamma(&self) -> usize {
        self.spec.gamma.count
    }

    pub fn n_omega(&self) -> usize {
        self.spec.omega.count
    }

    pub fn cell(&self, i_gamma: usize, j_omega: usize) -> &Cell {
        &self.cells[i_gamma * self.n_omega() + j_omega]
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    /// Cell with the largest metric, ignoring failed and degenerate cells.
    pub fn argmax_ip(&self) -> Option<&Cell> {
        self.cells
            .iter()
            .filter(|c| c.reliable().is_some())
            .max_by(|a, b| a.ip().unwrap().total_cmp(&b.ip().unwrap()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_cells_csv(&self.cells, w)
    }
}

/// Evaluates every grid cell. Cells are independent; failures are recorded
/// per cell and the sweep carries on. Output order is fixed by the grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<PhaseDiagram> {
    spec.validate()?;
    let (gs, ws) = (spec.gamma.values(), spec.omega.values());
    let nw = ws.len();
    let cells = (0..gs.len() * nw)
        .into_par_iter()
        .map(|k| {
            let (gamma, omega) = (gs[k / nw], ws[k % nw]);
            Cell { gamma, omega, outcome: spec.evaluate(gamma, omega).map_err(|e| e.to_string()) }
        })
        .collect();
    Ok(PhaseDiagram { spec: spec.clone(), cells })
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    crate::bloch::csv_err(e)
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes cells in the sweep CSV format. Failed cells carry `NaN` values and
/// an `error: …` flag.
pub fn write_cells_csv<W: Write>(cells: &[Cell], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(SWEEP_CSV_HEADER).map_err(csv_err)?;
    for c in cells {
        let mut rec = vec![fmt_f64(c.gamma), fmt_f64(c.omega)];
        match &c.outcome {
            Ok(o) => {
                rec.push(fmt_f64(o.ip));
                rec.push(o.damping.as_str().to_string());
                rec.push(o.n_real_transients.to_string());
                for k in 0..4 {
                    rec.push(fmt_f64(o.eigenvalues.get(k).map_or(f64::NAN, |l| l.re)));
                }
                for k in 0..4 {
                    rec.push(fmt_f64(o.eigenvalues.get(k).map_or(f64::NAN, |l| l.im)));
                }
                rec.push(if o.degenerate { FLAG_DEGENERATE.to_string() } else { String::new() });
            }
            Err(msg) => {
                rec.push("NaN".into());
                rec.push(String::new());
                rec.push(String::new());
                rec.extend(std::iter::repeat("NaN".to_string()).take(8));
                rec.push(format!("error: {msg}"));
            }
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One parsed line of a sweep CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub omega: f64,
    pub ip: f64,
    pub damping: Option<Damping>,
    pub n_real_transients: Option<usize>,
    pub eigenvalues: [C64; 4],
    pub flags: Vec<String>,
}

fn parse_field<T: FromStr>(rec: &csv::StringRecord, k: usize) -> Result<T> {
    let raw = rec.get(k).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::InvalidArgument(format!("column {} holds {raw:?}", SWEEP_CSV_HEADER[k])))
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SWEEP_CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidArgument(format!("unexpected sweep header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let damping = match rec.get(3).unwrap_or("") {
            "" => None,
            "overdamped" => Some(Damping::Overdamped),
            "underdamped" => Some(Damping::Underdamped),
            other => return Err(Error::InvalidArgument(format!("unknown damping {other:?}"))),
        };
        let n_real_transients = match rec.get(4).unwrap_or("") {
            "" => None,
            _ => Some(parse_field(&rec, 4)?),
        };
        let mut eigenvalues = [C64::new(0.0, 0.0); 4];
        for (k, l) in eigenvalues.iter_mut().enumerate() {
            *l = C64::new(parse_field(&rec, 5 + k)?, parse_field(&rec, 9 + k)?);
        }
        let flags = rec.get(13).unwrap_or("");
        rows.push(SweepRow {
            gamma: parse_field(&rec, 0)?,
            omega: parse_field(&rec, 1)?,
            ip: parse_field(&rec, 2)?,
            damping,
            n_real_transients,
            eigenvalues,
            flags: if flags.is_empty() { Vec::new() } else { flags.split('|').map(str::to_string).collect() },
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// contours

/// Direction along which contour crossings are searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourAxis {
    /// Along γ, one search per Ω column.
    Gamma,
    /// Along Ω, one search per γ row.
    Omega,
    /// Both searches, merged. Steep branches are only crossed along Ω and
    /// shallow ones only along γ.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourSource {
    /// Local metric maximum on the grid, parabolic sub-grid position.
    GridPeak,
    /// Located between grid points by re-evaluating the model.
    Refined,
}

impl ContourSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GridPeak => "grid-peak",
            Self::Refined => "refined",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub gamma: f64,
    pub omega: f64,
    pub ip: f64,
    pub source: ContourSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourOptions {
    pub threshold: f64,
    pub axis: ContourAxis,
    /// Also locate coalescences between grid points: damping transitions are
    /// bisected and eigenvalue-gap minima are polished, then kept when the
    /// metric at the located point reaches `threshold`.
    pub refine: bool,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self { threshold: DEFAULT_EP_THRESHOLD, axis: ContourAxis::Gamma, refine: true }
    }
}

/// Grid-only extraction: per Ω column, local maxima of the metric over γ at
/// or above `threshold`, placed by a 3-point parabola.
pub fn extract_contours(pd: &PhaseDiagram, threshold: f64) -> Vec<ContourPoint> {
    let opts = ContourOptions { threshold, axis: ContourAxis::Gamma, refine: false };
    extract_contours_with(pd, &opts)
}

pub fn extract_contours_with(pd: &PhaseDiagram, opts: &ContourOptions) -> Vec<ContourPoint> {
    let n_lines = match opts.axis {
        ContourAxis::Gamma => pd.n_omega(),
        ContourAxis::Omega => pd.n_gamma(),
        ContourAxis::Both => {
            let mut pts = extract_contours_with(pd, &ContourOptions { axis: ContourAxis::Gamma, ..*opts });
            pts.extend(extract_contours_with(pd, &ContourOptions { axis: ContourAxis::Omega, ..*opts }));
            pts.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.omega.total_cmp(&b.omega)));
            return pts;
        }
    };
    let per_line: Vec<Vec<ContourPoint>> =
        (0..n_lines).into_par_iter().map(|l| Line::new(pd, opts.axis, l).contours(opts)).collect();
    per_line.into_iter().flatten().collect()
}

/// Number of transient eigenvalues with `|Im λ| ≤ tol·|λ|`. Unlike the damping
/// classification this test is scale-free, so it stays meaningful for
/// transients many orders of magnitude below 1.
pub fn relative_real_count(o: &EpObservables, tol: f64) -> usize {
    o.transient_eigenvalues().filter(|l| l.im.abs() <= tol * l.norm()).count()
}

fn relative_overdamped(o: &EpObservables, tol: f64) -> bool {
    relative_real_count(o, tol) + 1 == o.eigenvalues.len()
}

/// Smallest relative distance between two transient eigenvalues.
pub fn relative_gap(o: &EpObservables) -> f64 {
    let t: Vec<C64> = o.transient_eigenvalues().collect();
    let mut gap = f64::INFINITY;
    for (i, a) in t.iter().enumerate() {
        for b in &t[i + 1..] {
            let scale = a.norm() + b.norm();
            gap = gap.min(if scale > 0.0 { (a - b).norm() / scale } else { 0.0 });
        }
    }
    gap
}

/// One grid line: `template` with either γ or Ω replaced by `xs[k]`.
struct Line<'a> {
    template: FamilyPoint,
    axis: ContourAxis,
    integrator: &'a IntegratorOptions,
    reality_tol: f64,
    xs: Vec<f64>,
    cells: Vec<&'a Cell>,
}

impl<'a> Line<'a> {
    fn new(pd: &'a PhaseDiagram, axis: ContourAxis, l: usize) -> Self {
        let spec = &pd.spec;
        let (template, xs, cells) = match axis {
            ContourAxis::Gamma => (
                spec.point(spec.gamma.lo, spec.omega.value(l)),
                spec.gamma.values(),
                (0..pd.n_gamma()).map(|i| pd.cell(i, l)).collect(),
            ),
            _ => (
                spec.point(spec.gamma.value(l), spec.omega.lo),
                spec.omega.values(),
                (0..pd.n_omega()).map(|j| pd.cell(l, j)).collect(),
            ),
        };
        Self { template, axis, integrator: &spec.integrator, reality_tol: spec.reality_tol, xs, cells }
    }

    fn of_scan(scan: &'a Scan) -> Self {
        Self {
            template: scan.template,
            axis: scan.axis,
            integrator: &scan.integrator,
            reality_tol: scan.reality_tol,
            xs: scan.range.values(),
            cells: scan.cells.iter().collect(),
        }
    }

    fn fixed(&self) -> f64 {
        match self.axis {
            ContourAxis::Gamma => self.template.omega,
            _ => self.template.gamma,
        }
    }

    fn at(&self, x: f64) -> FamilyPoint {
        let mut p = self.template;
        match self.axis {
            ContourAxis::Gamma => p.gamma = x,
            _ => p.omega = x,
        }
        p
    }

    fn point(&self, x: f64, ip: f64, source: ContourSource) -> ContourPoint {
        let p = self.at(x);
        ContourPoint { gamma: p.gamma, omega: p.omega, ip, source }
    }

    fn eval(&self, x: f64) -> Option<EpObservables> {
        evaluate_point(&self.at(x), self.integrator, self.reality_tol).ok().filter(|o| !o.degenerate)
    }

    fn label(&self, o: &EpObservables) -> usize {
        relative_real_count(o, self.reality_tol)
    }

    fn contours(&self, opts: &ContourOptions) -> Vec<ContourPoint> {
        let peaks = self.grid_peaks(opts.threshold);
        if !opts.refine {
            return peaks;
        }
        let refined = self.refined(opts.threshold);
        let pitch = self.xs[1] - self.xs[0];
        let mut out: Vec<ContourPoint> = refined.iter().map(|&(x, ip)| self.point(x, ip, ContourSource::Refined)).collect();
        for p in peaks {
            let x = match self.axis {
                ContourAxis::Gamma => p.gamma,
                _ => p.omega,
            };
            if refined.iter().all(|(r, _)| (r - x).abs() > pitch) {
                out.push(p);
            }
        }
        let key = |p: &ContourPoint| match self.axis {
            ContourAxis::Gamma => p.gamma,
            _ => p.omega,
        };
        out.sort_by(|a, b| key(a).total_cmp(&key(b)));
        out
    }

    fn grid_peaks(&self, threshold: f64) -> Vec<ContourPoint> {
        let ip: Vec<f64> =
            self.cells.iter().map(|c| c.reliable().map_or(f64::NEG_INFINITY, |o| o.ip)).collect();
        let mut out = Vec::new();
        for k in 1..ip.len() - 1 {
            let (l, c, r) = (ip[k - 1], ip[k], ip[k + 1]);
            if c < threshold || c < l || c <= r {
                continue;
            }
            let h = self.xs[k + 1] - self.xs[k];
            let curv = l - 2.0 * c + r;
            let shift = if l.is_finite() && r.is_finite() && curv < 0.0 {
                (0.5 * h * (l - r) / curv).clamp(-0.5 * h, 0.5 * h)
            } else {
                0.0
            };
            out.push(self.point(self.xs[k] + shift, c, ContourSource::GridPeak));
        }
        out
    }

    fn refined(&self, threshold: f64) -> Vec<(f64, f64)> {
        let obs: Vec<Option<&EpObservables>> = self.cells.iter().map(|c| c.reliable()).collect();
        let n = obs.len();
        let mut found = Vec::new();
        for k in 0..n - 1 {
            if let (Some(a), Some(b)) = (obs[k], obs[k + 1]) {
                if self.label(a) != self.label(b) {
                    found.extend(self.bisect(self.xs[k], a.clone(), self.xs[k + 1], b.clone()));
                }
            }
        }
        for k in 1..n - 1 {
            let (Some(a), Some(b), Some(c)) = (obs[k - 1], obs[k], obs[k + 1]) else { continue };
            let g = relative_gap(b);
            if g < GAP_FLOOR && g <= relative_gap(a) && g <= relative_gap(c) {
                found.extend(self.polish(self.xs[k - 1], self.xs[k + 1], relative_gap));
            }
            let ip = b.ip;
            if (PEAK_FLOOR..threshold).contains(&ip) && ip >= a.ip && ip >= c.ip {
                found.extend(self.polish(self.xs[k - 1], self.xs[k + 1], |o| -o.ip));
            }
        }
        found.retain(|&(_, ip)| ip >= threshold);
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(found.len());
        for (x, ip) in found {
            match out.last_mut() {
                Some(last) if (x - last.0).abs() <= 1e-9 * x.abs().max(1.0) => {
                    if ip > last.1 {
                        *last = (x, ip);
                    }
                }
                _ => out.push((x, ip)),
            }
        }
        out
    }

    fn converged(lo: f64, hi: f64) -> bool {
        let mid = 0.5 * (lo + hi);
        hi - lo <= 1e-13 * mid.abs().max(1.0) || mid <= lo || mid >= hi
    }

    /// Bisects a change of the real-transient count; returns the endpoint of
    /// the final bracket with the larger metric.
    fn bisect(&self, mut lo: f64, mut olo: EpObservables, mut hi: f64, mut ohi: EpObservables) -> Option<(f64, f64)> {
        let target = self.label(&olo);
        for _ in 0..200 {
            if Self::converged(lo, hi) || olo.ip.max(ohi.ip) >= IP_SETTLED {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let om = self.eval(mid)?;
            if self.label(&om) == target {
                lo = mid;
                olo = om;
            } else {
                hi = mid;
                ohi = om;
            }
        }
        Some(if olo.ip >= ohi.ip { (lo, olo.ip) } else { (hi, ohi.ip) })
    }

    /// Golden-section minimisation of `f` on `[a, b]`.
    fn polish(&self, mut a: f64, mut b: f64, f: impl Fn(&EpObservables) -> f64) -> Option<(f64, f64)> {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let gap = |x: f64| self.eval(x).map(|o| (f(&o), o));
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let (mut gc, mut oc) = gap(c)?;
        let (mut gd, mut od) = gap(d)?;
        for _ in 0..200 {
            if Self::converged(a, b) || oc.ip.max(od.ip) >= IP_SETTLED {
                break;
            }
            if gc <= gd {
                b = d;
                d = c;
                (gd, od) = (gc, oc);
                c = b - INV_PHI * (b - a);
                (gc, oc) = gap(c)?;
            } else {
                a = c;
                c = d;
                (gc, oc) = (gd, od);
                d = a + INV_PHI * (b - a);
                (gd, od) = gap(d)?;
            }
        }
        Some(if oc.ip >= od.ip { (c, oc.ip) } else { (d, od.ip) })
    }

    /// Bisects the boundary of the overdamped region between `inside` and
    /// `outside`.
    fn edge(&self, inside: f64, outside: f64) -> Option<f64> {
        let tol = self.reality_tol;
        let (mut a, mut b) = (inside, outside);
        for _ in 0..200 {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if Self::converged(lo, hi) {
                break;
            }
            let mid = 0.5 * (a + b);
            if relative_overdamped(&self.eval(mid)?, tol) {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some(0.5 * (a + b))
    }
}

pub fn write_contours_csv<W: Write>(points: &[ContourPoint], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(CONTOUR_CSV_HEADER).map_err(csv_err)?;
    for p in points {
        out.write_record([fmt_f64(p.gamma), fmt_f64(p.omega), fmt_f64(p.ip), p.source.as_str().to_string()])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_contours_csv<R: Read>(r: R) -> Result<Vec<ContourPoint>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CONTOUR_CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidArgument("unexpected contour header".into()));
    }
    let num = |rec: &csv::StringRecord, k: usize| -> Result<f64> {
        let raw = rec.get(k).unwrap_or("");
        raw.parse().map_err(|_| Error::InvalidArgument(format!("column {} holds {raw:?}", CONTOUR_CSV_HEADER[k])))
    };
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let source = match rec.get(3).unwrap_or("") {
            "grid-peak" => ContourSource::GridPeak,
            "refined" => ContourSource::Refined,
            other => return Err(Error::InvalidArgument(format!("unknown contour source {other:?}"))),
        };
        out.push(ContourPoint { gamma: num(&rec, 0)?, omega: num(&rec, 1)?, ip: num(&rec, 2)?, source });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// contour geometry

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub gamma: f64,
    /// Ω-extent of the overdamped interval around the centre; `0` when the
    /// row has no overdamped grid cell next to it.
    pub width: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Per γ row, the extent in Ω of the overdamped region containing (or
/// nearest to, within two cells) `omega_center`. Edges are bisected between
/// grid points; an edge that runs into the grid boundary is left at the
/// boundary.
pub fn overdamped_width(pd: &PhaseDiagram, omega_center: f64) -> Result<Vec<WidthRow>> {
    let w = &pd.spec.omega;
    if !w.contains(omega_center) {
        return Err(Error::InvalidArgument(format!("omega {omega_center} lies outside the grid {w}")));
    }
    let tol = pd.spec.reality_tol;
    let centre = (((omega_center - w.lo) / w.pitch()).round() as usize).min(w.count - 1);
    let rows = (0..pd.n_gamma())
        .into_par_iter()
        .map(|i| {
            let line = Line::new(pd, ContourAxis::Omega, i);
            let over = |k: usize| line.cells[k].reliable().is_some_and(|o| relative_overdamped(o, tol));
            let start = [0isize, -1, 1, -2, 2]
                .into_iter()
                .map(|d| centre as isize + d)
                .filter(|&k| k >= 0 && (k as usize) < w.count)
                .map(|k| k as usize)
                .find(|&k| over(k));
            let gamma = line.fixed();
            let Some(k0) = start else {
                return WidthRow { gamma, width: 0.0, lower: None, upper: None };
            };
            let (mut lo, mut hi) = (k0, k0);
            while lo > 0 && over(lo - 1) {
                lo -= 1;
            }
            while hi + 1 < w.count && over(hi + 1) {
                hi += 1;
            }
            let lower = if lo == 0 { Some(line.xs[0]) } else { line.edge(line.xs[lo], line.xs[lo - 1]) };
            let upper = if hi + 1 == w.count { Some(line.xs[hi]) } else { line.edge(line.xs[hi], line.xs[hi + 1]) };
            let width = match (lower, upper) {
                (Some(a), Some(b)) => b - a,
                _ => f64::NAN,
            };
            WidthRow { gamma, width, lower, upper }
        })
        .collect();
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSlopes {
    /// `dγ/dΩ` of the branch on the high-Ω side.
    pub plus: f64,
    /// `dγ/dΩ` of the branch on the low-Ω side.
    pub minus: f64,
    pub n_plus: usize,
    pub n_minus: usize,
}

/// Least-squares slopes of the two contour branches leaving `omega_center`.
///
/// Per γ row with `0 < γ ≤ gamma_max` the point nearest the centre on each
/// side (within `half_window`) is taken, `Ω = c + aγ + bγ²` is fitted per
/// side and the slope at `γ → 0` is `1/a`. The quadratic term absorbs the
/// bending of the branches so the fit reports the limiting slope.
pub fn fit_branch_slopes(
    points: &[ContourPoint],
    omega_center: f64,
    gamma_max: f64,
    half_window: f64,
) -> Result<BranchSlopes> {
    let mut pts: Vec<&ContourPoint> = points
        .iter()
        .filter(|p| p.gamma > 0.0 && p.gamma <= gamma_max && (p.omega - omega_center).abs() <= half_window)
        .collect();
    pts.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.omega.total_cmp(&b.omega)));
    let (mut right, mut left): (Vec<(f64, f64)>, Vec<(f64, f64)>) = (Vec::new(), Vec::new());
    let mut start = 0;
    while start < pts.len() {
        let g = pts[start].gamma;
        let len = pts[start..].iter().take_while(|p| p.gamma == g).count();
        let row = &pts[start..start + len];
        start += len;
        if let Some(p) = row.iter().filter(|p| p.omega > omega_center).min_by(|a, b| a.omega.total_cmp(&b.omega)) {
            right.push((g, p.omega));
        }
        if let Some(p) = row.iter().filter(|p| p.omega < omega_center).max_by(|a, b| a.omega.total_cmp(&b.omega)) {
            left.push((g, p.omega));
        }
    }
    Ok(BranchSlopes { plus: fit_slope(&right)?, minus: fit_slope(&left)?, n_plus: right.len(), n_minus: left.len() })
}

fn fit_slope(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 4 {
        return Err(Error::InvalidArgument(format!("{} contour points are too few for a slope fit", pts.len())));
    }
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i].0.powi(j as i32));
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let x = a.svd(true, true).solve(&b, 1e-14).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(1.0 / x[1])
}

// ---------------------------------------------------------------------------
// one-dimensional scans

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPeak {
    pub gamma: f64,
    pub omega: f64,
    pub ip: f64,
}

/// Observables along one parameter with everything else fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct Scan {
    pub template: FamilyPoint,
    pub axis: ContourAxis,
    pub range: GridRange,
    pub integrator: IntegratorOptions,
    pub reality_tol: f64,
    pub cells: Vec<Cell>,
}

impl Scan {
    /// Contour points along the scan; `opts.axis` is ignored.
    pub fn contours(&self, opts: &ContourOptions) -> Vec<ContourPoint> {
        Line::of_scan(self).contours(opts)
    }

    /// Largest metric of the scan with a 3-point parabolic position estimate.
    pub fn peak(&self) -> Option<ScanPeak> {
        let line = Line::of_scan(self);
        let ip: Vec<f64> = self.cells.iter().map(|c| c.reliable().map_or(f64::NEG_INFINITY, |o| o.ip)).collect();
        let k = (0..ip.len()).filter(|&k| ip[k].is_finite()).max_by(|&a, &b| ip[a].total_cmp(&ip[b]))?;
        let mut x = line.xs[k];
        if k > 0 && k + 1 < ip.len() && ip[k - 1].is_finite() && ip[k + 1].is_finite() {
            let curv = ip[k - 1] - 2.0 * ip[k] + ip[k + 1];
            if curv < 0.0 {
                let h = line.xs[k + 1] - line.xs[k];
                x += (0.5 * h * (ip[k - 1] - ip[k + 1]) / curv).clamp(-0.5 * h, 0.5 * h);
            }
        }
        let p = line.at(x);
        Some(ScanPeak { gamma: p.gamma, omega: p.omega, ip: ip[k] })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_cells_csv(&self.cells, w)
    }
}

pub fn run_scan(
    template: FamilyPoint,
    axis: ContourAxis,
    range: GridRange,
    integrator: IntegratorOptions,
    reality_tol: f64,
) -> Result<Scan> {
    range.validate()?;
    if axis == ContourAxis::Both {
        return Err(Error::InvalidArgument("a scan runs along a single axis".into()));
    }
    let mut scan = Scan { template, axis, range, integrator, reality_tol, cells: Vec::new() };
    let line = Line::of_scan(&scan);
    let cells = range
        .values()
        .into_par_iter()
        .map(|x| {
            let p = line.at(x);
            let outcome = evaluate_point(&p, &integrator, reality_tol).map_err(|e| e.to_string());
            Cell { gamma: p.gamma, omega: p.omega, outcome }
        })
        .collect();
    scan.cells = cells;
    Ok(scan)
}

/// Frequency used for static-model propagators: high enough that no two
/// eigenvalues of `ℒ` alias onto each other in `exp(ℒT)`.
pub fn static_reference_omega(dissipator: DissipatorKind, gamma_max: f64) -> f64 {
    let m = FamilyPoint::new(ModelFamily::Static, dissipator, gamma_max, 1.0).build();
    4.0 * m.generator_scale().max(1.0)
}

/// Metric scan of the static model over γ.
pub fn static_scan(dissipator: DissipatorKind, gamma: GridRange) -> Result<Scan> {
    let omega = static_reference_omega(dissipator, gamma.hi.abs().max(gamma.lo.abs()));
    let template = FamilyPoint::new(ModelFamily::Static, dissipator, gamma.lo, omega);
    run_scan(template, ContourAxis::Gamma, gamma, IntegratorOptions::default(), DEFAULT_REALITY_TOL)
}

/// `(γ, splitting)` of the static no-jump Hamiltonian along γ.
pub fn postselected_scan(dissipator: DissipatorKind, gamma: &GridRange) -> Result<Vec<(f64, f64)>> {
    gamma.validate()?;
    gamma
        .values()
        .into_iter()
        .map(|g| {
            let m = FamilyPoint::new(ModelFamily::Static, dissipator, g, 1.0).build();
            Ok((g, postselected_splitting(&m, 0.0)?))
        })
        .collect()
}

/// Location of the smallest splitting of a [`postselected_scan`].
pub fn splitting_minimum(scan: &[(f64, f64)]) -> Option<(f64, f64)> {
    scan.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec::new(
            ModelFamily::DriveSquare,
            DissipatorKind::Minus,
            "0:1:6".parse().unwrap(),
            "1.5:2.5:7".parse().unwrap(),
        )
    }

    #[test]
    fn grid_range_parsing() {
        let r: GridRange = "0.05:12:200".parse().unwrap();
        assert_eq!((r.lo, r.hi, r.count), (0.05, 12.0, 200));
        assert_eq!(r.value(0), 0.05);
        assert_eq!(r.value(199), 12.0);
        let s: GridRange = "7.5:8.5:201".parse().unwrap();
        assert_eq!(s.value(100), 8.0);
        assert_eq!(r.to_string().parse::<GridRange>().unwrap(), r);
        for bad in ["1:2", "1:2:1", "2:1:5", "a:2:3", "1:2:3:4", "nan:1:3"] {
            assert!(bad.parse::<GridRange>().is_err(), "{bad}");
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = small_spec();
        assert!(s.validate().is_ok());
        s.family = ModelFamily::Static;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.omega = GridRange { lo: 0.0, hi: 1.0, count: 3 };
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.gamma = GridRange { lo: -1.0, hi: 1.0, count: 3 };
        assert!(s.validate().is_err());
    }

    #[test]
    fn sweep_layout_and_csv_round_trip() {
        let pd = run_sweep(&small_spec()).unwrap();
        assert_eq!(pd.cells.len(), 42);
        assert_eq!(pd.failures(), 0);
        assert_eq!(pd.cell(2, 3).gamma, 0.4);
        assert_eq!(pd.cell(2, 3).omega, 2.0);
        let mut buf = Vec::new();
        pd.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("gamma,omega,ip,damping,n_real_transients,lambda_re_1,"));
        assert_eq!(text.lines().count(), 43);
        let rows = read_sweep_csv(buf.as_slice()).unwrap();
        for (row, cell) in rows.iter().zip(&pd.cells) {
            let o = cell.observables().unwrap();
            assert_eq!(row.ip, o.ip);
            assert_eq!(row.damping, Some(o.damping));
            assert_eq!(row.eigenvalues.as_slice(), o.eigenvalues.as_slice());
        }
        // γ = 0 at Ω = 2 makes G(T) the identity
        assert_eq!(rows[3].flags, vec![FLAG_DEGENERATE.to_string()]);
        assert!(rows[0].flags.is_empty() && rows[10].flags.is_empty());
    }

    #[test]
    fn error_cells_are_recorded() {
        let cells = vec![Cell { gamma: 1.0, omega: 2.0, outcome: Err("boom, bad".into()) }];
        let mut buf = Vec::new();
        write_cells_csv(&cells, &mut buf).unwrap();
        let rows = read_sweep_csv(buf.as_slice()).unwrap();
        assert!(rows[0].ip.is_nan());
        assert_eq!(rows[0].damping, None);
        assert_eq!(rows[0].flags, vec!["error: boom, bad".to_string()]);
    }

    #[test]
    fn deterministic_bytes() {
        let spec = small_spec();
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_sweep(&spec).unwrap().write_csv(&mut a).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        pool.install(|| run_sweep(&spec).unwrap().write_csv(&mut b).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn zero_depth_cosine_is_column_constant() {
        let spec = SweepSpec::new(
            ModelFamily::DriveCos,
            DissipatorKind::Z,
            "0.5:3:4".parse().unwrap(),
            "0.3:5:5".parse().unwrap(),
        )
        .with_delta(0.0);
        let pd = run_sweep(&spec).unwrap();
        for i in 0..pd.n_gamma() {
            let ips: Vec<f64> = (0..pd.n_omega()).map(|j| pd.cell(i, j).ip().unwrap()).collect();
            let spread = ips.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - ips.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 1e-9, "row {i}: {spread}");
        }
    }

    #[test]
    fn refined_contours_find_first_drive_resonance_edges() {
        // γ₋ = 0.2: the overdamped window around Ω = 2 is about [1.948, 2.048]
        let spec = SweepSpec::new(
            ModelFamily::DriveSquare,
            DissipatorKind::Minus,
            "0.1:0.2:2".parse().unwrap(),
            "1.8:2.2:41".parse().unwrap(),
        );
        let pd = run_sweep(&spec).unwrap();
        let pts = extract_contours_with(&pd, &ContourOptions { axis: ContourAxis::Omega, ..Default::default() });
        let row: Vec<f64> = pts.iter().filter(|p| p.gamma == 0.2).map(|p| p.omega).collect();
        assert_eq!(row.len(), 2, "{row:?}");
        assert!((row[0] - 1.948165755949728).abs() < 1e-8, "{row:?}");
        assert!((row[1] - 2.0480935684909456).abs() < 1e-8, "{row:?}");
        assert!(pts.iter().all(|p| p.ip >= 0.999 && p.source == ContourSource::Refined));
        // the grid alone never lands close enough
        assert!(extract_contours(&pd, 0.999).is_empty());
    }

    #[test]
    fn width_between_edges() {
        let spec = SweepSpec::new(
            ModelFamily::DriveSquare,
            DissipatorKind::Minus,
            "0.1:0.2:2".parse().unwrap(),
            "1.8:2.2:41".parse().unwrap(),
        );
        let pd = run_sweep(&spec).unwrap();
        let w = overdamped_width(&pd, 2.0).unwrap();
        assert!((w[1].width - (2.0480935684909456 - 1.948165755949728)).abs() < 1e-8);
        assert!(overdamped_width(&pd, 3.0).is_err());
    }

    #[test]
    fn slope_fit_recovers_quadratic_branches() {
        let mut pts = Vec::new();
        for k in 1..=10 {
            let g = 0.02 * k as f64;
            for w in [2.0 + g / 4.0 - 0.1 * g * g, 2.0 - g / 4.0 - 0.2 * g * g, 3.5] {
                pts.push(ContourPoint { gamma: g, omega: w, ip: 1.0, source: ContourSource::Refined });
            }
        }
        let s = fit_branch_slopes(&pts, 2.0, 0.2, 0.5).unwrap();
        assert!((s.plus - 4.0).abs() < 1e-9 && (s.minus + 4.0).abs() < 1e-9);
        assert_eq!((s.n_plus, s.n_minus), (10, 10));
        assert!(fit_branch_slopes(&pts[..6], 2.0, 0.2, 0.5).is_err());
    }

    #[test]
    fn contour_csv_round_trip() {
        let pts = vec![
            ContourPoint { gamma: 0.1, omega: 1.975, ip: 0.9995, source: ContourSource::Refined },
            ContourPoint { gamma: 0.2, omega: 2.05, ip: 0.9991, source: ContourSource::GridPeak },
        ];
        let mut buf = Vec::new();
        write_contours_csv(&pts, &mut buf).unwrap();
        assert_eq!(read_contours_csv(buf.as_slice()).unwrap(), pts);
    }

    #[test]
    fn static_scan_peaks_at_liouvillian_ep() {
        let scan = static_scan(DissipatorKind::Minus, "7.9:8.1:41".parse().unwrap()).unwrap();
        let p = scan.peak().unwrap();
        assert!((p.gamma - 8.0).abs() < 0.005 && p.ip > 0.999, "{p:?}");
    }

    #[test]
    fn scan_contours_match_grid_contours() {
        let template = FamilyPoint::new(ModelFamily::DriveSquare, DissipatorKind::Minus, 0.2, 1.0);
        let scan =
            run_scan(template, ContourAxis::Omega, "1.8:2.2:41".parse().unwrap(), IntegratorOptions::default(), 1e-9)
                .unwrap();
        let pts = scan.contours(&ContourOptions::default());
        let row: Vec<f64> = pts.iter().map(|p| p.omega).collect();
        assert_eq!(row.len(), 2);
        assert!((row[0] - 1.948165755949728).abs() < 1e-8 && (row[1] - 2.0480935684909456).abs() < 1e-8);
        assert!(pts.iter().all(|p| p.gamma == 0.2));
    }

    #[test]
    fn postselected_minimum() {
        let scan = postselected_scan(DissipatorKind::Minus, &"3:5:201".parse().unwrap()).unwrap();
        let (g, s) = splitting_minimum(&scan).unwrap();
        assert!((g - 4.0).abs() < 1e-12 && s < 1e-6, "{g} {s}");
    }
}
