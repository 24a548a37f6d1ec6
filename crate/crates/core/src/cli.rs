//! Command-line front end.
//!
//! Every command that writes data writes `<out>.csv` next to a `<out>.json`
//! sidecar holding the full resolved configuration; `replay` re-runs a
//! sidecar. Exit codes: 0 success, 1 failed validation or numerics,
//! 2 bad arguments, 3 I/O.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::acceptance::{find_check, AcceptanceConfig, CheckReport, CHECKS};
use crate::analytic::{ep_contour_square_drive, ep_slopes, resonance_ladder, Modulation, ResonanceKind};
use crate::bloch::{trajectory, BlochSystem, TrajectoryOptions};
use crate::epmetrics::{DEFAULT_EP_THRESHOLD, DEFAULT_REALITY_TOL};
use crate::error::{Error, Result};
use crate::model::{DissipatorKind, FamilyPoint, ModelFamily};
use crate::sweep::{
    extract_contours_with, run_sweep, static_scan, write_contours_csv, ContourAxis, ContourOptions, GridRange,
    SweepSpec,
};

pub const OUT_DIR_ENV: &str = "FLOQUET_EP_OUT_DIR";
pub const THREADS_ENV: &str = "FLOQUET_EP_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "floquet-ep", version, about = "Floquet exceptional points of periodically modulated qubits")]
pub struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase diagram over a (γ, Ω) grid, with extracted EP contours.
    Sweep(SweepArgs),
    /// Metric along γ for the unmodulated model.
    StaticScan(StaticScanArgs),
    /// Bloch-vector time series.
    Trajectory(TrajectoryArgs),
    /// Closed-form contour roots, resonance ladders and slopes.
    Analytic(AnalyticArgs),
    /// Run the acceptance checks.
    Validate(ValidateArgs),
    /// Re-run the command recorded in a sidecar.
    Replay(ReplayArgs),
}

fn parse<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_axis(s: &str) -> std::result::Result<ContourAxis, String> {
    match s {
        "gamma" => Ok(ContourAxis::Gamma),
        "omega" => Ok(ContourAxis::Omega),
        "both" => Ok(ContourAxis::Both),
        other => Err(format!("unknown contour axis {other:?} (gamma|omega|both)")),
    }
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected three components, got {}", v.len()))
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// static, drive-cos, drive-square, diss-cos or diss-square.
    #[arg(long, value_parser = parse::<ModelFamily>)]
    pub family: ModelFamily,
    /// minus or z.
    #[arg(long, value_parser = parse::<DissipatorKind>)]
    pub dissipator: DissipatorKind,
    /// Modulation depth, drive-cos only.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// `lo:hi:count`, inclusive.
    #[arg(long, value_parser = parse::<GridRange>)]
    pub gamma: GridRange,
    /// Drive frequency grid, same form.
    #[arg(long, value_parser = parse::<GridRange>)]
    pub omega: GridRange,
    #[arg(long, default_value_t = DEFAULT_EP_THRESHOLD)]
    pub threshold: f64,
    /// Search direction for contour points: gamma, omega or both.
    #[arg(long, default_value = "both", value_parser = parse_axis)]
    pub contour_axis: ContourAxis,
    /// Grid peaks only.
    #[arg(long)]
    pub no_refine: bool,
    #[arg(long, default_value_t = DEFAULT_REALITY_TOL)]
    pub reality_tol: f64,
    #[arg(long, default_value = "sweep")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StaticScanArgs {
    #[arg(long, value_parser = parse::<DissipatorKind>)]
    pub dissipator: DissipatorKind,
    #[arg(long, value_parser = parse::<GridRange>)]
    pub gamma: GridRange,
    #[arg(long, default_value = "static-scan")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[arg(long, value_parser = parse::<ModelFamily>)]
    pub family: ModelFamily,
    #[arg(long, value_parser = parse::<DissipatorKind>)]
    pub dissipator: DissipatorKind,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Initial Bloch vector `x,y,z`.
    #[arg(long, default_value = "0,0,1", value_parser = parse_vec3)]
    pub s0: [f64; 3],
    #[arg(long)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long)]
    pub stroboscopic: bool,
    #[arg(long, default_value = "trajectory")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("task").required(true).args(["contour", "ladder", "slopes"])))]
pub struct AnalyticArgs {
    /// Contour roots; only `square-drive` has a closed form.
    #[arg(long, requires = "omega")]
    pub contour: Option<String>,
    #[arg(long, value_parser = parse::<GridRange>)]
    pub omega: Option<GridRange>,
    /// Resonance ladder for `drive` or `diss` modulation.
    #[arg(long, value_parser = parse::<Modulation>, requires = "max_index")]
    pub ladder: Option<Modulation>,
    #[arg(long)]
    pub max_index: Option<u32>,
    #[arg(long, value_parser = parse::<DissipatorKind>, default_value = "minus")]
    pub dissipator: DissipatorKind,
    /// Small-γ contour slopes: MODULATION DISSIPATOR INDEX.
    #[arg(long, num_args = 3, value_names = ["MODULATION", "DISSIPATOR", "INDEX"])]
    pub slopes: Option<Vec<String>>,
    #[arg(long, default_value = "analytic")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Run only these checks (name or number); repeatable.
    #[arg(long)]
    pub only: Vec<String>,
    #[arg(long, default_value_t = AcceptanceConfig::default().seed)]
    pub seed: u64,
    /// Also write the reports as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0, hide = true, allow_hyphen_values = true)]
    pub jump_sign: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub sidecar: PathBuf,
    /// Write to this stem instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything needed to regenerate one output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Sweep { spec: SweepSpec, contours: ContourOptions, out: PathBuf },
    StaticScan { dissipator: DissipatorKind, gamma: GridRange, out: PathBuf },
    Trajectory { point: FamilyPoint, s0: [f64; 3], options: TrajectoryOptions, out: PathBuf },
    Analytic { task: AnalyticTask, out: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyticTask {
    SquareDriveContour { omega: GridRange },
    Ladder { modulation: Modulation, dissipator: DissipatorKind, max_index: u32 },
    Slopes { modulation: Modulation, dissipator: DissipatorKind, index: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
}

impl Sidecar {
    pub fn new(config: RunConfig) -> Self {
        Self { tool: "floquet-ep".into(), version: env!("CARGO_PKG_VERSION").into(), config }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
    }
}

impl RunConfig {
    pub fn out(&self) -> &Path {
        match self {
            Self::Sweep { out, .. } | Self::StaticScan { out, .. } | Self::Trajectory { out, .. } | Self::Analytic { out, .. } => out,
        }
    }

    fn out_mut(&mut self) -> &mut PathBuf {
        match self {
            Self::Sweep { out, .. } | Self::StaticScan { out, .. } | Self::Trajectory { out, .. } | Self::Analytic { out, .. } => out,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Sweep { spec, contours, .. } => {
                spec.validate()?;
                if !(0.0..=1.0).contains(&contours.threshold) {
                    return Err(Error::InvalidArgument(format!("threshold {} outside [0, 1]", contours.threshold)));
                }
                Ok(())
            }
            Self::StaticScan { gamma, .. } => gamma.validate(),
            Self::Trajectory { point, .. } => point.build().validate(),
            Self::Analytic { task: AnalyticTask::SquareDriveContour { omega }, .. } => omega.validate(),
            Self::Analytic { .. } => Ok(()),
        }
    }

    /// Runs the configuration, writing the data file(s) and the sidecar.
    /// Returns the paths written.
    pub fn execute(&self) -> Result<Vec<PathBuf>> {
        self.validate()?;
        let stem = self.out();
        if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let csv_path = with_suffix(stem, ".csv");
        let mut written = vec![csv_path.clone()];
        match self {
            Self::Sweep { spec, contours, .. } => {
                let pd = run_sweep(spec)?;
                let pts = extract_contours_with(&pd, contours);
                write_file(&csv_path, |w| pd.write_csv(w))?;
                let contour_path = with_suffix(stem, ".contours.csv");
                write_file(&contour_path, |w| write_contours_csv(&pts, w))?;
                written.push(contour_path);
                eprintln!(
                    "sweep: {} cells ({} failed), {} contour points",
                    pd.cells.len(),
                    pd.failures(),
                    pts.len()
                );
            }
            Self::StaticScan { dissipator, gamma, .. } => {
                let scan = static_scan(*dissipator, *gamma)?;
                write_file(&csv_path, |w| scan.write_csv(w))?;
                if let Some(p) = scan.peak() {
                    eprintln!("static-scan: peak IP {:.6} at gamma = {:.6}", p.ip, p.gamma);
                }
            }
            Self::Trajectory { point, s0, options, .. } => {
                let sys = BlochSystem::from_model(&point.build())?;
                let traj = trajectory(&sys, Vector3::from(*s0), options)?;
                write_file(&csv_path, |w| traj.write_csv(w))?;
            }
            Self::Analytic { task, .. } => {
                write_file(&csv_path, |w| write_analytic(task, w))?;
                if let AnalyticTask::Ladder { modulation: Modulation::Dissipation, dissipator, max_index } = task {
                    let path = with_suffix(stem, ".companions.csv");
                    write_file(&path, |w| write_ladder(Modulation::Dissipation, *dissipator, *max_index, ResonanceKind::EnhancedIp, w))?;
                    written.push(path);
                }
            }
        }
        let sidecar_path = with_suffix(stem, ".json");
        write_file(&sidecar_path, |mut w| {
            serde_json::to_writer_pretty(&mut w, &Sidecar::new(self.clone()))?;
            w.write_all(b"\n")?;
            Ok(())
        })?;
        written.push(sidecar_path);
        Ok(written)
    }
}

fn write_analytic<W: Write>(task: &AnalyticTask, mut w: W) -> Result<()> {
    match task {
        AnalyticTask::SquareDriveContour { omega } => {
            let rows: Vec<(f64, Vec<f64>)> =
                omega.values().into_iter().map(|o| Ok((o, ep_contour_square_drive(o)?))).collect::<Result<_>>()?;
            let k = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
            let mut header = vec!["omega".to_string()];
            header.extend((1..=k).map(|i| format!("gamma_root_{i}")));
            writeln!(w, "{}", header.join(","))?;
            for (o, roots) in rows {
                let mut cells = vec![format!("{o}")];
                cells.extend((0..k).map(|i| roots.get(i).map_or(String::new(), |g| format!("{g}"))));
                writeln!(w, "{}", cells.join(","))?;
            }
        }
        AnalyticTask::Ladder { modulation, dissipator, max_index } => {
            write_ladder(*modulation, *dissipator, *max_index, ResonanceKind::Ep, &mut w)?;
        }
        AnalyticTask::Slopes { modulation, dissipator, index } => {
            let (p, m) = ep_slopes(*modulation, *dissipator, *index)?;
            writeln!(w, "modulation,dissipator,index,slope_plus,slope_minus")?;
            writeln!(w, "{},{},{index},{p},{m}", modulation.name(), dissipator.name())?;
            eprintln!("slopes: {p:+} {m:+}");
        }
    }
    w.flush()?;
    Ok(())
}

/// Ladder rows of one kind: `index,omega,kind,slope_plus,slope_minus`;
/// slopes are left empty for enhanced-overlap companions.
fn write_ladder<W: Write>(
    modulation: Modulation,
    dissipator: DissipatorKind,
    max_index: u32,
    kind: ResonanceKind,
    w: &mut W,
) -> Result<()> {
    let ladder = resonance_ladder(modulation, dissipator, max_index)?;
    writeln!(w, "index,omega,kind,slope_plus,slope_minus")?;
    for e in ladder.entries.iter().filter(|e| e.kind == kind) {
        let (label, slopes) = match e.kind {
            ResonanceKind::Ep => ("ep", Some(ep_slopes(modulation, dissipator, e.index)?)),
            ResonanceKind::EnhancedIp => ("enhanced-ip", None),
        };
        let (p, m) = slopes.map_or((String::new(), String::new()), |(p, m)| (format!("{p}"), format!("{m}")));
        writeln!(w, "{},{},{label},{p},{m}", e.index, e.omega)?;
    }
    Ok(())
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Relative output stems land in `$FLOQUET_EP_OUT_DIR` when it is set.
fn resolve_out(out: PathBuf) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if out.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(out),
        _ => out,
    }
}

impl SweepArgs {
    fn config(self) -> RunConfig {
        let mut spec = SweepSpec::new(self.family, self.dissipator, self.gamma, self.omega).with_delta(self.delta);
        spec.reality_tol = self.reality_tol;
        let contours = ContourOptions { threshold: self.threshold, axis: self.contour_axis, refine: !self.no_refine };
        RunConfig::Sweep { spec, contours, out: resolve_out(self.out) }
    }
}

impl AnalyticArgs {
    fn config(self) -> Result<RunConfig> {
        let task = if let Some(kind) = self.contour {
            if kind != "square-drive" {
                return Err(Error::InvalidArgument(format!(
                    "no closed-form contour for {kind:?}; only square-drive is available"
                )));
            }
            AnalyticTask::SquareDriveContour { omega: self.omega.expect("clap requires --omega") }
        } else if let Some(modulation) = self.ladder {
            let max_index = self.max_index.expect("clap requires --max-index");
            AnalyticTask::Ladder { modulation, dissipator: self.dissipator, max_index }
        } else {
            let v = self.slopes.expect("clap requires one task");
            let modulation: Modulation = v[0].parse()?;
            let dissipator: DissipatorKind = v[1].parse()?;
            let index = v[2].parse().map_err(|_| Error::InvalidArgument(format!("bad index {:?}", v[2])))?;
            AnalyticTask::Slopes { modulation, dissipator, index }
        };
        Ok(RunConfig::Analytic { task, out: resolve_out(self.out) })
    }
}

fn report_table(reports: &[CheckReport]) -> String {
    let mut s = format!("{:<3} {:<24} {:<6} {:>9}  {}\n", "id", "check", "status", "time[s]", "expected | observed | tolerance");
    for r in reports {
        s.push_str(&format!(
            "{:<3} {:<24} {:<6} {:>9.2}  {} | {} | {}\n",
            r.id,
            r.name,
            r.status(),
            r.elapsed_s,
            r.expected,
            r.observed,
            r.tolerance
        ));
        for n in &r.notes {
            s.push_str(&format!("{:<36}  {n}\n", ""));
        }
    }
    s
}

fn validate(args: ValidateArgs) -> Result<i32> {
    let checks = if args.only.is_empty() {
        CHECKS.iter().collect::<Vec<_>>()
    } else {
        args.only
            .iter()
            .map(|k| find_check(k).ok_or_else(|| Error::InvalidArgument(format!("unknown check {k:?}"))))
            .collect::<Result<Vec<_>>>()?
    };
    let cfg = AcceptanceConfig { seed: args.seed, jump_sign: args.jump_sign };
    let mut reports = Vec::new();
    for c in checks {
        let r = c.run(&cfg);
        eprintln!("{}", r.line());
        reports.push(r);
    }
    print!("{}", report_table(&reports));
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", reports.len() - failed, reports.len());
    if let Some(path) = args.json {
        write_file(&resolve_out(path), |w| {
            serde_json::to_writer_pretty(w, &reports)?;
            Ok(())
        })?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILED })
}

fn dispatch(command: Command) -> Result<i32> {
    let config = match command {
        Command::Validate(v) => return validate(v),
        Command::Replay(r) => {
            let mut sidecar = Sidecar::read(&r.sidecar)?;
            if let Some(out) = r.out {
                *sidecar.config.out_mut() = resolve_out(out);
            }
            sidecar.config
        }
        Command::Sweep(a) => a.config(),
        Command::StaticScan(a) => RunConfig::StaticScan { dissipator: a.dissipator, gamma: a.gamma, out: resolve_out(a.out) },
        Command::Trajectory(a) => RunConfig::Trajectory {
            point: FamilyPoint::new(a.family, a.dissipator, a.gamma, a.omega).with_delta(a.delta),
            s0: a.s0,
            options: TrajectoryOptions { t_end: a.t_end, sample_dt: a.dt, stroboscopic: a.stroboscopic },
            out: resolve_out(a.out),
        },
        Command::Analytic(a) => a.config()?,
    };
    for p in config.execute()? {
        println!("{}", p.display());
    }
    Ok(EXIT_OK)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::InvalidArgument(_) | Error::InvalidModel(_) | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(cli.command))),
        None => dispatch(cli.command),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
