//! Command-line front end: argument parsing, dispatch, and CSV/JSON output.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::coords::{ConeChart, GridSpec};
use crate::error::{Error, Result};
use crate::flow::{run_flow, FlowProblem};
use crate::heat::{check_max_principle, solve_singular, solve_truncated, HeatProblem, SpaceTimeField};
use crate::holder::{parabolic_holder_norm, weighted_holder_norm, HolderOptions, HolderSpec};
use crate::soliton::{
    construct_football, export_as_cone_metric, integrate_profile_with, limit_coefficient, shoot_for_beta, sweep,
    sweep_values, ExportSource, ProfileOptions, ShootOptions, SolitonProfile,
};
use crate::surface::{ConeMetric, ScalarField};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "CONEFLOW_THREADS";

#[derive(Debug, Clone, Parser)]
#[command(name = "coneflow", version, about = "Solitons, Ricci flow and Hölder norms on cone surfaces")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Integrate one soliton profile and write `r,u,A,B`.
    #[command(allow_negative_numbers = true)]
    Soliton(SolitonArgs),
    /// Shoot for the profile with a given cone order.
    #[command(name = "soliton-solve", allow_negative_numbers = true)]
    SolitonSolve(SolveArgs),
    /// Integrate a family of profiles, spaced geometrically in `c + 1`.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Build a football with two cone points and write its JSON summary.
    #[command(allow_negative_numbers = true)]
    Football(FootballArgs),
    /// Run the normalized flow from an exported soliton metric.
    #[command(allow_negative_numbers = true)]
    Flow(FlowArgs),
    /// Solve a linear heat problem on a flat cone.
    #[command(allow_negative_numbers = true)]
    Heat(HeatArgs),
    /// Weighted Hölder norm of a field CSV, or of a directory of frames.
    #[command(name = "holder-norm", allow_negative_numbers = true)]
    HolderNorm(HolderArgs),
}

fn shooting_c(s: &str) -> std::result::Result<f64, String> {
    let c: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if c > -1.0 && c.is_finite() {
        Ok(c)
    } else {
        Err("c must exceed -1".into())
    }
}

fn cone_order(s: &str) -> std::result::Result<f64, String> {
    let b: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if b > -1.0 && b.is_finite() {
        Ok(b)
    } else {
        Err("cone order must exceed -1".into())
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err("value must be positive".into())
    }
}

fn open_unit(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err("alpha must lie strictly inside (0, 1)".into())
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProfileFlags {
    /// Largest radius to integrate to.
    #[arg(long = "rmax", default_value_t = 1e6, value_parser = positive)]
    pub r_max: f64,
    /// Relative and absolute integration tolerance.
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
    /// Stop once `r B` falls below this.
    #[arg(long = "eps-b", default_value_t = 1e-12, value_parser = positive)]
    pub eps_b: f64,
    /// Launch radius of the series start.
    #[arg(long = "r-start", default_value_t = 1e-4, value_parser = positive)]
    pub r_start: f64,
}

impl ProfileFlags {
    fn options(&self) -> ProfileOptions {
        ProfileOptions { r_start: self.r_start, r_max: self.r_max, eps_b: self.eps_b, tol: self.tol }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolitonArgs {
    #[arg(long, value_parser = shooting_c)]
    pub c: f64,
    #[command(flatten)]
    pub profile: ProfileFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long, value_parser = cone_order)]
    pub beta: f64,
    #[arg(long = "tol-beta", default_value_t = 1e-8, value_parser = positive)]
    pub tol_beta: f64,
    #[arg(long, default_value_t = 1e-11, value_parser = positive)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long = "c-min", default_value_t = -0.99, value_parser = shooting_c)]
    pub c_min: f64,
    #[arg(long = "c-max", default_value_t = 100.0, value_parser = shooting_c)]
    pub c_max: f64,
    #[command(flatten)]
    pub profile: ProfileFlags,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FootballArgs {
    #[arg(long, value_parser = cone_order)]
    pub beta1: f64,
    #[arg(long, value_parser = cone_order)]
    pub beta2: f64,
    #[arg(long = "tol-beta", default_value_t = 1e-8, value_parser = positive)]
    pub tol_beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    /// Start from a metric JSON file instead of an exported profile.
    #[arg(long, conflicts_with_all = ["c", "beta"])]
    pub metric: Option<PathBuf>,
    /// Also write the initial metric as JSON.
    #[arg(long = "save-metric")]
    pub save_metric: Option<PathBuf>,
    /// Export the profile with this `c` (default 0, the round sphere).
    #[arg(long, value_parser = shooting_c, conflicts_with = "beta")]
    pub c: Option<f64>,
    /// Export the profile shot for this cone order instead.
    #[arg(long, value_parser = cone_order)]
    pub beta: Option<f64>,
    #[arg(long = "k-max", default_value_t = 6)]
    pub k_max: u32,
    #[arg(long = "n-w", default_value_t = 128)]
    pub n_w: usize,
    #[arg(long = "n-theta", default_value_t = 8)]
    pub n_theta: usize,
    #[arg(long = "t-final", default_value_t = 0.5, value_parser = positive)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1e-2, value_parser = positive)]
    pub dt: f64,
    /// Write `u_NNNNNN.csv` every this many steps (0 = never).
    #[arg(long = "frame-every", default_value_t = 0)]
    pub frame_every: usize,
    #[arg(long = "out-dir", default_value = "flow_out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Forcing {
    Zero,
    Constant,
    Bump,
}

#[derive(Debug, Clone, Args)]
pub struct HeatArgs {
    #[arg(long, default_value_t = 1.0, value_parser = cone_order)]
    pub beta: f64,
    #[arg(long = "k-max", default_value_t = 8)]
    pub k_max: u32,
    #[arg(long = "w-max", default_value_t = 2.0)]
    pub w_max: f64,
    /// Radial nodes per unit of `w`.
    #[arg(long = "per-unit", default_value_t = 8)]
    pub per_unit: usize,
    #[arg(long = "n-theta", default_value_t = 8)]
    pub n_theta: usize,
    #[arg(long = "t-final", default_value_t = 0.5, value_parser = positive)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1e-2, value_parser = positive)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = Forcing::Bump)]
    pub forcing: Forcing,
    /// Centre in `w` of the bump forcing.
    #[arg(long, default_value_t = -1.0)]
    pub center: f64,
    /// Truncation levels to compare, e.g. `4,6,8`; the deepest solution is written.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<u32>,
    #[arg(long = "out-dir", default_value = "heat_out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HolderArgs {
    /// Field CSV with columns `w,theta,value`.
    #[arg(long, required_unless_present = "frames", conflicts_with = "frames")]
    pub field: Option<PathBuf>,
    /// Directory holding `times.csv` and `frame_NNNNNN.csv`; measures the parabolic norm.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub l: u8,
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub alpha: f64,
    /// Subsample every n-th node in each direction.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (program name first). Errors carry clap's exit code 2.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_rows(path: &Path, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Writes a field as `w,theta,value` rows, `theta` fastest.
pub fn write_field_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(field.to_csv().as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn read_field_csv(path: &Path) -> Result<ScalarField> {
    ScalarField::from_csv(&fs::read_to_string(path)?).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn frame_name(prefix: &str, n: usize) -> String {
    format!("{prefix}_{n:06}.csv")
}

fn write_frames(dir: &Path, field: &SpaceTimeField) -> Result<()> {
    write_rows(&dir.join("times.csv"), "t", field.times().iter().map(|&t| vec![t]))?;
    for (n, frame) in field.frames().iter().enumerate() {
        write_field_csv(&dir.join(frame_name("frame", n)), frame)?;
    }
    Ok(())
}

fn read_frames(dir: &Path) -> Result<SpaceTimeField> {
    let text = fs::read_to_string(dir.join("times.csv"))?;
    let times = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| Error::Parse(format!("times.csv: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let frames =
        (0..times.len()).map(|n| read_field_csv(&dir.join(frame_name("frame", n)))).collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(times, frames)
}

/// Fixed six decimals without a sign on values that round to zero.
fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|ch| ch == '0' || ch == '.') => rest.to_string(),
        _ => s,
    }
}

fn summary(profile: &SolitonProfile) -> Result<String> {
    let lim = limit_coefficient(profile)?;
    Ok(format!(
        "A_c={} ±{:.0e} beta={} area={:.5}",
        fixed6(lim.a_c),
        lim.uncertainty,
        fixed6(-lim.a_c - 2.0),
        profile.area
    ))
}

fn write_profile(path: &Path, profile: &SolitonProfile) -> Result<()> {
    write_rows(path, "r,u,A,B", profile.samples.iter().map(|s| vec![s.r, s.u, s.a, s.b]))
}

#[derive(Serialize)]
struct FootballSummary {
    beta1: f64,
    beta2: f64,
    lambda: f64,
    c: f64,
    angular_factor: f64,
    angles: [f64; 2],
    area: f64,
}

fn flow_metric(args: &FlowArgs) -> Result<ConeMetric> {
    if let Some(path) = &args.metric {
        return ConeMetric::from_json(&fs::read_to_string(path)?);
    }
    let profile = match args.beta {
        Some(beta) => shoot_for_beta(beta, 1e-8, &ShootOptions::default())?.1,
        None => integrate_profile_with(args.c.unwrap_or(0.0), &ProfileOptions::default())?,
    };
    let source = ExportSource::from(&profile);
    let chart = ConeChart::new(source.chart_order(), args.k_max)?;
    let grid = GridSpec::for_chart(&chart, source.natural_w_max(args.k_max), args.n_w, args.n_theta)?;
    export_as_cone_metric(source, grid)
}

fn run_flow_command(args: &FlowArgs) -> Result<String> {
    let metric = flow_metric(args)?;
    if let Some(path) = &args.save_metric {
        let mut out = create(path)?;
        out.write_all(metric.to_json()?.as_bytes())?;
        out.flush()?;
    }
    let problem = FlowProblem::new(metric, args.t_final, args.dt)?;
    let tr = run_flow(&problem)?;
    let rows =
        tr.ledger.iter().map(|r| vec![r.t, r.volume, r.gb_integral, r.boundary_flux, r.sup_u, r.picard_iters as f64]);
    let mut out = create(&args.out_dir.join("ledger.csv"))?;
    writeln!(out, "t,volume,gb_integral,boundary_flux,sup_u,picard_iters")?;
    for (row, r) in rows.zip(&tr.ledger) {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            row[0], row[1], row[2], row[3], row[4], r.picard_iters
        )?;
    }
    out.flush()?;
    if args.frame_every > 0 {
        for (n, frame) in tr.u.frames().iter().enumerate().step_by(args.frame_every) {
            write_field_csv(&args.out_dir.join(frame_name("u", n)), frame)?;
        }
    }
    write_json(&args.out_dir.join("summary.json"), &tr)?;
    Ok(format!(
        "r={:.6} volume_drift={:.3e} gb_drift={:.3e} sup_u={:.3e} flags={}",
        problem.r_const,
        tr.relative_volume_drift(),
        tr.gauss_bonnet_drift(),
        tr.max_sup_u(),
        tr.flags.len()
    ))
}

fn run_heat_command(args: &HeatArgs) -> Result<String> {
    let chart = ConeChart::new(args.beta, args.k_max)?;
    let grid = GridSpec::with_spacing(&chart, args.w_max, args.per_unit, args.n_theta)?;
    let metric = ConeMetric::flat_cone(chart, grid)?;
    let f = match args.forcing {
        Forcing::Zero => ScalarField::zeros(grid),
        Forcing::Constant => ScalarField::constant(grid, 1.0),
        Forcing::Bump => ScalarField::from_fn(grid, |w, _| (-4.0 * (w - args.center).powi(2)).exp()),
    };
    let problem = HeatProblem::unit_coefficient(metric, f, ScalarField::zeros(grid), args.t_final, args.dt)?;
    let (solution, gaps) = if args.levels.is_empty() {
        (solve_truncated(&problem, args.k_max)?, None)
    } else {
        let (sol, study) = solve_singular(&problem, &args.levels, None)?;
        write_json(&args.out_dir.join("truncation.json"), &study)?;
        (sol, Some(study.sup_gaps))
    };
    write_frames(&args.out_dir, &solution)?;
    let fmax = f_sup(&problem);
    let bound = check_max_principle(&solution, 0.0, fmax);
    let mut line = format!("frames={} max_principle_excess={:.3e}", solution.len(), bound.excess);
    if let Some(g) = gaps {
        let g: Vec<String> = g.iter().map(|x| format!("{x:.3e}")).collect();
        line.push_str(&format!(" sup_gaps=[{}]", g.join(",")));
    }
    Ok(line)
}

fn f_sup(problem: &HeatProblem) -> f64 {
    problem.f.frames().iter().flat_map(|f| f.values().iter().copied()).fold(0.0, f64::max)
}

fn run_holder_command(args: &HolderArgs) -> Result<String> {
    let spec = HolderSpec::new(args.l, args.alpha)?;
    let opts = HolderOptions { stride: args.stride.max(1), ..HolderOptions::default() };
    let report = match (&args.field, &args.frames) {
        (Some(path), _) => weighted_holder_norm(&read_field_csv(path)?, spec, &opts)?,
        (None, Some(dir)) => parabolic_holder_norm(&read_frames(dir)?, spec, &opts)?,
        (None, None) => return Err(Error::Domain("either --field or --frames is required".into())),
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => println!("{json}"),
    }
    let k = report.saturating_k.map_or("none".to_string(), |k| k.to_string());
    Ok(format!("total={:.6e} saturating_k={k} unbounded_trend={}", report.total, report.unbounded_trend))
}

/// Executes a parsed command, writing its artifacts; returns the one-line summary.
pub fn run(config: &RunConfig) -> Result<String> {
    match &config.command {
        Command::Soliton(a) => {
            let profile = integrate_profile_with(a.c, &a.profile.options())?;
            if let Some(path) = &a.out {
                write_profile(path, &profile)?;
            }
            summary(&profile)
        }
        Command::SolitonSolve(a) => {
            let opts = ShootOptions {
                profile: ProfileOptions { tol: a.tol, ..ProfileOptions::default() },
                ..ShootOptions::default()
            };
            let (c, profile) = shoot_for_beta(a.beta, a.tol_beta, &opts)?;
            if let Some(path) = &a.out {
                write_profile(path, &profile)?;
            }
            Ok(format!("c={c:.10} {}", summary(&profile)?))
        }
        Command::Sweep(a) => {
            let cs = sweep_values(a.n, a.c_min, a.c_max)?;
            let rows = sweep(&cs, &a.profile.options())?;
            write_rows(
                &a.out,
                "c,A_c,uncertainty,beta,area,minK",
                rows.iter().map(|r| vec![r.c, r.a_c, r.uncertainty, r.beta, r.area, r.min_k]),
            )?;
            let monotone = rows.windows(2).all(|w| w[1].a_c > w[0].a_c);
            let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
            let min_k = rows.iter().map(|r| r.min_k).fold(f64::INFINITY, f64::min);
            Ok(format!("rows={} monotone={monotone} max_residual={worst:.3e} min_curvature={min_k:.6e}", rows.len()))
        }
        Command::Football(a) => {
            let fb = construct_football(a.beta1, a.beta2, a.tol_beta, &ShootOptions::default())?;
            let s = FootballSummary {
                beta1: fb.beta1,
                beta2: fb.beta2,
                lambda: fb.lambda,
                c: fb.c,
                angular_factor: fb.angular_factor,
                angles: fb.angles(),
                area: fb.area(),
            };
            match &a.out {
                Some(path) => write_json(path, &s)?,
                None => println!("{}", serde_json::to_string_pretty(&s)?),
            }
            Ok(format!("c={:.10} lambda={:.6} area={:.5}", fb.c, fb.lambda, fb.area()))
        }
        Command::Flow(a) => run_flow_command(a),
        Command::Heat(a) => run_heat_command(a),
        Command::HolderNorm(a) => run_holder_command(a),
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses, runs and reports; returns the process exit code (0 ok, 1 runtime error, 2 usage error).
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    match run(&config) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
