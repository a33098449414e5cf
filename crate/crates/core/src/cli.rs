//! Command-line front end: `toa kijowski|halfline|extension|moments|check`.
//!
//! Runs read a JSON configuration (see [`RunConfig`]) and write CSV or JSON.
//! Exit codes: 0 success or passed check, 1 failed check, 2 invalid input or
//! unmet precondition, 3 resolution guard.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::arrival::{
    apply_tab_momentum, arrival_mean_flux, auto_time_grid, covariance_check, default_time_step,
    deficiency_check, kijowski_distribution, presence_mean, second_moment_check,
};
use crate::error::ToaError;
use crate::extensions::{alpha_covariance_violation, alpha_distribution, alpha_time_grid, constant_field_distribution};
use crate::halfline::{momentum_density, operator_moment, overlap_kernel_check, GaussianWindow, HalfLineState};
use crate::numerics::Grid;
use crate::report::{CheckReport, Distribution};
use crate::states::{build_state, to_energy_channels, GaussianSpec, GridParams, MomentumState, PhysicalConstants};

/// Environment variable capping the worker threads (0 = automatic).
pub const THREADS_ENV: &str = "TOA_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub re: f64,
    pub im: f64,
}

impl Default for Weight {
    fn default() -> Self {
        Self { re: 1.0, im: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub p0: f64,
    pub sigma_p: f64,
    pub x0: f64,
    #[serde(default)]
    pub weight: Weight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub pmax: f64,
    pub n: usize,
}

/// Test state `2λ^{3/2} x e^{-λx}` on `[0, xmax]` for the `halfline` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfLineConfig {
    pub lambda: f64,
    pub xmax: f64,
    pub nx: usize,
}

impl Default for HalfLineConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            xmax: 40.0,
            nx: 8001,
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Run configuration.
///
/// ```json
/// {"hbar": 1, "mass": 1,
///  "packets": [{"p0": 5, "sigma_p": 0.2, "x0": -10, "weight": {"re": 1, "im": 0}}],
///  "grid": {"pmax": 10, "n": 4096},
///  "halfline": {"lambda": 1, "xmax": 40, "nx": 8001}}
/// ```
///
/// `hbar`, `mass`, packet weights and the `halfline` section are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    pub packets: Vec<PacketConfig>,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfline: Option<HalfLineConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            packets: vec![PacketConfig {
                p0: 5.0,
                sigma_p: 0.2,
                x0: -10.0,
                weight: Weight::default(),
            }],
            grid: GridConfig { pmax: 10.0, n: 4096 },
            halfline: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let config: Self = serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        PhysicalConstants::new(self.hbar, self.mass).map_err(|e| e.to_string())?;
        if self.packets.is_empty() {
            return Err("config needs at least one packet".into());
        }
        if self.grid.n < 64 || self.grid.n % 2 != 0 {
            return Err(format!("grid.n must be even and at least 64, got {}", self.grid.n));
        }
        for (k, p) in self.packets.iter().enumerate() {
            if !(p.sigma_p > 0.0) {
                return Err(format!("packet {k}: sigma_p must be positive"));
            }
            let reach = p.p0.abs() + 8.0 * p.sigma_p;
            if !(self.grid.pmax > reach) {
                return Err(format!(
                    "grid.pmax = {} must exceed |p0| + 8 sigma_p = {reach} (packet {k})",
                    self.grid.pmax
                ));
            }
        }
        if let Some(h) = self.halfline {
            if !(h.lambda > 0.0 && h.xmax > 0.0 && h.nx >= 8) {
                return Err("halfline needs lambda > 0, xmax > 0 and nx >= 8".into());
            }
        }
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants {
            hbar: self.hbar,
            mass: self.mass,
        }
    }

    pub fn specs(&self) -> Vec<GaussianSpec> {
        self.packets
            .iter()
            .map(|p| GaussianSpec::new(p.p0, p.sigma_p, p.x0).with_weight(C64::new(p.weight.re, p.weight.im)))
            .collect()
    }

    pub fn state(&self) -> crate::Result<MomentumState> {
        build_state(
            &self.specs(),
            self.constants(),
            GridParams {
                pmax: self.grid.pmax,
                n: self.grid.n,
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Covariance,
    SecondMoment,
    Deficiency,
    Kernel,
    FluxEquality,
    AlphaViolation,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// JSON run configuration (default: one packet p0=5, sigma_p=0.2, x0=-10 on pmax=10, n=4096)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Start of the output grid (time, or momentum for `halfline`)
    #[arg(long, allow_negative_numbers = true)]
    pub tmin: Option<f64>,
    /// End of the output grid
    #[arg(long, allow_negative_numbers = true)]
    pub tmax: Option<f64>,
    /// Number of output grid nodes
    #[arg(long)]
    pub nt: Option<usize>,
    /// Time shift for covariance checks
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub tau: f64,
    /// Domain phase of the self-adjoint extension
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Constant field strength g for the p/mg time operator
    #[arg(long, allow_negative_numbers = true)]
    pub field: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Arrival-time density at x = 0
    Kijowski(RunArgs),
    /// Momentum density of the half-line test state
    Halfline(RunArgs),
    /// Spectral density of the self-adjoint extension with phase --alpha
    Extension(RunArgs),
    /// Mean arrival, passage and presence times (JSON)
    Moments(RunArgs),
    /// Run an invariant check and print its report (JSON)
    Check {
        #[arg(value_enum)]
        which: CheckKind,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Debug, Parser)]
#[command(name = "toa", version, about = "Time-of-arrival distributions for free quantum particles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Failure of a CLI run with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ToaError> for Failure {
    fn from(e: ToaError) -> Self {
        let code = match e {
            ToaError::Resolution { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses the process arguments, runs the command and maps the outcome to
/// an exit code.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let outcome = thread_count().and_then(|threads| match threads {
        0 => execute(&cli.command),
        k => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Failure::input(format!("thread pool: {e}")))?
            .install(|| execute(&cli.command)),
    });
    match outcome {
        Ok(passed) => ExitCode::from(if passed { 0 } else { 1 }),
        Err(f) => {
            eprintln!("toa: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn thread_count() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
    }
}

/// Runs one command; `Ok(false)` means a check ran and failed.
pub fn execute(command: &Command) -> Result<bool, Failure> {
    let (name, args) = match command {
        Command::Kijowski(a) => ("kijowski", a),
        Command::Halfline(a) => ("halfline", a),
        Command::Extension(a) => ("extension", a),
        Command::Moments(a) => ("moments", a),
        Command::Check { args, .. } => ("check", args),
    };
    let config = load_config(args.config.as_deref())?;
    let hash = fingerprint(&config, command);
    let (text, passed) = match command {
        Command::Kijowski(a) => (cmd_kijowski(&config, a, &hash)?, true),
        Command::Halfline(a) => (cmd_halfline(&config, a, &hash)?, true),
        Command::Extension(a) => (cmd_extension(&config, a, &hash)?, true),
        Command::Moments(a) => (cmd_moments(&config, a, &hash)?, true),
        Command::Check { which, args } => {
            let report = cmd_check(&config, *which, args)?;
            let mut value = serde_json::to_value(&report).expect("report serializes");
            value["config_sha256"] = Value::String(hash.clone());
            (pretty(&value), report.passed)
        }
    };
    write_output(args.out.as_deref(), &text).map_err(|e| Failure::input(format!("{name}: {e}")))?;
    Ok(passed)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text).map_err(Failure::input)
        }
    }
}

/// SHA-256 of the canonical configuration, the command and every flag that
/// affects the data (the output path does not).
pub fn fingerprint(config: &RunConfig, command: &Command) -> String {
    let (name, args) = match command {
        Command::Kijowski(a) => ("kijowski".to_string(), a),
        Command::Halfline(a) => ("halfline".to_string(), a),
        Command::Extension(a) => ("extension".to_string(), a),
        Command::Moments(a) => ("moments".to_string(), a),
        Command::Check { which, args } => (format!("check {which:?}"), args),
    };
    let flags = json!({
        "command": name,
        "format": format!("{:?}", args.format),
        "tmin": args.tmin,
        "tmax": args.tmax,
        "nt": args.nt,
        "tau": args.tau,
        "alpha": args.alpha,
        "field": args.field,
    });
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(config).expect("config serializes").as_bytes());
    hasher.update(flags.to_string().as_bytes());
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn write_output(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    format!("{x:.14e}")
}

/// Output grid from the flags, with missing pieces taken from `auto`.
fn output_grid(args: &RunArgs, auto: impl FnOnce() -> crate::Result<Grid>, step: f64) -> Result<Grid, Failure> {
    let (lo, hi) = match (args.tmin, args.tmax) {
        (Some(a), Some(b)) => (a, b),
        (a, b) => {
            let g = auto()?;
            (a.unwrap_or(g.start()), b.unwrap_or(g.stop()))
        }
    };
    let n = args.nt.unwrap_or(((hi - lo) / step).ceil().max(1.0) as usize + 1);
    Ok(Grid::new(lo, hi, n)?)
}

fn distribution_output(
    dist: &Distribution,
    column: &str,
    command: &str,
    hash: &str,
    extra: &[(&str, f64)],
    format: Format,
) -> String {
    let mut meta = Map::new();
    meta.insert("command".into(), json!(command));
    meta.insert("config_sha256".into(), json!(hash));
    meta.insert("provenance".into(), json!(dist.meta.provenance));
    meta.insert("total".into(), json!(dist.total));
    meta.insert("norm_deficit".into(), json!(1.0 - dist.total));
    if let Some(ch) = &dist.meta.channels {
        meta.insert("plus_total".into(), json!(ch.plus_total));
        meta.insert("minus_total".into(), json!(ch.minus_total));
    }
    for (k, v) in &dist.meta.cutoffs {
        meta.insert(k.clone(), json!(v));
    }
    for (k, v) in extra {
        meta.insert((*k).into(), json!(v));
    }
    meta.insert("grid_start".into(), json!(dist.grid.start()));
    meta.insert("grid_stop".into(), json!(dist.grid.stop()));
    meta.insert("grid_n".into(), json!(dist.grid.len()));
    match format {
        Format::Json => pretty(&json!({
            column: dist.grid.nodes(),
            "density": dist.density,
            "meta": Value::Object(meta),
        })),
        Format::Csv => {
            let mut s = String::new();
            for (k, v) in &meta {
                let v = match v {
                    Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap_or(f64::NAN)),
                    Value::String(t) => t.clone(),
                    other => other.to_string(),
                };
                let _ = writeln!(s, "# {k} = {v}");
            }
            let _ = writeln!(s, "{column},density");
            for (x, d) in dist.grid.nodes().iter().zip(&dist.density) {
                let _ = writeln!(s, "{},{}", num(*x), num(*d));
            }
            s
        }
    }
}

pub fn cmd_kijowski(config: &RunConfig, args: &RunArgs, hash: &str) -> Result<String, Failure> {
    let state = config.state()?;
    let grid = output_grid(args, || auto_time_grid(&state), default_time_step(&state))?;
    let dist = kijowski_distribution(&state, &grid)?;
    Ok(distribution_output(&dist, "t", "kijowski", hash, &[], args.format))
}

pub fn cmd_halfline(config: &RunConfig, args: &RunArgs, hash: &str) -> Result<String, Failure> {
    let h = config.halfline.unwrap_or_default();
    let state = HalfLineState::linear_exponential(config.constants(), h.lambda, h.xmax, h.nx)?;
    let lo = args.tmin.unwrap_or(-20.0 * h.lambda * config.hbar);
    let hi = args.tmax.unwrap_or(20.0 * h.lambda * config.hbar);
    let grid = Grid::new(lo, hi, args.nt.unwrap_or(801))?;
    let dist = momentum_density(&state, &grid)?;
    let anomaly = operator_moment(&state, 3)?.im;
    Ok(distribution_output(
        &dist,
        "p",
        "halfline",
        hash,
        &[("lambda", h.lambda), ("im_p3", anomaly)],
        args.format,
    ))
}

pub fn cmd_extension(config: &RunConfig, args: &RunArgs, hash: &str) -> Result<String, Failure> {
    let state = config.state()?;
    let channels = to_energy_channels(&state)?;
    let grid = output_grid(args, || alpha_time_grid(&channels, args.alpha), default_time_step(&state))?;
    let dist = alpha_distribution(&channels, args.alpha, &grid)?;
    Ok(distribution_output(&dist, "tau", "extension", hash, &[], args.format))
}

pub fn cmd_moments(config: &RunConfig, args: &RunArgs, hash: &str) -> Result<String, Failure> {
    let state = config.state()?;
    let mut out = Map::new();
    out.insert("command".into(), json!("moments"));
    out.insert("config_sha256".into(), json!(hash));

    let recoverable = |e: &ToaError| !matches!(e, ToaError::Resolution { .. });
    match arrival_mean_flux(&state) {
        Ok(f) => {
            out.insert("t_flux".into(), json!(f.flux_mean));
            out.insert("t_operator".into(), json!(f.operator_mean));
            out.insert("flux_total".into(), json!(f.flux_total));
        }
        Err(e) if recoverable(&e) => {
            out.insert("t_flux".into(), Value::Null);
            out.insert("t_flux_error".into(), json!(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    }
    match presence_mean(&state) {
        Ok(p) => {
            out.insert("t_presence".into(), json!(p.operator_mean));
            out.insert("t_presence_time_integral".into(), json!(p.time_mean));
        }
        Err(e) if recoverable(&e) => {
            out.insert("t_presence".into(), Value::Null);
            out.insert("t_presence_error".into(), json!(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    }
    let dist = kijowski_distribution(&state, &auto_time_grid(&state)?)?;
    out.insert("distribution_total".into(), json!(dist.total));
    out.insert("distribution_mean".into(), json!(dist.raw_moment(1) / dist.total));
    out.insert("distribution_peak".into(), json!(dist.argmax()));
    out.insert("second_moment_dist".into(), json!(dist.raw_moment(2)));
    match apply_tab_momentum(&state) {
        Ok(t) => out.insert("second_moment_operator".into(), json!(t.norm_sqr())),
        Err(e) => out.insert("second_moment_operator_error".into(), json!(e.to_string())),
    };
    if let Some(g) = args.field {
        let d = constant_field_distribution(&state, g)?;
        let mean = d.raw_moment(1) / d.total;
        let var = d.raw_moment(2) / d.total - mean * mean;
        out.insert(
            "constant_field".into(),
            json!({ "g": g, "mean": mean, "std": var.max(0.0).sqrt(), "total": d.total }),
        );
    }
    Ok(pretty(&Value::Object(out)))
}

pub fn cmd_check(config: &RunConfig, which: CheckKind, args: &RunArgs) -> Result<CheckReport, Failure> {
    let report = match which {
        CheckKind::Deficiency => deficiency_check(),
        CheckKind::Covariance => {
            let state = config.state()?;
            let grid = match (args.tmin, args.tmax) {
                (None, None) if args.nt.is_none() => None,
                _ => Some(output_grid(args, || auto_time_grid(&state), default_time_step(&state))?),
            };
            covariance_check(&state, args.tau, grid.as_ref())?
        }
        CheckKind::SecondMoment => second_moment_check(&config.state()?)?,
        CheckKind::FluxEquality => arrival_mean_flux(&config.state()?)?.report,
        CheckKind::AlphaViolation => {
            let channels = to_energy_channels(&config.state()?)?;
            alpha_covariance_violation(&channels, args.alpha, args.tau)?
        }
        CheckKind::Kernel => {
            let windows: Vec<GaussianWindow> = config
                .packets
                .iter()
                .map(|p| GaussianWindow {
                    weight: C64::new(p.weight.re, p.weight.im),
                    ..GaussianWindow::new(p.p0, p.sigma_p)
                })
                .collect();
            let f = windows[0];
            let g = *windows.get(1).unwrap_or(&f);
            overlap_kernel_check(&f, &g, config.constants())?
        }
    };
    Ok(report)
}
