//! Command-line frontend: subcommand dispatch, config-file defaults and
//! deterministic report emission.
//!
//! All floating output goes through [`fmt_float`]: integral values print
//! as integers, everything else with 17 significant digits, so repeated
//! invocations are byte-identical and every number re-parses to the
//! same double.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::newton::{SolutionReport, SolveOptions};
use crate::quad::RadialGrid;
use crate::scales::LambdaPair;
use crate::spectrum::SystemParams;
use crate::tower::TowerProfile;
use crate::{kernel, masses, newton, quad, scales, spectrum};

/// Environment variable overriding the directory of relative `--output`
/// paths.
pub const OUTDIR_ENV: &str = "BUBBLE_TOWER_OUTDIR";

/// Deterministic float formatting: exact integers print bare, all other
/// values with 17 significant digits (round-trip exact).
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == x.trunc() && x.abs() < 1.0e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// a = b = 1, alpha = (2, 2)
    A2,
    /// a = 1, b = 2, alpha = (2, 2)
    B2,
    /// a = 1, b = 3, alpha = (2, 2)
    G2,
    /// a = b = 2, alpha = (2, 2): the scalar reduction at ab = 4
    Sinh,
}

impl Preset {
    fn values(self) -> (f64, f64, f64, f64) {
        match self {
            Preset::A2 => (1.0, 1.0, 2.0, 2.0),
            Preset::B2 => (1.0, 2.0, 2.0, 2.0),
            Preset::G2 => (1.0, 3.0, 2.0, 2.0),
            Preset::Sinh => (2.0, 2.0, 2.0, 2.0),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "bubble-tower",
    version,
    about = "Bubble-tower profiles, mass tables and radial solves for 2x2 singular Liouville systems on the unit disc"
)]
struct Cli {
    /// Plain key=value defaults file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,

    /// Output path (stdout when omitted). Relative paths are resolved
    /// against $BUBBLE_TOWER_OUTDIR when that variable is set.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct ParamArgs {
    /// Named parameter set; explicit flags override its entries.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct LambdaArgs {
    #[arg(long, allow_hyphen_values = true)]
    log10_lambda1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    log10_lambda2: Option<f64>,
    /// Linear-scale alternative to --log10-lambda1.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Linear-scale alternative to --log10-lambda2.
    #[arg(long)]
    lambda2: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct SolverArgs {
    /// Grid nodes per unit of log radius.
    #[arg(long)]
    nodes_per_unit: Option<f64>,
    #[arg(long)]
    max_iterations: Option<u32>,
    /// Convergence threshold on the discrete equations.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exponent sequence beta_1..beta_k and k_max.
    Betas {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Maximal tower height for the given parameters.
    Kmax {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Local masses at height k (divided by 2 pi).
    Masses {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
    },
    /// All mass pairs over both orientations, deduplicated.
    MassTable {
        #[command(flatten)]
        params: ParamArgs,
        /// Height cap; mandatory when k_max is infinite.
        #[arg(long)]
        k_limit: Option<u32>,
    },
    /// Even-integer exponents and the rotation order they require.
    Symmetry {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Concentration scales, their lambda exponents and admissibility.
    Deltas {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
        #[command(flatten)]
        lambda: LambdaArgs,
        /// Exponent margin in the height-k_max admissibility constraint.
        #[arg(long)]
        gamma: Option<f64>,
        /// Smallness threshold for both lambdas.
        #[arg(long)]
        lambda_bar: Option<f64>,
    },
    /// Radial profile dump of the tower (CSV for plotting).
    TowerDump {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
        #[command(flatten)]
        lambda: LambdaArgs,
        /// Number of sample radii.
        #[arg(long)]
        samples: Option<u32>,
    },
    /// Sup of |Theta_ell| over each annulus.
    ThetaSup {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
        #[command(flatten)]
        lambda: LambdaArgs,
    },
    /// L^p residual norms along a geometric lambda sweep.
    ResidualSweep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        log10_lambda_start: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        log10_lambda_end: Option<f64>,
        #[arg(long)]
        steps: Option<u32>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Quadrature identities for a single bubble exponent.
    Identities {
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Bounded symmetric kernel modes of the linearized bubble operator.
    Kernel {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        m: Option<u32>,
        /// Also report the max ODE residual of the returned modes.
        #[arg(long)]
        check_ode: bool,
    },
    /// Damped Newton solve seeded by the tower.
    Newton {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the solution profile as CSV to this path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Chain of Newton solves along a geometric lambda path.
    Continuation {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        log10_lambda_start: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        log10_lambda_end: Option<f64>,
        #[arg(long)]
        steps: Option<u32>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

/// key=value defaults, applied wherever a flag was not given.
struct ConfigFile(HashMap<String, String>);

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Validation(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Validation(format!(
                        "config line {} is not key=value: {line:?}",
                        lineno + 1
                    ))
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(ConfigFile(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Validation(format!("config value for {key} does not parse: {raw:?}"))
            }),
        }
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

fn require<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Validation(format!("missing required parameter: {what}")))
}

impl ParamArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<SystemParams> {
        let preset = match pick(self.preset, cfg, "preset")? {
            Some(p) => Some(p.values()),
            None => None,
        };
        let field = |flag: Option<f64>, key: &str, idx: usize| -> Result<f64> {
            match pick(flag, cfg, key)? {
                Some(v) => Ok(v),
                None => match preset {
                    Some(vals) => Ok([vals.0, vals.1, vals.2, vals.3][idx]),
                    None => Err(Error::Validation(format!(
                        "missing required parameter: --{key} (or --preset)"
                    ))),
                },
            }
        };
        SystemParams::new(
            field(self.a, "a", 0)?,
            field(self.b, "b", 1)?,
            field(self.alpha1, "alpha1", 2)?,
            field(self.alpha2, "alpha2", 3)?,
        )
    }
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "a2" => Ok(Preset::A2),
            "b2" => Ok(Preset::B2),
            "g2" => Ok(Preset::G2),
            "sinh" => Ok(Preset::Sinh),
            other => Err(format!("unknown preset {other:?}")),
        }
    }
}

impl LambdaArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<LambdaPair> {
        let log10_1 = pick(self.log10_lambda1, cfg, "log10-lambda1")?;
        let log10_2 = pick(self.log10_lambda2, cfg, "log10-lambda2")?;
        let lin1 = pick(self.lambda1, cfg, "lambda1")?;
        let lin2 = pick(self.lambda2, cfg, "lambda2")?;
        let one = |log10: Option<f64>, lin: Option<f64>, name: &str| -> Result<f64> {
            match (log10, lin) {
                (Some(_), Some(_)) => Err(Error::Validation(format!(
                    "give either --log10-{name} or --{name}, not both"
                ))),
                (Some(l), None) => Ok(l * std::f64::consts::LN_10),
                (None, Some(v)) => {
                    if v > 0.0 {
                        Ok(v.ln())
                    } else {
                        Err(Error::Validation(format!("--{name} must be positive, got {v}")))
                    }
                }
                (None, None) => Err(Error::Validation(format!(
                    "missing required parameter: --log10-{name} (or --{name})"
                ))),
            }
        };
        LambdaPair::from_ln(
            one(log10_1, lin1, "lambda1")?,
            one(log10_2, lin2, "lambda2")?,
        )
    }
}

impl SolverArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<SolveOptions> {
        let mut opts = SolveOptions::default();
        if let Some(v) = pick(self.nodes_per_unit, cfg, "nodes-per-unit")? {
            opts.nodes_per_unit = v;
        }
        if let Some(v) = pick(self.max_iterations, cfg, "max-iterations")? {
            opts.max_iterations = v;
        }
        if let Some(v) = pick(self.tolerance, cfg, "tolerance")? {
            opts.tolerance = v;
        }
        Ok(opts)
    }
}

fn resolve_output(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(OUTDIR_ENV) {
            return PathBuf::from(dir).join(path);
        }
    }
    path.to_path_buf()
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<()> {
    match output {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let path = resolve_output(path);
            std::fs::write(&path, content).map_err(|e| {
                Error::Validation(format!("cannot write {}: {e}", path.display()))
            })
        }
    }
}

fn json_array(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|&v| fmt_float(v)).collect();
    format!("[{}]", inner.join(", "))
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    let format = match pick(cli.format, &cfg, "format")? {
        Some(f) => f,
        None => OutputFormat::Json,
    };
    let out = &cli.output;
    match &cli.command {
        Command::Betas { params, k } => {
            let p = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let betas = spectrum::compute_betas(&p, k)?;
            let body = match format {
                OutputFormat::Json => format!(
                    "{{\"betas\": {}, \"kmax\": \"{}\"}}\n",
                    json_array(betas.betas()),
                    betas.kmax()
                ),
                OutputFormat::Csv => {
                    let mut s = String::from("ell,beta\n");
                    for (i, v) in betas.betas().iter().enumerate() {
                        let _ = writeln!(s, "{},{}", i + 1, fmt_float(*v));
                    }
                    s
                }
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::Kmax { params } => {
            let p = params.resolve(&cfg)?;
            let kmax = spectrum::compute_kmax(&p);
            let body = match format {
                OutputFormat::Json => match kmax.as_finite() {
                    Some(v) => format!("{{\"kmax\": {v}}}\n"),
                    None => "{\"kmax\": \"inf\"}\n".to_string(),
                },
                OutputFormat::Csv => format!("kmax\n{kmax}\n"),
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::Masses { params, k } => {
            let p = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let betas = spectrum::compute_betas(&p, k)?;
            let m = masses::local_masses(&betas, k)?;
            let mp = masses::local_masses_product(&p, k)?;
            let tol = 1e-10 * m.m1_over_2pi.abs().max(m.m2_over_2pi.abs()).max(1.0);
            if (m.m1_over_2pi - mp.m1_over_2pi).abs() > tol
                || (m.m2_over_2pi - mp.m2_over_2pi).abs() > tol
            {
                return Err(Error::Internal(
                    "sum-form and product-form masses disagree".into(),
                ));
            }
            let body = match format {
                OutputFormat::Json => format!(
                    "{{\"m1_over_2pi\": {}, \"m2_over_2pi\": {}}}\n",
                    fmt_float(m.m1_over_2pi),
                    fmt_float(m.m2_over_2pi)
                ),
                OutputFormat::Csv => format!(
                    "m1_over_2pi,m2_over_2pi\n{},{}\n",
                    fmt_float(m.m1_over_2pi),
                    fmt_float(m.m2_over_2pi)
                ),
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::MassTable { params, k_limit } => {
            let p = params.resolve(&cfg)?;
            let k_limit = pick(*k_limit, &cfg, "k-limit")?;
            let limit = match (spectrum::compute_kmax(&p), k_limit) {
                (spectrum::KMax::Infinite, None) => {
                    return Err(Error::Validation(
                        "k_max is infinite for these parameters; --k-limit is required".into(),
                    ))
                }
                (spectrum::KMax::Finite(m), None) => m,
                (_, Some(l)) => l,
            };
            let table = masses::enumerate_mass_table(&p, limit)?;
            let body = match format {
                OutputFormat::Json => {
                    let rows: Vec<String> = table
                        .iter()
                        .map(|m| {
                            format!(
                                "{{\"k\": {}, \"orientation\": \"{}\", \"m1_over_2pi\": {}, \"m2_over_2pi\": {}}}",
                                m.k,
                                if m.swapped { "swapped" } else { "original" },
                                fmt_float(m.m1_over_2pi),
                                fmt_float(m.m2_over_2pi)
                            )
                        })
                        .collect();
                    format!("[{}]\n", rows.join(", "))
                }
                OutputFormat::Csv => {
                    let mut s = String::from("k,orientation,m1_over_2pi,m2_over_2pi\n");
                    for m in &table {
                        let _ = writeln!(
                            s,
                            "{},{},{},{}",
                            m.k,
                            if m.swapped { "swapped" } else { "original" },
                            fmt_float(m.m1_over_2pi),
                            fmt_float(m.m2_over_2pi)
                        );
                    }
                    s
                }
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::Symmetry { params, k } => {
            let p = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let betas = spectrum::compute_betas(&p, k)?;
            let info = masses::symmetry_order(betas.betas());
            let body = match format {
                OutputFormat::Json => {
                    let idx: Vec<String> =
                        info.even_index_set.iter().map(|v| v.to_string()).collect();
                    let chosen: Vec<String> = info
                        .chosen_m_ell
                        .iter()
                        .map(|(ell, m)| format!("[{ell}, {m}]"))
                        .collect();
                    format!(
                        "{{\"even_index_set\": [{}], \"chosen_m_ell\": [{}], \"m\": {}}}\n",
                        idx.join(", "),
                        chosen.join(", "),
                        info.m
                    )
                }
                OutputFormat::Csv => {
                    let mut s = String::from("ell,m_ell\n");
                    for (ell, m) in &info.chosen_m_ell {
                        let _ = writeln!(s, "{ell},{m}");
                    }
                    let _ = writeln!(s, "lcm,{}", info.m);
                    s
                }
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::Deltas {
            params,
            k,
            lambda,
            gamma,
            lambda_bar,
        } => {
            let p = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let lambda = lambda.resolve(&cfg)?;
            let gamma = pick(*gamma, &cfg, "gamma")?.unwrap_or(1.0);
            let lambda_bar = pick(*lambda_bar, &cfg, "lambda-bar")?.unwrap_or(1.0);
            let betas = spectrum::compute_betas(&p, k)?;
            let set = scales::solve_log_deltas(&betas, k, lambda, 0.0)?;
            let table = scales::closed_form_exponents(&betas, k)?;
            let adm = scales::admissible(&betas, k, lambda, gamma, lambda_bar)?;
            let body = match format {
                OutputFormat::Json => {
                    let e1: Vec<f64> = table.per_scale.iter().map(|r| r[0]).collect();
                    let e2: Vec<f64> = table.per_scale.iter().map(|r| r[1]).collect();
                    format!(
                        "{{\"log_deltas\": {}, \"lambda1_exponents\": {}, \"lambda2_exponents\": {}, \"admissible\": {}}}\n",
                        json_array(&set.log_deltas),
                        json_array(&e1),
                        json_array(&e2),
                        adm
                    )
                }
                OutputFormat::Csv => {
                    let mut s = String::from("ell,log_delta,lambda1_exponent,lambda2_exponent\n");
                    for ell in 1..=k {
                        let i = (ell - 1) as usize;
                        let _ = writeln!(
                            s,
                            "{ell},{},{},{}",
                            fmt_float(set.log_deltas[i]),
                            fmt_float(table.per_scale[i][0]),
                            fmt_float(table.per_scale[i][1])
                        );
                    }
                    s
                }
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::TowerDump {
            params,
            k,
            lambda,
            samples,
        } => {
            let p = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let lambda = lambda.resolve(&cfg)?;
            let samples = pick(*samples, &cfg, "samples")?.unwrap_or(400).max(2);
            let tower = TowerProfile::new(p, k, lambda)?;
            let s_min = tower.scales().log_delta(1) - 8.0;
            let mut s = String::from("s,W1,W2,Theta_active,log_abs_R1,sign_R1,log_abs_R2,sign_R2\n");
            for i in 0..samples {
                let si = s_min + (0.0 - s_min) * (i as f64) / (samples - 1) as f64;
                let si = si.min(0.0);
                let (w1, w2) = tower.main_term(si)?;
                let ell = tower.active_annulus(si);
                let theta = tower.theta(ell, si - tower.scales().log_delta(ell))?;
                let (r1, r2) = tower.residual(si)?;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    fmt_float(si),
                    fmt_float(w1),
                    fmt_float(w2),
                    fmt_float(theta),
                    fmt_float(r1.log_abs),
                    r1.sign,
                    fmt_float(r2.log_abs),
                    r2.sign
                );
            }
            emit(out, &s)?;
            Ok(0)
        }
        Command::ThetaSup { params, k, lambda } => {
            let p = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let lambda = lambda.resolve(&cfg)?;
            let tower = TowerProfile::new(p, k, lambda)?;
            let sups = tower.theta_sup_per_annulus()?;
            let body = match format {
                OutputFormat::Json => {
                    let rows: Vec<String> = sups
                        .iter()
                        .enumerate()
                        .map(|(i, v)| format!("{{\"ell\": {}, \"sup\": {}}}", i + 1, fmt_float(*v)))
                        .collect();
                    format!("[{}]\n", rows.join(", "))
                }
                OutputFormat::Csv => {
                    let mut s = String::from("ell,sup_theta\n");
                    for (i, v) in sups.iter().enumerate() {
                        let _ = writeln!(s, "{},{}", i + 1, fmt_float(*v));
                    }
                    s
                }
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::ResidualSweep {
            params,
            k,
            log10_lambda_start,
            log10_lambda_end,
            steps,
            p,
        } => {
            let sp = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let start = require(
                pick(*log10_lambda_start, &cfg, "log10-lambda-start")?,
                "--log10-lambda-start",
            )?;
            let end = require(
                pick(*log10_lambda_end, &cfg, "log10-lambda-end")?,
                "--log10-lambda-end",
            )?;
            let steps = pick(*steps, &cfg, "steps")?.unwrap_or(5).max(2);
            let p_norm = pick(*p, &cfg, "p")?.unwrap_or(1.05);
            let exponents: Vec<f64> = (0..steps)
                .map(|i| start + (end - start) * i as f64 / (steps - 1) as f64)
                .collect();
            let reports: Vec<Result<(f64, quad::ResidualReport)>> = exponents
                .par_iter()
                .map(|&e| {
                    let lambda = LambdaPair::from_log10(e, e)?;
                    let tower = TowerProfile::new(sp, k, lambda)?;
                    let grid = RadialGrid::for_tower(&tower);
                    Ok((e, quad::lp_residual_norm(&tower, p_norm, &grid)?))
                })
                .collect();
            let mut rows = Vec::with_capacity(reports.len());
            let mut points: Vec<(f64, f64)> = Vec::new();
            for r in reports {
                let (e, rep) = r?;
                points.push((e * std::f64::consts::LN_10, rep.norm1.ln()));
                let slope = slope_so_far(&points);
                rows.push((e, rep.norm1, rep.norm2, slope));
            }
            let body = match format {
                OutputFormat::Csv => {
                    let mut s = String::from("log10_lambda,norm1,norm2,slope_so_far\n");
                    for (e, n1, n2, slope) in &rows {
                        let _ = writeln!(
                            s,
                            "{},{},{},{}",
                            fmt_float(*e),
                            fmt_float(*n1),
                            fmt_float(*n2),
                            fmt_float(*slope)
                        );
                    }
                    s
                }
                OutputFormat::Json => {
                    let items: Vec<String> = rows
                        .iter()
                        .map(|(e, n1, n2, slope)| {
                            format!(
                                "{{\"log10_lambda\": {}, \"norm1\": {}, \"norm2\": {}, \"slope_so_far\": {}}}",
                                fmt_float(*e),
                                fmt_float(*n1),
                                fmt_float(*n2),
                                if slope.is_nan() { "null".to_string() } else { fmt_float(*slope) }
                            )
                        })
                        .collect();
                    format!("[{}]\n", items.join(", "))
                }
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::Identities { beta } => {
            let beta = require(pick(*beta, &cfg, "beta")?, "--beta")?;
            let (first, second) = quad::step4_identities(beta)?;
            let mass = quad::bubble_mass(beta, 0.0)?;
            let body = match format {
                OutputFormat::Json => format!(
                    "{{\"step4_first\": {}, \"step4_second\": {}, \"bubble_mass\": {}}}\n",
                    fmt_float(first),
                    fmt_float(second),
                    fmt_float(mass)
                ),
                OutputFormat::Csv => format!(
                    "step4_first,step4_second,bubble_mass\n{},{},{}\n",
                    fmt_float(first),
                    fmt_float(second),
                    fmt_float(mass)
                ),
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::Kernel {
            alpha,
            m,
            check_ode,
        } => {
            let alpha = require(pick(*alpha, &cfg, "alpha")?, "--alpha")?;
            let m = pick(*m, &cfg, "m")?.unwrap_or(1);
            let modes = kernel::bounded_modes(alpha, m)?;
            let residual = if *check_ode {
                let radii = kernel::log_spaced_radii(1e-2, 1e2, 100);
                let mut worst = 0.0f64;
                for mode in &modes {
                    worst =
                        worst.max(kernel::ode_residual(mode.n, alpha, mode.sign, &radii)?);
                }
                Some(worst)
            } else {
                None
            };
            let body = match format {
                OutputFormat::Json => {
                    let names: Vec<String> = modes.iter().map(|m| format!("\"{m}\"")).collect();
                    match residual {
                        Some(r) => format!(
                            "{{\"count\": {}, \"modes\": [{}], \"max_ode_residual\": {}}}\n",
                            modes.len(),
                            names.join(", "),
                            fmt_float(r)
                        ),
                        None => format!(
                            "{{\"count\": {}, \"modes\": [{}]}}\n",
                            modes.len(),
                            names.join(", ")
                        ),
                    }
                }
                OutputFormat::Csv => {
                    let mut s = String::from("mode\n");
                    for m in &modes {
                        let _ = writeln!(s, "{m}");
                    }
                    s
                }
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::Newton {
            params,
            k,
            lambda,
            solver,
            dump,
        } => {
            let p = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let lambda = lambda.resolve(&cfg)?;
            let opts = solver.resolve(&cfg)?;
            let report = newton::solve(&p, k, lambda, &opts)?;
            if let Some(path) = dump {
                let path = resolve_output(path);
                std::fs::write(&path, solution_csv(&report)).map_err(|e| {
                    Error::Validation(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            emit(out, &summary_json(&report))?;
            Ok(if report.converged { 0 } else { 3 })
        }
        Command::Continuation {
            params,
            k,
            log10_lambda_start,
            log10_lambda_end,
            steps,
            solver,
        } => {
            let p = params.resolve(&cfg)?;
            let k = require(pick(*k, &cfg, "k")?, "--k")?;
            let start = require(
                pick(*log10_lambda_start, &cfg, "log10-lambda-start")?,
                "--log10-lambda-start",
            )?;
            let end = require(
                pick(*log10_lambda_end, &cfg, "log10-lambda-end")?,
                "--log10-lambda-end",
            )?;
            let steps = pick(*steps, &cfg, "steps")?.unwrap_or(4).max(2);
            let opts = solver.resolve(&cfg)?;
            let chain = newton::continuation(
                &p,
                k,
                LambdaPair::from_log10(start, start)?,
                LambdaPair::from_log10(end, end)?,
                steps,
                &opts,
            )?;
            let all_converged = chain.iter().all(|r| r.converged);
            let body = match format {
                OutputFormat::Json => {
                    let items: Vec<String> =
                        chain.iter().map(|r| summary_json(r).trim_end().to_string()).collect();
                    format!("[{}]\n", items.join(", "))
                }
                OutputFormat::Csv => {
                    let mut s = String::from(
                        "log10_lambda1,log10_lambda2,converged,iterations,final_residual,m1_over_2pi,m2_over_2pi,phi_sup1,phi_sup2\n",
                    );
                    for r in &chain {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{},{},{},{}",
                            fmt_float(r.lambda.log_lambda1 / std::f64::consts::LN_10),
                            fmt_float(r.lambda.log_lambda2 / std::f64::consts::LN_10),
                            r.converged,
                            r.iterations,
                            fmt_float(r.final_residual),
                            fmt_float(r.masses.m1_over_2pi),
                            fmt_float(r.masses.m2_over_2pi),
                            fmt_float(r.phi_sup[0]),
                            fmt_float(r.phi_sup[1])
                        );
                    }
                    s
                }
            };
            emit(out, &body)?;
            Ok(if all_converged { 0 } else { 3 })
        }
    }
}

fn slope_so_far(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    if points.len() == 2 {
        return (points[1].1 - points[0].1) / (points[1].0 - points[0].0);
    }
    match quad::fit_scaling(points) {
        Ok(fit) => fit.slope,
        Err(_) => f64::NAN,
    }
}

fn summary_json(r: &SolutionReport) -> String {
    format!(
        "{{\"converged\": {}, \"iterations\": {}, \"final_residual\": {}, \"m1_over_2pi\": {}, \"m2_over_2pi\": {}, \"phi_sup1\": {}, \"phi_sup2\": {}}}\n",
        r.converged,
        r.iterations,
        fmt_float(r.final_residual),
        fmt_float(r.masses.m1_over_2pi),
        fmt_float(r.masses.m2_over_2pi),
        fmt_float(r.phi_sup[0]),
        fmt_float(r.phi_sup[1])
    )
}

fn solution_csv(r: &SolutionReport) -> String {
    let mut s = String::from("s,u1,u2,W1,W2,phi1,phi2\n");
    for i in 0..r.s.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_float(r.s[i]),
            fmt_float(r.u1[i]),
            fmt_float(r.u2[i]),
            fmt_float(r.w1[i]),
            fmt_float(r.w2[i]),
            fmt_float(r.u1[i] - r.w1[i]),
            fmt_float(r.u2[i] - r.w2[i])
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(6.0), "6");
        assert_eq!(fmt_float(-8.0), "-8");
        assert_eq!(fmt_float(0.0), "0");
        let x = 0.1234567890123456789;
        let s = fmt_float(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        let y = 2.0f64.sqrt() * 1e-17;
        assert_eq!(fmt_float(y).parse::<f64>().unwrap(), y);
    }

    #[test]
    fn config_parsing_and_precedence() {
        let dir = std::env::temp_dir().join("bubble_tower_cli_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.txt");
        std::fs::write(&path, "# comment\na=1\nb=2\nalpha1=2\nalpha2=2\nk=4\n").unwrap();
        let cfg = ConfigFile::load(Some(&path)).unwrap();
        assert_eq!(cfg.get::<f64>("b").unwrap(), Some(2.0));
        assert_eq!(cfg.get::<u32>("k").unwrap(), Some(4));
        assert_eq!(cfg.get::<f64>("absent").unwrap(), None);
        // flag wins over config
        assert_eq!(pick(Some(7.0), &cfg, "b").unwrap(), Some(7.0));
        assert_eq!(pick::<f64>(None, &cfg, "b").unwrap(), Some(2.0));
    }

    #[test]
    fn preset_resolution() {
        let cfg = ConfigFile(HashMap::new());
        let args = ParamArgs {
            preset: Some(Preset::B2),
            b: Some(5.0),
            ..Default::default()
        };
        let p = args.resolve(&cfg).unwrap();
        assert_eq!((p.a(), p.b(), p.alpha1(), p.alpha2()), (1.0, 5.0, 2.0, 2.0));
        let none = ParamArgs::default();
        assert!(none.resolve(&cfg).is_err());
    }

    #[test]
    fn lambda_resolution() {
        let cfg = ConfigFile(HashMap::new());
        let args = LambdaArgs {
            log10_lambda1: Some(-6.0),
            lambda2: Some(1e-6),
            ..Default::default()
        };
        let l = args.resolve(&cfg).unwrap();
        assert!((l.log_lambda1 - l.log_lambda2).abs() < 1e-12);
        let bad = LambdaArgs {
            log10_lambda1: Some(-6.0),
            lambda1: Some(1e-6),
            log10_lambda2: Some(-6.0),
            ..Default::default()
        };
        assert!(bad.resolve(&cfg).is_err());
    }

    #[test]
    fn run_reports_masses_exactly() {
        // exercises the whole dispatch path without touching the fs
        let code = run([
            "bubble-tower",
            "masses",
            "--a",
            "1",
            "--b",
            "2",
            "--alpha1",
            "2",
            "--alpha2",
            "2",
            "--k",
            "4",
            "--format",
            "json",
        ]);
        assert_eq!(code, 0);
    }

    #[test]
    fn unknown_flag_exits_2() {
        assert_eq!(run(["bubble-tower", "kmax", "--bogus", "1"]), 2);
        assert_eq!(run(["bubble-tower", "--help"]), 0);
    }
}
