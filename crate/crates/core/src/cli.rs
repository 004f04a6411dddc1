//! Command-line front end.
//!
//! Exit codes: 0 success, 1 bad input, 2 infeasible, 3 numerical failure,
//! 4 containment failure.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::{
    difference_envelope, exponential_impulse_envelope, impulse_bound, step_bound, step_tail_bound, tail_bound,
    Envelope,
};
use crate::certificates::{
    certify_difference, certify_impulse, certify_robust_impulse, certify_step, max_alpha_with, AlphaSearch,
    LyapunovCertificate, SolveOptions,
};
use crate::error::Error;
use crate::export::write_json;
use crate::sim::{
    check_containment, impulse_response, impulse_state, ltv_impulse_samples, step_response, write_envelope_csv,
    default_signals, ContainmentReport, Grid, SwitchingSignal, TrajectorySample, DEFAULT_DWELL,
};
use crate::system::{LtiSystem, UncertainSystem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONTAINMENT: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
    Containment(String),
    /// The reader of stdout went away, e.g. `| head`.
    ClosedOutput,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::ClosedOutput => EXIT_OK,
            CliError::Containment(_) => EXIT_CONTAINMENT,
            CliError::Core(e) => match e {
                Error::Infeasible(_) | Error::NoFeasibleAlpha { .. } => EXIT_INFEASIBLE,
                Error::NumericalFailure(_) => EXIT_NUMERICAL,
                _ => EXIT_INPUT,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Containment(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::ClosedOutput => f.write_str("output closed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return CliError::ClosedOutput;
        }
        CliError::Input(format!("i/o error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lyapbound", version, about = "Certified point-wise-in-time bounds for LTI and polytopic LTV systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify a global impulse or step response bound.
    Bound {
        kind: BoundKind,
        #[command(flatten)]
        common: Common,
        /// Restart time for a tail bound.
        #[arg(long)]
        t0: Option<f64>,
        /// Take the restart state from an exact simulation of the nominal system.
        #[arg(long)]
        state_from_sim: bool,
    },
    /// Certify an envelope for the impulse response of an uncertain system.
    Envelope {
        #[command(flatten)]
        common: Common,
        /// Bound the deviation from the nominal impulse response instead.
        #[arg(long)]
        difference: bool,
    },
    /// Bisect the largest certifiable decay rate.
    MaxAlpha {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        difference: bool,
        /// Lower end of the bisection interval.
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<f64>,
        /// Upper end of the bisection interval.
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<f64>,
    },
    /// Write simulated trajectories as CSV.
    Simulate {
        kind: SimKind,
        #[command(flatten)]
        common: Common,
        /// Number of seeded random switching signals for `ltv`.
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long, default_value_t = DEFAULT_DWELL)]
        dwell: f64,
    },
    /// Certify, bound and verify against simulations for each level.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    Impulse,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Impulse,
    Step,
    Ltv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// System description (JSON).
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub level: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    fn grid(&self) -> CliResult<Grid> {
        Ok(Grid::new(self.t_final, self.dt)?)
    }
}

/// A system file entry: a JSON number or a numeric string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Entry {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<Entry>>,
    b: Vec<Entry>,
    c: Vec<Entry>,
    #[serde(rename = "Delta", default)]
    delta: Option<Vec<Vec<Entry>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedSystem {
    Lti(LtiSystem),
    Uncertain(UncertainSystem),
}

impl ParsedSystem {
    pub fn uncertain(&self) -> UncertainSystem {
        match self {
            ParsedSystem::Lti(s) => s.to_uncertain(),
            ParsedSystem::Uncertain(s) => s.clone(),
        }
    }

    /// `None` for an uncertain system with nonzero `Δ`.
    pub fn lti(&self) -> Option<LtiSystem> {
        match self {
            ParsedSystem::Lti(s) => Some(s.clone()),
            ParsedSystem::Uncertain(s) if !s.has_uncertainty() => Some(s.nominal()),
            ParsedSystem::Uncertain(_) => None,
        }
    }
}

fn entry_value(field: &str, e: &Entry) -> CliResult<f64> {
    let v = match e {
        Entry::Number(v) => *v,
        Entry::Text(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Input(format!("field `{field}`: `{s}` is not a number")))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(field.to_string()).into())
    }
}

fn parse_matrix(field: &str, rows: &[Vec<Entry>]) -> CliResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut m = DMatrix::zeros(nrows, ncols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::mismatch(format!("{field} row {r}"), format!("{ncols} entries"), format!("{} entries", row.len())).into());
        }
        for (c, e) in row.iter().enumerate() {
            m[(r, c)] = entry_value(&format!("{field}[{r}][{c}]"), e)?;
        }
    }
    Ok(m)
}

fn parse_vector(field: &str, items: &[Entry]) -> CliResult<DVector<f64>> {
    let values = items
        .iter()
        .enumerate()
        .map(|(k, e)| entry_value(&format!("{field}[{k}]"), e))
        .collect::<CliResult<Vec<f64>>>()?;
    Ok(DVector::from_vec(values))
}

/// Parses a system description from JSON text.
pub fn parse_system_str(text: &str, fallback_name: &str) -> CliResult<ParsedSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| {
        CliError::Input(format!(
            "malformed system file at line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    let name = file.name.unwrap_or_else(|| fallback_name.to_string());
    let a = parse_matrix("A", &file.a)?;
    let b = parse_vector("b", &file.b)?;
    let c = parse_vector("c", &file.c)?;
    match file.delta {
        None => Ok(ParsedSystem::Lti(LtiSystem::new(name, a, b, c)?)),
        Some(rows) => {
            let delta = parse_matrix("Delta", &rows)?;
            Ok(ParsedSystem::Uncertain(UncertainSystem::new(name, a, delta, b, c)?))
        }
    }
}

pub fn parse_system(path: &Path) -> CliResult<ParsedSystem> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read system file {}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("system");
    parse_system_str(&text, stem)
}

/// Serializes a system in the format read by [`parse_system`].
pub fn write_system<W: Write>(sys: &ParsedSystem, w: W) -> io::Result<()> {
    #[derive(Serialize)]
    struct Out<'a> {
        name: &'a str,
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: &'a [f64],
        c: &'a [f64],
        #[serde(rename = "Delta", skip_serializing_if = "Option::is_none")]
        delta: Option<Vec<Vec<f64>>>,
    }
    let rows = crate::bounds::rows;
    let out = match sys {
        ParsedSystem::Lti(s) => Out {
            name: &s.name,
            a: rows(&s.a),
            b: s.b.as_slice(),
            c: s.c.as_slice(),
            delta: None,
        },
        ParsedSystem::Uncertain(s) => Out {
            name: &s.name,
            a: rows(&s.a),
            b: s.b.as_slice(),
            c: s.c.as_slice(),
            delta: Some(rows(&s.delta)),
        },
    };
    write_json(w, &out)
}

/// Nine significant digits, positional notation for moderate magnitudes.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.8e}")
    }
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Input(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    let result = (|| -> io::Result<()> {
        let mut f = io::BufWriter::new(fs::File::create(&tmp)?);
        body(&mut f)?;
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn out_dir(common: &Common) -> CliResult<Option<PathBuf>> {
    match &common.out {
        None => Ok(None),
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", dir.display())))?;
            Ok(Some(dir.clone()))
        }
    }
}

fn write_artifacts(
    dir: Option<&Path>,
    prefix: &str,
    cert: &LyapunovCertificate,
    env: &Envelope,
    grid: &Grid,
) -> CliResult<()> {
    let Some(dir) = dir else { return Ok(()) };
    write_atomic(&dir.join(format!("{prefix}certificate.json")), |w| cert.write_json(w))?;
    write_atomic(&dir.join(format!("{prefix}envelope.json")), |w| env.write_json(w))?;
    let times = grid.times()?;
    write_atomic(&dir.join(format!("{prefix}envelope.csv")), |w| write_envelope_csv(env, &times, w))?;
    Ok(())
}

fn write_trajectory(dir: &Path, name: &str, sample: &TrajectorySample) -> CliResult<()> {
    write_atomic(&dir.join(name), |w| sample.write_csv(w))
}

/// Parses `args` (program name first) and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(CliError::ClosedOutput) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<i32> {
    match &cli.command {
        Command::Bound {
            kind,
            common,
            t0,
            state_from_sim,
        } => cmd_bound(*kind, common, *t0, *state_from_sim, out),
        Command::Envelope { common, difference } => cmd_envelope(common, *difference, out),
        Command::MaxAlpha {
            common,
            difference,
            lo,
            hi,
        } => cmd_max_alpha(common, *difference, *lo, *hi, out),
        Command::Simulate {
            kind,
            common,
            seeds,
            dwell,
        } => cmd_simulate(*kind, common, *seeds, *dwell, out),
        Command::Check { common, levels, seeds } => cmd_check(common, levels, *seeds, out),
    }
}

fn cmd_bound(
    kind: BoundKind,
    common: &Common,
    t0: Option<f64>,
    state_from_sim: bool,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let sys = parse_system(&common.system)?;
    let grid = common.grid()?;
    let dir = out_dir(common)?;
    let opts = SolveOptions::default();
    if t0.is_some() && !state_from_sim {
        return Err(CliError::Input("--t0 needs a restart state; pass --state-from-sim".into()));
    }
    if state_from_sim && t0.is_none() {
        return Err(CliError::Input("--state-from-sim needs --t0".into()));
    }

    match kind {
        BoundKind::Impulse => {
            let (level, cert, env) = match sys.lti() {
                Some(lti) if common.alpha == 0.0 => {
                    let (level, cert) = certify_impulse(&lti, common.level, &opts)?;
                    let env = impulse_bound(&cert, &level)?;
                    (level, cert, env)
                }
                _ => {
                    let unc = sys.uncertain();
                    let (level, cert) = certify_robust_impulse(&unc, common.level, common.alpha, &opts)?;
                    let env = exponential_impulse_envelope(&cert, &level, &unc)?;
                    (level, cert, env)
                }
            };
            writeln!(out, "level = {}", common.level)?;
            writeln!(out, "alpha = {}", common.alpha)?;
            writeln!(out, "h_bar = {}", format_sig9(env.magnitude))?;
            write_artifacts(dir.as_deref(), "", &cert, &env, &grid)?;
            if let Some(t0) = t0 {
                let lti = sys
                    .lti()
                    .ok_or_else(|| CliError::Input("--state-from-sim needs a system without Delta".into()))?;
                let state = impulse_state(&lti, t0);
                let tail = tail_bound(&cert, &level, &state, t0)?;
                writeln!(out, "t0 = {t0}")?;
                writeln!(out, "tail_bound = {}", format_sig9(tail.magnitude))?;
                write_artifacts(dir.as_deref(), "tail_", &cert, &tail, &grid)?;
            }
        }
        BoundKind::Step => {
            let lti = sys
                .lti()
                .ok_or_else(|| CliError::Input("step bounds need a system without Delta".into()))?;
            if common.alpha != 0.0 {
                return Err(CliError::Input("step bounds do not take --alpha".into()));
            }
            let (level, cert) = certify_step(&lti, common.level, &opts)?;
            let env = step_bound(&cert, &level, &lti)?;
            writeln!(out, "level = {}", common.level)?;
            writeln!(out, "s_bar = {}", format_sig9(env.magnitude))?;
            if let crate::bounds::EnvelopeCenter::Constant(c) = env.center {
                writeln!(out, "center = {}", format_sig9(c))?;
            }
            write_artifacts(dir.as_deref(), "", &cert, &env, &grid)?;
            if let Some(t0) = t0 {
                let tail = step_tail_bound(&cert, &level, &lti, t0)?;
                writeln!(out, "t0 = {t0}")?;
                writeln!(out, "tail_bound = {}", format_sig9(tail.magnitude))?;
                write_artifacts(dir.as_deref(), "tail_", &cert, &tail, &grid)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn require_delta(sys: &ParsedSystem, what: &str) -> CliResult<UncertainSystem> {
    match sys {
        ParsedSystem::Uncertain(s) => Ok(s.clone()),
        ParsedSystem::Lti(_) => Err(CliError::Input(format!("{what} requires Delta in the system file"))),
    }
}

fn cmd_envelope(common: &Common, difference: bool, out: &mut dyn Write) -> CliResult<i32> {
    let sys = require_delta(&parse_system(&common.system)?, "envelope")?;
    let grid = common.grid()?;
    let dir = out_dir(common)?;
    let opts = SolveOptions::default();
    let (cert, env) = if difference {
        let (diff, cert) = certify_difference(&sys, common.level, common.alpha, &opts)?;
        let env = difference_envelope(&cert, &diff, &sys)?;
        (cert, env)
    } else {
        let (level, cert) = certify_robust_impulse(&sys, common.level, common.alpha, &opts)?;
        let env = exponential_impulse_envelope(&cert, &level, &sys)?;
        (cert, env)
    };
    writeln!(out, "level = {}", common.level)?;
    writeln!(out, "alpha = {}", common.alpha)?;
    writeln!(out, "kind = {}", env.kind.as_str())?;
    writeln!(out, "h_bar = {}", format_sig9(env.magnitude))?;
    write_artifacts(dir.as_deref(), "", &cert, &env, &grid)?;
    if let (Some(dir), true) = (dir.as_deref(), difference) {
        let nominal = impulse_response(&sys.nominal(), &grid)?;
        write_trajectory(dir, "nominal.csv", &nominal)?;
    }
    Ok(EXIT_OK)
}

fn cmd_max_alpha(
    common: &Common,
    difference: bool,
    lo: Option<f64>,
    hi: Option<f64>,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let sys = parse_system(&common.system)?.uncertain();
    let interval = match (lo, hi) {
        (None, None) => None,
        (Some(l), Some(h)) => Some((l, h)),
        _ => return Err(CliError::Input("--lo and --hi must be given together".into())),
    };
    let search = AlphaSearch {
        interval,
        tol: common.tol,
        difference,
        ..AlphaSearch::default()
    };
    let opts = SolveOptions::default();
    let frontier = max_alpha_with(&sys, common.level, &search, &opts)?;
    writeln!(out, "level = {}", common.level)?;
    writeln!(out, "alpha_star = {}", format_sig9(frontier.alpha))?;
    writeln!(out, "bisection_steps = {}", frontier.bisection_steps)?;
    if let Some(dir) = out_dir(common)? {
        let alpha = frontier.alpha - common.tol;
        let cert = if difference {
            certify_difference(&sys, common.level, alpha, &opts)?.1
        } else {
            certify_robust_impulse(&sys, common.level, alpha, &opts)?.1
        };
        write_atomic(&dir.join("certificate.json"), |w| cert.write_json(w))?;
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(kind: SimKind, common: &Common, seeds: usize, dwell: f64, out: &mut dyn Write) -> CliResult<i32> {
    let sys = parse_system(&common.system)?;
    let grid = common.grid()?;
    let dir = out_dir(common)?;
    let samples: Vec<(String, TrajectorySample)> = match kind {
        SimKind::Impulse => {
            let lti = sys
                .lti()
                .ok_or_else(|| CliError::Input("impulse simulation needs a system without Delta; use `simulate ltv`".into()))?;
            vec![("impulse.csv".into(), impulse_response(&lti, &grid)?)]
        }
        SimKind::Step => {
            let lti = sys
                .lti()
                .ok_or_else(|| CliError::Input("step simulation needs a system without Delta".into()))?;
            vec![("step.csv".into(), step_response(&lti, &grid)?)]
        }
        SimKind::Ltv => {
            let unc = require_delta(&sys, "ltv simulation")?;
            let signals: Vec<SwitchingSignal> = (0..seeds as u64)
                .map(|k| SwitchingSignal::random(common.seed + k, dwell))
                .collect();
            let runs = ltv_impulse_samples(&unc, &signals, &grid)?;
            signals
                .iter()
                .zip(runs)
                .map(|(s, r)| (format!("ltv_seed{}.csv", s.seed), r))
                .collect()
        }
    };
    match dir {
        Some(dir) => {
            for (name, sample) in &samples {
                write_trajectory(&dir, name, sample)?;
                writeln!(out, "wrote {}", dir.join(name).display())?;
            }
        }
        None if samples.len() == 1 => samples[0].1.write_csv(&mut *out)?,
        None => return Err(CliError::Input("several trajectories need --out".into())),
    }
    Ok(EXIT_OK)
}

/// One level of the certify-then-verify pipeline.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub level: usize,
    pub magnitude: f64,
    pub report: ContainmentReport,
}

fn check_level(
    sys: &ParsedSystem,
    level: usize,
    alpha: f64,
    samples: &[TrajectorySample],
    opts: &SolveOptions,
) -> CliResult<CheckRow> {
    let env = match sys.lti() {
        Some(lti) if alpha == 0.0 => {
            let (lvl, cert) = certify_impulse(&lti, level, opts)?;
            impulse_bound(&cert, &lvl)?
        }
        _ => {
            let unc = sys.uncertain();
            let (lvl, cert) = certify_robust_impulse(&unc, level, alpha, opts)?;
            exponential_impulse_envelope(&cert, &lvl, &unc)?
        }
    };
    let report = check_containment(&env, samples)?;
    Ok(CheckRow {
        level,
        magnitude: env.magnitude,
        report,
    })
}

fn cmd_check(common: &Common, levels: &[usize], seeds: usize, out: &mut dyn Write) -> CliResult<i32> {
    if levels.is_empty() {
        return Err(CliError::Input("--levels must name at least one level".into()));
    }
    let sys = parse_system(&common.system)?;
    let grid = common.grid()?;
    let samples = match sys.lti() {
        Some(lti) => vec![impulse_response(&lti, &grid)?],
        None => ltv_impulse_samples(&sys.uncertain(), &default_signals(common.seed, seeds), &grid)?,
    };
    let opts = SolveOptions::default();
    writeln!(out, "{:>5}  {:>16}  {:>16}  status", "level", "h_bar", "max_violation")?;
    let mut failures = Vec::new();
    for &level in levels {
        let row = check_level(&sys, level, common.alpha, &samples, &opts)?;
        let status = if row.report.pass { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{:>5}  {:>16}  {:>16.6e}  {status}",
            row.level,
            format_sig9(row.magnitude),
            row.report.max_violation
        )?;
        if !row.report.pass {
            failures.push(format!(
                "level {}: violation {:.3e} at t = {} in trajectory `{}`",
                row.level, row.report.max_violation, row.report.argmax_time, samples[row.report.argmax_sample].label
            ));
        }
    }
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        Err(CliError::Containment(format!("containment failed: {}", failures.join("; "))))
    }
}
