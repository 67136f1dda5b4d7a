//! Batch front end: channel files in, exponent tables out.
//!
//! Exit codes: 0 on success, 1 on bad input, 2 when a computed result breaks
//! an invariant that should hold mathematically (a dual value above the
//! sphere-packing exponent or above the primal oracle).

pub mod channel_file;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;
use trc_exponent::classical::{
    critical_rates, expurgated_exponent, mutual_information, random_coding_exponent,
    sphere_packing_exponent, RhoCap,
};
use trc_exponent::dual::{optimize_dual, regime_bound, DualConfig, DualResult, Regime};
use trc_exponent::identities::identity_suite;
use trc_exponent::primal::{primal_bound, GridSpec};
use trc_exponent::simulate::{trc_estimate, SimConfig};

pub use channel_file::{parse_channel_file, parse_channel_str, ChannelFile};
pub use output::{fmt_num, write_csv, write_csv_to, CurveRow};

/// Slack for the dual-versus-ceiling checks.
pub const INVARIANT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] trc_exponent::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "trc", version, about = "Error exponents of the typical random code")]
struct Cli {
    /// Report rates and exponents in bits (inputs stay in nats).
    #[arg(long, global = true)]
    bits: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep rates and write the bound table as CSV.
    Curve(CurveArgs),
    /// Optimize the dual bound at one rate.
    Dual(DualArgs),
    /// Evaluate the primal oracle at one rate.
    Primal(PrimalArgs),
    /// Critical rates and the three closed-form bounds.
    Regimes(RegimesArgs),
    /// Monte-Carlo estimate of -E ln P_e / n at a tiny blocklength.
    Simulate(SimulateArgs),
    /// Run the algebraic identity checks.
    Identities(IdentitiesArgs),
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    rmin: f64,
    /// Defaults to the mutual information under P.
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long, default_value_t = 30)]
    points: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also evaluate the primal oracle (binary and ternary alphabets only).
    #[arg(long)]
    primal: bool,
    /// Primal grid resolution; overrides the channel file.
    #[arg(long)]
    grid: Option<f64>,
}

#[derive(Debug, Args)]
struct DualArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    rate: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct PrimalArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    grid: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RegimesArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = 11)]
    points: usize,
    #[arg(long)]
    rmax: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    channel: PathBuf,
    /// Blocklength.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 200)]
    codes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 for the default.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct IdentitiesArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Output goes to `out`, diagnostics to `err`.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let units = Units { bits: cli.bits };
    match &cli.command {
        Command::Curve(a) => curve(a, units, out, err),
        Command::Dual(a) => dual(a, units, out),
        Command::Primal(a) => primal(a, units, out),
        Command::Regimes(a) => regimes(a, units, out),
        Command::Simulate(a) => simulate(a, units, out),
        Command::Identities(a) => identities(a, out),
    }
}

#[derive(Debug, Clone, Copy)]
struct Units {
    bits: bool,
}

impl Units {
    fn conv(self, v: f64) -> f64 {
        if self.bits {
            v / std::f64::consts::LN_2
        } else {
            v
        }
    }

    fn name(self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

fn check_rate(rate: f64) -> Result<(), CliError> {
    if rate >= 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("rate must be finite and nonnegative, got {rate}")))
    }
}

fn grid_for(file: &ChannelFile, delta: Option<f64>) -> GridSpec {
    let mut g = file.grid;
    if let Some(d) = delta {
        g.delta = d;
    }
    g
}

/// JSON number, or the strings `inf`/`-inf`/`nan`.
fn jnum(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt_num(v))
    }
}

fn matched(file: &ChannelFile) -> bool {
    file.decoder.w_tilde == file.model.w
}

/// Dual value against the sphere-packing ceiling, for matched metrics.
fn ceiling_check(file: &ChannelFile, rate: f64, dual: f64, e_sp: f64) -> Result<(), CliError> {
    if matched(file) && dual > e_sp + INVARIANT_TOL {
        return Err(CliError::Invariant(format!(
            "dual {dual} exceeds the sphere-packing exponent {e_sp} at rate {rate}"
        )));
    }
    Ok(())
}

/// Computes one curve row; `primal` carries the grid when requested.
pub fn curve_row(file: &ChannelFile, rate: f64, primal: Option<GridSpec>) -> Result<CurveRow, CliError> {
    check_rate(rate)?;
    let (model, decoder) = (&file.model, &file.decoder);
    let d = optimize_dual(model, decoder, rate, &DualConfig::default())?;
    let (regime_value, regime_label) = if decoder.is_matched_ml(model) {
        let b = regime_bound(model, decoder, rate)?;
        (Some(b.value), b.label.label().to_string())
    } else {
        (None, Regime::Unknown.label().to_string())
    };
    let mut warnings = d.diagnostics.warnings.clone();
    let primal_value = match primal {
        Some(g) => {
            let p = primal_bound(model, decoder, rate, g)?;
            warnings.extend(p.warnings.iter().map(|w| format!("primal: {w}")));
            Some(p.value)
        }
        None => None,
    };
    Ok(CurveRow {
        rate,
        dual_value: d.value,
        regime_value,
        regime_label,
        e_r: random_coding_exponent(model, rate).value,
        e_sp: sphere_packing_exponent(model, rate, RhoCap::default()).value,
        e_ex: expurgated_exponent(model, rate, RhoCap::default()).value,
        primal_value,
        sigma: d.params.sigma,
        tau: d.params.tau,
        lambda: d.params.lambda,
        theta: d.params.theta,
        zeta: d.params.zeta,
        warnings,
    })
}

/// Evenly spaced rates from `rmin` to `rmax`.
pub fn rate_grid(rmin: f64, rmax: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![rmin],
        _ => (0..points)
            .map(|i| rmin + (rmax - rmin) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// The sweep behind `curve`, with the invariant checks applied.
pub fn curve_rows(
    file: &ChannelFile,
    rmin: f64,
    rmax: Option<f64>,
    points: usize,
    primal: Option<GridSpec>,
) -> Result<(Vec<CurveRow>, Vec<String>), CliError> {
    let rmax = rmax.unwrap_or_else(|| mutual_information(&file.model));
    check_rate(rmin)?;
    check_rate(rmax)?;
    if rmax < rmin {
        return Err(CliError::Input(format!("rmax {rmax} is below rmin {rmin}")));
    }
    if let Some(g) = primal {
        // Fail on the alphabet cap before the sweep starts.
        primal_bound(&file.model, &file.decoder, rmin, g)?;
    }
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for r in rate_grid(rmin, rmax, points) {
        let row = curve_row(file, r, primal)?;
        if let Err(e) = ceiling_check(file, r, row.dual_value, row.e_sp) {
            violations.push(e.to_string());
        }
        if let Some(p) = row.primal_value {
            if row.dual_value > p + INVARIANT_TOL {
                violations.push(format!("dual {} exceeds primal {p} at rate {r}", row.dual_value));
            }
        }
        rows.push(row);
    }
    Ok((rows, violations))
}

fn curve(a: &CurveArgs, units: Units, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let file = parse_channel_file(&a.channel)?;
    let primal = a.primal.then(|| grid_for(&file, a.grid));
    let (rows, violations) = curve_rows(&file, a.rmin, a.rmax, a.points, primal)?;
    let shown: Vec<CurveRow> = if units.bits {
        rows.iter().map(CurveRow::in_bits).collect()
    } else {
        rows
    };
    match &a.out {
        Some(p) => write_csv(&shown, p)?,
        None => write_csv_to(&shown, &mut *out)?,
    }
    for w in &file.warnings {
        writeln!(err, "warning: {w}")?;
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(violations.join("; ")))
    }
}

fn dual_json(d: &DualResult, rate: f64, e_sp: f64, units: Units) -> Value {
    let p = d.params;
    json!({
        "units": units.name(),
        "rate": jnum(units.conv(rate)),
        "value": jnum(units.conv(d.value)),
        "sigma": jnum(p.sigma),
        "tau": jnum(p.tau),
        "lambda": jnum(p.lambda),
        "theta": jnum(p.theta),
        "zeta": jnum(p.zeta),
        "regime_hint": d.regime_hint.label(),
        "e_sp": jnum(units.conv(e_sp)),
        "unimodal": d.diagnostics.unimodal,
        "pairs_evaluated": d.diagnostics.pairs_evaluated,
        "warnings": d.diagnostics.warnings,
    })
}

fn dual(a: &DualArgs, units: Units, out: &mut dyn Write) -> Result<(), CliError> {
    check_rate(a.rate)?;
    let file = parse_channel_file(&a.channel)?;
    let d = optimize_dual(&file.model, &file.decoder, a.rate, &DualConfig::default())?;
    let e_sp = sphere_packing_exponent(&file.model, a.rate, RhoCap::default()).value;
    if a.json {
        writeln!(out, "{}", dual_json(&d, a.rate, e_sp, units))?;
    } else {
        let p = d.params;
        writeln!(out, "rate     {} {}", fmt_num(units.conv(a.rate)), units.name())?;
        writeln!(out, "dual     {}", fmt_num(units.conv(d.value)))?;
        writeln!(out, "E_sp     {}", fmt_num(units.conv(e_sp)))?;
        writeln!(out, "sigma    {}", fmt_num(p.sigma))?;
        writeln!(out, "tau      {}", fmt_num(p.tau))?;
        writeln!(out, "lambda   {}", fmt_num(p.lambda))?;
        writeln!(out, "theta    {}", fmt_num(p.theta))?;
        writeln!(out, "zeta     {}", fmt_num(p.zeta))?;
        writeln!(out, "regime   {}", d.regime_hint.label())?;
        for w in file.warnings.iter().chain(&d.diagnostics.warnings) {
            writeln!(out, "warning  {w}")?;
        }
    }
    ceiling_check(&file, a.rate, d.value, e_sp)
}

fn primal(a: &PrimalArgs, units: Units, out: &mut dyn Write) -> Result<(), CliError> {
    check_rate(a.rate)?;
    let file = parse_channel_file(&a.channel)?;
    let grid = grid_for(&file, a.grid);
    let p = primal_bound(&file.model, &file.decoder, a.rate, grid)?;
    let d = optimize_dual(&file.model, &file.decoder, a.rate, &DualConfig::default())?;
    if a.json {
        let v = json!({
            "units": units.name(),
            "rate": jnum(units.conv(a.rate)),
            "delta": grid.delta,
            "primal": jnum(units.conv(p.value)),
            "slacked": jnum(units.conv(p.slacked)),
            "dual": jnum(units.conv(d.value)),
            "feasible_points": p.feasible_points,
            "warnings": p.warnings,
        });
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "rate     {} {}", fmt_num(units.conv(a.rate)), units.name())?;
        writeln!(out, "delta    {}", fmt_num(grid.delta))?;
        writeln!(out, "primal   {}", fmt_num(units.conv(p.value)))?;
        writeln!(out, "slacked  {}", fmt_num(units.conv(p.slacked)))?;
        writeln!(out, "dual     {}", fmt_num(units.conv(d.value)))?;
        writeln!(out, "points   {}", p.feasible_points)?;
        for w in &p.warnings {
            writeln!(out, "warning  {w}")?;
        }
    }
    if d.value > p.value + INVARIANT_TOL {
        return Err(CliError::Invariant(format!(
            "dual {} exceeds primal {} at rate {}",
            d.value, p.value, a.rate
        )));
    }
    Ok(())
}

fn regimes(a: &RegimesArgs, units: Units, out: &mut dyn Write) -> Result<(), CliError> {
    let file = parse_channel_file(&a.channel)?;
    if !file.decoder.is_matched_ml(&file.model) {
        return Err(CliError::Input(
            "regimes needs matched deterministic decoding (W_tilde = W, beta = inf)".into(),
        ));
    }
    let rc = critical_rates(&file.model);
    let c = mutual_information(&file.model);
    writeln!(out, "units    {}", units.name())?;
    writeln!(out, "R_c1     {}", fmt_num(units.conv(rc.r_c1)))?;
    writeln!(out, "R_c2     {}", fmt_num(units.conv(rc.r_c2)))?;
    writeln!(out, "C        {}", fmt_num(units.conv(c)))?;
    writeln!(out, "rate,low,moderate,high,bound,label")?;
    for r in rate_grid(0.0, a.rmax.unwrap_or(c), a.points) {
        let b = regime_bound(&file.model, &file.decoder, r)?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(units.conv(r)),
            fmt_num(units.conv(b.low)),
            fmt_num(units.conv(b.moderate)),
            fmt_num(units.conv(b.high)),
            fmt_num(units.conv(b.value)),
            b.label.label()
        )?;
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, units: Units, out: &mut dyn Write) -> Result<(), CliError> {
    check_rate(a.rate)?;
    let file = parse_channel_file(&a.channel)?;
    let cfg = SimConfig {
        n: a.n,
        rate_nats: a.rate,
        num_codes: a.codes,
        seed: a.seed,
        threads: a.threads,
    };
    let est = trc_estimate(&file.model, &file.decoder, &cfg)?;
    if a.json {
        let v = json!({
            "units": units.name(),
            "estimate": jnum(units.conv(est.estimate)),
            "stderr": jnum(units.conv(est.stderr)),
            "zero_error_codes": est.zero_error_codes,
            "num_codes": est.num_codes,
            "messages": est.messages,
            "threads": est.threads,
        });
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "estimate {} {}", fmt_num(units.conv(est.estimate)), units.name())?;
        writeln!(out, "stderr   {}", fmt_num(units.conv(est.stderr)))?;
        writeln!(out, "messages {}", est.messages)?;
        writeln!(out, "codes    {}", est.num_codes)?;
        writeln!(out, "zero-Pe  {}", est.zero_error_codes)?;
        writeln!(out, "threads  {}", est.threads)?;
    }
    Ok(())
}

fn identities(a: &IdentitiesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let checks = identity_suite(a.seed);
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {} (worst {}, tol {})", c.name, fmt_num(c.worst), fmt_num(c.tolerance))?;
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(CliError::Invariant("identity suite failed".into()))
    }
}
