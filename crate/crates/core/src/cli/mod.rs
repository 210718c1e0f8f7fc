//! Command-line front end. Every subcommand takes `--config file.json`; flags
//! given on the command line override the file, which overrides defaults.

mod output;
pub mod values;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::ffi::OsString;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cavity::{self, CavityParams};
use crate::dicke::{Axis, EnsembleDims, OperatorSet, Sign, MAX_ATOMS};
use crate::error::Error;
use crate::husimi::{qpd_field, SphereGrid};
use crate::observables::{self, noise_model_table};
use crate::protocol::{self, Detection, ProtocolId, ProtocolParams, ProtocolSpec};

pub use output::{fmt_f64, manifest_path, write_atomic};
use output::{csv_line, fmt_opt, Run};
use values::{RangeSpec, Real};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const THREADS_ENV: &str = "CATSPIN_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Parser, Debug)]
#[command(name = "catspin", version, about = "Schrödinger-cat interferometer and clock simulator")]
pub struct Cli {
    /// Worker threads; falls back to CATSPIN_THREADS, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Signal, SDS, PGS and Λ over a φ grid.
    Fringe(FringeArgs),
    /// Peak Λ over the φ window, per μ.
    Sensitivity(SensitivityArgs),
    /// Husimi distribution at a protocol stage.
    Qpd(QpdArgs),
    /// Collective-state populations at a protocol stage.
    Collective(CollectiveArgs),
    /// Cavity squeezing budget, sweep or design report.
    Cavity(CavityArgs),
    /// Λ versus excess noise for the protocol comparison table.
    ExcessNoise(ExcessNoiseArgs),
    /// RMS of even- and odd-N sensitivities.
    ParityAverage(ParityArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    Cd,
    SpinUp,
    Csd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFormat {
    Csv,
    Raw,
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    match s.trim() {
        "1" | "+1" | "+" | "plus" => Ok(Sign::Plus),
        "-1" | "-" | "minus" => Ok(Sign::Minus),
        other => Err(format!("expected +1 or -1, got `{other}`")),
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ProtocolArgs {
    /// Built-in protocol: crain, scain, cac, cosac, scac.
    #[arg(long)]
    pub protocol: Option<String>,
    /// JSON protocol definition; replaces --protocol.
    #[arg(long)]
    pub protocol_file: Option<PathBuf>,
    /// Number of atoms.
    #[arg(long)]
    pub n: Option<Real>,
    /// Squeezing parameter μ ∈ [0, π/2]; accepts `0.5pi`.
    #[arg(long)]
    pub mu: Option<Real>,
    /// Auxiliary rotation axis.
    #[arg(long)]
    pub ara: Option<Axis>,
    /// Corrective rotation sign, +1 or -1.
    #[arg(long, value_parser = parse_sign, allow_hyphen_values = true)]
    pub xi: Option<Sign>,
    #[arg(long, value_enum)]
    pub detection: Option<DetectionMode>,
    /// Collective state read out by CSD.
    #[arg(long)]
    pub csd_index: Option<usize>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct FringeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    /// φ grid `start:end:count` (default -pi:pi:2001).
    #[arg(long, allow_hyphen_values = true)]
    pub phi_range: Option<RangeSpec>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct SensitivityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    /// μ grid; without it a single row at --mu.
    #[arg(long, allow_hyphen_values = true)]
    pub mu_range: Option<RangeSpec>,
    /// φ window searched for the peak (default 2001 points on (0, pi/2]).
    #[arg(long, allow_hyphen_values = true)]
    pub phi_window: Option<RangeSpec>,
    /// Γ used to convert Λ to a physical sensitivity (default 1).
    #[arg(long)]
    pub gamma: Option<Real>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct QpdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    /// Stage letter; A is the initial state (default: last stage).
    #[arg(long)]
    pub stage: Option<char>,
    /// Dark-zone phase (default π/(2N)).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<Real>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[arg(long)]
    pub n_phi: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<FieldFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CollectiveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub stage: Option<char>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<Real>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CavityArgs {
    /// Number of atoms (default 1e7).
    #[arg(long)]
    pub n: Option<Real>,
    /// Single-atom cooperativity (default 0.01).
    #[arg(long)]
    pub coop: Option<Real>,
    /// Cooperativity sweep; writes CSV.
    #[arg(long)]
    pub coop_range: Option<RangeSpec>,
    /// Geometric spacing for ranges.
    #[arg(long)]
    pub log: bool,
    /// Normalised probe detuning (default √(8N𝒞)).
    #[arg(long)]
    pub delta_tilde: Option<Real>,
    /// Twist χt (default π/2).
    #[arg(long)]
    pub chi_t: Option<Real>,
    /// Design report (χ, t_SC, scattering) instead of a budget.
    #[arg(long)]
    pub design: bool,
    /// CavityParams JSON for --design.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ExcessNoiseArgs {
    /// Number of atoms (default 1e4).
    #[arg(long)]
    pub n: Option<Real>,
    /// ΔS_EN grid (default 1:1e8:161).
    #[arg(long)]
    pub en_range: Option<RangeSpec>,
    #[arg(long)]
    pub log: bool,
    /// Per-protocol crossover and usefulness limit as JSON.
    #[arg(long)]
    pub summary: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ParityArgs {
    #[arg(long)]
    pub even: Option<Real>,
    #[arg(long)]
    pub odd: Option<Real>,
    /// Shorthand for --even N --odd √N.
    #[arg(long)]
    pub n: Option<Real>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Overlays command-line values on the config file. Unset flags (null, or
/// `false` for switches) defer to the file.
pub fn merge_config<T: Serialize + DeserializeOwned>(cli: &T, config: Option<&Path>) -> CliResult<T> {
    let cli_map = match serde_json::to_value(cli).map_err(Error::from)? {
        Value::Object(m) => m,
        _ => unreachable!("argument structs serialise to objects"),
    };
    let mut merged = Map::new();
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .or_else(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .or_else(|e| usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        let Value::Object(file) = file else {
            return usage(format!("config {} must be a JSON object", path.display()));
        };
        for (k, v) in file {
            if !cli_map.contains_key(&k) {
                return usage(format!("unknown config key `{k}` in {}", path.display()));
            }
            merged.insert(k, v);
        }
    }
    for (k, v) in cli_map {
        let set = !(v.is_null() || v == Value::Bool(false));
        if set || !merged.contains_key(&k) {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).or_else(|e| usage(format!("config: {e}")))
}

fn atom_count(n: Option<Real>, default: f64) -> CliResult<f64> {
    let n = n.map(|r| r.0).unwrap_or(default);
    if !(n >= 1.0 && n.is_finite()) {
        return usage(format!("--n must be at least 1, got {n}"));
    }
    Ok(n)
}

fn dicke_dims(n: Option<Real>) -> CliResult<EnsembleDims> {
    let Some(Real(n)) = n else {
        return usage("--n is required");
    };
    if n.fract() != 0.0 || !(1.0..=MAX_ATOMS as f64).contains(&n) {
        return usage(format!("--n must be an integer in 1..={MAX_ATOMS}, got {n}"));
    }
    EnsembleDims::new(n as usize).or_else(|e| usage(e.to_string()))
}

/// A protocol bound to an ensemble, ready to run.
pub struct Resolved {
    pub dims: EnsembleDims,
    pub ops: OperatorSet,
    pub spec: ProtocolSpec,
    pub mu: Option<f64>,
}

fn resolve_detection(p: &ProtocolArgs, default_index: usize) -> CliResult<Option<Detection>> {
    Ok(match (p.detection, p.csd_index) {
        (None, None) => None,
        (Some(DetectionMode::Cd), None) => Some(Detection::Cd),
        (Some(DetectionMode::SpinUp), None) => Some(Detection::SpinUp),
        (Some(DetectionMode::Csd), idx) | (None, idx @ Some(_)) => Some(Detection::Csd {
            index: idx.unwrap_or(default_index),
        }),
        (Some(mode), Some(_)) => {
            return usage(format!("--csd-index conflicts with --detection {mode:?}"));
        }
    })
}

pub fn resolve_protocol(p: &ProtocolArgs) -> CliResult<Resolved> {
    let dims = dicke_dims(p.n)?;
    let mu = p.mu.map(|m| m.0);
    if let Some(m) = mu {
        if !(0.0..=FRAC_PI_2 + 1e-12).contains(&m) {
            return usage(format!("--mu must lie in [0, pi/2], got {m}"));
        }
    }
    let spec = match (&p.protocol_file, &p.protocol) {
        (Some(_), Some(_)) => return usage("--protocol and --protocol-file are mutually exclusive"),
        (Some(path), None) => {
            if p.ara.is_some() || p.xi.is_some() {
                return usage("--ara/--xi only apply to built-in protocols");
            }
            let text = std::fs::read_to_string(path)
                .or_else(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let mut spec = ProtocolSpec::from_json(&text).or_else(|e| usage(e.to_string()))?;
            if let Some(d) = resolve_detection(p, 0)? {
                spec.detection = d;
            }
            spec
        }
        (None, name) => {
            let id: ProtocolId = name
                .as_deref()
                .unwrap_or("scain")
                .parse()
                .or_else(|e: Error| usage(e.to_string()))?;
            let params = ProtocolParams {
                mu: mu.unwrap_or(FRAC_PI_2),
                ara: p.ara.unwrap_or(Axis::X),
                xi: p.xi.unwrap_or(Sign::Minus),
                detection: resolve_detection(p, protocol::default_csd_index(id, dims))?,
            };
            protocol::builtin_for(id, &params, dims).or_else(|e| usage(e.to_string()))?
        }
    };
    spec.detection.validate(dims).or_else(|e| usage(e.to_string()))?;
    Ok(Resolved {
        ops: OperatorSet::new(dims),
        dims,
        spec,
        mu,
    })
}

fn phi_default(dims: EnsembleDims, phi: Option<Real>) -> f64 {
    phi.map(|p| p.0).unwrap_or(PI / (2.0 * dims.n_atoms() as f64))
}

fn stage_spec(r: &Resolved, stage: Option<char>) -> CliResult<(ProtocolSpec, char)> {
    let stage = stage.unwrap_or((b'A' + r.spec.pulses.len() as u8) as char).to_ascii_uppercase();
    let n = r.spec.stage_pulse_count(stage).or_else(|e| usage(e.to_string()))?;
    Ok((r.spec.truncated(n)?, stage))
}

fn cmd_fringe(a: &FringeArgs) -> CliResult<()> {
    let r = resolve_protocol(&a.protocol)?;
    let grid = a
        .phi_range
        .unwrap_or(RangeSpec { start: -PI, end: PI, count: 2001 })
        .linear();
    let mut run = Run::start("fringe");
    let pts = observables::fringe_scan(&r.spec, r.dims, &r.ops, &grid, r.mu)?;
    let floor = observables::DEGENERATE_FLOOR * r.dims.n_atoms() as f64;
    let mut csv = String::from("phi,signal,sds,pgs,lambda\n");
    for p in &pts {
        let lambda = (p.sds >= floor).then(|| (p.pgs / p.sds).abs());
        csv.push_str(&csv_line(&[
            fmt_f64(p.phi),
            fmt_f64(p.signal),
            fmt_f64(p.sds),
            fmt_f64(p.pgs),
            fmt_opt(lambda),
        ]));
    }
    run.emit(a.out.as_deref(), csv.as_bytes())?;
    run.finish(a)?;
    Ok(())
}

fn cmd_sensitivity(a: &SensitivityArgs) -> CliResult<()> {
    let r = resolve_protocol(&a.protocol)?;
    let gamma = a.gamma.map(|g| g.0).unwrap_or(1.0);
    if !(gamma > 0.0) {
        return usage("--gamma must be positive");
    }
    let window = match a.phi_window {
        Some(w) => w.linear(),
        None => observables::default_phi_window(),
    };
    let mus: Vec<Option<f64>> = match a.mu_range {
        Some(m) => {
            if m.start < 0.0 || m.end > FRAC_PI_2 + 1e-12 {
                return usage("--mu-range must lie within [0, pi/2]");
            }
            m.linear().into_iter().map(Some).collect()
        }
        None => vec![r.mu],
    };
    let mut run = Run::start("sensitivity");
    let n = r.dims.n_atoms() as f64;
    let mut csv = String::from("mu,phi_star,pgs,sds,lambda,lambda_over_n\n");
    for mu in mus {
        let s = observables::max_sensitivity(&r.spec, r.dims, &r.ops, &window, mu)?;
        let mu_col = mu.map(fmt_f64).unwrap_or_else(|| fmt_f64(protocol_mu(&r.spec)));
        let lambda = s.lambda.map(|l| l / gamma);
        csv.push_str(&csv_line(&[
            mu_col,
            fmt_f64(s.phi_star),
            fmt_f64(s.pgs),
            fmt_f64(s.sds),
            fmt_opt(lambda),
            fmt_opt(s.normalized(n)),
        ]));
    }
    run.emit(a.out.as_deref(), csv.as_bytes())?;
    run.finish(a)?;
    Ok(())
}

fn protocol_mu(spec: &ProtocolSpec) -> f64 {
    spec.pulses
        .iter()
        .find_map(|p| match p {
            crate::dicke::Pulse::Squeeze { mu, .. } => Some(*mu),
            _ => None,
        })
        .unwrap_or(f64::NAN)
}

fn cmd_qpd(a: &QpdArgs) -> CliResult<()> {
    let r = resolve_protocol(&a.protocol)?;
    let (spec, stage) = stage_spec(&r, a.stage)?;
    let phi = phi_default(r.dims, a.phi);
    let grid = SphereGrid::uniform(a.n_theta.unwrap_or(181), a.n_phi.unwrap_or(361))
        .or_else(|e| usage(e.to_string()))?;
    let format = a.format.unwrap_or(FieldFormat::Csv);
    if format == FieldFormat::Raw && a.out.is_none() {
        return usage("--format raw requires --out");
    }
    let mut run = Run::start("qpd");
    let state = protocol::run(&spec, r.dims, &r.ops, phi, r.mu)?;
    let field = qpd_field(&state, &grid)?;
    match format {
        FieldFormat::Csv => {
            let mut buf = Vec::new();
            field.write_csv(&mut buf)?;
            run.emit(a.out.as_deref(), &buf)?;
        }
        FieldFormat::Raw => {
            let out = a.out.as_deref().expect("checked above");
            run.emit(Some(out), &field.to_le_bytes())?;
            let mut side = serde_json::to_vec_pretty(&field.sidecar(&stage.to_string())).map_err(Error::from)?;
            side.push(b'\n');
            let mut name = out.as_os_str().to_os_string();
            name.push(".json");
            run.emit(Some(Path::new(&name)), &side)?;
        }
    }
    run.finish(a)?;
    Ok(())
}

fn cmd_collective(a: &CollectiveArgs) -> CliResult<()> {
    let r = resolve_protocol(&a.protocol)?;
    let (spec, _) = stage_spec(&r, a.stage)?;
    let phi = phi_default(r.dims, a.phi);
    let mut run = Run::start("collective");
    let state = protocol::run(&spec, r.dims, &r.ops, phi, r.mu)?;
    let mut csv = String::from("index,m,population\n");
    for (k, p) in observables::collective_distribution(&state).into_iter().enumerate() {
        csv.push_str(&csv_line(&[k.to_string(), fmt_f64(r.dims.m(k)), fmt_f64(p)]));
    }
    run.emit(a.out.as_deref(), csv.as_bytes())?;
    run.finish(a)?;
    Ok(())
}

#[derive(Serialize)]
struct DesignReport {
    params: CavityParams,
    cooperativity_from_geometry: f64,
    chi_engineering: f64,
    t_sc: f64,
    dephasing_rate: f64,
    scattering_rate: f64,
    chi_microscopic: Option<f64>,
    intracavity_photons: Option<f64>,
}

fn cmd_cavity(a: &CavityArgs) -> CliResult<()> {
    let mut run = Run::start("cavity");
    let chi_t = a.chi_t.map(|c| c.0).unwrap_or(FRAC_PI_2);
    if a.design {
        let params = match &a.params {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .or_else(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                CavityParams::from_json(&text).or_else(|e| usage(e.to_string()))?
            }
            None => CavityParams::default(),
        };
        let chi = cavity::squeezing_rate_engineering_for(&params)?;
        let report = DesignReport {
            cooperativity_from_geometry: cavity::cooperativity_from_geometry(params.mode_side_d, params.mirror_t),
            chi_engineering: chi,
            t_sc: cavity::squeezing_time(chi, chi_t)?,
            dephasing_rate: cavity::dephasing_rate(chi, params.delta_tilde),
            scattering_rate: cavity::scattering_rate(params.cooperativity, params.delta_tilde, chi)?,
            chi_microscopic: cavity::squeezing_rate_chi(&params).ok(),
            intracavity_photons: cavity::steady_state_amplitude(&params).ok().map(|z| z.norm_sqr()),
            params,
        };
        let mut out = serde_json::to_vec_pretty(&report).map_err(Error::from)?;
        out.push(b'\n');
        run.emit(a.out.as_deref(), &out)?;
        run.finish(a)?;
        return Ok(());
    }
    let n = atom_count(a.n, 1e7)?;
    let budget = |c: f64| -> CliResult<cavity::FidelityBudget> {
        let opt = cavity::optimal_detuning(n, c)?;
        if let Some(w) = &opt.warning {
            if a.delta_tilde.is_none() {
                eprintln!("warning: {w}");
            }
        }
        let dt = a.delta_tilde.map(|d| d.0).unwrap_or(opt.delta_tilde);
        Ok(cavity::improvement_factor(n, c, dt, chi_t)?)
    };
    match (a.coop, a.coop_range) {
        (Some(_), Some(_)) => return usage("--coop and --coop-range are mutually exclusive"),
        (_, Some(range)) => {
            let coops = range.values(a.log).or_else(usage)?;
            let mut csv = String::from("cooperativity,theta,f_exact_db,f_approx_db,f_ideal_db\n");
            for c in coops {
                let b = budget(c)?;
                csv.push_str(&csv_line(&[
                    fmt_f64(c),
                    fmt_f64(b.theta_frac),
                    fmt_f64(b.f_db),
                    fmt_f64(b.f_closed_db),
                    fmt_f64(b.f_ideal_db),
                ]));
            }
            run.emit(a.out.as_deref(), csv.as_bytes())?;
        }
        (c, None) => {
            let b = budget(c.map(|c| c.0).unwrap_or(0.01))?;
            let mut out = serde_json::to_vec_pretty(&b).map_err(Error::from)?;
            out.push(b'\n');
            run.emit(a.out.as_deref(), &out)?;
        }
    }
    run.finish(a)?;
    Ok(())
}

#[derive(Serialize)]
struct NoiseSummary {
    protocol: String,
    pgs_scale: f64,
    sds_scale: f64,
    lambda_qpn: f64,
    crossover: f64,
    usefulness_limit: Option<f64>,
}

fn cmd_excess_noise(a: &ExcessNoiseArgs) -> CliResult<()> {
    let n = atom_count(a.n, 1e4)?;
    let table = noise_model_table(n);
    let mut run = Run::start("excess-noise");
    if a.summary {
        let rows: Vec<NoiseSummary> = table
            .iter()
            .map(|r| NoiseSummary {
                protocol: r.protocol.clone(),
                pgs_scale: r.pgs_scale,
                sds_scale: r.sds_scale,
                lambda_qpn: r.lambda_qpn(n),
                crossover: r.crossover(n),
                usefulness_limit: r.usefulness_limit(n),
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&rows).map_err(Error::from)?;
        out.push(b'\n');
        run.emit(a.out.as_deref(), &out)?;
    } else {
        let grid = a
            .en_range
            .unwrap_or(RangeSpec { start: 1.0, end: 1e8, count: 161 })
            .values(a.log)
            .or_else(usage)?;
        let curves: Vec<Vec<f64>> = table
            .iter()
            .map(|r| observables::excess_noise_curve(r, n, &grid))
            .collect::<crate::Result<_>>()?;
        let mut csv = String::from("delta_s_en");
        for r in &table {
            let _ = write!(csv, ",{}", r.protocol.to_lowercase().replace('-', "_"));
        }
        csv.push('\n');
        for (i, en) in grid.iter().enumerate() {
            let mut cells = vec![fmt_f64(*en)];
            cells.extend(curves.iter().map(|c| fmt_f64(c[i])));
            csv.push_str(&csv_line(&cells));
        }
        run.emit(a.out.as_deref(), csv.as_bytes())?;
    }
    run.finish(a)?;
    Ok(())
}

fn cmd_parity(a: &ParityArgs) -> CliResult<()> {
    let (even, odd) = match (a.even, a.odd, a.n) {
        (Some(e), Some(o), None) => (e.0, o.0),
        (None, None, Some(n)) => (n.0, n.0.sqrt()),
        _ => return usage("give either --even and --odd, or --n"),
    };
    let v = observables::parity_average(even, odd).or_else(|e| usage(e.to_string()))?;
    let mut run = Run::start("parity-average");
    run.emit(a.out.as_deref(), format!("{v}\n").as_bytes())?;
    run.finish(a)?;
    Ok(())
}

fn with_config<T: Serialize + DeserializeOwned>(a: &T, config: &Option<PathBuf>) -> CliResult<T> {
    merge_config(a, config.as_deref())
}

pub fn execute(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Fringe(a) => cmd_fringe(&with_config(a, &a.config)?),
        Command::Sensitivity(a) => cmd_sensitivity(&with_config(a, &a.config)?),
        Command::Qpd(a) => cmd_qpd(&with_config(a, &a.config)?),
        Command::Collective(a) => cmd_collective(&with_config(a, &a.config)?),
        Command::Cavity(a) => cmd_cavity(&with_config(a, &a.config)?),
        Command::ExcessNoise(a) => cmd_excess_noise(&with_config(a, &a.config)?),
        Command::ParityAverage(a) => cmd_parity(&with_config(a, &a.config)?),
    }
}

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        return if n == 0 { usage("--threads must be positive") } else { Ok(Some(n)) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => usage(format!("{THREADS_ENV}=`{v}` is not a positive integer")),
        },
        Err(_) => Ok(None),
    }
}

/// Parses `args` (program name first), runs the command, returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = thread_count(cli.threads).and_then(|threads| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n);
        }
        let pool = b
            .build()
            .map_err(|e| CliError::Runtime(Error::Io(std::io::Error::other(e))))?;
        pool.install(|| execute(&cli.command))
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("catspin").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn fringe_example_parses() {
        let cli = parse(&[
            "fringe", "--protocol", "scain", "--n", "40", "--mu", "0.5pi", "--ara", "x", "--xi", "-1",
            "--phi-range", "-0.05pi:0.05pi:1001", "--out", "f.csv",
        ]);
        let Command::Fringe(a) = cli.command else { panic!() };
        assert_eq!(a.protocol.xi, Some(Sign::Minus));
        assert_eq!(a.phi_range.unwrap().count, 1001);
        let r = resolve_protocol(&a.protocol).unwrap();
        assert_eq!(r.spec.pulses.len(), 9);
        assert_eq!(r.mu, Some(FRAC_PI_2));
    }

    #[test]
    fn bad_atom_counts() {
        for n in ["0", "1.5", "5000"] {
            let p = ProtocolArgs { n: Some(n.parse().unwrap()), ..Default::default() };
            assert!(matches!(resolve_protocol(&p), Err(CliError::Usage(_))), "{n}");
        }
    }

    #[test]
    fn detection_conflicts() {
        let p = ProtocolArgs {
            n: Some(Real(4.0)),
            detection: Some(DetectionMode::Cd),
            csd_index: Some(0),
            ..Default::default()
        };
        assert!(matches!(resolve_protocol(&p), Err(CliError::Usage(_))));
        let p = ProtocolArgs {
            n: Some(Real(4.0)),
            protocol: Some("scac".into()),
            detection: Some(DetectionMode::Csd),
            ..Default::default()
        };
        assert_eq!(resolve_protocol(&p).unwrap().spec.detection, Detection::Csd { index: 4 });
    }

    #[test]
    fn config_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"n": 10, "mu": "0.25pi", "xi": 1, "phi-range": "0:1:3"}"#).unwrap();
        let cli = FringeArgs {
            protocol: ProtocolArgs { n: Some(Real(12.0)), ..Default::default() },
            ..Default::default()
        };
        let m = merge_config(&cli, Some(&cfg)).unwrap();
        assert_eq!(m.protocol.n, Some(Real(12.0)));
        assert_eq!(m.protocol.mu, Some(Real(0.25 * PI)));
        assert_eq!(m.protocol.xi, Some(Sign::Plus));
        assert_eq!(m.phi_range.unwrap().count, 3);
        std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
        assert!(matches!(merge_config(&cli, Some(&cfg)), Err(CliError::Usage(_))));
    }

    #[test]
    fn switches_come_from_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"log": true, "coop-range": "1e-3:1:4"}"#).unwrap();
        let m = merge_config(&CavityArgs::default(), Some(&cfg)).unwrap();
        assert!(m.log);
        assert_eq!(m.coop_range.unwrap().count, 4);
    }
}
