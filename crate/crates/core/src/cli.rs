//! Config-driven experiment runner behind the `leaky-spectra` binary.
//!
//! Each subcommand reads one JSON document, runs a solver and writes JSON
//! and CSV files into the output directory. Floats are printed with 17
//! significant digits so that reruns can be compared byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::geometry::{CurveSpec, Deformation, Profile};
use crate::oned::{
    band_bottom_1d, bound_below_band_bs, discriminant_scan, ground_state_1d, sample_shift_sets, shift_sweep,
    strong_coupling_compare, ShiftSampler, WellArray1D, WellProfile,
};
use crate::spectral::{
    band_structure, convexity_scan, find_bound_state, find_threshold, find_threshold_refined, fmt17,
    BoundStateConfig, ThresholdConfig, TrialGap, Verdict,
};

#[derive(Debug, Parser)]
#[command(name = "leaky-spectra", version, about = "Birman-Schwinger spectra of leaky periodic curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bottom of the essential spectrum of the periodic curve.
    Threshold(RunArgs),
    /// Floquet band functions over the Brillouin zone.
    Bands(RunArgs),
    /// Bound state below the threshold for a deformed curve.
    BoundState(RunArgs),
    /// One-dimensional well arrays and the strong-coupling comparison.
    Oned(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Threshold(_) => "threshold",
            Command::Bands(_) => "bands",
            Command::BoundState(_) => "bound-state",
            Command::Oned(_) => "oned",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Threshold(a) | Command::Bands(a) | Command::BoundState(a) | Command::Oned(a) => a,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `out_dir` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure classes with stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::Overlap(_) | Error::NotSmooth(_) | Error::WindowTooSmall(_) | Error::Resolution(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Preset deformations on the sine curve `A = 0.5`, `a = 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Smooth contraction, depth 0.4 over `[−2a, 2a]`.
    Contraction,
    /// ε-scaled curve with the wiggle `sin³` of unit amplitude over `[−2a, 2a]`.
    ZeroMean,
    /// The zero-mean wiggle plus the contraction, both ε-scaled.
    NegativeMean,
}

impl Scenario {
    pub fn curve(self, base: Option<&CurveSpec<f64>>, epsilon: Option<f64>) -> CurveSpec<f64> {
        let a = std::f64::consts::TAU;
        let base = base.cloned().unwrap_or_else(|| CurveSpec::new(a, Profile::Sine { amplitude: 0.5 }, Deformation::Zero));
        let l = 2.0 * base.period_a;
        let contraction = Deformation::SmoothContraction { depth: 0.4, half_width: l };
        let wiggle = Deformation::ZeroMeanWiggle { amplitude: 1.0, half_width: l };
        match self {
            Scenario::Contraction => {
                let s = base.with_tau(contraction);
                match epsilon {
                    Some(e) => s.with_epsilon(e),
                    None => s,
                }
            }
            Scenario::ZeroMean => base.with_tau(wiggle).with_epsilon(epsilon.unwrap_or(0.05)),
            Scenario::NegativeMean => {
                base.with_tau(Deformation::Composite { parts: vec![wiggle, contraction] }).with_epsilon(epsilon.unwrap_or(0.05))
            }
        }
    }
}

fn default_n_theta() -> usize {
    33
}
fn default_bands() -> usize {
    3
}
fn default_n_moll() -> Vec<usize> {
    vec![8, 16, 32, 64]
}
fn default_convexity_points() -> usize {
    400
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsSection {
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_bands")]
    pub bands: usize,
}

impl Default for BandsSection {
    fn default() -> Self {
        Self { n_theta: default_n_theta(), bands: default_bands() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundStateSection {
    #[serde(default)]
    pub search: BoundStateConfig<f64>,
    /// Evaluate the trial-function gap.
    #[serde(default = "yes")]
    pub trial_gap: bool,
    #[serde(default = "default_n_moll")]
    pub n_moll: Vec<usize>,
    #[serde(default = "default_convexity_points")]
    pub convexity_points: usize,
}

impl Default for BoundStateSection {
    fn default() -> Self {
        Self { search: BoundStateConfig::default(), trial_gap: true, n_moll: default_n_moll(), convexity_points: default_convexity_points() }
    }
}

fn default_spacing() -> f64 {
    4.0
}
fn default_support() -> f64 {
    3.6
}
fn default_profile() -> WellProfile<f64> {
    WellProfile::Square { depth: 4.0, width: 0.5 }
}
fn default_window_wells() -> usize {
    41
}
fn default_n_per_a() -> usize {
    800
}
fn default_bs_window_wells() -> usize {
    21
}
fn default_bs_n_per_well() -> usize {
    36
}
fn default_solver_tol() -> f64 {
    1e-6
}
fn default_discriminant_points() -> usize {
    201
}
fn default_s_half_periods() -> f64 {
    20.0
}
fn default_n_fd() -> usize {
    8000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub count: usize,
    pub sampler: ShiftSampler<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongCouplingSection {
    pub curve: CurveSpec<f64>,
    pub alpha_list: Vec<f64>,
    /// Deformation applied to one copy of the curve (step shifts of straight parts).
    #[serde(default)]
    pub shifted_tau: Option<Deformation<f64>>,
    /// Half-length of the effective-operator window, in arc-length periods.
    #[serde(default = "default_s_half_periods")]
    pub s_half_periods: f64,
    #[serde(default = "default_n_fd")]
    pub n_fd: usize,
    #[serde(default)]
    pub threshold: ThresholdConfig<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnedSection {
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_support")]
    pub support_b: f64,
    #[serde(default = "default_profile")]
    pub profile: WellProfile<f64>,
    /// Displacements by well index.
    #[serde(default)]
    pub shifts: BTreeMap<i64, f64>,
    #[serde(default = "default_window_wells")]
    pub window_wells: usize,
    #[serde(default = "default_n_per_a")]
    pub n_per_a: usize,
    #[serde(default = "default_bs_window_wells")]
    pub bs_window_wells: usize,
    #[serde(default = "default_bs_n_per_well")]
    pub bs_n_per_well: usize,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_discriminant_points")]
    pub discriminant_points: usize,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub strong_coupling: Option<StrongCouplingSection>,
}

impl Default for OnedSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all oned fields have defaults")
    }
}

/// The whole experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub curve: Option<CurveSpec<f64>>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Scale ε for the scenario presets.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub threshold: ThresholdConfig<f64>,
    #[serde(default)]
    pub bands: BandsSection,
    #[serde(default)]
    pub bound_state: BoundStateSection,
    #[serde(default)]
    pub oned: Option<OnedSection>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical re-serialization (defaults filled in).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn alpha(&self) -> Result<f64, CliError> {
        let a = self.alpha.ok_or_else(|| CliError::Config("missing key `alpha`".into()))?;
        if !(a.is_finite() && a > 0.0) {
            return Err(CliError::Config(format!("`alpha` must be positive, got {a}")));
        }
        Ok(a)
    }

    fn curve(&self) -> Result<CurveSpec<f64>, CliError> {
        let c = self.curve.clone().ok_or_else(|| CliError::Config("missing key `curve`".into()))?;
        c.validate()?;
        Ok(c)
    }

    fn periodic_curve(&self) -> Result<CurveSpec<f64>, CliError> {
        let c = self.curve()?;
        if c.has_deformation() {
            return Err(CliError::Config("`curve.tau` must be zero for this command".into()));
        }
        Ok(c)
    }

    fn deformed_curve(&self) -> Result<CurveSpec<f64>, CliError> {
        let c = match self.scenario {
            Some(s) => s.curve(self.curve.as_ref(), self.epsilon),
            None => {
                if self.epsilon.is_some() {
                    return Err(CliError::Config("`epsilon` applies to scenario presets; set `curve.epsilon_scale` instead".into()));
                }
                self.curve()?
            }
        };
        c.validate()?;
        if !c.has_deformation() {
            return Err(CliError::Config("bound-state needs a nonzero `curve.tau`".into()));
        }
        Ok(c)
    }
}

/// Files written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Parses the config, runs the subcommand and writes its outputs.
pub fn run(cli: &Cli) -> Result<RunOutput, CliError> {
    let args = cli.command.args();
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let out_dir = args.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let records = match cli.command {
        Command::Threshold(_) => cmd_threshold(&cfg)?,
        Command::Bands(_) => cmd_bands(&cfg)?,
        Command::BoundState(_) => cmd_bound_state(&cfg)?,
        Command::Oned(_) => cmd_oned(&cfg)?,
    };
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut files = Vec::new();
    for (name, body) in &records.files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        files.push(path);
    }
    Ok(RunOutput { files, summary: records.summary })
}

/// In-memory outputs of a subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Records {
    pub files: Vec<(String, String)>,
    pub summary: String,
}

fn header(cfg: &ExperimentConfig, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("config_hash".into(), json!(cfg.hash()));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m
}

fn to_value<S: Serialize>(x: &S) -> Value {
    serde_json::to_value(x).expect("records serialize")
}

pub fn cmd_threshold(cfg: &ExperimentConfig) -> Result<Records, CliError> {
    let alpha = cfg.alpha()?;
    let curve = cfg.periodic_curve()?;
    let rep = find_threshold_refined(&curve, alpha, &cfg.threshold)?;
    let mut rec = header(cfg, "threshold");
    rec.insert("alpha".into(), json!(alpha));
    rec.insert("kappa0".into(), json!(rep.base.kappa0));
    rec.insert("eps0".into(), json!(rep.base.eps0));
    rec.insert(
        "resolution".into(),
        json!({
            "n_cell": rep.base.n_cell,
            "n_images": rep.base.n_images,
            "tail_bound": rep.base.tail_bound,
            "kh_target": cfg.threshold.kh_target,
            "residual": rep.base.residual,
        }),
    );
    rec.insert(
        "refinement".into(),
        json!({
            "kappa0": rep.refined.kappa0,
            "eps0": rep.refined.eps0,
            "n_cell": rep.refined.n_cell,
            "n_images": rep.refined.n_images,
            "eps0_change": (rep.refined.eps0 - rep.base.eps0).abs(),
        }),
    );
    let summary = format!("eps0 = {}", fmt17(rep.base.eps0));
    Ok(Records { files: vec![("threshold.json".into(), to_json17(&Value::Object(rec)))], summary })
}

pub fn cmd_bands(cfg: &ExperimentConfig) -> Result<Records, CliError> {
    let alpha = cfg.alpha()?;
    let curve = cfg.periodic_curve()?;
    let bs = band_structure(&curve, alpha, cfg.bands.n_theta, cfg.bands.bands, &cfg.threshold)?;
    let failures: Vec<Value> = bs
        .points
        .iter()
        .filter_map(|p| p.error.as_ref().map(|e| json!({"theta": p.theta, "error": e})))
        .collect();
    let mut rec = header(cfg, "bands");
    rec.insert("alpha".into(), json!(alpha));
    rec.insert("eps0".into(), json!(bs.threshold.eps0));
    rec.insert(
        "resolution".into(),
        json!({
            "n_cell": bs.n_cell,
            "n_theta": cfg.bands.n_theta,
            "bands_requested": cfg.bands.bands,
            "kappa_min": bs.kappa_min,
            "tail_tol": cfg.threshold.tail_tol,
        }),
    );
    rec.insert("bands_found".into(), json!(bs.points.iter().map(|p| p.energies.len()).collect::<Vec<_>>()));
    rec.insert("failures".into(), Value::Array(failures));
    let rows: usize = bs.points.iter().map(|p| p.energies.len()).sum();
    Ok(Records {
        files: vec![("bands.csv".into(), bs.to_csv()), ("bands.json".into(), to_json17(&Value::Object(rec)))],
        summary: format!("{rows} band rows"),
    })
}

pub fn cmd_bound_state(cfg: &ExperimentConfig) -> Result<Records, CliError> {
    let alpha = cfg.alpha()?;
    let curve = cfg.deformed_curve()?;
    let reference = curve.reference();
    let th = find_threshold(&reference, alpha, &cfg.threshold)?;
    let sec = &cfg.bound_state;
    let search = find_bound_state(&curve, alpha, th.kappa0, &sec.search)?;
    let (window, n) = sec.search.grid(&curve);

    let trial = if sec.trial_gap {
        let tg = TrialGap::new(&curve, &reference, alpha, th.kappa0, window, n, th.n_cell)?;
        to_value(&tg.mollifier_scan(&sec.n_moll))
    } else {
        Value::Null
    };
    let convexity = match curve.epsilon_scale {
        Some(_) => to_value(&convexity_scan(&curve, th.kappa0, sec.convexity_points)?),
        None => Value::Null,
    };

    let found = search.verdict == Verdict::Found;
    let r = search.result.as_ref();
    let mut rec = header(cfg, "bound-state");
    rec.insert("found".into(), json!(found));
    rec.insert("verdict".into(), to_value(&search.verdict));
    rec.insert("kappa_star".into(), json!(r.map(|r| r.kappa_star)));
    rec.insert("energy".into(), json!(r.map(|r| r.energy)));
    rec.insert("eps0".into(), json!(th.eps0));
    rec.insert("kappa0".into(), json!(th.kappa0));
    rec.insert("margin".into(), json!(search.margin));
    rec.insert("window_W".into(), json!(window));
    rec.insert("n".into(), json!(n));
    rec.insert("trial_gap".into(), trial);
    rec.insert("convexity".into(), convexity);
    rec.insert(
        "diagnostics".into(),
        json!({
            "alpha": alpha,
            "curve": to_value(&curve),
            "measure": to_value(&sec.search.measure),
            "mu_perturbed": search.base.mu_perturbed,
            "mu_unperturbed": search.base.mu_unperturbed,
            "refinement": to_value(&search.refinement),
            "target_level": r.map(|r| r.target_level),
            "kappa_star_calibrated": r.map(|r| r.kappa_star_calibrated),
            "mu_at_root": r.map(|r| r.mu_at_root),
            "depth": r.map(|r| r.depth),
            "step": (2.0 * window) / n as f64,
            "threshold": {"n_cell": th.n_cell, "n_images": th.n_images, "residual": th.residual},
        }),
    );
    let summary = match r {
        Some(r) => format!("bound state at {}", fmt17(r.energy)),
        None => format!("no crossing ({})", serde_json::to_string(&search.verdict).unwrap_or_default()),
    };
    Ok(Records { files: vec![("bound_state.json".into(), to_json17(&Value::Object(rec)))], summary })
}

pub fn cmd_oned(cfg: &ExperimentConfig) -> Result<Records, CliError> {
    let sec = cfg.oned.clone().ok_or_else(|| CliError::Config("missing key `oned`".into()))?;
    let base = WellArray1D::new(sec.spacing, sec.support_b, sec.profile.clone());
    base.validate()?;
    let arr = base.with_shifts(sec.shifts.clone());
    arr.validate()?;
    let eps0 = band_bottom_1d(&base)?;
    let gs = ground_state_1d(&arr, sec.window_wells, sec.n_per_a)?;
    let bs_window = sec.spacing * ((sec.bs_window_wells.saturating_sub(1)) / 2) as f64;
    let bs = bound_below_band_bs(&arr, bs_window, sec.bs_n_per_well, sec.solver_tol)?;

    let depth = base.profile.depth();
    let scan = discriminant_scan(&base, -depth, 0.0, sec.discriminant_points);
    let mut disc = String::from("E,trM\n");
    for (e, t) in &scan {
        let _ = writeln!(disc, "{},{}", fmt17(*e), fmt17(*t));
    }

    let mut files = Vec::new();
    let mut rec = header(cfg, "oned");
    rec.insert("eps0".into(), json!(eps0));
    rec.insert("ground".into(), json!(gs.energy));
    rec.insert("ground_richardson".into(), json!(gs.richardson));
    rec.insert("below_band".into(), json!(gs.energy < eps0 - sec.solver_tol));
    rec.insert("shifts".into(), to_value(&arr.shifts));
    rec.insert("bs".into(), to_value(&bs));
    rec.insert(
        "resolution".into(),
        json!({
            "window_wells": sec.window_wells,
            "n_per_a": sec.n_per_a,
            "bs_window": bs_window,
            "bs_n_per_well": sec.bs_n_per_well,
            "discriminant_points": sec.discriminant_points,
        }),
    );
    if let Some(sw) = &sec.sweep {
        let arrays = sample_shift_sets(&base, &sw.sampler, sw.count, cfg.seed)?;
        let cases = shift_sweep(&arrays, sec.window_wells, sec.n_per_a, bs_window, sec.bs_n_per_well, sec.solver_tol)?;
        rec.insert("seed".into(), json!(cfg.seed));
        rec.insert("sweep".into(), to_value(&cases));
    }
    if let Some(sc) = &sec.strong_coupling {
        sc.curve.validate()?;
        let shifted = sc.shifted_tau.clone().map(|t| sc.curve.with_tau(t));
        let s_half = sc.s_half_periods * crate::oned::CurvatureWells::new(&sc.curve)?.cell_length;
        let rows = strong_coupling_compare(&sc.curve, shifted.as_ref(), &sc.alpha_list, &sc.threshold, s_half, sc.n_fd)?;
        let mut csv = String::from("alpha,eps2d,epseff,delta,ratio\n");
        for r in &rows {
            let _ = writeln!(csv, "{},{},{},{},{}", fmt17(r.alpha), fmt17(r.eps2d), fmt17(r.epseff), fmt17(r.delta), fmt17(r.ratio));
        }
        rec.insert("strong_coupling".into(), to_value(&rows));
        files.push(("strong_coupling.csv".into(), csv));
    }
    files.insert(0, ("oned.json".into(), to_json17(&Value::Object(rec))));
    files.insert(1, ("oned_discriminant.csv".into(), disc));
    Ok(Records { files, summary: format!("ground = {}, band bottom = {}", fmt17(gs.energy), fmt17(eps0)) })
}

/// Pretty JSON with every float in `{:.16e}` form.
pub fn to_json17(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat("  ").take(d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt17(n.as_f64().expect("f64")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, it) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, it, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, it)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, it, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match run(&cli) {
        Ok(out) => {
            println!("{}: {}", cli.command.name(), out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("leaky-spectra {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

/// Writes `text` to `dir/name`, for tests and scripting.
pub fn write_config(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, text)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::parse(r#"{"alpha": 1.0, "alhpa": 2.0}"#).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("alhpa"));
    }

    #[test]
    fn missing_alpha_is_named() {
        let cfg = ExperimentConfig::parse(r#"{"curve": {"period_a": 6.283185307179586, "gamma": {"kind": "flat"}}}"#).unwrap();
        let err = cmd_threshold(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("`alpha`"));
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = ExperimentConfig::parse(r#"{"alpha": 1.0}"#).unwrap();
        let b = ExperimentConfig::parse("{\n  \"alpha\" : 1\n}").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn json17_formats_floats_only() {
        let v = json!({"x": 0.25, "n": 3, "s": "a\"b", "v": [1.5], "e": {}});
        let s = to_json17(&v);
        assert!(s.contains("\"x\": 2.5000000000000000e-1"));
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"s\": \"a\\\"b\""));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"], json!(0.25));
    }

    #[test]
    fn zero_tau_bound_state_is_a_config_error() {
        let cfg = ExperimentConfig::parse(
            r#"{"alpha": 2.0, "curve": {"period_a": 6.283185307179586, "gamma": {"kind": "sine", "params": {"amplitude": 0.5}}}}"#,
        )
        .unwrap();
        assert_eq!(cmd_bound_state(&cfg).unwrap_err().exit_code(), 1);
    }
}
