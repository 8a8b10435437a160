//! Experiment runner: flat `key=value` configs, CSV outputs and a JSON run manifest.
//!
//! Every subcommand reads its parameters from an optional config file and from
//! command-line flags of the same names; flags win. Outputs land in
//! `--out-dir`, else `$WVCF_OUT_DIR`, else `./wvcf-out`. CSV bodies depend only
//! on the resolved parameters; timestamps live in the manifest alone.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{SecondsFormat, Utc};
use clap::{Arg, ArgAction, Command};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Result, WvcfError};
use crate::linops::{weak_value, Complex64};
use crate::phi4::{one_lattice_compare, Phi4Model, Phi4System, Selections, DEFAULT_MAX_DIM};
use crate::pqho::{
    build_operators, cutoff_convergence, equal_time_first_order_strict, ground_state_exact, ground_state_gl,
    ConvergenceState, GroundStateMethod, PqhoModel, PqhoSystem,
};
use crate::shots::{fmt_float, run_grid, write_samples_csv, Comparison, ShotConfig};
use crate::weakmeas::{prepare_pointer, wvcf_curve_with, PointerState};

pub const OUT_DIR_ENV: &str = "WVCF_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "wvcf-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    PqhoCorrelator,
    PqhoSweep,
    Convergence,
    Tradeoff,
    Phi4,
    OneLattice,
    Calibrate,
}

/// Keys shared by every subcommand.
const COMMON_KEYS: &[(&str, &str)] = &[
    ("config", "flat key=value config file; flags override its values"),
    ("out-dir", "output directory (fallback: $WVCF_OUT_DIR, then ./wvcf-out)"),
    ("workers", "worker threads (default: logical cores)"),
];

const OSCILLATOR_KEYS: &[(&str, &str)] = &[
    ("lambda", "quartic coupling [0.1]"),
    ("mass", "oscillator mass [1]"),
    ("omega", "oscillator frequency [1]"),
    ("cutoff", "Fock cutoff [6]"),
    ("ground", "ground state: exact, gl0, gl1, gl2, rs1 [exact]"),
];

const POINTER_KEYS: &[(&str, &str)] = &[("theta0", "pointer polar angle [pi/4]"), ("phi", "pointer phase [0]")];

const T_GRID_KEYS: &[(&str, &str)] = &[
    ("t-min", "first time [0]"),
    ("t-max", "time grid end, exclusive"),
    ("t-step", "time step"),
    ("t-list", "explicit times: start:stop:step or a comma list"),
];

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::PqhoCorrelator,
        Experiment::PqhoSweep,
        Experiment::Convergence,
        Experiment::Tradeoff,
        Experiment::Phi4,
        Experiment::OneLattice,
        Experiment::Calibrate,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Experiment::PqhoCorrelator => "pqho-correlator",
            Experiment::PqhoSweep => "pqho-sweep",
            Experiment::Convergence => "convergence",
            Experiment::Tradeoff => "tradeoff",
            Experiment::Phi4 => "phi4",
            Experiment::OneLattice => "one-lattice",
            Experiment::Calibrate => "calibrate",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.tag() == tag)
    }

    /// File stem shared by the outputs of this experiment.
    fn stem(&self) -> String {
        self.tag().replace('-', "_")
    }

    pub fn about(&self) -> &'static str {
        match self {
            Experiment::PqhoCorrelator => "qubit-pointer readout of <x(t)x(0)> over a time grid",
            Experiment::PqhoSweep => "pqho-correlator repeated over a list of couplings",
            Experiment::Convergence => "correlator and <x^2> against the Fock cutoff",
            Experiment::Tradeoff => "finite-copy Monte Carlo: raw samples, cell statistics, optimal g, 1/delta^2 fits",
            Experiment::Phi4 => "lattice phi^4 correlator through detection-probability variations",
            Experiment::OneLattice => "single-site phi^4 against the oscillator",
            Experiment::Calibrate => "scan lambda against reference values of G(0,0)",
        }
    }

    /// Experiment-specific keys and their help text.
    pub fn keys(&self) -> Vec<(&'static str, &'static str)> {
        let mut keys: Vec<(&str, &str)> = Vec::new();
        match self {
            Experiment::PqhoCorrelator => {
                keys.extend(OSCILLATOR_KEYS);
                keys.extend(POINTER_KEYS);
                keys.push(("g", "coupling strength [0.1]"));
                keys.extend(T_GRID_KEYS);
            }
            Experiment::PqhoSweep => {
                keys.extend(OSCILLATOR_KEYS);
                keys.extend(POINTER_KEYS);
                keys.push(("g-list", "couplings [0.4,0.2,0.1,0.05,0.01]"));
                keys.extend(T_GRID_KEYS);
            }
            Experiment::Convergence => {
                keys.extend(OSCILLATOR_KEYS.iter().filter(|(k, _)| *k != "cutoff" && *k != "ground"));
                keys.push(("cutoffs", "Fock cutoffs [4:11:1]"));
                keys.push(("state", "state per cutoff: exact or gl1 [gl1]"));
                keys.extend(T_GRID_KEYS);
            }
            Experiment::Tradeoff => {
                keys.extend(OSCILLATOR_KEYS);
                keys.extend(POINTER_KEYS);
                keys.push(("t", "time slice [5.1]"));
                keys.push(("g-list", "couplings [0.1:1.05:0.1]"));
                keys.push(("n-list", "copies per observable [5,50,500,5000]"));
                keys.push(("m", "repetitions per cell [1000]"));
                keys.push(("seed-base", "seed of repetition m is seed-base + m [10]"));
                keys.push(("comparison", "dominance quantity: modulus or real [modulus]"));
            }
            Experiment::Phi4 => {
                keys.push(("l", "lattice half extent; sites = 2l+1 [2]"));
                keys.push(("cutoff", "occupation cutoff per mode [5]"));
                keys.push(("mass", "field mass [1]"));
                keys.push(("lambda", "quartic coupling [0.1]"));
                keys.push(("dg", "coupling step of the probability difference [1e-3]"));
                keys.push(("t-list", "times [-2,-1,0,1,2]"));
                keys.push(("max-dim", "largest Hilbert-space dimension allowed [4096]"));
            }
            Experiment::OneLattice => {
                keys.push(("lambda", "field quartic coupling; oscillator uses lambda/24 [2.4]"));
                keys.push(("mass", "field mass and oscillator frequency [1]"));
                keys.push(("cutoff", "shared Fock cutoff [6]"));
                keys.push(("g", "pointer coupling [1e-3]"));
                keys.push(("dg", "coupling step of the probability difference [1e-3]"));
                keys.extend(POINTER_KEYS);
                keys.extend(T_GRID_KEYS);
            }
            Experiment::Calibrate => {
                keys.push(("mass", "oscillator mass [1]"));
                keys.push(("omega", "oscillator frequency [1]"));
                keys.push(("lambda-list", "scanned couplings [0:0.5005:0.001]"));
                keys.push(("cutoff-exact", "cutoff of the eigensolved reference [40]"));
                keys.push(("cutoff-gl", "cutoff of the first-order state [6]"));
                keys.push(("target-exact", "reference G(0,0) of the exact ground state [0.37]"));
                keys.push(("target-gl1", "reference G(0,0) of the first-order state [0.35697259]"));
            }
        }
        keys
    }

    pub fn command(&self) -> Command {
        let mut cmd = Command::new(self.tag()).about(self.about());
        for (key, help) in COMMON_KEYS.iter().chain(self.keys().iter()) {
            cmd = cmd.arg(
                Arg::new(*key)
                    .long(*key)
                    .value_name("VALUE")
                    .help(*help)
                    .allow_hyphen_values(true)
                    .action(ArgAction::Set),
            );
        }
        cmd
    }
}

/// Resolved parameters with a record of every value an experiment consumed.
#[derive(Clone, Debug, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(WvcfError::Config(format!("config line {}: expected key=value, got {raw:?}", i + 1)));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(WvcfError::Config(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(WvcfError::Config(format!("config line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(out)
}

impl Params {
    /// `overrides` replace `file` values key by key.
    pub fn new(file: BTreeMap<String, String>, overrides: BTreeMap<String, String>) -> Self {
        let mut values = file;
        values.extend(overrides);
        Params { values, echo: BTreeMap::new() }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let values = pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Params { values, echo: BTreeMap::new() }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        let v = self.values.remove(key)?;
        self.echo.insert(key.to_string(), v.clone());
        Some(v)
    }

    fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T>
    where
        T::Err: Display,
    {
        v.parse().map_err(|e| WvcfError::Config(format!("{key} = {v:?}: {e}")))
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            Some(v) => Self::parse_value(key, &v),
            None => {
                self.echo.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn get_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.raw(key).map(|v| Self::parse_value(key, &v)).transpose()
    }

    pub fn get_f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if !v.is_finite() {
            return Err(WvcfError::Config(format!("{key} must be finite, got {v}")));
        }
        Ok(v)
    }

    pub fn get_grid(&mut self, key: &str, default: &str) -> Result<Vec<f64>> {
        let v = self.raw(key).unwrap_or_else(|| {
            self.echo.insert(key.to_string(), default.to_string());
            default.to_string()
        });
        parse_grid(&v).map_err(|e| WvcfError::Config(format!("{key}: {e}")))
    }

    pub fn get_usize_list(&mut self, key: &str, default: &str) -> Result<Vec<usize>> {
        self.get_grid(key, default)?
            .into_iter()
            .map(|x| {
                if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                    Ok(x as usize)
                } else {
                    Err(WvcfError::Config(format!("{key}: {x} is not a non-negative integer")))
                }
            })
            .collect()
    }

    /// Either `t-list`, or `t-min`/`t-max`/`t-step` as an exclusive-stop range.
    pub fn get_time_grid(&mut self, t_min: f64, t_max: f64, t_step: f64) -> Result<Vec<f64>> {
        if self.contains("t-list") {
            if ["t-min", "t-max", "t-step"].iter().any(|k| self.contains(k)) {
                return Err(WvcfError::Config("give either t-list or t-min/t-max/t-step, not both".into()));
            }
            return self.get_grid("t-list", "");
        }
        let lo = self.get_f64("t-min", t_min)?;
        let hi = self.get_f64("t-max", t_max)?;
        let step = self.get_f64("t-step", t_step)?;
        range_grid(lo, hi, step)
    }

    fn get_pointer(&mut self) -> Result<PointerState> {
        let theta0 = self.get_f64("theta0", std::f64::consts::FRAC_PI_4)?;
        let phi = self.get_f64("phi", 0.0)?;
        Ok(prepare_pointer(theta0, phi))
    }

    fn get_ground(&mut self) -> Result<GroundStateMethod> {
        let tag = self.get("ground", "exact".to_string())?;
        GroundStateMethod::from_tag(&tag).ok_or_else(|| WvcfError::Config(format!("unknown ground state {tag:?}")))
    }

    fn get_oscillator(&mut self) -> Result<PqhoModel> {
        let lambda = self.get_f64("lambda", 0.1)?;
        let mass = self.get_f64("mass", 1.0)?;
        let omega = self.get_f64("omega", 1.0)?;
        let cutoff = self.get("cutoff", 6usize)?;
        PqhoModel::new(mass, omega, lambda, cutoff)
    }

    /// Rejects keys that no experiment step consumed.
    pub fn ensure_consumed(&self) -> Result<()> {
        if self.values.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
        Err(WvcfError::Config(format!("unknown keys: {}", keys.join(", "))))
    }

    /// Every value consumed so far, defaults included.
    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.echo
    }
}

/// `start:stop:step` (stop excluded) or a comma list. Range points are rounded to
/// 12 significant digits so decimal steps give decimal values.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(WvcfError::Config("empty grid".into()));
    }
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|e| WvcfError::Config(format!("{s:?}: {e}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(WvcfError::Config(format!("{s:?} is not finite")))
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(num).collect(),
        [a, b, c] => range_grid(num(a)?, num(b)?, num(c)?),
        _ => Err(WvcfError::Config(format!("grid {text:?} is neither start:stop:step nor a comma list"))),
    }
}

pub fn range_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(WvcfError::Config(format!("grid step must be positive, got {step}")));
    }
    if stop <= start {
        return Err(WvcfError::Config(format!("grid [{start}, {stop}) is empty")));
    }
    let count = ((stop - start) / step - 1e-9).ceil() as usize;
    if count > 10_000_000 {
        return Err(WvcfError::Config(format!("grid [{start}, {stop}) step {step} has {count} points")));
    }
    Ok((0..count)
        .map(|k| {
            let x = start + k as f64 * step;
            format!("{x:.11e}").parse().unwrap_or(x)
        })
        .collect())
}

/// Per-cell failure count recorded in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellFailures {
    pub cell: String,
    pub attempts: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub config: BTreeMap<String, String>,
    pub failures: Vec<CellFailures>,
    pub outputs: Vec<String>,
    pub summary: Value,
}

/// What an experiment hands back before the manifest is assembled.
struct Outcome {
    files: Vec<(String, Vec<u8>)>,
    failures: Vec<CellFailures>,
    summary: Value,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| WvcfError::Io(e.into_error()))
    }
}

fn complex_cells(z: Complex64) -> [String; 2] {
    [fmt_float(z.re), fmt_float(z.im)]
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `explicit`, else `$WVCF_OUT_DIR`, else `./wvcf-out`.
pub fn resolve_out_dir(explicit: Option<String>) -> PathBuf {
    explicit
        .or_else(|| std::env::var(OUT_DIR_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| DEFAULT_OUT_DIR.to_string())
        .into()
}

/// Runs one experiment and writes its CSV files and `<stem>_manifest.json` into `out_dir`.
pub fn run(experiment: Experiment, mut params: Params, out_dir: &Path) -> Result<RunManifest> {
    let started = Utc::now();
    let outcome = match experiment {
        Experiment::PqhoCorrelator => pqho_correlator(&mut params)?,
        Experiment::PqhoSweep => pqho_sweep(&mut params)?,
        Experiment::Convergence => convergence(&mut params)?,
        Experiment::Tradeoff => tradeoff(&mut params)?,
        Experiment::Phi4 => phi4(&mut params)?,
        Experiment::OneLattice => one_lattice(&mut params)?,
        Experiment::Calibrate => calibrate(&mut params)?,
    };
    fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::with_capacity(outcome.files.len());
    for (name, bytes) in &outcome.files {
        write_atomic(&out_dir.join(name), bytes)?;
        outputs.push(name.clone());
    }
    let manifest = RunManifest {
        experiment: experiment.tag().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
        finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        config: params.echo().clone(),
        failures: outcome.failures,
        outputs,
        summary: outcome.summary,
    };
    let path = out_dir.join(format!("{}_manifest.json", experiment.stem()));
    write_atomic(&path, &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Full command-line entry point; returns the process exit status.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cmd = Command::new("wvcf")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Weak-valued correlation function experiments")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands(Experiment::ALL.iter().map(Experiment::command));
    let matches = match cmd.try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let Some((tag, sub)) = matches.subcommand() else {
        return 2;
    };
    let Some(experiment) = Experiment::from_tag(tag) else {
        return 2;
    };
    let mut overrides = BTreeMap::new();
    for (key, _) in COMMON_KEYS.iter().chain(experiment.keys().iter()) {
        if let Some(v) = sub.get_one::<String>(key) {
            overrides.insert(key.to_string(), v.clone());
        }
    }
    match dispatch(experiment, overrides) {
        Ok(manifest) => {
            for name in &manifest.outputs {
                println!("{name}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(experiment: Experiment, mut overrides: BTreeMap<String, String>) -> Result<RunManifest> {
    let file = match overrides.remove("config") {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| WvcfError::Config(format!("cannot read config {path:?}: {e}")))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let mut params = Params::new(file, overrides);
    let out_dir = resolve_out_dir(params.raw("out-dir"));
    params.echo.remove("out-dir");
    let workers: Option<usize> = params.get_opt("workers")?;
    let pool = match workers {
        Some(0) => return Err(WvcfError::Config("workers must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n),
        None => rayon::ThreadPoolBuilder::new(),
    }
    .build()
    .map_err(|e| WvcfError::Resource(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(experiment, params, &out_dir))
}

fn curve_rows(table: &mut Table, prefix: &[String], points: &[crate::weakmeas::CurvePoint]) {
    for p in points {
        let mut row = prefix.to_vec();
        row.push(fmt_float(p.t));
        row.extend(complex_cells(p.estimate.value));
        row.extend(complex_cells(p.truth));
        table.push(row);
    }
}

fn pqho_correlator(params: &mut Params) -> Result<Outcome> {
    let model = params.get_oscillator()?;
    let method = params.get_ground()?;
    let pointer = params.get_pointer()?;
    let g = params.get_f64("g", 0.1)?;
    let t_grid = params.get_time_grid(0.0, 30.0, 0.1)?;
    params.ensure_consumed()?;
    let system = PqhoSystem::new(&model)?;
    let ground = system.ground_state(method)?;
    let points = wvcf_curve_with(&system, &ground, &t_grid, g, &pointer)?;
    let mut table = Table::new(&["t", "re_est", "im_est", "re_true", "im_true"]);
    curve_rows(&mut table, &[], &points);
    let max_abs = points.iter().map(|p| (p.estimate.value - p.truth).norm()).fold(0.0, f64::max);
    Ok(Outcome {
        files: vec![("pqho_correlator.csv".into(), table.to_bytes()?)],
        failures: Vec::new(),
        summary: json!({ "points": points.len(), "max_abs_error": max_abs }),
    })
}

fn pqho_sweep(params: &mut Params) -> Result<Outcome> {
    let model = params.get_oscillator()?;
    let method = params.get_ground()?;
    let pointer = params.get_pointer()?;
    let g_list = params.get_grid("g-list", "0.4,0.2,0.1,0.05,0.01")?;
    let t_grid = params.get_time_grid(0.0, 30.0, 0.1)?;
    params.ensure_consumed()?;
    let system = PqhoSystem::new(&model)?;
    let ground = system.ground_state(method)?;
    let mut table = Table::new(&["g", "t", "re_est", "im_est", "re_true", "im_true"]);
    let mut errors = Vec::new();
    for &g in &g_list {
        let points = wvcf_curve_with(&system, &ground, &t_grid, g, &pointer)?;
        curve_rows(&mut table, &[fmt_float(g)], &points);
        let max_abs = points.iter().map(|p| (p.estimate.value - p.truth).norm()).fold(0.0, f64::max);
        errors.push(json!({ "g": g, "max_abs_error": max_abs }));
    }
    Ok(Outcome {
        files: vec![("pqho_sweep.csv".into(), table.to_bytes()?)],
        failures: Vec::new(),
        summary: json!({ "curves": errors }),
    })
}

fn convergence(params: &mut Params) -> Result<Outcome> {
    let lambda = params.get_f64("lambda", 0.1)?;
    let mass = params.get_f64("mass", 1.0)?;
    let omega = params.get_f64("omega", 1.0)?;
    let cutoffs = params.get_usize_list("cutoffs", "4:11:1")?;
    let state = match params.get("state", "gl1".to_string())?.as_str() {
        "exact" => ConvergenceState::Exact,
        "gl1" => ConvergenceState::GlOrder1,
        other => return Err(WvcfError::Config(format!("state must be exact or gl1, got {other:?}"))),
    };
    let t_grid = params.get_time_grid(0.0, 10.0, 0.1)?;
    params.ensure_consumed()?;
    let base = PqhoModel::new(mass, omega, lambda, cutoffs.iter().copied().max().unwrap_or(2).max(2))?;
    let table = cutoff_convergence(&base, &cutoffs, &t_grid, state)?;
    let mut curves = Table::new(&["cutoff", "t", "re_g", "im_g"]);
    let mut equal_time = Table::new(&["cutoff", "g00"]);
    for row in &table.rows {
        for (t, v) in table.t_grid.iter().zip(&row.values) {
            let [re, im] = complex_cells(*v);
            curves.push(vec![row.cutoff.to_string(), fmt_float(*t), re, im]);
        }
        equal_time.push(vec![row.cutoff.to_string(), fmt_float(row.equal_time)]);
    }
    Ok(Outcome {
        files: vec![
            ("convergence.csv".into(), curves.to_bytes()?),
            ("convergence_equal_time.csv".into(), equal_time.to_bytes()?),
        ],
        failures: Vec::new(),
        summary: json!({ "stabilized_value": table.stabilized_value, "stable_from": table.stable_from }),
    })
}

fn tradeoff(params: &mut Params) -> Result<Outcome> {
    let model = params.get_oscillator()?;
    let ground = params.get_ground()?;
    let pointer = params.get_pointer()?;
    let t_slice = params.get_f64("t", 5.1)?;
    let g_list = params.get_grid("g-list", "0.1:1.05:0.1")?;
    let n_list = params.get_usize_list("n-list", "5,50,500,5000")?;
    let m = params.get("m", 1000usize)?;
    let base_seed = params.get("seed-base", 10u64)?;
    let comparison = match params.get("comparison", "modulus".to_string())?.as_str() {
        "modulus" => Comparison::Modulus,
        "real" => Comparison::RealPart,
        other => return Err(WvcfError::Config(format!("comparison must be modulus or real, got {other:?}"))),
    };
    params.ensure_consumed()?;
    let config = ShotConfig { g_list, n_list, m, base_seed, t_slice, model, ground, pointer, comparison };
    let grid = run_grid(&config)?;

    let mut samples = Vec::new();
    write_samples_csv(&mut samples, &grid.cells)?;

    let mut summary = Table::new(&[
        "g",
        "N",
        "count",
        "failures",
        "re_mean",
        "im_mean",
        "var_complex",
        "var_modulus",
        "var_real",
        "var_imag",
        "mean_modulus",
    ]);
    let mut failures = Vec::new();
    for cell in &grid.cells {
        let mut row = vec![fmt_float(cell.g), cell.n.to_string()];
        match &cell.summary {
            Some(s) => {
                row.extend([s.count.to_string(), s.failures.to_string()]);
                row.extend(complex_cells(s.mean));
                row.extend(
                    [s.complex_variance, s.modulus.variance, s.real.variance, s.imag.variance, s.modulus.mean]
                        .map(fmt_float),
                );
            }
            None => {
                row.extend(["0".to_string(), cell.failures().to_string()]);
                row.extend(std::iter::repeat_n(String::new(), 7));
            }
        }
        summary.push(row);
        failures.push(CellFailures {
            cell: format!("g={},N={}", cell.g, cell.n),
            attempts: cell.samples.len(),
            failures: cell.failures(),
        });
    }

    let mut optimal = Table::new(&["N", "g_star", "rule"]);
    let mut optimal_json = Vec::new();
    for &n in &config.n_list {
        let d = grid.optimal_g(n, comparison)?;
        let rule = serde_json::to_value(d.rule)?;
        let rule = rule.as_str().unwrap_or_default().to_string();
        optimal.push(vec![n.to_string(), fmt_float(d.g_star), rule.clone()]);
        optimal_json.push(json!({ "N": n, "g_star": d.g_star, "rule": rule }));
    }

    let mut files = vec![
        ("tradeoff_samples.csv".to_string(), samples),
        ("tradeoff_summary.csv".to_string(), summary.to_bytes()?),
        ("tradeoff_optimal.csv".to_string(), optimal.to_bytes()?),
    ];
    if config.n_list.len() >= 3 {
        let mut scaling = Table::new(&["g", "family", "slope", "intercept", "r2", "excluded"]);
        for &g in &config.g_list {
            for f in grid.scaling(g)? {
                let excluded = f.excluded.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
                let cells = match f.fit {
                    Some(fit) => [fit.slope, fit.intercept, fit.r2].map(fmt_float),
                    None => [String::new(), String::new(), String::new()],
                };
                let mut row = vec![fmt_float(g), f.family.name().to_string()];
                row.extend(cells);
                row.push(excluded);
                scaling.push(row);
            }
        }
        files.push(("tradeoff_scaling.csv".to_string(), scaling.to_bytes()?));
    }
    Ok(Outcome { files, failures, summary: json!({ "z_tv": [grid.z_tv.re, grid.z_tv.im], "optimal_g": optimal_json }) })
}

fn phi4(params: &mut Params) -> Result<Outcome> {
    let half_extent = params.get("l", 2usize)?;
    let n_max = params.get("cutoff", 5usize)?;
    let mass = params.get_f64("mass", 1.0)?;
    let lambda = params.get_f64("lambda", 0.1)?;
    let dg = params.get_f64("dg", 1e-3)?;
    let t_list = params.get_grid("t-list", "-2,-1,0,1,2")?;
    let max_dim = params.get("max-dim", DEFAULT_MAX_DIM)?;
    params.ensure_consumed()?;
    let model = Phi4Model { half_extent, mass, lambda, n_max, max_dim };
    model.validate()?;
    let system = Phi4System::new(&model)?;
    let selections = Selections::default();
    let mut table = Table::new(&["t", "re_rw", "im_rw", "re_gw", "im_gw", "re_true", "im_true"]);
    let mut degenerate = Vec::new();
    for &t in &t_list {
        let r = system.action_readout(t, dg, &selections)?;
        let mut row = vec![fmt_float(t)];
        row.extend(complex_cells(r.r_w));
        row.extend(complex_cells(r.g_w));
        row.extend(complex_cells(r.direct));
        table.push(row);
        if r.degenerate {
            degenerate.push(t);
        }
    }
    Ok(Outcome {
        files: vec![("phi4.csv".into(), table.to_bytes()?)],
        failures: Vec::new(),
        summary: json!({
            "dimension": system.dim(),
            "ground_energy": system.ground_energy(),
            "degenerate_polar_at": degenerate,
        }),
    })
}

fn one_lattice(params: &mut Params) -> Result<Outcome> {
    let lambda = params.get_f64("lambda", 2.4)?;
    let mass = params.get_f64("mass", 1.0)?;
    let cutoff = params.get("cutoff", 6usize)?;
    let g = params.get_f64("g", 1e-3)?;
    let dg = params.get_f64("dg", 1e-3)?;
    let pointer = params.get_pointer()?;
    let t_grid = params.get_time_grid(0.0, 30.0, 0.5)?;
    params.ensure_consumed()?;
    let rows = one_lattice_compare(lambda, mass, cutoff, &t_grid, g, dg, &pointer)?;
    let mut table = Table::new(&[
        "t",
        "re_pqho_true",
        "im_pqho_true",
        "re_phi4_true",
        "im_phi4_true",
        "re_aav",
        "im_aav",
        "re_action",
        "im_action",
    ]);
    let (mut truth_gap, mut aav_err, mut action_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for r in &rows {
        let mut row = vec![fmt_float(r.t)];
        for z in [r.pqho_true, r.phi4_true, r.aav, r.action] {
            row.extend(complex_cells(z));
        }
        table.push(row);
        let scale = r.pqho_true.norm();
        truth_gap = truth_gap.max((r.pqho_true - r.phi4_true).norm());
        aav_err = aav_err.max((r.aav - r.pqho_true).norm() / scale);
        action_err = action_err.max((r.action - r.phi4_true).norm() / scale);
    }
    Ok(Outcome {
        files: vec![("one_lattice.csv".into(), table.to_bytes()?)],
        failures: Vec::new(),
        summary: json!({
            "max_truth_gap": truth_gap,
            "max_relative_error_aav": aav_err,
            "max_relative_error_action": action_err,
        }),
    })
}

/// `G(0,0)` as a function of `λ` for one ground-state recipe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CalibrationSeries {
    /// Eigensolved ground state at a large cutoff.
    Exact,
    /// Normalized first-order Gell-Mann–Low state.
    GlNormalized,
    /// `⟨x²⟩` expanded strictly to first order in `λ`.
    GlStrict,
}

impl CalibrationSeries {
    pub const ALL: [CalibrationSeries; 3] =
        [CalibrationSeries::Exact, CalibrationSeries::GlNormalized, CalibrationSeries::GlStrict];

    pub fn name(&self) -> &'static str {
        match self {
            CalibrationSeries::Exact => "exact",
            CalibrationSeries::GlNormalized => "gl1_normalized",
            CalibrationSeries::GlStrict => "gl1_strict",
        }
    }

    pub fn evaluate(&self, mass: f64, omega: f64, lambda: f64, cutoff: usize) -> Result<f64> {
        let model = PqhoModel::new(mass, omega, lambda, cutoff)?;
        match self {
            CalibrationSeries::Exact => {
                let ground = ground_state_exact(&model)?;
                let x2 = build_operators(&model)?.x_squared();
                Ok(weak_value(&x2, &ground.state, &ground.state)?.re)
            }
            CalibrationSeries::GlNormalized => {
                let ground = ground_state_gl(&model, 1)?;
                let x2 = build_operators(&model)?.x_squared();
                Ok(weak_value(&x2, &ground.state, &ground.state)?.re)
            }
            CalibrationSeries::GlStrict => equal_time_first_order_strict(&model),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetFit {
    pub series: String,
    pub target: f64,
    /// Grid point with the smallest `|G(0,0) − target|`.
    pub best_lambda: f64,
    pub best_residual: f64,
    /// Every crossing of the target inside the scan, refined by bisection.
    pub roots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointFit {
    /// Recipe standing in for the first-order reference.
    pub first_order: String,
    pub best_lambda: f64,
    /// `√(r_exact² + r_first²)` at `best_lambda`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub lambdas: Vec<f64>,
    /// `values[s][i]`: series `s` of [`CalibrationSeries::ALL`] at `lambdas[i]`.
    pub values: Vec<Vec<f64>>,
    pub fits: Vec<TargetFit>,
    pub joint: Vec<JointFit>,
}

/// Scans `λ` and compares `G(0,0)` with the exact and first-order references.
/// Both first-order recipes are fitted to `target_gl1`. Nothing is asserted.
pub fn calibrate_lambda(
    mass: f64,
    omega: f64,
    lambdas: &[f64],
    cutoff_exact: usize,
    cutoff_gl: usize,
    target_exact: f64,
    target_gl1: f64,
) -> Result<CalibrationReport> {
    use rayon::prelude::*;
    if lambdas.is_empty() {
        return Err(WvcfError::Config("lambda scan is empty".into()));
    }
    let cutoff_of = |s: CalibrationSeries| if s == CalibrationSeries::Exact { cutoff_exact } else { cutoff_gl };
    let target_of = |s: CalibrationSeries| if s == CalibrationSeries::Exact { target_exact } else { target_gl1 };
    let values = CalibrationSeries::ALL
        .iter()
        .map(|&s| lambdas.par_iter().map(|&l| s.evaluate(mass, omega, l, cutoff_of(s))).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut fits = Vec::new();
    for (s, vals) in CalibrationSeries::ALL.iter().zip(&values) {
        let target = target_of(*s);
        let resid: Vec<f64> = vals.iter().map(|v| v - target).collect();
        let best = (0..lambdas.len()).min_by(|&a, &b| resid[a].abs().total_cmp(&resid[b].abs())).unwrap_or(0);
        let mut roots = Vec::new();
        for i in 0..lambdas.len().saturating_sub(1) {
            if resid[i] == 0.0 {
                roots.push(lambdas[i]);
            } else if resid[i] * resid[i + 1] < 0.0 {
                let f = |l: f64| s.evaluate(mass, omega, l, cutoff_of(*s)).map(|v| v - target);
                roots.push(bisect(f, lambdas[i], lambdas[i + 1], resid[i])?);
            }
        }
        if resid.last() == Some(&0.0) {
            roots.push(lambdas[lambdas.len() - 1]);
        }
        fits.push(TargetFit {
            series: s.name().to_string(),
            target,
            best_lambda: lambdas[best],
            best_residual: resid[best],
            roots,
        });
    }
    let joint = [CalibrationSeries::GlNormalized, CalibrationSeries::GlStrict]
        .iter()
        .map(|&s| {
            let k = CalibrationSeries::ALL.iter().position(|x| *x == s).unwrap_or(1);
            let r = |i: usize| ((values[0][i] - target_exact).powi(2) + (values[k][i] - target_gl1).powi(2)).sqrt();
            let best = (0..lambdas.len()).min_by(|&a, &b| r(a).total_cmp(&r(b))).unwrap_or(0);
            JointFit { first_order: s.name().to_string(), best_lambda: lambdas[best], residual: r(best) }
        })
        .collect();
    Ok(CalibrationReport { lambdas: lambdas.to_vec(), values, fits, joint })
}

/// Root of `f` in `[a, b]` given `f(a) = fa` and a sign change across the bracket.
fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

fn calibrate(params: &mut Params) -> Result<Outcome> {
    let mass = params.get_f64("mass", 1.0)?;
    let omega = params.get_f64("omega", 1.0)?;
    let lambdas = params.get_grid("lambda-list", "0:0.5005:0.001")?;
    let cutoff_exact = params.get("cutoff-exact", 40usize)?;
    let cutoff_gl = params.get("cutoff-gl", 6usize)?;
    let target_exact = params.get_f64("target-exact", 0.37)?;
    let target_gl1 = params.get_f64("target-gl1", 0.35697259)?;
    params.ensure_consumed()?;
    let report = calibrate_lambda(mass, omega, &lambdas, cutoff_exact, cutoff_gl, target_exact, target_gl1)?;
    let mut table = Table::new(&[
        "lambda",
        "g00_exact",
        "g00_gl1_normalized",
        "g00_gl1_strict",
        "res_exact",
        "res_gl1_normalized",
        "res_gl1_strict",
    ]);
    for (i, l) in report.lambdas.iter().enumerate() {
        let mut row = vec![fmt_float(*l)];
        row.extend(report.values.iter().map(|v| fmt_float(v[i])));
        row.extend(report.values.iter().zip(&report.fits).map(|(v, f)| fmt_float(v[i] - f.target)));
        table.push(row);
    }
    Ok(Outcome {
        files: vec![("calibrate.csv".into(), table.to_bytes()?)],
        failures: Vec::new(),
        summary: json!({ "fits": report.fits, "joint": report.joint }),
    })
}
