//! Finite-copy Monte Carlo of the pointer readout.
//!
//! Each repetition draws `N` Born-sampled `σ_x` outcomes and `N` `σ_y` outcomes
//! from the exact post-selected pointer, inverts the sample means, and compares
//! the result with the exact correlator through the relative radical vector
//! `z_RV = (z_R − z_TV)/|z_TV|`.
//!
//! Repetition `m` always uses the stream `ChaCha8Rng::seed_from_u64(base_seed + m)`,
//! consuming `N` uniforms for `σ_x` then `N` for `σ_y`. The same stream is reused
//! across every `(g, N)` cell, which is what pairs samples for the dominance test.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WvcfError};
use crate::linops::{pauli_y, weak_value, Complex64, Operator, StateVector};
use crate::pqho::{GroundStateMethod, PqhoModel, PqhoSystem};
use crate::weakmeas::{
    final_spin_expectations, invert_readout, joint_coupling_kernel, PointerKernel, PointerState, SpinExpectations,
};

/// How two `z_RV` samples are ranked when testing dominance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|z_RV(g_i)| < |z_RV(g_j)|`.
    #[default]
    Modulus,
    /// `Re z_RV(g_i) < Re z_RV(g_j)`.
    RealPart,
}

impl Comparison {
    fn score(&self, z: Complex64) -> f64 {
        match self {
            Comparison::Modulus => z.norm(),
            Comparison::RealPart => z.re,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ShotConfig {
    pub g_list: Vec<f64>,
    /// Copies per observable; `2N` in total.
    pub n_list: Vec<usize>,
    /// Repetitions per cell.
    pub m: usize,
    pub base_seed: u64,
    pub t_slice: f64,
    pub model: PqhoModel,
    pub ground: GroundStateMethod,
    pub pointer: PointerState,
    pub comparison: Comparison,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig {
            g_list: (1..=10).map(|k| k as f64 / 10.0).collect(),
            n_list: vec![5, 50, 500, 5000],
            m: 1000,
            base_seed: 10,
            t_slice: 5.1,
            model: PqhoModel::default(),
            ground: GroundStateMethod::ExactEigensolve,
            pointer: PointerState::default(),
            comparison: Comparison::Modulus,
        }
    }
}

impl ShotConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.g_list.is_empty() || self.n_list.is_empty() {
            return Err(WvcfError::Config("g and N lists must be nonempty".into()));
        }
        if let Some(g) = self.g_list.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(WvcfError::Config(format!("coupling must be positive, got {g}")));
        }
        if self.n_list.contains(&0) {
            return Err(WvcfError::Config("copy count N must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(WvcfError::Config("repetition count M must be at least 1".into()));
        }
        if self.base_seed.checked_add(self.m as u64).is_none() {
            return Err(WvcfError::Config("seed range overflows".into()));
        }
        Ok(())
    }

    pub fn seed(&self, repetition: usize) -> u64 {
        self.base_seed + repetition as u64
    }
}

/// Probabilities of outcome `−1` in the normalized post-selected pointer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BornProbabilities {
    pub p_x_minus: f64,
    pub p_y_minus: f64,
}

pub fn born_probabilities(kernel: &PointerKernel, pointer: &PointerState) -> Result<BornProbabilities> {
    let e = final_spin_expectations(kernel, pointer)?;
    Ok(BornProbabilities::from_expectations(&e))
}

impl BornProbabilities {
    /// `P(−1) = (1 − ⟨σ⟩)/2`, clamped against rounding.
    pub fn from_expectations(e: &SpinExpectations) -> Self {
        let p = |s: f64| ((1.0 - s) / 2.0).clamp(0.0, 1.0);
        BornProbabilities { p_x_minus: p(e.sx), p_y_minus: p(e.sy) }
    }
}

/// Mean of `n` outcomes, each `−1` when a uniform draw on `[0,1)` falls below `p_minus`.
pub fn sample_expectation<R: Rng>(p_minus: f64, n: usize, rng: &mut R) -> f64 {
    let minus = (0..n).filter(|_| rng.random::<f64>() < p_minus).count();
    (n as f64 - 2.0 * minus as f64) / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRecord {
    pub g: f64,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub z_r: Complex64,
    pub z_tv: Complex64,
    pub z_rv: Complex64,
    pub failed: bool,
}

/// The readout channel at one `(t, g)`: exact Born probabilities and the initial pointer.
#[derive(Clone, Debug)]
pub struct Channel {
    pub g: f64,
    pub born: BornProbabilities,
    pub initial: SpinExpectations,
    pub z_tv: Complex64,
}

/// Excitation operator and ground state at the configured time slice, shared by all cells.
#[derive(Clone, Debug)]
pub struct TradeoffSetup {
    pub gop: Operator,
    pub ground: StateVector,
    pub pointer: PointerState,
    /// Direct weak value of `Ĝ(t)` in the truncated model.
    pub z_tv: Complex64,
}

impl TradeoffSetup {
    pub fn new(model: &PqhoModel, ground: GroundStateMethod, t_slice: f64, pointer: &PointerState) -> Result<Self> {
        let system = PqhoSystem::new(model)?;
        let ground = system.ground_state(ground)?.state;
        let gop = system.excitations()?.at(t_slice);
        let z_tv = weak_value(&gop, &ground, &ground)?;
        if !(z_tv.norm() > 0.0) {
            return Err(WvcfError::Domain(format!("true correlator vanishes at t = {t_slice}")));
        }
        Ok(TradeoffSetup { gop, ground, pointer: pointer.clone(), z_tv })
    }

    pub fn from_config(config: &ShotConfig) -> Result<Self> {
        TradeoffSetup::new(&config.model, config.ground, config.t_slice, &config.pointer)
    }

    pub fn channel(&self, g: f64) -> Result<Channel> {
        let kernel = joint_coupling_kernel(&self.gop, &self.ground, &self.ground, g, &pauli_y())?;
        Ok(Channel {
            g,
            born: born_probabilities(&kernel, &self.pointer)?,
            initial: self.pointer.expectations(),
            z_tv: self.z_tv,
        })
    }

    /// Readout with exact expectations, the `N → ∞` limit of [`run_repetition`].
    pub fn infinite_copy_readout(&self, g: f64) -> Result<Complex64> {
        let c = self.channel(g)?;
        let fin = SpinExpectations { sx: 1.0 - 2.0 * c.born.p_x_minus, sy: 1.0 - 2.0 * c.born.p_y_minus, sz: f64::NAN };
        Ok(invert_readout(&c.initial, &fin, g)?.value)
    }
}

/// One repetition: `N` shots of each of `σ_x` and `σ_y`, then inversion. A failed
/// inversion is recorded rather than propagated.
pub fn run_repetition(channel: &Channel, n: usize, m: usize, seed: u64) -> SampleRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sx = sample_expectation(channel.born.p_x_minus, n, &mut rng);
    let sy = sample_expectation(channel.born.p_y_minus, n, &mut rng);
    let fin = SpinExpectations { sx, sy, sz: f64::NAN };
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let (z_r, failed) = match invert_readout(&channel.initial, &fin, channel.g) {
        Ok(est) => (est.value, false),
        Err(_) => (nan, true),
    };
    let z_rv = if failed { nan } else { (z_r - channel.z_tv) / channel.z_tv.norm() };
    SampleRecord { g: channel.g, n, m, seed, z_r, z_tv: channel.z_tv, z_rv, failed }
}

/// Population mean and variance of one real statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Moments {
        let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
        let mean = sum / count as f64;
        let variance = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        Moments { mean, variance }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Statistics of `z_RV` over the successful repetitions of a cell. Variances use
/// the population convention (divide by the count).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub count: usize,
    pub failures: usize,
    pub mean: Complex64,
    /// `⟨|z − z̄|²⟩`.
    pub complex_variance: f64,
    pub modulus: Moments,
    pub real: Moments,
    pub imag: Moments,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Complex,
    Modulus,
    Real,
    Imag,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Complex, Family::Modulus, Family::Real, Family::Imag];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Complex => "complex",
            Family::Modulus => "modulus",
            Family::Real => "real",
            Family::Imag => "imag",
        }
    }
}

impl CellSummary {
    pub fn variance(&self, family: Family) -> f64 {
        match family {
            Family::Complex => self.complex_variance,
            Family::Modulus => self.modulus.variance,
            Family::Real => self.real.variance,
            Family::Imag => self.imag.variance,
        }
    }
}

pub fn summarize(samples: &[SampleRecord]) -> Result<CellSummary> {
    let ok: Vec<Complex64> = samples.iter().filter(|s| !s.failed).map(|s| s.z_rv).collect();
    let mut summary = summarize_values(&ok)?;
    summary.failures = samples.len() - ok.len();
    Ok(summary)
}

pub fn summarize_values(values: &[Complex64]) -> Result<CellSummary> {
    if values.is_empty() {
        return Err(WvcfError::Domain("cannot summarize an empty sample".into()));
    }
    let real = Moments::of(values.iter().map(|z| z.re));
    let imag = Moments::of(values.iter().map(|z| z.im));
    let modulus = Moments::of(values.iter().map(|z| z.norm()));
    let mean = Complex64::new(real.mean, imag.mean);
    Ok(CellSummary {
        count: values.len(),
        failures: 0,
        mean,
        complex_variance: real.variance + imag.variance,
        modulus,
        real,
        imag,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(WvcfError::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(WvcfError::Domain("linear fit needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(WvcfError::Domain("linear fit with a single distinct abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r2 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub family: Family,
    /// `None` when fewer than three usable points remain.
    pub fit: Option<LinearFit>,
    /// Copy counts dropped for zero variance.
    pub excluded: Vec<usize>,
}

/// Fits `1/δ²` against `N` for each statistic family at fixed `g`.
pub fn uncertainty_scaling(cells: &[(usize, CellSummary)]) -> Result<Vec<FamilyFit>> {
    if cells.len() < 3 {
        return Err(WvcfError::Domain(format!("scaling fit needs at least 3 copy counts, got {}", cells.len())));
    }
    Family::ALL
        .iter()
        .map(|&family| {
            let (mut xs, mut ys, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
            for (n, s) in cells {
                let v = s.variance(family);
                if v > 0.0 && v.is_finite() {
                    xs.push(*n as f64);
                    ys.push(1.0 / v);
                } else {
                    excluded.push(*n);
                }
            }
            let fit = if xs.len() >= 3 { Some(linear_fit(&xs, &ys)?) } else { None };
            Ok(FamilyFit { family, fit, excluded })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// A single `g` dominates every other.
    Dominator,
    /// No overall dominator; most pairwise dominations wins.
    Copeland,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceResult {
    pub g_star: f64,
    pub rule: SelectionRule,
    /// `wins[i][j]`: paired repetitions where `g_i` beat `g_j`.
    pub wins: Vec<Vec<usize>>,
    /// `pairs[i][j]`: repetitions where both samples succeeded.
    pub pairs: Vec<Vec<usize>>,
}

/// Picks the coupling whose `z_RV` samples beat every other coupling's in more than
/// half of the repetition-paired comparisons; ties go to the smaller `g`.
pub fn optimal_g(cells: &[(f64, &[SampleRecord])], comparison: Comparison) -> Result<DominanceResult> {
    let Some((_, first)) = cells.first() else {
        return Err(WvcfError::Domain("no couplings to compare".into()));
    };
    let m = first.len();
    for (g, s) in cells {
        if s.len() != m {
            return Err(WvcfError::Domain(format!("cell g = {g} has {} samples, expected {m}", s.len())));
        }
        if s.iter().enumerate().any(|(k, r)| r.m != first[k].m) {
            return Err(WvcfError::Domain(format!("cell g = {g} is not paired by repetition index")));
        }
    }
    let k = cells.len();
    let mut wins = vec![vec![0usize; k]; k];
    let mut pairs = vec![vec![0usize; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            for (a, b) in cells[i].1.iter().zip(cells[j].1) {
                if a.failed || b.failed {
                    continue;
                }
                pairs[i][j] += 1;
                if comparison.score(a.z_rv) < comparison.score(b.z_rv) {
                    wins[i][j] += 1;
                }
            }
        }
    }
    let dominates = |i: usize, j: usize| 2 * wins[i][j] > pairs[i][j];
    let order = {
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| cells[a].0.total_cmp(&cells[b].0));
        idx
    };
    if let Some(&i) = order.iter().find(|&&i| (0..k).all(|j| j == i || dominates(i, j))) {
        return Ok(DominanceResult { g_star: cells[i].0, rule: SelectionRule::Dominator, wins, pairs });
    }
    let score = |i: usize| (0..k).filter(|&j| j != i && dominates(i, j)).count();
    let top = (0..k).map(score).max().unwrap_or(0);
    let i = order.iter().copied().find(|&i| score(i) == top).unwrap_or(order[0]);
    Ok(DominanceResult { g_star: cells[i].0, rule: SelectionRule::Copeland, wins, pairs })
}

#[derive(Clone, Debug)]
pub struct GridCell {
    pub g: f64,
    pub n: usize,
    pub samples: Vec<SampleRecord>,
    /// `None` when every repetition failed.
    pub summary: Option<CellSummary>,
}

impl GridCell {
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| s.failed).count()
    }
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub z_tv: Complex64,
    /// Ordered by `g` then `N`, following the config lists.
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn cell(&self, g: f64, n: usize) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.g == g && c.n == n)
    }

    /// Optimal coupling for one copy count.
    pub fn optimal_g(&self, n: usize, comparison: Comparison) -> Result<DominanceResult> {
        let cells: Vec<(f64, &[SampleRecord])> =
            self.cells.iter().filter(|c| c.n == n).map(|c| (c.g, c.samples.as_slice())).collect();
        optimal_g(&cells, comparison)
    }

    /// `1/δ²` fits across copy counts for one coupling.
    pub fn scaling(&self, g: f64) -> Result<Vec<FamilyFit>> {
        let cells: Vec<(usize, CellSummary)> =
            self.cells.iter().filter(|c| c.g == g).filter_map(|c| c.summary.map(|s| (c.n, s))).collect();
        uncertainty_scaling(&cells)
    }
}

/// Runs every `(g, N)` cell for `M` repetitions. Output is independent of the
/// thread count: each repetition owns its stream and results are collected in order.
pub fn run_grid(config: &ShotConfig) -> Result<GridResult> {
    config.validate()?;
    let setup = TradeoffSetup::from_config(config)?;
    let channels = config.g_list.iter().map(|&g| setup.channel(g)).collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(channels.len() * config.n_list.len());
    for channel in &channels {
        for &n in &config.n_list {
            let samples: Vec<SampleRecord> =
                (0..config.m).into_par_iter().map(|m| run_repetition(channel, n, m, config.seed(m))).collect();
            let summary = summarize(&samples).ok();
            cells.push(GridCell { g: channel.g, n, samples, summary });
        }
    }
    Ok(GridResult { z_tv: setup.z_tv, cells })
}

pub const SAMPLE_COLUMNS: [&str; 11] =
    ["g", "N", "m", "seed", "re_zr", "im_zr", "re_ztv", "im_ztv", "re_zrv", "im_zrv", "failed"];

/// Float formatting shared by every CSV writer: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_samples_csv<W: Write>(out: W, cells: &[GridCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_COLUMNS)?;
    for cell in cells {
        for s in &cell.samples {
            w.write_record([
                fmt_float(s.g),
                s.n.to_string(),
                s.m.to_string(),
                s.seed.to_string(),
                fmt_float(s.z_r.re),
                fmt_float(s.z_r.im),
                fmt_float(s.z_tv.re),
                fmt_float(s.z_tv.im),
                fmt_float(s.z_rv.re),
                fmt_float(s.z_rv.im),
                (s.failed as u8).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
