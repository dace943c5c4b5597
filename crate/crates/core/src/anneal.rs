//! Simulated annealing with reflective boundary conditions.
//!
//! A chain proposes `y = x + g`, `g ~ N(0, variance * I)`, folds `y` back into
//! the box with [`BoxDomain::reflect`] (reflected mode only), and accepts with
//! probability `min(1, exp(-(F(y) - F(x)) / T))`. The temperature stays fixed
//! for `inner_iters` steps and is then lowered until it drops to `t_min`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Proposals are folded back into the domain.
    Reflected,
    /// Unconstrained chain; the domain only seeds the starting point.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cooling {
    /// `T_i = T_0 * delta^i`.
    Theorem,
    /// `T_i = T_{i-1} * delta^i`.
    Algorithm1,
}

macro_rules! parse_enum {
    ($ty:ty, $($text:literal => $variant:expr),+ $(,)?) => {
        impl std::str::FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

parse_enum!(Mode, "reflected" => Mode::Reflected, "classical" => Mode::Classical);
parse_enum!(Cooling, "theorem" => Cooling::Theorem, "algorithm1" => Cooling::Algorithm1);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    pub t_max: f64,
    pub t_min: f64,
    pub delta: f64,
    pub inner_iters: usize,
    /// Per-coordinate variance of the Gaussian step. `None` means
    /// `(0.1 * narrowest side)^2`.
    pub proposal_variance: Option<f64>,
    pub seed: u64,
    pub mode: Mode,
    pub cooling: Cooling,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            t_min: 1e-3,
            delta: 0.95,
            inner_iters: 100,
            proposal_variance: None,
            seed: 0,
            mode: Mode::Reflected,
            cooling: Cooling::Theorem,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be positive and finite, got {}", self.t_max));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t_max) {
            return bad(format!(
                "t_min must satisfy 0 < t_min < t_max, got t_min = {}, t_max = {}",
                self.t_min, self.t_max
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.inner_iters == 0 {
            return bad("inner_iters must be at least 1".into());
        }
        if let Some(v) = self.proposal_variance {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("proposal_variance must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn variance_for(&self, domain: &BoxDomain) -> f64 {
        self.proposal_variance
            .unwrap_or_else(|| (0.1 * domain.min_width()).powi(2))
    }

    /// Every temperature level the run visits, hottest first.
    pub fn temperatures(&self) -> Vec<f64> {
        let mut levels = Vec::new();
        let mut t = self.t_max;
        let mut i = 0;
        while t > self.t_min {
            levels.push(t);
            i += 1;
            t = match self.cooling {
                Cooling::Theorem => self.t_max * self.delta.powi(i),
                Cooling::Algorithm1 => t * self.delta.powi(i),
            };
        }
        levels
    }

    /// Objective evaluations one run performs: the start point plus one per step.
    pub fn evaluation_budget(&self) -> usize {
        1 + self.inner_iters * self.temperatures().len()
    }
}

/// Metropolis acceptance probability `min(1, exp(-delta_f / T))`.
///
/// A NaN `delta_f` is never accepted.
pub fn acceptance_probability(delta_f: f64, temperature: f64) -> Result<f64> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if delta_f.is_nan() {
        return Ok(0.0);
    }
    if delta_f <= 0.0 {
        return Ok(1.0);
    }
    Ok((-delta_f / temperature).exp())
}

/// Gaussian step `x + sqrt(variance) * z`, before any reflection.
pub fn propose<R: Rng + ?Sized>(x: &[f64], variance: f64, rng: &mut R) -> Vec<f64> {
    let sd = variance.sqrt();
    x.iter()
        .map(|&xi| {
            let z: f64 = StandardNormal.sample(rng);
            xi + sd * z
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealState {
    pub current: Vec<f64>,
    pub current_value: f64,
    pub best: Vec<f64>,
    pub best_value: f64,
    pub temperature: f64,
    pub iteration: u64,
}

impl AnnealState {
    pub fn new<F: Objective + ?Sized>(f: &F, start: Vec<f64>, temperature: f64) -> Result<Self> {
        let value = f.evaluate(&start)?;
        Ok(Self {
            best: start.clone(),
            best_value: value,
            current: start,
            current_value: value,
            temperature,
            iteration: 0,
        })
    }

    fn record(&self, accepted: bool) -> TraceRecord {
        TraceRecord {
            iteration: self.iteration,
            temperature: self.temperature,
            point: self.current.clone(),
            value: self.current_value,
            accepted,
            best_value: self.best_value,
        }
    }
}

/// One propose / reflect / accept-or-reject transition at `state.temperature`.
///
/// Returns whether the proposal was accepted. Exactly one objective evaluation
/// is made.
pub fn step<F, R>(
    state: &mut AnnealState,
    f: &F,
    domain: &BoxDomain,
    mode: Mode,
    variance: f64,
    rng: &mut R,
) -> Result<bool>
where
    F: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let mut y = propose(&state.current, variance, rng);
    if mode == Mode::Reflected {
        domain.reflect_in_place(&mut y);
    }
    let value = f.evaluate(&y)?;
    let q = acceptance_probability(value - state.current_value, state.temperature)?;
    let u: f64 = rng.random();
    let accepted = u <= q;
    if accepted {
        state.current = y;
        state.current_value = value;
    }
    if state.current_value < state.best_value {
        state.best_value = state.current_value;
        state.best.clone_from(&state.current);
    }
    state.iteration += 1;
    Ok(accepted)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub temperature: f64,
    /// Chain position after the step.
    pub point: Vec<f64>,
    pub value: f64,
    pub accepted: bool,
    pub best_value: f64,
}

/// Per-step sample path of a chain. Record 0 is the starting point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First iteration whose incumbent is at or below `threshold`.
    pub fn iterations_to_within(&self, threshold: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.best_value <= threshold)
            .map(|r| r.iteration)
    }

    /// First iteration at which the final incumbent was reached.
    pub fn iterations_to_best(&self) -> u64 {
        let best = self.records.last().map_or(f64::NAN, |r| r.best_value);
        self.iterations_to_within(best).unwrap_or(0)
    }

    /// Largest Euclidean distance between a visited point and the domain.
    pub fn max_excursion(&self, domain: &BoxDomain) -> Result<f64> {
        self.records
            .iter()
            .map(|r| domain.distance_outside(&r.point))
            .try_fold(0.0, |acc: f64, d| d.map(|d| acc.max(d)))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let d = self.records.first().map_or(0, |r| r.point.len());
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["iter".to_string(), "temperature".to_string()];
        header.extend((1..=d).map(|j| format!("x{j}")));
        header.extend(["value", "accepted", "best_value"].map(String::from));
        writer.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.iteration.to_string(), r.temperature.to_string()];
            row.extend(r.point.iter().map(f64::to_string));
            row.push(r.value.to_string());
            row.push(u8::from(r.accepted).to_string());
            row.push(r.best_value.to_string());
            writer.write_record(&row)?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub trace: Trace,
}

/// Runs the full annealing schedule of `cfg` from a uniform start on `domain`.
pub fn run<F: Objective + ?Sized>(f: &F, domain: &BoxDomain, cfg: &AnnealConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    if f.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            actual: domain.dim(),
        });
    }
    let variance = cfg.variance_for(domain);
    let temperatures = cfg.temperatures();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = domain.sample_uniform(&mut rng);
    let mut state = AnnealState::new(f, start, cfg.t_max)?;
    let mut evaluations = 1;
    let mut records = Vec::with_capacity(1 + cfg.inner_iters * temperatures.len());
    records.push(state.record(true));

    for &t in &temperatures {
        state.temperature = t;
        for _ in 0..cfg.inner_iters {
            let accepted = step(&mut state, f, domain, cfg.mode, variance, &mut rng)?;
            evaluations += 1;
            records.push(state.record(accepted));
        }
    }

    Ok(RunOutcome {
        best: state.best,
        best_value: state.best_value,
        evaluations,
        trace: Trace { records },
    })
}

/// Tabulated Gibbs density `exp(-(F(y) - F_min) / T)` on a 1-d domain,
/// normalized by the trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub xs: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityTable {
    /// Probability mass of `bins` equal-width bins. `bins` must divide the
    /// number of grid intervals.
    pub fn bin_masses(&self, bins: usize) -> Result<Vec<f64>> {
        let intervals = self.xs.len() - 1;
        if bins == 0 || !intervals.is_multiple_of(bins) {
            return Err(Error::InvalidConfig(format!(
                "{bins} bins do not divide {intervals} grid intervals"
            )));
        }
        let per_bin = intervals / bins;
        Ok((0..bins)
            .map(|b| {
                (b * per_bin..(b + 1) * per_bin)
                    .map(|i| {
                        0.5 * (self.xs[i + 1] - self.xs[i]) * (self.density[i] + self.density[i + 1])
                    })
                    .sum()
            })
            .collect())
    }
}

pub fn gibbs_density<F: Objective + ?Sized>(
    f: &F,
    domain: &BoxDomain,
    temperature: f64,
    grid_n: usize,
) -> Result<DensityTable> {
    if domain.dim() != 1 || f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: domain.dim().max(f.dim()),
        });
    }
    if grid_n < 100 {
        return Err(Error::InvalidConfig(format!("grid_n must be at least 100, got {grid_n}")));
    }
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let (lo, hi) = domain.bounds()[0];
    let xs: Vec<f64> = (0..grid_n)
        .map(|k| if k + 1 == grid_n { hi } else { lo + (hi - lo) * k as f64 / (grid_n - 1) as f64 })
        .collect();
    let values = f.evaluate_batch(&xs)?;
    let f_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut density: Vec<f64> = values.iter().map(|v| (-(v - f_min) / temperature).exp()).collect();
    let norm: f64 = xs
        .windows(2)
        .zip(density.windows(2))
        .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
        .sum();
    density.iter_mut().for_each(|d| *d /= norm);
    Ok(DensityTable { xs, density })
}
