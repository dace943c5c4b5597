//! Output range estimation: paired minimization of `F` and `-F`, and the
//! exhaustive grid oracle used to check it.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{self, AnnealConfig, RunOutcome};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::objectives::{Negated, Objective};

/// Largest grid the oracle agrees to evaluate.
pub const GRID_BUDGET: u128 = 100_000_000;
const GRID_CHUNK: usize = 8192;

/// `[f_min, f_max]` with witnesses. The interval is the hull of values actually
/// observed, so it is contained in the true range rather than enclosing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeResult {
    pub f_min: f64,
    pub f_max: f64,
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub interval_type: String,
    pub eval_count: usize,
    pub seeds_used: Vec<u64>,
    pub config: AnnealConfig,
}

impl RangeResult {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Min => "min",
            Direction::Max => "max",
        }
    }
}

/// One annealing chain of a range estimate. For `Direction::Max` the trace
/// holds values of `-F`.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub seed: u64,
    pub direction: Direction,
    pub outcome: RunOutcome,
}

pub fn seeds_for(cfg: &AnnealConfig, n_seeds: usize) -> Vec<u64> {
    (0..n_seeds as u64).map(|k| cfg.seed.wrapping_add(k)).collect()
}

pub fn estimate_range<F: Objective + ?Sized>(
    f: &F,
    domain: &BoxDomain,
    cfg: &AnnealConfig,
    n_seeds: usize,
) -> Result<RangeResult> {
    estimate_range_with_chains(f, domain, cfg, n_seeds).map(|(r, _)| r)
}

/// Runs `n_seeds` minimizations of `F` and of `-F` (seeds `cfg.seed`,
/// `cfg.seed + 1`, ...; both directions share each seed) and keeps the best
/// witnesses.
pub fn estimate_range_with_chains<F: Objective + ?Sized>(
    f: &F,
    domain: &BoxDomain,
    cfg: &AnnealConfig,
    n_seeds: usize,
) -> Result<(RangeResult, Vec<ChainReport>)> {
    if n_seeds == 0 {
        return Err(Error::InvalidConfig("n_seeds must be at least 1".into()));
    }
    cfg.validate()?;
    if f.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            actual: domain.dim(),
        });
    }
    let seeds = seeds_for(cfg, n_seeds);
    let jobs: Vec<(u64, Direction)> = seeds
        .iter()
        .flat_map(|&s| [(s, Direction::Min), (s, Direction::Max)])
        .collect();
    let negated = Negated(f);
    let chains = jobs
        .par_iter()
        .map(|&(seed, direction)| {
            let run_cfg = AnnealConfig {
                seed,
                ..cfg.clone()
            };
            let outcome = match direction {
                Direction::Min => anneal::run(f, domain, &run_cfg)?,
                Direction::Max => anneal::run(&negated, domain, &run_cfg)?,
            };
            Ok(ChainReport {
                seed,
                direction,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Incumbents first, then every other point the opposite chains visited.
    let mut lowest: Option<(f64, &[f64])> = None;
    let mut highest: Option<(f64, &[f64])> = None;
    let less = |a: f64, b: f64| a < b;
    let greater = |a: f64, b: f64| a > b;
    for chain in &chains {
        match chain.direction {
            Direction::Min => offer(&mut lowest, chain.outcome.best_value, &chain.outcome.best, less),
            Direction::Max => offer(&mut highest, -chain.outcome.best_value, &chain.outcome.best, greater),
        }
    }
    for chain in &chains {
        for r in &chain.outcome.trace.records {
            match chain.direction {
                Direction::Min => offer(&mut highest, r.value, &r.point, greater),
                Direction::Max => offer(&mut lowest, -r.value, &r.point, less),
            }
        }
    }
    let (_, x_min) = lowest.expect("at least one chain");
    let (_, x_max) = highest.expect("at least one chain");
    let (x_min, x_max) = (x_min.to_vec(), x_max.to_vec());

    let f_min = f.evaluate(&x_min)?;
    let f_max = f.evaluate(&x_max)?;
    let eval_count = chains.iter().map(|c| c.outcome.evaluations).sum::<usize>() + 2;
    let result = RangeResult {
        f_min,
        f_max,
        x_min,
        x_max,
        interval_type: "inner".into(),
        eval_count,
        seeds_used: seeds,
        config: cfg.clone(),
    };
    Ok((result, chains))
}

fn offer<'a>(
    slot: &mut Option<(f64, &'a [f64])>,
    value: f64,
    point: &'a [f64],
    better: impl Fn(f64, f64) -> bool,
) {
    if slot.is_none_or(|(v, _)| better(value, v)) {
        *slot = Some((value, point));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub min_value: f64,
    pub min_point: Vec<f64>,
    pub max_value: f64,
    pub max_point: Vec<f64>,
    pub points_per_dim: usize,
    pub evaluations: u64,
}

/// Coordinates `lo + (hi - lo) k / (n - 1)`, `k = 0..n`, with both ends exact.
pub fn grid_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + ((hi - lo) * k as f64) / last })
        .collect()
}

/// Exhaustive evaluation on the uniform tensor grid with `points_per_dim`
/// points per side (both endpoints included). Ties keep the first point in
/// row-major order.
pub fn grid_oracle<F: Objective + ?Sized>(
    f: &F,
    domain: &BoxDomain,
    points_per_dim: usize,
) -> Result<OracleResult> {
    if points_per_dim < 2 {
        return Err(Error::InvalidConfig(format!(
            "points_per_dim must be at least 2, got {points_per_dim}"
        )));
    }
    let d = domain.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            actual: d,
        });
    }
    let total = (points_per_dim as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > GRID_BUDGET {
        return Err(Error::GridBudget {
            requested: total,
            budget: GRID_BUDGET,
        });
    }
    let total = total as u64;
    let axes: Vec<Vec<f64>> = domain
        .bounds()
        .iter()
        .map(|&(lo, hi)| grid_axis(lo, hi, points_per_dim))
        .collect();
    let point_at = |mut index: u64, out: &mut [f64]| {
        for j in (0..d).rev() {
            let k = (index % points_per_dim as u64) as usize;
            index /= points_per_dim as u64;
            out[j] = axes[j][k];
        }
    };

    let mut best = (f64::INFINITY, 0u64);
    let mut worst = (f64::NEG_INFINITY, 0u64);
    let mut buf = vec![0.0; GRID_CHUNK * d];
    let mut start = 0u64;
    while start < total {
        let count = ((total - start) as usize).min(GRID_CHUNK);
        for (i, point) in buf[..count * d].chunks_mut(d).enumerate() {
            point_at(start + i as u64, point);
        }
        let values = f.evaluate_batch(&buf[..count * d])?;
        for (i, &v) in values.iter().enumerate() {
            let idx = start + i as u64;
            if v < best.0 {
                best = (v, idx);
            }
            if v > worst.0 {
                worst = (v, idx);
            }
        }
        start += count as u64;
    }
    let mut min_point = vec![0.0; d];
    let mut max_point = vec![0.0; d];
    point_at(best.1, &mut min_point);
    point_at(worst.1, &mut max_point);
    Ok(OracleResult {
        min_value: best.0,
        min_point,
        max_value: worst.0,
        max_point,
        points_per_dim,
        evaluations: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Builtin, FnObjective};

    fn quick() -> AnnealConfig {
        AnnealConfig {
            inner_iters: 40,
            ..AnnealConfig::default()
        }
    }

    #[test]
    fn constant_function_has_degenerate_range() {
        let domain = BoxDomain::cube(-2.0, 3.0, 2).unwrap();
        let f = FnObjective::new("c", 2, |_| -1.5);
        let r = estimate_range(&f, &domain, &quick(), 2).unwrap();
        assert_eq!((r.f_min, r.f_max), (-1.5, -1.5));
        assert_eq!(r.interval_type, "inner");
        assert_eq!(r.seeds_used, vec![0, 1]);
        assert_eq!(r.eval_count, 4 * quick().evaluation_budget() + 2);
    }

    #[test]
    fn linear_function_hits_faces() {
        let domain = BoxDomain::cube(0.0, 1.0, 2).unwrap();
        let f = FnObjective::new("x1", 2, |x| x[0]);
        let r = estimate_range(&f, &domain, &quick(), 3).unwrap();
        assert!(r.f_min.abs() < 1e-2, "{}", r.f_min);
        assert!((r.f_max - 1.0).abs() < 1e-2, "{}", r.f_max);
        assert_eq!(f.evaluate(&r.x_min).unwrap(), r.f_min);
        assert_eq!(f.evaluate(&r.x_max).unwrap(), r.f_max);
        assert!(domain.contains(&r.x_min).unwrap() && domain.contains(&r.x_max).unwrap());
    }

    #[test]
    fn negation_duality_is_exact() {
        let domain = BoxDomain::cube(-4.0, 4.0, 2).unwrap();
        let cfg = AnnealConfig {
            seed: 5,
            ..quick()
        };
        let a = estimate_range(&Builtin::Ackley, &domain, &cfg, 3).unwrap();
        let b = estimate_range(&Negated(Builtin::Ackley), &domain, &cfg, 3).unwrap();
        assert_eq!(a.f_min, -b.f_max);
        assert_eq!(a.f_max, -b.f_min);
        assert!(a.f_min <= a.f_max);
    }

    #[test]
    fn rejects_bad_inputs() {
        let domain = BoxDomain::cube(-4.0, 4.0, 3).unwrap();
        assert!(estimate_range(&Builtin::Ackley, &domain, &quick(), 1).is_err());
        let d2 = BoxDomain::cube(-4.0, 4.0, 2).unwrap();
        assert!(estimate_range(&Builtin::Ackley, &d2, &quick(), 0).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let domain = BoxDomain::cube(0.0, 1.0, 1).unwrap();
        let f = FnObjective::new("x", 1, |x| x[0]);
        let r = grid_oracle(&f, &domain, 2).unwrap();
        assert_eq!((r.min_value, r.max_value), (0.0, 1.0));
        assert_eq!((r.min_point.clone(), r.max_point.clone()), (vec![0.0], vec![1.0]));
        assert!(grid_oracle(&f, &domain, 1).is_err());
    }

    #[test]
    fn grid_contains_known_minima() {
        let axis = grid_axis(-3.0, 3.0, 61);
        assert!(axis.contains(&1.0) && axis.contains(&-1.0) && axis.contains(&0.0));
        assert_eq!(grid_axis(-4.0, 4.0, 801)[400], 0.0);
    }

    #[test]
    fn grid_budget_guard() {
        let domain = BoxDomain::cube(0.0, 1.0, 3).unwrap();
        let f = FnObjective::new("s", 3, |x| x.iter().sum());
        match grid_oracle(&f, &domain, 1000) {
            Err(e @ Error::GridBudget { .. }) => {
                assert!(e.to_string().contains("fewer points"));
                assert!(e.is_usage());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_matches_naive_loop() {
        let domain = BoxDomain::new(vec![(-1.0, 2.0), (0.5, 1.5)]).unwrap();
        let f = FnObjective::new("wavy", 2, |x| (3.0 * x[0]).sin() * x[1] - 0.2 * x[0] * x[0]);
        let r = grid_oracle(&f, &domain, 37).unwrap();
        let (xs, ys) = (grid_axis(-1.0, 2.0, 37), grid_axis(0.5, 1.5, 37));
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &xs {
            for &y in &ys {
                let v = f.evaluate(&[x, y]).unwrap();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        assert_eq!((r.min_value, r.max_value), (lo, hi));
        assert_eq!(f.evaluate(&r.min_point).unwrap(), lo);
        assert_eq!(r.evaluations, 37 * 37);
    }
}
