//! Black-box objectives, the analytic benchmark surfaces, and the noisy
//! sample generator used to build training sets.

use std::f64::consts::{E, PI};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};

/// Anything that maps a point of `R^d` to a real number.
///
/// Implementations must be deterministic and safe to evaluate from several
/// threads at once.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    /// Evaluates a row-major block of points (`xs.len()` is a multiple of `dim`).
    fn evaluate_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.chunks(self.dim()).map(|x| self.evaluate(x)).collect()
    }

    fn name(&self) -> &str {
        "objective"
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        (**self).evaluate(x)
    }
    fn evaluate_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        (**self).evaluate_batch(xs)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        (**self).evaluate(x)
    }
    fn evaluate_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        (**self).evaluate_batch(xs)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.len(),
        });
    }
    Ok(())
}

pub fn ackley(p: &[f64]) -> Result<f64> {
    check_dim(2, p)?;
    let (x1, x2) = (p[0], p[1]);
    let radial = -20.0 * (-0.2 * (0.5 * (x1 * x1 + x2 * x2)).sqrt()).exp();
    let periodic = -(0.5 * ((2.0 * PI * x1).cos() + (2.0 * PI * x2).cos())).exp();
    Ok(radial + periodic + E + 20.0)
}

pub fn drop_wave(p: &[f64]) -> Result<f64> {
    check_dim(2, p)?;
    let r2 = p[0] * p[0] + p[1] * p[1];
    Ok(-(1.0 + (12.0 * r2.sqrt()).cos()) / (0.5 * r2 + 2.0))
}

/// `(x^2-1)^2 + (y^2-1)^2 + (z^2-1)^2`, zero at the eight corners `(+-1, +-1, +-1)`.
pub fn multi_minima(p: &[f64]) -> Result<f64> {
    check_dim(3, p)?;
    Ok(p.iter().map(|&v| (v * v - 1.0).powi(2)).sum())
}

/// The analytic test surfaces available by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Ackley,
    DropWave,
    MultiMinima,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Ackley, Builtin::DropWave, Builtin::MultiMinima];

    pub fn as_str(self) -> &'static str {
        match self {
            Builtin::Ackley => "ackley",
            Builtin::DropWave => "drop-wave",
            Builtin::MultiMinima => "multi-minima",
        }
    }

    pub fn available() -> String {
        Self::ALL.map(Builtin::as_str).join(", ")
    }

    /// The evaluation domain the benchmark is usually studied on.
    pub fn default_domain(self) -> BoxDomain {
        let (lo, hi, d) = match self {
            Builtin::Ackley => (-4.0, 4.0, 2),
            Builtin::DropWave => (-5.12, 5.12, 2),
            Builtin::MultiMinima => (-3.0, 3.0, 3),
        };
        BoxDomain::cube(lo, hi, d).expect("builtin domains are valid")
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ackley" => Ok(Builtin::Ackley),
            "drop-wave" | "dropwave" => Ok(Builtin::DropWave),
            "multi-minima" | "multiminima" | "multimin" => Ok(Builtin::MultiMinima),
            _ => Err(Error::UnknownObjective {
                name: s.to_string(),
                available: Builtin::available(),
            }),
        }
    }
}

impl Objective for Builtin {
    fn dim(&self) -> usize {
        match self {
            Builtin::Ackley | Builtin::DropWave => 2,
            Builtin::MultiMinima => 3,
        }
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        match self {
            Builtin::Ackley => ackley(x),
            Builtin::DropWave => drop_wave(x),
            Builtin::MultiMinima => multi_minima(x),
        }
    }

    fn name(&self) -> &str {
        self.as_str()
    }
}

/// `-F`, so that maximizing `F` becomes minimizing the wrapper.
#[derive(Debug, Clone, Copy)]
pub struct Negated<F>(pub F);

impl<F: Objective> Objective for Negated<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.0.evaluate(x).map(|v| -v)
    }

    fn evaluate_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let mut values = self.0.evaluate_batch(xs)?;
        values.iter_mut().for_each(|v| *v = -*v);
        Ok(values)
    }

    fn name(&self) -> &str {
        self.0.name()
    }
}

/// Adapts a plain closure.
pub struct FnObjective<F> {
    dim: usize,
    name: String,
    func: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(name: impl Into<String>, dim: usize, func: F) -> Self {
        Self {
            dim,
            name: name.into(),
            func,
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok((self.func)(x))
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: String,
    pub noise_sd: f64,
    pub seed: u64,
    pub m: usize,
    pub domain: BoxDomain,
}

/// Noisy samples `(x_i, f(x_i) + eps_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.meta.domain.dim()
    }

    /// The sidecar path that accompanies a CSV file.
    pub fn meta_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes `path` as CSV plus the metadata sidecar next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x{j}")).collect();
        header.push("target".into());
        writer.write_record(&header)?;
        for (x, t) in self.inputs.iter().zip(&self.targets) {
            writer.write_record(x.iter().chain(std::iter::once(t)).map(|v| v.to_string()))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
        let meta_path = Self::meta_path(path);
        let json = serde_json::to_string_pretty(&self.meta)?;
        fs::write(&meta_path, json + "\n").map_err(|e| Error::io(meta_path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let meta_path = Self::meta_path(path);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&meta_text)?;
        let d = meta.domain.dim();

        let mut reader = csv::Reader::from_path(path)?;
        let header = reader.headers()?.clone();
        if header.len() != d + 1 {
            return Err(Error::Dataset(format!(
                "header has {} columns, expected {} for a {d}-dimensional domain",
                header.len(),
                d + 1
            )));
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let values = record
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        Error::Dataset(format!("row {}: cannot parse `{s}`", row + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            targets.push(values[d]);
            inputs.push(values[..d].to_vec());
        }
        if targets.is_empty() {
            return Err(Error::Dataset("no rows".into()));
        }
        Ok(Self {
            inputs,
            targets,
            meta,
        })
    }
}

/// Draws `m` inputs uniformly on `domain` and labels them with `f` plus
/// Gaussian noise of standard deviation `noise_sd`.
pub fn sample_dataset<F: Objective + ?Sized>(
    f: &F,
    domain: &BoxDomain,
    m: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InvalidConfig("dataset size m must be at least 1".into()));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise_sd must be finite and non-negative, got {noise_sd}"
        )));
    }
    check_dim(f.dim(), &vec![0.0; domain.dim()])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(m);
    let mut targets = Vec::with_capacity(m);
    for _ in 0..m {
        let x = domain.sample_uniform(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        targets.push(f.evaluate(&x)? + noise_sd * z);
        inputs.push(x);
    }
    Ok(Dataset {
        inputs,
        targets,
        meta: DatasetMeta {
            source: f.name().to_string(),
            noise_sd,
            seed,
            m,
            domain: domain.clone(),
        },
    })
}
