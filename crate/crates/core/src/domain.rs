//! Hypercube feasible sets and the cyclic reflection that folds arbitrary
//! points back into them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed axis-aligned box `[l_1, u_1] x ... x [l_d, u_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct BoxDomain {
    bounds: Vec<(f64, f64)>,
}

impl BoxDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidDomain("at least one dimension required".into()));
        }
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "dimension {j}: bounds must be finite, got [{lo}, {hi}]"
                )));
            }
            if lo >= hi {
                return Err(Error::InvalidDomain(format!(
                    "dimension {j}: lower bound {lo} must be strictly below upper bound {hi}"
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// The same interval repeated in every dimension.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    /// Parses `l1,u1,l2,u2,...`.
    pub fn parse_flat(text: &str) -> Result<Self> {
        let values = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidDomain(format!("cannot parse `{s}` as a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() % 2 != 0 {
            return Err(Error::InvalidDomain(format!(
                "expected an even number of values (low,high pairs), got {}",
                values.len()
            )));
        }
        Self::new(values.chunks(2).map(|c| (c[0], c[1])).collect())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.bounds.iter().map(|(lo, hi)| hi - lo)
    }

    pub fn min_width(&self) -> f64 {
        self.widths().fold(f64::INFINITY, f64::min)
    }

    pub fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: p.len(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        self.check_dim(p)?;
        Ok(self.contains_unchecked(p))
    }

    pub(crate) fn contains_unchecked(&self, p: &[f64]) -> bool {
        self.bounds
            .iter()
            .zip(p)
            .all(|(&(lo, hi), &x)| lo <= x && x <= hi)
    }

    /// Cyclic reflection into the box, applied component-wise.
    pub fn reflect(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        Ok(self
            .bounds
            .iter()
            .zip(y)
            .map(|(&(lo, hi), &v)| reflect_scalar(v, lo, hi))
            .collect())
    }

    /// In-place variant used on the hot path of the annealer.
    pub(crate) fn reflect_in_place(&self, y: &mut [f64]) {
        for (v, &(lo, hi)) in y.iter_mut().zip(&self.bounds) {
            *v = reflect_scalar(*v, lo, hi);
        }
    }

    /// Euclidean distance from `p` to the box; zero iff `p` is inside.
    pub fn distance_outside(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        Ok(self
            .bounds
            .iter()
            .zip(p)
            .map(|(&(lo, hi), &x)| {
                let gap = if x < lo {
                    lo - x
                } else if x > hi {
                    x - hi
                } else {
                    0.0
                };
                gap * gap
            })
            .sum::<f64>()
            .sqrt())
    }

    /// Draws a point uniformly from the box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                let u: f64 = rng.random();
                (lo + (hi - lo) * u).min(hi)
            })
            .collect()
    }
}

impl TryFrom<Vec<[f64; 2]>> for BoxDomain {
    type Error = Error;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|[lo, hi]| (lo, hi)).collect())
    }
}

impl From<BoxDomain> for Vec<[f64; 2]> {
    fn from(domain: BoxDomain) -> Self {
        domain.bounds.into_iter().map(|(lo, hi)| [lo, hi]).collect()
    }
}

/// Folds `y` into `[lo, hi]` with the triangle wave of period `2 (hi - lo)`.
///
/// Offsets exactly at `hi - lo` (mod the period) map to `hi`.
pub fn reflect_scalar(y: f64, lo: f64, hi: f64) -> f64 {
    if lo <= y && y <= hi {
        return y;
    }
    let width = hi - lo;
    let offset = (y - lo).rem_euclid(2.0 * width);
    let folded = if offset <= width {
        lo + offset
    } else {
        hi - (offset - width)
    };
    folded.clamp(lo, hi)
}
