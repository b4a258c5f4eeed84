use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` on the line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn checked(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidSpec(format!(
                "window [{lo}, {hi}] must be bounded with lo < hi"
            )))
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `n` equal-width half-open cells `[a, b)` covering the interval.
    pub fn cells(&self, n: usize) -> Vec<Interval> {
        let h = self.length() / n as f64;
        (0..n)
            .map(|i| {
                let lo = self.lo + h * i as f64;
                let hi = if i + 1 == n { self.hi } else { lo + h };
                Interval::new(lo, hi)
            })
            .collect()
    }
}

/// Axis-aligned box in `R^d`; a `d = 1` box is an interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidSpec(
                "box corners must have the same positive dimension".into(),
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !a.is_finite() || !b.is_finite() || a > b)
        {
            return Err(Error::InvalidSpec("box corners must satisfy lo <= hi".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    /// The real line, with `±f64::MAX` standing in for the infinite ends.
    pub fn whole_line() -> Self {
        Self {
            lo: vec![-f64::MAX],
            hi: vec![f64::MAX],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a <= x && x <= b)
    }

    pub fn as_interval(&self) -> Option<Interval> {
        (self.dim() == 1).then(|| Interval::new(self.lo[0], self.hi[0]))
    }
}

impl From<Interval> for Region {
    fn from(i: Interval) -> Self {
        Self {
            lo: vec![i.lo],
            hi: vec![i.hi],
        }
    }
}
