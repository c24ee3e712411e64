use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `points` values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, points: usize, log: bool) -> Result<Self> {
        let g = Self {
            start,
            stop,
            points,
            log,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidArgument("grid needs at least one point".into()));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start > self.stop {
            return Err(Error::InvalidArgument(format!(
                "grid bounds must satisfy start <= stop, got {}:{}",
                self.start, self.stop
            )));
        }
        if self.points == 1 && self.start != self.stop {
            return Err(Error::InvalidArgument("a one-point grid needs start == stop".into()));
        }
        if self.log && self.start <= 0.0 {
            return Err(Error::InvalidArgument("log grids need positive bounds".into()));
        }
        Ok(())
    }

    /// Grid values, increasing. Endpoints are reproduced exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == 0 {
                    self.start
                } else if i == n - 1 {
                    self.stop
                } else if self.log {
                    let (a, b) = (self.start.log10(), self.stop.log10());
                    10f64.powf(a + (b - a) * i as f64 / last)
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last
                }
            })
            .collect()
    }

    /// Grid values rounded to integers, deduplicated.
    pub fn integer_values(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.values().iter().map(|x| x.round().max(1.0) as u64).collect();
        v.dedup();
        v
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `start:stop:points`, log-spaced; `start:stop:points:lin` for linear.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidArgument(format!("grid '{s}' is not start:stop:points[:log|lin]"));
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let log = match parts.get(3).map(|p| p.trim()) {
            None | Some("log") => true,
            Some("lin") | Some("linear") => false,
            Some(_) => return Err(bad()),
        };
        Self::new(start, stop, points, log)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.start, self.stop, self.points, if self.log { "log" } else { "lin" })
    }
}
