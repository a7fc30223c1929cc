//! Named densities used by the command line and the test suites.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{Grid, TorusField};

pub const DEFAULT_A: f64 = 0.5;
pub const DEFAULT_B: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "zero")]
    Zero,
    /// `a cos(2πx)`
    #[serde(rename = "oneD")]
    OneD,
    /// `a cos(2πx) cos(2πy)`
    #[serde(rename = "checker")]
    Checker,
    /// `a cos(2π(x + y)) + b sin(2πy)`
    #[serde(rename = "skew")]
    Skew,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Zero, Preset::OneD, Preset::Checker, Preset::Skew];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Zero => "zero",
            Preset::OneD => "oneD",
            Preset::Checker => "checker",
            Preset::Skew => "skew",
        }
    }

    /// Fourier terms `(k, l, cos amplitude, sin amplitude)` of the density.
    pub fn fourier_terms(self, a: f64, b: f64) -> Vec<(i64, i64, f64, f64)> {
        match self {
            Preset::Zero => vec![],
            Preset::OneD => vec![(1, 0, a, 0.0)],
            // cos x cos y = (cos(x + y) + cos(x - y)) / 2
            Preset::Checker => vec![(1, 1, a / 2.0, 0.0), (1, -1, a / 2.0, 0.0)],
            Preset::Skew => vec![(1, 1, a, 0.0), (0, 1, 0.0, b)],
        }
    }

    pub fn field(self, grid: &Grid, a: f64, b: f64) -> TorusField {
        fourier_field(grid, &self.fourier_terms(a, b))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {s:?} (expected zero, oneD, checker or skew)")))
    }
}

/// `Σ c cos(2π(kx + ly)) + s sin(2π(kx + ly))` sampled on `grid`.
pub fn fourier_field(grid: &Grid, terms: &[(i64, i64, f64, f64)]) -> TorusField {
    TorusField::from_fn(grid, |x, y| {
        terms
            .iter()
            .map(|&(k, l, c, s)| {
                let arg = 2.0 * PI * (k as f64 * x + l as f64 * y);
                c * arg.cos() + s * arg.sin()
            })
            .sum()
    })
}
