//! Relative threshold levels, duration grids and exact absolute thresholds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AvailabilitySeries, FIXED_POINT_BITS};

const BASIS_POINTS: u32 = 10_000;

/// A relative threshold level in basis points of the long-run mean.
///
/// Levels are kept as integers so that thresholds derived from them compare
/// exactly against integer window sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Tau(u16);

impl Tau {
    pub fn from_basis_points(bp: u32) -> Result<Self> {
        if bp == 0 || bp > BASIS_POINTS {
            return Err(Error::Parameter(format!(
                "relative threshold {} is outside (0, 1]",
                bp as f64 / BASIS_POINTS as f64
            )));
        }
        Ok(Tau(bp as u16))
    }

    /// Accepts fractions in (0, 1] that sit on a 0.0001 grid.
    pub fn from_fraction(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Parameter(format!(
                "relative threshold {tau} is outside (0, 1]"
            )));
        }
        let scaled = tau * BASIS_POINTS as f64;
        let bp = scaled.round();
        if (scaled - bp).abs() > 1e-6 {
            return Err(Error::Parameter(format!(
                "relative threshold {tau} is not a multiple of 0.0001"
            )));
        }
        Tau::from_basis_points(bp as u32)
    }

    pub fn basis_points(self) -> u32 {
        self.0 as u32
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / BASIS_POINTS as f64
    }
}

impl TryFrom<f64> for Tau {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Tau::from_fraction(value)
    }
}

impl From<Tau> for f64 {
    fn from(tau: Tau) -> f64 {
        tau.as_f64()
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

/// Ordered set of relative threshold levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdGrid {
    levels: Vec<Tau>,
}

impl ThresholdGrid {
    pub fn new(levels: Vec<Tau>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Parameter("threshold grid is empty".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(
                "threshold levels must be strictly increasing".into(),
            ));
        }
        Ok(ThresholdGrid { levels })
    }

    pub fn from_fractions(levels: &[f64]) -> Result<Self> {
        let taus = levels
            .iter()
            .map(|&t| Tau::from_fraction(t))
            .collect::<Result<Vec<_>>>()?;
        ThresholdGrid::new(taus)
    }

    /// Levels from `from_bp` to `to_bp` inclusive in steps of `step_bp`.
    pub fn stepped(from_bp: u32, to_bp: u32, step_bp: u32) -> Result<Self> {
        if step_bp == 0 || from_bp > to_bp {
            return Err(Error::Parameter("invalid threshold grid range".into()));
        }
        let levels = (from_bp..=to_bp)
            .step_by(step_bp as usize)
            .map(Tau::from_basis_points)
            .collect::<Result<Vec<_>>>()?;
        ThresholdGrid::new(levels)
    }

    pub fn levels(&self) -> &[Tau] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn contains(&self, tau: Tau) -> bool {
        self.levels.binary_search(&tau).is_ok()
    }
}

impl Default for ThresholdGrid {
    /// 0.10, 0.15, …, 1.00 (19 levels).
    fn default() -> Self {
        ThresholdGrid::stepped(1_000, 10_000, 500).expect("static grid")
    }
}

/// Strictly descending event durations, in hours, to search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurationGrid {
    durations: Vec<usize>,
    approximate: bool,
}

/// Two no-leap years.
pub const DEFAULT_MAX_DURATION: usize = 17_520;

impl DurationGrid {
    /// Every integer duration from `max` down to `min`.
    pub fn full(max: usize, min: usize) -> Result<Self> {
        Self::stepped(max, min, 1)
    }

    /// Durations `max, max - step, …` always ending with `min`. A step above
    /// one cannot guarantee maximal events and is flagged as approximate.
    pub fn stepped(max: usize, min: usize, step: usize) -> Result<Self> {
        if min == 0 || max < min || step == 0 {
            return Err(Error::Parameter(format!(
                "invalid duration grid: max {max}, min {min}, step {step}"
            )));
        }
        let mut durations: Vec<usize> = (min..=max).rev().step_by(step).collect();
        if *durations.last().unwrap() != min {
            durations.push(min);
        }
        Ok(DurationGrid {
            durations,
            approximate: step > 1,
        })
    }

    pub fn max(&self) -> usize {
        self.durations[0]
    }

    pub fn min(&self) -> usize {
        *self.durations.last().unwrap()
    }

    pub fn durations(&self) -> &[usize] {
        &self.durations
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    /// Drops durations longer than `n_hours`.
    pub fn clamped_to(&self, n_hours: usize) -> Result<Self> {
        let durations: Vec<usize> = self
            .durations
            .iter()
            .copied()
            .filter(|&d| d <= n_hours)
            .collect();
        if durations.is_empty() {
            return Err(Error::Parameter(format!(
                "no duration in the grid fits a {n_hours}-hour series"
            )));
        }
        Ok(DurationGrid {
            durations,
            approximate: self.approximate,
        })
    }
}

impl Default for DurationGrid {
    fn default() -> Self {
        DurationGrid::full(DEFAULT_MAX_DURATION, 1).expect("static grid")
    }
}

/// An absolute availability threshold held as an exact rational in
/// fixed-point units: a window of `d` hours with fixed-point sum `W`
/// qualifies iff `W · den < d · num`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    num: u128,
    den: u128,
    value: f64,
    relative: f64,
}

impl Threshold {
    /// `tau` times the long-run mean of `series`, exactly.
    pub fn relative(series: &AvailabilitySeries, tau: Tau) -> Self {
        let num = tau.basis_points() as u128 * series.total_fixed() as u128;
        let den = series.len() as u128 * BASIS_POINTS as u128;
        Threshold {
            num,
            den,
            value: absolute_threshold_unchecked(series, tau.as_f64()),
            relative: tau.as_f64(),
        }
    }

    /// An absolute level in availability units. The level is rounded to a
    /// 2^-60 grid.
    pub fn absolute(value: f64, long_run_mean: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite() && value < (1u64 << 40) as f64) {
            return Err(Error::Parameter(format!(
                "absolute threshold {value} must be finite and non-negative"
            )));
        }
        const EXTRA_BITS: u32 = 20;
        let num = (value * 2f64.powi((FIXED_POINT_BITS + EXTRA_BITS) as i32)).round() as u128;
        let relative = if long_run_mean > 0.0 {
            value / long_run_mean
        } else {
            0.0
        };
        Ok(Threshold {
            num,
            den: 1u128 << EXTRA_BITS,
            value,
            relative,
        })
    }

    /// The level in availability units.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// The level as a fraction of the series' long-run mean.
    pub fn relative_level(&self) -> f64 {
        self.relative
    }

    /// Exact test `window_sum / duration < threshold`.
    pub fn qualifies(&self, window_sum: u64, duration: usize) -> bool {
        window_sum as u128 * self.den < duration as u128 * self.num
    }

    /// Largest window sum that qualifies at `duration`, if any does.
    pub fn max_qualifying_sum(&self, duration: usize) -> Option<u64> {
        let limit = duration as u128 * self.num;
        if limit == 0 {
            return None;
        }
        Some(((limit - 1) / self.den).min(u64::MAX as u128) as u64)
    }
}

fn absolute_threshold_unchecked(series: &AvailabilitySeries, tau: f64) -> f64 {
    tau * series.long_run_mean()
}

/// `tau` times the series' long-run mean.
pub fn absolute_threshold(series: &AvailabilitySeries, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Parameter(format!(
            "relative threshold {tau} is outside (0, 1]"
        )));
    }
    Ok(absolute_threshold_unchecked(series, tau))
}
