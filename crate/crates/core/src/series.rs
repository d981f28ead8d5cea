//! Canonical data model: the no-leap hourly time axis, availability series
//! and installed-capacity tables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;
pub const HOURS_PER_YEAR: usize = 8760;

/// Technology label used for capacity-weighted regional portfolios.
pub const PORTFOLIO: &str = "portfolio";
/// Region label used for the pan-European copperplate composite.
pub const COPPERPLATE: &str = "CP";

/// Fractional bits of the fixed-point grid availability factors are snapped to.
///
/// Window sums over the fixed-point values are exact integers, so detection
/// results never depend on floating-point summation order.
pub const FIXED_POINT_BITS: u32 = 40;
const FIXED_SCALE: f64 = (1u64 << FIXED_POINT_BITS) as f64;

/// Longest supported series (keeps full-record sums inside `u64`).
pub const MAX_HOURS: usize = 1 << 23;

const MONTH_DAYS: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// Converts an availability factor to its fixed-point representation.
pub fn to_fixed(value: f64) -> u64 {
    (value * FIXED_SCALE).round() as u64
}

/// Converts a fixed-point quantity back to availability units.
pub fn from_fixed(fixed: u64) -> f64 {
    fixed as f64 / FIXED_SCALE
}

/// Hourly axis under a 365-day calendar. Hour 0 is 1 January 00:00 of
/// `start_year`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeAxis {
    start_year: i32,
    n_hours: usize,
}

impl TimeAxis {
    pub fn new(start_year: i32, n_hours: usize) -> Result<Self> {
        if n_hours == 0 || !n_hours.is_multiple_of(HOURS_PER_YEAR) {
            return Err(Error::Axis(format!(
                "{n_hours} hours is not a positive multiple of {HOURS_PER_YEAR}"
            )));
        }
        if n_hours > MAX_HOURS {
            return Err(Error::Axis(format!(
                "{n_hours} hours exceeds the supported maximum of {MAX_HOURS}"
            )));
        }
        Ok(TimeAxis {
            start_year,
            n_hours,
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn n_hours(&self) -> usize {
        self.n_hours
    }

    pub fn hours_per_year(&self) -> usize {
        HOURS_PER_YEAR
    }

    pub fn n_years(&self) -> usize {
        self.n_hours / HOURS_PER_YEAR
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.n_years() as i32 - 1
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start_year..=self.end_year()
    }

    pub fn year_of(&self, hour: usize) -> i32 {
        self.start_year + (hour / HOURS_PER_YEAR) as i32
    }

    pub fn hour_of_year(&self, hour: usize) -> usize {
        hour % HOURS_PER_YEAR
    }

    /// Calendar month (1 = January) containing `hour`.
    pub fn month_of(&self, hour: usize) -> u32 {
        let mut day = self.hour_of_year(hour) / HOURS_PER_DAY;
        for (i, &len) in MONTH_DAYS.iter().enumerate() {
            if day < len {
                return i as u32 + 1;
            }
            day -= len;
        }
        unreachable!("hour of year is always below 8760")
    }

    /// Inverse of ([`year_of`](Self::year_of), [`hour_of_year`](Self::hour_of_year)).
    pub fn hour_index(&self, year: i32, hour_of_year: usize) -> Option<usize> {
        if year < self.start_year || year > self.end_year() || hour_of_year >= HOURS_PER_YEAR {
            return None;
        }
        Some((year - self.start_year) as usize * HOURS_PER_YEAR + hour_of_year)
    }

    /// First hour of `year` on this axis.
    pub fn year_start(&self, year: i32) -> Option<usize> {
        self.hour_index(year, 0)
    }
}

/// Identifies a series by region and technology. Composites use
/// [`PORTFOLIO`] as technology and/or [`COPPERPLATE`] as region.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub region: String,
    pub technology: String,
}

impl SeriesKey {
    pub fn new(region: impl Into<String>, technology: impl Into<String>) -> Self {
        SeriesKey {
            region: region.into(),
            technology: technology.into(),
        }
    }

    /// Parses the `region:technology` form produced by `Display`.
    pub fn parse(text: &str) -> Result<Self> {
        match text.split_once(':') {
            Some((region, technology)) if !region.is_empty() && !technology.is_empty() => {
                Ok(SeriesKey::new(region, technology))
            }
            _ => Err(Error::Schema(format!(
                "series key {text:?} is not of the form region:technology"
            ))),
        }
    }

    /// A filesystem-friendly rendering, `region_technology`.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.region, self.technology)
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.region, self.technology)
    }
}

/// Hourly availability factors for one region-technology or composite.
///
/// Values are snapped to a 2^-40 fixed-point grid on construction; the
/// snapped values are exactly representable as `f64` so they survive text
/// round trips unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilitySeries {
    key: SeriesKey,
    axis: TimeAxis,
    values: Vec<f64>,
    fixed: Vec<u64>,
    total_fixed: u64,
    long_run_mean: f64,
}

impl AvailabilitySeries {
    pub fn new(key: SeriesKey, axis: TimeAxis, values: Vec<f64>) -> Result<Self> {
        if values.len() != axis.n_hours() {
            return Err(Error::Axis(format!(
                "series {key} has {} values but its axis spans {} hours",
                values.len(),
                axis.n_hours()
            )));
        }
        Self::from_values(key, axis, values)
    }

    /// Builds a series whose length need not be a whole number of years.
    ///
    /// Calendar-based statistics still use `start_year` but treat the
    /// trailing partial year as truncated.
    pub fn unaligned(key: SeriesKey, start_year: i32, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter(format!("series {key} is empty")));
        }
        if values.len() > MAX_HOURS {
            return Err(Error::Axis(format!("{} hours is too long", values.len())));
        }
        let axis = TimeAxis {
            start_year,
            n_hours: values.len(),
        };
        Self::from_values(key, axis, values)
    }

    fn from_values(key: SeriesKey, axis: TimeAxis, mut values: Vec<f64>) -> Result<Self> {
        let mut fixed = Vec::with_capacity(values.len());
        for (i, v) in values.iter_mut().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::Parameter(format!(
                    "series {key}: value {v} at hour {i} is outside [0, 1]"
                )));
            }
            let q = to_fixed(*v);
            *v = from_fixed(q);
            fixed.push(q);
        }
        let total_fixed: u64 = fixed.iter().sum();
        let long_run_mean = from_fixed(total_fixed) / values.len() as f64;
        Ok(AvailabilitySeries {
            key,
            axis,
            values,
            fixed,
            total_fixed,
            long_run_mean,
        })
    }

    pub fn key(&self) -> &SeriesKey {
        &self.key
    }

    pub fn with_key(mut self, key: SeriesKey) -> Self {
        self.key = key;
        self
    }

    pub fn axis(&self) -> &TimeAxis {
        &self.axis
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values on the fixed-point grid (units of 2^-40).
    pub fn fixed(&self) -> &[u64] {
        &self.fixed
    }

    /// Sum of all fixed-point values.
    pub fn total_fixed(&self) -> u64 {
        self.total_fixed
    }

    pub fn long_run_mean(&self) -> f64 {
        self.long_run_mean
    }
}

/// Installed capacity in MW per (region, technology).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CapacityTable {
    entries: BTreeMap<SeriesKey, f64>,
}

impl CapacityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: SeriesKey, capacity_mw: f64) -> Result<()> {
        if !(capacity_mw >= 0.0 && capacity_mw.is_finite()) {
            return Err(Error::Parameter(format!(
                "capacity {capacity_mw} MW for {key} must be a finite non-negative number"
            )));
        }
        self.entries.insert(key, capacity_mw);
        Ok(())
    }

    pub fn get(&self, key: &SeriesKey) -> Option<f64> {
        self.entries.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SeriesKey, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns a copy with every capacity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = CapacityTable::new();
        for (key, cap) in self.iter() {
            out.insert(key.clone(), cap * factor)?;
        }
        Ok(out)
    }
}

impl<K: Into<String>, T: Into<String>> FromIterator<(K, T, f64)> for CapacityTable {
    /// Panics on a negative capacity; use [`CapacityTable::insert`] for
    /// untrusted input.
    fn from_iter<I: IntoIterator<Item = (K, T, f64)>>(iter: I) -> Self {
        let mut table = CapacityTable::new();
        for (region, technology, cap) in iter {
            table
                .insert(SeriesKey::new(region, technology), cap)
                .expect("valid capacity");
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_rejects_partial_years() {
        assert!(TimeAxis::new(1982, 0).is_err());
        assert!(TimeAxis::new(1982, 8761).is_err());
        assert_eq!(TimeAxis::new(1982, 17520).unwrap().n_years(), 2);
    }

    #[test]
    fn month_boundaries() {
        let axis = TimeAxis::new(2000, HOURS_PER_YEAR).unwrap();
        assert_eq!(axis.month_of(0), 1);
        assert_eq!(axis.month_of(31 * 24 - 1), 1);
        assert_eq!(axis.month_of(31 * 24), 2);
        assert_eq!(axis.month_of(59 * 24), 3);
        assert_eq!(axis.month_of(HOURS_PER_YEAR - 1), 12);
    }

    #[test]
    fn hour_mapping_is_bijective() {
        let axis = TimeAxis::new(1982, 3 * HOURS_PER_YEAR).unwrap();
        for h in 0..axis.n_hours() {
            let back = axis.hour_index(axis.year_of(h), axis.hour_of_year(h));
            assert_eq!(back, Some(h));
        }
        assert_eq!(axis.hour_index(1985, 0), None);
    }

    #[test]
    fn series_mean_and_bounds() {
        let axis = TimeAxis::new(1990, HOURS_PER_YEAR).unwrap();
        let mut values = vec![0.25; HOURS_PER_YEAR];
        values[0] = 0.75;
        let s = AvailabilitySeries::new(SeriesKey::new("DE", "pv"), axis, values.clone()).unwrap();
        let expected = values.iter().sum::<f64>() / values.len() as f64;
        assert!((s.long_run_mean() - expected).abs() < 1e-12);

        values[5] = 1.3;
        assert!(AvailabilitySeries::new(SeriesKey::new("DE", "pv"), axis, values).is_err());
    }

    #[test]
    fn snapped_values_are_stable() {
        let s = AvailabilitySeries::unaligned(SeriesKey::new("X", "pv"), 2000, vec![0.1, 0.2, 1.0 / 3.0])
            .unwrap();
        let again =
            AvailabilitySeries::unaligned(SeriesKey::new("X", "pv"), 2000, s.values().to_vec()).unwrap();
        assert_eq!(s.fixed(), again.fixed());
        assert_eq!(s.values(), again.values());
    }

    #[test]
    fn key_round_trip() {
        let key = SeriesKey::new("DE", "onshore");
        assert_eq!(SeriesKey::parse(&key.to_string()).unwrap(), key);
        assert!(SeriesKey::parse("DE").is_err());
    }

    #[test]
    fn negative_capacity_rejected() {
        let mut table = CapacityTable::new();
        assert!(table.insert(SeriesKey::new("DE", "pv"), -5.0).is_err());
        assert!(table.insert(SeriesKey::new("DE", "pv"), 5.0).is_ok());
    }
}
