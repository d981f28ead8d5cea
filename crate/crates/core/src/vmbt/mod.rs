//! Variable-duration mean-below-threshold (VMBT) drought detection.
//!
//! For each duration in a descending grid, every window of that length that
//! does not touch an already claimed hour is tested left to right. A window
//! whose mean lies strictly below the threshold is claimed as an event and
//! its hours are excluded from every later test, including the rest of the
//! current pass. Shorter remnants next to an event are picked up by later,
//! shorter passes.
//!
//! Window means are compared as exact integer inequalities on fixed-point
//! sums (see [`Threshold`]), so results do not depend on summation order.

mod grid;
pub mod oracle;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{from_fixed, AvailabilitySeries, SeriesKey};

pub use grid::{
    absolute_threshold, DurationGrid, Tau, Threshold, ThresholdGrid, DEFAULT_MAX_DURATION,
};
pub use oracle::oracle_detect;

/// One detected drought.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroughtEvent {
    pub start: usize,
    pub duration: usize,
    pub threshold_rel: f64,
    pub threshold_abs: f64,
    pub mean_availability: f64,
}

impl DroughtEvent {
    /// Last hour of the event (inclusive).
    pub fn end(&self) -> usize {
        self.start + self.duration - 1
    }

    /// Hour at the temporal midpoint, `start + floor(duration / 2)`.
    pub fn median_hour(&self) -> usize {
        self.start + self.duration / 2
    }

    pub fn overlaps(&self, other: &DroughtEvent) -> bool {
        self.start <= other.end() && other.start <= self.end()
    }

    pub(crate) fn from_window(
        start: usize,
        duration: usize,
        window_sum: u64,
        threshold: &Threshold,
    ) -> Self {
        let mut mean = from_fixed(window_sum) / duration as f64;
        // The exact mean is below the threshold; keep the rounded report so.
        if mean >= threshold.value() {
            mean = threshold.value().next_down().max(0.0);
        }
        DroughtEvent {
            start,
            duration,
            threshold_rel: threshold.relative_level(),
            threshold_abs: threshold.value(),
            mean_availability: mean,
        }
    }
}

/// All events found for one series at one threshold, sorted by start hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCatalog {
    pub key: SeriesKey,
    pub threshold_rel: f64,
    pub threshold_abs: f64,
    /// Set when a coarse duration grid was used.
    pub approximate: bool,
    pub events: Vec<DroughtEvent>,
}

impl EventCatalog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Total number of hours covered by events.
    pub fn drought_hours(&self) -> usize {
        self.events.iter().map(|e| e.duration).sum()
    }

    pub fn max_duration(&self) -> usize {
        self.events.iter().map(|e| e.duration).max().unwrap_or(0)
    }
}

/// Catalogs per relative threshold level.
pub type SweepResult = BTreeMap<Tau, EventCatalog>;

/// Runs of hours still available for claiming, as half-open ranges.
struct FreeSegments {
    segments: Vec<(usize, usize)>,
    scratch: Vec<(usize, usize)>,
}

impl FreeSegments {
    fn new(n: usize) -> Self {
        FreeSegments {
            segments: vec![(0, n)],
            scratch: Vec::new(),
        }
    }

    fn longest(&self) -> usize {
        self.segments.iter().map(|(a, b)| b - a).max().unwrap_or(0)
    }
}

/// First `s` in `from..=last` whose window `[s, s + d)` sums to at most
/// `bound`.
fn first_qualifying(prefix: &[u64], from: usize, last: usize, d: usize, bound: u64) -> Option<usize> {
    const CHUNK: usize = 64;
    let mut s = from;
    while s + CHUNK <= last + 1 {
        let lo = &prefix[s..s + CHUNK];
        let hi = &prefix[s + d..s + d + CHUNK];
        let hit = lo
            .iter()
            .zip(hi)
            .fold(false, |acc, (l, h)| acc | (h - l <= bound));
        if hit {
            return (s..s + CHUNK).find(|&i| prefix[i + d] - prefix[i] <= bound);
        }
        s += CHUNK;
    }
    (s..=last).find(|&i| prefix[i + d] - prefix[i] <= bound)
}

/// Claims windows over a fixed-point series. Returns `(start, duration,
/// window_sum)` triples sorted by start.
fn claim_windows(
    fixed: &[u64],
    threshold: &Threshold,
    durations: &[usize],
) -> Vec<(usize, usize, u64)> {
    let mut prefix = Vec::with_capacity(fixed.len() + 1);
    prefix.push(0u64);
    let mut acc = 0u64;
    for &q in fixed {
        acc += q;
        prefix.push(acc);
    }

    let mut free = FreeSegments::new(fixed.len());
    let mut claimed = Vec::new();
    for &d in durations {
        if free.longest() < d {
            continue;
        }
        let Some(bound) = threshold.max_qualifying_sum(d) else {
            continue;
        };
        let mut next = std::mem::take(&mut free.scratch);
        next.clear();
        for &(a, b) in &free.segments {
            if b - a < d {
                next.push((a, b));
                continue;
            }
            let mut rest = a;
            let mut s = a;
            while s + d <= b {
                match first_qualifying(&prefix, s, b - d, d, bound) {
                    Some(hit) => {
                        claimed.push((hit, d, prefix[hit + d] - prefix[hit]));
                        if hit > rest {
                            next.push((rest, hit));
                        }
                        s = hit + d;
                        rest = s;
                    }
                    None => break,
                }
            }
            if rest < b {
                next.push((rest, b));
            }
        }
        free.scratch = std::mem::replace(&mut free.segments, next);
    }
    claimed.sort_unstable_by_key(|&(start, _, _)| start);
    claimed
}

fn check_grid(series: &AvailabilitySeries, grid: &DurationGrid) -> Result<()> {
    if series.is_empty() {
        return Err(Error::Parameter(format!("series {} is empty", series.key())));
    }
    if grid.max() > series.len() {
        return Err(Error::Parameter(format!(
            "longest duration {} exceeds the {}-hour series {}",
            grid.max(),
            series.len(),
            series.key()
        )));
    }
    Ok(())
}

/// Detects non-overlapping droughts of variable duration below `threshold`.
pub fn detect_events(
    series: &AvailabilitySeries,
    threshold: &Threshold,
    grid: &DurationGrid,
) -> Result<EventCatalog> {
    check_grid(series, grid)?;
    let events = claim_windows(series.fixed(), threshold, grid.durations())
        .into_iter()
        .map(|(start, duration, sum)| DroughtEvent::from_window(start, duration, sum, threshold))
        .collect();
    Ok(EventCatalog {
        key: series.key().clone(),
        threshold_rel: threshold.relative_level(),
        threshold_abs: threshold.value(),
        approximate: grid.is_approximate(),
        events,
    })
}

/// Independent detection runs, one per relative threshold level.
pub fn sweep(
    series: &AvailabilitySeries,
    grid: &ThresholdGrid,
    durations: &DurationGrid,
) -> Result<SweepResult> {
    check_grid(series, durations)?;
    grid.levels()
        .par_iter()
        .map(|&tau| {
            let threshold = Threshold::relative(series, tau);
            detect_events(series, &threshold, durations).map(|c| (tau, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> AvailabilitySeries {
        AvailabilitySeries::unaligned(SeriesKey::new("T", "pv"), 2000, values).unwrap()
    }

    fn ten_hours() -> AvailabilitySeries {
        series(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0])
    }

    fn spans(c: &EventCatalog) -> Vec<(usize, usize)> {
        c.events.iter().map(|e| (e.start, e.end())).collect()
    }

    fn tau(t: f64) -> Tau {
        Tau::from_fraction(t).unwrap()
    }

    #[test]
    fn ten_hour_example_half_mean() {
        let s = ten_hours();
        let t = Threshold::relative(&s, tau(0.5));
        assert_eq!(t.value(), 0.25);
        let c = detect_events(&s, &t, &DurationGrid::full(10, 1).unwrap()).unwrap();
        assert_eq!(spans(&c), vec![(0, 5)]);
        assert!((c.events[0].mean_availability - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ten_hour_example_low_threshold() {
        let s = ten_hours();
        let t = Threshold::relative(&s, tau(0.2));
        let c = detect_events(&s, &t, &DurationGrid::full(10, 1).unwrap()).unwrap();
        assert_eq!(spans(&c), vec![(0, 4)]);
        assert_eq!(c.events[0].mean_availability, 0.0);
    }

    #[test]
    fn all_zero_is_one_event() {
        let s = series(vec![0.0; 20]);
        let t = Threshold::absolute(0.01, 0.0).unwrap();
        let c = detect_events(&s, &t, &DurationGrid::full(20, 1).unwrap()).unwrap();
        assert_eq!(spans(&c), vec![(0, 19)]);
    }

    #[test]
    fn grid_longer_than_series_is_rejected() {
        let s = ten_hours();
        let t = Threshold::relative(&s, tau(0.5));
        assert!(detect_events(&s, &t, &DurationGrid::full(11, 1).unwrap()).is_err());
    }

    #[test]
    fn within_pass_claims_skip_overlaps() {
        // Two qualifying 2-hour windows share hour 1; the left one wins and
        // hour 2 is left for a 1-hour pass.
        let s = series(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let t = Threshold::absolute(0.1, s.long_run_mean()).unwrap();
        let c = detect_events(&s, &t, &DurationGrid::full(2, 1).unwrap()).unwrap();
        assert_eq!(spans(&c), vec![(0, 1), (2, 2)]);
    }

    #[test]
    fn sweep_examples() {
        // A zero mean gives a zero threshold, which nothing lies strictly below.
        let s = series(vec![0.0; 30]);
        let r = sweep(&s, &ThresholdGrid::default(), &DurationGrid::full(30, 1).unwrap()).unwrap();
        assert_eq!(r.len(), 19);
        assert!(r.values().all(|c| c.is_empty()));

        let dip = series((0..30).map(|h| if h < 20 { 0.0 } else { 0.9 }).collect());
        let r = sweep(&dip, &ThresholdGrid::default(), &DurationGrid::full(30, 1).unwrap()).unwrap();
        assert!(r.values().all(|c| spans(c).first() == Some(&(0, c.events[0].end()))));

        let flat = series(vec![0.4; 30]);
        let r = sweep(&flat, &ThresholdGrid::default(), &DurationGrid::full(30, 1).unwrap()).unwrap();
        assert!(r.values().all(|c| c.is_empty()));

        let grid = ThresholdGrid::from_fractions(&[0.2, 0.5]).unwrap();
        let r = sweep(&ten_hours(), &grid, &DurationGrid::full(10, 1).unwrap()).unwrap();
        assert_eq!(spans(&r[&tau(0.2)]), vec![(0, 4)]);
        assert_eq!(spans(&r[&tau(0.5)]), vec![(0, 5)]);
    }

    #[test]
    fn chunked_scan_matches_linear_scan() {
        let values: Vec<u64> = (0..500u64).map(|i| (i * 7919) % 97).collect();
        let mut prefix = vec![0u64];
        for v in &values {
            prefix.push(prefix.last().unwrap() + v);
        }
        for d in [1, 3, 64, 100] {
            for bound in [0, 50, 200, 3000] {
                let last = values.len() - d;
                let want = (0..=last).find(|&i| prefix[i + d] - prefix[i] <= bound);
                assert_eq!(first_qualifying(&prefix, 0, last, d, bound), want);
            }
        }
    }
}
