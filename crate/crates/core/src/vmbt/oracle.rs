//! Brute-force reference for [`detect_events`](super::detect_events).
//!
//! Enumerates every window of every duration and sums it from scratch; no
//! prefix sums, no segment bookkeeping. Only suitable for short series.

use super::{DroughtEvent, DurationGrid, EventCatalog, Threshold};
use crate::error::{Error, Result};
use crate::series::AvailabilitySeries;

/// Longest series the oracle accepts.
pub const ORACLE_MAX_LEN: usize = 2_000;

pub fn oracle_detect(
    series: &AvailabilitySeries,
    threshold: &Threshold,
    grid: &DurationGrid,
) -> Result<EventCatalog> {
    let n = series.len();
    if n == 0 {
        return Err(Error::Parameter("series is empty".into()));
    }
    if n > ORACLE_MAX_LEN {
        return Err(Error::Parameter(format!(
            "oracle is limited to {ORACLE_MAX_LEN} hours, got {n}"
        )));
    }
    if grid.max() > n {
        return Err(Error::Parameter(format!(
            "longest duration {} exceeds the {n}-hour series",
            grid.max()
        )));
    }

    let values = series.fixed();
    let mut excluded = vec![false; n];
    let mut events = Vec::new();
    for &d in grid.durations() {
        for start in 0..=n - d {
            let window = start..start + d;
            if excluded[window.clone()].iter().any(|&x| x) {
                continue;
            }
            let sum: u64 = values[window.clone()].iter().sum();
            if threshold.qualifies(sum, d) {
                excluded[window].iter_mut().for_each(|x| *x = true);
                events.push(DroughtEvent::from_window(start, d, sum, threshold));
            }
        }
    }
    events.sort_by_key(|e| e.start);
    Ok(EventCatalog {
        key: series.key().clone(),
        threshold_rel: threshold.relative_level(),
        threshold_abs: threshold.value(),
        approximate: grid.is_approximate(),
        events,
    })
}
