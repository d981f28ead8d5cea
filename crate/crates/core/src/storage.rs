//! Lossless-reservoir storage proxy.
//!
//! Generation capacity is sized so that renewable output covers demand over
//! the whole record; the deepest decline of the cumulative net-generation
//! level is the energy a perfectly foresighted store would have to hold, and
//! the interval attaining it is the main discharge period.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::AvailabilitySeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    Flat,
    UserSupplied,
}

/// Hourly demand in energy per hour.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    values: Vec<f64>,
    mode: DemandMode,
}

impl DemandProfile {
    pub fn flat(n_hours: usize, value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Parameter(format!("flat demand {value} must be non-negative")));
        }
        Ok(DemandProfile {
            values: vec![value; n_hours],
            mode: DemandMode::Flat,
        })
    }

    pub fn user_supplied(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Parameter(format!(
                "demand at hour {i} is {} (must be non-negative)",
                values[i]
            )));
        }
        Ok(DemandProfile {
            values,
            mode: DemandMode::UserSupplied,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> DemandMode {
        self.mode
    }
}

/// Sizing of the renewable fleet against demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizing {
    /// Surplus of total generation over total demand, as a fraction.
    pub margin: f64,
    /// Round-trip efficiency applied to surplus hours (1 = lossless).
    pub efficiency: f64,
}

impl Default for Sizing {
    fn default() -> Self {
        Sizing {
            margin: 0.0,
            efficiency: 1.0,
        }
    }
}

/// `C·a(t) − d(t)` with `C` chosen so that `C·Σa = (1 + margin)·Σd`.
/// Positive values are scaled by the sizing efficiency.
pub fn net_series(
    availability: &AvailabilitySeries,
    demand: &DemandProfile,
    sizing: Sizing,
) -> Result<Vec<f64>> {
    if availability.len() != demand.values.len() {
        return Err(Error::Axis(format!(
            "availability has {} hours, demand {}",
            availability.len(),
            demand.values.len()
        )));
    }
    if !(sizing.efficiency > 0.0 && sizing.efficiency <= 1.0) || sizing.margin.is_nan() || sizing.margin <= -1.0 {
        return Err(Error::Parameter(format!("invalid sizing {sizing:?}")));
    }
    let total_availability: f64 = availability.values().iter().sum();
    if total_availability <= 0.0 {
        return Err(Error::Parameter(format!(
            "series {} has zero total availability",
            availability.key()
        )));
    }
    let total_demand: f64 = demand.values.iter().sum();
    let capacity = (1.0 + sizing.margin) * total_demand / total_availability;
    Ok(availability
        .values()
        .iter()
        .zip(&demand.values)
        .map(|(a, d)| {
            let net = capacity * a - d;
            if net > 0.0 {
                net * sizing.efficiency
            } else {
                net
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawdownResult {
    /// `max over t1 < t2 of L(t1) − L(t2)`, zero when the level never falls.
    pub required_capacity: f64,
    /// `(t1, t2)` attaining the drawdown, inclusive hour bounds.
    pub discharge_interval: Option<(usize, usize)>,
    #[serde(skip)]
    pub levels: Vec<f64>,
}

/// Running level `L(t) = Σ_{s ≤ t} net(s)`.
pub fn levels(net: &[f64]) -> Vec<f64> {
    net.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Largest decline of the running level in one pass. Among equal declines
/// the earliest start wins, then the longest interval.
pub fn max_drawdown(net: &[f64]) -> DrawdownResult {
    let level = levels(net);
    let mut best = 0.0f64;
    let mut interval = None;
    let mut peak = 0usize;
    for t2 in 1..level.len() {
        if level[t2 - 1] > level[peak] {
            peak = t2 - 1;
        }
        let drop = level[peak] - level[t2];
        if drop <= 0.0 {
            continue;
        }
        let better = match interval {
            None => true,
            Some((t1, old_t2)) => {
                drop > best || (drop == best && (peak < t1 || (peak == t1 && t2 > old_t2)))
            }
        };
        if better {
            best = drop;
            interval = Some((peak, t2));
        }
    }
    DrawdownResult {
        required_capacity: best,
        discharge_interval: interval,
        levels: level,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coincidence {
    pub intersection_h: usize,
    /// Intersection as a share of the event's duration.
    pub containment: f64,
    pub jaccard: f64,
}

/// Overlap between the discharge interval and an event `[start, end]`.
pub fn coincidence(result: &DrawdownResult, event: (usize, usize)) -> Coincidence {
    let (e0, e1) = event;
    let Some((d0, d1)) = result.discharge_interval else {
        return Coincidence {
            intersection_h: 0,
            containment: 0.0,
            jaccard: 0.0,
        };
    };
    let lo = e0.max(d0);
    let hi = e1.min(d1);
    let intersection = if lo <= hi { hi - lo + 1 } else { 0 };
    let event_len = e1 - e0 + 1;
    let union = event_len + (d1 - d0 + 1) - intersection;
    Coincidence {
        intersection_h: intersection,
        containment: intersection as f64 / event_len as f64,
        jaccard: intersection as f64 / union as f64,
    }
}
