//! Descriptive statistics over event catalogs: frequency-duration curves,
//! return periods, maximum durations and portfolio/balancing effects.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::TimeAxis;
use crate::vmbt::{EventCatalog, SweepResult, ThresholdGrid};

/// Durations (hours) always included in a frequency curve.
pub const QUERY_LADDER: [usize; 5] = [24, 48, 168, 336, 720];

/// Mean yearly number of events lasting at least `duration` hours.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyPoint {
    pub duration: usize,
    pub count: usize,
    #[serde(skip)]
    pub frequency: Ratio<u64>,
    #[serde(rename = "freq_per_year")]
    pub per_year: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyCurve {
    pub tau: f64,
    pub years: u64,
    pub points: Vec<FrequencyPoint>,
}

/// Frequency curve on the observed durations plus [`QUERY_LADDER`].
pub fn frequency_duration(catalog: &EventCatalog, years: u64) -> Result<FrequencyCurve> {
    let mut query: BTreeSet<usize> = catalog.events.iter().map(|e| e.duration).collect();
    query.extend(QUERY_LADDER);
    frequency_duration_at(catalog, years, query)
}

/// Frequency curve evaluated at the given durations (sorted ascending).
pub fn frequency_duration_at(
    catalog: &EventCatalog,
    years: u64,
    durations: impl IntoIterator<Item = usize>,
) -> Result<FrequencyCurve> {
    if years == 0 {
        return Err(Error::Parameter("frequency needs at least one year".into()));
    }
    let mut sorted: Vec<usize> = catalog.events.iter().map(|e| e.duration).collect();
    sorted.sort_unstable();
    let mut query: Vec<usize> = durations.into_iter().collect();
    query.sort_unstable();
    query.dedup();
    let points = query
        .into_iter()
        .map(|d| {
            let count = sorted.len() - sorted.partition_point(|&x| x < d);
            let frequency = Ratio::new(count as u64, years);
            FrequencyPoint {
                duration: d,
                count,
                frequency,
                per_year: count as f64 / years as f64,
            }
        })
        .collect();
    Ok(FrequencyCurve {
        tau: catalog.threshold_rel,
        years,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnPeriod {
    pub duration: usize,
    #[serde(skip)]
    pub period: Ratio<u64>,
    #[serde(rename = "period_years")]
    pub years: f64,
}

/// Reciprocal of yearly frequencies below one. Points with zero frequency
/// have no finite period and points occurring at least yearly are omitted.
/// With frequencies counted over the record the period never exceeds the
/// record length.
pub fn return_period(curve: &FrequencyCurve) -> Vec<ReturnPeriod> {
    curve
        .points
        .iter()
        .filter(|p| p.count > 0 && p.frequency < Ratio::from_integer(1))
        .map(|p| {
            let period = p.frequency.recip();
            ReturnPeriod {
                duration: p.duration,
                period,
                years: *period.numer() as f64 / *period.denom() as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Overall,
    PerYear,
    PerMonth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum GroupKey {
    All,
    Year(i32),
    Month(u32),
}

impl std::fmt::Display for GroupKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupKey::All => write!(f, "overall"),
            GroupKey::Year(y) => write!(f, "year:{y}"),
            GroupKey::Month(m) => write!(f, "month:{m:02}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GroupMax {
    pub max_duration: usize,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxDurationTable {
    pub tau: f64,
    pub grouping: Grouping,
    pub groups: BTreeMap<GroupKey, GroupMax>,
    pub overall_max: usize,
    /// Year of the median hour of the longest event (earliest on ties).
    pub overall_year: Option<i32>,
}

/// Longest event per group. Events are assigned to the year and month of
/// their median hour.
pub fn max_duration(catalog: &EventCatalog, axis: &TimeAxis, grouping: Grouping) -> MaxDurationTable {
    let mut groups: BTreeMap<GroupKey, GroupMax> = BTreeMap::new();
    match grouping {
        Grouping::Overall => {}
        Grouping::PerYear => groups.extend(axis.years().map(|y| (GroupKey::Year(y), GroupMax::default()))),
        Grouping::PerMonth => groups.extend((1..=12).map(|m| (GroupKey::Month(m), GroupMax::default()))),
    }
    if grouping == Grouping::Overall && !catalog.is_empty() {
        groups.insert(GroupKey::All, GroupMax::default());
    }

    let mut longest: Option<(usize, usize)> = None;
    for e in &catalog.events {
        let median = e.median_hour();
        let key = match grouping {
            Grouping::Overall => GroupKey::All,
            Grouping::PerYear => GroupKey::Year(axis.year_of(median)),
            Grouping::PerMonth => GroupKey::Month(axis.month_of(median)),
        };
        let g = groups.entry(key).or_default();
        g.events += 1;
        g.max_duration = g.max_duration.max(e.duration);
        if longest.is_none_or(|(d, _)| e.duration > d) {
            longest = Some((e.duration, median));
        }
    }
    MaxDurationTable {
        tau: catalog.threshold_rel,
        grouping,
        groups,
        overall_max: longest.map_or(0, |(d, _)| d),
        overall_year: longest.map(|(_, m)| axis.year_of(m)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectMetric {
    /// Regional portfolio against each single technology.
    Portfolio,
    /// Copperplate composite against the isolated region.
    Balancing,
}

impl std::fmt::Display for EffectMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EffectMetric::Portfolio => "portfolio",
            EffectMetric::Balancing => "balancing",
        })
    }
}

/// Mean percent change of maximum drought duration per column; `None` marks
/// a blank cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectRow {
    pub region: String,
    pub metric: EffectMetric,
    pub values: BTreeMap<String, Option<f64>>,
}

/// Unweighted mean over `taus` of `100 · (max(compared) − max(reference)) /
/// max(reference)`, skipping levels where the reference has no events.
pub fn mean_effect(reference: &SweepResult, compared: &SweepResult, taus: &ThresholdGrid) -> Option<f64> {
    let changes: Vec<f64> = taus
        .levels()
        .iter()
        .filter_map(|tau| {
            let base = reference.get(tau)?.max_duration();
            let other = compared.get(tau)?.max_duration();
            (base > 0).then(|| 100.0 * (other as f64 - base as f64) / base as f64)
        })
        .collect();
    (!changes.is_empty()).then(|| changes.iter().sum::<f64>() / changes.len() as f64)
}

/// Portfolio effect for one region: the regional portfolio compared with
/// each technology in `columns`.
pub fn portfolio_effect(
    region: &str,
    columns: &[String],
    technology_sweeps: &BTreeMap<String, SweepResult>,
    portfolio: &SweepResult,
    taus: &ThresholdGrid,
) -> EffectRow {
    let values = columns
        .iter()
        .map(|tech| {
            let v = technology_sweeps
                .get(tech)
                .and_then(|reference| mean_effect(reference, portfolio, taus));
            (tech.clone(), v)
        })
        .collect();
    EffectRow {
        region: region.to_string(),
        metric: EffectMetric::Portfolio,
        values,
    }
}

/// Balancing effect for one region: the copperplate composite of each
/// column compared with the isolated region's series.
pub fn balancing_effect(
    region: &str,
    columns: &[String],
    region_sweeps: &BTreeMap<String, SweepResult>,
    copperplate_sweeps: &BTreeMap<String, SweepResult>,
    taus: &ThresholdGrid,
) -> EffectRow {
    let values = columns
        .iter()
        .map(|col| {
            let v = match (region_sweeps.get(col), copperplate_sweeps.get(col)) {
                (Some(reference), Some(cp)) => mean_effect(reference, cp, taus),
                _ => None,
            };
            (col.clone(), v)
        })
        .collect();
    EffectRow {
        region: region.to_string(),
        metric: EffectMetric::Balancing,
        values,
    }
}

/// Region rows plus one weighted-average row per metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectTable {
    pub rows: Vec<EffectRow>,
    pub averages: Vec<EffectRow>,
}

pub const AVERAGE_ROW: &str = "Average";

/// Weighted mean per (metric, column) over regions that have a value in
/// that cell.
pub fn aggregate_effects(rows: Vec<EffectRow>, weights: &BTreeMap<String, f64>) -> Result<EffectTable> {
    if weights.values().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::Parameter("effect weights must be finite and non-negative".into()));
    }
    if !weights.values().any(|w| *w > 0.0) {
        return Err(Error::Parameter("effect weights are all zero".into()));
    }
    let mut sums: BTreeMap<(EffectMetric, String), (f64, f64)> = BTreeMap::new();
    for row in &rows {
        let w = *weights.get(&row.region).ok_or_else(|| {
            Error::Parameter(format!("no weight for region {}", row.region))
        })?;
        for (col, value) in &row.values {
            let cell = sums.entry((row.metric, col.clone())).or_insert((0.0, 0.0));
            if let Some(v) = value {
                cell.0 += w * v;
                cell.1 += w;
            }
        }
    }
    let mut averages: BTreeMap<EffectMetric, EffectRow> = BTreeMap::new();
    for ((metric, col), (num, den)) in sums {
        averages
            .entry(metric)
            .or_insert_with(|| EffectRow {
                region: AVERAGE_ROW.to_string(),
                metric,
                values: BTreeMap::new(),
            })
            .values
            .insert(col, (den > 0.0).then(|| num / den));
    }
    Ok(EffectTable {
        rows,
        averages: averages.into_values().collect(),
    })
}
