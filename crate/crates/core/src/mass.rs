//! Multi-threshold drought mass.
//!
//! Events at the cut-off level define intervals; each interval is scored by
//! the number of drought hours it contains summed over every included
//! threshold level. Scoring runs over overlapping pairs of consecutive years
//! so that every winter is seen whole in at least one pair.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{TimeAxis, HOURS_PER_YEAR};
use crate::vmbt::{SweepResult, Tau, ThresholdGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct MassConfig {
    /// Level whose events define scored intervals.
    pub cutoff: Tau,
    /// Levels contributing to the score, ascending; contains `cutoff`.
    pub included: Vec<Tau>,
    /// Per-level integer weight, parallel to `included`.
    pub weights: Vec<u32>,
    pub pair_hours: usize,
    /// Months (1 = January) that are not winter.
    pub summer_months: Vec<u32>,
}

impl Default for MassConfig {
    fn default() -> Self {
        let included = ThresholdGrid::stepped(1_000, 7_500, 500)
            .expect("static grid")
            .levels()
            .to_vec();
        MassConfig {
            cutoff: Tau::from_basis_points(7_500).expect("static level"),
            weights: vec![1; included.len()],
            included,
            pair_hours: 2 * HOURS_PER_YEAR,
            summer_months: (5..=9).collect(),
        }
    }
}

impl MassConfig {
    /// Cardinality of the included level set.
    pub fn cardinality(&self) -> usize {
        self.included.len()
    }

    /// Uses only the given levels, equally weighted.
    pub fn with_levels(cutoff: Tau, included: Vec<Tau>) -> Result<Self> {
        let config = MassConfig {
            cutoff,
            weights: vec![1; included.len()],
            included,
            ..MassConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.included.contains(&self.cutoff) {
            return Err(Error::Parameter(format!(
                "cut-off level {} is not among the included levels",
                self.cutoff
            )));
        }
        if self.included.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("included levels must be strictly increasing".into()));
        }
        if self.weights.len() != self.included.len() {
            return Err(Error::Parameter(format!(
                "{} weights given for {} included levels",
                self.weights.len(),
                self.included.len()
            )));
        }
        if self.pair_hours != 2 * HOURS_PER_YEAR {
            return Err(Error::Parameter(format!(
                "pair length must be {} hours",
                2 * HOURS_PER_YEAR
            )));
        }
        if self.summer_months.iter().any(|m| !(1..=12).contains(m)) {
            return Err(Error::Parameter("summer months must lie in 1..=12".into()));
        }
        Ok(())
    }

    fn is_winter_month(&self, month: u32) -> bool {
        !self.summer_months.contains(&month)
    }
}

/// Hour-by-hour drought membership at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct DroughtCalendar {
    pub tau: Tau,
    pub flags: Vec<bool>,
}

impl DroughtCalendar {
    pub fn drought_hours(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Flags every event hour of each included level over the full axis.
pub fn build_calendars(
    sweep: &SweepResult,
    axis: &TimeAxis,
    config: &MassConfig,
) -> Result<BTreeMap<Tau, DroughtCalendar>> {
    config.validate()?;
    config
        .included
        .iter()
        .map(|&tau| {
            let catalog = sweep.get(&tau).ok_or_else(|| {
                Error::Parameter(format!("sweep has no catalog for level {tau}"))
            })?;
            let mut flags = vec![false; axis.n_hours()];
            for e in &catalog.events {
                if e.end() >= flags.len() {
                    return Err(Error::Parameter(format!(
                        "event ending at hour {} lies outside the {}-hour axis",
                        e.end(),
                        flags.len()
                    )));
                }
                flags[e.start..=e.end()].iter_mut().for_each(|f| *f = true);
            }
            Ok((tau, DroughtCalendar { tau, flags }))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Summer,
}

impl std::fmt::Display for Season {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Season::Winter => "winter",
            Season::Summer => "summer",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeasonFilter {
    All,
    Winter,
}

/// A scored cut-off interval `[k, l]` inside a year pair. `k` and `l` are
/// hours relative to the pair's first hour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MassEvent {
    pub pair: (i32, i32),
    pub pair_offset: usize,
    pub k: usize,
    pub l: usize,
    pub score: u64,
    pub season: Season,
}

impl MassEvent {
    pub fn duration(&self) -> usize {
        self.l - self.k + 1
    }

    pub fn start(&self) -> usize {
        self.pair_offset + self.k
    }

    pub fn end(&self) -> usize {
        self.pair_offset + self.l
    }

    pub fn pair_label(&self) -> String {
        format!("{}/{}", self.pair.0, self.pair.1)
    }
}

/// Scored intervals of one year pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEvents {
    pub pair: (i32, i32),
    pub events: Vec<MassEvent>,
}

/// Finds the maximal cut-off runs in each consecutive year pair and scores
/// them. Runs crossing a pair edge are clipped to the pair.
pub fn score_pairs(
    calendars: &BTreeMap<Tau, DroughtCalendar>,
    axis: &TimeAxis,
    config: &MassConfig,
) -> Result<Vec<PairEvents>> {
    config.validate()?;
    if axis.n_years() < 2 {
        return Err(Error::Parameter(format!(
            "drought mass needs at least two years, the axis has {}",
            axis.n_years()
        )));
    }
    let n = axis.n_hours();
    let mut depth = vec![0u64; n];
    for (tau, weight) in config.included.iter().zip(&config.weights) {
        let cal = calendars
            .get(tau)
            .ok_or_else(|| Error::Parameter(format!("no calendar for level {tau}")))?;
        if cal.flags.len() != n {
            return Err(Error::Parameter(format!(
                "calendar at level {tau} spans {} hours, the axis {n}",
                cal.flags.len()
            )));
        }
        for (d, &f) in depth.iter_mut().zip(&cal.flags) {
            *d += f as u64 * *weight as u64;
        }
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0u64);
    for d in &depth {
        prefix.push(prefix.last().unwrap() + d);
    }
    let cutoff = &calendars[&config.cutoff].flags;

    let mut out = Vec::with_capacity(axis.n_years() - 1);
    for first in 0..axis.n_years() - 1 {
        let offset = first * HOURS_PER_YEAR;
        let year = axis.start_year() + first as i32;
        let window = &cutoff[offset..offset + config.pair_hours];
        let mut events = Vec::new();
        let mut h = 0;
        while h < window.len() {
            if !window[h] {
                h += 1;
                continue;
            }
            let k = h;
            while h < window.len() && window[h] {
                h += 1;
            }
            let l = h - 1;
            let duration = h - k;
            let median = offset + k + duration / 2;
            let season = if config.is_winter_month(axis.month_of(median)) {
                Season::Winter
            } else {
                Season::Summer
            };
            events.push(MassEvent {
                pair: (year, year + 1),
                pair_offset: offset,
                k,
                l,
                score: prefix[offset + l + 1] - prefix[offset + k],
                season,
            });
        }
        out.push(PairEvents {
            pair: (year, year + 1),
            events,
        });
    }
    Ok(out)
}

/// Highest-scoring event; ties go to the longer, then the earlier event.
pub fn top_event<'a>(
    events: impl IntoIterator<Item = &'a MassEvent>,
    filter: SeasonFilter,
) -> Option<&'a MassEvent> {
    events
        .into_iter()
        .filter(|e| filter == SeasonFilter::All || e.season == Season::Winter)
        .max_by(|a, b| {
            a.score
                .cmp(&b.score)
                .then(a.duration().cmp(&b.duration()))
                .then(b.start().cmp(&a.start()))
        })
}

/// Top event over every pair of a record.
pub fn top_event_overall(pairs: &[PairEvents], filter: SeasonFilter) -> Option<&MassEvent> {
    top_event(pairs.iter().flat_map(|p| &p.events), filter)
}

/// The row maximum of a region in the normalized report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowMax {
    pub pair: (i32, i32),
    pub score: u64,
    pub duration_h: usize,
    pub duration_days: u64,
    /// Duration divided by the longest row-maximum duration across regions.
    pub normalized_duration: f64,
    pub event: MassEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassReportRow {
    pub region: String,
    /// Top score per pair, `None` where the pair has no eligible event.
    pub scores: Vec<Option<u64>>,
    /// Scores divided by the row maximum.
    pub normalized: Vec<Option<f64>>,
    pub row_max: Option<RowMax>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassReport {
    pub pairs: Vec<(i32, i32)>,
    pub rows: Vec<MassReportRow>,
}

/// Rounds hours to whole days for presentation.
pub fn hours_to_days(hours: usize) -> u64 {
    (hours as f64 / 24.0).round() as u64
}

/// Normalized score matrix (regions × pairs) with row-maximum annotations.
pub fn mass_report(regions: &[(String, Vec<PairEvents>)], filter: SeasonFilter) -> MassReport {
    let mut pairs: Vec<(i32, i32)> = regions
        .iter()
        .flat_map(|(_, p)| p.iter().map(|pe| pe.pair))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();

    let mut rows: Vec<MassReportRow> = regions
        .iter()
        .map(|(region, region_pairs)| {
            let by_pair: BTreeMap<(i32, i32), &PairEvents> =
                region_pairs.iter().map(|p| (p.pair, p)).collect();
            let tops: Vec<Option<&MassEvent>> = pairs
                .iter()
                .map(|pair| by_pair.get(pair).and_then(|p| top_event(&p.events, filter)))
                .collect();
            let scores: Vec<Option<u64>> = tops.iter().map(|t| t.map(|e| e.score)).collect();
            let best = top_event(tops.iter().flatten().copied(), SeasonFilter::All);
            let max_score = best.map_or(0, |e| e.score);
            let normalized = scores
                .iter()
                .map(|s| s.map(|s| if max_score > 0 { s as f64 / max_score as f64 } else { 0.0 }))
                .collect();
            MassReportRow {
                region: region.clone(),
                scores,
                normalized,
                row_max: best.map(|e| RowMax {
                    pair: e.pair,
                    score: e.score,
                    duration_h: e.duration(),
                    duration_days: hours_to_days(e.duration()),
                    normalized_duration: 0.0,
                    event: e.clone(),
                }),
            }
        })
        .collect();

    let longest = rows
        .iter()
        .filter_map(|r| r.row_max.as_ref().map(|m| m.duration_h))
        .max()
        .unwrap_or(0);
    for row in &mut rows {
        if let Some(m) = row.row_max.as_mut() {
            m.normalized_duration = m.duration_h as f64 / longest as f64;
        }
    }
    MassReport { pairs, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesKey;
    use crate::vmbt::{DroughtEvent, EventCatalog};

    fn tau(bp: u32) -> Tau {
        Tau::from_basis_points(bp).unwrap()
    }

    fn catalog(spans: &[(usize, usize)]) -> EventCatalog {
        EventCatalog {
            key: SeriesKey::new("T", "pv"),
            threshold_rel: 0.5,
            threshold_abs: 0.1,
            approximate: false,
            events: spans
                .iter()
                .map(|&(start, end)| DroughtEvent {
                    start,
                    duration: end - start + 1,
                    threshold_rel: 0.5,
                    threshold_abs: 0.1,
                    mean_availability: 0.0,
                })
                .collect(),
        }
    }

    fn flags(cal: &DroughtCalendar, n: usize) -> String {
        cal.flags[..n].iter().map(|&f| if f { '1' } else { '0' }).collect()
    }

    #[test]
    fn calendars_flag_event_hours() {
        let axis = TimeAxis::new(2000, 2 * HOURS_PER_YEAR).unwrap();
        let config = MassConfig::with_levels(tau(7500), vec![tau(5000), tau(7500)]).unwrap();
        let sweep: SweepResult = [
            (tau(5000), catalog(&[(0, 2), (5, 6)])),
            (tau(7500), catalog(&[(0, 5)])),
        ]
        .into();
        let cals = build_calendars(&sweep, &axis, &config).unwrap();
        assert_eq!(flags(&cals[&tau(7500)], 10), "1111110000");
        assert_eq!(flags(&cals[&tau(5000)], 10), "1110011000");
        assert_eq!(cals[&tau(5000)].drought_hours(), 5);

        let missing: SweepResult = [(tau(7500), catalog(&[]))].into();
        assert!(build_calendars(&missing, &axis, &config).is_err());
    }

    #[test]
    fn score_is_sum_over_levels() {
        let axis = TimeAxis::new(2000, 2 * HOURS_PER_YEAR).unwrap();
        let config =
            MassConfig::with_levels(tau(7500), vec![tau(2500), tau(5000), tau(7500)]).unwrap();
        let sweep: SweepResult = [
            (tau(2500), catalog(&[(102, 102)])),
            (tau(5000), catalog(&[(101, 102)])),
            (tau(7500), catalog(&[(100, 103)])),
        ]
        .into();
        let cals = build_calendars(&sweep, &axis, &config).unwrap();
        let pairs = score_pairs(&cals, &axis, &config).unwrap();
        assert_eq!(pairs.len(), 1);
        let e = &pairs[0].events[0];
        assert_eq!((e.k, e.l, e.score), (100, 103, 7));
        assert_eq!(e.season, Season::Winter);
    }

    #[test]
    fn full_saturation_and_lower_bound() {
        let axis = TimeAxis::new(2000, 2 * HOURS_PER_YEAR).unwrap();
        let config = MassConfig::default();
        assert_eq!(config.cardinality(), 14);
        let sweep: SweepResult = config
            .included
            .iter()
            .map(|&t| (t, catalog(&[(10, 19)])))
            .collect();
        let cals = build_calendars(&sweep, &axis, &config).unwrap();
        let pairs = score_pairs(&cals, &axis, &config).unwrap();
        assert_eq!(pairs[0].events[0].score, 140);

        let sparse: SweepResult = config
            .included
            .iter()
            .map(|&t| (t, if t == config.cutoff { catalog(&[(10, 19)]) } else { catalog(&[]) }))
            .collect();
        let cals = build_calendars(&sparse, &axis, &config).unwrap();
        let pairs = score_pairs(&cals, &axis, &config).unwrap();
        assert_eq!(pairs[0].events[0].score, 10);
    }

    #[test]
    fn pairs_overlap_and_clip() {
        let axis = TimeAxis::new(2000, 3 * HOURS_PER_YEAR).unwrap();
        let config = MassConfig::with_levels(tau(7500), vec![tau(7500)]).unwrap();
        // Runs from mid-December of year 2 into January of year 3.
        let start = 2 * HOURS_PER_YEAR - 100;
        let sweep: SweepResult = [(tau(7500), catalog(&[(start, start + 199)]))].into();
        let cals = build_calendars(&sweep, &axis, &config).unwrap();
        let pairs = score_pairs(&cals, &axis, &config).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].events[0].duration(), 100);
        assert_eq!(pairs[1].events[0].duration(), 200);
        assert_eq!(pairs[1].events[0].start(), start);
    }

    #[test]
    fn too_short_axis() {
        let axis = TimeAxis::new(2000, HOURS_PER_YEAR).unwrap();
        let config = MassConfig::with_levels(tau(7500), vec![tau(7500)]).unwrap();
        let sweep: SweepResult = [(tau(7500), catalog(&[]))].into();
        let cals = build_calendars(&sweep, &axis, &config).unwrap();
        assert!(score_pairs(&cals, &axis, &config).is_err());
    }

    fn event(score: u64, k: usize, l: usize, season: Season) -> MassEvent {
        MassEvent {
            pair: (2000, 2001),
            pair_offset: 0,
            k,
            l,
            score,
            season,
        }
    }

    #[test]
    fn top_event_ordering() {
        let single = [event(5, 0, 4, Season::Winter)];
        assert_eq!(top_event(&single, SeasonFilter::All), Some(&single[0]));

        let two = [event(100, 0, 9, Season::Winter), event(90, 20, 40, Season::Winter)];
        assert_eq!(top_event(&two, SeasonFilter::Winter).unwrap().score, 100);

        let tied = [
            event(50, 0, 9, Season::Winter),
            event(50, 20, 39, Season::Winter),
            event(50, 50, 69, Season::Winter),
        ];
        assert_eq!(top_event(&tied, SeasonFilter::All).unwrap().k, 20);

        let summer = [event(500, 0, 9, Season::Summer), event(10, 20, 29, Season::Winter)];
        assert_eq!(top_event(&summer, SeasonFilter::All).unwrap().score, 500);
        assert_eq!(top_event(&summer, SeasonFilter::Winter).unwrap().score, 10);
        assert_eq!(top_event(&summer[..1], SeasonFilter::Winter), None);
    }

    #[test]
    fn report_normalizes_by_row() {
        let pe = PairEvents {
            pair: (2000, 2001),
            events: vec![event(40, 0, 47, Season::Winter)],
        };
        let report = mass_report(&[("DE".into(), vec![pe])], SeasonFilter::All);
        assert_eq!(report.rows[0].normalized, vec![Some(1.0)]);
        let m = report.rows[0].row_max.as_ref().unwrap();
        assert_eq!((m.duration_days, m.normalized_duration), (2, 1.0));
    }
}
