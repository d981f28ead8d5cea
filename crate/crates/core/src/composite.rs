//! Capacity-weighted composites: regional technology portfolios and the
//! pan-European copperplate node.

use crate::error::{Error, Result};
use crate::ingest::SeriesSet;
use crate::series::{AvailabilitySeries, CapacityTable, SeriesKey, COPPERPLATE, PORTFOLIO};

/// A composite label and its normalized member weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpec {
    pub label: SeriesKey,
    pub members: Vec<(SeriesKey, f64)>,
}

impl CompositeSpec {
    /// Collects members with a series and a strictly positive capacity.
    /// Zero-capacity members are dropped without complaint (landlocked
    /// regions have no offshore wind).
    pub fn from_capacities<F>(
        label: SeriesKey,
        series: &SeriesSet,
        capacities: &CapacityTable,
        mut include: F,
    ) -> Result<Self>
    where
        F: FnMut(&SeriesKey) -> bool,
    {
        let raw: Vec<(SeriesKey, f64)> = capacities
            .iter()
            .filter(|&(key, cap)| {
                cap > 0.0 && key.technology != PORTFOLIO && include(key) && series.contains_key(key)
            })
            .map(|(key, cap)| (key.clone(), cap))
            .collect();
        let total: f64 = raw.iter().map(|(_, c)| c).sum();
        if raw.is_empty() || total <= 0.0 {
            return Err(Error::EmptyComposite(label.to_string()));
        }
        let members = raw.into_iter().map(|(k, c)| (k, c / total)).collect();
        Ok(CompositeSpec { label, members })
    }

    /// Weighted hourly average of the member series.
    pub fn build(&self, series: &SeriesSet) -> Result<AvailabilitySeries> {
        let (first_key, _) = &self.members[0];
        let first = &series[first_key];
        let axis = *first.axis();
        let mut acc = vec![0.0f64; first.len()];
        for (key, weight) in &self.members {
            let s = &series[key];
            if *s.axis() != axis {
                return Err(Error::Axis(format!(
                    "cannot combine {} with {}: axes differ",
                    first_key, key
                )));
            }
            for (a, v) in acc.iter_mut().zip(s.values()) {
                *a += weight * v;
            }
        }
        for a in &mut acc {
            *a = a.clamp(0.0, 1.0);
        }
        AvailabilitySeries::new(self.label.clone(), axis, acc)
    }
}

/// Capacity-weighted portfolio of all technologies in `region`.
pub fn build_portfolio(
    region: &str,
    series: &SeriesSet,
    capacities: &CapacityTable,
) -> Result<AvailabilitySeries> {
    CompositeSpec::from_capacities(
        SeriesKey::new(region, PORTFOLIO),
        series,
        capacities,
        |key| key.region == region,
    )?
    .build(series)
}

/// Capacity-weighted average over every region, optionally restricted to a
/// single technology. Without a filter this is the copperplate portfolio.
pub fn build_copperplate(
    series: &SeriesSet,
    capacities: &CapacityTable,
    technology_filter: Option<&str>,
) -> Result<AvailabilitySeries> {
    let label = SeriesKey::new(COPPERPLATE, technology_filter.unwrap_or(PORTFOLIO));
    CompositeSpec::from_capacities(label, series, capacities, |key| {
        key.region != COPPERPLATE && technology_filter.is_none_or(|t| key.technology == t)
    })?
    .build(series)
}

/// Energy a region could generate over the whole record, in MWh:
/// Σ capacity × long-run mean × hours over its technologies.
pub fn generation_potential(region: &str, series: &SeriesSet, capacities: &CapacityTable) -> f64 {
    capacities
        .iter()
        .filter(|(key, _)| key.region == region && key.technology != PORTFOLIO)
        .filter_map(|(key, cap)| {
            series
                .get(key)
                .map(|s| cap * s.long_run_mean() * s.len() as f64)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TimeAxis;

    fn axis() -> TimeAxis {
        TimeAxis::new(2000, 8760).unwrap()
    }

    fn set(items: &[(&str, &str, Vec<f64>)]) -> SeriesSet {
        items
            .iter()
            .map(|(r, t, v)| {
                let s = AvailabilitySeries::new(SeriesKey::new(*r, *t), axis(), v.clone()).unwrap();
                (s.key().clone(), s)
            })
            .collect()
    }

    fn pattern(a: f64, b: f64) -> Vec<f64> {
        (0..8760).map(|h| if h % 2 == 0 { a } else { b }).collect()
    }

    #[test]
    fn single_member_is_identity() {
        let s = set(&[("DE", "pv", pattern(0.1, 0.7))]);
        let caps: CapacityTable = [("DE", "pv", 5.0)].into_iter().collect();
        let p = build_portfolio("DE", &s, &caps).unwrap();
        assert_eq!(p.values(), s[&SeriesKey::new("DE", "pv")].values());
        assert_eq!(p.key(), &SeriesKey::new("DE", PORTFOLIO));
    }

    #[test]
    fn equal_capacities_average() {
        let s = set(&[("DE", "pv", pattern(0.2, 0.2)), ("DE", "onshore", pattern(0.4, 0.4))]);
        let caps: CapacityTable = [("DE", "pv", 1.0), ("DE", "onshore", 1.0)].into_iter().collect();
        let p = build_portfolio("DE", &s, &caps).unwrap();
        assert!((p.values()[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn weighted_three_to_one() {
        let s = set(&[("DE", "pv", pattern(0.0, 0.0)), ("DE", "onshore", pattern(0.8, 0.8))]);
        let caps: CapacityTable = [("DE", "pv", 3.0), ("DE", "onshore", 1.0)].into_iter().collect();
        let p = build_portfolio("DE", &s, &caps).unwrap();
        assert!((p.values()[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_capacity_member_is_skipped() {
        let s = set(&[("AT", "pv", pattern(0.3, 0.3)), ("AT", "onshore", pattern(0.9, 0.9))]);
        let caps: CapacityTable = [("AT", "pv", 2.0), ("AT", "onshore", 0.0)].into_iter().collect();
        let p = build_portfolio("AT", &s, &caps).unwrap();
        assert_eq!(p.values(), s[&SeriesKey::new("AT", "pv")].values());

        let none: CapacityTable = [("AT", "pv", 0.0)].into_iter().collect();
        assert!(matches!(
            build_portfolio("AT", &s, &none),
            Err(Error::EmptyComposite(_))
        ));
    }

    #[test]
    fn copperplate_two_regions() {
        let s = set(&[("DE", "pv", pattern(0.0, 0.0)), ("FR", "pv", pattern(1.0, 1.0))]);
        let caps: CapacityTable = [("DE", "pv", 1.0), ("FR", "pv", 1.0)].into_iter().collect();
        let cp = build_copperplate(&s, &caps, None).unwrap();
        assert_eq!(cp.values()[0], 0.5);
        assert_eq!(cp.key(), &SeriesKey::new(COPPERPLATE, PORTFOLIO));
    }

    #[test]
    fn copperplate_technology_filter() {
        let s = set(&[
            ("A", "onshore", pattern(0.1, 0.1)),
            ("B", "onshore", pattern(0.5, 0.5)),
            ("C", "onshore", pattern(0.9, 0.9)),
            ("C", "pv", pattern(0.0, 0.0)),
        ]);
        let caps: CapacityTable = [
            ("A", "onshore", 2.0),
            ("B", "onshore", 1.0),
            ("C", "onshore", 1.0),
            ("C", "pv", 100.0),
        ]
        .into_iter()
        .collect();
        let cp = build_copperplate(&s, &caps, Some("onshore")).unwrap();
        assert!((cp.values()[3] - 0.4).abs() < 1e-12);
        assert_eq!(cp.key(), &SeriesKey::new(COPPERPLATE, "onshore"));
    }

    #[test]
    fn potential_is_energy_over_record() {
        let s = set(&[("DE", "pv", pattern(0.25, 0.25))]);
        let caps: CapacityTable = [("DE", "pv", 100.0)].into_iter().collect();
        assert_eq!(generation_potential("DE", &s, &caps), 219_000.0);
        let doubled = caps.scaled(2.0).unwrap();
        assert_eq!(generation_potential("DE", &s, &doubled), 438_000.0);
        let zero: CapacityTable = [("DE", "pv", 0.0)].into_iter().collect();
        assert_eq!(generation_potential("DE", &s, &zero), 0.0);
    }
}
