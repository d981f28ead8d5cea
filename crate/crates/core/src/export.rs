//! Tabular exports of catalogs and derived statistics.
//!
//! Every writer emits a header row followed by one record per item, in a
//! deterministic order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mass::{MassEvent, MassReport};
use crate::series::SeriesKey;
use crate::stats::{EffectRow, FrequencyCurve, MaxDurationTable, ReturnPeriod};
use crate::storage::{Coincidence, DrawdownResult};
use crate::vmbt::{DroughtEvent, EventCatalog};

fn csv_err(e: csv::Error) -> Error {
    Error::Csv {
        path: "<output>".into(),
        source: e,
    }
}

fn write_rows<W: Write, R: Serialize>(out: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io("<output>", e))
}

/// serde only emits headers alongside the first record, so empty tables get
/// an explicit header row.
fn write_table<W: Write, R: Serialize>(mut out: W, header: &[&str], rows: Vec<R>) -> Result<()> {
    if rows.is_empty() {
        let mut writer = csv::Writer::from_writer(&mut out);
        writer.write_record(header).map_err(csv_err)?;
        writer.flush().map_err(|e| Error::io("<output>", e))?;
        return Ok(());
    }
    write_rows(out, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub key: String,
    pub tau: f64,
    pub start: usize,
    pub duration: usize,
    pub mean_availability: f64,
    pub threshold_abs: f64,
}

const CATALOG_HEADER: [&str; 6] = ["key", "tau", "start", "duration", "mean_availability", "threshold_abs"];

fn catalog_records(catalog: &EventCatalog) -> Vec<CatalogRecord> {
    let key = catalog.key.to_string();
    catalog
        .events
        .iter()
        .map(|e| CatalogRecord {
            key: key.clone(),
            tau: catalog.threshold_rel,
            start: e.start,
            duration: e.duration,
            mean_availability: e.mean_availability,
            threshold_abs: e.threshold_abs,
        })
        .collect()
}

/// `key,tau,start,duration,mean_availability,threshold_abs`
pub fn write_catalog_csv<W: Write>(out: W, catalog: &EventCatalog) -> Result<()> {
    write_table(out, &CATALOG_HEADER, catalog_records(catalog))
}

/// JSON array of catalog records with the CSV's fields.
pub fn write_catalog_json<W: Write>(mut out: W, catalog: &EventCatalog) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &catalog_records(catalog))?;
    out.write_all(b"\n").map_err(|e| Error::io("<output>", e))
}

/// Reads a catalog CSV back. `key` and `tau` are taken from the caller so
/// that empty catalogs round-trip too.
pub fn read_catalog_csv<R: Read>(input: R, key: SeriesKey, tau: f64) -> Result<EventCatalog> {
    let mut reader = csv::Reader::from_reader(input);
    let mut events = Vec::new();
    let mut threshold_abs = f64::NAN;
    for record in reader.deserialize::<CatalogRecord>() {
        let r = record.map_err(csv_err)?;
        if r.key != key.to_string() || r.tau != tau {
            return Err(Error::Schema(format!(
                "catalog record for {} at {} found in the file for {key} at {tau}",
                r.key, r.tau
            )));
        }
        if r.duration == 0 {
            return Err(Error::Schema("catalog event with zero duration".into()));
        }
        threshold_abs = r.threshold_abs;
        events.push(DroughtEvent {
            start: r.start,
            duration: r.duration,
            threshold_rel: tau,
            threshold_abs: r.threshold_abs,
            mean_availability: r.mean_availability,
        });
    }
    Ok(EventCatalog {
        key,
        threshold_rel: tau,
        threshold_abs,
        approximate: false,
        events,
    })
}

pub fn read_catalog_file(path: &Path, key: SeriesKey, tau: f64) -> Result<EventCatalog> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_catalog_csv(std::io::BufReader::new(file), key, tau)
}

#[derive(Serialize)]
struct FrequencyRecord<'a> {
    key: &'a str,
    tau: f64,
    duration_h: usize,
    freq_per_year: f64,
}

/// `key,tau,duration_h,freq_per_year`
pub fn write_frequency<W: Write>(out: W, curves: &[(SeriesKey, FrequencyCurve)]) -> Result<()> {
    let keys: Vec<String> = curves.iter().map(|(k, _)| k.to_string()).collect();
    let rows = curves
        .iter()
        .zip(&keys)
        .flat_map(|((_, c), key)| {
            c.points.iter().map(move |p| FrequencyRecord {
                key,
                tau: c.tau,
                duration_h: p.duration,
                freq_per_year: p.per_year,
            })
        })
        .collect();
    write_table(out, &["key", "tau", "duration_h", "freq_per_year"], rows)
}

#[derive(Serialize)]
struct ReturnRecord<'a> {
    key: &'a str,
    tau: f64,
    duration_h: usize,
    period_years: f64,
}

/// `key,tau,duration_h,period_years`
pub fn write_return_periods<W: Write>(
    out: W,
    periods: &[(SeriesKey, f64, Vec<ReturnPeriod>)],
) -> Result<()> {
    let keys: Vec<String> = periods.iter().map(|(k, _, _)| k.to_string()).collect();
    let rows = periods
        .iter()
        .zip(&keys)
        .flat_map(|((_, tau, ps), key)| {
            ps.iter().map(move |p| ReturnRecord {
                key,
                tau: *tau,
                duration_h: p.duration,
                period_years: p.years,
            })
        })
        .collect();
    write_table(out, &["key", "tau", "duration_h", "period_years"], rows)
}

#[derive(Serialize)]
struct MaxDurRecord<'a> {
    key: &'a str,
    tau: f64,
    group: String,
    duration_h: usize,
}

/// `key,tau,group,duration_h`
pub fn write_maxdur<W: Write>(out: W, tables: &[(SeriesKey, MaxDurationTable)]) -> Result<()> {
    let keys: Vec<String> = tables.iter().map(|(k, _)| k.to_string()).collect();
    let rows = tables
        .iter()
        .zip(&keys)
        .flat_map(|((_, t), key)| {
            t.groups.iter().map(move |(g, m)| MaxDurRecord {
                key,
                tau: t.tau,
                group: g.to_string(),
                duration_h: m.max_duration,
            })
        })
        .collect();
    write_table(out, &["key", "tau", "group", "duration_h"], rows)
}

#[derive(Serialize)]
struct EffectRecord<'a> {
    region: &'a str,
    metric: String,
    tech: &'a str,
    value_pct: Option<f64>,
}

/// `region,metric,tech,value_pct`; blank cells have an empty value.
pub fn write_effects<'a, W: Write>(out: W, rows: impl IntoIterator<Item = &'a EffectRow>) -> Result<()> {
    let records = rows
        .into_iter()
        .flat_map(|r| {
            r.values.iter().map(move |(tech, v)| EffectRecord {
                region: &r.region,
                metric: r.metric.to_string(),
                tech,
                value_pct: *v,
            })
        })
        .collect();
    write_table(out, &["region", "metric", "tech", "value_pct"], records)
}

#[derive(Serialize)]
struct MassRecord<'a> {
    region: &'a str,
    pair: String,
    k: usize,
    l: usize,
    duration_h: usize,
    score: u64,
    season: String,
    is_row_max: bool,
}

/// `region,pair,k,l,duration_h,score,season,is_row_max`
pub fn write_mass<W: Write>(
    out: W,
    rows: &[(String, Vec<MassEvent>, Option<MassEvent>)],
) -> Result<()> {
    let records = rows
        .iter()
        .flat_map(|(region, events, row_max)| {
            events.iter().map(move |e| MassRecord {
                region,
                pair: e.pair_label(),
                k: e.k,
                l: e.l,
                duration_h: e.duration(),
                score: e.score,
                season: e.season.to_string(),
                is_row_max: row_max.as_ref() == Some(e),
            })
        })
        .collect();
    write_table(
        out,
        &["region", "pair", "k", "l", "duration_h", "score", "season", "is_row_max"],
        records,
    )
}

#[derive(Serialize)]
struct MassReportRecord<'a> {
    region: &'a str,
    pair: String,
    score: Option<u64>,
    normalized_score: Option<f64>,
    is_row_max: bool,
    row_max_days: Option<u64>,
    normalized_duration: Option<f64>,
}

/// Long-form heatmap: `region,pair,score,normalized_score,is_row_max,row_max_days,normalized_duration`.
pub fn write_mass_report<W: Write>(out: W, report: &MassReport) -> Result<()> {
    let mut records = Vec::new();
    for row in &report.rows {
        for (i, pair) in report.pairs.iter().enumerate() {
            let is_max = row.row_max.as_ref().is_some_and(|m| m.pair == *pair);
            let max = row.row_max.as_ref().filter(|_| is_max);
            records.push(MassReportRecord {
                region: &row.region,
                pair: format!("{}/{}", pair.0, pair.1),
                score: row.scores[i],
                normalized_score: row.normalized[i],
                is_row_max: is_max,
                row_max_days: max.map(|m| m.duration_days),
                normalized_duration: max.map(|m| m.normalized_duration),
            });
        }
    }
    write_table(
        out,
        &[
            "region",
            "pair",
            "score",
            "normalized_score",
            "is_row_max",
            "row_max_days",
            "normalized_duration",
        ],
        records,
    )
}

#[derive(Serialize)]
struct StorageRecord<'a> {
    region: &'a str,
    scenario: &'a str,
    required_capacity: f64,
    discharge_start: Option<usize>,
    discharge_end: Option<usize>,
}

/// `region,scenario,required_capacity,discharge_start,discharge_end`
pub fn write_storage<W: Write>(out: W, rows: &[(String, String, DrawdownResult)]) -> Result<()> {
    let records = rows
        .iter()
        .map(|(region, scenario, r)| StorageRecord {
            region,
            scenario,
            required_capacity: r.required_capacity,
            discharge_start: r.discharge_interval.map(|i| i.0),
            discharge_end: r.discharge_interval.map(|i| i.1),
        })
        .collect();
    write_table(
        out,
        &["region", "scenario", "required_capacity", "discharge_start", "discharge_end"],
        records,
    )
}

#[derive(Serialize)]
struct CoincidenceRecord<'a> {
    region: &'a str,
    scenario: &'a str,
    event_start: usize,
    event_end: usize,
    intersection_h: usize,
    containment: f64,
    jaccard: f64,
}

/// `region,scenario,event_start,event_end,intersection_h,containment,jaccard`
pub fn write_coincidence<W: Write>(
    out: W,
    rows: &[(String, String, (usize, usize), Coincidence)],
) -> Result<()> {
    let records = rows
        .iter()
        .map(|(region, scenario, (s, e), c)| CoincidenceRecord {
            region,
            scenario,
            event_start: *s,
            event_end: *e,
            intersection_h: c.intersection_h,
            containment: c.containment,
            jaccard: c.jaccard,
        })
        .collect();
    write_table(
        out,
        &[
            "region",
            "scenario",
            "event_start",
            "event_end",
            "intersection_h",
            "containment",
            "jaccard",
        ],
        records,
    )
}
