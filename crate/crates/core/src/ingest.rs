//! Loading and validation of availability-factor series and capacity tables.
//!
//! Two availability layouts are understood:
//!
//! * long: one row per `(region, technology, hour_index, value)`
//! * wide: an `hour_index` column followed by one column per series, headed
//!   `region:technology`
//!
//! Files ending in `.gz` are decompressed transparently. Missing hours are a
//! hard error; nothing is interpolated.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AvailabilitySeries, CapacityTable, SeriesKey, TimeAxis, HOURS_PER_YEAR};

/// Series keyed and ordered by `(region, technology)`.
pub type SeriesSet = BTreeMap<SeriesKey, AvailabilitySeries>;

/// Column names for the long availability layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LongColumns {
    pub region: String,
    pub technology: String,
    pub hour_index: String,
    pub value: String,
}

impl Default for LongColumns {
    fn default() -> Self {
        LongColumns {
            region: "region".into(),
            technology: "technology".into(),
            hour_index: "hour_index".into(),
            value: "value".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "lowercase")]
pub enum AvailabilityLayout {
    Long(LongColumns),
    Wide { hour_index: String },
}

impl Default for AvailabilityLayout {
    fn default() -> Self {
        AvailabilityLayout::Long(LongColumns::default())
    }
}

/// How to read an availability file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AvailabilitySchema {
    pub layout: AvailabilityLayout,
    /// Calendar year of hour index 0.
    pub start_year: i32,
}

impl Default for AvailabilitySchema {
    fn default() -> Self {
        AvailabilitySchema {
            layout: AvailabilityLayout::default(),
            start_year: 1982,
        }
    }
}

/// Technologies accepted in capacity tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TechnologyWhitelist(BTreeSet<String>);

impl TechnologyWhitelist {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TechnologyWhitelist(labels.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, technology: &str) -> bool {
        self.0.contains(technology)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for TechnologyWhitelist {
    fn default() -> Self {
        TechnologyWhitelist::new(["pv", "onshore", "offshore"])
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<Box<dyn Read>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let inner: Box<dyn Read> = if is_gzip(path) {
        Box::new(GzDecoder::new(BufReader::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(inner))
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|ext| ext == "gz")
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::Schema(format!("{}: missing column {name:?}", path.display()))
    })
}

fn parse_hour(text: &str, row: usize) -> Result<usize> {
    text.parse()
        .map_err(|_| Error::Schema(format!("data row {row}: hour index {text:?} is not a non-negative integer")))
}

fn parse_value(text: &str, row: usize) -> Result<f64> {
    let value: f64 = text
        .parse()
        .map_err(|_| Error::Schema(format!("data row {row}: value {text:?} is not a number")))?;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Range {
            row,
            message: format!("availability factor {value} is outside [0, 1]"),
        });
    }
    Ok(value)
}

/// Collects values per key while loading; unset hours hold NaN.
#[derive(Default)]
struct Accumulator {
    series: BTreeMap<SeriesKey, Vec<f64>>,
}

impl Accumulator {
    fn put(&mut self, key: &SeriesKey, hour: usize, value: f64) -> Result<()> {
        let values = match self.series.get_mut(key) {
            Some(v) => v,
            None => self.series.entry(key.clone()).or_default(),
        };
        if hour >= values.len() {
            values.resize(hour + 1, f64::NAN);
        }
        if !values[hour].is_nan() {
            return Err(Error::Duplicate {
                key: key.to_string(),
                at: format!("hour {hour}"),
            });
        }
        values[hour] = value;
        Ok(())
    }

    fn finish(self, start_year: i32) -> Result<SeriesSet> {
        let mut out = SeriesSet::new();
        for (key, mut values) in self.series {
            let n = values.len().div_ceil(HOURS_PER_YEAR) * HOURS_PER_YEAR;
            values.resize(n, f64::NAN);
            if let Some(hour) = values.iter().position(|v| v.is_nan()) {
                return Err(Error::Gap {
                    key: key.to_string(),
                    hour,
                });
            }
            let axis = TimeAxis::new(start_year, n)?;
            let series = AvailabilitySeries::new(key.clone(), axis, values)?;
            out.insert(key, series);
        }
        Ok(out)
    }
}

/// Loads every series in an availability file.
///
/// Data rows are numbered from 1, excluding the header, in error messages.
pub fn load_availability(path: impl AsRef<Path>, schema: &AvailabilitySchema) -> Result<SeriesSet> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let mut acc = Accumulator::default();

    match &schema.layout {
        AvailabilityLayout::Long(cols) => {
            let region = column(&headers, &cols.region, path)?;
            let technology = column(&headers, &cols.technology, path)?;
            let hour = column(&headers, &cols.hour_index, path)?;
            let value = column(&headers, &cols.value, path)?;
            let mut key = SeriesKey::new("", "");
            for (i, record) in reader.records().enumerate() {
                let row = i + 1;
                let record = record.map_err(|e| Error::csv(path, e))?;
                if record[region] != key.region || record[technology] != key.technology {
                    key = SeriesKey::new(&record[region], &record[technology]);
                }
                let h = parse_hour(&record[hour], row)?;
                let v = parse_value(&record[value], row)?;
                acc.put(&key, h, v)?;
            }
        }
        AvailabilityLayout::Wide { hour_index } => {
            let hour = column(&headers, hour_index, path)?;
            let keys = headers
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != hour)
                .map(|(i, name)| Ok((i, SeriesKey::parse(name)?)))
                .collect::<Result<Vec<_>>>()?;
            for (i, record) in reader.records().enumerate() {
                let row = i + 1;
                let record = record.map_err(|e| Error::csv(path, e))?;
                let h = parse_hour(&record[hour], row)?;
                for (col, key) in &keys {
                    let v = parse_value(&record[*col], row)?;
                    acc.put(key, h, v)?;
                }
            }
        }
    }
    acc.finish(schema.start_year)
}

fn create_writer(path: &Path) -> Result<csv::Writer<Box<dyn Write>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let inner: Box<dyn Write> = if is_gzip(path) {
        Box::new(GzEncoder::new(BufWriter::new(file), Compression::default()))
    } else {
        Box::new(BufWriter::new(file))
    };
    Ok(csv::Writer::from_writer(inner))
}

/// Writes series in the long layout with default column names.
pub fn write_availability<'a>(
    path: impl AsRef<Path>,
    series: impl IntoIterator<Item = &'a AvailabilitySeries>,
) -> Result<()> {
    let path = path.as_ref();
    let mut writer = create_writer(path)?;
    let err = |e| Error::csv(path, e);
    writer
        .write_record(["region", "technology", "hour_index", "value"])
        .map_err(err)?;
    for s in series {
        for (h, v) in s.values().iter().enumerate() {
            writer
                .write_record([
                    s.key().region.as_str(),
                    s.key().technology.as_str(),
                    &h.to_string(),
                    &v.to_string(),
                ])
                .map_err(err)?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Loads a `region,technology,capacity_mw` table.
pub fn load_capacities(
    path: impl AsRef<Path>,
    whitelist: &TechnologyWhitelist,
) -> Result<CapacityTable> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let region = column(&headers, "region", path)?;
    let technology = column(&headers, "technology", path)?;
    let capacity = column(&headers, "capacity_mw", path)?;

    let mut table = CapacityTable::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let tech = &record[technology];
        if !whitelist.contains(tech) {
            return Err(Error::Schema(format!(
                "data row {row}: unknown technology {tech:?} (allowed: {})",
                whitelist.iter().collect::<Vec<_>>().join(", ")
            )));
        }
        let text = &record[capacity];
        let mw: f64 = text.parse().map_err(|_| {
            Error::Schema(format!("data row {row}: capacity {text:?} is not a number"))
        })?;
        if !(mw >= 0.0 && mw.is_finite()) {
            return Err(Error::Range {
                row,
                message: format!("capacity {mw} MW must be finite and non-negative"),
            });
        }
        let key = SeriesKey::new(&record[region], tech);
        if table.get(&key).is_some() {
            return Err(Error::Duplicate {
                key: key.to_string(),
                at: format!("data row {row}"),
            });
        }
        table.insert(key, mw)?;
    }
    Ok(table)
}

/// Loads hourly demand per region from `region,hour_index,value`.
/// Every region must cover the same contiguous hours from 0.
pub fn load_demand(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<f64>>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let region = column(&headers, "region", path)?;
    let hour = column(&headers, "hour_index", path)?;
    let value = column(&headers, "value", path)?;

    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let h = parse_hour(&record[hour], row)?;
        let text = &record[value];
        let v: f64 = text
            .parse()
            .map_err(|_| Error::Schema(format!("data row {row}: demand {text:?} is not a number")))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Range {
                row,
                message: format!("demand {v} must be finite and non-negative"),
            });
        }
        let values = out.entry(record[region].to_string()).or_default();
        if h >= values.len() {
            values.resize(h + 1, f64::NAN);
        }
        if !values[h].is_nan() {
            return Err(Error::Duplicate {
                key: record[region].to_string(),
                at: format!("hour {h}"),
            });
        }
        values[h] = v;
    }
    for (region, values) in &out {
        if let Some(hour) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Gap {
                key: region.clone(),
                hour,
            });
        }
    }
    Ok(out)
}

/// One inconsistency between loaded series and capacities.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    /// A positive capacity with no availability series to weight.
    CapacityWithoutSeries { key: SeriesKey, capacity_mw: f64 },
    /// A series that no capacity entry refers to.
    SeriesWithoutCapacity { key: SeriesKey },
    /// A series whose axis differs from the first series' axis.
    AxisMismatch {
        key: SeriesKey,
        expected: TimeAxis,
        found: TimeAxis,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Cross-checks a loaded bundle. Never fails; problems are reported.
pub fn validate_bundle(series: &SeriesSet, capacities: &CapacityTable) -> ValidationReport {
    let mut findings = Vec::new();
    for (key, capacity_mw) in capacities.iter() {
        if capacity_mw > 0.0 && !series.contains_key(key) {
            findings.push(Finding::CapacityWithoutSeries {
                key: key.clone(),
                capacity_mw,
            });
        }
    }
    for key in series.keys() {
        if capacities.get(key).is_none() {
            findings.push(Finding::SeriesWithoutCapacity { key: key.clone() });
        }
    }
    if let Some(reference) = series.values().next() {
        let expected = *reference.axis();
        for s in series.values().skip(1) {
            if *s.axis() != expected {
                findings.push(Finding::AxisMismatch {
                    key: s.key().clone(),
                    expected,
                    found: *s.axis(),
                });
            }
        }
    }
    ValidationReport { findings }
}
