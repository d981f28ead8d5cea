//! Run configuration: TOML file, command-line overrides and validation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use drought_core::ingest::AvailabilitySchema;
use drought_core::{
    DurationGrid, MassConfig, SeasonFilter, Sizing, Tau, TechnologyWhitelist, ThresholdGrid,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration error tied to the field that caused it.
#[derive(Debug)]
pub struct Invalid {
    pub field: String,
    pub message: String,
}

impl Invalid {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid {}: {}", self.field, self.message)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSection,
    pub grid: GridSection,
    pub mass: MassSection,
    pub scenarios: Scenarios,
    pub storage: StorageSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub availability: Option<PathBuf>,
    pub capacities: Option<PathBuf>,
    /// Hourly demand `(region,hour_index,value)`; flat demand when absent.
    pub demand: Option<PathBuf>,
    pub schema: AvailabilitySchema,
    pub technologies: Vec<String>,
    /// Regions to analyse; all regions in the data when absent.
    pub regions: Option<Vec<String>>,
}

impl Default for InputSection {
    fn default() -> Self {
        InputSection {
            availability: None,
            capacities: None,
            demand: None,
            schema: AvailabilitySchema::default(),
            technologies: TechnologyWhitelist::default().iter().map(String::from).collect(),
            regions: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub taus: Vec<f64>,
    pub max_duration: usize,
    pub min_duration: usize,
    pub duration_step: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            taus: ThresholdGrid::default().levels().iter().map(|t| t.as_f64()).collect(),
            max_duration: drought_core::vmbt::DEFAULT_MAX_DURATION,
            min_duration: 1,
            duration_step: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeasonChoice {
    All,
    Winter,
}

impl From<SeasonChoice> for SeasonFilter {
    fn from(s: SeasonChoice) -> Self {
        match s {
            SeasonChoice::All => SeasonFilter::All,
            SeasonChoice::Winter => SeasonFilter::Winter,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassSection {
    pub cutoff: f64,
    pub included: Vec<f64>,
    /// Per-level integer weights; all ones when empty.
    pub weights: Vec<u32>,
    pub summer_months: Vec<u32>,
    /// Events eligible for the row maxima of the mass report.
    pub report_season: SeasonChoice,
}

impl Default for MassSection {
    fn default() -> Self {
        let base = MassConfig::default();
        MassSection {
            cutoff: base.cutoff.as_f64(),
            included: base.included.iter().map(|t| t.as_f64()).collect(),
            weights: Vec::new(),
            summer_months: base.summer_months,
            report_season: SeasonChoice::All,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenarios {
    pub island: bool,
    pub copperplate: bool,
}

impl Default for Scenarios {
    fn default() -> Self {
        Scenarios {
            island: true,
            copperplate: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageSection {
    pub margin: f64,
    pub efficiency: f64,
    /// Hourly demand used when no demand file is given.
    pub flat_demand: f64,
}

impl Default for StorageSection {
    fn default() -> Self {
        StorageSection {
            margin: 0.0,
            efficiency: 1.0,
            flat_demand: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Also write each catalog as JSON.
    pub emit_json: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            jobs: 0,
            emit_json: false,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub regions: Option<Vec<String>>,
    pub taus: Option<Vec<f64>>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a TOML file. Relative input paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid::new("--config", format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| Invalid::new("--config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.input.availability,
            &mut config.input.capacities,
            &mut config.input.demand,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if config.output.dir.is_relative() {
            config.output.dir = base.join(&config.output.dir);
        }
        Ok(config)
    }

    /// Applies flag values and records which fields they replaced.
    pub fn apply(&mut self, overrides: Overrides) -> FromFlags {
        let from = FromFlags {
            regions: overrides.regions.is_some(),
            taus: overrides.taus.is_some(),
        };
        if let Some(r) = overrides.regions {
            self.input.regions = Some(r);
        }
        if let Some(t) = overrides.taus {
            self.grid.taus = t;
        }
        if let Some(j) = overrides.jobs {
            self.output.jobs = j;
        }
        if let Some(o) = overrides.out {
            self.output.dir = o;
        }
        from
    }
}

/// Fields whose value came from the command line, for error messages.
#[derive(Debug, Clone, Copy, Default)]
pub struct FromFlags {
    pub regions: bool,
    pub taus: bool,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Plan {
    pub availability: PathBuf,
    pub capacities: PathBuf,
    pub demand: Option<PathBuf>,
    pub schema: AvailabilitySchema,
    pub whitelist: TechnologyWhitelist,
    pub regions: Option<BTreeSet<String>>,
    pub regions_from_flag: bool,
    pub taus: ThresholdGrid,
    pub durations: DurationGrid,
    pub duration_step: usize,
    pub mass: MassConfig,
    pub report_season: SeasonFilter,
    pub island: bool,
    pub copperplate: bool,
    pub sizing: Sizing,
    pub flat_demand: f64,
    pub out: PathBuf,
    pub jobs: usize,
    pub emit_json: bool,
    /// Hash of every setting that affects output content.
    pub config_hash: String,
    /// Hash of the settings that determine the catalogs.
    pub detect_hash: String,
}

fn required_file(field: &str, path: &Option<PathBuf>) -> Result<PathBuf, Invalid> {
    let path = path.as_ref().ok_or_else(|| Invalid::new(field, "is required"))?;
    if !path.is_file() {
        return Err(Invalid::new(field, format!("{} does not exist", path.display())));
    }
    Ok(path.clone())
}

fn levels(field: &str, values: &[f64]) -> Result<Vec<Tau>, Invalid> {
    if values.is_empty() {
        return Err(Invalid::new(field, "needs at least one level"));
    }
    let mut out: Vec<Tau> = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let tau = Tau::from_fraction(v).map_err(|e| Invalid::new(format!("{field}[{i}]"), e))?;
        if out.last().is_some_and(|&prev| prev >= tau) {
            return Err(Invalid::new(format!("{field}[{i}]"), "levels must be strictly increasing"));
        }
        out.push(tau);
    }
    Ok(out)
}

fn sha256_hex(value: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

impl RunConfig {
    pub fn validate(&self, from: FromFlags) -> Result<Plan, Invalid> {
        let availability = required_file("input.availability", &self.input.availability)?;
        let capacities = required_file("input.capacities", &self.input.capacities)?;
        let demand = match &self.input.demand {
            Some(_) => Some(required_file("input.demand", &self.input.demand)?),
            None => None,
        };
        if self.input.technologies.is_empty() {
            return Err(Invalid::new("input.technologies", "needs at least one technology"));
        }
        let region_field = if from.regions { "--regions" } else { "input.regions" };
        let regions = match &self.input.regions {
            Some(r) if r.is_empty() => {
                return Err(Invalid::new(region_field, "needs at least one region"))
            }
            Some(r) => Some(r.iter().cloned().collect()),
            None => None,
        };

        let tau_field = if from.taus { "--taus" } else { "grid.taus" };
        let taus = ThresholdGrid::new(levels(tau_field, &self.grid.taus)?)
            .map_err(|e| Invalid::new(tau_field, e))?;
        let g = &self.grid;
        if g.min_duration == 0 {
            return Err(Invalid::new("grid.min_duration", "must be at least 1"));
        }
        if g.duration_step == 0 {
            return Err(Invalid::new("grid.duration_step", "must be at least 1"));
        }
        let durations = DurationGrid::stepped(g.max_duration, g.min_duration, g.duration_step)
            .map_err(|e| Invalid::new("grid.max_duration", e))?;

        let cutoff = Tau::from_fraction(self.mass.cutoff).map_err(|e| Invalid::new("mass.cutoff", e))?;
        let included = levels("mass.included", &self.mass.included)?;
        let weights = if self.mass.weights.is_empty() {
            vec![1; included.len()]
        } else {
            self.mass.weights.clone()
        };
        let mass = MassConfig {
            cutoff,
            included,
            weights,
            summer_months: self.mass.summer_months.clone(),
            ..MassConfig::default()
        };
        if !mass.included.contains(&cutoff) {
            return Err(Invalid::new("mass.cutoff", "must be one of mass.included"));
        }
        mass.validate().map_err(|e| Invalid::new("mass", e))?;

        let s = &self.storage;
        if !(s.margin > -1.0 && s.margin.is_finite()) {
            return Err(Invalid::new("storage.margin", "must be finite and above -1"));
        }
        if !(s.efficiency > 0.0 && s.efficiency <= 1.0) {
            return Err(Invalid::new("storage.efficiency", "must lie in (0, 1]"));
        }
        if !(s.flat_demand > 0.0 && s.flat_demand.is_finite()) {
            return Err(Invalid::new("storage.flat_demand", "must be positive"));
        }
        if !self.scenarios.island && !self.scenarios.copperplate {
            return Err(Invalid::new("scenarios", "enable island, copperplate or both"));
        }

        // Output location and thread count never change output bytes.
        let mut content = self.clone();
        content.output.dir = PathBuf::new();
        content.output.jobs = 0;
        let detect_part = (&content.input, &content.grid, &content.scenarios);

        Ok(Plan {
            availability,
            capacities,
            demand,
            schema: self.input.schema.clone(),
            whitelist: TechnologyWhitelist::new(self.input.technologies.iter().cloned()),
            regions,
            regions_from_flag: from.regions,
            taus,
            durations,
            duration_step: g.duration_step,
            mass,
            report_season: self.mass.report_season.into(),
            island: self.scenarios.island,
            copperplate: self.scenarios.copperplate,
            sizing: Sizing {
                margin: s.margin,
                efficiency: s.efficiency,
            },
            flat_demand: s.flat_demand,
            out: self.output.dir.clone(),
            jobs: self.output.jobs,
            emit_json: self.output.emit_json,
            config_hash: sha256_hex(&content),
            detect_hash: sha256_hex(&detect_part),
        })
    }
}

impl Plan {
    /// Fails unless every mass level is part of the threshold grid.
    pub fn require_mass_levels(&self) -> Result<(), Invalid> {
        for (i, tau) in self.mass.included.iter().enumerate() {
            if !self.taus.contains(*tau) {
                return Err(Invalid::new(
                    format!("mass.included[{i}]"),
                    format!("level {tau} is not in the threshold grid"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let text = toml::to_string(&RunConfig::default()).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.grid.taus.len(), 19);
        assert_eq!(back.mass.included.len(), 14);
    }

    #[test]
    fn tau_errors_name_the_index() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.csv");
        std::fs::write(&f, "x").unwrap();
        let mut c = RunConfig::default();
        c.input.availability = Some(f.clone());
        c.input.capacities = Some(f);
        c.grid.taus = vec![0.5, 0.75, 1.2];
        let e = c.validate(FromFlags::default()).unwrap_err();
        assert_eq!(e.field, "grid.taus[2]");
        c.grid.taus = vec![0.5, 0.5];
        assert_eq!(c.validate(FromFlags { taus: true, regions: false }).unwrap_err().field, "--taus[1]");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[grid]\ntau = [0.5]\n").is_err());
    }
}
