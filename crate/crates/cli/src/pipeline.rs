//! The pipeline stages behind each subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use drought_core::export::{
    read_catalog_file, write_catalog_csv, write_catalog_json, write_coincidence, write_effects,
    write_frequency, write_mass, write_mass_report, write_maxdur, write_return_periods,
    write_storage,
};
use drought_core::ingest::Finding;
use drought_core::mass::{build_calendars, mass_report, score_pairs, top_event_overall, PairEvents};
use drought_core::series::{COPPERPLATE, PORTFOLIO};
use drought_core::stats::{
    aggregate_effects, balancing_effect, frequency_duration, max_duration, portfolio_effect,
    return_period,
};
use drought_core::storage::{coincidence, max_drawdown, net_series};
use drought_core::{
    build_copperplate, build_portfolio, generation_potential, load_availability, load_capacities,
    load_demand, sweep, validate_bundle, AvailabilitySeries, CapacityTable, DemandProfile, Error,
    Grouping, SeasonFilter, SeriesKey, SeriesSet, SweepResult, Tau, TimeAxis,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Invalid, Plan};
use crate::output::Staging;

const RUN_STATE: &str = "targets.json";
const CATALOG_DIR: &str = "catalogs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Island,
    Copperplate,
}

impl Scenario {
    fn label(self) -> &'static str {
        match self {
            Scenario::Island => "island",
            Scenario::Copperplate => "copperplate",
        }
    }
}

/// Loaded and filtered input data.
pub struct Inputs {
    pub series: SeriesSet,
    pub capacities: CapacityTable,
    pub axis: TimeAxis,
}

pub struct Target {
    pub key: SeriesKey,
    pub scenario: Scenario,
    pub series: AvailabilitySeries,
}

impl Target {
    fn is_portfolio(&self) -> bool {
        self.key.technology == PORTFOLIO
    }
}

fn region_field(plan: &Plan) -> &'static str {
    if plan.regions_from_flag {
        "--regions"
    } else {
        "input.regions"
    }
}

pub fn load_inputs(plan: &Plan) -> Result<Inputs> {
    let all = load_availability(&plan.availability, &plan.schema)?;
    let all_caps = load_capacities(&plan.capacities, &plan.whitelist)?;
    let keep = |key: &SeriesKey| {
        plan.whitelist.contains(&key.technology)
            && plan.regions.as_ref().is_none_or(|r| r.contains(&key.region))
    };
    let series: SeriesSet = all.into_iter().filter(|(k, _)| keep(k)).collect();
    let capacities: CapacityTable = all_caps
        .iter()
        .filter(|(k, _)| keep(k))
        .map(|(k, c)| (k.region.clone(), k.technology.clone(), c))
        .collect();
    if let Some(regions) = &plan.regions {
        for region in regions {
            if !series.keys().any(|k| &k.region == region) {
                return Err(Invalid::new(region_field(plan), format!("region {region} has no series")).into());
            }
        }
    }
    let Some(first) = series.values().next() else {
        return Err(Invalid::new(
            "input.availability",
            "no series for the selected regions and technologies",
        )
        .into());
    };
    let axis = *first.axis();
    for finding in validate_bundle(&series, &capacities).findings {
        match finding {
            Finding::AxisMismatch { key, .. } => {
                return Err(Invalid::new(
                    "input.availability",
                    format!("series {key} does not share the axis of the other series"),
                )
                .into());
            }
            other => eprintln!("warning: {}", describe(&other)),
        }
    }
    Ok(Inputs {
        series,
        capacities,
        axis,
    })
}

fn describe(finding: &Finding) -> String {
    match finding {
        Finding::CapacityWithoutSeries { key, capacity_mw } => {
            format!("{key} has {capacity_mw} MW installed but no availability series")
        }
        Finding::SeriesWithoutCapacity { key } => format!("{key} has a series but no capacity entry"),
        Finding::AxisMismatch { key, .. } => format!("{key} has a different time axis"),
    }
}

fn regions_of(inputs: &Inputs) -> Vec<String> {
    let mut regions: Vec<String> = inputs.series.keys().map(|k| k.region.clone()).collect();
    regions.dedup();
    regions
}

fn skip_empty(result: drought_core::Result<AvailabilitySeries>) -> Result<Option<AvailabilitySeries>> {
    match result {
        Ok(s) => Ok(Some(s)),
        Err(Error::EmptyComposite(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Series analysed under the enabled scenarios: every island technology
/// series and regional portfolio, then the copperplate composites.
pub fn build_targets(plan: &Plan, inputs: &Inputs, portfolios_only: bool) -> Result<Vec<Target>> {
    let mut targets = Vec::new();
    if plan.island {
        for region in regions_of(inputs) {
            if !portfolios_only {
                for (key, s) in inputs.series.range(SeriesKey::new(region.as_str(), "")..) {
                    if key.region != region {
                        break;
                    }
                    targets.push(Target {
                        key: key.clone(),
                        scenario: Scenario::Island,
                        series: s.clone(),
                    });
                }
            }
            if let Some(s) = skip_empty(build_portfolio(&region, &inputs.series, &inputs.capacities))? {
                targets.push(Target {
                    key: s.key().clone(),
                    scenario: Scenario::Island,
                    series: s,
                });
            }
        }
    }
    if plan.copperplate {
        let mut filters: Vec<Option<&str>> = Vec::new();
        if !portfolios_only {
            filters.extend(plan.whitelist.iter().map(Some));
        }
        filters.push(None);
        for filter in filters {
            if let Some(s) = skip_empty(build_copperplate(&inputs.series, &inputs.capacities, filter))? {
                targets.push(Target {
                    key: s.key().clone(),
                    scenario: Scenario::Copperplate,
                    series: s,
                });
            }
        }
    }
    if targets.is_empty() {
        bail!("no series to analyse under the enabled scenarios");
    }
    Ok(targets)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AxisRecord {
    start_year: i32,
    n_hours: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TargetRecord {
    key: String,
    scenario: Scenario,
    long_run_mean: f64,
    /// Installed capacity of an island technology series.
    capacity_mw: Option<f64>,
}

/// What `detect` leaves for the later stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunState {
    detect_hash: String,
    axis: AxisRecord,
    taus: Vec<f64>,
    targets: Vec<TargetRecord>,
    /// Generation potential per region, the weight of its effect row.
    weights: BTreeMap<String, f64>,
}

/// Catalogs of every target, from this run or from disk.
pub struct Detected {
    state: RunState,
    axis: TimeAxis,
    keys: Vec<(SeriesKey, Scenario)>,
    sweeps: BTreeMap<(Scenario, SeriesKey), SweepResult>,
}

impl Detected {
    fn targets(&self) -> impl Iterator<Item = &(SeriesKey, Scenario)> {
        self.keys.iter()
    }

    fn sweep(&self, key: &SeriesKey, scenario: Scenario) -> &SweepResult {
        &self.sweeps[&(scenario, key.clone())]
    }
}

fn catalog_path(key: &SeriesKey, tau: Tau, ext: &str) -> String {
    format!("{CATALOG_DIR}/{}_tau{tau}.{ext}", key.file_stem())
}

pub fn detect(plan: &Plan, inputs: &Inputs, staging: &mut Staging) -> Result<Detected> {
    let targets = build_targets(plan, inputs, false)?;
    let durations = plan.durations.clamped_to(inputs.axis.n_hours())?;
    let sweeps: Vec<SweepResult> = targets
        .par_iter()
        .map(|t| sweep(&t.series, &plan.taus, &durations))
        .collect::<drought_core::Result<_>>()?;

    staging.replace_dir(CATALOG_DIR);
    for (target, result) in targets.iter().zip(&sweeps) {
        for (&tau, catalog) in result {
            staging.write(&catalog_path(&target.key, tau, "csv"), |w| write_catalog_csv(w, catalog))?;
            if plan.emit_json {
                staging.write(&catalog_path(&target.key, tau, "json"), |w| {
                    write_catalog_json(w, catalog)
                })?;
            }
        }
    }

    let weights = regions_of(inputs)
        .into_iter()
        .map(|r| {
            let w = generation_potential(&r, &inputs.series, &inputs.capacities);
            (r, w)
        })
        .collect();
    let state = RunState {
        detect_hash: plan.detect_hash.clone(),
        axis: AxisRecord {
            start_year: inputs.axis.start_year(),
            n_hours: inputs.axis.n_hours(),
        },
        taus: plan.taus.levels().iter().map(|t| t.as_f64()).collect(),
        targets: targets
            .iter()
            .map(|t| TargetRecord {
                key: t.key.to_string(),
                scenario: t.scenario,
                long_run_mean: t.series.long_run_mean(),
                capacity_mw: match t.scenario {
                    Scenario::Island => inputs.capacities.get(&t.key),
                    Scenario::Copperplate => None,
                },
            })
            .collect(),
        weights,
    };
    let mut text = serde_json::to_string_pretty(&state)?;
    text.push('\n');
    staging.write_bytes(RUN_STATE, text.as_bytes())?;

    let keys = targets.iter().map(|t| (t.key.clone(), t.scenario)).collect();
    let sweeps = targets
        .into_iter()
        .zip(sweeps)
        .map(|(t, s)| ((t.scenario, t.key), s))
        .collect();
    Ok(Detected {
        state,
        axis: inputs.axis,
        keys,
        sweeps,
    })
}

/// Reads the catalogs a previous `detect` wrote to `out`.
pub fn load_detected(plan: &Plan, out: &Path) -> Result<Detected> {
    let state_path = out.join(RUN_STATE);
    if !state_path.is_file() {
        bail!(
            "no detection results in {}; run `drought detect` with this configuration first",
            out.display()
        );
    }
    let text = std::fs::read_to_string(&state_path)
        .with_context(|| format!("cannot read {}", state_path.display()))?;
    let state: RunState = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a detection record", state_path.display()))?;
    if state.detect_hash != plan.detect_hash {
        bail!(
            "the catalogs in {} were produced with different inputs, grid or scenarios; \
             rerun `drought detect` first",
            out.display()
        );
    }
    let axis = TimeAxis::new(state.axis.start_year, state.axis.n_hours)?;
    let mut keys = Vec::new();
    let mut sweeps = BTreeMap::new();
    for t in &state.targets {
        let key = SeriesKey::parse(&t.key)?;
        let mut result = SweepResult::new();
        for &tau in plan.taus.levels() {
            let relative = catalog_path(&key, tau, "csv");
            let path = out.join(&relative);
            if !path.is_file() {
                bail!("missing catalog {relative}; run `drought detect` first");
            }
            result.insert(tau, read_catalog_file(&path, key.clone(), tau.as_f64())?);
        }
        keys.push((key.clone(), t.scenario));
        sweeps.insert((t.scenario, key), result);
    }
    Ok(Detected {
        state,
        axis,
        keys,
        sweeps,
    })
}

pub fn stats(detected: &Detected, staging: &Staging) -> Result<()> {
    let years = detected.axis.n_years() as u64;
    let mut curves = Vec::new();
    let mut periods = Vec::new();
    let mut tables = Vec::new();
    for (key, scenario) in detected.targets() {
        for (tau, catalog) in detected.sweep(key, *scenario) {
            let curve = frequency_duration(catalog, years)?;
            periods.push((key.clone(), tau.as_f64(), return_period(&curve)));
            curves.push((key.clone(), curve));
            for grouping in [Grouping::Overall, Grouping::PerYear, Grouping::PerMonth] {
                tables.push((key.clone(), max_duration(catalog, &detected.axis, grouping)));
            }
        }
    }
    staging.write("frequency.csv", |w| write_frequency(w, &curves))?;
    staging.write("return_periods.csv", |w| write_return_periods(w, &periods))?;
    staging.write("maxdur.csv", |w| write_maxdur(w, &tables))
}

pub fn effects(plan: &Plan, detected: &Detected, staging: &Staging) -> Result<()> {
    if !plan.island {
        return Err(Invalid::new("scenarios.island", "effects need the island scenario").into());
    }
    let techs: Vec<String> = plan.whitelist.iter().map(String::from).collect();
    let mut balancing_cols = techs.clone();
    balancing_cols.push(PORTFOLIO.to_string());

    let copperplate: BTreeMap<String, SweepResult> = detected
        .targets()
        .filter(|(_, s)| *s == Scenario::Copperplate)
        .map(|(k, s)| (k.technology.clone(), detected.sweep(k, *s).clone()))
        .collect();
    let capacity: BTreeMap<&str, Option<f64>> = detected
        .state
        .targets
        .iter()
        .map(|t| (t.key.as_str(), t.capacity_mw))
        .collect();

    let mut by_region: BTreeMap<String, BTreeMap<String, SweepResult>> = BTreeMap::new();
    for (key, scenario) in detected.targets().filter(|(_, s)| *s == Scenario::Island) {
        let installed = capacity[key.to_string().as_str()].unwrap_or(0.0) > 0.0;
        if key.technology == PORTFOLIO || installed {
            by_region
                .entry(key.region.clone())
                .or_default()
                .insert(key.technology.clone(), detected.sweep(key, *scenario).clone());
        }
    }

    let mut rows = Vec::new();
    for (region, sweeps) in &by_region {
        let Some(portfolio) = sweeps.get(PORTFOLIO) else {
            continue;
        };
        rows.push(portfolio_effect(region, &techs, sweeps, portfolio, &plan.taus));
        if plan.copperplate {
            rows.push(balancing_effect(region, &balancing_cols, sweeps, &copperplate, &plan.taus));
        }
    }
    if rows.is_empty() {
        bail!("no region has a portfolio to compare against");
    }
    let table = aggregate_effects(rows, &detected.state.weights)?;
    staging.write("effects.csv", |w| write_effects(w, table.rows.iter().chain(&table.averages)))
}

/// Scored year pairs of every portfolio target, keyed by its region label.
fn score_portfolios(plan: &Plan, detected: &Detected) -> Result<Vec<(SeriesKey, Scenario, Vec<PairEvents>)>> {
    plan.require_mass_levels()?;
    detected
        .targets()
        .filter(|(k, _)| k.technology == PORTFOLIO)
        .map(|(key, scenario)| {
            let calendars = build_calendars(detected.sweep(key, *scenario), &detected.axis, &plan.mass)?;
            let pairs = score_pairs(&calendars, &detected.axis, &plan.mass)?;
            Ok((key.clone(), *scenario, pairs))
        })
        .collect()
}

pub fn mass(plan: &Plan, detected: &Detected, staging: &Staging) -> Result<()> {
    let scored = score_portfolios(plan, detected)?;
    if scored.is_empty() {
        bail!("drought mass needs a portfolio series; none was detected");
    }
    let rows: Vec<(String, Vec<_>, Option<_>)> = scored
        .iter()
        .map(|(key, _, pairs)| {
            let events = pairs.iter().flat_map(|p| p.events.iter().cloned()).collect();
            let top = top_event_overall(pairs, plan.report_season).cloned();
            (key.region.clone(), events, top)
        })
        .collect();
    let labelled: Vec<(String, Vec<PairEvents>)> = scored
        .into_iter()
        .map(|(key, _, pairs)| (key.region, pairs))
        .collect();
    let report = mass_report(&labelled, plan.report_season);
    staging.write("mass.csv", |w| write_mass(w, &rows))?;
    staging.write("mass_report.csv", |w| write_mass_report(w, &report))
}

fn demand_for(plan: &Plan, target: &Target, regions: &[String], user: Option<&BTreeMap<String, Vec<f64>>>) -> Result<DemandProfile> {
    let n = target.series.len();
    let Some(user) = user else {
        return Ok(DemandProfile::flat(n, plan.flat_demand)?);
    };
    let lookup = |region: &str| -> Result<&Vec<f64>> {
        let values = user
            .get(region)
            .ok_or_else(|| Invalid::new("input.demand", format!("no demand for region {region}")))?;
        if values.len() != n {
            return Err(Invalid::new(
                "input.demand",
                format!("demand for {region} has {} hours, availability {n}", values.len()),
            )
            .into());
        }
        Ok(values)
    };
    let values = if target.key.region == COPPERPLATE {
        let mut total = vec![0.0; n];
        for region in regions {
            for (t, v) in total.iter_mut().zip(lookup(region)?) {
                *t += v;
            }
        }
        total
    } else {
        lookup(&target.key.region)?.clone()
    };
    Ok(DemandProfile::user_supplied(values)?)
}

pub fn storage(plan: &Plan, inputs: &Inputs, detected: &Detected, staging: &Staging) -> Result<()> {
    let targets = build_targets(plan, inputs, true)?;
    let scored = score_portfolios(plan, detected)?;
    let user = plan.demand.as_ref().map(load_demand).transpose()?;
    let regions = regions_of(inputs);

    let mut storage_rows = Vec::new();
    let mut coincidence_rows = Vec::new();
    for target in targets.iter().filter(|t| t.is_portfolio()) {
        let demand = demand_for(plan, target, &regions, user.as_ref())?;
        let net = net_series(&target.series, &demand, plan.sizing)?;
        let result = max_drawdown(&net);
        let scenario = target.scenario.label().to_string();
        let pairs = scored
            .iter()
            .find(|(k, s, _)| *k == target.key && *s == target.scenario)
            .map(|(_, _, p)| p);
        if let Some(top) = pairs.and_then(|p| top_event_overall(p, SeasonFilter::Winter)) {
            let span = (top.start(), top.end());
            coincidence_rows.push((
                target.key.region.clone(),
                scenario.clone(),
                span,
                coincidence(&result, span),
            ));
        }
        storage_rows.push((target.key.region.clone(), scenario, result));
    }
    staging.write("storage.csv", |w| write_storage(w, &storage_rows))?;
    staging.write("coincidence.csv", |w| write_coincidence(w, &coincidence_rows))
}
