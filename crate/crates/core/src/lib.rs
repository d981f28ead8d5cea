//! Detection and statistics of variable renewable energy droughts in hourly
//! availability-factor time series.
//!
//! The pipeline runs:
//!
//! 1. [`ingest`]: load availability series and installed capacities.
//! 2. [`composite`]: capacity-weighted regional portfolios and the
//!    copperplate composite.
//! 3. [`vmbt`]: variable-duration mean-below-threshold event detection at a
//!    grid of thresholds relative to each series' long-run mean.
//! 4. [`stats`], [`mass`], [`storage`]: frequency-duration curves, maximum
//!    durations, portfolio/balancing effects, multi-threshold drought mass
//!    and a lossless-storage drawdown proxy.
//! 5. [`export`]: CSV/JSON tables.
//!
//! ```
//! use drought_core::{AvailabilitySeries, DurationGrid, SeriesKey, Tau, Threshold};
//!
//! let values = vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
//! let series = AvailabilitySeries::unaligned(SeriesKey::new("DE", "onshore"), 1982, values)?;
//! let threshold = Threshold::relative(&series, Tau::from_fraction(0.5)?);
//! let catalog = drought_core::detect_events(&series, &threshold, &DurationGrid::full(10, 1)?)?;
//! assert_eq!(catalog.events.len(), 1);
//! assert_eq!((catalog.events[0].start, catalog.events[0].duration), (0, 6));
//! # Ok::<(), drought_core::Error>(())
//! ```

pub mod composite;
mod error;
pub mod export;
pub mod ingest;
pub mod mass;
pub mod series;
pub mod stats;
pub mod storage;
pub mod vmbt;

pub use composite::{build_copperplate, build_portfolio, generation_potential, CompositeSpec};
pub use error::{Error, Result};
pub use ingest::{
    load_availability, load_capacities, load_demand, validate_bundle, AvailabilitySchema, SeriesSet,
    TechnologyWhitelist, ValidationReport,
};
pub use mass::{DroughtCalendar, MassConfig, MassEvent, Season, SeasonFilter};
pub use series::{AvailabilitySeries, CapacityTable, SeriesKey, TimeAxis, HOURS_PER_YEAR};
pub use stats::{FrequencyCurve, Grouping, MaxDurationTable};
pub use storage::{DemandProfile, DrawdownResult, Sizing};
pub use vmbt::{
    detect_events, oracle_detect, sweep, DroughtEvent, DurationGrid, EventCatalog, SweepResult,
    Tau, Threshold, ThresholdGrid,
};
