//! Synthetic availability series for benchmarks and timing runs.

use drought_core::{AvailabilitySeries, SeriesKey, TimeAxis, HOURS_PER_YEAR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A wind-like series: AR(1) noise around a seasonal mean with a diurnal
/// ripple, clipped to [0, 1].
pub fn synthetic_series(years: usize, seed: u64) -> AvailabilitySeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = years * HOURS_PER_YEAR;
    let mut state = 0.0f64;
    let values = (0..n)
        .map(|h| {
            let day = (h % HOURS_PER_YEAR) as f64 / 24.0;
            let seasonal = 0.3 + 0.1 * (2.0 * std::f64::consts::PI * day / 365.0).cos();
            let diurnal = 0.03 * (2.0 * std::f64::consts::PI * (h % 24) as f64 / 24.0).sin();
            state = 0.98 * state + rng.gen_range(-0.04..0.04);
            (seasonal + diurnal + state).clamp(0.0, 1.0)
        })
        .collect();
    let axis = TimeAxis::new(1982, n).expect("whole years");
    AvailabilitySeries::new(SeriesKey::new("SYN", "onshore"), axis, values).expect("valid series")
}
