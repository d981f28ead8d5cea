#![allow(dead_code)]

use drought_core::vmbt::DroughtEvent;
use drought_core::{AvailabilitySeries, EventCatalog, SeriesKey, Tau, Threshold, ThresholdGrid};
use rand::rngs::StdRng;
use rand::Rng;

pub fn key() -> SeriesKey {
    SeriesKey::new("SYN", "onshore")
}

pub fn series(values: Vec<f64>) -> AvailabilitySeries {
    AvailabilitySeries::unaligned(key(), 2000, values).expect("values lie in [0, 1]")
}

/// Random availability profile of length `n` drawn from one of several
/// shapes, so that ties, flat stretches and deep blocks all occur.
pub fn random_values(rng: &mut StdRng, n: usize) -> Vec<f64> {
    match rng.gen_range(0..5) {
        0 => (0..n).map(|_| rng.gen::<f64>()).collect(),
        // Coarse levels produce many equal window sums.
        1 => (0..n).map(|_| rng.gen_range(0..5) as f64 / 4.0).collect(),
        2 => {
            let mut x = rng.gen::<f64>();
            (0..n)
                .map(|_| {
                    x = (0.9 * x + 0.1 * rng.gen::<f64>() + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0);
                    x
                })
                .collect()
        }
        3 => {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..0.7)).collect();
            for _ in 0..rng.gen_range(0..4) {
                let len = rng.gen_range(1..=n.div_ceil(4));
                let at = rng.gen_range(0..=n - len.min(n));
                let level = rng.gen_range(0.0..0.2);
                v[at..(at + len).min(n)].iter_mut().for_each(|x| *x = level);
            }
            v
        }
        _ => (0..n)
            .map(|h| {
                let day = (h % 24) as f64 / 24.0 * std::f64::consts::TAU;
                (0.5 - 0.5 * day.cos()).max(0.0) * rng.gen_range(0.5..1.0)
            })
            .collect(),
    }
}

/// Values on a 2^-20 grid no larger than 0.1, so that scaling by 0.5, 2 or
/// 10 keeps every value exactly representable and inside [0, 1].
pub fn scalable_values(rng: &mut StdRng, n: usize) -> Vec<f64> {
    let max = (0.1 * (1u64 << 20) as f64) as u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| (2 * rng.gen_range(0..=max / 2)) as f64 / (1u64 << 20) as f64)
        .collect();
    if rng.gen_bool(0.5) {
        let len = rng.gen_range(1..=n.div_ceil(3));
        let at = rng.gen_range(0..=n - len);
        v[at..at + len].iter_mut().for_each(|x| *x = 0.0);
    }
    v
}

pub fn random_tau(rng: &mut StdRng) -> Tau {
    let levels = ThresholdGrid::default();
    levels.levels()[rng.gen_range(0..levels.len())]
}

fn window_sum(series: &AvailabilitySeries, start: usize, d: usize) -> u64 {
    series.fixed()[start..start + d].iter().sum()
}

/// Checks non-overlap, strict sub-threshold means and maximality of a
/// catalog produced with the full grid `n..=1`. Returns a description of the
/// first violation.
///
/// Maximality: for an event of duration `d` and any longer duration `D`, a
/// window of `D` hours enclosing the event and touching only hours that are
/// not claimed by events of duration `D` or more would have been tested and
/// claimed in pass `D`, so it must not qualify.
pub fn check_invariants(
    series: &AvailabilitySeries,
    threshold: &Threshold,
    catalog: &EventCatalog,
    maximality_span: usize,
) -> Result<(), String> {
    let n = series.len();
    let events = &catalog.events;
    for pair in events.windows(2) {
        if pair[0].end() >= pair[1].start {
            return Err(format!("events {:?} and {:?} overlap", pair[0], pair[1]));
        }
    }
    for e in events {
        if e.end() >= n {
            return Err(format!("event {e:?} exceeds the series"));
        }
        if !threshold.qualifies(window_sum(series, e.start, e.duration), e.duration)
            || e.mean_availability >= catalog.threshold_abs
        {
            return Err(format!("event {e:?} is not strictly below the threshold"));
        }
    }

    // Duration of the event owning each hour, 0 when unclaimed.
    let mut owner = vec![0usize; n];
    for e in events {
        owner[e.start..=e.end()].iter_mut().for_each(|o| *o = e.duration);
    }
    for e in events {
        check_enclosing(series, threshold, e, &owner, maximality_span)?;
    }
    Ok(())
}

fn check_enclosing(
    series: &AvailabilitySeries,
    threshold: &Threshold,
    e: &DroughtEvent,
    owner: &[usize],
    span: usize,
) -> Result<(), String> {
    let n = series.len();
    let top = e.duration.saturating_add(span).min(n);
    for big in e.duration + 1..=top {
        let first = (e.end() + 1).saturating_sub(big);
        let last = e.start.min(n - big);
        for s in first..=last {
            if owner[s..s + big].iter().any(|&o| o >= big) {
                continue;
            }
            if threshold.qualifies(window_sum(series, s, big), big) {
                return Err(format!(
                    "event {e:?} is enclosed by a qualifying {big}-hour window at {s}"
                ));
            }
        }
    }
    Ok(())
}

/// Reference maximum drawdown by enumerating every pair `t1 < t2`, with the
/// same tie rule: larger drop, then earlier `t1`, then later `t2`.
pub fn brute_drawdown(net: &[f64]) -> (f64, Option<(usize, usize)>) {
    let mut level = Vec::with_capacity(net.len());
    let mut acc = 0.0;
    for x in net {
        acc += x;
        level.push(acc);
    }
    let mut best = 0.0;
    let mut interval = None;
    for t1 in 0..level.len() {
        for t2 in t1 + 1..level.len() {
            let drop = level[t1] - level[t2];
            if drop > best {
                best = drop;
                interval = Some((t1, t2));
            }
        }
    }
    // Among the maximal drops, scanning t1 ascending then t2 ascending keeps
    // the earliest start; extend to its latest end.
    if let Some((t1, _)) = interval {
        let t2 = (t1 + 1..level.len())
            .filter(|&t2| level[t1] - level[t2] == best)
            .max();
        interval = t2.map(|t2| (t1, t2));
    }
    (best, interval)
}

/// A random net series on a coarse grid, so that equal drops occur.
pub fn random_net(rng: &mut StdRng, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        (0..n).map(|_| rng.gen_range(-4i32..=4) as f64 * 0.25).collect()
    } else {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }
}
