//! Percentile bootstrap with per-resample deterministic random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 10_000,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(Error::invalid("bootstrap needs at least one resample"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid(format!(
                "confidence level {} not in (0, 1)",
                self.level
            )));
        }
        Ok(())
    }
}

/// Point estimate with a percentile interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Random stream for resample `index`. Depends only on `(seed, index)`, so
/// results do not depend on how resamples are scheduled across threads.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Evaluates a vector-valued statistic on the full sample and on every
/// resample, returning one interval per component.
pub fn bootstrap_multi<T, F>(
    units: &[T],
    statistic: F,
    config: &BootstrapConfig,
) -> Result<Vec<Interval>>
where
    T: Sync,
    F: Fn(&[&T]) -> Vec<f64> + Sync,
{
    config.validate()?;
    if units.is_empty() {
        return Err(Error::invalid("bootstrap over an empty sample"));
    }
    let full: Vec<&T> = units.iter().collect();
    let point = statistic(&full);
    let n = units.len();
    let replicates: Vec<Vec<f64>> = (0..config.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(config.seed, b as u64);
            let sample: Vec<&T> = (0..n).map(|_| &units[rng.random_range(0..n)]).collect();
            statistic(&sample)
        })
        .collect();
    let alpha = (1.0 - config.level) / 2.0;
    Ok((0..point.len())
        .map(|k| {
            let mut col: Vec<f64> = replicates.iter().map(|r| r[k]).collect();
            col.sort_by(f64::total_cmp);
            Interval {
                point: point[k],
                lo: quantile_sorted(&col, alpha),
                hi: quantile_sorted(&col, 1.0 - alpha),
            }
        })
        .collect())
}

/// Percentile bootstrap interval for a scalar statistic.
pub fn bootstrap_ci<T, F>(units: &[T], statistic: F, config: &BootstrapConfig) -> Result<Interval>
where
    T: Sync,
    F: Fn(&[&T]) -> f64 + Sync,
{
    Ok(bootstrap_multi(units, |s| vec![statistic(s)], config)?[0])
}

pub fn mean_of(sample: &[&f64]) -> f64 {
    sample.iter().copied().sum::<f64>() / sample.len() as f64
}
