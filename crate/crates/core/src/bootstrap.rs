//! Bias-corrected and accelerated (BCa) bootstrap intervals for AUC.
//!
//! Each replicate resamples subjects with replacement and reruns the whole
//! pipeline, knot placement included. Replicate `b` draws from its own RNG
//! stream derived from `(seed, b)` and results are stored by index, so the
//! interval does not depend on thread count or scheduling.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators;
use crate::pipeline::{self, SieveSettings};
use crate::rng;
use crate::sieve::{SieveFit, SieveParams};

/// Largest tolerated fraction of failed bootstrap replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acceleration {
    /// Leave-one-out jackknife estimate of the acceleration constant.
    Jackknife,
    /// `a = 0`, the bias-corrected (BC) interval; skips `n` refits.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub acceleration: Acceleration,
    /// Start replicate fits near the full-data solution.
    pub warm_start: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            replicates: 1000,
            level: 0.95,
            seed: 1,
            acceleration: Acceleration::Jackknife,
            warm_start: true,
        }
    }
}

impl BootstrapOptions {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(Error::InvalidArgument(format!(
                "at least 100 bootstrap replicates are required, got {}",
                self.replicates
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcaResult {
    pub t: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub replicates: usize,
    pub z0: f64,
    pub acceleration: f64,
    pub failures: usize,
    /// Every successful replicate gave the same AUC; the interval collapses
    /// to the point estimate.
    pub degenerate: bool,
}

impl BcaResult {
    pub const CSV_HEADER: &'static str = "t,estimate,lower,upper,level,B,z0,a,failures";

    pub fn csv_row(&self) -> String {
        let mut row = String::new();
        write!(
            row,
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.estimate,
            self.lower,
            self.upper,
            self.level,
            self.replicates,
            self.z0,
            self.acceleration,
            self.failures
        )
        .expect("writing to a String");
        row
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Linear-interpolation sample quantile (Hyndman and Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty sample");
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `z0 = Phi^-1(#{x < estimate} / B)`, with a count of 0 or `B` replaced by
/// 0.5 or `B - 0.5`.
pub fn bias_correction(replicates: &[f64], estimate: f64) -> f64 {
    let b = replicates.len() as f64;
    let below = replicates.iter().filter(|&&x| x < estimate).count() as f64;
    let count = if below == 0.0 {
        0.5
    } else if below == b {
        b - 0.5
    } else {
        below
    };
    standard_normal().inverse_cdf(count / b)
}

/// Acceleration from leave-one-out estimates:
/// `a = sum(d^3) / (6 (sum d^2)^(3/2))` with `d = mean - theta_(i)`.
pub fn jackknife_acceleration(leave_one_out: &[f64]) -> f64 {
    if leave_one_out.len() < 2 {
        return 0.0;
    }
    let mean = leave_one_out.iter().sum::<f64>() / leave_one_out.len() as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for &x in leave_one_out {
        let d = mean - x;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 == 0.0 {
        0.0
    } else {
        s3 / (6.0 * s2.powf(1.5))
    }
}

/// BCa endpoints from sorted replicate values.
pub fn bca_interval(sorted: &[f64], z0: f64, acceleration: f64, level: f64) -> (f64, f64) {
    let normal = standard_normal();
    let alpha = (1.0 - level) / 2.0;
    let adjust = |z: f64| {
        let shifted = z0 + z;
        normal.cdf(z0 + shifted / (1.0 - acceleration * shifted))
    };
    let p_lower = adjust(normal.inverse_cdf(alpha));
    let p_upper = adjust(normal.inverse_cdf(1.0 - alpha));
    (
        quantile_sorted(sorted, p_lower),
        quantile_sorted(sorted, p_upper),
    )
}

/// Plain percentile endpoints from sorted replicate values.
pub fn percentile_interval(sorted: &[f64], level: f64) -> (f64, f64) {
    let alpha = (1.0 - level) / 2.0;
    (
        quantile_sorted(sorted, alpha),
        quantile_sorted(sorted, 1.0 - alpha),
    )
}

fn sort_values(values: &mut [f64]) {
    values.sort_by(f64::total_cmp);
}

/// AUC at each horizon for one dataset; per-horizon failures are `None`.
fn aucs_for(
    dataset: &Dataset,
    horizons: &[f64],
    settings: &SieveSettings,
    start: Option<&SieveParams<f64>>,
) -> std::result::Result<Vec<Option<f64>>, String> {
    let fit = pipeline::fit_dataset(dataset, settings, start).map_err(|e| e.to_string())?;
    Ok(horizons
        .iter()
        .map(|&t| estimators::auc(&fit, t, settings.grid).ok())
        .collect())
}

fn warm_start(fit: &SieveFit<f64>) -> Result<SieveParams<f64>> {
    let params = &fit.params;
    let uniform = SieveParams::uniform(params.time_count(), params.marker_count());
    params.blend(&uniform, 0.9)
}

/// BCa interval for AUC at horizon `t`.
pub fn bca_auc(
    dataset: &Dataset,
    t: f64,
    settings: &SieveSettings,
    options: &BootstrapOptions,
) -> Result<BcaResult> {
    Ok(bca_auc_multi(dataset, &[t], settings, options)?
        .pop()
        .expect("one result per horizon"))
}

/// BCa intervals at several horizons, sharing one set of replicate fits.
pub fn bca_auc_multi(
    dataset: &Dataset,
    horizons: &[f64],
    settings: &SieveSettings,
    options: &BootstrapOptions,
) -> Result<Vec<BcaResult>> {
    options.validate()?;
    let fit = pipeline::fit_dataset(dataset, settings, None)?;
    let estimates = horizons
        .iter()
        .map(|&t| estimators::auc(&fit, t, settings.grid))
        .collect::<Result<Vec<f64>>>()?;
    let start = if options.warm_start {
        Some(warm_start(&fit)?)
    } else {
        None
    };
    let start = start.as_ref();

    let n = dataset.len();
    let replicate_aucs: Vec<std::result::Result<Vec<Option<f64>>, String>> = (0..options
        .replicates)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(options.seed, &[rng::label::BOOTSTRAP, b as u64]);
            let indices: Vec<usize> = (0..n).map(|_| stream.random_range(0..n)).collect();
            aucs_for(&dataset.resample(&indices), horizons, settings, start)
        })
        .collect();

    let jackknife: Vec<std::result::Result<Vec<Option<f64>>, String>> = match options.acceleration {
        Acceleration::None => Vec::new(),
        Acceleration::Jackknife => (0..n)
            .into_par_iter()
            .filter_map(|i| dataset.leave_one_out(i))
            .map(|subset| aucs_for(&subset, horizons, settings, start))
            .collect(),
    };

    horizons
        .iter()
        .enumerate()
        .map(|(h, &t)| {
            let mut values = Vec::with_capacity(options.replicates);
            let mut first_failure = None;
            for outcome in &replicate_aucs {
                match outcome {
                    Ok(per_horizon) => match per_horizon[h] {
                        Some(v) => values.push(v),
                        None => {
                            first_failure
                                .get_or_insert_with(|| format!("AUC undefined at t = {t}"));
                        }
                    },
                    Err(message) => {
                        first_failure.get_or_insert_with(|| message.clone());
                    }
                }
            }
            let failures = options.replicates - values.len();
            if failures as f64 > MAX_FAILURE_FRACTION * options.replicates as f64 {
                return Err(Error::TooManyFailures {
                    failed: failures,
                    total: options.replicates,
                    first: first_failure.unwrap_or_default(),
                });
            }
            let jack: Vec<f64> = jackknife
                .iter()
                .filter_map(|outcome| outcome.as_ref().ok().and_then(|v| v[h]))
                .collect();
            Ok(summarize(t, estimates[h], values, &jack, failures, options))
        })
        .collect()
}

fn summarize(
    t: f64,
    estimate: f64,
    mut values: Vec<f64>,
    leave_one_out: &[f64],
    failures: usize,
    options: &BootstrapOptions,
) -> BcaResult {
    sort_values(&mut values);
    let z0 = bias_correction(&values, estimate);
    let acceleration = match options.acceleration {
        Acceleration::Jackknife => jackknife_acceleration(leave_one_out),
        Acceleration::None => 0.0,
    };
    let degenerate = values.first() == values.last();
    let (lower, upper) = if degenerate {
        (estimate, estimate)
    } else {
        let (lo, hi) = bca_interval(&values, z0, acceleration, options.level);
        // keep the reported interval around the point estimate
        (
            lo.min(estimate).clamp(0.0, 1.0),
            hi.max(estimate).clamp(0.0, 1.0),
        )
    };
    BcaResult {
        t,
        estimate,
        lower,
        upper,
        level: options.level,
        replicates: options.replicates,
        z0,
        acceleration,
        failures,
        degenerate,
    }
}
