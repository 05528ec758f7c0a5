//! Synthetic interval-censored data: a Clayton copula couples an exponential
//! event time with a scaled beta marker, and a geometric number of noisy,
//! regularly spaced assessments censors the event time.
//!
//! Larger markers go with earlier events: the marker is drawn from the
//! reflected copula coordinate, `M = scale * Q(1 - p2)` with `Q` the beta
//! quantile function. With that orientation the population AUC at any
//! horizon is above one half for positive Kendall's tau.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::data::{Dataset, IntervalObservation};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Exponential hazard of the event time.
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Upper end of the marker range; the beta draw on [0, 1] is stretched to [0, scale].
    pub scale: f64,
    /// Kendall's tau between event time and marker.
    pub tau: f64,
    /// Target right-censoring rate.
    pub rho: f64,
    /// Spacing of scheduled assessments.
    pub gap: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lambda: std::f64::consts::LN_2 / 30.0,
            alpha: 2.35,
            beta: 1.87,
            scale: 10.0,
            tau: 0.2,
            rho: 0.5,
            gap: 6.0,
            n: 300,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("scale", self.scale),
            ("gap", self.gap),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        mu_from_tau(self.tau)?;
        calibrate_nu(self.rho, self.lambda, self.gap)?;
        Ok(())
    }

    /// Copula dependence parameter `mu`.
    pub fn mu(&self) -> Result<f64> {
        mu_from_tau(self.tau)
    }

    pub fn nu(&self) -> Result<f64> {
        calibrate_nu(self.rho, self.lambda, self.gap)
    }

    /// Event-time CDF `F1`.
    pub fn time_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -(-self.lambda * t).exp_m1()
        }
    }

    /// Marker CDF `F2`.
    pub fn marker_cdf(&self, m: f64) -> f64 {
        beta_reg(self.alpha, self.beta, (m / self.scale).clamp(0.0, 1.0))
    }
}

/// `mu = (1 + tau) / (1 - tau)`, so that `tau = (mu - 1) / (mu + 1)`.
pub fn mu_from_tau(tau: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!(
            "Kendall's tau must lie in [0, 1), got {tau}"
        )));
    }
    Ok((1.0 + tau) / (1.0 - tau))
}

/// Clayton copula `C(p1, p2)` with `theta = mu - 1`; `mu = 1` is independence.
pub fn clayton_cdf(mu: f64, p1: f64, p2: f64) -> f64 {
    let theta = mu - 1.0;
    if p1 <= 0.0 || p2 <= 0.0 {
        return 0.0;
    }
    if theta == 0.0 {
        return p1 * p2;
    }
    (p1.powf(-theta) + p2.powf(-theta) - 1.0).powf(-1.0 / theta)
}

/// One draw from the Clayton copula by conditional inversion.
pub fn clayton_pair<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.random();
    let w: f64 = rng.random();
    let theta = mu - 1.0;
    if theta <= 0.0 {
        return (u, w);
    }
    let v = ((w.powf(-theta / (1.0 + theta)) - 1.0) * u.powf(-theta) + 1.0).powf(-1.0 / theta);
    (u, v)
}

/// Success probability of the assessment-count distribution giving right
/// censoring rate `rho` when `T ~ Exp(lambda)` and assessments are `gap` apart,
/// ignoring schedule noise: `rho = nu a / (1 - (1 - nu) a)`, `a = exp(-lambda gap)`.
pub fn calibrate_nu(rho: f64, lambda: f64, gap: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "censoring rate must lie in (0, 1), got {rho}"
        )));
    }
    let a = (-lambda * gap).exp();
    let nu = rho * (1.0 - a) / (a * (1.0 - rho));
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "censoring rate {rho} is unreachable with lambda = {lambda}, gap = {gap} (nu = {nu})"
        )));
    }
    Ok(nu)
}

/// Beta quantile by bisection on the regularized incomplete beta function.
pub fn beta_inv(p: f64, alpha: f64, beta: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(alpha, beta, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Latent truth for one simulated subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentSubject {
    pub event_time: f64,
    pub marker: f64,
}

fn simulate_subject(
    config: &SimConfig,
    mu: f64,
    assessments: &Geometric,
    rng: &mut Stream,
) -> Result<(IntervalObservation, LatentSubject)> {
    let (p1, p2) = clayton_pair(mu, rng);
    let event_time = -(-p1).ln_1p() / config.lambda;
    let marker = config.scale * beta_inv(1.0 - p2, config.alpha, config.beta);
    let count = 1 + assessments.sample(rng);
    let half_width = config.gap / 6.0;

    let mut prev: Option<f64> = None;
    let mut observation = None;
    for k in 1..=count {
        let s = k as f64 * config.gap + rng.random_range(-half_width..half_width);
        if event_time <= s {
            observation = Some(match prev {
                None => IntervalObservation::left(s, marker)?,
                Some(u) => IntervalObservation::interval(u, s, marker)?,
            });
            break;
        }
        prev = Some(s);
    }
    let observation = match observation {
        Some(obs) => obs,
        None => IntervalObservation::right(prev.expect("at least one assessment"), marker)?,
    };
    debug_assert!(
        observation.u() < event_time || observation.status() == crate::CensorStatus::Left
    );
    Ok((observation, LatentSubject { event_time, marker }))
}

/// Dataset plus latent truth. Time and marker bounds are the observed maxima.
pub fn gen_with_latent(config: &SimConfig) -> Result<(Dataset, Vec<LatentSubject>)> {
    config.validate()?;
    let mu = config.mu()?;
    let assessments = Geometric::new(config.nu()?)
        .map_err(|e| Error::InvalidArgument(format!("assessment count distribution: {e}")))?;
    let mut rng = rng::stream(config.seed, &[rng::label::DATASET]);
    let mut observations = Vec::with_capacity(config.n);
    let mut latent = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let (obs, truth) = simulate_subject(config, mu, &assessments, &mut rng)?;
        observations.push(obs);
        latent.push(truth);
    }
    Ok((Dataset::new(observations)?, latent))
}

pub fn gen_dataset(config: &SimConfig) -> Result<Dataset> {
    Ok(gen_with_latent(config)?.0)
}

pub fn write_latent_csv<W: Write>(latent: &[LatentSubject], mut out: W) -> Result<()> {
    writeln!(out, "t_true,m")?;
    for s in latent {
        writeln!(out, "{},{}", s.event_time, s.marker)?;
    }
    Ok(())
}

/// Number of marker grid points used by [`true_auc`].
pub const ORACLE_GRID: usize = 20_001;

/// Population AUC at horizon `t` under `config`'s copula model.
///
/// Cases have `T <= t`, controls `T > t`; a subject is called positive when
/// its marker exceeds the threshold. TP and FP are evaluated analytically on
/// a uniform marker grid, FP is inverted by linear interpolation on a
/// uniform FP grid, and the ROC curve is integrated by the trapezoid rule.
pub fn true_auc(t: f64, config: &SimConfig) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {t}"
        )));
    }
    let mu = config.mu()?;
    let f1 = config.time_cdf(t);
    // Pr(M > m) = Pr(p2 < v) with v = 1 - F2(m); cases and controls split that
    // probability as C(F1, v) and v - C(F1, v).
    let sweep: Vec<(f64, f64)> = (0..ORACLE_GRID)
        .map(|i| {
            let m = config.scale * (ORACLE_GRID - 1 - i) as f64 / (ORACLE_GRID - 1) as f64;
            let v = 1.0 - config.marker_cdf(m);
            let both = clayton_cdf(mu, f1, v);
            let fp = ((v - both) / (1.0 - f1)).clamp(0.0, 1.0);
            let tp = (both / f1).clamp(0.0, 1.0);
            (fp, tp)
        })
        .collect();

    let grid = ORACLE_GRID;
    let mut roc = Vec::with_capacity(grid);
    let mut j = 0;
    for g in 0..grid {
        let p = g as f64 / (grid - 1) as f64;
        while j + 1 < sweep.len() && sweep[j + 1].0 < p {
            j += 1;
        }
        let value = if j + 1 >= sweep.len() {
            sweep[j].1
        } else {
            let (a, b) = (sweep[j], sweep[j + 1]);
            if b.0 > a.0 {
                a.1 + (b.1 - a.1) * ((p - a.0) / (b.0 - a.0)).clamp(0.0, 1.0)
            } else {
                b.1
            }
        };
        roc.push((p, value));
    }
    Ok(crate::estimators::trapezoid(&roc))
}

/// One equal-width histogram bin of knot anchors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub fraction: f64,
}

/// Histogram of the current status times (knot anchors) in `bins`
/// equal-width bins spanning the observed anchor range.
pub fn current_status_histogram(dataset: &Dataset, bins: usize) -> Result<Vec<AnchorBin>> {
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".into(),
        ));
    }
    let anchors = dataset.anchors();
    let lo = anchors.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = anchors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = anchors.len() as f64;
    if hi == lo {
        return Ok(vec![AnchorBin {
            lower: lo,
            upper: hi,
            count: anchors.len(),
            fraction: 1.0,
        }]);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for a in &anchors {
        let idx = (((a - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| AnchorBin {
            lower: lo + i as f64 * width,
            upper: if i + 1 == bins {
                hi
            } else {
                lo + (i + 1) as f64 * width
            },
            count,
            fraction: count as f64 / n,
        })
        .collect())
}

pub fn write_histogram_csv<W: Write>(bins: &[AnchorBin], mut out: W) -> Result<()> {
    writeln!(out, "lower,upper,count,fraction")?;
    for b in bins {
        writeln!(out, "{},{},{},{}", b.lower, b.upper, b.count, b.fraction)?;
    }
    Ok(())
}

pub fn mean_anchor(dataset: &Dataset) -> f64 {
    let anchors = dataset.anchors();
    anchors.iter().sum::<f64>() / anchors.len() as f64
}
