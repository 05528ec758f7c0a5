//! Projected gradient ascent over the capped simplex `{x >= 0, sum(x) <= 1}`.
//!
//! Steps are taken on the mean log-likelihood `loglik / n`, which has the same
//! maximiser as the summed form but keeps step sizes and the projected
//! gradient independent of the sample size. Every accepted step satisfies the
//! Armijo condition, so the accepted log-likelihood sequence is nondecreasing.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sieve::{feasibility_slack, sum_log, DesignRows, SieveFit, SieveParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Absolute tolerance on the change in the summed log-likelihood.
    pub loglik_tol: f64,
    /// Number of consecutive accepted steps that must each change the
    /// log-likelihood by at most `loglik_tol` before stopping. A single short
    /// backtracked step says little about convergence.
    #[serde(default = "default_patience")]
    pub patience: usize,
    /// Stop when `|P(theta + grad/n) - theta|_2` falls below this.
    pub pg_tol: f64,
    pub shrink: f64,
    pub initial_step: f64,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
    /// Start each line search from a Barzilai-Borwein step instead of
    /// `initial_step`.
    pub adaptive_step: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            loglik_tol: 1e-7,
            patience: default_patience(),
            pg_tol: 1e-6,
            shrink: 0.5,
            initial_step: 1.0,
            armijo: 1e-4,
            adaptive_step: false,
        }
    }
}

fn default_patience() -> usize {
    10
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("loglik_tol", self.loglik_tol),
            ("pg_tol", self.pg_tol),
            ("initial_step", self.initial_step),
            ("armijo", self.armijo),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "shrink factor must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if self.armijo >= 1.0 {
            return Err(Error::InvalidArgument(
                "armijo constant must be below 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ProjectedGradient,
    LoglikTolerance,
    /// Backtracking could not find an improving step; the iterate is
    /// optimal to working precision.
    LineSearchStalled,
    #[serde(rename = "max_iter")]
    MaxIterations,
}

/// Euclidean projection onto `{y >= 0, sum(y) <= 1}`.
pub fn project_capped_simplex<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cannot project non-finite value {bad}"
        )));
    }
    let mut out = x.to_vec();
    let mut scratch = Vec::with_capacity(x.len());
    project_in_place(&mut out, &mut scratch);
    Ok(out)
}

/// In-place projection. Clamping suffices when the clamped sum is within the
/// feasibility slack of 1; otherwise the sort-and-threshold simplex
/// projection puts the point on `sum = 1`.
fn project_in_place<T: Scalar>(x: &mut [T], scratch: &mut Vec<T>) {
    let slack = feasibility_slack::<T>(x.len());
    let mut sum = T::zero();
    for v in x.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
        sum = sum + *v;
    }
    // Large inputs lose a few ulps in the subtraction; a second pass on the
    // already-small result removes them.
    let mut passes = 0;
    while sum > T::one() + slack && passes < 4 {
        let threshold = simplex_threshold(x, scratch);
        sum = T::zero();
        for v in x.iter_mut() {
            *v = (*v - threshold).max(T::zero());
            sum = sum + *v;
        }
        passes += 1;
    }
}

fn simplex_threshold<T: Scalar>(x: &[T], sorted: &mut Vec<T>) -> T {
    sorted.clear();
    sorted.extend(x.iter().copied().filter(|&v| v > T::zero()));
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumulative = T::zero();
    let mut threshold = T::zero();
    for (i, &v) in sorted.iter().enumerate() {
        cumulative = cumulative + v;
        let candidate = (cumulative - T::one()) / T::from_usize_lossy(i + 1);
        if v - candidate > T::zero() {
            threshold = candidate;
        } else {
            break;
        }
    }
    threshold
}

/// Result of [`fit_with_history`]: the fit plus every accepted summed
/// log-likelihood, starting with the initial point.
#[derive(Debug, Clone)]
pub struct FitTrace<T> {
    pub fit: SieveFit<T>,
    pub history: Vec<T>,
}

/// Maximises the sieve log-likelihood. Starts from `init` when given,
/// otherwise from [`SieveParams::uniform`].
pub fn fit<T: Scalar>(
    design: &DesignRows<T>,
    options: &FitOptions,
    init: Option<&SieveParams<T>>,
) -> Result<SieveFit<T>> {
    Ok(run(design, options, init, false)?.fit)
}

pub fn fit_with_history<T: Scalar>(
    design: &DesignRows<T>,
    options: &FitOptions,
    init: Option<&SieveParams<T>>,
) -> Result<FitTrace<T>> {
    run(design, options, init, true)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn run<T: Scalar>(
    design: &DesignRows<T>,
    options: &FitOptions,
    init: Option<&SieveParams<T>>,
    record: bool,
) -> Result<FitTrace<T>> {
    options.validate()?;
    let n = design.rows();
    if n == 0 {
        return Err(Error::Data("cannot fit an empty design".into()));
    }
    let (p, q) = (design.time_count(), design.marker_count());
    let dim = design.n_params();
    let mut theta = match init {
        Some(start) if start.len() != dim => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: start.len(),
            })
        }
        Some(start) => start.as_slice().to_vec(),
        None => SieveParams::<T>::uniform(p, q).into_vec(),
    };

    let n_t = T::from_usize_lossy(n);
    let inv_n = T::one() / n_t;
    let loglik_tol = T::lit(options.loglik_tol) * inv_n;
    let pg_tol = T::lit(options.pg_tol);
    let shrink = T::lit(options.shrink);
    let armijo = T::lit(options.armijo);
    let initial_step = T::lit(options.initial_step);
    let min_step = T::lit(1e-30);
    let max_step = T::lit(1e12);

    let mut dots = vec![T::zero(); n];
    let mut cand_dots = vec![T::zero(); n];
    let mut grad = vec![T::zero(); dim];
    let mut prev_grad = vec![T::zero(); dim];
    let mut cand = vec![T::zero(); dim];
    let mut step_vec = vec![T::zero(); dim];
    let mut scratch = Vec::with_capacity(dim);

    design.dots_into(&theta, &mut dots);
    let mut value = sum_log(&dots) * inv_n;
    if !value.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let mut history = if record {
        vec![value * n_t]
    } else {
        Vec::new()
    };

    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut bb_step: Option<T> = None;
    let mut quiet_steps = 0;

    while iterations < options.max_iter {
        design.grad_from_dots_into(&dots, inv_n, &mut grad);

        if let (true, Some(_)) = (options.adaptive_step, bb_step) {
            // BB1 step from the last displacement and gradient change.
            let mut ss = T::zero();
            let mut sy = T::zero();
            for i in 0..dim {
                let y = grad[i] - prev_grad[i];
                ss = ss + step_vec[i] * step_vec[i];
                sy = sy + step_vec[i] * y;
            }
            bb_step = Some(if sy < T::zero() {
                (ss / -sy).max(min_step).min(max_step)
            } else {
                initial_step
            });
        }

        for i in 0..dim {
            cand[i] = theta[i] + grad[i];
        }
        project_in_place(&mut cand, &mut scratch);
        let pg_norm = cand
            .iter()
            .zip(&theta)
            .fold(T::zero(), |acc, (&c, &t)| acc + (c - t) * (c - t))
            .sqrt();
        if pg_norm <= pg_tol {
            stop = StopReason::ProjectedGradient;
            break;
        }

        let mut step = match (options.adaptive_step, bb_step) {
            (true, Some(s)) => s,
            _ => initial_step,
        };
        let mut accepted = None;
        let mut saw_finite = false;
        while step >= min_step {
            for i in 0..dim {
                cand[i] = theta[i] + step * grad[i];
            }
            project_in_place(&mut cand, &mut scratch);
            for i in 0..dim {
                step_vec[i] = cand[i] - theta[i];
            }
            let slope = dot(&grad, &step_vec);
            if slope <= T::zero() {
                break;
            }
            design.dots_into(&cand, &mut cand_dots);
            let cand_value = sum_log(&cand_dots) * inv_n;
            if cand_value.is_finite() {
                saw_finite = true;
                if cand_value >= value + armijo * slope {
                    accepted = Some(cand_value);
                    break;
                }
            }
            step = step * shrink;
        }

        let Some(new_value) = accepted else {
            if iterations == 0 && !saw_finite {
                return Err(Error::NoFeasibleAscent(
                    "every backtracked step from the initial point has zero likelihood".into(),
                ));
            }
            stop = StopReason::LineSearchStalled;
            break;
        };

        iterations += 1;
        std::mem::swap(&mut theta, &mut cand);
        std::mem::swap(&mut dots, &mut cand_dots);
        std::mem::swap(&mut grad, &mut prev_grad);
        let delta = new_value - value;
        value = new_value;
        if record {
            history.push(value * n_t);
        }
        if options.adaptive_step {
            bb_step = Some(step);
        }
        if delta.abs() <= loglik_tol {
            quiet_steps += 1;
            if quiet_steps >= options.patience {
                stop = StopReason::LoglikTolerance;
                break;
            }
        } else {
            quiet_steps = 0;
        }
    }

    let params = SieveParams::from_flat(p, q, theta)?;
    Ok(FitTrace {
        fit: SieveFit {
            params,
            time_knots: design.time_knots().clone(),
            marker_knots: design.marker_knots().clone(),
            loglik: value * n_t,
            iterations,
            stop_reason: stop,
            options: *options,
        },
        history,
    })
}

/// `|P(theta + grad/n) - theta|_2` at `params`, the stationarity measure the
/// optimizer stops on.
pub fn projected_gradient_norm<T: Scalar>(
    design: &DesignRows<T>,
    params: &SieveParams<T>,
) -> Result<T> {
    let n = design.rows();
    let mut dots = vec![T::zero(); n];
    design.dots_into(params.as_slice(), &mut dots);
    if dots.iter().any(|&d| d.is_nan() || d <= T::zero()) {
        return Err(Error::InfeasibleStart);
    }
    let mut grad = vec![T::zero(); design.n_params()];
    design.grad_from_dots_into(&dots, T::one() / T::from_usize_lossy(n), &mut grad);
    let theta = params.as_slice();
    let moved: Vec<T> = theta.iter().zip(&grad).map(|(&t, &g)| t + g).collect();
    let projected = project_capped_simplex(&moved)?;
    Ok(projected
        .iter()
        .zip(theta)
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_capped_simplex(&[0.6, 0.6]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            project_capped_simplex(&[-0.2, 0.3]).unwrap(),
            vec![0.0, 0.3]
        );
        assert_eq!(project_capped_simplex(&[2.0]).unwrap(), vec![1.0]);
        assert!(project_capped_simplex(&[f64::NAN, 0.1]).is_err());
    }

    #[test]
    fn projection_of_large_vectors_stays_feasible() {
        let x: Vec<f64> = (0..200).map(|i| 1e4 + (i as f64) * 0.37).collect();
        let y = project_capped_simplex(&x).unwrap();
        let s: f64 = y.iter().sum();
        assert!(y.iter().all(|&v| v >= 0.0));
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(project_capped_simplex(&y).unwrap(), y);
    }

    fn vector() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 1..40)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn projection_is_idempotent(x in vector()) {
            let once = project_capped_simplex(&x).unwrap();
            let twice = project_capped_simplex(&once).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn projection_is_nearest_feasible_point(
            x in vector(),
            raw in prop::collection::vec(0.0f64..1.0, 40),
            scale in 0.0f64..1.0,
        ) {
            let y: Vec<f64> = {
                let r = &raw[..x.len()];
                let s: f64 = r.iter().sum::<f64>().max(1e-12);
                r.iter().map(|v| v / s * scale).collect()
            };
            let px = project_capped_simplex(&x).unwrap();
            let dist = |a: &[f64]| a.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
            prop_assert!(dist(&px) <= dist(&y) + 1e-12);
            prop_assert!(px.iter().all(|&v| v >= 0.0));
            prop_assert!(px.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn options_validation() {
        assert!(FitOptions::default().validate().is_ok());
        let bad = FitOptions {
            shrink: 1.0,
            ..FitOptions::default()
        };
        assert!(bad.validate().is_err());
    }
}
