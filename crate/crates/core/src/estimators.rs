//! Plug-in cumulative/dynamic time-dependent ROC estimates from a sieve fit.
//!
//! At horizon `t`, with `F` the fitted joint CDF and `F2` the marker marginal,
//!
//! ```text
//! TP_t(m) = (F(t, tau_m) - F(t, m)) / F(t, tau_m)
//! FP_t(m) = (1 - F2(m) - F(t, tau_m) + F(t, m)) / (1 - F(t, tau_m))
//! ROC_t(p) = TP_t(FP_t^{-1}(p)),   AUC_t = integral of ROC_t over [0, 1]
//! ```

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sieve::SieveFit;
use crate::splines::ISplineCombination;

pub const DEFAULT_GRID: usize = 1001;

/// TP and FP at a fixed horizon as one-dimensional splines in the marker.
#[derive(Debug, Clone)]
pub struct HorizonProfile<T> {
    t: T,
    tau_m: T,
    /// `m -> F(t, m)`
    cases: ISplineCombination<T>,
    /// `m -> F2(m) - F(t, m)`
    controls: ISplineCombination<T>,
    case_mass: T,
}

impl<T: Scalar> HorizonProfile<T> {
    pub fn new(fit: &SieveFit<T>, t: T) -> Result<Self> {
        let case_weights = fit.event_weights(t)?;
        let control_weights: Vec<T> = fit
            .marginal_weights()
            .iter()
            .zip(&case_weights)
            .map(|(&d, &c)| (d - c).max(T::zero()))
            .collect();
        let cases = ISplineCombination::new(&fit.marker_knots, case_weights)?;
        let controls = ISplineCombination::new(&fit.marker_knots, control_weights)?;
        let case_mass = cases.total();
        let t64 = t.to_f64_lossy();
        if case_mass.is_nan() || case_mass <= T::zero() {
            return Err(Error::UndefinedTp(t64));
        }
        if case_mass >= T::one() {
            return Err(Error::UndefinedFp(t64));
        }
        Ok(Self {
            t,
            tau_m: fit.tau_m(),
            cases,
            controls,
            case_mass,
        })
    }

    pub fn horizon(&self) -> T {
        self.t
    }

    /// `F(t, tau_m)`, the fitted probability of an event by `t`.
    pub fn case_mass(&self) -> T {
        self.case_mass
    }

    fn clamp_marker(&self, m: T) -> T {
        m.max(T::zero()).min(self.tau_m)
    }

    pub fn tp(&self, m: T) -> T {
        let m = self.clamp_marker(m);
        ((self.case_mass - self.cases.eval(m)) / self.case_mass)
            .max(T::zero())
            .min(T::one())
    }

    pub fn fp(&self, m: T) -> T {
        let m = self.clamp_marker(m);
        let denom = T::one() - self.case_mass;
        ((denom - self.controls.eval(m)) / denom)
            .max(T::zero())
            .min(T::one())
    }

    /// `FP(tau_m)`, positive only when the fitted total mass is below one.
    pub fn fp_floor(&self) -> T {
        self.fp(self.tau_m)
    }

    /// Smallest marker `m` with `FP(m) <= p`, by bisection to `1e-10 * tau_m`.
    /// Returns `tau_m` when even `FP(tau_m)` exceeds `p`.
    pub fn fp_inverse(&self, p: T) -> T {
        if p >= T::one() {
            return T::zero();
        }
        if self.fp(self.tau_m) > p {
            return self.tau_m;
        }
        let tol = T::lit(1e-10) * self.tau_m;
        let (mut lo, mut hi) = (T::zero(), self.tau_m);
        while hi - lo > tol {
            let mid = lo + (hi - lo) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.fp(mid) <= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// ROC value at false-positive rate `p`. The `p = 0` end is the
    /// classifier that labels nobody positive.
    pub fn roc(&self, p: T) -> T {
        if p <= T::zero() {
            return T::zero();
        }
        self.tp(self.fp_inverse(p))
    }
}

pub fn tp<T: Scalar>(fit: &SieveFit<T>, t: T, m: T) -> Result<T> {
    check_marker(fit, m)?;
    Ok(HorizonProfile::new(fit, t)?.tp(m))
}

pub fn fp<T: Scalar>(fit: &SieveFit<T>, t: T, m: T) -> Result<T> {
    check_marker(fit, m)?;
    Ok(HorizonProfile::new(fit, t)?.fp(m))
}

pub fn fp_inverse<T: Scalar>(fit: &SieveFit<T>, t: T, p: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "false-positive rate must lie in [0, 1], got {p}"
        )));
    }
    Ok(HorizonProfile::new(fit, t)?.fp_inverse(p))
}

fn check_marker<T: Scalar>(fit: &SieveFit<T>, m: T) -> Result<()> {
    if fit.marker_knots.contains(m) {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            value: m.to_f64_lossy(),
            lower: 0.0,
            upper: fit.tau_m().to_f64_lossy(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve<T> {
    pub t: T,
    /// `(p, ROC(p))` on the uniform grid `p = g / (G - 1)`.
    pub points: Vec<(T, T)>,
    pub auc: T,
    /// `FP(tau_m)`; the curve is flat at zero below it.
    pub fp_floor: T,
}

impl<T: Scalar> RocCurve<T> {
    /// Whether the fitted marker mass falls short of one, so part of the curve
    /// near `p = 0` is an extension rather than an estimate.
    pub fn is_truncated(&self) -> bool {
        self.fp_floor > T::lit(1e-9)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# t={} auc={}", self.t, self.auc)?;
        writeln!(out, "p,roc")?;
        for (p, r) in &self.points {
            writeln!(out, "{p},{r}")?;
        }
        Ok(())
    }
}

/// Trapezoid rule over `(x, y)` pairs.
pub fn trapezoid<T: Scalar>(points: &[(T, T)]) -> T {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / T::lit(2.0))
        .sum()
}

pub fn roc_curve<T: Scalar>(fit: &SieveFit<T>, t: T, grid: usize) -> Result<RocCurve<T>> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!(
            "ROC grid needs at least 2 points, got {grid}"
        )));
    }
    let profile = HorizonProfile::new(fit, t)?;
    Ok(roc_from_profile(&profile, grid))
}

pub(crate) fn roc_from_profile<T: Scalar>(profile: &HorizonProfile<T>, grid: usize) -> RocCurve<T> {
    let last = T::from_usize_lossy(grid - 1);
    let points: Vec<(T, T)> = (0..grid)
        .map(|g| {
            let p = T::from_usize_lossy(g) / last;
            (p, profile.roc(p))
        })
        .collect();
    RocCurve {
        t: profile.horizon(),
        auc: trapezoid(&points),
        points,
        fp_floor: profile.fp_floor(),
    }
}

pub fn auc<T: Scalar>(fit: &SieveFit<T>, t: T, grid: usize) -> Result<T> {
    Ok(roc_curve(fit, t, grid)?.auc)
}
