//! I-spline sieve log-likelihood for interval-censored `(T, M)` data.
//!
//! The joint distribution is modelled as
//!
//! ```text
//! F(t, m)  = sum_{j,k} gamma[j][k] * I_j(t) * I_k(m)
//! F2(m)    = sum_k (sum_j gamma[j][k] + omega[k]) * I_k(m)
//! ```
//!
//! with `gamma, omega >= 0` and total mass at most one. Every subject then
//! contributes `log(a_i . theta)` where `theta = (gamma row-major, omega)` and
//! `a_i` is a nonnegative design row built from I-splines in time and
//! M-splines (the marker I-spline derivatives) in the marker.

use serde::{Deserialize, Serialize};

use crate::data::{CensorStatus, Dataset};
use crate::error::{Error, Result};
use crate::optimizer::{FitOptions, StopReason};
use crate::scalar::Scalar;
use crate::splines::{ISplineBasis, KnotVector, MSplineBasis, MAX_ORDER};

/// Coefficients of the sieve model stored as one flat parameter vector:
/// `gamma` row-major (time index outer), then `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveParams<T> {
    time_count: usize,
    marker_count: usize,
    theta: Vec<T>,
}

impl<T: Scalar> SieveParams<T> {
    pub fn new(
        time_count: usize,
        marker_count: usize,
        gamma: Vec<T>,
        omega: Vec<T>,
    ) -> Result<Self> {
        if gamma.len() != time_count * marker_count {
            return Err(Error::DimensionMismatch {
                expected: time_count * marker_count,
                found: gamma.len(),
            });
        }
        if omega.len() != marker_count {
            return Err(Error::DimensionMismatch {
                expected: marker_count,
                found: omega.len(),
            });
        }
        let mut theta = gamma;
        theta.extend(omega);
        Self::from_flat(time_count, marker_count, theta)
    }

    pub fn from_flat(time_count: usize, marker_count: usize, theta: Vec<T>) -> Result<Self> {
        let expected = time_count * marker_count + marker_count;
        if theta.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: theta.len(),
            });
        }
        let params = Self {
            time_count,
            marker_count,
            theta,
        };
        if !params.is_feasible() {
            return Err(Error::InvalidArgument(
                "sieve coefficients must be nonnegative with total mass at most 1".into(),
            ));
        }
        Ok(params)
    }

    /// Strictly feasible starting point with every coefficient `0.5 / P`.
    pub fn uniform(time_count: usize, marker_count: usize) -> Self {
        let len = time_count * marker_count + marker_count;
        let value = T::lit(0.5) / T::from_usize_lossy(len);
        Self {
            time_count,
            marker_count,
            theta: vec![value; len],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn time_count(&self) -> usize {
        self.time_count
    }

    pub fn marker_count(&self) -> usize {
        self.marker_count
    }

    pub fn as_slice(&self) -> &[T] {
        &self.theta
    }

    pub fn into_vec(self) -> Vec<T> {
        self.theta
    }

    pub fn gamma(&self) -> &[T] {
        &self.theta[..self.time_count * self.marker_count]
    }

    pub fn gamma_at(&self, j: usize, k: usize) -> T {
        self.theta[j * self.marker_count + k]
    }

    pub fn omega(&self) -> &[T] {
        &self.theta[self.time_count * self.marker_count..]
    }

    pub fn total_mass(&self) -> T {
        self.theta.iter().copied().sum()
    }

    /// Nonnegativity and total mass `<= 1` up to a rounding allowance of a
    /// few ulps per coefficient.
    pub fn is_feasible(&self) -> bool {
        self.theta.iter().all(|&x| x.is_finite() && x >= T::zero())
            && self.total_mass() <= T::one() + feasibility_slack::<T>(self.theta.len())
    }

    /// Convex combination `weight * self + (1 - weight) * other`.
    pub fn blend(&self, other: &Self, weight: T) -> Result<Self> {
        if self.len() != other.len() || self.time_count != other.time_count {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let theta = self
            .theta
            .iter()
            .zip(&other.theta)
            .map(|(&a, &b)| weight * a + (T::one() - weight) * b)
            .collect();
        Self::from_flat(self.time_count, self.marker_count, theta)
    }
}

pub(crate) fn feasibility_slack<T: Scalar>(len: usize) -> T {
    T::epsilon() * T::from_usize_lossy(4 * len.max(1))
}

/// Sparse nonnegative design rows, one per subject, in compressed row form.
/// Built once per dataset and reused by every likelihood evaluation.
#[derive(Debug, Clone)]
pub struct DesignRows<T> {
    time_knots: KnotVector<T>,
    marker_knots: KnotVector<T>,
    time_count: usize,
    marker_count: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> DesignRows<T> {
    /// Design from explicit dense rows over `time_count * marker_count +
    /// marker_count` parameters. The knot vectors are only carried through to
    /// the resulting fit.
    pub fn from_dense(
        time_count: usize,
        marker_count: usize,
        rows: &[Vec<T>],
        time_knots: KnotVector<T>,
        marker_knots: KnotVector<T>,
    ) -> Result<Self> {
        let dim = time_count * marker_count + marker_count;
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= T::zero()) {
                    return Err(Error::Data(format!(
                        "design entries must be finite and nonnegative, got {v}"
                    )));
                }
                if v > T::zero() {
                    cols.push(c as u32);
                    vals.push(v);
                }
            }
            if vals.len() == *row_ptr.last().unwrap() {
                return Err(Error::Data("identically zero design row".into()));
            }
            row_ptr.push(vals.len());
        }
        Ok(Self {
            time_knots,
            marker_knots,
            time_count,
            marker_count,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.time_count * self.marker_count + self.marker_count
    }

    pub fn time_count(&self) -> usize {
        self.time_count
    }

    pub fn marker_count(&self) -> usize {
        self.marker_count
    }

    pub fn time_knots(&self) -> &KnotVector<T> {
        &self.time_knots
    }

    pub fn marker_knots(&self) -> &KnotVector<T> {
        &self.marker_knots
    }

    /// Row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.vals[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// Row `i` as a dense coefficient vector.
    pub fn dense_row(&self, i: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_params()];
        for (c, v) in self.row(i) {
            out[c] = v;
        }
        out
    }

    /// Copy with every row multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v = *v * factor);
        out
    }

    /// Writes `a_i . theta` for every row into `out`.
    pub fn dots_into(&self, theta: &[T], out: &mut [T]) {
        for (i, slot) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = T::zero();
            for (&c, &v) in self.cols[lo..hi].iter().zip(&self.vals[lo..hi]) {
                acc = acc + v * theta[c as usize];
            }
            *slot = acc;
        }
    }

    /// `sum_i weight * a_i / dots_i`.
    pub fn grad_from_dots_into(&self, dots: &[T], weight: T, out: &mut [T]) {
        out.iter_mut().for_each(|g| *g = T::zero());
        for (i, &d) in dots.iter().enumerate() {
            let scale = weight / d;
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            for (&c, &v) in self.cols[lo..hi].iter().zip(&self.vals[lo..hi]) {
                out[c as usize] = out[c as usize] + v * scale;
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n_params() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n_params(),
                found: len,
            })
        }
    }
}

/// Sum of logs of `dots`, or `-inf` as soon as one is not positive.
pub(crate) fn sum_log<T: Scalar>(dots: &[T]) -> T {
    let mut acc = T::zero();
    for &d in dots {
        if d.is_nan() || d <= T::zero() {
            return T::neg_infinity();
        }
        acc = acc + d.ln();
    }
    acc
}

pub fn build_design<T: Scalar>(
    dataset: &Dataset<T>,
    time_knots: &KnotVector<T>,
    marker_knots: &KnotVector<T>,
) -> Result<DesignRows<T>> {
    let ibasis = ISplineBasis::new(time_knots);
    let mbasis = MSplineBasis::new(marker_knots);
    let (p, q) = (ibasis.len(), mbasis.len());
    let morder = mbasis.order();
    let n = dataset.len();

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut iu = vec![T::zero(); p];
    let mut iv = vec![T::zero(); p];
    let mut time_part = vec![T::zero(); p];
    let mut mloc = [T::zero(); MAX_ORDER];

    let out_of = |x: T, kv: &KnotVector<T>| Error::OutOfDomain {
        value: x.to_f64_lossy(),
        lower: kv.lower().to_f64_lossy(),
        upper: kv.upper().to_f64_lossy(),
    };

    for (i, obs) in dataset.observations().iter().enumerate() {
        for x in [obs.u(), obs.v()] {
            if !time_knots.contains(x) {
                return Err(out_of(x, time_knots));
            }
        }
        if !marker_knots.contains(obs.marker()) {
            return Err(out_of(obs.marker(), marker_knots));
        }
        let mfirst = mbasis.eval_local(obs.marker(), &mut mloc);

        match obs.status() {
            CensorStatus::Left => {
                ibasis.eval_into(obs.u(), &mut time_part);
            }
            CensorStatus::Interval => {
                ibasis.eval_into(obs.u(), &mut iu);
                ibasis.eval_into(obs.v(), &mut iv);
                for ((t, &a), &b) in time_part.iter_mut().zip(&iu).zip(&iv) {
                    *t = (b - a).max(T::zero());
                }
            }
            CensorStatus::Right => {
                ibasis.eval_into(obs.v(), &mut iv);
                for (t, &b) in time_part.iter_mut().zip(&iv) {
                    *t = (T::one() - b).max(T::zero());
                }
            }
        }

        let start = vals.len();
        for (j, &tj) in time_part.iter().enumerate() {
            if tj == T::zero() {
                continue;
            }
            for (r, &mv) in mloc[..morder].iter().enumerate() {
                let value = tj * mv;
                if value > T::zero() {
                    cols.push((j * q + mfirst + r) as u32);
                    vals.push(value);
                }
            }
        }
        if obs.status() == CensorStatus::Right {
            for (r, &mv) in mloc[..morder].iter().enumerate() {
                if mv > T::zero() {
                    cols.push((p * q + mfirst + r) as u32);
                    vals.push(mv);
                }
            }
        }
        if vals.len() == start {
            return Err(Error::Data(format!(
                "observation {} (u = {}, v = {}, marker = {}) has an identically zero likelihood row",
                i + 1,
                obs.u(),
                obs.v(),
                obs.marker()
            )));
        }
        row_ptr.push(vals.len());
    }

    Ok(DesignRows {
        time_knots: time_knots.clone(),
        marker_knots: marker_knots.clone(),
        time_count: p,
        marker_count: q,
        row_ptr,
        cols,
        vals,
    })
}

/// `sum_i log(a_i . theta)`; `-inf` when any argument is not positive.
pub fn loglik<T: Scalar>(params: &SieveParams<T>, design: &DesignRows<T>) -> Result<T> {
    design.check_len(params.len())?;
    let mut dots = vec![T::zero(); design.rows()];
    design.dots_into(params.as_slice(), &mut dots);
    Ok(sum_log(&dots))
}

/// Gradient `sum_i a_i / (a_i . theta)` in the flat parameter layout.
pub fn grad_loglik<T: Scalar>(params: &SieveParams<T>, design: &DesignRows<T>) -> Result<Vec<T>> {
    design.check_len(params.len())?;
    let mut dots = vec![T::zero(); design.rows()];
    design.dots_into(params.as_slice(), &mut dots);
    if dots.iter().any(|&d| d.is_nan() || d <= T::zero()) {
        return Err(Error::InfeasibleStart);
    }
    let mut grad = vec![T::zero(); design.n_params()];
    design.grad_from_dots_into(&dots, T::one(), &mut grad);
    Ok(grad)
}

/// A fitted sieve model: coefficients, both bases and convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveFit<T> {
    pub params: SieveParams<T>,
    pub time_knots: KnotVector<T>,
    pub marker_knots: KnotVector<T>,
    pub loglik: T,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub options: FitOptions,
}

impl<T: Scalar> SieveFit<T> {
    pub fn order(&self) -> usize {
        self.time_knots.order()
    }

    pub fn tau_t(&self) -> T {
        self.time_knots.upper()
    }

    pub fn tau_m(&self) -> T {
        self.marker_knots.upper()
    }

    /// `(F(t, m), F2(m))`.
    pub fn eval_cdfs(&self, t: T, m: T) -> Result<(T, T)> {
        eval_cdfs(self, t, m)
    }

    /// Per-marker-basis weights at horizon `t`: `c_k = sum_j gamma[j][k] I_j(t)`.
    pub fn event_weights(&self, t: T) -> Result<Vec<T>> {
        let it = self.time_knots.ispline_eval(t)?.values;
        let q = self.params.marker_count();
        let mut c = vec![T::zero(); q];
        for (j, &ij) in it.iter().enumerate() {
            if ij == T::zero() {
                continue;
            }
            for (k, ck) in c.iter_mut().enumerate() {
                *ck = *ck + self.params.gamma_at(j, k) * ij;
            }
        }
        Ok(c)
    }

    /// Marginal weights `d_k = sum_j gamma[j][k] + omega[k]`.
    pub fn marginal_weights(&self) -> Vec<T> {
        let q = self.params.marker_count();
        let mut d = self.params.omega().to_vec();
        for (idx, &g) in self.params.gamma().iter().enumerate() {
            d[idx % q] = d[idx % q] + g;
        }
        d
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FitDocument::from_fit(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FitDocument<T> = serde_json::from_str(text)?;
        doc.into_fit()
    }
}

pub fn eval_cdfs<T: Scalar>(fit: &SieveFit<T>, t: T, m: T) -> Result<(T, T)> {
    let it = fit.time_knots.ispline_eval(t)?.values;
    let im = fit.marker_knots.ispline_eval(m)?.values;
    let params = &fit.params;
    let mut joint = T::zero();
    for (j, &ij) in it.iter().enumerate() {
        for (k, &ik) in im.iter().enumerate() {
            joint = joint + params.gamma_at(j, k) * ij * ik;
        }
    }
    let marginal = fit
        .marginal_weights()
        .iter()
        .zip(&im)
        .map(|(&d, &ik)| d * ik)
        .sum();
    Ok((joint, marginal))
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct KnotDocument<T> {
    lower: T,
    upper: T,
    interior: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct MatrixDocument<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct FitDocument<T> {
    order: usize,
    time_knots: KnotDocument<T>,
    marker_knots: KnotDocument<T>,
    gamma: MatrixDocument<T>,
    omega: Vec<T>,
    loglik: T,
    iterations: usize,
    stop_reason: StopReason,
    total_mass: T,
    options: FitOptions,
}

impl<T: Scalar> FitDocument<T> {
    fn from_fit(fit: &SieveFit<T>) -> Self {
        let knots = |kv: &KnotVector<T>| KnotDocument {
            lower: kv.lower(),
            upper: kv.upper(),
            interior: kv.interior().to_vec(),
        };
        Self {
            order: fit.order(),
            time_knots: knots(&fit.time_knots),
            marker_knots: knots(&fit.marker_knots),
            gamma: MatrixDocument {
                rows: fit.params.time_count(),
                cols: fit.params.marker_count(),
                values: fit.params.gamma().to_vec(),
            },
            omega: fit.params.omega().to_vec(),
            loglik: fit.loglik,
            iterations: fit.iterations,
            stop_reason: fit.stop_reason,
            total_mass: fit.params.total_mass(),
            options: fit.options,
        }
    }

    fn into_fit(self) -> Result<SieveFit<T>> {
        let time_knots = KnotVector::new(
            self.order,
            self.time_knots.lower,
            self.time_knots.upper,
            self.time_knots.interior,
        )?;
        let marker_knots = KnotVector::new(
            self.order,
            self.marker_knots.lower,
            self.marker_knots.upper,
            self.marker_knots.interior,
        )?;
        if self.gamma.rows != time_knots.basis_count()
            || self.gamma.cols != marker_knots.basis_count()
        {
            return Err(Error::Data(format!(
                "gamma is {}x{} but the knot vectors imply {}x{}",
                self.gamma.rows,
                self.gamma.cols,
                time_knots.basis_count(),
                marker_knots.basis_count()
            )));
        }
        let params = SieveParams::new(
            self.gamma.rows,
            self.gamma.cols,
            self.gamma.values,
            self.omega,
        )?;
        Ok(SieveFit {
            params,
            time_knots,
            marker_knots,
            loglik: self.loglik,
            iterations: self.iterations,
            stop_reason: self.stop_reason,
            options: self.options,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IntervalObservation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_dataset(n: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = (0..n)
            .map(|_| {
                let m = rng.random_range(0.05..9.95);
                let u = rng.random_range(1.0..40.0);
                match rng.random_range(0..3) {
                    0 => IntervalObservation::left(u, m),
                    1 => IntervalObservation::interval(u, u + rng.random_range(2.0..8.0), m),
                    _ => IntervalObservation::right(u, m),
                }
                .unwrap()
            })
            .collect();
        Dataset::with_bounds(obs, Some(50.0), Some(10.0)).unwrap()
    }

    fn toy_design(n: usize, seed: u64) -> DesignRows<f64> {
        let ds = toy_dataset(n, seed);
        let tk = KnotVector::new(3, 0.0, 50.0, vec![10.0, 20.0, 30.0]).unwrap();
        let mk = KnotVector::new(3, 0.0, 10.0, vec![3.0, 6.0]).unwrap();
        build_design(&ds, &tk, &mk).unwrap()
    }

    fn random_params(p: usize, q: usize, rng: &mut ChaCha8Rng) -> SieveParams<f64> {
        let len = p * q + q;
        let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum::<f64>() * rng.random_range(1.0..1.5);
        SieveParams::from_flat(p, q, raw.iter().map(|x| x / total).collect()).unwrap()
    }

    #[test]
    fn design_rows_follow_censoring_type() {
        let tk = KnotVector::<f64>::new(3, 0.0, 30.0, vec![10.0, 20.0]).unwrap();
        let mk = KnotVector::new(3, 0.0, 10.0, vec![5.0]).unwrap();
        let obs = vec![
            IntervalObservation::right(30.0, 4.0).unwrap(),
            IntervalObservation::left(12.0, 4.0).unwrap(),
            IntervalObservation::interval(6.0, 12.0, 4.0).unwrap(),
        ];
        let ds = Dataset::with_bounds(obs, Some(30.0), Some(10.0)).unwrap();
        let d = build_design(&ds, &tk, &mk).unwrap();
        let (p, q) = (d.time_count(), d.marker_count());
        let m = mk.mspline_eval(4.0).unwrap().values;

        let right = d.dense_row(0);
        assert!(right[..p * q].iter().all(|&x| x == 0.0));
        assert_eq!(&right[p * q..], m.as_slice());

        let left = d.dense_row(1);
        let i12 = tk.ispline_eval(12.0).unwrap().values;
        for j in 0..p {
            for k in 0..q {
                assert!((left[j * q + k] - i12[j] * m[k]).abs() < 1e-15);
            }
        }
        assert!(left[p * q..].iter().all(|&x| x == 0.0));

        let interval = d.dense_row(2);
        let i6 = tk.ispline_eval(6.0).unwrap().values;
        for j in 0..p {
            for k in 0..q {
                let expected = (i12[j] - i6[j]) * m[k];
                assert!((interval[j * q + k] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn design_entries_nonnegative() {
        let d = toy_design(200, 3);
        assert!(d.vals.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn single_left_row_loglik() {
        let kv = KnotVector::new(1, 0.0, 1.0, vec![]).unwrap();
        // hand-built 1-parameter design a = (0.5)
        let d = DesignRows {
            time_knots: kv.clone(),
            marker_knots: kv,
            time_count: 0,
            marker_count: 1,
            row_ptr: vec![0, 1],
            cols: vec![0],
            vals: vec![0.5],
        };
        let params = SieveParams::from_flat(0, 1, vec![0.8]).unwrap();
        assert!((loglik(&params, &d).unwrap() - 0.4f64.ln()).abs() < 1e-15);
        assert!((grad_loglik(&params, &d).unwrap()[0] - 1.25).abs() < 1e-15);
        let zero = SieveParams::from_flat(0, 1, vec![0.0]).unwrap();
        assert_eq!(loglik(&zero, &d).unwrap(), f64::NEG_INFINITY);
        assert!(grad_loglik(&zero, &d).is_err());
    }

    #[test]
    fn loglik_matches_dense_summation() {
        let d = toy_design(120, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = random_params(d.time_count(), d.marker_count(), &mut rng);
        let brute: f64 = (0..d.rows())
            .map(|i| {
                d.dense_row(i)
                    .iter()
                    .zip(params.as_slice())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .ln()
            })
            .sum();
        let fast = loglik(&params, &d).unwrap();
        assert!((fast - brute).abs() < 1e-10 * brute.abs());
    }

    #[test]
    fn zero_parameters_give_negative_infinity() {
        let d = toy_design(10, 1);
        let zero =
            SieveParams::from_flat(d.time_count(), d.marker_count(), vec![0.0; d.n_params()])
                .unwrap();
        assert_eq!(loglik(&zero, &d).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let d = toy_design(10, 1);
        let wrong = SieveParams::<f64>::uniform(2, 2);
        assert!(matches!(
            loglik(&wrong, &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d = toy_design(150, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let params = random_params(d.time_count(), d.marker_count(), &mut rng);
            let grad = grad_loglik(&params, &d).unwrap();
            let h = 1e-6;
            for idx in 0..params.len() {
                let mut plus = params.as_slice().to_vec();
                let mut minus = plus.clone();
                plus[idx] += h;
                minus[idx] -= h;
                let eval = |theta: &[f64]| {
                    let mut dots = vec![0.0; d.rows()];
                    d.dots_into(theta, &mut dots);
                    sum_log(&dots)
                };
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
                let rel = (fd - grad[idx]).abs() / grad[idx].abs().max(1.0);
                assert!(rel < 1e-4, "param {idx}: fd {fd} vs {}", grad[idx]);
            }
        }
    }

    #[test]
    fn duplicated_rows_double_the_gradient() {
        let ds = toy_dataset(1, 4);
        let twice = ds.resample(&[0, 0]);
        let tk = KnotVector::new(3, 0.0, 50.0, vec![25.0]).unwrap();
        let mk = KnotVector::new(3, 0.0, 10.0, vec![5.0]).unwrap();
        let d1 = build_design(&ds, &tk, &mk).unwrap();
        let d2 = build_design(&twice, &tk, &mk).unwrap();
        let params = SieveParams::uniform(d1.time_count(), d1.marker_count());
        let g1 = grad_loglik(&params, &d1).unwrap();
        let g2 = grad_loglik(&params, &d2).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn loglik_is_concave_along_segments() {
        let d = toy_design(100, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let a = random_params(d.time_count(), d.marker_count(), &mut rng);
            let b = random_params(d.time_count(), d.marker_count(), &mut rng);
            let w: f64 = rng.random_range(0.0..1.0);
            let mid = a.blend(&b, w).unwrap();
            let lhs = loglik(&mid, &d).unwrap();
            let rhs = w * loglik(&a, &d).unwrap() + (1.0 - w) * loglik(&b, &d).unwrap();
            assert!(lhs >= rhs - 1e-10, "{lhs} < {rhs}");
        }
    }

    #[test]
    fn scaling_rows_shifts_loglik() {
        let d = toy_design(80, 2);
        let c = 3.5;
        let scaled = d.scaled(c);
        let params = SieveParams::uniform(d.time_count(), d.marker_count());
        let shift = loglik(&params, &scaled).unwrap() - loglik(&params, &d).unwrap();
        assert!((shift - 80.0 * c.ln()).abs() < 1e-9);
    }

    fn fit_from(
        params: SieveParams<f64>,
        tk: KnotVector<f64>,
        mk: KnotVector<f64>,
    ) -> SieveFit<f64> {
        SieveFit {
            params,
            time_knots: tk,
            marker_knots: mk,
            loglik: 0.0,
            iterations: 0,
            stop_reason: StopReason::MaxIterations,
            options: FitOptions::default(),
        }
    }

    #[test]
    fn cdf_boundaries() {
        let tk = KnotVector::new(3, 0.0, 30.0, vec![10.0, 20.0]).unwrap();
        let mk = KnotVector::new(3, 0.0, 10.0, vec![5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = random_params(tk.basis_count(), mk.basis_count(), &mut rng);
        let gsum: f64 = params.gamma().iter().sum();
        let osum: f64 = params.omega().iter().sum();
        let fit = fit_from(params, tk, mk);
        assert_eq!(fit.eval_cdfs(0.0, 4.0).unwrap().0, 0.0);
        assert_eq!(fit.eval_cdfs(12.0, 0.0).unwrap(), (0.0, 0.0));
        let (f, f2) = fit.eval_cdfs(30.0, 10.0).unwrap();
        assert!((f - gsum).abs() < 1e-14);
        assert!((f2 - gsum - osum).abs() < 1e-14);
        assert!(f2 <= 1.0 + 1e-14);
        assert!(fit.eval_cdfs(31.0, 1.0).is_err());
    }

    #[test]
    fn fitted_cdf_monotone_and_below_marginal() {
        let tk = KnotVector::new(3, 0.0, 30.0, vec![7.0, 15.0, 22.0]).unwrap();
        let mk = KnotVector::new(3, 0.0, 10.0, vec![2.0, 5.0, 7.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..5 {
            let params = random_params(tk.basis_count(), mk.basis_count(), &mut rng);
            let fit = fit_from(params, tk.clone(), mk.clone());
            let grid = 50;
            let mut table = vec![vec![(0.0, 0.0); grid]; grid];
            for (a, row) in table.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    let t = 30.0 * a as f64 / (grid - 1) as f64;
                    let m = 10.0 * b as f64 / (grid - 1) as f64;
                    *cell = fit.eval_cdfs(t, m).unwrap();
                }
            }
            for a in 0..grid {
                for b in 0..grid {
                    let (f, f2) = table[a][b];
                    assert!(f <= f2 + 1e-14);
                    if a > 0 {
                        assert!(f >= table[a - 1][b].0 - 1e-14);
                    }
                    if b > 0 {
                        assert!(f >= table[a][b - 1].0 - 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let tk = KnotVector::new(3, 0.0, 30.0, vec![0.1 + 0.2, 15.0]).unwrap();
        let mk = KnotVector::new(3, 0.0, 10.0, vec![1.0 / 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = random_params(tk.basis_count(), mk.basis_count(), &mut rng);
        let mut fit = fit_from(params, tk, mk);
        fit.loglik = -123.456_789_012_345_68;
        let back = SieveFit::<f64>::from_json(&fit.to_json().unwrap()).unwrap();
        assert_eq!(back, fit);
    }
}
