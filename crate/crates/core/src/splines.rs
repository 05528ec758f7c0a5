//! Clamped knot vectors and the B-, M- and I-spline families built on them.
//!
//! A [`KnotVector`] of order `l` stores the domain `[a, b]` and the strictly
//! increasing interior knots. The boundary multiplicity is not stored: order-`l`
//! B-splines use `a` and `b` repeated `l` times, while the I-splines are tail
//! sums of order-`(l + 1)` B-splines on the same interior knots,
//!
//! ```text
//! I_j(x) = sum_{h > j} B_h^{l+1}(x),    j = 0 .. interior + l - 1
//! ```
//!
//! and the M-splines are their exact derivatives, which telescope to the
//! normalised order-`l` B-splines `M_j = l / (s_{j+l} - s_j) * B_j^l`.
//! All three families therefore have `interior + l` members.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest supported B-spline order (I-splines use `order + 1`).
pub const MAX_ORDER: usize = 12;

/// Order used throughout the estimator: quadratic M-splines, cubic I-splines.
pub const DEFAULT_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KnotVector<T> {
    order: usize,
    lower: T,
    upper: T,
    interior: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    B,
    M,
    I,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisEvaluation<T> {
    pub kind: BasisKind,
    pub order: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> KnotVector<T> {
    pub fn new(order: usize, lower: T, upper: T, interior: Vec<T>) -> Result<Self> {
        if order == 0 || order >= MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "spline order must lie in 1..{MAX_ORDER}, got {order}"
            )));
        }
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidArgument(format!(
                "invalid spline domain [{lower}, {upper}]"
            )));
        }
        let mut prev = lower;
        for &k in &interior {
            if !(k > prev && k < upper) {
                return Err(Error::InvalidArgument(format!(
                    "interior knots must be strictly increasing inside ({lower}, {upper}); offending knot {k}"
                )));
            }
            prev = k;
        }
        Ok(Self {
            order,
            lower,
            upper,
            interior,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    pub fn interior(&self) -> &[T] {
        &self.interior
    }

    /// Number of order-`l` B-splines, which is also the number of M- and
    /// I-splines.
    pub fn basis_count(&self) -> usize {
        self.interior.len() + self.order
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// Clamped knot sequence with the boundary knots repeated `order` times.
    pub fn clamped_sequence(&self, order: usize) -> Vec<T> {
        let mut seq = Vec::with_capacity(self.interior.len() + 2 * order);
        seq.extend(std::iter::repeat_n(self.lower, order));
        seq.extend_from_slice(&self.interior);
        seq.extend(std::iter::repeat_n(self.upper, order));
        seq
    }

    fn check(&self, x: T) -> Result<()> {
        if x.is_finite() && self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                value: x.to_f64_lossy(),
                lower: self.lower.to_f64_lossy(),
                upper: self.upper.to_f64_lossy(),
            })
        }
    }

    pub fn bspline_eval(&self, x: T) -> Result<BasisEvaluation<T>> {
        self.check(x)?;
        let knots = self.clamped_sequence(self.order);
        let mut values = vec![T::zero(); self.basis_count()];
        let mut local = [T::zero(); MAX_ORDER];
        let first = local_bsplines(&knots, self.order, x, &mut local);
        values[first..first + self.order].copy_from_slice(&local[..self.order]);
        Ok(BasisEvaluation {
            kind: BasisKind::B,
            order: self.order,
            values,
        })
    }

    pub fn ispline_eval(&self, x: T) -> Result<BasisEvaluation<T>> {
        self.check(x)?;
        let mut values = vec![T::zero(); self.basis_count()];
        ISplineBasis::new(self).eval_into(x, &mut values);
        Ok(BasisEvaluation {
            kind: BasisKind::I,
            order: self.order + 1,
            values,
        })
    }

    pub fn mspline_eval(&self, x: T) -> Result<BasisEvaluation<T>> {
        self.check(x)?;
        let mut values = vec![T::zero(); self.basis_count()];
        MSplineBasis::new(self).eval_into(x, &mut values);
        Ok(BasisEvaluation {
            kind: BasisKind::M,
            order: self.order,
            values,
        })
    }
}

/// Locates the knot span containing `x` and writes the `order` B-spline
/// values that can be nonzero there into `out[..order]`. Returns the index of
/// the first of them. `x == b` falls in the last nondegenerate span.
fn local_bsplines<T: Scalar>(knots: &[T], order: usize, x: T, out: &mut [T]) -> usize {
    let n_basis = knots.len() - order;
    let span = knots
        .partition_point(|&k| k <= x)
        .saturating_sub(1)
        .clamp(order - 1, n_basis - 1);

    let mut left = [T::zero(); MAX_ORDER];
    let mut right = [T::zero(); MAX_ORDER];
    out[0] = T::one();
    for j in 1..order {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = T::zero();
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom > T::zero() {
                out[r] / denom
            } else {
                T::zero()
            };
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
    span + 1 - order
}

/// Precomputed I-spline family for repeated evaluation without allocation.
#[derive(Debug, Clone)]
pub struct ISplineBasis<T> {
    knots: Vec<T>,
    order: usize,
    count: usize,
}

impl<T: Scalar> ISplineBasis<T> {
    pub fn new(kv: &KnotVector<T>) -> Self {
        let order = kv.order + 1;
        Self {
            knots: kv.clamped_sequence(order),
            order,
            count: kv.basis_count(),
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Writes all I-spline values at `x` (assumed inside the domain) into
    /// `out`, which must have length [`Self::len`].
    pub fn eval_into(&self, x: T, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.count);
        let mut local = [T::zero(); MAX_ORDER];
        let first = local_bsplines(&self.knots, self.order, x, &mut local);
        let last = first + self.order - 1;
        // I_j = sum_{h > j} B_h; every B_h with h < first vanishes here.
        for (j, v) in out.iter_mut().enumerate() {
            if j < first {
                *v = T::one();
            } else if j >= last {
                *v = T::zero();
            }
        }
        let mut acc = T::zero();
        for h in (first + 1..=last).rev() {
            acc = acc + local[h - first];
            out[h - 1] = acc.min(T::one());
        }
    }
}

/// A fixed linear combination `x -> sum_j coef[j] * I_j(x)` converted to
/// piecewise polynomial form for fast repeated evaluation.
///
/// Since `I_j = sum_{h > j} B_h`, the combination is the B-spline
/// `sum_h prefix[h] B_h` with `prefix[h] = sum_{j < h} coef[j]`. Each span's
/// polynomial is its Taylor expansion at the span's left end, with the
/// derivatives taken from the differenced B-spline coefficients.
#[derive(Debug, Clone)]
pub struct ISplineCombination<T> {
    /// Left ends of the nondegenerate spans, then the right domain end.
    breaks: Vec<T>,
    /// `order` Taylor coefficients per span, lowest degree first.
    pieces: Vec<T>,
    order: usize,
    total: T,
}

impl<T: Scalar> ISplineCombination<T> {
    pub fn new(kv: &KnotVector<T>, coef: Vec<T>) -> Result<Self> {
        if coef.len() != kv.basis_count() {
            return Err(Error::DimensionMismatch {
                expected: kv.basis_count(),
                found: coef.len(),
            });
        }
        let order = kv.order + 1;
        let knots = kv.clamped_sequence(order);
        let mut spline = Vec::with_capacity(coef.len() + 1);
        let mut acc = T::zero();
        spline.push(acc);
        for &c in &coef {
            acc = acc + c;
            spline.push(acc);
        }

        // Coefficients of the k-th derivative live on knots[k..len - k] with order - k.
        let mut derivatives = vec![spline];
        for k in 1..order {
            let prev = &derivatives[k - 1];
            let sub_order = order - k;
            let t = &knots[k - 1..knots.len() + 1 - k];
            let next: Vec<T> = (1..prev.len())
                .map(|j| {
                    let width = t[j + sub_order] - t[j];
                    if width > T::zero() {
                        T::from_usize_lossy(sub_order) * (prev[j] - prev[j - 1]) / width
                    } else {
                        T::zero()
                    }
                })
                .collect();
            derivatives.push(next);
        }

        let mut breaks: Vec<T> = Vec::with_capacity(kv.interior.len() + 2);
        breaks.push(kv.lower);
        breaks.extend_from_slice(&kv.interior);
        let mut pieces = Vec::with_capacity(breaks.len() * order);
        let mut local = [T::zero(); MAX_ORDER];
        for &a in &breaks {
            let mut factorial = T::one();
            for (k, d) in derivatives.iter().enumerate() {
                if k > 0 {
                    factorial = factorial * T::from_usize_lossy(k);
                }
                let t = &knots[k..knots.len() - k];
                let first = local_bsplines(t, order - k, a, &mut local);
                let value: T = (0..order - k).map(|r| d[first + r] * local[r]).sum();
                pieces.push(value / factorial);
            }
        }
        breaks.push(kv.upper);
        Ok(Self {
            breaks,
            pieces,
            order,
            total: acc,
        })
    }

    /// Value at the right end of the domain, where every I-spline is one.
    pub fn total(&self) -> T {
        self.total
    }

    pub fn eval(&self, x: T) -> T {
        let spans = self.breaks.len() - 1;
        let span = self.breaks[1..spans].partition_point(|&b| b <= x);
        let dx = x - self.breaks[span];
        let c = &self.pieces[span * self.order..(span + 1) * self.order];
        c.iter().rev().fold(T::zero(), |acc, &ck| acc * dx + ck)
    }
}

/// Precomputed M-spline family (derivatives of [`ISplineBasis`]).
#[derive(Debug, Clone)]
pub struct MSplineBasis<T> {
    knots: Vec<T>,
    scale: Vec<T>,
    order: usize,
}

impl<T: Scalar> MSplineBasis<T> {
    pub fn new(kv: &KnotVector<T>) -> Self {
        let order = kv.order;
        let knots = kv.clamped_sequence(order);
        let l = T::from_usize_lossy(order);
        let scale = (0..kv.basis_count())
            .map(|j| l / (knots[j + order] - knots[j]))
            .collect();
        Self {
            knots,
            scale,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scale.is_empty()
    }

    pub fn eval_into(&self, x: T, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.scale.len());
        out.iter_mut().for_each(|v| *v = T::zero());
        let mut local = [T::zero(); MAX_ORDER];
        let first = local_bsplines(&self.knots, self.order, x, &mut local);
        for r in 0..self.order {
            out[first + r] = local[r] * self.scale[first + r];
        }
    }

    /// Sparse form: returns the first index and fills `out[..order]` with
    /// the possibly-nonzero M-spline values starting there.
    pub fn eval_local(&self, x: T, out: &mut [T]) -> usize {
        let first = local_bsplines(&self.knots, self.order, x, out);
        for (v, &s) in out[..self.order].iter_mut().zip(&self.scale[first..]) {
            *v = *v * s;
        }
        first
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Interior knot count for `n` subjects: the integer closest to `n^(1/3)`.
pub fn interior_knot_count(n: usize) -> usize {
    ((n as f64).cbrt().round() as usize).max(1)
}

/// Median-unbiased sample quantile (Hyndman and Fan type 8) of sorted data.
pub fn median_unbiased_quantile<T: Scalar>(sorted: &[T], p: f64) -> T {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty sample");
    let h = (n as f64 + 1.0 / 3.0) * p + 1.0 / 3.0;
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor();
    let frac = T::lit(h - lo);
    let i = lo as usize - 1;
    let (x0, x1) = (sorted[i], sorted[i + 1]);
    if x0 == x1 {
        x0
    } else {
        x0 + frac * (x1 - x0)
    }
}

/// Places `n_interior` knots at the `j / (n_interior + 1)` quantiles of the
/// anchors. Tied quantiles, and quantiles on the domain boundary, are dropped,
/// so fewer knots than requested may come back.
pub fn make_knots<T: Scalar>(
    anchors: &[T],
    n_interior: usize,
    order: usize,
    lower: T,
    upper: T,
) -> Result<KnotVector<T>> {
    if n_interior == 0 {
        return Err(Error::InvalidArgument(
            "at least one interior knot must be requested".into(),
        ));
    }
    if anchors.is_empty() {
        return Err(Error::Data("no knot anchors supplied".into()));
    }
    if let Some(&bad) = anchors
        .iter()
        .find(|&&x| !(x.is_finite() && x >= lower && x <= upper))
    {
        return Err(Error::OutOfDomain {
            value: bad.to_f64_lossy(),
            lower: lower.to_f64_lossy(),
            upper: upper.to_f64_lossy(),
        });
    }
    let mut sorted = anchors.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite anchors"));

    let mut interior: Vec<T> = Vec::with_capacity(n_interior);
    for j in 1..=n_interior {
        let q = median_unbiased_quantile(&sorted, j as f64 / (n_interior + 1) as f64);
        if q > lower && q < upper && interior.last().is_none_or(|&prev| q > prev) {
            interior.push(q);
        }
    }
    KnotVector::new(order, lower, upper, interior)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook recursive Cox-de Boor definition with 0/0 := 0.
    fn naive_bspline(knots: &[f64], i: usize, order: usize, x: f64, right_closed: bool) -> f64 {
        if order == 1 {
            let (a, b) = (knots[i], knots[i + 1]);
            let last_span = right_closed && b == *knots.last().unwrap() && a < b;
            return if (a <= x && x < b) || (last_span && x == b) {
                1.0
            } else {
                0.0
            };
        }
        let mut v = 0.0;
        let d1 = knots[i + order - 1] - knots[i];
        if d1 > 0.0 {
            v += (x - knots[i]) / d1 * naive_bspline(knots, i, order - 1, x, right_closed);
        }
        let d2 = knots[i + order] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + order] - x) / d2
                * naive_bspline(knots, i + 1, order - 1, x, right_closed);
        }
        v
    }

    fn sample_knots() -> KnotVector<f64> {
        KnotVector::new(3, 0.0, 10.0, vec![1.5, 2.0, 4.5, 7.0]).unwrap()
    }

    #[test]
    fn order_one_is_an_indicator() {
        let kv = KnotVector::new(1, 0.0, 1.0, vec![]).unwrap();
        let b = kv.bspline_eval(0.4).unwrap();
        assert_eq!(b.values, vec![1.0]);
        assert_eq!(b.kind, BasisKind::B);
    }

    #[test]
    fn hat_functions_by_hand() {
        let kv = KnotVector::new(2, 0.0, 1.0, vec![0.5]).unwrap();
        let b = kv.bspline_eval(0.25).unwrap();
        assert_eq!(b.values, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn matches_naive_recursion() {
        for order in 1..=5 {
            let kv = KnotVector::new(order, 0.0, 10.0, vec![1.5, 2.0, 4.5, 7.0]).unwrap();
            let knots = kv.clamped_sequence(order);
            for step in 0..=200 {
                let x = step as f64 * 0.05;
                let fast = kv.bspline_eval(x).unwrap().values;
                for (i, &f) in fast.iter().enumerate() {
                    let slow = naive_bspline(&knots, i, order, x, true);
                    assert!(
                        (f - slow).abs() < 1e-13,
                        "order {order} x {x} i {i}: {f} vs {slow}"
                    );
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_at_scaled_point() {
        let kv = sample_knots();
        let s: f64 = kv.bspline_eval(0.37 * 10.0).unwrap().values.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isplines_at_the_boundaries() {
        let kv = sample_knots();
        assert!(kv
            .ispline_eval(0.0)
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 0.0));
        assert!(kv
            .ispline_eval(10.0)
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 1.0));
    }

    #[test]
    fn earlier_isplines_rise_first() {
        let kv = KnotVector::new(3, 0.0, 2.0, vec![1.0]).unwrap();
        let v = kv.ispline_eval(1.0).unwrap().values;
        assert!(v[0] > v[v.len() - 1]);
    }

    #[test]
    fn ispline_is_tail_sum_of_higher_order_bsplines() {
        let kv = sample_knots();
        let up = KnotVector::new(4, 0.0, 10.0, kv.interior().to_vec()).unwrap();
        for step in 0..=100 {
            let x = step as f64 * 0.1;
            let b = up.bspline_eval(x).unwrap().values;
            let i = kv.ispline_eval(x).unwrap().values;
            assert_eq!(i.len(), b.len() - 1);
            for j in 0..i.len() {
                let tail: f64 = b[j + 1..].iter().sum();
                assert!((i[j] - tail).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mspline_matches_finite_difference() {
        let kv = sample_knots();
        let h = 1e-6;
        for step in 1..1000 {
            let x = step as f64 * 0.01;
            let m = kv.mspline_eval(x).unwrap().values;
            let ip = kv.ispline_eval(x + h).unwrap().values;
            let im = kv.ispline_eval(x - h).unwrap().values;
            for j in 0..m.len() {
                let fd = (ip[j] - im[j]) / (2.0 * h);
                assert!((fd - m[j]).abs() < 1e-5, "x {x} j {j}: {fd} vs {}", m[j]);
            }
        }
    }

    #[test]
    fn msplines_integrate_to_one() {
        let kv = sample_knots();
        // composite Simpson on a grid refined enough for piecewise quadratics
        let n = 20_000;
        let h = 10.0 / n as f64;
        let mut integral = vec![0.0; kv.basis_count()];
        for s in 0..=n {
            let x = s as f64 * h;
            let w = if s == 0 || s == n {
                1.0
            } else if s % 2 == 1 {
                4.0
            } else {
                2.0
            };
            for (acc, v) in integral.iter_mut().zip(kv.mspline_eval(x).unwrap().values) {
                *acc += w * v * h / 3.0;
            }
        }
        for v in integral {
            assert!((v - 1.0).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn mspline_boundaries_nonnegative() {
        let kv = KnotVector::new(2, 0.0, 1.0, vec![]).unwrap();
        for x in [0.0, 1.0] {
            assert!(kv.mspline_eval(x).unwrap().values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let kv = sample_knots();
        assert!(kv.bspline_eval(-0.1).is_err());
        assert!(kv.ispline_eval(10.5).is_err());
        assert!(kv.mspline_eval(f64::NAN).is_err());
    }

    #[test]
    fn knots_at_median_unbiased_quartiles() {
        let anchors: Vec<f64> = (1..=27).map(f64::from).collect();
        assert_eq!(interior_knot_count(27), 3);
        let kv = make_knots(&anchors, 3, 3, 0.0, 30.0).unwrap();
        // type 8: h = (27 + 1/3) p + 1/3 gives 7 1/6, 14, 20 5/6
        let expected = [7.0 + 1.0 / 6.0, 14.0, 20.0 + 5.0 / 6.0];
        for (k, e) in kv.interior().iter().zip(expected) {
            assert!((k - e).abs() < 1e-12, "{k} vs {e}");
        }
    }

    #[test]
    fn tied_quantiles_collapse() {
        let kv = make_knots(&[5.0; 12], 3, 3, 0.0, 10.0).unwrap();
        assert_eq!(kv.interior(), &[5.0]);
        let kv = make_knots(&[0.5], 1, 3, 0.0, 1.0).unwrap();
        assert_eq!(kv.interior(), &[0.5]);
    }

    #[test]
    fn knot_construction_errors() {
        assert!(make_knots::<f64>(&[], 3, 3, 0.0, 1.0).is_err());
        assert!(make_knots(&[0.5, 2.0], 1, 3, 0.0, 1.0).is_err());
        assert!(make_knots(&[0.5], 0, 3, 0.0, 1.0).is_err());
    }

    #[test]
    fn counts_agree_across_families() {
        let kv = sample_knots();
        assert_eq!(kv.basis_count(), 4 + 3);
        assert_eq!(kv.bspline_eval(1.0).unwrap().values.len(), 7);
        assert_eq!(kv.ispline_eval(1.0).unwrap().values.len(), 7);
        assert_eq!(kv.mspline_eval(1.0).unwrap().values.len(), 7);
    }

    #[test]
    fn works_in_single_precision() {
        let kv = KnotVector::<f32>::new(3, 0.0, 1.0, vec![0.25, 0.5]).unwrap();
        let s: f32 = kv.bspline_eval(0.3).unwrap().values.iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
        assert!(kv
            .ispline_eval(1.0)
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 1.0));
    }

    #[test]
    fn combination_matches_direct_sum() {
        let mut seed = 12345u64;
        let mut next = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for order in 1..=6 {
            let kv = KnotVector::new(order, 0.0, 4.0, vec![0.3, 1.1, 1.2, 2.5, 3.9]).unwrap();
            let coef: Vec<f64> = (0..kv.basis_count()).map(|_| next()).collect();
            let combo = ISplineCombination::new(&kv, coef.clone()).unwrap();
            assert!((combo.total() - coef.iter().sum::<f64>()).abs() < 1e-14);
            let mut xs: Vec<f64> = (0..500).map(|_| 4.0 * next()).collect();
            xs.extend([0.0, 0.3, 1.1, 1.2, 2.5, 3.9, 4.0]);
            for x in xs {
                let direct: f64 = kv
                    .ispline_eval(x)
                    .unwrap()
                    .values
                    .iter()
                    .zip(&coef)
                    .map(|(i, c)| i * c)
                    .sum();
                assert!(
                    (combo.eval(x) - direct).abs() < 1e-12,
                    "order {order} x {x}"
                );
            }
        }
    }
}
