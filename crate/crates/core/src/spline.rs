//! Clamped univariate B-spline bases: knot construction, Cox-de Boor
//! evaluation, and analytical derivatives of arbitrary order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One axis's clamped B-spline basis: domain interval, order, and the
/// number of control points (= number of basis functions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub lo: f64,
    pub hi: f64,
    /// Spline order `d` (polynomial degree of each piece).
    pub order: usize,
    /// Number of control points `l`.
    pub count: usize,
}

impl BasisSpec {
    pub fn new(lo: f64, hi: f64, order: usize, count: usize) -> Result<Self> {
        let spec = BasisSpec { lo, hi, order, count };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(Error::InvalidSpec(format!(
                "lo ({}) must be less than hi ({})",
                self.lo, self.hi
            )));
        }
        if self.order == 0 {
            return Err(Error::InvalidSpec("order must be positive".into()));
        }
        if self.count < self.order + 1 {
            return Err(Error::InvalidSpec(format!(
                "count ({}) must be at least order + 1 ({})",
                self.count,
                self.order + 1
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn check_in_domain(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { value: x, lo: self.lo, hi: self.hi })
        }
    }
}

/// Clamped knot vector with `l + d + 1` non-decreasing entries: `d + 1`
/// copies of each endpoint, equispaced interior knots in between.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }
}

/// Values of all `l` basis functions (or their derivatives) at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub point: f64,
}

/// Builds the clamped equispaced knot vector for `spec`. Interior knots
/// have spacing `(hi - lo) / (count - order)`.
pub fn make_clamped_knots(spec: &BasisSpec) -> Result<KnotVector> {
    spec.validate()?;
    let (l, d) = (spec.count, spec.order);
    let mut knots = Vec::with_capacity(l + d + 1);
    let segments = l - d;
    let h = (spec.hi - spec.lo) / segments as f64;
    for _ in 0..=d {
        knots.push(spec.lo);
    }
    for i in 1..segments {
        knots.push(spec.lo + h * i as f64);
    }
    for _ in 0..=d {
        knots.push(spec.hi);
    }
    debug_assert_eq!(knots.len(), l + d + 1);
    Ok(KnotVector { knots })
}

/// Degree-0 indicator on `[t_i, t_{i+1})`. The last nonempty interval is
/// closed on the right so partition of unity holds at `x = hi`.
fn indicator(knots: &[f64], i: usize, x: f64, hi: f64) -> f64 {
    let (a, b) = (knots[i], knots[i + 1]);
    if a <= x && x < b {
        1.0
    } else if x == hi && a < b && b == hi {
        1.0
    } else {
        0.0
    }
}

/// All degree-`q` basis values at `x` via the Cox-de Boor recursion, with
/// 0/0 terms at repeated knots defined as 0.
fn raw_basis(knots: &[f64], q: usize, x: f64, hi: f64) -> Vec<f64> {
    let n0 = knots.len() - 1;
    let mut vals: Vec<f64> = (0..n0).map(|i| indicator(knots, i, x, hi)).collect();
    for k in 1..=q {
        let n = knots.len() - 1 - k;
        for i in 0..n {
            let mut v = 0.0;
            let den_l = knots[i + k] - knots[i];
            if den_l > 0.0 {
                v += (x - knots[i]) / den_l * vals[i];
            }
            let den_r = knots[i + k + 1] - knots[i + 1];
            if den_r > 0.0 {
                v += (knots[i + k + 1] - x) / den_r * vals[i + 1];
            }
            vals[i] = v;
        }
        vals.truncate(n);
    }
    vals
}

/// Evaluates all `l` basis functions of order `d` at `x`.
pub fn eval_basis(spec: &BasisSpec, knots: &KnotVector, x: f64) -> Result<BasisEval> {
    spec.check_in_domain(x)?;
    let values = raw_basis(&knots.knots, spec.order, x, spec.hi);
    debug_assert_eq!(values.len(), spec.count);
    Ok(BasisEval { values, point: x })
}

/// Evaluates the `p`-th derivative of all basis functions at `x` by
/// `p`-fold application of the one-step derivative recurrence on
/// lower-order bases. Terms with zero knot differences are dropped.
pub fn eval_basis_derivative(
    spec: &BasisSpec,
    knots: &KnotVector,
    x: f64,
    p: usize,
) -> Result<BasisEval> {
    spec.check_in_domain(x)?;
    if p > spec.order {
        return Err(Error::InvalidDerivativeOrder { requested: p, max: spec.order });
    }
    if p == 0 {
        return eval_basis(spec, knots, x);
    }
    let d = spec.order;
    let t = &knots.knots;
    // Values of the degree d-p bases, then raise the degree one step at a
    // time, differentiating at each step.
    let mut vals = raw_basis(t, d - p, x, spec.hi);
    for step in 0..p {
        let q = d - p + 1 + step; // target degree of this step
        let n = t.len() - 1 - q;
        let mut out = vec![0.0; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut v = 0.0;
            let den_l = t[i + q] - t[i];
            if den_l > 0.0 {
                v += vals[i] / den_l;
            }
            let den_r = t[i + q + 1] - t[i + 1];
            if den_r > 0.0 {
                v -= vals[i + 1] / den_r;
            }
            *slot = q as f64 * v;
        }
        vals = out;
    }
    debug_assert_eq!(vals.len(), spec.count);
    Ok(BasisEval { values: vals, point: x })
}

/// Closed-form `p`-th derivative via the binomial sum over lower-order
/// bases with knot-difference product denominators. Validation path only;
/// products containing a zero knot difference are skipped.
pub fn eval_basis_derivative_closed_form(
    spec: &BasisSpec,
    knots: &KnotVector,
    x: f64,
    p: usize,
) -> Result<BasisEval> {
    spec.check_in_domain(x)?;
    if p > spec.order {
        return Err(Error::InvalidDerivativeOrder { requested: p, max: spec.order });
    }
    if p == 0 {
        return eval_basis(spec, knots, x);
    }
    let d = spec.order;
    let t = &knots.knots;
    let lower = raw_basis(t, d - p, x, spec.hi);
    // Falling factorial d * (d-1) * ... * (d-p+1).
    let mut factor = 1.0;
    for j in 0..p {
        factor *= (d - j) as f64;
    }
    // Knot indices past the end read as the clamped right endpoint.
    let knot = |m: usize| -> f64 {
        if m < t.len() {
            t[m]
        } else {
            spec.hi
        }
    };
    let mut values = vec![0.0; spec.count];
    for (i, slot) in values.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..=p {
            let mut denom = 1.0;
            let mut degenerate = false;
            for j in 0..p {
                let diff = knot(i + k + d - j) - knot(i + k);
                if diff == 0.0 {
                    degenerate = true;
                    break;
                }
                denom *= diff;
            }
            if degenerate {
                continue;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binomial(p, k) * lower[i + k] / denom;
        }
        *slot = factor * acc;
    }
    Ok(BasisEval { values, point: x })
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for j in 0..k {
        r *= (n - j) as f64 / (j + 1) as f64;
    }
    r
}
