//! n-dimensional tensor-product spline fields: evaluation, partial
//! derivatives, batched grid evaluation, least-squares fitting, and
//! convex-hull bounds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::spline::{self, BasisSpec, KnotVector};

/// Dense row-major tensor, axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Control-point tensor of a spline field; same layout as [`Tensor`].
pub type ControlTensor = Tensor;

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "data length {} does not match shape product {}",
                data.len(),
                expected
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite tensor entry".into()));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![0.0; n] }
    }

    pub fn constant(shape: Vec<usize>, value: f64) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![value; n] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for k in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.shape[k + 1];
        }
        strides
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let f = self.flat_index(idx);
        self.data[f] = value;
    }
}

/// `n` equispaced points covering `[lo, hi]`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
        .collect()
}

/// One axis of a field: spec plus its precomputed knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBasis {
    spec: BasisSpec,
    knots: KnotVector,
}

impl AxisBasis {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        let knots = spline::make_clamped_knots(&spec)?;
        Ok(AxisBasis { spec, knots })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn values(&self, x: f64, derivative: usize) -> Result<Vec<f64>> {
        Ok(spline::eval_basis_derivative(&self.spec, &self.knots, x, derivative)?.values)
    }

    /// Basis (or derivative-basis) matrix, one row per point, `count`
    /// columns, flattened row-major.
    pub fn matrix(&self, points: &[f64], derivative: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(points.len() * self.spec.count);
        for &x in points {
            out.extend_from_slice(&self.values(x, derivative)?);
        }
        Ok(out)
    }
}

/// Tensor-product spline field: per-axis clamped bases and a control
/// tensor with `axes[k].count` entries along axis `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineField {
    axes: Vec<AxisBasis>,
    coeffs: ControlTensor,
}

impl SplineField {
    pub fn new(axes: Vec<BasisSpec>, coeffs: ControlTensor) -> Result<Self> {
        if axes.len() != coeffs.shape().len() {
            return Err(Error::DimensionMismatch {
                expected: axes.len(),
                got: coeffs.shape().len(),
            });
        }
        for (k, (spec, &len)) in axes.iter().zip(coeffs.shape()).enumerate() {
            if spec.count != len {
                return Err(Error::ShapeMismatch(format!(
                    "axis {k}: spec count {} vs coeff extent {len}",
                    spec.count
                )));
            }
        }
        let axes = axes.into_iter().map(AxisBasis::new).collect::<Result<Vec<_>>>()?;
        Ok(SplineField { axes, coeffs })
    }

    pub fn axes(&self) -> &[AxisBasis] {
        &self.axes
    }

    pub fn coeffs(&self) -> &ControlTensor {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut ControlTensor {
        &mut self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }
}

/// Contracts `axis` of a row-major tensor with a `rows x shape[axis]`
/// matrix, replacing that axis extent with `rows`.
pub fn contract_axis(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    matrix: &[f64],
    rows: usize,
) -> (Vec<f64>, Vec<usize>) {
    let cols = shape[axis];
    debug_assert_eq!(matrix.len(), rows * cols);
    let pre: usize = shape[..axis].iter().product();
    let post: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; pre * rows * post];
    for p in 0..pre {
        let in_base = p * cols * post;
        let out_base = p * rows * post;
        for r in 0..rows {
            let m_row = &matrix[r * cols..(r + 1) * cols];
            let out_row = out_base + r * post;
            for (c, &m) in m_row.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let in_row = in_base + c * post;
                for q in 0..post {
                    out[out_row + q] += m * data[in_row + q];
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = rows;
    (out, new_shape)
}

fn check_point(field: &SplineField, point: &[f64]) -> Result<()> {
    if point.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), got: point.len() });
    }
    Ok(())
}

/// Field value at `point` via successive axis contractions.
pub fn eval_field(field: &SplineField, point: &[f64]) -> Result<f64> {
    let orders = vec![0; field.dim()];
    eval_field_partial(field, point, &orders)
}

/// Mixed partial derivative at `point`; `orders[k]` is the derivative
/// order along axis `k`.
pub fn eval_field_partial(field: &SplineField, point: &[f64], orders: &[usize]) -> Result<f64> {
    check_point(field, point)?;
    if orders.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), got: orders.len() });
    }
    let mut data = field.coeffs.data().to_vec();
    let mut shape = field.coeffs.shape().to_vec();
    // Contract the last axis first so the inner loop stays contiguous.
    for k in (0..field.dim()).rev() {
        let basis = field.axes[k].values(point[k], orders[k])?;
        let (next, next_shape) = contract_axis(&data, &shape, k, &basis, 1);
        data = next;
        shape = next_shape;
    }
    Ok(data[0])
}

/// Evaluates the field (or a mixed partial) on a full tensor-product
/// grid. Returns a tensor shaped by the per-axis point counts.
pub fn eval_on_grid(field: &SplineField, grid: &[Vec<f64>], orders: &[usize]) -> Result<Tensor> {
    if grid.len() != field.dim() || orders.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), got: grid.len() });
    }
    let mut data = field.coeffs.data().to_vec();
    let mut shape = field.coeffs.shape().to_vec();
    for k in (0..field.dim()).rev() {
        let matrix = field.axes[k].matrix(&grid[k], orders[k])?;
        let (next, next_shape) = contract_axis(&data, &shape, k, &matrix, grid[k].len());
        data = next;
        shape = next_shape;
    }
    Tensor::new(shape, data)
}

/// Adjoint of [`eval_on_grid`]: pulls a grid-shaped weight tensor back to
/// control-tensor shape through the transposed basis matrices. Used to
/// form loss gradients with respect to the control points.
pub fn grid_adjoint(
    axes: &[AxisBasis],
    grid: &[Vec<f64>],
    orders: &[usize],
    weights: &Tensor,
) -> Result<ControlTensor> {
    let mut data = weights.data().to_vec();
    let mut shape = weights.shape().to_vec();
    for k in (0..axes.len()).rev() {
        let matrix = axes[k].matrix(&grid[k], orders[k])?;
        let transposed = transpose(&matrix, grid[k].len(), axes[k].spec().count);
        let (next, next_shape) =
            contract_axis(&data, &shape, k, &transposed, axes[k].spec().count);
        data = next;
        shape = next_shape;
    }
    Tensor::new(shape, data)
}

fn transpose(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = m[r * cols + c];
        }
    }
    out
}

/// Gridded ground-truth samples for one `(u, alpha)` parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDataset {
    pub axis_points: Vec<Vec<f64>>,
    pub values: Tensor,
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl GridDataset {
    pub fn new(
        axis_points: Vec<Vec<f64>>,
        values: Tensor,
        u: Vec<f64>,
        alpha: Vec<f64>,
    ) -> Result<Self> {
        let counts: Vec<usize> = axis_points.iter().map(|p| p.len()).collect();
        if counts != values.shape() {
            return Err(Error::ShapeMismatch(format!(
                "grid {:?} vs values {:?}",
                counts,
                values.shape()
            )));
        }
        Ok(GridDataset { axis_points, values, u, alpha })
    }
}

/// In-place lower Cholesky factorization of a dense SPD matrix.
fn cholesky(a: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if diag <= 1e-300 || !diag.is_finite() {
            return Err(Error::FitFailure(format!("non-SPD Gram matrix at pivot {j}")));
        }
        let l = libm::sqrt(diag);
        a[j * n + j] = l;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / l;
        }
    }
    Ok(())
}

fn cholesky_solve_in_place(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * n + k] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= l[k * n + i] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
}

/// Least-squares fit of gridded data by a tensor-product spline. The
/// full-grid structure factors the normal equations into one small SPD
/// solve per axis.
pub fn ls_fit(axes: &[BasisSpec], data: &GridDataset) -> Result<ControlTensor> {
    if axes.len() != data.axis_points.len() {
        return Err(Error::DimensionMismatch {
            expected: axes.len(),
            got: data.axis_points.len(),
        });
    }
    let bases = axes.iter().map(|s| AxisBasis::new(*s)).collect::<Result<Vec<_>>>()?;
    let mut work = data.values.data().to_vec();
    let mut shape = data.values.shape().to_vec();
    for k in (0..axes.len()).rev() {
        let n_pts = data.axis_points[k].len();
        let l = axes[k].count;
        if n_pts < l {
            return Err(Error::FitFailure(format!(
                "axis {k}: {n_pts} samples for {l} control points"
            )));
        }
        let a = bases[k].matrix(&data.axis_points[k], 0)?;
        // Gram matrix A^T A and the data projection A^T along this axis.
        let mut gram = vec![0.0; l * l];
        for r in 0..n_pts {
            let row = &a[r * l..(r + 1) * l];
            for i in 0..l {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..l {
                    gram[i * l + j] += row[i] * row[j];
                }
            }
        }
        cholesky(&mut gram, l)?;
        let at = transpose(&a, n_pts, l);
        let (mut projected, new_shape) = contract_axis(&work, &shape, k, &at, l);
        // Solve along axis k for every fiber.
        let pre: usize = new_shape[..k].iter().product();
        let post: usize = new_shape[k + 1..].iter().product();
        let mut fiber = vec![0.0; l];
        for p in 0..pre {
            for q in 0..post {
                for i in 0..l {
                    fiber[i] = projected[(p * l + i) * post + q];
                }
                cholesky_solve_in_place(&gram, l, &mut fiber);
                for i in 0..l {
                    projected[(p * l + i) * post + q] = fiber[i];
                }
            }
        }
        work = projected;
        shape = new_shape;
    }
    Tensor::new(shape, work)
}

/// Minimum and maximum control-point values; every in-domain evaluation
/// of the field lies within these bounds.
pub fn convex_hull_bounds(field: &SplineField) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &c in field.coeffs.data() {
        lo = lo.min(c);
        hi = hi.max(c);
    }
    (lo, hi)
}
