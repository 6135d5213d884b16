//! The full model: a coefficient network emits the free entries of a
//! control-point tensor, ICBC pinning overwrites the constrained slices,
//! and the tensor-product spline turns control points into a field.
//! Training losses are differentiated exactly: residuals and data errors
//! are linear (Burgers: quadratic) in the control tensor, so their
//! gradients pull back through the basis matrices and then through the
//! network's backward pass.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::net::{self, Activation, AdamState, MlpParams, MlpSpec};
use crate::physics::{PdeFamily, PinRule, PinValue, Region, SlicePos};
use crate::spline::BasisSpec;
use crate::tensor::{
    eval_field, eval_on_grid, grid_adjoint, linspace, ls_fit, AxisBasis, ControlTensor,
    GridDataset, SplineField, Tensor,
};

/// Ordered pin rules; later rules overwrite earlier ones where slices
/// overlap, so each entry is governed by at most one rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PinningPlan {
    pub rules: Vec<PinRule>,
}

impl PinningPlan {
    pub fn none() -> Self {
        PinningPlan { rules: Vec::new() }
    }

    pub fn for_family(family: &PdeFamily) -> Self {
        PinningPlan { rules: family.pin_rules() }
    }

    /// Governing rule index per flat control-tensor entry.
    pub fn assignments(&self, shape: &[usize]) -> Vec<Option<usize>> {
        let total: usize = shape.iter().product();
        let mut owner = vec![None; total];
        let strides = row_major_strides(shape);
        for (r, rule) in self.rules.iter().enumerate() {
            let slice = match rule.pos {
                SlicePos::First => 0,
                SlicePos::Last => shape[rule.axis] - 1,
            };
            for flat in 0..total {
                if flat / strides[rule.axis] % shape[rule.axis] == slice {
                    owner[flat] = Some(r);
                }
            }
        }
        owner
    }

    pub fn unpinned_count(&self, shape: &[usize]) -> usize {
        self.assignments(shape).iter().filter(|a| a.is_none()).count()
    }
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

/// Coefficient network + spline bases + pinning for one PDE family.
#[derive(Debug, Clone, PartialEq)]
pub struct DbsnModel {
    pub family: PdeFamily,
    /// Control points per axis.
    pub counts: Vec<usize>,
    /// Spline order shared by all axes.
    pub order: usize,
    pub pinning: PinningPlan,
    pub net_spec: MlpSpec,
    pub params: MlpParams,
}

impl DbsnModel {
    /// Builds the model with the family's pin rules and a freshly seeded
    /// network whose output feeds exactly the unpinned entries.
    pub fn new(
        family: PdeFamily,
        counts: Vec<usize>,
        order: usize,
        hidden: Vec<usize>,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if counts.len() != family.n_axes() {
            return Err(Error::DimensionMismatch {
                expected: family.n_axes(),
                got: counts.len(),
            });
        }
        let pinning = PinningPlan::for_family(&family);
        Self::with_pinning(family, counts, order, pinning, hidden, activation, seed)
    }

    pub fn with_pinning(
        family: PdeFamily,
        counts: Vec<usize>,
        order: usize,
        pinning: PinningPlan,
        hidden: Vec<usize>,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        let input_dim = family.u_dim() + family.alpha_dim();
        let output_dim = pinning.unpinned_count(&counts);
        if output_dim == 0 {
            return Err(Error::InvalidConfig("every control point is pinned".into()));
        }
        let net_spec = MlpSpec::new(input_dim, hidden, output_dim, activation);
        let params = net::init_params(&net_spec, seed);
        Ok(DbsnModel { family, counts, order, pinning, net_spec, params })
    }

    /// Basis specs for one parameter point (the recovery domain depends
    /// on alpha).
    pub fn axes(&self, alpha: &[f64]) -> Result<Vec<BasisSpec>> {
        self.family
            .domain(alpha)?
            .into_iter()
            .zip(&self.counts)
            .map(|((lo, hi), &count)| BasisSpec::new(lo, hi, self.order, count))
            .collect()
    }

    fn input(&self, u: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.family.u_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.family.u_dim(),
                got: u.len(),
            });
        }
        if alpha.len() != self.family.alpha_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.family.alpha_dim(),
                got: alpha.len(),
            });
        }
        let mut input = Vec::with_capacity(u.len() + alpha.len());
        input.extend_from_slice(u);
        input.extend_from_slice(alpha);
        Ok(input)
    }
}

/// Resolved pinned values (None = entry fed by the network). FittedIc
/// rules least-squares fit the family's initial condition on the slice's
/// remaining axes; a degree-d basis reproduces the affine heat IC exactly.
pub fn pin_values(model: &DbsnModel, axes: &[BasisSpec], alpha: &[f64]) -> Result<Vec<Option<f64>>> {
    let shape = &model.counts;
    let total: usize = shape.iter().product();
    let strides = row_major_strides(shape);
    let mut values: Vec<Option<f64>> = vec![None; total];
    for rule in &model.pinning.rules {
        let slice = match rule.pos {
            SlicePos::First => 0,
            SlicePos::Last => shape[rule.axis] - 1,
        };
        match rule.value {
            PinValue::Constant(c) => {
                for flat in 0..total {
                    if flat / strides[rule.axis] % shape[rule.axis] == slice {
                        values[flat] = Some(c);
                    }
                }
            }
            PinValue::FittedIc => {
                let sub_axes: Vec<BasisSpec> = axes
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != rule.axis)
                    .map(|(_, s)| *s)
                    .collect();
                let grids: Vec<Vec<f64>> = sub_axes
                    .iter()
                    .map(|s| linspace(s.lo, s.hi, 2 * s.count + 1))
                    .collect();
                let grid_shape: Vec<usize> = grids.iter().map(|g| g.len()).collect();
                let n_pts: usize = grid_shape.iter().product();
                let mut samples = Vec::with_capacity(n_pts);
                let mut coords = vec![0usize; grids.len()];
                for _ in 0..n_pts {
                    let point: Vec<f64> =
                        coords.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
                    samples.push(model.family.ic(&point, alpha));
                    advance(&mut coords, &grid_shape);
                }
                let data = GridDataset::new(
                    grids,
                    Tensor::new(grid_shape, samples)?,
                    Vec::new(),
                    alpha.to_vec(),
                )?;
                let fit = ls_fit(&sub_axes, &data)?;
                // Scatter the sub-tensor into the pinned slice.
                let sub_strides = row_major_strides(fit.shape());
                for (sub_flat, &v) in fit.data().iter().enumerate() {
                    let mut flat = slice * strides[rule.axis];
                    let mut k_sub = 0;
                    for k in 0..shape.len() {
                        if k == rule.axis {
                            continue;
                        }
                        let idx = sub_flat / sub_strides[k_sub] % fit.shape()[k_sub];
                        flat += idx * strides[k];
                        k_sub += 1;
                    }
                    values[flat] = Some(v);
                }
            }
        }
    }
    Ok(values)
}

fn advance(coords: &mut [usize], shape: &[usize]) {
    for k in (0..coords.len()).rev() {
        coords[k] += 1;
        if coords[k] < shape[k] {
            return;
        }
        coords[k] = 0;
    }
}

/// Network output scattered into the unpinned entries, pinned slices
/// overwritten.
pub fn predict_control_tensor(
    model: &DbsnModel,
    u: &[f64],
    alpha: &[f64],
) -> Result<ControlTensor> {
    let axes = model.axes(alpha)?;
    let pins = pin_values(model, &axes, alpha)?;
    let input = model.input(u, alpha)?;
    let (out, _) = net::forward(&model.net_spec, &model.params, &input)?;
    assemble_tensor(model, &pins, &out)
}

fn assemble_tensor(
    model: &DbsnModel,
    pins: &[Option<f64>],
    net_out: &[f64],
) -> Result<ControlTensor> {
    let mut data = Vec::with_capacity(pins.len());
    let mut k = 0;
    for pin in pins {
        match pin {
            Some(v) => data.push(*v),
            None => {
                data.push(net_out[k]);
                k += 1;
            }
        }
    }
    if k != net_out.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "net emits {} values for {k} unpinned entries",
            net_out.len()
        )));
    }
    Tensor::new(model.counts.clone(), data)
}

/// Field value at `point` for one parameter setting.
pub fn predict(model: &DbsnModel, u: &[f64], alpha: &[f64], point: &[f64]) -> Result<f64> {
    let axes = model.axes(alpha)?;
    let coeffs = predict_control_tensor(model, u, alpha)?;
    let field = SplineField::new(axes, coeffs)?;
    eval_field(&field, point)
}

/// One training sample: a parameter point, optionally with ground-truth
/// data for the data loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    pub data: Option<GridDataset>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub physics_weight: f64,
    pub data_weight: f64,
    /// Collocation nodes per axis (uniform grid over the domain).
    pub colloc_nodes: Vec<usize>,
    pub learning_rate: f64,
    pub seed: u64,
    /// Re-jitter collocation points uniformly within their grid cells
    /// every epoch instead of keeping the fixed uniform grid.
    pub resample_colloc: bool,
}

impl TrainConfig {
    pub fn validate(&self, model: &DbsnModel) -> Result<()> {
        if self.physics_weight < 0.0 || self.data_weight < 0.0 {
            return Err(Error::InvalidConfig("negative loss weight".into()));
        }
        if self.physics_weight == 0.0 && self.data_weight == 0.0 {
            return Err(Error::InvalidConfig("both loss weights are zero".into()));
        }
        if self.physics_weight > 0.0 {
            if self.colloc_nodes.len() != model.family.n_axes() {
                return Err(Error::InvalidConfig(
                    "collocation grid dimension does not match the family".into(),
                ));
            }
            if self.colloc_nodes.iter().any(|&n| n < 2) {
                return Err(Error::InvalidConfig("empty collocation grid".into()));
            }
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Per-sample quantities that do not change across epochs.
struct SampleContext {
    input: Vec<f64>,
    axes: Vec<BasisSpec>,
    bases: Vec<AxisBasis>,
    pins: Vec<Option<f64>>,
    /// Collocation grid per equation (faces collapse their axis).
    colloc: Vec<Vec<Vec<f64>>>,
    data: Option<GridDataset>,
}

fn build_context(model: &DbsnModel, config: &TrainConfig, sample: &TrainSample) -> Result<SampleContext> {
    let axes = model.axes(&sample.alpha)?;
    let bases = axes.iter().map(|s| AxisBasis::new(*s)).collect::<Result<Vec<_>>>()?;
    let pins = pin_values(model, &axes, &sample.alpha)?;
    let input = model.input(&sample.u, &sample.alpha)?;
    let mut colloc = Vec::new();
    if config.physics_weight > 0.0 {
        for eq in model.family.equations() {
            let mut grid: Vec<Vec<f64>> = axes
                .iter()
                .zip(&config.colloc_nodes)
                .map(|(s, &n)| linspace(s.lo, s.hi, n))
                .collect();
            if let Region::Face { axis, pos } = eq.region {
                grid[axis] = match pos {
                    SlicePos::First => vec![axes[axis].lo],
                    SlicePos::Last => vec![axes[axis].hi],
                };
            }
            colloc.push(grid);
        }
    }
    if let Some(data) = &sample.data {
        if data.axis_points.len() != axes.len() {
            return Err(Error::DimensionMismatch {
                expected: axes.len(),
                got: data.axis_points.len(),
            });
        }
    }
    Ok(SampleContext { input, axes, bases, pins, colloc, data: sample.data.clone() })
}

fn loss_and_grad_with(
    model: &DbsnModel,
    config: &TrainConfig,
    ctxs: &[SampleContext],
    colloc_override: Option<&[Vec<Vec<Vec<f64>>>]>,
) -> Result<(f64, MlpParams, (f64, f64))> {
    let n_samples = ctxs.len();
    if n_samples == 0 {
        return Err(Error::InvalidConfig("no training samples".into()));
    }
    let mut grad = model.params.zeros_like();
    let mut physics_loss = 0.0;
    let mut data_loss = 0.0;
    let equations = model.family.equations();
    for (si, ctx) in ctxs.iter().enumerate() {
        let (out, tape) = net::forward(&model.net_spec, &model.params, &ctx.input)?;
        let coeffs = assemble_tensor(model, &ctx.pins, &out)?;
        let field = SplineField::new(ctx.axes.clone(), coeffs)?;
        let mut dl_dc = Tensor::zeros(model.counts.clone());
        if config.physics_weight > 0.0 {
            for (ei, eq) in equations.iter().enumerate() {
                let grid: &Vec<Vec<f64>> = match colloc_override {
                    Some(all) => &all[si][ei],
                    None => &ctx.colloc[ei],
                };
                let channels = model.family.channels(eq.kind);
                let ch_tensors = channels
                    .iter()
                    .map(|m| eval_on_grid(&field, grid, m))
                    .collect::<Result<Vec<_>>>()?;
                let grid_shape: Vec<usize> = grid.iter().map(|g| g.len()).collect();
                let n_pts: usize = grid_shape.iter().product();
                let mut weights: Vec<Vec<f64>> =
                    (0..channels.len()).map(|_| vec![0.0; n_pts]).collect();
                let mut sum_sq = 0.0;
                let mut coords = vec![0usize; grid.len()];
                let mut point = vec![0.0; grid.len()];
                let mut ch_vals = vec![0.0; channels.len()];
                for flat in 0..n_pts {
                    for (k, &c) in coords.iter().enumerate() {
                        point[k] = grid[k][c];
                    }
                    for (m, t) in ch_tensors.iter().enumerate() {
                        ch_vals[m] = t.data()[flat];
                    }
                    let (r, g) = model.family.residual_and_grad(
                        eq.kind,
                        &point,
                        &sample_u(ctx, model),
                        &sample_alpha(ctx, model),
                        &ch_vals,
                    )?;
                    sum_sq += r * r;
                    let scale = 2.0 * r / n_pts as f64;
                    for (m, w) in weights.iter_mut().enumerate() {
                        w[flat] = scale * g[m];
                    }
                    advance(&mut coords, &grid_shape);
                }
                physics_loss += sum_sq / n_pts as f64 / n_samples as f64;
                let factor = config.physics_weight / n_samples as f64;
                for (m, w) in weights.into_iter().enumerate() {
                    let wt = Tensor::new(grid_shape.clone(), w)?;
                    let back = grid_adjoint(&ctx.bases, grid, &channels[m], &wt)?;
                    for (d, b) in dl_dc.data_mut().iter_mut().zip(back.data()) {
                        *d += factor * b;
                    }
                }
            }
        }
        if config.data_weight > 0.0 {
            if let Some(data) = &ctx.data {
                let zeros = vec![0usize; ctx.axes.len()];
                let pred = eval_on_grid(&field, &data.axis_points, &zeros)?;
                let n_pts = pred.len();
                let mut diff = vec![0.0; n_pts];
                let mut sum_sq = 0.0;
                for (i, (p, v)) in pred.data().iter().zip(data.values.data()).enumerate() {
                    let d = p - v;
                    diff[i] = 2.0 * d / n_pts as f64;
                    sum_sq += d * d;
                }
                data_loss += sum_sq / n_pts as f64 / n_samples as f64;
                let wt = Tensor::new(data.values.shape().to_vec(), diff)?;
                let back = grid_adjoint(&ctx.bases, &data.axis_points, &zeros, &wt)?;
                let factor = config.data_weight / n_samples as f64;
                for (d, b) in dl_dc.data_mut().iter_mut().zip(back.data()) {
                    *d += factor * b;
                }
            }
        }
        // Pinned entries take no parameter gradient: only unpinned entries
        // feed back into the network.
        let out_grad: Vec<f64> = ctx
            .pins
            .iter()
            .zip(dl_dc.data())
            .filter(|(pin, _)| pin.is_none())
            .map(|(_, &g)| g)
            .collect();
        let sample_grad = net::backward(&model.net_spec, &model.params, &tape, &out_grad)?;
        add_params(&mut grad, &sample_grad);
    }
    let total = config.physics_weight * physics_loss + config.data_weight * data_loss;
    Ok((total, grad, (physics_loss, data_loss)))
}

fn sample_u<'a>(ctx: &'a SampleContext, model: &DbsnModel) -> &'a [f64] {
    &ctx.input[..model.family.u_dim()]
}

fn sample_alpha<'a>(ctx: &'a SampleContext, model: &DbsnModel) -> &'a [f64] {
    &ctx.input[model.family.u_dim()..]
}

fn add_params(acc: &mut MlpParams, other: &MlpParams) {
    for (a, o) in acc.layers.iter_mut().zip(&other.layers) {
        for (x, y) in a.weights.iter_mut().zip(&o.weights) {
            *x += y;
        }
        for (x, y) in a.bias.iter_mut().zip(&o.bias) {
            *x += y;
        }
    }
}

/// Total loss L = w_p L_p + w_d L_d with its exact parameter gradient.
/// L_p sums, per governing equation, the mean squared residual over the
/// equation's collocation grid; L_d is the mean squared prediction error
/// over the supplied data grids. Both are averaged over samples.
pub fn total_loss_and_grad(
    model: &DbsnModel,
    config: &TrainConfig,
    samples: &[TrainSample],
) -> Result<(f64, MlpParams, (f64, f64))> {
    config.validate(model)?;
    let ctxs = samples
        .iter()
        .map(|s| build_context(model, config, s))
        .collect::<Result<Vec<_>>>()?;
    loss_and_grad_with(model, config, &ctxs, None)
}

/// Adam training loop; returns the per-epoch loss history. Deterministic
/// for a given seed.
pub fn train(
    model: &mut DbsnModel,
    config: &TrainConfig,
    samples: &[TrainSample],
) -> Result<Vec<f64>> {
    config.validate(model)?;
    let ctxs = samples
        .iter()
        .map(|s| build_context(model, config, s))
        .collect::<Result<Vec<_>>>()?;
    let mut history = Vec::with_capacity(config.epochs);
    let mut adam = AdamState::new(&model.params, config.learning_rate);
    let mut rng = crate::rng::SplitMix64::new(config.seed);
    for epoch in 0..config.epochs {
        let jittered;
        let colloc_override = if config.resample_colloc && config.physics_weight > 0.0 {
            jittered = ctxs
                .iter()
                .map(|ctx| {
                    ctx.colloc
                        .iter()
                        .map(|grid| {
                            grid.iter()
                                .map(|axis| jitter_axis(axis, &mut rng))
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>();
            Some(jittered.as_slice())
        } else {
            None
        };
        let (loss, grad, _) = loss_and_grad_with(model, config, &ctxs, colloc_override)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        history.push(loss);
        net::adam_step(&mut model.params, &grad, &mut adam)?;
    }
    Ok(history)
}

/// Moves every interior grid node uniformly within its half-cell
/// neighborhood; endpoints stay put so faces remain covered.
fn jitter_axis(axis: &[f64], rng: &mut crate::rng::SplitMix64) -> Vec<f64> {
    if axis.len() < 3 {
        return axis.to_vec();
    }
    let mut out = axis.to_vec();
    for i in 1..axis.len() - 1 {
        let lo = 0.5 * (axis[i - 1] + axis[i]);
        let hi = 0.5 * (axis[i] + axis[i + 1]);
        out[i] = rng.uniform(lo, hi);
    }
    out
}
