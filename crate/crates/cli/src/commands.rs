//! Implementations of the CLI subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dbsn_core::model::{
    predict_control_tensor, total_loss_and_grad, train, DbsnModel, TrainSample,
};
use dbsn_core::oracles::{ls_optimal_control_points, oracle_dataset};
use dbsn_core::physics::{PinValue, SlicePos};
use dbsn_core::spline::BasisSpec;
use dbsn_core::tensor::{
    convex_hull_bounds, eval_field, eval_on_grid, linspace, ControlTensor, GridDataset,
    SplineField,
};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::ExperimentConfig;
use crate::dataset::{read_dataset, write_dataset};
use crate::error::{CliError, Result};
use crate::report::{write_loss_history, CaseMetrics, MetricsReport};

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))
}

fn case_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("case{index:03}.csv"))
}

fn advance(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Generates one oracle dataset CSV per training parameter pair.
pub fn cmd_oracle_gen(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let family = cfg.family()?;
    for (i, (u, alpha)) in cfg.params.pairs()?.iter().enumerate() {
        let data = oracle_dataset(&family, u, alpha)?;
        let path = case_path(out, i);
        write_dataset(&path, &data)?;
        println!("wrote {} ({} points)", path.display(), data.values.data().len());
    }
    Ok(())
}

fn load_or_generate(
    cfg: &ExperimentConfig,
    index: usize,
    u: &[f64],
    alpha: &[f64],
) -> Result<GridDataset> {
    if let Some(dir) = &cfg.dataset_dir {
        let path = case_path(Path::new(dir), index);
        let data = read_dataset(&path)?;
        let matches = data.u == u && data.alpha == alpha;
        if !matches {
            return Err(CliError::Config(format!(
                "{}: parameters (u={:?}, alpha={:?}) do not match config pair {index} (u={u:?}, alpha={alpha:?})",
                path.display(),
                data.u,
                data.alpha,
            )));
        }
        Ok(data)
    } else {
        oracle_dataset(&cfg.family()?, u, alpha).map_err(CliError::from)
    }
}

fn train_samples(cfg: &ExperimentConfig) -> Result<Vec<TrainSample>> {
    let with_data = cfg.train.data_weight > 0.0;
    cfg.params
        .pairs()?
        .into_iter()
        .enumerate()
        .map(|(i, (u, alpha))| {
            let data =
                if with_data { Some(load_or_generate(cfg, i, &u, &alpha)?) } else { None };
            Ok(TrainSample { u, alpha, data })
        })
        .collect()
}

/// Trains a model from scratch and saves the checkpoint plus the
/// per-epoch loss history.
pub fn cmd_train(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let mut model = cfg.build_model(seed)?;
    let train_cfg = cfg.train_config(seed);
    let samples = train_samples(cfg)?;
    let start = std::time::Instant::now();
    let history = train(&mut model, &train_cfg, &samples)?;
    let elapsed = start.elapsed();

    save_checkpoint(&out.join("model.ckpt"), &model)?;
    write_loss_history(&out.join("loss_history.csv"), &history)?;
    // Wall-clock timing stays out of the deterministic artifacts.
    std::fs::write(
        out.join("timing.txt"),
        format!("train_seconds {:.3}\n", elapsed.as_secs_f64()),
    )?;
    if let Some(last) = history.last() {
        println!("trained {} epochs, final loss {last:.6e}", history.len());
    }
    println!("checkpoint: {}", out.join("model.ckpt").display());
    Ok(())
}

/// Mean absolute residual of the governing equation on a uniform
/// collocation grid.
fn mean_abs_residual(
    model: &DbsnModel,
    field: &SplineField,
    axes: &[BasisSpec],
    u: &[f64],
    alpha: &[f64],
    nodes: &[usize],
) -> Result<f64> {
    let family = &model.family;
    let grid: Vec<Vec<f64>> = axes
        .iter()
        .zip(nodes)
        .map(|(spec, &n)| linspace(spec.lo, spec.hi, n.max(2)))
        .collect();
    let eq = family.equations()[0];
    let channels = family.channels(eq.kind);
    let per_channel: Vec<_> = channels
        .iter()
        .map(|orders| eval_on_grid(field, &grid, orders))
        .collect::<dbsn_core::Result<_>>()?;
    let shape: Vec<usize> = grid.iter().map(|g| g.len()).collect();
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    let mut sum = 0.0;
    let mut point = vec![0.0; shape.len()];
    let mut values = vec![0.0; channels.len()];
    for flat in 0..total {
        for k in 0..shape.len() {
            point[k] = grid[k][idx[k]];
        }
        for (m, tensor) in per_channel.iter().enumerate() {
            values[m] = tensor.data()[flat];
        }
        let (r, _) = family.residual_and_grad(eq.kind, &point, u, alpha, &values)?;
        sum += r.abs();
        advance(&mut idx, &shape);
    }
    Ok(sum / total as f64)
}

fn extract_slice(coeffs: &ControlTensor, axis: usize, index: usize) -> (Vec<usize>, Vec<f64>) {
    let shape = coeffs.shape().to_vec();
    let sub_shape: Vec<usize> =
        shape.iter().enumerate().filter(|&(k, _)| k != axis).map(|(_, &n)| n).collect();
    let mut out = Vec::with_capacity(sub_shape.iter().product());
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        if idx[axis] == index {
            out.push(coeffs.data()[flat]);
        }
        advance(&mut idx, &shape);
    }
    (sub_shape, out)
}

/// Largest absolute mismatch between the field on each pinned face and
/// the values its pinned control-point slice defines.
///
/// For constant pins the target is the constant, checked away from
/// corners where a later rule takes precedence; for fitted initial
/// conditions the target is the fitted slice itself evaluated as a
/// lower-dimensional spline, since the condition is represented by its
/// projection onto the basis.
pub fn icbc_max_violation(
    model: &DbsnModel,
    u: &[f64],
    alpha: &[f64],
    nodes_per_axis: usize,
) -> Result<f64> {
    let axes = model.axes(alpha)?;
    let coeffs = predict_control_tensor(model, u, alpha)?;
    let field = SplineField::new(axes.clone(), coeffs.clone())?;
    let n = axes.len();
    let mut worst: f64 = 0.0;

    for (r, rule) in model.pinning.rules.iter().enumerate() {
        let spec = &axes[rule.axis];
        let (face_coord, slice_index) = match rule.pos {
            SlicePos::First => (spec.lo, 0),
            SlicePos::Last => (spec.hi, spec.count - 1),
        };
        // Corner zones where a later (higher-precedence) rule owns the
        // shared control points: skip one full basis support there.
        let mut margins: Vec<Option<(SlicePos, f64)>> = vec![None; n];
        for later in &model.pinning.rules[r + 1..] {
            if later.axis != rule.axis {
                let s = &axes[later.axis];
                let support = (s.hi - s.lo) / (s.count - s.order) as f64
                    * (s.order + 1) as f64;
                margins[later.axis] = Some((later.pos, support));
            }
        }

        let (sub_shape, sub_data) = extract_slice(&coeffs, rule.axis, slice_index);
        let sub_axes: Vec<BasisSpec> =
            axes.iter().enumerate().filter(|&(k, _)| k != rule.axis).map(|(_, s)| *s).collect();
        let sub_field = if matches!(rule.value, PinValue::FittedIc) {
            Some(SplineField::new(
                sub_axes.clone(),
                ControlTensor::new(sub_shape.clone(), sub_data)?,
            )?)
        } else {
            None
        };

        let grid: Vec<Vec<f64>> =
            sub_axes.iter().map(|s| linspace(s.lo, s.hi, nodes_per_axis)).collect();
        let shape: Vec<usize> = vec![nodes_per_axis; sub_axes.len()];
        let total: usize = shape.iter().product();
        let mut idx = vec![0usize; sub_axes.len()];
        for _ in 0..total {
            let sub_point: Vec<f64> =
                (0..sub_axes.len()).map(|k| grid[k][idx[k]]).collect();
            let mut point = Vec::with_capacity(n);
            let mut skip = false;
            let mut sub_k = 0;
            for k in 0..n {
                if k == rule.axis {
                    point.push(face_coord);
                } else {
                    let x = sub_point[sub_k];
                    if let Some((pos, support)) = margins[k] {
                        let s = &axes[k];
                        let near = match pos {
                            SlicePos::First => x < s.lo + support,
                            SlicePos::Last => x > s.hi - support,
                        };
                        if near {
                            skip = true;
                        }
                    }
                    point.push(x);
                    sub_k += 1;
                }
            }
            if !skip {
                let actual = eval_field(&field, &point)?;
                let target = match (&rule.value, &sub_field) {
                    (PinValue::Constant(c), _) => *c,
                    (PinValue::FittedIc, Some(f)) => eval_field(f, &sub_point)?,
                    (PinValue::FittedIc, None) => unreachable!(),
                };
                worst = worst.max((actual - target).abs());
            }
            advance(&mut idx, &shape);
        }
    }
    Ok(worst)
}

fn prediction_grid_csv(field: &SplineField, oracle: &GridDataset) -> Result<(String, f64)> {
    let orders = vec![0usize; oracle.axis_points.len()];
    let pred = eval_on_grid(field, &oracle.axis_points, &orders)?;
    let n = oracle.axis_points.len();
    let mut out = String::new();
    for k in 0..n {
        let _ = write!(out, "x{},", k + 1);
    }
    out.push_str("value_pred,value_oracle,abs_err\n");
    let shape: Vec<usize> = oracle.axis_points.iter().map(|p| p.len()).collect();
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; n];
    let mut sq_sum = 0.0;
    for flat in 0..total {
        let p = pred.data()[flat];
        let o = oracle.values.data()[flat];
        let err = (p - o).abs();
        sq_sum += err * err;
        for k in 0..n {
            let _ = write!(out, "{:.17e},", oracle.axis_points[k][idx[k]]);
        }
        let _ = writeln!(out, "{p:.17e},{o:.17e},{err:.17e}");
        advance(&mut idx, &shape);
    }
    Ok((out, sq_sum / total as f64))
}

fn evaluate_case(
    cfg: &ExperimentConfig,
    model: &DbsnModel,
    u: &[f64],
    alpha: &[f64],
    oracle: &GridDataset,
) -> Result<(CaseMetrics, String)> {
    let axes = model.axes(alpha)?;
    let coeffs = predict_control_tensor(model, u, alpha)?;
    let field = SplineField::new(axes.clone(), coeffs)?;
    let (grid_csv, mse) = prediction_grid_csv(&field, oracle)?;
    let residual =
        mean_abs_residual(model, &field, &axes, u, alpha, &cfg.train.colloc_nodes)?;
    let (hull_lo, hull_hi) = convex_hull_bounds(&field);
    let icbc = icbc_max_violation(model, u, alpha, 33)?;
    let metrics = CaseMetrics {
        u: u.to_vec(),
        alpha: alpha.to_vec(),
        mse,
        mean_abs_residual: residual,
        hull_lo,
        hull_hi,
        icbc_max_violation: icbc,
    };
    Ok((metrics, grid_csv))
}

/// Evaluates a trained checkpoint against the oracles and writes a
/// deterministic report plus per-case prediction grids.
pub fn cmd_eval(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let ckpt = out.join("model.ckpt");
    let model = load_checkpoint(&ckpt)?;
    let family = cfg.family()?;
    if model.family.kind != family.kind {
        return Err(CliError::Config(format!(
            "checkpoint family {:?} does not match config family {:?}",
            model.family.kind, family.kind
        )));
    }

    let start = std::time::Instant::now();
    let mut cases = Vec::new();
    for (i, (u, alpha)) in cfg.eval_pairs()?.iter().enumerate() {
        let oracle = oracle_dataset(&family, u, alpha)?;
        let (metrics, grid_csv) = evaluate_case(cfg, &model, u, alpha, &oracle)?;
        std::fs::write(out.join(format!("grid_case{i:03}.csv")), grid_csv)?;
        println!(
            "case {i}: u={u:?} alpha={alpha:?} mse={:.3e} residual={:.3e} icbc={:.3e}",
            metrics.mse, metrics.mean_abs_residual, metrics.icbc_max_violation
        );
        cases.push(metrics);
    }
    let report = MetricsReport::new("eval", seed, cases, cfg.clone());
    report.save(&out.join("report.toml"))?;
    std::fs::write(
        out.join("timing.txt"),
        format!("eval_seconds {:.3}\n", start.elapsed().as_secs_f64()),
    )?;
    println!("mean mse {:.6e}", report.mean_mse);
    println!("report: {}", out.join("report.toml").display());
    Ok(())
}

/// Audits the analytic training gradient against central differences on
/// a random subset of parameters. Fails numerically above `tol`.
pub fn cmd_gradcheck(cfg: &ExperimentConfig, seed: u64, tol: f64) -> Result<()> {
    let model = cfg.build_model(seed)?;
    let train_cfg = cfg.train_config(seed);
    let samples = train_samples(cfg)?;
    let (_, grad, _) = total_loss_and_grad(&model, &train_cfg, &samples)?;
    let flat_grad = grad.flatten();
    let flat = model.params.flatten();

    let mut rng = dbsn_core::rng::SplitMix64::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n_checked = 32.min(flat.len());
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..n_checked {
        let j = (rng.next_u64() as usize) % flat.len();
        let mut probe = model.clone();
        let mut bumped = flat.clone();
        bumped[j] += h;
        probe.params.unflatten_into(&bumped)?;
        let (lp, _, _) = total_loss_and_grad(&probe, &train_cfg, &samples)?;
        bumped[j] = flat[j] - h;
        probe.params.unflatten_into(&bumped)?;
        let (lm, _, _) = total_loss_and_grad(&probe, &train_cfg, &samples)?;
        let fd = (lp - lm) / (2.0 * h);
        let denom = fd.abs().max(flat_grad[j].abs()).max(1.0);
        worst = worst.max((fd - flat_grad[j]).abs() / denom);
    }
    println!("gradcheck: {n_checked} parameters, max relative error {worst:.3e}");
    if worst > tol {
        return Err(CliError::Numerical(format!(
            "gradient check failed: {worst:.3e} > {tol:.3e}"
        )));
    }
    Ok(())
}

/// Least-squares fits the basis directly to the oracle data for each
/// parameter pair, reporting the approximation floor of the basis.
pub fn cmd_fit(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let family = cfg.family()?;
    let model = cfg.build_model(seed)?;
    let mut cases = Vec::new();
    for (i, (u, alpha)) in cfg.eval_pairs()?.iter().enumerate() {
        let axes = model.axes(alpha)?;
        let coeffs = ls_optimal_control_points(&family, u, alpha, &axes)?;
        let field = SplineField::new(axes.clone(), coeffs)?;
        let oracle = oracle_dataset(&family, u, alpha)?;
        let (grid_csv, mse) = prediction_grid_csv(&field, &oracle)?;
        std::fs::write(out.join(format!("fit_case{i:03}.csv")), grid_csv)?;
        let residual =
            mean_abs_residual(&model, &field, &axes, u, alpha, &cfg.train.colloc_nodes)?;
        let (hull_lo, hull_hi) = convex_hull_bounds(&field);
        println!("case {i}: u={u:?} alpha={alpha:?} fit floor mse={mse:.6e}");
        cases.push(CaseMetrics {
            u: u.clone(),
            alpha: alpha.clone(),
            mse,
            mean_abs_residual: residual,
            hull_lo,
            hull_hi,
            icbc_max_violation: f64::NAN,
        });
    }
    let report = MetricsReport::new("fit", seed, cases, cfg.clone());
    report.save(&out.join("fit_report.toml"))?;
    println!("mean fit floor {:.6e}", report.mean_mse);
    Ok(())
}
