//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line with the measured quantity before asserting.
//!
//! Heavy recovery-problem runs are shared between criteria through
//! lazily initialized statics, so the suite trains each configuration
//! once no matter how the tests are scheduled.

use std::sync::OnceLock;
use std::time::Instant;

use dbsn_core::model::{predict_control_tensor, train, DbsnModel, TrainConfig, TrainSample};
use dbsn_core::model::total_loss_and_grad;
use dbsn_core::net::Activation;
use dbsn_core::oracles::{
    fd_derivative_check, fd_solve, generate_recovery_dataset, ls_optimal_control_points,
    oracle_dataset, recovery_probability, recovery_probability_closed_form, FdScheme,
    FdSolverSpec, QuadratureSpec,
};
use dbsn_core::physics::{
    map_trapezoid, map_trapezoid_inverse, residual_advection, residual_burgers, AdvectionForm,
    FamilyKind, PdeFamily,
};
use dbsn_core::rng::SplitMix64;
use dbsn_core::spline::{eval_basis, make_clamped_knots, BasisSpec};
use dbsn_core::tensor::{
    convex_hull_bounds, eval_field, eval_on_grid, linspace, ls_fit, ControlTensor, GridDataset,
    SplineField, Tensor,
};

fn verdict(number: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {number:02} [{name}]: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number:02} [{name}] failed: {detail}");
}

// ---------------------------------------------------------------------------
// Shared recovery-problem runs.

struct RecoveryRun {
    model: DbsnModel,
    test_mse: f64,
    train_seconds: f64,
}

fn recovery_field(model: &DbsnModel, u: &[f64], alpha: &[f64]) -> SplineField {
    let axes = model.axes(alpha).unwrap();
    let coeffs = predict_control_tensor(model, u, alpha).unwrap();
    SplineField::new(axes, coeffs).unwrap()
}

fn grid_mse(field: &SplineField, data: &GridDataset) -> f64 {
    let orders = vec![0usize; data.axis_points.len()];
    let pred = eval_on_grid(field, &data.axis_points, &orders).unwrap();
    let n = pred.data().len();
    pred.data()
        .iter()
        .zip(data.values.data())
        .map(|(p, o)| (p - o) * (p - o))
        .sum::<f64>()
        / n as f64
}

fn recovery_test_pairs() -> Vec<(f64, f64)> {
    let mut pairs = Vec::new();
    for &u in &[0.25, 0.75, 1.25, 1.75] {
        for &alpha in &[1.2, 2.0, 2.8] {
            pairs.push((u, alpha));
        }
    }
    pairs
}

fn recovery_test_mse(model: &DbsnModel) -> f64 {
    let family = PdeFamily::new(FamilyKind::ConvectionDiffusion);
    let pairs = recovery_test_pairs();
    let mut total = 0.0;
    for &(u, alpha) in &pairs {
        let data = oracle_dataset(&family, &[u], &[alpha]).unwrap();
        let field = recovery_field(model, &[u], &[alpha]);
        total += grid_mse(&field, &data);
    }
    total / pairs.len() as f64
}

fn train_recovery(count: usize, order: usize, epochs: usize, physics_weight: f64) -> RecoveryRun {
    let family = PdeFamily::new(FamilyKind::ConvectionDiffusion);
    let mut model = DbsnModel::new(
        family,
        vec![count, count],
        order,
        vec![64, 64, 64],
        Activation::Relu,
        17,
    )
    .unwrap();
    let u_grid = linspace(0.0, 2.0, 5);
    let alpha_grid = linspace(0.8, 4.0, 5);
    let mut samples = Vec::new();
    for &u in &u_grid {
        for &alpha in &alpha_grid {
            let data = generate_recovery_dataset(&[u], &[alpha], 0.2, 0.2)
                .unwrap()
                .into_iter()
                .next()
                .unwrap();
            samples.push(TrainSample { u: vec![u], alpha: vec![alpha], data: Some(data) });
        }
    }
    let config = TrainConfig {
        epochs,
        physics_weight,
        data_weight: 1.0,
        colloc_nodes: vec![31, 31],
        learning_rate: 1e-3,
        seed: 17,
        resample_colloc: false,
    };
    let start = Instant::now();
    train(&mut model, &config, &samples).unwrap();
    let train_seconds = start.elapsed().as_secs_f64();
    let test_mse = recovery_test_mse(&model);
    RecoveryRun { model, test_mse, train_seconds }
}

static DESK: OnceLock<RecoveryRun> = OnceLock::new();
static FULL: OnceLock<RecoveryRun> = OnceLock::new();
static COARSE: OnceLock<RecoveryRun> = OnceLock::new();

fn desk_run() -> &'static RecoveryRun {
    DESK.get_or_init(|| train_recovery(15, 3, 10000, 1.0))
}

fn full_run() -> &'static RecoveryRun {
    FULL.get_or_init(|| train_recovery(25, 3, 20000, 1.0))
}

fn coarse_run() -> &'static RecoveryRun {
    // Two control points per axis cannot carry a cubic; linear order is
    // the largest basis that admits this resolution, and a linear spline
    // has no second derivative for the residual, so this run trains on
    // the data term alone.
    COARSE.get_or_init(|| train_recovery(2, 1, 2000, 0.0))
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_knot_vector_example() {
    let spec = BasisSpec::new(0.0, 3.0, 3, 6).unwrap();
    let knots = make_clamped_knots(&spec).unwrap();
    let expected = [0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0];
    let pass = knots.as_slice() == expected;
    verdict(1, "knot construction", pass, &format!("knots {:?}", knots.as_slice()));
}

#[test]
fn criterion_02_partition_of_unity_and_nonnegativity() {
    let mut rng = SplitMix64::new(2);
    let mut worst_sum = 0.0f64;
    let mut worst_neg = 0.0f64;
    let mut configs = 0;
    for order in 1..=5usize {
        for count in [order + 1, order + 3, order + 7, order + 20] {
            let spec = BasisSpec::new(-2.5, 7.0, order, count).unwrap();
            let knots = make_clamped_knots(&spec).unwrap();
            for _ in 0..50 {
                let x = rng.uniform(spec.lo, spec.hi);
                let basis = eval_basis(&spec, &knots, x).unwrap();
                let sum: f64 = basis.values.iter().sum();
                worst_sum = worst_sum.max((sum - 1.0).abs());
                for &b in &basis.values {
                    worst_neg = worst_neg.max(-b);
                }
            }
            configs += 1;
        }
    }
    let pass = worst_sum <= 1e-12 && worst_neg <= 0.0;
    verdict(
        2,
        "basis properties",
        pass,
        &format!(
            "{configs} configs, max |sum-1| {worst_sum:.2e}, max negativity {worst_neg:.2e}"
        ),
    );
}

#[test]
fn criterion_03_derivative_audit() {
    let specs =
        vec![BasisSpec::new(-10.0, 2.0, 3, 15).unwrap(), BasisSpec::new(0.0, 10.0, 3, 15).unwrap()];
    let mut rng = SplitMix64::new(3);
    let coeffs = ControlTensor::new(
        vec![15, 15],
        (0..225).map(|_| rng.uniform(-1.0, 1.0)).collect(),
    )
    .unwrap();
    let field = SplineField::new(specs, coeffs).unwrap();
    let xs = linspace(-10.0, 2.0, 100);
    let ts = linspace(0.0, 10.0, 100);
    let mut points = Vec::new();
    for &x in &xs {
        for &t in &ts {
            points.push(vec![x, t]);
        }
    }
    let mut worst = 0.0f64;
    for orders in [[1, 0], [0, 1], [2, 0], [0, 2]] {
        let report = fd_derivative_check(&field, &points, &orders, 1e-3).unwrap();
        worst = worst.max(report.max_abs_error);
    }
    let pass = worst <= 1e-5;
    verdict(3, "derivative correctness", pass, &format!("max abs error {worst:.3e}"));
}

#[test]
fn criterion_04_ls_convergence_rate() {
    // Cubic least-squares fits of sin on [0, pi], resolution doubling
    // 8 -> 16 -> 32; the stated acceptance band is ratios in
    // [0.7 * 8, 1.3 * 8].
    let fine = linspace(0.0, std::f64::consts::PI, 4001);
    let values: Vec<f64> = fine.iter().map(|&x| x.sin()).collect();
    let mut errors = Vec::new();
    for count in [8usize, 16, 32] {
        let spec = BasisSpec::new(0.0, std::f64::consts::PI, 3, count).unwrap();
        let data = GridDataset::new(
            vec![fine.clone()],
            Tensor::new(vec![fine.len()], values.clone()).unwrap(),
            vec![],
            vec![],
        )
        .unwrap();
        let coeffs = ls_fit(&[spec], &data).unwrap();
        let field = SplineField::new(vec![spec], coeffs).unwrap();
        let max_err = fine
            .iter()
            .map(|&x| (eval_field(&field, &[x]).unwrap() - x.sin()).abs())
            .fold(0.0f64, f64::max);
        errors.push(max_err);
    }
    let r1 = errors[0] / errors[1];
    let r2 = errors[1] / errors[2];
    let band = 0.7 * 8.0..=1.3 * 8.0;
    let pass = band.contains(&r1) && band.contains(&r2);
    verdict(
        4,
        "approximation convergence",
        pass,
        &format!(
            "errors {:?}, ratios {r1:.2} and {r2:.2}, required band [{:.1}, {:.1}] \
             (cubic fits of a smooth target contract at ~2^4 per doubling, outside the band)",
            errors,
            band.start(),
            band.end()
        ),
    );
}

#[test]
fn criterion_05_quadrature_vs_closed_form() {
    let spec = QuadratureSpec::default();
    let mut rng = SplitMix64::new(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alpha = rng.uniform(0.05, 4.0);
        let u = rng.uniform(0.0, 2.0);
        let x = rng.uniform(-10.0, alpha);
        let t = rng.uniform(1e-3, 10.0);
        let q = recovery_probability(x, t, u, alpha, &spec).unwrap();
        let c = recovery_probability_closed_form(x, t, u, alpha).unwrap();
        worst = worst.max((q - c).abs());
    }
    let boundary = recovery_probability(2.0, 3.0, 1.0, 2.0, &spec).unwrap();
    let initial = recovery_probability(-1.0, 0.0, 1.0, 2.0, &spec).unwrap();
    let pass = worst <= 1e-6 && boundary == 1.0 && initial == 0.0;
    verdict(
        5,
        "oracle cross-validation",
        pass,
        &format!("max |quad - closed| {worst:.3e}, boundary {boundary}, initial {initial}"),
    );
}

#[test]
fn criterion_06_gradient_exactness_every_family() {
    let cases: Vec<(FamilyKind, Vec<usize>, usize, Vec<usize>, Vec<f64>, Vec<f64>)> = vec![
        (FamilyKind::ConvectionDiffusion, vec![6, 6], 3, vec![7, 7], vec![1.2], vec![2.0]),
        (FamilyKind::Heat3d, vec![5, 5, 5, 5], 3, vec![5, 5, 5, 5], vec![], vec![
            0.2, -0.3, 0.1, 0.6,
        ]),
        (FamilyKind::Burgers, vec![7, 7], 4, vec![7, 7], vec![1.0], vec![3.0]),
        (FamilyKind::AdvectionLinear, vec![8, 8], 5, vec![7, 7], vec![1.0], vec![1.0]),
        (FamilyKind::AdvectionNonlinear, vec![8, 8], 5, vec![7, 7], vec![1.0], vec![1.0]),
        (FamilyKind::TrapezoidDiffusion, vec![6, 6, 7], 3, vec![5, 5, 6], vec![], vec![0.8]),
    ];
    let mut worst_overall = 0.0f64;
    let mut detail = String::new();
    for (kind, counts, order, colloc, u, alpha) in cases {
        let family = PdeFamily::new(kind);
        let mut model =
            DbsnModel::new(family, counts, order, vec![8, 8], Activation::Tanh, 6).unwrap();
        // Shrink the initialization so tanh stays in its smooth region
        // for the finite-difference probes.
        model.params.for_each_mut(|p| *p *= 0.3);
        let data = if kind == FamilyKind::ConvectionDiffusion {
            Some(
                generate_recovery_dataset(&[u[0]], &[alpha[0]], 0.5, 0.5)
                    .unwrap()
                    .into_iter()
                    .next()
                    .unwrap(),
            )
        } else {
            None
        };
        let data_weight = if data.is_some() { 1.0 } else { 0.0 };
        let samples = vec![TrainSample { u, alpha, data }];
        let config = TrainConfig {
            epochs: 0,
            physics_weight: 1.0,
            data_weight,
            colloc_nodes: colloc,
            learning_rate: 1e-3,
            seed: 6,
            resample_colloc: false,
        };
        let (_, grad, _) = total_loss_and_grad(&model, &config, &samples).unwrap();
        let flat_grad = grad.flatten();
        let flat = model.params.flatten();
        let mut rng = SplitMix64::new(60 + kind as u64);
        let h = 1e-5;
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let j = (rng.next_u64() as usize) % flat.len();
            let mut probe = model.clone();
            let mut bumped = flat.clone();
            bumped[j] = flat[j] + h;
            probe.params.unflatten_into(&bumped).unwrap();
            let (lp, _, _) = total_loss_and_grad(&probe, &config, &samples).unwrap();
            bumped[j] = flat[j] - h;
            probe.params.unflatten_into(&bumped).unwrap();
            let (lm, _, _) = total_loss_and_grad(&probe, &config, &samples).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let rel = (fd - flat_grad[j]).abs() / fd.abs().max(flat_grad[j].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        detail.push_str(&format!("{kind:?} {worst:.2e}; "));
        worst_overall = worst_overall.max(worst);
    }
    let pass = worst_overall <= 1e-4;
    verdict(6, "gradient exactness", pass, &format!("max relative error per family: {detail}"));
}

fn recovery_icbc_violation(model: &DbsnModel, u: f64, alpha: f64) -> (f64, f64) {
    let field = recovery_field(model, &[u], &[alpha]);
    let spec_x = *field.axes()[0].spec();
    // The shared corner control point belongs to the boundary rule, so
    // the initial line is exact only outside the last basis support.
    let spacing = (spec_x.hi - spec_x.lo) / (spec_x.count - spec_x.order) as f64;
    let mut ic_violation = 0.0f64;
    for x in linspace(-10.0, alpha - 1.001 * spacing, 200) {
        ic_violation = ic_violation.max(eval_field(&field, &[x, 0.0]).unwrap().abs());
    }
    let mut bc_violation = 0.0f64;
    for t in linspace(0.0, 10.0, 200) {
        bc_violation = bc_violation.max((eval_field(&field, &[alpha, t]).unwrap() - 1.0).abs());
    }
    (ic_violation, bc_violation)
}

#[test]
fn criterion_07_icbc_exactness() {
    let family = PdeFamily::new(FamilyKind::ConvectionDiffusion);
    let fresh =
        DbsnModel::new(family, vec![15, 15], 3, vec![64, 64, 64], Activation::Relu, 7).unwrap();
    let (ic_before, bc_before) = recovery_icbc_violation(&fresh, 1.0, 2.0);
    let trained = &desk_run().model;
    let (ic_after, bc_after) = recovery_icbc_violation(trained, 1.0, 2.0);
    let worst = ic_before.max(bc_before).max(ic_after).max(bc_after);
    let pass = worst <= 1e-12;
    verdict(
        7,
        "ICBC exactness",
        pass,
        &format!(
            "before training ic {ic_before:.2e} / bc {bc_before:.2e}, \
             after ic {ic_after:.2e} / bc {bc_after:.2e}"
        ),
    );
}

#[test]
fn criterion_08_recovery_mse() {
    let desk = desk_run();
    let full = full_run();
    let desk_ok = desk.test_mse <= 5e-3 && desk.train_seconds <= 600.0;
    let full_ok = full.test_mse <= 10.0 * 3.064e-4;
    let pass = desk_ok && full_ok;
    verdict(
        8,
        "recovery experiment",
        pass,
        &format!(
            "desk mse {:.3e} (limit 5e-3) in {:.0} s (limit 600), full-scale mse {:.3e} \
             (limit {:.3e})",
            desk.test_mse,
            desk.train_seconds,
            full.test_mse,
            10.0 * 3.064e-4
        ),
    );
}

#[test]
fn criterion_09_resolution_trend() {
    let coarse = coarse_run();
    let desk = desk_run();
    let full = full_run();
    let pass =
        coarse.test_mse >= 100.0 * desk.test_mse && full.test_mse <= desk.test_mse;
    verdict(
        9,
        "resolution trend",
        pass,
        &format!(
            "mse at 2/15/25 control points: {:.3e} / {:.3e} / {:.3e}",
            coarse.test_mse, desk.test_mse, full.test_mse
        ),
    );
}

#[test]
fn criterion_10_convex_hull() {
    let model = &full_run().model;
    let mut rng = SplitMix64::new(10);
    let mut pass = true;
    let mut outside_band = 0usize;
    let mut hull_detail = String::new();
    for &(u, alpha) in &[(0.5, 2.0), (1.5, 3.0)] {
        let field = recovery_field(model, &[u], &[alpha]);
        let (lo, hi) = convex_hull_bounds(&field);
        for _ in 0..1000 {
            let x = rng.uniform(-10.0, alpha);
            let t = rng.uniform(0.0, 10.0);
            let v = eval_field(&field, &[x, t]).unwrap();
            if v < lo - 1e-12 || v > hi + 1e-12 {
                pass = false;
            }
            if !(-0.05..=1.05).contains(&v) {
                outside_band += 1;
            }
        }
        hull_detail.push_str(&format!("hull [{lo:.3}, {hi:.3}]; "));
    }
    verdict(
        10,
        "convex hull",
        pass,
        &format!(
            "{hull_detail}diagnostic: {outside_band}/2000 predictions outside [-0.05, 1.05]"
        ),
    );
}

#[test]
fn criterion_11_ls_optimal_audit() {
    let model = &full_run().model;
    let (u, alpha) = (1.5, 2.0);
    let axes = model.axes(&[alpha]).unwrap();
    let family = PdeFamily::new(FamilyKind::ConvectionDiffusion);
    let ls = ls_optimal_control_points(&family, &[u], &[alpha], &axes).unwrap();
    let predicted = predict_control_tensor(model, &[u], &[alpha]).unwrap();
    let mut diffs: Vec<f64> = predicted
        .data()
        .iter()
        .zip(ls.data())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let mut argmax = 0;
    for (i, &d) in diffs.iter().enumerate() {
        if d > diffs[argmax] {
            argmax = i;
        }
    }
    let count = model.counts[0];
    let (ix, it) = (argmax / count, argmax % count);
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = diffs[diffs.len() / 2];
    // The discontinuity sits at the (alpha, 0) corner: large x index,
    // small t index.
    let near_corner = ix >= (4 * count) / 5 && it <= count / 5;
    let pass = median <= 0.05 && near_corner;
    verdict(
        11,
        "LS-optimal audit",
        pass,
        &format!("median |diff| {median:.4}, argmax entry ({ix}, {it}) of {count}x{count}"),
    );
}

#[test]
fn criterion_12_heat3d_residual() {
    // The heat solution depends affinely on alpha (linear PDE, affine
    // initial condition, fixed boundary data), so the coefficient net is
    // a single linear layer. Its weights are initialized by solving the
    // affine map through per-sample least-squares control tensors, then
    // polished against the physics loss.
    let family = PdeFamily::new(FamilyKind::Heat3d);
    let mut model = DbsnModel::new(
        family.clone(),
        vec![10, 10, 10, 10],
        3,
        vec![],
        Activation::Relu,
        12,
    )
    .unwrap();
    let mut rng = SplitMix64::new(120);
    let mut train_alphas: Vec<Vec<f64>> = (0..7)
        .map(|_| {
            vec![
                rng.uniform(-0.45, 0.45),
                rng.uniform(-0.45, 0.45),
                rng.uniform(-0.45, 0.45),
                rng.uniform(0.1, 0.9),
            ]
        })
        .collect();
    train_alphas.push(vec![0.0, 0.0, 0.0, 0.5]);

    let assignments = model.pinning.assignments(&model.counts);
    let n_out = model.net_spec.output_dim;
    let mut targets: Vec<Vec<f64>> = Vec::new();
    for alpha in &train_alphas {
        let axes = model.axes(alpha).unwrap();
        let ls = ls_optimal_control_points(&family, &[], alpha, &axes).unwrap();
        let unpinned: Vec<f64> = ls
            .data()
            .iter()
            .zip(&assignments)
            .filter(|(_, a)| a.is_none())
            .map(|(&v, _)| v)
            .collect();
        assert_eq!(unpinned.len(), n_out);
        targets.push(unpinned);
    }
    let feats: Vec<[f64; 5]> = train_alphas
        .iter()
        .map(|a| [a[0], a[1], a[2], a[3], 1.0])
        .collect();
    let mut normal = [[0.0f64; 5]; 5];
    for f in &feats {
        for i in 0..5 {
            for j in 0..5 {
                normal[i][j] += f[i] * f[j];
            }
        }
    }
    for r in 0..n_out {
        let mut a = normal;
        let mut b = [0.0f64; 5];
        for (f, t) in feats.iter().zip(&targets) {
            for i in 0..5 {
                b[i] += f[i] * t[r];
            }
        }
        // Gaussian elimination with partial pivoting on the shared 5x5
        // normal matrix.
        for col in 0..5 {
            let piv = (col..5)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..5 {
                let factor = a[row][col] / a[col][col];
                for k in col..5 {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
        let mut x = [0.0f64; 5];
        for i in (0..5).rev() {
            let mut v = b[i];
            for k in i + 1..5 {
                v -= a[i][k] * x[k];
            }
            x[i] = v / a[i][i];
        }
        for c in 0..4 {
            model.params.layers[0].weights[r * 4 + c] = x[c];
        }
        model.params.layers[0].bias[r] = x[4];
    }

    let samples: Vec<TrainSample> = train_alphas
        .into_iter()
        .map(|alpha| TrainSample { u: vec![], alpha, data: None })
        .collect();
    let config = TrainConfig {
        epochs: 1000,
        physics_weight: 1.0,
        data_weight: 0.0,
        colloc_nodes: vec![10, 10, 10, 10],
        learning_rate: 1e-4,
        seed: 12,
        resample_colloc: false,
    };
    train(&mut model, &config, &samples).unwrap();

    // Held-out parameter: mean absolute PDE residual on a strict
    // interior grid.
    let alpha = vec![0.2, -0.3, 0.1, 0.55];
    let field = recovery_field(&model, &[], &alpha);
    let interior: Vec<Vec<f64>> = (0..4).map(|_| linspace(0.1, 0.9, 7)).collect();
    let eq = family.equations()[0];
    let channels = family.channels(eq.kind);
    let per_channel: Vec<Tensor> = channels
        .iter()
        .map(|orders| eval_on_grid(&field, &interior, orders).unwrap())
        .collect();
    let total = 7usize.pow(4);
    let mut sum = 0.0;
    for flat in 0..total {
        let mut idx = [0usize; 4];
        let mut rem = flat;
        for k in (0..4).rev() {
            idx[k] = rem % 7;
            rem /= 7;
        }
        let point: Vec<f64> = (0..4).map(|k| interior[k][idx[k]]).collect();
        let values: Vec<f64> = per_channel.iter().map(|t| t.data()[flat]).collect();
        let (r, _) = family.residual_and_grad(eq.kind, &point, &[], &alpha, &values).unwrap();
        sum += r.abs();
    }
    let mean_abs = sum / total as f64;
    let pass = mean_abs <= 1e-2;
    verdict(
        12,
        "heat 3-D residual",
        pass,
        &format!("held-out mean abs interior residual {mean_abs:.3e} (limit 1e-2)"),
    );
}

#[test]
fn criterion_13_burgers_advection() {
    // Part 1: analytic travelling waves satisfy the residual forms.
    let mut rng = SplitMix64::new(13);
    let mut worst_wave = 0.0f64;
    for _ in 0..200 {
        // Linear advection of a sinusoid.
        let (u, alpha) = (rng.uniform(0.5, 1.5), rng.uniform(0.0, std::f64::consts::TAU));
        let (x, t) = (rng.uniform(0.0, 1.0), rng.uniform(0.0, 2.0));
        let k = std::f64::consts::TAU;
        let s = (k * (x - u * t) + alpha).sin();
        let s_x = k * (k * (x - u * t) + alpha).cos();
        let s_t = -u * s_x;
        worst_wave = worst_wave.max(residual_advection(s, s_t, s_x, u, AdvectionForm::Linear).abs());

        // Viscous shock profile: w = c - a*tanh(a(x - c t)/(2 nu))
        // solves the standard form, and s = w/u solves the scaled one.
        let (nu, c, a) = (0.01, 1.0, 0.5);
        let xi = rng.uniform(-0.08, 0.08);
        let theta = a * xi / (2.0 * nu);
        let sech2 = 1.0 / theta.cosh().powi(2);
        let s = (c - a * theta.tanh()) / u;
        let s_x = -(a * a / (2.0 * nu)) * sech2 / u;
        let s_t = -c * s_x;
        let s_xx = (a * a * a / (2.0 * nu * nu)) * sech2 * theta.tanh() / u;
        worst_wave = worst_wave.max(residual_burgers(s, s_t, s_x, s_xx, u, nu).abs());
    }

    // Part 2: trained test MSE against the least-squares representation
    // floor at full resolution.
    let mut part2 = String::new();
    let mut part2_ok = true;
    // The advection reference grid needs more time samples than the
    // default so the 150-point basis is determined in the floor fit.
    let advection_nodes = vec![401, 201];
    for (kind, counts, order, colloc, u, alpha, test_u, test_alpha) in [
        (
            FamilyKind::Burgers,
            vec![100, 100],
            4,
            vec![81, 65],
            vec![vec![0.75], vec![1.25]],
            vec![vec![2.5], vec![3.5]],
            vec![1.0],
            vec![3.0],
        ),
        (
            FamilyKind::AdvectionLinear,
            vec![150, 150],
            5,
            vec![81, 81],
            vec![vec![0.75], vec![1.25]],
            vec![vec![1.0], vec![2.0]],
            vec![1.0],
            vec![1.5],
        ),
    ] {
        let family = PdeFamily::new(kind);
        let mut model = DbsnModel::new(
            family.clone(),
            counts,
            order,
            vec![64, 64, 64],
            Activation::Relu,
            13,
        )
        .unwrap();
        let mut samples = Vec::new();
        for uu in &u {
            for aa in &alpha {
                samples.push(TrainSample { u: uu.clone(), alpha: aa.clone(), data: None });
            }
        }
        let config = TrainConfig {
            epochs: 1200,
            physics_weight: 1.0,
            data_weight: 0.0,
            colloc_nodes: colloc,
            learning_rate: 1e-3,
            seed: 13,
            resample_colloc: true,
        };
        train(&mut model, &config, &samples).unwrap();
        let data = if kind == FamilyKind::AdvectionLinear {
            let spec = FdSolverSpec { nodes: advection_nodes.clone(), scheme: FdScheme::Upwind };
            fd_solve(&family, &test_u, &test_alpha, &spec).unwrap()
        } else {
            oracle_dataset(&family, &test_u, &test_alpha).unwrap()
        };
        let field = recovery_field(&model, &test_u, &test_alpha);
        let trained_mse = grid_mse(&field, &data);
        let axes = model.axes(&test_alpha).unwrap();
        let ls = ls_fit(&axes, &data).unwrap();
        let floor = grid_mse(&SplineField::new(axes, ls).unwrap(), &data);
        if trained_mse > 10.0 * floor {
            part2_ok = false;
        }
        part2.push_str(&format!("{kind:?} trained {trained_mse:.3e} vs floor {floor:.3e}; "));
    }

    let pass = worst_wave <= 1e-10 && part2_ok;
    verdict(
        13,
        "burgers/advection",
        pass,
        &format!(
            "travelling-wave residual {worst_wave:.2e}; {part2}\
             (a smooth target leaves the representation floor orders of magnitude below \
             any collocation-trained error)"
        ),
    );
}

#[test]
fn criterion_14_trapezoid() {
    // Mapping round trip and corners.
    let mut rng = SplitMix64::new(14);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (uu, vv) = (rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
        let (x, y) = map_trapezoid_inverse(uu, vv).unwrap();
        let (u2, v2) = map_trapezoid(x, y).unwrap();
        worst = worst.max((u2 - uu).abs()).max((v2 - vv).abs());
    }
    let corners_ok = [
        ((-1.0, 0.0), (0.0, 0.0)),
        ((1.0, 0.0), (1.0, 0.0)),
        ((-0.5, 1.0), (0.0, 1.0)),
        ((0.5, 1.0), (1.0, 1.0)),
    ]
    .iter()
    .all(|&((x, y), (eu, ev))| {
        let (mu, mv) = map_trapezoid(x, y).unwrap();
        (mu - eu).abs() <= 1e-14 && (mv - ev).abs() <= 1e-14
    });

    // Desk-scale trained model against the reference solver.
    let family = PdeFamily::new(FamilyKind::TrapezoidDiffusion);
    let mut model = DbsnModel::new(
        family.clone(),
        vec![12, 12, 40],
        3,
        vec![64, 64, 64],
        Activation::Relu,
        14,
    )
    .unwrap();
    // Reference data enters alongside the (down-weighted) physics loss,
    // as in the source setup for this problem.
    let samples: Vec<TrainSample> = [0.3, 0.6, 0.9, 1.2]
        .iter()
        .map(|&a| {
            let data = oracle_dataset(&family, &[], &[a]).unwrap();
            TrainSample { u: vec![], alpha: vec![a], data: Some(data) }
        })
        .collect();
    let config = TrainConfig {
        epochs: 3000,
        physics_weight: 0.001,
        data_weight: 1.0,
        colloc_nodes: vec![13, 13, 61],
        learning_rate: 2e-3,
        seed: 14,
        resample_colloc: true,
    };
    train(&mut model, &config, &samples).unwrap();
    let test_alpha = vec![0.75];
    let data = oracle_dataset(&family, &[], &test_alpha).unwrap();
    let field = recovery_field(&model, &[], &test_alpha);
    let mse = grid_mse(&field, &data);

    let pass = worst <= 1e-14 && corners_ok && mse <= 1e-3;
    verdict(
        14,
        "trapezoid",
        pass,
        &format!(
            "round-trip error {worst:.2e}, corners {}, desk-scale mse {mse:.3e} (limit 1e-3)",
            if corners_ok { "exact" } else { "WRONG" }
        ),
    );
}
