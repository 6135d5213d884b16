//! Independent ground-truth generators: quadrature and closed-form
//! recovery probabilities, finite-difference PDE solvers, LS-optimal
//! control points, and a finite-difference derivative check. Everything
//! here is deliberately implemented without the spline machinery it is
//! used to audit (except where a fit is the quantity under test).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::physics::{FamilyKind, PdeFamily};
use crate::spline::BasisSpec;
use crate::tensor::{
    eval_field, eval_field_partial, linspace, ls_fit, ControlTensor, GridDataset, SplineField,
    Tensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureScheme {
    AdaptiveSimpson,
    /// Composite 10-point Gauss-Legendre on the substituted variable,
    /// with interval doubling until two refinements agree.
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    pub tolerance: f64,
    pub max_subdivisions: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            scheme: QuadratureScheme::AdaptiveSimpson,
            tolerance: 1e-10,
            max_subdivisions: 40,
        }
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureAccuracy { achieved: delta.abs() / 15.0, requested: tol });
    }
    let l = adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, spec.tolerance, spec.max_subdivisions)
}

/// 10-point Gauss-Legendre nodes/weights on [-1, 1] (positive half;
/// symmetric counterparts implied).
const GL_NODES: [f64; 5] = [
    0.148874338981631211,
    0.433395394129247191,
    0.679409568299024406,
    0.865063366688984511,
    0.973906528517171720,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295524224714752870,
    0.269266719309996355,
    0.219086362515982044,
    0.149451349150580593,
    0.066671344308688138,
];

fn gauss_legendre_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..5 {
        acc += GL_WEIGHTS[k] * (f(c - h * GL_NODES[k]) + f(c + h * GL_NODES[k]));
    }
    acc * h
}

fn gauss_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = 1usize;
    let mut prev = gauss_legendre_panel(f, a, b);
    for _ in 0..spec.max_subdivisions {
        panels *= 2;
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for i in 0..panels {
            acc += gauss_legendre_panel(f, a + i as f64 * h, a + (i + 1) as f64 * h);
        }
        if (acc - prev).abs() <= spec.tolerance {
            return Ok(acc);
        }
        prev = acc;
    }
    Err(Error::QuadratureAccuracy { achieved: f64::NAN, requested: spec.tolerance })
}

fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    match spec.scheme {
        QuadratureScheme::AdaptiveSimpson => adaptive_simpson(f, a, b, spec),
        QuadratureScheme::GaussLegendre => gauss_legendre(f, a, b, spec),
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Closed-form first-passage probability for drift-u Brownian motion
/// started distance m = alpha - x below the barrier.
pub fn recovery_probability_closed_form(x: f64, t: f64, u: f64, alpha: f64) -> Result<f64> {
    let m = alpha - x;
    if m < 0.0 {
        return Err(Error::OutOfDomain { value: x, lo: f64::NEG_INFINITY, hi: alpha });
    }
    if m == 0.0 {
        return Ok(1.0);
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let st = libm::sqrt(t);
    let p = normal_cdf((u * t - m) / st) + libm::exp(2.0 * u * m) * normal_cdf((-u * t - m) / st);
    Ok(p.clamp(0.0, 1.0))
}

/// Probability that the drifting process reaches the barrier alpha by
/// time t, by quadrature of the first-passage density. The tau^{-3/2}
/// singularity at tau -> 0 is removed with tau = sigma^2, giving
/// integrand 2m/(sqrt(2 pi) sigma^2) exp(-(m - u sigma^2)^2 / (2 sigma^2))
/// over sigma in [0, sqrt(t)].
pub fn recovery_probability(
    x: f64,
    t: f64,
    u: f64,
    alpha: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let m = alpha - x;
    if m < 0.0 {
        return Err(Error::OutOfDomain { value: x, lo: f64::NEG_INFINITY, hi: alpha });
    }
    if t < 0.0 {
        return Err(Error::OutOfDomain { value: t, lo: 0.0, hi: f64::INFINITY });
    }
    if m == 0.0 {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let norm = 2.0 * m / libm::sqrt(2.0 * core::f64::consts::PI);
    let integrand = move |sigma: f64| -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        let d = m - u * sigma * sigma;
        norm / (sigma * sigma) * libm::exp(-d * d / (2.0 * sigma * sigma))
    };
    let p = integrate(&integrand, 0.0, libm::sqrt(t), spec)?;
    Ok(p.clamp(0.0, 1.0))
}

/// Recovery ground truth on the evaluation grid x in [-10, alpha],
/// t in [0, 10] at the given spacings, one dataset per (u, alpha) pair.
pub fn generate_recovery_dataset(
    u_samples: &[f64],
    alpha_samples: &[f64],
    dx: f64,
    dt: f64,
) -> Result<Vec<GridDataset>> {
    if dx <= 0.0 || dt <= 0.0 {
        return Err(Error::InvalidSpec("grid spacings must be positive".into()));
    }
    let mut out = Vec::with_capacity(u_samples.len() * alpha_samples.len());
    for &u in u_samples {
        for &alpha in alpha_samples {
            let nx = libm::round((alpha + 10.0) / dx) as usize + 1;
            let nt = libm::round(10.0 / dt) as usize + 1;
            let xs = linspace(-10.0, alpha, nx);
            let ts = linspace(0.0, 10.0, nt);
            let mut values = Vec::with_capacity(nx * nt);
            for &x in &xs {
                for &t in &ts {
                    values.push(recovery_probability_closed_form(x, t, u, alpha)?);
                }
            }
            out.push(GridDataset::new(
                vec![xs, ts],
                Tensor::new(vec![nx, nt], values)?,
                vec![u],
                vec![alpha],
            )?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    /// Explicit Euler in time, central differences in space.
    ExplicitCentral,
    /// Explicit Euler with first-order upwinded transport (diffusion,
    /// if any, stays central).
    Upwind,
}

/// Output grid and scheme for a finite-difference solve. `nodes` counts
/// output grid nodes per axis (spatial axes first, time last); the
/// solver substeps internally to satisfy its stability bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSolverSpec {
    pub nodes: Vec<usize>,
    pub scheme: FdScheme,
}

impl FdSolverSpec {
    pub fn default_for(kind: FamilyKind) -> Result<Self> {
        let (nodes, scheme) = match kind {
            FamilyKind::Heat3d => (vec![21, 21, 21, 21], FdScheme::ExplicitCentral),
            FamilyKind::Burgers => (vec![201, 161], FdScheme::Upwind),
            FamilyKind::AdvectionLinear | FamilyKind::AdvectionNonlinear => {
                (vec![201, 101], FdScheme::Upwind)
            }
            FamilyKind::TrapezoidDiffusion => (vec![41, 41, 101], FdScheme::ExplicitCentral),
            FamilyKind::ConvectionDiffusion => {
                return Err(Error::InvalidSpec(
                    "convection_diffusion ground truth comes from quadrature".into(),
                ))
            }
        };
        Ok(FdSolverSpec { nodes, scheme })
    }
}

fn require_scheme(spec: &FdSolverSpec, want: FdScheme) -> Result<()> {
    if spec.scheme != want {
        return Err(Error::InvalidSpec(format!(
            "scheme {:?} not applicable; expected {want:?}",
            spec.scheme
        )));
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure("non-finite values: instability".into()));
    }
    Ok(())
}

/// Explicit finite-difference ground truth for one (u, alpha) parameter
/// point of a family without a closed-form solution.
pub fn fd_solve(
    family: &PdeFamily,
    u: &[f64],
    alpha: &[f64],
    spec: &FdSolverSpec,
) -> Result<GridDataset> {
    if spec.nodes.len() != family.n_axes() {
        return Err(Error::DimensionMismatch {
            expected: family.n_axes(),
            got: spec.nodes.len(),
        });
    }
    if spec.nodes.iter().any(|&n| n < 3) {
        return Err(Error::InvalidSpec("need at least 3 nodes per axis".into()));
    }
    match family.kind {
        FamilyKind::Heat3d => fd_solve_heat3d(family, alpha, spec),
        FamilyKind::Burgers => fd_solve_burgers(family, u, alpha, spec),
        FamilyKind::AdvectionLinear | FamilyKind::AdvectionNonlinear => {
            fd_solve_advection(family, u, alpha, spec)
        }
        FamilyKind::TrapezoidDiffusion => fd_solve_trapezoid(family, alpha, spec),
        FamilyKind::ConvectionDiffusion => Err(Error::InvalidSpec(
            "convection_diffusion ground truth comes from quadrature".into(),
        )),
    }
}

fn substeps_for(dt_out: f64, dt_stable: f64) -> usize {
    libm::ceil(dt_out / dt_stable) as usize
}

fn fd_solve_heat3d(family: &PdeFamily, alpha: &[f64], spec: &FdSolverSpec) -> Result<GridDataset> {
    require_scheme(spec, FdScheme::ExplicitCentral)?;
    let domain = family.domain(alpha)?;
    let n: Vec<usize> = spec.nodes.clone();
    let grids: Vec<Vec<f64>> =
        domain.iter().zip(&n).map(|(&(lo, hi), &k)| linspace(lo, hi, k)).collect();
    let h: Vec<f64> = grids[..3].iter().map(|g| g[1] - g[0]).collect();
    let d = family.diffusion;
    let dt_out = grids[3][1] - grids[3][0];
    let inv_h2: f64 = h.iter().map(|&s| 1.0 / (s * s)).sum();
    // Explicit 3-D diffusion stability: dt <= 1 / (2 D sum 1/h_i^2).
    let dt_stable = 0.45 / (2.0 * d * inv_h2);
    let sub = substeps_for(dt_out, dt_stable);
    let dt = dt_out / sub as f64;

    let (n1, n2, n3, nt) = (n[0], n[1], n[2], n[3]);
    let idx = |i: usize, j: usize, k: usize| (i * n2 + j) * n3 + k;
    let mut s = vec![0.0; n1 * n2 * n3];
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                s[idx(i, j, k)] =
                    family.ic(&[grids[0][i], grids[1][j], grids[2][k]], alpha);
            }
        }
    }
    let dirichlet = |s: &mut [f64]| {
        for i in 0..n1 {
            for j in 0..n2 {
                s[idx(i, j, 0)] = 1.0;
                s[idx(i, j, n3 - 1)] = 1.0;
            }
        }
    };
    // Output values, time axis fastest-varying last per row-major layout
    // [x1, x2, x3, t].
    let mut values = vec![0.0; n1 * n2 * n3 * nt];
    let store = |values: &mut [f64], s: &[f64], step: usize| {
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    values[((i * n2 + j) * n3 + k) * nt + step] = s[idx(i, j, k)];
                }
            }
        }
    };
    // Dirichlet faces win over the initial condition at t = 0, matching
    // the pin precedence of the spline models.
    dirichlet(&mut s);
    store(&mut values, &s, 0);
    let mut next = s.clone();
    for step in 1..nt {
        for _ in 0..sub {
            for i in 0..n1 {
                for j in 0..n2 {
                    for k in 0..n3 {
                        // Neumann (mirror) ghosts on x1/x2 faces.
                        let c = s[idx(i, j, k)];
                        let xm = if i == 0 { s[idx(1, j, k)] } else { s[idx(i - 1, j, k)] };
                        let xp = if i == n1 - 1 {
                            s[idx(n1 - 2, j, k)]
                        } else {
                            s[idx(i + 1, j, k)]
                        };
                        let ym = if j == 0 { s[idx(i, 1, k)] } else { s[idx(i, j - 1, k)] };
                        let yp = if j == n2 - 1 {
                            s[idx(i, n2 - 2, k)]
                        } else {
                            s[idx(i, j + 1, k)]
                        };
                        let zm = if k == 0 { c } else { s[idx(i, j, k - 1)] };
                        let zp = if k == n3 - 1 { c } else { s[idx(i, j, k + 1)] };
                        let lap = (xm - 2.0 * c + xp) / (h[0] * h[0])
                            + (ym - 2.0 * c + yp) / (h[1] * h[1])
                            + (zm - 2.0 * c + zp) / (h[2] * h[2]);
                        next[idx(i, j, k)] = c + dt * d * lap;
                    }
                }
            }
            dirichlet(&mut next);
            core::mem::swap(&mut s, &mut next);
        }
        check_finite(&s)?;
        store(&mut values, &s, step);
    }
    GridDataset::new(grids, Tensor::new(n, values)?, Vec::new(), alpha.to_vec())
}

fn fd_solve_burgers(
    family: &PdeFamily,
    u: &[f64],
    alpha: &[f64],
    spec: &FdSolverSpec,
) -> Result<GridDataset> {
    require_scheme(spec, FdScheme::Upwind)?;
    let domain = family.domain(alpha)?;
    let (nx, nt) = (spec.nodes[0], spec.nodes[1]);
    let xs = linspace(domain[0].0, domain[0].1, nx);
    let ts = linspace(domain[1].0, domain[1].1, nt);
    let dx = xs[1] - xs[0];
    let dt_out = ts[1] - ts[0];
    let uu = u[0];
    let nu = family.nu;
    // Advective CFL (|u s| <= |u| for the unit-amplitude IC, padded) and
    // diffusion bound.
    let dt_stable = (0.4 * dx / (uu.abs() * 1.5 + 1e-12)).min(0.4 * dx * dx / (2.0 * nu + 1e-12));
    let sub = substeps_for(dt_out, dt_stable);
    let dt = dt_out / sub as f64;

    let mut s: Vec<f64> = xs.iter().map(|&x| family.ic(&[x], alpha)).collect();
    let mut values = vec![0.0; nx * nt];
    for (i, &v) in s.iter().enumerate() {
        values[i * nt] = v;
    }
    // Conservative form s_t + (u s^2 / 2)_x = nu s_xx with left-biased
    // (upwind for positive speeds) fluxes, so interior mass is conserved
    // exactly up to boundary flux.
    let flux = |v: f64| 0.5 * uu * v * v;
    let mut next = s.clone();
    for step in 1..nt {
        for _ in 0..sub {
            for i in 0..nx {
                let c = s[i];
                let f_right = flux(c);
                let f_left = if i == 0 { flux(c) } else { flux(s[i - 1]) };
                let s_xx = if i == 0 || i == nx - 1 {
                    0.0
                } else {
                    (s[i - 1] - 2.0 * c + s[i + 1]) / (dx * dx)
                };
                next[i] = c + dt * (nu * s_xx - (f_right - f_left) / dx);
            }
            core::mem::swap(&mut s, &mut next);
        }
        check_finite(&s)?;
        for (i, &v) in s.iter().enumerate() {
            values[i * nt + step] = v;
        }
    }
    GridDataset::new(
        vec![xs, ts],
        Tensor::new(vec![nx, nt], values)?,
        u.to_vec(),
        alpha.to_vec(),
    )
}

fn fd_solve_advection(
    family: &PdeFamily,
    u: &[f64],
    alpha: &[f64],
    spec: &FdSolverSpec,
) -> Result<GridDataset> {
    require_scheme(spec, FdScheme::Upwind)?;
    let domain = family.domain(alpha)?;
    let (nx, nt) = (spec.nodes[0], spec.nodes[1]);
    let xs = linspace(domain[0].0, domain[0].1, nx);
    let ts = linspace(domain[1].0, domain[1].1, nt);
    let dx = xs[1] - xs[0];
    let dt_out = ts[1] - ts[0];
    let uu = u[0];
    let nonlinear = family.kind == FamilyKind::AdvectionNonlinear;
    let max_speed = if nonlinear { uu.abs() * family.amplitude } else { uu.abs() };
    let dt_stable = 0.8 * dx / (max_speed + 1e-12);
    let sub = substeps_for(dt_out, dt_stable);
    let dt = dt_out / sub as f64;

    let mut s: Vec<f64> = xs.iter().map(|&x| family.ic(&[x], alpha)).collect();
    let mut values = vec![0.0; nx * nt];
    for (i, &v) in s.iter().enumerate() {
        values[i * nt] = v;
    }
    let mut next = s.clone();
    for step in 1..nt {
        for k in 0..sub {
            let t_now = ts[step - 1] + k as f64 * dt;
            for i in 0..nx {
                let c = s[i];
                let wind = if nonlinear { uu * c } else { uu };
                let s_x = if wind >= 0.0 {
                    if i == 0 {
                        0.0
                    } else {
                        (c - s[i - 1]) / dx
                    }
                } else if i == nx - 1 {
                    0.0
                } else {
                    (s[i + 1] - c) / dx
                };
                next[i] = c - dt * wind * s_x;
            }
            if !nonlinear {
                // Exact inflow for the linear travelling wave keeps the
                // left boundary consistent.
                next[0] = family.amplitude
                    * libm::sin(family.wavenumber * (xs[0] - uu * (t_now + dt)) + alpha[0]);
            }
            core::mem::swap(&mut s, &mut next);
        }
        check_finite(&s)?;
        for (i, &v) in s.iter().enumerate() {
            values[i * nt + step] = v;
        }
    }
    GridDataset::new(
        vec![xs, ts],
        Tensor::new(vec![nx, nt], values)?,
        u.to_vec(),
        alpha.to_vec(),
    )
}

fn fd_solve_trapezoid(
    family: &PdeFamily,
    alpha: &[f64],
    spec: &FdSolverSpec,
) -> Result<GridDataset> {
    require_scheme(spec, FdScheme::ExplicitCentral)?;
    let domain = family.domain(alpha)?;
    let n: Vec<usize> = spec.nodes.clone();
    let grids: Vec<Vec<f64>> =
        domain.iter().zip(&n).map(|(&(lo, hi), &k)| linspace(lo, hi, k)).collect();
    let (nu_, nv, nt) = (n[0], n[1], n[2]);
    let (du, dv) = (grids[0][1] - grids[0][0], grids[1][1] - grids[1][0]);
    let dt_out = grids[2][1] - grids[2][0];
    let a = alpha[0];
    // Worst-case coefficients: (2-v)^-2 <= 1 on v in [0,1].
    let dt_stable = 0.45 / (0.5 / (du * du) + 0.5 * a.max(1e-12) / (dv * dv));
    let sub = substeps_for(dt_out, dt_stable);
    let dt = dt_out / sub as f64;

    let idx = |i: usize, j: usize| i * nv + j;
    let mut s = vec![0.0; nu_ * nv];
    let boundary = |s: &mut [f64]| {
        for i in 0..nu_ {
            s[idx(i, 0)] = 1.0;
            s[idx(i, nv - 1)] = 1.0;
        }
        for j in 0..nv {
            s[idx(0, j)] = 1.0;
            s[idx(nu_ - 1, j)] = 1.0;
        }
    };
    let mut values = vec![0.0; nu_ * nv * nt];
    let store = |values: &mut [f64], s: &[f64], step: usize| {
        for i in 0..nu_ {
            for j in 0..nv {
                values[(i * nv + j) * nt + step] = s[idx(i, j)];
            }
        }
    };
    // The boundary condition wins over the initial condition where they
    // meet, matching the closed-form recovery convention and the pin
    // precedence of the spline models.
    boundary(&mut s);
    store(&mut values, &s, 0);
    let mut next = s.clone();
    for step in 1..nt {
        for _ in 0..sub {
            for i in 1..nu_ - 1 {
                for j in 1..nv - 1 {
                    let c = s[idx(i, j)];
                    let v = grids[1][j];
                    let cf = 2.0 - v;
                    let s_uu = (s[idx(i - 1, j)] - 2.0 * c + s[idx(i + 1, j)]) / (du * du);
                    let s_vv = (s[idx(i, j - 1)] - 2.0 * c + s[idx(i, j + 1)]) / (dv * dv);
                    next[idx(i, j)] = c + dt * 0.5 * (s_uu / (cf * cf) + a * s_vv);
                }
            }
            boundary(&mut next);
            core::mem::swap(&mut s, &mut next);
        }
        check_finite(&s)?;
        store(&mut values, &s, step);
    }
    GridDataset::new(grids, Tensor::new(n, values)?, Vec::new(), alpha.to_vec())
}

/// Ground-truth dataset for any family at one parameter point: closed
/// form for the recovery family, finite differences otherwise.
pub fn oracle_dataset(family: &PdeFamily, u: &[f64], alpha: &[f64]) -> Result<GridDataset> {
    match family.kind {
        FamilyKind::ConvectionDiffusion => {
            let sets = generate_recovery_dataset(&[u[0]], &[alpha[0]], 0.1, 0.1)?;
            Ok(sets.into_iter().next().unwrap())
        }
        _ => fd_solve(family, u, alpha, &FdSolverSpec::default_for(family.kind)?),
    }
}

/// Best control points in the least-squares sense for the family's
/// ground truth at one parameter point; used to audit trained models.
pub fn ls_optimal_control_points(
    family: &PdeFamily,
    u: &[f64],
    alpha: &[f64],
    axes: &[BasisSpec],
) -> Result<ControlTensor> {
    let data = oracle_dataset(family, u, alpha)?;
    ls_fit(axes, &data)
}

/// Worst observed disagreement between analytic spline derivatives and
/// central finite differences of the field itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheckReport {
    pub max_abs_error: f64,
    pub points_checked: usize,
    pub points_skipped: usize,
}

/// Central-difference audit of `eval_field_partial` at the given points,
/// using step `h` per axis. Points whose stencil would leave the domain
/// (a one-stencil margin at the edges) are skipped, since one-sided data
/// is not available there.
pub fn fd_derivative_check(
    field: &SplineField,
    points: &[Vec<f64>],
    orders: &[usize],
    h: f64,
) -> Result<DerivativeCheckReport> {
    if h <= 0.0 {
        return Err(Error::InvalidSpec("step must be positive".into()));
    }
    let dim = field.dim();
    if orders.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: orders.len() });
    }
    // Nested central differences: each axis with order p contributes a
    // (p+1)-point stencil of half-width p*h/... (first: +-h, second:
    // -h,0,+h). Only orders 0..=2 are supported.
    if let Some(&p) = orders.iter().find(|&&p| p > 2) {
        return Err(Error::InvalidDerivativeOrder { requested: p, max: 2 });
    }
    fn fd_eval(
        field: &SplineField,
        point: &mut Vec<f64>,
        orders: &[usize],
        axis: usize,
        h: f64,
    ) -> Result<f64> {
        if axis == orders.len() {
            return eval_field(field, point);
        }
        match orders[axis] {
            0 => fd_eval(field, point, orders, axis + 1, h),
            1 => {
                let x = point[axis];
                point[axis] = x + h;
                let fp = fd_eval(field, point, orders, axis + 1, h)?;
                point[axis] = x - h;
                let fm = fd_eval(field, point, orders, axis + 1, h)?;
                point[axis] = x;
                Ok((fp - fm) / (2.0 * h))
            }
            _ => {
                let x = point[axis];
                let f0 = fd_eval(field, point, orders, axis + 1, h)?;
                point[axis] = x + h;
                let fp = fd_eval(field, point, orders, axis + 1, h)?;
                point[axis] = x - h;
                let fm = fd_eval(field, point, orders, axis + 1, h)?;
                point[axis] = x;
                Ok((fp - 2.0 * f0 + fm) / (h * h))
            }
        }
    }
    let mut max_abs_error: f64 = 0.0;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        let in_margin = p.iter().zip(field.axes()).zip(orders).all(|((&x, ab), &o)| {
            let spec = ab.spec();
            if o == 0 {
                return x >= spec.lo && x <= spec.hi;
            }
            if x - h < spec.lo || x + h > spec.hi {
                return false;
            }
            // A stencil crossing an interior knot samples two polynomial
            // pieces; the centered-difference reference is biased O(h)
            // there, so such points cannot serve as an oracle.
            ab.knots()
                .as_slice()
                .iter()
                .all(|&k| k <= x - h || k >= x + h)
        });
        if !in_margin {
            skipped += 1;
            continue;
        }
        let analytic = eval_field_partial(field, p, orders)?;
        let mut work = p.clone();
        let fd = fd_eval(field, &mut work, orders, 0, h)?;
        max_abs_error = max_abs_error.max((analytic - fd).abs());
        checked += 1;
    }
    Ok(DerivativeCheckReport { max_abs_error, points_checked: checked, points_skipped: skipped })
}
