//! PDE residual definitions for every supported family, plus the
//! trapezoid-to-square domain mapping. Residuals are expressed over a
//! small set of derivative "channels" (partial-derivative multi-indices)
//! so the training loop can assemble exact gradients with respect to the
//! control tensor.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spline::BasisSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Recovery-probability convection-diffusion: s_t - u s_x - 1/2 s_xx.
    ConvectionDiffusion,
    /// 3-D heat equation s_t = D lap(s) with mixed Dirichlet/Neumann faces.
    Heat3d,
    /// Viscous Burgers: s_t + u s s_x - nu s_xx.
    Burgers,
    /// Linear advection: s_t + u s_x.
    AdvectionLinear,
    /// Advection with the nonlinear transport term u s s_x.
    AdvectionNonlinear,
    /// Diffusion on the trapezoid, trained on the mapped unit square:
    /// s_t = 1/2 [ (2-v)^-2 s_uu + alpha s_vv ].
    TrapezoidDiffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlicePos {
    First,
    Last,
}

/// Where a control-tensor slice gets its pinned values from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PinValue {
    Constant(f64),
    /// Least-squares fit of the family's initial condition on the slice.
    FittedIc,
}

/// One pin rule: overwrite the control-tensor slice at `pos` along `axis`.
/// Rules are applied in order, so later rules take precedence where they
/// overlap (boundary rules are listed after initial-condition rules).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinRule {
    pub axis: usize,
    pub pos: SlicePos,
    pub value: PinValue,
}

/// Collocation region of one governing equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Interior,
    Face { axis: usize, pos: SlicePos },
}

/// Which residual an equation evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationKind {
    /// The family's main PDE residual.
    Main,
    /// Zero normal derivative along `axis` (penalty form; Neumann data
    /// cannot be pinned through control points).
    NeumannFace { axis: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equation {
    pub kind: EquationKind,
    pub region: Region,
}

// Standalone residual formulas, one per family.

pub fn residual_convection_diffusion(s_t: f64, s_x: f64, s_xx: f64, u: f64) -> f64 {
    s_t - u * s_x - 0.5 * s_xx
}

pub fn residual_heat3d(s_t: f64, laplacian: [f64; 3], diffusion: f64) -> f64 {
    s_t - diffusion * (laplacian[0] + laplacian[1] + laplacian[2])
}

pub fn residual_burgers(s: f64, s_t: f64, s_x: f64, s_xx: f64, u: f64, nu: f64) -> f64 {
    s_t + u * s * s_x - nu * s_xx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionForm {
    Linear,
    Nonlinear,
}

pub fn residual_advection(s: f64, s_t: f64, s_x: f64, u: f64, form: AdvectionForm) -> f64 {
    match form {
        AdvectionForm::Linear => s_t + u * s_x,
        AdvectionForm::Nonlinear => s_t + u * s * s_x,
    }
}

pub fn residual_trapezoid_mapped(s_t: f64, s_uu: f64, s_vv: f64, alpha: f64, v: f64) -> f64 {
    let c = 2.0 - v;
    s_t - 0.5 * (s_uu / (c * c) + alpha * s_vv)
}

/// Maps the trapezoid {y in [0,1], x in [-1+0.5y, 1-0.5y]} onto the unit
/// square: (u, v) = ((x+1-0.5y)/(2-y), y).
pub fn map_trapezoid(x: f64, y: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::OutOfDomain { value: y, lo: 0.0, hi: 1.0 });
    }
    let (lo, hi) = (-1.0 + 0.5 * y, 1.0 - 0.5 * y);
    if x < lo - 1e-12 || x > hi + 1e-12 {
        return Err(Error::OutOfDomain { value: x, lo, hi });
    }
    Ok(((x + 1.0 - 0.5 * y) / (2.0 - y), y))
}

/// Inverse mapping: (x, y) = (-1 + 0.5v + (2-v)u, v).
pub fn map_trapezoid_inverse(u: f64, v: f64) -> Result<(f64, f64)> {
    for (q, name_lo, name_hi) in [(u, 0.0, 1.0), (v, 0.0, 1.0)] {
        if q < name_lo - 1e-12 || q > name_hi + 1e-12 {
            return Err(Error::OutOfDomain { value: q, lo: name_lo, hi: name_hi });
        }
    }
    Ok((-1.0 + 0.5 * v + (2.0 - v) * u, v))
}

/// A PDE family: residual, domain builder, parameter ranges, ICBC
/// specification (pin rules + penalty equations), and reference
/// discretization. Axis order is spatial dimensions first, time last.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeFamily {
    pub kind: FamilyKind,
    pub u_range: Vec<(f64, f64)>,
    pub alpha_range: Vec<(f64, f64)>,
    /// Burgers viscosity.
    pub nu: f64,
    /// Heat-equation diffusion coefficient.
    pub diffusion: f64,
    /// Advection initial-condition amplitude and wavenumber.
    pub amplitude: f64,
    pub wavenumber: f64,
}

impl PdeFamily {
    pub fn new(kind: FamilyKind) -> Self {
        let (u_range, alpha_range) = match kind {
            FamilyKind::ConvectionDiffusion => (vec![(0.0, 2.0)], vec![(0.0, 4.0)]),
            FamilyKind::Heat3d => (
                Vec::new(),
                vec![(-0.5, 0.5), (-0.5, 0.5), (-0.5, 0.5), (0.0, 1.0)],
            ),
            FamilyKind::Burgers => (vec![(0.5, 1.5)], vec![(2.0, 4.0)]),
            FamilyKind::AdvectionLinear | FamilyKind::AdvectionNonlinear => {
                (vec![(0.5, 1.5)], vec![(0.0, 2.0 * PI)])
            }
            FamilyKind::TrapezoidDiffusion => (Vec::new(), vec![(0.0, 1.5)]),
        };
        PdeFamily {
            kind,
            u_range,
            alpha_range,
            nu: 0.01,
            diffusion: 0.1,
            amplitude: 1.0,
            wavenumber: 2.0 * PI,
        }
    }

    pub fn u_dim(&self) -> usize {
        self.u_range.len()
    }

    pub fn alpha_dim(&self) -> usize {
        self.alpha_range.len()
    }

    /// Number of axes (spatial + time).
    pub fn n_axes(&self) -> usize {
        match self.kind {
            FamilyKind::Heat3d => 4,
            FamilyKind::TrapezoidDiffusion => 3,
            _ => 2,
        }
    }

    /// Axis bounds for a given ICBC parameter vector. Only the recovery
    /// family's domain depends on alpha.
    pub fn domain(&self, alpha: &[f64]) -> Result<Vec<(f64, f64)>> {
        if alpha.len() != self.alpha_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha_dim(),
                got: alpha.len(),
            });
        }
        Ok(match self.kind {
            FamilyKind::ConvectionDiffusion => vec![(-10.0, alpha[0]), (0.0, 10.0)],
            FamilyKind::Heat3d => vec![(0.0, 1.0); 4],
            FamilyKind::Burgers => vec![(0.0, 10.0), (0.0, 8.0)],
            FamilyKind::AdvectionLinear | FamilyKind::AdvectionNonlinear => {
                vec![(0.0, 1.0), (0.0, 2.0)]
            }
            FamilyKind::TrapezoidDiffusion => vec![(0.0, 1.0); 3],
        })
    }

    /// Reference basis per axis (control-point counts and orders used in
    /// the headline experiments).
    pub fn default_axes(&self, alpha: &[f64]) -> Result<Vec<BasisSpec>> {
        let (counts, order): (Vec<usize>, usize) = match self.kind {
            FamilyKind::ConvectionDiffusion => (vec![25, 25], 3),
            FamilyKind::Heat3d => (vec![15, 15, 15, 15], 3),
            FamilyKind::Burgers => (vec![100, 100], 4),
            FamilyKind::AdvectionLinear | FamilyKind::AdvectionNonlinear => {
                (vec![150, 150], 5)
            }
            FamilyKind::TrapezoidDiffusion => (vec![20, 20, 100], 3),
        };
        self.domain(alpha)?
            .into_iter()
            .zip(counts)
            .map(|((lo, hi), count)| BasisSpec::new(lo, hi, order, count))
            .collect()
    }

    /// Pin rules in application order; later rules overwrite earlier ones
    /// where slices intersect, so boundary conditions win over the initial
    /// condition at corners.
    pub fn pin_rules(&self) -> Vec<PinRule> {
        let t = self.n_axes() - 1;
        match self.kind {
            FamilyKind::ConvectionDiffusion => vec![
                PinRule { axis: t, pos: SlicePos::First, value: PinValue::Constant(0.0) },
                PinRule { axis: 0, pos: SlicePos::Last, value: PinValue::Constant(1.0) },
            ],
            FamilyKind::Heat3d => vec![
                PinRule { axis: t, pos: SlicePos::First, value: PinValue::FittedIc },
                PinRule { axis: 2, pos: SlicePos::First, value: PinValue::Constant(1.0) },
                PinRule { axis: 2, pos: SlicePos::Last, value: PinValue::Constant(1.0) },
            ],
            FamilyKind::Burgers
            | FamilyKind::AdvectionLinear
            | FamilyKind::AdvectionNonlinear => vec![PinRule {
                axis: t,
                pos: SlicePos::First,
                value: PinValue::FittedIc,
            }],
            FamilyKind::TrapezoidDiffusion => vec![
                PinRule { axis: t, pos: SlicePos::First, value: PinValue::Constant(0.0) },
                PinRule { axis: 0, pos: SlicePos::First, value: PinValue::Constant(1.0) },
                PinRule { axis: 0, pos: SlicePos::Last, value: PinValue::Constant(1.0) },
                PinRule { axis: 1, pos: SlicePos::First, value: PinValue::Constant(1.0) },
                PinRule { axis: 1, pos: SlicePos::Last, value: PinValue::Constant(1.0) },
            ],
        }
    }

    /// Initial-condition value at spatial point `x` (families with a
    /// FittedIc pin rule only).
    pub fn ic(&self, x: &[f64], alpha: &[f64]) -> f64 {
        match self.kind {
            FamilyKind::Heat3d => {
                alpha[0] * x[0] + alpha[1] * x[1] + alpha[2] * x[2] + alpha[3]
            }
            FamilyKind::Burgers => {
                let d = x[0] - alpha[0];
                libm::exp(-d * d / 2.0)
            }
            FamilyKind::AdvectionLinear | FamilyKind::AdvectionNonlinear => {
                self.amplitude * libm::sin(self.wavenumber * x[0] + alpha[0])
            }
            _ => 0.0,
        }
    }

    /// Governing equations: the interior PDE, plus Neumann penalty faces
    /// for the heat family.
    pub fn equations(&self) -> Vec<Equation> {
        let mut eqs = vec![Equation { kind: EquationKind::Main, region: Region::Interior }];
        if self.kind == FamilyKind::Heat3d {
            for axis in [0, 1] {
                for pos in [SlicePos::First, SlicePos::Last] {
                    eqs.push(Equation {
                        kind: EquationKind::NeumannFace { axis },
                        region: Region::Face { axis, pos },
                    });
                }
            }
        }
        eqs
    }

    /// Partial-derivative multi-indices (one per axis) whose field values
    /// an equation's residual consumes, in the order expected by
    /// [`residual_and_grad`].
    pub fn channels(&self, eq: EquationKind) -> Vec<Vec<usize>> {
        let n = self.n_axes();
        let t = n - 1;
        let multi = |pairs: &[(usize, usize)]| -> Vec<usize> {
            let mut m = vec![0; n];
            for &(axis, order) in pairs {
                m[axis] = order;
            }
            m
        };
        match eq {
            EquationKind::NeumannFace { axis } => vec![multi(&[(axis, 1)])],
            EquationKind::Main => match self.kind {
                FamilyKind::ConvectionDiffusion => {
                    vec![multi(&[(t, 1)]), multi(&[(0, 1)]), multi(&[(0, 2)])]
                }
                FamilyKind::Heat3d => vec![
                    multi(&[(t, 1)]),
                    multi(&[(0, 2)]),
                    multi(&[(1, 2)]),
                    multi(&[(2, 2)]),
                ],
                FamilyKind::Burgers => vec![
                    multi(&[]),
                    multi(&[(t, 1)]),
                    multi(&[(0, 1)]),
                    multi(&[(0, 2)]),
                ],
                FamilyKind::AdvectionLinear => vec![multi(&[(t, 1)]), multi(&[(0, 1)])],
                FamilyKind::AdvectionNonlinear => {
                    vec![multi(&[]), multi(&[(t, 1)]), multi(&[(0, 1)])]
                }
                FamilyKind::TrapezoidDiffusion => {
                    vec![multi(&[(t, 1)]), multi(&[(0, 2)]), multi(&[(1, 2)])]
                }
            },
        }
    }

    /// Residual and its partial derivatives with respect to each channel
    /// value. `values[i]` is the field derivative for `channels(eq)[i]`
    /// at `point`.
    pub fn residual_and_grad(
        &self,
        eq: EquationKind,
        point: &[f64],
        u: &[f64],
        alpha: &[f64],
        values: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let expected = self.channels(eq).len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        if u.len() != self.u_dim() {
            return Err(Error::DimensionMismatch { expected: self.u_dim(), got: u.len() });
        }
        Ok(match eq {
            EquationKind::NeumannFace { .. } => (values[0], vec![1.0]),
            EquationKind::Main => match self.kind {
                FamilyKind::ConvectionDiffusion => {
                    let r = residual_convection_diffusion(values[0], values[1], values[2], u[0]);
                    (r, vec![1.0, -u[0], -0.5])
                }
                FamilyKind::Heat3d => {
                    let r = residual_heat3d(values[0], [values[1], values[2], values[3]], self.diffusion);
                    (r, vec![1.0, -self.diffusion, -self.diffusion, -self.diffusion])
                }
                FamilyKind::Burgers => {
                    let r = residual_burgers(values[0], values[1], values[2], values[3], u[0], self.nu);
                    (r, vec![u[0] * values[2], 1.0, u[0] * values[0], -self.nu])
                }
                FamilyKind::AdvectionLinear => {
                    let r = residual_advection(0.0, values[0], values[1], u[0], AdvectionForm::Linear);
                    (r, vec![1.0, u[0]])
                }
                FamilyKind::AdvectionNonlinear => {
                    let r = residual_advection(values[0], values[1], values[2], u[0], AdvectionForm::Nonlinear);
                    (r, vec![u[0] * values[2], 1.0, u[0] * values[0]])
                }
                FamilyKind::TrapezoidDiffusion => {
                    let v = point[1];
                    let r = residual_trapezoid_mapped(values[0], values[1], values[2], alpha[0], v);
                    let c = 2.0 - v;
                    (r, vec![1.0, -0.5 / (c * c), -0.5 * alpha[0]])
                }
            },
        })
    }
}
