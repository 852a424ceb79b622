//! Direct quadrature of the one-dimensional quantum transfer operator
//!
//! ```text
//! [Mψ](x₁) = ∫∫ a(x₁,ξ₀) exp(i(W(x₁,ξ₀) − ξ₀x₀)/h) ψ(x₀) dx₀ dξ₀ / (2πh)
//! ```
//!
//! on a trapezoid product grid, plus the implicit solve for the classical map
//! `T` generated by `W` and a check that `M` carries a coherent state at
//! `(x₀,ξ₀)` to one at `T(x₀,ξ₀)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::coherent::{line_coherent_state, LineGrid, LineState};
use super::QuantizeError;
use crate::exec::Execution;
use crate::linalg::pairwise_sum;

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-10;
const DEGENERATE_MIXED: f64 = 1e-12;
/// Largest phase increment allowed between neighbouring quadrature nodes.
const MAX_PHASE_STEP: f64 = PI / 4.0;
/// Coarse samples per axis used to bound the phase gradient.
const GRADIENT_SAMPLES: usize = 33;

/// A generating function `W(x₁, ξ₀)` of a symplectic map: `T(x₀,ξ₀) = (x₁,ξ₁)`
/// solves `ξ₁ = ∂x₁W`, `x₀ = ∂ξ₀W`.
pub trait GeneratingFunction: Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, x1: f64, xi0: f64) -> f64;

    /// `(∂x₁W, ∂ξ₀W)`.
    fn grad(&self, x1: f64, xi0: f64) -> (f64, f64);

    /// `∂x₁∂ξ₀W`; defaults to a centred difference of the gradient.
    fn mixed_partial(&self, x1: f64, xi0: f64) -> f64 {
        let step = 1e-6 * (1.0 + x1.abs());
        (self.grad(x1 + step, xi0).1 - self.grad(x1 - step, xi0).1) / (2.0 * step)
    }
}

pub const DEFAULT_KICK: f64 = 0.3;

/// `W = μ·x₁ξ₀ + α·ξ₀²/2 + β·x₁²/2 + κ·sin(x₁)·ξ₀`.
///
/// `μ = 1, α = β = κ = 0` is the identity; `α = 1` the shear
/// `(x₀,ξ₀) ↦ (x₀−ξ₀, ξ₀)`; `β = 1` the shear `(x₀,ξ₀) ↦ (x₀, ξ₀+x₀)`.
/// A nonzero `κ` makes the implicit equation nonlinear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticGenerator {
    pub name: String,
    pub mixed: f64,
    pub momentum_shear: f64,
    pub position_shear: f64,
    pub kick: f64,
}

impl QuadraticGenerator {
    fn with(name: &str, mixed: f64, momentum_shear: f64, position_shear: f64) -> Self {
        QuadraticGenerator {
            name: name.into(),
            mixed,
            momentum_shear,
            position_shear,
            kick: 0.0,
        }
    }

    pub fn identity() -> Self {
        Self::with("identity", 1.0, 0.0, 0.0)
    }

    pub fn momentum_shear() -> Self {
        Self::with("shear", 1.0, 1.0, 0.0)
    }

    pub fn position_shear() -> Self {
        Self::with("position_shear", 1.0, 0.0, 1.0)
    }

    /// Shear composed with a nonlinear kick; `by_name("kicked")` uses
    /// [`DEFAULT_KICK`].
    pub fn kicked(kick: f64) -> Self {
        QuadraticGenerator {
            kick,
            ..Self::with("kicked", 1.0, 1.0, 0.0)
        }
    }

    /// Looks up one of the named generators above.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Self::identity()),
            "shear" => Some(Self::momentum_shear()),
            "position_shear" => Some(Self::position_shear()),
            "kicked" => Some(Self::kicked(DEFAULT_KICK)),
            _ => None,
        }
    }
}

impl GeneratingFunction for QuadraticGenerator {
    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, x1: f64, xi0: f64) -> f64 {
        self.mixed * x1 * xi0
            + 0.5 * self.momentum_shear * xi0 * xi0
            + 0.5 * self.position_shear * x1 * x1
            + self.kick * x1.sin() * xi0
    }

    fn grad(&self, x1: f64, xi0: f64) -> (f64, f64) {
        (
            self.mixed * xi0 + self.position_shear * x1 + self.kick * x1.cos() * xi0,
            self.mixed * x1 + self.momentum_shear * xi0 + self.kick * x1.sin(),
        )
    }

    fn mixed_partial(&self, x1: f64, _xi0: f64) -> f64 {
        self.mixed + self.kick * x1.cos()
    }
}

/// Rectangle `[x_min, x_max] × [xi_min, xi_max]` in the `(x₁, ξ₀)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub x_min: f64,
    pub x_max: f64,
    pub xi_min: f64,
    pub xi_max: f64,
}

impl SupportBox {
    pub fn contains(&self, x1: f64, xi0: f64) -> bool {
        x1 >= self.x_min && x1 <= self.x_max && xi0 >= self.xi_min && xi0 <= self.xi_max
    }

    fn is_degenerate(&self) -> bool {
        !(self.x_max > self.x_min && self.xi_max > self.xi_min)
    }
}

/// The amplitude `a(x₁, ξ₀)`, vanishing outside [`SymbolFunction::support`].
pub trait SymbolFunction: Send + Sync {
    fn evaluate(&self, x1: f64, xi0: f64) -> Complex64;

    fn support(&self) -> SupportBox;
}

/// Equal to 1 on the support box shrunk by `taper` on every side, falling
/// smoothly (C^∞) to 0 at the box edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothBoxSymbol {
    pub support: SupportBox,
    pub taper: f64,
}

impl SmoothBoxSymbol {
    /// Plateau `[x ± plateau] × [ξ ± plateau]` with a taper of width `taper`.
    pub fn around(x1: f64, xi0: f64, plateau: f64, taper: f64) -> Self {
        let r = plateau + taper;
        SmoothBoxSymbol {
            support: SupportBox {
                x_min: x1 - r,
                x_max: x1 + r,
                xi_min: xi0 - r,
                xi_max: xi0 + r,
            },
            taper,
        }
    }
}

/// C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |s: f64| (-1.0 / s).exp();
    f(t) / (f(t) + f(1.0 - t))
}

fn edge_factor(v: f64, lo: f64, hi: f64, taper: f64) -> f64 {
    if taper <= 0.0 {
        return if v >= lo && v <= hi { 1.0 } else { 0.0 };
    }
    smooth_step((v - lo) / taper) * smooth_step((hi - v) / taper)
}

impl SymbolFunction for SmoothBoxSymbol {
    fn evaluate(&self, x1: f64, xi0: f64) -> Complex64 {
        let b = &self.support;
        let v = edge_factor(x1, b.x_min, b.x_max, self.taper) * edge_factor(xi0, b.xi_min, b.xi_max, self.taper);
        Complex64::new(v, 0.0)
    }

    fn support(&self) -> SupportBox {
        self.support
    }
}

/// Solves `x₀ = ∂ξ₀W(x₁,ξ₀)` for `x₁` by Newton's method from `x₁ = x₀`,
/// then returns `(x₁, ∂x₁W(x₁,ξ₀))`.
pub fn solve_map_from_generating(
    w: &dyn GeneratingFunction,
    x0: f64,
    xi0: f64,
) -> Result<(f64, f64), QuantizeError> {
    let mut x1 = x0;
    for _ in 0..=NEWTON_MAX_ITER {
        let residual = w.grad(x1, xi0).1 - x0;
        if residual.abs() <= NEWTON_TOL {
            return Ok((x1, w.grad(x1, xi0).0));
        }
        let slope = w.mixed_partial(x1, xi0);
        if slope.abs() < DEGENERATE_MIXED {
            return Err(QuantizeError::DegenerateJacobian { x1 });
        }
        x1 -= residual / slope;
        if !x1.is_finite() {
            break;
        }
    }
    Err(QuantizeError::NoConvergence {
        iterations: NEWTON_MAX_ITER,
    })
}

fn linspace(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
}

/// Coarse upper bound of `|∂ξ₀(W − ξ₀x₀)|` over the integration box.
fn max_momentum_gradient(w: &dyn GeneratingFunction, x1_range: (f64, f64), support: &SupportBox, x0_range: (f64, f64)) -> f64 {
    let mut worst = 0.0f64;
    for x1 in linspace(x1_range.0, x1_range.1, GRADIENT_SAMPLES) {
        for xi0 in linspace(support.xi_min, support.xi_max, GRADIENT_SAMPLES) {
            let g = w.grad(x1, xi0).1;
            worst = worst.max((g - x0_range.0).abs()).max((g - x0_range.1).abs());
        }
    }
    worst
}

pub fn fio_apply(
    w: &dyn GeneratingFunction,
    a: &dyn SymbolFunction,
    h: f64,
    input: &LineState,
    output_grid: &LineGrid,
) -> Result<LineState, QuantizeError> {
    fio_apply_with(w, a, h, input, output_grid, Execution::default())
}

/// Trapezoid quadrature of the operator on the product grid
/// `(input nodes) × (ξ₀ nodes spanning the symbol support)`.
///
/// The `x₀` sum does not involve `x₁`, so it is done once per `ξ₀` node; the
/// result is the same product-grid sum evaluated in a different order.
pub fn fio_apply_with(
    w: &dyn GeneratingFunction,
    a: &dyn SymbolFunction,
    h: f64,
    input: &LineState,
    output_grid: &LineGrid,
    exec: Execution,
) -> Result<LineState, QuantizeError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(QuantizeError::InvalidParameter(format!("h = {h}")));
    }
    if input.samples.len() != input.grid.count {
        return Err(QuantizeError::InvalidParameter("input samples do not match the grid".into()));
    }
    let support = a.support();
    if support.is_degenerate() || support.x_max < output_grid.origin || support.x_min > output_grid.end() {
        return Err(QuantizeError::SupportNotCovered);
    }

    // x₀ step: the phase gradient in x₀ is −ξ₀/h
    let max_xi = support.xi_min.abs().max(support.xi_max.abs());
    if max_xi > 0.0 {
        let limit = MAX_PHASE_STEP * h / max_xi;
        if input.grid.spacing > limit {
            return Err(QuantizeError::PhaseResolutionViolated {
                grid: "input",
                spacing: input.grid.spacing,
                limit,
            });
        }
    }

    // ξ₀ step from the gradient ∂ξ₀W − x₀ over the box
    let x1_range = (
        output_grid.origin.max(support.x_min),
        output_grid.end().min(support.x_max),
    );
    let x0_range = (input.grid.origin, input.grid.end());
    let grad_xi = max_momentum_gradient(w, x1_range, &support, x0_range).max(f64::MIN_POSITIVE);
    let xi_grid = LineGrid::covering(support.xi_min, support.xi_max, MAX_PHASE_STEP * h / grad_xi)?;

    let input_transform = exec.map_indexed(xi_grid.count, |k| {
        let xi0 = xi_grid.node(k);
        let terms: Vec<Complex64> = input
            .samples
            .iter()
            .enumerate()
            .map(|(j, &psi)| {
                let (s, c) = (-xi0 * input.grid.node(j) / h).sin_cos();
                psi * Complex64::new(c, s) * input.grid.trapezoid_weight(j)
            })
            .collect();
        pairwise_sum(&terms) * input.grid.spacing
    });

    let prefactor = xi_grid.spacing / (2.0 * PI * h);
    let samples = exec.map_indexed(output_grid.count, |m| {
        let x1 = output_grid.node(m);
        if x1 < support.x_min || x1 > support.x_max {
            return Complex64::new(0.0, 0.0);
        }
        let terms: Vec<Complex64> = input_transform
            .iter()
            .enumerate()
            .map(|(k, &psi_hat)| {
                let xi0 = xi_grid.node(k);
                let amp = a.evaluate(x1, xi0);
                if amp == Complex64::new(0.0, 0.0) {
                    return amp;
                }
                let (s, c) = (w.value(x1, xi0) / h).sin_cos();
                amp * Complex64::new(c, s) * psi_hat * xi_grid.trapezoid_weight(k)
            })
            .collect();
        pairwise_sum(&terms) * prefactor
    });
    Ok(LineState {
        grid: *output_grid,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub generator: String,
    pub h: f64,
    pub start: (f64, f64),
    /// `T(start)` from the generating function.
    pub expected: (f64, f64),
    /// Position and momentum centroids of the propagated packet.
    pub measured: (f64, f64),
    pub distance: f64,
    /// Fraction of the input norm carried by the output.
    pub norm_ratio: f64,
}

/// Half-widths, in units of `√h`, of the grids used by [`transport_check`].
const TRANSPORT_HALF_WIDTH: f64 = 10.0;

/// Symbol with a plateau of `4√h` and a taper of `3√h` around
/// `(x₁, ξ₀)`, suitable for [`transport_check`] from `start`.
pub fn transport_symbol(w: &dyn GeneratingFunction, h: f64, start: (f64, f64)) -> Result<SmoothBoxSymbol, QuantizeError> {
    let (x1, _) = solve_map_from_generating(w, start.0, start.1)?;
    let s = h.sqrt();
    Ok(SmoothBoxSymbol::around(x1, start.1, 4.0 * s, 3.0 * s))
}

/// Propagates a coherent state at `start` with the quadrature operator and
/// compares its phase-space centroid with `T(start)`.
pub fn transport_check(
    w: &dyn GeneratingFunction,
    a: &dyn SymbolFunction,
    h: f64,
    start: (f64, f64),
) -> Result<TransportReport, QuantizeError> {
    transport_check_with(w, a, h, start, Execution::default())
}

pub fn transport_check_with(
    w: &dyn GeneratingFunction,
    a: &dyn SymbolFunction,
    h: f64,
    start: (f64, f64),
    exec: Execution,
) -> Result<TransportReport, QuantizeError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(QuantizeError::InvalidParameter(format!("h = {h}")));
    }
    let expected = solve_map_from_generating(w, start.0, start.1)?;
    let s = h.sqrt();
    let support = a.support();
    let max_xi = support.xi_min.abs().max(support.xi_max.abs()).max(expected.1.abs());
    // 0.9 keeps a margin below the phase-resolution limit
    let mut spacing = s / 8.0;
    if max_xi > 0.0 {
        spacing = spacing.min(0.9 * MAX_PHASE_STEP * h / max_xi);
    }
    let half = TRANSPORT_HALF_WIDTH * s;
    let input_grid = LineGrid::covering(start.0 - half, start.0 + half, spacing)?;
    let output_grid = LineGrid::covering(expected.0 - half, expected.0 + half, spacing)?;
    let input = line_coherent_state(start.0, start.1, h, input_grid)?;
    let output = fio_apply_with(w, a, h, &input, &output_grid, exec)?;
    let norm_ratio = output.l2_norm() / input.l2_norm();
    if !(norm_ratio > 0.0) {
        return Err(QuantizeError::SupportNotCovered);
    }
    let measured = (output.position_centroid(), output.momentum_centroid(h));
    let distance = (measured.0 - expected.0).hypot(measured.1 - expected.1);
    Ok(TransportReport {
        generator: w.name().to_string(),
        h,
        start,
        expected,
        measured,
        distance,
        norm_ratio,
    })
}
