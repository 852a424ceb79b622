//! Coherent states on the torus and on the line, Husimi densities.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PlanckParameter, QuantizeError};
use crate::classical::PhasePoint;
use crate::exec::Execution;
use crate::linalg::{pairwise_sum, pairwise_sum_real, vec_norm};

/// Periodic images kept on each side when wrapping a Gaussian onto the torus.
const PERIODIZATION: i32 = 3;

/// A state on the `N`-dimensional torus Hilbert space, positions `(j+θ)/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusState {
    pub planck: PlanckParameter,
    pub theta: f64,
    pub amplitudes: Vec<Complex64>,
}

impl TorusState {
    pub fn zeros(planck: PlanckParameter, theta: f64) -> Self {
        TorusState {
            planck,
            theta,
            amplitudes: vec![Complex64::new(0.0, 0.0); planck.dim()],
        }
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    pub fn position(&self, j: usize) -> f64 {
        (j as f64 + self.theta) / self.planck.dim() as f64
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &TorusState) -> Complex64 {
        let terms: Vec<Complex64> = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .collect();
        pairwise_sum(&terms)
    }

    /// CSV with columns `index,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,re,im")?;
        for (j, z) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{j},{:.16e},{:.16e}", z.re, z.im)?;
        }
        Ok(())
    }
}

fn unnormalized_coherent(dim: usize, theta: f64, center: PhasePoint) -> Vec<Complex64> {
    let n = dim as f64;
    (0..dim)
        .map(|j| {
            let x = (j as f64 + theta) / n;
            let mut acc = Complex64::new(0.0, 0.0);
            for m in -PERIODIZATION..=PERIODIZATION {
                let dx = x - center.x + m as f64;
                let (s, c) = (2.0 * PI * n * center.xi * dx).sin_cos();
                acc += Complex64::new(c, s) * (-PI * n * dx * dx).exp();
            }
            acc
        })
        .collect()
}

/// Periodized Gaussian of width `√h` centered at `center`, unit norm.
pub fn torus_coherent_state(planck: PlanckParameter, theta: f64, center: PhasePoint) -> TorusState {
    let mut amplitudes = unnormalized_coherent(planck.dim(), theta, center);
    let norm = vec_norm(&amplitudes);
    for a in &mut amplitudes {
        *a /= norm;
    }
    TorusState {
        planck,
        theta,
        amplitudes,
    }
}

/// Husimi density sampled on a `resolution × resolution` grid of the torus.
///
/// `values[a * resolution + b]` holds `H(a/resolution, b/resolution)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HusimiGrid {
    pub resolution: usize,
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.resolution + b]
    }
}

pub fn husimi(state: &TorusState, resolution: usize) -> Result<HusimiGrid, QuantizeError> {
    husimi_with(state, resolution, Execution::default())
}

pub fn husimi_with(state: &TorusState, resolution: usize, exec: Execution) -> Result<HusimiGrid, QuantizeError> {
    if resolution < 8 {
        return Err(QuantizeError::InvalidParameter(format!("husimi resolution {resolution} < 8")));
    }
    let rows = exec.map_indexed(resolution, |a| {
        (0..resolution)
            .map(|b| {
                let center = PhasePoint::new(a as f64 / resolution as f64, b as f64 / resolution as f64);
                let coh = torus_coherent_state(state.planck, state.theta, center);
                coh.inner(state).norm_sqr()
            })
            .collect::<Vec<f64>>()
    });
    Ok(HusimiGrid {
        resolution,
        values: rows.into_iter().flatten().collect(),
    })
}

/// Vertex offset of the parabola through `(−1, left), (0, mid), (1, right)`.
fn parabola_offset(left: f64, mid: f64, right: f64) -> f64 {
    let curvature = left - 2.0 * mid + right;
    if curvature >= 0.0 {
        return 0.0;
    }
    (0.5 * (left - right) / curvature).clamp(-0.5, 0.5)
}

/// Location of the Husimi maximum, refined by a quadratic fit through the
/// neighbouring cells (with torus wraparound). The first maximal cell in
/// row-major order wins ties.
pub fn husimi_peak(grid: &HusimiGrid) -> Result<PhasePoint, QuantizeError> {
    let r = grid.resolution;
    if r == 0 || grid.values.len() != r * r {
        return Err(QuantizeError::EmptyInput);
    }
    let mut best = 0;
    for (k, &v) in grid.values.iter().enumerate() {
        if v > grid.values[best] {
            best = k;
        }
    }
    let (a, b) = (best / r, best % r);
    let up = |i: usize| (i + 1) % r;
    let down = |i: usize| (i + r - 1) % r;
    let mid = grid.at(a, b);
    let dx = parabola_offset(grid.at(down(a), b), mid, grid.at(up(a), b));
    let dxi = parabola_offset(grid.at(a, down(b)), mid, grid.at(a, up(b)));
    Ok(PhasePoint::new(
        (a as f64 + dx) / r as f64,
        (b as f64 + dxi) / r as f64,
    ))
}

/// Uniform grid `origin + i·spacing`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    pub origin: f64,
    pub spacing: f64,
    pub count: usize,
}

impl LineGrid {
    pub fn new(origin: f64, spacing: f64, count: usize) -> Result<Self, QuantizeError> {
        if !(spacing > 0.0) || !spacing.is_finite() || !origin.is_finite() || count < 2 {
            return Err(QuantizeError::InvalidGrid);
        }
        Ok(LineGrid { origin, spacing, count })
    }

    /// Smallest grid with spacing at most `max_spacing` covering `[start, end]`.
    pub fn covering(start: f64, end: f64, max_spacing: f64) -> Result<Self, QuantizeError> {
        if !(end > start) || !(max_spacing > 0.0) {
            return Err(QuantizeError::InvalidGrid);
        }
        let intervals = ((end - start) / max_spacing).ceil().max(1.0) as usize;
        LineGrid::new(start, (end - start) / intervals as f64, intervals + 1)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn end(&self) -> f64 {
        self.node(self.count - 1)
    }

    /// Trapezoid weight of node `i` (without the spacing factor).
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.count {
            0.5
        } else {
            1.0
        }
    }
}

/// Samples of a wavefunction on a line grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LineState {
    pub grid: LineGrid,
    pub samples: Vec<Complex64>,
}

impl LineState {
    fn weighted_real(&self, f: impl Fn(f64, Complex64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &z)| self.grid.trapezoid_weight(i) * f(self.grid.node(i), z))
            .collect();
        pairwise_sum_real(&terms) * self.grid.spacing
    }

    /// Trapezoid `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_real(|_, z| z.norm_sqr()).sqrt()
    }

    /// `∫ x |ψ|² / ∫ |ψ|²`.
    pub fn position_centroid(&self) -> f64 {
        self.weighted_real(|x, z| x * z.norm_sqr()) / self.weighted_real(|_, z| z.norm_sqr())
    }

    /// Relative `L²` distance `‖self − other‖ / ‖other‖` on a shared grid.
    pub fn relative_error(&self, reference: &LineState) -> f64 {
        assert_eq!(self.grid, reference.grid, "states live on different grids");
        let diff = LineState {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&reference.samples)
                .map(|(a, b)| a - b)
                .collect(),
        };
        diff.l2_norm() / reference.l2_norm()
    }

    /// `h`-Fourier transform `∫ exp(−iξx/h) ψ(x) dx` at the given momenta.
    pub fn fourier_transform(&self, h: f64, momenta: &[f64]) -> Vec<Complex64> {
        momenta
            .iter()
            .map(|&xi| {
                let terms: Vec<Complex64> = self
                    .samples
                    .iter()
                    .enumerate()
                    .map(|(i, &z)| {
                        let (s, c) = (-xi * self.grid.node(i) / h).sin_cos();
                        z * Complex64::new(c, s) * self.grid.trapezoid_weight(i)
                    })
                    .collect();
                pairwise_sum(&terms) * self.grid.spacing
            })
            .collect()
    }

    /// Momentum centroid `∫ ξ |ψ̂(ξ)|² / ∫ |ψ̂(ξ)|²` from the discrete
    /// `h`-Fourier transform, sampled over one alias band (width `2πh/Δx`)
    /// centred on the finite-difference momentum estimate.
    pub fn momentum_centroid(&self, h: f64) -> f64 {
        let band = 2.0 * PI * h / self.grid.spacing;
        let center = self.momentum_estimate(h);
        let count = 2 * self.grid.count;
        let step = band / count as f64;
        let momenta: Vec<f64> = (0..count)
            .map(|k| center - 0.5 * band + (k as f64 + 0.5) * step)
            .collect();
        let spectrum = self.fourier_transform(h, &momenta);
        let weights: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr()).collect();
        let first: Vec<f64> = weights.iter().zip(&momenta).map(|(w, xi)| w * xi).collect();
        pairwise_sum_real(&first) / pairwise_sum_real(&weights)
    }

    /// `Re ⟨ψ, −ih∂ψ⟩ / ‖ψ‖²` with centred differences.
    fn momentum_estimate(&self, h: f64) -> f64 {
        let n = self.samples.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 1..n - 1 {
            let deriv = (self.samples[i + 1] - self.samples[i - 1]) / (2.0 * self.grid.spacing);
            let p = self.samples[i].conj() * Complex64::new(0.0, -h) * deriv;
            num += p.re;
            den += self.samples[i].norm_sqr();
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// `(πh)^(−1/4)·exp(iξ₀(x−x₀)/h − (x−x₀)²/(2h))` sampled on `grid`.
pub fn line_coherent_state(x0: f64, xi0: f64, h: f64, grid: LineGrid) -> Result<LineState, QuantizeError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(QuantizeError::InvalidParameter(format!("h = {h}")));
    }
    let grid = LineGrid::new(grid.origin, grid.spacing, grid.count)?;
    let width = h.sqrt();
    let limit = width / 4.0;
    if grid.spacing > limit {
        return Err(QuantizeError::GridTooCoarse { spacing: grid.spacing, limit });
    }
    let (need_start, need_end) = (x0 - 6.0 * width, x0 + 6.0 * width);
    if grid.origin > need_start || grid.end() < need_end {
        return Err(QuantizeError::GridTooNarrow {
            start: grid.origin,
            end: grid.end(),
            need_start,
            need_end,
        });
    }
    let scale = (PI * h).powf(-0.25);
    let samples = (0..grid.count)
        .map(|i| {
            let dx = grid.node(i) - x0;
            let (s, c) = (xi0 * dx / h).sin_cos();
            Complex64::new(c, s) * (scale * (-dx * dx / (2.0 * h)).exp())
        })
        .collect();
    Ok(LineState { grid, samples })
}
