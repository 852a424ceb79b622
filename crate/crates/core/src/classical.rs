//! Classical open baker maps on the torus.
//!
//! The symmetric `D`-baker cuts the unit square into `D` vertical strips,
//! stretches each strip horizontally by `D` and compresses it vertically by
//! `D`. Removing some strips opens the map: points landing in a removed strip
//! escape. The trapped set is then the product of two Cantor sets built from
//! the kept digits, which makes every classical quantity here exact.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::fit::fit_line;

/// Default limit on the number of enumerated words, points or boxes.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassicalError {
    #[error("base must be at least 2, got {0}")]
    InvalidBase(u32),
    #[error("kept branch list is empty")]
    EmptyKept,
    #[error("branch out of range: {branch} is not in [0, {base})")]
    BranchOutOfRange { branch: u32, base: u32 },
    #[error("kept branches must be strictly increasing")]
    KeptNotIncreasing,
    #[error("depth must be at least {min}, got {got}")]
    InvalidDepth { got: u32, min: u32 },
    #[error("enumeration of {required} items exceeds the cap of {cap}")]
    CapExceeded { required: u128, cap: u64 },
    #[error("point ({x}, {xi}) lies in a removed branch")]
    EscapedPoint { x: f64, xi: f64 },
}

/// A point of the unit torus, both coordinates reduced to `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub xi: f64,
}

impl PhasePoint {
    pub fn new(x: f64, xi: f64) -> Self {
        PhasePoint {
            x: reduce_unit(x),
            xi: reduce_unit(xi),
        }
    }

    /// Euclidean distance on the torus (shortest representative).
    pub fn torus_distance(&self, other: &PhasePoint) -> f64 {
        let dx = wrap_signed(self.x - other.x);
        let dxi = wrap_signed(self.xi - other.xi);
        dx.hypot(dxi)
    }
}

fn reduce_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Maps a difference to `[-1/2, 1/2)`.
pub(crate) fn wrap_signed(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

/// Outcome of one step of an open map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapStep {
    Mapped(PhasePoint),
    Escaped,
}

impl MapStep {
    pub fn point(self) -> Option<PhasePoint> {
        match self {
            MapStep::Mapped(p) => Some(p),
            MapStep::Escaped => None,
        }
    }
}

/// Raw form used for (de)serialization; validated on conversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawBakerSpec {
    base: u32,
    kept: Vec<u32>,
}

/// The symmetric `D`-baker with a set of kept branches.
///
/// The unstable direction is horizontal for the whole family.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBakerSpec", into = "RawBakerSpec")]
pub struct OpenBakerSpec {
    base: u32,
    kept: Vec<u32>,
}

impl TryFrom<RawBakerSpec> for OpenBakerSpec {
    type Error = ClassicalError;

    fn try_from(raw: RawBakerSpec) -> Result<Self, Self::Error> {
        OpenBakerSpec::new(raw.base, raw.kept)
    }
}

impl From<OpenBakerSpec> for RawBakerSpec {
    fn from(spec: OpenBakerSpec) -> Self {
        RawBakerSpec {
            base: spec.base,
            kept: spec.kept,
        }
    }
}

impl OpenBakerSpec {
    pub fn new(base: u32, kept: Vec<u32>) -> Result<Self, ClassicalError> {
        if base < 2 {
            return Err(ClassicalError::InvalidBase(base));
        }
        if kept.is_empty() {
            return Err(ClassicalError::EmptyKept);
        }
        if let Some(&branch) = kept.iter().find(|&&b| b >= base) {
            return Err(ClassicalError::BranchOutOfRange { branch, base });
        }
        if kept.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ClassicalError::KeptNotIncreasing);
        }
        Ok(OpenBakerSpec { base, kept })
    }

    /// The closed baker map (every branch kept).
    pub fn closed(base: u32) -> Result<Self, ClassicalError> {
        OpenBakerSpec::new(base, (0..base).collect())
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn kept(&self) -> &[u32] {
        &self.kept
    }

    pub fn kept_count(&self) -> u32 {
        self.kept.len() as u32
    }

    pub fn is_closed(&self) -> bool {
        self.kept.len() == self.base as usize
    }

    pub fn is_kept(&self, branch: u32) -> bool {
        self.kept.binary_search(&branch).is_ok()
    }

    /// Index of the vertical strip containing `x`.
    pub fn branch_of(&self, x: f64) -> u32 {
        ((self.base as f64 * x).floor() as u32).min(self.base - 1)
    }

    pub fn apply(&self, p: PhasePoint) -> MapStep {
        let d = self.base as f64;
        let branch = self.branch_of(p.x);
        if !self.is_kept(branch) {
            return MapStep::Escaped;
        }
        let eps = branch as f64;
        MapStep::Mapped(PhasePoint::new(d * p.x - eps, (p.xi + eps) / d))
    }

    /// Inverse map; the branch is read off the momentum coordinate.
    pub fn apply_inverse(&self, p: PhasePoint) -> MapStep {
        let d = self.base as f64;
        let branch = self.branch_of(p.xi);
        if !self.is_kept(branch) {
            return MapStep::Escaped;
        }
        let eps = branch as f64;
        MapStep::Mapped(PhasePoint::new((p.x + eps) / d, d * p.xi - eps))
    }

    /// `φᵘ(p) = −log |det DT|_{Eᵘ}|`, constant `−log D` on kept strips.
    pub fn unstable_jacobian(&self, p: PhasePoint) -> Result<f64, ClassicalError> {
        let branch = self.branch_of(p.x);
        if !self.is_kept(branch) {
            return Err(ClassicalError::EscapedPoint { x: p.x, xi: p.xi });
        }
        Ok(-(self.base as f64).ln())
    }

    /// Closed form `log k − s·log D` of the pressure `P(s·φᵘ)`.
    pub fn analytic_pressure(&self, s: f64) -> f64 {
        (self.kept_count() as f64).ln() - s * (self.base as f64).ln()
    }

    /// Closed form `2·log k / log D` of the trapped-set box dimension.
    pub fn analytic_dimension(&self) -> f64 {
        2.0 * (self.kept_count() as f64).ln() / (self.base as f64).ln()
    }

    fn check_cap(&self, exponent: u32, cap: u64) -> Result<u64, ClassicalError> {
        let required = (self.kept_count() as u128)
            .checked_pow(exponent)
            .unwrap_or(u128::MAX);
        if required > cap as u128 {
            return Err(ClassicalError::CapExceeded { required, cap });
        }
        Ok(required as u64)
    }

    /// Integer value `Σ εᵢ D^(n−i)` of the `index`-th length-`n` word over the
    /// kept digits, in lexicographic order.
    fn word_value(&self, index: u64, n: u32) -> u64 {
        let k = self.kept_count() as u64;
        let d = self.base as u64;
        let mut digits_left = index;
        let mut place = k.pow(n - 1);
        let mut value = 0u64;
        for _ in 0..n {
            let digit = self.kept[(digits_left / place) as usize] as u64;
            digits_left %= place;
            value = value * d + digit;
            place = (place / k).max(1);
        }
        value
    }

    /// Midpoints of all depth-`n` cylinders of the trapped set, ordered
    /// lexicographically by (position word, momentum word).
    pub fn trapped_set_points(&self, depth: u32, cap: u64) -> Result<Vec<PhasePoint>, ClassicalError> {
        self.trapped_set_points_with(depth, cap, Execution::default())
    }

    pub fn trapped_set_points_with(
        &self,
        depth: u32,
        cap: u64,
        exec: Execution,
    ) -> Result<Vec<PhasePoint>, ClassicalError> {
        if depth < 1 {
            return Err(ClassicalError::InvalidDepth { got: depth, min: 1 });
        }
        self.check_cap(2 * depth, cap)?;
        let words = self.kept_count() as u64;
        let words = words.pow(depth);
        let scale = (self.base as f64).powi(depth as i32);
        let centers: Vec<f64> = (0..words)
            .map(|w| (self.word_value(w, depth) as f64 + 0.5) / scale)
            .collect();
        let rows = exec.map_indexed(centers.len(), |i| {
            centers
                .iter()
                .map(|&xi| PhasePoint::new(centers[i], xi))
                .collect::<Vec<_>>()
        });
        Ok(rows.into_iter().flatten().collect())
    }

    /// Number of `D^(−n)` grid boxes meeting the trapped set, by cylinder
    /// enumeration.
    pub fn box_count(&self, depth: u32, cap: u64) -> Result<u64, ClassicalError> {
        if depth < 1 {
            return Err(ClassicalError::InvalidDepth { got: depth, min: 1 });
        }
        self.check_cap(2 * depth, cap)?;
        let words = (self.kept_count() as u64).pow(depth);
        let side = (self.base as u128).pow(depth);
        let cells: Vec<u64> = (0..words).map(|w| self.word_value(w, depth)).collect();
        let mut boxes: Vec<u128> = Vec::with_capacity((words * words) as usize);
        for &ix in &cells {
            for &ixi in &cells {
                boxes.push(ix as u128 * side + ixi as u128);
            }
        }
        boxes.sort_unstable();
        boxes.dedup();
        Ok(boxes.len() as u64)
    }

    /// Box-counting dimension from a log-log fit over `δ = D^(−1) … D^(−max_depth)`.
    pub fn minkowski_dimension(&self, max_depth: u32, cap: u64) -> Result<DimensionEstimate, ClassicalError> {
        if max_depth < 2 {
            return Err(ClassicalError::InvalidDepth { got: max_depth, min: 2 });
        }
        let d = self.base as f64;
        let mut scales = Vec::with_capacity(max_depth as usize);
        let mut counts = Vec::with_capacity(max_depth as usize);
        for n in 1..=max_depth {
            scales.push(d.powi(-(n as i32)));
            counts.push(self.box_count(n, cap)?);
        }
        let xs: Vec<f64> = scales.iter().map(|s| -s.ln()).collect();
        let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
        let fit = fit_line(&xs, &ys).expect("distinct scales");
        Ok(DimensionEstimate {
            scales,
            counts,
            slope: fit.slope.max(0.0),
            residual: fit.max_residual,
        })
    }

    /// `P(s·φᵘ)` from the weighted sum over all periodic words of length `n`:
    /// `(1/n)·log Σ_w exp(s·Σ_i φᵘ(Tⁱ x_w))`.
    pub fn topological_pressure(&self, s: f64, word_length: u32, cap: u64) -> Result<PressureResult, ClassicalError> {
        let n = word_length;
        if n < 1 {
            return Err(ClassicalError::InvalidDepth { got: n, min: 1 });
        }
        let words = self.check_cap(n, cap)?;
        let scale = (self.base as f64).powi(n as i32);
        let d = self.base as u64;
        let modulus = d.pow(n);
        let mut log_weights = Vec::with_capacity(words as usize);
        for w in 0..words {
            let mut value = self.word_value(w, n);
            let mut birkhoff = 0.0;
            // the i-th orbit point of the periodic word lies in the cylinder of
            // the i-fold cyclic shift; its midpoint is a safe interior sample
            for _ in 0..n {
                let p = PhasePoint::new((value as f64 + 0.5) / scale, 0.5);
                birkhoff += self.unstable_jacobian(p)?;
                let lead = value / (modulus / d);
                value = (value % (modulus / d)) * d + lead;
            }
            log_weights.push(s * birkhoff);
        }
        let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = log_weights.iter().map(|l| (l - max).exp()).sum();
        let value = (max + sum.ln()) / n as f64;
        Ok(PressureResult {
            s,
            word_length: n,
            value,
            analytic_value: self.analytic_pressure(s),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureResult {
    pub s: f64,
    pub word_length: u32,
    /// Cycle-sum estimate, in nats.
    pub value: f64,
    pub analytic_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    /// Largest deviation of the log-log fit.
    pub residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor3() -> OpenBakerSpec {
        OpenBakerSpec::new(3, vec![0, 2]).unwrap()
    }

    fn assert_point(p: MapStep, x: f64, xi: f64) {
        let p = p.point().expect("not escaped");
        assert!((p.x - x).abs() < 1e-14, "x {} vs {}", p.x, x);
        assert!((p.xi - xi).abs() < 1e-14, "xi {} vs {}", p.xi, xi);
    }

    #[test]
    fn validation() {
        assert_eq!(OpenBakerSpec::new(1, vec![0]), Err(ClassicalError::InvalidBase(1)));
        assert_eq!(OpenBakerSpec::new(3, vec![]), Err(ClassicalError::EmptyKept));
        assert_eq!(
            OpenBakerSpec::new(3, vec![7]),
            Err(ClassicalError::BranchOutOfRange { branch: 7, base: 3 })
        );
        assert_eq!(OpenBakerSpec::new(3, vec![2, 0]), Err(ClassicalError::KeptNotIncreasing));
        assert_eq!(OpenBakerSpec::new(3, vec![1, 1]), Err(ClassicalError::KeptNotIncreasing));
        assert!(OpenBakerSpec::closed(4).unwrap().is_closed());
        assert!(!cantor3().is_closed());
    }

    #[test]
    fn serde_revalidates() {
        let ok: OpenBakerSpec = serde_json::from_str("{\"base\":3,\"kept\":[0,2]}").unwrap();
        assert_eq!(ok, cantor3());
        assert!(serde_json::from_str::<OpenBakerSpec>("{\"base\":3,\"kept\":[0,5]}").is_err());
    }

    #[test]
    fn forward_examples() {
        let spec = cantor3();
        assert_point(spec.apply(PhasePoint::new(0.0, 0.0)), 0.0, 0.0);
        assert_eq!(spec.apply(PhasePoint::new(0.4, 0.1)), MapStep::Escaped);
        assert_point(spec.apply(PhasePoint::new(0.8, 0.5)), 3.0 * 0.8 - 2.0, 2.5 / 3.0);
    }

    #[test]
    fn inverse_examples() {
        let spec = cantor3();
        assert_point(spec.apply_inverse(PhasePoint::new(0.4, 2.5 / 3.0)), 0.8, 0.5);
        assert_eq!(spec.apply_inverse(PhasePoint::new(0.2, 0.5)), MapStep::Escaped);
    }

    #[test]
    fn trapped_points_depth_one() {
        let pts = cantor3().trapped_set_points(1, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(pts.len(), 4);
        let expect = [(1.0 / 6.0, 1.0 / 6.0), (1.0 / 6.0, 5.0 / 6.0), (5.0 / 6.0, 1.0 / 6.0), (5.0 / 6.0, 5.0 / 6.0)];
        for (p, (x, xi)) in pts.iter().zip(expect) {
            assert!((p.x - x).abs() < 1e-15 && (p.xi - xi).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_map_trapped_points_form_full_grid() {
        let spec = OpenBakerSpec::closed(4).unwrap();
        let pts = spec.trapped_set_points(1, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(pts.len(), 16);
        for (i, p) in pts.iter().enumerate() {
            assert!((p.x - ((i / 4) as f64 + 0.5) / 4.0).abs() < 1e-15);
            assert!((p.xi - ((i % 4) as f64 + 0.5) / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn box_counts() {
        assert_eq!(cantor3().box_count(2, DEFAULT_ENUMERATION_CAP).unwrap(), 16);
        assert_eq!(OpenBakerSpec::closed(3).unwrap().box_count(3, DEFAULT_ENUMERATION_CAP).unwrap(), 729);
        let single = OpenBakerSpec::new(5, vec![3]).unwrap();
        for n in 1..6 {
            assert_eq!(single.box_count(n, DEFAULT_ENUMERATION_CAP).unwrap(), 1);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = cantor3().box_count(11, DEFAULT_ENUMERATION_CAP).unwrap_err();
        assert_eq!(err, ClassicalError::CapExceeded { required: 1 << 22, cap: DEFAULT_ENUMERATION_CAP });
        assert!(cantor3().trapped_set_points(3, 10).is_err());
        assert!(cantor3().topological_pressure(0.5, 4, 15).is_err());
        assert!(cantor3().topological_pressure(0.5, 4, 16).is_ok());
    }

    #[test]
    fn dimension_examples() {
        let est = cantor3().minkowski_dimension(6, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((est.slope - 2.0 * 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert!((est.slope - 1.26186).abs() < 1e-5);
        assert!(est.residual < 1e-12);
        assert!(est.counts.windows(2).all(|w| w[0] <= w[1]));
        let full = OpenBakerSpec::closed(3).unwrap().minkowski_dimension(4, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((full.slope - 2.0).abs() < 1e-12);
        let single = OpenBakerSpec::new(3, vec![1]).unwrap().minkowski_dimension(4, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(single.slope, 0.0);
        assert!(cantor3().minkowski_dimension(1, DEFAULT_ENUMERATION_CAP).is_err());
    }

    #[test]
    fn unstable_jacobian_is_constant() {
        let spec = cantor3();
        let p = PhasePoint::new(0.1, 0.7);
        assert!((spec.unstable_jacobian(p).unwrap() + 3f64.ln()).abs() < 1e-15);
        assert!((spec.unstable_jacobian(p).unwrap() + 1.09861).abs() < 1e-5);
        let five = OpenBakerSpec::new(5, vec![0, 2]).unwrap();
        assert!((five.unstable_jacobian(p).unwrap() + 1.60944).abs() < 1e-5);
        let q = spec.apply(p).point().unwrap();
        assert_eq!(spec.unstable_jacobian(q).unwrap(), spec.unstable_jacobian(p).unwrap());
        assert!(matches!(
            spec.unstable_jacobian(PhasePoint::new(0.5, 0.5)),
            Err(ClassicalError::EscapedPoint { .. })
        ));
    }

    #[test]
    fn pressure_examples() {
        let cap = DEFAULT_ENUMERATION_CAP;
        let p3 = cantor3().topological_pressure(0.5, 3, cap).unwrap();
        assert!((p3.value - 0.14384).abs() < 1e-5);
        let five = OpenBakerSpec::new(5, vec![0, 2]).unwrap();
        for n in 1..=6 {
            let p = five.topological_pressure(0.5, n, cap).unwrap();
            assert!((p.value - p.analytic_value).abs() < 1e-12);
            assert!((p.value + 0.11157).abs() < 1e-5);
            assert!((p.value.exp() - 0.89443).abs() < 1e-5);
        }
        let entropy = five.topological_pressure(0.0, 4, cap).unwrap();
        assert!((entropy.value - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pressure_handles_the_top_branch_fixed_point() {
        // the fixed point of the last branch sits at x = 1 ≡ 0 on the torus
        let spec = OpenBakerSpec::new(3, vec![2]).unwrap();
        let p = spec.topological_pressure(1.0, 3, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((p.value + 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn torus_distance_wraps() {
        let a = PhasePoint::new(0.95, 0.02);
        let b = PhasePoint::new(0.05, 0.98);
        assert!((a.torus_distance(&b) - (0.1f64.hypot(0.04))).abs() < 1e-12);
        assert_eq!(PhasePoint::new(-1e-20, 1.0).x, 0.0);
    }
}
