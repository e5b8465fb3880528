//! The massless Feynman propagator `D_F(r, τ) = -1 / (4iπ² (r² - τ² - iε))`
//! and everything needed to check it: the far-zone limit, a regulated
//! radial mode integral, Lorentz boosts and a planar grid for export.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, uniform_breaks, QuadOptions};

/// Relative width of the band around `r = |τ|` treated as the light cone.
pub const CONE_GUARD: f64 = 1e-9;

/// Grid export clamps magnitudes at this multiple of the far-field value at `r = t`.
pub const GRID_CLAMP_FACTOR: f64 = 1e6;

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Spatial separation and time delay between two events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeInterval {
    r: f64,
    tau: f64,
}

impl SpacetimeInterval {
    pub fn new(r: f64, tau: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() || !tau.is_finite() {
            return Err(Error::Domain(format!("interval needs finite r >= 0 and tau, got r = {r}, tau = {tau}")));
        }
        Ok(Self { r, tau })
    }

    /// Interval between the origin and the event `(x, t)` in 1+1 dimensions.
    pub fn from_event(x: f64, t: f64) -> Result<Self> {
        Self::new(x.abs(), t)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `r² - τ²`, factored to keep relative precision near the cone.
    pub fn invariant_interval(&self) -> f64 {
        (self.r - self.tau) * (self.r + self.tau)
    }

    pub fn cone_guard(&self) -> f64 {
        CONE_GUARD * (self.r * self.r).max(self.tau * self.tau)
    }

    pub fn regime(&self) -> Regime {
        let s = self.invariant_interval();
        if s.abs() < self.cone_guard() || (self.r == 0.0 && self.tau == 0.0) {
            Regime::NearCone
        } else if s > 0.0 {
            Regime::OutsideCone
        } else {
            Regime::InsideCone
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    OutsideCone,
    InsideCone,
    NearCone,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::OutsideCone => "outside_cone",
            Regime::InsideCone => "inside_cone",
            Regime::NearCone => "near_cone",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorValue {
    pub value: Complex64,
    pub regime: Regime,
}

/// Closed-form propagator with the `-iε` prescription.
///
/// With `epsilon = 0` the light cone itself (within [`CONE_GUARD`]) is a
/// [`Error::LightConeSingularity`].
pub fn feynman_propagator_closed(interval: SpacetimeInterval, epsilon: f64) -> Result<PropagatorValue> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let regime = interval.regime();
    if epsilon == 0.0 && regime == Regime::NearCone {
        return Err(Error::LightConeSingularity { r: interval.r, tau: interval.tau });
    }
    let denom = Complex64::new(0.0, FOUR_PI_SQ) * Complex64::new(interval.invariant_interval(), -epsilon);
    Ok(PropagatorValue { value: -1.0 / denom, regime })
}

/// Far-zone limit `-1/(4iπ²r²)`, valid for `r ≫ τ`.
pub fn feynman_propagator_far(r: f64) -> Result<Complex64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("far-zone propagator needs r > 0, got {r}")));
    }
    Ok(-1.0 / Complex64::new(0.0, FOUR_PI_SQ * (r * r)))
}

/// Regulator and truncation for [`mode_sum_propagator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSumConfig {
    /// Exponential UV regulator `e^{-ηk}`.
    pub eta: f64,
    pub k_max: f64,
    /// Initial equal-width quadrature panels on `[0, k_max]`.
    pub panels: usize,
    /// Relative tolerance on the returned value.
    pub tol: f64,
}

impl ModeSumConfig {
    /// `η = 0.01·min(r, |r - τ|)`, `k_max = 50/η`, 4096 panels.
    pub fn for_interval(interval: SpacetimeInterval) -> Self {
        let gap = (interval.r - interval.tau.abs()).abs();
        let eta = 0.01 * interval.r.min(gap).max(f64::MIN_POSITIVE);
        Self::with_eta(eta)
    }

    pub fn with_eta(eta: f64) -> Self {
        Self { eta, k_max: 50.0 / eta, panels: 4096, tol: 1e-10 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidConfig(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.k_max > 0.0) || !self.k_max.is_finite() {
            return Err(Error::InvalidConfig(format!("k_max must be > 0, got {}", self.k_max)));
        }
        if self.panels == 0 {
            return Err(Error::InvalidConfig("panels must be > 0".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }

    /// `k_max·η` large enough that the discarded tail is negligible.
    pub fn regulator_resolved(&self) -> bool {
        self.k_max * self.eta >= 20.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSumValue {
    pub value: Complex64,
    /// Quadrature estimate plus a bound on the truncated tail beyond `k_max`.
    pub error_estimate: f64,
    /// False when `k_max·η < 20`; the error bound then rests on the tail term.
    pub regulator_resolved: bool,
}

/// Regulated radial mode integral
/// `(1/(4π²r)) ∫₀^{k_max} sin(kr) e^{-(η + iτ)k} dk`.
///
/// Its `η → 0`, `k_max → ∞` limit is the vacuum correlation
/// `1/(4π²(r² - τ²)) = -i·D_F`; at finite `η` the exact value is
/// `1/(4π²(r² + (η + iτ)²))`.
pub fn mode_sum_propagator(interval: SpacetimeInterval, cfg: &ModeSumConfig) -> Result<ModeSumValue> {
    cfg.validate()?;
    let r = interval.r;
    if !(r > 0.0) {
        return Err(Error::Domain("mode sum needs r > 0".into()));
    }
    let z = Complex64::new(cfg.eta, interval.tau);
    let breaks = uniform_breaks(0.0, cfg.k_max, cfg.panels);
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 0.5 * cfg.tol, max_subdivisions: 64 * cfg.panels };
    let est = integrate(|k| (-z * k).exp() * (k * r).sin(), &breaks, &opts)?;
    let prefactor = 1.0 / (FOUR_PI_SQ * r);
    let tail = (-cfg.eta * cfg.k_max).exp() / cfg.eta;
    let value = est.value * prefactor;
    let error_estimate = (est.error + tail) * prefactor;
    if error_estimate > cfg.tol * value.norm() {
        return Err(Error::ConvergenceFailure { estimate: error_estimate, tolerance: cfg.tol * value.norm() });
    }
    Ok(ModeSumValue { value, error_estimate, regulator_resolved: cfg.regulator_resolved() })
}

/// Boost along `x` with the given rapidity.
pub fn lorentz_boost(x: f64, t: f64, rapidity: f64) -> (f64, f64) {
    let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
    (x * ch - t * sh, t * ch - x * sh)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
    pub regime: Regime,
}

/// Evaluates `D_F` on the `z = 0` plane at time `t` after an emission at the
/// origin, over `[-half_extent, half_extent]²` with `resolution` points per
/// side, row-major in `y` then `x`.
///
/// Points on the light cone never error: their value is clamped to
/// [`GRID_CLAMP_FACTOR`] times the far-field magnitude at `r = t`, keeping the
/// phase.
pub fn propagator_grid(t: f64, half_extent: f64, resolution: usize) -> Result<Vec<GridRow>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("grid time must be > 0, got {t}")));
    }
    if !(half_extent > 0.0) || !half_extent.is_finite() {
        return Err(Error::Domain(format!("grid extent must be > 0, got {half_extent}")));
    }
    if resolution < 2 {
        return Err(Error::Domain(format!("grid resolution must be >= 2, got {resolution}")));
    }
    let clamp = GRID_CLAMP_FACTOR / (FOUR_PI_SQ * t * t);
    let last = (resolution - 1) as f64;
    // Integer numerators keep the axis exactly antisymmetric.
    let axis: Vec<f64> = (0..resolution)
        .map(|i| half_extent * (2.0 * i as f64 - last) / last)
        .collect();
    let mut rows = Vec::with_capacity(resolution * resolution);
    for &y in &axis {
        for &x in &axis {
            let r = (x * x + y * y).sqrt();
            let interval = SpacetimeInterval { r, tau: t };
            let (value, regime) = match feynman_propagator_closed(interval, 0.0) {
                Ok(v) => (v.value, v.regime),
                Err(_) => (Complex64::new(0.0, clamp), Regime::NearCone),
            };
            let mut value = value;
            let mut magnitude = value.norm();
            if magnitude > clamp {
                value *= clamp / magnitude;
                magnitude = clamp;
            }
            rows.push(GridRow { x, y, re: value.re, im: value.im, magnitude, regime });
        }
    }
    Ok(rows)
}
