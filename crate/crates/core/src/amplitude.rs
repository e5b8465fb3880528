//! Second-order amplitude `b` for atom 1 (initially excited) to hand its
//! excitation to atom 2 with no photon left over.
//!
//! Time-ordered second-order perturbation theory gives
//!
//! ```text
//! b = -(1/i) α (d ω_A)² ∫₀^{Δt} dt' ∫₀^{t'} dt'' e^{iω_A(t'-t'')} D_F(r, t'-t'')
//! ```
//!
//! The oscillatory factor carries `e^{+iω_A(t'-t'')}`: that is the phase
//! whose far-zone double integral reproduces the closed form
//! `b = -(α/4π²)(d²/r²)(iω_AΔt + 1 - e^{iω_AΔt})`. Only `|b|` and relative
//! phases are physical; the overall phase follows the propagator's sign
//! convention.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{power_law_fit, LinearFit};
use crate::propagator::{feynman_propagator_closed, feynman_propagator_far, SpacetimeInterval};
use crate::quadrature::{integrate_triangle, QuadOptions};

/// Parameters of the two-atom exchange, natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomPairConfig {
    /// Dimensionless coupling, the fine-structure constant for real atoms.
    pub alpha: f64,
    /// Dipole length `d`.
    pub dipole: f64,
    /// Separation `r` between the atoms.
    pub separation: f64,
    /// Transition frequency `ω_A` (equal to the excitation energy).
    pub omega_a: f64,
    /// Interaction window `Δt`.
    pub delta_t: f64,
}

impl AtomPairConfig {
    pub fn new(alpha: f64, dipole: f64, separation: f64, omega_a: f64, delta_t: f64) -> Result<Self> {
        let cfg = Self { alpha, dipole, separation, omega_a, delta_t };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `d = 0` and `Δt = 0` are accepted as the degenerate limits where `b = 0`.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha", self.alpha, false),
            ("dipole", self.dipole, true),
            ("separation", self.separation, false),
            ("omega_a", self.omega_a, false),
            ("delta_t", self.delta_t, true),
        ];
        for (name, value, zero_ok) in fields {
            let ok = value.is_finite() && (value > 0.0 || (zero_ok && value == 0.0));
            if !ok {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {value}")));
            }
        }
        Ok(())
    }

    /// `Δt / r`; the far-zone closed forms assume this is small.
    pub fn far_zone_ratio(&self) -> f64 {
        self.delta_t / self.separation
    }

    /// `ω_A Δt`
    pub fn phase(&self) -> f64 {
        self.omega_a * self.delta_t
    }

    /// `(α/4π²)(d²/r²)`
    fn closed_prefactor(&self) -> f64 {
        self.alpha / (4.0 * PI * PI) * (self.dipole / self.separation).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedEq11,
    ClosedEq12,
    QuadratureFar,
    QuadratureFull,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedEq11 => "closed_eq11",
            Method::ClosedEq12 => "closed_eq12",
            Method::QuadratureFar => "quadrature_far",
            Method::QuadratureFull => "quadrature_full",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeResult {
    pub b: Complex64,
    pub method: Method,
    /// Absolute error estimate on `b`.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorChoice {
    FarZone,
    Full,
}

/// `iθ + 1 - e^{iθ}` with the real part written as `2 sin²(θ/2)`.
fn exchange_factor(theta: f64) -> Complex64 {
    let half = (0.5 * theta).sin();
    Complex64::new(2.0 * half * half, theta - theta.sin())
}

/// Forward process only: atom 1 emits, atom 2 absorbs.
pub fn amplitude_forward_closed(cfg: &AtomPairConfig) -> Result<AmplitudeResult> {
    cfg.validate()?;
    let b = -cfg.closed_prefactor() * exchange_factor(cfg.phase());
    Ok(AmplitudeResult { b, method: Method::ClosedEq11, error_estimate: 0.0 })
}

/// Reverse process: atom 2 emits while jumping up, atom 1 absorbs while
/// falling. Same expression with `ω_A → -ω_A` in the oscillatory factor.
pub fn amplitude_reverse_closed(cfg: &AtomPairConfig) -> Result<Complex64> {
    cfg.validate()?;
    Ok(-cfg.closed_prefactor() * exchange_factor(-cfg.phase()))
}

/// Both processes: `b = -(α/2π²)(d²/r²)(1 - cos ω_AΔt)`, real and `≤ 0`.
///
/// `error_estimate` holds the discrepancy against the explicit sum of the
/// forward and reverse amplitudes.
pub fn amplitude_total_closed(cfg: &AtomPairConfig) -> Result<AmplitudeResult> {
    let half = (0.5 * cfg.phase()).sin();
    cfg.validate()?;
    let b = -2.0 * cfg.closed_prefactor() * (2.0 * half * half);
    let sum = amplitude_forward_closed(cfg)?.b + amplitude_reverse_closed(cfg)?;
    Ok(AmplitudeResult {
        b: Complex64::new(b, 0.0),
        method: Method::ClosedEq12,
        error_estimate: (sum - b).norm(),
    })
}

fn propagator_at(r: f64, tau: f64, choice: PropagatorChoice) -> Result<Complex64> {
    match choice {
        PropagatorChoice::FarZone => feynman_propagator_far(r),
        PropagatorChoice::Full => Ok(feynman_propagator_closed(SpacetimeInterval::new(r, tau)?, 0.0)?.value),
    }
}

fn time_integral<F>(cfg: &AtomPairConfig, omega: f64, rel_tol: f64, kernel: F) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut failure = None;
    let est = integrate_triangle(
        |t1, t2| {
            let tau = t1 - t2;
            match kernel(tau) {
                Ok(d) => Complex64::from_polar(1.0, omega * tau) * d,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        cfg.delta_t,
        2.0 * PI / omega.abs(),
        &QuadOptions::relative(rel_tol),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let target = rel_tol * est.value.norm();
    if est.error > target && est.error > 1e-300 {
        return Err(Error::ConvergenceFailure { estimate: est.error, tolerance: target });
    }
    Ok((est.value, est.error))
}

/// Double-time quadrature of the second-order amplitude.
///
/// `tol` is relative to the magnitude of the time integral; the returned
/// `error_estimate` is absolute. The full propagator is only admissible when
/// the integration domain stays outside the light cone (`r > Δt`).
pub fn amplitude_quadrature(cfg: &AtomPairConfig, choice: PropagatorChoice, tol: f64) -> Result<AmplitudeResult> {
    quadrature_with_frequency(cfg, cfg.omega_a, choice, tol)
}

/// Reverse process by quadrature: the same integral with `ω_A → -ω_A` in
/// the oscillatory factor. Adding it to [`amplitude_quadrature`] gives the
/// two-process total.
pub fn amplitude_quadrature_reverse(cfg: &AtomPairConfig, choice: PropagatorChoice, tol: f64) -> Result<AmplitudeResult> {
    quadrature_with_frequency(cfg, -cfg.omega_a, choice, tol)
}

fn quadrature_with_frequency(cfg: &AtomPairConfig, omega: f64, choice: PropagatorChoice, tol: f64) -> Result<AmplitudeResult> {
    cfg.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be > 0, got {tol}")));
    }
    if choice == PropagatorChoice::Full && !(cfg.separation > cfg.delta_t) {
        return Err(Error::Domain(format!(
            "full propagator needs r > Δt (r = {}, Δt = {})",
            cfg.separation, cfg.delta_t
        )));
    }
    let method = match choice {
        PropagatorChoice::FarZone => Method::QuadratureFar,
        PropagatorChoice::Full => Method::QuadratureFull,
    };
    let coupling = cfg.alpha * (cfg.dipole * cfg.omega_a).powi(2);
    if coupling == 0.0 || cfg.delta_t == 0.0 {
        return Ok(AmplitudeResult { b: Complex64::new(0.0, 0.0), method, error_estimate: 0.0 });
    }
    let r = cfg.separation;
    let (integral, error) = time_integral(cfg, omega, tol, |tau| propagator_at(r, tau, choice))?;
    // -(1/i) = i
    let prefactor = Complex64::new(0.0, coupling);
    Ok(AmplitudeResult { b: prefactor * integral, method, error_estimate: coupling * error })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarZoneRow {
    pub ratio: f64,
    pub separation: f64,
    pub b_far: Complex64,
    /// `|b_full - b_far| / |b_far|`
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarZoneScan {
    pub rows: Vec<FarZoneRow>,
    /// Power-law fit of deviation against ratio.
    pub fit: LinearFit,
}

const SCAN_TOL: f64 = 1e-10;

/// Measures how far the far-zone propagator is from the full one as
/// `Δt / r` shrinks, with `r = Δt / ratio` for each ratio.
///
/// The difference `b_full - b_far` is integrated directly from
/// `D_F - D_far = (i/4π²) τ² / (r²(r² - τ²))` so small deviations do not
/// drown in cancellation.
pub fn farzone_correction_scan(cfg: &AtomPairConfig, ratios: &[f64]) -> Result<FarZoneScan> {
    cfg.validate()?;
    if cfg.delta_t == 0.0 {
        return Err(Error::InvalidConfig("scan needs Δt > 0".into()));
    }
    if let Some(bad) = ratios.iter().find(|q| !(**q > 0.0 && **q < 0.5)) {
        return Err(Error::Domain(format!("ratio {bad} outside (0, 0.5)")));
    }
    let mut rows = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let separation = cfg.delta_t / ratio;
        let point = AtomPairConfig { separation, ..*cfg };
        let (far, _) = time_integral(&point, point.omega_a, SCAN_TOL, |_| feynman_propagator_far(separation))?;
        let r2 = separation * separation;
        let (correction, _) = time_integral(&point, point.omega_a, SCAN_TOL, |tau| {
            let tau2 = tau * tau;
            Ok(Complex64::new(0.0, tau2 / (4.0 * PI * PI * r2 * (separation - tau) * (separation + tau))))
        })?;
        let coupling = point.alpha * (point.dipole * point.omega_a).powi(2);
        rows.push(FarZoneRow {
            ratio,
            separation,
            b_far: Complex64::new(0.0, coupling) * far,
            relative_deviation: correction.norm() / far.norm(),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.relative_deviation).collect();
    let fit = power_law_fit(&xs, &ys)?;
    Ok(FarZoneScan { rows, fit })
}
