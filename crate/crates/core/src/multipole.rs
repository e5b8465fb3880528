//! First-order Taylor expansion of the far-zone kernel `1/(|Δx|² - Δt²)`
//! about the atom centres, and the resulting bound on multipole corrections.
//!
//! Atom 1 sits at the origin and atom 2 at `(0, 0, r)`. Primed coordinates
//! belong to the current element inside atom 2, double-primed to atom 1.

use crate::amplitude::AtomPairConfig;
use crate::error::{Error, Result};

/// Separation `r` and atomic extent `d_A`, with `0 < d_A < r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionPoint {
    r: f64,
    d_a: f64,
}

impl ExpansionPoint {
    pub fn new(r: f64, d_a: f64) -> Result<Self> {
        if !(r.is_finite() && d_a > 0.0 && d_a < r) {
            return Err(Error::Domain(format!("need 0 < d_A < r, got d_A = {d_a}, r = {r}")));
        }
        Ok(Self { r, d_a })
    }

    /// Uses the dipole length as the atomic extent.
    pub fn from_config(cfg: &AtomPairConfig) -> Result<Self> {
        Self::new(cfg.separation, cfg.dipole.abs())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn d_a(&self) -> f64 {
        self.d_a
    }
}

/// `f` and its first partials at one pair of events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGradient {
    pub value: f64,
    /// `∂f/∂(x′, y′, z′)`
    pub d_pos_prime: [f64; 3],
    /// `∂f/∂(x″, y″, z″)`
    pub d_pos_second: [f64; 3],
    pub d_t_prime: f64,
    pub d_t_second: f64,
}

impl KernelGradient {
    fn components(&self) -> [f64; 8] {
        let (p, s) = (self.d_pos_prime, self.d_pos_second);
        [p[0], p[1], p[2], self.d_t_prime, s[0], s[1], s[2], self.d_t_second]
    }

    /// Largest mismatch against `other`, relative to `scale`.
    pub fn max_deviation(&self, other: &KernelGradient, scale: f64) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// An event: spatial position and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub x: [f64; 3],
    pub t: f64,
}

impl Event {
    fn shifted(mut self, axis: usize, h: f64) -> Self {
        if axis < 3 {
            self.x[axis] += h;
        } else {
            self.t += h;
        }
        self
    }
}

/// `1/(|x′ - x″|² - (t′ - t″)²)`.
pub fn kernel(prime: Event, second: Event) -> f64 {
    let s: f64 = (0..3).map(|i| (prime.x[i] - second.x[i]).powi(2)).sum::<f64>() - (prime.t - second.t).powi(2);
    1.0 / s
}

pub fn kernel_gradient(prime: Event, second: Event) -> KernelGradient {
    let f = kernel(prime, second);
    let f2 = f * f;
    let dx = [0, 1, 2].map(|i| prime.x[i] - second.x[i]);
    let dt = prime.t - second.t;
    KernelGradient {
        value: f,
        d_pos_prime: dx.map(|d| -2.0 * d * f2),
        d_pos_second: dx.map(|d| 2.0 * d * f2),
        d_t_prime: 2.0 * dt * f2,
        d_t_second: -2.0 * dt * f2,
    }
}

/// Central differences of [`kernel`] with step `h` in every coordinate.
pub fn kernel_gradient_numeric(prime: Event, second: Event, h: f64) -> KernelGradient {
    let diff = |which: usize, axis: usize| {
        let (plus, minus) = if which == 0 {
            (kernel(prime.shifted(axis, h), second), kernel(prime.shifted(axis, -h), second))
        } else {
            (kernel(prime, second.shifted(axis, h)), kernel(prime, second.shifted(axis, -h)))
        };
        (plus - minus) / (2.0 * h)
    };
    KernelGradient {
        value: kernel(prime, second),
        d_pos_prime: [0, 1, 2].map(|a| diff(0, a)),
        d_pos_second: [0, 1, 2].map(|a| diff(1, a)),
        d_t_prime: diff(0, 3),
        d_t_second: diff(1, 3),
    }
}

fn centres(point: &ExpansionPoint) -> (Event, Event) {
    (Event { x: [0.0, 0.0, point.r], t: 0.0 }, Event { x: [0.0; 3], t: 0.0 })
}

/// Partials at the atom centres with equal times: `f = 1/r²`,
/// `∂f/∂z′ = -2/r³`, `∂f/∂z″ = 2/r³`, everything else zero.
pub fn propagator_taylor_coefficients(point: &ExpansionPoint) -> KernelGradient {
    let r3 = point.r.powi(3);
    KernelGradient {
        value: 1.0 / (point.r * point.r),
        d_pos_prime: [0.0, 0.0, -2.0 / r3],
        d_pos_second: [0.0, 0.0, 2.0 / r3],
        d_t_prime: 0.0,
        d_t_second: 0.0,
    }
}

/// Central-difference estimate of the coefficients with step `1e-5·r`.
pub fn taylor_coefficients_numeric(point: &ExpansionPoint) -> KernelGradient {
    let (prime, second) = centres(point);
    kernel_gradient_numeric(prime, second, 1e-5 * point.r)
}

/// Worst-case ratio of the first-order term to the zeroth: `2·d_A/r`.
pub fn multipole_ratio_bound(point: &ExpansionPoint) -> f64 {
    2.0 * point.d_a / point.r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn coefficients_at_r_two() {
        let p = ExpansionPoint::new(2.0, 0.1).unwrap();
        let c = propagator_taylor_coefficients(&p);
        assert_eq!(c.d_pos_prime[2], -0.25);
        assert_eq!(c.d_t_prime, 0.0);
        assert_eq!(c.value, 0.25);
        let (a, b) = centres(&p);
        assert!(kernel_gradient(a, b).max_deviation(&c, 1.0) < 1e-16);
    }

    #[test]
    fn bound_examples() {
        assert_relative_eq!(multipole_ratio_bound(&ExpansionPoint::new(1.0, 1e-4).unwrap()), 2e-4);
        let b1 = multipole_ratio_bound(&ExpansionPoint::new(5.0, 0.1).unwrap());
        let b2 = multipole_ratio_bound(&ExpansionPoint::new(5.0, 0.2).unwrap());
        assert_eq!(b2, 2.0 * b1);
        assert!(multipole_ratio_bound(&ExpansionPoint::new(1e12, 1.0).unwrap()) < 1e-11);
    }

    #[test]
    fn invalid_points() {
        assert!(ExpansionPoint::new(1.0, 1.0).is_err());
        assert!(ExpansionPoint::new(1.0, 0.0).is_err());
        assert!(ExpansionPoint::new(f64::INFINITY, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn numeric_matches_analytic_at_centres(log_r in -2.0f64..6.0, frac in 1e-6f64..0.99) {
            let r = 10f64.powf(log_r);
            let p = ExpansionPoint::new(r, frac * r).unwrap();
            let dev = taylor_coefficients_numeric(&p)
                .max_deviation(&propagator_taylor_coefficients(&p), 2.0 / r.powi(3));
            prop_assert!(dev < 1e-6, "deviation {dev}");
        }

        #[test]
        fn numeric_matches_analytic_off_centre(
            r in 1.0f64..100.0,
            offsets in proptest::array::uniform8(-0.1f64..0.1),
        ) {
            let prime = Event { x: [offsets[0], offsets[1], r + offsets[2]], t: offsets[3] };
            let second = Event { x: [offsets[4], offsets[5], offsets[6]], t: offsets[7] };
            let g = kernel_gradient(prime, second);
            let dev = kernel_gradient_numeric(prime, second, 1e-5 * r).max_deviation(&g, 2.0 / r.powi(3));
            prop_assert!(dev < 1e-6);
        }
    }
}
