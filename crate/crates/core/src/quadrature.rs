//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex-valued
//! integrands, plus an iterated rule over the ordered-time triangle
//! `0 ≤ s ≤ t ≤ T`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-10, max_subdivisions: 200_000 }
    }
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    fn target(&self, value: Complex64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel; the error is the Kronrod/Gauss difference.
pub fn gauss_kronrod_15<F>(f: &mut F, a: f64, b: f64) -> (Complex64, f64)
where
    F: FnMut(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * w;
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    (value, error)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the panels
/// delimited by `breaks` and bisecting the worst panel until the global
/// error estimate meets `opts`.
pub fn integrate<F>(mut f: F, breaks: &[f64], opts: &QuadOptions) -> Result<Estimate>
where
    F: FnMut(f64) -> Complex64,
{
    if breaks.len() < 2 {
        return Err(Error::Domain("quadrature needs at least one panel".into()));
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("quadrature breakpoints must be non-decreasing".into()));
    }
    let scale = breaks[0].abs().max(breaks[breaks.len() - 1].abs());
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gauss_kronrod_15(&mut f, w[0], w[1]);
        evaluations += 15;
        total += value;
        total_err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }

    let mut panels = heap.len();
    while total_err > opts.target(total) {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if panels >= opts.max_subdivisions || (worst.b - worst.a) <= 4.0 * f64::EPSILON * scale.max(1e-300)
        {
            return Err(Error::ConvergenceFailure { estimate: total_err, tolerance: opts.target(total) });
        }
        let (v1, e1) = gauss_kronrod_15(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_15(&mut f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        panels += 1;
    }

    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(Estimate { value, error, evaluations })
}

/// `n` equal panels on `[a, b]`.
pub fn uniform_breaks(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 })
        .collect()
}

/// Breakpoints at every multiple of `period` inside `(a, b)`, plus the ends.
pub fn periodic_breaks(a: f64, b: f64, period: f64) -> Vec<f64> {
    let mut out = vec![a];
    if period.is_finite() && period > 0.0 {
        let first = (a / period).floor() as i64 + 1;
        let mut k = first;
        loop {
            let x = k as f64 * period;
            if x >= b {
                break;
            }
            if x > a {
                out.push(x);
            }
            k += 1;
        }
    }
    if b > a {
        out.push(b);
    }
    out
}

/// Iterated integral `∫₀^T dt ∫₀^t ds f(t, s)` over the ordered-time
/// triangle. Both the outer and the inner ranges are split at multiples of
/// `period` (pass `f64::INFINITY` for no splitting).
///
/// The returned error adds the outer estimate to the integrated inner
/// estimates.
pub fn integrate_triangle<F>(
    mut f: F,
    upper: f64,
    period: f64,
    opts: &QuadOptions,
) -> Result<Estimate>
where
    F: FnMut(f64, f64) -> Complex64,
{
    let inner_opts = QuadOptions { rel_tol: opts.rel_tol * 0.1, abs_tol: opts.abs_tol * 0.1, ..*opts };
    let mut inner_failure: Option<Error> = None;
    let mut inner_error = 0.0;
    let mut evaluations = 0;
    let outer_breaks = periodic_breaks(0.0, upper, period);
    let outer = integrate(
        |t| {
            if inner_failure.is_some() || t == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let breaks = periodic_breaks(0.0, t, period);
            match integrate(|s| f(t, s), &breaks, &inner_opts) {
                Ok(est) => {
                    evaluations += est.evaluations;
                    inner_error = f64::max(inner_error, est.error);
                    est.value
                }
                Err(e) => {
                    inner_failure = Some(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        &outer_breaks,
        opts,
    )?;
    if let Some(e) = inner_failure {
        return Err(e);
    }
    Ok(Estimate {
        value: outer.value,
        error: outer.error + inner_error * upper,
        evaluations: evaluations + outer.evaluations,
    })
}
