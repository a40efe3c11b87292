//! Special functions and numerical routines shared by the channel, consensus and
//! latency models.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Convergence settings for iterative routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    absolute: f64,
    relative: f64,
    max_iterations: usize,
}

impl Tolerance {
    pub fn new(absolute: f64, relative: f64, max_iterations: usize) -> Result<Self> {
        if !(absolute > 0.0) || !absolute.is_finite() {
            return Err(Error::invalid(format!(
                "absolute tolerance must be finite and > 0, got {absolute}"
            )));
        }
        if !(relative >= 0.0) || !relative.is_finite() {
            return Err(Error::invalid(format!(
                "relative tolerance must be finite and >= 0, got {relative}"
            )));
        }
        if max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        Ok(Tolerance {
            absolute,
            relative,
            max_iterations,
        })
    }

    pub fn absolute(&self) -> f64 {
        self.absolute
    }

    pub fn relative(&self) -> f64 {
        self.relative
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    fn bound(&self, value: f64) -> f64 {
        self.absolute.max(self.relative * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            absolute: 1e-10,
            relative: 1e-12,
            max_iterations: 2000,
        }
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gaussian tail probability `P(Z > x)` for standard normal `Z`.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("q_function needs a finite argument, got {x}")));
    }
    Ok(0.5 * erfc(x * FRAC_1_SQRT_2))
}

/// Inverse of [`q_function`] on `(0, 1)`.
///
/// Bisection on a fixed bracket followed by a few Newton steps. Upper-half
/// probabilities are reflected so the search always runs on the small tail,
/// where `erfc` keeps full relative precision.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("q_inverse needs p in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-upper_tail_inverse(1.0 - p));
    }
    Ok(upper_tail_inverse(p))
}

// p in (0, 0.5]; the root is in [0, 40).
fn upper_tail_inverse(p: f64) -> f64 {
    let q = |x: f64| 0.5 * erfc(x * FRAC_1_SQRT_2);
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if q(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let density = normal_pdf(x);
        if density == 0.0 {
            break;
        }
        let step = (q(x) - p) / density;
        let next = (x + step).clamp(lo, hi);
        let moved = (next - x).abs();
        x = next;
        if moved <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule.
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_segment<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> Segment {
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (idx, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if idx % 2 == 1 {
            gauss += WG[idx / 2] * pair;
        }
    }
    Segment {
        lower,
        upper,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive Gauss–Kronrod (G7/K15) quadrature of `f` over `[lower, upper]`.
///
/// The segment with the largest error estimate is bisected until the summed
/// estimate drops below `max(tol.absolute, tol.relative * |result|)`. Each
/// bisection counts as one iteration.
pub fn integrate<F>(f: F, lower: f64, upper: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !lower.is_finite() || !upper.is_finite() {
        return Err(Error::domain("integration limits must be finite"));
    }
    if lower > upper {
        return Err(Error::domain(format!(
            "integration needs lower <= upper, got [{lower}, {upper}]"
        )));
    }
    if lower == upper {
        return Ok(0.0);
    }

    let first = kronrod_segment(&f, lower, upper);
    let mut total = first.value;
    let mut total_error = first.error;
    let mut heap = BinaryHeap::from([first]);

    let mut iterations = 0;
    while total_error > tol.bound(total) {
        // Estimates below round-off cannot shrink further.
        if total_error <= 50.0 * f64::EPSILON * total.abs() {
            break;
        }
        if iterations >= tol.max_iterations {
            return Err(Error::Numerical {
                message: format!("quadrature did not converge in {iterations} subdivisions"),
                estimate: total,
                error_bound: total_error,
            });
        }
        iterations += 1;
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lower + worst.upper);
        let left = kronrod_segment(&f, worst.lower, mid);
        let right = kronrod_segment(&f, mid, worst.upper);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    if !total.is_finite() {
        return Err(Error::Numerical {
            message: "integrand produced a non-finite value".into(),
            estimate: total,
            error_bound: total_error,
        });
    }
    // Re-sum to drop drift from the running updates.
    Ok(heap.iter().map(|s| s.value).sum())
}

/// `ln C(n, k)`.
pub fn log_choose(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("log_choose needs k <= n, got n={n}, k={k}")));
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    Ok(ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
}

/// Probability of exactly `failures` failures in `trials` independent trials
/// that each fail with probability `p_fail`, evaluated in log space.
pub fn binomial_pmf(trials: u64, failures: u64, p_fail: f64) -> f64 {
    if failures > trials {
        return 0.0;
    }
    let successes = trials - failures;
    // 0^0 = 1 at the endpoints.
    let log_term = |count: u64, p: f64| if count == 0 { 0.0 } else { count as f64 * p.ln() };
    let ln_coeff = log_choose(trials, failures).expect("failures <= trials");
    let log_p = ln_coeff + log_term(failures, p_fail) + log_term(successes, 1.0 - p_fail);
    log_p.exp()
}

/// `P(failures <= max_failures)` for a binomial count, summed term by term and
/// clamped to `[0, 1]`.
pub fn binomial_cdf(trials: u64, max_failures: u64, p_fail: f64) -> f64 {
    let top = max_failures.min(trials);
    let sum: f64 = (0..=top).map(|x| binomial_pmf(trials, x, p_fail)).sum();
    sum.clamp(0.0, 1.0)
}
