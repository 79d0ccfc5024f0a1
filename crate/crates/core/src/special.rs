//! Series behind the means of the duration laws, and their inverses.
//!
//! * `ζ(C, α) = Σ_{i≥1} C^α / (C + i - 1)^α` (Hurwitz form, `ζ(1, α)` is the
//!   Riemann zeta function), the mean of a Pareto/Lomax law.
//! * `χ_λ(α) = Σ_{i≥1} exp(-λ (i-1)^α)`, the mean of a discrete Weibull law.
//!
//! Both are evaluated by summing a head of terms directly and closing the
//! tail with an Euler–Maclaurin expansion (integral, half term and Bernoulli
//! corrections). The correction series is truncated once the next term is
//! below the requested tolerance; that term bounds the remainder.

use crate::math::{exp, ln, ln_gamma, powf};
use crate::{Error, Result};

/// Which series to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaKind {
    /// Riemann zeta `ζ(α)`.
    Zeta,
    /// Hurwitz form `ζ(C, α)` with shift `C > 0`.
    Hurwitz(f64),
    /// Weibull series `χ_λ(α)` with rate `λ > 0`.
    Chi(f64),
}

/// Default absolute tolerance for series evaluation.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default tolerance handed to series evaluation during inversion.
pub const DEFAULT_INVERSION_TOL: f64 = 1e-10;

// B_2, B_4, ..., B_24
const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Evaluates the series named by `kind` at `alpha` to absolute error `tol`.
///
/// Returns `f64::INFINITY` when the value exceeds the float range (only
/// reachable for `Chi` with tiny `alpha`).
pub fn zeta_like(kind: ZetaKind, alpha: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    match kind {
        ZetaKind::Zeta => power_series(1.0, alpha, tol),
        ZetaKind::Hurwitz(c) => power_series(c, alpha, tol),
        ZetaKind::Chi(lambda) => {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(Error::domain("chi series needs lambda > 0"));
            }
            if !(alpha > 0.0) {
                return Err(Error::Divergence(alloc::format!(
                    "chi series needs alpha > 0, got {alpha}"
                )));
            }
            Ok(weibull_tail(lambda, alpha, 0.0, tol))
        }
    }
}

fn power_series(c: f64, alpha: f64, tol: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::domain("Hurwitz shift C must be positive"));
    }
    if !(alpha > 1.0) {
        return Err(Error::Divergence(alloc::format!(
            "zeta series needs alpha > 1, got {alpha}"
        )));
    }
    Ok(pareto_tail(c, alpha, 0.0, tol))
}

/// Infimum of the series over `alpha`: 1 for the zeta forms, `1 + e^{-λ}`
/// for the Weibull series.
fn range_floor(kind: ZetaKind) -> f64 {
    match kind {
        ZetaKind::Zeta | ZetaKind::Hurwitz(_) => 1.0,
        ZetaKind::Chi(lambda) => 1.0 + exp(-lambda),
    }
}

/// Solves `zeta_like(kind, α) = target` for `α` by bisection.
///
/// All three series are strictly decreasing in `α`, so a bracket always
/// exists for targets above [`range_floor`]. The initial bracket is
/// `[1 + 1e-6, 64]` (zeta forms) or `[1e-6, 64]` (Weibull), widened
/// geometrically when it does not contain the target.
pub fn invert_zeta_like(kind: ZetaKind, target: f64, tol: f64) -> Result<f64> {
    let what = match kind {
        ZetaKind::Zeta => "zeta",
        ZetaKind::Hurwitz(_) => "hurwitz zeta",
        ZetaKind::Chi(_) => "chi",
    };
    let out_of_range = || Error::OutOfRange { what, target };
    if !target.is_finite() || target <= range_floor(kind) {
        return Err(out_of_range());
    }
    let eval = |a: f64| zeta_like(kind, a, tol);
    let (floor, mut lo) = match kind {
        ZetaKind::Chi(_) => (0.0, 1e-6),
        _ => (1.0, 1.0 + 1e-6),
    };
    while eval(lo)? < target {
        lo = floor + (lo - floor) / 16.0;
        if lo - floor < 1e-15 {
            return Err(out_of_range());
        }
    }
    let mut hi = 64.0;
    while eval(hi)? > target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(out_of_range());
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Σ_{m ≥ m0} (c / (c + m))^α` for `α > 1`, `c > 0`, integer-valued `m0 ≥ 0`.
pub(crate) fn pareto_tail(c: f64, alpha: f64, m0: f64, tol: f64) -> f64 {
    debug_assert!(alpha > 1.0 && c > 0.0);
    let switch = (alpha + 24.0).max(16.0);
    let mut sum = 0.0;
    let mut m = m0;
    loop {
        let y = c + m;
        let g = powf(c / y, alpha);
        // ∫_m^∞ (c/(c+x))^α dx
        let integral = y * g / (alpha - 1.0);
        if g + integral <= tol * 1e-3 {
            return sum + integral + 0.5 * g;
        }
        if y >= switch {
            return sum + integral + 0.5 * g + power_corrections(g, y, alpha, tol);
        }
        sum += g;
        m += 1.0;
    }
}

// Bernoulli corrections of the Euler–Maclaurin tail for x ↦ (c/x)^α at x = y.
fn power_corrections(g: f64, y: f64, alpha: f64, tol: f64) -> f64 {
    let mut total = 0.0;
    // coef = (α)_{2k-1} / (2k)! / y^{2k-1}
    let mut coef = alpha / (2.0 * y);
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let k = k + 1;
        let term = b * coef * g;
        total += term;
        if term.abs() <= tol * 1e-3 {
            break;
        }
        let r = (2 * k) as f64;
        coef *= (alpha + r - 1.0) * (alpha + r) / ((r + 1.0) * (r + 2.0) * y * y);
    }
    total
}

/// `Σ_{m ≥ m0} exp(-λ m^α)` for `λ, α > 0`, integer-valued `m0 ≥ 0`.
pub(crate) fn weibull_tail(lambda: f64, alpha: f64, m0: f64, tol: f64) -> f64 {
    let mut sum = 0.0;
    let mut m = m0;
    loop {
        let g = exp(-lambda * powf(m, alpha));
        if g < tol {
            let integral = weibull_integral(lambda, alpha, m);
            if g + integral <= tol * 1e-3 {
                return sum + integral + 0.5 * g;
            }
        }
        // EM converges when the local log-slope λ α m^{α-1} is small.
        let slope = if m > 0.0 {
            lambda * alpha * powf(m, alpha - 1.0)
        } else {
            f64::INFINITY
        };
        if m >= 32.0 && slope <= 1.0 {
            if let Some(tail) = weibull_em(lambda, alpha, m, g, tol) {
                return sum + tail;
            }
        }
        sum += g;
        m += 1.0;
    }
}

/// `∫_x^∞ exp(-λ t^α) dt = λ^{-1/α} Γ(1/α, λ x^α) / α`.
fn weibull_integral(lambda: f64, alpha: f64, x: f64) -> f64 {
    let a = 1.0 / alpha;
    let z = lambda * powf(x, alpha);
    let log_val = ln_upper_gamma(a, z) - a * ln(lambda) - ln(alpha);
    if log_val > 709.0 {
        f64::INFINITY
    } else {
        exp(log_val)
    }
}

// Euler–Maclaurin tail Σ_{j≥0} g(x + j) using the Taylor jet of g at x.
fn weibull_em(lambda: f64, alpha: f64, x: f64, g: f64, tol: f64) -> Option<f64> {
    const ORDER: usize = 2 * BERNOULLI_EVEN.len();
    let integral = weibull_integral(lambda, alpha, x);
    if !integral.is_finite() {
        return Some(f64::INFINITY);
    }
    // g(x + h) = g(x) exp(U(h)), U(h) = -λ x^α ((1 + h/x)^α - 1)
    let scale = -lambda * powf(x, alpha);
    let mut u = [0.0; ORDER];
    let mut binom = 1.0;
    for j in 1..ORDER {
        binom *= (alpha - (j as f64 - 1.0)) / j as f64;
        u[j] = scale * binom / powf(x, j as f64);
    }
    let mut e = [0.0; ORDER];
    e[0] = 1.0;
    for j in 1..ORDER {
        let mut acc = 0.0;
        for i in 1..=j {
            acc += i as f64 * u[i] * e[j - i];
        }
        e[j] = acc / j as f64;
    }
    let mut total = integral + 0.5 * g;
    let mut prev = f64::INFINITY;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let k = k + 1;
        let term = -b / (2 * k) as f64 * g * e[2 * k - 1];
        if term.abs() > prev {
            return None;
        }
        total += term;
        if term.abs() <= tol * 1e-3 {
            return Some(total);
        }
        prev = term.abs();
    }
    None
}

/// `ln Γ(a, z)` (upper incomplete gamma) for `a > 0`, `z ≥ 0`.
pub(crate) fn ln_upper_gamma(a: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return ln_gamma(a);
    }
    if z < a + 1.0 {
        // lower series: γ(a, z) = e^{-z} z^a Σ z^n / (a (a+1) ... (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        while term > sum * 1e-17 {
            term *= z / (a + n);
            sum += term;
            n += 1.0;
            if n > 10_000.0 {
                break;
            }
        }
        let ln_lower = -z + a * ln(z) + ln(sum);
        let p = exp(ln_lower - ln_gamma(a));
        ln_gamma(a) + crate::math::ln_1p(-p.min(1.0))
    } else {
        // continued fraction (modified Lentz)
        const TINY: f64 = 1e-300;
        let mut b = z + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        -z + a * ln(z) + ln(h)
    }
}
