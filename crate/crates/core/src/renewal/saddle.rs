use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::MgfEngine;
use crate::math::{ln, sqrt};
use crate::sim::ModelSpec;
use crate::{Error, Result};

const GRAD_STEP: f64 = 1e-5;
const HESS_STEP: f64 = 1e-4;
const MAX_ITER: u32 = 500;
// counts are clamped to [ε n, (1 - ε) n]
const CLAMP: f64 = 1e-6;

/// Result of [`legendre_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct Legendre {
    /// `I(counts) = sup_θ (θ·counts - n ln M(θ))`
    pub value: f64,
    /// maximizer `θ(counts)`
    pub theta: Vec<f64>,
    pub iterations: u32,
    /// whether any count was moved into the interior
    pub clamped: bool,
}

/// Result of [`saddlepoint_logprob`].
#[derive(Debug, Clone, PartialEq)]
pub struct Saddlepoint {
    /// `-J = -(K/2) ln 2π - ln s / 2 - I`
    pub log_prob: f64,
    /// `ln s`, `s` the determinant of the Hessian of `n ln M` at `θ(counts)`
    pub log_det: f64,
    pub legendre: Legendre,
}

struct Objective<'a> {
    engine: &'a MgfEngine,
    counts: Vec<f64>,
    n: f64,
}

impl Objective<'_> {
    fn log_m(&self, theta: &[f64]) -> Result<f64> {
        self.engine.log_mgf(theta)
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        let dot: f64 = theta.iter().zip(&self.counts).map(|(t, c)| t * c).sum();
        Ok(dot - self.n * self.log_m(theta)?)
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut x = theta.to_vec();
        let mut g = Vec::with_capacity(theta.len());
        for i in 0..theta.len() {
            x[i] = theta[i] + GRAD_STEP;
            let up = self.log_m(&x)?;
            x[i] = theta[i] - GRAD_STEP;
            let down = self.log_m(&x)?;
            x[i] = theta[i];
            g.push(self.counts[i] - self.n * (up - down) / (2.0 * GRAD_STEP));
        }
        Ok(g)
    }

    /// Hessian of `n ln M`, row-major.
    fn hessian(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let k = theta.len();
        let h = HESS_STEP;
        let mut x = theta.to_vec();
        let center = self.log_m(theta)?;
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            x[i] = theta[i] + h;
            let up = self.log_m(&x)?;
            x[i] = theta[i] - h;
            let down = self.log_m(&x)?;
            x[i] = theta[i];
            out[i * k + i] = self.n * (up - 2.0 * center + down) / (h * h);
            for j in 0..i {
                let mut corner = |si: f64, sj: f64| -> Result<f64> {
                    x[i] = theta[i] + si * h;
                    x[j] = theta[j] + sj * h;
                    let v = self.log_m(&x);
                    x[i] = theta[i];
                    x[j] = theta[j];
                    v
                };
                let mixed = corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                    + corner(-1.0, -1.0)?;
                let v = self.n * mixed / (4.0 * h * h);
                out[i * k + j] = v;
                out[j * k + i] = v;
            }
        }
        Ok(out)
    }
}

/// Lower Cholesky factor of a symmetric matrix, `None` unless positive definite.
fn cholesky(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * k + i] = sqrt(s);
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], k: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..k {
        for p in 0..i {
            y[i] -= l[i * k + p] * y[p];
        }
        y[i] /= l[i * k + i];
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            y[i] -= l[p * k + i] * y[p];
        }
        y[i] /= l[i * k + i];
    }
    y
}

/// `I(counts) = sup_θ (θ·counts - n ln M(θ))` for the count vector of
/// `K = counts.len()` consecutive epochs.
///
/// Damped Newton ascent from `θ = 0` with finite-difference derivatives;
/// counts on the boundary are clamped into `[ε n, (1 - ε) n]`, `ε = 1e-6`.
pub fn legendre_transform(model: &ModelSpec, counts: &[f64], n: u64) -> Result<Legendre> {
    let k = counts.len();
    if k == 0 {
        return Err(Error::domain("at least one count is needed"));
    }
    let nf = n as f64;
    if counts.iter().any(|&c| !(0.0..=nf).contains(&c)) {
        return Err(Error::domain(format!("counts must lie in [0, {n}]")));
    }
    let lo = CLAMP * nf;
    let hi = nf - lo;
    let clamped = counts.iter().any(|&c| c < lo || c > hi);
    let engine = MgfEngine::new(model, k)?;
    let obj = Objective {
        engine: &engine,
        counts: counts.iter().map(|&c| c.clamp(lo, hi)).collect(),
        n: nf,
    };
    let mut theta = vec![0.0; k];
    let mut value = obj.value(&theta)?;
    let mut residual = f64::INFINITY;
    for iter in 0..MAX_ITER {
        let grad = obj.gradient(&theta)?;
        let hess = obj.hessian(&theta)?;
        let step = match cholesky(&hess, k) {
            Some(l) => cholesky_solve(&l, k, &grad),
            None => grad.iter().map(|g| g / nf).collect(),
        };
        let decrement: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if decrement.abs() < 1e-13 || residual < 1e-10 * nf {
            return Ok(Legendre {
                value,
                theta,
                iterations: iter,
                clamped,
            });
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(x, s)| x + t * s).collect();
            let v = obj.value(&trial)?;
            if v >= value {
                theta = trial;
                value = v;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                // no further ascent possible at this resolution
                return Ok(Legendre {
                    value,
                    theta,
                    iterations: iter,
                    clamped,
                });
            }
        }
    }
    Err(Error::Convergence {
        iterations: MAX_ITER,
        residual,
    })
}

/// Saddlepoint approximation of `ln P(A(1..=K) = counts)`.
pub fn saddlepoint_logprob(model: &ModelSpec, counts: &[f64], n: u64) -> Result<Saddlepoint> {
    let legendre = legendre_transform(model, counts, n)?;
    let k = counts.len();
    let engine = MgfEngine::new(model, k)?;
    let obj = Objective {
        engine: &engine,
        counts: counts.to_vec(),
        n: n as f64,
    };
    let hess = obj.hessian(&legendre.theta)?;
    let l = cholesky(&hess, k).ok_or_else(|| {
        Error::DegenerateSaddle(format!(
            "Hessian not positive definite at θ = {:?}",
            legendre.theta
        ))
    })?;
    let log_det: f64 = (0..k).map(|i| 2.0 * ln(l[i * k + i])).sum();
    let log_prob =
        -(k as f64) / 2.0 * ln(2.0 * core::f64::consts::PI) - 0.5 * log_det - legendre.value;
    Ok(Saddlepoint {
        log_prob,
        log_det,
        legendre,
    })
}
