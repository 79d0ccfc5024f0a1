//! Duration laws on the positive integers.
//!
//! Survival functions `S(i) = P(Z ≥ i)`:
//!
//! | law                  | `S(i)`                      |
//! |----------------------|-----------------------------|
//! | `Geometric(p)`       | `(1 - p)^(i-1)`             |
//! | `Weibull(λ, α)`      | `exp(-λ (i-1)^α)`           |
//! | `Pareto(C, α)`       | `(C / (C + i - 1))^α`       |
//! | `Deterministic(d)`   | `1` for `i ≤ d`, else `0`   |
//!
//! The residual law of `Z` has pmf `S(k) / E Z`, the law of the remaining
//! duration seen by a stationary observer.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{exp, exp_m1, floor, ln, ln_1p, powf};
use crate::special::{pareto_tail, weibull_tail};
use crate::{Error, Result};

/// Largest duration the samplers return. Draws further out are clamped.
pub const MAX_DURATION: u64 = 1 << 62;

const CACHE_BLOCK: usize = 1024;

/// Parameters of a duration law, as written in configuration files.
///
/// ```text
/// {"kind":"geometric","p":0.3}
/// {"kind":"weibull","lambda":1.0,"alpha":0.5}
/// {"kind":"pareto","C":2.0,"alpha":4.0}
/// {"kind":"deterministic","d":1}
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LawSpec {
    Geometric {
        p: f64,
    },
    Weibull {
        lambda: f64,
        alpha: f64,
    },
    Pareto {
        #[serde(rename = "C")]
        c: f64,
        alpha: f64,
    },
    Deterministic {
        d: u64,
    },
}

/// A validated duration law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawSpec", into = "LawSpec")]
pub struct OnOffLaw {
    spec: LawSpec,
    // E Z, infinite for Pareto with α ≤ 1
    mean: f64,
}

impl TryFrom<LawSpec> for OnOffLaw {
    type Error = Error;

    fn try_from(spec: LawSpec) -> Result<Self> {
        OnOffLaw::new(spec)
    }
}

impl From<OnOffLaw> for LawSpec {
    fn from(law: OnOffLaw) -> Self {
        law.spec
    }
}

impl core::fmt::Display for OnOffLaw {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.spec {
            LawSpec::Geometric { p } => write!(f, "G({p})"),
            LawSpec::Weibull { lambda, alpha } => write!(f, "W({lambda},{alpha})"),
            LawSpec::Pareto { c, alpha } => write!(f, "Par({c},{alpha})"),
            LawSpec::Deterministic { d } => write!(f, "D({d})"),
        }
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl OnOffLaw {
    pub fn new(spec: LawSpec) -> Result<Self> {
        match spec {
            LawSpec::Geometric { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::domain(format!(
                        "geometric p must lie in (0,1), got {p}"
                    )));
                }
            }
            LawSpec::Weibull { lambda, alpha } => {
                if !positive(lambda) || !positive(alpha) {
                    return Err(Error::domain(format!(
                        "weibull needs lambda > 0 and alpha > 0, got ({lambda}, {alpha})"
                    )));
                }
            }
            LawSpec::Pareto { c, alpha } => {
                if !positive(c) || !positive(alpha) {
                    return Err(Error::domain(format!(
                        "pareto needs C > 0 and alpha > 0, got ({c}, {alpha})"
                    )));
                }
            }
            LawSpec::Deterministic { d } => {
                if d == 0 {
                    return Err(Error::domain("deterministic duration must be at least 1"));
                }
            }
        }
        let mut law = OnOffLaw {
            spec,
            mean: f64::INFINITY,
        };
        law.mean = match spec {
            LawSpec::Pareto { alpha, .. } if alpha <= 1.0 => f64::INFINITY,
            _ => law.tail_sum(1),
        };
        Ok(law)
    }

    pub fn geometric(p: f64) -> Result<Self> {
        Self::new(LawSpec::Geometric { p })
    }

    pub fn weibull(lambda: f64, alpha: f64) -> Result<Self> {
        Self::new(LawSpec::Weibull { lambda, alpha })
    }

    pub fn pareto(c: f64, alpha: f64) -> Result<Self> {
        Self::new(LawSpec::Pareto { c, alpha })
    }

    pub fn deterministic(d: u64) -> Result<Self> {
        Self::new(LawSpec::Deterministic { d })
    }

    pub fn spec(&self) -> LawSpec {
        self.spec
    }

    pub fn is_geometric(&self) -> bool {
        matches!(self.spec, LawSpec::Geometric { .. })
    }

    /// `P(Z ≥ i)`. Equals 1 for `i ≤ 1`.
    pub fn survival(&self, i: u64) -> f64 {
        if i <= 1 {
            return 1.0;
        }
        let m = (i - 1) as f64;
        match self.spec {
            LawSpec::Geometric { p } => exp(m * ln_1p(-p)),
            LawSpec::Weibull { lambda, alpha } => exp(-lambda * powf(m, alpha)),
            LawSpec::Pareto { c, alpha } => powf(c / (c + m), alpha),
            LawSpec::Deterministic { d } => {
                if i <= d {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(Z = k)`, computed as `S(k) (1 - S(k+1)/S(k))` to keep relative
    /// accuracy far in the tail.
    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let s = self.survival(k);
        let m = (k - 1) as f64;
        match self.spec {
            LawSpec::Geometric { p } => s * p,
            LawSpec::Weibull { lambda, alpha } => {
                let step = powf(m + 1.0, alpha) - powf(m, alpha);
                -s * exp_m1(-lambda * step)
            }
            LawSpec::Pareto { c, alpha } => -s * exp_m1(alpha * ln_1p(-1.0 / (c + m + 1.0))),
            LawSpec::Deterministic { d } => {
                if k == d {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `Σ_{j ≥ k} S(j)`, so `tail_sum(1) = E Z`. Infinite for Pareto `α ≤ 1`.
    pub fn tail_sum(&self, k: u64) -> f64 {
        let k = k.max(1);
        let m0 = (k - 1) as f64;
        match self.spec {
            LawSpec::Geometric { p } => self.survival(k) / p,
            LawSpec::Weibull { lambda, alpha } => {
                let tol = (self.survival(k) * 1e-15).max(1e-300);
                weibull_tail(lambda, alpha, m0, tol)
            }
            LawSpec::Pareto { c, alpha } => {
                if alpha <= 1.0 {
                    return f64::INFINITY;
                }
                let tol = (self.survival(k) * 1e-15).max(1e-300);
                pareto_tail(c, alpha, m0, tol)
            }
            LawSpec::Deterministic { d } => d.saturating_sub(k - 1) as f64,
        }
    }

    /// `E Z`.
    pub fn mean(&self) -> Result<f64> {
        if self.mean.is_finite() {
            Ok(self.mean)
        } else {
            Err(Error::InfiniteMean(format!("{self}")))
        }
    }

    /// Inverse-transform draw: the unique `i ≥ 1` with `S(i+1) < u ≤ S(i)`.
    pub fn sample(&self, u: f64) -> u64 {
        let seed = match self.spec {
            LawSpec::Geometric { p } => ln(u) / ln_1p(-p),
            LawSpec::Weibull { lambda, alpha } => powf(-ln(u) / lambda, 1.0 / alpha),
            LawSpec::Pareto { c, alpha } => c * (powf(u, -1.0 / alpha) - 1.0),
            LawSpec::Deterministic { d } => return d,
        };
        let guess = if seed.is_finite() && seed >= 0.0 {
            (floor(seed) as u64).saturating_add(1)
        } else {
            1
        };
        refine(guess, u, |i| self.survival(i))
    }

    /// The residual law, with its default cache.
    pub fn residual(&self) -> Result<ResidualLaw> {
        ResidualLaw::new(*self)
    }
}

// Local search from `guess` for the bracket S(i+1) < u ≤ S(i).
fn refine(guess: u64, u: f64, surv: impl Fn(u64) -> f64) -> u64 {
    let mut i = guess.clamp(1, MAX_DURATION);
    while i > 1 && surv(i) < u {
        i -= 1;
    }
    while i < MAX_DURATION && surv(i + 1) >= u {
        i += 1;
    }
    i
}

/// Residual law of a finite-mean [`OnOffLaw`].
///
/// Survival values `S̄(k) = Σ_{j≥k} S(j) / E Z` are cached for the first
/// blocks of 1024 indices; draws landing beyond the cache fall back to a
/// galloping search on the analytic tail. The cache is only grown through
/// [`ResidualLaw::extend_to`], so a shared `&ResidualLaw` is read-only and
/// its draws do not depend on the order of earlier draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualLaw {
    law: OnOffLaw,
    mean: f64,
    // cache[k - 1] = S̄(k), k = 1..=cache.len()
    cache: Vec<f64>,
}

impl ResidualLaw {
    pub fn new(law: OnOffLaw) -> Result<Self> {
        let mean = law.mean()?;
        let mut res = ResidualLaw {
            law,
            mean,
            cache: Vec::new(),
        };
        res.extend_to(CACHE_BLOCK);
        Ok(res)
    }

    pub fn law(&self) -> &OnOffLaw {
        &self.law
    }

    pub fn mean_of_law(&self) -> f64 {
        self.mean
    }

    pub fn cached_len(&self) -> usize {
        self.cache.len()
    }

    /// Grows the cache, in whole blocks, to cover at least `k` indices.
    pub fn extend_to(&mut self, k: usize) {
        while self.cache.len() < k {
            let start = self.cache.len() as u64 + 1;
            let end = start + CACHE_BLOCK as u64 - 1;
            let mut block = Vec::with_capacity(CACHE_BLOCK);
            // backwards from the exact tail, adding the small terms first
            let mut acc = self.law.tail_sum(end + 1) / self.mean;
            for k in (start..=end).rev() {
                acc += self.law.survival(k) / self.mean;
                block.push(acc);
            }
            block.reverse();
            self.cache.extend(block);
        }
    }

    /// `f̄_k = S(k) / E Z`.
    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.law.survival(k) / self.mean
    }

    /// `S̄(k) = P(Z̄ ≥ k)`.
    pub fn survival(&self, k: u64) -> f64 {
        if k <= 1 {
            return 1.0;
        }
        match self.cache.get(k as usize - 1) {
            Some(&v) => v,
            None => self.law.tail_sum(k) / self.mean,
        }
    }

    /// Inverse-transform draw: the unique `i ≥ 1` with `S̄(i+1) < u ≤ S̄(i)`.
    pub fn sample(&self, u: f64) -> u64 {
        match self.law.spec {
            LawSpec::Geometric { .. } => return self.law.sample(u),
            LawSpec::Deterministic { d } => {
                let guess = floor(u * d as f64) as u64 + 1;
                return refine(guess, u, |i| self.survival(i)).min(d);
            }
            _ => {}
        }
        let n = self.cache.len();
        if u > self.survival(n as u64 + 1) {
            // inside the cache: first index with S̄(i+1) < u
            let idx = self.cache.partition_point(|&s| s >= u);
            return idx.max(1) as u64;
        }
        let mut lo = n as u64 + 1;
        let mut hi = lo;
        while hi < MAX_DURATION && self.survival(hi) >= u {
            lo = hi;
            hi = hi.saturating_mul(2).min(MAX_DURATION);
        }
        if self.survival(hi) >= u {
            return MAX_DURATION;
        }
        // S̄(lo) ≥ u > S̄(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.survival(mid) >= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn test_laws() -> Vec<OnOffLaw> {
        alloc::vec![
            OnOffLaw::geometric(0.3).unwrap(),
            OnOffLaw::geometric(0.8).unwrap(),
            OnOffLaw::geometric(0.7).unwrap(),
            OnOffLaw::weibull(1.0, 0.5).unwrap(),
            OnOffLaw::weibull(0.7, 1.6).unwrap(),
            OnOffLaw::pareto(1.0, 3.0).unwrap(),
            OnOffLaw::pareto(1.0, 2.5).unwrap(),
            OnOffLaw::pareto(2.0, 4.0).unwrap(),
            OnOffLaw::pareto(1.0, 1.5).unwrap(),
        ]
    }

    #[test]
    fn survival_examples() {
        assert!((OnOffLaw::geometric(0.5).unwrap().survival(3) - 0.25).abs() < 1e-15);
        let w = OnOffLaw::weibull(-(0.5f64.ln()), 1.0).unwrap();
        assert!((w.survival(3) - 0.25).abs() < 1e-15);
        let par = OnOffLaw::pareto(1.0, 2.0).unwrap();
        // S(i) = i^{-2}
        assert!((par.survival(4) - 1.0 / 16.0).abs() < 1e-15);
        assert!((par.survival(3) - 1.0 / 9.0).abs() < 1e-15);
        for law in test_laws() {
            assert_eq!(law.survival(1), 1.0);
        }
    }

    #[test]
    fn pmf_examples() {
        assert!((OnOffLaw::geometric(0.5).unwrap().pmf(1) - 0.5).abs() < 1e-15);
        let par = OnOffLaw::pareto(1.0, 2.0).unwrap();
        assert!((par.pmf(2) - (0.25 - 1.0 / 9.0)).abs() < 1e-15);
        let w = OnOffLaw::weibull(1.0, 1.0).unwrap();
        assert!((w.pmf(1) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn mean_examples() {
        let g = OnOffLaw::geometric(0.3).unwrap();
        assert!((g.mean().unwrap() - 10.0 / 3.0).abs() < 1e-14);
        let par = OnOffLaw::pareto(1.0, 2.0).unwrap();
        assert!((par.mean().unwrap() - PI * PI / 6.0).abs() < 1e-12);
        let w = OnOffLaw::weibull(1.0, 1.0).unwrap();
        assert!((w.mean().unwrap() - 1.0 / (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!(matches!(
            OnOffLaw::pareto(1.0, 1.0).unwrap().mean(),
            Err(Error::InfiniteMean(_))
        ));
    }

    #[test]
    fn parameter_domain_errors() {
        assert!(OnOffLaw::geometric(0.0).is_err());
        assert!(OnOffLaw::geometric(1.0).is_err());
        assert!(OnOffLaw::weibull(0.0, 1.0).is_err());
        assert!(OnOffLaw::weibull(1.0, -1.0).is_err());
        assert!(OnOffLaw::pareto(0.0, 2.0).is_err());
        assert!(OnOffLaw::pareto(1.0, 0.0).is_err());
        assert!(OnOffLaw::deterministic(0).is_err());
    }

    #[test]
    fn pmf_partial_sums_close_with_survival() {
        for law in test_laws() {
            let mut acc = 0.0;
            for m in 1..=10_000u64 {
                acc += law.pmf(m);
                if m % 997 == 0 || m == 10_000 || m < 20 {
                    let err = (acc + law.survival(m + 1) - 1.0).abs();
                    assert!(err <= 1e-12, "{law} m={m}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn mean_is_head_plus_tail() {
        for law in test_laws() {
            let Ok(mean) = law.mean() else { continue };
            let head: f64 = (1..=500).map(|i| law.survival(i)).sum();
            let tail = law.tail_sum(501);
            assert!((head + tail - mean).abs() < 1e-12 * mean.max(1.0), "{law}");
        }
    }

    #[test]
    fn residual_examples() {
        let g = OnOffLaw::geometric(0.3).unwrap().residual().unwrap();
        assert!((g.pmf(2) - 0.21).abs() < 1e-15);
        let par = OnOffLaw::pareto(1.0, 2.0).unwrap().residual().unwrap();
        assert!((par.pmf(2) - 0.25 / (PI * PI / 6.0)).abs() < 1e-12);
        for law in test_laws() {
            let Ok(res) = law.residual() else { continue };
            assert!((res.pmf(1) - 1.0 / law.mean().unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn geometric_residual_is_itself() {
        for &p in &[0.05, 0.3, 0.5, 0.8, 0.95] {
            let law = OnOffLaw::geometric(p).unwrap();
            let res = law.residual().unwrap();
            for k in 1..200 {
                assert!((res.pmf(k) - law.pmf(k)).abs() <= 1e-14);
                assert!((res.survival(k) - law.survival(k)).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn residual_cache_agrees_with_analytic_tail() {
        for law in test_laws() {
            let Ok(mut res) = law.residual() else {
                continue;
            };
            res.extend_to(3000);
            for k in [2u64, 10, 500, 1024, 1025, 2047, 2999] {
                let direct = law.tail_sum(k) / law.mean().unwrap();
                let cached = res.survival(k);
                assert!(
                    (direct - cached).abs() <= 1e-12 * direct + 1e-300,
                    "{law} k={k}"
                );
            }
        }
    }

    #[test]
    fn residual_pmf_sums_to_one() {
        for law in test_laws() {
            let Ok(res) = law.residual() else { continue };
            let head: f64 = (1..=5000).map(|k| res.pmf(k)).sum();
            assert!((head + res.survival(5001) - 1.0).abs() < 1e-12, "{law}");
        }
    }

    #[test]
    fn sampling_examples() {
        let g = OnOffLaw::geometric(0.5).unwrap();
        assert_eq!(g.sample(0.9), 1);
        assert_eq!(g.sample(0.3), 2);
        // S(3) = 1/9 < 0.2 ≤ S(2) = 1/4
        let par = OnOffLaw::pareto(1.0, 2.0).unwrap();
        assert_eq!(par.sample(0.2), 2);
        assert_eq!(par.sample(0.1), 3);
        assert_eq!(OnOffLaw::deterministic(4).unwrap().sample(0.5), 4);
    }

    #[test]
    fn deterministic_residual_is_uniform() {
        let res = OnOffLaw::deterministic(4).unwrap().residual().unwrap();
        for k in 1..=4 {
            assert!((res.pmf(k) - 0.25).abs() < 1e-15);
        }
        assert_eq!(res.pmf(5), 0.0);
        assert_eq!(res.sample(0.99), 1);
        assert_eq!(res.sample(0.01), 4);
        assert_eq!(res.sample(0.5), 3);
    }

    #[test]
    fn residual_sampling_beyond_cache() {
        let res = OnOffLaw::pareto(1.0, 1.5).unwrap().residual().unwrap();
        let u = 1e-3;
        let i = res.sample(u);
        assert!(i as usize > res.cached_len());
        assert!(res.survival(i + 1) < u && u <= res.survival(i));
    }

    proptest::proptest! {
        #[test]
        fn samples_satisfy_bracket(u in 1e-12f64..1.0, which in 0usize..9) {
            let law = test_laws()[which];
            let i = law.sample(u);
            proptest::prop_assert!(i >= 1);
            proptest::prop_assert!(law.survival(i + 1) < u && u <= law.survival(i));
            if let Ok(res) = law.residual() {
                let j = res.sample(u);
                proptest::prop_assert!(res.survival(j + 1) < u && u <= res.survival(j));
            }
        }

        #[test]
        fn survival_is_non_increasing(i in 1u64..1_000_000, which in 0usize..9) {
            let law = test_laws()[which];
            proptest::prop_assert!(law.survival(i + 1) <= law.survival(i));
            proptest::prop_assert!(law.pmf(i) >= 0.0);
        }
    }
}
