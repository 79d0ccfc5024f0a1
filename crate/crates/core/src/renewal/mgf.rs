use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::LawTable;
use crate::math::exp;
use crate::sim::ModelSpec;
use crate::{Error, Result};

/// Largest number of epochs [`joint_distribution`] accepts.
pub const MAX_JOINT_EPOCHS: usize = 12;

/// Joint MGF evaluator for horizons up to a fixed `K`.
///
/// With `v_k` (`w_k`) the conditional MGF of the epochs `k..=K` given that a
/// fresh on (off) period starts at `k`,
///
/// ```text
/// v_k = Σ_{ℓ=1}^{K-k} f_ℓ e^{θ_k + … + θ_{k+ℓ-1}} w_{k+ℓ} + P(X > K-k) e^{θ_k + … + θ_K}
/// w_k = Σ_{ℓ=1}^{K-k} g_ℓ v_{k+ℓ} + P(Y > K-k)
/// ```
///
/// and `M(θ) = ρ M₊ + (1 - ρ) M₋`, where `M₊`, `M₋` are the same sums with
/// the residual laws started at epoch 1.
#[derive(Debug, Clone)]
pub struct MgfEngine {
    on: LawTable,
    off: LawTable,
    rho: f64,
    horizon: usize,
}

impl MgfEngine {
    pub fn new(model: &ModelSpec, horizon: usize) -> Result<Self> {
        let rho = model.rho()?;
        Ok(MgfEngine {
            on: LawTable::new(model.on_law(), horizon + 1)?,
            off: LawTable::new(model.off_law(), horizon + 1)?,
            rho,
            horizon,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `M(θ)`; entries equal to `-∞` force the edge off at that epoch.
    pub fn mgf(&self, theta: &[f64]) -> Result<f64> {
        let factors: Vec<f64> = theta
            .iter()
            .map(|&t| if t == f64::NEG_INFINITY { 0.0 } else { exp(t) })
            .collect();
        self.mgf_factors(&factors)
    }

    /// `M` as a function of the factors `e^{θ_k}` (0 encodes `θ_k = -∞`).
    pub fn mgf_factors(&self, e: &[f64]) -> Result<f64> {
        let k_len = e.len();
        if k_len == 0 {
            return Ok(1.0);
        }
        if k_len > self.horizon {
            return Err(Error::Size(format!(
                "{k_len} epochs exceed the engine horizon {}",
                self.horizon
            )));
        }
        // 1-based: e[k - 1] is the factor of epoch k
        let mut v = vec![0.0; k_len + 2];
        let mut w = vec![0.0; k_len + 2];
        let (f, sx) = (&self.on.pmf, &self.on.surv);
        let (g, sy) = (&self.off.pmf, &self.off.surv);
        for k in (1..=k_len).rev() {
            let span = k_len - k;
            let mut prod = 1.0;
            let mut acc = 0.0;
            for l in 1..=span {
                prod *= e[k + l - 2];
                if prod == 0.0 {
                    break;
                }
                acc += f[l] * prod * w[k + l];
            }
            if prod != 0.0 {
                acc += sx[span + 1] * prod * e[k_len - 1];
            }
            v[k] = acc;
            let mut acc = sy[span + 1];
            for l in 1..=span {
                acc += g[l] * v[k + l];
            }
            w[k] = acc;
        }
        let mut plus = 0.0;
        let mut prod = 1.0;
        for l in 1..k_len {
            prod *= e[l - 1];
            if prod == 0.0 {
                break;
            }
            plus += self.on.res_pmf[l] * prod * w[1 + l];
        }
        if prod != 0.0 {
            plus += self.on.res_surv[k_len] * prod * e[k_len - 1];
        }
        let mut minus = self.off.res_surv[k_len];
        for l in 1..k_len {
            minus += self.off.res_pmf[l] * v[1 + l];
        }
        Ok(self.rho * plus + (1.0 - self.rho) * minus)
    }

    /// `ln M(θ)`.
    pub fn log_mgf(&self, theta: &[f64]) -> Result<f64> {
        Ok(crate::math::ln(self.mgf(theta)?))
    }
}

/// `M(θ)` for a single evaluation.
pub fn joint_mgf(model: &ModelSpec, theta: &[f64]) -> Result<f64> {
    MgfEngine::new(model, theta.len())?.mgf(theta)
}

/// Joint on/off law of one stationary edge at a set of epochs.
///
/// `probs[i]` is the probability of the on/off pattern whose bits read
/// `i` with the first epoch as the most significant bit (1 = on). For
/// epochs `{1, 2}`, `probs[0b11]` is `P(on at 1, on at 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    pub epochs: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointLaw {
    fn bit(&self, i: usize) -> usize {
        1 << (self.epochs.len() - 1 - i)
    }

    /// Probability of a full on/off pattern, one flag per epoch.
    pub fn prob(&self, pattern: &[bool]) -> f64 {
        let idx = pattern
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .fold(0, |acc, (i, _)| acc | self.bit(i));
        self.probs[idx]
    }

    /// Probability that the edge is on at every epoch.
    pub fn all_on(&self) -> f64 {
        self.probs[self.probs.len() - 1]
    }

    /// Probability that the edge is on at the epochs with the given
    /// positions (indices into `epochs`), whatever happens elsewhere.
    pub fn on_at(&self, positions: &[usize]) -> f64 {
        let mask = positions.iter().fold(0, |acc, &i| acc | self.bit(i));
        self.probs
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & mask == mask)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Joint law at `epochs` (strictly increasing, starting anywhere ≥ 1, at
/// most [`MAX_JOINT_EPOCHS`] of them).
///
/// `M` is evaluated over the horizon `max(epochs)` at every mask with
/// `θ = -∞` on the forced-off epochs and 0 elsewhere, which gives
/// `P(off on T)` for every subset `T`; a superset Möbius transform turns
/// these into point probabilities.
pub fn joint_distribution(model: &ModelSpec, epochs: &[usize]) -> Result<JointLaw> {
    let m = epochs.len();
    if m == 0 {
        return Err(Error::domain("at least one epoch is needed"));
    }
    if m > MAX_JOINT_EPOCHS {
        return Err(Error::Size(format!(
            "{m} epochs, at most {MAX_JOINT_EPOCHS} are supported"
        )));
    }
    if epochs[0] == 0 || epochs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("epochs must be strictly increasing and ≥ 1"));
    }
    let horizon = epochs[m - 1];
    let engine = MgfEngine::new(model, horizon)?;
    let size = 1usize << m;
    // q[off_mask] = P(off at every epoch of off_mask), bit order as in JointLaw
    let mut q = vec![0.0; size];
    let mut factors = vec![1.0; horizon];
    for (off_mask, slot) in q.iter_mut().enumerate() {
        for (i, &ep) in epochs.iter().enumerate() {
            factors[ep - 1] = if off_mask >> (m - 1 - i) & 1 == 1 {
                0.0
            } else {
                1.0
            };
        }
        *slot = engine.mgf_factors(&factors)?;
    }
    // q[mask] -> P(off exactly on mask, on elsewhere)
    for b in 0..m {
        let bit = 1 << b;
        for mask in 0..size {
            if mask & bit == 0 {
                q[mask] -= q[mask | bit];
            }
        }
    }
    let full = size - 1;
    let probs = (0..size).map(|on| q[full ^ on].max(0.0)).collect();
    Ok(JointLaw {
        epochs: epochs.to_vec(),
        probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::OnOffLaw;

    fn gg() -> ModelSpec {
        ModelSpec::edges(
            OnOffLaw::geometric(0.3).unwrap(),
            OnOffLaw::geometric(0.8).unwrap(),
            1,
        )
        .unwrap()
    }

    #[test]
    fn mgf_at_zero_is_one() {
        for k in 1..8 {
            let v = joint_mgf(&gg(), &vec![0.0; k]).unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_epoch_is_bernoulli() {
        let rho = 0.8 / 1.1;
        for &t in &[-2.0, -0.3, 0.0, 0.7, 1.5] {
            let v = joint_mgf(&gg(), &[t]).unwrap();
            assert!((v - (1.0 - rho + rho * f64::exp(t))).abs() < 1e-14);
        }
    }

    #[test]
    fn both_off_two_epochs() {
        let v = joint_mgf(&gg(), &[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap();
        let rho = 0.8 / 1.1;
        assert!((v - (1.0 - rho) * 0.2).abs() < 1e-14, "{v}");
    }

    #[test]
    fn joint_examples() {
        let rho = 0.8 / 1.1;
        let j = joint_distribution(&gg(), &[1, 2]).unwrap();
        assert!((j.prob(&[true, true]) - rho * 0.7).abs() < 1e-14);
        assert!((j.probs[0b11] - 0.509_090_909_090_909).abs() < 1e-12);
        let j = joint_distribution(&gg(), &[1]).unwrap();
        assert!((j.probs[1] - rho).abs() < 1e-15);
        assert!((j.probs[0] - (1.0 - rho)).abs() < 1e-15);
    }

    #[test]
    fn too_many_epochs() {
        let epochs: Vec<usize> = (1..=13).collect();
        assert!(matches!(
            joint_distribution(&gg(), &epochs),
            Err(Error::Size(_))
        ));
        assert!(joint_distribution(&gg(), &[2, 2]).is_err());
    }

    #[test]
    fn marginalizing_last_epoch() {
        let m = ModelSpec::edges(
            OnOffLaw::pareto(1.0, 3.0).unwrap(),
            OnOffLaw::weibull(1.0, 0.5).unwrap(),
            1,
        )
        .unwrap();
        let three = joint_distribution(&m, &[1, 2, 3]).unwrap();
        let two = joint_distribution(&m, &[1, 2]).unwrap();
        for idx in 0..4 {
            let summed = three.probs[idx << 1] + three.probs[(idx << 1) | 1];
            assert!((summed - two.probs[idx]).abs() < 1e-10);
        }
    }

    proptest::proptest! {
        #[test]
        fn log_mgf_is_convex_along_lines(
            a in proptest::collection::vec(-2.0f64..2.0, 4),
            d in proptest::collection::vec(-2.0f64..2.0, 4),
            s in 0.05f64..1.0,
        ) {
            let m = ModelSpec::edges(
                OnOffLaw::pareto(2.0, 4.0).unwrap(),
                OnOffLaw::geometric(0.7).unwrap(),
                1,
            ).unwrap();
            let eng = MgfEngine::new(&m, 4).unwrap();
            let at = |t: f64| -> f64 {
                let th: Vec<f64> = a.iter().zip(&d).map(|(x, y)| x + t * y).collect();
                eng.log_mgf(&th).unwrap()
            };
            let mid = at(0.0);
            let lo = at(-s);
            let hi = at(s);
            proptest::prop_assert!(lo + hi - 2.0 * mid >= -1e-10);
        }
    }
}
