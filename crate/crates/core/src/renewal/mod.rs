//! Exact single-edge analytics.
//!
//! For one stationary edge, [`joint_mgf`] evaluates
//! `M(θ) = E exp(Σ_k θ_k 𝟙(k))` by a backward recursion over fresh on/off
//! periods, [`joint_distribution`] extracts joint on/off probabilities at a
//! few epochs from `M` evaluated at `{-∞, 0}` masks, [`AutocovTable`] holds
//! the renewal sequences behind `P(on at 1 and k)`, and
//! [`saddlepoint_logprob`] approximates the log-likelihood of a count vector.

mod autocov;
mod conv;
mod mgf;
mod saddle;

pub use autocov::AutocovTable;
pub use mgf::{joint_distribution, joint_mgf, JointLaw, MgfEngine, MAX_JOINT_EPOCHS};
pub use saddle::{legendre_transform, saddlepoint_logprob, Legendre, Saddlepoint};

use alloc::vec::Vec;

use crate::dist::{OnOffLaw, ResidualLaw};
use crate::Result;

/// Tabulated law values for indices `0..=len`. Index 0 holds 0 for the
/// pmfs and 1 for the survival functions.
#[derive(Debug, Clone)]
pub(crate) struct LawTable {
    /// `f_ℓ`
    pub pmf: Vec<f64>,
    /// `P(Z ≥ ℓ)`
    pub surv: Vec<f64>,
    /// `f̄_ℓ`
    pub res_pmf: Vec<f64>,
    /// `P(Z̄ ≥ ℓ)`
    pub res_surv: Vec<f64>,
}

impl LawTable {
    pub fn new(law: &OnOffLaw, len: usize) -> Result<Self> {
        let mut res = ResidualLaw::new(*law)?;
        res.extend_to(len + 1);
        let mut t = LawTable {
            pmf: Vec::with_capacity(len + 1),
            surv: Vec::with_capacity(len + 1),
            res_pmf: Vec::with_capacity(len + 1),
            res_surv: Vec::with_capacity(len + 1),
        };
        t.pmf.push(0.0);
        t.surv.push(1.0);
        t.res_pmf.push(0.0);
        t.res_surv.push(1.0);
        for k in 1..=len as u64 {
            t.pmf.push(law.pmf(k));
            t.surv.push(law.survival(k));
            t.res_pmf.push(res.pmf(k));
            t.res_surv.push(res.survival(k));
        }
        Ok(t)
    }
}
