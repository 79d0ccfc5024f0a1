use alloc::vec;
use alloc::vec::Vec;

use super::conv::{convolve, renewal_sequence};
use super::LawTable;
use crate::sim::ModelSpec;
use crate::Result;

const DIRECT_MAX: usize = 2048;

/// Renewal sequences of one edge up to a horizon `k_max`.
///
/// * `r_k`: on at `k` given a fresh on period starts at 1,
/// * `s_k`: on at `k` given a fresh off period starts at 1,
/// * `r_k^(res)`: on at `k` given the stationary edge is on at 1,
/// * `r2_k`, `s2_k`: on at both `k` and `k + 1`, fresh on/off start at 1.
///
/// ```text
/// r_k = Σ_{ℓ=1}^{k-1} f_ℓ s_{k-ℓ} + P(X ≥ k)        s_k = Σ_{ℓ=1}^{k-1} g_ℓ r_{k-ℓ}
/// r_k^(res) = Σ_{ℓ=1}^{k-1} f̄_ℓ s_{k-ℓ} + P(X̄ ≥ k)
/// ```
///
/// Short horizons use these recursions directly. Longer ones solve the
/// equivalent renewal equation `r = P(X ≥ ·) * u` with `u` the renewal
/// sequence of `f * g`, using FFT convolutions.
#[derive(Debug, Clone)]
pub struct AutocovTable {
    k_max: usize,
    rho: f64,
    r: Vec<f64>,
    s: Vec<f64>,
    r_res: Vec<f64>,
    r2: Vec<f64>,
    s2: Vec<f64>,
    // f̄ * s and f̄ * s2
    res_s: Vec<f64>,
    res_s2: Vec<f64>,
    res_pmf: Vec<f64>,
    res_surv: Vec<f64>,
}

impl AutocovTable {
    pub fn new(model: &ModelSpec, k_max: usize) -> Result<Self> {
        if k_max <= DIRECT_MAX {
            Self::direct(model, k_max)
        } else {
            Self::fast(model, k_max)
        }
    }

    /// Quadratic-time evaluation of the recursions as written.
    pub fn direct(model: &ModelSpec, k_max: usize) -> Result<Self> {
        let k_max = k_max.max(1);
        let len = k_max + 2;
        let on = LawTable::new(model.on_law(), len)?;
        let off = LawTable::new(model.off_law(), len)?;
        let (f, g) = (&on.pmf, &off.pmf);
        let mut r = vec![0.0; len];
        let mut s = vec![0.0; len];
        let mut r2 = vec![0.0; len];
        let mut s2 = vec![0.0; len];
        let mut r_res = vec![0.0; len];
        let mut res_s = vec![0.0; len];
        let mut res_s2 = vec![0.0; len];
        for k in 1..len {
            let (mut a, mut b, mut a2, mut b2) = (0.0, 0.0, 0.0, 0.0);
            let (mut c, mut c2) = (0.0, 0.0);
            for l in 1..k {
                a += f[l] * s[k - l];
                b += g[l] * r[k - l];
                a2 += f[l] * s2[k - l];
                b2 += g[l] * r2[k - l];
                c += on.res_pmf[l] * s[k - l];
                c2 += on.res_pmf[l] * s2[k - l];
            }
            r[k] = a + on.surv[k];
            s[k] = b;
            r2[k] = a2 + on.surv[k + 1];
            s2[k] = b2;
            r_res[k] = c + on.res_surv[k];
            res_s[k] = c;
            res_s2[k] = c2;
        }
        Ok(Self::assemble(
            model,
            k_max,
            [r, s, r_res, r2, s2, res_s, res_s2],
            on,
        ))
    }

    /// FFT-based evaluation, `O(k log² k)`.
    pub fn fast(model: &ModelSpec, k_max: usize) -> Result<Self> {
        let k_max = k_max.max(1);
        let len = k_max + 2;
        let on = LawTable::new(model.on_law(), len + 1)?;
        let off = LawTable::new(model.off_law(), len)?;
        let c = convolve(&on.pmf, &off.pmf, len);
        let u = renewal_sequence(&c, len);
        let mut h = on.surv[..len].to_vec();
        h[0] = 0.0;
        let mut h2: Vec<f64> = on.surv[1..=len].to_vec();
        h2[0] = 0.0;
        let r = convolve(&u, &h, len);
        let s = convolve(&off.pmf, &r, len);
        let r2 = convolve(&u, &h2, len);
        let s2 = convolve(&off.pmf, &r2, len);
        let res_s = convolve(&on.res_pmf, &s, len);
        let res_s2 = convolve(&on.res_pmf, &s2, len);
        let mut r_res: Vec<f64> = res_s.iter().zip(&on.res_surv).map(|(a, b)| a + b).collect();
        r_res[0] = 0.0;
        Ok(Self::assemble(
            model,
            k_max,
            [r, s, r_res, r2, s2, res_s, res_s2],
            on,
        ))
    }

    fn assemble(model: &ModelSpec, k_max: usize, seqs: [Vec<f64>; 7], on: LawTable) -> Self {
        let [r, s, r_res, r2, s2, res_s, res_s2] = seqs;
        let (ex, ey) = model.means().expect("laws already tabulated");
        AutocovTable {
            k_max,
            rho: ex / (ex + ey),
            r,
            s,
            r_res,
            r2,
            s2,
            res_s,
            res_s2,
            res_pmf: on.res_pmf,
            res_surv: on.res_surv,
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn r(&self, k: usize) -> f64 {
        self.r[k]
    }

    pub fn s(&self, k: usize) -> f64 {
        self.s[k]
    }

    pub fn r_res(&self, k: usize) -> f64 {
        self.r_res[k]
    }

    /// `Cov(𝟙(1), 𝟙(k)) = ρ (r_k^(res) - ρ)`.
    pub fn cov(&self, k: usize) -> f64 {
        self.rho * (self.r_res[k] - self.rho)
    }

    /// `P(on at every epoch of set)` for a stationary edge.
    ///
    /// After shifting so the earliest epoch is 1, the set must consist of a
    /// single run of consecutive epochs, or a run followed by a second run
    /// of length one or two. Returns `None` for other shapes or when the
    /// set reaches past the table.
    pub fn joint_on(&self, set: &[usize]) -> Option<f64> {
        let mut e: Vec<usize> = set.to_vec();
        e.sort_unstable();
        e.dedup();
        self.joint_on_sorted(&e)
    }

    /// [`joint_on`](Self::joint_on) for a strictly increasing set.
    pub(crate) fn joint_on_sorted(&self, e: &[usize]) -> Option<f64> {
        let first = *e.first()?;
        let at = |i: usize| e[i] - first + 1;
        let last = at(e.len() - 1);
        if last > self.k_max + 1 {
            return None;
        }
        let Some(split) = (1..e.len()).find(|&i| e[i] != e[i - 1] + 1) else {
            return Some(self.rho * self.res_surv[last]);
        };
        let head = split;
        let tail = e.len() - split;
        if tail > 2 || (tail == 2 && e[split + 1] != e[split] + 1) {
            return None;
        }
        let d = at(split);
        let (seq, conv) = if tail == 1 {
            (&self.s, &self.res_s)
        } else {
            (&self.s2, &self.res_s2)
        };
        // the residual on period must cover 1..=head and end before d
        let mut acc = self.res_surv[last] + conv[d];
        for l in 1..head {
            acc -= self.res_pmf[l] * seq[d - l];
        }
        Some(self.rho * acc)
    }

    /// `P(on at k and k + 1 | fresh on period at 1)`.
    pub fn r2(&self, k: usize) -> f64 {
        self.r2[k]
    }

    /// `P(on at k and k + 1 | fresh off period at 1)`.
    pub fn s2(&self, k: usize) -> f64 {
        self.s2[k]
    }
}
