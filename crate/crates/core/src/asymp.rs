//! Asymptotic covariance of the moment statistics and of the estimators.
//!
//! With `Z₀ = √K (μ̂(0) - s₀)` and `Z₁ = √K (μ̂(1) - s₁)`,
//! `(Z₀, Z₁) → N(0, [[v₀, c₀₁], [c₀₁, v₁]])` whenever the three limits are
//! finite. For geometric laws they have closed forms; for general laws they
//! are series over lags of covariances of products of counts, evaluated here
//! through per-edge joint on-probabilities.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dist::LawSpec;
use crate::math::{falling, sqrt};
use crate::moments::CovarianceReport;
use crate::partition::{block_count, set_partitions};
use crate::renewal::AutocovTable;
use crate::sim::ModelSpec;
use crate::{Error, Result};

/// Limit variances and covariance of `(Z₀, Z₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCov {
    pub v0: f64,
    pub v1: f64,
    pub c01: f64,
}

/// Limit covariance of `√K (p̂ - p, q̂ - q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamCov {
    pub sigma2: f64,
    pub tau2: f64,
    /// off-diagonal entry
    pub cross: f64,
    /// `p̂ ≈ p + (γ₀ Z₀ + γ₁ Z₁)/√K`
    pub gamma: [f64; 2],
    /// `q̂ ≈ q + (δ₀ Z₀ + δ₁ Z₁)/√K`
    pub delta: [f64; 2],
}

impl ParamCov {
    /// The report attached to an estimate from a trace of length `k`.
    pub fn report(&self, k: usize) -> CovarianceReport {
        let kf = k as f64;
        CovarianceReport {
            method: "closed_form_geometric",
            params: alloc::vec!["p".into(), "q".into()],
            limit: alloc::vec![
                alloc::vec![self.sigma2, self.cross],
                alloc::vec![self.cross, self.tau2]
            ],
            sd: alloc::vec![sqrt(self.sigma2 / kf), sqrt(self.tau2 / kf)],
        }
    }
}

/// Raw moments of a binomial count and the derived quantities of the
/// geometric closed forms.
///
/// `m[i] = E A(1)^i`, `mm[i] = E[A(1) A(2)^i]` (index 0 unused), `c1`, `c2`
/// such that `Cov(A(1)A(2), A(k)A(k+1)) = c1 f^k + c2 f^{2k}` for `k ≥ 2`,
/// `d0..d2` such that `E[A(1) A(k) A(k+1)] = d0 + d1 f^k + d2 f^{2k}` for
/// `k ≥ 1`, and `t1 = Var(A(1)A(2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricTerms {
    pub n: f64,
    pub p: f64,
    pub q: f64,
    pub rho: f64,
    pub f: f64,
    pub m: [f64; 5],
    pub mm: [f64; 4],
    pub c1: f64,
    pub c2: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub t1: f64,
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0 && q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!("p = {p}, q = {q} must lie in (0,1]")));
    }
    if p + q >= 2.0 {
        return Err(Error::domain("p + q = 2 gives a periodic chain"));
    }
    Ok(())
}

/// Raw moments `E A^i`, `i = 0..=4`, of `A ~ Bin(n, ρ)`.
fn binomial_moments(n: u64, rho: f64) -> [f64; 5] {
    // falling factorial moments E (A)_j = (n)_j ρ^j, then Stirling numbers
    let ff: [f64; 5] = core::array::from_fn(|j| falling(n, j) * crate::math::powi(rho, j as i32));
    [
        1.0,
        ff[1],
        ff[1] + ff[2],
        ff[1] + 3.0 * ff[2] + ff[3],
        ff[1] + 7.0 * ff[2] + 6.0 * ff[3] + ff[4],
    ]
}

impl GeometricTerms {
    /// Needs `f = 1 - p - q ≠ 0`; the coefficients are singular there.
    pub fn new(n: u64, p: f64, q: f64) -> Result<Self> {
        check_pq(p, q)?;
        let f = 1.0 - p - q;
        if f == 0.0 {
            return Err(Error::domain(
                "the series coefficients are singular at p + q = 1",
            ));
        }
        let nf = n as f64;
        let rho = q / (p + q);
        let m = binomial_moments(n, rho);
        let mm1 = f * m[2] + nf * q * m[1];
        let mm2 = f * f * m[3]
            + f * (p - q + 2.0 * nf * q) * m[2]
            + (nf * q * (1.0 - q) + nf * nf * q * q) * m[1];
        let mm3 = f * f * f * m[4]
            + 3.0 * f * f * (p - q + nf * q) * m[3]
            + f * (3.0 * nf * nf * q * q + 3.0 * nf * p * q - 6.0 * nf * q * q
                + 3.0 * nf * q
                + 2.0 * p * p
                - 2.0 * p * q
                - p
                + 2.0 * q * q
                - q)
                * m[2]
            + (nf * (nf - 1.0) * (nf - 2.0) * q * q * q + 3.0 * nf * (nf - 1.0) * q * q + nf * q)
                * m[1];
        let f2 = f * f;
        let f3 = f2 * f;
        let c1 = (f * (1.0 - 2.0 * rho) + nf * rho * (1.0 + f)) / f2 * mm2
            - (nf * f * rho * (1.0 - 2.0 * rho) + nf * nf * rho * rho * (1.0 + f)) / f2 * mm1;
        let c2 = mm3 / f3
            + (2.0 * rho - 1.0 - 2.0 * nf * rho) / f3 * mm2
            + nf * rho * rho * (nf - 1.0) / f3 * mm1;
        let g = f - 2.0 * f * rho + nf * q + 2.0 * f * nf * rho;
        let d0 = mm1 * m[1];
        let d1 = g / f * m[2] - nf * rho * g / f * m[1];
        let d2 = m[3] / f - (2.0 * nf * rho - 2.0 * rho + 1.0) / f * m[2]
            + nf * rho * rho * (nf - 1.0) / f * m[1];
        let t1 = f2 * m[4]
            + f * (p - q + 2.0 * nf * q) * m[3]
            + (nf * q * (1.0 - q) + nf * nf * q * q) * m[2]
            - mm1 * mm1;
        Ok(GeometricTerms {
            n: nf,
            p,
            q,
            rho,
            f,
            m,
            mm: [0.0, mm1, mm2, mm3],
            c1,
            c2,
            d0,
            d1,
            d2,
            t1,
        })
    }

    /// `Cov(A(1)A(2), A(k)A(k+1))`, `k ≥ 2`.
    pub fn t(&self, k: u32) -> f64 {
        let fk = crate::math::powi(self.f, k as i32);
        self.c1 * fk + self.c2 * fk * fk
    }

    /// `E[A(1) A(k) A(k+1)]`, `k ≥ 1`.
    pub fn triple(&self, k: u32) -> f64 {
        let fk = crate::math::powi(self.f, k as i32);
        self.d0 + self.d1 * fk + self.d2 * fk * fk
    }

    /// `Cov(A(k), A(1)A(2))`, `k ≥ 2`.
    pub fn cov_ahead(&self, k: u32) -> f64 {
        let f2 = self.f * self.f;
        (self.mm[2] / f2 - self.mm[1] * self.n * self.rho / f2)
            * crate::math::powi(self.f, k as i32)
    }

    pub fn moment_cov(&self) -> MomentCov {
        let f = self.f;
        let v0 = self.n * self.rho * (1.0 - self.rho) * (1.0 + f) / (1.0 - f);
        let v1 = self.t1
            + 2.0
                * (self.c1 * f * f / (1.0 - f) + self.c2 * crate::math::powi(f, 4) / (1.0 - f * f));
        let c01 = self.d1 * f / (1.0 - f)
            + self.d2 * f * f / (1.0 - f * f)
            + (self.mm[2] / (f * f) - self.mm[1] * self.n * self.rho / (f * f)) * f * f / (1.0 - f);
        MomentCov { v0, v1, c01 }
    }
}

/// Closed-form `(v₀, v₁, c₀₁)` for geometric on and off times.
///
/// At `p + q = 1` the count process is i.i.d. `Bin(n, ρ)` over time and the
/// limits reduce to `v₀ = Var A`, `v₁ = Var(A A') + 2 Cov(A A', A' A'')`,
/// `c₀₁ = 2 Cov(A, A A')`.
pub fn geometric_moment_cov(n: u64, p: f64, q: f64) -> Result<MomentCov> {
    check_pq(p, q)?;
    if 1.0 - p - q != 0.0 {
        return Ok(GeometricTerms::new(n, p, q)?.moment_cov());
    }
    let m = binomial_moments(n, q / (p + q));
    let m1sq = m[1] * m[1];
    Ok(MomentCov {
        v0: m[2] - m1sq,
        v1: (m[2] * m[2] - m1sq * m1sq) + 2.0 * (m1sq * m[2] - m1sq * m1sq),
        c01: 2.0 * m[1] * (m[2] - m1sq),
    })
}

/// Delta-method covariance of the geometric estimators.
///
/// `γ₀ = 2 + (p - q - (p+q)p)/(nq)`, `γ₁ = -(p+q)/(nq)`, `δ = (q/p) γ`,
/// `σ² = γ₀² v₀ + 2 γ₀ γ₁ c₀₁ + γ₁² v₁`, `τ² = σ² (q/p)²`, cross term
/// `σ² q/p`.
pub fn delta_method_cov(n: u64, p: f64, q: f64, mc: &MomentCov) -> ParamCov {
    let nf = n as f64;
    let g0 = 2.0 + (p - q - (p + q) * p) / (nf * q);
    let g1 = -(p + q) / (nf * q);
    let sigma2 = g0 * g0 * mc.v0 + 2.0 * g0 * g1 * mc.c01 + g1 * g1 * mc.v1;
    let r = q / p;
    ParamCov {
        sigma2,
        tau2: sigma2 * r * r,
        cross: sigma2 * r,
        gamma: [g0, g1],
        delta: [r * g0, r * g1],
    }
}

/// How a covariance series was summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesStatus {
    /// the last doubling of the horizon changed the sums by less than `tol`
    Converged,
    /// summed to the cap, remainder estimated from power-law tail decay
    Extrapolated,
    /// tail terms do not decay like a summable power by the cap
    Divergent,
}

/// Result of [`general_moment_cov`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralCov {
    pub cov: MomentCov,
    pub status: SeriesStatus,
    /// largest lag summed
    pub horizon: usize,
    /// extrapolated remainders added to `(v₀, v₁, c₀₁)`
    pub tail: [f64; 3],
}

/// Covariance of two products of counts at the given epochs,
/// `Cov(Π_{t ∈ g1} A(t), Π_{t ∈ g2} A(t))`.
///
/// Expanding each count over edges, a term is fixed by which factors share
/// an edge, i.e. by a set partition of the factors; the `(n)_b` ways to
/// assign distinct edges to `b` blocks contribute
/// `Π_B P(B) - Π_B P(B ∩ g1) P(B ∩ g2)`, which vanishes unless some block
/// meets both groups.
struct ProductCov<'a> {
    table: &'a AutocovTable,
    n: u64,
    parts: [Vec<Vec<usize>>; 5],
}

impl<'a> ProductCov<'a> {
    fn new(table: &'a AutocovTable, n: u64) -> Self {
        ProductCov {
            table,
            n,
            parts: core::array::from_fn(set_partitions),
        }
    }

    /// `P(on at every epoch of times)`, 0-based epochs.
    fn prob(&self, times: &mut [usize]) -> f64 {
        if times.is_empty() {
            return 1.0;
        }
        times.sort_unstable();
        let mut len = 1;
        for i in 1..times.len() {
            if times[i] != times[len - 1] {
                times[len] = times[i];
                len += 1;
            }
        }
        self.table
            .joint_on_sorted(&times[..len])
            .expect("epoch set within the table horizon and of supported shape")
    }

    fn cov(&self, g1: &[usize], g2: &[usize]) -> f64 {
        let m = g1.len() + g2.len();
        let mut all = [0usize; 4];
        all[..g1.len()].copy_from_slice(g1);
        all[g1.len()..m].copy_from_slice(g2);
        let mut total = 0.0;
        for labels in &self.parts[m] {
            let b = block_count(labels);
            let mut joint = 1.0;
            let mut split = 1.0;
            let mut mixing = false;
            for block in 0..b {
                let mut both = [0usize; 4];
                let mut left = [0usize; 4];
                let mut right = [0usize; 4];
                let (mut nb, mut nl, mut nr) = (0, 0, 0);
                for (i, &l) in labels.iter().enumerate() {
                    if l != block {
                        continue;
                    }
                    both[nb] = all[i];
                    nb += 1;
                    if i < g1.len() {
                        left[nl] = all[i];
                        nl += 1;
                    } else {
                        right[nr] = all[i];
                        nr += 1;
                    }
                }
                mixing |= nl > 0 && nr > 0;
                joint *= self.prob(&mut both[..nb]);
                split *= self.prob(&mut left[..nl]) * self.prob(&mut right[..nr]);
            }
            if mixing {
                total += falling(self.n, b) * (joint - split);
            }
        }
        total
    }

    /// Contribution of lag `h` to `(v₀, v₁, c₀₁)`.
    fn terms(&self, h: usize) -> [f64; 3] {
        let a = [0];
        let pair = [0, 1];
        if h == 0 {
            return [
                self.cov(&a, &a),
                self.cov(&pair, &pair),
                self.cov(&a, &pair),
            ];
        }
        [
            2.0 * self.cov(&a, &[h]),
            2.0 * self.cov(&pair, &[h, h + 1]),
            self.cov(&a, &[h, h + 1]) + self.cov(&[h], &pair),
        ]
    }
}

const START_HORIZON: usize = 256;
// block ratio 2^{1-β} of a tail decaying like h^{-β}; below this the tail is
// treated as summable (β > 1.05)
const SUMMABLE_RATIO: f64 = 0.966;

/// `(v₀, v₁, c₀₁)` for arbitrary laws by summing lag covariances.
///
/// The lag horizon doubles from 256 until every term in the upper half of
/// the horizon is below `tol` relative to its sum, or the horizon reaches
/// `k_cap`. At the cap, the ratio of the last two
/// dyadic blocks of terms decides between extrapolating a power-law tail
/// and reporting divergence.
pub fn general_moment_cov(model: &ModelSpec, tol: f64, k_cap: usize) -> Result<GeneralCov> {
    let n = model.n();
    model.rho()?;
    let k_cap = k_cap.max(8);
    let mut horizon = START_HORIZON.min(k_cap);
    loop {
        let table = AutocovTable::new(model, horizon + 1)?;
        let pc = ProductCov::new(&table, n);
        let mut sums = [0.0f64; 3];
        let mut blocks = [[0.0f64; 3]; 2];
        let mut largest = [0.0f64; 3];
        let quarter = horizon / 4;
        let half = horizon / 2;
        for h in 0..horizon {
            let t = pc.terms(h);
            for i in 0..3 {
                sums[i] += t[i];
                if h >= half {
                    blocks[1][i] += t[i];
                    largest[i] = largest[i].max(t[i].abs());
                } else if h >= quarter {
                    blocks[0][i] += t[i];
                }
            }
        }
        let settled = (0..3).all(|i| largest[i] <= tol * sums[i].abs().max(f64::MIN_POSITIVE));
        let cov = |s: [f64; 3]| MomentCov {
            v0: s[0],
            v1: s[1],
            c01: s[2],
        };
        if settled {
            return Ok(GeneralCov {
                cov: cov(sums),
                status: SeriesStatus::Converged,
                horizon,
                tail: [0.0; 3],
            });
        }
        if horizon >= k_cap {
            let mut tail = [0.0; 3];
            let mut status = SeriesStatus::Extrapolated;
            for i in 0..3 {
                let (b1, b2) = (blocks[0][i], blocks[1][i]);
                if largest[i] <= tol * sums[i].abs() {
                    continue;
                }
                let r = b2 / b1;
                if b1 == 0.0 || !(r.abs() < SUMMABLE_RATIO) {
                    status = SeriesStatus::Divergent;
                    continue;
                }
                tail[i] = b2 * r / (1.0 - r);
            }
            let total = [sums[0] + tail[0], sums[1] + tail[1], sums[2] + tail[2]];
            return Ok(GeneralCov {
                cov: cov(total),
                status,
                horizon,
                tail,
            });
        }
        horizon = (horizon * 2).min(k_cap);
    }
}

/// Three-valued outcome of [`finiteness_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finiteness {
    Finite,
    Infinite,
    Unknown,
}

/// Whether `v₀`, `v₁`, `c₀₁` are finite, with a reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub finiteness: Finiteness,
    pub explanation: String,
}

impl Verdict {
    /// `Some(true)` / `Some(false)` when decided.
    pub fn is_finite(&self) -> Option<bool> {
        match self.finiteness {
            Finiteness::Finite => Some(true),
            Finiteness::Infinite => Some(false),
            Finiteness::Unknown => None,
        }
    }
}

/// Sufficient conditions for finite limit (co)variances.
///
/// Geometric and Weibull laws have light enough tails on both sides. A
/// Pareto law needs tail index `α > 2`; with a geometric, Weibull or
/// Pareto (`α > 2`) partner the limits are finite. Any Pareto law with
/// `α ≤ 2` makes them infinite. Deterministic laws are not covered.
pub fn finiteness_check(model: &ModelSpec) -> Verdict {
    let verdict = |finiteness, explanation: String| Verdict {
        finiteness,
        explanation,
    };
    let laws = [
        ("on", model.on_law().spec()),
        ("off", model.off_law().spec()),
    ];
    for (side, law) in laws {
        if let LawSpec::Pareto { alpha, .. } = law {
            if alpha <= 2.0 {
                return verdict(
                    Finiteness::Infinite,
                    format!("{side}-time tail index {alpha} is at most 2"),
                );
            }
        }
    }
    for (side, law) in laws {
        if let LawSpec::Deterministic { .. } = law {
            return verdict(
                Finiteness::Unknown,
                format!("no criterion covers a deterministic {side}-time law"),
            );
        }
    }
    let heavy: Vec<f64> = laws
        .iter()
        .filter_map(|(_, l)| match l {
            LawSpec::Pareto { alpha, .. } => Some(*alpha),
            _ => None,
        })
        .collect();
    let explanation = match heavy.as_slice() {
        [] => "geometric and Weibull laws have all moments".into(),
        [a] => format!("Pareto tail index {a} > 2 with a lighter partner"),
        _ => format!(
            "both Pareto tail indices exceed 2 (min {})",
            heavy.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    };
    verdict(Finiteness::Finite, explanation)
}
