//! Moment statistics and method-of-moments estimators.
//!
//! From a count trace `A(1), …, A(K)`:
//!
//! ```text
//! μ̂(0) = (1/K) Σ_k A(k)          μ̂(ℓ) = 1/(K-ℓ) Σ_{k ≤ K-ℓ} A(k) A(k+ℓ)
//! ```
//!
//! Every edge family shares `D = μ̂(0) - μ̂(1) + (1 - 1/n) μ̂(0)²`, which
//! estimates `n ρ f̄₁`. Then
//!
//! * geometric/geometric: `p̂ = D / μ̂(0)`, `q̂ = D / (n - μ̂(0))`,
//! * Pareto(1,α)/Pareto(1,β): `α̂ = ζ⁻¹(μ̂(0)/D)`, `β̂ = ζ⁻¹((n - μ̂(0))/D)`,
//! * Weibull(1,α)/geometric: `α̂ = χ⁻¹(μ̂(0)/D)`, `q̂` as above,
//! * Pareto(C,α)/geometric: `q̂` as above and `(Ĉ, α̂)` from
//!   `ζ(C, α) = μ̂(0)/D`, `(C/(C+1))^α = q̂ - (μ̂(2) - μ̂(1))/D`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::dist::OnOffLaw;
use crate::math::{cbrt, choose, ln, ln_1p, powf, sqrt};
use crate::renewal::joint_distribution;
use crate::sim::{CountTrace, ModelSpec, Observable};
use crate::special::{invert_zeta_like, zeta_like, ZetaKind, DEFAULT_INVERSION_TOL};
use crate::{Error, Result};

/// Parametric family of the on/off laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `X ~ G(p)`, `Y ~ G(q)`
    GeoGeo,
    /// `X ~ Par(1, α)`, `Y ~ Par(1, β)`
    ParPar,
    /// `X ~ W(1, α)`, `Y ~ G(q)`
    WeibullGeo,
    /// `X ~ Par(C, α)`, `Y ~ G(q)`
    ParetoGeo,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::GeoGeo => "geo_geo",
            Family::ParPar => "par_par",
            Family::WeibullGeo => "weibull_geo",
            Family::ParetoGeo => "pareto_geo",
        }
    }

    /// Parameter names, in report order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::GeoGeo => &["p", "q"],
            Family::ParPar => &["alpha", "beta"],
            Family::WeibullGeo => &["alpha", "q"],
            Family::ParetoGeo => &["C", "alpha", "q"],
        }
    }

    /// Number of moments `μ̂(0), …, μ̂(L-1)` the estimator uses.
    pub fn moments_needed(self) -> usize {
        self.param_names().len()
    }

    /// The laws with the given parameter values.
    pub fn laws(self, params: &[f64]) -> Result<(OnOffLaw, OnOffLaw)> {
        if params.len() != self.moments_needed() {
            return Err(Error::domain(format!(
                "{} takes {} parameters",
                self.as_str(),
                self.moments_needed()
            )));
        }
        Ok(match self {
            Family::GeoGeo => (
                OnOffLaw::geometric(params[0])?,
                OnOffLaw::geometric(params[1])?,
            ),
            Family::ParPar => (
                OnOffLaw::pareto(1.0, params[0])?,
                OnOffLaw::pareto(1.0, params[1])?,
            ),
            Family::WeibullGeo => (
                OnOffLaw::weibull(1.0, params[0])?,
                OnOffLaw::geometric(params[1])?,
            ),
            Family::ParetoGeo => (
                OnOffLaw::pareto(params[0], params[1])?,
                OnOffLaw::geometric(params[2])?,
            ),
        })
    }
}

impl core::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geo_geo" => Ok(Family::GeoGeo),
            "par_par" => Ok(Family::ParPar),
            "weibull_geo" => Ok(Family::WeibullGeo),
            "pareto_geo" => Ok(Family::ParetoGeo),
            _ => Err(Error::domain(format!("unknown family {s:?}"))),
        }
    }
}

/// Empirical moments `μ̂(0), …, μ̂(L-1)` of a count trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub values: Vec<f64>,
    pub n: u64,
    pub vertices: Option<u64>,
    pub k: usize,
    pub kind: Observable,
}

/// One-pass accumulator for `μ̂(0), …, μ̂(L-1)` with exact integer sums.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    lags: usize,
    // last `lags - 1` values, most recent at `(len - 1) % window`
    recent: Vec<u64>,
    sums: Vec<u128>,
    len: usize,
}

impl MomentAccumulator {
    /// Accumulates lags `0..lags`.
    pub fn new(lags: usize) -> Self {
        let lags = lags.max(1);
        MomentAccumulator {
            lags,
            recent: vec![0; lags],
            sums: vec![0; lags],
            len: 0,
        }
    }

    pub fn push(&mut self, a: u64) {
        let w = self.lags;
        self.sums[0] += a as u128;
        for l in 1..w.min(self.len + 1) {
            let prev = self.recent[(self.len - l) % w];
            self.sums[l] += prev as u128 * a as u128;
        }
        self.recent[self.len % w] = a;
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The moment set; needs more observations than lags.
    pub fn finish(&self, kind: Observable, n: u64, vertices: Option<u64>) -> Result<MomentSet> {
        if self.len <= self.lags {
            return Err(Error::InsufficientData(format!(
                "{} observations for {} moments",
                self.len, self.lags
            )));
        }
        let values = self
            .sums
            .iter()
            .enumerate()
            .map(|(l, &s)| s as f64 / (self.len - l) as f64)
            .collect();
        Ok(MomentSet {
            values,
            n,
            vertices,
            k: self.len,
            kind,
        })
    }
}

/// `μ̂(0), …, μ̂(lags-1)` of a trace.
pub fn empirical_moments(trace: &CountTrace, lags: usize) -> Result<MomentSet> {
    let mut acc = MomentAccumulator::new(lags);
    for &a in &trace.values {
        acc.push(a);
    }
    acc.finish(trace.kind, trace.n, trace.vertices)
}

/// Parameter values in a fixed order; serializes as a JSON object.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params(pub Vec<(String, f64)>);

impl Params {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|&(_, v)| v).collect()
    }
}

impl Serialize for Params {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Asymptotic covariance attached to an estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    /// `closed_form_geometric` or `general_series`
    pub method: &'static str,
    pub params: Vec<String>,
    /// limit covariance of `√K (θ̂ - θ)`, row-major by `params`
    pub limit: Vec<Vec<f64>>,
    /// predicted standard deviations at the trace length, `√(limit_ii / K)`
    pub sd: Vec<f64>,
}

/// Output of an estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub family: Family,
    pub observable: Observable,
    pub params: Params,
    /// `μ̂(ℓ) - s(ℓ; θ̂)` for the moments used; empty when `θ̂` is not
    /// an admissible parameter
    pub residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceReport>,
    /// range violations and other diagnostics
    pub flags: Vec<String>,
    pub iterations: u32,
}

impl EstimateReport {
    fn new(family: Family, observable: Observable, values: &[f64]) -> Self {
        let params = family
            .param_names()
            .iter()
            .zip(values)
            .map(|(k, &v)| (k.to_string(), v))
            .collect();
        EstimateReport {
            family,
            observable,
            params: Params(params),
            residuals: Vec::new(),
            covariance: None,
            flags: Vec::new(),
            iterations: 0,
        }
    }

    fn check_unit(&mut self, name: &str) {
        if let Some(v) = self.params.get(name) {
            if !(v > 0.0 && v < 1.0) {
                self.flags.push(format!("{name}_out_of_range"));
            }
        }
    }

    fn fill_residuals(&mut self, m: &MomentSet) {
        let Ok((on, off)) = self.family.laws(&self.params.values()) else {
            self.flags.push("residuals_unavailable".into());
            return;
        };
        let model = match m.vertices {
            Some(v) if m.kind != Observable::Edges => ModelSpec::graph(on, off, v),
            _ => ModelSpec::edges(on, off, m.n),
        };
        let Ok(model) = model else { return };
        let used = match m.kind {
            Observable::Edges => self.family.moments_needed(),
            _ => 2,
        };
        let mut res = Vec::with_capacity(used);
        for l in 0..used.min(m.values.len()) {
            match theoretical_moment(&model, m.kind, l) {
                Ok(s) => res.push(m.values[l] - s),
                Err(_) => {
                    self.flags.push("residuals_unavailable".into());
                    return;
                }
            }
        }
        self.residuals = res;
    }
}

/// `s(ℓ) = E[A(k) A(k+ℓ)]` (`ℓ ≥ 1`) or `E A(k)` (`ℓ = 0`).
///
/// Edges: closed forms for `ℓ ≤ 3`, the joint law at epochs `{1, ℓ+1}`
/// beyond. Triangles and wedges: `ℓ ∈ {0, 1}` only.
pub fn theoretical_moment(model: &ModelSpec, kind: Observable, lag: usize) -> Result<f64> {
    match kind {
        Observable::Edges => edge_moment(model, lag),
        Observable::Triangles | Observable::Wedges => {
            if lag > 1 {
                return Err(Error::domain(
                    "subgraph moments are available for lags 0 and 1",
                ));
            }
            let (mean, product) = subgraph_moments(model, kind)?;
            Ok(if lag == 0 { mean } else { product })
        }
    }
}

fn edge_moment(model: &ModelSpec, lag: usize) -> Result<f64> {
    let n = model.n() as f64;
    let rho = model.rho()?;
    if lag == 0 {
        return Ok(n * rho);
    }
    let x = model.on_law();
    let y = model.off_law();
    let res = x.residual()?;
    let fb = |k| res.pmf(k);
    let f = |k| x.pmf(k);
    let g = |k| y.pmf(k);
    // P(on at k + ℓ | on at k)
    let cond = match lag {
        1 => 1.0 - fb(1),
        2 => (1.0 - fb(1) - fb(2)) + fb(1) * g(1),
        3 => {
            (1.0 - fb(1) - fb(2) - fb(3))
                + fb(1) * g(2)
                + fb(1) * g(1) * (1.0 - f(1))
                + fb(2) * g(1)
        }
        _ => {
            let j = joint_distribution(model, &[1, lag + 1])?;
            j.all_on() / rho
        }
    };
    Ok(n * rho * cond + (n * n - n) * rho * rho)
}

/// Number of unordered vertex triples sharing exactly 0, 1, 2 and 3
/// vertices with a fixed triple: `(a₀, a₁, a₂, a₃)`.
pub fn triple_overlaps(vertices: u64) -> [f64; 4] {
    let n = vertices;
    let a1 = 3.0 * choose(n - 3, 2);
    let a2 = 3.0 * (n - 3) as f64;
    let a3 = 1.0;
    [choose(n, 3) - a1 - a2 - a3, a1, a2, a3]
}

fn graph_parts(model: &ModelSpec) -> Result<(f64, [f64; 4], f64, f64)> {
    let v = model
        .vertices()
        .ok_or_else(|| Error::domain("subgraph moments need a vertex count"))?;
    if v < 3 {
        return Err(Error::domain(
            "subgraph moments need at least three vertices",
        ));
    }
    let rho = model.rho()?;
    let y = 1.0 - model.on_law().residual()?.pmf(1);
    Ok((choose(v, 3), triple_overlaps(v), rho, y))
}

type ProductFn = fn(f64, [f64; 4], f64, f64) -> f64;

fn triangle_product(t: f64, a: [f64; 4], rho: f64, y: f64) -> f64 {
    t * ((a[0] + a[1]) * powf(rho, 6.0) + a[2] * powf(rho, 5.0) * y + a[3] * powf(rho * y, 3.0))
}

fn wedge_product(t: f64, a: [f64; 4], rho: f64, y: f64) -> f64 {
    let r2 = rho * rho;
    let r3 = r2 * rho;
    let r4 = r3 * rho;
    t * (9.0 * (a[0] + a[1]) * r4
        + 5.0 * a[2] * r4
        + 4.0 * a[2] * r3 * y
        + 3.0 * a[3] * r2 * y * y
        + 6.0 * a[3] * r3 * y)
}

/// `(E T, E[T(k) T(k+lag)])` for `lag ∈ {0, 1}`.
pub fn triangle_moments(model: &ModelSpec, lag: usize) -> Result<(f64, f64)> {
    let (t, a, rho, y) = graph_parts(model)?;
    let y = match lag {
        0 => 1.0,
        1 => y,
        _ => {
            return Err(Error::domain(
                "triangle moments are available for lags 0 and 1",
            ))
        }
    };
    Ok((t * rho * rho * rho, triangle_product(t, a, rho, y)))
}

/// `(E W, E[W(k) W(k+lag)])` for `lag ∈ {0, 1}`.
pub fn wedge_moments(model: &ModelSpec, lag: usize) -> Result<(f64, f64)> {
    let (t, a, rho, y) = graph_parts(model)?;
    let y = match lag {
        0 => 1.0,
        1 => y,
        _ => {
            return Err(Error::domain(
                "wedge moments are available for lags 0 and 1",
            ))
        }
    };
    Ok((3.0 * t * rho * rho, wedge_product(t, a, rho, y)))
}

fn subgraph_moments(model: &ModelSpec, kind: Observable) -> Result<(f64, f64)> {
    match kind {
        Observable::Triangles => triangle_moments(model, 1),
        _ => wedge_moments(model, 1),
    }
}

fn shared_d(m: &MomentSet, family: Family) -> Result<(f64, f64, f64)> {
    let need = family.moments_needed();
    if m.values.len() < need {
        return Err(Error::InsufficientData(format!(
            "{} needs {need} moments, got {}",
            family.as_str(),
            m.values.len()
        )));
    }
    let n = m.n as f64;
    let m0 = m.values[0];
    let m1 = m.values[1];
    if !(m0 > 0.0 && m0 < n) {
        return Err(Error::incompatible(
            family.as_str(),
            format!("mean count {m0} must lie strictly between 0 and n = {n}"),
        ));
    }
    let d = m0 - m1 + (1.0 - 1.0 / n) * m0 * m0;
    Ok((n, m0, d))
}

fn require_edges(m: &MomentSet, family: Family) -> Result<()> {
    if m.kind != Observable::Edges {
        return Err(Error::domain(format!(
            "{} estimates from edge counts, got {}",
            family.as_str(),
            m.kind.as_str()
        )));
    }
    Ok(())
}

fn invert(kind: ZetaKind, target: f64, family: Family, what: &str) -> Result<f64> {
    invert_zeta_like(kind, target, DEFAULT_INVERSION_TOL).map_err(|e| match e {
        Error::OutOfRange { .. } => Error::incompatible(
            family.as_str(),
            format!("{what} target {target} outside the range of the series"),
        ),
        other => other,
    })
}

/// Geometric on and off times.
pub fn estimate_gg(m: &MomentSet) -> Result<EstimateReport> {
    require_edges(m, Family::GeoGeo)?;
    let (n, m0, d) = shared_d(m, Family::GeoGeo)?;
    let p = d / m0;
    let q = d / (n - m0);
    let mut r = EstimateReport::new(Family::GeoGeo, m.kind, &[p, q]);
    r.check_unit("p");
    r.check_unit("q");
    r.fill_residuals(m);
    Ok(r)
}

/// `Par(1, α)` on times, `Par(1, β)` off times.
pub fn estimate_parpar(m: &MomentSet) -> Result<EstimateReport> {
    let fam = Family::ParPar;
    require_edges(m, fam)?;
    let (n, m0, d) = shared_d(m, fam)?;
    if !(d > 0.0) {
        return Err(Error::incompatible(fam.as_str(), "non-positive D"));
    }
    let alpha = invert(ZetaKind::Zeta, m0 / d, fam, "alpha")?;
    let beta = invert(ZetaKind::Zeta, (n - m0) / d, fam, "beta")?;
    let mut r = EstimateReport::new(fam, m.kind, &[alpha, beta]);
    r.fill_residuals(m);
    Ok(r)
}

/// `W(1, α)` on times, geometric off times.
pub fn estimate_weibull_geo(m: &MomentSet) -> Result<EstimateReport> {
    let fam = Family::WeibullGeo;
    require_edges(m, fam)?;
    let (n, m0, d) = shared_d(m, fam)?;
    if !(d > 0.0) {
        return Err(Error::incompatible(fam.as_str(), "non-positive D"));
    }
    let alpha = invert(ZetaKind::Chi(1.0), m0 / d, fam, "alpha")?;
    let q = d / (n - m0);
    let mut r = EstimateReport::new(fam, m.kind, &[alpha, q]);
    r.check_unit("q");
    r.fill_residuals(m);
    Ok(r)
}

/// `Par(C, α)` on times, geometric off times.
///
/// With `w = (C/(C+1))^α` fixed by the second equation, `α = ln w / ln(C/(C+1))`
/// and `C ↦ ζ(C, α(C))` decreases from `+∞` (as `C → 0`) to `1/(1-w)` (as
/// `C → ∞`, where the law tends to a geometric one). The first equation is
/// therefore solved by bisection in `ln C`, and has a solution iff the
/// target exceeds `1/(1-w)`.
pub fn estimate_pareto_geo(m: &MomentSet) -> Result<EstimateReport> {
    let fam = Family::ParetoGeo;
    require_edges(m, fam)?;
    let (n, m0, d) = shared_d(m, fam)?;
    if !(d > 0.0) {
        return Err(Error::incompatible(fam.as_str(), "non-positive D"));
    }
    let q = d / (n - m0);
    let z = m0 / d;
    let w = q - (m.values[2] - m.values[1]) / d;
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::incompatible(
            fam.as_str(),
            format!("(C/(C+1))^alpha target {w} outside (0,1)"),
        ));
    }
    let floor = 1.0 / (1.0 - w);
    if !(z > floor) {
        return Err(Error::incompatible(
            fam.as_str(),
            format!("zeta target {z} not above the geometric limit {floor}"),
        ));
    }
    let ln_w = ln(w);
    let alpha_of = |c: f64| ln_w / -ln_1p(1.0 / c);
    // h(ln C) = ζ(C, α(C)) - z, decreasing
    let h = |lc: f64| -> f64 {
        let c = crate::math::exp(lc);
        let a = alpha_of(c);
        if !(a > 1.0) {
            return f64::INFINITY;
        }
        zeta_like(ZetaKind::Hurwitz(c), a, 1e-13).map_or(f64::INFINITY, |v| v - z)
    };
    let (mut lo, mut hi) = (-8.0f64, 8.0f64);
    let mut iterations = 0u32;
    while h(lo) <= 0.0 {
        lo -= 8.0;
        iterations += 1;
        if lo < -200.0 {
            return Err(Error::Convergence {
                iterations,
                residual: h(lo),
            });
        }
    }
    while h(hi) > 0.0 {
        hi += 8.0;
        iterations += 1;
        if hi > 60.0 {
            return Err(Error::incompatible(
                fam.as_str(),
                format!("zeta target {z} too close to the geometric limit {floor}"),
            ));
        }
    }
    while hi - lo > 1e-14 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let c = crate::math::exp(0.5 * (lo + hi));
    let alpha = alpha_of(c);
    let mut r = EstimateReport::new(fam, m.kind, &[c, alpha, q]);
    r.iterations = iterations;
    r.check_unit("q");
    r.fill_residuals(m);
    Ok(r)
}

/// Geometric/geometric estimate from triangle or wedge counts.
///
/// `ρ` follows from the mean (`E T = (N choose 3) ρ³`, `E W = 3 (N choose 3) ρ²`);
/// the lag-one product moment is increasing in `y = 1 - f̄₁ ∈ [0, 1]` and is
/// solved by bisection. Then `p̂ = f̄₁` and `q̂ = ρ p̂ / (1 - ρ)`.
pub fn estimate_from_subgraph(m: &MomentSet) -> Result<EstimateReport> {
    let fam = Family::GeoGeo;
    let v = m
        .vertices
        .ok_or_else(|| Error::domain("subgraph estimation needs a vertex count"))?;
    if v < 3 {
        return Err(Error::domain(
            "subgraph estimation needs at least three vertices",
        ));
    }
    if m.values.len() < 2 {
        return Err(Error::InsufficientData("two moments are needed".into()));
    }
    let t = choose(v, 3);
    let a = triple_overlaps(v);
    let (m0, m1) = (m.values[0], m.values[1]);
    let (rho, product): (f64, ProductFn) = match m.kind {
        Observable::Triangles => (cbrt(m0 / t), triangle_product),
        Observable::Wedges => (sqrt(m0 / (3.0 * t)), wedge_product),
        Observable::Edges => {
            return Err(Error::domain("edge counts go through estimate_gg"));
        }
    };
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::incompatible(
            fam.as_str(),
            format!("mean count {m0} gives rho = {rho} outside (0,1)"),
        ));
    }
    let at = |y: f64| product(t, a, rho, y) - m1;
    if at(0.0) > 0.0 || at(1.0) <= 0.0 {
        return Err(Error::incompatible(
            fam.as_str(),
            format!("lag-one moment {m1} gives f̄₁ outside [0,1)"),
        ));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut iterations = 0;
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let p = 1.0 - 0.5 * (lo + hi);
    let q = rho * p / (1.0 - rho);
    let mut r = EstimateReport::new(fam, m.kind, &[p, q]);
    r.iterations = iterations;
    r.check_unit("p");
    r.check_unit("q");
    r.fill_residuals(m);
    Ok(r)
}

/// Dispatches on the family and the observable.
pub fn estimate(m: &MomentSet, family: Family) -> Result<EstimateReport> {
    match (family, m.kind) {
        (Family::GeoGeo, Observable::Edges) => estimate_gg(m),
        (Family::GeoGeo, _) => estimate_from_subgraph(m),
        (Family::ParPar, _) => estimate_parpar(m),
        (Family::WeibullGeo, _) => estimate_weibull_geo(m),
        (Family::ParetoGeo, _) => estimate_pareto_geo(m),
    }
}
