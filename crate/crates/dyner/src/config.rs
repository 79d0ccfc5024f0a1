//! Experiment configuration files.
//!
//! ```json
//! {
//!   "on": {"kind": "geometric", "p": 0.3},
//!   "off": {"kind": "geometric", "p": 0.8},
//!   "n": 100,
//!   "k": 10000,
//!   "reps": 200,
//!   "seed": 1,
//!   "family": "geo_geo"
//! }
//! ```
//!
//! Use `vertices` instead of `n` for a graph on `N` vertices, together with
//! `"observable": "triangles"` or `"wedges"` to observe subgraph counts.

use std::path::{Path, PathBuf};

use dyner_core::{Family, LawSpec, ModelSpec, Observable, OnOffLaw};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_K: usize = 10_000;
pub const DEFAULT_REPS: usize = 1;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub on: OnOffLaw,
    pub off: OnOffLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<u64>,
    #[serde(default = "edges")]
    pub observable: Observable,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn edges() -> Observable {
    Observable::Edges
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl ExperimentConfig {
    /// Edge-count experiment with default `k`, `reps` and `seed`.
    pub fn new(on: OnOffLaw, off: OnOffLaw, n: u64) -> Self {
        ExperimentConfig {
            on,
            off,
            n: Some(n),
            vertices: None,
            observable: Observable::Edges,
            k: DEFAULT_K,
            reps: DEFAULT_REPS,
            seed: DEFAULT_SEED,
            family: None,
            workers: None,
            out: None,
        }
    }

    /// Graph on `vertices` vertices observed through `kind`.
    pub fn graph(on: OnOffLaw, off: OnOffLaw, vertices: u64, kind: Observable) -> Self {
        ExperimentConfig {
            n: None,
            vertices: Some(vertices),
            observable: kind,
            ..ExperimentConfig::new(on, off, 1)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let model = match (self.n, self.vertices) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::Config(
                    "give either n or vertices, not both".into(),
                ))
            }
            (None, None) => return Err(HarnessError::Config("n or vertices is required".into())),
            (Some(n), None) => ModelSpec::edges(self.on, self.off, n)?,
            (None, Some(v)) => ModelSpec::graph(self.on, self.off, v)?,
        };
        if self.observable != Observable::Edges && model.vertices().is_none() {
            return Err(HarnessError::Config(format!(
                "{} counts need vertices",
                self.observable.as_str()
            )));
        }
        Ok(model)
    }

    /// The configured family, or the one the two laws belong to.
    pub fn family(&self) -> Result<Family> {
        let family = match self.family {
            Some(f) => f,
            None => infer_family(&self.on, &self.off).ok_or_else(|| {
                HarnessError::Config(format!(
                    "no estimator family for {}/{}; set \"family\"",
                    self.on, self.off
                ))
            })?,
        };
        if self.observable != Observable::Edges && family != Family::GeoGeo {
            return Err(HarnessError::Config(format!(
                "{} counts only support the geo_geo family",
                self.observable.as_str()
            )));
        }
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(HarnessError::Config("reps must be at least 1".into()));
        }
        if self.k < 2 {
            return Err(HarnessError::Config("k must be at least 2".into()));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Config("workers must be at least 1".into()));
        }
        self.model()?;
        self.family()?;
        Ok(())
    }

    /// Number of moments the estimator consumes.
    pub fn lags(&self) -> Result<usize> {
        Ok(match self.observable {
            Observable::Edges => self.family()?.moments_needed(),
            _ => 2,
        })
    }

    /// The parameter values the laws correspond to in `family`, when they
    /// belong to it.
    pub fn true_params(&self) -> Option<Vec<f64>> {
        true_params(self.family().ok()?, &self.on, &self.off)
    }
}

pub fn infer_family(on: &OnOffLaw, off: &OnOffLaw) -> Option<Family> {
    use LawSpec::*;
    match (on.spec(), off.spec()) {
        (Geometric { .. }, Geometric { .. }) => Some(Family::GeoGeo),
        (Pareto { c, .. }, Pareto { c: d, .. }) if c == 1.0 && d == 1.0 => Some(Family::ParPar),
        (Weibull { lambda: 1.0, .. }, Geometric { .. }) => Some(Family::WeibullGeo),
        (Pareto { .. }, Geometric { .. }) => Some(Family::ParetoGeo),
        _ => None,
    }
}

pub fn true_params(family: Family, on: &OnOffLaw, off: &OnOffLaw) -> Option<Vec<f64>> {
    use LawSpec::*;
    match (family, on.spec(), off.spec()) {
        (Family::GeoGeo, Geometric { p }, Geometric { p: q }) => Some(vec![p, q]),
        (Family::ParPar, Pareto { c, alpha }, Pareto { c: d, alpha: beta })
            if c == 1.0 && d == 1.0 =>
        {
            Some(vec![alpha, beta])
        }
        (Family::WeibullGeo, Weibull { lambda: 1.0, alpha }, Geometric { p: q }) => {
            Some(vec![alpha, q])
        }
        (Family::ParetoGeo, Pareto { c, alpha }, Geometric { p: q }) => Some(vec![c, alpha, q]),
        _ => None,
    }
}
