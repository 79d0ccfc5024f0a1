//! Seeded Monte Carlo replication campaigns.
//!
//! Replication `r = 1, …, R` simulates a trace of length `K` from
//! [`replication_seed`]`(seed, r)`, streams it through a
//! [`MomentAccumulator`] and runs the configured estimator. Results are
//! collected in replication order, so every output is independent of the
//! number of workers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dyner_core::sim::stream_counts;
use dyner_core::{
    delta_method_cov, estimate, geometric_moment_cov, Family, MomentAccumulator, Observable,
};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const SEED_MIXING: &str = "splitmix64(seed ^ rotate_left(rep, 32)), rep = 1..=R";

pub const MIN_BINS: usize = 10;
const MAX_BINS: usize = 10_000;

/// SplitMix64 output function applied to `base ^ rep.rotate_left(32)`.
pub fn replication_seed(base: u64, rep: u64) -> u64 {
    let mut z = (base ^ rep.rotate_left(32)).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One replication's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub rep: u64,
    pub seed: u64,
    /// empty when estimation failed
    pub params: Vec<f64>,
    pub flags: Vec<String>,
    /// error kind when estimation failed
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: Option<f64>,
    /// estimates that entered the statistics
    pub count: usize,
    pub mean: Option<f64>,
    /// sample sd, `None` below two estimates
    pub sd: Option<f64>,
    /// delta-method prediction at the true parameters, where available
    pub predicted_sd: Option<f64>,
    pub histogram: Histogram,
    /// least-squares slope of the QQ points with theoretical quantile in
    /// the central 95%
    pub qq_slope: Option<f64>,
    /// `(theoretical, standardized sample)` quantile pairs, ascending
    #[serde(skip)]
    pub qq: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub family: Family,
    pub observable: Observable,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<u64>,
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
    pub seed_mixing: &'static str,
    pub estimated: usize,
    pub failures: usize,
    pub failure_kinds: BTreeMap<String, usize>,
    pub flag_counts: BTreeMap<String, usize>,
    pub params: Vec<ParamSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub config: ExperimentConfig,
    pub rows: Vec<Replication>,
    pub summary: CampaignSummary,
}

impl Campaign {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.summary.params.iter().find(|p| p.name == name)
    }
}

/// Worker count from the argument, the config, `RG_WORKERS`, or the
/// number of available cores, in that order.
pub fn resolve_workers(arg: Option<usize>, cfg: &ExperimentConfig) -> Result<usize> {
    if let Some(w) = arg.or(cfg.workers) {
        return Ok(w);
    }
    if let Ok(s) = std::env::var("RG_WORKERS") {
        return s.trim().parse().ok().filter(|&w| w > 0).ok_or_else(|| {
            HarnessError::Config(format!("RG_WORKERS={s:?} is not a positive integer"))
        });
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_campaign(cfg: &ExperimentConfig, workers: usize) -> Result<Campaign> {
    cfg.validate()?;
    if workers == 0 {
        return Err(HarnessError::Config("workers must be at least 1".into()));
    }
    let model = cfg.model()?;
    let family = cfg.family()?;
    let lags = cfg.lags()?;
    let kind = cfg.observable;

    let one = |rep: u64| -> Replication {
        let seed = replication_seed(cfg.seed, rep);
        let mut acc = MomentAccumulator::new(lags);
        let outcome = stream_counts(&model, kind, cfg.k, seed, |v| acc.push(v))
            .and_then(|_| acc.finish(kind, model.n(), model.vertices()))
            .and_then(|m| estimate(&m, family));
        match outcome {
            Ok(r) => {
                let params = r.params.values();
                if params.iter().all(|v| v.is_finite()) {
                    Replication {
                        rep,
                        seed,
                        params,
                        flags: r.flags,
                        failure: None,
                    }
                } else {
                    Replication {
                        rep,
                        seed,
                        params: Vec::new(),
                        flags: r.flags,
                        failure: Some("non_finite".into()),
                    }
                }
            }
            Err(e) => Replication {
                rep,
                seed,
                params: Vec::new(),
                flags: Vec::new(),
                failure: Some(e.kind().into()),
            },
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let rows: Vec<Replication> =
        pool.install(|| (1..=cfg.reps as u64).into_par_iter().map(one).collect());

    let summary = summarize(cfg, family, &model, &rows);
    Ok(Campaign {
        config: cfg.clone(),
        rows,
        summary,
    })
}

fn summarize(
    cfg: &ExperimentConfig,
    family: Family,
    model: &dyner_core::ModelSpec,
    rows: &[Replication],
) -> CampaignSummary {
    let mut failure_kinds = BTreeMap::new();
    let mut flag_counts = BTreeMap::new();
    for r in rows {
        if let Some(f) = &r.failure {
            *failure_kinds.entry(f.clone()).or_insert(0) += 1;
        }
        for f in &r.flags {
            *flag_counts.entry(f.clone()).or_insert(0) += 1;
        }
    }
    let failures = rows.iter().filter(|r| r.failure.is_some()).count();
    let truth = cfg.true_params();
    let predicted = predicted_sd(cfg, family, truth.as_deref());
    let params = family
        .param_names()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let xs: Vec<f64> = rows
                .iter()
                .filter(|r| r.failure.is_none())
                .map(|r| r.params[i])
                .collect();
            let (mean, sd) = mean_sd(&xs);
            let qq = match (mean, sd) {
                (Some(m), Some(s)) if s > 0.0 => qq_pairs(&xs, m, s),
                _ => Vec::new(),
            };
            ParamSummary {
                name: name.to_string(),
                truth: truth.as_ref().map(|t| t[i]),
                count: xs.len(),
                mean,
                sd,
                predicted_sd: predicted.as_ref().map(|p| p[i]),
                histogram: histogram(&xs),
                qq_slope: central_slope(&qq),
                qq,
            }
        })
        .collect();
    CampaignSummary {
        family,
        observable: cfg.observable,
        n: model.n(),
        vertices: model.vertices(),
        k: cfg.k,
        reps: cfg.reps,
        seed: cfg.seed,
        seed_mixing: SEED_MIXING,
        estimated: rows.len() - failures,
        failures,
        failure_kinds,
        flag_counts,
        params,
    }
}

fn predicted_sd(cfg: &ExperimentConfig, family: Family, truth: Option<&[f64]>) -> Option<Vec<f64>> {
    if family != Family::GeoGeo || cfg.observable != Observable::Edges {
        return None;
    }
    let (p, q) = (truth?[0], truth?[1]);
    let n = cfg.n?;
    let mc = geometric_moment_cov(n, p, q).ok()?;
    let pc = delta_method_cov(n, p, q, &mc);
    let k = cfg.k as f64;
    Some(vec![(pc.sigma2 / k).sqrt(), (pc.tau2 / k).sqrt()])
}

pub fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Freedman–Diaconis bins over the range of the data, at least
/// [`MIN_BINS`] of them.
pub fn histogram(xs: &[f64]) -> Histogram {
    if xs.is_empty() {
        return Histogram {
            edges: Vec::new(),
            counts: Vec::new(),
        };
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut lo, mut hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let h = 2.0 * iqr / (xs.len() as f64).cbrt();
    let bins = if h > 0.0 {
        (((hi - lo) / h).ceil() as usize).clamp(MIN_BINS, MAX_BINS)
    } else {
        MIN_BINS
    };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    let mut counts = vec![0u64; bins];
    for &x in &sorted {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Histogram { edges, counts }
}

/// Standard normal quantiles at `(i - 0.5)/m` against the sorted
/// standardized sample.
pub fn qq_pairs(xs: &[f64], mean: f64, sd: f64) -> Vec<(f64, f64)> {
    let normal = Normal::standard();
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = normal.inverse_cdf((i as f64 + 0.5) / m);
            (t, (x - mean) / sd)
        })
        .collect()
}

/// Least-squares slope over points with `|theoretical| ≤ Φ⁻¹(0.975)`.
pub fn central_slope(qq: &[(f64, f64)]) -> Option<f64> {
    let cut = Normal::standard().inverse_cdf(0.975);
    let pts: Vec<&(f64, f64)> = qq.iter().filter(|(t, _)| t.abs() <= cut).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Writes `estimates.csv`, `summary.json`, `hist_<param>.csv` and
/// `qq_<param>.csv` into `dir`.
pub fn emit_outputs(campaign: &Campaign, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let names = campaign.summary.family.param_names();

    write_lines(&dir.join("estimates.csv"), |w| {
        writeln!(w, "rep,seed,{},flags", names.join(","))?;
        for r in &campaign.rows {
            let mut flags = r.flags.clone();
            if let Some(f) = &r.failure {
                flags.insert(0, format!("failed:{f}"));
            }
            let cells: Vec<String> = if r.params.is_empty() {
                vec![String::new(); names.len()]
            } else {
                r.params.iter().map(|v| v.to_string()).collect()
            };
            writeln!(
                w,
                "{},{},{},{}",
                r.rep,
                r.seed,
                cells.join(","),
                flags.join(";")
            )?;
        }
        Ok(())
    })?;

    for p in &campaign.summary.params {
        let h = &p.histogram;
        write_lines(&dir.join(format!("hist_{}.csv", p.name)), |w| {
            writeln!(w, "bin_left,bin_right,count")?;
            for (i, c) in h.counts.iter().enumerate() {
                writeln!(w, "{},{},{}", h.edges[i], h.edges[i + 1], c)?;
            }
            Ok(())
        })?;
        write_lines(&dir.join(format!("qq_{}.csv", p.name)), |w| {
            writeln!(w, "theoretical_quantile,sample_quantile")?;
            for (t, s) in &p.qq {
                writeln!(w, "{t},{s}")?;
            }
            Ok(())
        })?;
    }

    let json = serde_json::to_string_pretty(&campaign.summary).expect("summary serializes");
    let path = dir.join("summary.json");
    std::fs::write(&path, json + "\n").map_err(|e| HarnessError::io(&path, e))
}

fn write_lines(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let run = || {
        let mut w = BufWriter::new(File::create(path)?);
        body(&mut w)?;
        w.flush()
    };
    run().map_err(|e| HarnessError::io(path, e))
}
