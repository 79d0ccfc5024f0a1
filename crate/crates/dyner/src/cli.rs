//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use dyner_core::{
    delta_method_cov, estimate, finiteness_check, general_moment_cov, geometric_moment_cov,
    joint_distribution, joint_mgf, simulate_graph_trace, Family, LawSpec, MomentAccumulator,
    Observable,
};
use serde::Serialize;
use serde_json::json;

use crate::campaign::{emit_outputs, resolve_workers, run_campaign};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::trace_io::{read_meta, stream_trace, write_trace, TraceMeta};

/// Default truncation of the general covariance series.
pub const COV_TOL: f64 = 1e-12;
pub const COV_CAP: usize = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "dyner",
    version,
    about = "Dynamic Erdős–Rényi graphs: simulation and moment estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one count trace and write it as CSV with a JSON sidecar
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        /// trace file; the sidecar goes next to it
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the parameters from a trace file
    Estimate {
        #[arg(long)]
        trace: PathBuf,
        /// supplies the family and `n` when the trace has no sidecar
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        family: Option<Family>,
    },
    /// Run a replication campaign and write its outputs
    Campaign {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Joint MGF of one edge's indicators, or its joint on/off law
    Mgf {
        #[arg(long)]
        config: PathBuf,
        /// θ for epochs 1..=K, comma separated
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required_unless_present = "epochs"
        )]
        theta: Vec<f64>,
        /// epochs for the joint law, comma separated
        #[arg(long, value_delimiter = ',', conflicts_with = "theta")]
        epochs: Vec<usize>,
    },
    /// Limit covariance of the moment statistics and the estimates
    Cov {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = CovMethod::Auto)]
        method: CovMethod,
        /// trace length for predicted standard deviations
        #[arg(long)]
        k: Option<usize>,
    },
    /// Whether the limit covariances are finite
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovMethod {
    /// closed form for geometric laws, the general series otherwise
    Auto,
    Closed,
    General,
}

/// Parses `args` and runs the command, writing results to `out`.
/// Returns the exit status.
pub fn main_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match run(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let body = serde_json::to_string(&e.body()).expect("error body serializes");
            let _ = writeln!(err, "{body}");
            e.exit_code()
        }
    }
}

fn print(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    writeln!(out, "{text}").map_err(|e| HarnessError::io(Path::new("<stdout>"), e))
}

pub fn run(cmd: Command, out: &mut impl Write, err: &mut impl Write) -> Result<()> {
    match cmd {
        Command::Simulate {
            config,
            seed,
            k,
            out: path,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.k = k.unwrap_or(cfg.k);
            let model = cfg.model()?;
            if cfg.k == 0 {
                return Err(HarnessError::Config("k must be positive".into()));
            }
            let trace = simulate_graph_trace(&model, cfg.k, cfg.seed, cfg.observable)?;
            write_trace(
                &path,
                &trace,
                &TraceMeta::of(&trace, Some((cfg.on, cfg.off))),
            )?;
            print(
                out,
                &json!({"trace": path, "K": trace.len(), "seed": cfg.seed}),
            )
        }
        Command::Estimate {
            trace,
            config,
            family,
        } => {
            let cfg = config.as_deref().map(ExperimentConfig::load).transpose()?;
            let meta = read_meta(&trace)?;
            let (kind, n, vertices) = match (&meta, &cfg) {
                (Some(m), _) => (m.kind, m.n, m.vertices),
                (None, Some(c)) => {
                    let model = c.model()?;
                    (c.observable, model.n(), model.vertices())
                }
                (None, None) => {
                    return Err(HarnessError::Config(
                        "the trace has no sidecar; pass --config".into(),
                    ))
                }
            };
            let family = match (family, &cfg, &meta) {
                (Some(f), _, _) => f,
                (None, Some(c), _) => c.family()?,
                (
                    None,
                    None,
                    Some(TraceMeta {
                        on: Some(on),
                        off: Some(off),
                        ..
                    }),
                ) => crate::config::infer_family(on, off).ok_or_else(|| {
                    HarnessError::Config("cannot infer the family; pass --family".into())
                })?,
                _ => return Err(HarnessError::Config("pass --family or --config".into())),
            };
            let lags = match kind {
                Observable::Edges => family.moments_needed(),
                _ => 2,
            };
            let mut acc = MomentAccumulator::new(lags);
            stream_trace(&trace, |v| acc.push(v))?;
            let m = acc.finish(kind, n, vertices)?;
            let mut report = estimate(&m, family)?;
            if family == Family::GeoGeo && kind == Observable::Edges && report.flags.is_empty() {
                let (p, q) = (report.params.values()[0], report.params.values()[1]);
                if let Ok(mc) = geometric_moment_cov(n, p, q) {
                    report.covariance = Some(delta_method_cov(n, p, q, &mc).report(m.k));
                }
            }
            print(out, &report)
        }
        Command::Campaign {
            config,
            seed,
            k,
            reps,
            workers,
            out: dir,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.k = k.unwrap_or(cfg.k);
            cfg.reps = reps.unwrap_or(cfg.reps);
            let dir = dir
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| HarnessError::Config("pass --out or set \"out\"".into()))?;
            let workers = resolve_workers(workers, &cfg)?;
            let start = Instant::now();
            let campaign = run_campaign(&cfg, workers)?;
            emit_outputs(&campaign, &dir)?;
            let _ = writeln!(
                err,
                "campaign: {} replications on {} workers in {:.2}s",
                cfg.reps,
                workers,
                start.elapsed().as_secs_f64()
            );
            print(out, &campaign.summary)
        }
        Command::Mgf {
            config,
            theta,
            epochs,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let model = cfg.model()?;
            if !theta.is_empty() {
                let value = joint_mgf(&model, &theta)?;
                return print(
                    out,
                    &json!({"theta": theta, "mgf": value, "log_mgf": value.ln()}),
                );
            }
            let law = joint_distribution(&model, &epochs)?;
            let k = epochs.len();
            let patterns: Vec<_> = law
                .probs
                .iter()
                .enumerate()
                .map(|(i, p)| json!({"pattern": format!("{i:0k$b}"), "prob": p}))
                .collect();
            print(out, &json!({"epochs": epochs, "joint": patterns}))
        }
        Command::Cov { config, method, k } => {
            let cfg = ExperimentConfig::load(&config)?;
            let model = cfg.model()?;
            let k = k.unwrap_or(cfg.k);
            let geo = match (model.on_law().spec(), model.off_law().spec()) {
                (LawSpec::Geometric { p }, LawSpec::Geometric { p: q }) => Some((p, q)),
                _ => None,
            };
            let closed = match method {
                CovMethod::Closed => Some(geo.ok_or_else(|| {
                    HarnessError::Config("the closed form needs geometric on and off laws".into())
                })?),
                CovMethod::Auto => geo,
                CovMethod::General => None,
            };
            if let Some((p, q)) = closed {
                let n = model.n();
                let mc = geometric_moment_cov(n, p, q)?;
                let pc = delta_method_cov(n, p, q, &mc);
                return print(
                    out,
                    &json!({
                        "method": "closed_form_geometric",
                        "moments": mc,
                        "params": pc,
                        "report": pc.report(k.max(1)),
                    }),
                );
            }
            let verdict = finiteness_check(&model);
            let g = general_moment_cov(&model, COV_TOL, COV_CAP)?;
            print(
                out,
                &json!({"method": "general_series", "moments": g, "finiteness": verdict}),
            )
        }
        Command::Check { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let model = cfg.model()?;
            let v = finiteness_check(&model);
            print(
                out,
                &json!({
                    "finite": v.is_finite(),
                    "finiteness": v.finiteness,
                    "explanation": v.explanation,
                }),
            )
        }
    }
}
