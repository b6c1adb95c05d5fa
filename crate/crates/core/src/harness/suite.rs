use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::{run_seed, EpochMetrics, SeedRun};
use super::svg::{render_chart, Series};
use crate::error::{Error, Result};
use crate::sampling::Algo;

pub const SEED_CSV_HEADER: &str = "seed,epoch,success_rate,cluster_version,wall_time_ms";
pub const AGGREGATE_CSV_HEADER: &str = "epoch,mean,min,max,n_seeds";
pub const SUMMARY_CSV_HEADER: &str = "algo,auc,final_mean,band_width_last10";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochAggregate {
    pub epoch: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgoSummary {
    pub algo: Algo,
    pub epochs: Vec<EpochAggregate>,
    /// Mean over epochs of the seed-mean success rate (area under the curve
    /// normalised by the number of epochs).
    pub auc: f64,
    /// Average of `max - min` over the last (up to) 10 epochs.
    pub band_width_last10: f64,
}

impl AlgoSummary {
    pub fn final_mean(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.mean)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteSummary {
    pub algos: Vec<AlgoSummary>,
    pub runs: Vec<SeedRun>,
}

impl SuiteSummary {
    pub fn get(&self, algo: Algo) -> Option<&AlgoSummary> {
        self.algos.iter().find(|a| a.algo == algo)
    }

    pub fn runs_for(&self, algo: Algo) -> impl Iterator<Item = &SeedRun> + '_ {
        self.runs.iter().filter(move |r| r.algo == algo)
    }
}

/// Per-epoch mean/min/max across seeds. Seeds are summed in the order given.
pub fn aggregate(algo: Algo, runs: &[&SeedRun]) -> Result<AlgoSummary> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Config(format!("no runs for {algo}")))?;
    let epochs = first.metrics.len();
    if runs.iter().any(|r| r.metrics.len() != epochs) {
        return Err(Error::contract("seed runs have different epoch counts"));
    }
    let n = runs.len();
    let rows: Vec<EpochAggregate> = (0..epochs)
        .map(|e| {
            let rates = runs.iter().map(|r| r.metrics[e].success_rate);
            let sum: f64 = rates.clone().sum();
            EpochAggregate {
                epoch: first.metrics[e].epoch,
                mean: sum / n as f64,
                min: rates.clone().fold(f64::INFINITY, f64::min),
                max: rates.fold(f64::NEG_INFINITY, f64::max),
                n_seeds: n,
            }
        })
        .collect();
    let auc = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.mean).sum::<f64>() / rows.len() as f64
    };
    let tail = &rows[rows.len().saturating_sub(10)..];
    let band_width_last10 = if tail.is_empty() {
        0.0
    } else {
        tail.iter().map(|r| r.max - r.min).sum::<f64>() / tail.len() as f64
    };
    Ok(AlgoSummary {
        algo,
        epochs: rows,
        auc,
        band_width_last10,
    })
}

pub fn seed_csv(metrics: &[EpochMetrics], wall_time: bool) -> String {
    let mut out = String::from(SEED_CSV_HEADER);
    out.push('\n');
    for m in metrics {
        let wall = if wall_time {
            m.wall_time_ms.to_string()
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            m.seed, m.epoch, m.success_rate, m.cluster_version, wall
        );
    }
    out
}

pub fn aggregate_csv(summary: &AlgoSummary) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for r in &summary.epochs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch, r.mean, r.min, r.max, r.n_seeds
        );
    }
    out
}

pub fn summary_csv(summaries: &[AlgoSummary]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{:.6},{},{:.6}",
            s.algo,
            s.auc,
            s.final_mean(),
            s.band_width_last10
        );
    }
    out
}

/// Runs jobs on up to `threads` workers (0 = available parallelism) and
/// returns results in job order.
fn run_parallel<T, F>(jobs: usize, threads: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = if threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        threads
    }
    .min(jobs)
    .max(1);
    if workers == 1 {
        return (0..jobs).map(&work).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = next.fetch_add(1, Ordering::Relaxed);
                if job >= jobs {
                    break;
                }
                let result = work(job);
                slots.lock().expect("no worker panicked")[job] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Runs every (algo, seed) pair of `cfg` in isolation and aggregates per
/// algorithm. Does not touch the filesystem.
pub fn run_all(cfg: &ExperimentConfig) -> Result<SuiteSummary> {
    cfg.validate()?;
    let jobs: Vec<(Algo, u64)> = cfg
        .algos
        .iter()
        .flat_map(|a| cfg.seeds.iter().map(move |s| (*a, *s)))
        .collect();
    let results = run_parallel(jobs.len(), cfg.threads, |j| {
        let (algo, seed) = jobs[j];
        run_seed(cfg, algo, seed)
    });
    let mut runs = Vec::with_capacity(results.len());
    for ((algo, seed), r) in jobs.iter().zip(results) {
        runs.push(r.map_err(|e| Error::SeedFailed {
            algo: algo.to_string(),
            seed: *seed,
            source: Box::new(e),
        })?);
    }
    let algos = cfg
        .algos
        .iter()
        .map(|a| {
            aggregate(
                *a,
                &runs.iter().filter(|r| r.algo == *a).collect::<Vec<_>>(),
            )
        })
        .collect::<Result<_>>()?;
    Ok(SuiteSummary { algos, runs })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: String,
    config: &'a ExperimentConfig,
    files: Vec<String>,
    summary: Vec<ManifestSummary>,
}

#[derive(Debug, Serialize)]
struct ManifestSummary {
    algo: Algo,
    auc: f64,
    final_mean: f64,
    band_width_last10: f64,
}

/// `git describe`-style version of the working tree, falling back to the
/// crate version.
pub fn version_string() -> String {
    let described = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty());
    match described {
        Some(d) => format!("{}-g{}", env!("CARGO_PKG_VERSION"), d),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes per-seed CSVs, aggregate CSVs, refit logs, the chart, a summary
/// table and the manifest under `out`. Returns the paths written, relative
/// to `out`.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    summary: &SuiteSummary,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = Vec::new();
    for algo_summary in &summary.algos {
        let algo = algo_summary.algo;
        let dir = out.join(algo.as_str());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for run in summary.runs_for(algo) {
            let name = PathBuf::from(algo.as_str()).join(format!("seed_{}.csv", run.seed));
            write(&out.join(&name), &seed_csv(&run.metrics, cfg.wall_time))?;
            files.push(name);
            if algo.uses_clusters() {
                let name =
                    PathBuf::from(algo.as_str()).join(format!("refits_seed_{}.jsonl", run.seed));
                let mut text = String::new();
                for event in &run.refits {
                    text.push_str(&serde_json::to_string(event)?);
                    text.push('\n');
                }
                write(&out.join(&name), &text)?;
                files.push(name);
            }
        }
        let name = PathBuf::from(algo.as_str()).join("aggregate.csv");
        write(&out.join(&name), &aggregate_csv(algo_summary))?;
        files.push(name);
    }

    let series: Vec<Series> = summary
        .algos
        .iter()
        .map(|s| Series {
            label: s.algo.to_string(),
            epochs: s.epochs.iter().map(|e| e.epoch as f64).collect(),
            mean: s.epochs.iter().map(|e| e.mean).collect(),
            min: s.epochs.iter().map(|e| e.min).collect(),
            max: s.epochs.iter().map(|e| e.max).collect(),
        })
        .collect();
    let title = format!("{} success rate ({} seeds)", cfg.env, cfg.seeds.len());
    write(&out.join("chart.svg"), &render_chart(&title, &series))?;
    files.push("chart.svg".into());
    write(&out.join("summary.csv"), &summary_csv(&summary.algos))?;
    files.push("summary.csv".into());

    files.push("manifest.json".into());
    let manifest = Manifest {
        version: version_string(),
        config: cfg,
        files: files.iter().map(|f| f.display().to_string()).collect(),
        summary: summary
            .algos
            .iter()
            .map(|s| ManifestSummary {
                algo: s.algo,
                auc: s.auc,
                final_mean: s.final_mean(),
                band_width_last10: s.band_width_last10,
            })
            .collect(),
    };
    write(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(files)
}

/// Runs the suite and persists its artifacts under `cfg.out`.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteSummary> {
    let summary = run_all(cfg)?;
    write_outputs(cfg, &summary, &cfg.out)?;
    Ok(summary)
}
