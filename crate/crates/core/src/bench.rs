//! Monte Carlo campaigns, statistics and multi-start comparison tables.

use crate::instance::{expected_exhaustive_visits, generate_instance};
use crate::search::{run_search, Algorithm, Params};
use crate::seed::{pair_rng, stream_rng};
use crate::tuner::{ea_tune, EaConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("series line {line}: {msg}")]
    Series { line: usize, msg: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub params: Params,
    /// Grid side.
    pub s: u32,
    pub runs: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub n: u64,
    pub mean: f64,
    pub min: u64,
    pub max: u64,
    /// Sample standard deviation.
    pub stddev: f64,
    pub stderr: f64,
    /// Runs that ended in the full-grid fallback.
    pub fallbacks: u64,
    /// Set when an exhaustive campaign lands more than five standard errors
    /// away from the closed-form expectation.
    pub suspect: bool,
    pub series: Vec<u64>,
}

impl CampaignStats {
    /// Statistics from integer sums, so the result does not depend on the
    /// order runs were aggregated in.
    pub fn from_series(series: Vec<u64>, fallbacks: u64) -> Self {
        let n = series.len() as u64;
        let sum: u128 = series.iter().map(|&x| x as u128).sum();
        let sq: u128 = series.iter().map(|&x| x as u128 * x as u128).sum();
        let mean = if n == 0 { f64::NAN } else { sum as f64 / n as f64 };
        let stddev = if n < 2 {
            0.0
        } else {
            let n128 = n as u128;
            let num = n128 * sq - sum * sum;
            (num as f64 / (n as f64 * (n - 1) as f64)).sqrt()
        };
        Self {
            n,
            mean,
            min: series.iter().copied().min().unwrap_or(0),
            max: series.iter().copied().max().unwrap_or(0),
            stddev,
            stderr: if n == 0 { 0.0 } else { stddev / (n as f64).sqrt() },
            fallbacks,
            suspect: false,
            series,
        }
    }

    /// Running mean after each run.
    pub fn running_means(&self) -> Vec<f64> {
        let mut acc = 0u128;
        self.series
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                acc += x as u128;
                acc as f64 / (i + 1) as f64
            })
            .collect()
    }
}

/// True when `stats` is more than five standard errors from the exhaustive
/// expectation on a `w x h` grid.
pub fn lln_suspect(stats: &CampaignStats, w: u32, h: u32) -> bool {
    let expected = expected_exhaustive_visits(w, h);
    (stats.mean - expected).abs() > 5.0 * stats.stderr
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, BenchError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| BenchError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `config.runs` independent searches; run `i` uses stream `i` of the
/// seed for both its instance and its search.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignStats, BenchError> {
    let (s, params, seed) = (config.s, config.params, config.seed);
    let results: Vec<(u64, bool)> = in_pool(config.workers, || {
        (0..config.runs)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i);
                let inst = generate_instance(s, &mut rng).expect("campaign side is at least 16");
                let out = run_search(&inst, &params, &mut rng, false);
                (out.steps, out.fallback_used)
            })
            .collect()
    })?;
    let fallbacks = results.iter().filter(|r| r.1).count() as u64;
    let mut stats = CampaignStats::from_series(results.into_iter().map(|r| r.0).collect(), fallbacks);
    if params == Params::Exhaustive {
        stats.suspect = lln_suspect(&stats, s, s);
    }
    Ok(stats)
}

/// Writes `run,steps,running_mean` rows followed by a `# mean=` line.
pub fn write_series<W: Write>(stats: &CampaignStats, mut out: W) -> io::Result<()> {
    writeln!(out, "run,steps,running_mean")?;
    for (i, (steps, running)) in stats.series.iter().zip(stats.running_means()).enumerate() {
        writeln!(out, "{},{},{}", i + 1, steps, running)?;
    }
    writeln!(out, "# mean={}", stats.mean)
}

pub fn export_series(stats: &CampaignStats, path: &Path) -> Result<(), BenchError> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    write_series(stats, &mut f)?;
    f.flush()?;
    Ok(())
}

/// Reads back a series file: the step counts and the stated mean.
pub fn read_series<R: BufRead>(input: R) -> Result<(Vec<u64>, f64), BenchError> {
    let mut steps = Vec::new();
    let mut mean = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let bad = |msg: &str| BenchError::Series { line: i + 1, msg: msg.to_string() };
        if i == 0 {
            if line != "run,steps,running_mean" {
                return Err(bad("unexpected header"));
            }
            continue;
        }
        if let Some(m) = line.strip_prefix("# mean=") {
            mean = Some(m.parse().map_err(|_| bad("bad mean"))?);
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(bad("expected three columns"));
        }
        steps.push(cols[1].parse().map_err(|_| bad("bad step count"))?);
    }
    let mean = mean.ok_or(BenchError::Series { line: 0, msg: "missing mean line".into() })?;
    Ok((steps, mean))
}

pub fn write_manifest(config: &CampaignConfig, path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, serde_json::to_string_pretty(config)?)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<CampaignConfig, BenchError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub algorithms: Vec<Algorithm>,
    pub s: u32,
    pub restarts: u32,
    /// Runs per campaign with the tuned parameters.
    pub runs: u64,
    pub seed: u64,
    pub ea: EaConfig,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    /// The campaign behind this cell, replayable with [`run_campaign`].
    pub campaign: CampaignConfig,
    pub mean: f64,
    /// `None` for algorithms with nothing to tune.
    pub converged: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub algorithms: Vec<Algorithm>,
    pub rows: Vec<Vec<TableCell>>,
}

impl ComparisonTable {
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.algorithms.len())
            .map(|j| self.rows.iter().map(|r| r[j].mean).sum::<f64>() / self.rows.len() as f64)
            .collect()
    }

    pub fn column_lowest(&self) -> Vec<f64> {
        (0..self.algorithms.len())
            .map(|j| self.rows.iter().map(|r| r[j].mean).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Column index of the lowest mean in each row.
    pub fn winners(&self) -> Vec<usize> {
        self.rows.iter().map(|r| argmin(r.iter().map(|c| c.mean))).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("restart");
        for a in &self.algorithms {
            let _ = write!(out, ",{a}");
        }
        out.push_str(",winner\n");
        let names: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        let mut line = |label: String, values: Vec<f64>| {
            out.push_str(&label);
            for v in &values {
                let _ = write!(out, ",{v:.1}");
            }
            let _ = writeln!(out, ",{}", names[argmin(values.into_iter())]);
        };
        for (i, row) in self.rows.iter().enumerate() {
            line((i + 1).to_string(), row.iter().map(|c| c.mean).collect());
        }
        line("mean".into(), self.column_means());
        line("lowest".into(), self.column_lowest());
        out
    }
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
        .0
}

/// Tunes and benchmarks every algorithm `restarts` times. Each cell is the
/// mean of a fresh campaign with the tuned parameters; when the tuner did not
/// converge, the step counts spent while tuning are pooled into that mean.
pub fn multi_start_table(config: &TableConfig) -> Result<ComparisonTable, BenchError> {
    let mut rows = Vec::with_capacity(config.restarts as usize);
    for r in 0..config.restarts {
        let mut row = Vec::with_capacity(config.algorithms.len());
        for (j, &algo) in config.algorithms.iter().enumerate() {
            let mut keys = pair_rng(config.seed, r as u64, j as u32);
            let (tune_seed, bench_seed): (u64, u64) = (rand::Rng::gen(&mut keys), rand::Rng::gen(&mut keys));
            let (params, converged, extra) = if algo == Algorithm::Exhaustive {
                (Params::Exhaustive, None, Vec::new())
            } else {
                let t = in_pool(config.workers, || ea_tune(algo, config.s, &config.ea, tune_seed))?;
                let extra = if t.converged { Vec::new() } else { t.tuning_runs };
                (t.params, Some(t.converged), extra)
            };
            let campaign = CampaignConfig {
                params,
                s: config.s,
                runs: config.runs,
                seed: bench_seed,
                workers: config.workers,
            };
            let mut series = run_campaign(&campaign)?.series;
            series.extend(extra);
            let mean = CampaignStats::from_series(series, 0).mean;
            row.push(TableCell { campaign, mean, converged });
        }
        rows.push(row);
    }
    Ok(ComparisonTable { algorithms: config.algorithms.clone(), rows })
}
