use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fbmbt::fgn::RhoSeriesResult;
use fbmbt::rng::GOLDEN_GAMMA;
use fbmbt::stats::{summarize, RateFit, TwoSampleResult};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "replication,seed,statistic,value";

/// One raw value of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub replication: usize,
    pub seed: u64,
    pub statistic: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesConstant {
    pub name: String,
    pub value: f64,
    #[serde(rename = "H")]
    pub hurst: f64,
    pub truncation: u64,
    /// Certified bound on the truncated tail of the series this constant comes from.
    pub tail_bound: f64,
}

impl SeriesConstant {
    pub fn from_series(name: &str, value: f64, s: &RhoSeriesResult) -> Self {
        SeriesConstant { name: name.into(), value, hurst: s.hurst.value(), truncation: s.truncation, tail_bound: s.tail_bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub statistic: String,
    pub n: u32,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub count: usize,
}

impl LevelEstimate {
    pub fn of(statistic: &str, n: u32, xs: &[f64]) -> Self {
        let s = summarize(xs);
        LevelEstimate { statistic: statistic.into(), n, mean: s.mean, variance: s.variance, stderr: s.stderr, count: s.count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub verdict: Verdict,
    /// Set when the two-sample p-value rests on fewer than 50 draws.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub small_sample: bool,
}

impl TestOutcome {
    pub fn check(name: impl Into<String>, statistic: f64, passed: bool) -> Self {
        TestOutcome {
            name: name.into(),
            statistic,
            p_value: None,
            verdict: if passed { Verdict::Pass } else { Verdict::Fail },
            small_sample: false,
        }
    }

    pub fn two_sample(name: impl Into<String>, r: &TwoSampleResult, alpha: f64) -> Self {
        TestOutcome {
            name: name.into(),
            statistic: r.statistic,
            p_value: Some(r.p_value),
            verdict: if r.p_value >= alpha { Verdict::Pass } else { Verdict::Fail },
            small_sample: r.small_sample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub name: String,
    pub slope: f64,
    pub r_squared: f64,
}

impl RateEstimate {
    pub fn of(name: &str, fit: &RateFit) -> Self {
        RateEstimate { name: name.into(), slope: fit.slope, r_squared: fit.r_squared }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorEntry {
    pub a1: u32,
    pub a2: u32,
    /// Exact rational, e.g. `1/24`.
    pub exact: String,
    pub value: f64,
}

/// Master seed of one Monte-Carlo batch; replication `i` of the batch uses
/// `derive_seed(master_seed, i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSeed {
    pub batch: String,
    pub n: Option<u32>,
    pub index: u64,
    pub master_seed: u64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLineage {
    pub master_seed: u64,
    pub mixing: String,
    pub rng: String,
    pub batches: Vec<BatchSeed>,
}

impl SeedLineage {
    pub fn new(master_seed: u64) -> Self {
        SeedLineage {
            master_seed,
            mixing: format!(
                "derive_seed(m, i) = splitmix64(m ^ ({GOLDEN_GAMMA:#018x} * i)); batch k draws from derive_seed(master_seed, k), \
                 replication i of a batch from derive_seed(batch_seed, i)"
            ),
            rng: "ChaCha8 seeded with the replication seed; fBm components, walk, Brownian pieces and clock on separate streams"
                .into(),
            batches: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub toolkit_version: String,
    pub series_constants: Vec<SeriesConstant>,
    pub per_level: Vec<LevelEstimate>,
    pub tests: Vec<TestOutcome>,
    pub rates: Vec<RateEstimate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub taylor_table: Vec<TaylorEntry>,
    pub runtime_seconds: f64,
    pub seed_lineage: SeedLineage,
    #[serde(skip)]
    pub rows: Vec<CsvRow>,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.tests.iter().all(|t| t.verdict == Verdict::Pass)
    }

    pub fn csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            // 17 significant digits round-trip every f64
            let _ = writeln!(out, "{},{},{},{:.16e}", r.replication, r.seed, r.statistic, r.value);
        }
        out
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Write the CSV and JSON outputs under `dir`; returns their paths.
    pub fn write(&self, dir: &Path) -> CliResult<(PathBuf, PathBuf)> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let csv = dir.join(self.config.csv_name());
        let json = dir.join(self.config.json_name());
        std::fs::write(&csv, self.csv()).map_err(io(&csv))?;
        std::fs::write(&json, self.json() + "\n").map_err(io(&json))?;
        Ok((csv, json))
    }
}
