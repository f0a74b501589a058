use std::fmt;
use std::path::Path;

use fbmbt::fgn::{DyadicLevel, HurstExponent, CIRCULANT_MAX};
use fbmbt::limitlaw::MAX_CORRECTION_STEPS;
use fbmbt::TestFunction2D;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Largest skeleton walk (in steps) an experiment may request.
pub const MAX_SKELETON_STEPS: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    RhoTable,
    Constants,
    TaylorTable,
    IdentitySuite,
    ConvergeHGt,
    LawHEq,
    DivergeHLt,
    SkeletonSuite,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::RhoTable => "rho-table",
            Experiment::Constants => "constants",
            Experiment::TaylorTable => "taylor-table",
            Experiment::IdentitySuite => "identity-suite",
            Experiment::ConvergeHGt => "converge-h-gt",
            Experiment::LawHEq => "law-h-eq",
            Experiment::DivergeHLt => "diverge-h-lt",
            Experiment::SkeletonSuite => "skeleton-suite",
        }
    }

    fn default_hurst(self) -> f64 {
        match self {
            Experiment::ConvergeHGt => 0.3,
            Experiment::DivergeHLt => 0.1,
            _ => 1.0 / 6.0,
        }
    }

    fn default_levels(self) -> Vec<u32> {
        match self {
            Experiment::ConvergeHGt => vec![8, 10, 12, 14],
            Experiment::LawHEq => vec![16],
            Experiment::DivergeHLt => vec![10, 12, 14, 16, 18],
            Experiment::SkeletonSuite => vec![10, 12, 14, 16],
            _ => Vec::new(),
        }
    }

    fn default_function(self) -> &'static str {
        match self {
            Experiment::ConvergeHGt => "sin(x)cos(y)",
            _ => "x^3",
        }
    }

    fn default_replications(self) -> usize {
        match self {
            Experiment::IdentitySuite => 100,
            Experiment::ConvergeHGt | Experiment::LawHEq => 500,
            _ => 1000,
        }
    }

    fn uses_grid(self) -> bool {
        matches!(self, Experiment::ConvergeHGt | Experiment::LawHEq | Experiment::DivergeHLt)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Raw replication values; defaults to `<experiment>.csv` under `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Summary report; defaults to `<experiment>.json` under `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

/// A single JSON document describing one experiment. Omitted fields take
/// per-experiment defaults, see [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(default)]
    pub master_seed: u64,
    /// Euler mesh of the correction sampler (law experiments).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
    /// Series truncation for rho-table and constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<u64>,
    /// Largest lag listed by rho-table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<u64>,
    /// Largest total order solved by taylor-table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<u32>,
    #[serde(default)]
    pub output: OutputPaths,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub hurst: HurstExponent,
    pub levels: Vec<DyadicLevel>,
    pub t: f64,
    pub function: TestFunction2D,
    pub replications: usize,
    pub master_seed: u64,
    pub mesh: f64,
    pub truncation: u64,
    pub max_lag: u64,
    pub max_order: u32,
}

fn bad(key: &'static str, message: impl Into<String>) -> CliError {
    CliError::Config { key, message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| bad("config", e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fill in defaults and check every key.
    pub fn resolve(&self) -> CliResult<ResolvedConfig> {
        let exp = self.experiment;
        let h = self.hurst.unwrap_or_else(|| exp.default_hurst());
        let hurst = HurstExponent::new(h).map_err(|e| bad("H", e.to_string()))?;
        match exp {
            Experiment::LawHEq if !hurst.is_one_sixth() => return Err(bad("H", format!("{exp} runs at H = 1/6, got {h}"))),
            Experiment::ConvergeHGt if h <= 1.0 / 6.0 => return Err(bad("H", format!("{exp} needs H > 1/6, got {h}"))),
            Experiment::DivergeHLt if h >= 1.0 / 6.0 => return Err(bad("H", format!("{exp} needs H < 1/6, got {h}"))),
            Experiment::RhoTable | Experiment::Constants if h >= 5.0 / 6.0 => {
                return Err(bad("H", format!("the rho^3 series diverges for H = {h} >= 5/6")))
            }
            _ => {}
        }

        let t = self.t.unwrap_or(1.0);
        if !(t > 0.0 && t.is_finite()) {
            return Err(bad("t", format!("horizon must be positive and finite, got {t}")));
        }

        let raw = self.levels.clone().unwrap_or_else(|| exp.default_levels());
        if raw.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("levels", format!("levels must be strictly increasing, got {raw:?}")));
        }
        let mut levels = Vec::with_capacity(raw.len());
        for &n in &raw {
            let level = DyadicLevel::new(n).map_err(|e| bad("levels", e.to_string()))?;
            if exp.uses_grid() && level.grid_steps(t) > CIRCULANT_MAX {
                return Err(bad("levels", format!("level {n} at t = {t} exceeds the fBm grid capacity {CIRCULANT_MAX}")));
            }
            if level.skeleton_steps(t) > MAX_SKELETON_STEPS {
                return Err(bad("levels", format!("level {n} at t = {t} exceeds the walk capacity {MAX_SKELETON_STEPS}")));
            }
            levels.push(level);
        }
        let min_levels = match exp {
            Experiment::ConvergeHGt | Experiment::DivergeHLt => 3,
            Experiment::LawHEq | Experiment::SkeletonSuite => 1,
            _ => 0,
        };
        if levels.len() < min_levels {
            return Err(bad("levels", format!("{exp} needs at least {min_levels} levels, got {}", levels.len())));
        }

        let id = self.function.as_deref().unwrap_or_else(|| exp.default_function());
        let function = TestFunction2D::parse(id).map_err(|e| bad("function", e.to_string()))?;

        let replications = self.replications.unwrap_or_else(|| exp.default_replications());
        if replications == 0 {
            return Err(bad("replications", "must be at least 1"));
        }

        let mesh = self.mesh.unwrap_or(1.0 / 1024.0);
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(bad("mesh", format!("must be positive, got {mesh}")));
        }
        if exp == Experiment::LawHEq && (t / mesh).ceil() > MAX_CORRECTION_STEPS as f64 {
            return Err(bad("mesh", format!("t / mesh exceeds {MAX_CORRECTION_STEPS} correction steps")));
        }

        let truncation = self.truncation.unwrap_or(fbmbt::limitlaw::DEFAULT_TRUNCATION);
        if truncation < 2 {
            return Err(bad("truncation", "must be at least 2"));
        }
        let max_lag = self.max_lag.unwrap_or(16);
        if max_lag > 1 << 20 {
            return Err(bad("max_lag", "must be at most 2^20"));
        }
        let max_order = self.max_order.unwrap_or(fbmbt::calculus::MAX_TAYLOR_ORDER);
        if !(3..=fbmbt::calculus::MAX_TAYLOR_ORDER).contains(&max_order) {
            return Err(bad("max_order", format!("must lie in 3..={}", fbmbt::calculus::MAX_TAYLOR_ORDER)));
        }

        Ok(ResolvedConfig {
            experiment: exp,
            hurst,
            levels,
            t,
            function,
            replications,
            master_seed: self.master_seed,
            mesh,
            truncation,
            max_lag,
            max_order,
        })
    }

    pub fn csv_name(&self) -> String {
        self.output.csv.clone().unwrap_or_else(|| format!("{}.csv", self.experiment))
    }

    pub fn json_name(&self) -> String {
        self.output.json.clone().unwrap_or_else(|| format!("{}.json", self.experiment))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(json: &str) -> &'static str {
        match ExperimentConfig::from_json(json).and_then(|c| c.resolve().map(|_| ())) {
            Err(CliError::Config { key, .. }) => key,
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_resolve() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "converge-h-gt"}"#).unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.hurst.value(), 0.3);
        assert_eq!(r.levels.len(), 4);
        assert_eq!(r.function, TestFunction2D::SinCos(1.0, 1.0));
        assert_eq!(c.csv_name(), "converge-h-gt.csv");
    }

    #[test]
    fn offending_keys_are_named() {
        assert_eq!(key_of(r#"{"experiment": "law-h-eq", "levels": [12, 10]}"#), "levels");
        assert_eq!(key_of(r#"{"experiment": "law-h-eq", "function": "tan(x)"}"#), "function");
        assert_eq!(key_of(r#"{"experiment": "law-h-eq", "H": 0.3}"#), "H");
        assert_eq!(key_of(r#"{"experiment": "diverge-h-lt", "H": 0.2}"#), "H");
        assert_eq!(key_of(r#"{"experiment": "converge-h-gt", "levels": [8, 60, 61]}"#), "levels");
        assert_eq!(key_of(r#"{"experiment": "law-h-eq", "mesh": 1e-9}"#), "mesh");
        assert_eq!(key_of(r#"{"experiment": "constants", "replications": 0}"#), "replications");
        assert_eq!(key_of(r#"{"experiment": "volcano"}"#), "config");
        assert_eq!(key_of(r#"{"experiment": "constants", "colour": 1}"#), "config");
    }
}
