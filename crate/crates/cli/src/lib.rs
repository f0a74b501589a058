//! Experiment runner for the `fbmbt` toolkit: a JSON config in, a CSV of raw
//! replication values and a JSON summary out.
//!
//! ```no_run
//! use fbmbt_cli::{run_experiment, ExperimentConfig};
//!
//! let cfg = ExperimentConfig::from_json(r#"{"experiment": "constants", "H": 0.16666666666666666}"#).unwrap();
//! let report = run_experiment(&cfg, std::path::Path::new("out"), None).unwrap();
//! assert!(report.all_passed());
//! ```

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{Experiment, ExperimentConfig, OutputPaths, ResolvedConfig};
pub use error::{CliError, CliResult};
pub use experiments::{compute, run_experiment};
pub use report::{ExperimentReport, Verdict};
