//! Benchmark harness: scenario generation, batch runs, parameter sweeps,
//! overlap-table precomputation and plot-ready output.

pub mod bench;
pub mod config;
pub mod error;
pub mod heatmap;
pub mod records;
pub mod scenario;
pub mod sweep;

pub use bench::{run_benchmark, BenchOutput, Workload};
pub use config::{Config, PlannerConfig, PlannerKind};
pub use error::{HarnessError, Result};
pub use records::{summarize, RunRecord, Stat, Summary};
pub use scenario::{generate_scenarios, Scenario};
pub use sweep::run_sensitivity;
