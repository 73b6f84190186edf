//! Configuration, presets, benchmark drivers and output writers.

pub mod bench;
pub mod config;
pub mod output;
pub mod run;

pub use bench::{preset, run_benchmark, BenchReport, Check, BENCH_NAMES};
pub use config::{load_config, Scenario, ScenarioConfig};
pub use output::{read_snapshot, write_table, write_timeseries, ComparisonRow, Snapshot, SnapshotData};
pub use run::{run_scenario, ConsolidationRun, RunOptions, Runner};
