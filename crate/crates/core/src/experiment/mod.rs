//! Experiment driver: latency sweeps, ablations and report comparison.
mod config;
mod report;
mod run;

pub use config::{Ablation, RunConfig, ScenarioSource};
pub use report::{
    compare, run_ablation, sidecar_path, AblationRow, AblationTable, DeltaRow, DeltaTable, ABLATION_LATENCIES,
};
pub use run::{load_scenario, run, run_on, MetricsReport, MetricsRow, ReportMeta};
