//! Configuration, run orchestration, trace persistence and sweeps.

mod config;
mod run;
mod sweep;
mod trace;

pub use config::{
    DiagnosticsConfig, GammaFile, GpConfig, OracleConfig, OutputConfig, RunConfig, SparseConfig, OUTPUT_DIR_ENV,
};
pub use run::{diagnose_gamma, run, run_seed, RunOutput, RunStats, GAMMA_REPORT_FILE, MANIFEST_FILE};
pub use sweep::{parse_sweep_value, sweep, SweepRow, SweepSummary};
pub use trace::{read_trace_csv, trace_csv, TraceRow, TRACE_COLUMNS};
