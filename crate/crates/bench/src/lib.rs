//! Benchmark suite for expire-treap: competitor index structures, the
//! b-model bursty traffic generator, a scenario driver with CSV reports,
//! an oracle-equivalence verifier, and a multi-reader stress harness.

pub mod competitors;
pub mod report;
pub mod runner;
pub mod stress;
pub mod verify;
pub mod workload;

pub use report::{emit_rows_csv, emit_summary_csv, rate_of_expiration, BenchError, BenchReport};
pub use runner::{
    lookup_bench, run_scenario, traversal_bench, MeasurementKind, ScenarioConfig, StructureKind,
};
pub use workload::{generate, uniform_trace, BModelParams, LifetimeDistribution, WorkloadTrace};
