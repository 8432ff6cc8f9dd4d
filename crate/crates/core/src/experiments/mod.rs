//! Replication harness: simulate, estimate, and tabulate ESS, region
//! volume and coverage across seeded replications.

mod config;
mod harness;
mod report;

pub use config::{ExperimentConfig, TruthSpec, DEFAULT_N_TRUTH};
pub use harness::{run_replications, Outcome, OutcomeStatus, ReplicationRecord};
pub use report::{emit_tables, MethodSummary, ReplicationReport, TableFormat, TruthSummary};
