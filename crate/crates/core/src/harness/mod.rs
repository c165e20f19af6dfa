//! Monte-Carlo campaigns over many independent attack streams.
//!
//! Each iteration draws one stream from its own seeded substream, runs it
//! until every edge is collected and evaluates all configured policies on
//! it. Per-iteration results are folded into integer counters so a campaign
//! gives identical output for any number of workers.

mod config;
mod experiment;
mod report;
mod rng;

pub use config::{ExperimentConfig, NamedPolicy, PolicyKind, Workers};
pub use experiment::{
    run_experiment, simulate, AggregateReport, PolicySummary, SubpathLengthStat, Tally,
};
pub use report::{emit_reports, format_sig6, write_order_curves, write_order_table};
pub use rng::substream;
