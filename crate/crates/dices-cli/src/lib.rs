//! Library side of the `dices` binary: argument resolution, experiment
//! drivers and CSV reporting on top of `dices-core`.

pub mod experiments;
pub mod inputs;
pub mod report;
pub mod stats;

pub use experiments::{
    exp2_request_sweep, exp2_size_sweep, exp3_compare, exp3_policy_summary, run_many,
    summarize_exp2, summarize_exp3, ClassStat, Exp2Row, Exp3Run, Exp3Table, EXP3_POLICIES,
};
pub use inputs::{load_scenario, load_topology, BUILTIN_SCENARIOS, BUILTIN_TOPOLOGIES};
pub use report::{
    flows_csv, summary_csv, ticks_csv, trace_csv, write_run, FLOWS_HEADER, SUMMARY_HEADER,
    TICKS_HEADER, TRACE_HEADER,
};
pub use stats::{median, ols, LinFit, StatsError};
