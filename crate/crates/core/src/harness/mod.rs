//! Scenario files, end-to-end runs of both nodes, and suites.
//!
//! A suite file is TOML with one `[[scenario]]` table per run; see
//! `scenarios/README.md` for the grammar.

mod run;
mod scenario;
mod suite;

pub use run::{
    capture, derive_seed, ideal_throughput_bps, node_tx, run_direction, run_scenario,
    run_scenario_detailed, DirectionRun, NodeTx, ReceiverCapture, ScenarioRun, ACTIVE_MAX_DELAY,
    ACTIVE_PROBE_LEN,
};
pub use scenario::{channel_from, load_suite, parse_suite, Scenario, TapSpec};
pub use suite::{run_suite, write_csv, write_dumps, SuiteOptions, SuiteResult, PSD_NFFT};
