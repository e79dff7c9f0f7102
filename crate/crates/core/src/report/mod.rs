//! Experiment configuration, orchestration and CSV/JSON output.

mod config;
mod experiment;
mod figures;
mod format;
mod overhead;

pub use config::{
    comparison_schemes, ExperimentConfig, SchemeSpec, Sweep, SweepVariable, DEFAULT_MAX_DEVICE_SLOTS,
    DEFAULT_OUTPUT_DIR, DEFAULT_SEED, DEFAULT_SLOTS,
};
pub use experiment::{
    evaluate_experiment, expected_served, experiment_cost, run_experiment, run_named, Evaluator, ExperimentOutput,
    PeSource, Point, ResultRow, SchemeResult, RESULT_HEADER,
};
pub use figures::{emit_figure_data, fig5_config, gains_at, Figure, FigureOutput, GainSummary, SchemeGain};
pub use format::{csv_writer, fmt_num, fmt_opt, output_path, timestamp, write_json, write_row, Table, CSV_DIGITS};
pub use overhead::{overhead_report, OverheadReport};

use crate::error::Error;

/// Process exit status for a failed command: 3 when a work budget was
/// exceeded, 2 for everything else.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::TooLargeInstance { .. } | Error::Budget(_) => 3,
        _ => 2,
    }
}
