//! Sigma sweeps: configuration, replicated runs, aggregation and output.

mod config;
mod output;
mod sweep;

pub use config::{
    log_grid, GridScale, SigmaBounds, SigmaGrid, SweepConfig, AUTO_GRID_D, AUTO_GRID_DELTA,
};
pub use output::{emit_csv, emit_plot, read_csv, CsvRow, CSV_HEADER};
pub use sweep::{
    input_seed, reservoir_seed, run_point, run_sweep, CellOutcome, CellResult, PointRun,
    Provenance, SweepResult, SweepRow,
};
