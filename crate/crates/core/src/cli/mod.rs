//! Batch driver: experiment configs, CSV/JSON artifacts and SVG plots.

pub mod config;
pub mod experiment;
pub mod plot;

pub use config::{ConfigError, ExperimentConfig, ScenarioKind};
pub use experiment::{
    run_experiment, run_experiment_file, GroupSummary, Overrides, RunError, RunManifest, Tolerances, MANIFEST_FILE,
    PLOT_FILE, SUMMARY_FILE, TRACE_COLUMNS,
};
pub use plot::{emit_plot, read_summary, render_svg, PlotError, Series, SUMMARY_COLUMNS};
