//! Monte Carlo harness: configuration, per-trial pipeline, sweeps and
//! result files.

mod config;
mod output;
mod sweep;
mod trial;

pub use config::{
    ArrayConfig, LayoutConfig, NoiseConfig, Preset, Profile, ScenarioConfig, SweepAxes, SweepPoint, WaveformConfig,
};
pub use output::{header, read_results, write_plot_script, write_results, write_timing, ResultTable, AXIS_COLUMNS};
pub use sweep::{aggregate, metric_index, sweep, MetricSeries, PointMetrics, Scale, METRICS};
pub use trial::{run_trial, trial_rng, Stream, TrialRecord, Truth, S1_ML, S1_MUSIC, S2_ML, S2_MUSIC};
