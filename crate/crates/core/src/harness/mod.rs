//! Experiment driver: TOML configs and bundled presets, the
//! TX → fiber → RX → CPR → metrics chain, power-optimized sweeps and result
//! emitters.

mod config;
mod output;
pub mod presets;
mod run;
mod sweep;

pub use config::{
    kernel_key, ChannelModel, Compensation, CprConfig, DmFamily, ExperimentConfig, MetricKind, MetricsConfig,
    PowerConfig, ReceiverConfig, ShapingConfig,
};
pub use output::{emit_results, read_csv, summarize, write_csv, write_long, Manifest, COORDINATE_COLUMNS, RESULT_COLUMNS};
pub use run::{
    ase_es_n0, cached_kernel, kernel_cache_file, load_kernel, run_point, run_transmission, simulate, transmit_frame, Context,
    ExperimentPoint, Metric, Simulation,
};
pub use sweep::{best_powers, run_config, run_sweep};
