//! Scenario presets, sweeps, limit reading, bound checks and reports.

pub mod config;
pub mod presets;
pub mod report;
pub mod series;
pub mod sweep;

pub use config::{load_config, parse_config, Config};
pub use presets::{preset, preset_names, run_preset, Overrides, Preset, PresetOutcome};
pub use report::{emit_report, format_g17, read_series_csv, CsvRow};
pub use series::{estimate_limit, BoundCheck, ConvergenceSeries, Plateau, Status};
pub use sweep::{audit_mollifier, audit_space, check_bounds, run_sweep, SweepOutcome};
