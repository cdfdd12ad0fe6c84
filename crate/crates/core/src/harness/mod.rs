//! End-to-end simulation: scenario runner, BER sweeps, rate search and CSV
//! output.

mod config;
mod csv_out;
mod link;
mod scenario;
mod seed;
mod sweep;

pub use config::{section_tau, ConfigError, RxDesign, ScenarioConfig, ScriptStep, SensorConfig};
pub use csv_out::{
    emit_sweep_csv, emit_trace_csv, format_number, parse_sweep_csv, parse_trace_csv, CsvParseError,
    SWEEP_HEADER, TRACE_HEADER,
};
pub use link::{delivered_count, line_levels, transmit, BitProbe, Transmission, POSTAMBLE_BITS, PREAMBLE_BITS};
pub use scenario::{error_code, run_scenario, ScenarioReport, TraceRecord, BAUD_TOLERANCE_PCT};
pub use seed::{derive_seed, splitmix64};
pub use sweep::{
    ber_sweep, max_data_rate, measure, RateSearch, SweepResult, SweepVar, CYCLES_PER_BIT_MIN, MIN_PROBE_RATE,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("no bit rate down to {min_rate:.1} bit/s meets BER <= {ber_ceiling:e}")]
    NoFeasibleRate { ber_ceiling: f64, min_rate: f64 },
}
