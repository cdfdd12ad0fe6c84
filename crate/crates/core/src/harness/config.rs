//! Scenario configuration and its `section.key = value` text form.
//!
//! Units are canonical SI: Hz, s, m, V, A, H, F, ohm. Blank lines and text
//! after `#` are ignored. Keys not given keep their baseline value, with two
//! derived defaults:
//!
//! * `coils.c_tank` defaults to `auto`, tuning the pickup tank to
//!   `tx.carrier_freq`.
//! * Noise is set either by `link.noise_rms` (volts) or by `link.snr_db`,
//!   the carrier-to-noise power ratio at the pickup for the configured gap.
//!   Neither given means 20 dB.
//!
//! `script.step = t, temp_c, speed_rpm, voltage_v, current_a` may be repeated;
//! when present the steps replace the baseline script.

use std::f64::consts::PI;
use std::fmt;

use crate::channel::{self, CoilPair, LinkParams};
use crate::modem::{RxParams, TxParams};
use crate::telemetry::{self, FaultSet, ProximityParams, Readings, Thresholds};
use crate::usart::UsartConfig;

/// Field-level configuration problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
    pub line: Option<usize>,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
            line: None,
        }
    }

    fn at(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Receiver design. Converted to concrete [`RxParams`] per link geometry by
/// [`ScenarioConfig::rx_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxDesign {
    pub hf_cutoff: f64,
    /// Time constant of the single-section envelope filter. Higher orders are
    /// designed to the same carrier-ripple rejection.
    pub envelope_tau: f64,
    /// Comparator threshold as a fraction of the expected envelope.
    pub threshold_fraction: f64,
    pub v_logic_high: f64,
}

/// Speed sensor and tachometer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub proximity: ProximityParams,
    pub teeth: u32,
    pub sample_rate: f64,
    pub window_s: f64,
    /// Peak-to-peak tooth profile, meters.
    pub tooth_depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptStep {
    pub time_s: f64,
    pub readings: Readings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub link: LinkParams,
    pub q_factor: f64,
    pub tx: TxParams,
    pub rx: RxDesign,
    pub usart: UsartConfig,
    pub thresholds: Thresholds,
    pub sensor: SensorConfig,
    pub script: Vec<ScriptStep>,
    pub duration_s: f64,
    /// Envelope filter sections, 1 to 3.
    pub filter_order: usize,
    /// Emit per-bit envelope and decision traces.
    pub trace_bits: bool,
}

/// Per-section time constant of an `order`-section cascade whose attenuation
/// at `ripple_freq` equals that of one section with time constant `tau1`.
///
/// From `(1 + (w t_n)^2)^n = 1 + (w t_1)^2`.
pub fn section_tau(tau1: f64, order: usize, ripple_freq: f64) -> f64 {
    let w = 2.0 * PI * ripple_freq;
    let target = 1.0 + (w * tau1).powi(2);
    (target.powf(1.0 / order as f64) - 1.0).sqrt() / w
}

impl ScenarioConfig {
    /// Declared baseline: 10 kHz carrier at 250 bit/s over a 5 cm gap with a
    /// 20 dB carrier-to-noise ratio at the pickup.
    pub fn baseline() -> Self {
        let carrier = 10_000.0;
        let coils = CoilPair {
            l_primary: 1e-3,
            l_secondary: 1e-3,
            c_tank: CoilPair::tuning_capacitance(1e-3, carrier),
            k0: 0.6,
            lambda: 0.04,
        };
        let mut cfg = ScenarioConfig {
            link: LinkParams {
                coils,
                gap: 0.05,
                noise_rms: 0.0,
                rng_seed: 1,
            },
            q_factor: 10.0,
            tx: TxParams {
                carrier_freq: carrier,
                sample_rate: 1_000_000.0,
                bit_rate: 250.0,
                vcc: 12.0,
                rc_load: 100.0,
                ic_on: 0.1,
            },
            rx: RxDesign {
                hf_cutoff: 20_000.0,
                envelope_tau: 400e-6,
                threshold_fraction: 0.3,
                v_logic_high: 5.0,
            },
            usart: UsartConfig::async_8n1(4_000_000.0, 249, false),
            thresholds: Thresholds {
                temp_max_c: 80.0,
                speed_max_rpm: 3000.0,
                speed_min_rpm: 300.0,
                volt_max_v: 250.0,
                volt_min_v: 200.0,
                curr_max_a: 5.0,
                hysteresis_fraction: 0.05,
            },
            sensor: SensorConfig {
                proximity: ProximityParams {
                    sensing_range: 2e-3,
                    hysteresis: 0.2e-3,
                    repeatability_sigma: 0.005e-3,
                    rng_seed: 7,
                },
                teeth: 4,
                sample_rate: 20_000.0,
                window_s: 1.0,
                tooth_depth: 2e-3,
            },
            script: vec![ScriptStep {
                time_s: 0.0,
                readings: Readings {
                    temp_c: 25.0,
                    speed_rpm: 1450.0,
                    voltage_v: 230.0,
                    current_a: 1.5,
                },
            }],
            duration_s: 10.0,
            filter_order: 1,
            trace_bits: false,
        };
        cfg.link.noise_rms = cfg.noise_rms_for_snr(20.0);
        cfg
    }

    /// Carrier amplitude at the pickup, volts.
    pub fn received_amplitude(&self) -> f64 {
        self.tx.drive_amplitude() * channel::link_gain(&self.link, self.tx.carrier_freq, self.q_factor)
    }

    /// Noise RMS giving `snr_db` of carrier power (`A^2 / 2`) over noise power
    /// at the current gap.
    pub fn noise_rms_for_snr(&self, snr_db: f64) -> f64 {
        self.received_amplitude() / 2f64.sqrt() / 10f64.powf(snr_db / 20.0)
    }

    /// Carrier-to-noise ratio at the pickup, dB.
    pub fn snr_db(&self) -> f64 {
        let signal = self.received_amplitude().powi(2) / 2.0;
        10.0 * (signal / self.link.noise_rms.powi(2)).log10()
    }

    /// Receiver parameters for the current geometry and filter order.
    pub fn rx_params(&self) -> RxParams {
        let tau = section_tau(
            self.rx.envelope_tau,
            self.filter_order,
            2.0 * self.tx.carrier_freq,
        );
        let mut p = RxParams {
            hf_cutoff: self.rx.hf_cutoff,
            envelope_tau: tau,
            envelope_order: self.filter_order,
            threshold: 0.0,
            v_logic_high: self.rx.v_logic_high,
        };
        p.threshold = self.rx.threshold_fraction
            * p.expected_envelope(self.received_amplitude(), self.tx.carrier_freq);
        p
    }

    /// Moves the link to a new carrier frequency, redesigning everything that
    /// is tied to it: the tank is retuned and the noise-filter cutoff and
    /// envelope time constant keep their ratio to the carrier period.
    pub fn with_carrier(&self, carrier_freq: f64) -> Self {
        let ratio = carrier_freq / self.tx.carrier_freq;
        let mut cfg = self.clone();
        cfg.tx.carrier_freq = carrier_freq;
        cfg.link.coils = cfg.link.coils.tuned_to(carrier_freq);
        cfg.rx.hf_cutoff *= ratio;
        cfg.rx.envelope_tau /= ratio;
        cfg
    }

    /// Readings the script holds at time `t`.
    pub fn readings_at(&self, t: f64) -> Readings {
        let idx = self.script.partition_point(|s| s.time_s <= t);
        self.script[idx.saturating_sub(1)].readings
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.link.validate().map_err(|e| ConfigError::new("link", e.to_string()))?;
        self.tx.validate().map_err(|e| ConfigError::new("tx", e.to_string()))?;
        self.thresholds.validate().map_err(|e| ConfigError::new("thresholds", e.to_string()))?;
        self.sensor.proximity.validate().map_err(|e| ConfigError::new("sensor", e.to_string()))?;
        if !(self.q_factor.is_finite() && self.q_factor > 0.0) {
            return Err(ConfigError::new("link.q_factor", "must be > 0"));
        }
        if !(1..=3).contains(&self.filter_order) {
            return Err(ConfigError::new("scenario.filter_order", "must be 1, 2 or 3"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(ConfigError::new("scenario.duration_s", "must be > 0"));
        }
        if !(self.rx.threshold_fraction > 0.0 && self.rx.threshold_fraction < 1.0) {
            return Err(ConfigError::new("rx.threshold_fraction", "must be in (0, 1)"));
        }
        if !(self.usart.fosc.is_finite() && self.usart.fosc > 0.0) {
            return Err(ConfigError::new("usart.fosc", "must be > 0"));
        }
        if self.sensor.teeth == 0 {
            return Err(ConfigError::new("sensor.teeth", "must be >= 1"));
        }
        if !(self.sensor.sample_rate > 0.0 && self.sensor.window_s > 0.0) {
            return Err(ConfigError::new("sensor", "sample_rate and window_s must be > 0"));
        }
        if self.sensor.window_s * self.sensor.sample_rate < 1.0 {
            return Err(ConfigError::new("sensor.window_s", "window shorter than one sample"));
        }
        if self.sensor.tooth_depth.partial_cmp(&self.sensor.proximity.hysteresis) != Some(std::cmp::Ordering::Greater) {
            return Err(ConfigError::new("sensor.tooth_depth", "must exceed the sensor hysteresis"));
        }
        self.rx_params().validate().map_err(|e| ConfigError::new("rx", e.to_string()))?;
        if self.script.is_empty() {
            return Err(ConfigError::new("script", "needs at least one step"));
        }
        for (i, w) in self.script.windows(2).enumerate() {
            if w[1].time_s <= w[0].time_s {
                return Err(ConfigError::new(
                    format!("script.step[{}]", i + 1),
                    "timestamps must be strictly increasing",
                ));
            }
        }
        for (i, step) in self.script.iter().enumerate() {
            let field = format!("script.step[{i}]");
            if !(step.time_s.is_finite() && step.time_s >= 0.0) {
                return Err(ConfigError::new(field, "time must be >= 0"));
            }
            let motor = telemetry::MotorState {
                temp_c: step.readings.temp_c,
                speed_rpm: step.readings.speed_rpm,
                voltage_v: step.readings.voltage_v,
                current_a: step.readings.current_a,
                teeth: self.sensor.teeth,
            };
            motor.validate().map_err(|e| ConfigError::new(field.clone(), e.to_string()))?;
            // leave a tachometer quantum of headroom on the speed field
            let headroom = Readings {
                speed_rpm: step.readings.speed_rpm
                    + telemetry::speed_quantum(self.sensor.teeth, self.sensor.window_s),
                ..step.readings
            };
            telemetry::encode_frame(&headroom, FaultSet::EMPTY)
                .map_err(|e| ConfigError::new(field.clone(), e.to_string()))?;
        }
        Ok(())
    }

    /// Parses the text form on top of [`ScenarioConfig::baseline`].
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::baseline();
        let mut c_tank: Option<f64> = None;
        let mut noise_rms: Option<f64> = None;
        let mut snr_db: Option<f64> = None;
        let mut script = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(line, "expected `section.key = value`").at(lineno))?;
            let key = key.trim();
            let value = value.trim();
            let num = || -> Result<f64, ConfigError> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ConfigError::new(key, format!("`{value}` is not a number")).at(lineno))
            };
            let int = || -> Result<u64, ConfigError> {
                value
                    .parse::<u64>()
                    .map_err(|_| ConfigError::new(key, format!("`{value}` is not an unsigned integer")).at(lineno))
            };
            let flag = || -> Result<bool, ConfigError> {
                match value {
                    "true" | "1" => Ok(true),
                    "false" | "0" => Ok(false),
                    _ => Err(ConfigError::new(key, format!("`{value}` is not a boolean")).at(lineno)),
                }
            };
            match key {
                "coils.l_primary" => cfg.link.coils.l_primary = num()?,
                "coils.l_secondary" => cfg.link.coils.l_secondary = num()?,
                "coils.c_tank" => c_tank = if value == "auto" { None } else { Some(num()?) },
                "coils.k0" => cfg.link.coils.k0 = num()?,
                "coils.lambda" => cfg.link.coils.lambda = num()?,
                "link.gap" => cfg.link.gap = num()?,
                "link.noise_rms" => noise_rms = Some(num()?),
                "link.snr_db" => snr_db = Some(num()?),
                "link.q_factor" => cfg.q_factor = num()?,
                "link.seed" => cfg.link.rng_seed = int()?,
                "tx.carrier_freq" => cfg.tx.carrier_freq = num()?,
                "tx.sample_rate" => cfg.tx.sample_rate = num()?,
                "tx.bit_rate" => cfg.tx.bit_rate = num()?,
                "tx.vcc" => cfg.tx.vcc = num()?,
                "tx.rc_load" => cfg.tx.rc_load = num()?,
                "tx.ic_on" => cfg.tx.ic_on = num()?,
                "rx.hf_cutoff" => cfg.rx.hf_cutoff = num()?,
                "rx.envelope_tau" => cfg.rx.envelope_tau = num()?,
                "rx.threshold_fraction" => cfg.rx.threshold_fraction = num()?,
                "rx.v_logic_high" => cfg.rx.v_logic_high = num()?,
                "usart.fosc" => cfg.usart.fosc = num()?,
                "usart.spbrg" => {
                    cfg.usart.spbrg = u8::try_from(int()?)
                        .map_err(|_| ConfigError::new(key, "must be 0..=255").at(lineno))?
                }
                "usart.brgh" => cfg.usart.brgh = flag()?,
                "usart.sync" => cfg.usart.sync = flag()?,
                "usart.nine_bit" => cfg.usart.nine_bit = flag()?,
                "thresholds.temp_max_c" => cfg.thresholds.temp_max_c = num()?,
                "thresholds.speed_max_rpm" => cfg.thresholds.speed_max_rpm = num()?,
                "thresholds.speed_min_rpm" => cfg.thresholds.speed_min_rpm = num()?,
                "thresholds.volt_max_v" => cfg.thresholds.volt_max_v = num()?,
                "thresholds.volt_min_v" => cfg.thresholds.volt_min_v = num()?,
                "thresholds.curr_max_a" => cfg.thresholds.curr_max_a = num()?,
                "thresholds.hysteresis_fraction" => cfg.thresholds.hysteresis_fraction = num()?,
                "sensor.sensing_range" => cfg.sensor.proximity.sensing_range = num()?,
                "sensor.hysteresis" => cfg.sensor.proximity.hysteresis = num()?,
                "sensor.repeatability_sigma" => cfg.sensor.proximity.repeatability_sigma = num()?,
                "sensor.seed" => cfg.sensor.proximity.rng_seed = int()?,
                "sensor.teeth" => {
                    cfg.sensor.teeth = u32::try_from(int()?)
                        .map_err(|_| ConfigError::new(key, "too large").at(lineno))?
                }
                "sensor.sample_rate" => cfg.sensor.sample_rate = num()?,
                "sensor.window_s" => cfg.sensor.window_s = num()?,
                "sensor.tooth_depth" => cfg.sensor.tooth_depth = num()?,
                "scenario.duration_s" => cfg.duration_s = num()?,
                "scenario.filter_order" => cfg.filter_order = int()? as usize,
                "scenario.trace_bits" => cfg.trace_bits = flag()?,
                "script.step" => {
                    let fields: Result<Vec<f64>, _> =
                        value.split(',').map(|f| f.trim().parse::<f64>()).collect();
                    match fields.as_deref() {
                        Ok(&[time_s, temp_c, speed_rpm, voltage_v, current_a]) => script.push(ScriptStep {
                            time_s,
                            readings: Readings {
                                temp_c,
                                speed_rpm,
                                voltage_v,
                                current_a,
                            },
                        }),
                        _ => {
                            return Err(ConfigError::new(
                                key,
                                "expected `time_s, temp_c, speed_rpm, voltage_v, current_a`",
                            )
                            .at(lineno))
                        }
                    }
                }
                _ => return Err(ConfigError::new(key, "unknown key").at(lineno)),
            }
        }

        cfg.usart = UsartConfig::new(
            cfg.usart.fosc,
            cfg.usart.spbrg,
            cfg.usart.sync,
            cfg.usart.brgh,
            cfg.usart.nine_bit,
        )
        .map_err(|e| ConfigError::new("usart.fosc", e.to_string()))?;
        cfg.link.coils.c_tank = match c_tank {
            Some(c) => c,
            None => CoilPair::tuning_capacitance(cfg.link.coils.l_secondary, cfg.tx.carrier_freq),
        };
        if !script.is_empty() {
            cfg.script = script;
        }
        cfg.link.noise_rms = match (noise_rms, snr_db) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "link.snr_db",
                    "give either link.noise_rms or link.snr_db, not both",
                ))
            }
            (Some(n), None) => n,
            (None, snr) => cfg.noise_rms_for_snr(snr.unwrap_or(20.0)),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
