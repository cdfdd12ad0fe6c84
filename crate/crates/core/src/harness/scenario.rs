//! Poll/reply sessions between the monitor and the motor-side acquisition
//! module.
//!
//! Each cycle the monitor polls; the acquisition module, if it decodes the
//! poll, measures shaft speed with the proximity sensor, classifies faults
//! and replies with a reading (or a fault alarm when any fault is active).
//! The monitor decodes the reply and refreshes its display. A lost poll
//! costs the monitor a reply-length timeout.

use crate::telemetry::{
    classify_faults, decode_message, encode_message, proximity_pulses, render_display,
    speed_from_pulses, tooth_wheel_distance, FaultSet, MsgType, Readings, TelemetryFrame,
};
use crate::usart::actual_baud;

use super::config::{ConfigError, ScenarioConfig};
use super::link::{line_levels, transmit, Transmission};
use super::seed::derive_seed;

/// Largest accepted mismatch between the USART baud rate and the modem bit
/// rate, in percent.
pub const BAUD_TOLERANCE_PCT: f64 = 2.0;

/// One row of the scenario trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time_s: f64,
    pub stage: String,
    pub value: f64,
    pub unit: String,
}

impl TraceRecord {
    pub fn new(time_s: f64, stage: &str, value: f64, unit: &str) -> Self {
        TraceRecord {
            time_s,
            stage: stage.to_string(),
            value,
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub cycles: usize,
    /// Polls and replies put on the air.
    pub frames_sent: usize,
    /// Of those, frames the far end decoded intact.
    pub frames_delivered: usize,
    pub bits_sent: usize,
    pub bit_errors: usize,
    pub ber: f64,
    /// Changes of the fault set shown by the monitor: (time, new mask).
    pub fault_events: Vec<(f64, FaultSet)>,
    pub last_readings: Option<Readings>,
    pub last_faults: FaultSet,
    pub display: [String; 2],
}

struct Tally {
    frames_sent: usize,
    frames_delivered: usize,
    bits_sent: usize,
    bit_errors: usize,
}

impl Tally {
    fn add(&mut self, t: &Transmission, delivered: bool) {
        self.frames_sent += 1;
        self.frames_delivered += delivered as usize;
        self.bits_sent += t.frame_bits;
        self.bit_errors += t.bit_errors;
    }
}

fn received_bytes(t: &Transmission) -> Vec<u8> {
    t.received.iter().filter(|e| !e.ferr).map(|e| e.byte).collect()
}

fn check_baud(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    let baud = actual_baud(&cfg.usart);
    let err = (baud - cfg.tx.bit_rate) / cfg.tx.bit_rate * 100.0;
    if err.abs() > BAUD_TOLERANCE_PCT {
        return Err(ConfigError::new(
            "usart.spbrg",
            format!(
                "USART runs at {baud:.2} baud, {err:+.2}% from tx.bit_rate {}",
                cfg.tx.bit_rate
            ),
        ));
    }
    Ok(())
}

/// Speed the acquisition module measures at time `t`.
fn measure_speed(cfg: &ScenarioConfig, speed_rpm: f64, t: f64, cycle: u64) -> f64 {
    let s = &cfg.sensor;
    let samples = (s.window_s * s.sample_rate).round() as usize + 1;
    let start = (t - s.window_s).max(0.0);
    let distance = tooth_wheel_distance(
        speed_rpm,
        s.teeth,
        start,
        samples,
        s.sample_rate,
        s.proximity.sensing_range,
        s.tooth_depth,
    );
    let mut prox = s.proximity;
    prox.rng_seed = derive_seed(prox.rng_seed, cycle);
    let pulses = proximity_pulses(&distance, &prox);
    speed_from_pulses(&pulses, s.sample_rate, s.teeth, s.window_s)
}

fn trace_bits(traces: &mut Vec<TraceRecord>, t: &Transmission) {
    for p in &t.probes {
        traces.push(TraceRecord::new(p.time_s, "envelope", p.envelope, "V"));
        traces.push(TraceRecord::new(p.time_s, "logic", p.decided as u8 as f64, "bit"));
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(ScenarioReport, Vec<TraceRecord>), ConfigError> {
    cfg.validate()?;
    check_baud(cfg)?;
    let rx_params = cfg.rx_params();
    let spb = cfg.tx.samples_per_bit().expect("validated") as f64;
    let fs = cfg.tx.sample_rate;
    let master = cfg.link.rng_seed;

    let poll = TelemetryFrame::poll().to_bytes();
    let reply_len = encode_message(MsgType::Reading, &Readings::default(), FaultSet::EMPTY)
        .expect("zero readings encode")
        .len();
    let air_time = |bytes: usize| {
        let (line, _) = line_levels(cfg, &vec![0u8; bytes]);
        line.len() as f64 * spb / fs
    };
    let cycle_time = air_time(poll.len()) + air_time(reply_len);

    let mut traces = Vec::new();
    let mut tally = Tally {
        frames_sent: 0,
        frames_delivered: 0,
        bits_sent: 0,
        bit_errors: 0,
    };
    let mut acq_faults = FaultSet::EMPTY;
    let mut shown = Readings::default();
    let mut shown_faults = FaultSet::EMPTY;
    let mut last_readings = None;
    let mut fault_events = Vec::new();
    let mut t = 0.0;
    let mut cycle: u64 = 0;

    while cycle == 0 || t + cycle_time <= cfg.duration_s {
        // monitor -> acquisition
        traces.push(TraceRecord::new(t, "poll_tx", poll.len() as f64, "byte"));
        let sent = transmit(cfg, &rx_params, &poll, derive_seed(master, 2 * cycle), t)?;
        let got = received_bytes(&sent);
        let poll_ok = TelemetryFrame::parse(&got).is_ok_and(|f| f.msg_type == MsgType::Poll);
        tally.add(&sent, poll_ok);
        traces.push(TraceRecord::new(t, "bit_errors", sent.bit_errors as f64, "bit"));
        if cfg.trace_bits {
            trace_bits(&mut traces, &sent);
        }
        t += sent.duration_s;
        traces.push(TraceRecord::new(t, "poll_rx", poll_ok as u8 as f64, "flag"));

        if !poll_ok {
            t += air_time(reply_len);
            cycle += 1;
            continue;
        }

        // acquisition -> monitor
        let truth = cfg.readings_at(t);
        let speed = measure_speed(cfg, truth.speed_rpm, t, cycle);
        traces.push(TraceRecord::new(t, "tach_speed", speed, "rpm"));
        let measured = Readings {
            speed_rpm: speed,
            ..truth
        };
        acq_faults = classify_faults(&measured, &cfg.thresholds, acq_faults);
        let msg_type = if acq_faults.is_empty() {
            MsgType::Reading
        } else {
            MsgType::FaultAlarm
        };
        let reply = encode_message(msg_type, &measured, acq_faults)
            .map_err(|e| ConfigError::new("script", e.to_string()))?;
        traces.push(TraceRecord::new(t, "reply_tx", msg_type as u8 as f64, "type"));
        let sent = transmit(cfg, &rx_params, &reply, derive_seed(master, 2 * cycle + 1), t)?;
        traces.push(TraceRecord::new(t, "bit_errors", sent.bit_errors as f64, "bit"));
        if cfg.trace_bits {
            trace_bits(&mut traces, &sent);
        }
        t += sent.duration_s;

        match decode_message(&received_bytes(&sent)) {
            Ok((_, r, faults)) => {
                tally.add(&sent, true);
                traces.push(TraceRecord::new(t, "rx_frame", 1.0, "flag"));
                traces.push(TraceRecord::new(t, "rx_temp", r.temp_c, "degC"));
                traces.push(TraceRecord::new(t, "rx_speed", r.speed_rpm, "rpm"));
                traces.push(TraceRecord::new(t, "rx_voltage", r.voltage_v, "V"));
                traces.push(TraceRecord::new(t, "rx_current", r.current_a, "A"));
                traces.push(TraceRecord::new(t, "rx_faults", faults.bits() as f64, "mask"));
                if faults != shown_faults {
                    fault_events.push((t, faults));
                    traces.push(TraceRecord::new(t, "fault_event", faults.bits() as f64, "mask"));
                }
                shown = r;
                shown_faults = faults;
                last_readings = Some(r);
            }
            Err(e) => {
                tally.add(&sent, false);
                traces.push(TraceRecord::new(t, "rx_frame", 0.0, "flag"));
                traces.push(TraceRecord::new(t, "frame_error", error_code(&e), "code"));
            }
        }
        cycle += 1;
    }

    let ber = if tally.bits_sent == 0 {
        0.0
    } else {
        tally.bit_errors as f64 / tally.bits_sent as f64
    };
    let report = ScenarioReport {
        cycles: cycle as usize,
        frames_sent: tally.frames_sent,
        frames_delivered: tally.frames_delivered,
        bits_sent: tally.bits_sent,
        bit_errors: tally.bit_errors,
        ber,
        fault_events,
        last_readings,
        last_faults: shown_faults,
        display: render_display(&shown, shown_faults),
    };
    Ok((report, traces))
}

/// Numeric code for a rejected frame in the trace.
pub fn error_code(e: &crate::telemetry::FrameError) -> f64 {
    use crate::telemetry::FrameError::*;
    match e {
        BadSof(_) => 1.0,
        BadVersion(_) => 2.0,
        BadLength { .. } => 3.0,
        BadChecksum(_) => 4.0,
        BadMsgType(_) => 5.0,
        OutOfRange { .. } => 6.0,
    }
}
