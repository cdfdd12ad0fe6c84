//! Application layer: motor readings, the telemetry wire frame, fault
//! classification, the speed sensor and the character display.

mod display;
mod faults;
mod frame;
mod sensor;

pub use display::{render_display, LCD_COLUMNS};
pub use faults::{classify_faults, FaultSet, Thresholds};
pub use frame::{
    decode_frame, decode_message, encode_frame, encode_message, FrameError, MsgType,
    TelemetryFrame, READING_PAYLOAD_LEN, SOF, VERSION,
};
pub use sensor::{
    proximity_pulses, rising_edges_in_window, speed_from_pulses, speed_quantum,
    tooth_wheel_distance, ProximityParams,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TelemetryError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

impl TelemetryError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        TelemetryError::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

/// The four monitored quantities, as carried on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Readings {
    pub temp_c: f64,
    pub speed_rpm: f64,
    pub voltage_v: f64,
    pub current_a: f64,
}

/// Motor as seen by the acquisition module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorState {
    pub temp_c: f64,
    pub speed_rpm: f64,
    pub voltage_v: f64,
    pub current_a: f64,
    /// Targets on the rotor passing the speed sensor per revolution.
    pub teeth: u32,
}

impl MotorState {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        let values = [self.temp_c, self.speed_rpm, self.voltage_v, self.current_a];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TelemetryError::invalid("motor", "readings must be finite"));
        }
        if self.speed_rpm < 0.0 {
            return Err(TelemetryError::invalid("speed_rpm", "must be >= 0"));
        }
        if self.teeth == 0 {
            return Err(TelemetryError::invalid("teeth", "must be >= 1"));
        }
        Ok(())
    }

    pub fn readings(&self) -> Readings {
        Readings {
            temp_c: self.temp_c,
            speed_rpm: self.speed_rpm,
            voltage_v: self.voltage_v,
            current_a: self.current_a,
        }
    }
}
