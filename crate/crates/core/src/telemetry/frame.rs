//! Wire format.
//!
//! ```text
//! [0] 0xAA  [1] 0x01  [2] msg_type  [3] N  [4..4+N) payload  [4+N] checksum
//! ```
//!
//! The checksum makes the byte sum of the whole frame 0 mod 256. A reading
//! payload is nine bytes, all little-endian: temperature `i16` in 0.01 degC,
//! speed `u16` in RPM, voltage `u16` in 0.01 V, current `u16` in mA, then the
//! fault mask.

use thiserror::Error;

use super::{FaultSet, Readings};

pub const SOF: u8 = 0xAA;
pub const VERSION: u8 = 0x01;
pub const READING_PAYLOAD_LEN: usize = 9;
const HEADER_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    Reading = 0x01,
    Poll = 0x02,
    FaultAlarm = 0x03,
}

impl TryFrom<u8> for MsgType {
    type Error = FrameError;

    fn try_from(v: u8) -> Result<Self, FrameError> {
        match v {
            0x01 => Ok(MsgType::Reading),
            0x02 => Ok(MsgType::Poll),
            0x03 => Ok(MsgType::FaultAlarm),
            other => Err(FrameError::BadMsgType(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("bad start-of-frame byte 0x{0:02X}")]
    BadSof(u8),
    #[error("unsupported version 0x{0:02X}")]
    BadVersion(u8),
    #[error("frame length {actual} does not match header (expected {expected})")]
    BadLength { expected: usize, actual: usize },
    #[error("checksum mismatch (byte sum 0x{0:02X})")]
    BadChecksum(u8),
    #[error("unknown message type 0x{0:02X}")]
    BadMsgType(u8),
    #[error("{field} = {value} does not fit its fixed-point field")]
    OutOfRange { field: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TelemetryFrame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

fn byte_sum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0u8, |acc, &b| acc.wrapping_add(b))
}

impl TelemetryFrame {
    pub fn poll() -> Self {
        TelemetryFrame {
            msg_type: MsgType::Poll,
            payload: Vec::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len() + 1);
        out.extend([SOF, VERSION, self.msg_type as u8, self.payload.len() as u8]);
        out.extend(&self.payload);
        out.push(byte_sum(&out).wrapping_neg());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < HEADER_LEN + 1 {
            return Err(FrameError::BadLength {
                expected: HEADER_LEN + 1,
                actual: bytes.len(),
            });
        }
        let expected = HEADER_LEN + bytes[3] as usize + 1;
        if bytes.len() != expected {
            return Err(FrameError::BadLength {
                expected,
                actual: bytes.len(),
            });
        }
        let sum = byte_sum(bytes);
        if sum != 0 {
            return Err(FrameError::BadChecksum(sum));
        }
        if bytes[0] != SOF {
            return Err(FrameError::BadSof(bytes[0]));
        }
        if bytes[1] != VERSION {
            return Err(FrameError::BadVersion(bytes[1]));
        }
        Ok(TelemetryFrame {
            msg_type: MsgType::try_from(bytes[2])?,
            payload: bytes[HEADER_LEN..expected - 1].to_vec(),
        })
    }
}

fn fixed<T: TryFrom<i64>>(field: &'static str, value: f64, scale: f64) -> Result<T, FrameError> {
    let scaled = (value * scale).round();
    if !scaled.is_finite() {
        return Err(FrameError::OutOfRange { field, value });
    }
    T::try_from(scaled as i64).map_err(|_| FrameError::OutOfRange { field, value })
}

fn reading_payload(r: &Readings, faults: FaultSet) -> Result<Vec<u8>, FrameError> {
    let temp: i16 = fixed("temp_c", r.temp_c, 100.0)?;
    let speed: u16 = fixed("speed_rpm", r.speed_rpm, 1.0)?;
    let volt: u16 = fixed("voltage_v", r.voltage_v, 100.0)?;
    let curr: u16 = fixed("current_a", r.current_a, 1000.0)?;
    let mut p = Vec::with_capacity(READING_PAYLOAD_LEN);
    p.extend(temp.to_le_bytes());
    p.extend(speed.to_le_bytes());
    p.extend(volt.to_le_bytes());
    p.extend(curr.to_le_bytes());
    p.push(faults.bits());
    Ok(p)
}

/// Encodes a reading (or fault-alarm) frame.
pub fn encode_message(msg_type: MsgType, r: &Readings, faults: FaultSet) -> Result<Vec<u8>, FrameError> {
    Ok(TelemetryFrame {
        msg_type,
        payload: reading_payload(r, faults)?,
    }
    .to_bytes())
}

/// Encodes a reading frame.
pub fn encode_frame(r: &Readings, faults: FaultSet) -> Result<Vec<u8>, FrameError> {
    encode_message(MsgType::Reading, r, faults)
}

/// Parses a reading or fault-alarm frame back into readings.
pub fn decode_frame(bytes: &[u8]) -> Result<(Readings, FaultSet), FrameError> {
    decode_message(bytes).map(|(_, r, f)| (r, f))
}

/// Like [`decode_frame`], also returning the message type.
pub fn decode_message(bytes: &[u8]) -> Result<(MsgType, Readings, FaultSet), FrameError> {
    let frame = TelemetryFrame::parse(bytes)?;
    let p = &frame.payload;
    if frame.msg_type == MsgType::Poll || p.len() != READING_PAYLOAD_LEN {
        return Err(FrameError::BadLength {
            expected: HEADER_LEN + READING_PAYLOAD_LEN + 1,
            actual: bytes.len(),
        });
    }
    let le = |i: usize| [p[i], p[i + 1]];
    let readings = Readings {
        temp_c: i16::from_le_bytes(le(0)) as f64 / 100.0,
        speed_rpm: u16::from_le_bytes(le(2)) as f64,
        voltage_v: u16::from_le_bytes(le(4)) as f64 / 100.0,
        current_a: u16::from_le_bytes(le(6)) as f64 / 1000.0,
    };
    Ok((frame.msg_type, readings, FaultSet::from_wire(p[8])))
}
