//! PIC16F877-style USART: baud-rate generator, NRZ framing, double-buffered
//! transmitter and x16-oversampled receiver with a two-deep FIFO.

mod rx;
mod tx;

pub use rx::{RxEntry, RxState, UsartRx, OVERSAMPLE};
pub use tx::{TxState, UsartTx};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UsartError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("no SPBRG value in 0..=255 gives {target} baud (ideal X = {ideal:.3})")]
    DivisorOutOfRange { target: f64, ideal: f64 },
    #[error("ninth bit must be given exactly when nine-bit mode is enabled")]
    NinthBitMismatch,
    #[error("TXREG already holds an unsent byte")]
    TxregFull,
    #[error("receive FIFO is empty")]
    FifoEmpty,
}

/// Oscillator and mode bits that set the baud rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsartConfig {
    pub fosc: f64,
    pub spbrg: u8,
    pub sync: bool,
    pub brgh: bool,
    pub nine_bit: bool,
}

impl UsartConfig {
    /// Builds a config, clearing BRGH in synchronous mode where it is ignored.
    pub fn new(fosc: f64, spbrg: u8, sync: bool, brgh: bool, nine_bit: bool) -> Result<Self, UsartError> {
        if !(fosc.is_finite() && fosc > 0.0) {
            return Err(UsartError::InvalidParameter {
                field: "fosc",
                reason: format!("{fosc} must be > 0"),
            });
        }
        Ok(UsartConfig {
            fosc,
            spbrg,
            sync,
            brgh: brgh && !sync,
            nine_bit,
        })
    }

    /// Async mode at 8 data bits with the given divisor.
    pub fn async_8n1(fosc: f64, spbrg: u8, brgh: bool) -> Self {
        UsartConfig {
            fosc,
            spbrg,
            sync: false,
            brgh,
            nine_bit: false,
        }
    }

    /// Oscillator cycles per bit divided by `X + 1`.
    pub fn divisor(&self) -> u32 {
        mode_divisor(self.sync, self.brgh)
    }

    /// Line bits per frame: start, 8 or 9 data, stop.
    pub fn frame_len(&self) -> usize {
        if self.nine_bit {
            11
        } else {
            10
        }
    }
}

fn mode_divisor(sync: bool, brgh: bool) -> u32 {
    match (sync, brgh) {
        (true, _) => 4,
        (false, false) => 64,
        (false, true) => 16,
    }
}

/// Baud rate produced by the generator for `cfg`.
pub fn actual_baud(cfg: &UsartConfig) -> f64 {
    cfg.fosc / (cfg.divisor() as f64 * (cfg.spbrg as f64 + 1.0))
}

/// Result of a divisor search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrgChoice {
    pub spbrg: u8,
    pub actual: f64,
    /// `100 * (actual - target) / target`.
    pub error_pct: f64,
}

/// Nearest SPBRG value for `target` baud.
pub fn brg_divisor(fosc: f64, target: f64, sync: bool, brgh: bool) -> Result<BrgChoice, UsartError> {
    if !(target.is_finite() && target > 0.0) {
        return Err(UsartError::InvalidParameter {
            field: "target",
            reason: format!("{target} must be > 0"),
        });
    }
    let cfg = UsartConfig::new(fosc, 0, sync, brgh, false)?;
    let ideal = fosc / (cfg.divisor() as f64 * target) - 1.0;
    let x = ideal.round();
    if !(0.0..=255.0).contains(&x) {
        return Err(UsartError::DivisorOutOfRange { target, ideal });
    }
    let cfg = UsartConfig {
        spbrg: x as u8,
        ..cfg
    };
    let actual = actual_baud(&cfg);
    Ok(BrgChoice {
        spbrg: cfg.spbrg,
        actual,
        error_pct: 100.0 * (actual - target) / target,
    })
}

/// Free-running baud-rate timer counted in oscillator cycles.
///
/// Writing SPBRG clears the timer, so the next shift clock lands one full new
/// period after the write.
#[derive(Debug, Clone)]
pub struct BaudRateGenerator {
    cfg: UsartConfig,
    elapsed: u64,
}

impl BaudRateGenerator {
    pub fn new(cfg: UsartConfig) -> Self {
        BaudRateGenerator { cfg, elapsed: 0 }
    }

    pub fn config(&self) -> &UsartConfig {
        &self.cfg
    }

    /// Oscillator cycles per bit.
    pub fn period_cycles(&self) -> u64 {
        self.cfg.divisor() as u64 * (self.cfg.spbrg as u64 + 1)
    }

    pub fn cycles_to_next_shift(&self) -> u64 {
        self.period_cycles() - self.elapsed
    }

    /// Runs for `cycles` oscillator cycles; returns the number of shift clocks.
    pub fn advance(&mut self, cycles: u64) -> u64 {
        let period = self.period_cycles();
        let total = self.elapsed + cycles;
        self.elapsed = total % period;
        total / period
    }

    pub fn write_spbrg(&mut self, spbrg: u8) {
        self.cfg.spbrg = spbrg;
        self.elapsed = 0;
    }
}

/// One asynchronous frame as line levels, `true` = mark (1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameBits(pub Vec<bool>);

impl FrameBits {
    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Start bit clear and stop bit set.
    pub fn is_well_formed(&self) -> bool {
        self.0.first() == Some(&false) && self.0.last() == Some(&true)
    }
}

/// START, data LSb first, optional ninth bit, STOP.
pub fn frame_encode(byte: u8, ninth: Option<bool>, cfg: &UsartConfig) -> Result<FrameBits, UsartError> {
    if ninth.is_some() != cfg.nine_bit {
        return Err(UsartError::NinthBitMismatch);
    }
    let mut bits = Vec::with_capacity(cfg.frame_len());
    bits.push(false);
    bits.extend((0..8).map(|i| byte >> i & 1 == 1));
    bits.extend(ninth);
    bits.push(true);
    Ok(FrameBits(bits))
}
