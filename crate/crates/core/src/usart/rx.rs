use std::collections::VecDeque;

use super::{UsartConfig, UsartError};

/// Receiver sub-samples per bit.
pub const OVERSAMPLE: u32 = 16;
const MID_SAMPLE: u32 = OVERSAMPLE / 2;
const FIFO_DEPTH: usize = 2;

/// One received word as held in RCREG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RxEntry {
    pub byte: u8,
    /// Ninth data bit in nine-bit mode.
    pub ninth: Option<bool>,
    /// STOP bit was read as 0.
    pub ferr: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shifter {
    Idle,
    /// Sub-samples elapsed since the falling edge, and data collected so far.
    Receiving { count: u32, data: u16 },
}

/// Receive-side registers and flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RxState {
    rsr: Shifter,
    fifo: VecDeque<RxEntry>,
    pub rcif: bool,
    pub oerr: bool,
    pub ferr_of_head: bool,
    pub cren: bool,
    last_level: bool,
}

impl Default for RxState {
    fn default() -> Self {
        RxState {
            rsr: Shifter::Idle,
            fifo: VecDeque::with_capacity(FIFO_DEPTH),
            rcif: false,
            oerr: false,
            ferr_of_head: false,
            cren: false,
            last_level: true,
        }
    }
}

impl RxState {
    pub fn fifo(&self) -> impl Iterator<Item = &RxEntry> {
        self.fifo.iter()
    }

    pub fn fifo_len(&self) -> usize {
        self.fifo.len()
    }

    /// A frame is being shifted in.
    pub fn is_receiving(&self) -> bool {
        matches!(self.rsr, Shifter::Receiving { .. })
    }

    fn sync_flags(&mut self) {
        self.rcif = !self.fifo.is_empty();
        self.ferr_of_head = self.fifo.front().is_some_and(|e| e.ferr);
    }
}

/// Asynchronous receiver sampling the line sixteen times per bit.
#[derive(Debug, Clone)]
pub struct UsartRx {
    cfg: UsartConfig,
    state: RxState,
}

impl UsartRx {
    /// A receiver with CREN already set.
    pub fn new(cfg: UsartConfig) -> Self {
        let mut rx = UsartRx {
            cfg,
            state: RxState::default(),
        };
        rx.set_cren(true);
        rx
    }

    pub fn state(&self) -> &RxState {
        &self.state
    }

    fn data_bits(&self) -> u32 {
        if self.cfg.nine_bit {
            9
        } else {
            8
        }
    }

    /// Clearing CREN resets the receive logic and clears OERR; the FIFO keeps
    /// its contents.
    pub fn set_cren(&mut self, enable: bool) {
        self.state.cren = enable;
        if !enable {
            self.state.oerr = false;
            self.state.rsr = Shifter::Idle;
        }
    }

    /// Clears OERR by cycling CREN.
    pub fn clear_overrun(&mut self) {
        self.set_cren(false);
        self.set_cren(true);
    }

    /// Feeds one sub-sample of the line.
    pub fn sample(&mut self, level: bool) {
        let prev = std::mem::replace(&mut self.state.last_level, level);
        if !self.state.cren {
            return;
        }
        match self.state.rsr {
            Shifter::Idle => {
                if prev && !level {
                    self.state.rsr = Shifter::Receiving { count: 0, data: 0 };
                }
            }
            Shifter::Receiving { count, data } => {
                let count = count + 1;
                self.state.rsr = Shifter::Receiving { count, data };
                if count % OVERSAMPLE != MID_SAMPLE {
                    return;
                }
                let bit = count / OVERSAMPLE;
                let data_bits = self.data_bits();
                if bit == 0 {
                    if level {
                        // start bit did not hold to mid-bit: glitch
                        self.state.rsr = Shifter::Idle;
                    }
                } else if bit <= data_bits {
                    let data = data | (level as u16) << (bit - 1);
                    self.state.rsr = Shifter::Receiving { count, data };
                } else {
                    self.finish(data, !level);
                }
            }
        }
    }

    fn finish(&mut self, data: u16, ferr: bool) {
        self.state.rsr = Shifter::Idle;
        if self.state.oerr {
            return;
        }
        if self.state.fifo.len() == FIFO_DEPTH {
            self.state.oerr = true;
            return;
        }
        self.state.fifo.push_back(RxEntry {
            byte: data as u8,
            ninth: self.cfg.nine_bit.then_some(data >> 8 & 1 == 1),
            ferr,
        });
        self.state.sync_flags();
    }

    /// Reads RCREG.
    pub fn read(&mut self) -> Result<RxEntry, UsartError> {
        let entry = self.state.fifo.pop_front().ok_or(UsartError::FifoEmpty)?;
        self.state.sync_flags();
        Ok(entry)
    }
}
