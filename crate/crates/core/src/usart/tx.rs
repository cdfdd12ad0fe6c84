use super::{frame_encode, FrameBits, UsartConfig, UsartError};

/// Transmit-side registers and flags.
///
/// TXIF mirrors an empty TXREG and TRMT mirrors an empty TSR; both are
/// recomputed after every mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxState {
    pub txreg: Option<u8>,
    /// Frame in the shift register and the index of the next bit to send.
    pub tsr: Option<(FrameBits, usize)>,
    pub txif: bool,
    pub trmt: bool,
    pub txen: bool,
    /// Ninth data bit latched into the TSR along with TXREG.
    pub tx9d: bool,
}

impl Default for TxState {
    fn default() -> Self {
        TxState {
            txreg: None,
            tsr: None,
            txif: true,
            trmt: true,
            txen: false,
            tx9d: false,
        }
    }
}

impl TxState {
    fn sync_flags(&mut self) {
        self.txif = self.txreg.is_none();
        self.trmt = self.tsr.is_none();
    }
}

/// Double-buffered asynchronous transmitter.
#[derive(Debug, Clone)]
pub struct UsartTx {
    cfg: UsartConfig,
    state: TxState,
}

impl UsartTx {
    pub fn new(cfg: UsartConfig) -> Self {
        UsartTx {
            cfg,
            state: TxState::default(),
        }
    }

    pub fn state(&self) -> &TxState {
        &self.state
    }

    pub fn is_idle(&self) -> bool {
        self.state.txreg.is_none() && self.state.tsr.is_none()
    }

    /// Writes the ninth bit. Must precede the TXREG write it belongs to.
    pub fn set_tx9d(&mut self, bit: bool) {
        self.state.tx9d = bit;
    }

    /// Writes TXREG. Moves straight into an empty TSR when enabled.
    pub fn load(&mut self, byte: u8) -> Result<(), UsartError> {
        if self.state.txreg.is_some() {
            return Err(UsartError::TxregFull);
        }
        self.state.txreg = Some(byte);
        self.transfer();
        self.state.sync_flags();
        Ok(())
    }

    /// Sets or clears TXEN. Clearing aborts any frame in progress and resets
    /// the transmitter.
    pub fn set_txen(&mut self, enable: bool) {
        self.state.txen = enable;
        if enable {
            self.transfer();
        } else {
            self.state.tsr = None;
            self.state.txreg = None;
        }
        self.state.sync_flags();
    }

    fn transfer(&mut self) {
        if !self.state.txen || self.state.tsr.is_some() {
            return;
        }
        if let Some(byte) = self.state.txreg.take() {
            let ninth = self.cfg.nine_bit.then_some(self.state.tx9d);
            let frame = frame_encode(byte, ninth, &self.cfg).expect("ninth bit follows config");
            self.state.tsr = Some((frame, 0));
        }
    }

    /// Advances one bit period and returns the line level driven during it.
    /// An idle or disabled transmitter leaves the line at mark.
    pub fn tick(&mut self) -> bool {
        let Some((frame, idx)) = self.state.tsr.as_mut() else {
            return true;
        };
        let level = frame.bits()[*idx];
        *idx += 1;
        if *idx == frame.len() {
            self.state.tsr = None;
            self.transfer();
        }
        self.state.sync_flags();
        level
    }
}
