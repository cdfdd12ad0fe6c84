//! One direction of the link, end to end: USART transmitter, gated carrier,
//! switching stage, coupled coils, receive chain, USART receiver.
//!
//! The simulation streams one bit period at a time so long runs stay in
//! constant memory. The receiver's x16 clock picks sample
//! `k * spb + round(j * spb / 16)` for sub-sample `j` of bit `k`, where `spb`
//! is the number of samples per bit; the modem slicer reads sample
//! `k * spb + spb / 2`.

use crate::channel::Propagator;
use crate::modem::{carrier_sample, RxChain, RxParams};
use crate::usart::{RxEntry, UsartRx, UsartTx, OVERSAMPLE};

use super::config::{ConfigError, ScenarioConfig};

/// Idle (mark) bit periods sent before the first frame, letting the receive
/// filters settle.
pub const PREAMBLE_BITS: usize = 4;
/// Idle bit periods after the last frame so its stop bit is fully sampled.
pub const POSTAMBLE_BITS: usize = 2;

/// Envelope and slicer decision at the middle of one bit period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitProbe {
    pub time_s: f64,
    pub sent: bool,
    pub envelope: f64,
    pub decided: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    /// Words delivered by the USART receiver, in arrival order.
    pub received: Vec<RxEntry>,
    /// Line bits belonging to frames (excludes preamble and postamble).
    pub frame_bits: usize,
    /// Frame bits the modem slicer got wrong.
    pub bit_errors: usize,
    /// Air time including preamble and postamble.
    pub duration_s: f64,
    pub probes: Vec<BitProbe>,
}

/// Line levels the USART transmitter produces for `bytes`, framed by idle
/// preamble and postamble. Returns the levels and the number of frame bits.
pub fn line_levels(cfg: &ScenarioConfig, bytes: &[u8]) -> (Vec<bool>, usize) {
    let mut tx = UsartTx::new(cfg.usart);
    tx.set_txen(true);
    let mut line = vec![true; PREAMBLE_BITS];
    let mut pending = bytes.iter();
    let mut next = pending.next();
    loop {
        while let (true, Some(&b)) = (tx.state().txif, next) {
            tx.load(b).expect("TXIF set means TXREG is empty");
            next = pending.next();
        }
        if next.is_none() && tx.is_idle() {
            break;
        }
        line.push(tx.tick());
    }
    let frame_bits = line.len() - PREAMBLE_BITS;
    line.extend(std::iter::repeat_n(true, POSTAMBLE_BITS));
    (line, frame_bits)
}

/// Sends `bytes` across the link with the given noise seed.
pub fn transmit(
    cfg: &ScenarioConfig,
    rx_params: &RxParams,
    bytes: &[u8],
    noise_seed: u64,
    start_time_s: f64,
) -> Result<Transmission, ConfigError> {
    let spb = cfg
        .tx
        .samples_per_bit()
        .map_err(|e| ConfigError::new("tx.bit_rate", e.to_string()))?;
    let fs = cfg.tx.sample_rate;
    let (line, frame_bits) = line_levels(cfg, bytes);

    let mut link = cfg.link;
    link.rng_seed = noise_seed;
    let mut channel = Propagator::new(&link, cfg.tx.carrier_freq, cfg.q_factor);
    let mut chain = RxChain::new(rx_params, fs);
    let mut usart = UsartRx::new(cfg.usart);
    let amplitude = cfg.tx.drive_amplitude();

    let sub_offsets: Vec<usize> = (0..OVERSAMPLE as usize)
        .map(|j| ((j * spb) as f64 / OVERSAMPLE as f64).round() as usize)
        .collect();
    let mid = spb / 2;

    let mut block = vec![0.0; spb];
    let mut received = Vec::new();
    let mut bit_errors = 0;
    let mut probes = Vec::new();
    let frame_range = PREAMBLE_BITS..PREAMBLE_BITS + frame_bits;

    for (k, &bit) in line.iter().enumerate() {
        let base = (k * spb) as u64;
        for (i, x) in block.iter_mut().enumerate() {
            *x = if bit {
                amplitude * carrier_sample(base + i as u64, &cfg.tx)
            } else {
                0.0
            };
        }
        channel.process(&mut block);

        let mut next_sub = 0;
        for (i, &x) in block.iter().enumerate() {
            let s = chain.process(x);
            if i == mid {
                if frame_range.contains(&k) && s.logic != bit {
                    bit_errors += 1;
                }
                if cfg.trace_bits {
                    probes.push(BitProbe {
                        time_s: start_time_s + (base + i as u64) as f64 / fs,
                        sent: bit,
                        envelope: s.envelope,
                        decided: s.logic,
                    });
                }
            }
            while next_sub < sub_offsets.len() && sub_offsets[next_sub] == i {
                usart.sample(s.logic);
                while let Ok(entry) = usart.read() {
                    received.push(entry);
                }
                next_sub += 1;
            }
        }
    }

    Ok(Transmission {
        received,
        frame_bits,
        bit_errors,
        duration_s: (line.len() * spb) as f64 / fs,
        probes,
    })
}

/// Number of sent bytes that arrive intact and in order, without framing
/// errors: the longest common subsequence of sent and received words.
pub fn delivered_count(sent: &[u8], received: &[RxEntry]) -> usize {
    let good: Vec<u8> = received.iter().filter(|e| !e.ferr).map(|e| e.byte).collect();
    if good == sent {
        return sent.len();
    }
    let mut row = vec![0usize; good.len() + 1];
    for &s in sent {
        let mut diag = 0;
        for (j, &g) in good.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if s == g { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[good.len()]
}
