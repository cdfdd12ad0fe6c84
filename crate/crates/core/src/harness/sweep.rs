//! Monte-Carlo bit-error sweeps and the maximum-rate search.
//!
//! A measurement point sends random bytes back to back through the full
//! link (USART framing included) and counts slicer errors on the frame bits.
//! Bytes are the "frames" of a sweep: one is delivered when it reaches the
//! USART receive FIFO intact, in order and without a framing error.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ConfigError, ScenarioConfig};
use super::link::{delivered_count, transmit};
use super::seed::derive_seed;
use super::HarnessError;

/// Lowest bit rate the rate search will try.
pub const MIN_PROBE_RATE: f64 = 50.0;
/// The carrier must fit this many cycles into one bit.
pub const CYCLES_PER_BIT_MIN: f64 = 10.0;
/// Stream index for the payload bytes, shared by every point of a sweep.
const PAYLOAD_STREAM: u64 = 0x5041_594C_4F41_4400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Gap,
    Noise,
    Rate,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Gap => "gap",
            SweepVar::Noise => "noise",
            SweepVar::Rate => "rate",
        }
    }
}

impl FromStr for SweepVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gap" => Ok(SweepVar::Gap),
            "noise" | "noise_rms" => Ok(SweepVar::Noise),
            "rate" | "bit_rate" => Ok(SweepVar::Rate),
            _ => Err(format!("unknown sweep variable `{s}` (gap, noise, rate)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub value: f64,
    pub bits_sent: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub frames_sent: usize,
    pub frames_delivered: usize,
}

/// Bytes needed to carry at least `bits` line bits.
fn payload(master: u64, bits: usize, frame_len: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, PAYLOAD_STREAM));
    (0..bits.div_ceil(frame_len)).map(|_| rng.random()).collect()
}

/// BER and delivery of one configuration.
pub fn measure(cfg: &ScenarioConfig, bits: usize, noise_seed: u64) -> Result<SweepResult, ConfigError> {
    cfg.validate()?;
    let bytes = payload(cfg.link.rng_seed, bits, cfg.usart.frame_len());
    let t = transmit(cfg, &cfg.rx_params(), &bytes, noise_seed, 0.0)?;
    Ok(SweepResult {
        value: f64::NAN,
        bits_sent: t.frame_bits,
        bit_errors: t.bit_errors,
        ber: t.bit_errors as f64 / t.frame_bits as f64,
        frames_sent: bytes.len(),
        frames_delivered: delivered_count(&bytes, &t.received),
    })
}

fn point_config(cfg: &ScenarioConfig, var: SweepVar, value: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    match var {
        SweepVar::Gap => c.link.gap = value,
        SweepVar::Noise => c.link.noise_rms = value,
        SweepVar::Rate => c.tx.bit_rate = value,
    }
    c
}

/// One result per value, in input order. Point `i` draws its noise from
/// `derive_seed(link.rng_seed, i)`; the payload is the same for every point.
pub fn ber_sweep(
    cfg: &ScenarioConfig,
    var: SweepVar,
    values: &[f64],
    bits_per_point: usize,
) -> Result<Vec<SweepResult>, HarnessError> {
    if values.is_empty() {
        return Err(ConfigError::new("sweep.values", "need at least one value").into());
    }
    if bits_per_point < 1000 {
        return Err(ConfigError::new("sweep.bits", "need at least 1000 bits per point").into());
    }
    values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let point = point_config(cfg, var, v);
            let seed = derive_seed(cfg.link.rng_seed, i as u64);
            let mut r = measure(&point, bits_per_point, seed)
                .map_err(|e| ConfigError::new(e.field, format!("at {}={v}: {}", var.name(), e.message)))?;
            r.value = v;
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSearch {
    /// Fastest probed rate meeting the BER ceiling, bits/s.
    pub rate: f64,
    /// Gap to the next faster rate the search could represent, bits/s.
    pub resolution: f64,
    /// Every probe made: (rate, measured BER).
    pub probes: Vec<(f64, f64)>,
}

/// Largest bit rate whose measured BER stays at or below `ber_ceiling`.
///
/// Rates are `sample_rate / n` for whole `n`, between the carrier ceiling
/// (`CYCLES_PER_BIT_MIN` carrier cycles per bit) and [`MIN_PROBE_RATE`].
/// Probe `n` uses noise seed `derive_seed(link.rng_seed, n)`. The search
/// assumes BER falls as bits get longer.
pub fn max_data_rate(cfg: &ScenarioConfig, ber_ceiling: f64, bits: usize) -> Result<RateSearch, HarnessError> {
    if !(ber_ceiling > 0.0 && ber_ceiling < 1.0) {
        return Err(ConfigError::new("ber", "ceiling must be in (0, 1)").into());
    }
    if bits == 0 {
        return Err(ConfigError::new("bits", "must be > 0").into());
    }
    cfg.validate()?;
    let fs = cfg.tx.sample_rate;
    let n_min = (CYCLES_PER_BIT_MIN * fs / cfg.tx.carrier_freq).ceil().max(2.0) as usize;
    let n_max = (fs / MIN_PROBE_RATE).floor() as usize;
    if n_min > n_max {
        return Err(HarnessError::NoFeasibleRate {
            ber_ceiling,
            min_rate: MIN_PROBE_RATE,
        });
    }

    let mut seen: BTreeMap<usize, f64> = BTreeMap::new();
    let mut probe = |n: usize| -> Result<bool, HarnessError> {
        let ber = match seen.get(&n) {
            Some(&b) => b,
            None => {
                let mut c = cfg.clone();
                c.tx.bit_rate = fs / n as f64;
                let b = measure(&c, bits, derive_seed(cfg.link.rng_seed, n as u64))?.ber;
                seen.insert(n, b);
                b
            }
        };
        Ok(ber <= ber_ceiling)
    };

    let (mut lo, mut hi) = (n_min, n_max);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if !probe(lo)? {
        return Err(HarnessError::NoFeasibleRate {
            ber_ceiling,
            min_rate: fs / n_max as f64,
        });
    }
    let rate = fs / lo as f64;
    let resolution = if lo > n_min { fs / (lo - 1) as f64 - rate } else { 0.0 };
    let probes = seen.iter().rev().map(|(&n, &b)| (fs / n as f64, b)).collect();
    Ok(RateSearch {
        rate,
        resolution,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_names_round_trip() {
        for v in [SweepVar::Gap, SweepVar::Noise, SweepVar::Rate] {
            assert_eq!(v.name().parse::<SweepVar>().unwrap(), v);
        }
        assert!("temp".parse::<SweepVar>().is_err());
    }

    #[test]
    fn payload_covers_requested_bits() {
        assert_eq!(payload(1, 1000, 10).len(), 100);
        assert_eq!(payload(1, 1001, 10).len(), 101);
        assert_eq!(payload(1, 1000, 10), payload(1, 1000, 10));
    }

    #[test]
    fn rejects_bad_requests() {
        let cfg = ScenarioConfig::baseline();
        assert!(ber_sweep(&cfg, SweepVar::Gap, &[], 1000).is_err());
        assert!(ber_sweep(&cfg, SweepVar::Gap, &[0.05], 999).is_err());
        assert!(max_data_rate(&cfg, 0.0, 1000).is_err());
        let e = ber_sweep(&cfg, SweepVar::Rate, &[333.0], 1000).unwrap_err();
        assert!(matches!(e, HarnessError::Config(_)));
    }

    #[test]
    fn noiseless_point_is_error_free() {
        let mut cfg = ScenarioConfig::baseline();
        cfg.link.noise_rms = 0.0;
        let r = ber_sweep(&cfg, SweepVar::Gap, &[0.1], 1000).unwrap();
        assert_eq!(r[0].bit_errors, 0);
        assert_eq!(r[0].frames_delivered, r[0].frames_sent);
    }
}
