//! On-off keyed transmitter and envelope receiver.
//!
//! Transmit side: a unit-amplitude carrier gated by the data bits, and the
//! switching transistor that drives the primary coil. Receive side: a
//! two-section RC noise filter, rectifier plus RC envelope filter, and a
//! hysteretic level converter producing logic levels.
//!
//! All filters are first-order sections discretized with the exact
//! exponential mapping `y[n] = a y[n-1] + (1 - a) x[n]`, `a = exp(-1/(fs tau))`,
//! so step and decay responses match the analog RC values at every sample.

use std::f64::consts::PI;

use thiserror::Error;

use crate::channel::Waveform;

#[derive(Debug, Error, PartialEq)]
pub enum ModemError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("bit stream is empty")]
    EmptyBitStream,
    #[error("input waveform is empty")]
    EmptyInput,
    #[error("waveform of {samples} samples does not cover a whole number of {samples_per_bit}-sample bit periods")]
    LengthMismatch {
        samples: usize,
        samples_per_bit: usize,
    },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModemError {
    ModemError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Comparator hysteresis as a fraction of the threshold.
pub const HYSTERESIS_FRACTION: f64 = 0.1;

/// Number of samples in one bit period, when that number is integral.
pub fn samples_per_bit(sample_rate: f64, bit_rate: f64) -> Result<usize, ModemError> {
    if !(bit_rate.is_finite() && bit_rate > 0.0) {
        return Err(invalid("bit_rate", format!("{bit_rate} must be > 0")));
    }
    let spb = sample_rate / bit_rate;
    let rounded = spb.round();
    if rounded < 1.0 || (spb - rounded).abs() > 1e-9 * spb.max(1.0) {
        return Err(invalid(
            "bit_rate",
            format!("sample_rate / bit_rate = {spb} is not a whole number of samples"),
        ));
    }
    Ok(rounded as usize)
}

/// Transmitter settings: carrier generator and switching stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxParams {
    pub carrier_freq: f64,
    pub sample_rate: f64,
    pub bit_rate: f64,
    /// Supply voltage, volts.
    pub vcc: f64,
    /// Collector load, ohms.
    pub rc_load: f64,
    /// Collector current when the transistor conducts, amperes.
    pub ic_on: f64,
}

impl TxParams {
    pub fn validate(&self) -> Result<(), ModemError> {
        let positive = |field, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("{v} must be > 0")))
            }
        };
        positive("carrier_freq", self.carrier_freq)?;
        positive("sample_rate", self.sample_rate)?;
        positive("bit_rate", self.bit_rate)?;
        positive("vcc", self.vcc)?;
        positive("rc_load", self.rc_load)?;
        if !(self.ic_on.is_finite() && self.ic_on >= 0.0) {
            return Err(invalid("ic_on", format!("{} must be >= 0", self.ic_on)));
        }
        if self.sample_rate < 20.0 * self.carrier_freq {
            return Err(invalid(
                "sample_rate",
                "must be at least 20x the carrier frequency",
            ));
        }
        if self.carrier_freq < 10.0 * self.bit_rate {
            return Err(invalid(
                "carrier_freq",
                "must be at least 10x the bit rate",
            ));
        }
        if self.vcc - self.ic_on * self.rc_load < 0.0 {
            return Err(invalid("ic_on", "vcc - ic_on * rc_load must be >= 0"));
        }
        samples_per_bit(self.sample_rate, self.bit_rate)?;
        Ok(())
    }

    pub fn samples_per_bit(&self) -> Result<usize, ModemError> {
        samples_per_bit(self.sample_rate, self.bit_rate)
    }

    /// Collector voltage with the transistor conducting.
    pub fn v_on(&self) -> f64 {
        self.vcc - self.ic_on * self.rc_load
    }

    /// Voltage swing the switching stage puts across the load, `Ic * Rc`.
    pub fn drive_amplitude(&self) -> f64 {
        self.vcc - self.v_on()
    }
}

/// Receiver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxParams {
    /// Cutoff of each of the two noise-filter sections, hertz.
    pub hf_cutoff: f64,
    /// Time constant of each envelope filter section, seconds.
    pub envelope_tau: f64,
    /// Number of cascaded envelope filter sections (1 to 3).
    pub envelope_order: usize,
    /// Comparator switch point, volts.
    pub threshold: f64,
    /// Level converter high output, volts.
    pub v_logic_high: f64,
}

impl RxParams {
    pub fn validate(&self) -> Result<(), ModemError> {
        if !(self.hf_cutoff.is_finite() && self.hf_cutoff > 0.0) {
            return Err(invalid("hf_cutoff", format!("{} must be > 0", self.hf_cutoff)));
        }
        if !(self.envelope_tau.is_finite() && self.envelope_tau > 0.0) {
            return Err(invalid(
                "envelope_tau",
                format!("{} must be > 0", self.envelope_tau),
            ));
        }
        if !(1..=3).contains(&self.envelope_order) {
            return Err(invalid(
                "envelope_order",
                format!("{} must be 1, 2 or 3", self.envelope_order),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < self.v_logic_high) {
            return Err(invalid(
                "threshold",
                "must satisfy 0 < threshold < v_logic_high",
            ));
        }
        Ok(())
    }

    /// Steady-state envelope for a received carrier of `amplitude` volts.
    ///
    /// The carrier passes both noise-filter sections, is rectified (mean of
    /// `|sin|` is `2/pi`) and the envelope sections have unity DC gain.
    pub fn expected_envelope(&self, amplitude: f64, carrier_freq: f64) -> f64 {
        let r = carrier_freq / self.hf_cutoff;
        let section = 1.0 / (1.0 + r * r).sqrt();
        amplitude * section * section * 2.0 / PI
    }
}

/// Ordered logic bits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitStream(pub Vec<bool>);

impl BitStream {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Bits of `bytes`, least significant bit first.
    pub fn from_bytes_lsb_first(bytes: &[u8]) -> Self {
        BitStream(
            bytes
                .iter()
                .flat_map(|b| (0..8).map(move |i| b >> i & 1 == 1))
                .collect(),
        )
    }

    /// Number of positions where `self` and `other` differ, plus the length
    /// difference.
    pub fn hamming(&self, other: &BitStream) -> usize {
        let common = self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count();
        common + self.0.len().abs_diff(other.0.len())
    }
}

impl From<Vec<bool>> for BitStream {
    fn from(bits: Vec<bool>) -> Self {
        BitStream(bits)
    }
}

/// Carrier sample at absolute sample index `n`. Driven from the global index
/// so the phase runs on continuously across consecutive one-bits.
#[inline]
pub fn carrier_sample(n: u64, p: &TxParams) -> f64 {
    let cycles = (n as f64 * p.carrier_freq / p.sample_rate).fract();
    (2.0 * PI * cycles).sin()
}

/// Gates a unit carrier with `bits`: carrier during ones, exactly zero during
/// zeros.
pub fn gate_carrier(bits: &BitStream, p: &TxParams) -> Result<Waveform, ModemError> {
    if bits.is_empty() {
        return Err(ModemError::EmptyBitStream);
    }
    p.validate()?;
    let spb = p.samples_per_bit()?;
    let mut out = Vec::with_capacity(bits.len() * spb);
    for (k, &bit) in bits.bits().iter().enumerate() {
        let start = (k * spb) as u64;
        if bit {
            out.extend((0..spb as u64).map(|i| carrier_sample(start + i, p)));
        } else {
            out.extend(std::iter::repeat_n(0.0, spb));
        }
    }
    Ok(Waveform::from_parts(p.sample_rate, out))
}

/// Collector voltage of the switching transistor.
pub fn switch_drive(control: &Waveform, p: &TxParams) -> Waveform {
    let v_on = p.v_on();
    control.map(|c| if c > 0.0 { v_on } else { p.vcc })
}

/// First-order low-pass section.
#[derive(Debug, Clone, Copy)]
pub struct OnePole {
    a: f64,
    state: f64,
}

impl OnePole {
    pub fn new(tau: f64, sample_rate: f64) -> Self {
        OnePole {
            a: (-1.0 / (sample_rate * tau)).exp(),
            state: 0.0,
        }
    }

    pub fn with_cutoff(cutoff: f64, sample_rate: f64) -> Self {
        Self::new(1.0 / (2.0 * PI * cutoff), sample_rate)
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.state = self.a * self.state + (1.0 - self.a) * x;
        self.state
    }
}

/// Cascade of identical first-order sections.
#[derive(Debug, Clone)]
pub struct Cascade {
    sections: Vec<OnePole>,
}

impl Cascade {
    pub fn new(section: OnePole, order: usize) -> Self {
        Cascade {
            sections: vec![section; order],
        }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |acc, s| s.process(acc))
    }

    pub fn run(&mut self, input: &Waveform) -> Waveform {
        Waveform::from_parts(
            input.sample_rate(),
            input.samples().iter().map(|&x| self.process(x)).collect(),
        )
    }
}

/// Hysteretic comparator driving the level converter.
#[derive(Debug, Clone, Copy)]
pub struct Comparator {
    rise: f64,
    fall: f64,
    high: bool,
}

impl Comparator {
    pub fn new(threshold: f64) -> Self {
        Comparator {
            rise: threshold * (1.0 + HYSTERESIS_FRACTION),
            fall: threshold * (1.0 - HYSTERESIS_FRACTION),
            high: false,
        }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> bool {
        if self.high {
            if x < self.fall {
                self.high = false;
            }
        } else if x > self.rise {
            self.high = true;
        }
        self.high
    }
}

/// Two-section RC noise filter with both sections at `hf_cutoff`.
pub fn hf_filter(rx: &Waveform, p: &RxParams) -> Result<Waveform, ModemError> {
    hf_filter_sections(rx, p, 2)
}

/// Noise filter with an explicit section count.
pub fn hf_filter_sections(
    rx: &Waveform,
    p: &RxParams,
    sections: usize,
) -> Result<Waveform, ModemError> {
    if rx.is_empty() {
        return Err(ModemError::EmptyInput);
    }
    let section = OnePole::with_cutoff(p.hf_cutoff, rx.sample_rate());
    Ok(Cascade::new(section, sections).run(rx))
}

/// Rectifies then smooths with `p.envelope_order` RC sections.
pub fn envelope_detect(filtered: &Waveform, p: &RxParams) -> Result<Waveform, ModemError> {
    if filtered.is_empty() {
        return Err(ModemError::EmptyInput);
    }
    let section = OnePole::new(p.envelope_tau, filtered.sample_rate());
    let mut lp = Cascade::new(section, p.envelope_order);
    Ok(Waveform::from_parts(
        filtered.sample_rate(),
        filtered
            .samples()
            .iter()
            .map(|&x| lp.process(x.abs()))
            .collect(),
    ))
}

/// Maps the envelope to `0` or `v_logic_high` with a +-10 % hysteresis band.
pub fn level_convert(env: &Waveform, p: &RxParams) -> Waveform {
    let mut cmp = Comparator::new(p.threshold);
    env.map(|x| if cmp.process(x) { p.v_logic_high } else { 0.0 })
}

/// One output sample of the receive chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxSample {
    pub filtered: f64,
    pub envelope: f64,
    pub logic: bool,
}

/// Sample-by-sample receive chain: noise filter, envelope detector and level
/// converter. Produces exactly what the waveform-level functions do.
#[derive(Debug, Clone)]
pub struct RxChain {
    hf: Cascade,
    envelope: Cascade,
    comparator: Comparator,
}

impl RxChain {
    pub fn new(p: &RxParams, sample_rate: f64) -> Self {
        RxChain {
            hf: Cascade::new(OnePole::with_cutoff(p.hf_cutoff, sample_rate), 2),
            envelope: Cascade::new(OnePole::new(p.envelope_tau, sample_rate), p.envelope_order),
            comparator: Comparator::new(p.threshold),
        }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> RxSample {
        let filtered = self.hf.process(x);
        let envelope = self.envelope.process(filtered.abs());
        let logic = self.comparator.process(envelope);
        RxSample {
            filtered,
            envelope,
            logic,
        }
    }
}

/// Full receive chain with a mid-bit slicer.
pub fn demodulate(rx: &Waveform, p: &RxParams, bit_rate: f64) -> Result<BitStream, ModemError> {
    if rx.is_empty() {
        return Err(ModemError::EmptyInput);
    }
    p.validate()?;
    let spb = samples_per_bit(rx.sample_rate(), bit_rate)?;
    if !rx.len().is_multiple_of(spb) {
        return Err(ModemError::LengthMismatch {
            samples: rx.len(),
            samples_per_bit: spb,
        });
    }
    let mut chain = RxChain::new(p, rx.sample_rate());
    let mid = spb / 2;
    let mut bits = Vec::with_capacity(rx.len() / spb);
    for (i, &x) in rx.samples().iter().enumerate() {
        let s = chain.process(x);
        if i % spb == mid {
            bits.push(s.logic);
        }
    }
    Ok(BitStream(bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx() -> TxParams {
        TxParams {
            carrier_freq: 10_000.0,
            sample_rate: 1_000_000.0,
            bit_rate: 250.0,
            vcc: 12.0,
            rc_load: 100.0,
            ic_on: 0.1,
        }
    }

    fn rx() -> RxParams {
        let mut p = RxParams {
            hf_cutoff: 20_000.0,
            envelope_tau: 400e-6,
            envelope_order: 1,
            threshold: 1.0,
            v_logic_high: 5.0,
        };
        p.threshold = 0.3 * p.expected_envelope(1.0, 10_000.0);
        p
    }

    #[test]
    fn gate_all_zero_bits() {
        let w = gate_carrier(&BitStream(vec![false; 3]), &tx()).unwrap();
        assert_eq!(w.len(), 12_000);
        assert!(w.samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gate_single_one_has_forty_cycles() {
        let w = gate_carrier(&BitStream(vec![true]), &tx()).unwrap();
        // rising zero crossings: sample at index 0 is exactly 0, count sign
        // changes from non-positive to positive
        let s = w.samples();
        let rising = (1..s.len()).filter(|&i| s[i - 1] <= 0.0 && s[i] > 0.0).count();
        assert_eq!(rising, 40);
    }

    #[test]
    fn gate_one_then_zero() {
        let w = gate_carrier(&BitStream(vec![true, false]), &tx()).unwrap();
        let (first, second) = w.samples().split_at(4000);
        assert!(first.iter().any(|&x| x != 0.0));
        assert!(second.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gate_phase_continuous_across_ones() {
        let p = tx();
        let w = gate_carrier(&BitStream(vec![true, true]), &p).unwrap();
        let s = w.samples();
        for (n, &x) in s.iter().enumerate() {
            let expect = (2.0 * PI * p.carrier_freq * n as f64 / p.sample_rate).sin();
            assert!((x - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn gate_empty_is_error() {
        assert_eq!(
            gate_carrier(&BitStream::default(), &tx()),
            Err(ModemError::EmptyBitStream)
        );
    }

    #[test]
    fn switch_drive_levels() {
        let p = tx();
        let control = Waveform::new(1.0, vec![1.0, 0.0, 1.0, -1.0]).unwrap();
        let out = switch_drive(&control, &p);
        assert_eq!(out.samples(), &[2.0, 12.0, 2.0, 12.0]);

        let off = TxParams { ic_on: 0.0, ..p };
        let out = switch_drive(&control, &off);
        assert!(out.samples().iter().all(|&v| v == 12.0));
    }

    #[test]
    fn tx_params_invariants() {
        assert!(tx().validate().is_ok());
        assert!(TxParams { sample_rate: 100_000.0, ..tx() }.validate().is_err());
        assert!(TxParams { bit_rate: 2000.0, ..tx() }.validate().is_err());
        assert!(TxParams { ic_on: 0.2, ..tx() }.validate().is_err());
        assert!(TxParams { bit_rate: 300.0, ..tx() }.validate().is_err());
    }

    #[test]
    fn rx_params_invariants() {
        assert!(rx().validate().is_ok());
        assert!(RxParams { threshold: 6.0, ..rx() }.validate().is_err());
        assert!(RxParams { envelope_order: 0, ..rx() }.validate().is_err());
        assert!(RxParams { envelope_order: 4, ..rx() }.validate().is_err());
    }

    #[test]
    fn hf_filter_dc_gain_is_one() {
        let w = Waveform::new(1e6, vec![1.5; 20_000]).unwrap();
        let out = hf_filter(&w, &rx()).unwrap();
        assert!((out.samples().last().unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn envelope_zero_in_zero_out() {
        let w = Waveform::new(1e6, vec![0.0; 1000]).unwrap();
        let out = envelope_detect(&w, &rx()).unwrap();
        assert!(out.samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn envelope_burst_decay() {
        let p = RxParams {
            threshold: 0.1,
            ..rx()
        };
        let fs = 1e6;
        let burst = 5000;
        let tail = 1200; // 3 tau at 1 MHz
        let samples: Vec<f64> = (0..burst + tail)
            .map(|n| {
                if n < burst {
                    (2.0 * PI * 10_000.0 * n as f64 / fs).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let env = envelope_detect(&Waveform::new(fs, samples).unwrap(), &p).unwrap();
        let peak = env.samples().iter().cloned().fold(0.0, f64::max);
        let end = *env.samples().last().unwrap();
        assert!(end < 0.05 * peak, "end {end} peak {peak}");
    }

    #[test]
    fn level_convert_trivial_cases() {
        let p = rx();
        let zeros = Waveform::new(1.0, vec![0.0; 50]).unwrap();
        assert!(level_convert(&zeros, &p).samples().iter().all(|&x| x == 0.0));
        let high = Waveform::new(1.0, vec![2.0 * p.threshold; 50]).unwrap();
        assert!(level_convert(&high, &p)
            .samples()
            .iter()
            .all(|&x| x == p.v_logic_high));
    }

    #[test]
    fn level_convert_ramp_single_transition_each_way() {
        let p = rx();
        let n = 1000;
        let ramp: Vec<f64> = (0..=2 * n)
            .map(|i| {
                let u = if i <= n { i } else { 2 * n - i } as f64 / n as f64;
                2.0 * p.threshold * u
            })
            .collect();
        let out = level_convert(&Waveform::new(1.0, ramp).unwrap(), &p);
        let s = out.samples();
        let rises = (1..s.len()).filter(|&i| s[i] > s[i - 1]).count();
        let falls = (1..s.len()).filter(|&i| s[i] < s[i - 1]).count();
        assert_eq!((rises, falls), (1, 1));
    }

    #[test]
    fn demodulate_zero_waveform() {
        let w = Waveform::new(1e6, vec![0.0; 4000 * 5]).unwrap();
        let bits = demodulate(&w, &rx(), 250.0).unwrap();
        assert_eq!(bits, BitStream(vec![false; 5]));
    }

    #[test]
    fn demodulate_length_mismatch() {
        let w = Waveform::new(1e6, vec![0.0; 4001]).unwrap();
        assert_eq!(
            demodulate(&w, &rx(), 250.0),
            Err(ModemError::LengthMismatch {
                samples: 4001,
                samples_per_bit: 4000
            })
        );
    }

    #[test]
    fn chain_matches_waveform_functions() {
        let p = rx();
        let bits = BitStream::from_bytes_lsb_first(&[0x3c, 0xa5]);
        let w = gate_carrier(&bits, &tx()).unwrap();
        let staged = level_convert(
            &envelope_detect(&hf_filter(&w, &p).unwrap(), &p).unwrap(),
            &p,
        );
        let mut chain = RxChain::new(&p, w.sample_rate());
        for (&x, &y) in w.samples().iter().zip(staged.samples()) {
            let logic = chain.process(x).logic;
            assert_eq!(if logic { p.v_logic_high } else { 0.0 }, y);
        }
    }
}
