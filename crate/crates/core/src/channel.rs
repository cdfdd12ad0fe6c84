//! Inductively coupled link model.
//!
//! The link is reduced to a single real gain per configuration: the open-circuit
//! transformer ratio `M / L1` times the normalized response of the secondary
//! tank at the carrier, followed by additive white Gaussian noise. The carrier
//! is narrowband, so evaluating the tank magnitude at the carrier alone is
//! enough to describe what reaches the receiver.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("waveform contains a non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("input waveform is empty")]
    EmptyInput,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ChannelError {
    ChannelError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Uniformly sampled real-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    sample_rate: f64,
    samples: Vec<f64>,
}

impl Waveform {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self, ChannelError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid("sample_rate", format!("{sample_rate} must be > 0")));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(ChannelError::NonFinite(i));
        }
        Ok(Waveform {
            sample_rate,
            samples,
        })
    }

    /// Builds a waveform whose samples are already known to be finite.
    pub(crate) fn from_parts(sample_rate: f64, samples: Vec<f64>) -> Self {
        debug_assert!(samples.iter().all(|x| x.is_finite()));
        Waveform {
            sample_rate,
            samples,
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum_sq: f64 = self.samples.iter().map(|x| x * x).sum();
        (sum_sq / self.samples.len() as f64).sqrt()
    }

    /// Applies `f` sample-wise, keeping the sample rate.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Waveform {
        Waveform::from_parts(self.sample_rate, self.samples.iter().map(|&x| f(x)).collect())
    }
}

/// Primary drive coil, secondary pickup coil and the pickup tank capacitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilPair {
    /// Primary inductance, henries.
    pub l_primary: f64,
    /// Secondary inductance, henries.
    pub l_secondary: f64,
    /// Secondary tank capacitance, farads.
    pub c_tank: f64,
    /// Coupling coefficient with the coils touching.
    pub k0: f64,
    /// Distance over which coupling falls by a factor of e, meters.
    pub lambda: f64,
}

impl CoilPair {
    pub fn new(
        l_primary: f64,
        l_secondary: f64,
        c_tank: f64,
        k0: f64,
        lambda: f64,
    ) -> Result<Self, ChannelError> {
        let coils = CoilPair {
            l_primary,
            l_secondary,
            c_tank,
            k0,
            lambda,
        };
        coils.validate()?;
        Ok(coils)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = |field, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("{v} must be > 0")))
            }
        };
        positive("l_primary", self.l_primary)?;
        positive("l_secondary", self.l_secondary)?;
        positive("c_tank", self.c_tank)?;
        positive("lambda", self.lambda)?;
        if !(self.k0 > 0.0 && self.k0 <= 1.0) {
            return Err(invalid("k0", format!("{} must be in (0, 1]", self.k0)));
        }
        Ok(())
    }

    /// Tank capacitance that puts the secondary resonance at `freq`.
    pub fn tuning_capacitance(l_secondary: f64, freq: f64) -> f64 {
        let w = 2.0 * PI * freq;
        1.0 / (w * w * l_secondary)
    }

    /// Returns a copy with the tank retuned to resonate at `freq`.
    pub fn tuned_to(self, freq: f64) -> CoilPair {
        CoilPair {
            c_tank: Self::tuning_capacitance(self.l_secondary, freq),
            ..self
        }
    }
}

/// Physical channel state for one direction of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub coils: CoilPair,
    /// Air gap, meters.
    pub gap: f64,
    /// RMS of the additive noise at the pickup, volts.
    pub noise_rms: f64,
    pub rng_seed: u64,
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        self.coils.validate()?;
        if !(self.gap.is_finite() && self.gap >= 0.0) {
            return Err(invalid("gap", format!("{} must be >= 0", self.gap)));
        }
        if !(self.noise_rms.is_finite() && self.noise_rms >= 0.0) {
            return Err(invalid(
                "noise_rms",
                format!("{} must be >= 0", self.noise_rms),
            ));
        }
        Ok(())
    }
}

pub fn coupling_coefficient(gap: f64, coils: &CoilPair) -> f64 {
    coils.k0 * (-gap / coils.lambda).exp()
}

pub fn mutual_inductance(k: f64, coils: &CoilPair) -> f64 {
    k * (coils.l_primary * coils.l_secondary).sqrt()
}

pub fn resonant_frequency(coils: &CoilPair) -> f64 {
    1.0 / (2.0 * PI * (coils.l_secondary * coils.c_tank).sqrt())
}

/// Normalized series-resonant magnitude response of the pickup tank.
///
/// `1 / sqrt(1 + Q^2 (f/f0 - f0/f)^2)`: unity at resonance, half-power points
/// separated by `f0 / Q`.
pub fn tank_gain(freq: f64, coils: &CoilPair, q_factor: f64) -> f64 {
    let f0 = resonant_frequency(coils);
    let detune = freq / f0 - f0 / freq;
    1.0 / (1.0 + q_factor * q_factor * detune * detune).sqrt()
}

/// Voltage gain from the primary drive to the pickup at `carrier_freq`.
///
/// Open-circuit induced voltage is `(M / L1) * V1`; the tank then weights it
/// by its response at the carrier.
pub fn link_gain(link: &LinkParams, carrier_freq: f64, q_factor: f64) -> f64 {
    let k = coupling_coefficient(link.gap, &link.coils);
    let m = mutual_inductance(k, &link.coils);
    (m / link.coils.l_primary) * tank_gain(carrier_freq, &link.coils, q_factor)
}

/// Streaming form of [`propagate`]: owns the noise generator so long
/// transmissions can be pushed through block by block.
#[derive(Debug, Clone)]
pub struct Propagator {
    gain: f64,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl Propagator {
    pub fn new(link: &LinkParams, carrier_freq: f64, q_factor: f64) -> Self {
        let noise = if link.noise_rms > 0.0 {
            Some(Normal::new(0.0, link.noise_rms).expect("noise_rms is finite and positive"))
        } else {
            None
        };
        Propagator {
            gain: link_gain(link, carrier_freq, q_factor),
            noise,
            rng: ChaCha8Rng::seed_from_u64(link.rng_seed),
        }
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn process(&mut self, block: &mut [f64]) {
        match &self.noise {
            Some(noise) => {
                for x in block.iter_mut() {
                    *x = *x * self.gain + noise.sample(&mut self.rng);
                }
            }
            None => {
                for x in block.iter_mut() {
                    *x *= self.gain;
                }
            }
        }
    }
}

/// Turns the primary drive waveform into the voltage seen at the pickup coil.
pub fn propagate(
    tx: &Waveform,
    link: &LinkParams,
    carrier_freq: f64,
    q_factor: f64,
) -> Result<Waveform, ChannelError> {
    if tx.is_empty() {
        return Err(ChannelError::EmptyInput);
    }
    link.validate()?;
    let mut out = tx.samples.clone();
    Propagator::new(link, carrier_freq, q_factor).process(&mut out);
    Ok(Waveform::from_parts(tx.sample_rate, out))
}
