//! Eddy-current proximity sensor on a toothed rotor, and the tachometer that
//! turns its pulses into RPM.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::TelemetryError;
use crate::channel::Waveform;
use crate::modem::BitStream;

/// Inductive sensor limits for hysteresis, meters.
pub const HYSTERESIS_MIN: f64 = 0.03e-3;
pub const HYSTERESIS_MAX: f64 = 3e-3;
/// Worst-case repeatability, meters.
pub const REPEATABILITY_MAX: f64 = 0.01e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximityParams {
    /// Switch distance, meters.
    pub sensing_range: f64,
    /// Width of the band between switch-on and switch-off, meters.
    pub hysteresis: f64,
    /// Standard deviation of the switch point from one crossing to the next.
    pub repeatability_sigma: f64,
    pub rng_seed: u64,
}

impl ProximityParams {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        if !(self.sensing_range.is_finite() && self.sensing_range > 0.0) {
            return Err(TelemetryError::invalid("sensing_range", "must be > 0"));
        }
        if !(HYSTERESIS_MIN..=HYSTERESIS_MAX).contains(&self.hysteresis) {
            return Err(TelemetryError::invalid(
                "hysteresis",
                "must be between 0.03 mm and 3 mm",
            ));
        }
        if !(0.0..=REPEATABILITY_MAX).contains(&self.repeatability_sigma) {
            return Err(TelemetryError::invalid(
                "repeatability_sigma",
                "must be between 0 and 0.01 mm",
            ));
        }
        Ok(())
    }
}

/// Switch output of the sensor: `true` while the target is close enough to
/// stall the oscillator.
///
/// The switch point sits at `sensing_range` with a band of `hysteresis`
/// around it. After every transition the switch point is redrawn with the
/// repeatability scatter, clipped to +-45 % of the band so the on and off
/// points can never cross.
pub fn proximity_pulses(distance: &Waveform, p: &ProximityParams) -> BitStream {
    let mut rng = ChaCha8Rng::seed_from_u64(p.rng_seed);
    let scatter = (p.repeatability_sigma > 0.0)
        .then(|| Normal::new(0.0, p.repeatability_sigma).expect("sigma is finite"));
    let limit = 0.45 * p.hysteresis;
    let mut draw = move || match &scatter {
        Some(n) => p.sensing_range + n.sample(&mut rng).clamp(-limit, limit),
        None => p.sensing_range,
    };
    let half = p.hysteresis / 2.0;
    let mut center = draw();
    let samples = distance.samples();
    let mut on = samples.first().is_some_and(|&d| d < center);
    let mut out = Vec::with_capacity(samples.len());
    for &d in samples {
        if on && d > center + half {
            on = false;
            center = draw();
        } else if !on && d < center - half {
            on = true;
            center = draw();
        }
        out.push(on);
    }
    BitStream(out)
}

/// Distance from the sensor face to a rotor whose teeth pass with a
/// sinusoidal profile: `center + depth/2 * cos(2 pi teeth rpm/60 t)`.
pub fn tooth_wheel_distance(
    speed_rpm: f64,
    teeth: u32,
    start_s: f64,
    samples: usize,
    sample_rate: f64,
    center: f64,
    depth: f64,
) -> Waveform {
    let tooth_rate = speed_rpm / 60.0 * teeth as f64;
    let d = (0..samples)
        .map(|i| {
            let t = start_s + i as f64 / sample_rate;
            let phase = (tooth_rate * t).fract();
            center + 0.5 * depth * (2.0 * PI * phase).cos()
        })
        .collect();
    Waveform::from_parts(sample_rate, d)
}

/// Rising edges of `pulses` inside the trailing `window_s`.
pub fn rising_edges_in_window(pulses: &BitStream, sample_rate: f64, window_s: f64) -> usize {
    let bits = pulses.bits();
    let window = ((window_s * sample_rate).round() as usize).clamp(1, bits.len().max(1));
    let start = bits.len().saturating_sub(window).max(1);
    (start..bits.len()).filter(|&i| bits[i] && !bits[i - 1]).count()
}

/// Tooth-counting tachometer over the trailing `window_s` of `pulses`.
pub fn speed_from_pulses(pulses: &BitStream, sample_rate: f64, teeth: u32, window_s: f64) -> f64 {
    let edges = rising_edges_in_window(pulses, sample_rate, window_s);
    edges as f64 / teeth as f64 * (60.0 / window_s)
}

/// Smallest non-zero step of [`speed_from_pulses`].
pub fn speed_quantum(teeth: u32, window_s: f64) -> f64 {
    60.0 / (teeth as f64 * window_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ProximityParams {
        ProximityParams {
            sensing_range: 2e-3,
            hysteresis: 0.2e-3,
            repeatability_sigma: 0.005e-3,
            rng_seed: 11,
        }
    }

    #[test]
    fn target_out_of_range_gives_zeros() {
        let d = Waveform::new(1e3, vec![5e-3; 500]).unwrap();
        assert!(proximity_pulses(&d, &params()).bits().iter().all(|&b| !b));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let d = tooth_wheel_distance(1500.0, 4, 0.0, 20_000, 20e3, 2e-3, 2e-3);
        let p = ProximityParams {
            repeatability_sigma: 0.0,
            ..params()
        };
        assert_eq!(proximity_pulses(&d, &p), proximity_pulses(&d, &p));
        assert_eq!(proximity_pulses(&d, &params()), proximity_pulses(&d, &params()));
    }

    #[test]
    fn speed_examples() {
        assert_eq!(speed_from_pulses(&BitStream(vec![false; 1000]), 1000.0, 4, 1.0), 0.0);
        // 100 rising edges in one second, 4 teeth
        let bits: Vec<bool> = (0..1000).map(|i| i % 10 >= 5).collect();
        let b = BitStream(bits);
        assert_eq!(speed_from_pulses(&b, 1000.0, 4, 1.0), 1500.0);
        assert_eq!(speed_from_pulses(&b, 1000.0, 8, 1.0), 750.0);
    }

    #[test]
    fn validation_bounds() {
        assert!(params().validate().is_ok());
        assert!(ProximityParams { hysteresis: 5e-3, ..params() }.validate().is_err());
        assert!(ProximityParams { hysteresis: 0.01e-3, ..params() }.validate().is_err());
        assert!(ProximityParams { repeatability_sigma: 0.02e-3, ..params() }.validate().is_err());
    }
}
