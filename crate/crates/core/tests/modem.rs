use std::f64::consts::{FRAC_1_SQRT_2, PI};

use iptlink::channel::Waveform;
use iptlink::modem::{
    demodulate, envelope_detect, gate_carrier, hf_filter, hf_filter_sections, switch_drive, BitStream, RxParams,
    TxParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn tx() -> TxParams {
    TxParams {
        carrier_freq: 10e3,
        sample_rate: 1e6,
        bit_rate: 250.0,
        vcc: 12.0,
        rc_load: 100.0,
        ic_on: 0.1,
    }
}

/// Receiver matched to a unit-amplitude carrier.
fn rx() -> RxParams {
    let mut p = RxParams {
        hf_cutoff: 20e3,
        envelope_tau: 400e-6,
        envelope_order: 1,
        threshold: 0.0,
        v_logic_high: 5.0,
    };
    p.threshold = 0.3 * p.expected_envelope(1.0, 10e3);
    p
}

fn sine(freq: f64, fs: f64, n: usize) -> Waveform {
    Waveform::new(fs, (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()).unwrap()
}

/// Amplitude over the last `periods` whole periods of `freq`.
fn tail_peak(w: &Waveform, freq: f64, periods: usize) -> f64 {
    let n = (periods as f64 * w.sample_rate() / freq).round() as usize;
    w.samples()[w.len() - n..].iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn one_section_at_cutoff_is_half_power() {
    let p = rx();
    let out = hf_filter_sections(&sine(20e3, 1e6, 20_000), &p, 1).unwrap();
    let g = tail_peak(&out, 20e3, 20);
    assert!((g / FRAC_1_SQRT_2 - 1.0).abs() < 0.01, "gain {g}");
}

#[test]
fn two_sections_a_decade_above_cutoff() {
    // one-pole discretization error grows with f / fs; 10 MHz keeps the
    // 200 kHz tone well inside the band where the analog formula holds
    let p = rx();
    let out = hf_filter(&sine(200e3, 10e6, 100_000), &p).unwrap();
    let g = tail_peak(&out, 200e3, 50);
    let want = 1.0 / 101.0;
    assert!((g / want - 1.0).abs() < 0.10, "gain {g} want {want}");
}

#[test]
fn filter_passes_dc() {
    let out = hf_filter(&Waveform::new(1e6, vec![3.0; 5000]).unwrap(), &rx()).unwrap();
    assert!((out.samples()[4999] - 3.0).abs() < 1e-9);
}

#[test]
fn envelope_of_unit_carrier_is_two_over_pi() {
    let p = rx();
    let carrier = sine(10e3, 1e6, 10_000);
    // skip the noise filter: rectifier and smoother alone
    let env = envelope_detect(&carrier, &p).unwrap();
    let settled = &env.samples()[2000..];
    let mean = settled[settled.len() - 1000..].iter().sum::<f64>() / 1000.0;
    assert!((mean / (2.0 / PI) - 1.0).abs() < 0.05, "mean {mean}");
}

#[test]
fn switch_drive_matches_collector_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let vcc = rng.random_range(3.0..24.0);
        let rc = rng.random_range(10.0..1000.0);
        let ic = rng.random_range(0.0..vcc / rc);
        let p = TxParams {
            vcc,
            rc_load: rc,
            ic_on: ic,
            ..tx()
        };
        let control = Waveform::new(1e6, vec![0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        let out = switch_drive(&control, &p);
        let on = vcc - ic * rc;
        assert_eq!(out.samples(), &[vcc, on, on, vcc, on]);
    }
}

#[test]
fn noiseless_loopback_all_bytes() {
    let (t, r) = (tx(), rx());
    for b in 0..=255u8 {
        let bits = BitStream::from_bytes_lsb_first(&[b]);
        let w = gate_carrier(&bits, &t).unwrap();
        assert_eq!(demodulate(&w, &r, t.bit_rate).unwrap(), bits, "byte {b:#04x}");
    }
}

#[test]
fn ber_at_20_db() {
    let t = tx();
    let r = rx();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let bits = BitStream((0..10_000).map(|_| rng.random()).collect());
    let clean = gate_carrier(&bits, &t).unwrap();
    // carrier power 1/2 over noise power: 20 dB
    let sigma = FRAC_1_SQRT_2 / 10.0;
    let noise = Normal::new(0.0, sigma).unwrap();
    let noisy = clean.map(|x| x + noise.sample(&mut rng));
    let got = demodulate(&noisy, &r, t.bit_rate).unwrap();
    let ber = got.hamming(&bits) as f64 / bits.len() as f64;
    assert!(ber < 1e-3, "ber {ber}");
}

#[test]
fn receive_chain_is_linear_before_rectifier() {
    let p = rx();
    let a = sine(10e3, 1e6, 3000);
    let b = sine(37e3, 1e6, 3000);
    let sum = Waveform::new(1e6, a.samples().iter().zip(b.samples()).map(|(x, y)| 2.0 * x + y).collect()).unwrap();
    let fa = hf_filter(&a, &p).unwrap();
    let fb = hf_filter(&b, &p).unwrap();
    let fs = hf_filter(&sum, &p).unwrap();
    for i in 0..3000 {
        let want = 2.0 * fa.samples()[i] + fb.samples()[i];
        assert!((fs.samples()[i] - want).abs() < 1e-12);
    }
}
