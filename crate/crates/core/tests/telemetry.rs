use std::f64::consts::PI;

use iptlink::channel::Waveform;
use iptlink::telemetry::{
    classify_faults, decode_frame, decode_message, encode_frame, encode_message, proximity_pulses, render_display,
    speed_from_pulses, speed_quantum, tooth_wheel_distance, FaultSet, MsgType, ProximityParams, Readings, Thresholds,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Readings already on the wire grid, so a round trip must be exact.
fn random_readings(rng: &mut ChaCha8Rng) -> Readings {
    Readings {
        temp_c: rng.random::<i16>() as f64 / 100.0,
        speed_rpm: rng.random::<u16>() as f64,
        voltage_v: rng.random::<u16>() as f64 / 100.0,
        current_a: rng.random::<u16>() as f64 / 1000.0,
    }
}

type Setter = fn(&mut Readings, f64);

fn thresholds() -> Thresholds {
    Thresholds {
        temp_max_c: 80.0,
        speed_max_rpm: 3000.0,
        speed_min_rpm: 300.0,
        volt_max_v: 250.0,
        volt_min_v: 200.0,
        curr_max_a: 5.0,
        hysteresis_fraction: 0.05,
    }
}

#[test]
fn random_states_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let r = random_readings(&mut rng);
        let faults = FaultSet::from_wire(rng.random());
        let kind = if rng.random() { MsgType::Reading } else { MsgType::FaultAlarm };
        let bytes = encode_message(kind, &r, faults).unwrap();
        assert_eq!(decode_message(&bytes).unwrap(), (kind, r, faults));
    }
}

#[test]
fn every_single_byte_corruption_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let r = random_readings(&mut rng);
        let bytes = encode_frame(&r, FaultSet::from_wire(rng.random())).unwrap();
        for pos in 0..bytes.len() {
            for delta in 1..=255u8 {
                let mut bad = bytes.clone();
                bad[pos] = bad[pos].wrapping_add(delta);
                assert!(decode_frame(&bad).is_err(), "pos {pos} delta {delta}");
            }
        }
    }
}

#[test]
fn truncation_is_rejected() {
    let bytes = encode_frame(&Readings::default(), FaultSet::EMPTY).unwrap();
    for n in 0..bytes.len() {
        assert!(decode_frame(&bytes[..n]).is_err());
    }
}

#[test]
fn pulse_count_equals_crossings() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..20 {
        let p = ProximityParams {
            sensing_range: 2e-3,
            hysteresis: rng.random_range(0.05e-3..0.5e-3),
            repeatability_sigma: rng.random_range(0.0..0.01e-3),
            rng_seed: case,
        };
        let f = rng.random_range(0.5..5.0);
        let amp = rng.random_range(0.5e-3..2e-3);
        let fs = 2000.0;
        // whole periods, starting and ending at the far point: one approach
        // per period
        let periods = rng.random_range(1..=12usize);
        let n = (periods as f64 / f * fs).round() as usize;
        let d: Vec<f64> = (0..n)
            .map(|i| p.sensing_range + amp * (2.0 * PI * f * i as f64 / fs).cos())
            .collect();
        let pulses = proximity_pulses(&Waveform::new(fs, d).unwrap(), &p);
        let rising = pulses.bits().windows(2).filter(|w| !w[0] && w[1]).count();
        assert_eq!(rising, periods, "case {case}");
    }
}

#[test]
fn measured_speed_within_one_quantum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = ProximityParams {
        sensing_range: 2e-3,
        hysteresis: 0.2e-3,
        repeatability_sigma: 0.005e-3,
        rng_seed: 9,
    };
    for _ in 0..50 {
        let rpm = rng.random_range(60.0..6000.0);
        let teeth = rng.random_range(1..=12u32);
        let window = rng.random_range(0.25..2.0);
        let start = rng.random_range(0.0..10.0);
        let fs = 50_000.0;
        let d = tooth_wheel_distance(rpm, teeth, start, (window * fs) as usize + 1, fs, 2e-3, 2e-3);
        let got = speed_from_pulses(&proximity_pulses(&d, &p), fs, teeth, window);
        let q = speed_quantum(teeth, window);
        assert!((got - rpm).abs() <= q + 1e-9, "rpm {rpm} got {got} quantum {q}");
    }
}

#[test]
fn oscillation_at_limit_switches_at_most_once() {
    let th = thresholds();
    let base = Readings {
        temp_c: 25.0,
        speed_rpm: 1450.0,
        voltage_v: 230.0,
        current_a: 1.5,
    };
    let cases: [(Setter, f64); 6] = [
        (|r, v| r.temp_c = v, th.temp_max_c),
        (|r, v| r.speed_rpm = v, th.speed_max_rpm),
        (|r, v| r.speed_rpm = v, th.speed_min_rpm),
        (|r, v| r.voltage_v = v, th.volt_max_v),
        (|r, v| r.voltage_v = v, th.volt_min_v),
        (|r, v| r.current_a = v, th.curr_max_a),
    ];
    for (set, limit) in cases {
        let mut prev = FaultSet::EMPTY;
        let mut transitions = 0;
        for i in 0..1000 {
            let mut r = base;
            let wiggle = if i % 2 == 0 { 1.001 } else { 0.999 };
            set(&mut r, limit * wiggle);
            let next = classify_faults(&r, &th, prev);
            transitions += (next != prev) as usize;
            prev = next;
        }
        assert!(transitions <= 1, "limit {limit}: {transitions} transitions");
    }
}

#[test]
fn display_lines_are_sixteen_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let r = random_readings(&mut rng);
        for line in render_display(&r, FaultSet::from_wire(rng.random())) {
            assert_eq!(line.chars().count(), 16, "{line:?}");
        }
    }
}
