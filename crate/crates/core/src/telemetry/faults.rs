use std::fmt;

use super::{Readings, TelemetryError};

/// Motor fault flags as carried in the last payload byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FaultSet(u8);

impl FaultSet {
    pub const EMPTY: FaultSet = FaultSet(0);
    pub const OVERTEMP: FaultSet = FaultSet(1 << 0);
    pub const OVERSPEED: FaultSet = FaultSet(1 << 1);
    pub const UNDERSPEED: FaultSet = FaultSet(1 << 2);
    pub const OVERVOLTAGE: FaultSet = FaultSet(1 << 3);
    pub const UNDERVOLTAGE: FaultSet = FaultSet(1 << 4);
    pub const OVERCURRENT: FaultSet = FaultSet(1 << 5);
    const DEFINED: u8 = 0x3F;

    /// Builds from a wire byte, dropping the reserved bits 6 and 7.
    pub fn from_wire(bits: u8) -> Self {
        FaultSet(bits & Self::DEFINED)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: FaultSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn set(&mut self, flag: FaultSet, on: bool) {
        if on {
            self.0 |= flag.0;
        } else {
            self.0 &= !flag.0;
        }
    }
}

impl std::ops::BitOr for FaultSet {
    type Output = FaultSet;

    fn bitor(self, rhs: FaultSet) -> FaultSet {
        FaultSet(self.0 | rhs.0)
    }
}

impl fmt::Display for FaultSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02X}", self.0)
    }
}

/// Fault limits. Each flag latches when its limit is crossed and releases
/// once the reading is back inside by `hysteresis_fraction` of the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub temp_max_c: f64,
    pub speed_max_rpm: f64,
    pub speed_min_rpm: f64,
    pub volt_max_v: f64,
    pub volt_min_v: f64,
    pub curr_max_a: f64,
    pub hysteresis_fraction: f64,
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        let all = [
            self.temp_max_c,
            self.speed_max_rpm,
            self.speed_min_rpm,
            self.volt_max_v,
            self.volt_min_v,
            self.curr_max_a,
            self.hysteresis_fraction,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(TelemetryError::invalid("thresholds", "all limits must be finite"));
        }
        if self.speed_max_rpm <= self.speed_min_rpm {
            return Err(TelemetryError::invalid(
                "speed_max_rpm",
                "must exceed speed_min_rpm",
            ));
        }
        if self.volt_max_v <= self.volt_min_v {
            return Err(TelemetryError::invalid("volt_max_v", "must exceed volt_min_v"));
        }
        if !(self.hysteresis_fraction > 0.0 && self.hysteresis_fraction < 0.5) {
            return Err(TelemetryError::invalid(
                "hysteresis_fraction",
                "must be in (0, 0.5)",
            ));
        }
        Ok(())
    }
}

fn upper(value: f64, limit: f64, h: f64, was_set: bool) -> bool {
    value > limit || (was_set && value >= limit - limit.abs() * h)
}

fn lower(value: f64, limit: f64, h: f64, was_set: bool) -> bool {
    value < limit || (was_set && value <= limit + limit.abs() * h)
}

pub fn classify_faults(r: &Readings, th: &Thresholds, prev: FaultSet) -> FaultSet {
    let h = th.hysteresis_fraction;
    let checks = [
        (FaultSet::OVERTEMP, upper(r.temp_c, th.temp_max_c, h, prev.contains(FaultSet::OVERTEMP))),
        (FaultSet::OVERSPEED, upper(r.speed_rpm, th.speed_max_rpm, h, prev.contains(FaultSet::OVERSPEED))),
        (FaultSet::UNDERSPEED, lower(r.speed_rpm, th.speed_min_rpm, h, prev.contains(FaultSet::UNDERSPEED))),
        (FaultSet::OVERVOLTAGE, upper(r.voltage_v, th.volt_max_v, h, prev.contains(FaultSet::OVERVOLTAGE))),
        (FaultSet::UNDERVOLTAGE, lower(r.voltage_v, th.volt_min_v, h, prev.contains(FaultSet::UNDERVOLTAGE))),
        (FaultSet::OVERCURRENT, upper(r.current_a, th.curr_max_a, h, prev.contains(FaultSet::OVERCURRENT))),
    ];
    let mut out = FaultSet::EMPTY;
    for (flag, on) in checks {
        out.set(flag, on);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th() -> Thresholds {
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

    fn nominal() -> Readings {
        Readings {
            temp_c: 25.0,
            speed_rpm: 1450.0,
            voltage_v: 230.0,
            current_a: 1.5,
        }
    }

    #[test]
    fn nominal_is_clear() {
        assert_eq!(classify_faults(&nominal(), &th(), FaultSet::EMPTY), FaultSet::EMPTY);
    }

    #[test]
    fn overtemp_sets_bit() {
        let r = Readings {
            temp_c: 81.0,
            ..nominal()
        };
        assert_eq!(classify_faults(&r, &th(), FaultSet::EMPTY), FaultSet::OVERTEMP);
    }

    #[test]
    fn each_limit_maps_to_its_bit() {
        let cases = [
            (Readings { speed_rpm: 3100.0, ..nominal() }, 0x02),
            (Readings { speed_rpm: 0.0, ..nominal() }, 0x04),
            (Readings { voltage_v: 260.0, ..nominal() }, 0x08),
            (Readings { voltage_v: 190.0, ..nominal() }, 0x10),
            (Readings { current_a: 6.0, ..nominal() }, 0x20),
        ];
        for (r, bits) in cases {
            assert_eq!(classify_faults(&r, &th(), FaultSet::EMPTY).bits(), bits);
        }
    }

    #[test]
    fn latched_fault_releases_past_band() {
        let t = th();
        let set = FaultSet::OVERTEMP;
        let inside = Readings { temp_c: 77.0, ..nominal() };
        assert_eq!(classify_faults(&inside, &t, set), set);
        let clear = Readings { temp_c: 75.9, ..nominal() };
        assert_eq!(classify_faults(&clear, &t, set), FaultSet::EMPTY);

        let low = FaultSet::UNDERVOLTAGE;
        let near = Readings { voltage_v: 205.0, ..nominal() };
        assert_eq!(classify_faults(&near, &t, low), low);
        let ok = Readings { voltage_v: 211.0, ..nominal() };
        assert_eq!(classify_faults(&ok, &t, low), FaultSet::EMPTY);
    }

    #[test]
    fn reserved_bits_dropped() {
        assert_eq!(FaultSet::from_wire(0xFF).bits(), 0x3F);
    }

    #[test]
    fn threshold_validation() {
        assert!(th().validate().is_ok());
        assert!(Thresholds { speed_min_rpm: 4000.0, ..th() }.validate().is_err());
        assert!(Thresholds { hysteresis_fraction: 0.5, ..th() }.validate().is_err());
    }
}
