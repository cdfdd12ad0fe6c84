use super::{FaultSet, Readings};

pub const LCD_COLUMNS: usize = 16;

fn fit(mut line: String) -> String {
    line.truncate(LCD_COLUMNS);
    format!("{line:<LCD_COLUMNS$}")
}

/// Text for a 2x16 character display.
///
/// ```text
///   25.0C  1450RPM
/// 230V 1.5A     OK
/// ```
pub fn render_display(r: &Readings, faults: FaultSet) -> [String; 2] {
    let line1 = format!("{:>6.1}C {:>5.0}RPM", r.temp_c, r.speed_rpm);
    let status = if faults.is_empty() {
        "OK".to_string()
    } else {
        format!("FLT:{faults}")
    };
    let line2 = format!("{:>3.0}V{:>4.1}A {:>6}", r.voltage_v, r.current_a, status);
    [fit(line1), fit(line2)]
}
