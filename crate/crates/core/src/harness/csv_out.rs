//! CSV tables for traces and sweeps.
//!
//! Numbers are rounded to 9 significant digits and written in plain decimal
//! (no exponent); output is UTF-8 with LF line endings.

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use super::scenario::TraceRecord;
use super::sweep::SweepResult;

pub const TRACE_HEADER: [&str; 4] = ["time_s", "stage", "value", "unit"];
pub const SWEEP_HEADER: [&str; 6] = ["var", "bits", "errors", "ber", "frames_sent", "frames_delivered"];

/// `x` rounded to 9 significant digits, in decimal notation.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".to_string();
    }
    rounded.to_string()
}

fn write_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("fields are UTF-8")
}

pub fn emit_trace_csv(records: &[TraceRecord]) -> String {
    write_rows(
        &TRACE_HEADER,
        records.iter().map(|r| {
            vec![
                format_number(r.time_s),
                r.stage.clone(),
                format_number(r.value),
                r.unit.clone(),
            ]
        }),
    )
}

/// The `var` column holds the swept value; the variable's name is not part
/// of the table.
pub fn emit_sweep_csv(results: &[SweepResult]) -> String {
    write_rows(
        &SWEEP_HEADER,
        results.iter().map(|r| {
            vec![
                format_number(r.value),
                r.bits_sent.to_string(),
                r.bit_errors.to_string(),
                format_number(r.ber),
                r.frames_sent.to_string(),
                r.frames_delivered.to_string(),
            ]
        }),
    )
}

#[derive(Debug, thiserror::Error)]
pub enum CsvParseError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: bad field `{field}`")]
    Field { row: usize, field: String },
}

fn read_rows(text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>, CsvParseError> {
    let mut r = ReaderBuilder::new().from_reader(text.as_bytes());
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(CsvParseError::Header(got));
    }
    Ok(r.records().collect::<Result<_, _>>()?)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, row: usize) -> Result<T, CsvParseError> {
    let s = rec.get(i).unwrap_or("");
    s.parse().map_err(|_| CsvParseError::Field {
        row,
        field: s.to_string(),
    })
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>, CsvParseError> {
    read_rows(text, &TRACE_HEADER)?
        .iter()
        .enumerate()
        .map(|(row, rec)| {
            Ok(TraceRecord {
                time_s: field(rec, 0, row)?,
                stage: field(rec, 1, row)?,
                value: field(rec, 2, row)?,
                unit: field(rec, 3, row)?,
            })
        })
        .collect()
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepResult>, CsvParseError> {
    read_rows(text, &SWEEP_HEADER)?
        .iter()
        .enumerate()
        .map(|(row, rec)| {
            Ok(SweepResult {
                value: field(rec, 0, row)?,
                bits_sent: field(rec, 1, row)?,
                bit_errors: field(rec, 2, row)?,
                ber: field(rec, 3, row)?,
                frames_sent: field(rec, 4, row)?,
                frames_delivered: field(rec, 5, row)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(123456789.4), "123456789");
        assert_eq!(format_number(1234567894.0), "1234567890");
        assert_eq!(format_number(2.5e-7), "0.00000025");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(-1.5), "-1.5");
    }

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(emit_trace_csv(&[]), "time_s,stage,value,unit\n");
    }

    #[test]
    fn one_record_two_lines() {
        let text = emit_trace_csv(&[TraceRecord::new(0.5, "rx_temp", 25.0, "degC")]);
        assert_eq!(text, "time_s,stage,value,unit\n0.5,rx_temp,25,degC\n");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn sweep_round_trip() {
        let r = SweepResult {
            value: 0.07,
            bits_sent: 10_000,
            bit_errors: 3,
            ber: 3e-4,
            frames_sent: 1000,
            frames_delivered: 998,
        };
        let text = emit_sweep_csv(&[r]);
        assert_eq!(parse_sweep_csv(&text).unwrap(), vec![r]);
    }
}
