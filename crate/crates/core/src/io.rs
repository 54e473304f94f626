//! CSV interchange for sampled series: header `time_min,lh_ng_ml`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const CSV_HEADER: [&str; 2] = ["time_min", "lh_ng_ml"];

/// Relative tolerance on the sampling step.
pub const GRID_TOLERANCE: f64 = 1e-6;

pub fn read_series_path(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_series(file)
}

/// Parses a uniformly sampled series; the sampling period is the step
/// between the first two rows.
pub fn read_series<R: Read>(input: R) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::BadHeader(
            header.iter().collect::<Vec<_>>().join(","),
        ));
    }

    let mut times: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    let mut step: Option<f64> = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let parse = |field: &str, what: &str| {
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedRow {
                    line,
                    message: format!("invalid {what} `{field}`"),
                })
        };
        let t = parse(&record[0], "time")?;
        let v = parse(&record[1], "value")?;
        if v < 0.0 {
            return Err(Error::NegativeValue { line, value: v });
        }
        if let Some(&prev) = times.last() {
            let dt = t - prev;
            if dt <= 0.0 {
                return Err(Error::NonMonotoneTime { line, time: t });
            }
            match step {
                None => step = Some(dt),
                Some(expected) => {
                    if (dt - expected).abs() > GRID_TOLERANCE * expected {
                        return Err(Error::NonUniformGrid {
                            line,
                            step: dt,
                            expected,
                        });
                    }
                }
            }
        }
        times.push(t);
        values.push(v);
    }
    let Some(period) = step else {
        return Err(Error::SeriesTooShort {
            len: times.len(),
            required: 2,
        });
    };
    TimeSeries::new(times, values, period)
}

/// Writes the series with shortest round-trip float formatting, so reading
/// the file back reproduces the in-memory values bit for bit.
pub fn write_series<W: Write>(series: &TimeSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for (t, v) in series.times().iter().zip(series.values()) {
        w.write_record([format!("{t:?}"), format!("{v:?}")])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn series_to_csv(series: &TimeSeries) -> String {
    let mut buf = Vec::new();
    write_series(series, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows_give_the_period() {
        let ts = read_series("time_min,lh_ng_ml\n0,1.5\n10,2.5\n".as_bytes()).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts.period(), 10.0);
        assert_eq!(ts.values(), &[1.5, 2.5]);
    }

    #[test]
    fn gap_is_reported_with_its_line() {
        let err = read_series("time_min,lh_ng_ml\n0,1\n10,1\n30,1\n40,1\n".as_bytes()).unwrap_err();
        assert_eq!(
            err,
            Error::NonUniformGrid {
                line: 4,
                step: 20.0,
                expected: 10.0
            }
        );
        assert!(err.to_string().contains("line 4"));
    }

    #[test]
    fn other_row_errors() {
        let cases = [
            ("time_min,lh_ng_ml\n0,1\n10,x\n", "malformed_row"),
            ("time_min,lh_ng_ml\n0,1\n10\n", "malformed_row"),
            ("time_min,lh_ng_ml\n0,1\n0,1\n", "non_monotone_time"),
            ("time_min,lh_ng_ml\n0,1\n10,-0.5\n", "negative_value"),
            ("t,v\n0,1\n10,1\n", "bad_header"),
            ("time_min,lh_ng_ml\n0,1\n", "series_too_short"),
        ];
        for (text, code) in cases {
            let err = read_series(text.as_bytes()).unwrap_err();
            assert_eq!(err.code(), code, "{text:?}: {err}");
        }
    }

    #[test]
    fn step_tolerance_is_relative() {
        let ok = "time_min,lh_ng_ml\n0,1\n10,1\n20.000001,1\n";
        assert!(read_series(ok.as_bytes()).is_ok());
        let bad = "time_min,lh_ng_ml\n0,1\n10,1\n20.001,1\n";
        assert!(read_series(bad.as_bytes()).is_err());
    }

    #[test]
    fn write_then_read_is_identity() {
        let ts =
            TimeSeries::from_grid(1.0, 10.0, vec![0.1, 2.428_870_123_456_7, 1.0 / 3.0]).unwrap();
        let back = read_series(series_to_csv(&ts).as_bytes()).unwrap();
        assert_eq!(back.times(), ts.times());
        assert_eq!(back.values(), ts.values());
    }
}
