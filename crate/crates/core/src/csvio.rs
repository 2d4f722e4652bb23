//! CSV helpers: 17-significant-digit floats (round-trip exact for f64),
//! LF line endings, locale-independent parsing.

use crate::error::{Error, Result};
use crate::point::Point;
use std::io::Write;
use std::path::Path;

/// Fixed-width scientific format with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_f64(s: &str, line: usize) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse::<f64>().map_err(|e| Error::Parse {
            line,
            reason: format!("bad float {s:?}: {e}"),
        }),
    }
}

/// One point per row, no header.
pub fn write_points_csv(path: impl AsRef<Path>, points: &[Point]) -> Result<()> {
    let mut buf = Vec::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
        buf.write_all(row.join(",").as_bytes())?;
        buf.push(b'\n');
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let text = std::fs::read_to_string(path)?;
    parse_points_csv(&text)
}

pub fn parse_points_csv(text: &str) -> Result<Vec<Point>> {
    let mut pts = Vec::new();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let p: Result<Point> = line
            .split(',')
            .map(|tok| parse_f64(tok.trim(), i + 1))
            .collect();
        let p = p?;
        match dim {
            None => dim = Some(p.len()),
            Some(d) if d != p.len() => {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("row has {} fields, expected {d}", p.len()),
                })
            }
            _ => {}
        }
        pts.push(p);
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_exactly() {
        for v in [0.05, -1.0 / 3.0, 1e-300, 123456.789, 0.0] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s}");
        }
    }

    #[test]
    fn points_csv_round_trip() {
        let pts = vec![vec![0.1, -2.5], vec![3.0, 4.0]];
        let dir = std::env::temp_dir().join("modeseek_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pts.csv");
        write_points_csv(&path, &pts).unwrap();
        let back = read_points_csv(&path).unwrap();
        assert_eq!(pts, back);
    }

    #[test]
    fn ragged_rows_are_reported_with_line_numbers() {
        let res = parse_points_csv("1.0,2.0\n3.0\n");
        match res {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
