//! Shared CSV dialect: comma separated, lowercase header, LF endings,
//! 17 significant digits, so files diff bit-exactly and parse back losslessly.

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad float {field:?}: {e}")))
}

pub fn parse_flag(field: &str) -> Result<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse(format!("bad flag {other:?}"))),
    }
}

/// Splits CSV text into a header and data rows, checking the column count.
pub fn read_rows(
    text: &str,
    expected_header: Option<&[&str]>,
) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse("missing header row".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    if let Some(expected) = expected_header {
        if header
            .iter()
            .map(String::as_str)
            .ne(expected.iter().copied())
        {
            return Err(Error::Parse(format!(
                "unexpected header {header:?}, want {expected:?}"
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Recovers the uniform grid whose points print as `xs`, bit for bit.
pub fn grid_from_points(xs: &[f64]) -> Result<crate::Grid> {
    use crate::Grid;
    match xs.len() {
        0 => return Err(Error::Parse("no grid points".into())),
        1 => return Ok(Grid::single(xs[0])),
        _ => {}
    }
    let n = xs.len();
    let spans = [(xs[n - 1] - xs[0]) / (n - 1) as f64, xs[1] - xs[0]];
    for base in spans {
        let mut cand = base;
        for _ in 0..4 {
            cand = cand.next_down();
        }
        for _ in 0..9 {
            let g = Grid {
                min: xs[0],
                step: cand,
                len: n,
            };
            if cand > 0.0 && xs.iter().enumerate().all(|(i, &x)| g.value(i) == x) {
                return Ok(g);
            }
            cand = cand.next_up();
        }
    }
    Err(Error::Parse("grid column is not uniform".into()))
}
