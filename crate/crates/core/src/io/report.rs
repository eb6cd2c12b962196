//! Plain-text metric reports.
//!
//! One block per named row, blocks separated by a blank line:
//!
//! ```text
//! [original]
//! delta1 = 0.394
//! delta2 = 0.683
//! delta3 = 0.851
//! rel = 0.388
//! log10 = 0.156
//! rmse = 1.167
//! n_images = 654
//! n_pixels = 139345920
//! ```
//!
//! Reals use 6 significant digits with trailing zeros removed (C `%.6g`).

use std::path::Path;

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::metrics::MetricReport;

/// Formats like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let fixed = format!("{:.*}", (5 - exp) as usize, x);
        trim_zeros(&fixed).to_owned()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains(['[', ']', '\n', '\r']) {
        return Err(Error::InvalidConfig(format!("invalid report row name {name:?}")));
    }
    Ok(())
}

pub fn format_report(rows: &[(String, MetricReport)]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Empty("report has no rows"));
    }
    let mut out = String::new();
    for (i, (name, r)) in rows.iter().enumerate() {
        check_name(name)?;
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("[{name}]\n"));
        for (key, value) in [
            ("delta1", r.delta1),
            ("delta2", r.delta2),
            ("delta3", r.delta3),
            ("rel", r.rel),
            ("log10", r.log10),
            ("rmse", r.rmse),
        ] {
            out.push_str(&format!("{key} = {}\n", format_sig6(value)));
        }
        out.push_str(&format!("n_images = {}\n", r.n_images));
        out.push_str(&format!("n_pixels = {}\n", r.n_pixels));
    }
    Ok(out)
}

pub fn write_report(rows: &[(String, MetricReport)], path: impl AsRef<Path>) -> Result<()> {
    let text = format_report(rows)?;
    write_file(path.as_ref(), text.as_bytes())
}

/// Parses a report back into rows (values carry 6 significant digits).
pub fn parse_report(text: &str) -> Result<Vec<(String, MetricReport)>> {
    let bad = |line: usize, msg: String| Error::InvalidConfig(format!("report line {line}: {msg}"));
    let mut rows: Vec<(String, [Option<f64>; 8])> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            rows.push((name.to_owned(), [None; 8]));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(i + 1, format!("expected key = value, got {line:?}")))?;
        let slot = match key.trim() {
            "delta1" => 0,
            "delta2" => 1,
            "delta3" => 2,
            "rel" => 3,
            "log10" => 4,
            "rmse" => 5,
            "n_images" => 6,
            "n_pixels" => 7,
            other => return Err(bad(i + 1, format!("unknown key {other:?}"))),
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| bad(i + 1, format!("bad number {value:?}")))?;
        let row = rows
            .last_mut()
            .ok_or_else(|| bad(i + 1, "value before any [name] header".into()))?;
        row.1[slot] = Some(value);
    }
    rows.into_iter()
        .map(|(name, v)| {
            let get = |k: usize| v[k].ok_or_else(|| Error::InvalidConfig(format!("row {name:?} is missing a field")));
            Ok((
                name.clone(),
                MetricReport {
                    delta1: get(0)?,
                    delta2: get(1)?,
                    delta3: get(2)?,
                    rel: get(3)?,
                    log10: get(4)?,
                    rmse: get(5)?,
                    n_images: get(6)? as usize,
                    n_pixels: get(7)? as usize,
                },
            ))
        })
        .collect()
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<(String, MetricReport)>> {
    let bytes = read_file(path.as_ref())?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::InvalidConfig(format!("report is not UTF-8: {e}")))?;
    parse_report(&text)
}
