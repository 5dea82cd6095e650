//! Benchmark table rows and their CSV form.

use std::path::Path;

use crate::error::{Error, Result};

/// Frozen CSV header of benchmark tables.
pub const CSV_HEADER: &str =
    "alg,gamma,time_s,outer_k,inner_j,backtracks,final_residual,f_final,nonconverged";

/// Means over the converged runs of one (algorithm, γ) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub alg: String,
    pub gamma: f64,
    pub time_s: f64,
    pub outer_k: f64,
    pub inner_j: f64,
    pub backtracks: f64,
    pub final_residual: f64,
    pub f_final: f64,
    /// Runs that hit the iteration cap; excluded from the means.
    pub nonconverged: usize,
}

/// Formats like C's `%g`: six significant digits, trailing zeros trimmed,
/// scientific notation outside `[1e-4, 1e6)`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_csv(rows: &[ReportRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::contract("no report rows to emit"));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.alg,
            fmt_g(r.gamma),
            fmt_g(r.time_s),
            fmt_g(r.outer_k),
            fmt_g(r.inner_j),
            fmt_g(r.backtracks),
            fmt_g(r.final_residual),
            fmt_g(r.f_final),
            r.nonconverged
        ));
    }
    Ok(out)
}

pub fn emit_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    let text = render_csv(rows)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a table written by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::parse("report csv", "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::parse(
                    "report csv",
                    format!("row {}: expected 9 fields", i + 1),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::parse("report csv", format!("row {}: bad number `{s}`", i + 1))
                })
            };
            Ok(ReportRow {
                alg: f[0].to_string(),
                gamma: num(f[1])?,
                time_s: num(f[2])?,
                outer_k: num(f[3])?,
                inner_j: num(f[4])?,
                backtracks: num(f[5])?,
                final_residual: num(f[6])?,
                f_final: num(f[7])?,
                nonconverged: f[8]
                    .parse()
                    .map_err(|_| Error::parse("report csv", format!("row {}: bad count", i + 1)))?,
            })
        })
        .collect()
}
