use std::io::Write;
use std::path::Path;

use super::create;
use super::pfm::locate;
use crate::error::Result;
use crate::eval::MetricRow;

pub const METRICS_HEADER: &str = "name,abs_rel,sq_rel,rmse,rmse_log,d125,d125_2,d125_3";

/// Formats like C's `%.6g`: six significant digits, trailing zeros dropped.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_metrics_csv_to<W: Write>(rows: &[MetricRow], mut out: W) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in rows {
        let cols = [r.abs_rel, r.sq_rel, r.rmse, r.rmse_log, r.d1, r.d2, r.d3];
        let cols: Vec<String> = cols.iter().map(|&v| format_sig6(v)).collect();
        writeln!(out, "{},{}", r.name, cols.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_metrics_csv(rows: &[MetricRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_metrics_csv_to(rows, create(path)?).map_err(|e| locate(path, e))
}
