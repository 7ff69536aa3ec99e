//! CSV traces and empirical rate fitting.

use std::fmt::Write as _;

use crate::error::{check_len, invalid, Result};
use crate::game::TraceRow;

/// Header of match traces.
pub const GAME_TRACE_HEADER: &str =
    "t,eta_row,eta_col,gap,cert_lhs_row,cert_rhs_row,cert_lhs_col,cert_rhs_col";

/// Least-squares slope of `ln value` against `ln horizon`.
pub fn fit_rate(horizons: &[f64], values: &[f64]) -> Result<f64> {
    check_len(horizons.len(), values.len())?;
    if horizons.len() < 3 {
        return Err(invalid("rate fitting needs at least three horizons"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(invalid(format!("values must be positive, got {v}")));
    }
    if let Some(h) = horizons.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
        return Err(invalid(format!("horizons must be positive, got {h}")));
    }
    let xs: Vec<f64> = horizons.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("horizons must not all be equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// `T/8, T/4, T/2, T` without duplicates or zeros.
pub fn rate_horizons(rounds: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [8, 4, 2, 1]
        .iter()
        .map(|k| rounds / k)
        .filter(|t| *t > 0)
        .collect();
    out.dedup();
    out
}

/// Fits the decay of a per-round series sampled at [`rate_horizons`];
/// `None` when fewer than three positive samples exist.
pub fn fit_series(series: &[f64]) -> Option<f64> {
    let horizons = rate_horizons(series.len());
    let values: Vec<f64> = horizons.iter().map(|t| series[t - 1]).collect();
    let hs: Vec<f64> = horizons.iter().map(|t| *t as f64).collect();
    fit_rate(&hs, &values).ok()
}

/// Comma-joined line of `Display`-formatted fields; `f64` prints in
/// shortest round-trip form.
pub fn csv_line<I, T>(fields: I) -> String
where
    I: IntoIterator<Item = T>,
    T: std::fmt::Display,
{
    let mut line = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        write!(line, "{f}").expect("writing to a String");
    }
    line.push('\n');
    line
}

pub fn game_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(GAME_TRACE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_line([
            r.t as f64,
            r.eta_row,
            r.eta_col,
            r.gap,
            r.cert_lhs_row,
            r.cert_rhs_row,
            r.cert_lhs_col,
            r.cert_rhs_col,
        ]));
    }
    out
}
