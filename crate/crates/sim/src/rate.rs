//! Exponential decay rate of a cost series.

use serde::Serialize;

/// Costs at or below this are treated as converged and end the usable span.
pub const COST_FLOOR: f64 = 4.930380657631324e-24;

/// Fewest samples a fit is attempted on.
pub const MIN_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub window: [f64; 2],
    pub rate: f64,
    pub r_squared: f64,
    pub final_cost: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("tail fraction {0} outside (0, 1]")]
    TailFraction(f64),
    #[error("time and cost series differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("only {0} usable samples in the fit window, need at least {MIN_POINTS}")]
    TooFewPoints(usize),
}

/// Least-squares fit of `ln f = c - rate * t` over the last `tail_fraction`
/// of the usable span.
///
/// The usable span runs from the start up to the first sample at or below
/// [`COST_FLOOR`] (exclusive), so a series that converged to round-off is
/// fitted only where it still carries information.
pub fn fit_exponential_rate(times: &[f64], cost: &[f64], tail_fraction: f64) -> Result<RateReport, RateError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(RateError::TailFraction(tail_fraction));
    }
    if times.len() != cost.len() {
        return Err(RateError::Length(times.len(), cost.len()));
    }
    let usable = cost.iter().position(|&f| !(f > COST_FLOOR)).unwrap_or(cost.len());
    if usable < MIN_POINTS {
        return Err(RateError::TooFewPoints(usable));
    }
    let t0 = times[0];
    let t1 = times[usable - 1];
    let ta = t1 - tail_fraction * (t1 - t0);
    let start = times[..usable].partition_point(|&t| t < ta);
    let (ts, fs) = (&times[start..usable], &cost[start..usable]);
    if ts.len() < MIN_POINTS {
        return Err(RateError::TooFewPoints(ts.len()));
    }

    let n = ts.len() as f64;
    // log costs relative to the first one, so a flat series is exactly flat
    let y0 = fs[0].ln();
    let ys: Vec<f64> = fs.iter().map(|f| f.ln() - y0).collect();
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_res: f64 = ts.iter().zip(&ys).map(|(t, y)| (y - my - slope * (t - mt)).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };

    Ok(RateReport {
        window: [ts[0], ts[ts.len() - 1]],
        rate: -slope,
        r_squared,
        final_cost: *cost.last().expect("non-empty"),
        points: ts.len(),
    })
}
