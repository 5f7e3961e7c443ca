//! Medians and ordinary least squares, enough for the experiment reports.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("regression needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("regression x values are all equal")]
    DegenerateX,
}

/// Median of the values; even counts average the two middle ones.
/// Panics on an empty slice.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of no values");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy)]
pub struct LinFit {
    pub slope: f64,
    pub intercept: f64,
    /// Fraction of variance explained. Constant y leaves nothing to
    /// explain; that case reports 0 and sets the flag.
    pub r2: f64,
    pub constant_y: bool,
}

pub fn ols(points: &[(f64, f64)]) -> Result<LinFit, StatsError> {
    if points.len() < 3 {
        return Err(StatsError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatsError::DegenerateX);
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if syy == 0.0 {
        return Ok(LinFit {
            slope,
            intercept,
            r2: 0.0,
            constant_y: true,
        });
    }
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    Ok(LinFit {
        slope,
        intercept,
        r2: 1.0 - ssr / syy,
        constant_y: false,
    })
}
