//! Super-level set measures |{g > λ}| by cell counting.

use crate::{Error, Result};
use serde::Serialize;

/// Measure of {value > λ} over equal cells.
pub fn distribution_function(values: &[f64], cell_measure: f64, lambda: f64) -> Result<f64> {
    check(lambda)?;
    Ok(values.iter().filter(|&&v| v > lambda).count() as f64 * cell_measure)
}

/// Measure of {value > λ} over cells of individual measure.
pub fn distribution_function_weighted(values: &[f64], measures: &[f64], lambda: f64) -> Result<f64> {
    check(lambda)?;
    if values.len() != measures.len() {
        return Err(Error::Domain("one measure per value required".into()));
    }
    Ok(values.iter().zip(measures).filter(|(&v, _)| v > lambda).map(|(_, m)| m).sum())
}

fn check(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

/// Window part plus analytic exterior tail of |{μ(f) > λ}|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionEstimate {
    pub lambda: f64,
    pub window: f64,
    pub tail: f64,
    pub total: f64,
}

impl DistributionEstimate {
    pub fn new(lambda: f64, window: f64, tail: f64) -> Self {
        Self { lambda, window, tail, total: window + tail }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_cells_above_threshold() {
        let v = [3.0, 1.0, 0.5, 0.1];
        assert_eq!(distribution_function(&v, 0.25, 0.9).unwrap(), 0.5);
        assert_eq!(distribution_function(&v, 0.25, 5.0).unwrap(), 0.0);
        assert_eq!(distribution_function(&v, 0.25, 1e-9).unwrap(), 1.0);
        assert!(distribution_function(&v, 0.25, 0.0).is_err());
    }

    #[test]
    fn weighted_counts_match_equal_cells() {
        let v = [3.0, 1.0, 0.5, 0.1];
        let m = [0.25; 4];
        assert_eq!(distribution_function_weighted(&v, &m, 0.9).unwrap(), 0.5);
    }
}
