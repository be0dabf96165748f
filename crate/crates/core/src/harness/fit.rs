use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(ln eps, ln value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(e, v)| !(*e > 0.0 && *v > 0.0 && e.is_finite() && v.is_finite())) {
        return Err(Error::Fit(format!("points must be positive and finite, got ({}, {})", p.0, p.1)));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all eps values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // a constant series is fitted perfectly by slope 0
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(ScalingFit { slope, intercept, r2, points: points.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [0.2, 0.1, 0.05, 0.025].iter().map(|&e: &f64| (e, 2.0 * e.powf(1.5))).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!((f.intercept - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_slope() {
        let f = fit_power_law(&[(0.2, 3.0), (0.1, 3.0), (0.05, 3.0)]).unwrap();
        assert!(f.slope.abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(fit_power_law(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(fit_power_law(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)]).is_err());
        assert!(fit_power_law(&[(0.1, 1.0), (0.1, 2.0), (0.1, 1.0)]).is_err());
    }
}
