//! Least-squares helpers shared by the estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of an ordinary least-squares line fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of x and y.
    pub correlation: f64,
    pub residuals: Vec<f64>,
}

impl LineFit {
    pub fn r_squared(&self) -> f64 {
        self.correlation * self.correlation
    }

    /// Largest absolute residual.
    pub fn residual_spread(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    assert_eq!(x.len(), y.len(), "x and y lengths differ");
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateFit { usable: n, required: 2 });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit { usable: 1, required: 2 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    let residuals = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    Ok(LineFit {
        slope,
        intercept,
        correlation,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15);
        assert!((f.intercept - 2.0).abs() < 1e-15);
        assert!((f.correlation + 1.0).abs() < 1e-15);
        assert!(f.residual_spread() < 1e-15);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(line_fit(&[1.0], &[1.0]), Err(Error::DegenerateFit { .. })));
        assert!(line_fit(&[1.0, 1.0], &[0.0, 2.0]).is_err());
    }
}
