//! Closed-form bound formulas, both sides of the dynamical inequalities,
//! and finite-time exponent estimators.

mod exponents;
mod report;
mod rhs;

pub use exponents::{
    spreading_profile, transport_exponents, SlopeWindow, SpreadingProfile, TransportExponents, DEFAULT_THRESHOLD_INF,
    DEFAULT_THRESHOLD_ZERO,
};
pub use report::{
    alpha_product_trend, band_power_law, envelope_fit, front_distance, lower_bound_chain, sandwich_report,
    theorem1_envelope, BoundReport, ChainConfig, Comparison, EnvelopeConfig, EnvelopeFit, EnvelopePoint,
    FittedConstants, ProductTrend, SandwichConfig,
};
pub use rhs::{lemma2_rhs, theorem1_rhs, Estimate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::GOLDEN_MEAN;
use crate::tracemap::lambda_zero;

/// `S_l(λ) = ((λ−4) + √((λ−4)² − 12)) / 2`.
pub fn s_lower(lambda: f64) -> Result<f64> {
    let a = lambda - 4.0;
    let disc = a * a - 12.0;
    if disc < 0.0 || a < 0.0 {
        return Err(Error::domain(format!("S_l needs λ ≥ 4 + 2√3, got {lambda}")));
    }
    Ok(0.5 * (a + disc.sqrt()))
}

/// `S_u(λ) = 2λ + 22`.
pub fn s_upper(lambda: f64) -> f64 {
    2.0 * lambda + 22.0
}

/// `2 ln φ / ln S_l(λ)`.
pub fn alpha_upper(lambda: f64) -> Result<f64> {
    Ok(2.0 * GOLDEN_MEAN.ln() / s_lower(lambda)?.ln())
}

/// `2 ln φ / ln S_u(λ)`.
pub fn alpha_lower(lambda: f64) -> Result<f64> {
    check_lower_domain(lambda)?;
    Ok(2.0 * GOLDEN_MEAN.ln() / s_upper(lambda).ln())
}

/// `s = ln S_u / (2 ln φ)`.
pub fn spreading_scale(lambda: f64) -> f64 {
    s_upper(lambda).ln() / (2.0 * GOLDEN_MEAN.ln())
}

/// Zero-phase lower bound on `β⁻(p)`:
/// `2 ln φ / ln S_u − (2/p)(1 − 2 ln(√17/4) / (5 ln S_u))`.
pub fn beta_lower_zero_phase(lambda: f64, p: f64) -> Result<f64> {
    check_lower_domain(lambda)?;
    if !(p > 0.0) {
        return Err(Error::domain(format!("moment order p must be positive, got {p}")));
    }
    let ls = s_upper(lambda).ln();
    let c = (17f64.sqrt() / 4.0).ln();
    Ok(2.0 * GOLDEN_MEAN.ln() / ls - 2.0 / p * (1.0 - 2.0 * c / (5.0 * ls)))
}

fn check_lower_domain(lambda: f64) -> Result<()> {
    if !(lambda > lambda_zero(0.0)) {
        return Err(Error::domain(format!("lower bounds need λ > √24, got {lambda}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConstants {
    pub lambda: f64,
    pub s_lower: f64,
    pub s_upper: f64,
    /// `(δ, λ0(δ))`.
    pub lambda0_at: Vec<(f64, f64)>,
    pub alpha_upper: f64,
    pub alpha_lower: f64,
    /// `(p, beta_lower_zero_phase(p))`.
    pub beta_lower_zero_phase: Vec<(f64, f64)>,
    pub s: f64,
}

pub fn coupling_constants(lambda: f64, deltas: &[f64], p_list: &[f64]) -> Result<CouplingConstants> {
    let sl = s_lower(lambda)?;
    check_lower_domain(lambda)?;
    let mut lambda0_at = Vec::with_capacity(deltas.len());
    for &d in deltas {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::domain(format!("δ must be finite and ≥ 0, got {d}")));
        }
        lambda0_at.push((d, lambda_zero(d)));
    }
    let beta = p_list
        .iter()
        .map(|&p| Ok((p, beta_lower_zero_phase(lambda, p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingConstants {
        lambda,
        s_lower: sl,
        s_upper: s_upper(lambda),
        lambda0_at,
        alpha_upper: alpha_upper(lambda)?,
        alpha_lower: alpha_lower(lambda)?,
        beta_lower_zero_phase: beta,
        s: spreading_scale(lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_at_eight() {
        let c = coupling_constants(8.0, &[0.0], &[2.0]).unwrap();
        assert_eq!(c.s_lower, 3.0);
        assert_eq!(c.s_upper, 38.0);
        assert!((c.alpha_lower - 0.2645775544).abs() < 1e-9);
        assert!((c.alpha_upper - 0.8760357590).abs() < 1e-9);
        assert!((c.lambda0_at[0].1 - 24f64.sqrt()).abs() < 1e-12);
        assert!((c.s - 38f64.ln() / (2.0 * GOLDEN_MEAN.ln())).abs() < 1e-15);
    }

    #[test]
    fn beta_formula() {
        let ls = 38f64.ln();
        let expect = 2.0 * GOLDEN_MEAN.ln() / ls - (1.0 - 2.0 * (17f64.sqrt() / 4.0).ln() / (5.0 * ls));
        assert!((beta_lower_zero_phase(8.0, 2.0).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn domains() {
        assert!(s_lower(7.0).is_err());
        assert!(coupling_constants(5.0, &[], &[]).is_err());
        assert!(alpha_lower(5.0).is_ok());
        assert!(alpha_lower(4.0).is_err());
        assert!(beta_lower_zero_phase(8.0, 0.0).is_err());
    }

    #[test]
    fn sandwich_ordering_and_ratio() {
        let mut prev_ratio = 0.0;
        for lambda in [8.0, 16.0, 64.0, 256.0, 4096.0, 1e6] {
            let (lo, hi) = (alpha_lower(lambda).unwrap(), alpha_upper(lambda).unwrap());
            assert!(s_lower(lambda).unwrap() < s_upper(lambda));
            assert!(lo < hi);
            let ratio = lo / hi;
            assert!(ratio > prev_ratio);
            prev_ratio = ratio;
        }
        assert!(alpha_upper(1e12).unwrap() < 0.05);
    }
}
