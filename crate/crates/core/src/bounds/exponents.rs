//! Finite-time proxies for transport exponents and spreading profiles.
//!
//! Asymptotic liminf/limsup quantities are replaced by the extreme values of
//! log-log slopes over the last part of the time series; the window used is
//! always part of the result.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::line_fit;

/// `Ŝ(α)` below this counts as zero.
pub const DEFAULT_THRESHOLD_ZERO: f64 = 0.05;
/// `Ŝ(α)` at or above this counts as infinite.
pub const DEFAULT_THRESHOLD_INF: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeWindow {
    pub t_start: f64,
    pub t_end: f64,
    /// Regression slope of `ln M_p` against `ln t`, divided by `p`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportExponents {
    pub p: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
    /// Every one-decade window; those inside `final_range` enter the extremes.
    pub windows: Vec<SlopeWindow>,
    pub final_range: (f64, f64),
}

fn decades(t: &[f64]) -> f64 {
    (t[t.len() - 1] / t[0]).log10()
}

fn check_times(t: &[f64], required: f64) -> Result<()> {
    if t.len() < 2 || t.iter().any(|x| !(*x > 0.0 && x.is_finite())) || t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(
            "time grid must be positive, finite and strictly increasing",
        ));
    }
    let d = decades(t);
    if d < required - 1e-9 {
        return Err(Error::SeriesTooShort { decades: d, required });
    }
    Ok(())
}

/// `β̂⁻(p)` and `β̂⁺(p)` from a moment series `(t_i, M_p(t_i))`.
///
/// Slopes are fitted over each window `[t_i, 10 t_i]` that holds at least
/// three samples; the extremes are taken over windows that lie inside the
/// final two decades.
pub fn transport_exponents(series: &[(f64, f64)], p: f64) -> Result<TransportExponents> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("moment order p must be positive, got {p}")));
    }
    let t: Vec<f64> = series.iter().map(|s| s.0).collect();
    check_times(&t, 2.0)?;
    if let Some(bad) = series.iter().find(|s| !(s.1 > 0.0 && s.1.is_finite())) {
        return Err(Error::domain(format!(
            "moment at t = {} is not positive: {}",
            bad.0, bad.1
        )));
    }
    let lt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let lm: Vec<f64> = series.iter().map(|s| s.1.ln()).collect();
    let t_last = t[t.len() - 1];
    let final_range = (t_last / 100.0, t_last);
    let mut windows = Vec::new();
    for i in 0..t.len() {
        let end = t[i] * 10.0 * (1.0 + 1e-9);
        if t[i] * 10.0 > t_last * (1.0 + 1e-9) {
            break;
        }
        let j = t.partition_point(|x| *x <= end);
        if j - i < 3 {
            continue;
        }
        let fit = line_fit(&lt[i..j], &lm[i..j])?;
        windows.push(SlopeWindow {
            t_start: t[i],
            t_end: t[j - 1],
            slope: fit.slope / p,
        });
    }
    let inside: Vec<f64> = windows
        .iter()
        .filter(|w| w.t_start >= final_range.0 * (1.0 - 1e-9))
        .map(|w| w.slope)
        .collect();
    if inside.is_empty() {
        return Err(Error::DegenerateFit { usable: 0, required: 1 });
    }
    Ok(TransportExponents {
        p,
        beta_minus: inside.iter().copied().fold(f64::INFINITY, f64::min),
        beta_plus: inside.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        windows,
        final_range,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadingProfile {
    pub alphas: Vec<f64>,
    /// `−min ln P / ln t` over the final decade; `+∞` where `P` vanished.
    pub s_minus: Vec<f64>,
    /// `−max ln P / ln t` over the final decade.
    pub s_plus: Vec<f64>,
    pub alpha_l_minus: Option<f64>,
    pub alpha_l_plus: Option<f64>,
    pub alpha_u_minus: Option<f64>,
    pub alpha_u_plus: Option<f64>,
    pub threshold_zero: f64,
    pub threshold_inf: f64,
    pub final_range: (f64, f64),
}

/// Last α of the leading run where `s < threshold`.
fn prefix_edge(alphas: &[f64], s: &[f64], threshold: f64) -> Option<f64> {
    alphas
        .iter()
        .zip(s)
        .take_while(|(_, v)| **v < threshold)
        .last()
        .map(|(a, _)| *a)
}

/// `Ŝ±(α)`, `α̂_l±` and `α̂_u±` from `probabilities[i][j] = P(⌈t_j^{α_i}⌉ − 1, t_j)`.
pub fn spreading_profile(
    alphas: &[f64],
    times: &[f64],
    probabilities: &[Vec<f64>],
    threshold_zero: f64,
    threshold_inf: f64,
) -> Result<SpreadingProfile> {
    if alphas.is_empty()
        || alphas.iter().any(|a| !(0.0..=1.2 + 1e-9).contains(a))
        || alphas.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::domain("α grid must be increasing inside [0, 1.2]"));
    }
    check_times(times, 2.0)?;
    if times[0] <= 1.0 {
        return Err(Error::domain("times must exceed 1 for log-ratio estimates"));
    }
    if probabilities.len() != alphas.len() || probabilities.iter().any(|r| r.len() != times.len()) {
        return Err(Error::domain("probability table does not match the α and t grids"));
    }
    if !(0.0 < threshold_zero && threshold_zero < threshold_inf) {
        return Err(Error::domain("thresholds must satisfy 0 < zero < inf"));
    }
    let t_last = times[times.len() - 1];
    let first = times.partition_point(|t| *t < t_last / 10.0 * (1.0 - 1e-12));
    let mut s_minus = Vec::with_capacity(alphas.len());
    let mut s_plus = Vec::with_capacity(alphas.len());
    for row in probabilities {
        let ratios: Vec<f64> = row[first..]
            .iter()
            .zip(&times[first..])
            .map(|(p, t)| if *p > 0.0 { p.ln() / t.ln() } else { f64::NEG_INFINITY })
            .collect();
        s_minus.push(-ratios.iter().copied().fold(f64::INFINITY, f64::min));
        s_plus.push(-ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(SpreadingProfile {
        alphas: alphas.to_vec(),
        alpha_l_minus: prefix_edge(alphas, &s_minus, threshold_zero),
        alpha_l_plus: prefix_edge(alphas, &s_plus, threshold_zero),
        alpha_u_minus: prefix_edge(alphas, &s_minus, threshold_inf),
        alpha_u_plus: prefix_edge(alphas, &s_plus, threshold_inf),
        s_minus,
        s_plus,
        threshold_zero,
        threshold_inf,
        final_range: (times[first], t_last),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
        let n = ((b / a).log10() * per_decade as f64).round() as usize;
        (0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)).collect()
    }

    #[test]
    fn ballistic_series() {
        let s: Vec<(f64, f64)> = log_grid(1.0, 1000.0, 10)
            .into_iter()
            .map(|t| (t, 2.0 * t * t))
            .collect();
        let e = transport_exponents(&s, 2.0).unwrap();
        assert!((e.beta_minus - 1.0).abs() < 1e-12 && (e.beta_plus - 1.0).abs() < 1e-12);
        assert!((e.final_range.0 - 10.0).abs() < 1e-9);
    }

    #[test]
    fn constant_series_has_zero_exponent() {
        let s: Vec<(f64, f64)> = log_grid(1.0, 1000.0, 5).into_iter().map(|t| (t, 3.0)).collect();
        let e = transport_exponents(&s, 1.0).unwrap();
        assert!(e.beta_plus.abs() < 1e-12 && e.beta_minus.abs() < 1e-12);
    }

    #[test]
    fn short_series_rejected() {
        let s: Vec<(f64, f64)> = log_grid(1.0, 50.0, 10).into_iter().map(|t| (t, t)).collect();
        assert!(matches!(
            transport_exponents(&s, 1.0),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn oscillating_series_brackets() {
        let s: Vec<(f64, f64)> = log_grid(1.0, 1e4, 20)
            .into_iter()
            .map(|t| (t, t.powf(1.5) * (0.3 * t.ln().sin()).exp()))
            .collect();
        let e = transport_exponents(&s, 1.0).unwrap();
        assert!(e.beta_minus < e.beta_plus);
        assert!(e.beta_minus > 1.2 && e.beta_plus < 1.8);
    }

    #[test]
    fn synthetic_power_law_profile() {
        let alphas: Vec<f64> = (0..=12).map(|i| i as f64 * 0.1).collect();
        let times = log_grid(10.0, 1000.0, 8);
        let q = 1.7;
        let table: Vec<Vec<f64>> = alphas
            .iter()
            .map(|_| times.iter().map(|t| t.powf(-q)).collect())
            .collect();
        let p = spreading_profile(&alphas, &times, &table, DEFAULT_THRESHOLD_ZERO, DEFAULT_THRESHOLD_INF).unwrap();
        for (a, b) in p.s_minus.iter().zip(&p.s_plus) {
            assert!((a - q).abs() < 1e-12 && (b - q).abs() < 1e-12);
        }
        assert_eq!(p.alpha_l_plus, None);
        assert!((p.alpha_u_plus.unwrap() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn front_profile() {
        let alphas: Vec<f64> = (0..=12).map(|i| i as f64 * 0.1).collect();
        let times = log_grid(10.0, 1000.0, 8);
        let table: Vec<Vec<f64>> = alphas
            .iter()
            .map(|a| {
                times
                    .iter()
                    .map(|t| {
                        if *a <= 0.4 {
                            1.0
                        } else if *a <= 0.8 {
                            t.powf(-2.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let p = spreading_profile(&alphas, &times, &table, DEFAULT_THRESHOLD_ZERO, DEFAULT_THRESHOLD_INF).unwrap();
        assert!((p.alpha_l_minus.unwrap() - 0.4).abs() < 1e-12);
        assert!((p.alpha_u_minus.unwrap() - 0.8).abs() < 1e-12);
        assert!(p.s_plus[12].is_infinite());
    }
}
