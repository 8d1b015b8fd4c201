//! Fitted envelopes and comparison reports.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exponents::{
    spreading_profile, SpreadingProfile, TransportExponents, DEFAULT_THRESHOLD_INF, DEFAULT_THRESHOLD_ZERO,
};
use super::rhs::theorem1_rhs;
use super::{coupling_constants, spreading_scale, CouplingConstants};
use crate::dynamics::{evolve, parseval_averages, Region, TailProfile};
use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::lattice::{PotentialSpec, GOLDEN_MEAN};
use crate::quadrature::QuadOptions;
use crate::tracemap::{fibonacci_number, real_bands};
use crate::transfer::{power_law_fit, PowerLawFit, Side};

/// One grid point of `P(N, t) ≤ C (e^{−cN} + rhs(N, t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub n: usize,
    pub t: f64,
    pub measured: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub c_big: f64,
    pub c_small: f64,
    /// Points with `t` at or below this were used to fit the constants.
    pub calibration_t_max: f64,
    /// Indices of points with `measured > C (e^{−cN} + rhs)`.
    pub violations: Vec<usize>,
    /// `max measured / envelope` over all points.
    pub worst_ratio: f64,
}

impl EnvelopeFit {
    pub fn envelope(&self, n: usize, rhs: f64) -> f64 {
        self.c_big * ((-self.c_small * n as f64).exp() + rhs)
    }
}

/// Relative rounding slack when testing a point against its envelope.
const ENVELOPE_REL_TOL: f64 = 1e-12;

/// Fits one `(C, c)` pair on the early part of the grid and checks it on all of it.
///
/// `c` minimises the spread of `ln P − ln(e^{−cN} + rhs)` over calibration
/// points (a log-space least-squares fit with free `ln C`), searched on a
/// log grid in `[10⁻³, 10]`. `C` is then the smallest value that covers
/// every calibration point. Points after the calibration range test
/// whether the same constants keep holding as `t` grows.
pub fn envelope_fit(points: &[EnvelopePoint], calibration_t_max: f64) -> Result<EnvelopeFit> {
    let calib: Vec<&EnvelopePoint> = points
        .iter()
        .filter(|p| p.t <= calibration_t_max && p.measured > 0.0)
        .collect();
    if calib.len() < 2 {
        return Err(Error::DegenerateFit {
            usable: calib.len(),
            required: 2,
        });
    }
    let resid = |c: f64, p: &EnvelopePoint| p.measured.ln() - ((-c * p.n as f64).exp() + p.rhs).ln();
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=160 {
        let c = 1e-3 * 10f64.powf(i as f64 / 40.0);
        let r: Vec<f64> = calib.iter().map(|p| resid(c, p)).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let ss: f64 = r.iter().map(|x| (x - mean) * (x - mean)).sum();
        if ss < best.0 * (1.0 - 1e-12) {
            best = (ss, c);
        }
    }
    let c_small = best.1;
    let c_big = calib.iter().map(|p| resid(c_small, p).exp()).fold(0.0, f64::max);
    let mut fit = EnvelopeFit {
        c_big,
        c_small,
        calibration_t_max,
        violations: Vec::new(),
        worst_ratio: 0.0,
    };
    for (i, p) in points.iter().enumerate() {
        let ratio = p.measured / fit.envelope(p.n, p.rhs);
        fit.worst_ratio = fit.worst_ratio.max(ratio);
        if ratio > 1.0 + ENVELOPE_REL_TOL {
            fit.violations.push(i);
        }
    }
    Ok(fit)
}

/// A measured quantity against its predicted bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub measured: f64,
    pub predicted: f64,
    /// Slack added to `predicted` before comparing.
    pub tolerance: f64,
    /// `"<="` when `measured` should stay below `predicted + tolerance`, `">="` for the reverse.
    pub relation: String,
    pub window: (f64, f64),
    pub holds: bool,
}

impl Comparison {
    pub fn at_most(
        quantity: impl Into<String>,
        measured: f64,
        predicted: f64,
        tolerance: f64,
        window: (f64, f64),
    ) -> Self {
        Comparison {
            quantity: quantity.into(),
            measured,
            predicted,
            tolerance,
            relation: "<=".into(),
            window,
            holds: measured <= predicted + tolerance,
        }
    }

    pub fn at_least(
        quantity: impl Into<String>,
        measured: f64,
        predicted: f64,
        tolerance: f64,
        window: (f64, f64),
    ) -> Self {
        Comparison {
            quantity: quantity.into(),
            measured,
            predicted,
            tolerance,
            relation: ">=".into(),
            window,
            holds: measured >= predicted - tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub c_big: Option<f64>,
    pub c_small: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTrend {
    pub lambda: f64,
    pub alpha_upper_times_log: f64,
    pub alpha_lower_times_log: f64,
    /// `alpha_upper · ln λ − 2 ln φ`.
    pub gap: f64,
}

/// `α_upper(λ)·ln λ` and `α_lower(λ)·ln λ` against their common limit `2 ln φ`.
pub fn alpha_product_trend(lambdas: &[f64]) -> Result<Vec<ProductTrend>> {
    lambdas
        .iter()
        .map(|&l| {
            let c = coupling_constants(l, &[], &[])?;
            let up = c.alpha_upper * l.ln();
            Ok(ProductTrend {
                lambda: l,
                alpha_upper_times_log: up,
                alpha_lower_times_log: c.alpha_lower * l.ln(),
                gap: up - 2.0 * GOLDEN_MEAN.ln(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub spec: PotentialSpec,
    pub constants: Option<CouplingConstants>,
    pub times: Vec<f64>,
    pub alphas: Vec<f64>,
    /// `probabilities[i][j]` at `alphas[i]`, `times[j]`.
    pub probabilities: Vec<Vec<f64>>,
    pub comparisons: Vec<Comparison>,
    pub fitted: FittedConstants,
    pub spreading: Option<SpreadingProfile>,
    pub transport: Vec<TransportExponents>,
    pub product_trend: Vec<ProductTrend>,
    pub envelope_points: Vec<EnvelopePoint>,
    pub envelope: Option<EnvelopeFit>,
    /// Distances probed at each entry of `times`, when a single distance per time is used.
    pub distances: Vec<usize>,
}

impl BoundReport {
    pub fn new(id: impl Into<String>, spec: PotentialSpec) -> Self {
        BoundReport {
            id: id.into(),
            spec,
            constants: None,
            times: Vec::new(),
            alphas: Vec::new(),
            probabilities: Vec::new(),
            comparisons: Vec::new(),
            fitted: FittedConstants::default(),
            spreading: None,
            transport: Vec::new(),
            product_trend: Vec::new(),
            envelope_points: Vec::new(),
            envelope: None,
            distances: Vec::new(),
        }
    }

    pub fn all_hold(&self) -> bool {
        self.comparisons.iter().all(|c| c.holds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichConfig {
    pub alphas: Vec<f64>,
    /// Averaging times `T`.
    pub times: Vec<f64>,
    pub quad_tol: f64,
    pub check_upper: bool,
    pub check_lower: bool,
    pub slack_upper: f64,
    pub slack_lower: f64,
    pub threshold_zero: f64,
    pub threshold_inf: f64,
    /// Extra couplings for the `α·ln λ` trend table.
    pub trend_lambdas: Vec<f64>,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        SandwichConfig {
            alphas: (0..=24).map(|i| i as f64 * 0.05).collect(),
            times: vec![10.0, 21.5443, 46.4159, 100.0, 215.443, 464.159, 1000.0],
            quad_tol: 1e-4,
            check_upper: true,
            check_lower: true,
            slack_upper: 0.15,
            slack_lower: 0.1,
            threshold_zero: DEFAULT_THRESHOLD_ZERO,
            threshold_inf: DEFAULT_THRESHOLD_INF,
            trend_lambdas: Vec::new(),
        }
    }
}

/// Distance `⌈t^α⌉ − 1` probed at exponent `α`.
pub fn front_distance(t: f64, alpha: f64) -> usize {
    (t.powf(alpha).ceil() as usize).saturating_sub(1)
}

/// Time-averaged spreading profile at coupling `λ`, bracketed by the
/// closed-form upper and lower rates.
pub fn sandwich_report(lambda: f64, cfg: &SandwichConfig) -> Result<BoundReport> {
    if cfg.check_upper && lambda < 8.0 {
        return Err(Error::domain(format!(
            "the upper bound is stated for λ ≥ 8, got {lambda}"
        )));
    }
    let constants = coupling_constants(lambda, &[0.0], &[])?;
    let spec = PotentialSpec::fibonacci(lambda, 0.0)?;
    let columns = cfg
        .times
        .par_iter()
        .map(|&big_t| {
            let ns: Vec<usize> = cfg.alphas.iter().map(|&a| front_distance(big_t, a)).collect();
            parseval_averages(&ns, big_t, &spec, Region::Both, QuadOptions::with_rel_tol(cfg.quad_tol))
                .map_err(|e| e.in_task(format!("Parseval average at T = {big_t}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut probabilities = vec![vec![0.0; cfg.times.len()]; cfg.alphas.len()];
    for (j, avg) in columns.into_iter().enumerate() {
        for (i, v) in avg.values.into_iter().enumerate() {
            probabilities[i][j] = v.max(0.0);
        }
    }
    let profile = spreading_profile(
        &cfg.alphas,
        &cfg.times,
        &probabilities,
        cfg.threshold_zero,
        cfg.threshold_inf,
    )?;
    let mut report = BoundReport::new(format!("sandwich-lambda-{lambda}"), spec);
    let window = profile.final_range;
    let missing = -1.0;
    if cfg.check_upper {
        report.comparisons.push(Comparison::at_most(
            "alpha_u_plus_hat",
            profile.alpha_u_plus.unwrap_or(missing),
            constants.alpha_upper,
            cfg.slack_upper,
            window,
        ));
    }
    if cfg.check_lower {
        report.comparisons.push(Comparison::at_least(
            "alpha_u_minus_hat",
            profile.alpha_u_minus.unwrap_or(missing),
            constants.alpha_lower,
            cfg.slack_lower,
            window,
        ));
    }
    let mut trend = vec![lambda];
    trend.extend(cfg.trend_lambdas.iter().copied());
    report.product_trend = alpha_product_trend(&trend)?;
    report.constants = Some(constants);
    report.times = cfg.times.clone();
    report.alphas = cfg.alphas.clone();
    report.probabilities = probabilities;
    report.spreading = Some(profile);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub times: Vec<f64>,
    /// Distances `⌈t^a⌉` for each exponent `a`.
    pub exponents: Vec<f64>,
    /// Exponent of the decay probe `P(⌈t^α⌉, t)`.
    pub decay_exponent: f64,
    /// The decay probe's log-slope over the last decade must not exceed this.
    pub decay_slope_max: f64,
    /// Defaults to the geometric middle of the time grid.
    pub calibration_t_max: Option<f64>,
    pub quad_tol: f64,
    pub evolve_tol: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig {
            times: (0..=12).map(|i| 10f64.powf(1.0 + i as f64 / 6.0)).collect(),
            exponents: vec![0.5, 0.7, 0.9],
            decay_exponent: 0.95,
            decay_slope_max: -2.0,
            calibration_t_max: None,
            quad_tol: 1e-6,
            evolve_tol: 1e-14,
        }
    }
}

/// Measured `P_r(N, t)` against `C (e^{−cN} + theorem1_rhs(N, t))` with one
/// fitted `(C, c)`, plus the log-slope of `P(⌈t^α⌉, t)` over the last decade.
pub fn theorem1_envelope(spec: &PotentialSpec, cfg: &EnvelopeConfig) -> Result<BoundReport> {
    if cfg.times.len() < 2 || cfg.exponents.is_empty() {
        return Err(Error::config("time_grid", "needs at least two times and one exponent"));
    }
    let rows = cfg
        .times
        .par_iter()
        .map(|&t| -> Result<(Vec<EnvelopePoint>, f64)> {
            let psi = evolve(spec, t, cfg.evolve_tol).map_err(|e| e.in_task(format!("evolution to t = {t}")))?;
            let tails = TailProfile::new(&psi);
            let mut pts = Vec::with_capacity(cfg.exponents.len());
            for &a in &cfg.exponents {
                let n = (t.powf(a).ceil() as usize).max(1);
                let rhs = theorem1_rhs(n, t, spec, Side::Right, cfg.quad_tol)
                    .map_err(|e| e.in_task(format!("decay integral at N = {n}, t = {t}")))?;
                pts.push(EnvelopePoint {
                    n,
                    t,
                    measured: tails.right(n),
                    rhs: rhs.value,
                });
            }
            let probe = tails.get(t.powf(cfg.decay_exponent).ceil() as usize, Region::Both);
            Ok((pts, probe))
        })
        .collect::<Result<Vec<_>>>()?;
    let t_first = cfg.times[0];
    let t_last = cfg.times[cfg.times.len() - 1];
    let calib = cfg
        .calibration_t_max
        .unwrap_or((t_first * t_last).sqrt() * (1.0 + 1e-12));
    let points: Vec<EnvelopePoint> = rows.iter().flat_map(|r| r.0.iter().copied()).collect();
    let fit = envelope_fit(&points, calib)?;
    let mut report = BoundReport::new("decay-envelope", spec.clone());
    for p in &points {
        report.comparisons.push(Comparison::at_most(
            format!("P_r(N={}, t={})", p.n, p.t),
            p.measured,
            fit.envelope(p.n, p.rhs),
            fit.envelope(p.n, p.rhs) * ENVELOPE_REL_TOL,
            (p.t, p.t),
        ));
    }
    let (lt, lp): (Vec<f64>, Vec<f64>) = cfg
        .times
        .iter()
        .zip(&rows)
        .filter(|(t, r)| **t >= t_last / 10.0 * (1.0 - 1e-9) && r.1 > 0.0)
        .map(|(t, r)| (t.ln(), r.1.ln()))
        .unzip();
    let slope = line_fit(&lt, &lp)?.slope;
    report.comparisons.push(Comparison::at_most(
        format!("log-slope of P(t^{}, t)", cfg.decay_exponent),
        slope,
        cfg.decay_slope_max,
        0.0,
        (t_last / 10.0, t_last),
    ));
    report.times = cfg.times.clone();
    report.alphas = vec![cfg.decay_exponent];
    report.probabilities = vec![rows.iter().map(|r| r.1).collect()];
    report.fitted.c_big = Some(fit.c_big);
    report.fitted.c_small = Some(fit.c_small);
    report.envelope_points = points;
    report.envelope = Some(fit);
    Ok(report)
}

/// Transfer-matrix power law `‖Φ(N, E)‖ ≤ C N^γ` over the roots and band
/// edges of `σ_k^δ`, for `N ≤ F_k`.
pub fn band_power_law(lambda: f64, k: usize, delta: f64) -> Result<PowerLawFit> {
    let set = real_bands(k, delta, lambda)?;
    let points: Vec<Complex64> = set
        .bands
        .iter()
        .flat_map(|b| [b.root, b.left, b.right])
        .map(|e| Complex64::new(e.hi() + e.lo(), 0.0))
        .collect();
    power_law_fit(
        &points,
        fibonacci_number(k) as usize,
        &PotentialSpec::fibonacci(lambda, 0.0)?,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub times: Vec<f64>,
    pub band_level: usize,
    pub band_delta: f64,
    /// Subtracted from the predicted exponent.
    pub slack: f64,
    pub quad_tol: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            times: (0..=12).map(|i| 10f64.powf(1.0 + i as f64 / 6.0)).collect(),
            band_level: 10,
            band_delta: 0.2,
            slack: 0.5,
            quad_tol: 1e-6,
        }
    }
}

/// `⟨P(½T^{1/s}, ·)⟩(T)` against `T^{−2−2γ̂/s−slack}`.
pub fn lower_bound_chain(lambda: f64, cfg: &ChainConfig) -> Result<BoundReport> {
    let constants = coupling_constants(lambda, &[cfg.band_delta], &[])?;
    let gamma = band_power_law(lambda, cfg.band_level, cfg.band_delta)?.gamma;
    let s = spreading_scale(lambda);
    let spec = PotentialSpec::fibonacci(lambda, 0.0)?;
    let values = cfg
        .times
        .par_iter()
        .map(|&big_t| {
            let n = ((0.5 * big_t.powf(1.0 / s)).ceil() as usize).max(1);
            let avg = parseval_averages(
                &[n],
                big_t,
                &spec,
                Region::Both,
                QuadOptions::with_rel_tol(cfg.quad_tol),
            )
            .map_err(|e| e.in_task(format!("Parseval average at T = {big_t}")))?;
            Ok((n, avg.values[0]))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = BoundReport::new(format!("lower-chain-lambda-{lambda}"), spec);
    let exponent = -2.0 - 2.0 * gamma / s - cfg.slack;
    for (&big_t, &(n, p)) in cfg.times.iter().zip(&values) {
        report.comparisons.push(Comparison::at_least(
            format!("<P(N={n})>(T={big_t})"),
            p,
            big_t.powf(exponent),
            0.0,
            (big_t, big_t),
        ));
    }
    report.fitted.gamma = Some(gamma);
    report.constants = Some(constants);
    report.times = cfg.times.clone();
    report.probabilities = vec![values.iter().map(|v| v.1).collect()];
    report.distances = values.iter().map(|v| v.0).collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_from_exact_bound_has_no_violations() {
        let mut pts = Vec::new();
        for (k, t) in [10.0, 20.0, 40.0, 80.0, 160.0].into_iter().enumerate() {
            for n in [2usize, 5, 10] {
                let rhs = 1e3 / (t * n as f64).powi(2);
                let measured = 0.5 * ((-0.3 * n as f64).exp() + rhs) * (1.0 - 0.1 * (k % 2) as f64);
                pts.push(EnvelopePoint { n, t, measured, rhs });
            }
        }
        let fit = envelope_fit(&pts, 40.0).unwrap();
        assert!(fit.violations.is_empty());
        assert!((fit.c_big - 0.5).abs() < 0.05);
        assert!(fit.worst_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn envelope_detects_late_growth() {
        let pts: Vec<EnvelopePoint> = [10.0, 100.0, 1000.0]
            .into_iter()
            .map(|t| EnvelopePoint {
                n: 3,
                t,
                measured: 1e-3 * t,
                rhs: 1e-2,
            })
            .collect();
        let fit = envelope_fit(&pts, 100.0).unwrap();
        assert_eq!(fit.violations, vec![2]);
    }

    #[test]
    fn trend_gap_shrinks() {
        let t = alpha_product_trend(&[8.0, 32.0, 128.0, 512.0]).unwrap();
        for w in t.windows(2) {
            assert!(w[1].gap.abs() < w[0].gap.abs());
        }
        assert!(t[3].gap.abs() < 0.01);
    }

    #[test]
    fn upper_bound_below_eight_rejected() {
        let r = sandwich_report(5.0, &SandwichConfig::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn front_distances() {
        assert_eq!(front_distance(100.0, 0.0), 0);
        assert_eq!(front_distance(100.0, 0.5), 9);
        assert_eq!(front_distance(1000.0, 1.0), 999);
    }
}
