//! Exponential time averages `⟨f⟩(T) = (2/T)∫_0^∞ e^{−2t/T} f(t) dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Averages are integrated over `[0, HORIZON·T]`; the weight beyond it is `e^{−40}`.
pub const HORIZON: f64 = 20.0;
const REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAverage {
    pub value: f64,
    /// Richardson estimate of the quadrature error.
    pub quadrature_error: f64,
    /// Bound on the neglected weight beyond the horizon times `sup|f|`.
    pub tail_bound: f64,
}

/// Number of uniform steps of size `h` that cover `[0, 20T]`, rounded up to
/// a multiple of four so that the Richardson estimate is available.
pub fn samples_needed(h: f64, big_t: f64) -> usize {
    let n = (HORIZON * big_t / h - 1e-9).ceil() as usize;
    n.div_ceil(4) * 4
}

fn simpson(g: &[f64], h: f64, stride: usize) -> f64 {
    let n = (g.len() - 1) / stride;
    let mut s = g[0] + g[n * stride];
    for j in 1..n {
        s += if j % 2 == 1 { 4.0 } else { 2.0 } * g[j * stride];
    }
    s * h * stride as f64 / 3.0
}

/// Average of samples `f(jh)`, `j = 0, 1, …`. Only the samples that cover
/// `[0, 20T]` are used, so one long series serves several `T`.
pub fn time_average(samples: &[f64], h: f64, big_t: f64) -> Result<TimeAverage> {
    if !(big_t > 0.0) || !(h > 0.0) {
        return Err(Error::domain("time average needs T > 0 and a positive step"));
    }
    let n = samples_needed(h, big_t);
    if samples.len() < n + 1 {
        return Err(Error::domain(format!(
            "grid of {} samples with step {h} does not cover [0, {}]",
            samples.len(),
            HORIZON * big_t
        )));
    }
    let g: Vec<f64> = samples[..=n]
        .iter()
        .enumerate()
        .map(|(j, f)| 2.0 / big_t * (-2.0 * j as f64 * h / big_t).exp() * f)
        .collect();
    let fine = simpson(&g, h, 1);
    let coarse = simpson(&g, h, 2);
    let quadrature_error = (fine - coarse).abs() / 15.0;
    let value = fine + (fine - coarse) / 15.0;
    let sup = samples[..=n].iter().fold(0.0f64, |m, f| m.max(f.abs()));
    let tail_bound = (-2.0 * n as f64 * h / big_t).exp() * sup;
    if quadrature_error > REL_TOL * value.abs() && quadrature_error > f64::MIN_POSITIVE {
        return Err(Error::GridTooCoarse {
            estimate: quadrature_error,
            tolerance: REL_TOL * value.abs(),
        });
    }
    Ok(TimeAverage {
        value,
        quadrature_error,
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64) -> f64, h: f64, t: f64) -> Vec<f64> {
        (0..=samples_needed(h, t)).map(|j| f(j as f64 * h)).collect()
    }

    #[test]
    fn moments_of_the_weight() {
        let big_t = 7.0;
        let h = 0.01;
        let c = time_average(&grid(|_| 3.0, h, big_t), h, big_t).unwrap();
        assert!((c.value - 3.0).abs() < 1e-8);
        assert!(c.tail_bound < 3.0 * 5e-18);
        let lin = time_average(&grid(|t| t, h, big_t), h, big_t).unwrap();
        assert!((lin.value - big_t / 2.0).abs() < 1e-7 * big_t);
        let sq = time_average(&grid(|t| t * t, h, big_t), h, big_t).unwrap();
        assert!((sq.value - big_t * big_t / 2.0).abs() < 1e-6 * big_t * big_t);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let big_t = 5.0;
        let h = 0.5;
        let r = time_average(&grid(|t| (7.0 * t).cos().powi(2), h, big_t), h, big_t);
        assert!(matches!(r, Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn short_grid_is_rejected() {
        assert!(time_average(&[1.0; 10], 0.1, 5.0).is_err());
    }
}
