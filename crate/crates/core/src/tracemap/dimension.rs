//! Box-counting dimension of the level-k band union.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::bands::{real_bands, BandSet};
use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};

const MIN_SCALES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub lambda: f64,
    pub k: usize,
    pub delta: f64,
    pub dimension: f64,
    /// `(ε, N(ε))` pairs used in the fit.
    pub counts: Vec<(f64, u64)>,
    pub fit: LineFit,
}

/// Minimal number of closed intervals of length `eps` covering the bands.
pub fn cover_count(set: &BandSet, eps: f64) -> u64 {
    let mut count = 0u64;
    let mut covered: Option<TwoFloat> = None;
    for b in &set.bands {
        let start = match covered {
            Some(end) if b.right <= end => continue,
            Some(end) if b.left <= end => end,
            _ => b.left,
        };
        let n = ((b.right - start).hi() / eps).ceil().max(1.0);
        count += n as u64;
        covered = Some(start + TwoFloat::from(eps) * n);
    }
    count
}

/// Covering counts at dyadic scales from the largest band width up to the
/// diameter of the band union, and the slope of `ln N(ε)` against `ln(1/ε)`.
///
/// Below the largest band width the count is dominated by the interiors of
/// the level-k bands and tends to slope 1, so those scales say nothing about
/// the limiting Cantor set and are left out.
pub fn box_dimension_of(set: &BandSet) -> Result<DimensionEstimate> {
    let (first, last) = match (set.bands.first(), set.bands.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::DegenerateFit {
                usable: 0,
                required: MIN_SCALES,
            })
        }
    };
    let diameter = (last.right - first.left).hi();
    let w_max = set.bands.iter().map(|b| b.width()).fold(0.0f64, f64::max);
    let mut counts = Vec::new();
    let mut eps = w_max;
    while eps <= diameter && eps > 0.0 {
        counts.push((eps, cover_count(set, eps)));
        eps *= 2.0;
    }
    counts.reverse();
    if counts.len() < MIN_SCALES {
        return Err(Error::DegenerateFit {
            usable: counts.len(),
            required: MIN_SCALES,
        });
    }
    let x: Vec<f64> = counts.iter().map(|(e, _)| -e.ln()).collect();
    let y: Vec<f64> = counts.iter().map(|(_, n)| (*n as f64).ln()).collect();
    let fit = line_fit(&x, &y)?;
    Ok(DimensionEstimate {
        lambda: set.lambda,
        k: set.k,
        delta: set.delta,
        dimension: fit.slope,
        counts,
        fit,
    })
}

pub fn box_dimension(lambda: f64, k: usize, delta: f64) -> Result<DimensionEstimate> {
    box_dimension_of(&real_bands(k, delta, lambda)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracemap::bands::Band;

    fn set_of(intervals: &[(f64, f64)]) -> BandSet {
        BandSet {
            k: 1,
            delta: 0.0,
            lambda: 8.0,
            bands: intervals
                .iter()
                .map(|&(l, r)| Band {
                    root: TwoFloat::from((l + r) / 2.0),
                    m: 0,
                    left: TwoFloat::from(l),
                    right: TwoFloat::from(r),
                })
                .collect(),
        }
    }

    #[test]
    fn greedy_cover() {
        let s = set_of(&[(0.0, 1.0), (1.5, 1.6), (10.0, 10.1)]);
        assert_eq!(cover_count(&s, 2.0), 2);
        assert_eq!(cover_count(&s, 1.0), 3);
        assert_eq!(cover_count(&s, 0.5), 4);
    }

    #[test]
    fn estimate_in_unit_interval() {
        let d = box_dimension(8.0, 10, 0.0).unwrap();
        assert!(d.dimension > 0.0 && d.dimension < 1.0, "{}", d.dimension);
    }
}
