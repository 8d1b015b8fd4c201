//! Real spectral bands `σ_k^δ ∩ ℝ`, the roots of `x_k` and their profiles.
//!
//! Roots are isolated level by level. Every root of `x_k` lies in a band of
//! level `k−1` or `k−2`, so those bands (slightly widened) are the only
//! places that need scanning. This keeps the scan resolution relative to the
//! band sizes, which shrink far below double precision spacing at large λ.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::real::RealTrace;
use super::{fibonacci_number, lambda_zero};
use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};

const INITIAL_SAMPLES: usize = 16;
const MAX_REFINEMENTS: u32 = 6;
const CANDIDATE_WIDENING: f64 = 0.01;
const MAX_BISECTIONS: usize = 220;

/// One connected component of `σ_k^δ ∩ ℝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub root: TwoFloat,
    pub m: u32,
    pub left: TwoFloat,
    pub right: TwoFloat,
}

impl Band {
    /// Width computed in double-double, so it stays accurate when the band
    /// is narrower than the spacing of doubles at its location.
    pub fn width(&self) -> f64 {
        (self.right - self.left).hi()
    }

    pub fn contains(&self, e: TwoFloat) -> bool {
        self.left <= e && e <= self.right
    }
}

/// Sorted, disjoint bands of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    pub k: usize,
    pub delta: f64,
    pub lambda: f64,
    pub bands: Vec<Band>,
}

pub const BAND_CSV_HEADER: &str = "k,j,root,m,left,right,width";

impl BandSet {
    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{BAND_CSV_HEADER}")?;
        for (j, b) in self.bands.iter().enumerate() {
            writeln!(
                out,
                "{},{},{:e},{},{:e},{:e},{:e}",
                self.k,
                j,
                b.root.hi(),
                b.m,
                b.left.hi(),
                b.right.hi(),
                b.width()
            )?;
        }
        Ok(())
    }
}

/// A root of `x_k` with its profile `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootProfile {
    pub root: f64,
    pub m: u32,
}

#[derive(Debug, Clone)]
struct Level {
    roots: Vec<TwoFloat>,
    /// Bands at δ = 0, used to seed the next two levels.
    bands: Vec<(TwoFloat, TwoFloat)>,
}

/// Roots of `x_0, …, x_{k_max}` for one coupling.
#[derive(Debug, Clone)]
pub struct TraceSpectrum {
    trace: RealTrace,
    levels: Vec<Level>,
}

impl TraceSpectrum {
    pub fn build(lambda: f64, k_max: usize) -> Result<Self> {
        let l0 = lambda_zero(0.0);
        if !(lambda > l0) {
            return Err(Error::domain(format!("coupling {lambda} must exceed λ0(0) = {l0:.6}")));
        }
        let trace = RealTrace::new(lambda);
        let two = TwoFloat::from(2.0);
        let zero = TwoFloat::from(0.0);
        let lam = TwoFloat::from(lambda);
        let mut levels = vec![Level {
            roots: vec![zero],
            bands: vec![(-two, two)],
        }];
        if k_max >= 1 {
            levels.push(Level {
                roots: vec![lam],
                bands: vec![(lam - 2.0, lam + 2.0)],
            });
        }
        let mut spectrum = TraceSpectrum { trace, levels };
        for k in 2..=k_max {
            let roots = spectrum.isolate_roots(k)?;
            let bands: Vec<_> = roots.par_iter().map(|&r| spectrum.band_edges(r, k, 1.0)).collect();
            spectrum.levels.push(Level { roots, bands });
        }
        Ok(spectrum)
    }

    pub fn lambda(&self) -> f64 {
        self.trace.lambda
    }

    pub fn k_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn roots(&self, k: usize) -> &[TwoFloat] {
        &self.levels[k].roots
    }

    pub fn profiles(&self, k: usize) -> Vec<RootProfile> {
        self.levels[k]
            .roots
            .par_iter()
            .map(|&r| RootProfile {
                root: r.hi(),
                m: self.trace.profile(r, k),
            })
            .collect()
    }

    /// The components of `{E : |x_k(E)| ≤ 1+δ}`.
    pub fn bands(&self, k: usize, delta: f64) -> Result<BandSet> {
        if k == 0 || k > self.k_max() {
            return Err(Error::domain(format!("level {k} outside 1..={}", self.k_max())));
        }
        check_delta(delta, self.lambda())?;
        let bound = 1.0 + delta;
        let level = &self.levels[k];
        let bands: Vec<Band> = level
            .roots
            .par_iter()
            .zip(level.bands.par_iter())
            .map(|(&r, &zero_band)| {
                let (left, right) = if delta == 0.0 {
                    zero_band
                } else {
                    self.band_edges(r, k, bound)
                };
                Band {
                    root: r,
                    m: self.trace.profile(r, k),
                    left,
                    right,
                }
            })
            .collect();
        let expected = fibonacci_number(k) as usize;
        let merged = 1 + bands.windows(2).filter(|w| w[0].right < w[1].left).count();
        if merged != expected || bands.len() != expected {
            return Err(Error::BandCountMismatch {
                level: k,
                found: merged.min(bands.len()),
                expected,
            });
        }
        Ok(BandSet {
            k,
            delta,
            lambda: self.lambda(),
            bands,
        })
    }

    fn sign_at(&self, e: TwoFloat, k: usize) -> i8 {
        self.trace.value(e, k).signum()
    }

    fn candidates(&self, k: usize) -> Vec<(TwoFloat, TwoFloat)> {
        let mut iv: Vec<(TwoFloat, TwoFloat)> = self.levels[k - 1]
            .bands
            .iter()
            .chain(self.levels[k - 2].bands.iter())
            .map(|&(a, b)| {
                let pad = (b - a) * CANDIDATE_WIDENING + TwoFloat::from(1e-30);
                (a - pad, b + pad)
            })
            .collect();
        iv.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite band edges"));
        let mut merged: Vec<(TwoFloat, TwoFloat)> = Vec::with_capacity(iv.len());
        for (a, b) in iv {
            match merged.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        merged
    }

    fn isolate_roots(&self, k: usize) -> Result<Vec<TwoFloat>> {
        let expected = fibonacci_number(k) as usize;
        let candidates = self.candidates(k);
        let mut samples = INITIAL_SAMPLES;
        let mut found = 0;
        for _ in 0..=MAX_REFINEMENTS {
            let roots: Vec<TwoFloat> = candidates
                .par_iter()
                .flat_map_iter(|&(a, b)| self.scan(a, b, k, samples))
                .collect();
            found = roots.len();
            if found == expected {
                return Ok(roots);
            }
            samples *= 2;
        }
        Err(Error::RootCountMismatch {
            level: k,
            found,
            expected,
        })
    }

    /// Sign-change scan of `x_k` on `[a, b]` followed by bisection.
    fn scan(&self, a: TwoFloat, b: TwoFloat, k: usize, samples: usize) -> Vec<TwoFloat> {
        let step = (b - a) / samples as f64;
        let mut roots = Vec::new();
        let mut prev_e = a;
        let mut prev_s = self.sign_at(a, k);
        if prev_s == 0 {
            roots.push(a);
        }
        for j in 1..=samples {
            let e = if j == samples { b } else { a + step * j as f64 };
            let s = self.sign_at(e, k);
            if s == 0 {
                roots.push(e);
            } else if prev_s != 0 && s != prev_s {
                roots.push(self.bisect_root(prev_e, e, prev_s, k));
            }
            prev_e = e;
            prev_s = s;
        }
        roots
    }

    fn bisect_root(&self, mut lo: TwoFloat, mut hi: TwoFloat, lo_sign: i8, k: usize) -> TwoFloat {
        for _ in 0..MAX_BISECTIONS {
            let mid = (lo + hi) / 2.0;
            if mid == lo || mid == hi {
                break;
            }
            let s = self.sign_at(mid, k);
            if s == 0 {
                return mid;
            }
            if s == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / 2.0
    }

    /// Endpoints of the component of `{|x_k| ≤ bound}` containing `root`.
    fn band_edges(&self, root: TwoFloat, k: usize, bound: f64) -> (TwoFloat, TwoFloat) {
        let slope = self
            .trace
            .value_and_derivative(root, k)
            .map(|(_, d)| d.hi().abs())
            .unwrap_or(0.0);
        let scale = root.hi().abs().max(1.0);
        let first = if slope > 0.0 {
            0.25 * bound / slope
        } else {
            1e-30 * scale
        };
        let first = first.max(1e-31 * scale);
        (self.edge(root, k, bound, -first), self.edge(root, k, bound, first))
    }

    fn edge(&self, root: TwoFloat, k: usize, bound: f64, first: f64) -> TwoFloat {
        let inside = |e: TwoFloat| self.trace.value(e, k).abs_le(bound);
        let mut near = root;
        let mut h = first;
        let mut far = root + h;
        while inside(far) {
            near = far;
            h *= 2.0;
            far = root + h;
        }
        for _ in 0..MAX_BISECTIONS {
            let mid = (near + far) / 2.0;
            if mid == near || mid == far {
                break;
            }
            if inside(mid) {
                near = mid;
            } else {
                far = mid;
            }
        }
        near
    }
}

fn check_delta(delta: f64, lambda: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!(
            "delta must be a finite nonnegative number, got {delta}"
        )));
    }
    let l0 = lambda_zero(delta);
    if !(lambda > l0) {
        return Err(Error::domain(format!(
            "coupling {lambda} must exceed λ0({delta}) = {l0:.6}"
        )));
    }
    Ok(())
}

pub fn real_bands(k: usize, delta: f64, lambda: f64) -> Result<BandSet> {
    if k == 0 {
        return Err(Error::domain("band level must be at least 1"));
    }
    check_delta(delta, lambda)?;
    TraceSpectrum::build(lambda, k)?.bands(k, delta)
}

pub fn root_profiles(k: usize, lambda: f64) -> Result<Vec<RootProfile>> {
    if k == 0 {
        return Err(Error::domain("root level must be at least 1"));
    }
    Ok(TraceSpectrum::build(lambda, k)?.profiles(k))
}

pub fn c_histogram(k: usize, lambda: f64) -> Result<BTreeMap<u32, usize>> {
    if k < 2 {
        return Err(Error::domain("histogram level must be at least 2"));
    }
    Ok(histogram(&root_profiles(k, lambda)?))
}

pub fn histogram(profiles: &[RootProfile]) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for p in profiles {
        *h.entry(p.m).or_insert(0) += 1;
    }
    h
}

/// Nonempty pieces of `σ_k^δ ∩ σ_{k+1}^δ ∩ σ_{k+2}^δ` on the real line.
pub fn triple_intersection(spectrum: &TraceSpectrum, k: usize, delta: f64) -> Result<Vec<(f64, f64)>> {
    let a = spectrum.bands(k, delta)?;
    let b = spectrum.bands(k + 1, delta)?;
    let c = spectrum.bands(k + 2, delta)?;
    let ab = intersect(&edges(&a), &edges(&b));
    Ok(intersect(&ab, &edges(&c))
        .into_iter()
        .map(|(l, r)| (l.hi(), r.hi()))
        .collect())
}

fn edges(set: &BandSet) -> Vec<(TwoFloat, TwoFloat)> {
    set.bands.iter().map(|b| (b.left, b.right)).collect()
}

fn intersect(x: &[(TwoFloat, TwoFloat)], y: &[(TwoFloat, TwoFloat)]) -> Vec<(TwoFloat, TwoFloat)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        let lo = if x[i].0 > y[j].0 { x[i].0 } else { y[j].0 };
        let hi = if x[i].1 < y[j].1 { x[i].1 } else { y[j].1 };
        if lo <= hi {
            out.push((lo, hi));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Log band width regressed on the root profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandScaling {
    pub k: usize,
    pub delta: f64,
    pub lambda: f64,
    pub fit: LineFit,
    /// `(−ln S_u(λ), −ln S_l(λ))`.
    pub predicted_slope_range: (f64, f64),
}

pub fn band_scaling(k: usize, delta: f64, lambda: f64) -> Result<BandScaling> {
    if k < 3 {
        return Err(Error::domain("band scaling needs level at least 3"));
    }
    let floor = lambda_zero(2.0 * delta).max(8.0);
    if lambda < floor {
        return Err(Error::domain(format!(
            "coupling {lambda} below max(λ0(2δ), 8) = {floor:.6}"
        )));
    }
    band_scaling_of(&real_bands(k, delta, lambda)?)
}

pub fn band_scaling_of(set: &BandSet) -> Result<BandScaling> {
    let x: Vec<f64> = set.bands.iter().map(|b| b.m as f64).collect();
    let y: Vec<f64> = set.bands.iter().map(|b| b.width().ln()).collect();
    let fit = line_fit(&x, &y)?;
    let su = crate::bounds::s_upper(set.lambda);
    let range = match crate::bounds::s_lower(set.lambda) {
        Ok(sl) => (-su.ln(), -sl.ln()),
        Err(_) => (-su.ln(), f64::NAN),
    };
    Ok(BandScaling {
        k: set.k,
        delta: set.delta,
        lambda: set.lambda,
        fit,
        predicted_slope_range: range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_two_bands_match_quadratic() {
        let set = real_bands(2, 0.0, 8.0).unwrap();
        assert_eq!(set.len(), 2);
        let r = 72f64.sqrt();
        let expect = [(8.0 - r) / 2.0, (8.0 + r) / 2.0];
        for (b, e) in set.bands.iter().zip(expect) {
            assert!((b.root.hi() - e).abs() < 1e-13, "{} vs {e}", b.root.hi());
            assert!(b.left < b.root && b.root < b.right);
            assert_eq!(b.m, 1);
        }
    }

    #[test]
    fn band_edges_hit_the_threshold() {
        let t = RealTrace::new(8.0);
        let set = real_bands(5, 0.2, 8.0).unwrap();
        for b in &set.bands {
            for e in [b.left, b.right] {
                let v = t.value(e, 5).to_f64().abs();
                assert!((v - 1.2).abs() < 1e-9, "|x_5| = {v} at an edge");
            }
        }
    }

    #[test]
    fn level_three_profiles() {
        let p = root_profiles(3, 8.0).unwrap();
        assert_eq!(p.len(), 3);
        // z³ − 16z² + 61z + 16
        for r in &p {
            let z = r.root;
            let poly = ((z - 16.0) * z + 61.0) * z + 16.0;
            assert!(poly.abs() < 1e-9, "{poly}");
        }
        // Only the root near −0.246 has both |x_0| and |x_2| below one.
        let m: Vec<u32> = p.iter().map(|r| r.m).collect();
        assert_eq!(m, vec![2, 1, 1]);
    }

    #[test]
    fn histogram_level_two() {
        let h = c_histogram(2, 8.0).unwrap();
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    #[test]
    fn counts_follow_fibonacci() {
        let s = TraceSpectrum::build(8.0, 10).unwrap();
        for k in 1..=10 {
            assert_eq!(s.roots(k).len() as u64, fibonacci_number(k));
            assert_eq!(s.bands(k, 0.2).unwrap().len() as u64, fibonacci_number(k));
        }
    }

    #[test]
    fn nested_cover() {
        // σ_{k+1} ∪ σ_k ⊆ σ_k ∪ σ_{k−1} on a grid.
        let t = RealTrace::new(8.0);
        let d = 1.2;
        for k in 1..8 {
            for i in 0..4001 {
                let e = TwoFloat::from(-11.0 + 22.0 * i as f64 / 4000.0);
                let inside = |l: usize| t.value(e, l).abs_le(d);
                if inside(k + 1) || inside(k) {
                    assert!(inside(k) || inside(k - 1), "k={k}, E={}", e.hi());
                }
            }
        }
    }

    #[test]
    fn rejects_small_coupling() {
        assert!(matches!(real_bands(3, 0.0, 4.0), Err(Error::Domain(_))));
        assert!(matches!(real_bands(3, 0.1, 5.2), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_has_one_row_per_band() {
        let set = real_bands(2, 0.0, 8.0).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], BAND_CSV_HEADER);
        assert_eq!(lines.len(), 3);
    }
}
