//! On-site potentials and the action of the discrete Schrödinger operator
//! `[Hu](n) = u(n+1) + u(n-1) + V(n) u(n)` on finite windows of `ℓ²(ℤ)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Inverse golden mean `φ⁻¹ = (√5 − 1)/2` as a double-double.
pub(crate) fn inverse_golden_mean() -> TwoFloat {
    TwoFloat::try_from((0.6180339887498949, -5.432115203682506e-17)).expect("valid double-double")
}

/// Left endpoint `1 − φ⁻¹` of the indicator interval.
fn indicator_left_endpoint() -> TwoFloat {
    TwoFloat::try_from((0.38196601125010515, -1.1899991944327682e-18)).expect("valid double-double")
}

/// Golden mean `φ = (√5 + 1)/2`.
pub const GOLDEN_MEAN: f64 = 1.618_033_988_749_895;

/// Generator of the on-site potential `V(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `V(n) = λ χ_[1−φ⁻¹, 1)(n φ⁻¹ + θ mod 1)`.
    Fibonacci {
        lambda: f64,
        #[serde(default)]
        theta: f64,
    },
    Free,
    /// Finite table; `table[i]` is the value at site `first_site + i`.
    Custom {
        table: Vec<f64>,
        #[serde(default)]
        first_site: i64,
    },
}

impl PotentialSpec {
    pub fn fibonacci(lambda: f64, theta: f64) -> Result<Self> {
        let spec = PotentialSpec::Fibonacci { lambda, theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(table: Vec<f64>, first_site: i64) -> Result<Self> {
        let spec = PotentialSpec::Custom { table, first_site };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Fibonacci { lambda, theta } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::config("potential.lambda", "must be finite and > 0"));
                }
                if !(0.0..1.0).contains(theta) {
                    return Err(Error::config("potential.theta", "must lie in [0, 1)"));
                }
            }
            PotentialSpec::Free => {}
            PotentialSpec::Custom { table, .. } => {
                if table.is_empty() {
                    return Err(Error::config("potential.table", "must be nonempty"));
                }
                if table.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("potential.table", "values must be finite"));
                }
            }
        }
        Ok(())
    }

    /// `sup |V(n)|` over the whole lattice (over the table for custom potentials).
    pub fn sup_norm(&self) -> f64 {
        match self {
            PotentialSpec::Fibonacci { lambda, .. } => *lambda,
            PotentialSpec::Free => 0.0,
            PotentialSpec::Custom { table, .. } => table.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Coupling constant of a Fibonacci potential.
    pub fn coupling(&self) -> Option<f64> {
        match self {
            PotentialSpec::Fibonacci { lambda, .. } => Some(*lambda),
            _ => None,
        }
    }

    /// `V(n)`.
    pub fn value(&self, n: i64) -> Result<f64> {
        potential_value(self, n)
    }

    /// `V(first), …, V(first + len − 1)`.
    pub fn sample(&self, first: i64, len: usize) -> Result<Vec<f64>> {
        match self {
            PotentialSpec::Fibonacci { lambda, theta } if *theta == 0.0 => {
                // Consecutive differences of ⌊n φ⁻¹⌋ share the floor evaluations.
                let mut out = Vec::with_capacity(len);
                let mut lower = floor_times_inverse_golden(first);
                for n in first..first + len as i64 {
                    let upper = floor_times_inverse_golden(n + 1);
                    out.push(if upper - lower == 1 { *lambda } else { 0.0 });
                    lower = upper;
                }
                Ok(out)
            }
            _ => (first..first + len as i64).map(|n| self.value(n)).collect(),
        }
    }
}

/// Integer square root of a `u128`.
fn isqrt(x: u128) -> u128 {
    if x == 0 {
        return 0;
    }
    let mut r = (x as f64).sqrt() as u128;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// Exact `⌊n φ⁻¹⌋ = ⌊(n√5 − n)/2⌋` in integer arithmetic.
fn floor_times_inverse_golden(n: i64) -> i64 {
    let sq = isqrt(5 * (n as i128 * n as i128) as u128) as i64;
    // n√5 is irrational for n ≠ 0, so its floor is isqrt(5n²) or −isqrt(5n²) − 1.
    let floor_root5 = match n.cmp(&0) {
        std::cmp::Ordering::Greater => sq,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Less => -sq - 1,
    };
    (floor_root5 - n).div_euclid(2)
}

/// Returns `V(n)` for the given potential.
///
/// For the Fibonacci potential with `θ = 0` the indicator is decided in exact
/// integer arithmetic through `⌊(n+1)φ⁻¹⌋ − ⌊nφ⁻¹⌋`; for other phases the
/// fractional part is formed in double-double precision. A fractional part
/// equal to the left endpoint `1 − φ⁻¹` counts as inside.
pub fn potential_value(spec: &PotentialSpec, n: i64) -> Result<f64> {
    match spec {
        PotentialSpec::Free => Ok(0.0),
        PotentialSpec::Fibonacci { lambda, theta } => {
            let inside = if *theta == 0.0 {
                floor_times_inverse_golden(n + 1) - floor_times_inverse_golden(n) == 1
            } else {
                let x = TwoFloat::from(n as f64) * inverse_golden_mean() + *theta;
                let frac = x - x.floor();
                frac >= indicator_left_endpoint() && frac < TwoFloat::from(1.0)
            };
            Ok(if inside { *lambda } else { 0.0 })
        }
        PotentialSpec::Custom { table, first_site } => {
            let last = first_site + table.len() as i64 - 1;
            if n < *first_site || n > last {
                return Err(Error::OutOfRange {
                    site: n,
                    first: *first_site,
                    last,
                });
            }
            Ok(table[(n - first_site) as usize])
        }
    }
}

/// Spectral enclosure constant `K = max(4, sup|V| + 3)`, so that
/// `σ(H) ⊆ [−2 − sup|V|, 2 + sup|V|] ⊆ [−K + 1, K − 1]`.
pub fn spectral_bound(spec: &PotentialSpec) -> f64 {
    (spec.sup_norm() + 3.0).max(4.0)
}

/// Complex amplitudes on the sites `left..=right`; zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeWindow {
    left: i64,
    amplitudes: Vec<Complex64>,
}

impl LatticeWindow {
    /// Window starting at `left` (which must be ≤ 0) holding `amplitudes`.
    /// The window is extended with zeros so that it contains the origin.
    pub fn new(left: i64, mut amplitudes: Vec<Complex64>) -> Self {
        assert!(left <= 0, "window must contain the origin");
        let right = left + amplitudes.len() as i64 - 1;
        if right < 0 {
            amplitudes.resize((1 - left) as usize, Complex64::new(0.0, 0.0));
        }
        LatticeWindow { left, amplitudes }
    }

    /// `δ₀`.
    pub fn delta() -> Self {
        LatticeWindow {
            left: 0,
            amplitudes: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// All-zero window on `[−radius, radius]`.
    pub fn zeros(radius: usize) -> Self {
        LatticeWindow {
            left: -(radius as i64),
            amplitudes: vec![Complex64::new(0.0, 0.0); 2 * radius + 1],
        }
    }

    pub fn left(&self) -> i64 {
        self.left
    }

    pub fn right(&self) -> i64 {
        self.left + self.amplitudes.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    /// Amplitude at site `n`, zero outside the window.
    pub fn get(&self, n: i64) -> Complex64 {
        if n < self.left || n > self.right() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[(n - self.left) as usize]
        }
    }

    pub fn set(&mut self, n: i64, value: Complex64) {
        self.grow_to(n.min(self.left), n.max(self.right()));
        let i = (n - self.left) as usize;
        self.amplitudes[i] = value;
    }

    /// Pads with zeros so that the window covers `[left, right]`.
    pub fn grow_to(&mut self, left: i64, right: i64) {
        if left < self.left {
            let extra = (self.left - left) as usize;
            let mut v = vec![Complex64::new(0.0, 0.0); extra];
            v.extend_from_slice(&self.amplitudes);
            self.amplitudes = v;
            self.left = left;
        }
        if right > self.right() {
            let extra = (right - self.right()) as usize;
            self.amplitudes
                .extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), extra));
        }
    }

    /// `(site, amplitude)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, a)| (self.left + i as i64, *a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self, other⟩ = Σ conj(self(n)) other(n)`.
    pub fn inner(&self, other: &LatticeWindow) -> Complex64 {
        let lo = self.left.max(other.left);
        let hi = self.right().min(other.right());
        (lo..=hi).map(|n| self.get(n).conj() * other.get(n)).sum()
    }
}

/// `(Hψ)(n) = ψ(n+1) + ψ(n−1) + V(n)ψ(n)` on the window grown by one site per side.
pub fn apply_hamiltonian(psi: &LatticeWindow, spec: &PotentialSpec) -> Result<LatticeWindow> {
    let left = psi.left() - 1;
    let len = psi.len() + 2;
    let potential = spec.sample(left, len)?;
    let zero = Complex64::new(0.0, 0.0);
    let src = psi.amplitudes();
    let mut out = vec![zero; len];
    // out[i] corresponds to site left + i; src[j] to site psi.left + j = left + j + 1.
    for (i, slot) in out.iter_mut().enumerate() {
        let at = |j: isize| -> Complex64 {
            if j < 0 || j as usize >= src.len() {
                zero
            } else {
                src[j as usize]
            }
        };
        let j = i as isize - 1;
        *slot = at(j + 1) + at(j - 1) + at(j) * potential[i];
    }
    Ok(LatticeWindow { left, amplitudes: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fibonacci_values_at_zero_phase() {
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        assert_eq!(spec.value(1).unwrap(), 8.0);
        assert_eq!(spec.value(2).unwrap(), 0.0);
        assert_eq!(spec.value(0).unwrap(), 0.0);
        let first: Vec<f64> = (1..=8).map(|n| spec.value(n).unwrap() / 8.0).collect();
        assert_eq!(first, vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn left_endpoint_tie_counts_as_inside() {
        // frac(−φ⁻¹) = 1 − φ⁻¹ exactly.
        let spec = PotentialSpec::fibonacci(1.0, 0.0).unwrap();
        assert_eq!(spec.value(-1).unwrap(), 1.0);
    }

    #[test]
    fn integer_route_matches_double_double_route() {
        // A tiny phase pushes the double-double route through the same
        // classification except at the single tie site n = −1.
        let zero = PotentialSpec::fibonacci(1.0, 0.0).unwrap();
        let tiny = PotentialSpec::fibonacci(1.0, 1e-25).unwrap();
        for n in (-2000i64..2000).chain([999_999_937, -999_999_937, 1_000_000_000]) {
            if n == -1 {
                continue;
            }
            assert_eq!(zero.value(n).unwrap(), tiny.value(n).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn sample_matches_pointwise() {
        let spec = PotentialSpec::fibonacci(3.0, 0.0).unwrap();
        let s = spec.sample(-50, 101).unwrap();
        for (i, v) in s.iter().enumerate() {
            assert_eq!(*v, spec.value(-50 + i as i64).unwrap());
        }
    }

    #[test]
    fn custom_out_of_range() {
        let spec = PotentialSpec::custom(vec![1.0, 2.0], -1).unwrap();
        assert_eq!(spec.value(0).unwrap(), 2.0);
        assert!(matches!(
            spec.value(1),
            Err(Error::OutOfRange {
                site: 1,
                first: -1,
                last: 0
            })
        ));
    }

    #[test]
    fn spectral_bound_examples() {
        assert_eq!(spectral_bound(&PotentialSpec::Free), 4.0);
        assert_eq!(spectral_bound(&PotentialSpec::fibonacci(8.0, 0.0).unwrap()), 11.0);
        assert_eq!(spectral_bound(&PotentialSpec::custom(vec![0.0; 5], -2).unwrap()), 4.0);
    }

    #[test]
    fn hamiltonian_on_delta() {
        let h = apply_hamiltonian(&LatticeWindow::delta(), &PotentialSpec::Free).unwrap();
        assert_eq!(h.left(), -1);
        assert_eq!(h.amplitudes(), &[c(1.0), c(0.0), c(1.0)]);
        let fib = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        let h = apply_hamiltonian(&LatticeWindow::delta(), &fib).unwrap();
        assert_eq!(h.amplitudes(), &[c(1.0), c(0.0), c(1.0)]);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(PotentialSpec::fibonacci(-1.0, 0.0).is_err());
        assert!(PotentialSpec::fibonacci(1.0, 1.0).is_err());
        assert!(PotentialSpec::custom(vec![], 0).is_err());
    }
}
