//! The trace sequence `x_{k+1} = 2 x_k x_{k−1} − x_{k−2}` at a complex energy,
//! seeded with `x_{−1} = 1`, `x_0 = z/2`, `x_1 = (z − λ)/2`.

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::ldexp;

/// Arithmetic needed by the trace recursion and the Fricke invariant.
pub trait TraceArith: Clone {
    fn from_complex(z: Complex64) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn double(&self) -> Self;
    fn halve(&self) -> Self;
    /// `log2 |x|`, `−∞` for zero.
    fn log2_abs(&self) -> f64;
    fn to_complex(&self) -> Complex64;
}

/// Runs the recursion up to level `k_max`; returns `x_{−1}, …, x_{k_max}`.
/// Stops early once `log2 |x|` exceeds `stop_log2`.
pub fn trace_recursion<F: TraceArith>(z: Complex64, lambda: f64, k_max: usize, stop_log2: f64) -> Vec<F> {
    let mut xs = Vec::with_capacity(k_max + 2);
    xs.push(F::from_complex(Complex64::new(1.0, 0.0)));
    let zz = F::from_complex(z);
    xs.push(zz.halve());
    if k_max >= 1 {
        xs.push(zz.sub(&F::from_complex(Complex64::new(lambda, 0.0))).halve());
    }
    while xs.len() < k_max + 2 {
        let n = xs.len();
        if xs[n - 1].log2_abs() > stop_log2 {
            break;
        }
        let next = xs[n - 1].mul(&xs[n - 2]).double().sub(&xs[n - 3]);
        xs.push(next);
    }
    xs
}

/// `x_{k+1}² + x_k² + x_{k−1}² − 2 x_{k+1} x_k x_{k−1} − 1`.
pub fn fricke<F: TraceArith>(next: &F, cur: &F, prev: &F) -> F {
    let one = F::from_complex(Complex64::new(1.0, 0.0));
    next.mul(next)
        .add(&cur.mul(cur))
        .add(&prev.mul(prev))
        .sub(&next.mul(cur).mul(prev).double())
        .sub(&one)
}

/// Complex number `mantissa · 2^exponent` with an unbounded exponent.
///
/// Values whose components stay within `2^±500` keep `exponent = 0`, so in
/// that range arithmetic coincides with plain `f64` arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub exponent: i64,
}

impl ScaledComplex {
    fn normalized(mut self) -> Self {
        let m = self.mantissa.re.abs().max(self.mantissa.im.abs());
        if m == 0.0 {
            self.exponent = 0;
            return self;
        }
        if m > 2f64.powi(500) || (self.exponent != 0 && m < 2f64.powi(-500)) {
            let shift = m.log2().floor() as i64;
            let f = ldexp(1.0, -shift);
            self.mantissa *= f;
            self.exponent += shift;
        }
        if self.exponent != 0 && self.exponent.abs() < 400 {
            // Fold back into the plain range when possible.
            let folded = Complex64::new(
                ldexp(self.mantissa.re, self.exponent),
                ldexp(self.mantissa.im, self.exponent),
            );
            let fm = folded.re.abs().max(folded.im.abs());
            if fm <= 2f64.powi(500) && fm >= 2f64.powi(-500) {
                return ScaledComplex {
                    mantissa: folded,
                    exponent: 0,
                };
            }
        }
        self
    }

    fn aligned(&self, exponent: i64) -> Complex64 {
        let d = self.exponent - exponent;
        Complex64::new(ldexp(self.mantissa.re, d), ldexp(self.mantissa.im, d))
    }
}

impl TraceArith for ScaledComplex {
    fn from_complex(z: Complex64) -> Self {
        ScaledComplex {
            mantissa: z,
            exponent: 0,
        }
        .normalized()
    }
    fn mul(&self, rhs: &Self) -> Self {
        ScaledComplex {
            mantissa: self.mantissa * rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
        .normalized()
    }
    fn sub(&self, rhs: &Self) -> Self {
        self.add(&ScaledComplex {
            mantissa: -rhs.mantissa,
            exponent: rhs.exponent,
        })
    }
    fn add(&self, rhs: &Self) -> Self {
        let e = self.exponent.max(rhs.exponent);
        ScaledComplex {
            mantissa: self.aligned(e) + rhs.aligned(e),
            exponent: e,
        }
        .normalized()
    }
    fn double(&self) -> Self {
        ScaledComplex {
            mantissa: self.mantissa * 2.0,
            exponent: self.exponent,
        }
        .normalized()
    }
    fn halve(&self) -> Self {
        ScaledComplex {
            mantissa: self.mantissa * 0.5,
            exponent: self.exponent,
        }
        .normalized()
    }
    fn log2_abs(&self) -> f64 {
        self.mantissa.norm().log2() + self.exponent as f64
    }
    fn to_complex(&self) -> Complex64 {
        self.aligned(0)
    }
}

/// Fixed-point complex number `(re + i·im) · 2^−FRACTION_BITS` with exact
/// integer storage; products are truncated back to the fixed scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedComplex {
    re: BigInt,
    im: BigInt,
}

/// Fractional bits of [`FixedComplex`].
pub const FRACTION_BITS: u64 = 1536;

fn fixed_from_f64(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::from(0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let shift = e + FRACTION_BITS as i64;
    let m = BigInt::from(mant) * sign;
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn fixed_to_f64(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return 0.0;
    }
    // Keep the top 64 bits and scale.
    let drop = bits.saturating_sub(64);
    let top: BigInt = x >> drop as usize;
    let top = i128::try_from(&top).expect("64-bit window") as f64;
    ldexp(top, drop as i64 - FRACTION_BITS as i64)
}

impl TraceArith for FixedComplex {
    fn from_complex(z: Complex64) -> Self {
        FixedComplex {
            re: fixed_from_f64(z.re),
            im: fixed_from_f64(z.im),
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        let re = &self.re * &rhs.re - &self.im * &rhs.im;
        let im = &self.re * &rhs.im + &self.im * &rhs.re;
        FixedComplex {
            re: re >> FRACTION_BITS as usize,
            im: im >> FRACTION_BITS as usize,
        }
    }
    fn sub(&self, rhs: &Self) -> Self {
        FixedComplex {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
    fn add(&self, rhs: &Self) -> Self {
        FixedComplex {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
    fn double(&self) -> Self {
        FixedComplex {
            re: &self.re << 1usize,
            im: &self.im << 1usize,
        }
    }
    fn halve(&self) -> Self {
        // z/2 and (z − λ)/2 of f64 inputs are exact at this scale.
        FixedComplex {
            re: &self.re >> 1usize,
            im: &self.im >> 1usize,
        }
    }
    fn log2_abs(&self) -> f64 {
        let b = self.re.bits().max(self.im.bits());
        if b == 0 {
            return f64::NEG_INFINITY;
        }
        self.to_complex().norm().log2()
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(fixed_to_f64(&self.re), fixed_to_f64(&self.im))
    }
}

/// Trace values `x_{−1}, …, x_k` at one energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceState {
    pub z: Complex64,
    pub lambda: f64,
    /// `values[j]` holds `x_{j−1}`.
    pub values: Vec<ScaledComplex>,
    /// Fricke invariant at the highest level where all three magnitudes are
    /// below `1e8`; `None` if no such level exists.
    pub invariant_value: Option<Complex64>,
}

impl TraceState {
    /// Highest level stored.
    pub fn level(&self) -> usize {
        self.values.len() - 2
    }

    /// `x_k` in scaled form; `k ≥ −1`.
    pub fn scaled(&self, k: i64) -> ScaledComplex {
        self.values[(k + 1) as usize]
    }

    /// `x_k` as a plain complex number; may overflow to infinity.
    pub fn x(&self, k: i64) -> Complex64 {
        self.scaled(k).to_complex()
    }
}

/// Trace values up to `k_max` at `z` for coupling `λ`.
pub fn trace_sequence(z: Complex64, k_max: usize, lambda: f64) -> Result<TraceState> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain("coupling must be finite and positive"));
    }
    let values: Vec<ScaledComplex> = trace_recursion(z, lambda, k_max, f64::INFINITY);
    let plain_limit = 1e8f64.log2();
    let invariant_value = (1..values.len() - 1)
        .rev()
        .find(|&j| (j - 1..=j + 1).all(|i| values[i].log2_abs() < plain_limit))
        .map(|j| fricke(&values[j + 1], &values[j], &values[j - 1]).to_complex());
    Ok(TraceState {
        z,
        lambda,
        values,
        invariant_value,
    })
}

/// Relative deviation of the Fricke invariant from `λ²/4` at each level
/// `k = 0, 1, …` (the triple `x_{k+1}, x_k, x_{k−1}`), evaluated in
/// [`FixedComplex`] arithmetic. Levels where any of the three magnitudes
/// reaches `max_magnitude` are skipped; the recursion stops past them.
pub fn fricke_deviations(z: Complex64, lambda: f64, k_max: usize, max_magnitude: f64) -> Vec<(usize, f64)> {
    let stop = max_magnitude.log2();
    let xs: Vec<FixedComplex> = trace_recursion(z, lambda, k_max, stop + 2.0);
    let target = lambda * lambda / 4.0;
    let mut out = Vec::new();
    for j in 1..xs.len() - 1 {
        if (j - 1..=j + 1).any(|i| xs[i].log2_abs() >= stop) {
            continue;
        }
        let inv = fricke(&xs[j + 1], &xs[j], &xs[j - 1]).to_complex();
        out.push((j - 1, (inv - target).norm() / target));
    }
    out
}
