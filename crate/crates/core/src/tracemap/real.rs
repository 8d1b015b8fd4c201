//! Trace map on the real axis in double-double precision.
//!
//! Inside the spectral bands the traces stay bounded and are kept as plain
//! double-doubles. Off the spectrum they grow doubly exponentially, so once
//! a value leaves `[−1e8, 1e8]` it is carried as a sign and a log-magnitude.

use twofloat::TwoFloat;

const PLAIN_LIMIT: f64 = 1e8;

/// One trace value `x_k(E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceValue {
    Plain(TwoFloat),
    Huge { negative: bool, ln_abs: f64 },
}

impl TraceValue {
    fn plain(x: TwoFloat) -> Self {
        if x.hi().abs() > PLAIN_LIMIT {
            TraceValue::Huge {
                negative: x.hi() < 0.0,
                ln_abs: x.hi().abs().ln(),
            }
        } else {
            TraceValue::Plain(x)
        }
    }

    /// `(sign, ln|x|)` with sign in {−1, 0, 1}.
    fn signed_log(&self) -> (i8, f64) {
        match *self {
            TraceValue::Plain(x) => {
                let h = x.hi();
                if h == 0.0 {
                    (0, f64::NEG_INFINITY)
                } else {
                    (if h < 0.0 { -1 } else { 1 }, h.abs().ln())
                }
            }
            TraceValue::Huge { negative, ln_abs } => (if negative { -1 } else { 1 }, ln_abs),
        }
    }

    pub fn signum(&self) -> i8 {
        self.signed_log().0
    }

    pub fn ln_abs(&self) -> f64 {
        self.signed_log().1
    }

    /// `|x| ≤ bound`.
    pub fn abs_le(&self, bound: f64) -> bool {
        match *self {
            TraceValue::Plain(x) => x.abs() <= TwoFloat::from(bound),
            TraceValue::Huge { ln_abs, .. } => ln_abs <= bound.ln(),
        }
    }

    /// `|x| − bound` as a double (sign is what matters near the threshold).
    pub fn abs_minus(&self, bound: f64) -> f64 {
        match *self {
            TraceValue::Plain(x) => (x.abs() - bound).hi(),
            TraceValue::Huge { ln_abs, .. } => ln_abs.exp() - bound,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            TraceValue::Plain(x) => x.hi(),
            TraceValue::Huge { negative, ln_abs } => {
                let m = ln_abs.exp();
                if negative {
                    -m
                } else {
                    m
                }
            }
        }
    }
}

/// `2ab − c`.
fn next_value(a: TraceValue, b: TraceValue, c: TraceValue) -> TraceValue {
    if let (TraceValue::Plain(a), TraceValue::Plain(b), TraceValue::Plain(c)) = (a, b, c) {
        return TraceValue::plain(a * b * 2.0 - c);
    }
    let (sa, la) = a.signed_log();
    let (sb, lb) = b.signed_log();
    let (sc, lc) = c.signed_log();
    let sp = sa * sb;
    let lp = std::f64::consts::LN_2 + la + lb;
    // p − c in signed log form.
    let (s, l) = match (sp, -sc) {
        (0, 0) => (0, f64::NEG_INFINITY),
        (0, s) => (s, lc),
        (s, 0) => (s, lp),
        (s1, s2) => {
            let (hi_s, hi_l, lo_s, lo_l) = if lp >= lc { (s1, lp, s2, lc) } else { (s2, lc, s1, lp) };
            let r = (lo_l - hi_l).exp();
            if hi_s == lo_s {
                (hi_s, hi_l + r.ln_1p())
            } else if r >= 1.0 {
                (0, f64::NEG_INFINITY)
            } else {
                (hi_s, hi_l + (-r).ln_1p())
            }
        }
    };
    if s == 0 {
        TraceValue::Plain(TwoFloat::from(0.0))
    } else if l < PLAIN_LIMIT.ln() {
        let m = l.exp();
        TraceValue::Plain(TwoFloat::from(if s < 0 { -m } else { m }))
    } else {
        TraceValue::Huge {
            negative: s < 0,
            ln_abs: l,
        }
    }
}

/// Evaluates the trace map at real energies for a fixed coupling.
#[derive(Debug, Clone, Copy)]
pub struct RealTrace {
    pub lambda: f64,
}

impl RealTrace {
    pub fn new(lambda: f64) -> Self {
        RealTrace { lambda }
    }

    /// `x_{−1}(E), …, x_k(E)`.
    pub fn values(&self, e: TwoFloat, k: usize) -> Vec<TraceValue> {
        let mut xs = Vec::with_capacity(k + 2);
        xs.push(TraceValue::Plain(TwoFloat::from(1.0)));
        xs.push(TraceValue::plain(e / 2.0));
        if k >= 1 {
            xs.push(TraceValue::plain((e - self.lambda) / 2.0));
        }
        while xs.len() < k + 2 {
            let n = xs.len();
            xs.push(next_value(xs[n - 1], xs[n - 2], xs[n - 3]));
        }
        xs
    }

    /// `x_k(E)`.
    pub fn value(&self, e: TwoFloat, k: usize) -> TraceValue {
        match k {
            0 => TraceValue::plain(e / 2.0),
            1 => TraceValue::plain((e - self.lambda) / 2.0),
            _ => {
                let mut c = TraceValue::plain(e / 2.0);
                let mut b = TraceValue::plain((e - self.lambda) / 2.0);
                let mut a = next_value(b, c, TraceValue::Plain(TwoFloat::from(1.0)));
                for _ in 3..=k {
                    let n = next_value(a, b, c);
                    c = b;
                    b = a;
                    a = n;
                }
                a
            }
        }
    }

    /// `x_k(E)` and `x_k'(E)` when all traces up to level `k` stay plain.
    pub fn value_and_derivative(&self, e: TwoFloat, k: usize) -> Option<(TwoFloat, TwoFloat)> {
        let half = TwoFloat::from(0.5);
        let zero = TwoFloat::from(0.0);
        // (value, derivative) for levels −1, 0, 1.
        let mut c = (TwoFloat::from(1.0), zero);
        let mut b = (e / 2.0, half);
        if k == 0 {
            return Some(b);
        }
        let mut a = ((e - self.lambda) / 2.0, half);
        for _ in 2..=k {
            let v = a.0 * b.0 * 2.0 - c.0;
            let d = (a.1 * b.0 + a.0 * b.1) * 2.0 - c.1;
            if v.hi().abs() > PLAIN_LIMIT {
                return None;
            }
            c = b;
            b = a;
            a = (v, d);
        }
        Some(a)
    }

    /// `m(E) = #{0 ≤ l ≤ k−1 : |x_l(E)| ≤ 1}`.
    pub fn profile(&self, e: TwoFloat, k: usize) -> u32 {
        self.values(e, k)[1..k + 1].iter().filter(|x| x.abs_le(1.0)).count() as u32
    }
}
