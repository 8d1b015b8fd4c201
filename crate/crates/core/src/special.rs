//! Bessel functions of the first kind of integer order.

const BIG: f64 = 1e140;
const SMALL: f64 = 1e-140;

fn start_order(x: f64, n_max: usize) -> usize {
    let m = x + 20.0 * x.cbrt() + 60.0;
    let m = (m.ceil() as usize).max(n_max + 30);
    m + (m & 1)
}

/// `J_0(x), …, J_{n_max}(x)` for `x ≥ 0`, by Miller's backward recurrence.
pub fn bessel_j_sequence(x: f64, n_max: usize) -> Vec<f64> {
    assert!(
        x >= 0.0 && x.is_finite(),
        "bessel argument must be finite and nonnegative"
    );
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let m = start_order(x, n_max);
    let mut next = 0.0f64;
    let mut cur = 1.0f64;
    let mut norm_sq = 0.0f64;
    let mut even_sum = 0.0f64;
    for k in (0..=m).rev() {
        if k <= n_max {
            out[k] = cur;
        }
        let weight = if k == 0 { 1.0 } else { 2.0 };
        norm_sq += weight * cur * cur;
        if k % 2 == 0 {
            even_sum += weight * cur;
        }
        if k == 0 {
            break;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > BIG {
            cur *= SMALL;
            next *= SMALL;
            norm_sq *= SMALL * SMALL;
            even_sum *= SMALL;
            for v in out.iter_mut().skip(k.saturating_sub(1)) {
                *v *= SMALL;
            }
        }
    }
    let scale = norm_sq.sqrt().copysign(even_sum);
    for v in &mut out {
        *v /= scale;
    }
    out
}

/// `J_n(x)` for integer `n` and real `x`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let sign_n = if n < 0 && n % 2 != 0 { -1.0 } else { 1.0 };
    let sign_x = if x < 0.0 && n % 2 != 0 { -1.0 } else { 1.0 };
    let k = n.unsigned_abs() as usize;
    sign_n * sign_x * bessel_j_sequence(x.abs(), k)[k]
}

/// `Σ_{k ≥ N} J_k(x)²` for each requested `N`, in one backward sweep
/// without storing the sequence.
pub fn bessel_tail_sums(x: f64, ns: &[usize]) -> Vec<f64> {
    assert!(
        x >= 0.0 && x.is_finite(),
        "bessel argument must be finite and nonnegative"
    );
    if x == 0.0 {
        return ns.iter().map(|&n| if n == 0 { 1.0 } else { 0.0 }).collect();
    }
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let m = start_order(x, n_max);
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by(|&a, &b| ns[b].cmp(&ns[a]));
    let mut tails = vec![0.0f64; ns.len()];
    let mut cursor = 0;
    let mut next = 0.0f64;
    let mut cur = 1.0f64;
    let mut tail = 0.0f64;
    let mut norm_sq = 0.0f64;
    for k in (0..=m).rev() {
        tail += cur * cur;
        norm_sq += if k == 0 { 1.0 } else { 2.0 } * cur * cur;
        while cursor < order.len() && ns[order[cursor]] >= k {
            tails[order[cursor]] = if ns[order[cursor]] == k { tail } else { 0.0 };
            cursor += 1;
        }
        if k == 0 {
            break;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > BIG {
            let f = SMALL * SMALL;
            cur *= SMALL;
            next *= SMALL;
            tail *= f;
            norm_sq *= f;
            for &i in &order[..cursor] {
                tails[i] *= f;
            }
        }
    }
    tails.iter().map(|t| t / norm_sq).collect()
}
