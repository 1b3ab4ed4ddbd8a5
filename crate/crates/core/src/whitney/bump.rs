//! One-dimensional cutoff profile and its exact derivatives.
//!
//! `θ(t) = 1` for `|t| ≤ 1`, `θ(t) = 0` for `|t| ≥ 9/8`, and in between
//! `θ(t) = g(8 (9/8 − |t|))` with the smooth step
//! `g(s) = e(s) / (e(s) + e(1 − s))`, `e(s) = exp(−1/s)`.
//! Derivatives come from truncated Taylor arithmetic, so they are exact up
//! to rounding.

use crate::multiindex::MAX_ORDER;

/// Outer edge of the transition band, as a multiple of the half side.
pub const STAR: f64 = 9.0 / 8.0;

const LEN: usize = MAX_ORDER + 1;

/// `out[k] = θ^{(k)}(t)` for `k ≤ order`.
pub fn profile_derivs(t: f64, order: usize, out: &mut [f64]) {
    debug_assert!(order <= MAX_ORDER);
    let a = t.abs();
    for o in out.iter_mut().take(order + 1) {
        *o = 0.0;
    }
    if a <= 1.0 {
        out[0] = 1.0;
        return;
    }
    if a >= STAR {
        return;
    }
    let s = 8.0 * (STAR - a);
    let g = step_series(s, order);
    let ds = if t > 0.0 { -8.0 } else { 8.0 };
    let mut fact = 1.0;
    let mut scale = 1.0;
    for k in 0..=order {
        if k > 0 {
            fact *= k as f64;
            scale *= ds;
        }
        out[k] = g[k] * fact * scale;
    }
}

/// Taylor coefficients of `g` at `s ∈ (0, 1)`.
fn step_series(s: f64, order: usize) -> [f64; LEN] {
    let len = order + 1;
    // w(s) = 1/s − 1/(1 − s), so g = 1 / (1 + exp(w)).
    let mut w = [0.0; LEN];
    let (a, b) = (1.0 / s, 1.0 / (1.0 - s));
    let (mut pa, mut pb) = (a, b);
    for (k, wk) in w.iter_mut().enumerate().take(len) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *wk = sign * pa - pb;
        pa *= a;
        pb *= b;
    }
    let mut out = [0.0; LEN];
    if w[0] > 700.0 {
        return out;
    }
    if w[0] < -700.0 {
        out[0] = 1.0;
        return out;
    }
    if w[0] <= 0.0 {
        let x = exp_series(&w, len);
        let mut den = x;
        den[0] += 1.0;
        recip_series(&den, len)
    } else {
        let mut neg = w;
        for v in neg.iter_mut() {
            *v = -*v;
        }
        let y = exp_series(&neg, len);
        let mut den = y;
        den[0] += 1.0;
        let r = recip_series(&den, len);
        for k in 0..len {
            out[k] = (0..=k).map(|j| y[j] * r[k - j]).sum();
        }
        out
    }
}

fn exp_series(u: &[f64; LEN], len: usize) -> [f64; LEN] {
    let mut e = [0.0; LEN];
    e[0] = u[0].exp();
    for k in 1..len {
        let mut s = 0.0;
        for j in 1..=k {
            s += j as f64 * u[j] * e[k - j];
        }
        e[k] = s / k as f64;
    }
    e
}

fn recip_series(a: &[f64; LEN], len: usize) -> [f64; LEN] {
    let mut r = [0.0; LEN];
    r[0] = 1.0 / a[0];
    for k in 1..len {
        let mut s = 0.0;
        for j in 1..=k {
            s += a[j] * r[k - j];
        }
        r[k] = -s * r[0];
    }
    r
}
