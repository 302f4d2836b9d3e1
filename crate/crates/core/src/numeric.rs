//! Extended-real helpers used throughout the log-domain code.
//!
//! Conventions: `+inf` encodes an infinite cost, `-inf` a log of zero,
//! `exp(-inf) = 0` and `0 * inf = 0`.

/// `log(exp(a) + exp(b))` without overflow. `-inf` is the neutral element.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted `log(sum(exp(x)))`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    log_sum_exp_iter(xs.iter().copied())
}

/// [`log_sum_exp`] over an iterator (two passes are avoided by re-iterating a clone).
pub fn log_sum_exp_iter<I>(xs: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Product with the `0 * inf = 0` convention.
#[inline]
pub fn mul_ext(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// For every index `k`, the log-sum-exp of `xs` with entry `k` left out.
///
/// Computed from prefix and suffix sums so that a dominant entry does not
/// cancel catastrophically against the full sum.
pub fn leave_one_out_lse(xs: &[f64], out: &mut [f64]) {
    let n = xs.len();
    debug_assert_eq!(out.len(), n);
    if n == 0 {
        return;
    }
    // out[k] first holds the prefix LSE of xs[..k].
    let mut acc = f64::NEG_INFINITY;
    for k in 0..n {
        out[k] = acc;
        acc = log_add_exp(acc, xs[k]);
    }
    let mut suffix = f64::NEG_INFINITY;
    for k in (0..n).rev() {
        out[k] = log_add_exp(out[k], suffix);
        suffix = log_add_exp(suffix, xs[k]);
    }
}
