use statrs::function::factorial::ln_binomial;

use super::EvalError;

const BISECTION_TOLERANCE: f64 = 1e-12;

fn ln_pmf(n: u64, i: u64, ln_p: f64, ln_q: f64) -> f64 {
    let a = if i == 0 { 0.0 } else { i as f64 * ln_p };
    let b = if i == n { 0.0 } else { (n - i) as f64 * ln_q };
    ln_binomial(n, i) + a + b
}

/// P(Bin(n, p) ≥ k).
pub fn binomial_tail_ge(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    (k..=n).map(|i| ln_pmf(n, i, ln_p, ln_q).exp()).sum::<f64>().min(1.0)
}

/// P(Bin(n, p) ≤ k).
pub fn binomial_tail_le(k: u64, n: u64, p: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    (0..=k).map(|i| ln_pmf(n, i, ln_p, ln_q).exp()).sum::<f64>().min(1.0)
}

/// Bisection for the boundary of `{p : pred(p)}` on (0, 1) where pred is
/// monotone: false→true when `rising`, true→false otherwise.
fn bisect(rising: bool, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if pred(mid) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided Clopper-Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> Result<(f64, f64), EvalError> {
    if k > n || n == 0 {
        return Err(EvalError::Counts { successes: k, trials: n });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EvalError::Confidence(confidence));
    }
    let half = (1.0 - confidence) / 2.0;
    let lo = if k == 0 { 0.0 } else { bisect(true, |p| binomial_tail_ge(k, n, p) >= half) };
    let hi = if k == n { 1.0 } else { bisect(false, |p| binomial_tail_le(k, n, p) >= half) };
    Ok((lo, hi))
}
