use statrs::function::factorial::ln_factorial;

use super::EvalError;

/// Relative tolerance when comparing outcome probabilities to the observed one.
const POINT_TOLERANCE: f64 = 1e-7;

/// Two-sided Fisher exact test on `[[a, b], [c, d]]`: sum of hypergeometric
/// probabilities (fixed margins) not exceeding the observed table's.
pub fn fisher_exact(table: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = table;
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    if n == 0 {
        return 1.0;
    }
    let c2 = n - c1;
    let base = ln_factorial(r1) + ln_factorial(r2) + ln_factorial(c1) + ln_factorial(c2) - ln_factorial(n);
    let ln_pmf =
        |x: u64| base - ln_factorial(x) - ln_factorial(r1 - x) - ln_factorial(c1 - x) - ln_factorial(r2 + x - c1);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let observed = ln_pmf(a).exp();
    let threshold = observed * (1.0 + POINT_TOLERANCE);
    let p: f64 = (lo..=hi).map(|x| ln_pmf(x).exp()).filter(|p| *p <= threshold).sum();
    p.min(1.0)
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_bonferroni(pvals: &[f64]) -> Result<Vec<f64>, EvalError> {
    if let Some(bad) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(EvalError::Probability(*bad));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvals[i].total_cmp(&pvals[j]).then(i.cmp(&j)));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0_f64;
    for (rank, &idx) in order.iter().enumerate() {
        running = running.max((m - rank) as f64 * pvals[idx]);
        adjusted[idx] = running.min(1.0);
    }
    Ok(adjusted)
}
