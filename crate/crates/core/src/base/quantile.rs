use crate::error::{BapcError, Result};

/// Inverse of the empirical CDF: the smallest sample value `x` with
/// `F_n(x) >= frac`. `sample` must be sorted ascending.
pub fn empirical_quantile(sample: &[f64], frac: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(BapcError::EmptySample);
    }
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(BapcError::Domain(format!("quantile fraction must lie in (0, 1], got {frac}")));
    }
    if sample.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(BapcError::Domain("sample is not sorted ascending".into()));
    }
    let n = sample.len();
    let nf = n as f64;
    // smallest k with k/n >= frac; correct the ceil for rounding in frac * n
    let mut k = ((frac * nf).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= frac {
        k -= 1;
    }
    while k < n && (k as f64) / nf < frac {
        k += 1;
    }
    Ok(sample[k - 1])
}

/// Sorted copy of a sample, rejecting non-finite values.
pub fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(BapcError::NonFinite("sample"));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}
