//! Local linear regression smoother with tricube weights.
//!
//! For each abscissa the `floor(span * n)` nearest points (at least two)
//! define the bandwidth `h` (distance to the farthest of them); weights are
//! `(1 - (d/h)^3)^3` and a weighted straight line is fitted. A single
//! pass, no robustness iterations.

use crate::error::{BapcError, Result};

pub fn local_linear(xs: &[f64], ys: &[f64], span: f64) -> Result<Vec<f64>> {
    let n = xs.len();
    if n != ys.len() {
        return Err(BapcError::DimensionMismatch { expected: n, got: ys.len() });
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(BapcError::Domain(format!("span must be positive, got {span}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(BapcError::NonFinite("smoother input"));
    }
    if n < 3 {
        return Ok(ys.to_vec());
    }
    let q = ((span * n as f64).floor() as usize).clamp(2, n);
    let mut dist = vec![0.0; n];
    let out = (0..n)
        .map(|i| {
            let x0 = xs[i];
            for (d, &x) in dist.iter_mut().zip(xs) {
                *d = (x - x0).abs();
            }
            let mut sorted = dist.clone();
            sorted.sort_by(f64::total_cmp);
            let mut h = sorted[q - 1];
            if span > 1.0 {
                h *= span;
            }
            fit_at(xs, ys, &dist, h, x0)
        })
        .collect();
    Ok(out)
}

fn fit_at(xs: &[f64], ys: &[f64], dist: &[f64], h: f64, x0: f64) -> f64 {
    let (mut sw, mut swx, mut swy) = (0.0, 0.0, 0.0);
    let ws: Vec<f64> = dist
        .iter()
        .map(|&d| {
            if h <= 0.0 {
                if d == 0.0 { 1.0 } else { 0.0 }
            } else {
                let u = d / h;
                if u < 1.0 { (1.0 - u * u * u).powi(3) } else { 0.0 }
            }
        })
        .collect();
    for ((&w, &x), &y) in ws.iter().zip(xs).zip(ys) {
        sw += w;
        swx += w * x;
        swy += w * y;
    }
    if sw <= 0.0 {
        return ys[xs.iter().position(|&x| x == x0).unwrap_or(0)];
    }
    let xm = swx / sw;
    let ym = swy / sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((&w, &x), &y) in ws.iter().zip(xs).zip(ys) {
        sxx += w * (x - xm) * (x - xm);
        sxy += w * (x - xm) * (y - ym);
    }
    if sxx <= 1e-14 * (1.0 + xm * xm) * sw {
        return ym;
    }
    ym + sxy / sxx * (x0 - xm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_lines_exactly() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let s = local_linear(&xs, &ys, 0.25).unwrap();
        for (a, b) in s.iter().zip(&ys) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_stays_constant() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let s = local_linear(&xs, &[4.0; 10], 0.3).unwrap();
        assert!(s.iter().all(|v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn damps_alternating_noise() {
        let xs: Vec<f64> = (0..100).map(f64::from).collect();
        let ys: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = local_linear(&xs, &ys, 0.25).unwrap();
        assert!(s[10..90].iter().all(|v| v.abs() < 0.1));
    }

    #[test]
    fn rejects_bad_span() {
        assert!(local_linear(&[0.0, 1.0, 2.0], &[0.0; 3], 0.0).is_err());
    }
}
