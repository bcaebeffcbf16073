//! Small dense linear algebra for the normal equations.

use crate::error::{BapcError, Result};

/// Row-major square matrix of side `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }
}

/// X'X and X'v for a design given as rows (each row already includes the
/// intercept entry).
pub fn gram(rows: &[Vec<f64>]) -> Square {
    let k = rows.first().map_or(0, Vec::len);
    let mut g = Square::zeros(k);
    for row in rows {
        for i in 0..k {
            for j in i..k {
                g.add(i, j, row[i] * row[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            let v = g.get(j, i);
            g.data[i * k + j] = v;
        }
    }
    g
}

pub fn xt_v(rows: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let k = rows.first().map_or(0, Vec::len);
    let mut out = vec![0.0; k];
    for (row, &vi) in rows.iter().zip(v) {
        for (o, &x) in out.iter_mut().zip(row) {
            *o += x * vi;
        }
    }
    out
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot smaller than `1e-12` times the largest absolute entry of `a` is
/// reported as rank deficiency.
pub fn solve(a: &Square, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    if b.len() != n {
        return Err(BapcError::DimensionMismatch { expected: n, got: b.len() });
    }
    let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !scale.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(BapcError::NonFinite("linear system"));
    }
    let tol = 1e-12 * scale;
    let mut m = a.data.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= tol || scale == 0.0 {
            return Err(BapcError::RankDeficient { column: col, pivot: pmax });
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            rhs.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let factor = m[r * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[r * n + j] -= factor * m[col * n + j];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i * n + j] * x[j]).sum();
        x[i] = (rhs[i] - s) / m[i * n + i];
    }
    Ok(x)
}
