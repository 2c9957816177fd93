//! Dense helpers for the tiny systems that show up in chart computations.

use crate::scalar::Real;

/// Least-squares solution of the `rows × cols` system `a x = b` (row major) by
/// Householder QR. Returns the solution and the residual norm `‖a x − b‖`.
///
/// Requires `rows >= cols` and full column rank; rank deficiency yields
/// non-finite entries.
pub fn least_squares<T: Real>(a: &[T], rows: usize, cols: usize, b: &[T]) -> (Vec<T>, T) {
    assert!(rows >= cols && a.len() == rows * cols && b.len() == rows);
    let mut r = a.to_vec();
    let mut qtb = b.to_vec();
    for k in 0..cols {
        let norm = (k..rows).map(|i| r[i * cols + k].powi(2)).sum::<T>().sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if r[k * cols + k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..rows).map(|i| r[i * cols + k]).collect();
        v[0] -= alpha;
        let vnorm2 = v.iter().map(|&e| e * e).sum::<T>();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..cols {
            let dot = (k..rows).map(|i| v[i - k] * r[i * cols + j]).sum::<T>();
            let f = (dot + dot) / vnorm2;
            for i in k..rows {
                r[i * cols + j] -= f * v[i - k];
            }
        }
        let dot = (k..rows).map(|i| v[i - k] * qtb[i]).sum::<T>();
        let f = (dot + dot) / vnorm2;
        for i in k..rows {
            qtb[i] -= f * v[i - k];
        }
    }
    let mut x = vec![T::zero(); cols];
    for k in (0..cols).rev() {
        let mut s = qtb[k];
        for j in k + 1..cols {
            s -= r[k * cols + j] * x[j];
        }
        x[k] = s / r[k * cols + k];
    }
    let residual = (0..rows)
        .map(|i| {
            let ax = (0..cols).map(|j| a[i * cols + j] * x[j]).sum::<T>();
            (ax - b[i]).powi(2)
        })
        .sum::<T>()
        .sqrt();
    (x, residual)
}

/// Numerical rank by Gaussian elimination with full pivoting.
pub fn rank<T: Real>(a: &[T], rows: usize, cols: usize, tol: T) -> usize {
    let mut m = a.to_vec();
    let mut rank = 0;
    let mut used_rows = vec![false; rows];
    let mut used_cols = vec![false; cols];
    loop {
        let mut best = (T::zero(), usize::MAX, usize::MAX);
        for i in (0..rows).filter(|&i| !used_rows[i]) {
            for j in (0..cols).filter(|&j| !used_cols[j]) {
                let v = m[i * cols + j].abs();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.0 <= tol {
            return rank;
        }
        let (_, pi, pj) = best;
        used_rows[pi] = true;
        used_cols[pj] = true;
        rank += 1;
        for i in (0..rows).filter(|&i| !used_rows[i]) {
            let f = m[i * cols + pj] / m[pi * cols + pj];
            for j in 0..cols {
                let d = f * m[pi * cols + j];
                m[i * cols + j] -= d;
            }
        }
    }
}

/// Solves the square system `a x = b` with partial pivoting; `None` when singular.
pub fn solve_square<T: Real>(a: &[T], n: usize, b: &[T]) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i * n + k].abs().partial_cmp(&m[j * n + k].abs()).unwrap())?;
        if m[p * n + k].abs() <= T::epsilon() * T::lit(1e-3) {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            rhs.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            for j in k..n {
                let d = f * m[k * n + j];
                m[i * n + j] -= d;
            }
            let d = f * rhs[k];
            rhs[i] -= d;
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Some(x)
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
