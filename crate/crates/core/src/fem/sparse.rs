//! Compressed sparse row storage and Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Zero matrix with the sparsity pattern given by per-row column lists.
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        let vals = vec![T::zero(); cols.len()];
        Self { n, row_ptr, cols, vals }
    }

    /// Position of `(row, col)` in the value array; the entry must be in the pattern.
    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        lo + self.cols[lo..hi].binary_search(&col).expect("entry in sparsity pattern")
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: T) {
        let i = self.index(row, col);
        self.vals[i] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.cols[lo..hi].binary_search(&col) {
            Ok(i) => self.vals[lo + i],
            Err(_) => T::zero(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_into(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn mul(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// Largest `|A_ij - A_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                scale = scale.max(self.vals[k].abs());
                worst = worst.max((self.vals[k] - self.get(j, i)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            T::zero()
        }
    }

    /// Principal submatrix on the rows/columns where `keep[i]` is `Some(new index)`.
    pub fn submatrix(&self, keep: &[Option<usize>], m: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..self.n {
            if keep[i].is_none() {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if let Some(j) = keep[self.cols[k]] {
                    cols.push(j);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n: m, row_ptr, cols, vals }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcgReport<T> {
    pub iterations: usize,
    pub relative_residual: T,
}

/// Default stopping tolerance: `1e-12`, or a few ulps above machine precision
/// for narrow scalar types.
pub fn default_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from `x`.
///
/// Stops when `|b - A x| <= tol |b|`; fails after `max_iter` iterations.
pub fn pcg<T: Real>(a: &CsrMatrix<T>, b: &[T], x: &mut [T], tol: T, max_iter: usize) -> Result<PcgReport<T>> {
    let n = a.n;
    let norm = |v: &[T]| v.iter().map(|&t| t * t).sum::<T>().sqrt();
    let dot = |u: &[T], v: &[T]| u.iter().zip(v).map(|(&p, &q)| p * q).sum::<T>();
    let b_norm = norm(b);
    if b_norm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(PcgReport { iterations: 0, relative_residual: T::zero() });
    }
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > T::zero() { d.recip() } else { T::one() })
        .collect();
    let mut r = a.mul(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&r, &d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / b_norm;
    let mut it = 0;
    while rel > tol {
        if it >= max_iter || !rel.is_finite() {
            return Err(Error::SolverDiverged { iterations: it, residual: rel.as_f64() });
        }
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            return Err(Error::SolverDiverged { iterations: it, residual: rel.as_f64() });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = norm(&r) / b_norm;
        it += 1;
    }
    Ok(PcgReport { iterations: it, relative_residual: rel })
}

/// Iteration cap `50 sqrt(n)`, at least 100 so tiny systems are not starved.
pub fn default_max_iter(n: usize) -> usize {
    ((50.0 * (n as f64).sqrt()).ceil() as usize).max(100)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix<f64> {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![i];
                if i > 0 {
                    r.push(i - 1);
                }
                if i + 1 < n {
                    r.push(i + 1);
                }
                r
            })
            .collect();
        let mut a = CsrMatrix::from_pattern(rows);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn pcg_solves_tridiagonal() {
        let n = 200;
        let a = laplace_1d(n);
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = a.mul(&exact);
        let mut x = vec![0.0; n];
        let rep = pcg(&a, &b, &mut x, 1e-12, 10 * n).unwrap();
        assert!(rep.relative_residual <= 1e-12);
        for (u, v) in x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-7);
        }
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn pcg_reports_non_convergence() {
        let a = laplace_1d(400);
        let b = vec![1.0; 400];
        let mut x = vec![0.0; 400];
        match pcg(&a, &b, &mut x, 1e-12, 3) {
            Err(Error::SolverDiverged { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn submatrix_keeps_selected_block() {
        let a = laplace_1d(5);
        let keep = [None, Some(0), Some(1), None, Some(2)];
        let s = a.submatrix(&keep, 3);
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(0, 1), -1.0);
        assert_eq!(s.get(1, 2), 0.0);
        assert_eq!(s.nnz(), 5);
    }
}
