//! Compressed sparse-row matrices and a Jacobi-preconditioned conjugate
//! gradient solver for the symmetric positive definite Galerkin systems.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate `(row, col)` entries. The result does not depend on the
    /// order of `entries`: duplicates are summed after sorting by position and value.
    pub fn from_triplets(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(row, col, _)) = entries.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::IndexOutOfRange { row, col, rows, cols });
        }
        if let Some(&(row, col, v)) = entries.iter().find(|e| !e.2.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value {v} at ({row}, {col})")));
        }
        let mut sorted = entries.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));

        let mut row_offsets = vec![0usize; rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self { rows, cols, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `r`, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        match self.col_indices[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|r| self.get(r, r)).collect()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: x.len() });
        }
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: y.len() });
        }
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
        Ok(())
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.rows).flat_map(|r| self.row(r).map(move |(c, v)| (v - self.get(c, r)).abs())).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖` of the returned iterate (zero when `b = 0`).
    pub relative_residual: f64,
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` with diagonal
/// preconditioning. On success `‖b − A x‖ ≤ rel_tol ‖b‖`, checked on the true
/// residual. Fails after `max_iter` iterations or once restarts stagnate.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgSolution> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: a.cols() });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    if rel_tol.is_nan() || rel_tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("relative tolerance must be positive, got {rel_tol}")));
    }
    let diag = a.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, &d)| d.is_nan() || d <= 0.0) {
        return Err(Error::NonPositiveDiagonal { row, value });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgSolution { x, iterations: 0, relative_residual: 0.0 });
    }
    let target = rel_tol * b_norm;

    let mut r = b.to_vec();
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    // Restart from the true residual whenever the recursive one claims convergence
    // but the true one disagrees. A restart that fails to halve the true
    // residual means it has reached the rounding level of `A x`: give up.
    let mut last_restart = f64::INFINITY;
    loop {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while norm(&r) > target && iterations < max_iter {
            a.spmv_into(&p, &mut ap)?;
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(Error::InvalidArgument("matrix is not positive definite".into()));
            }
            let alpha = rz / pap;
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
            z.iter_mut().zip(r.iter().zip(&inv_diag)).for_each(|(zi, (ri, di))| *zi = ri * di);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
            iterations += 1;
        }
        a.spmv_into(&x, &mut ap)?;
        r.iter_mut().zip(b.iter().zip(&ap)).for_each(|(ri, (bi, axi))| *ri = bi - axi);
        let true_residual = norm(&r);
        if true_residual <= target {
            return Ok(CgSolution { x, iterations, relative_residual: true_residual / b_norm });
        }
        if iterations >= max_iter || true_residual > 0.5 * last_restart {
            return Err(Error::NotConverged { iterations, residual: true_residual / b_norm });
        }
        last_restart = true_residual;
    }
}

/// Sparse Cholesky solve of the symmetric positive definite `A x = b`
/// followed by one step of iterative refinement. Only the lower triangle of
/// `a` is read.
pub fn cholesky_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    use faer::sparse::{SparseColMat, Triplet};

    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: a.cols() });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    let lower: Vec<Triplet<usize, usize, f64>> =
        (0..n).flat_map(|r| a.row(r).filter(move |&(c, _)| c <= r).map(move |(c, v)| Triplet::new(r, c, v))).collect();
    let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
        .map_err(|e| Error::InvalidArgument(format!("sparse matrix: {e:?}")))?;
    let llt = matrix
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| Error::InvalidArgument(format!("matrix is not positive definite: {e:?}")))?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let x = llt.solve(faer::Mat::from_fn(n, 1, |i, _| rhs[i]));
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(b);
    let ax = a.spmv(&x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    x.iter_mut().zip(solve(&r)).for_each(|(xi, d)| *xi += d);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(1, 1, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(a.to_dense(), vec![vec![3.0]]);
    }

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let a = CsrMatrix::from_triplets(2, 2, &[]).unwrap();
        assert_eq!(a.nnz(), 0);
        assert_eq!(a.to_dense(), vec![vec![0.0; 2]; 2]);
        assert_eq!(a.spmv(&[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn out_of_range_triplet() {
        let err = CsrMatrix::from_triplets(2, 2, &[(0, 2, 1.0)]);
        assert!(matches!(err, Err(Error::IndexOutOfRange { row: 0, col: 2, .. })));
    }

    #[test]
    fn spmv_small() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
        let x = [0.5, -4.0, 7.0];
        assert_eq!(CsrMatrix::identity(3).spmv(&x).unwrap(), x.to_vec());
        assert!(matches!(a.spmv(&[1.0]), Err(Error::DimensionMismatch { expected: 2, actual: 1 })));
    }

    #[test]
    fn cg_identity_one_iteration() {
        let b = [1.0, -2.0, 3.0, 0.25];
        let sol = cg_solve(&CsrMatrix::identity(4), &b, 1e-12, 10).unwrap();
        assert!(sol.iterations <= 1);
        assert_eq!(sol.x, b.to_vec());
    }

    #[test]
    fn cg_zero_rhs() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 3.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let sol = cg_solve(&a, &[0.0, 0.0], 1e-12, 10).unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn cg_rejects_bad_diagonal() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(cg_solve(&a, &[1.0, 1.0], 1e-12, 10), Err(Error::NonPositiveDiagonal { row: 1, .. })));
        let missing = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(cg_solve(&missing, &[1.0, 1.0], 1e-12, 10), Err(Error::NonPositiveDiagonal { row: 1, .. })));
    }

    #[test]
    fn cholesky_matches_cg_on_small_system() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 2, 2.0)]).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &b).unwrap();
        let y = cg_solve(&a, &b, 1e-14, 10).unwrap().x;
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - yi).abs() < 1e-14);
        }
        let bad = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(cholesky_solve(&bad, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn cg_reports_non_convergence() {
        // 1D Laplacian needs n iterations; allow only 2.
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let err = cg_solve(&a, &vec![1.0; n], 1e-12, 2).unwrap_err();
        match err {
            Error::NotConverged { iterations, residual } => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
