//! Sparse matrix storage and the iterative solvers used by the flow solver.
//!
//! All solvers use the relative residual `‖b − Ax‖₂ / ‖b‖₂` as their stopping
//! criterion. When `‖b‖₂` falls below [`B_NORM_FLOOR`] the criterion becomes
//! absolute.

use thiserror::Error;

/// Below this right-hand-side norm the convergence test is absolute.
pub const B_NORM_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("row {row} has duplicate column {col}")]
    DuplicateEntry { row: usize, col: usize },
    #[error("row {row} has no diagonal entry")]
    MissingDiagonal { row: usize },
    #[error("row {row} references column {col} outside dimension {n}")]
    ColumnOutOfRange { row: usize, col: usize, n: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("dimension mismatch: matrix {n}, vector {len}")]
    DimensionMismatch { n: usize, len: usize },
    #[error("relaxation factor {0} outside (0, 2)")]
    BadRelaxation(f64),
    #[error("not converged after {} iterations (residual {:.3e})", stats.iterations, stats.final_residual_norm)]
    NotConverged { x: Vec<f64>, stats: SolveStats },
    #[error("breakdown after {} iterations: nonpositive curvature", stats.iterations)]
    BreakdownDetected { x: Vec<f64>, stats: SolveStats },
}

impl SolveError {
    /// Best-effort iterate carried by a failed solve, if any.
    pub fn into_partial(self) -> Option<(Vec<f64>, SolveStats)> {
        match self {
            SolveError::NotConverged { x, stats } | SolveError::BreakdownDetected { x, stats } => {
                Some((x, stats))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative residual `‖b − Ax‖₂ / max(‖b‖₂, floor)` recomputed from `x`.
    pub final_residual_norm: f64,
    pub converged: bool,
}

/// Square matrix in compressed-row form with a cached diagonal position per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
}

impl SparseMatrix {
    /// Build from per-row `(column, value)` lists. Every row must contain its
    /// diagonal and no column twice.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self, MatrixError> {
        let n = rows.len();
        if n == 0 {
            return Err(MatrixError::Empty);
        }
        let nnz = rows.iter().map(Vec::len).sum();
        let mut builder = MatrixBuilder::with_capacity(n, nnz);
        for row in rows {
            for (col, val) in row {
                builder.push(col, val);
            }
            builder.finish_row()?;
        }
        builder.build()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| vec![(i, 1.0)]).collect()).expect("identity is valid")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Whether the sparsity pattern is symmetric (values are not compared).
    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, _)| self.row(j).any(|(c, _)| c == i)))
    }

    pub fn diagonal(&self, row: usize) -> f64 {
        self.vals[self.diag[row]]
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.row(row).find(|&(c, _)| c == col).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (yi, w) in y.iter_mut().zip(self.row_ptr.windows(2)) {
            let (cols, vals) = (&self.cols[w[0]..w[1]], &self.vals[w[0]..w[1]]);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `b − Ax`.
    pub fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut r = self.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    }

    /// Relative residual `‖b − Ax‖₂ / max(‖b‖₂, floor)`, recomputed from scratch.
    pub fn relative_residual(&self, b: &[f64], x: &[f64]) -> f64 {
        norm2(&self.residual(b, x)) / norm2(b).max(B_NORM_FLOOR)
    }

    fn check_diagonal(&self) -> Result<(), SolveError> {
        match (0..self.n).find(|&i| self.diagonal(i) == 0.0) {
            Some(row) => Err(SolveError::ZeroDiagonal { row }),
            None => Ok(()),
        }
    }

    fn check_dims(&self, b: &[f64], x0: &[f64]) -> Result<(), SolveError> {
        for len in [b.len(), x0.len()] {
            if len != self.n {
                return Err(SolveError::DimensionMismatch { n: self.n, len });
            }
        }
        Ok(())
    }
}

/// Row-by-row incremental assembly of a [`SparseMatrix`].
#[derive(Debug, Default)]
pub struct MatrixBuilder {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
    n: usize,
}

impl MatrixBuilder {
    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            row_ptr,
            cols: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
            diag: Vec::with_capacity(n),
            n,
        }
    }

    pub fn push(&mut self, col: usize, val: f64) {
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn finish_row(&mut self) -> Result<(), MatrixError> {
        let row = self.diag.len();
        let start = *self.row_ptr.last().expect("row_ptr starts non-empty");
        let end = self.cols.len();
        let mut diag = None;
        for k in start..end {
            let col = self.cols[k];
            if col >= self.n {
                return Err(MatrixError::ColumnOutOfRange { row, col, n: self.n });
            }
            if self.cols[start..k].contains(&col) {
                return Err(MatrixError::DuplicateEntry { row, col });
            }
            if col == row {
                diag = Some(k);
            }
        }
        self.diag.push(diag.ok_or(MatrixError::MissingDiagonal { row })?);
        self.row_ptr.push(end);
        Ok(())
    }

    pub fn build(self) -> Result<SparseMatrix, MatrixError> {
        if self.n == 0 {
            return Err(MatrixError::Empty);
        }
        assert_eq!(self.diag.len(), self.n, "builder finished {} of {} rows", self.diag.len(), self.n);
        Ok(SparseMatrix { n: self.n, row_ptr: self.row_ptr, cols: self.cols, vals: self.vals, diag: self.diag })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn finish(
    a: &SparseMatrix,
    b: &[f64],
    x: Vec<f64>,
    iterations: usize,
    tol: f64,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    let final_residual_norm = a.relative_residual(b, &x);
    let converged = final_residual_norm <= tol;
    let stats = SolveStats { iterations, final_residual_norm, converged };
    if converged {
        Ok((x, stats))
    } else {
        Err(SolveError::NotConverged { x, stats })
    }
}

/// Successive over-relaxation (forward Gauss–Seidel sweeps for `omega = 1`).
///
/// The residual is recomputed after every sweep, so `max_iter` counts sweeps.
pub fn solve_sor(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    omega: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    if !(omega > 0.0 && omega < 2.0) {
        return Err(SolveError::BadRelaxation(omega));
    }
    a.check_dims(b, x0)?;
    a.check_diagonal()?;
    let b_norm = norm2(b).max(B_NORM_FLOOR);
    let mut x = x0.to_vec();
    let mut r = vec![0.0; a.n];
    let residual = |x: &[f64], r: &mut [f64]| {
        a.mul_vec_into(x, r);
        r.iter().zip(b).map(|(ax, bi)| (bi - ax).powi(2)).sum::<f64>().sqrt() / b_norm
    };
    if residual(&x, &mut r) <= tol {
        return finish(a, b, x, 0, tol);
    }
    for sweep in 1..=max_iter {
        for (i, w) in a.row_ptr.windows(2).enumerate() {
            let (cols, vals) = (&a.cols[w[0]..w[1]], &a.vals[w[0]..w[1]]);
            // Full row product, then take the diagonal term back out.
            let ax: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
            let d = a.vals[a.diag[i]];
            x[i] += omega * ((b[i] - ax) / d);
        }
        if residual(&x, &mut r) <= tol {
            return finish(a, b, x, sweep, tol);
        }
    }
    finish(a, b, x, max_iter, tol)
}

/// Conjugate gradients with diagonal (Jacobi) scaling.
///
/// Also usable on singular symmetric positive semidefinite systems whose
/// right-hand side lies in the range of `a` (pure-Neumann pressure problems).
pub fn solve_cg(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    a.check_dims(b, x0)?;
    a.check_diagonal()?;
    let n = a.n;
    let b_norm = norm2(b).max(B_NORM_FLOOR);
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / a.diagonal(i)).collect();
    let mut x = x0.to_vec();
    let mut r = a.residual(b, &x);
    if norm2(&r) / b_norm <= tol {
        return finish(a, b, x, 0, tol);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 || !curvature.is_finite() {
            let final_residual_norm = a.relative_residual(b, &x);
            return Err(SolveError::BreakdownDetected {
                x,
                stats: SolveStats { iterations: it, final_residual_norm, converged: false },
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) / b_norm <= tol {
            // The recursive residual drifts; only trust a recomputed one.
            if a.relative_residual(b, &x) <= tol {
                return finish(a, b, x, it, tol);
            }
            r = a.residual(b, &x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    finish(a, b, x, max_iter, tol)
}

/// Jacobi-scaled BiCGSTAB for the nonsymmetric energy systems.
///
/// SOR stalls on conduction problems with floating high-conductivity islands
/// (silicon inside air), where Krylov methods resolve the isolated slow modes
/// in a handful of iterations.
pub fn solve_bicgstab(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    a.check_dims(b, x0)?;
    a.check_diagonal()?;
    let n = a.n;
    let b_norm = norm2(b).max(B_NORM_FLOOR);
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / a.diagonal(i)).collect();
    let mut x = x0.to_vec();
    let mut r = a.residual(b, &x);
    if norm2(&r) / b_norm <= tol {
        return finish(a, b, x, 0, tol);
    }
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() || omega == 0.0 {
            // Restart on breakdown of the shadow sequence.
            r = a.residual(b, &x);
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            if norm2(&r) / b_norm <= tol || dot(&r, &r) == 0.0 {
                break;
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * inv_diag[i];
        }
        a.mul_vec_into(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            omega = 0.0;
            continue;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / b_norm <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            if a.relative_residual(b, &x) <= tol {
                return finish(a, b, x, it, tol);
            }
            r = a.residual(b, &x);
            continue;
        }
        for i in 0..n {
            z[i] = s[i] * inv_diag[i];
        }
        a.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / b_norm <= tol {
            if a.relative_residual(b, &x) <= tol {
                return finish(a, b, x, it, tol);
            }
            r = a.residual(b, &x);
        }
    }
    finish(a, b, x, it, tol)
}
