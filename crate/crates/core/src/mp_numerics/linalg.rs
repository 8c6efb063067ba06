//! Hermitian matrices, pivot-free LDLᴴ and the largest eigenvalue of small
//! Hermitian positive semidefinite matrices.

use rug::{Complex, Float};
use serde::Serialize;

use super::{NumericsError, PrecisionContext};

/// Dense Hermitian matrix stored row-major at a fixed precision.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    order: usize,
    entries: Vec<Complex>,
    ctx: PrecisionContext,
}

impl HermitianMatrix {
    /// Builds a matrix from full rows, checking conjugate symmetry to
    /// half the working precision.
    pub fn new(rows: Vec<Vec<Complex>>, ctx: PrecisionContext) -> Result<Self, NumericsError> {
        let order = rows.len();
        let tol = ctx.half_epsilon();
        let mut entries = Vec::with_capacity(order * order);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != order {
                return Err(NumericsError::DimensionMismatch { expected: order, found: row.len() });
            }
            for value in row.iter().take(i + 1) {
                entries.push(Complex::with_val(ctx.bits(), value));
            }
            for _ in i + 1..order {
                entries.push(ctx.czero());
            }
        }
        for i in 0..order {
            for j in 0..i {
                let upper = &rows[j][i];
                let lower = &rows[i][j];
                let mirror = Complex::with_val(ctx.bits(), lower.conj_ref());
                let diff = Float::with_val(ctx.bits(), Complex::with_val(ctx.bits(), upper - &mirror).abs_ref());
                let scale = Float::with_val(ctx.bits(), upper.abs_ref()).max(&Float::with_val(ctx.bits(), lower.abs_ref()));
                if diff > Float::with_val(ctx.bits(), &scale * &tol) {
                    return Err(NumericsError::NotHermitian { row: j, col: i });
                }
                entries[j * order + i] = mirror;
            }
            let diag = &rows[i][i];
            let scale = Float::with_val(ctx.bits(), diag.abs_ref());
            if Float::with_val(ctx.bits(), diag.imag().abs_ref()) > Float::with_val(ctx.bits(), &scale * &tol) {
                return Err(NumericsError::NotHermitian { row: i, col: i });
            }
            entries[i * order + i] = Complex::with_val(ctx.bits(), (diag.real(), 0));
        }
        Ok(Self { order, entries, ctx })
    }

    /// Builds a matrix from a lower-triangle generator `f(i, j)` with
    /// `j ≤ i`; the upper triangle is filled by conjugation.
    pub fn from_lower<F>(order: usize, ctx: PrecisionContext, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> Complex,
    {
        let mut entries = vec![ctx.czero(); order * order];
        for i in 0..order {
            for j in 0..=i {
                let mut v = Complex::with_val(ctx.bits(), f(i, j));
                if i == j {
                    v = Complex::with_val(ctx.bits(), (v.real(), 0));
                }
                entries[j * order + i] = Complex::with_val(ctx.bits(), v.conj_ref());
                entries[i * order + j] = v;
            }
        }
        Self { order, entries, ctx }
    }

    pub fn identity(order: usize, ctx: PrecisionContext) -> Self {
        Self::from_lower(order, ctx, |i, j| if i == j { ctx.complex(1) } else { ctx.czero() })
    }

    pub fn from_real_rows(rows: &[Vec<f64>], ctx: PrecisionContext) -> Result<Self, NumericsError> {
        let rows = rows.iter().map(|r| r.iter().map(|&v| ctx.complex(v)).collect()).collect();
        Self::new(rows, ctx)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn precision(&self) -> PrecisionContext {
        self.ctx
    }

    pub fn get(&self, i: usize, j: usize) -> &Complex {
        &self.entries[i * self.order + j]
    }

    /// Leading principal submatrix of the given order.
    pub fn leading(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self::from_lower(order, self.ctx, |i, j| self.get(i, j).clone())
    }

    /// Matrix–vector product.
    pub fn apply(&self, x: &[Complex]) -> Vec<Complex> {
        let bits = self.ctx.bits();
        (0..self.order)
            .map(|i| {
                let mut acc = Complex::new(bits);
                for (j, xj) in x.iter().enumerate() {
                    acc += self.get(i, j) * xj;
                }
                acc
            })
            .collect()
    }

    /// Factors the matrix as L·D·Lᴴ without pivoting.
    pub fn ldl(&self) -> Result<LdlFactor, NumericsError> {
        let mut factor = LdlFactor::new(self.ctx);
        for i in 0..self.order {
            let row: Vec<Complex> = (0..=i).map(|j| self.get(i, j).clone()).collect();
            factor.push_row(&row)?;
        }
        Ok(factor)
    }

    /// Number of eigenvalues strictly below `shift` (Sylvester inertia of
    /// A − shift·I computed with the same pivot-free recurrence).
    fn count_below(&self, shift: &Float) -> usize {
        let bits = self.ctx.bits();
        let n = self.order;
        let mut l: Vec<Vec<Complex>> = Vec::with_capacity(n);
        let mut ld: Vec<Vec<Complex>> = Vec::with_capacity(n);
        let mut d: Vec<Float> = Vec::with_capacity(n);
        let tiny = Float::with_val(bits, shift.abs_ref()).max(&Float::with_val(bits, 1)) * self.ctx.epsilon();
        let mut negatives = 0;
        for i in 0..n {
            let mut row_l = Vec::with_capacity(i);
            for j in 0..i {
                let mut acc = self.get(i, j).clone();
                for m in 0..j {
                    acc -= &row_l[m] * &ld[j][m];
                }
                let lij: Complex = Complex::with_val(bits, &acc / &d[j]);
                row_l.push(lij);
            }
            let mut diag = Float::with_val(bits, self.get(i, i).real() - shift);
            for m in 0..i {
                let t = Complex::with_val(bits, &row_l[m] * &Complex::with_val(bits, row_l[m].conj_ref()));
                diag -= Float::with_val(bits, t.real() * &d[m]);
            }
            if diag.is_zero() {
                diag = tiny.clone();
            }
            if diag < 0 {
                negatives += 1;
            }
            let row_ld: Vec<Complex> = row_l
                .iter()
                .enumerate()
                .map(|(m, lim)| Complex::with_val(bits, Complex::with_val(bits, lim.conj_ref()) * &d[m]))
                .collect();
            l.push(row_l);
            ld.push(row_ld);
            d.push(diag);
        }
        negatives
    }
}

/// Pivot-free LDLᴴ factor that can be grown one row at a time.
///
/// Because no pivoting is done, the factor of a leading principal
/// submatrix is the leading block of the full factor. The inverse of the
/// unit lower factor, X = L⁻¹, is maintained alongside so that
/// (A_m⁻¹)_{kk} = Σ_{j=k}^{m−1} |X_{jk}|²/d_j is available for every
/// leading order m without refactoring.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    ctx: PrecisionContext,
    l: Vec<Vec<Complex>>,
    ld_conj: Vec<Vec<Complex>>,
    d: Vec<Float>,
    x: Vec<Vec<Complex>>,
}

impl LdlFactor {
    pub fn new(ctx: PrecisionContext) -> Self {
        Self { ctx, l: Vec::new(), ld_conj: Vec::new(), d: Vec::new(), x: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.d.len()
    }

    pub fn precision(&self) -> PrecisionContext {
        self.ctx
    }

    pub fn pivots(&self) -> &[Float] {
        &self.d
    }

    /// Appends row i = `self.order()` given its lower part A[i][0..=i].
    pub fn push_row(&mut self, row: &[Complex]) -> Result<(), NumericsError> {
        let bits = self.ctx.bits();
        let i = self.order();
        if row.len() != i + 1 {
            return Err(NumericsError::DimensionMismatch { expected: i + 1, found: row.len() });
        }
        let mut row_l: Vec<Complex> = Vec::with_capacity(i);
        for j in 0..i {
            let mut acc = Complex::with_val(bits, &row[j]);
            for m in 0..j {
                acc -= &row_l[m] * &self.ld_conj[j][m];
            }
            row_l.push(Complex::with_val(bits, &acc / &self.d[j]));
        }
        let mut pivot = Float::with_val(bits, row[i].real());
        for m in 0..i {
            pivot -= Float::with_val(bits, row_l[m].norm_ref()) * &self.d[m];
        }
        if !pivot.is_finite() || pivot <= 0 {
            return Err(NumericsError::NotPositiveDefinite { index: i, pivot: pivot.to_f64() });
        }
        let row_ld: Vec<Complex> = row_l
            .iter()
            .zip(&self.d)
            .map(|(lim, dm)| Complex::with_val(bits, Complex::with_val(bits, lim.conj_ref()) * dm))
            .collect();
        let mut row_x: Vec<Complex> = Vec::with_capacity(i + 1);
        for j in 0..i {
            let mut acc = Complex::with_val(bits, &row_l[j]);
            for m in j + 1..i {
                acc += &row_l[m] * &self.x[m][j];
            }
            acc = -acc;
            row_x.push(acc);
        }
        row_x.push(Complex::with_val(bits, 1));
        self.l.push(row_l);
        self.ld_conj.push(row_ld);
        self.d.push(pivot);
        self.x.push(row_x);
        Ok(())
    }

    /// Drops every row beyond the leading `order` ones.
    pub fn truncate(&mut self, order: usize) {
        self.l.truncate(order);
        self.ld_conj.truncate(order);
        self.d.truncate(order);
        self.x.truncate(order);
    }

    /// Diagonal of the inverse of the leading `m × m` block.
    pub fn inverse_diagonal(&self, m: usize) -> Vec<Float> {
        let bits = self.ctx.bits();
        let m = m.min(self.order());
        (0..m)
            .map(|k| {
                let mut acc = Float::new(bits);
                for j in k..m {
                    acc += Float::with_val(bits, self.x[j][k].norm_ref()) / &self.d[j];
                }
                acc
            })
            .collect()
    }

    /// (A_m⁻¹)_{kk} for every leading order m = k+1, …, order (0-based k).
    pub fn inverse_diagonal_profile(&self, k: usize) -> Vec<Float> {
        let bits = self.ctx.bits();
        let mut acc = Float::new(bits);
        let mut out = Vec::with_capacity(self.order().saturating_sub(k));
        for j in k..self.order() {
            acc += Float::with_val(bits, self.x[j][k].norm_ref()) / &self.d[j];
            out.push(acc.clone());
        }
        out
    }

    /// Full inverse of the leading `m × m` block, row-major.
    pub fn inverse(&self, m: usize) -> Vec<Vec<Complex>> {
        let bits = self.ctx.bits();
        let m = m.min(self.order());
        let mut inv = vec![vec![Complex::new(bits); m]; m];
        for a in 0..m {
            for b in 0..=a {
                let mut acc = Complex::new(bits);
                for j in a..m {
                    let t = Complex::with_val(bits, self.x[j][a].conj_ref()) * &self.x[j][b];
                    acc += Complex::with_val(bits, t / &self.d[j]);
                }
                inv[b][a] = Complex::with_val(bits, acc.conj_ref());
                inv[a][b] = acc;
            }
        }
        for (a, row) in inv.iter_mut().enumerate() {
            let re = Float::with_val(bits, row[a].real());
            row[a] = Complex::with_val(bits, (re, 0));
        }
        inv
    }

    /// Solves A·x = b for the full factored order.
    pub fn solve(&self, b: &[Complex]) -> Result<Vec<Complex>, NumericsError> {
        let bits = self.ctx.bits();
        let n = self.order();
        if b.len() != n {
            return Err(NumericsError::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut y: Vec<Complex> = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Complex::with_val(bits, &b[i]);
            for j in 0..i {
                acc -= &self.l[i][j] * &y[j];
            }
            y.push(acc);
        }
        for i in 0..n {
            y[i] /= &self.d[i];
        }
        for i in (0..n).rev() {
            let mut acc = y[i].clone();
            for j in i + 1..n {
                acc -= Complex::with_val(bits, self.l[j][i].conj_ref()) * &y[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// Rebuilds L·D·Lᴴ, used to measure factorization error.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let bits = self.ctx.bits();
        let n = self.order();
        HermitianMatrix::from_lower(n, self.ctx, |i, j| {
            let mut acc = Complex::new(bits);
            for m in 0..j {
                acc += &self.l[i][m] * &self.ld_conj[j][m];
            }
            let lij = if i == j { Complex::with_val(bits, 1) } else { self.l[i][j].clone() };
            acc += Complex::with_val(bits, &lij * &self.d[j]);
            acc
        })
    }
}

/// Diagonal of the inverse of a Hermitian positive definite matrix.
pub fn hermitian_inverse_diagonal(matrix: &HermitianMatrix) -> Result<Vec<Float>, NumericsError> {
    let factor = matrix.ldl()?;
    Ok(factor.inverse_diagonal(matrix.order()))
}

/// How the dominant eigenvalue was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigenMethod {
    PowerIteration,
    InertiaBisection,
}

/// Dominant eigenvalue of a Hermitian positive semidefinite matrix.
#[derive(Debug, Clone)]
pub struct EigenEstimate {
    pub value: Float,
    /// ‖A·x − λ·x‖/λ for power iteration; final bracket width over λ for bisection.
    pub residual: Float,
    pub iterations: usize,
    pub method: EigenMethod,
}

/// Largest eigenvalue by power iteration, falling back to bisection on
/// the Sylvester inertia for orders up to 40 when the iteration stalls.
pub fn largest_eigenvalue(matrix: &HermitianMatrix, max_iterations: usize) -> Result<EigenEstimate, NumericsError> {
    match power_iteration(matrix, max_iterations) {
        Ok(est) => Ok(est),
        Err(NumericsError::PowerIterationStall { .. }) if matrix.order() <= 40 => Ok(inertia_bisection(matrix)),
        Err(e) => Err(e),
    }
}

fn vector_norm(v: &[Complex], bits: u32) -> Float {
    let mut acc = Float::new(bits);
    for x in v {
        acc += Float::with_val(bits, x.norm_ref());
    }
    acc.sqrt()
}

fn power_iteration(matrix: &HermitianMatrix, max_iterations: usize) -> Result<EigenEstimate, NumericsError> {
    let ctx = matrix.precision();
    let bits = ctx.bits();
    let n = matrix.order();
    if n == 0 {
        return Ok(EigenEstimate { value: ctx.zero(), residual: ctx.zero(), iterations: 0, method: EigenMethod::PowerIteration });
    }
    let mut tol = Float::with_val(bits, 1);
    tol >>= bits / 3;
    let mut x: Vec<Complex> = (0..n).map(|i| ctx.complex(1 + i % 3)).collect();
    let norm = vector_norm(&x, bits);
    for xi in x.iter_mut() {
        *xi /= &norm;
    }
    let mut lambda = ctx.zero();
    let mut residual = ctx.float(f64::INFINITY);
    for it in 1..=max_iterations {
        let y = matrix.apply(&x);
        let mut rq = ctx.czero();
        for (xi, yi) in x.iter().zip(&y) {
            rq += Complex::with_val(bits, xi.conj_ref()) * yi;
        }
        lambda = Float::with_val(bits, rq.real());
        let mut r = Float::new(bits);
        for (xi, yi) in x.iter().zip(&y) {
            r += Float::with_val(bits, Complex::with_val(bits, yi - Complex::with_val(bits, xi * &lambda)).norm_ref());
        }
        residual = r.sqrt();
        if lambda.is_zero() {
            return Ok(EigenEstimate { value: lambda, residual, iterations: it, method: EigenMethod::PowerIteration });
        }
        residual /= &lambda;
        if residual <= tol {
            return Ok(EigenEstimate { value: lambda, residual, iterations: it, method: EigenMethod::PowerIteration });
        }
        let ny = vector_norm(&y, bits);
        x = y.into_iter().map(|v| Complex::with_val(bits, v / &ny)).collect();
    }
    let _ = lambda;
    Err(NumericsError::PowerIterationStall { iterations: max_iterations, residual: residual.to_f64() })
}

fn inertia_bisection(matrix: &HermitianMatrix) -> EigenEstimate {
    let ctx = matrix.precision();
    let bits = ctx.bits();
    let n = matrix.order();
    let mut hi = ctx.zero();
    for i in 0..n {
        let mut row = ctx.zero();
        for j in 0..n {
            row += Float::with_val(bits, matrix.get(i, j).abs_ref());
        }
        hi = hi.max(&row);
    }
    hi *= 1.0001;
    let mut lo = ctx.zero();
    let mut tol = Float::with_val(bits, 1);
    tol >>= bits / 2;
    let mut iterations = 0;
    while iterations < 4 * bits as usize {
        let width = Float::with_val(bits, &hi - &lo);
        if width <= Float::with_val(bits, &hi * &tol) {
            break;
        }
        let mid = Float::with_val(bits, &lo + &hi) / 2;
        if matrix.count_below(&mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let value: Float = Float::with_val(bits, &lo + &hi) / 2u32;
    let residual = if value.is_zero() { ctx.zero() } else { Float::with_val(bits, &hi - &lo) / &value };
    EigenEstimate { value, residual, iterations, method: EigenMethod::InertiaBisection }
}
