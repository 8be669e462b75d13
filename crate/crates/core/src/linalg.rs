//! Dense symmetric linear algebra: Cholesky with a scale-relative definiteness
//! test, symmetric and generalized eigenvalues, and SPD solves/inverses with
//! iterative refinement on compensated residuals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Cholesky pivot at or below this multiple of the largest diagonal entry
/// is treated as a definiteness failure.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Refinement sweeps applied to SPD solves and inverses.
const REFINEMENT_STEPS: usize = 3;

/// Dense symmetric matrix; the stored matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Builds from the upper triangle of `f(i, j)` (`i ≤ j`).
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(order, order);
        for i in 0..order {
            for j in i..order {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    /// Symmetrizes a square matrix as `(A + Aᵀ)/2`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let s = (&m + m.transpose()) * 0.5;
        Ok(SymMatrix(s))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(order: usize) -> Self {
        SymMatrix(DMatrix::identity(order, order))
    }

    pub fn zeros(order: usize) -> Self {
        SymMatrix(DMatrix::zeros(order, order))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order()).map(|i| (0..self.order()).map(|j| self.0[(i, j)]).collect()).collect()
    }

    pub fn max_abs_diag(&self) -> f64 {
        self.0.diagonal().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Frobenius inner product `⟨A, B⟩ = tr(A B)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn add_scaled_identity(&self, eps: f64) -> SymMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += eps;
        }
        SymMatrix(m)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(s: SymMatrix) -> Self {
        s.to_rows()
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `init + Σ aᵢ bᵢ` accumulated in twice-working precision.
pub fn compensated_dot(init: f64, a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let mut s = init;
    let mut c = 0.0;
    for (x, y) in a.zip(b) {
        let (p, pe) = two_prod(x, y);
        let (s2, se) = two_sum(s, p);
        s = s2;
        c += pe + se;
    }
    s + c
}

/// Lower-triangular factor `L` of `S = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: DMatrix<f64>,
}

impl CholeskyFactor {
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn order(&self) -> usize {
        self.l.nrows()
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self.l.solve_lower_triangular(b).expect("positive diagonal");
        self.l.tr_solve_lower_triangular(&y).expect("positive diagonal")
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self.l.solve_lower_triangular(b).expect("positive diagonal");
        self.l.tr_solve_lower_triangular(&y).expect("positive diagonal")
    }

    /// `L⁻¹`.
    pub fn lower_inverse(&self) -> DMatrix<f64> {
        let n = self.order();
        self.l.solve_lower_triangular(&DMatrix::identity(n, n)).expect("positive diagonal")
    }

    /// `S⁻¹` without refinement.
    pub fn inverse(&self) -> DMatrix<f64> {
        let li = self.lower_inverse();
        let mut inv = li.transpose() * li;
        symmetrize(&mut inv);
        inv
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factorization `S = L Lᵀ`.
///
/// A pivot `≤ 1e-12 · max|Sᵢᵢ|` (or non-finite) fails with
/// [`Error::NotPositiveDefinite`] carrying the zero-based pivot index.
pub fn cholesky(s: &SymMatrix) -> Result<CholeskyFactor> {
    let n = s.order();
    let a = s.matrix();
    let threshold = PIVOT_TOLERANCE * s.max_abs_diag();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() || d <= threshold {
            return Err(Error::NotPositiveDefinite { index: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(CholeskyFactor { l })
}

/// Eigen-decomposition with ascending eigenvalues; column `i` of `vectors`
/// pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigen-decomposition (tridiagonalization + implicit QR), capped
/// at `30 · order` sweeps.
pub fn sym_eig(s: &SymMatrix) -> Result<SymEigen> {
    let n = s.order();
    if n == 0 {
        return Ok(SymEigen { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::try_new(s.matrix().clone(), f64::EPSILON, 30 * n.max(1))
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        // Deterministic sign: first entry of significant magnitude is positive.
        let scale = v.amax();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * scale) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(c, &v);
    }
    Ok(SymEigen { values, vectors })
}

pub fn min_eigenvalue(s: &SymMatrix) -> Result<f64> {
    Ok(sym_eig(s)?.values.first().copied().unwrap_or(0.0))
}

/// Smallest generalized eigenpair of the pencil `(A, B)` with `B ≻ 0`.
#[derive(Debug, Clone)]
pub struct GenEigMin {
    pub value: f64,
    /// `B`-normalized eigenvector: `wᵀ B w = 1`.
    pub vector: DVector<f64>,
}

/// Reduces `A w = λ B w` to `L⁻¹ A L⁻ᵀ u = λ u` with `B = L Lᵀ`.
pub fn gen_eig_min(a: &SymMatrix, b: &SymMatrix) -> Result<GenEigMin> {
    if a.order() != b.order() {
        return Err(Error::DimensionMismatch { expected: b.order(), found: a.order() });
    }
    let chol = cholesky(b)?;
    let li = chol.lower_inverse();
    let c = SymMatrix::from_matrix(&li * a.matrix() * li.transpose())?;
    let eig = sym_eig(&c)?;
    let u = eig.vectors.column(0).clone_owned();
    let w = chol.l().tr_solve_lower_triangular(&u).expect("positive diagonal");
    Ok(GenEigMin { value: eig.values[0], vector: w })
}

fn residual_vec(s: &SymMatrix, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let a = s.matrix();
    DVector::from_fn(b.len(), |i, _| compensated_dot(b[i], a.row(i).iter().copied(), x.iter().map(|v| -v)))
}

/// Solves `S x = b` for `S ≻ 0` with refinement on compensated residuals.
pub fn psd_solve(s: &SymMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    if b.len() != s.order() {
        return Err(Error::DimensionMismatch { expected: s.order(), found: b.len() });
    }
    let chol = cholesky(s)?;
    Ok(refined_solve(s, &chol, b))
}

pub(crate) fn refined_solve(s: &SymMatrix, chol: &CholeskyFactor, b: &DVector<f64>) -> DVector<f64> {
    let mut x = chol.solve_vec(b);
    for _ in 0..REFINEMENT_STEPS {
        let r = residual_vec(s, &x, b);
        if r.amax() == 0.0 {
            break;
        }
        x += chol.solve_vec(&r);
    }
    debug_assert!(
        residual_vec(s, &x, b).norm() <= 1e-8 * (b.norm() + s.frobenius_norm() * x.norm()),
        "psd_solve residual check"
    );
    x
}

/// Column-wise [`psd_solve`] for a matrix right-hand side.
pub fn psd_solve_mat(s: &SymMatrix, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.nrows() != s.order() {
        return Err(Error::DimensionMismatch { expected: s.order(), found: b.nrows() });
    }
    let chol = cholesky(s)?;
    let mut out = DMatrix::zeros(b.nrows(), b.ncols());
    for j in 0..b.ncols() {
        let col = b.column(j).clone_owned();
        out.set_column(j, &refined_solve(s, &chol, &col));
    }
    Ok(out)
}

/// `S⁻¹` for `S ≻ 0`, polished by Newton–Schulz-type correction
/// `X ← X + X (I − S X)` with the residual formed in twice-working precision.
pub fn inverse_spd(s: &SymMatrix) -> Result<SymMatrix> {
    let chol = cholesky(s)?;
    Ok(refined_inverse(s, &chol))
}

pub(crate) fn refined_inverse(s: &SymMatrix, chol: &CholeskyFactor) -> SymMatrix {
    let n = s.order();
    let a = s.matrix();
    let mut x = chol.inverse();
    for _ in 0..REFINEMENT_STEPS {
        let r = DMatrix::from_fn(n, n, |i, j| {
            let init = if i == j { 1.0 } else { 0.0 };
            compensated_dot(init, a.row(i).iter().copied(), x.column(j).iter().map(|v| -v))
        });
        if r.amax() == 0.0 {
            break;
        }
        x += &x * r;
        symmetrize(&mut x);
    }
    SymMatrix(x)
}

pub fn log_det_spd(s: &SymMatrix) -> Result<f64> {
    Ok(cholesky(s)?.log_det())
}
