//! Orthonormal polynomials, the Christoffel–Darboux kernel and the
//! Christoffel function of a moment sequence.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, compensated_dot, refined_inverse, refined_solve, CholeskyFactor, SymMatrix};
use crate::moments::{moment_matrix, riesz_apply, MomentSequence};
use crate::polycore::{basis_enumerate, MonomialBasis, MultiIndex, Polynomial};

/// Relative ridge used when the moment matrix is numerically singular.
pub const RIDGE_FACTOR: f64 = 1e-10;

/// Orthonormal polynomials `P_α = Σ_β C(α,β) x^β` with `C = L⁻¹`.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    pub n: usize,
    pub t: usize,
    pub coeffs: DMatrix<f64>,
    pub source: String,
}

impl OrthonormalBasis {
    pub fn polynomials(&self) -> Result<Vec<Polynomial>> {
        let basis = basis_enumerate(self.n, self.t)?;
        Ok((0..basis.len())
            .map(|a| {
                let row: Vec<f64> = self.coeffs.row(a).iter().copied().collect();
                Polynomial::from_basis_coeffs(&basis, &row)
            })
            .collect())
    }
}

/// `Λ_t⁻¹` as an explicit polynomial of degree `2t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelPoly {
    pub t: usize,
    pub q: Polynomial,
}

/// Factorized `M_t(φ)` with everything needed to evaluate the kernel.
#[derive(Debug, Clone)]
pub struct CdKernel {
    t: usize,
    basis: MonomialBasis,
    moment_matrix: SymMatrix,
    chol: CholeskyFactor,
    lower_inv: DMatrix<f64>,
    ridge: f64,
    source: String,
}

impl CdKernel {
    /// Fails with `SingularMomentMatrix` if `M_t(φ)` is not positive definite.
    pub fn new(phi: &MomentSequence, t: usize) -> Result<Self> {
        let m = moment_matrix(phi, t)?;
        let chol = cholesky(&m).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::SingularMomentMatrix { degree: t },
            other => other,
        })?;
        Self::from_parts(phi, t, m, chol, 0.0)
    }

    /// As [`CdKernel::new`], but falls back to `M_t + εI` with
    /// `ε = 1e-10 · trace / s(t)` when `M_t` is singular.
    pub fn new_regularized(phi: &MomentSequence, t: usize) -> Result<Self> {
        match Self::new(phi, t) {
            Err(Error::SingularMomentMatrix { .. }) => {
                let m = moment_matrix(phi, t)?;
                let ridge = RIDGE_FACTOR * m.trace() / m.order() as f64;
                log::warn!("moment matrix singular at degree {t}; adding ridge {ridge:e}");
                let reg = m.add_scaled_identity(ridge);
                let chol = cholesky(&reg).map_err(|_| Error::SingularMomentMatrix { degree: t })?;
                Self::from_parts(phi, t, reg, chol, ridge)
            }
            other => other,
        }
    }

    fn from_parts(phi: &MomentSequence, t: usize, m: SymMatrix, chol: CholeskyFactor, ridge: f64) -> Result<Self> {
        let lower_inv = reorthonormalize(&m, chol.lower_inverse());
        Ok(Self {
            t,
            basis: basis_enumerate(phi.n(), t)?,
            moment_matrix: m,
            chol,
            lower_inv,
            ridge,
            source: phi.label().to_string(),
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// `s(t)`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn moment_matrix(&self) -> &SymMatrix {
        &self.moment_matrix
    }

    pub fn is_regularized(&self) -> bool {
        self.ridge > 0.0
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: x.len() });
        }
        Ok(())
    }

    /// `(P_α(x))_α`.
    pub fn orthonormal_values(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let v = self.basis.monomial_vector(x);
        Ok(DVector::from_iterator(
            v.len(),
            (0..v.len()).map(|a| compensated_dot(0.0, self.lower_inv.row(a).iter().copied(), v.iter().copied())),
        ))
    }

    pub fn orthonormal_basis(&self) -> OrthonormalBasis {
        OrthonormalBasis { n: self.n(), t: self.t, coeffs: self.lower_inv.clone(), source: self.source.clone() }
    }

    /// `K_t(x, z) = Σ_α P_α(x) P_α(z)`.
    pub fn kernel(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        let px = self.orthonormal_values(x)?;
        let pz = self.orthonormal_values(z)?;
        Ok(compensated_dot(0.0, px.iter().copied(), pz.iter().copied()))
    }

    /// `M⁻¹ v_t(x)` by refined solve.
    fn solved_monomials(&self, x: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_point(x)?;
        let v = DVector::from_vec(self.basis.monomial_vector(x));
        let w = refined_solve(&self.moment_matrix, &self.chol, &v);
        Ok((v, w))
    }

    /// `Λ_t(x) = 1 / (v_t(x)ᵀ M_t⁻¹ v_t(x))`.
    pub fn cf(&self, x: &[f64]) -> Result<f64> {
        let (v, w) = self.solved_monomials(x)?;
        Ok(1.0 / compensated_dot(0.0, v.iter().copied(), w.iter().copied()))
    }

    /// Minimum of `pᵀ M_t p` over `p(x) = 1`, with its minimizer's coefficients.
    pub fn cf_variational(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (v, w) = self.solved_monomials(x)?;
        let d = compensated_dot(0.0, v.iter().copied(), w.iter().copied());
        let p = w / d;
        let m = self.moment_matrix.matrix();
        let mp: Vec<f64> =
            (0..p.len()).map(|i| compensated_dot(0.0, m.row(i).iter().copied(), p.iter().copied())).collect();
        let value = compensated_dot(0.0, p.iter().copied(), mp.into_iter());
        Ok((value, p.iter().copied().collect()))
    }

    /// `q = Λ_t⁻¹ = v_tᵀ M_t⁻¹ v_t`.
    pub fn reciprocal_poly(&self) -> ChristoffelPoly {
        let inv = refined_inverse(&self.moment_matrix, &self.chol);
        ChristoffelPoly { t: self.t, q: Polynomial::from_gram(&self.basis, inv.matrix()) }
    }

    /// `s(t) · Λ_t(x)`.
    pub fn support_score(&self, x: &[f64]) -> Result<f64> {
        Ok(self.dim() as f64 * self.cf(x)?)
    }

    /// `K_t(y, ·)` as a polynomial in the second argument.
    pub fn kernel_polynomial(&self, y: &[f64]) -> Result<Polynomial> {
        let (_, w) = self.solved_monomials(y)?;
        Ok(Polynomial::from_basis_coeffs(&self.basis, w.as_slice()))
    }
}

/// Polishes `C ≈ L⁻¹` so that `C M Cᵀ = I` holds to working precision:
/// `C ← L_G⁻¹ C` where `G = C M Cᵀ = L_G L_Gᵀ` is formed with compensated sums.
fn reorthonormalize(m: &SymMatrix, mut c: DMatrix<f64>) -> DMatrix<f64> {
    let s = c.nrows();
    for _ in 0..2 {
        let cm = DMatrix::from_fn(s, s, |i, j| {
            compensated_dot(0.0, c.row(i).iter().copied(), m.matrix().column(j).iter().copied())
        });
        let g = SymMatrix::from_fn(s, |i, j| compensated_dot(0.0, cm.row(i).iter().copied(), c.row(j).iter().copied()));
        let defect = (g.matrix() - DMatrix::identity(s, s)).amax();
        if defect <= 4.0 * f64::EPSILON {
            break;
        }
        match cholesky(&g) {
            Ok(lg) => c = lg.lower_inverse() * c,
            Err(_) => break,
        }
    }
    c
}

pub fn orthonormal_basis(phi: &MomentSequence, t: usize) -> Result<OrthonormalBasis> {
    Ok(CdKernel::new(phi, t)?.orthonormal_basis())
}

pub fn cd_kernel_eval(phi: &MomentSequence, t: usize, x: &[f64], z: &[f64]) -> Result<f64> {
    CdKernel::new(phi, t)?.kernel(x, z)
}

pub fn cf_eval(phi: &MomentSequence, t: usize, x: &[f64]) -> Result<f64> {
    CdKernel::new(phi, t)?.cf(x)
}

pub fn cf_variational(phi: &MomentSequence, t: usize, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    CdKernel::new(phi, t)?.cf_variational(x)
}

pub fn cf_reciprocal_poly(phi: &MomentSequence, t: usize) -> Result<ChristoffelPoly> {
    Ok(CdKernel::new(phi, t)?.reciprocal_poly())
}

pub fn support_score(phi: &MomentSequence, t: usize, x: &[f64]) -> Result<f64> {
    CdKernel::new(phi, t)?.support_score(x)
}

/// `|Σ_α P_α(x) φ(P_α p) − p(x)|`.
pub fn reproducing_check(phi: &MomentSequence, t: usize, p: &Polynomial, x: &[f64]) -> Result<f64> {
    if p.degree() > t {
        return Err(Error::DegreeOverflow { monomial: format!("degree {}", p.degree()), bound: t });
    }
    let kernel = CdKernel::new(phi, t)?;
    let coeffs = p.coeffs_in(&kernel.basis)?;
    let m = kernel.moment_matrix.matrix();
    // φ(P_α p) = (C M c_p)_α
    let mp: Vec<f64> =
        (0..m.nrows()).map(|i| compensated_dot(0.0, m.row(i).iter().copied(), coeffs.iter().copied())).collect();
    let proj: Vec<f64> = (0..m.nrows())
        .map(|a| compensated_dot(0.0, kernel.lower_inv.row(a).iter().copied(), mp.iter().copied()))
        .collect();
    let values = kernel.orthonormal_values(x)?;
    Ok(compensated_dot(-p.eval(x)?, values.iter().copied(), proj.iter().copied()).abs())
}

/// `α`-moment of the measure with density `1/(s(t) Λ_t)` with respect to `φ`.
pub fn equilibrium_moment_estimate(phi: &MomentSequence, t: usize, alpha: &MultiIndex) -> Result<f64> {
    if 2 * t + alpha.degree() > phi.degree_bound() {
        return Err(Error::DegreeOverflow {
            monomial: format!("degree {}", 2 * t + alpha.degree()),
            bound: phi.degree_bound(),
        });
    }
    let kernel = CdKernel::new(phi, t)?;
    let q = kernel.reciprocal_poly().q;
    let xa = Polynomial::monomial(alpha.clone(), 1.0);
    Ok(riesz_apply(phi, &xa.mul(&q)?)? / kernel.dim() as f64)
}
