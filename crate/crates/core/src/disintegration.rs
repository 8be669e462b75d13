//! Factorization of the joint Christoffel function on `S × ℝ` into the
//! marginal Christoffel function at `x` times the Christoffel function of a
//! univariate measure `ν_{x,t}` in `y`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::christoffel::CdKernel;
use crate::christrep::{solve_logdet_primal, LogdetOptions};
use crate::error::{Error, Result};
use crate::linalg::{inverse_spd, min_eigenvalue, SymMatrix};
use crate::moments::{moment_matrix, MomentSequence, SemialgebraicSet};
use crate::polycore::MultiIndex;
use crate::polycore::Polynomial;

/// Points used to test positivity of the candidate reciprocal.
pub const POSITIVITY_GRID: usize = 512;

/// Moments of the `x`-marginal: `φ_α = μ_{(α, 0)}`, `y` being the last coordinate.
pub fn marginal_moments(mu: &MomentSequence, degree: usize) -> Result<MomentSequence> {
    if mu.n() < 2 {
        return Err(Error::InvalidArgument("joint measure needs at least two coordinates".into()));
    }
    if degree > mu.degree_bound() {
        return Err(Error::DegreeOverflow { monomial: format!("degree {degree}"), bound: mu.degree_bound() });
    }
    let n = mu.n() - 1;
    MomentSequence::from_fn(n, degree, format!("x-marginal of {}", mu.label()), |alpha| {
        let mut e = alpha.exponents().to_vec();
        e.push(0);
        mu.get(&MultiIndex::new(e)).expect("within bound")
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisintegrationReport {
    pub x: Vec<f64>,
    pub t: usize,
    /// `(Λ^μ_t)⁻¹(x, ·)` as a polynomial in `y`.
    pub joint_reciprocal: Polynomial,
    /// `Λ^φ_t(x)` of the marginal.
    pub lambda_marginal: f64,
    /// `Λ^φ_t(x) · (Λ^μ_t)⁻¹(x, ·)`, the candidate `(Λ^ν_t)⁻¹`.
    pub q: Polynomial,
    pub nu_moments: MomentSequence,
    /// Max coefficient of `(Λ^μ_t)⁻¹(x,·) − (Λ^φ_t(x))⁻¹ (Λ^ν_t)⁻¹`, relative to
    /// `max(1, max|coef|)` of the joint reciprocal.
    pub factor_residual: f64,
    pub nu_hankel_min_eigenvalue: f64,
    /// Whether `ν` came from the closed form (`t ≤ 1`) rather than the log-det solve.
    pub closed_form: bool,
}

/// Hankel moments `ν` with `v_tᵀ H_t(ν)⁻¹ v_t = q`.
fn nu_from_reciprocal(q: &Polynomial, t: usize, opts: &LogdetOptions) -> Result<(MomentSequence, bool)> {
    let c = |k: u32| q.coefficient(&MultiIndex::new(vec![k]));
    match t {
        0 => Ok((MomentSequence::new(1, 0, vec![1.0 / c(0)], "nu")?, true)),
        1 => {
            let gram = SymMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[c(0), 0.5 * c(1), 0.5 * c(1), c(2)]))?;
            let h =
                inverse_spd(&gram).map_err(|_| Error::NotInterior("factorization candidate not interior".into()))?;
            Ok((MomentSequence::new(1, 2, vec![h.get(0, 0), h.get(0, 1), h.get(1, 1)], "nu")?, true))
        }
        _ => {
            let free = SemialgebraicSet::unconstrained(1)?;
            let sol = solve_logdet_primal(q, &free, t, opts)?;
            Ok((sol.phi, false))
        }
    }
}

pub fn disintegrate_cf(mu: &MomentSequence, x: &[f64], t: usize) -> Result<DisintegrationReport> {
    disintegrate_cf_with(mu, x, t, &LogdetOptions::default())
}

pub fn disintegrate_cf_with(
    mu: &MomentSequence,
    x: &[f64],
    t: usize,
    opts: &LogdetOptions,
) -> Result<DisintegrationReport> {
    if x.len() + 1 != mu.n() {
        return Err(Error::DimensionMismatch { expected: mu.n() - 1, found: x.len() });
    }
    let phi = marginal_moments(mu, 2 * t)?;
    let lambda_marginal = CdKernel::new(&phi, t)?.cf(x)?;
    let joint = CdKernel::new(mu, t)?;
    let joint_reciprocal = joint.reciprocal_poly().q.partial_eval(x)?;
    let q = joint_reciprocal.scale(lambda_marginal);

    let y_axis = MultiIndex::unit(mu.n(), mu.n() - 1);
    let center = mu.get(&y_axis).unwrap_or(0.0) / mu.values()[0];
    let mut e = vec![0u32; mu.n()];
    e[mu.n() - 1] = (2 * t.max(1)) as u32;
    let even = mu.get(&MultiIndex::new(e)).unwrap_or(1.0) / mu.values()[0];
    let radius = even.abs().powf(1.0 / (2 * t.max(1)) as f64).max(1e-12);
    for i in 0..POSITIVITY_GRID {
        let y = center + 1.5 * radius * (2.0 * i as f64 / (POSITIVITY_GRID - 1) as f64 - 1.0);
        let v = q.eval(&[y])?;
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NotInterior(format!("factorization candidate not interior: q({y}) is not positive")));
        }
    }

    let (nu, closed_form) = nu_from_reciprocal(&q, t, opts)?;
    let nu = nu.with_label(format!("conditional at x={x:?}"));
    let nu_kernel = CdKernel::new(&nu, t)?;
    let predicted = nu_kernel.reciprocal_poly().q.scale(1.0 / lambda_marginal);
    let factor_residual = joint_reciprocal.sub(&predicted)?.max_abs_coef() / joint_reciprocal.max_abs_coef().max(1.0);
    let nu_hankel_min_eigenvalue = min_eigenvalue(&moment_matrix(&nu, t)?)?;
    Ok(DisintegrationReport {
        x: x.to_vec(),
        t,
        joint_reciprocal,
        lambda_marginal,
        q,
        nu_moments: nu,
        factor_residual,
        nu_hankel_min_eigenvalue,
        closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::christoffel::cf_eval;
    use crate::moments::{catalog_moments, empirical_moments, MeasureDescriptor};

    fn square(bound: usize) -> MomentSequence {
        catalog_moments(&MeasureDescriptor::UniformBox { bounds: vec![[-1.0, 1.0]; 2] }, bound).unwrap()
    }

    #[test]
    fn marginal_examples() {
        let m = marginal_moments(&square(4), 4).unwrap();
        let u = catalog_moments(&MeasureDescriptor::UniformInterval { a: -1.0, b: 1.0 }, 4).unwrap();
        assert_eq!(m.values(), u.values());
        let pts = vec![vec![0.1, 2.0], vec![0.4, -1.0], vec![-0.3, 0.5]];
        let joint = empirical_moments(&pts, 3).unwrap();
        let xs: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0]]).collect();
        let m = marginal_moments(&joint, 3).unwrap();
        let e = empirical_moments(&xs, 3).unwrap();
        assert!(m.max_abs_diff(&e).unwrap() < 1e-15);
        assert_eq!(m.values()[0], 1.0);
        assert!(marginal_moments(&joint, 4).is_err());
    }

    #[test]
    fn uniform_square_at_origin() {
        let r = disintegrate_cf(&square(2), &[0.0], 1).unwrap();
        let expect = [1.0, 0.0, 1.0 / 3.0];
        for (a, b) in r.nu_moments.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(r.factor_residual < 1e-12);
        assert!(r.q.sub(&Polynomial::univariate(&[1.0, 0.0, 3.0])).unwrap().max_abs_coef() < 1e-12);
    }

    #[test]
    fn uniform_square_at_edge() {
        let r = disintegrate_cf(&square(2), &[1.0], 1).unwrap();
        assert!(r.q.sub(&Polynomial::univariate(&[1.0, 0.0, 0.75])).unwrap().max_abs_coef() < 1e-12);
        assert!((r.nu_moments.values()[2] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn order_zero_is_trivial() {
        let r = disintegrate_cf(&square(0), &[0.3], 0).unwrap();
        assert_eq!(r.nu_moments.values(), &[1.0]);
        assert_eq!(r.factor_residual, 0.0);
    }

    #[test]
    fn log_det_route_at_higher_order() {
        let mu = square(6);
        for (t, x) in [(2, 0.3), (3, -0.6)] {
            let r = disintegrate_cf(&mu, &[x], t).unwrap();
            assert!(!r.closed_form);
            assert!(r.factor_residual <= 1e-6, "t={t}: {}", r.factor_residual);
            assert!(r.nu_hankel_min_eigenvalue > 0.0);
        }
    }

    #[test]
    fn conditional_mass_is_one_only_at_first_order() {
        let mu = square(6);
        for x in [-0.9, 0.0, 0.3, 0.8] {
            let r = disintegrate_cf(&mu, &[x], 1).unwrap();
            assert!((r.nu_moments.values()[0] - 1.0).abs() <= 1e-12);
            assert!((r.nu_moments.values()[2] - (1.0 + 3.0 * x * x) / 3.0).abs() <= 1e-12);
        }
        // reference from an independent nonlinear solve of H(ν)⁻¹ ↔ q
        let r = disintegrate_cf(&mu, &[0.3], 2).unwrap();
        let expect = [1.1572853442, 0.0, 0.4244272452, 0.0, 0.3277560682];
        for (a, b) in r.nu_moments.values().iter().zip(expect) {
            assert!((a - b).abs() <= 1e-8, "{:?}", r.nu_moments.values());
        }
    }

    #[test]
    fn marginal_cf_matches_christoffel_module() {
        let mu = square(4);
        let r = disintegrate_cf(&mu, &[0.4], 2).unwrap();
        let direct = cf_eval(&marginal_moments(&mu, 4).unwrap(), 2, &[0.4]).unwrap();
        assert_eq!(r.lambda_marginal, direct);
    }
}
