//! The log-det primal problem and the Christoffel representation
//! `p = Σ_g g · v_{t−t_g}ᵀ M_{t−t_g}(g·φ*)⁻¹ v_{t−t_g}`, generalized Pell
//! identities, equilibrium-measure experiments and the log-det Fenchel gap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, compensated_dot, refined_inverse, SymMatrix};
use crate::moments::{
    catalog_moments, empirical_moments, localizing_matrix, riesz_apply, LocalizingMap, MeasureDescriptor,
    MomentSequence, SemialgebraicSet,
};
use crate::polycore::{basis_enumerate, basis_size, MonomialBasis, Polynomial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogdetOptions {
    pub max_iter: usize,
    /// Stop once the Newton decrement falls below this value.
    pub decrement_tol: f64,
    /// Below this decrement, stop once an iteration fails to halve it
    /// (round-off floor).
    pub stall_tol: f64,
}

impl Default for LogdetOptions {
    fn default() -> Self {
        Self { max_iter: 100, decrement_tol: 1e-10, stall_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogdetSolution {
    pub phi: MomentSequence,
    /// `−Σ_g log det M_{t−t_g}(g·φ)` at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub newton_decrement: f64,
    /// Objective after each accepted step, starting with the initial point.
    pub objective_history: Vec<f64>,
}

/// `Σ_g s(t − t_g)`.
pub fn constraint_level(set: &SemialgebraicSet, t: usize) -> Result<usize> {
    let mut total = 0;
    for tg in set.half_degrees() {
        if tg > t {
            return Err(Error::InvalidArgument(format!("order {t} is below a generator half-degree {tg}")));
        }
        total += basis_size(set.n(), t - tg)?;
    }
    Ok(total)
}

struct Barrier {
    maps: Vec<LocalizingMap>,
}

impl Barrier {
    fn new(set: &SemialgebraicSet, t: usize, basis: &MonomialBasis) -> Result<Self> {
        let maps = set
            .generators()
            .iter()
            .zip(set.half_degrees())
            .map(|(g, tg)| LocalizingMap::new(g, t - tg, basis))
            .collect::<Result<_>>()?;
        Ok(Self { maps })
    }

    /// Objective value, or `None` outside the domain.
    fn value(&self, phi: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for map in &self.maps {
            acc -= cholesky(&map.assemble(phi)).ok()?.log_det();
        }
        Some(acc)
    }

    /// Gradient and Hessian in the full moment coordinates.
    fn derivatives(&self, phi: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let nv = phi.len();
        let mut grad = DVector::zeros(nv);
        let mut hess = DMatrix::zeros(nv, nv);
        for map in &self.maps {
            let m = map.assemble(phi);
            let chol = cholesky(&m)?;
            let inv = refined_inverse(&m, &chol);
            for (k, v) in map.adjoint(&inv).into_iter().enumerate() {
                grad[k] -= v;
            }
            let c = chol.lower_inverse();
            let transformed: Vec<(usize, DMatrix<f64>)> =
                map.coefficient_matrices().into_iter().map(|(k, b)| (k, &c * b * c.transpose())).collect();
            for (a, (i, ti)) in transformed.iter().enumerate() {
                for (j, tj) in transformed.iter().skip(a) {
                    let v = ti.dot(tj);
                    hess[(*i, *j)] += v;
                    if i != j {
                        hess[(*j, *i)] += v;
                    }
                }
            }
        }
        Ok((grad, hess))
    }
}

fn all_localizing_pd(set: &SemialgebraicSet, phi: &MomentSequence, t: usize) -> bool {
    set.generators()
        .iter()
        .zip(set.half_degrees())
        .all(|(g, tg)| localizing_matrix(g, phi, t - tg).is_ok_and(|m| cholesky(&m).is_ok()))
}

/// Uniform box moments if they are interior, else moments of a uniform grid
/// cloud restricted to the strict interior of `S`.
fn interior_start(set: &SemialgebraicSet, t: usize) -> Result<MomentSequence> {
    let n = set.n();
    let bound = 2 * t;
    let uniform = catalog_moments(&MeasureDescriptor::UniformBox { bounds: vec![[-1.0, 1.0]; n] }, bound)?;
    if all_localizing_pd(set, &uniform, t) {
        return Ok(uniform);
    }
    let per_axis: usize = match n {
        1 => 401,
        2 => 61,
        3 => 21,
        _ => 9,
    };
    for radius in [1.0, 2.0, 4.0, 10.0, 100.0] {
        let mut points = Vec::new();
        let total = per_axis.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let k = rem % per_axis;
                    rem /= per_axis;
                    radius * (2.0 * k as f64 / (per_axis - 1) as f64 - 1.0)
                })
                .collect();
            let inside = set.generators().iter().all(|g| g.eval(&x).is_ok_and(|v| v > 1e-9));
            if inside {
                points.push(x);
            }
        }
        if points.is_empty() {
            continue;
        }
        let phi = empirical_moments(&points, bound)?;
        if all_localizing_pd(set, &phi, t) {
            log::debug!("log-det start from {} interior grid points at radius {radius}", points.len());
            return Ok(phi);
        }
    }
    Err(Error::NotInterior("no interior starting point found: S may have empty interior".into()))
}

/// Minimizes `−Σ_g log det M_{t−t_g}(g·φ)` subject to `φ(p) = Σ_g s(t−t_g)`
/// by damped Newton on the constraint's null space.
pub fn solve_logdet_primal(
    p: &Polynomial,
    set: &SemialgebraicSet,
    t: usize,
    opts: &LogdetOptions,
) -> Result<LogdetSolution> {
    if p.n() != set.n() {
        return Err(Error::DimensionMismatch { expected: set.n(), found: p.n() });
    }
    if p.degree() > 2 * t {
        return Err(Error::DegreeOverflow { monomial: format!("degree {}", p.degree()), bound: 2 * t });
    }
    let level = constraint_level(set, t)? as f64;
    let basis = basis_enumerate(set.n(), 2 * t)?;
    let a = DVector::from_vec(p.coeffs_in(&basis)?);
    let barrier = Barrier::new(set, t, &basis)?;

    let start = interior_start(set, t)?;
    let pval = a.dot(&DVector::from_column_slice(start.values()));
    if pval.is_nan() || pval <= 0.0 {
        return Err(Error::NotInterior(format!(
            "p is not positive against an interior moment sequence (value {pval:e}); p likely not in the interior of the quadratic module"
        )));
    }
    let mut phi = DVector::from_column_slice(start.values()) * (level / pval);

    // null space of aᵀ: eliminate the coordinate with the largest |a_k|
    let k = a.iamax();
    let nv = a.len();
    let mut null = DMatrix::zeros(nv, nv - 1);
    for (col, j) in (0..nv).filter(|&j| j != k).enumerate() {
        null[(j, col)] = 1.0;
        null[(k, col)] = -a[j] / a[k];
    }

    let mut value = barrier
        .value(phi.as_slice())
        .ok_or_else(|| Error::NotInterior("starting point left the domain after scaling".into()))?;
    let mut history = vec![value];
    let mut decrement = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut previous = f64::INFINITY;
    for iter in 0..opts.max_iter {
        iterations = iter;
        let (grad, hess) = barrier.derivatives(phi.as_slice())?;
        let gr = null.transpose() * &grad;
        let hr = null.transpose() * &hess * &null;
        let hr = SymMatrix::from_matrix(hr)?;
        let chol = cholesky(&hr).map_err(|_| {
            Error::NotInterior(
                "reduced Hessian is singular; p likely not in the interior of the quadratic module".into(),
            )
        })?;
        let d = -chol.solve_vec(&gr);
        decrement = (-gr.dot(&d)).max(0.0).sqrt();
        log::debug!("log-det newton {iter}: objective {value:.12e} decrement {decrement:.3e}");
        // below stall_tol without quadratic progress: round-off floor
        if decrement <= opts.decrement_tol || (decrement <= opts.stall_tol && decrement >= 0.5 * previous) {
            converged = true;
            break;
        }
        previous = decrement;
        let step = &null * &d;
        let slope = grad.dot(&step);
        let mut alpha = if decrement > 0.25 { 1.0 / (1.0 + decrement) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &phi + &step * alpha;
            if let Some(v) = barrier.value(trial.as_slice()) {
                // inside the quadratic region the full step is safe for a
                // self-concordant objective; Armijo there only sees round-off
                if decrement <= 0.25 || v <= value + 0.25 * alpha * slope {
                    accepted = Some((trial, v));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, v)) => {
                phi = trial;
                value = v;
                history.push(v);
                iterations = iter + 1;
            }
            None if decrement <= opts.stall_tol => {
                converged = true;
                break;
            }
            None => {
                return Err(Error::NotInterior(format!(
                    "line search reached the boundary without progress (decrement {decrement:e}); p likely not in the interior of the quadratic module"
                )))
            }
        }
    }
    if !converged {
        if decrement <= opts.stall_tol {
            log::warn!("log-det Newton stopped at the iteration cap with decrement {decrement:e}");
        } else {
            return Err(Error::NotInterior(format!(
                "Newton did not converge in {} iterations (decrement {decrement:e})",
                opts.max_iter
            )));
        }
    }
    let phi = MomentSequence::new(set.n(), 2 * t, phi.iter().copied().collect(), format!("log-det optimum t={t}"))?;
    Ok(LogdetSolution { phi, objective: value, iterations, newton_decrement: decrement, objective_history: history })
}

/// `Q_g = M_{t−t_g}(g·φ)⁻¹` per generator.
pub fn recover_dual(phi: &MomentSequence, set: &SemialgebraicSet, t: usize) -> Result<Vec<SymMatrix>> {
    set.generators()
        .iter()
        .zip(set.half_degrees())
        .map(|(g, tg)| {
            let order = t
                .checked_sub(tg)
                .ok_or_else(|| Error::InvalidArgument(format!("order {t} is below a generator half-degree {tg}")))?;
            let m = localizing_matrix(g, phi, order)?;
            let chol = cholesky(&m).map_err(|_| Error::SingularMomentMatrix { degree: order })?;
            Ok(refined_inverse(&m, &chol))
        })
        .collect()
}

/// `Σ_g g · v_{t−t_g}ᵀ Q_g v_{t−t_g}`.
pub fn assemble_representation(gram_blocks: &[SymMatrix], set: &SemialgebraicSet, t: usize) -> Result<Polynomial> {
    if gram_blocks.len() != set.generators().len() {
        return Err(Error::DimensionMismatch { expected: set.generators().len(), found: gram_blocks.len() });
    }
    let mut acc = Polynomial::zero(set.n());
    for ((g, tg), q) in set.generators().iter().zip(set.half_degrees()).zip(gram_blocks) {
        let basis = basis_enumerate(set.n(), t.saturating_sub(tg))?;
        if q.order() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), found: q.order() });
        }
        acc = acc.add(&Polynomial::from_gram(&basis, q.matrix()).mul(g)?)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelRep {
    pub t: usize,
    pub generators: Vec<Polynomial>,
    pub phi_star: MomentSequence,
    pub gram_blocks: Vec<SymMatrix>,
    /// `−Σ_g log det M_{t−t_g}(g·φ*)`.
    pub primal_value: f64,
    /// `Σ_g log det Q_g`.
    pub dual_value: f64,
    /// `|primal_value − dual_value|`; zero at the optimum.
    pub duality_gap: f64,
    pub residual_poly: Polynomial,
    /// Max coefficient of `residual_poly` relative to `max|p_α|`.
    pub residual: f64,
    /// `max_g ‖Q_g M_g − I‖_max`.
    pub inverse_defect: f64,
    pub iterations: usize,
    pub newton_decrement: f64,
}

fn log_det_sum(ms: &[SymMatrix]) -> Result<f64> {
    ms.iter().map(|m| Ok(cholesky(m)?.log_det())).sum()
}

/// Solves the log-det problem for `p` and assembles its Christoffel representation.
pub fn christoffel_representation(
    p: &Polynomial,
    set: &SemialgebraicSet,
    t: usize,
    opts: &LogdetOptions,
) -> Result<ChristoffelRep> {
    let sol = solve_logdet_primal(p, set, t, opts)?;
    let gram_blocks = recover_dual(&sol.phi, set, t)?;
    let moment_blocks: Vec<SymMatrix> = set
        .generators()
        .iter()
        .zip(set.half_degrees())
        .map(|(g, tg)| localizing_matrix(g, &sol.phi, t - tg))
        .collect::<Result<_>>()?;
    let primal_value = -log_det_sum(&moment_blocks)?;
    let dual_value = log_det_sum(&gram_blocks)?;
    let assembled = assemble_representation(&gram_blocks, set, t)?;
    let residual_poly = p.sub(&assembled)?;
    let residual = residual_poly.max_abs_coef() / p.max_abs_coef().max(f64::MIN_POSITIVE);
    let inverse_defect = gram_blocks
        .iter()
        .zip(&moment_blocks)
        .map(|(q, m)| (q.matrix() * m.matrix() - DMatrix::identity(q.order(), q.order())).amax())
        .fold(0.0, f64::max);
    Ok(ChristoffelRep {
        t,
        generators: set.generators().to_vec(),
        phi_star: sol.phi,
        gram_blocks,
        primal_value,
        dual_value,
        duality_gap: (primal_value - dual_value).abs(),
        residual_poly,
        residual,
        inverse_defect,
        iterations: sol.iterations,
        newton_decrement: sol.newton_decrement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PellReport {
    pub t: usize,
    /// `Σ_g g·(Λ^{g·φ}_{t−t_g})⁻¹ − Σ_g s(t−t_g)`.
    pub residual_poly: Polynomial,
    pub residual: f64,
}

pub fn pell_check(set: &SemialgebraicSet, phi: &MomentSequence, t: usize) -> Result<PellReport> {
    let gram = recover_dual(phi, set, t)?;
    let level = constraint_level(set, t)? as f64;
    let residual_poly = assemble_representation(&gram, set, t)?.sub(&Polynomial::constant(set.n(), level))?;
    Ok(PellReport { t, residual: residual_poly.max_abs_coef(), residual_poly })
}

/// `p*_t = (Σ_g s(t−t_g))⁻¹ Σ_g g·(Λ^{g·λ}_{t−t_g})⁻¹` and its mass `λ(p*_t)`.
pub fn pstar_density(lambda: &MomentSequence, set: &SemialgebraicSet, t: usize) -> Result<(Polynomial, f64)> {
    let gram = recover_dual(lambda, set, t)?;
    let level = constraint_level(set, t)? as f64;
    let p = assemble_representation(&gram, set, t)?.scale(1.0 / level);
    let mass = riesz_apply(lambda, &p)?;
    Ok((p, mass))
}

/// `⟨M, Q⟩ − n − log det M − log det Q ≥ 0`, with equality iff `Q = M⁻¹`.
pub fn fenchel_gap(m: &SymMatrix, q: &SymMatrix) -> Result<f64> {
    if m.order() != q.order() {
        return Err(Error::DimensionMismatch { expected: m.order(), found: q.order() });
    }
    let ld_m = cholesky(m)?.log_det();
    let ld_q = cholesky(q)?.log_det();
    let inner = compensated_dot(-(m.order() as f64), m.matrix().iter().copied(), q.matrix().iter().copied());
    Ok(inner - ld_m - ld_q)
}

/// Reference sets for the equilibrium-measure experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumSet {
    Interval,
    Box2d,
    Ball2d,
    Simplex2d,
}

impl EquilibriumSet {
    /// Canonical generators. The simplex also carries the redundant
    /// `1 − ‖x‖²`, without which its linear generators leave the
    /// degree-`2t` moments unbounded at the top degree.
    pub fn semialgebraic_set(&self) -> SemialgebraicSet {
        match self {
            EquilibriumSet::Interval => SemialgebraicSet::interval(),
            EquilibriumSet::Box2d => SemialgebraicSet::unit_box(2).expect("valid"),
            EquilibriumSet::Ball2d => SemialgebraicSet::ball(2, 1.0).expect("valid"),
            EquilibriumSet::Simplex2d => {
                crate::moments::archimedean_augment(&SemialgebraicSet::simplex2d(), 1.0).expect("valid")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumStep {
    pub t: usize,
    pub phi: MomentSequence,
    pub iterations: usize,
    /// `max |φ*_t − φ*_{t+1}|` over moments of degree `≤ 2t`.
    pub drift_to_next: Option<f64>,
    /// Orders above 3 are outside the documented scope.
    pub exploratory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub set: EquilibriumSet,
    pub generators: Vec<Polynomial>,
    pub steps: Vec<EquilibriumStep>,
}

/// Solves the constant-`p` log-det problem for `t = t_min..=t_max`.
pub fn equilibrium_experiment(which: EquilibriumSet, t_max: usize, opts: &LogdetOptions) -> Result<EquilibriumReport> {
    let set = which.semialgebraic_set();
    let t_min = set.max_half_degree().max(1);
    let mut steps: Vec<EquilibriumStep> = Vec::new();
    for t in t_min..=t_max {
        let level = constraint_level(&set, t)? as f64;
        let sol = solve_logdet_primal(&Polynomial::constant(set.n(), level), &set, t, opts)?;
        if let Some(prev) = steps.last_mut() {
            prev.drift_to_next = Some(prev.phi.max_abs_diff(&sol.phi)?);
        }
        steps.push(EquilibriumStep {
            t,
            phi: sol.phi.with_label(format!("{which:?} equilibrium estimate t={t}")),
            iterations: sol.iterations,
            drift_to_next: None,
            exploratory: t > 3,
        });
    }
    Ok(EquilibriumReport { set: which, generators: set.generators().to_vec(), steps })
}
