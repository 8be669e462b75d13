//! Moment-SOS lower bounds, flatness detection and minimizer extraction, and
//! the generalized-eigenvalue upper bounds (multivariate and pushforward).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, sym_eig, SymMatrix};
use crate::moments::{
    localizing_matrix, moment_matrix, pushforward_moments, LocalizingMap, MomentSequence, SemialgebraicSet,
};
use crate::polycore::{basis_enumerate, MonomialBasis, MultiIndex, Polynomial};
use crate::sdp::{solve_sdp, SdpOptions, SdpProblem, SdpStatus};

/// Eigenvalues below this fraction of the largest count as zero in rank tests.
pub const RANK_TOLERANCE: f64 = 1e-7;
/// Atom-weight fit residual above which an extraction is not trusted.
pub const EXTRACTION_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// `t₀ = max(⌈deg f/2⌉, max_g ⌈deg g/2⌉)`.
pub fn min_order(f: &Polynomial, set: &SemialgebraicSet) -> usize {
    f.half_degree().max(set.max_half_degree())
}

/// The order-`t` moment relaxation with its bookkeeping.
///
/// SDP variable `j` is the moment `φ_β` with `β` the `(j+1)`-th monomial of
/// the degree-`2t` basis; `φ₀ = 1` is substituted.
#[derive(Debug, Clone)]
pub struct LowerRelaxation {
    pub t: usize,
    pub problem: SdpProblem,
    pub basis: MonomialBasis,
    pub localizing: Vec<LocalizingMap>,
}

pub fn build_lower_relaxation(f: &Polynomial, set: &SemialgebraicSet, t: usize) -> Result<LowerRelaxation> {
    if f.n() != set.n() {
        return Err(Error::DimensionMismatch { expected: set.n(), found: f.n() });
    }
    let t0 = min_order(f, set);
    if t < t0 {
        return Err(Error::InvalidArgument(format!("relaxation order {t} is below the minimal order {t0}")));
    }
    if !set.has_ball_generator() {
        log::warn!("no ball constraint among the generators; convergence of the hierarchy is not guaranteed");
    }
    let basis = basis_enumerate(set.n(), 2 * t)?;
    let coeffs = f.coeffs_in(&basis)?;
    let mut problem = SdpProblem::new(coeffs[1..].to_vec()).with_constant(coeffs[0]);
    let mut localizing = Vec::new();
    for (g, tg) in set.generators().iter().zip(set.half_degrees()) {
        let map = LocalizingMap::new(g, t - tg, &basis)?;
        let mut mats = map.coefficient_matrices();
        let f0 = mats
            .remove(&0)
            .map(|m| SymMatrix::from_matrix(m).expect("finite"))
            .unwrap_or_else(|| SymMatrix::zeros(map.order()));
        let coefficients = mats.into_iter().map(|(k, m)| (k - 1, SymMatrix::from_matrix(m).expect("finite"))).collect();
        problem.add_block(f0, coefficients)?;
        localizing.push(map);
    }
    Ok(LowerRelaxation { t, problem, basis, localizing })
}

/// Numerical ranks of `M_t(φ)` and `M_{t−s}(φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub rank_t: usize,
    pub rank_t_minus_s: usize,
    pub flat: bool,
}

pub fn numerical_rank(m: &SymMatrix) -> Result<usize> {
    let values = sym_eig(m)?.values;
    let max = values.last().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Ok(0);
    }
    Ok(values.iter().filter(|&&v| v > RANK_TOLERANCE * max).count())
}

pub fn flatness_check(phi: &MomentSequence, t: usize, s: usize) -> Result<FlatnessReport> {
    let rank_t = numerical_rank(&moment_matrix(phi, t)?)?;
    let rank_t_minus_s = numerical_rank(&moment_matrix(phi, t.saturating_sub(s))?)?;
    Ok(FlatnessReport { rank_t, rank_t_minus_s, flat: rank_t == rank_t_minus_s })
}

/// Atoms recovered from a flat moment matrix, with fitted weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Max absolute mismatch between `φ` and the fitted atomic moments.
    pub residual: f64,
    pub verified: bool,
}

/// Reduced row echelon form of `a` (rows × cols); returns the pivot columns.
fn rref(a: &mut DMatrix<f64>, tol: f64) -> Vec<usize> {
    let (rows, cols) = a.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) =
            (r..rows).map(|i| (i, a[(i, c)].abs())).fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        a.swap_rows(r, best);
        let p = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let factor = a[(i, c)];
                if factor != 0.0 {
                    for j in 0..cols {
                        let v = a[(r, j)];
                        a[(i, j)] -= factor * v;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Joint-eigenvalue extraction of the atoms of a flat `M_t(φ)`.
pub fn extract_minimizers(phi: &MomentSequence, t: usize) -> Result<Extraction> {
    extract_minimizers_seeded(phi, t, DEFAULT_SEED)
}

pub fn extract_minimizers_seeded(phi: &MomentSequence, t: usize, seed: u64) -> Result<Extraction> {
    let n = phi.n();
    let m = moment_matrix(phi, t)?;
    let basis = basis_enumerate(n, t)?;
    let eig = sym_eig(&m)?;
    let rank = numerical_rank(&m)?;
    if rank == 0 {
        return Err(Error::ExtractionUnstable("moment matrix is zero".into()));
    }
    let s = basis.len();
    // M ≈ V Vᵀ from the leading eigenpairs
    let mut vt = DMatrix::zeros(rank, s);
    for k in 0..rank {
        let idx = s - 1 - k;
        let scale = eig.values[idx].sqrt();
        for i in 0..s {
            vt[(k, i)] = eig.vectors[(i, idx)] * scale;
        }
    }
    let tol = 1e-6 * vt.amax();
    let pivots = rref(&mut vt, tol);
    if pivots.len() != rank {
        return Err(Error::ExtractionUnstable(format!("echelon form found {} pivots for rank {rank}", pivots.len())));
    }
    // v(x) = U w(x) with U = vtᵀ (s × r)
    let u = vt.transpose();
    let mut shifts = Vec::with_capacity(n);
    for i in 0..n {
        let mut ni = DMatrix::zeros(rank, rank);
        for (row, &p) in pivots.iter().enumerate() {
            let shifted = basis.get(p).add(&MultiIndex::unit(n, i));
            let k = basis.index_of(&shifted).ok_or_else(|| {
                Error::ExtractionUnstable(format!("shifted monomial {shifted} leaves the degree-{t} basis"))
            })?;
            ni.set_row(row, &u.row(k));
        }
        shifts.push(ni);
    }
    let norm = shifts.iter().map(|s| s.norm()).fold(1.0, f64::max);
    for a in 0..n {
        for b in (a + 1)..n {
            let comm = &shifts[a] * &shifts[b] - &shifts[b] * &shifts[a];
            if comm.norm() > 1e-4 * norm * norm {
                return Err(Error::ExtractionUnstable(format!(
                    "multiplication matrices do not commute (defect {:e})",
                    comm.norm()
                )));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= total);
    let mut combo = DMatrix::zeros(rank, rank);
    for (l, ni) in lambda.iter().zip(&shifts) {
        combo += ni * *l;
    }
    let schur = nalgebra::Schur::try_new(combo, f64::EPSILON, 1000)
        .ok_or_else(|| Error::ExtractionUnstable("Schur decomposition did not converge".into()))?;
    let (q, _) = schur.unpack();
    let atoms: Vec<Vec<f64>> = (0..rank)
        .map(|j| {
            let qj = q.column(j);
            shifts.iter().map(|ni| qj.dot(&(ni * qj))).collect()
        })
        .collect();
    let (weights, residual) = fit_weights(phi, &atoms)?;
    Ok(Extraction { verified: residual <= EXTRACTION_TOLERANCE, atoms, weights, residual })
}

/// Least-squares weights of `Σ_j w_j δ_{x_j}` against all moments of `φ`.
fn fit_weights(phi: &MomentSequence, atoms: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let basis = phi.basis();
    let mut a = DMatrix::zeros(basis.len(), atoms.len());
    for (j, x) in atoms.iter().enumerate() {
        a.set_column(j, &DVector::from_vec(basis.monomial_vector(x)));
    }
    let b = DVector::from_column_slice(phi.values());
    let svd = a.clone().svd(true, true);
    let w = svd.solve(&b, 1e-12 * svd.singular_values.max()).map_err(|e| Error::Numerical(e.to_string()))?;
    let residual = (&a * &w - &b).amax();
    Ok((w.iter().copied().collect(), residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundOptions {
    pub sdp: SdpOptions,
    pub seed: u64,
    pub extract: bool,
}

impl Default for LowerBoundOptions {
    fn default() -> Self {
        Self { sdp: SdpOptions::default(), seed: DEFAULT_SEED, extract: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundResult {
    pub t: usize,
    /// `φ*(f)`.
    pub rho_t: f64,
    /// Value certified by the SOS multipliers.
    pub rho_dual: f64,
    pub phi_star: MomentSequence,
    /// Gram matrices of `σ_g`, in generator order.
    pub sos_certificate: Vec<SymMatrix>,
    /// Max coefficient of `f − ρ − Σ_g σ_g g`, relative to `max(1, ‖f‖)`.
    pub certificate_residual: f64,
    pub flatness: FlatnessReport,
    pub flat: bool,
    /// False when a flat solution's atoms fail the weight fit or the
    /// soundness checks.
    pub extraction_verified: bool,
    pub minimizers: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// Solves the order-`t` relaxation and post-processes its solution.
pub fn lower_bound(
    f: &Polynomial,
    set: &SemialgebraicSet,
    t: usize,
    opts: &LowerBoundOptions,
) -> Result<LowerBoundResult> {
    let relax = build_lower_relaxation(f, set, t)?;
    let sol = solve_sdp(&relax.problem, &opts.sdp)?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver { stage: format!("lower bound at order {t}"), status: sol.status });
    }
    let mut values = vec![1.0];
    values.extend_from_slice(&sol.y);
    let phi_star = MomentSequence::new(set.n(), 2 * t, values, format!("relaxation order {t}"))?;

    let mut remainder = f.sub(&Polynomial::constant(f.n(), sol.dual_obj))?;
    for ((g, tg), z) in set.generators().iter().zip(set.half_degrees()).zip(&sol.z_blocks) {
        let b = basis_enumerate(set.n(), t - tg)?;
        let sigma = Polynomial::from_gram(&b, z.matrix());
        remainder = remainder.sub(&sigma.mul(g)?)?;
    }
    let certificate_residual = remainder.max_abs_coef() / f.max_abs_coef().max(1.0);

    let flatness = flatness_check(&phi_star, t, set.max_half_degree().max(1))?;
    let mut minimizers = Vec::new();
    let mut extraction_verified = false;
    if flatness.flat && opts.extract {
        match extract_minimizers_seeded(&phi_star, t, opts.seed) {
            Ok(ex) => {
                let scale = 1.0 + sol.primal_obj.abs();
                let sound = ex.atoms.iter().all(|x| {
                    set.contains(x, 1e-6).unwrap_or(false)
                        && f.eval(x).is_ok_and(|v| (v - sol.primal_obj).abs() <= 1e-5 * scale)
                });
                extraction_verified = ex.verified && sound;
                if !extraction_verified {
                    log::warn!(
                        "flat relaxation at order {t} but extraction unverified (fit residual {:e})",
                        ex.residual
                    );
                }
                minimizers = ex.atoms;
            }
            Err(e) => log::warn!("extraction failed at order {t}: {e}"),
        }
    }
    Ok(LowerBoundResult {
        t,
        rho_t: sol.primal_obj,
        rho_dual: sol.dual_obj,
        phi_star,
        sos_certificate: sol.z_blocks,
        certificate_residual,
        flat: flatness.flat,
        flatness,
        extraction_verified,
        minimizers,
        iterations: sol.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperBoundMode {
    Multivariate,
    Pushforward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundResult {
    pub t: usize,
    pub mode: UpperBoundMode,
    /// `τ_t` (multivariate) or `δ_t` (pushforward).
    pub value: f64,
    /// SOS density `σ*` of degree `2t` (in `x`; pulled back through `f` in
    /// pushforward mode), normalized so that `μ(σ*) = 1`.
    pub sigma_star: Polynomial,
    /// Order of the pencil matrices.
    pub matrix_order: usize,
    /// Set when `f` is constant and the pencil is skipped.
    pub degenerate: bool,
}

/// Minimal generalized eigenvector; within a numerically repeated minimal
/// eigenvalue, the first unit vector with non-zero projection onto the
/// eigenspace fixes the choice.
fn pencil_min(a: &SymMatrix, b: &SymMatrix) -> Result<(f64, DVector<f64>)> {
    let chol = cholesky(b).map_err(|_| Error::SingularMomentMatrix { degree: b.order().saturating_sub(1) })?;
    let li = chol.lower_inverse();
    let c = SymMatrix::from_matrix(&li * a.matrix() * li.transpose())?;
    let eig = sym_eig(&c)?;
    let lam = eig.values[0];
    let spread = eig.values.last().unwrap().abs().max(lam.abs()).max(1.0);
    let dim = eig.values.iter().take_while(|&&v| v - lam <= 1e-10 * spread).count();
    let space = eig.vectors.columns(0, dim);
    let mut u = eig.vectors.column(0).clone_owned();
    if dim > 1 {
        for i in 0..c.order() {
            let proj = space * space.row(i).transpose();
            if proj.norm() > 1e-8 {
                u = proj.normalize();
                break;
            }
        }
    }
    let w = chol.l().tr_solve_lower_triangular(&u).expect("positive diagonal");
    Ok((lam, w))
}

fn normalized_square(basis: &MonomialBasis, w: &DVector<f64>, mass: f64) -> Polynomial {
    let gram = w * w.transpose() / mass;
    Polynomial::from_gram(basis, &gram)
}

/// `τ_t = λ_min(M_t(f·μ), M_t(μ))`.
pub fn upper_bound(f: &Polynomial, mu: &MomentSequence, t: usize) -> Result<UpperBoundResult> {
    let b = moment_matrix(mu, t)?;
    let a = localizing_matrix(f, mu, t)?;
    if cholesky(&b).is_err() {
        return Err(Error::SingularMomentMatrix { degree: t });
    }
    let (value, w) = pencil_min(&a, &b)?;
    let basis = basis_enumerate(mu.n(), t)?;
    let mass = (w.transpose() * b.matrix() * &w)[(0, 0)];
    Ok(UpperBoundResult {
        t,
        mode: UpperBoundMode::Multivariate,
        value,
        sigma_star: normalized_square(&basis, &w, mass),
        matrix_order: b.order(),
        degenerate: false,
    })
}

/// `δ_t` from the order-`(t+1)` Hankel pencil of the pushforward `f#μ`.
pub fn upper_bound_pushforward(f: &Polynomial, mu: &MomentSequence, t: usize) -> Result<UpperBoundResult> {
    if f.n() != mu.n() {
        return Err(Error::DimensionMismatch { expected: mu.n(), found: f.n() });
    }
    if f.degree() == 0 {
        return Ok(UpperBoundResult {
            t,
            mode: UpperBoundMode::Pushforward,
            value: f.constant_term(),
            sigma_star: Polynomial::constant(f.n(), 1.0 / mu.values()[0]),
            matrix_order: t + 1,
            degenerate: true,
        });
    }
    let z = pushforward_moments(f, mu, 2 * t + 1)?;
    let h = moment_matrix(&z, t)?;
    let hz = localizing_matrix(&Polynomial::var(1, 0), &z, t)?;
    if cholesky(&h).is_err() {
        return Err(Error::SingularMomentMatrix { degree: t });
    }
    let (value, w) = pencil_min(&hz, &h)?;
    let mass = (w.transpose() * h.matrix() * &w)[(0, 0)];
    let sigma_z = normalized_square(&basis_enumerate(1, t)?, &w, mass);
    Ok(UpperBoundResult {
        t,
        mode: UpperBoundMode::Pushforward,
        value,
        sigma_star: sigma_z.compose_univariate(f)?,
        matrix_order: h.order(),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{catalog_moments, riesz_apply, MeasureDescriptor};

    fn x() -> Polynomial {
        Polynomial::var(1, 0)
    }

    fn unif(bound: usize) -> MomentSequence {
        catalog_moments(&MeasureDescriptor::UniformInterval { a: -1.0, b: 1.0 }, bound).unwrap()
    }

    #[test]
    fn relaxation_shapes() {
        let r = build_lower_relaxation(&x(), &SemialgebraicSet::interval(), 1).unwrap();
        assert_eq!(r.problem.block_orders(), vec![2, 1]);
        assert_eq!(r.problem.num_vars, 2);
        let ball = SemialgebraicSet::ball(2, 1.0).unwrap();
        let r = build_lower_relaxation(&Polynomial::var(2, 0), &ball, 2).unwrap();
        assert_eq!(r.problem.block_orders(), vec![6, 3]);
        let quartic = Polynomial::univariate(&[0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(build_lower_relaxation(&quartic, &SemialgebraicSet::interval(), 1).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let s = SemialgebraicSet::interval();
        let opts = LowerBoundOptions::default();
        let r = lower_bound(&x(), &s, 1, &opts).unwrap();
        assert!((r.rho_t + 1.0).abs() < 1e-6);
        assert!(r.certificate_residual < 1e-6);
        assert!(r.flat && r.extraction_verified);
        assert_eq!(r.minimizers.len(), 1);
        assert!((r.minimizers[0][0] + 1.0).abs() < 1e-6);

        let r = lower_bound(&Polynomial::univariate(&[0.0, 0.0, 1.0]), &s, 1, &opts).unwrap();
        assert!(r.rho_t.abs() < 1e-6);

        let r = lower_bound(&Polynomial::univariate(&[1.0, 0.0, -1.0]), &s, 2, &opts).unwrap();
        assert!(r.rho_t.abs() < 1e-6);
        if r.extraction_verified {
            let mut xs: Vec<f64> = r.minimizers.iter().map(|m| m[0]).collect();
            xs.sort_by(f64::total_cmp);
            assert!((xs[0] + 1.0).abs() < 1e-5 && (xs[1] - 1.0).abs() < 1e-5, "{xs:?}");
        }

        let r = lower_bound(&Polynomial::constant(1, 2.5), &s, 1, &opts).unwrap();
        assert!((r.rho_t - 2.5).abs() < 1e-8);
    }

    #[test]
    fn flatness_examples() {
        let dirac = MomentSequence::new(1, 2, vec![1.0, -1.0, 1.0], "d").unwrap();
        assert_eq!(flatness_check(&dirac, 1, 1).unwrap(), FlatnessReport { rank_t: 1, rank_t_minus_s: 1, flat: true });
        assert_eq!(
            flatness_check(&unif(4), 2, 1).unwrap(),
            FlatnessReport { rank_t: 3, rank_t_minus_s: 2, flat: false }
        );
        let two = MomentSequence::new(1, 4, vec![1.0, 0.0, 1.0, 0.0, 1.0], "d").unwrap();
        assert_eq!(flatness_check(&two, 2, 1).unwrap(), FlatnessReport { rank_t: 2, rank_t_minus_s: 2, flat: true });
    }

    #[test]
    fn extraction_examples() {
        let dirac = MomentSequence::new(1, 2, vec![1.0, -1.0, 1.0], "d").unwrap();
        let ex = extract_minimizers(&dirac, 1).unwrap();
        assert!(ex.verified);
        assert!((ex.atoms[0][0] + 1.0).abs() < 1e-12);

        let two = MomentSequence::new(1, 4, vec![1.0, 0.0, 1.0, 0.0, 1.0], "d").unwrap();
        let ex = extract_minimizers(&two, 2).unwrap();
        let mut xs: Vec<f64> = ex.atoms.iter().map(|a| a[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 1.0).abs() < 1e-10 && (xs[1] - 1.0).abs() < 1e-10);
        assert!(ex.weights.iter().all(|w| (w - 0.5).abs() < 1e-10));

        let d2 = MomentSequence::dirac(&[0.5, -0.5], 2).unwrap();
        let ex = extract_minimizers(&d2, 1).unwrap();
        assert!((ex.atoms[0][0] - 0.5).abs() < 1e-12 && (ex.atoms[0][1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn extraction_of_three_planar_atoms() {
        let pts = [[0.3, -0.2], [-0.7, 0.5], [0.1, 0.9]];
        let w = [0.2, 0.5, 0.3];
        let phi =
            MomentSequence::from_fn(2, 6, "atoms", |a| pts.iter().zip(w).map(|(p, wi)| wi * a.eval(p)).sum()).unwrap();
        let ex = extract_minimizers(&phi, 3).unwrap();
        assert!(ex.verified, "{ex:?}");
        assert_eq!(ex.atoms.len(), 3);
        for p in pts {
            assert!(ex.atoms.iter().any(|a| (a[0] - p[0]).abs() < 1e-8 && (a[1] - p[1]).abs() < 1e-8));
        }
    }

    #[test]
    fn upper_bound_examples() {
        let mu = unif(12);
        let r = upper_bound(&x(), &mu, 1).unwrap();
        assert!((r.value + 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((riesz_apply(&mu, &r.sigma_star).unwrap() - 1.0).abs() < 1e-10);
        let r = upper_bound(&x(), &mu, 0).unwrap();
        assert!(r.value.abs() < 1e-15);
        for t in 0..4 {
            let r = upper_bound(&Polynomial::constant(1, 2.0), &mu, t).unwrap();
            assert!((r.value - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pushforward_examples() {
        let mu = unif(12);
        let r = upper_bound_pushforward(&x(), &mu, 1).unwrap();
        assert!((r.value + 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let r = upper_bound_pushforward(&Polynomial::univariate(&[0.0, 0.0, 1.0]), &mu, 1).unwrap();
        assert!((r.value - (15.0 - 2.0 * 30f64.sqrt()) / 35.0).abs() < 1e-12);
        assert_eq!(r.matrix_order, 2);
        assert!((riesz_apply(&mu, &r.sigma_star).unwrap() - 1.0).abs() < 1e-10);
        let r = upper_bound_pushforward(&Polynomial::constant(1, 2.0), &mu, 3).unwrap();
        assert!(r.degenerate && r.value == 2.0);
        assert!(upper_bound_pushforward(&Polynomial::univariate(&[0.0, 0.0, 1.0]), &mu, 3).is_err());
    }
}
