//! Dense primal–dual interior-point solver for block-diagonal linear matrix
//! inequalities
//!
//! ```text
//! minimize  cᵀy + k   subject to  F_b0 + Σ_j y_j F_bj ⪰ 0  for every block b,
//!                                 E y = d  (optional)
//! ```
//!
//! Internally the LMI is the dual of the standard-form pair with `C = F0`,
//! `A_j = −F_j`, `b = −c`; the block duals `Z_b` are the primal matrix
//! variable. Iterations use the HKM direction with Mehrotra's
//! predictor–corrector from an infeasible start. Infeasibility and
//! unboundedness are detected from diverging iterates that, once normalized,
//! form approximate certificates (a Farkas ray `Z` or a recession direction `y`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};

/// Terminal state of [`solve_sdp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    /// The LMI has no feasible point.
    Infeasible,
    /// The objective is unbounded below on the feasible set.
    Unbounded,
    MaxIter,
    NumError,
}

/// One affine block `F0 + Σ_j y_j F_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub constant: SymMatrix,
    /// `(variable index, F_j)`; variables absent from the list have `F_j = 0`.
    pub coefficients: Vec<(usize, SymMatrix)>,
}

impl LmiBlock {
    pub fn order(&self) -> usize {
        self.constant.order()
    }

    pub fn evaluate(&self, y: &[f64]) -> SymMatrix {
        let mut m = self.constant.matrix().clone();
        for (j, f) in &self.coefficients {
            m += f.matrix() * y[*j];
        }
        SymMatrix::from_matrix(m).expect("finite")
    }
}

/// Linear equalities `E y = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEqualities {
    pub matrix: DMatrix<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub blocks: Vec<LmiBlock>,
    pub equalities: Option<LinearEqualities>,
}

impl SdpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { num_vars: objective.len(), objective, objective_constant: 0.0, blocks: Vec::new(), equalities: None }
    }

    pub fn with_constant(mut self, k: f64) -> Self {
        self.objective_constant = k;
        self
    }

    pub fn add_block(&mut self, constant: SymMatrix, coefficients: Vec<(usize, SymMatrix)>) -> Result<()> {
        for (j, f) in &coefficients {
            if *j >= self.num_vars {
                return Err(Error::InvalidArgument(format!("block references variable {j} of {}", self.num_vars)));
            }
            if f.order() != constant.order() {
                return Err(Error::DimensionMismatch { expected: constant.order(), found: f.order() });
            }
        }
        self.blocks.push(LmiBlock { constant, coefficients });
        Ok(())
    }

    pub fn with_equalities(mut self, matrix: DMatrix<f64>, rhs: Vec<f64>) -> Self {
        self.equalities = Some(LinearEqualities { matrix, rhs });
        self
    }

    pub fn block_orders(&self) -> Vec<usize> {
        self.blocks.iter().map(LmiBlock::order).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidArgument("problem has no PSD block".into()));
        }
        if self.objective.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, found: self.objective.len() });
        }
        if let Some(eq) = &self.equalities {
            if eq.matrix.ncols() != self.num_vars {
                return Err(Error::DimensionMismatch { expected: self.num_vars, found: eq.matrix.ncols() });
            }
            if eq.matrix.nrows() != eq.rhs.len() {
                return Err(Error::DimensionMismatch { expected: eq.matrix.nrows(), found: eq.rhs.len() });
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(y).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Record per-iteration diagnostics in [`SdpSolution::trace`].
    pub trace: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-8, feas_tol: 1e-8, max_iter: 200, trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub y: Vec<f64>,
    /// Dual matrices, one per block.
    pub z_blocks: Vec<SymMatrix>,
    /// `cᵀy + k`.
    pub primal_obj: f64,
    /// `k − Σ_b ⟨F_b0, Z_b⟩`.
    pub dual_obj: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Relative duality gap.
    pub gap: f64,
    /// Residual of `⟨F_bj, Z⟩ = c_j`, relative.
    pub dual_infeasibility: f64,
    /// Most negative eigenvalue of the LMI at `y`, relative to block scale (0 if PSD).
    pub primal_infeasibility: f64,
    /// `⟨F_b(y), Z_b⟩` per block.
    pub complementarity: Vec<f64>,
    pub trace: Vec<IterationRecord>,
}

/// Standard-form data: `C`, and `A_j` per block as sparse lists.
struct StdForm {
    c: Vec<DMatrix<f64>>,
    a: Vec<Vec<(usize, DMatrix<f64>)>>,
    b: DVector<f64>,
    m: usize,
}

impl StdForm {
    fn op(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, xb) in self.a.iter().zip(x) {
            for (j, aj) in blk {
                out[*j] += aj.dot(xb);
            }
        }
        out
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.a
            .iter()
            .zip(&self.c)
            .map(|(blk, c)| {
                let mut m = DMatrix::zeros(c.nrows(), c.ncols());
                for (j, aj) in blk {
                    m += aj * y[*j];
                }
                m
            })
            .collect()
    }

    fn schur(&self, x: &[DMatrix<f64>], s_inv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.m, self.m);
        for ((blk, xb), sb) in self.a.iter().zip(x).zip(s_inv) {
            for (j, aj) in blk {
                let g = xb * aj * sb;
                for (i, ai) in blk {
                    h[(*i, *j)] += ai.dot(&g);
                }
            }
        }
        (&h + h.transpose()) * 0.5
    }
}

fn frob(ms: &[DMatrix<f64>]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Largest `α ≤ 1/γ-scaled` keeping `X + α ΔX ⪰ 0`, given `X = L Lᵀ`.
fn max_step(l: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for (lb, db) in l.iter().zip(dx) {
        let y = lb.solve_lower_triangular(db).ok_or_else(|| Error::Numerical("triangular solve".into()))?;
        let z = lb.solve_lower_triangular(&y.transpose()).ok_or_else(|| Error::Numerical("triangular solve".into()))?;
        let min = sym_eig(&SymMatrix::from_matrix(z)?)?.values.first().copied().unwrap_or(0.0);
        if min < 0.0 {
            alpha = alpha.min(-1.0 / min);
        }
    }
    Ok(alpha)
}

fn chol_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone()).map(|c| c.l())
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
}

enum SchurFactor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(h: DMatrix<f64>) -> Self {
        match nalgebra::Cholesky::new(h.clone()) {
            Some(c) => SchurFactor::Chol(c),
            None => SchurFactor::Lu(h.lu()),
        }
    }

    fn solve(&self, r: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            SchurFactor::Chol(c) => Some(c.solve(r)),
            SchurFactor::Lu(lu) => lu.solve(r),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn direction(
    sf: &StdForm,
    schur: &SchurFactor,
    x: &[DMatrix<f64>],
    s_inv: &[DMatrix<f64>],
    rd: &[DMatrix<f64>],
    sigma_mu: f64,
    second_order: Option<&Direction>,
) -> Result<Direction> {
    // ΔX = σμ S⁻¹ − X − X ΔS S⁻¹ − W,  W = ΔXₐ ΔSₐ S⁻¹
    let w: Option<Vec<DMatrix<f64>>> =
        second_order.map(|d| d.dx.iter().zip(&d.ds).zip(s_inv).map(|((a, b), si)| a * b * si).collect());
    let xrs: Vec<DMatrix<f64>> = x.iter().zip(rd).zip(s_inv).map(|((xb, r), si)| xb * r * si).collect();
    let mut rhs = sf.b.clone() - sf.op(s_inv) * sigma_mu + sf.op(&xrs);
    if let Some(w) = &w {
        rhs += sf.op(w);
    }
    let dy = schur.solve(&rhs).ok_or_else(|| Error::Numerical("singular Schur complement".into()))?;
    let ady = sf.adjoint(&dy);
    let ds: Vec<DMatrix<f64>> = rd.iter().zip(&ady).map(|(r, a)| r - a).collect();
    let dx: Vec<DMatrix<f64>> = (0..x.len())
        .map(|b| {
            let mut d = &s_inv[b] * sigma_mu - &x[b] - &x[b] * &ds[b] * &s_inv[b];
            if let Some(w) = &w {
                d -= &w[b];
            }
            sym(d)
        })
        .collect();
    Ok(Direction { dx, ds, dy })
}

/// Problem after eliminating equalities: `y = y0 + N z`.
struct Reduced {
    y0: DVector<f64>,
    null: DMatrix<f64>,
    problem: SdpProblem,
}

fn eliminate_equalities(p: &SdpProblem) -> std::result::Result<Reduced, SdpStatus> {
    let Some(eq) = &p.equalities else {
        return Ok(Reduced {
            y0: DVector::zeros(p.num_vars),
            null: DMatrix::identity(p.num_vars, p.num_vars),
            problem: p.clone(),
        });
    };
    let n = p.num_vars;
    let e = &eq.matrix;
    let d = DVector::from_column_slice(&eq.rhs);
    // Pad to a square-or-tall matrix so the SVD yields a full right basis.
    let rows = e.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (e.nrows(), n)).copy_from(e);
    let svd = padded.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("requested");
    let smax = svd.singular_values.max();
    let tol = 1e-12 * smax.max(1.0) * n as f64;
    let mut padded_d = DVector::zeros(rows);
    padded_d.rows_mut(0, e.nrows()).copy_from(&d);
    let y0 = svd.solve(&padded_d, tol).map_err(|_| SdpStatus::NumError)?;
    if (e * &y0 - &d).amax() > 1e-9 * (1.0 + d.amax()) {
        return Err(SdpStatus::Infeasible);
    }
    let null_idx: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol).collect();
    let mut null = DMatrix::zeros(n, null_idx.len());
    for (k, &i) in null_idx.iter().enumerate() {
        null.set_column(k, &v_t.row(i).transpose());
    }
    let y0s: Vec<f64> = y0.iter().copied().collect();
    let mut reduced =
        SdpProblem::new((null.transpose() * DVector::from_column_slice(&p.objective)).iter().copied().collect())
            .with_constant(p.objective_value(&y0s));
    for blk in &p.blocks {
        let order = blk.order();
        let mut coeffs = Vec::new();
        for k in 0..null.ncols() {
            let mut f = DMatrix::zeros(order, order);
            for (j, fj) in &blk.coefficients {
                if null[(*j, k)] != 0.0 {
                    f += fj.matrix() * null[(*j, k)];
                }
            }
            if f.amax() > 0.0 {
                coeffs.push((k, SymMatrix::from_matrix(f).expect("finite")));
            }
        }
        reduced.add_block(blk.evaluate(&y0s), coeffs).expect("consistent");
    }
    Ok(Reduced { y0, null, problem: reduced })
}

/// Solves an LMI-form SDP. Solver outcomes other than success are reported
/// through [`SdpSolution::status`]; only malformed input is an `Err`.
pub fn solve_sdp(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let reduced = match eliminate_equalities(problem) {
        Ok(r) => r,
        Err(status) => {
            return Ok(SdpSolution {
                y: vec![f64::NAN; problem.num_vars],
                z_blocks: problem.blocks.iter().map(|b| SymMatrix::zeros(b.order())).collect(),
                primal_obj: f64::NAN,
                dual_obj: f64::NAN,
                status,
                iterations: 0,
                gap: f64::NAN,
                dual_infeasibility: f64::NAN,
                primal_infeasibility: f64::NAN,
                complementarity: vec![f64::NAN; problem.blocks.len()],
                trace: vec![],
            })
        }
    };
    let mut sol = solve_reduced(&reduced.problem, opts)?;
    let z = DVector::from_column_slice(&sol.y);
    let y = &reduced.y0 + &reduced.null * z;
    sol.y = y.iter().copied().collect();
    sol.primal_obj = problem.objective_value(&sol.y);
    Ok(sol)
}

fn solve_reduced(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    let m = p.num_vars;
    let sf = StdForm {
        c: p.blocks.iter().map(|b| b.constant.matrix().clone()).collect(),
        a: p.blocks.iter().map(|b| b.coefficients.iter().map(|(j, f)| (*j, -f.matrix())).collect()).collect(),
        b: -DVector::from_column_slice(&p.objective),
        m,
    };
    let orders = p.block_orders();
    let total: usize = orders.iter().sum();
    let norm_c = frob(&sf.c);
    let norm_b = sf.b.norm();
    let norm_a = sf.a.iter().flat_map(|blk| blk.iter().map(|(_, a)| a.norm())).fold(0.0f64, f64::max);

    let xi = 10f64.max((total as f64).sqrt()).max(norm_c).max(norm_a).max(norm_b);
    let mut x: Vec<DMatrix<f64>> = orders.iter().map(|&n| DMatrix::identity(n, n) * xi).collect();
    let mut s: Vec<DMatrix<f64>> = x.clone();
    let mut y = DVector::zeros(m);
    let mut trace = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut gap = f64::INFINITY;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let ay = sf.adjoint(&y);
        let rd: Vec<DMatrix<f64>> = (0..orders.len()).map(|b| &sf.c[b] - &s[b] - &ay[b]).collect();
        let rp = &sf.b - sf.op(&x);
        let pobj = inner(&sf.c, &x);
        let dobj = sf.b.dot(&y);
        gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = frob(&rd) / (1.0 + norm_c);
        let mu = inner(&x, &s) / total as f64;
        log::debug!("sdp iter {iter}: pobj {pobj:.6e} dobj {dobj:.6e} gap {gap:.2e} pinf {pinf:.2e} dinf {dinf:.2e}");

        if gap <= opts.gap_tol && pinf <= opts.feas_tol && dinf <= opts.feas_tol {
            status = SdpStatus::Optimal;
            break;
        }
        let tr_x: f64 = x.iter().map(|b| b.trace()).sum();
        if tr_x > 1e8 * xi {
            let xh: Vec<DMatrix<f64>> = x.iter().map(|b| b / tr_x).collect();
            let ray = sf.op(&xh).norm();
            if ray <= 1e-8 * (1.0 + norm_a) && inner(&sf.c, &xh) < -1e-10 * (1.0 + norm_c) {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        let ny = y.norm();
        if ny > 1e8 * xi {
            let yh = &y / ny;
            let dir: Vec<DMatrix<f64>> = sf.adjoint(&yh).into_iter().map(|a| -a).collect();
            let mut psd = true;
            for d in dir {
                let min = sym_eig(&SymMatrix::from_matrix(d)?)?.values.first().copied().unwrap_or(0.0);
                psd &= min >= -1e-8 * (1.0 + norm_a);
            }
            if psd && sf.b.dot(&yh) > 1e-10 * (1.0 + norm_b) {
                status = SdpStatus::Unbounded;
                break;
            }
        }

        let (Some(lx), Some(ls)) = (
            x.iter().map(chol_lower).collect::<Option<Vec<_>>>(),
            s.iter().map(chol_lower).collect::<Option<Vec<_>>>(),
        ) else {
            status = SdpStatus::NumError;
            break;
        };
        let s_inv: Vec<DMatrix<f64>> = ls
            .iter()
            .map(|l| {
                let li = l.solve_lower_triangular(&DMatrix::identity(l.nrows(), l.nrows())).expect("nonsingular");
                sym(li.transpose() * li)
            })
            .collect();
        let schur = SchurFactor::new(sf.schur(&x, &s_inv));

        let pred = direction(&sf, &schur, &x, &s_inv, &rd, 0.0, None)?;
        let ap = max_step(&lx, &pred.dx)?.min(1.0);
        let ad = max_step(&ls, &pred.ds)?.min(1.0);
        let x_aff: Vec<DMatrix<f64>> = x.iter().zip(&pred.dx).map(|(a, d)| a + d * ap).collect();
        let s_aff: Vec<DMatrix<f64>> = s.iter().zip(&pred.ds).map(|(a, d)| a + d * ad).collect();
        let mu_aff = inner(&x_aff, &s_aff) / total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let corr = direction(&sf, &schur, &x, &s_inv, &rd, sigma * mu, Some(&pred))?;
        let gamma = 0.95;
        let ap = (gamma * max_step(&lx, &corr.dx)?).min(1.0);
        let ad = (gamma * max_step(&ls, &corr.ds)?).min(1.0);
        if opts.trace {
            trace.push(IterationRecord {
                iteration: iter,
                primal_obj: -dobj + p.objective_constant,
                dual_obj: -pobj + p.objective_constant,
                gap,
                primal_infeasibility: dinf,
                dual_infeasibility: pinf,
                step_primal: ad,
                step_dual: ap,
            });
        }
        if ap.max(ad) < 1e-14 {
            status = SdpStatus::NumError;
            break;
        }
        for b in 0..x.len() {
            x[b] = sym(&x[b] + &corr.dx[b] * ap);
            s[b] = sym(&s[b] + &corr.ds[b] * ad);
        }
        y += &corr.dy * ad;
        iterations = iter + 1;
    }

    let yv: Vec<f64> = y.iter().copied().collect();
    let z_blocks: Vec<SymMatrix> = x.into_iter().map(SymMatrix::from_matrix).collect::<Result<_>>()?;
    let mut primal_infeasibility = 0.0f64;
    let mut complementarity = Vec::with_capacity(p.blocks.len());
    for (blk, z) in p.blocks.iter().zip(&z_blocks) {
        let f = blk.evaluate(&yv);
        let min = sym_eig(&f)?.values.first().copied().unwrap_or(0.0);
        let scale = 1.0 + f.max_abs_diag();
        primal_infeasibility = primal_infeasibility.max((-min / scale).max(0.0));
        complementarity.push(f.dot(z));
    }
    let zmat: Vec<DMatrix<f64>> = z_blocks.iter().map(|z| z.matrix().clone()).collect();
    let dual_infeasibility = (&sf.b - sf.op(&zmat)).norm() / (1.0 + norm_b);
    Ok(SdpSolution {
        primal_obj: p.objective_value(&yv),
        dual_obj: p.objective_constant - inner(&sf.c, &zmat),
        y: yv,
        z_blocks,
        status,
        iterations,
        gap,
        dual_infeasibility,
        primal_infeasibility,
        complementarity,
        trace,
    })
}
