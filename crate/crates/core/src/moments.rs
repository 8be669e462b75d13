//! Moment sequences and the linear maps built on them: Riesz functionals,
//! shifted sequences, moment and localizing matrices, closed-form moments of
//! reference measures, empirical and pushforward moments.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};
use crate::polycore::{basis_enumerate, binomial, MonomialBasis, MultiIndex, Polynomial};

/// Relative tolerance of the PSD test, scaled by the largest diagonal entry.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Pseudo-moments `(φ_α)_{|α| ≤ degree_bound}` stored in graded-lex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentSequenceJson", into = "MomentSequenceJson")]
pub struct MomentSequence {
    basis: Arc<MonomialBasis>,
    values: Vec<f64>,
    label: String,
}

impl MomentSequence {
    pub fn new(n: usize, degree_bound: usize, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let basis = basis_enumerate(n, degree_bound)?;
        if values.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite moment value {v}")));
        }
        Ok(Self { basis: Arc::new(basis), values, label: label.into() })
    }

    pub fn from_fn(
        n: usize,
        degree_bound: usize,
        label: impl Into<String>,
        mut f: impl FnMut(&MultiIndex) -> f64,
    ) -> Result<Self> {
        let basis = basis_enumerate(n, degree_bound)?;
        let values: Vec<f64> = basis.entries().iter().map(&mut f).collect();
        Self::new_with_basis(Arc::new(basis), values, label.into())
    }

    fn new_with_basis(basis: Arc<MonomialBasis>, values: Vec<f64>, label: String) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite moment value {v}")));
        }
        Ok(Self { basis, values, label })
    }

    /// Moments of the Dirac measure at `y`, i.e. `v_{bound}(y)`.
    pub fn dirac(y: &[f64], degree_bound: usize) -> Result<Self> {
        let basis = basis_enumerate(y.len(), degree_bound)?;
        let values = basis.monomial_vector(y);
        Self::new_with_basis(Arc::new(basis), values, format!("dirac{y:?}"))
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn degree_bound(&self) -> usize {
        self.basis.t()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.basis.index_of(alpha).map(|i| self.values[i])
    }

    /// `φ_α`, or a degree error naming the monomial.
    pub fn value(&self, alpha: &MultiIndex) -> Result<f64> {
        self.get(alpha).ok_or_else(|| Error::DegreeOverflow { monomial: alpha.to_string(), bound: self.degree_bound() })
    }

    /// Keeps the moments of degree at most `bound`.
    pub fn truncate(&self, bound: usize) -> Result<Self> {
        if bound > self.degree_bound() {
            return Err(Error::DegreeOverflow { monomial: format!("degree {bound}"), bound: self.degree_bound() });
        }
        if bound == self.degree_bound() {
            return Ok(self.clone());
        }
        let basis = basis_enumerate(self.n(), bound)?;
        let values = self.values[..basis.len()].to_vec();
        Ok(Self { basis: Arc::new(basis), values, label: self.label.clone() })
    }

    /// Largest absolute difference on the moments both sequences share.
    pub fn max_abs_diff(&self, other: &MomentSequence) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        let k = self.values.len().min(other.values.len());
        Ok(self.values[..k].iter().zip(&other.values[..k]).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentJson {
    exp: Vec<u32>,
    value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentSequenceJson {
    n: usize,
    degree_bound: usize,
    ordering: String,
    label: String,
    moments: Vec<MomentJson>,
}

const ORDERING_TAG: &str = "graded-lex";

impl TryFrom<MomentSequenceJson> for MomentSequence {
    type Error = Error;

    fn try_from(raw: MomentSequenceJson) -> Result<Self> {
        if raw.ordering != ORDERING_TAG {
            return Err(Error::InvalidArgument(format!("unsupported ordering {:?}", raw.ordering)));
        }
        let basis = basis_enumerate(raw.n, raw.degree_bound)?;
        let mut values = vec![f64::NAN; basis.len()];
        for m in raw.moments {
            let alpha = MultiIndex::new(m.exp);
            if alpha.n() != raw.n {
                return Err(Error::DimensionMismatch { expected: raw.n, found: alpha.n() });
            }
            let i = basis
                .index_of(&alpha)
                .ok_or_else(|| Error::DegreeOverflow { monomial: alpha.to_string(), bound: raw.degree_bound })?;
            values[i] = m.value;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("moment file does not list every monomial".into()));
        }
        MomentSequence::new_with_basis(Arc::new(basis), values, raw.label)
    }
}

impl From<MomentSequence> for MomentSequenceJson {
    fn from(m: MomentSequence) -> Self {
        MomentSequenceJson {
            n: m.n(),
            degree_bound: m.degree_bound(),
            ordering: ORDERING_TAG.into(),
            label: m.label.clone(),
            moments: m
                .basis
                .entries()
                .iter()
                .zip(&m.values)
                .map(|(a, &value)| MomentJson { exp: a.exponents().to_vec(), value })
                .collect(),
        }
    }
}

/// `φ(p) = Σ_α p_α φ_α`.
pub fn riesz_apply(phi: &MomentSequence, p: &Polynomial) -> Result<f64> {
    if p.n() != phi.n() {
        return Err(Error::DimensionMismatch { expected: phi.n(), found: p.n() });
    }
    let mut acc = 0.0;
    for (alpha, c) in p.terms() {
        acc += c * phi.value(alpha)?;
    }
    Ok(acc)
}

/// `(g·φ)_α = Σ_γ g_γ φ_{α+γ}`, retained for `|α| ≤ bound − deg g`.
pub fn shift_sequence(g: &Polynomial, phi: &MomentSequence) -> Result<MomentSequence> {
    if g.n() != phi.n() {
        return Err(Error::DimensionMismatch { expected: phi.n(), found: g.n() });
    }
    let dg = g.degree();
    if dg > phi.degree_bound() {
        return Err(Error::DegreeOverflow { monomial: format!("generator of degree {dg}"), bound: phi.degree_bound() });
    }
    let out_bound = phi.degree_bound() - dg;
    let label = format!("({g})·{}", phi.label());
    MomentSequence::from_fn(phi.n(), out_bound, label, |alpha| {
        g.terms().map(|(gamma, c)| c * phi.get(&alpha.add(gamma)).expect("within bound")).sum()
    })
}

fn check_matrix_degree(phi: &MomentSequence, t: usize, extra: usize) -> Result<()> {
    if 2 * t + extra > phi.degree_bound() {
        return Err(Error::DegreeOverflow { monomial: format!("degree {}", 2 * t + extra), bound: phi.degree_bound() });
    }
    Ok(())
}

/// `M_t(φ)(α, β) = φ_{α+β}` over `ℕⁿ_t`.
pub fn moment_matrix(phi: &MomentSequence, t: usize) -> Result<SymMatrix> {
    check_matrix_degree(phi, t, 0)?;
    let rows = basis_enumerate(phi.n(), t)?;
    Ok(SymMatrix::from_fn(rows.len(), |i, j| phi.get(&rows.get(i).add(rows.get(j))).expect("within bound")))
}

/// `M_t(g·φ)`, entries `Σ_γ g_γ φ_{α+β+γ}`.
pub fn localizing_matrix(g: &Polynomial, phi: &MomentSequence, t: usize) -> Result<SymMatrix> {
    if g.n() != phi.n() {
        return Err(Error::DimensionMismatch { expected: phi.n(), found: g.n() });
    }
    check_matrix_degree(phi, t, g.degree())?;
    moment_matrix(&shift_sequence(g, phi)?, t)
}

/// Sparse linear map `φ ↦ M_t(g·φ)` over the coordinates of a moment basis.
///
/// Stores `(row, col, moment index, coefficient)` for `row ≤ col`.
#[derive(Debug, Clone)]
pub struct LocalizingMap {
    order: usize,
    nvars: usize,
    entries: Vec<(usize, usize, usize, f64)>,
}

impl LocalizingMap {
    pub fn new(g: &Polynomial, t: usize, moment_basis: &MonomialBasis) -> Result<Self> {
        if g.n() != moment_basis.n() {
            return Err(Error::DimensionMismatch { expected: moment_basis.n(), found: g.n() });
        }
        if 2 * t + g.degree() > moment_basis.t() {
            return Err(Error::DegreeOverflow {
                monomial: format!("degree {}", 2 * t + g.degree()),
                bound: moment_basis.t(),
            });
        }
        let rows = basis_enumerate(g.n(), t)?;
        let mut entries = Vec::new();
        for i in 0..rows.len() {
            for j in i..rows.len() {
                let ab = rows.get(i).add(rows.get(j));
                for (gamma, c) in g.terms() {
                    let k = moment_basis.index_of(&ab.add(gamma)).expect("within bound");
                    entries.push((i, j, k, c));
                }
            }
        }
        Ok(Self { order: rows.len(), nvars: moment_basis.len(), entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn assemble(&self, phi: &[f64]) -> SymMatrix {
        debug_assert_eq!(phi.len(), self.nvars);
        let mut m = DMatrix::zeros(self.order, self.order);
        for &(i, j, k, c) in &self.entries {
            m[(i, j)] += c * phi[k];
        }
        for i in 0..self.order {
            for j in (i + 1)..self.order {
                m[(j, i)] = m[(i, j)];
            }
        }
        SymMatrix::from_matrix(m).expect("finite symmetric")
    }

    /// Non-zero coefficient matrices `B_k` with `M = Σ_k φ_k B_k`, by moment index.
    pub fn coefficient_matrices(&self) -> BTreeMap<usize, DMatrix<f64>> {
        let mut out: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
        for &(i, j, k, c) in &self.entries {
            let b = out.entry(k).or_insert_with(|| DMatrix::zeros(self.order, self.order));
            b[(i, j)] += c;
            if i != j {
                b[(j, i)] += c;
            }
        }
        out
    }

    /// Adjoint map: `(⟨B_k, Q⟩)_k`.
    pub fn adjoint(&self, q: &SymMatrix) -> Vec<f64> {
        let mut out = vec![0.0; self.nvars];
        for &(i, j, k, c) in &self.entries {
            let w = if i == j { 1.0 } else { 2.0 };
            out[k] += w * c * q.get(i, j);
        }
        out
    }
}

/// Outcome of the localizing-matrix PSD test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum NonnegVerdict {
    Psd { min_eigenvalue: f64 },
    NotPsd { witness: f64 },
}

impl NonnegVerdict {
    pub fn is_psd(&self) -> bool {
        matches!(self, NonnegVerdict::Psd { .. })
    }
}

/// Tests `M_s(g·φ) ⪰ 0`; a necessary condition for `g ≥ 0` on the support of `φ`.
pub fn nonneg_test(g: &Polynomial, phi: &MomentSequence, s: usize) -> Result<NonnegVerdict> {
    let m = localizing_matrix(g, phi, s)?;
    let min = sym_eig(&m)?.values[0];
    let scale = m.max_abs_diag().max(f64::MIN_POSITIVE);
    if min >= -PSD_TOLERANCE * scale {
        Ok(NonnegVerdict::Psd { min_eigenvalue: min })
    } else {
        Ok(NonnegVerdict::NotPsd { witness: min })
    }
}

/// `φ_α = (1/N) Σⱼ xⱼ^α`.
pub fn empirical_moments(points: &[Vec<f64>], degree_bound: usize) -> Result<MomentSequence> {
    let first = points.first().ok_or(Error::EmptyCloud)?;
    let n = first.len();
    let basis = basis_enumerate(n, degree_bound)?;
    let mut values = vec![0.0; basis.len()];
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: p.len() });
        }
        for (acc, v) in values.iter_mut().zip(basis.monomial_vector(p)) {
            *acc += v;
        }
    }
    let inv = 1.0 / points.len() as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    MomentSequence::new_with_basis(Arc::new(basis), values, format!("empirical(N={})", points.len()))
}

/// Moments `(φ(f^j))_{j=0..k}` of the pushforward of `μ` by `f`.
pub fn pushforward_moments(f: &Polynomial, mu: &MomentSequence, k: usize) -> Result<MomentSequence> {
    if k * f.degree() > mu.degree_bound() {
        return Err(Error::DegreeOverflow {
            monomial: format!("f^{k} of degree {}", k * f.degree()),
            bound: mu.degree_bound(),
        });
    }
    let mut values = Vec::with_capacity(k + 1);
    let mut power = Polynomial::constant(f.n(), 1.0);
    for _ in 0..=k {
        values.push(riesz_apply(mu, &power)?);
        power = power.mul(f)?;
    }
    MomentSequence::new(1, k, values, format!("pushforward of {}", mu.label()))
}

fn default_lower() -> f64 {
    -1.0
}

fn default_upper() -> f64 {
    1.0
}

fn default_one() -> f64 {
    1.0
}

fn default_variance() -> f64 {
    0.5
}

/// Reference measures with closed-form moments, all normalized to mass one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureDescriptor {
    /// Arcsine measure `dx / (π √((x−a)(b−x)))` on `[a, b]`.
    Chebyshev1 {
        #[serde(default = "default_lower")]
        a: f64,
        #[serde(default = "default_upper")]
        b: f64,
    },
    /// Semicircle measure `∝ √((x−a)(b−x)) dx` on `[a, b]`.
    Chebyshev2 {
        #[serde(default = "default_lower")]
        a: f64,
        #[serde(default = "default_upper")]
        b: f64,
    },
    UniformInterval {
        #[serde(default = "default_lower")]
        a: f64,
        #[serde(default = "default_upper")]
        b: f64,
    },
    UniformBox {
        bounds: Vec<[f64; 2]>,
    },
    /// Uniform on the centered disk of the given radius.
    #[serde(rename = "uniform_ball2d")]
    UniformBall2d {
        #[serde(default = "default_one")]
        radius: f64,
    },
    /// Uniform on `{x ≥ 0, y ≥ 0, x + y ≤ scale}`.
    #[serde(rename = "uniform_simplex2d")]
    UniformSimplex2d {
        #[serde(default = "default_one")]
        scale: f64,
    },
    /// Centered Gaussian with covariance `variance · I`; the default `1/2`
    /// matches `exp(−‖x‖²) dx`.
    Gaussian {
        dim: usize,
        #[serde(default = "default_variance")]
        variance: f64,
    },
    Empirical {
        points: Vec<Vec<f64>>,
    },
    Product {
        factors: Vec<MeasureDescriptor>,
    },
}

impl MeasureDescriptor {
    pub fn dimension(&self) -> usize {
        match self {
            MeasureDescriptor::Chebyshev1 { .. }
            | MeasureDescriptor::Chebyshev2 { .. }
            | MeasureDescriptor::UniformInterval { .. } => 1,
            MeasureDescriptor::UniformBox { bounds } => bounds.len(),
            MeasureDescriptor::UniformBall2d { .. } | MeasureDescriptor::UniformSimplex2d { .. } => 2,
            MeasureDescriptor::Gaussian { dim, .. } => *dim,
            MeasureDescriptor::Empirical { points } => points.first().map_or(0, Vec::len),
            MeasureDescriptor::Product { factors } => factors.iter().map(Self::dimension).sum(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MeasureDescriptor::Chebyshev1 { .. } => "chebyshev1",
            MeasureDescriptor::Chebyshev2 { .. } => "chebyshev2",
            MeasureDescriptor::UniformInterval { .. } => "uniform_interval",
            MeasureDescriptor::UniformBox { .. } => "uniform_box",
            MeasureDescriptor::UniformBall2d { .. } => "uniform_ball2d",
            MeasureDescriptor::UniformSimplex2d { .. } => "uniform_simplex2d",
            MeasureDescriptor::Gaussian { .. } => "gaussian",
            MeasureDescriptor::Empirical { .. } => "empirical",
            MeasureDescriptor::Product { .. } => "product",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let interval = |a: f64, b: f64| {
            if a.is_finite() && b.is_finite() && a < b {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("invalid interval [{a}, {b}]")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            MeasureDescriptor::Chebyshev1 { a, b }
            | MeasureDescriptor::Chebyshev2 { a, b }
            | MeasureDescriptor::UniformInterval { a, b } => interval(*a, *b),
            MeasureDescriptor::UniformBox { bounds } => {
                if bounds.is_empty() {
                    return Err(Error::InvalidArgument("uniform_box needs at least one interval".into()));
                }
                bounds.iter().try_for_each(|[a, b]| interval(*a, *b))
            }
            MeasureDescriptor::UniformBall2d { radius } => positive("radius", *radius),
            MeasureDescriptor::UniformSimplex2d { scale } => positive("scale", *scale),
            MeasureDescriptor::Gaussian { dim, variance } => {
                if *dim == 0 {
                    return Err(Error::InvalidArgument("gaussian dimension must be at least 1".into()));
                }
                positive("variance", *variance)
            }
            MeasureDescriptor::Empirical { points } => {
                let n = points.first().ok_or(Error::EmptyCloud)?.len();
                if n == 0 {
                    return Err(Error::InvalidArgument("empirical points must have dimension ≥ 1".into()));
                }
                for p in points {
                    if p.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
                    }
                    if p.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidArgument("non-finite empirical point".into()));
                    }
                }
                Ok(())
            }
            MeasureDescriptor::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidArgument("product needs at least one factor".into()));
                }
                factors.iter().try_for_each(Self::validate)
            }
        }
    }
}

fn double_factorial(k: i64) -> f64 {
    let mut acc = 1.0;
    let mut i = k;
    while i > 1 {
        acc *= i as f64;
        i -= 2;
    }
    acc
}

fn arcsine_std(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        binomial(k, k / 2).map_or(f64::INFINITY, |c| c as f64) / 2f64.powi(k as i32)
    }
}

fn semicircle_std(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        arcsine_std(k) / (k / 2 + 1) as f64
    }
}

/// Moments of the image of a standard `[-1,1]` measure under `u ↦ c + h u`.
fn affine_moments(a: f64, b: f64, bound: usize, std: impl Fn(usize) -> f64) -> Vec<f64> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (0..=bound)
        .map(|k| {
            (0..=k)
                .map(|j| {
                    binomial(k, j).map_or(f64::INFINITY, |v| v as f64)
                        * c.powi((k - j) as i32)
                        * h.powi(j as i32)
                        * std(j)
                })
                .sum()
        })
        .collect()
}

fn univariate_catalog(m: &MeasureDescriptor, bound: usize) -> Option<Vec<f64>> {
    match *m {
        MeasureDescriptor::Chebyshev1 { a, b } => Some(if a == -1.0 && b == 1.0 {
            (0..=bound).map(arcsine_std).collect()
        } else {
            affine_moments(a, b, bound, arcsine_std)
        }),
        MeasureDescriptor::Chebyshev2 { a, b } => Some(if a == -1.0 && b == 1.0 {
            (0..=bound).map(semicircle_std).collect()
        } else {
            affine_moments(a, b, bound, semicircle_std)
        }),
        MeasureDescriptor::UniformInterval { a, b } => Some(
            (0..=bound)
                .map(|k| {
                    if a == -1.0 && b == 1.0 {
                        if k % 2 == 1 {
                            0.0
                        } else {
                            1.0 / (k + 1) as f64
                        }
                    } else {
                        (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / ((k + 1) as f64 * (b - a))
                    }
                })
                .collect(),
        ),
        _ => None,
    }
}

fn gaussian_1d(variance: f64, k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        double_factorial(k as i64 - 1) * variance.powi((k / 2) as i32)
    }
}

fn product_moments(factors: &[MomentSequence], bound: usize, label: String) -> Result<MomentSequence> {
    let n: usize = factors.iter().map(MomentSequence::n).sum();
    MomentSequence::from_fn(n, bound, label, |alpha| {
        let mut offset = 0;
        let mut acc = 1.0;
        for f in factors {
            let slice = alpha.exponents()[offset..offset + f.n()].to_vec();
            acc *= f.get(&MultiIndex::new(slice)).expect("within bound");
            offset += f.n();
        }
        acc
    })
}

/// Closed-form moments up to `degree_bound` of a normalized reference measure.
pub fn catalog_moments(m: &MeasureDescriptor, degree_bound: usize) -> Result<MomentSequence> {
    m.validate()?;
    let label = m.kind().to_string();
    if let Some(values) = univariate_catalog(m, degree_bound) {
        return MomentSequence::new(1, degree_bound, values, label);
    }
    match m {
        MeasureDescriptor::UniformBox { bounds } => {
            let factors = bounds
                .iter()
                .map(|&[a, b]| catalog_moments(&MeasureDescriptor::UniformInterval { a, b }, degree_bound))
                .collect::<Result<Vec<_>>>()?;
            product_moments(&factors, degree_bound, label)
        }
        MeasureDescriptor::UniformBall2d { radius } => MomentSequence::from_fn(2, degree_bound, label, |alpha| {
            let (a, b) = (alpha.exponents()[0] as i64, alpha.exponents()[1] as i64);
            if a % 2 == 1 || b % 2 == 1 {
                return 0.0;
            }
            2.0 * double_factorial(a - 1) * double_factorial(b - 1) / (double_factorial(a + b) * (a + b + 2) as f64)
                * radius.powi((a + b) as i32)
        }),
        MeasureDescriptor::UniformSimplex2d { scale } => MomentSequence::from_fn(2, degree_bound, label, |alpha| {
            let (a, b) = (alpha.exponents()[0] as usize, alpha.exponents()[1] as usize);
            let c = binomial(a + b, a).map_or(f64::INFINITY, |v| v as f64);
            2.0 / (c * ((a + b + 1) * (a + b + 2)) as f64) * scale.powi((a + b) as i32)
        }),
        MeasureDescriptor::Gaussian { dim, variance } => MomentSequence::from_fn(*dim, degree_bound, label, |alpha| {
            alpha.exponents().iter().map(|&e| gaussian_1d(*variance, e as usize)).product()
        }),
        MeasureDescriptor::Empirical { points } => Ok(empirical_moments(points, degree_bound)?.with_label(label)),
        MeasureDescriptor::Product { factors } => {
            let seqs = factors.iter().map(|f| catalog_moments(f, degree_bound)).collect::<Result<Vec<_>>>()?;
            let label = format!("product({})", factors.iter().map(|f| f.kind()).collect::<Vec<_>>().join(","));
            product_moments(&seqs, degree_bound, label)
        }
        _ => unreachable!("univariate kinds handled above"),
    }
}

/// `S = {x : g(x) ≥ 0, g ∈ G}` with `g₀ = 1` stored first.
#[derive(Debug, Clone, PartialEq)]
pub struct SemialgebraicSet {
    n: usize,
    generators: Vec<Polynomial>,
}

impl SemialgebraicSet {
    /// Prepends `g₀ = 1` to `constraints`. A leading constant `1` in the
    /// input is taken to be `g₀` and not duplicated.
    pub fn new(n: usize, constraints: Vec<Polynomial>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let one = Polynomial::constant(n, 1.0);
        let mut generators = vec![one.clone()];
        for (k, g) in constraints.into_iter().enumerate() {
            if g.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g.n() });
            }
            if k == 0 && g == one {
                continue;
            }
            generators.push(g);
        }
        Ok(Self { n, generators })
    }

    pub fn unconstrained(n: usize) -> Result<Self> {
        Self::new(n, vec![])
    }

    /// `[-1, 1]` as `{1 − x² ≥ 0}`.
    pub fn interval() -> Self {
        Self::new(1, vec![Polynomial::univariate(&[1.0, 0.0, -1.0])]).expect("valid")
    }

    /// `{r2 − ‖x‖² ≥ 0}`.
    pub fn ball(n: usize, r2: f64) -> Result<Self> {
        Self::new(n, vec![ball_polynomial(n, r2)])
    }

    /// `[-1, 1]ⁿ` as `{1 − xᵢ² ≥ 0}`.
    pub fn unit_box(n: usize) -> Result<Self> {
        let gens = (0..n)
            .map(|i| {
                let xi = Polynomial::var(n, i);
                Polynomial::constant(n, 1.0).sub(&xi.mul(&xi).expect("same n")).expect("same n")
            })
            .collect();
        Self::new(n, gens)
    }

    /// Standard 2-simplex `{x₁ ≥ 0, x₂ ≥ 0, 1 − x₁ − x₂ ≥ 0}`.
    pub fn simplex2d() -> Self {
        let x1 = Polynomial::var(2, 0);
        let x2 = Polynomial::var(2, 1);
        let rest = Polynomial::constant(2, 1.0).sub(&x1).unwrap().sub(&x2).unwrap();
        Self::new(2, vec![x1, x2, rest]).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All generators, `g₀ = 1` first.
    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    /// Generators excluding `g₀`.
    pub fn constraints(&self) -> &[Polynomial] {
        &self.generators[1..]
    }

    /// `t_g = ⌈deg g / 2⌉` per generator.
    pub fn half_degrees(&self) -> Vec<usize> {
        self.generators.iter().map(Polynomial::half_degree).collect()
    }

    pub fn max_half_degree(&self) -> usize {
        self.half_degrees().into_iter().max().unwrap_or(0)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        for g in &self.generators {
            if g.eval(x)? < -tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether some generator is quadratic with negative definite quadratic
    /// part and positive constant, i.e. certifies a bounded ellipsoid.
    pub fn has_ball_generator(&self) -> bool {
        self.generators.iter().any(|g| {
            if g.degree() != 2 || g.constant_term() <= 0.0 {
                return false;
            }
            let q = SymMatrix::from_fn(self.n, |i, j| {
                let mut e = vec![0u32; self.n];
                e[i] += 1;
                e[j] += 1;
                let c = g.coefficient(&MultiIndex::new(e));
                if i == j {
                    c
                } else {
                    0.5 * c
                }
            });
            sym_eig(&q).map(|e| e.values.iter().all(|&v| v < 0.0)).unwrap_or(false)
        })
    }
}

/// `r2 − ‖x‖²`.
pub fn ball_polynomial(n: usize, r2: f64) -> Polynomial {
    let mut p = Polynomial::constant(n, r2);
    for i in 0..n {
        let mut e = vec![0u32; n];
        e[i] = 2;
        p.add_term(MultiIndex::new(e), -1.0);
    }
    p
}

/// Appends the redundant ball constraint `R − ‖x‖² ≥ 0`. Augmenting twice
/// appends two copies; callers deduplicate if needed.
pub fn archimedean_augment(set: &SemialgebraicSet, r: f64) -> Result<SemialgebraicSet> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidArgument(format!("ball radius parameter must be positive, got {r}")));
    }
    let mut out = set.clone();
    out.generators.push(ball_polynomial(set.n, r));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cheb(bound: usize) -> MomentSequence {
        catalog_moments(&MeasureDescriptor::Chebyshev1 { a: -1.0, b: 1.0 }, bound).unwrap()
    }

    fn unif(bound: usize) -> MomentSequence {
        catalog_moments(&MeasureDescriptor::UniformInterval { a: -1.0, b: 1.0 }, bound).unwrap()
    }

    fn gauss(bound: usize) -> MomentSequence {
        catalog_moments(&MeasureDescriptor::Gaussian { dim: 1, variance: 0.5 }, bound).unwrap()
    }

    fn x2() -> Polynomial {
        Polynomial::univariate(&[0.0, 0.0, 1.0])
    }

    fn one_minus_x2() -> Polynomial {
        Polynomial::univariate(&[1.0, 0.0, -1.0])
    }

    #[test]
    fn riesz_examples() {
        assert_eq!(riesz_apply(&cheb(4), &Polynomial::constant(1, 1.0)).unwrap(), 1.0);
        assert_eq!(riesz_apply(&cheb(4), &x2()).unwrap(), 0.5);
        assert!((riesz_apply(&unif(4), &x2()).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        let err = riesz_apply(&unif(2), &Polynomial::univariate(&[0.0, 0.0, 0.0, 1.0])).unwrap_err();
        assert_eq!(err, Error::DegreeOverflow { monomial: "x1^3".into(), bound: 2 });
    }

    #[test]
    fn shift_examples() {
        let phi = cheb(6);
        let s = shift_sequence(&Polynomial::constant(1, 1.0), &phi).unwrap();
        assert_eq!(s.values(), phi.values());
        let s = shift_sequence(&one_minus_x2(), &phi).unwrap();
        assert_eq!(s.degree_bound(), 4);
        assert_eq!(s.values()[0], 0.5);
        assert_eq!(s.values()[2], 0.125);
        let s = shift_sequence(&Polynomial::var(1, 0), &unif(4)).unwrap();
        assert_eq!(s.values()[0], 0.0);
        let short = unif(1);
        assert!(shift_sequence(&one_minus_x2(), &short).is_err());
    }

    #[test]
    fn moment_matrix_examples() {
        let m = moment_matrix(&cheb(2), 1).unwrap();
        assert_eq!(m, SymMatrix::from_diagonal(&[1.0, 0.5]));
        let m = moment_matrix(&unif(2), 1).unwrap();
        assert_eq!(m, SymMatrix::from_diagonal(&[1.0, 1.0 / 3.0]));
        let m = moment_matrix(&gauss(4), 0).unwrap();
        assert_eq!(m, SymMatrix::identity(1));
        assert!(moment_matrix(&cheb(3), 2).is_err());
    }

    #[test]
    fn localizing_matrix_examples() {
        let phi = unif(6);
        assert_eq!(localizing_matrix(&Polynomial::constant(1, 1.0), &phi, 3).unwrap(), moment_matrix(&phi, 3).unwrap());
        assert_eq!(localizing_matrix(&one_minus_x2(), &cheb(4), 0).unwrap(), SymMatrix::from_diagonal(&[0.5]));
        let dirac = MomentSequence::new(1, 4, vec![1.0, -1.0, 1.0, -1.0, 1.0], "dirac(-1)").unwrap();
        assert_eq!(localizing_matrix(&one_minus_x2(), &dirac, 1).unwrap(), SymMatrix::zeros(2));
    }

    #[test]
    fn catalog_examples() {
        assert_eq!(cheb(4).values(), &[1.0, 0.0, 0.5, 0.0, 0.375]);
        let u = unif(4);
        assert_eq!(u.values()[..2], [1.0, 0.0]);
        assert!((u.values()[2] - 1.0 / 3.0).abs() < 1e-16 && (u.values()[4] - 0.2).abs() < 1e-16);
        assert_eq!(gauss(2).values()[2], 0.5);
        // semicircle: variance 1/4, fourth moment 2/16
        let c2 = catalog_moments(&MeasureDescriptor::Chebyshev2 { a: -1.0, b: 1.0 }, 4).unwrap();
        assert_eq!(c2.values(), &[1.0, 0.0, 0.25, 0.0, 0.125]);
    }

    #[test]
    fn shifted_intervals_match_general_formula() {
        // arcsine on [0, 2] is the image of u ↦ 1 + u: mean 1, second moment 1 + 1/2
        let m = catalog_moments(&MeasureDescriptor::Chebyshev1 { a: 0.0, b: 2.0 }, 2).unwrap();
        assert!((m.values()[1] - 1.0).abs() < 1e-15 && (m.values()[2] - 1.5).abs() < 1e-15);
        let u = catalog_moments(&MeasureDescriptor::UniformInterval { a: 0.0, b: 1.0 }, 3).unwrap();
        assert!((u.values()[3] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_catalogs() {
        let ball = catalog_moments(&MeasureDescriptor::UniformBall2d { radius: 1.0 }, 4).unwrap();
        let at = |s: &MomentSequence, e: [u32; 2]| s.get(&MultiIndex::new(e.to_vec())).unwrap();
        assert!((at(&ball, [2, 0]) - 0.25).abs() < 1e-16);
        assert!((at(&ball, [2, 2]) - 1.0 / 24.0).abs() < 1e-16);
        assert_eq!(at(&ball, [1, 1]), 0.0);
        let simplex = catalog_moments(&MeasureDescriptor::UniformSimplex2d { scale: 1.0 }, 2).unwrap();
        assert!((at(&simplex, [1, 0]) - 1.0 / 3.0).abs() < 1e-16);
        assert!((at(&simplex, [1, 1]) - 1.0 / 12.0).abs() < 1e-16);
        assert!((at(&simplex, [2, 0]) - 1.0 / 6.0).abs() < 1e-16);
        let bx = catalog_moments(&MeasureDescriptor::UniformBox { bounds: vec![[-1.0, 1.0], [0.0, 1.0]] }, 2).unwrap();
        assert!((at(&bx, [0, 1]) - 0.5).abs() < 1e-16);
        assert!((at(&bx, [2, 0]) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn product_of_intervals_is_uniform_box() {
        let p = catalog_moments(
            &MeasureDescriptor::Product {
                factors: vec![
                    MeasureDescriptor::UniformInterval { a: -1.0, b: 1.0 },
                    MeasureDescriptor::UniformInterval { a: -1.0, b: 1.0 },
                ],
            },
            4,
        )
        .unwrap();
        let b = catalog_moments(&MeasureDescriptor::UniformBox { bounds: vec![[-1.0, 1.0]; 2] }, 4).unwrap();
        assert_eq!(p.values(), b.values());
    }

    #[test]
    fn descriptor_json_form() {
        let d: MeasureDescriptor = serde_json::from_str(r#"{"kind":"chebyshev1","params":{}}"#).unwrap();
        assert_eq!(d, MeasureDescriptor::Chebyshev1 { a: -1.0, b: 1.0 });
        let d: MeasureDescriptor =
            serde_json::from_str(r#"{"kind":"uniform_ball2d","params":{"radius":2.0}}"#).unwrap();
        assert_eq!(d.dimension(), 2);
        let bad = catalog_moments(&MeasureDescriptor::Empirical { points: vec![] }, 2);
        assert_eq!(bad.unwrap_err(), Error::EmptyCloud);
        assert!(catalog_moments(&MeasureDescriptor::UniformInterval { a: 1.0, b: -1.0 }, 2).is_err());
    }

    #[test]
    fn empirical_examples() {
        assert_eq!(empirical_moments(&[vec![2.0]], 2).unwrap().values(), &[1.0, 2.0, 4.0]);
        assert_eq!(empirical_moments(&[vec![-1.0], vec![1.0]], 2).unwrap().values(), &[1.0, 0.0, 1.0]);
        assert_eq!(empirical_moments(&[vec![0.0], vec![0.5], vec![1.0]], 1).unwrap().values(), &[1.0, 0.5]);
        assert_eq!(empirical_moments(&[], 2).unwrap_err(), Error::EmptyCloud);
        assert!(matches!(empirical_moments(&[vec![0.0], vec![1.0, 2.0]], 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dirac_cloud_reproduces_monomial_vector() {
        let y = [0.3, -1.7];
        let e = empirical_moments(&[y.to_vec()], 4).unwrap();
        let d = MomentSequence::dirac(&y, 4).unwrap();
        assert_eq!(e.values(), d.values());
    }

    #[test]
    fn pushforward_examples() {
        let mu = unif(6);
        let id = pushforward_moments(&Polynomial::var(1, 0), &mu, 4).unwrap();
        assert_eq!(id.values(), &mu.values()[..5]);
        let sq = pushforward_moments(&x2(), &mu, 2).unwrap();
        assert!((sq.values()[1] - 1.0 / 3.0).abs() < 1e-16 && (sq.values()[2] - 0.2).abs() < 1e-16);
        let c = pushforward_moments(&Polynomial::constant(1, 3.0), &mu, 2).unwrap();
        assert_eq!(c.values(), &[1.0, 3.0, 9.0]);
        assert!(pushforward_moments(&x2(), &mu, 4).is_err());
    }

    #[test]
    fn nonneg_examples() {
        assert!(nonneg_test(&x2(), &gauss(8), 1).unwrap().is_psd());
        match nonneg_test(&Polynomial::var(1, 0), &gauss(8), 1).unwrap() {
            NonnegVerdict::NotPsd { witness } => assert!((witness + 0.5).abs() < 1e-14),
            v => panic!("expected NotPsd, got {v:?}"),
        }
        assert!(nonneg_test(&one_minus_x2(), &cheb(8), 2).unwrap().is_psd());
        assert!(nonneg_test(&x2(), &gauss(3), 1).is_err());
    }

    #[test]
    fn archimedean_examples() {
        let s = archimedean_augment(&SemialgebraicSet::unconstrained(1).unwrap(), 1.0).unwrap();
        assert_eq!(s.generators(), &[Polynomial::constant(1, 1.0), one_minus_x2()]);
        let twice = archimedean_augment(&s, 1.0).unwrap();
        assert_eq!(twice.generators().len(), 3);
        let s4 = archimedean_augment(&SemialgebraicSet::interval(), 4.0).unwrap();
        assert_eq!(s4.generators()[2], Polynomial::univariate(&[4.0, 0.0, -1.0]));
        assert_eq!(s4.half_degrees(), vec![0, 1, 1]);
        assert!(archimedean_augment(&s, 0.0).is_err());
        assert!(s.has_ball_generator());
        assert!(!SemialgebraicSet::unit_box(2).unwrap().has_ball_generator());
    }

    #[test]
    fn localizing_map_matches_direct_assembly() {
        let phi = catalog_moments(&MeasureDescriptor::UniformSimplex2d { scale: 1.0 }, 6).unwrap();
        let g = ball_polynomial(2, 1.0).add(&Polynomial::var(2, 0)).unwrap();
        let map = LocalizingMap::new(&g, 2, phi.basis()).unwrap();
        assert_eq!(map.assemble(phi.values()), localizing_matrix(&g, &phi, 2).unwrap());
        let q = SymMatrix::from_fn(map.order(), |i, j| 1.0 / (1 + i + j) as f64);
        let adj = map.adjoint(&q);
        let lhs: f64 = adj.iter().zip(phi.values()).map(|(a, b)| a * b).sum();
        assert!((lhs - q.dot(&map.assemble(phi.values()))).abs() < 1e-14);
    }

    fn small_poly(n: usize, deg: usize) -> impl Strategy<Value = Polynomial> {
        let basis = basis_enumerate(n, deg).unwrap();
        proptest::collection::vec(-1.0f64..1.0, basis.len())
            .prop_map(move |c| Polynomial::from_basis_coeffs(&basis, &c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn shift_is_adjoint_to_multiplication(g in small_poly(2, 2), p in small_poly(2, 3)) {
            let phi = catalog_moments(&MeasureDescriptor::UniformBall2d { radius: 1.0 }, 5).unwrap();
            let lhs = riesz_apply(&shift_sequence(&g, &phi).unwrap(), &p).unwrap();
            let rhs = riesz_apply(&phi, &g.mul(&p).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn nonnegative_generators_pass_the_cone_test(c in proptest::collection::vec(-1.0f64..1.0, 3)) {
            // g = (c0 + c1 x + c2 x^2)^2 + (1 - x^2) ≥ 0 on [-1, 1]
            let sq = Polynomial::univariate(&c);
            let g = sq.mul(&sq).unwrap().add(&one_minus_x2()).unwrap();
            for phi in [cheb(12), unif(12)] {
                for s in 0..=4 {
                    prop_assert!(nonneg_test(&g, &phi, s).unwrap().is_psd());
                }
            }
        }
    }
}
