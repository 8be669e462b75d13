//! Multi-indices, graded monomial bases and sparse multivariate polynomials.
//!
//! Monomials are ordered graded-lex: by total degree first, ties broken
//! lexicographically with the larger exponent vector first, so that for
//! `n = 2` the basis of degree 2 reads `1, x1, x2, x1^2, x1 x2, x2^2`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of monomials in a basis.
pub const MAX_BASIS_SIZE: usize = 1 << 24;

/// Exponent vector `α ∈ ℕⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn zero(n: usize) -> Self {
        Self { exponents: vec![0; n] }
    }

    /// `e_i` in dimension `n`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut exponents = vec![0; n];
        exponents[i] = 1;
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn n(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> usize {
        self.exponents.iter().map(|&e| e as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.n(), other.n());
        MultiIndex { exponents: self.exponents.iter().zip(&other.exponents).map(|(a, b)| a + b).collect() }
    }

    /// `x^α`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// `C(n, k)` with overflow detection.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Number of monomials of degree at most `t` in `n` variables, `s(t) = C(n+t, n)`.
pub fn basis_size(n: usize, t: usize) -> Result<usize> {
    let size = n.checked_add(t).and_then(|m| binomial(m, n)).ok_or(Error::SizeOverflow { n, t })?;
    if size > MAX_BASIS_SIZE {
        return Err(Error::SizeOverflow { n, t });
    }
    Ok(size)
}

/// Ordered enumeration of `ℕⁿ_t`.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    t: usize,
    entries: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl PartialEq for MonomialBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.t == other.t
    }
}

impl MonomialBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MultiIndex] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.entries[i]
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Number of entries with degree at most `d` (a prefix, by graded order).
    pub fn prefix_len(&self, d: usize) -> usize {
        basis_size(self.n, d.min(self.t)).expect("prefix of a valid basis")
    }

    /// Monomial vector `v_t(x)`.
    pub fn monomial_vector(&self, x: &[f64]) -> Vec<f64> {
        let powers: Vec<Vec<f64>> = x
            .iter()
            .map(|&xi| {
                let mut p = Vec::with_capacity(self.t + 1);
                let mut acc = 1.0;
                for _ in 0..=self.t {
                    p.push(acc);
                    acc *= xi;
                }
                p
            })
            .collect();
        self.entries
            .iter()
            .map(|alpha| alpha.exponents().iter().enumerate().map(|(i, &e)| powers[i][e as usize]).product())
            .collect()
    }
}

fn push_degree(prefix: &mut Vec<u32>, remaining_vars: usize, degree: u32, out: &mut Vec<MultiIndex>) {
    if remaining_vars == 1 {
        prefix.push(degree);
        out.push(MultiIndex::new(prefix.clone()));
        prefix.pop();
        return;
    }
    for e in (0..=degree).rev() {
        prefix.push(e);
        push_degree(prefix, remaining_vars - 1, degree - e, out);
        prefix.pop();
    }
}

/// All multi-indices with `|α| ≤ t`, in graded-lex order.
pub fn basis_enumerate(n: usize, t: usize) -> Result<MonomialBasis> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let size = basis_size(n, t)?;
    let mut entries = Vec::with_capacity(size);
    let mut prefix = Vec::with_capacity(n);
    for d in 0..=t {
        push_degree(&mut prefix, n, d as u32, &mut entries);
    }
    debug_assert_eq!(entries.len(), size);
    let lookup = entries.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    Ok(MonomialBasis { n, t, entries, lookup })
}

/// Sparse real polynomial in `n` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialJson", into = "PolynomialJson")]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(MultiIndex::zero(n), c);
        p
    }

    /// The coordinate polynomial `x_i` (zero-based `i`).
    pub fn var(n: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(n, i), 1.0)
    }

    pub fn monomial(alpha: MultiIndex, coef: f64) -> Self {
        let mut p = Self::zero(alpha.n());
        p.add_term(alpha, coef);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(n);
        for (exp, coef) in terms {
            if exp.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: exp.len() });
            }
            if !coef.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient {coef}")));
            }
            p.add_term(MultiIndex::new(exp), coef);
        }
        Ok(p)
    }

    /// Univariate polynomial from its coefficient list `c0 + c1 x + ...`.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let mut p = Self::zero(1);
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_term(MultiIndex::new(vec![k as u32]), c);
        }
        p
    }

    /// `v(x)ᵀ Q v(x)` for a symmetric coefficient matrix indexed by `basis`.
    pub fn from_gram(basis: &MonomialBasis, gram: &nalgebra::DMatrix<f64>) -> Self {
        let mut p = Self::zero(basis.n());
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let q = gram[(i, j)];
                if q != 0.0 {
                    p.add_term(basis.get(i).add(basis.get(j)), q);
                }
            }
        }
        p
    }

    /// `Σ_i c_i x^{β_i}` for a coefficient vector indexed by `basis`.
    pub fn from_basis_coeffs(basis: &MonomialBasis, coeffs: &[f64]) -> Self {
        let mut p = Self::zero(basis.n());
        for (alpha, &c) in basis.entries().iter().zip(coeffs) {
            p.add_term(alpha.clone(), c);
        }
        p
    }

    /// Adds `coef · x^α` in place, dropping the term if it cancels to zero.
    pub fn add_term(&mut self, alpha: MultiIndex, coef: f64) {
        debug_assert_eq!(alpha.n(), self.n);
        if coef == 0.0 {
            return;
        }
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + coef;
                if sum == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// `⌈deg/2⌉`.
    pub fn half_degree(&self) -> usize {
        self.degree().div_ceil(2)
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&MultiIndex::zero(self.n))
    }

    /// Largest absolute coefficient (0 for the zero polynomial).
    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        Ok(self.terms.iter().map(|(a, &c)| c * a.eval(x)).sum())
    }

    fn check_dim(&self, other: &Polynomial) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (a, c) in other.terms() {
            out.add_term(a.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (a, c) in other.terms() {
            out.add_term(a.clone(), -c);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.n);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                out.add_term(a.add(b), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (a, c) in self.terms() {
            out.add_term(a.clone(), c * s);
        }
        out
    }

    pub fn pow(&self, k: usize) -> Polynomial {
        let mut out = Polynomial::constant(self.n, 1.0);
        for _ in 0..k {
            out = out.mul(self).expect("same dimension");
        }
        out
    }

    /// Fixes the first `x.len()` variables at `x`, returning a polynomial in the
    /// remaining `n - x.len()` variables.
    pub fn partial_eval(&self, x: &[f64]) -> Result<Polynomial> {
        if x.len() >= self.n {
            return Err(Error::DimensionMismatch { expected: self.n - 1, found: x.len() });
        }
        let rest = self.n - x.len();
        let mut out = Polynomial::zero(rest);
        for (a, c) in self.terms() {
            let (head, tail) = a.exponents().split_at(x.len());
            let factor: f64 = head.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product();
            out.add_term(MultiIndex::new(tail.to_vec()), c * factor);
        }
        Ok(out)
    }

    /// Substitutes the univariate `self(z)` with `z = inner(x)`.
    pub fn compose_univariate(&self, inner: &Polynomial) -> Result<Polynomial> {
        if self.n != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: self.n });
        }
        let mut out = Polynomial::zero(inner.n());
        let mut power = Polynomial::constant(inner.n(), 1.0);
        for k in 0..=self.degree() {
            let c = self.coefficient(&MultiIndex::new(vec![k as u32]));
            if c != 0.0 {
                out = out.add(&power.scale(c))?;
            }
            power = power.mul(inner)?;
        }
        Ok(out)
    }

    /// Coefficient vector in `basis` order; fails if a term does not fit.
    pub fn coeffs_in(&self, basis: &MonomialBasis) -> Result<Vec<f64>> {
        let mut v = vec![0.0; basis.len()];
        for (a, c) in self.terms() {
            let i =
                basis.index_of(a).ok_or_else(|| Error::DegreeOverflow { monomial: a.to_string(), bound: basis.t() })?;
            v[i] = c;
        }
        Ok(v)
    }
}

/// Binary polynomial arithmetic dispatch.
pub fn poly_arith(p: &Polynomial, q: &Polynomial, op: PolyOp) -> Result<Polynomial> {
    match op {
        PolyOp::Add => p.add(q),
        PolyOp::Sub => p.sub(q),
        PolyOp::Mul => p.mul(q),
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (a, c)) in self.terms().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if a.is_zero() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{a}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TermJson {
    exp: Vec<u32>,
    coef: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PolynomialJson {
    n: usize,
    terms: Vec<TermJson>,
}

impl TryFrom<PolynomialJson> for Polynomial {
    type Error = Error;

    fn try_from(raw: PolynomialJson) -> Result<Self> {
        if raw.n == 0 {
            return Err(Error::InvalidArgument("polynomial dimension must be at least 1".into()));
        }
        Polynomial::from_terms(raw.n, raw.terms.into_iter().map(|t| (t.exp, t.coef)))
    }
}

impl From<Polynomial> for PolynomialJson {
    fn from(p: Polynomial) -> Self {
        PolynomialJson {
            n: p.n,
            terms: p.terms.into_iter().map(|(a, coef)| TermJson { exp: a.exponents, coef }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn univariate_enumeration() {
        let b = basis_enumerate(1, 2).unwrap();
        let exps: Vec<_> = b.entries().iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(exps, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(basis_enumerate(2, 2).unwrap().len(), 6);
        // C(13, 3) = 13*12*11/6
        assert_eq!(basis_enumerate(3, 10).unwrap().len(), 286);
    }

    #[test]
    fn graded_lex_order_in_two_variables() {
        let b = basis_enumerate(2, 2).unwrap();
        let exps: Vec<_> = b.entries().iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(exps, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert!(b.get(0).is_zero());
        // Ord agrees with the enumeration order.
        let mut sorted = b.entries().to_vec();
        sorted.sort();
        assert_eq!(sorted, b.entries());
    }

    #[test]
    fn oversized_basis_is_rejected() {
        assert!(matches!(basis_enumerate(40, 40), Err(Error::SizeOverflow { .. })));
        assert!(matches!(basis_size(usize::MAX, 3), Err(Error::SizeOverflow { .. })));
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(Polynomial::constant(3, 1.0).eval(&[0.3, -2.0, 7.0]).unwrap(), 1.0);
        let p = Polynomial::univariate(&[1.0, 0.0, 2.0]);
        assert_eq!(p.eval(&[1.0]).unwrap(), 3.0);
        let q = x(2, 0).mul(&x(2, 1)).unwrap();
        assert_eq!(q.eval(&[2.0, 3.0]).unwrap(), 6.0);
        assert!(matches!(q.eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn arithmetic_examples() {
        let p = Polynomial::univariate(&[0.5, -1.0, 2.0]);
        assert_eq!(p.add(&Polynomial::zero(1)).unwrap(), p);
        let xx = x(1, 0).mul(&x(1, 0)).unwrap();
        assert_eq!(xx, Polynomial::univariate(&[0.0, 0.0, 1.0]));
        let a = Polynomial::univariate(&[1.0, 0.0, -1.0]);
        let b = Polynomial::univariate(&[1.0, 0.0, 1.0]);
        let c = poly_arith(&a, &b, PolyOp::Mul).unwrap();
        assert_eq!(c, Polynomial::univariate(&[1.0, 0.0, 0.0, 0.0, -1.0]));
        assert_eq!(c.num_terms(), 2);
        assert!(matches!(a.add(&x(2, 0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let p = Polynomial::univariate(&[1.0, 2.0]);
        let z = p.sub(&p).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
    }

    #[test]
    fn partial_evaluation_and_composition() {
        // p(x, y) = 1 + 3x^2 + 3y^2 at x = 1 gives 4 + 3y^2
        let p = Polynomial::from_terms(2, vec![(vec![0, 0], 1.0), (vec![2, 0], 3.0), (vec![0, 2], 3.0)]).unwrap();
        let q = p.partial_eval(&[1.0]).unwrap();
        assert_eq!(q, Polynomial::univariate(&[4.0, 0.0, 3.0]));
        // (1 + z)^2 with z = x^2
        let outer = Polynomial::univariate(&[1.0, 2.0, 1.0]);
        let inner = x(1, 0).mul(&x(1, 0)).unwrap();
        let comp = outer.compose_univariate(&inner).unwrap();
        assert_eq!(comp, Polynomial::univariate(&[1.0, 0.0, 2.0, 0.0, 1.0]));
    }

    #[test]
    fn json_form_round_trips() {
        let p = Polynomial::from_terms(2, vec![(vec![1, 0], -1.5), (vec![0, 0], 2.0)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":2,"terms":[{"exp":[0,0],"coef":2.0},{"exp":[1,0],"coef":-1.5}]}"#);
        let back: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = serde_json::from_str::<Polynomial>(r#"{"n":2,"terms":[{"exp":[1],"coef":1.0}]}"#);
        assert!(bad.is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn poly(n: usize, deg: usize) -> impl Strategy<Value = Polynomial> {
            let len = basis_size(n, deg).unwrap();
            proptest::collection::vec(-2.0f64..2.0, len)
                .prop_map(move |c| Polynomial::from_basis_coeffs(&basis_enumerate(n, deg).unwrap(), &c))
        }

        proptest! {
            #[test]
            fn product_evaluates_to_product_of_values(
                (p, q, pt) in (1usize..=3).prop_flat_map(|n| (
                    poly(n, 3),
                    poly(n, 3),
                    proptest::collection::vec(-1.5f64..1.5, n),
                ))
            ) {
                let lhs = p.mul(&q).unwrap().eval(&pt).unwrap();
                let rhs = p.eval(&pt).unwrap() * q.eval(&pt).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            }

            #[test]
            fn lower_degree_basis_is_a_prefix(n in 1usize..=4, t in 0usize..=5) {
                let big = basis_enumerate(n, t + 1).unwrap();
                let small = basis_enumerate(n, t).unwrap();
                prop_assert_eq!(&big.entries()[..small.len()], small.entries());
                prop_assert_eq!(big.prefix_len(t), small.len());
            }
        }
    }
}
