//! Sparse multivariate polynomials with rational coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exactla::RationalMatrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QPolyError {
    #[error("expected {expected} variables, found {found}")]
    VarCountMismatch { expected: usize, found: usize },
}

/// Exponent vector ordered graded-lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiPoly {
    num_vars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

impl MultiPoly {
    pub fn zero(num_vars: usize) -> Self {
        MultiPoly {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: Rat) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(vec![0; num_vars], c);
        p
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, Rat::one())
    }

    /// The variable `x_i` (0-based).
    pub fn var(num_vars: usize, i: usize) -> Self {
        assert!(i < num_vars, "variable {i} out of range for {num_vars} variables");
        let mut e = vec![0; num_vars];
        e[i] = 1;
        Self::monomial(e, Rat::one())
    }

    pub fn monomial(exponents: Vec<u32>, c: Rat) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// Builds from (coefficient, exponents) pairs; repeated exponents accumulate.
    pub fn from_terms(num_vars: usize, terms: impl IntoIterator<Item = (Rat, Vec<u32>)>) -> Result<Self, QPolyError> {
        let mut p = Self::zero(num_vars);
        for (c, e) in terms {
            if e.len() != num_vars {
                return Err(QPolyError::VarCountMismatch {
                    expected: num_vars,
                    found: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Linear form `Σ coeffs_j x_{offset + j}`.
    pub fn linear(num_vars: usize, offset: usize, coeffs: &[Rat]) -> Self {
        let mut p = Self::zero(num_vars);
        for (j, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; num_vars];
            e[offset + j] = 1;
            p.add_term(e, c.clone());
        }
        p
    }

    fn add_term(&mut self, exponents: Vec<u32>, c: Rat) {
        if c.is_zero() {
            return;
        }
        let key = Monomial(exponents);
        let entry = self.terms.entry(key.clone()).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Terms in increasing graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rat)> {
        self.terms.iter().map(|(m, c)| (m.0.as_slice(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn constant_term(&self) -> Rat {
        self.terms
            .get(&Monomial(vec![0; self.num_vars]))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.degree().unwrap_or(0) == 0
    }

    /// Coefficient of the degree-one monomial `x_i`.
    pub fn linear_coefficient(&self, i: usize) -> Rat {
        let mut e = vec![0; self.num_vars];
        e[i] = 1;
        self.terms.get(&Monomial(e)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn uses_var(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.0[i] > 0)
    }

    /// Indices of variables appearing with nonzero exponent.
    pub fn vars_used(&self) -> Vec<usize> {
        (0..self.num_vars).filter(|&i| self.uses_var(i)).collect()
    }

    /// Part of the polynomial not involving any variable in `range`, and the rest.
    pub fn split_by_vars(&self, range: std::ops::Range<usize>) -> (MultiPoly, MultiPoly) {
        let mut free = Self::zero(self.num_vars);
        let mut rest = Self::zero(self.num_vars);
        for (m, c) in &self.terms {
            if range.clone().any(|i| m.0[i] > 0) {
                rest.add_term(m.0.clone(), c.clone());
            } else {
                free.add_term(m.0.clone(), c.clone());
            }
        }
        (free, rest)
    }

    fn check(&self, other: &Self) -> Result<(), QPolyError> {
        if self.num_vars != other.num_vars {
            return Err(QPolyError::VarCountMismatch {
                expected: self.num_vars,
                found: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, QPolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.0.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, QPolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rat::one())
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero(self.num_vars);
        }
        MultiPoly {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, QPolyError> {
        self.check(other)?;
        let mut out = Self::zero(self.num_vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let e: Vec<u32> = ma.0.iter().zip(&mb.0).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one(self.num_vars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base).expect("same arity");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same arity");
            }
        }
        out
    }

    pub fn eval(&self, x: &[Rat]) -> Result<Rat, QPolyError> {
        if x.len() != self.num_vars {
            return Err(QPolyError::VarCountMismatch {
                expected: self.num_vars,
                found: x.len(),
            });
        }
        let mut total = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &ei) in x.iter().zip(&m.0) {
                if ei > 0 {
                    t *= num_traits::pow(xi.clone(), ei as usize);
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Floating-point evaluation, for numerical cross-checks only.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let cf = c.to_f64().unwrap_or(f64::NAN);
                m.0.iter()
                    .zip(x)
                    .fold(cf, |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum()
    }

    /// Substitutes `inner[i]` for `x_i`.
    pub fn substitute(&self, inner: &[MultiPoly]) -> Result<MultiPoly, QPolyError> {
        if inner.len() != self.num_vars {
            return Err(QPolyError::VarCountMismatch {
                expected: self.num_vars,
                found: inner.len(),
            });
        }
        let target = inner.first().map_or(0, |p| p.num_vars);
        if let Some(bad) = inner.iter().find(|p| p.num_vars != target) {
            return Err(QPolyError::VarCountMismatch {
                expected: target,
                found: bad.num_vars,
            });
        }
        // cache powers of each inner component
        let mut powers: Vec<Vec<MultiPoly>> = inner.iter().map(|p| vec![MultiPoly::one(target), p.clone()]).collect();
        let mut out = MultiPoly::zero(target);
        for (m, c) in &self.terms {
            let mut t = MultiPoly::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().mul(&inner[i])?;
                    powers[i].push(next);
                }
                t = t.mul(&powers[i][e as usize])?;
            }
            out = out.add(&t)?;
        }
        Ok(out)
    }

    /// Partial derivative in `x_i`.
    pub fn partial(&self, i: usize) -> MultiPoly {
        let mut out = MultiPoly::zero(self.num_vars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.0.clone();
            m2[i] -= 1;
            out.add_term(m2, c * rat(e as i64));
        }
        out
    }

    /// Re-expresses the polynomial in a larger or smaller variable set; dropped variables must be unused.
    pub fn with_num_vars(&self, num_vars: usize) -> Option<MultiPoly> {
        let mut out = MultiPoly::zero(num_vars);
        for (m, c) in &self.terms {
            if m.0.iter().skip(num_vars).any(|&e| e > 0) {
                return None;
            }
            let mut e = m.0.clone();
            e.resize(num_vars, 0);
            out.add_term(e, c.clone());
        }
        Some(out)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().rev().enumerate() {
            let mag = c.abs();
            match (n, c.is_negative()) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// `outer ∘ inner`: substitutes the components of `inner` into each component of `outer`.
pub fn compose(outer: &[MultiPoly], inner: &[MultiPoly]) -> Result<Vec<MultiPoly>, QPolyError> {
    outer.iter().map(|p| p.substitute(inner)).collect()
}

pub fn evaluate(f: &[MultiPoly], x: &[Rat]) -> Result<Vec<Rat>, QPolyError> {
    f.iter().map(|p| p.eval(x)).collect()
}

/// Entry `(i, j)` is `∂f_i/∂x_j`.
pub fn jacobian(f: &[MultiPoly]) -> Vec<Vec<MultiPoly>> {
    f.iter()
        .map(|p| (0..p.num_vars()).map(|j| p.partial(j)).collect())
        .collect()
}

pub fn jacobian_at(f: &[MultiPoly], x: &[Rat]) -> Result<RationalMatrix, QPolyError> {
    let n = x.len();
    let mut rows = Vec::with_capacity(f.len());
    for p in f {
        if p.num_vars() != n {
            return Err(QPolyError::VarCountMismatch {
                expected: n,
                found: p.num_vars(),
            });
        }
        let row: Result<Vec<Rat>, QPolyError> = (0..n).map(|j| p.partial(j).eval(x)).collect();
        rows.push(row?);
    }
    Ok(RationalMatrix::from_fn(f.len(), n, |i, j| rows[i][j].clone()))
}

pub fn identity_vector(n: usize) -> Vec<MultiPoly> {
    (0..n).map(|i| MultiPoly::var(n, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn arithmetic_examples() {
        let x = MultiPoly::var(1, 0);
        let one = MultiPoly::one(1);
        let p = x.add(&one).unwrap().mul(&x.sub(&one).unwrap()).unwrap();
        assert_eq!(p, MultiPoly::from_terms(1, [(rat(1), vec![2]), (rat(-1), vec![0])]).unwrap());
        assert_eq!(p.add(&MultiPoly::zero(1)).unwrap(), p);
        let a = MultiPoly::var(2, 0).scale(&q(1, 2));
        let b = MultiPoly::var(2, 1).scale(&q(2, 3));
        assert_eq!(a.mul(&b).unwrap(), MultiPoly::monomial(vec![1, 1], q(1, 3)));
        assert!(a.add(&MultiPoly::zero(3)).is_err());
        assert_eq!(p.to_string(), "x1^2 - 1");
    }

    #[test]
    fn composition_examples() {
        let x = MultiPoly::var(1, 0);
        let sq = vec![x.pow(2)];
        let shift = vec![x.add(&MultiPoly::one(1)).unwrap()];
        let c = compose(&sq, &shift).unwrap();
        assert_eq!(c[0], MultiPoly::from_terms(1, [(rat(1), vec![2]), (rat(2), vec![1]), (rat(1), vec![0])]).unwrap());
        let f = vec![MultiPoly::var(3, 0), MultiPoly::var(3, 2)];
        assert_eq!(compose(&identity_vector(3), &identity_vector(3)).unwrap(), identity_vector(3));
        assert_eq!(compose(&identity_vector(2), &f).unwrap(), f);
        assert!(compose(&identity_vector(2), &identity_vector(3)).is_err());
    }

    #[test]
    fn compose_matches_pointwise_affine_inner() {
        use rand::{Rng, SeedableRng};
        let n = 3;
        let x = |i| MultiPoly::var(n, i);
        let outer = vec![x(0), x(2).add(&x(0).mul(&x(1)).unwrap()).unwrap()];
        let inner: Vec<MultiPoly> = vec![
            x(0).scale(&rat(2)).add(&MultiPoly::constant(n, rat(1))).unwrap(),
            x(1).sub(&x(0)).unwrap(),
            x(2).add(&x(1).scale(&q(1, 2))).unwrap(),
        ];
        let composed = compose(&outer, &inner).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pt: Vec<Rat> = (0..n).map(|_| q(rng.gen_range(-20..=20), rng.gen_range(1..=7))).collect();
            let direct = evaluate(&outer, &evaluate(&inner, &pt).unwrap()).unwrap();
            assert_eq!(evaluate(&composed, &pt).unwrap(), direct);
        }
    }

    #[test]
    fn jacobian_examples() {
        let n = 3;
        let f = vec![MultiPoly::var(n, 0), MultiPoly::var(n, 2).add(&MultiPoly::var(n, 0).mul(&MultiPoly::var(n, 1)).unwrap()).unwrap()];
        let j = jacobian(&f);
        assert_eq!(j[1], vec![MultiPoly::var(n, 1), MultiPoly::var(n, 0), MultiPoly::one(n)]);
        let affine = vec![
            MultiPoly::linear(2, 0, &[rat(2), rat(3)]).add(&MultiPoly::constant(2, rat(5))).unwrap(),
            MultiPoly::linear(2, 0, &[rat(-1), rat(4)]),
        ];
        let ja = jacobian(&affine);
        assert!(ja.iter().flatten().all(MultiPoly::is_constant));
        assert_eq!(ja[0][1].constant_term(), rat(3));
        assert_eq!(ja[1][0].constant_term(), rat(-1));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let n = 3;
        let x = |i| MultiPoly::var(n, i);
        let f = vec![
            x(0).pow(3).add(&x(1)).unwrap(),
            x(0).mul(&x(1)).unwrap().mul(&x(2)).unwrap().scale(&q(1, 3)),
            x(2).pow(2).sub(&x(0).mul(&x(1).pow(2)).unwrap()).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pt: Vec<Rat> = (0..n).map(|_| q(rng.gen_range(-9..=9), rng.gen_range(1..=4))).collect();
            let exact = jacobian_at(&f, &pt).unwrap();
            let ptf: Vec<f64> = pt.iter().map(|v| v.to_f64().unwrap()).collect();
            let h = 1e-5;
            for i in 0..n {
                for j in 0..n {
                    let mut plus = ptf.clone();
                    let mut minus = ptf.clone();
                    plus[j] += h;
                    minus[j] -= h;
                    let fd = (f[i].eval_f64(&plus) - f[i].eval_f64(&minus)) / (2.0 * h);
                    let ex = exact.get(i, j).to_f64().unwrap();
                    let err = (fd - ex).abs() / ex.abs().max(1.0);
                    assert!(err <= 1e-6, "entry ({i},{j}): {fd} vs {ex}");
                }
            }
        }
    }

    fn small_poly(n: usize) -> impl Strategy<Value = MultiPoly> {
        prop::collection::vec((-3i64..=3, 1i64..=3, prop::collection::vec(0u32..=2, n)), 0..4).prop_map(move |ts| {
            let terms = ts.into_iter().map(|(a, b, mut e)| {
                // keep total degree at most 2
                while e.iter().sum::<u32>() > 2 {
                    let k = e.iter().position(|&v| v > 0).unwrap();
                    e[k] -= 1;
                }
                (q(a, b), e)
            });
            MultiPoly::from_terms(n, terms).unwrap()
        })
    }

    fn small_map(n: usize) -> impl Strategy<Value = Vec<MultiPoly>> {
        prop::collection::vec(small_poly(n), n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn compose_is_associative(f in small_map(3), g in small_map(3), h in small_map(3)) {
            let left = compose(&compose(&f, &g).unwrap(), &h).unwrap();
            let right = compose(&f, &compose(&g, &h).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn compose_evaluates_pointwise(f in small_map(3), g in small_map(3), pt in prop::collection::vec((-5i64..=5, 1i64..=4), 3)) {
            let x: Vec<Rat> = pt.iter().map(|&(a, b)| q(a, b)).collect();
            let lhs = evaluate(&compose(&f, &g).unwrap(), &x).unwrap();
            let rhs = evaluate(&f, &evaluate(&g, &x).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn chain_rule(f in small_map(3), g in small_map(3), pt in prop::collection::vec((-5i64..=5, 1i64..=4), 3)) {
            let x: Vec<Rat> = pt.iter().map(|&(a, b)| q(a, b)).collect();
            let fg = compose(&f, &g).unwrap();
            let lhs = jacobian_at(&fg, &x).unwrap();
            let gx = evaluate(&g, &x).unwrap();
            let rhs = &jacobian_at(&f, &gx).unwrap() * &jacobian_at(&g, &x).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
