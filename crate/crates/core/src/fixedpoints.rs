//! Fixed points of canonical maps, solved level by level, and fixed-point counts
//! on the quotient through twisted class representatives.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::canonical::{compose_maps, CanonicalError, CanonicalMap};
use crate::exactla::{ExactLaError, RationalMatrix};
use crate::group::{EndoSpec, GroupSpec};
use crate::nielsen::{nielsen_average_invariant, NielsenError};
use crate::qpoly::{MultiPoly, QPolyError, Rat};
use crate::reidemeister::{reidemeister_filtered, Count, ReidemeisterError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixedPointError {
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Poly(#[from] QPolyError),
    #[error(transparent)]
    Linalg(#[from] ExactLaError),
    #[error(transparent)]
    Reidemeister(#[from] ReidemeisterError),
    #[error(transparent)]
    Nielsen(#[from] NielsenError),
    #[error("level {level}: solvability condition is nonlinear in the free parameters")]
    NonlinearConstraint { level: usize },
    #[error("infinitely many Reidemeister classes but no candidate has a positive-dimensional fixed set")]
    Undetermined,
    #[error("{count} fixed points found but N = {nielsen}")]
    CountMismatch { count: BigInt, nielsen: BigInt },
}

/// A positive-dimensional fixed set `{P(t)}`, with `t` ranging over the free parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveDimensional {
    /// First level (1-based) contributing a free parameter.
    pub first_degenerate_level: usize,
    /// Basis of `ker(I - D)` at that level.
    pub kernel_basis: Vec<Vec<Rat>>,
    /// Coordinates as polynomials in one variable per coordinate; only `parameters` occur.
    pub parametrization: Vec<MultiPoly>,
    pub parameters: Vec<usize>,
}

impl PositiveDimensional {
    pub fn point_at(&self, t: &[Rat]) -> Result<Vec<Rat>, FixedPointError> {
        let n = self.parametrization.len();
        let mut full = vec![Rat::zero(); n];
        for (p, v) in self.parameters.iter().zip(t) {
            full[*p] = v.clone();
        }
        Ok(self.parametrization.iter().map(|c| c.eval(&full)).collect::<Result<_, _>>()?)
    }

    pub fn base_point(&self) -> Result<Vec<Rat>, FixedPointError> {
        self.point_at(&[])
    }

    /// A fixed point different from [`PositiveDimensional::base_point`].
    pub fn another_point(&self) -> Result<Vec<Rat>, FixedPointError> {
        self.point_at(&[Rat::one()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixSet {
    Empty,
    Unique(Vec<Rat>),
    PositiveDimensional(PositiveDimensional),
}

/// Eliminates parameter `var` from `c`, which must be affine in it: `c = a·t + rest`.
fn solve_for(c: &MultiPoly, var: usize) -> MultiPoly {
    let a = c.linear_coefficient(var);
    let rest = c.sub(&MultiPoly::var(c.num_vars(), var).scale(&a)).expect("same arity");
    rest.scale(&(-Rat::one() / a))
}

/// Solves `f(x) = x` level by level: `(I - D_i) x_i = tail_i(x_{<i})`.
pub fn solve_fixed_points(f: &CanonicalMap) -> Result<FixSet, FixedPointError> {
    let filt = f.filtration();
    let h = filt.dim();
    // coordinate j of the solution, as a polynomial in parameters t_0..t_{h-1}
    let mut param: Vec<MultiPoly> = vec![MultiPoly::zero(h); h];
    let mut kernels: Vec<Vec<Vec<Rat>>> = Vec::new();
    for level in filt.levels() {
        let range = filt.range(level);
        let k = range.len();
        let m = f.diag_block(level).identity_minus()?;
        // [M | I] → [R | E] with E M = R
        let aug = RationalMatrix::from_fn(k, 2 * k, |r, c| {
            if c < k {
                m.get(r, c).clone()
            } else if c - k == r {
                Rat::one()
            } else {
                Rat::zero()
            }
        });
        let (red, pivots_all) = aug.rref();
        let pivots: Vec<usize> = pivots_all.into_iter().filter(|&c| c < k).collect();
        let combine = |row: usize, param: &[MultiPoly]| -> Result<MultiPoly, FixedPointError> {
            let mut acc = MultiPoly::zero(h);
            for (j, t) in f.tail(level).iter().enumerate() {
                let e = red.get(row, k + j);
                if !e.is_zero() {
                    acc = acc.add(&t.substitute(param)?.scale(e))?;
                }
            }
            Ok(acc)
        };
        // zero rows of R: solvability conditions on the parameters
        for row in pivots.len()..k {
            let c = combine(row, &param)?;
            if c.is_zero() {
                continue;
            }
            if c.is_constant() {
                return Ok(FixSet::Empty);
            }
            if c.degree() != Some(1) {
                return Err(FixedPointError::NonlinearConstraint { level });
            }
            let var = c.vars_used()[0];
            let mut sub: Vec<MultiPoly> = (0..h).map(|i| MultiPoly::var(h, i)).collect();
            sub[var] = solve_for(&c, var);
            for p in param.iter_mut() {
                *p = p.substitute(&sub)?;
            }
        }
        let free: Vec<usize> = (0..k).filter(|c| !pivots.contains(c)).collect();
        kernels.push(m.nullspace());
        for &c in &free {
            param[range.start + c] = MultiPoly::var(h, range.start + c);
        }
        for (row, &pc) in pivots.iter().enumerate() {
            let mut x = combine(row, &param)?;
            for &c in &free {
                let coeff = red.get(row, c);
                if !coeff.is_zero() {
                    x = x.sub(&MultiPoly::var(h, range.start + c).scale(coeff))?;
                }
            }
            param[range.start + pc] = x;
        }
    }
    let mut used: Vec<usize> = param.iter().flat_map(|p| p.vars_used()).collect();
    used.sort_unstable();
    used.dedup();
    if used.is_empty() {
        let point = param.iter().map(MultiPoly::constant_term).collect();
        return Ok(FixSet::Unique(point));
    }
    // parameters are indexed by the coordinate that introduced them
    let first_degenerate_level = filt.level_of(used[0]);
    let kernel_basis = kernels[first_degenerate_level - 1].clone();
    Ok(FixSet::PositiveDimensional(PositiveDimensional {
        first_degenerate_level,
        kernel_basis,
        parametrization: param,
        parameters: used,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixedPointCount {
    Finite(BigInt),
    Uncountable,
}

/// Counts fixed points of the induced map on the quotient: one per twisted class
/// whose lifted map `α ∘ p` has a fixed point. With infinitely many classes some
/// candidate lift must have a positive-dimensional fixed set.
pub fn count_fixed_points_on_quotient(group: &GroupSpec, endo: &EndoSpec) -> Result<FixedPointCount, FixedPointError> {
    let classes = reidemeister_filtered(group, endo)?;
    let lifted = |alpha: &CanonicalMap| -> Result<FixSet, FixedPointError> { solve_fixed_points(&compose_maps(alpha, endo.lift())?) };
    match classes.count {
        Count::Finite(_) => {
            let mut count = BigInt::zero();
            for rep in &classes.representatives {
                match lifted(&rep.map)? {
                    FixSet::PositiveDimensional(_) => return Ok(FixedPointCount::Uncountable),
                    FixSet::Unique(_) => count += 1,
                    FixSet::Empty => {}
                }
            }
            let nielsen = nielsen_average_invariant(group, endo)?.value;
            if count != nielsen {
                return Err(FixedPointError::CountMismatch { count, nielsen });
            }
            Ok(FixedPointCount::Finite(count))
        }
        Count::Infinite => {
            let candidates = group
                .averaging()
                .cosets
                .iter()
                .map(|c| c.map.clone())
                .chain(classes.infinite_nodes.iter().map(|n| n.twist.map.clone()));
            for alpha in candidates {
                if let FixSet::PositiveDimensional(_) = lifted(&alpha)? {
                    return Ok(FixedPointCount::Uncountable);
                }
            }
            Err(FixedPointError::Undetermined)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{rational_vector, Filtration};
    use crate::exactla::IntegerMatrix;
    use crate::models;
    use crate::qpoly::rat;
    use proptest::prelude::*;

    fn map(dims: Vec<usize>, comps: Vec<MultiPoly>) -> CanonicalMap {
        CanonicalMap::from_components(&Filtration::new(dims).unwrap(), comps).unwrap()
    }

    #[test]
    fn one_dimensional_examples() {
        let x = MultiPoly::var(1, 0);
        let double = map(vec![1], vec![x.scale(&rat(2))]);
        assert_eq!(solve_fixed_points(&double).unwrap(), FixSet::Unique(rational_vector(&[0])));
        let shift = map(vec![1], vec![x.add(&MultiPoly::constant(1, rat(1))).unwrap()]);
        assert_eq!(solve_fixed_points(&shift).unwrap(), FixSet::Empty);
        let affine = map(vec![1], vec![x.scale(&rat(3)).add(&MultiPoly::constant(1, rat(4))).unwrap()]);
        assert_eq!(solve_fixed_points(&affine).unwrap(), FixSet::Unique(rational_vector(&[-2])));
    }

    #[test]
    fn klein_twisted_lift_has_a_line_of_fixed_points() {
        let m = models::klein_bottle(-1, -1).unwrap();
        let t = m.group.evaluate(&vec![(1, 1)]).unwrap();
        let f = compose_maps(&t, m.endo.lift()).unwrap();
        // (r1, r2) ↦ (r1, -r2 + 1)
        assert_eq!(f.eval(&rational_vector(&[5, 2])).unwrap(), rational_vector(&[5, -1]));
        let FixSet::PositiveDimensional(pd) = solve_fixed_points(&f).unwrap() else { panic!("expected a fixed line") };
        assert_eq!(pd.first_degenerate_level, 1);
        assert_eq!(pd.kernel_basis, vec![rational_vector(&[1])]);
        let a = pd.base_point().unwrap();
        let b = pd.another_point().unwrap();
        assert_ne!(a, b);
        for p in [a, b] {
            assert_eq!(f.eval(&p).unwrap(), p);
        }
    }

    #[test]
    fn eliminated_parameters() {
        let v = |i| MultiPoly::var(2, i);
        // level 1 is free, but level 2 forces x1 = 0 and frees x2
        let f = map(vec![1, 1], vec![v(0), v(1).add(&v(0)).unwrap()]);
        let FixSet::PositiveDimensional(pd) = solve_fixed_points(&f).unwrap() else { panic!("expected a line") };
        assert_eq!(pd.first_degenerate_level, 2);
        assert_eq!(pd.another_point().unwrap(), rational_vector(&[0, 1]));
        // x1 free at level 1, then x2 = 2 x2 + x1 - 3 pins nothing: unique in x2 for each x1
        let g = map(vec![1, 1], vec![v(0), v(1).scale(&rat(2)).add(&v(0)).unwrap().add(&MultiPoly::constant(2, rat(-3))).unwrap()]);
        let FixSet::PositiveDimensional(pd) = solve_fixed_points(&g).unwrap() else { panic!("expected a line") };
        assert_eq!(pd.first_degenerate_level, 1);
        assert_eq!(pd.point_at(&[rat(1)]).unwrap(), rational_vector(&[1, 2]));
        // inconsistent once the lower level is pinned
        let h = map(vec![1, 1], vec![v(0).scale(&rat(2)), v(1).add(&MultiPoly::constant(2, rat(1))).unwrap()]);
        assert_eq!(solve_fixed_points(&h).unwrap(), FixSet::Empty);
        let q = map(vec![1, 1], vec![v(0), v(1).add(&v(0).pow(2)).unwrap()]);
        assert!(matches!(solve_fixed_points(&q), Err(FixedPointError::NonlinearConstraint { level: 2 })));
    }

    #[test]
    fn quotient_counts() {
        let count = |m: models::Model| count_fixed_points_on_quotient(&m.group, &m.endo).unwrap();
        assert_eq!(count(models::klein_bottle(2, 3).unwrap()), FixedPointCount::Finite(BigInt::from(4)));
        assert_eq!(count(models::torus(&IntegerMatrix::identity(2)).unwrap()), FixedPointCount::Uncountable);
        assert_eq!(count(models::circle(2).unwrap()), FixedPointCount::Finite(BigInt::from(1)));
        assert_eq!(count(models::klein_bottle(-1, -1).unwrap()), FixedPointCount::Uncountable);
        assert_eq!(count(models::heisenberg(2, 3).unwrap()), FixedPointCount::Finite(BigInt::from(10)));
        assert_eq!(count(models::big_example(2).unwrap()), FixedPointCount::Finite(BigInt::from(12)));
    }

    fn canonical_map() -> impl Strategy<Value = CanonicalMap> {
        (
            -2i64..=2,
            -2i64..=2,
            prop::array::uniform4(-2i64..=2),
            prop::array::uniform6(-2i64..=2),
        )
            .prop_map(|(a, c, b, q)| {
                let v = |i| MultiPoly::var(3, i);
                let k = |x: i64| MultiPoly::constant(3, rat(x));
                let sq = v(0).pow(2);
                let lvl1 = v(0).scale(&rat(a)).add(&k(c)).unwrap();
                let y1 = v(1).scale(&rat(b[0])).add(&v(2).scale(&rat(b[1]))).unwrap();
                let y1 = y1.add(&sq.scale(&rat(q[0]))).unwrap().add(&v(0).scale(&rat(q[1]))).unwrap().add(&k(q[2])).unwrap();
                let y2 = v(1).scale(&rat(b[2])).add(&v(2).scale(&rat(b[3]))).unwrap();
                let y2 = y2.add(&sq.scale(&rat(q[3]))).unwrap().add(&v(0).scale(&rat(q[4]))).unwrap().add(&k(q[5])).unwrap();
                map(vec![1, 2], vec![lvl1, y1, y2])
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn solutions_are_fixed(f in canonical_map(), seed in prop::collection::vec((-9i64..=9, 1i64..=5), 150)) {
            let sol = solve_fixed_points(&f);
            prop_assume!(!matches!(sol, Err(FixedPointError::NonlinearConstraint { .. })));
            match sol.unwrap() {
                FixSet::Unique(x) => prop_assert_eq!(f.eval(&x).unwrap(), x),
                FixSet::Empty => {
                    for p in seed.chunks(3).take(50) {
                        let x: Vec<Rat> = p.iter().map(|&(n, d)| Rat::new(BigInt::from(n), BigInt::from(d))).collect();
                        prop_assert_ne!(f.eval(&x).unwrap(), x);
                    }
                }
                FixSet::PositiveDimensional(pd) => {
                    let a = pd.base_point().unwrap();
                    let b = pd.another_point().unwrap();
                    prop_assert_ne!(&a, &b);
                    prop_assert_eq!(f.eval(&a).unwrap(), a);
                    prop_assert_eq!(f.eval(&b).unwrap(), b);
                    let t: Vec<Rat> = seed.iter().take(pd.parameters.len()).map(|&(n, d)| Rat::new(BigInt::from(n), BigInt::from(d))).collect();
                    let c = pd.point_at(&t).unwrap();
                    prop_assert_eq!(f.eval(&c).unwrap(), c);
                }
            }
        }

        #[test]
        fn torus_trichotomy(e in prop::array::uniform4(-3i64..=3)) {
            let f = IntegerMatrix::from_i64_rows(&[&[e[0], e[1]], &[e[2], e[3]]]);
            let m = models::torus(&f).unwrap();
            let n = nielsen_average_invariant(&m.group, &m.endo).unwrap().value;
            let count = count_fixed_points_on_quotient(&m.group, &m.endo).unwrap();
            if n.is_zero() {
                prop_assert_eq!(count, FixedPointCount::Uncountable);
            } else {
                prop_assert_eq!(count, FixedPointCount::Finite(n));
            }
        }
    }
}
