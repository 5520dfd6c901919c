//! Exact linear algebra over the integers and rationals.
//!
//! Dense matrices with arbitrary-precision entries, univariate polynomials,
//! Smith normal form, integer cokernels and cyclotomic factor detection.

mod cokernel;
mod cyclotomic;
mod matrix;
mod poly;
mod smith;

pub use cokernel::{cokernel_classes, CokernelClasses, CokernelLattice};
pub use cyclotomic::{
    all_roots_real_positive, cyclotomic_factor_scan, cyclotomic_polynomial, euler_phi,
    nontrivial_root_of_unity_orders, orders_with_phi_at_most, positive_real_root_count,
    root_of_unity_exponent, vanishes_at_primitive_root, x_minus,
};
pub use matrix::{IntegerMatrix, Matrix, RationalMatrix, Scalar};
pub use poly::{IntPolynomial, Poly, RatPolynomial};
pub use smith::{smith_normal_form, SmithDecomposition};

use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactLaError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {left:?} against {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("expected {expected} entries, found {found}")]
    BadLength { expected: usize, found: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not unimodular")]
    NotUnimodular,
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("divisor leading coefficient is not a unit")]
    NotMonic,
    #[error("exponent too large")]
    ExponentTooLarge,
}

/// `det(M)` for a rational matrix.
pub fn det(m: &RationalMatrix) -> Result<BigRational, ExactLaError> {
    m.det()
}

/// Monic `det(xI - M)`.
pub fn char_poly(m: &IntegerMatrix) -> Result<IntPolynomial, ExactLaError> {
    m.char_poly()
}

/// `det(I - M)` of an integer matrix.
pub fn det_identity_minus(m: &IntegerMatrix) -> Result<BigInt, ExactLaError> {
    m.identity_minus()?.det()
}


#[cfg(test)]
mod tests {
    use super::fixtures::{matrix_a, matrix_b};
    use super::*;
    use num_traits::{One, Signed, Zero};
    use proptest::prelude::*;

    fn cofactor_det(m: &[Vec<i64>]) -> BigInt {
        let n = m.len();
        if n == 0 {
            return BigInt::one();
        }
        let mut total = BigInt::zero();
        for j in 0..n {
            if m[0][j] == 0 {
                continue;
            }
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, &v)| v).collect())
                .collect();
            let term = BigInt::from(m[0][j]) * cofactor_det(&minor);
            if j % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    fn to_matrix(rows: &[Vec<i64>]) -> IntegerMatrix {
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        IntegerMatrix::from_i64_rows(&refs)
    }

    /// `det(xI - M)` evaluated pointwise by cofactor expansion, interpolated at 0..=n.
    fn char_poly_by_evaluation(rows: &[Vec<i64>]) -> Vec<BigRational> {
        let n = rows.len();
        let xs: Vec<i64> = (0..=n as i64).collect();
        let ys: Vec<BigInt> = xs
            .iter()
            .map(|&x| {
                let shifted: Vec<Vec<i64>> = (0..n)
                    .map(|i| (0..n).map(|j| if i == j { x - rows[i][j] } else { -rows[i][j] }).collect())
                    .collect();
                cofactor_det(&shifted)
            })
            .collect();
        // Lagrange interpolation
        let mut coeffs = vec![BigRational::zero(); n + 1];
        for (i, &xi) in xs.iter().enumerate() {
            let mut basis = vec![BigRational::one()];
            let mut denom = BigRational::one();
            for (j, &xj) in xs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut next = vec![BigRational::zero(); basis.len() + 1];
                for (k, b) in basis.iter().enumerate() {
                    next[k + 1] += b;
                    next[k] -= b * BigRational::from_integer(BigInt::from(xj));
                }
                basis = next;
                denom *= BigRational::from_integer(BigInt::from(xi - xj));
            }
            let scale = BigRational::from_integer(ys[i].clone()) / denom;
            for (k, b) in basis.iter().enumerate() {
                coeffs[k] += b * &scale;
            }
        }
        coeffs
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(det_identity_minus(&matrix_b(2)).unwrap(), BigInt::from(3));
        assert_eq!(IntegerMatrix::identity(4).det().unwrap(), BigInt::one());
        assert_eq!(IntegerMatrix::zeros(3, 3).det().unwrap(), BigInt::zero());
        assert_eq!(det(&RationalMatrix::identity(3)).unwrap(), BigRational::one());
        assert!(IntegerMatrix::zeros(2, 3).det().is_err());
        for k in -3..=3 {
            assert_eq!(
                det_identity_minus(&matrix_b(k)).unwrap(),
                BigInt::from(3 * (k - 1)),
                "k = {k}"
            );
        }
    }

    #[test]
    fn characteristic_polynomial_examples() {
        let companion = IntegerMatrix::from_i64_rows(&[
            &[0, 1, 0, 0],
            &[0, 0, 1, 0],
            &[0, 0, 0, 1],
            &[-1, 1, 1, 1],
        ]);
        let quartic = IntPolynomial::from_i64(&[1, -1, -1, -1, 1]);
        assert_eq!(char_poly(&companion).unwrap(), quartic);
        assert_eq!(
            char_poly(&IntegerMatrix::identity(2)).unwrap(),
            &x_minus(1) * &x_minus(1)
        );
        assert_eq!(char_poly(&matrix_a()).unwrap(), &x_minus(-1) * &quartic);
        assert!(char_poly(&IntegerMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn rational_inverse_and_solve() {
        let m = RationalMatrix::from_integer_rows(&[&[2, 1], &[1, 1]]);
        let inv = m.inverse().unwrap();
        assert!((&m * &inv).is_identity());
        let singular = RationalMatrix::from_integer_rows(&[&[1, 2], &[2, 4]]);
        assert_eq!(singular.inverse(), Err(ExactLaError::Singular));
        assert_eq!(singular.rank(), 1);
        let k = singular.nullspace();
        assert_eq!(k.len(), 1);
        assert!(singular.mul_vec(&k[0]).unwrap().iter().all(Zero::is_zero));
        let b = vec![BigRational::one(), BigRational::one()];
        assert_eq!(singular.solve(&b).unwrap(), None);
    }

    fn small_matrix(max_n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1..=max_n).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-3i64..=3, n), n))
    }

    proptest! {
        #[test]
        fn bareiss_matches_cofactor(rows in small_matrix(4)) {
            let m = to_matrix(&rows);
            prop_assert_eq!(m.det().unwrap(), cofactor_det(&rows));
            prop_assert_eq!(m.to_rational().det().unwrap(), BigRational::from_integer(cofactor_det(&rows)));
        }

        #[test]
        fn berkowitz_matches_interpolation(rows in small_matrix(4)) {
            let p = to_matrix(&rows).char_poly().unwrap();
            let expected = char_poly_by_evaluation(&rows);
            let got: Vec<BigRational> = (0..=rows.len()).map(|i| BigRational::from_integer(p.coeff(i))).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn smith_invariants_hold(rows in small_matrix(4)) {
            let m = to_matrix(&rows);
            let s = smith_normal_form(&m);
            prop_assert_eq!(&(&s.u * &m) * &s.v, s.d.clone());
            prop_assert!(s.u.det().unwrap().abs().is_one());
            prop_assert!(s.v.det().unwrap().abs().is_one());
            let inv = s.invariants();
            for w in inv.windows(2) {
                let divides = if w[0].is_zero() { w[1].is_zero() } else { (&w[1] % &w[0]).is_zero() };
                prop_assert!(divides);
            }
            let prod: BigInt = inv.iter().product();
            prop_assert_eq!(prod, m.det().unwrap().abs());
        }

        #[test]
        fn cokernel_reps_pairwise_incongruent(rows in small_matrix(3)) {
            let m = to_matrix(&rows);
            let d = m.det().unwrap();
            prop_assume!(!d.is_zero() && d.abs() <= BigInt::from(60));
            let CokernelClasses::Finite(reps) = cokernel_classes(&m).unwrap() else {
                return Err(TestCaseError::fail("nonsingular matrix gave infinite cokernel"));
            };
            prop_assert_eq!(BigInt::from(reps.len()), d.abs());
            // lattice membership via the rational inverse, independent of the Smith form
            let inv = m.to_rational().inverse().unwrap();
            for i in 0..reps.len() {
                for j in i + 1..reps.len() {
                    let diff: Vec<BigRational> = reps[i].iter().zip(&reps[j])
                        .map(|(a, b)| BigRational::from_integer(a - b)).collect();
                    let pre = inv.mul_vec(&diff).unwrap();
                    prop_assert!(!pre.iter().all(|c| c.is_integer()));
                }
            }
        }

        #[test]
        fn cyclotomic_scan_matches_substitution(
            orders in prop::collection::vec(1u64..=12, 0..3),
            extra in prop::collection::vec(-3i64..=3, 1..4),
        ) {
            // product of cyclotomics times a random factor (often non-cyclotomic)
            let mut p = IntPolynomial::from_i64(&extra);
            if p.is_zero() || p.degree() == Some(0) {
                p = IntPolynomial::from_i64(&[2, 1]);
            }
            for &d in &orders {
                p = &p * &cyclotomic_polynomial(d);
            }
            let scanned = cyclotomic_factor_scan(&p, true).unwrap();
            for d in 1..=12u64 {
                let numeric = complex_root_residual(&p, d) < 1e-7;
                prop_assert_eq!(scanned.contains(&d), numeric, "order {}", d);
            }
        }
    }

    /// |p(e^{2πi/d})| in floating point.
    fn complex_root_residual(p: &IntPolynomial, d: u64) -> f64 {
        use num_traits::ToPrimitive;
        let theta = 2.0 * std::f64::consts::PI / d as f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (k, c) in p.coeffs().iter().enumerate() {
            let c = c.to_f64().unwrap();
            re += c * (theta * k as f64).cos();
            im += c * (theta * k as f64).sin();
        }
        (re * re + im * im).sqrt()
    }
}
