use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::matrix::IntegerMatrix;

/// `U * M * V = D` with `U`, `V` unimodular and `D` diagonal with `d_1 | d_2 | ...`.
/// `U⁻¹` is kept alongside since cokernel representatives are read off through it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub u: IntegerMatrix,
    pub d: IntegerMatrix,
    pub v: IntegerMatrix,
    pub u_inv: IntegerMatrix,
}

impl SmithDecomposition {
    /// Diagonal entries of `D` (length `min(rows, cols)`), all non-negative.
    pub fn invariants(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d.get(i, i).clone())
            .collect()
    }
}

pub fn smith_normal_form(m: &IntegerMatrix) -> SmithDecomposition {
    let (r, c) = (m.rows(), m.cols());
    let mut d = m.clone();
    let mut u = IntegerMatrix::identity(r);
    let mut u_inv = IntegerMatrix::identity(r);
    let mut v = IntegerMatrix::identity(c);

    // Row op `row_t += f * row_s` on D is mirrored on U; on U⁻¹ it becomes `col_s -= f * col_t`.
    let row_add = |d: &mut IntegerMatrix, u: &mut IntegerMatrix, ui: &mut IntegerMatrix, t: usize, s: usize, f: &BigInt| {
        d.add_row_multiple(t, s, f);
        u.add_row_multiple(t, s, f);
        ui.add_col_multiple(s, t, &-f.clone());
    };

    for t in 0..r.min(c) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    let e = d.get(i, j);
                    if e.is_zero() {
                        continue;
                    }
                    if best.is_none_or(|(bi, bj)| e.abs() < d.get(bi, bj).abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return SmithDecomposition { u, d, v, u_inv };
            };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            u_inv.swap_cols(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let pivot = d.get(t, t).clone();
            let mut clean = true;
            for i in t + 1..r {
                let q = d.get(i, t).div_floor(&pivot);
                if !q.is_zero() {
                    row_add(&mut d, &mut u, &mut u_inv, i, t, &-q);
                }
                if !d.get(i, t).is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..c {
                let q = d.get(t, j).div_floor(&pivot);
                if !q.is_zero() {
                    d.add_col_multiple(j, t, &-q.clone());
                    v.add_col_multiple(j, t, &-q);
                }
                if !d.get(t, j).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            let offender = (t + 1..r).find(|&i| {
                (t + 1..c).any(|j| !d.get(i, j).is_multiple_of(&pivot))
            });
            match offender {
                Some(i) => row_add(&mut d, &mut u, &mut u_inv, t, i, &BigInt::from(1)),
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
    }
    SmithDecomposition { u, d, v, u_inv }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn check(m: &IntegerMatrix) -> SmithDecomposition {
        let s = smith_normal_form(m);
        assert_eq!(&(&s.u * m) * &s.v, s.d);
        assert!(s.u.det().unwrap().abs().is_one());
        assert!(s.v.det().unwrap().abs().is_one());
        assert!((&s.u * &s.u_inv).is_identity());
        for i in 0..s.d.rows() {
            for j in 0..s.d.cols() {
                if i != j {
                    assert!(s.d.get(i, j).is_zero());
                }
            }
        }
        let inv = s.invariants();
        for w in inv.windows(2) {
            if w[0].is_zero() {
                assert!(w[1].is_zero());
            } else {
                assert!(w[1].is_multiple_of(&w[0]));
            }
        }
        s
    }

    #[test]
    fn diag_two_three() {
        let s = check(&IntegerMatrix::from_i64_rows(&[&[2, 0], &[0, 3]]));
        assert_eq!(s.invariants(), vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn identity_and_zero() {
        let s = check(&IntegerMatrix::identity(3));
        assert!(s.d.is_identity());
        let s = check(&IntegerMatrix::zeros(1, 1));
        assert!(s.d.is_zero());
    }

    #[test]
    fn rectangular_and_negative() {
        check(&IntegerMatrix::from_i64_rows(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]));
        let s = check(&IntegerMatrix::from_i64_rows(&[&[0, -4, 6], &[2, 0, 8]]));
        assert_eq!(s.invariants(), vec![BigInt::from(2), BigInt::from(2)]);
        check(&IntegerMatrix::from_i64_rows(&[&[-3], &[6], &[9]]));
    }
}
