use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::matrix::IntegerMatrix;
use super::smith::{smith_normal_form, SmithDecomposition};
use super::ExactLaError;

/// `Z^n / M Z^n` for a square nonsingular integer matrix `M`.
///
/// A vector `x` is sent to the residue vector `(U x)_i mod d_i`; residues in
/// lexicographic order index the classes, and `U⁻¹ r` is the representative.
#[derive(Clone, Debug)]
pub struct CokernelLattice {
    matrix: IntegerMatrix,
    snf: SmithDecomposition,
    moduli: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CokernelClasses {
    Finite(Vec<Vec<BigInt>>),
    Infinite,
}

impl CokernelLattice {
    /// `Ok(None)` when `M` is singular and the quotient is infinite.
    pub fn new(matrix: &IntegerMatrix) -> Result<Option<Self>, ExactLaError> {
        matrix.require_square()?;
        let snf = smith_normal_form(matrix);
        let moduli = snf.invariants();
        if moduli.iter().any(Zero::is_zero) {
            return Ok(None);
        }
        Ok(Some(CokernelLattice {
            matrix: matrix.clone(),
            snf,
            moduli,
        }))
    }

    pub fn dim(&self) -> usize {
        self.moduli.len()
    }

    pub fn matrix(&self) -> &IntegerMatrix {
        &self.matrix
    }

    pub fn moduli(&self) -> &[BigInt] {
        &self.moduli
    }

    /// Number of classes, `|det M|`.
    pub fn count(&self) -> BigInt {
        self.moduli.iter().product()
    }

    pub fn residue(&self, x: &[BigInt]) -> Vec<BigInt> {
        let y = self.snf.u.mul_vec(x).expect("residue of a vector of wrong length");
        y.iter()
            .zip(&self.moduli)
            .map(|(yi, d)| yi.mod_floor(d))
            .collect()
    }

    pub fn representative_of_residue(&self, r: &[BigInt]) -> Vec<BigInt> {
        self.snf.u_inv.mul_vec(r).expect("residue of wrong length")
    }

    /// Canonical representative of the class of `x`.
    pub fn reduce(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.representative_of_residue(&self.residue(x))
    }

    /// Position of the class of `x` in `representatives()`.
    pub fn class_index(&self, x: &[BigInt]) -> BigInt {
        self.residue(x)
            .iter()
            .zip(&self.moduli)
            .fold(BigInt::zero(), |acc, (r, d)| acc * d + r)
    }

    pub fn congruent(&self, a: &[BigInt], b: &[BigInt]) -> bool {
        self.residue(a) == self.residue(b)
    }

    /// Some `u` with `M u = w`, if `w` lies in the column lattice.
    pub fn preimage(&self, w: &[BigInt]) -> Option<Vec<BigInt>> {
        let y = self.snf.u.mul_vec(w).ok()?;
        let mut z = Vec::with_capacity(y.len());
        for (yi, d) in y.iter().zip(&self.moduli) {
            let (q, r) = yi.div_mod_floor(d);
            if !r.is_zero() {
                return None;
            }
            z.push(q);
        }
        Some(self.snf.v.mul_vec(&z).expect("smith shapes agree"))
    }

    /// All residue vectors, lexicographic (first coordinate slowest).
    pub fn residues(&self) -> Vec<Vec<BigInt>> {
        let mut out = vec![Vec::new()];
        for d in &self.moduli {
            let dn = d.to_u64().expect("cokernel too large to enumerate");
            let mut next = Vec::with_capacity(out.len() * dn as usize);
            for prefix in &out {
                for k in 0..dn {
                    let mut r = prefix.clone();
                    r.push(BigInt::from(k));
                    next.push(r);
                }
            }
            out = next;
        }
        out
    }

    pub fn representatives(&self) -> Vec<Vec<BigInt>> {
        self.residues()
            .iter()
            .map(|r| self.representative_of_residue(r))
            .collect()
    }

    /// True when the cokernel is trivial.
    pub fn is_trivial(&self) -> bool {
        self.moduli.iter().all(One::is_one)
    }
}

/// Classes of `Z^n` modulo the column lattice of a square `M`.
pub fn cokernel_classes(m: &IntegerMatrix) -> Result<CokernelClasses, ExactLaError> {
    Ok(match CokernelLattice::new(m)? {
        None => CokernelClasses::Infinite,
        Some(lat) => CokernelClasses::Finite(lat.representatives()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn basic_examples() {
        let m = IntegerMatrix::from_i64_rows(&[&[-1, 0], &[0, -2]]);
        match cokernel_classes(&m).unwrap() {
            CokernelClasses::Finite(reps) => assert_eq!(reps.len(), 2),
            CokernelClasses::Infinite => panic!("expected finite"),
        }
        assert_eq!(
            cokernel_classes(&IntegerMatrix::zeros(1, 1)).unwrap(),
            CokernelClasses::Infinite
        );
        assert_eq!(
            cokernel_classes(&IntegerMatrix::identity(2)).unwrap(),
            CokernelClasses::Finite(vec![ints(&[0, 0])])
        );
        assert!(cokernel_classes(&IntegerMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn preimage_and_reduce() {
        let m = IntegerMatrix::from_i64_rows(&[&[2, 1], &[0, 3]]);
        let lat = CokernelLattice::new(&m).unwrap().unwrap();
        assert_eq!(lat.count(), BigInt::from(6));
        let w = m.mul_vec(&ints(&[4, -7])).unwrap();
        let u = lat.preimage(&w).unwrap();
        assert_eq!(m.mul_vec(&u).unwrap(), w);
        assert!(lat.preimage(&ints(&[1, 0])).is_none());
        let x = ints(&[5, 11]);
        let r = lat.reduce(&x);
        let diff: Vec<BigInt> = x.iter().zip(&r).map(|(a, b)| a - b).collect();
        assert!(lat.preimage(&diff).is_some());
        let reps = lat.representatives();
        for (i, rep) in reps.iter().enumerate() {
            assert_eq!(lat.class_index(rep), BigInt::from(i));
        }
    }
}
