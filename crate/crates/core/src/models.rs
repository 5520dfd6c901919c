//! Ready-made groups and endomorphisms: tori, the Klein bottle, a 6-dimensional
//! solvmanifold family with a twisting matrix, and a Heisenberg nilmanifold in
//! polynomial coordinates.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::canonical::{CanonicalMap, Filtration};
use crate::exactla::{IntegerMatrix, RationalMatrix};
use crate::group::{EndoSpec, GroupError, GroupSpec, SubgroupWords, Word};
use crate::qpoly::{rat, MultiPoly};

/// A group together with one endomorphism of it.
#[derive(Clone, Debug)]
pub struct Model {
    pub group: GroupSpec,
    pub endo: EndoSpec,
}

/// Affine canonical map from integer blocks and shifts.
pub fn affine_map(filtration: &Filtration, blocks: &[&[&[i64]]], shifts: &[&[i64]]) -> CanonicalMap {
    let blocks: Vec<RationalMatrix> = blocks.iter().map(|b| RationalMatrix::from_integer_rows(b)).collect();
    let shifts: Vec<Vec<_>> = shifts.iter().map(|s| s.iter().map(|&v| rat(v)).collect()).collect();
    CanonicalMap::block_affine(filtration, &blocks, &shifts).expect("well-shaped affine data")
}

fn affine_from_matrices(filtration: &Filtration, blocks: &[IntegerMatrix], shifts: &[Vec<i64>]) -> CanonicalMap {
    let blocks: Vec<RationalMatrix> = blocks.iter().map(IntegerMatrix::to_rational).collect();
    let shifts: Vec<Vec<_>> = shifts.iter().map(|s| s.iter().map(|&v| rat(v)).collect()).collect();
    CanonicalMap::block_affine(filtration, &blocks, &shifts).expect("well-shaped affine data")
}

fn unit(n: usize, j: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[j] = 1;
    v
}

/// Word `∏_i g_{offset+i}^{column_i}`.
fn column_word(m: &IntegerMatrix, col: usize, offset: usize) -> Word {
    (0..m.rows())
        .filter_map(|i| {
            let e = m.get(i, col).to_i64().expect("small entries");
            (e != 0).then_some((offset + i, e))
        })
        .collect()
}

/// `Z^n` acting on `R^n` by translations, with the endomorphism `F`.
pub fn torus(f: &IntegerMatrix) -> Result<Model, GroupError> {
    let n = f.rows();
    let filt = Filtration::new(vec![n])?;
    let gens: Vec<(String, CanonicalMap)> = (0..n)
        .map(|j| {
            let name = format!("e{}", j + 1);
            (name, affine_from_matrices(&filt, &[IntegerMatrix::identity(n)], &[unit(n, j)]))
        })
        .collect();
    let lattice = SubgroupWords {
        name: "lattice".into(),
        basis: vec![(0..n).map(|j| vec![(j, 1)]).collect()],
        cosets: vec![],
    };
    let group = GroupSpec::new(&filt, gens, lattice, None, None)?;
    let lift = affine_from_matrices(&filt, std::slice::from_ref(f), &[vec![0; n]]);
    let images: Vec<Word> = (0..n).map(|j| column_word(f, j, 0)).collect();
    let endo = EndoSpec::from_words(&group, lift, &images)?;
    Ok(Model { group, endo })
}

/// Klein bottle group `⟨z, t | t z t⁻¹ = z⁻¹⟩` with `φ(z) = z^a`, `φ(t) = t^c`, `c` odd.
pub fn klein_bottle(a: i64, c: i64) -> Result<Model, GroupError> {
    let filt = Filtration::new(vec![1, 1])?;
    let z = affine_map(&filt, &[&[&[1]], &[&[1]]], &[&[1], &[0]]);
    let t = affine_map(&filt, &[&[&[-1]], &[&[1]]], &[&[0], &[1]]);
    let basis = vec![vec![vec![(0, 1)]], vec![vec![(1, 2)]]];
    let cosets = vec![vec![], vec![(1, 1)]];
    let lattice = SubgroupWords {
        name: "lattice".into(),
        basis: basis.clone(),
        cosets: cosets.clone(),
    };
    let k = SubgroupWords {
        name: "K".into(),
        basis,
        cosets,
    };
    let group = GroupSpec::new(&filt, vec![("z".into(), z), ("t".into(), t)], lattice, Some(k.clone()), Some(k))?;
    let lift = affine_map(&filt, &[&[&[a]], &[&[c]]], &[&[0], &[0]]);
    let endo = EndoSpec::from_words(&group, lift, &[vec![(0, a)], vec![(1, c)]])?;
    Ok(Model { group, endo })
}

/// The 5×5 twisting matrix of the solvmanifold family.
pub fn twist_matrix() -> IntegerMatrix {
    IntegerMatrix::from_i64_rows(&[
        &[-1, 0, 0, 0, 0],
        &[0, 0, 1, 0, 0],
        &[0, 0, 0, 1, 0],
        &[0, 0, 0, 0, 1],
        &[0, -1, 1, 1, 1],
    ])
}

/// Linear part of the family's endomorphism on `Z^5`; satisfies `B A = A⁻¹ B`.
pub fn flip_matrix(k: i64) -> IntegerMatrix {
    IntegerMatrix::from_i64_rows(&[
        &[k, 0, 0, 0, 0],
        &[0, -1, 1, 1, 0],
        &[0, 0, 0, -1, 1],
        &[0, 0, -1, 1, 0],
        &[0, -1, 1, 0, 0],
    ])
}

/// `Z^5 ⋊_A Z` acting by `(x1, x2) ↦ (x1 + z1, A^{z1} x2 + z2)`, endomorphism
/// `(z2, z1) ↦ (B_k z2, -z1)` with lift `(x1, x2) ↦ (-x1, B_k x2)`.
pub fn big_example(k: i64) -> Result<Model, GroupError> {
    let filt = Filtration::new(vec![1, 5])?;
    let a = twist_matrix();
    let b = flip_matrix(k);
    let one = IntegerMatrix::identity(1);
    let mut gens = vec![("t".to_string(), affine_from_matrices(&filt, &[one.clone(), a], &[vec![1], vec![0; 5]]))];
    for j in 0..5 {
        gens.push((
            format!("e{}", j + 1),
            affine_from_matrices(&filt, &[one.clone(), IntegerMatrix::identity(5)], &[vec![0], unit(5, j)]),
        ));
    }
    let lower: Vec<Word> = (1..=5).map(|j| vec![(j, 1)]).collect();
    let lattice = SubgroupWords {
        name: "lattice".into(),
        basis: vec![vec![vec![(0, 1)]], lower.clone()],
        cosets: vec![],
    };
    let k_sub = SubgroupWords {
        name: "K".into(),
        basis: vec![vec![vec![(0, 2)]], lower],
        cosets: vec![vec![], vec![(0, 1)]],
    };
    let group = GroupSpec::new(&filt, gens, lattice, Some(k_sub.clone()), Some(k_sub))?;
    let lift = affine_from_matrices(&filt, &[IntegerMatrix::from_i64_rows(&[&[-1]]), b.clone()], &[vec![0], vec![0; 5]]);
    let mut images = vec![vec![(0, -1)]];
    images.extend((0..5).map(|j| column_word(&b, j, 1)));
    let endo = EndoSpec::from_words(&group, lift, &images)?;
    Ok(Model { group, endo })
}

/// Coordinate change `(x1, x2) ↦ (x1, x2 + x1² e_2)` on the 6-dimensional family.
pub fn quadratic_shear() -> CanonicalMap {
    let filt = Filtration::new(vec![1, 5]).expect("valid");
    let mut comps: Vec<MultiPoly> = (0..6).map(|i| MultiPoly::var(6, i)).collect();
    comps[2] = comps[2].add(&MultiPoly::var(6, 0).pow(2)).expect("same arity");
    CanonicalMap::from_components(&filt, comps).expect("canonical")
}

/// [`big_example`] written in the polynomial coordinates of [`quadratic_shear`].
pub fn big_example_polymap(k: i64) -> Result<Model, GroupError> {
    let m = big_example(k)?;
    let h = quadratic_shear();
    let group = m.group.conjugated(&h)?;
    let endo = m.endo.conjugated(&group, &h)?;
    Ok(Model { group, endo })
}

/// 3-dimensional Heisenberg group in coordinates where the generator `x` has a
/// quadratic tail, with `φ(x) = x^a`, `φ(y) = y^b`, `φ(c) = c^{ab}` and a cubic lift.
pub fn heisenberg(a: i64, b: i64) -> Result<Model, GroupError> {
    let filt = Filtration::new(vec![2, 1])?;
    let v = |i| MultiPoly::var(3, i);
    let k = |c: i64| MultiPoly::constant(3, rat(c));
    let add = |p: MultiPoly, q: MultiPoly| p.add(&q).expect("same arity");
    let x = CanonicalMap::from_components(
        &filt,
        vec![
            add(v(0), k(1)),
            v(1),
            add(add(add(add(v(2), v(1)), v(0).pow(2).scale(&rat(3))), v(0).scale(&rat(3))), k(1)),
        ],
    )
    .expect("arity");
    let y = CanonicalMap::from_components(&filt, vec![v(0), add(v(1), k(1)), v(2)]).expect("arity");
    let c = CanonicalMap::from_components(&filt, vec![v(0), v(1), add(v(2), k(1))]).expect("arity");
    let lattice = SubgroupWords {
        name: "lattice".into(),
        basis: vec![vec![vec![(0, 1)], vec![(1, 1)]], vec![vec![(2, 1)]]],
        cosets: vec![],
    };
    let group = GroupSpec::new(&filt, vec![("x".into(), x), ("y".into(), y), ("c".into(), c)], lattice, None, None)?;
    let lift = CanonicalMap::from_components(
        &filt,
        vec![
            v(0).scale(&rat(a)),
            v(1).scale(&rat(b)),
            add(v(2).scale(&rat(a * b)), v(0).pow(3).scale(&rat(a * a * a - a * b))),
        ],
    )
    .expect("arity");
    let endo = EndoSpec::from_words(&group, lift, &[vec![(0, a)], vec![(1, b)], vec![(2, a * b)]])?;
    Ok(Model { group, endo })
}

/// The circle `R/Z` with `x ↦ d x`.
pub fn circle(d: i64) -> Result<Model, GroupError> {
    torus(&IntegerMatrix::from_i64_rows(&[&[d]]))
}

pub fn bigints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::compose_maps;

    #[test]
    fn models_build() {
        assert!(torus(&IntegerMatrix::from_i64_rows(&[&[2, 1], &[0, 3]])).is_ok());
        assert!(klein_bottle(2, 3).is_ok());
        assert!(klein_bottle(-1, -1).is_ok());
        for k in -3..=3 {
            assert!(big_example(k).is_ok(), "k = {k}");
        }
        assert!(heisenberg(2, 3).is_ok());
        assert!(big_example_polymap(2).is_ok());
        assert!(circle(2).is_ok());
    }

    #[test]
    fn klein_rejects_even_c() {
        assert!(matches!(klein_bottle(2, 2), Err(GroupError::NotEquivariant(_))));
    }

    #[test]
    fn flip_relation() {
        let a = twist_matrix();
        for k in -2..=2 {
            let b = flip_matrix(k);
            assert_eq!(&b * &a, &a.inverse_unimodular().unwrap() * &b);
        }
    }

    #[test]
    fn heisenberg_commutator() {
        let m = heisenberg(2, 3).unwrap();
        let g = &m.group;
        let xy = g.evaluate(&vec![(0, 1), (1, 1)]).unwrap();
        let cyx = g.evaluate(&vec![(2, 1), (1, 1), (0, 1)]).unwrap();
        assert_eq!(xy, cyx);
        let _ = compose_maps(&xy, &cyx).unwrap();
    }
}
