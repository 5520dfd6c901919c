//! Groups acting by canonical maps, their free-abelian filtrations, and endomorphisms.
//!
//! A group is given by named generators (concrete maps). A [`Lattice`] is a
//! polycyclic subgroup with one basis per level: a level-`i` basis element acts
//! trivially below level `i` and as a translation on level `i`, so every member
//! has a unique normal form `e_1^{u_1} e_2^{u_2} ... e_n^{u_n}` found by sifting.
//! The finite quotient by the lattice is described by coset representatives.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::canonical::{
    compose_maps, conjugate_map, invert_map, power_map, to_integer_vector, validate_canonical, CanonicalError, CanonicalMap,
    Filtration, Violation,
};
use crate::exactla::{IntegerMatrix, RationalMatrix};
use crate::qpoly::Rat;

/// Product of generator powers, left to right: `(index, exponent)`.
pub type Word = Vec<(usize, i64)>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error("{what}: {violation}")]
    NotCanonical { what: String, violation: Violation },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("duplicate generator `{0}`")]
    DuplicateGenerator(String),
    #[error("{what}, level {level}: {reason}")]
    Basis { what: String, level: usize, reason: String },
    #[error("{what}: not closed, {detail}")]
    NotClosed { what: String, detail: String },
    #[error("{what}: first coset representative must be the identity")]
    FirstCosetNotIdentity { what: String },
    #[error("{what}: coset representatives {first} and {second} lie in the same coset")]
    CosetsOverlap { what: String, first: usize, second: usize },
    #[error("{what}: cosets are not closed under multiplication by generator `{generator}`")]
    CosetsIncomplete { what: String, generator: String },
    #[error("{what} is not a subgroup of the lattice, {detail}")]
    NotInLattice { what: String, detail: String },
    #[error("endomorphism: lift is not equivariant for generator `{0}`")]
    NotEquivariant(String),
    #[error("endomorphism: expected {expected} generator images, found {found}")]
    ImageCount { expected: usize, found: usize },
    #[error("endomorphism does not map {0} into itself")]
    NotInvariant(String),
    #[error("element is not in {0}")]
    NotMember(String),
    #[error("coordinates too large to exponentiate")]
    Overflow,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub name: String,
    pub map: CanonicalMap,
    pub inverse: CanonicalMap,
}

/// A group element remembered together with the word that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    pub word: Word,
    pub map: CanonicalMap,
    pub inverse: CanonicalMap,
}

impl Element {
    pub fn from_map(word: Word, map: CanonicalMap) -> Result<Self, GroupError> {
        let inverse = invert_map(&map)?;
        Ok(Element { word, map, inverse })
    }
}

/// Polycyclic subgroup with one translation basis per level.
#[derive(Clone, Debug)]
pub struct Lattice {
    name: String,
    filtration: Filtration,
    basis: Vec<Vec<Element>>,
    translations: Vec<RationalMatrix>,
    translations_inv: Vec<RationalMatrix>,
}

impl Lattice {
    pub fn new(name: &str, filtration: &Filtration, basis: Vec<Vec<Element>>) -> Result<Self, GroupError> {
        let err = |level: usize, reason: String| GroupError::Basis {
            what: name.to_string(),
            level,
            reason,
        };
        if basis.len() != filtration.num_levels() {
            return Err(err(basis.len().min(filtration.num_levels()) + 1, format!("expected {} levels", filtration.num_levels())));
        }
        let mut translations = Vec::new();
        let mut translations_inv = Vec::new();
        for level in filtration.levels() {
            let k = filtration.level_dim(level);
            let elems = &basis[level - 1];
            if elems.len() != k {
                return Err(err(level, format!("needs {k} basis elements, found {}", elems.len())));
            }
            let mut cols = Vec::with_capacity(k);
            for (l, e) in elems.iter().enumerate() {
                if !e.map.trivial_below(level) {
                    return Err(err(level, format!("basis element {} moves a lower level", l + 1)));
                }
                let Some(t) = e.map.level_translation(level) else {
                    return Err(err(level, format!("basis element {} is not a translation on its level", l + 1)));
                };
                cols.push(t);
            }
            let m = RationalMatrix::from_columns(&cols).expect("equal lengths");
            let inv = m
                .inverse()
                .map_err(|_| err(level, "basis translations are linearly dependent".to_string()))?;
            translations.push(m);
            translations_inv.push(inv);
        }
        Ok(Lattice {
            name: name.to_string(),
            filtration: filtration.clone(),
            basis,
            translations,
            translations_inv,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn basis(&self, level: usize) -> &[Element] {
        &self.basis[level - 1]
    }

    pub fn all_basis(&self) -> impl Iterator<Item = (usize, &Element)> {
        self.basis
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.iter().map(move |e| (i + 1, e)))
    }

    /// Columns are the level translations of the basis elements.
    pub fn translation_matrix(&self, level: usize) -> &RationalMatrix {
        &self.translations[level - 1]
    }

    /// Lattice coordinates of a level-`level` translation vector, if integral.
    pub fn coordinates(&self, level: usize, translation: &[Rat]) -> Option<Vec<BigInt>> {
        let u = self.translations_inv[level - 1].mul_vec(translation).ok()?;
        to_integer_vector(&u)
    }

    /// Level coordinates of an element that acts trivially below `level`.
    pub fn level_coordinates(&self, level: usize, g: &CanonicalMap) -> Option<Vec<BigInt>> {
        if !g.trivial_below(level) {
            return None;
        }
        self.coordinates(level, &g.level_translation(level)?)
    }

    /// `∏_l b_l^{u_l}` over the basis of one level.
    pub fn level_element(&self, level: usize, u: &[BigInt]) -> Result<CanonicalMap, GroupError> {
        let mut out = CanonicalMap::identity(&self.filtration);
        for (b, e) in self.basis(level).iter().zip(u) {
            let e = e.to_i64().ok_or(GroupError::Overflow)?;
            if e == 0 {
                continue;
            }
            let p = if e > 0 { power_map(&b.map, e)? } else { power_map(&b.inverse, -e)? };
            out = compose_maps(&out, &p)?;
        }
        Ok(out)
    }

    /// Inverse of [`Lattice::level_element`].
    pub fn level_element_inverse(&self, level: usize, u: &[BigInt]) -> Result<CanonicalMap, GroupError> {
        let mut out = CanonicalMap::identity(&self.filtration);
        for (b, e) in self.basis(level).iter().zip(u).rev() {
            let e = e.to_i64().ok_or(GroupError::Overflow)?;
            if e == 0 {
                continue;
            }
            let p = if e > 0 { power_map(&b.inverse, e)? } else { power_map(&b.map, -e)? };
            out = compose_maps(&out, &p)?;
        }
        Ok(out)
    }

    /// Normal-form coordinates, or `None` when `g` is not in the lattice.
    pub fn sift(&self, g: &CanonicalMap) -> Result<Option<Vec<Vec<BigInt>>>, GroupError> {
        let mut cur = g.clone();
        let mut coords = Vec::with_capacity(self.filtration.num_levels());
        for level in self.filtration.levels() {
            let Some(u) = self.level_coordinates(level, &cur) else {
                return Ok(None);
            };
            if u.iter().any(|x| !x.is_zero()) {
                let inv = self.level_element_inverse(level, &u)?;
                cur = compose_maps(&inv, &cur)?;
            }
            coords.push(u);
        }
        Ok(cur.is_identity().then_some(coords))
    }

    pub fn contains(&self, g: &CanonicalMap) -> Result<bool, GroupError> {
        Ok(self.sift(g)?.is_some())
    }

    pub fn element_from_coordinates(&self, coords: &[Vec<BigInt>]) -> Result<CanonicalMap, GroupError> {
        let mut out = CanonicalMap::identity(&self.filtration);
        for (i, u) in coords.iter().enumerate() {
            out = compose_maps(&out, &self.level_element(i + 1, u)?)?;
        }
        Ok(out)
    }

    /// Checks that normal forms are closed under products, so sifting decides membership.
    pub fn check_closed(&self) -> Result<(), GroupError> {
        let elems: Vec<(usize, &Element)> = self.all_basis().collect();
        for &(li, a) in &elems {
            for &(lj, b) in &elems {
                if lj < li {
                    continue;
                }
                for (x, x_inv) in [(&a.map, &a.inverse), (&a.inverse, &a.map)] {
                    let c = compose_maps(&compose_maps(x, &b.map)?, x_inv)?;
                    if !self.contains(&c)? {
                        return Err(GroupError::NotClosed {
                            what: self.name.clone(),
                            detail: format!("conjugate of a level-{lj} basis element by a level-{li} one escapes"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Index of this lattice in `outer`, when every basis element of `self` lies in `outer`.
    pub fn index_in(&self, outer: &Lattice) -> Result<BigInt, GroupError> {
        let mut index = BigInt::from(1);
        for level in self.filtration.levels() {
            let cols: Vec<Vec<BigInt>> = self
                .basis(level)
                .iter()
                .map(|b| {
                    outer.level_coordinates(level, &b.map).ok_or_else(|| GroupError::NotInLattice {
                        what: self.name.clone(),
                        detail: format!("a level-{level} basis element has no level-{level} coordinates in {}", outer.name),
                    })
                })
                .collect::<Result<_, _>>()?;
            let m = IntegerMatrix::from_columns(&cols).expect("equal lengths");
            index *= BigInt::from(m.det().expect("square").magnitude().clone());
        }
        for (_, b) in self.all_basis() {
            if !outer.contains(&b.map)? {
                return Err(GroupError::NotInLattice {
                    what: self.name.clone(),
                    detail: format!("a basis element is not in {}", outer.name),
                });
            }
        }
        Ok(index)
    }
}

/// A subgroup of finite index: a lattice plus representatives of its right cosets.
#[derive(Clone, Debug)]
pub struct Subgroup {
    pub lattice: Lattice,
    pub cosets: Vec<Element>,
}

impl Subgroup {
    pub fn name(&self) -> &str {
        self.lattice.name()
    }

    pub fn index(&self) -> usize {
        self.cosets.len()
    }

    /// `Some((j, coords))` with `g = e^{coords} · c_j`.
    pub fn locate(&self, g: &CanonicalMap) -> Result<Option<(usize, Vec<Vec<BigInt>>)>, GroupError> {
        for (j, c) in self.cosets.iter().enumerate() {
            let k = compose_maps(g, &c.inverse)?;
            if let Some(coords) = self.lattice.sift(&k)? {
                return Ok(Some((j, coords)));
            }
        }
        Ok(None)
    }

    fn validate(&self, generators: &[Generator]) -> Result<(), GroupError> {
        let what = self.name().to_string();
        self.lattice.check_closed()?;
        match self.cosets.first() {
            Some(c) if c.map.is_identity() => {}
            _ => return Err(GroupError::FirstCosetNotIdentity { what }),
        }
        for i in 0..self.cosets.len() {
            for j in i + 1..self.cosets.len() {
                let q = compose_maps(&self.cosets[i].map, &self.cosets[j].inverse)?;
                if self.lattice.contains(&q)? {
                    return Err(GroupError::CosetsOverlap {
                        what,
                        first: i + 1,
                        second: j + 1,
                    });
                }
            }
        }
        // right cosets are permuted by right multiplication, so closure covers the group
        for c in &self.cosets {
            for g in generators {
                for x in [&g.map, &g.inverse] {
                    if self.locate(&compose_maps(&c.map, x)?)?.is_none() {
                        return Err(GroupError::CosetsIncomplete {
                            what,
                            generator: g.name.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Group with a torsion-free lattice `Π_1` of finite index, optional averaging
/// subgroup `K` and optional net subgroup `K'`.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    filtration: Filtration,
    generators: Vec<Generator>,
    top: Subgroup,
    averaging: Option<Subgroup>,
    net: Option<Subgroup>,
    words: [Option<SubgroupWords>; 3],
}

/// Unvalidated pieces of a subgroup, given by words.
#[derive(Clone, Debug, Default)]
pub struct SubgroupWords {
    pub name: String,
    pub basis: Vec<Vec<Word>>,
    pub cosets: Vec<Word>,
}

impl GroupSpec {
    /// Validates generators, lattice, cosets and optional subgroups.
    pub fn new(
        filtration: &Filtration,
        generators: Vec<(String, CanonicalMap)>,
        lattice: SubgroupWords,
        averaging: Option<SubgroupWords>,
        net: Option<SubgroupWords>,
    ) -> Result<Self, GroupError> {
        let mut gens = Vec::with_capacity(generators.len());
        let mut seen = BTreeMap::new();
        for (name, map) in generators {
            if seen.insert(name.clone(), ()).is_some() {
                return Err(GroupError::DuplicateGenerator(name));
            }
            if map.filtration() != filtration {
                return Err(CanonicalError::FiltrationMismatch {
                    left: filtration.block_dims().to_vec(),
                    right: map.filtration().block_dims().to_vec(),
                }
                .into());
            }
            validate_canonical(&map, true).map_err(|violation| GroupError::NotCanonical {
                what: format!("generator `{name}`"),
                violation,
            })?;
            let inverse = invert_map(&map)?;
            gens.push(Generator { name, map, inverse });
        }
        let words = [Some(lattice.clone()), averaging.clone(), net.clone()];
        let build = |words: &SubgroupWords| build_subgroup(filtration, &gens, words);
        let top = build(&lattice)?;
        top.validate(&gens)?;
        check_normal(&gens, &top.lattice)?;
        let mut spec = GroupSpec {
            filtration: filtration.clone(),
            generators: gens.clone(),
            top,
            averaging: None,
            net: None,
            words,
        };
        if let Some(words) = averaging {
            let k = build(&words)?;
            spec.check_finite_index(&k)?;
            k.validate(&gens)?;
            spec.averaging = Some(k);
        }
        if let Some(words) = net {
            let k = build(&words)?;
            spec.check_finite_index(&k)?;
            k.validate(&gens)?;
            spec.net = Some(k);
        }
        Ok(spec)
    }

    /// A subgroup's index must be the lattice index times the top index.
    fn check_finite_index(&self, k: &Subgroup) -> Result<(), GroupError> {
        let inner = k.lattice.index_in(&self.top.lattice)?;
        let expected = inner * BigInt::from(self.top.index());
        if expected != BigInt::from(k.index()) {
            return Err(GroupError::NotClosed {
                what: k.name().to_string(),
                detail: format!("index is {expected} but {} coset representatives were given", k.index()),
            });
        }
        Ok(())
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator_index(&self, name: &str) -> Result<usize, GroupError> {
        self.generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| GroupError::UnknownGenerator(name.to_string()))
    }

    /// The lattice `Π_1` and representatives of `Π/Π_1`.
    pub fn top(&self) -> &Subgroup {
        &self.top
    }

    pub fn lattice(&self) -> &Lattice {
        &self.top.lattice
    }

    /// `K`, defaulting to the lattice itself.
    pub fn averaging(&self) -> &Subgroup {
        self.averaging.as_ref().unwrap_or(&self.top)
    }

    pub fn has_averaging(&self) -> bool {
        self.averaging.is_some()
    }

    pub fn net(&self) -> Option<&Subgroup> {
        self.net.as_ref()
    }

    /// The same group in coordinates moved by `h`: every generator becomes `h g h⁻¹`.
    pub fn conjugated(&self, h: &CanonicalMap) -> Result<Self, GroupError> {
        let gens = self
            .generators
            .iter()
            .map(|g| Ok((g.name.clone(), conjugate_map(h, &g.map)?)))
            .collect::<Result<Vec<_>, GroupError>>()?;
        let [lattice, averaging, net] = self.words.clone();
        GroupSpec::new(&self.filtration, gens, lattice.expect("lattice words"), averaging, net)
    }

    /// Builds and validates a further finite-index subgroup given by words.
    pub fn subgroup(&self, words: &SubgroupWords) -> Result<Subgroup, GroupError> {
        let k = build_subgroup(&self.filtration, &self.generators, words)?;
        self.check_finite_index(&k)?;
        k.validate(&self.generators)?;
        Ok(k)
    }

    pub fn check_normal(&self, sub: &Subgroup) -> Result<(), GroupError> {
        check_normal(&self.generators, &sub.lattice)
    }

    pub fn evaluate(&self, word: &Word) -> Result<CanonicalMap, GroupError> {
        eval_word(&self.filtration, word, |i, inverse| {
            let g = self.generators.get(i).ok_or_else(|| GroupError::UnknownGenerator(format!("#{i}")))?;
            Ok(if inverse { g.inverse.clone() } else { g.map.clone() })
        })
    }

    pub fn element(&self, word: &Word) -> Result<Element, GroupError> {
        Element::from_map(word.clone(), self.evaluate(word)?)
    }

    /// Human-readable word.
    pub fn word_string(&self, word: &Word) -> String {
        if word.is_empty() {
            return "e".to_string();
        }
        word.iter()
            .map(|&(i, e)| {
                let name = &self.generators[i].name;
                if e == 1 {
                    name.clone()
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn check_normal(generators: &[Generator], lattice: &Lattice) -> Result<(), GroupError> {
    for g in generators {
        for (_, b) in lattice.all_basis() {
            for (x, x_inv) in [(&g.map, &g.inverse), (&g.inverse, &g.map)] {
                let c = compose_maps(&compose_maps(x, &b.map)?, x_inv)?;
                if !lattice.contains(&c)? {
                    return Err(GroupError::NotClosed {
                        what: lattice.name().to_string(),
                        detail: format!("not normalised by generator `{}`", g.name),
                    });
                }
            }
        }
    }
    Ok(())
}


fn build_subgroup(filtration: &Filtration, generators: &[Generator], words: &SubgroupWords) -> Result<Subgroup, GroupError> {
    let element = |w: &Word| -> Result<Element, GroupError> {
        let map = eval_word(filtration, w, |i, inverse| {
            let g = generators.get(i).ok_or_else(|| GroupError::UnknownGenerator(format!("#{i}")))?;
            Ok(if inverse { g.inverse.clone() } else { g.map.clone() })
        })?;
        Element::from_map(w.clone(), map)
    };
    let basis = words
        .basis
        .iter()
        .map(|level| level.iter().map(&element).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let lattice = Lattice::new(&words.name, filtration, basis)?;
    let cosets = if words.cosets.is_empty() {
        vec![element(&Vec::new())?]
    } else {
        words.cosets.iter().map(&element).collect::<Result<_, _>>()?
    };
    Ok(Subgroup { lattice, cosets })
}

fn eval_word(
    filtration: &Filtration,
    word: &Word,
    mut gen: impl FnMut(usize, bool) -> Result<CanonicalMap, GroupError>,
) -> Result<CanonicalMap, GroupError> {
    let mut out = CanonicalMap::identity(filtration);
    for &(i, e) in word {
        if e == 0 {
            continue;
        }
        let base = gen(i, e < 0)?;
        out = compose_maps(&out, &power_map(&base, e.abs())?)?;
    }
    Ok(out)
}

/// Group endomorphism `φ` together with a lift `p` satisfying `p ∘ ρ(γ) = ρ(φ(γ)) ∘ p`.
#[derive(Clone, Debug)]
pub struct EndoSpec {
    lift: CanonicalMap,
    images: Vec<CanonicalMap>,
    image_inverses: Vec<CanonicalMap>,
}

impl EndoSpec {
    /// `images[j]` is `ρ(φ(s_j))` for generator `s_j`; equivariance is checked exactly.
    pub fn new(group: &GroupSpec, lift: CanonicalMap, images: Vec<CanonicalMap>) -> Result<Self, GroupError> {
        if images.len() != group.generators.len() {
            return Err(GroupError::ImageCount {
                expected: group.generators.len(),
                found: images.len(),
            });
        }
        validate_canonical(&lift, false).map_err(|violation| GroupError::NotCanonical {
            what: "lift".to_string(),
            violation,
        })?;
        let mut image_inverses = Vec::with_capacity(images.len());
        for (g, img) in group.generators.iter().zip(&images) {
            validate_canonical(img, true).map_err(|violation| GroupError::NotCanonical {
                what: format!("image of `{}`", g.name),
                violation,
            })?;
            if compose_maps(&lift, &g.map)? != compose_maps(img, &lift)? {
                return Err(GroupError::NotEquivariant(g.name.clone()));
            }
            image_inverses.push(invert_map(img)?);
        }
        let endo = EndoSpec {
            lift,
            images,
            image_inverses,
        };
        endo.check_invariant(group.lattice())?;
        Ok(endo)
    }

    /// Images given as words in the generators.
    pub fn from_words(group: &GroupSpec, lift: CanonicalMap, images: &[Word]) -> Result<Self, GroupError> {
        let maps = images.iter().map(|w| group.evaluate(w)).collect::<Result<Vec<_>, _>>()?;
        Self::new(group, lift, maps)
    }

    pub fn lift(&self) -> &CanonicalMap {
        &self.lift
    }

    pub fn images(&self) -> &[CanonicalMap] {
        &self.images
    }

    /// `ρ(φ(w))`.
    pub fn image_of_word(&self, word: &Word) -> Result<CanonicalMap, GroupError> {
        let filtration = self.lift.filtration().clone();
        eval_word(&filtration, word, |i, inverse| {
            let src = if inverse { &self.image_inverses } else { &self.images };
            src.get(i).cloned().ok_or_else(|| GroupError::UnknownGenerator(format!("#{i}")))
        })
    }

    pub fn image(&self, e: &Element) -> Result<CanonicalMap, GroupError> {
        self.image_of_word(&e.word)
    }

    /// `φ(g)` for an arbitrary element, through its normal form.
    pub fn apply(&self, group: &GroupSpec, g: &CanonicalMap) -> Result<CanonicalMap, GroupError> {
        let top = group.top();
        let (j, coords) = top.locate(g)?.ok_or_else(|| GroupError::NotMember("the group".to_string()))?;
        let mut out = CanonicalMap::identity(group.filtration());
        for (level, u) in coords.iter().enumerate() {
            for (b, e) in top.lattice.basis(level + 1).iter().zip(u) {
                let e = e.to_i64().ok_or(GroupError::Overflow)?;
                if e != 0 {
                    out = compose_maps(&out, &power_map(&self.image(b)?, e)?)?;
                }
            }
        }
        Ok(compose_maps(&out, &self.image(&top.cosets[j])?)?)
    }

    /// Checks `φ(L) ⊆ L` on the basis of `lattice`.
    pub fn check_invariant(&self, lattice: &Lattice) -> Result<(), GroupError> {
        for (_, b) in lattice.all_basis() {
            if !lattice.contains(&self.image(b)?)? {
                return Err(GroupError::NotInvariant(lattice.name().to_string()));
            }
        }
        Ok(())
    }

    /// The endomorphism seen in coordinates moved by `h`, on [`GroupSpec::conjugated`].
    pub fn conjugated(&self, group: &GroupSpec, h: &CanonicalMap) -> Result<Self, GroupError> {
        let images = self.images.iter().map(|m| conjugate_map(h, m)).collect::<Result<Vec<_>, _>>()?;
        EndoSpec::new(group, conjugate_map(h, &self.lift)?, images)
    }

    /// `τ_w ∘ φ`: lift `ρ(w) ∘ p`, images `w φ(·) w⁻¹`.
    pub fn twisted(&self, w: &CanonicalMap) -> Result<Self, GroupError> {
        let w_inv = invert_map(w)?;
        let lift = compose_maps(w, &self.lift)?;
        let mut images = Vec::with_capacity(self.images.len());
        let mut image_inverses = Vec::with_capacity(self.images.len());
        for (img, inv) in self.images.iter().zip(&self.image_inverses) {
            images.push(compose_maps(&compose_maps(w, img)?, &w_inv)?);
            image_inverses.push(compose_maps(&compose_maps(w, inv)?, &w_inv)?);
        }
        Ok(EndoSpec {
            lift,
            images,
            image_inverses,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn klein_bottle_structure() {
        let m = models::klein_bottle(2, 3).unwrap();
        let g = &m.group;
        assert_eq!(g.top().index(), 2);
        assert_eq!(g.averaging().index(), 2);
        let t = g.evaluate(&vec![(1, 1)]).unwrap();
        assert!(!g.lattice().contains(&t).unwrap());
        let t2z = g.evaluate(&vec![(1, 2), (0, 3)]).unwrap();
        assert_eq!(g.lattice().sift(&t2z).unwrap(), Some(vec![vec![BigInt::from(3)], vec![BigInt::from(1)]]));
        // φ(t z) = t^3 z^2
        let tz = g.evaluate(&vec![(1, 1), (0, 1)]).unwrap();
        let expected = g.evaluate(&vec![(1, 3), (0, 2)]).unwrap();
        assert_eq!(m.endo.apply(g, &tz).unwrap(), expected);
    }

    #[test]
    fn rejects_bad_cosets() {
        let f = Filtration::new(vec![1]).unwrap();
        let z = models::affine_map(&f, &[&[&[1]]], &[&[1]]);
        let words = SubgroupWords {
            name: "lattice".into(),
            basis: vec![vec![vec![(0, 2)]]],
            cosets: vec![],
        };
        // 2Z alone does not cover Z
        let err = GroupSpec::new(&f, vec![("z".into(), z.clone())], words, None, None).unwrap_err();
        assert!(matches!(err, GroupError::CosetsIncomplete { .. }));
        let words = SubgroupWords {
            name: "lattice".into(),
            basis: vec![vec![vec![(0, 1)]]],
            cosets: vec![vec![(0, 1)]],
        };
        let err = GroupSpec::new(&f, vec![("z".into(), z)], words, None, None).unwrap_err();
        assert!(matches!(err, GroupError::FirstCosetNotIdentity { .. }));
    }

    #[test]
    fn equivariance_is_checked() {
        let f = Filtration::new(vec![1]).unwrap();
        let z = models::affine_map(&f, &[&[&[1]]], &[&[1]]);
        let words = SubgroupWords {
            name: "lattice".into(),
            basis: vec![vec![vec![(0, 1)]]],
            cosets: vec![],
        };
        let g = GroupSpec::new(&f, vec![("z".into(), z)], words, None, None).unwrap();
        let lift = models::affine_map(&f, &[&[&[2]]], &[&[0]]);
        assert!(EndoSpec::from_words(&g, lift.clone(), &[vec![(0, 2)]]).is_ok());
        assert!(matches!(
            EndoSpec::from_words(&g, lift, &[vec![(0, 3)]]),
            Err(GroupError::NotEquivariant(_))
        ));
    }

    #[test]
    fn twisted_endo_stays_equivariant() {
        let m = models::big_example(2).unwrap();
        let w = m.group.evaluate(&vec![(0, 1), (1, -2)]).unwrap();
        let tw = m.endo.twisted(&w).unwrap();
        for (g, img) in m.group.generators().iter().zip(tw.images()) {
            assert_eq!(compose_maps(tw.lift(), &g.map).unwrap(), compose_maps(img, tw.lift()).unwrap());
        }
    }
}
