//! Twisted conjugacy classes: `α ~ γ α φ(γ)⁻¹`.
//!
//! Classes of a lattice are enumerated by a tree that descends the levels; each
//! node splits along the cokernel of `I - F` on its level, where `F` is the
//! action of the node's twisted endomorphism. A finite top quotient is handled by
//! letting the stabilisers of its twisted classes act on the leaves.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use petgraph::unionfind::UnionFind;

use crate::canonical::{compose_maps, invert_map, CanonicalError, CanonicalMap};
use crate::exactla::{CokernelLattice, ExactLaError, IntegerMatrix, RationalMatrix};
use crate::group::{EndoSpec, GroupError, GroupSpec, Lattice, Subgroup, Word};

/// Enumerations larger than this are refused.
pub const MAX_CLASSES: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReidemeisterError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Linalg(#[from] ExactLaError),
    #[error("level {level}: the twisted endomorphism does not act integrally on the lattice")]
    NonIntegerAction { level: usize },
    #[error("level {level}: element has no lattice coordinates")]
    NotInLattice { level: usize },
    #[error("more than {MAX_CLASSES} classes to enumerate")]
    TooManyClasses,
    #[error("matrix is singular, the cokernel is infinite")]
    Singular,
    #[error("modulus {modulus} is too small: {modulus}·M⁻¹ is not integral")]
    ModulusTooSmall { modulus: u64 },
    #[error("torus (Z/{modulus})^{dim} is too large for brute force")]
    TorusTooLarge { modulus: u64, dim: usize },
    #[error("subgroup {0} is not invariant under the endomorphism")]
    NotInvariant(String),
    #[error("addition inequality fails: {lhs} > {rhs}")]
    AdditionInequality { lhs: Count, rhs: Count },
}

/// A class count; infinity absorbs sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Count {
    Finite(BigInt),
    Infinite,
}

impl Count {
    pub fn finite(n: impl Into<BigInt>) -> Self {
        Count::Finite(n.into())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Count::Finite(_))
    }

    pub fn value(&self) -> Option<&BigInt> {
        match self {
            Count::Finite(n) => Some(n),
            Count::Infinite => None,
        }
    }

    pub fn add(&self, other: &Count) -> Count {
        match (self, other) {
            (Count::Finite(a), Count::Finite(b)) => Count::Finite(a + b),
            _ => Count::Infinite,
        }
    }

    pub fn le(&self, other: &Count) -> bool {
        match (self, other) {
            (_, Count::Infinite) => true,
            (Count::Infinite, Count::Finite(_)) => false,
            (Count::Finite(a), Count::Finite(b)) => a <= b,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::Infinite => write!(f, "infinity"),
        }
    }
}

/// A class representative as a map and as a word in the generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedClass {
    pub word: Word,
    pub map: CanonicalMap,
}

/// A node where `det(I - F) = 0`: the twist `w` reached so far and its level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfiniteNode {
    pub level: usize,
    pub twist: TwistedClass,
}

/// `det(I - F)` at one node of the recursion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDeterminant {
    pub level: usize,
    pub det: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReidemeisterResult<R> {
    pub count: Count,
    /// One per class when the count is finite, empty otherwise.
    pub representatives: Vec<R>,
    pub infinite_nodes: Vec<InfiniteNode>,
    pub determinants: Vec<NodeDeterminant>,
}

/// Classes of `Z^n` under `x ~ x + (I - F) y`.
pub fn reidemeister_abelian(f: &IntegerMatrix) -> Result<ReidemeisterResult<Vec<BigInt>>, ReidemeisterError> {
    let m = f.identity_minus()?;
    let det = m.det()?;
    let determinants = vec![NodeDeterminant {
        level: 1,
        det: det.clone(),
    }];
    match CokernelLattice::new(&m)? {
        None => Ok(ReidemeisterResult {
            count: Count::Infinite,
            representatives: Vec::new(),
            infinite_nodes: Vec::new(),
            determinants,
        }),
        Some(coker) => {
            if coker.count() > BigInt::from(MAX_CLASSES) {
                return Err(ReidemeisterError::TooManyClasses);
            }
            Ok(ReidemeisterResult {
                count: Count::Finite(coker.count()),
                representatives: coker.representatives(),
                infinite_nodes: Vec::new(),
                determinants,
            })
        }
    }
}

/// Size of `Z^n / M Z^n` by union-find on the torus `(Z/L)^n`, joining `x` and
/// `x + column_j`. `L` must satisfy `L Z^n ⊆ M Z^n`; the default is the least such
/// `L`, the lcm of the denominators of `M⁻¹`.
pub fn brute_force_coker(m: &IntegerMatrix, modulus: Option<u64>) -> Result<BigInt, ReidemeisterError> {
    let n = m.rows();
    let inv = m.to_rational().inverse().map_err(|_| ReidemeisterError::Singular)?;
    let lcm_den = inv.entries().iter().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let l = match modulus {
        Some(l) => {
            let scaled = inv.scale(&num_rational::BigRational::from_integer(BigInt::from(l)));
            if l == 0 || !scaled.is_integral() {
                return Err(ReidemeisterError::ModulusTooSmall { modulus: l });
            }
            l
        }
        None => lcm_den.to_u64().ok_or(ReidemeisterError::TorusTooLarge { modulus: u64::MAX, dim: n })?,
    };
    let size = (l as u128).checked_pow(n as u32).filter(|&s| s <= 1 << 24).ok_or(ReidemeisterError::TorusTooLarge { modulus: l, dim: n })? as usize;
    let cols: Vec<Vec<u64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| m.get(i, j).mod_floor(&BigInt::from(l)).to_u64().expect("reduced"))
                .collect()
        })
        .collect();
    let encode = |x: &[u64]| x.iter().fold(0usize, |acc, &v| acc * l as usize + v as usize);
    let mut uf = UnionFind::<usize>::new(size);
    let mut x = vec![0u64; n];
    for idx in 0..size {
        let mut rest = idx;
        for k in (0..n).rev() {
            x[k] = (rest % l as usize) as u64;
            rest /= l as usize;
        }
        for col in &cols {
            let y: Vec<u64> = x.iter().zip(col).map(|(a, b)| (a + b) % l).collect();
            uf.union(idx, encode(&y));
        }
    }
    let roots: std::collections::BTreeSet<usize> = (0..size).map(|i| uf.find(i)).collect();
    Ok(BigInt::from(roots.len()))
}

fn word_power(word: &Word, e: i64) -> Word {
    if e == 0 {
        return Vec::new();
    }
    if let [(g, k)] = word.as_slice() {
        return vec![(*g, k * e)];
    }
    let base: Word = if e > 0 {
        word.clone()
    } else {
        word.iter().rev().map(|&(g, k)| (g, -k)).collect()
    };
    base.iter().copied().cycle().take(base.len() * e.unsigned_abs() as usize).collect()
}

enum NodeKind {
    Branch { coker: CokernelLattice, reps: Vec<Vec<BigInt>>, children: Vec<Node> },
    Infinite,
    Leaf(usize),
}

struct Node {
    twist: CanonicalMap,
    twist_inv: CanonicalMap,
    kind: NodeKind,
}

/// Images of the lattice basis under `φ`, with inverses.
struct Engine<'a> {
    lattice: &'a Lattice,
    endo: &'a EndoSpec,
    images: Vec<Vec<(CanonicalMap, CanonicalMap)>>,
}

struct Tree {
    root: Node,
    leaves: Vec<TwistedClass>,
    infinite: Vec<InfiniteNode>,
    determinants: Vec<NodeDeterminant>,
}

impl<'a> Engine<'a> {
    fn new(lattice: &'a Lattice, endo: &'a EndoSpec) -> Result<Self, ReidemeisterError> {
        let mut images = Vec::new();
        for level in lattice.filtration().levels() {
            let mut row = Vec::new();
            for b in lattice.basis(level) {
                let img = endo.image(b)?;
                let inv = invert_map(&img)?;
                row.push((img, inv));
            }
            images.push(row);
        }
        Ok(Engine { lattice, endo, images })
    }

    fn levels(&self) -> usize {
        self.lattice.filtration().num_levels()
    }

    /// `φ(e^u)` for a level element.
    fn image_of_level_element(&self, level: usize, u: &[BigInt]) -> Result<CanonicalMap, ReidemeisterError> {
        let mut out = CanonicalMap::identity(self.lattice.filtration());
        for ((img, inv), e) in self.images[level - 1].iter().zip(u) {
            let e = e.to_i64().ok_or(GroupError::Overflow)?;
            if e != 0 {
                let p = crate::canonical::power_map(if e > 0 { img } else { inv }, e.abs())?;
                out = compose_maps(&out, &p)?;
            }
        }
        Ok(out)
    }

    fn level_word(&self, level: usize, u: &[BigInt]) -> Result<Word, ReidemeisterError> {
        let mut w = Word::new();
        for (b, e) in self.lattice.basis(level).iter().zip(u) {
            w.extend(word_power(&b.word, e.to_i64().ok_or(GroupError::Overflow)?));
        }
        Ok(w)
    }

    /// Matrix of `τ_w ∘ φ` on the level-`level` lattice coordinates.
    fn level_action(&self, level: usize, twist: &CanonicalMap) -> Result<IntegerMatrix, ReidemeisterError> {
        let d = compose_maps(twist, self.endo.lift())?.diag_block(level);
        let l: &RationalMatrix = self.lattice.translation_matrix(level);
        let l_inv = l.inverse()?;
        let f = l_inv.checked_mul(&d)?.checked_mul(l)?;
        f.to_integer().ok_or(ReidemeisterError::NonIntegerAction { level })
    }

    fn build(&self, root: &CanonicalMap, root_word: &Word) -> Result<Tree, ReidemeisterError> {
        let mut tree = Tree {
            root: Node {
                twist: CanonicalMap::identity(self.lattice.filtration()),
                twist_inv: CanonicalMap::identity(self.lattice.filtration()),
                kind: NodeKind::Infinite,
            },
            leaves: Vec::new(),
            infinite: Vec::new(),
            determinants: Vec::new(),
        };
        // the class part below the root twist, as a word (highest level first)
        tree.root = self.build_node(1, root.clone(), Vec::new(), root_word, &mut tree)?;
        Ok(tree)
    }

    fn build_node(&self, level: usize, twist: CanonicalMap, prefix: Word, root_word: &Word, tree: &mut Tree) -> Result<Node, ReidemeisterError> {
        let twist_inv = invert_map(&twist)?;
        let full_word = || {
            let mut w = prefix.clone();
            w.extend(root_word.iter().copied());
            w
        };
        if level > self.levels() {
            tree.leaves.push(TwistedClass {
                word: full_word(),
                map: twist.clone(),
            });
            return Ok(Node {
                twist,
                twist_inv,
                kind: NodeKind::Leaf(tree.leaves.len() - 1),
            });
        }
        let f = self.level_action(level, &twist)?;
        let m = f.identity_minus()?;
        tree.determinants.push(NodeDeterminant { level, det: m.det()? });
        let Some(coker) = CokernelLattice::new(&m)? else {
            tree.infinite.push(InfiniteNode {
                level,
                twist: TwistedClass {
                    word: full_word(),
                    map: twist.clone(),
                },
            });
            return Ok(Node {
                twist,
                twist_inv,
                kind: NodeKind::Infinite,
            });
        };
        if BigInt::from(tree.leaves.len()) + coker.count() > BigInt::from(MAX_CLASSES) {
            return Err(ReidemeisterError::TooManyClasses);
        }
        let reps = coker.representatives();
        let mut children = Vec::with_capacity(reps.len());
        for r in &reps {
            let alpha = self.lattice.level_element(level, r)?;
            let mut word = self.level_word(level, r)?;
            word.extend(prefix.iter().copied());
            let child_twist = compose_maps(&alpha, &twist)?;
            children.push(self.build_node(level + 1, child_twist, word, root_word, tree)?);
        }
        Ok(Node {
            twist,
            twist_inv,
            kind: NodeKind::Branch { coker, reps, children },
        })
    }

    /// Leaf index of the class of `n` (an element of the lattice), relative to the
    /// tree's root twist; `None` if the path meets an infinite node.
    fn identify(&self, tree: &Tree, n: &CanonicalMap) -> Result<Option<usize>, ReidemeisterError> {
        let mut node = &tree.root;
        let mut n = n.clone();
        let mut level = 1;
        loop {
            match &node.kind {
                NodeKind::Leaf(i) => {
                    if !n.is_identity() {
                        return Err(ReidemeisterError::NotInLattice { level });
                    }
                    return Ok(Some(*i));
                }
                NodeKind::Infinite => return Ok(None),
                NodeKind::Branch { coker, reps, children } => {
                    let v = self
                        .lattice
                        .level_coordinates(level, &n)
                        .ok_or(ReidemeisterError::NotInLattice { level })?;
                    let idx = coker.class_index(&v).to_usize().expect("enumerated");
                    let p = &reps[idx];
                    let diff: Vec<BigInt> = p.iter().zip(&v).map(|(a, b)| a - b).collect();
                    let u = coker.preimage(&diff).expect("difference lies in the image");
                    // h n ψ(h)⁻¹ with ψ = τ_w ∘ φ
                    let h = self.lattice.level_element(level, &u)?;
                    let psi_h = compose_maps(&compose_maps(&node.twist, &self.image_of_level_element(level, &u)?)?, &node.twist_inv)?;
                    let moved = compose_maps(&compose_maps(&h, &n)?, &invert_map(&psi_h)?)?;
                    n = compose_maps(&moved, &self.lattice.level_element_inverse(level, p)?)?;
                    node = &children[idx];
                    level += 1;
                }
            }
        }
    }
}

/// All twisted classes of `Π = ⋃ Λ c_j`, where `sub` gives the lattice `Λ` and the cosets.
pub fn reidemeister_subgroup(sub: &Subgroup, endo: &EndoSpec) -> Result<ReidemeisterResult<TwistedClass>, ReidemeisterError> {
    endo.check_invariant(&sub.lattice)
        .map_err(|_| ReidemeisterError::NotInvariant(sub.name().to_string()))?;
    let engine = Engine::new(&sub.lattice, endo)?;
    let m = sub.index();
    let images: Vec<CanonicalMap> = sub.cosets.iter().map(|c| endo.image(c)).collect::<Result<_, _>>()?;
    let image_invs: Vec<CanonicalMap> = images.iter().map(invert_map).collect::<Result<_, _>>()?;
    let locate = |g: &CanonicalMap| -> Result<usize, ReidemeisterError> {
        Ok(sub
            .locate(g)?
            .ok_or_else(|| GroupError::NotMember(sub.name().to_string()))?
            .0)
    };
    // twisted classes of the finite quotient
    let mut quotient = UnionFind::<usize>::new(m);
    let mut moves = vec![vec![0usize; m]; m];
    for s in 0..m {
        for j in 0..m {
            let g = compose_maps(&compose_maps(&sub.cosets[s].map, &sub.cosets[j].map)?, &image_invs[s])?;
            moves[s][j] = locate(&g)?;
            quotient.union(j, moves[s][j]);
        }
    }
    let mut count = Count::finite(0);
    let mut representatives = Vec::new();
    let mut infinite_nodes = Vec::new();
    let mut determinants = Vec::new();
    for alpha in (0..m).filter(|&j| (0..j).all(|i| !quotient.equiv(i, j))) {
        let c = &sub.cosets[alpha];
        let tree = engine.build(&c.map, &c.word)?;
        determinants.extend(tree.determinants.iter().cloned());
        if !tree.infinite.is_empty() {
            infinite_nodes.extend(tree.infinite.iter().cloned());
            count = Count::Infinite;
            continue;
        }
        let mut orbits = UnionFind::<usize>::new(tree.leaves.len());
        for s in (1..m).filter(|&s| moves[s][alpha] == alpha) {
            // k ↦ c_s k c_α φ(c_s)⁻¹ c_α⁻¹
            let tail = compose_maps(&compose_maps(&c.map, &image_invs[s])?, &c.inverse)?;
            for (i, leaf) in tree.leaves.iter().enumerate() {
                let k = compose_maps(&leaf.map, &c.inverse)?;
                let moved = compose_maps(&compose_maps(&sub.cosets[s].map, &k)?, &tail)?;
                let j = engine.identify(&tree, &moved)?.expect("finite tree");
                orbits.union(i, j);
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, leaf) in tree.leaves.iter().enumerate() {
            if seen.insert(orbits.find(i)) {
                representatives.push(leaf.clone());
            }
        }
        count = count.add(&Count::finite(seen.len()));
    }
    if !count.is_finite() {
        representatives.clear();
    }
    Ok(ReidemeisterResult {
        count,
        representatives,
        infinite_nodes,
        determinants,
    })
}

/// `R(φ)` on the whole group.
pub fn reidemeister_filtered(group: &GroupSpec, endo: &EndoSpec) -> Result<ReidemeisterResult<TwistedClass>, ReidemeisterError> {
    reidemeister_subgroup(group.top(), endo)
}

/// Decides twisted conjugacy of two lattice elements relative to the twist `root`.
pub fn twisted_conjugate_in_lattice(
    lattice: &Lattice,
    endo: &EndoSpec,
    root: &CanonicalMap,
    a: &CanonicalMap,
    b: &CanonicalMap,
) -> Result<Option<bool>, ReidemeisterError> {
    let engine = Engine::new(lattice, endo)?;
    let tree = engine.build(root, &Vec::new())?;
    let (Some(x), Some(y)) = (engine.identify(&tree, a)?, engine.identify(&tree, b)?) else {
        return Ok(None);
    };
    Ok(Some(x == y))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditionInequality {
    pub lhs: Count,
    pub rhs: Count,
    /// `R((τ_x ∘ φ)|_H)` per coset representative `x`.
    pub terms: Vec<Count>,
}

/// `R(φ) ≤ Σ_{xH} R((τ_x ∘ φ)|_H)` for a normal, `φ`-invariant subgroup `H` given as
/// a lattice with coset representatives of the whole group.
pub fn check_addition_inequality(group: &GroupSpec, h: &Subgroup, endo: &EndoSpec) -> Result<AdditionInequality, ReidemeisterError> {
    group.check_normal(h)?;
    endo.check_invariant(&h.lattice)
        .map_err(|_| ReidemeisterError::NotInvariant(h.name().to_string()))?;
    let lhs = reidemeister_filtered(group, endo)?.count;
    let inner = Subgroup {
        lattice: h.lattice.clone(),
        cosets: vec![h.cosets[0].clone()],
    };
    let mut terms = Vec::new();
    for x in &h.cosets {
        terms.push(reidemeister_subgroup(&inner, &endo.twisted(&x.map)?)?.count);
    }
    let rhs = terms.iter().fold(Count::finite(0), |acc, t| acc.add(t));
    if !lhs.le(&rhs) {
        return Err(ReidemeisterError::AdditionInequality { lhs, rhs });
    }
    Ok(AdditionInequality { lhs, rhs, terms })
}

/// Whether `a - b ∈ M Z^n`, decided with the rational inverse.
pub fn in_column_lattice(m: &IntegerMatrix, v: &[BigInt]) -> Result<bool, ReidemeisterError> {
    let inv = m.to_rational().inverse().map_err(|_| ReidemeisterError::Singular)?;
    let q: Vec<_> = v.iter().map(|x| num_rational::BigRational::from_integer(x.clone())).collect();
    Ok(inv.mul_vec(&q)?.iter().all(|x| x.is_integer()))
}
