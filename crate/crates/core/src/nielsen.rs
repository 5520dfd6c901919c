//! Nielsen numbers by averaging `∏_i |det(I - A_i(α) F_i)|` over coset
//! representatives, together with the consistency checks that tie them to the
//! Reidemeister number.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::canonical::{compose_maps, invert_map, jacobian_at, power_map, CanonicalError, CanonicalMap};
use crate::exactla::{ExactLaError, IntegerMatrix, RationalMatrix};
use crate::group::{EndoSpec, GroupError, GroupSpec, Subgroup, Word};
use crate::qpoly::Rat;
use crate::reidemeister::{reidemeister_filtered, Count, ReidemeisterError};
use crate::spectra::{net_certify_actions, nr_certify, subgroup_actions, Certification, SpectraError};

/// Word bound for the NR scan on levels of rank two or more.
pub const NR_WORD_BOUND: u32 = 3;
/// Exponent bound for the Kronecker search of the net check.
pub const NET_EXPONENT_BOUND: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NielsenError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Linalg(#[from] ExactLaError),
    #[error(transparent)]
    Reidemeister(#[from] ReidemeisterError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error("subgroup {0} is not invariant under the endomorphism")]
    NotInvariant(String),
    #[error("{index} does not divide the coset sum {sum}")]
    NonIntegralAverage { sum: BigInt, index: usize },
    #[error("coset {coset}: determinant {value} is not an integer")]
    NonIntegerTerm { coset: usize, value: String },
    #[error("the group carries no net subgroup")]
    NoNetSubgroup,
    #[error("coset {coset}: det(I - J) is {first} at one sample point and {second} at another")]
    PointDependence { coset: usize, first: String, second: String },
    #[error("Jacobian route gives {jacobian}, linear route gives {linear}")]
    JacobianMismatch { jacobian: BigInt, linear: BigInt },
    #[error("no sample points given")]
    NoSamplePoints,
    #[error("level {level}: power of generator {generator} is {reason}")]
    PowerOutside { level: usize, generator: usize, reason: &'static str },
    #[error("N = {nielsen} but R = {reidemeister}")]
    NielsenNotReidemeister { nielsen: BigInt, reidemeister: BigInt },
    #[error("{0}")]
    Appendix(AppendixViolation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AppendixViolation {
    EigenvalueOne,
    NonIntegralImage { v: Vec<i64> },
    Commutation { v: Vec<i64> },
    Determinant { v: Vec<i64>, found: BigInt, expected: BigInt },
    NetUnverified(Certification),
}

impl std::fmt::Display for AppendixViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppendixViolation::EigenvalueOne => write!(f, "Φ has eigenvalue 1"),
            AppendixViolation::NonIntegralImage { v } => write!(f, "Φ·{v:?} is not integral"),
            AppendixViolation::Commutation { v } => write!(f, "X·A(v) ≠ A(Φv)·X at v = {v:?}"),
            AppendixViolation::Determinant { v, found, expected } => {
                write!(f, "det(I - A(v)X) = {found} ≠ {expected} at v = {v:?}")
            }
            AppendixViolation::NetUnverified(c) => write!(f, "net condition not verified: {c:?}"),
        }
    }
}

/// `∏_i det(I - D_i)` for one coset representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetTerm {
    pub coset: usize,
    pub word: Word,
    pub level_determinants: Vec<BigInt>,
    pub product: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NielsenResult {
    pub value: BigInt,
    pub index: usize,
    pub terms: Vec<CosetTerm>,
    /// NR status of `K` (invariant and Jacobian routes) or net status of `K'`.
    pub hypothesis: Certification,
}

/// `∏_i |det(I - F_i)|`.
pub fn nielsen_product(blocks: &[IntegerMatrix]) -> Result<BigInt, NielsenError> {
    let mut out = BigInt::from(1);
    for f in blocks {
        out *= f.identity_minus()?.det()?.abs();
    }
    Ok(out)
}

fn integer(q: Rat, coset: usize) -> Result<BigInt, NielsenError> {
    if q.is_integer() {
        Ok(q.to_integer())
    } else {
        Err(NielsenError::NonIntegerTerm {
            coset,
            value: q.to_string(),
        })
    }
}

fn coset_term(endo: &EndoSpec, sub: &Subgroup, j: usize) -> Result<CosetTerm, NielsenError> {
    let c = &sub.cosets[j];
    let f = compose_maps(&c.map, endo.lift())?;
    let mut level_determinants = Vec::new();
    let mut product = BigInt::from(1);
    for level in f.filtration().levels() {
        let d = integer(f.diag_block(level).identity_minus()?.det()?, j)?;
        product *= &d;
        level_determinants.push(d);
    }
    Ok(CosetTerm {
        coset: j,
        word: c.word.clone(),
        level_determinants,
        product,
    })
}

fn average(terms: Vec<CosetTerm>, index: usize, hypothesis: Certification) -> Result<NielsenResult, NielsenError> {
    let sum: BigInt = terms.iter().map(|t| t.product.abs()).sum();
    let (value, rem) = (&sum / index, &sum % index);
    if !rem.is_zero() {
        return Err(NielsenError::NonIntegralAverage { sum, index });
    }
    Ok(NielsenResult {
        value,
        index,
        terms,
        hypothesis,
    })
}

fn average_over(endo: &EndoSpec, sub: &Subgroup, hypothesis: Certification) -> Result<NielsenResult, NielsenError> {
    let terms = (0..sub.index()).map(|j| coset_term(endo, sub, j)).collect::<Result<Vec<_>, _>>()?;
    average(terms, sub.index(), hypothesis)
}

fn require_invariant(endo: &EndoSpec, sub: &Subgroup) -> Result<(), NielsenError> {
    endo.check_invariant(&sub.lattice)
        .map_err(|_| NielsenError::NotInvariant(sub.name().to_string()))
}

pub fn nr_status(sub: &Subgroup) -> Result<Certification, NielsenError> {
    let (actions, _) = subgroup_actions(sub, |_| String::new())?;
    Ok(nr_certify(&actions, NR_WORD_BOUND)?)
}

pub fn net_status(sub: &Subgroup) -> Result<Certification, NielsenError> {
    let (actions, _) = subgroup_actions(sub, |_| String::new())?;
    Ok(net_certify_actions(&actions, NET_EXPONENT_BOUND)?)
}

/// Average over `Π/K` for the averaging subgroup `K`, which must be `φ`-invariant.
pub fn nielsen_average_invariant(group: &GroupSpec, endo: &EndoSpec) -> Result<NielsenResult, NielsenError> {
    let k = group.averaging();
    require_invariant(endo, k)?;
    average_over(endo, k, nr_status(k)?)
}

/// Average over `Π/K'` for the net subgroup `K'`; the linear parts are those of
/// the invariant `K` inside it, which is checked to be `φ`-invariant.
pub fn nielsen_average_net(group: &GroupSpec, endo: &EndoSpec) -> Result<NielsenResult, NielsenError> {
    let net = group.net().ok_or(NielsenError::NoNetSubgroup)?;
    require_invariant(endo, group.averaging())?;
    average_over(endo, net, net_status(net)?)
}

/// `M = (1/m)·Λ`, where column `j` of `Λ` holds the coordinates of
/// `τ_α φ(z_j^m)` in the basis `translation(z_j^m)/m` of the level.
pub fn mi_matrix(
    group: &GroupSpec,
    endo: &EndoSpec,
    level: usize,
    alpha: &CanonicalMap,
    generators: &[Word],
    m: i64,
) -> Result<RationalMatrix, NielsenError> {
    let k = group.averaging();
    let alpha_inv = invert_map(alpha)?;
    let scale = Rat::from_integer(BigInt::from(m));
    let mut basis = Vec::new();
    let mut images = Vec::new();
    for (j, w) in generators.iter().enumerate() {
        let err = |reason| NielsenError::PowerOutside {
            level,
            generator: j + 1,
            reason,
        };
        let zm = power_map(&group.evaluate(w)?, m)?;
        if !k.lattice.contains(&zm)? {
            return Err(err("not in the averaging subgroup"));
        }
        if !zm.trivial_below(level) {
            return Err(err("not in the level's subgroup"));
        }
        let t = zm.level_translation(level).ok_or(err("not a translation of its level"))?;
        basis.push(t.iter().map(|x| x / &scale).collect::<Vec<_>>());
        let img = compose_maps(&compose_maps(alpha, &power_map(&endo.image_of_word(w)?, m)?)?, &alpha_inv)?;
        if !img.trivial_below(level) {
            return Err(err("moved off its level by the endomorphism"));
        }
        images.push(img.level_translation(level).ok_or(err("not mapped to a translation"))?);
    }
    let v = RationalMatrix::from_columns(&basis)?;
    let lambda = v.inverse()?.checked_mul(&RationalMatrix::from_columns(&images)?)?;
    Ok(lambda.scale(&(Rat::from_integer(BigInt::from(1)) / scale)))
}

/// Coset terms from `det(I - J)` of `ρ(α) ∘ p` at sample points; every point must agree,
/// and the total must match [`nielsen_average_invariant`].
pub fn nielsen_via_jacobian(group: &GroupSpec, endo: &EndoSpec, points: &[Vec<Rat>]) -> Result<NielsenResult, NielsenError> {
    if points.is_empty() {
        return Err(NielsenError::NoSamplePoints);
    }
    let k = group.averaging();
    require_invariant(endo, k)?;
    let mut terms = Vec::new();
    for (j, c) in k.cosets.iter().enumerate() {
        let f = compose_maps(&c.map, endo.lift())?;
        let mut value: Option<Rat> = None;
        for x in points {
            let d = jacobian_at(&f, x)?.identity_minus()?.det()?;
            match &value {
                None => value = Some(d),
                Some(v) if *v != d => {
                    return Err(NielsenError::PointDependence {
                        coset: j,
                        first: v.to_string(),
                        second: d.to_string(),
                    })
                }
                _ => {}
            }
        }
        let product = integer(value.expect("nonempty"), j)?;
        terms.push(CosetTerm {
            coset: j,
            word: c.word.clone(),
            level_determinants: Vec::new(),
            product,
        });
    }
    let result = average(terms, k.index(), nr_status(k)?)?;
    let linear = nielsen_average_invariant(group, endo)?;
    if linear.value != result.value {
        return Err(NielsenError::JacobianMismatch {
            jacobian: result.value,
            linear: linear.value,
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppendixReport {
    pub checked: usize,
    pub net: Certification,
}

fn commuting_product(gens: &[IntegerMatrix], v: &[i64], n: usize) -> Result<IntegerMatrix, NielsenError> {
    let mut out = IntegerMatrix::identity(n);
    for (g, &e) in gens.iter().zip(v) {
        out = &out * &g.pow_signed(e)?;
    }
    Ok(out)
}

fn box_vectors(dim: usize, range: i64) -> Vec<Vec<i64>> {
    (0..dim).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter()
            .flat_map(|p| {
                (-range..=range).map(move |e| {
                    let mut q = p.clone();
                    q.push(e);
                    q
                })
            })
            .collect()
    })
}

/// `det(I - A(v) X) = det(I - X)` for `A(v) = ∏ A_j^{v_j}`, over `v = k·u` with
/// `|u|_∞ ≤ range`, given `det(I - Φ) ≠ 0` and `X A(v) = A(Φ v) X`. Without a net
/// certificate for the `A_j`, `assume_net` must be set.
pub fn appendix_invariance_check(
    x: &IntegerMatrix,
    a_gen: &[IntegerMatrix],
    phi: &RationalMatrix,
    k: i64,
    range: i64,
    assume_net: bool,
) -> Result<AppendixReport, NielsenError> {
    let fail = |v| Err(NielsenError::Appendix(v));
    if phi.identity_minus()?.det()?.is_zero() {
        return fail(AppendixViolation::EigenvalueOne);
    }
    let net = net_certify_actions(&[a_gen.to_vec()], NET_EXPONENT_BOUND)?;
    if !net.is_certified() && !assume_net {
        return fail(AppendixViolation::NetUnverified(net));
    }
    let n = x.rows();
    let expected = x.identity_minus()?.det()?;
    let mut checked = 0;
    for u in box_vectors(a_gen.len(), range) {
        let v: Vec<i64> = u.iter().map(|e| e * k).collect();
        let q: Vec<Rat> = v.iter().map(|&e| Rat::from_integer(BigInt::from(e))).collect();
        let image = phi.mul_vec(&q)?;
        let Some(w) = image.iter().map(|e| if e.is_integer() { e.to_integer().to_i64() } else { None }).collect::<Option<Vec<_>>>() else {
            return fail(AppendixViolation::NonIntegralImage { v });
        };
        let av = commuting_product(a_gen, &v, n)?;
        if x * &av != &commuting_product(a_gen, &w, n)? * x {
            return fail(AppendixViolation::Commutation { v });
        }
        let found = (&av * x).identity_minus()?.det()?;
        if found != expected {
            return fail(AppendixViolation::Determinant { v, found, expected });
        }
        checked += 1;
    }
    Ok(AppendixReport { checked, net })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NEqualsR {
    pub nielsen: BigInt,
    pub reidemeister: Count,
}

/// Computes both numbers; a finite `R` must equal `N`.
pub fn n_equals_r_check(group: &GroupSpec, endo: &EndoSpec) -> Result<NEqualsR, NielsenError> {
    let nielsen = nielsen_average_invariant(group, endo)?.value;
    let reidemeister = reidemeister_filtered(group, endo)?.count;
    if let Count::Finite(r) = &reidemeister {
        if *r != nielsen {
            return Err(NielsenError::NielsenNotReidemeister {
                nielsen,
                reidemeister: r.clone(),
            });
        }
    }
    Ok(NEqualsR { nielsen, reidemeister })
}
