//! Spectral certificates: root-of-unity obstructions in the linear actions of
//! a subgroup on its free-abelian levels.

use num_traits::{One, Signed};

use crate::exactla::{
    all_roots_real_positive, cyclotomic_factor_scan, cyclotomic_polynomial, root_of_unity_exponent, ExactLaError,
    IntPolynomial, IntegerMatrix,
};
use crate::group::Subgroup;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpectraError {
    #[error("level {level}: generators {first} and {second} do not commute")]
    NonCommuting { level: usize, first: usize, second: usize },
    #[error("matrix has determinant {0}, expected ±1")]
    NotUnimodular(String),
    #[error("a level action is not an integer matrix")]
    NonInteger,
    #[error(transparent)]
    Linalg(#[from] ExactLaError),
}

/// A word whose matrix has `Φ_order` dividing its characteristic polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// Level of the action (1-based), when the certificate concerns a level.
    pub level: Option<usize>,
    /// Exponent per generator for NR words; Kronecker exponents for net searches.
    pub exponents: Vec<i64>,
    pub order: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certification {
    Certified,
    Refuted(Witness),
    InconclusiveUpToBound(u32),
}

impl Certification {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::Certified)
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Certification::Refuted(_))
    }
}

fn first_nontrivial_order(m: &IntegerMatrix) -> Result<Option<u64>, ExactLaError> {
    Ok(cyclotomic_factor_scan(&m.char_poly()?, false)?.first().copied())
}

/// Monomials `∏ G_j^{e_j}` of one level, with `e ≠ 0`, `Σ|e_j| ≤ bound`; ordered by size then lexicographically.
fn exponent_vectors(r: usize, bound: u32) -> Vec<Vec<i64>> {
    let b = bound as i64;
    let mut all = vec![Vec::new()];
    for _ in 0..r {
        let mut next = Vec::new();
        for prefix in &all {
            let used: i64 = prefix.iter().map(|e: &i64| e.abs()).sum();
            for e in -(b - used)..=(b - used) {
                let mut v = prefix.clone();
                v.push(e);
                next.push(v);
            }
        }
        all = next;
    }
    all.retain(|v| v.iter().any(|&e| e != 0));
    all.sort_by_key(|v| (v.iter().map(|e| e.abs()).sum::<i64>(), v.clone()));
    all
}

fn word_matrix(gens: &[IntegerMatrix], exponents: &[i64]) -> Result<IntegerMatrix, ExactLaError> {
    let n = gens[0].rows();
    let mut m = IntegerMatrix::identity(n);
    for (g, &e) in gens.iter().zip(exponents) {
        if e != 0 {
            m = &m * &g.pow_signed(e)?;
        }
    }
    Ok(m)
}

/// NR check on commuting level actions. A single nontrivial generator per level is
/// decided exactly; larger ranks are scanned over words up to `word_bound`.
pub fn nr_certify(actions: &[Vec<IntegerMatrix>], word_bound: u32) -> Result<Certification, SpectraError> {
    let mut inconclusive = false;
    for (li, gens) in actions.iter().enumerate() {
        let level = li + 1;
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                if !gens[i].commutes_with(&gens[j]) {
                    return Err(SpectraError::NonCommuting {
                        level,
                        first: i + 1,
                        second: j + 1,
                    });
                }
            }
        }
        let active: Vec<usize> = (0..gens.len()).filter(|&i| !gens[i].is_identity()).collect();
        let witness = |exps: Vec<i64>, order| {
            Certification::Refuted(Witness {
                level: Some(level),
                exponents: exps,
                order,
            })
        };
        match active.len() {
            0 => {}
            1 => {
                let g = active[0];
                if let Some(d) = first_nontrivial_order(&gens[g])? {
                    let mut exps = vec![0; gens.len()];
                    exps[g] = 1;
                    return Ok(witness(exps, d));
                }
            }
            r => {
                let sub: Vec<IntegerMatrix> = active.iter().map(|&i| gens[i].clone()).collect();
                for e in exponent_vectors(r, word_bound) {
                    if let Some(d) = first_nontrivial_order(&word_matrix(&sub, &e)?)? {
                        let mut exps = vec![0; gens.len()];
                        for (k, &i) in active.iter().enumerate() {
                            exps[i] = e[k];
                        }
                        return Ok(witness(exps, d));
                    }
                }
                inconclusive = true;
            }
        }
    }
    Ok(if inconclusive {
        Certification::InconclusiveUpToBound(word_bound)
    } else {
        Certification::Certified
    })
}

/// Re-checks an NR witness from the generator matrices of its level.
pub fn verify_nr_witness(actions: &[Vec<IntegerMatrix>], w: &Witness) -> bool {
    let Some(level) = w.level else { return false };
    let Some(gens) = actions.get(level - 1) else { return false };
    if gens.is_empty() || gens.len() != w.exponents.len() {
        return false;
    }
    word_matrix(gens, &w.exponents)
        .and_then(|m| m.char_poly())
        .map(|p| divides_cyclotomic(&p, w.order))
        .unwrap_or(false)
}

fn divides_cyclotomic(p: &IntPolynomial, d: u64) -> bool {
    d > 1
        && p
            .div_rem_monic(&cyclotomic_polynomial(d))
            .map(|(_, r)| r.is_zero())
            .unwrap_or(false)
}

/// Kronecker product `⊗_i M^{e_i}`.
pub fn kronecker_power(m: &IntegerMatrix, exponents: &[i64]) -> Result<IntegerMatrix, ExactLaError> {
    let mut out = IntegerMatrix::identity(1);
    for &e in exponents {
        out = out.kronecker(&m.pow_signed(e)?);
    }
    Ok(out)
}

/// Nondecreasing exponent lists of nonzero entries with `Σ|e_i| ≤ bound`.
fn kronecker_exponents(bound: u32) -> Vec<Vec<i64>> {
    fn extend(prefix: &mut Vec<i64>, budget: i64, min: i64, bound: i64, out: &mut Vec<Vec<i64>>) {
        for e in min..=bound {
            if e == 0 || e.abs() > budget {
                continue;
            }
            prefix.push(e);
            out.push(prefix.clone());
            extend(prefix, budget - e.abs(), e, bound, out);
            prefix.pop();
        }
    }
    let b = bound as i64;
    let mut out = Vec::new();
    extend(&mut Vec::new(), b, -b, b, &mut out);
    out.sort_by_key(|v| (v.len(), v.iter().map(|e| e.abs()).sum::<i64>(), v.clone()));
    out
}

/// Net check for a unimodular matrix: cyclotomic factor refutes, an all-real-positive
/// spectrum certifies, otherwise Kronecker products up to `exponent_bound` are scanned.
pub fn net_certify(m: &IntegerMatrix, exponent_bound: u32) -> Result<Certification, SpectraError> {
    let det = m.det()?;
    if !det.abs().is_one() {
        return Err(SpectraError::NotUnimodular(det.to_string()));
    }
    let p = m.char_poly()?;
    if let Some(&d) = cyclotomic_factor_scan(&p, false)?.first() {
        return Ok(Certification::Refuted(Witness {
            level: None,
            exponents: vec![1],
            order: d,
        }));
    }
    if all_roots_real_positive(&p)? {
        return Ok(Certification::Certified);
    }
    for e in kronecker_exponents(exponent_bound) {
        let k = kronecker_power(m, &e)?;
        if let Some(d) = first_nontrivial_order(&k)? {
            return Ok(Certification::Refuted(Witness {
                level: None,
                exponents: e,
                order: d,
            }));
        }
    }
    Ok(Certification::InconclusiveUpToBound(exponent_bound))
}

pub fn verify_net_witness(m: &IntegerMatrix, w: &Witness) -> bool {
    kronecker_power(m, &w.exponents)
        .and_then(|k| k.char_poly())
        .map(|p| divides_cyclotomic(&p, w.order))
        .unwrap_or(false)
}

/// `lcm{d : φ(d) ≤ D}`, a valid power exponent for killing roots of unity in degree-`D` fields.
pub fn wilking_exponent(degree_bound: u64) -> num_bigint::BigInt {
    root_of_unity_exponent(degree_bound)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralEntry {
    pub level: usize,
    pub generator: String,
    pub char_poly: IntPolynomial,
    pub cyclotomic_orders: Vec<u64>,
    pub all_roots_real_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpectralReport {
    pub entries: Vec<SpectralEntry>,
}

/// Per level, the action of each basis element on the lattice coordinates of that
/// level, `L⁻¹ D L`, with labels.
pub fn subgroup_actions(sub: &Subgroup, label: impl Fn(&crate::group::Element) -> String) -> Result<(Vec<Vec<IntegerMatrix>>, Vec<String>), SpectraError> {
    let lat = &sub.lattice;
    let filt = lat.filtration();
    let mut per_level = vec![Vec::new(); filt.num_levels()];
    let mut names = Vec::new();
    for (_, b) in lat.all_basis() {
        for level in filt.levels() {
            let l = lat.translation_matrix(level);
            let f = l.inverse()?.checked_mul(&b.map.diag_block(level))?.checked_mul(l)?;
            per_level[level - 1].push(f.to_integer().ok_or(SpectraError::NonInteger)?);
        }
        names.push(label(b));
    }
    Ok((per_level, names))
}

pub fn spectral_report(actions: &[Vec<IntegerMatrix>], names: &[String]) -> Result<SpectralReport, SpectraError> {
    let mut entries = Vec::new();
    for (li, gens) in actions.iter().enumerate() {
        for (g, m) in gens.iter().enumerate() {
            if m.is_identity() {
                continue;
            }
            let p = m.char_poly()?;
            entries.push(SpectralEntry {
                level: li + 1,
                generator: names.get(g).cloned().unwrap_or_else(|| format!("#{}", g + 1)),
                cyclotomic_orders: cyclotomic_factor_scan(&p, false)?,
                all_roots_real_positive: all_roots_real_positive(&p)?,
                char_poly: p,
            });
        }
    }
    Ok(SpectralReport { entries })
}

/// Net check of every level action of a subgroup: rank-one levels are decided by
/// [`net_certify`]; a level with two or more independent actions is left inconclusive.
pub fn net_certify_actions(actions: &[Vec<IntegerMatrix>], exponent_bound: u32) -> Result<Certification, SpectraError> {
    let mut verdict = Certification::Certified;
    for (li, gens) in actions.iter().enumerate() {
        let active: Vec<&IntegerMatrix> = gens.iter().filter(|m| !m.is_identity()).collect();
        match active.len() {
            0 => {}
            1 => match net_certify(active[0], exponent_bound)? {
                Certification::Refuted(mut w) => {
                    w.level = Some(li + 1);
                    return Ok(Certification::Refuted(w));
                }
                Certification::InconclusiveUpToBound(b) => verdict = Certification::InconclusiveUpToBound(b),
                Certification::Certified => {}
            },
            _ => verdict = Certification::InconclusiveUpToBound(exponent_bound),
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::fixtures::matrix_a;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    #[test]
    fn nr_examples() {
        let a = matrix_a();
        match nr_certify(&[vec![a.clone()]], 3).unwrap() {
            Certification::Refuted(w) => {
                assert_eq!(w.order, 2);
                assert_eq!(w.level, Some(1));
                assert!(verify_nr_witness(&[vec![a.clone()]], &w));
            }
            other => panic!("expected refutation, got {other:?}"),
        }
        let a2 = a.pow(2).unwrap();
        assert_eq!(nr_certify(&[vec![a2, IntegerMatrix::identity(5)]], 3).unwrap(), Certification::Certified);
        assert_eq!(nr_certify(&[vec![IntegerMatrix::identity(3)]], 3).unwrap(), Certification::Certified);
    }

    #[test]
    fn nr_rank_two() {
        let x = IntegerMatrix::from_i64_rows(&[&[2, 1], &[1, 1]]);
        let y = x.pow(2).unwrap();
        // commuting, both hyperbolic: scan finds nothing
        assert_eq!(nr_certify(&[vec![x.clone(), y]], 2).unwrap(), Certification::InconclusiveUpToBound(2));
        let minus = IntegerMatrix::from_i64_rows(&[&[-1, 0], &[0, -1]]);
        let hit = nr_certify(&[vec![x.clone(), minus.clone()]], 2).unwrap();
        let Certification::Refuted(w) = hit else { panic!("expected refutation") };
        assert!(verify_nr_witness(&[vec![x.clone(), minus]], &w));
        let z = IntegerMatrix::from_i64_rows(&[&[1, 1], &[0, 1]]);
        assert!(matches!(nr_certify(&[vec![x, z]], 2), Err(SpectraError::NonCommuting { level: 1, .. })));
    }

    #[test]
    fn net_examples() {
        let a = matrix_a();
        let Certification::Refuted(w) = net_certify(&a, 2).unwrap() else { panic!("expected refutation") };
        assert_eq!(w.order, 2);
        assert!(verify_net_witness(&a, &w));
        assert_eq!(net_certify(&a.pow(2).unwrap(), 2).unwrap(), Certification::InconclusiveUpToBound(2));
        assert_eq!(net_certify(&IntegerMatrix::identity(3), 2).unwrap(), Certification::Certified);
        // eigenvalues (3 ± √5)/2, both positive
        let hyp = IntegerMatrix::from_i64_rows(&[&[2, 1], &[1, 1]]);
        assert_eq!(net_certify(&hyp, 2).unwrap(), Certification::Certified);
        // eigenvalues λ and -1/λ: their product -1 is found by the Kronecker scan
        let anti = IntegerMatrix::from_i64_rows(&[&[1, 1], &[1, 0]]);
        let Certification::Refuted(w) = net_certify(&anti, 2).unwrap() else { panic!("expected refutation") };
        assert_eq!(w.exponents.len(), 2);
        assert!(verify_net_witness(&anti, &w));
        assert!(net_certify(&IntegerMatrix::from_i64_rows(&[&[2]]), 2).is_err());
    }

    #[test]
    fn wilking_values() {
        assert_eq!(wilking_exponent(1), BigInt::from(2));
        assert_eq!(wilking_exponent(2), BigInt::from(12));
        assert_eq!(wilking_exponent(4), BigInt::from(120));
    }

    #[test]
    fn exponent_enumeration() {
        let v = exponent_vectors(2, 1);
        assert_eq!(v, vec![vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 0]]);
        let k = kronecker_exponents(2);
        assert!(k.contains(&vec![1, 1]) && k.contains(&vec![-1, 1]) && k.contains(&vec![2]));
        assert!(!k.contains(&vec![1, -1]));
    }

    /// Resultant of `y² - t1 y + d1` and `d2 y² - t2 x y + x²` in `y`, via the Sylvester determinant.
    fn product_root_poly_at(m: &IntegerMatrix, n: &IntegerMatrix, x: i64) -> BigInt {
        let tr = |a: &IntegerMatrix| a.get(0, 0) + a.get(1, 1);
        let (t1, d1) = (tr(m), m.det().unwrap());
        let (t2, d2) = (tr(n), n.det().unwrap());
        let x = BigInt::from(x);
        let f = [BigInt::from(1), -t1, d1];
        let g = [d2, -t2 * &x, &x * &x];
        let z = BigInt::from(0);
        let syl = IntegerMatrix::from_rows(vec![
            vec![f[0].clone(), f[1].clone(), f[2].clone(), z.clone()],
            vec![z.clone(), f[0].clone(), f[1].clone(), f[2].clone()],
            vec![g[0].clone(), g[1].clone(), g[2].clone(), z.clone()],
            vec![z.clone(), g[0].clone(), g[1].clone(), g[2].clone()],
        ])
        .unwrap();
        syl.det().unwrap()
    }

    fn mat2() -> impl Strategy<Value = IntegerMatrix> {
        prop::array::uniform4(-3i64..=3).prop_map(|e| IntegerMatrix::from_i64_rows(&[&[e[0], e[1]], &[e[2], e[3]]]))
    }

    fn unimodular2() -> impl Strategy<Value = IntegerMatrix> {
        prop::collection::vec(prop::sample::select(vec![0usize, 1, 2, 3]), 1..6).prop_map(|steps| {
            let gens = [
                IntegerMatrix::from_i64_rows(&[&[1, 1], &[0, 1]]),
                IntegerMatrix::from_i64_rows(&[&[1, 0], &[1, 1]]),
                IntegerMatrix::from_i64_rows(&[&[0, 1], &[1, 0]]),
                IntegerMatrix::from_i64_rows(&[&[-1, 0], &[0, 1]]),
            ];
            steps.iter().fold(IntegerMatrix::identity(2), |acc, &s| &acc * &gens[s])
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn kronecker_char_poly_is_product_of_roots(m in mat2(), n in mat2()) {
            let p = m.kronecker(&n).char_poly().unwrap();
            for x in -3..=3 {
                prop_assert_eq!(p.eval(&BigInt::from(x)), product_root_poly_at(&m, &n, x));
            }
        }

        #[test]
        fn nr_consistent_under_powers(g in unimodular2(), j in 1u32..=5) {
            if nr_certify(&[vec![g.clone()]], 2).unwrap().is_certified() {
                prop_assert!(!nr_certify(&[vec![g.pow(j).unwrap()]], 2).unwrap().is_refuted());
            }
        }

        #[test]
        fn refutations_reverify(g in unimodular2(), h in unimodular2()) {
            let actions = vec![vec![g.clone()]];
            if let Certification::Refuted(w) = nr_certify(&actions, 2).unwrap() {
                prop_assert!(verify_nr_witness(&actions, &w));
            }
            if let Certification::Refuted(w) = net_certify(&h, 2).unwrap() {
                prop_assert!(verify_net_witness(&h, &w));
            }
        }
    }
}
