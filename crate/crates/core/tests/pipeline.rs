//! Cross-module checks through the public API only.

use num_bigint::BigInt;
use num_traits::Signed;
use proptest::prelude::*;

use nielsen_core::canonical::compose_maps;
use nielsen_core::exactla::IntegerMatrix;
use nielsen_core::fixedpoints::{count_fixed_points_on_quotient, FixedPointCount};
use nielsen_core::models;
use nielsen_core::nielsen::{n_equals_r_check, nielsen_average_invariant, nielsen_via_jacobian, nr_status};
use nielsen_core::qpoly::Rat;
use nielsen_core::reidemeister::{check_addition_inequality, reidemeister_filtered, Count};
use nielsen_core::spectra::{spectral_report, subgroup_actions};

fn n(v: i64) -> BigInt {
    BigInt::from(v)
}

#[test]
fn coordinate_change_preserves_every_invariant() {
    for k in -2..=2 {
        let linear = models::big_example(k).unwrap();
        let poly = models::big_example_polymap(k).unwrap();
        let nl = nielsen_average_invariant(&linear.group, &linear.endo).unwrap();
        let np = nielsen_average_invariant(&poly.group, &poly.endo).unwrap();
        assert_eq!(nl.value, np.value);
        let rl = reidemeister_filtered(&linear.group, &linear.endo).unwrap().count;
        let rp = reidemeister_filtered(&poly.group, &poly.endo).unwrap().count;
        assert_eq!(rl, rp, "k = {k}");
        let fl = count_fixed_points_on_quotient(&linear.group, &linear.endo).unwrap();
        let fp = count_fixed_points_on_quotient(&poly.group, &poly.endo).unwrap();
        assert_eq!(fl, fp, "k = {k}");
    }
}

#[test]
fn heisenberg_numbers_agree() {
    let m = models::heisenberg(2, 3).unwrap();
    let both = n_equals_r_check(&m.group, &m.endo).unwrap();
    assert_eq!(both.nielsen, n(10));
    assert_eq!(both.reidemeister, Count::finite(10));
    let fix = count_fixed_points_on_quotient(&m.group, &m.endo).unwrap();
    assert_eq!(fix, FixedPointCount::Finite(n(10)));
    let pts: Vec<Vec<Rat>> = (0..5)
        .map(|i| (0..3).map(|j| Rat::new(n(i * 3 - j), n(j + 2))).collect())
        .collect();
    assert_eq!(nielsen_via_jacobian(&m.group, &m.endo, &pts).unwrap().value, n(10));
}

#[test]
fn family_lattice_is_not_nr_but_its_index_two_subgroup_is() {
    let m = models::big_example(2).unwrap();
    assert!(nr_status(m.group.top()).unwrap().is_refuted());
    assert!(nr_status(m.group.averaging()).unwrap().is_certified());
    let (actions, names) = subgroup_actions(m.group.averaging(), |e| m.group.word_string(&e.word)).unwrap();
    let report = spectral_report(&actions, &names).unwrap();
    assert_eq!(report.entries.len(), 1);
    assert_eq!(report.entries[0].generator, "t^2");
    assert!(report.entries[0].cyclotomic_orders.is_empty());
}

#[test]
fn addition_inequality_on_the_family() {
    for k in [-2, 2, 3] {
        let m = models::big_example(k).unwrap();
        let a = check_addition_inequality(&m.group, m.group.top(), &m.endo).unwrap();
        assert!(a.lhs.le(&a.rhs));
        assert_eq!(a.lhs, Count::finite(6 * k.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // On a torus N = |det(I - F)|, and it equals R and the number of fixed points
    // whenever det(I - F) is nonzero.
    #[test]
    fn torus_numbers_coincide(e in prop::collection::vec(-3i64..=3, 4)) {
        let f = IntegerMatrix::from_i64_rows(&[&e[0..2], &e[2..4]]);
        let det = f.identity_minus().unwrap().det().unwrap();
        let m = models::torus(&f).unwrap();
        let nv = nielsen_average_invariant(&m.group, &m.endo).unwrap().value;
        prop_assert_eq!(&nv, &det.abs());
        let r = reidemeister_filtered(&m.group, &m.endo).unwrap().count;
        let fix = count_fixed_points_on_quotient(&m.group, &m.endo).unwrap();
        if det == n(0) {
            prop_assert_eq!(r, Count::Infinite);
            prop_assert_eq!(fix, FixedPointCount::Uncountable);
        } else {
            prop_assert_eq!(r, Count::Finite(nv.clone()));
            prop_assert_eq!(fix, FixedPointCount::Finite(nv));
        }
    }

    // Composing the lift with a group element twists φ by that element; the
    // Reidemeister number of the twisted map matches the Nielsen number again.
    #[test]
    fn twisted_family_keeps_n_equal_r(k in prop::sample::select(vec![-3i64, -2, 2, 3]), w in prop::collection::vec((0usize..6, -2i64..=2), 0..4)) {
        let m = models::big_example(k).unwrap();
        let g = m.group.evaluate(&w).unwrap();
        let twisted = m.endo.twisted(&g).unwrap();
        prop_assert_eq!(twisted.lift(), &compose_maps(&g, m.endo.lift()).unwrap());
        let both = n_equals_r_check(&m.group, &twisted).unwrap();
        prop_assert_eq!(both.nielsen, n(6 * k.abs()));
    }
}
