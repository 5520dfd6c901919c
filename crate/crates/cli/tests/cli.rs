use std::process::Command;

use nielsen_cli::run_args;
use nielsen_cli::specfile::{self, bundled, load_str, parse, to_json, BUNDLED};
use nielsen_core::group::GroupSpec;
use nielsen_core::models::{self, Model};
use serde_json::Value;

fn load(name: &str, params: &[(&str, i64)]) -> Model {
    let overrides: Vec<(String, String)> = params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    load_str(bundled(name).unwrap(), &overrides).unwrap().model
}

fn same_subgroup(a: &nielsen_core::group::Subgroup, b: &nielsen_core::group::Subgroup) -> bool {
    let maps = |s: &nielsen_core::group::Subgroup| {
        let basis: Vec<_> = s.lattice.all_basis().map(|(l, e)| (l, e.map.clone())).collect();
        let cosets: Vec<_> = s.cosets.iter().map(|c| c.map.clone()).collect();
        (basis, cosets)
    };
    maps(a) == maps(b)
}

fn same_group(a: &GroupSpec, b: &GroupSpec) -> bool {
    let gens = |g: &GroupSpec| g.generators().iter().map(|x| (x.name.clone(), x.map.clone())).collect::<Vec<_>>();
    gens(a) == gens(b)
        && same_subgroup(a.top(), b.top())
        && same_subgroup(a.averaging(), b.averaging())
        && a.net().is_some() == b.net().is_some()
        && a.net().zip(b.net()).is_none_or(|(x, y)| same_subgroup(x, y))
}

fn same_model(a: &Model, b: &Model) -> bool {
    same_group(&a.group, &b.group) && a.endo.lift() == b.endo.lift() && a.endo.images() == b.endo.images()
}

#[test]
fn bundled_files_match_the_library_models() {
    for k in -3..=3 {
        assert!(same_model(&load("big_example.json", &[("k", k)]), &models::big_example(k).unwrap()), "k = {k}");
        assert!(
            same_model(&load("big_example_polymap.json", &[("k", k)]), &models::big_example_polymap(k).unwrap()),
            "k = {k}"
        );
    }
    for (a, c) in [(2, 3), (1, 1), (-1, -1), (0, 5)] {
        let file = load("klein_bottle.json", &[("a", a), ("c", c)]);
        let lib = models::klein_bottle(a, c).unwrap();
        assert!(same_model(&file, &lib), "a = {a}, c = {c}");
    }
    for (a, b) in [(2, 3), (-1, 2), (3, 3)] {
        let file = load("heisenberg_nil.json", &[("a", a), ("b", b)]);
        let lib = models::heisenberg(a, b).unwrap();
        // The file adds a net subgroup equal to the lattice; everything else must agree.
        let gens = |g: &GroupSpec| g.generators().iter().map(|x| x.map.clone()).collect::<Vec<_>>();
        assert_eq!(gens(&file.group), gens(&lib.group));
        assert!(same_subgroup(file.group.top(), lib.group.top()));
        assert_eq!(file.endo.lift(), lib.endo.lift());
        assert_eq!(file.endo.images(), lib.endo.images());
    }
}

#[test]
fn documented_command_examples() {
    let out = run_args(["nielsen", "nielsen", "--route", "invariant", "big_example.json", "--param", "k=2", "--json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["results"]["value"], 12);

    let out = run_args(["nielsen", "reidemeister", "klein_bottle.json", "--param", "a=-1,c=-1", "--json"]);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["results"]["count"], "infinity");

    let out = run_args(["nielsen", "nielsen", "--route", "jacobian", "big_example.json", "--param", "k=1", "--samples", "10", "--json"]);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["results"]["value"], 6);
    assert_eq!(v["results"]["constancy"], "passed");
    assert_eq!(v["results"]["samples_per_coset"], 10);
}

fn value_of(args: &[&str]) -> Value {
    let mut full = vec!["nielsen"];
    full.extend_from_slice(args);
    full.push("--json");
    let out = run_args(full);
    assert_eq!(out.code, 0, "{args:?}: {}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    v["results"]["value"].clone()
}

#[test]
fn routes_agree_on_every_bundled_spec() {
    let cases: [(&str, &[&str]); 8] = [
        ("big_example.json", &["k=0", "k=-2"]),
        ("big_example_polymap.json", &["k=1", "k=3"]),
        ("klein_bottle.json", &["a=2,c=3", "a=-1,c=-1"]),
        ("heisenberg_nil.json", &["a=2,b=3", "a=-2,b=5"]),
        ("big_example.json", &["k=2"]),
        ("big_example_polymap.json", &["k=-1"]),
        ("klein_bottle.json", &["a=1,c=1"]),
        ("heisenberg_nil.json", &["a=3,b=-1"]),
    ];
    for (spec, params) in cases {
        for p in params {
            let inv = value_of(&["nielsen", "--route", "invariant", spec, "--param", p]);
            let jac = value_of(&["nielsen", "--route", "jacobian", spec, "--param", p, "--samples", "4"]);
            let net = value_of(&["nielsen", "--route", "net", spec, "--param", p]);
            assert_eq!(inv, jac, "{spec} {p}");
            assert_eq!(inv, net, "{spec} {p}");
        }
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for (name, _) in BUNDLED {
        for cmd in [&["nielsen", name][..], &["reidemeister", name], &["fixed-points", name], &["oracle", name], &["certify-nr", name]] {
            for json in [false, true] {
                let mut args = vec!["nielsen"];
                args.extend_from_slice(cmd);
                if json {
                    args.push("--json");
                }
                let first = run_args(args.clone());
                let again = run_args(args);
                assert_eq!(first.code, 0, "{cmd:?}: {}", first.stderr);
                assert_eq!(first.stdout, again.stdout);
            }
        }
    }
}

#[test]
fn spec_files_round_trip() {
    for (name, text) in BUNDLED {
        let file = parse(text).unwrap();
        assert_eq!(parse(&to_json(&file)).unwrap(), file, "{name}");

        let loaded = load_str(text, &[]).unwrap();
        let canonical = loaded.canonical();
        let reloaded = load_str(&to_json(&canonical), &[]).unwrap();
        assert_eq!(reloaded.canonical(), canonical, "{name}");
        assert!(same_model(&loaded.model, &reloaded.model), "{name}");
    }
}

#[test]
fn canonical_output_of_a_parametrised_spec_has_no_symbols() {
    let out = run_args(["nielsen", "validate", "--canonical", "big_example.json", "--param", "k=-3"]);
    assert_eq!(out.code, 0);
    let file = parse(&out.stdout).unwrap();
    assert!(file.parameters.is_empty());
    let model = load_str(&out.stdout, &[]).unwrap().model;
    assert!(same_model(&model, &models::big_example(-3).unwrap()));
}

#[test]
fn non_unimodular_generator_is_rejected_with_its_level() {
    let mut v: Value = serde_json::from_str(bundled("klein_bottle.json").unwrap()).unwrap();
    v["generators"][1]["levels"][1]["matrix"] = serde_json::json!([[2]]);
    let err = load_str(&v.to_string(), &[]).unwrap_err();
    assert!(err.message.contains("generator `t`"), "{err}");
    assert!(err.message.contains("level 2"), "{err}");
    assert!(err.message.contains("determinant 2"), "{err}");
}

#[test]
fn malformed_inputs_report_their_location() {
    let mut v: Value = serde_json::from_str(bundled("big_example.json").unwrap()).unwrap();
    v["generators"][0]["levels"][1]["shift"] = serde_json::json!([1, 2]);
    let err = load_str(&v.to_string(), &[]).unwrap_err();
    assert_eq!(err.location, "generators[0] `t`, level 2, shift");

    let mut v: Value = serde_json::from_str(bundled("big_example.json").unwrap()).unwrap();
    v["endomorphism"]["images"]["e2"] = "e2 q".into();
    let err = load_str(&v.to_string(), &[]).unwrap_err();
    assert_eq!(err.location, "endomorphism.images.e2");

    let mut v: Value = serde_json::from_str(bundled("klein_bottle.json").unwrap()).unwrap();
    v["endomorphism"]["images"]["t"] = "t^2".into();
    let err = load_str(&v.to_string(), &[]).unwrap_err();
    assert_eq!(err.location, "endomorphism");

    let mut v: Value = serde_json::from_str(bundled("klein_bottle.json").unwrap()).unwrap();
    v["version"] = "nielsen-spec/0".into();
    assert_eq!(load_str(&v.to_string(), &[]).unwrap_err().location, "version");

    let err = load_str("{\"version\": ", &[]).unwrap_err();
    assert!(err.location.starts_with("line 1"));
}

#[test]
fn lattice_of_the_twisted_family_is_refuted_as_nr() {
    let out = run_args(["nielsen", "certify-nr", "--subgroup", "lattice", "big_example.json", "--json"]);
    assert_eq!(out.code, 2);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["hypothesis"]["status"], "refuted");
}

#[test]
fn net_status_of_the_family_is_asserted_not_certified() {
    let out = run_args(["nielsen", "certify-net", "big_example.json", "--json"]);
    assert_eq!(out.code, 0);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["hypothesis"]["status"], "asserted");

    let mut file: Value = serde_json::from_str(bundled("big_example.json").unwrap()).unwrap();
    file["hypotheses"]["net"] = "certify".into();
    let loaded = load_str(&file.to_string(), &[]).unwrap();
    assert_eq!(loaded.file.hypotheses.net, specfile::Assertion::Certify);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_nielsen");
    let ok = Command::new(bin).args(["nielsen", "klein_bottle.json"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("value: 4"));
    let missing = Command::new(bin).args(["validate", "/nonexistent/spec.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    let refuted = Command::new(bin).args(["certify-nr", "--subgroup", "lattice", "big_example.json"]).output().unwrap();
    assert_eq!(refuted.status.code(), Some(2));
    let bad_param = Command::new(bin).args(["nielsen", "klein_bottle.json", "--param", "q=1"]).output().unwrap();
    assert_eq!(bad_param.status.code(), Some(1));
}

#[test]
fn klein_reports_carry_the_index_note() {
    let out = run_args(["nielsen", "nielsen", "klein_bottle.json", "--param", "a=-1,c=-1"]);
    assert!(out.stdout.contains("value: 2"));
    assert!(out.stdout.contains("without dividing by the index 2"));
}

#[test]
fn fixed_set_of_a_single_lift() {
    let out = run_args(["nielsen", "fixed-points", "klein_bottle.json", "--param", "a=-1,c=-1", "--word", "t", "--json"]);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let f = &v["results"]["fixed_set"];
    assert_eq!(f["kind"], "positive-dimensional");
    assert_eq!(f["first_degenerate_level"], 1);
    assert_eq!(f["parametrization"], serde_json::json!(["x1", "1/2"]));
}

#[test]
fn oracle_checks_agree_on_bundled_specs() {
    for (name, _) in BUNDLED {
        let out = run_args(["nielsen", "oracle", name, "--json"]);
        assert_eq!(out.code, 0, "{name}: {}", out.stderr);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["results"]["status"], "all checks agree");
    }
}
