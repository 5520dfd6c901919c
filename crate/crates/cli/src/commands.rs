//! Command-line parsing and the command runners.

use std::fmt::Display;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use nielsen_core::canonical::{compose_maps, CanonicalMap};
use nielsen_core::exactla::{IntegerMatrix, RationalMatrix};
use nielsen_core::fixedpoints::{count_fixed_points_on_quotient, solve_fixed_points, FixSet, FixedPointCount, FixedPointError};
use nielsen_core::group::{Subgroup, Word};
use nielsen_core::nielsen::{
    net_status, nielsen_average_invariant, nielsen_average_net, nielsen_via_jacobian, nr_status, NielsenResult,
};
use nielsen_core::reidemeister::{brute_force_coker, reidemeister_abelian, reidemeister_filtered, Count, ReidemeisterError};
use nielsen_core::spectra::{spectral_report, subgroup_actions};

use crate::expr::Rat;
use crate::report::{int, ints, rat, rats, Hypothesis, Report};
use crate::specfile::{self, to_json, LoadedSpec};

#[derive(Parser, Debug)]
#[command(name = "nielsen", about = "Nielsen and Reidemeister numbers of self-maps of infra-solvmanifolds")]
pub struct Cli {
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Parameter values, as `name=value` pairs separated by commas.
    #[arg(long = "param", global = true, allow_hyphen_values = true)]
    pub params: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Nielsen number by averaging over cosets.
    Nielsen {
        spec: String,
        #[arg(long, value_enum, default_value_t = Route::Invariant)]
        route: Route,
        /// Sample points per coset for the Jacobian route.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reidemeister number and class representatives.
    Reidemeister { spec: String },
    /// Fixed points of the induced map, and of individual lifts.
    FixedPoints {
        spec: String,
        /// Only solve `ρ(word) ∘ p = id`.
        #[arg(long)]
        word: Option<String>,
    },
    /// NR property of a subgroup's linear parts.
    CertifyNr {
        spec: String,
        #[arg(long, value_enum, default_value_t = Which::Averaging)]
        subgroup: Which,
    },
    /// Net property of the net subgroup.
    CertifyNet { spec: String },
    /// Diagonal blocks of the generators and of the lift.
    Linearise {
        spec: String,
        /// Linearise `ρ(word) ∘ p` instead.
        #[arg(long)]
        word: Option<String>,
    },
    /// Brute-force cross-checks of the exact computations.
    Oracle {
        spec: String,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Load and validate a spec; `--canonical` prints it in normal form.
    Validate {
        spec: String,
        #[arg(long)]
        canonical: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Invariant,
    Net,
    Jacobian,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Lattice,
    Averaging,
    Net,
}

/// Anything that makes a command fail with exit code 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError(pub String);

impl<E: Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => Outcome {
            code: if e.use_stderr() { 1 } else { 0 },
            stdout: if e.use_stderr() { String::new() } else { e.to_string() },
            stderr: if e.use_stderr() { e.to_string() } else { String::new() },
        },
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match execute(cli) {
        Ok(Output::Report(r)) => Outcome {
            stdout: if cli.json { r.to_json() } else { r.to_text() },
            stderr: String::new(),
            code: r.exit_code(),
        },
        Ok(Output::Raw(s)) => Outcome {
            stdout: s,
            stderr: String::new(),
            code: 0,
        },
        Err(CliError(msg)) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            code: 1,
        },
    }
}

enum Output {
    Report(Report),
    Raw(String),
}

fn spec_path(c: &Command) -> &str {
    match c {
        Command::Nielsen { spec, .. }
        | Command::Reidemeister { spec }
        | Command::FixedPoints { spec, .. }
        | Command::CertifyNr { spec, .. }
        | Command::CertifyNet { spec }
        | Command::Linearise { spec, .. }
        | Command::Oracle { spec, .. }
        | Command::Validate { spec, .. } => spec,
    }
}

fn execute(cli: &Cli) -> Result<Output, CliError> {
    let overrides = specfile::parse_overrides(&cli.params)?;
    let text = specfile::read_spec(spec_path(&cli.command))?;
    let spec = specfile::load_str(&text, &overrides)?;
    let report = |command: String| {
        let mut r = Report::new(command, spec.name(), spec.param_strings());
        r.notes = spec.file.notes.clone();
        r
    };
    let out = match &cli.command {
        Command::Nielsen { route, samples, seed, .. } => {
            let mut r = report(format!("nielsen --route {}", route_name(*route)));
            nielsen(&spec, *route, *samples, *seed, &mut r)?;
            r
        }
        Command::Reidemeister { .. } => {
            let mut r = report("reidemeister".into());
            reidemeister(&spec, &mut r)?;
            r
        }
        Command::FixedPoints { word, .. } => {
            let mut r = report("fixed-points".into());
            fixed_points(&spec, word.as_deref(), &mut r)?;
            r
        }
        Command::CertifyNr { subgroup, .. } => {
            let mut r = report(format!("certify-nr --subgroup {}", which_name(*subgroup)));
            certify_nr(&spec, *subgroup, &mut r)?;
            r
        }
        Command::CertifyNet { .. } => {
            let mut r = report("certify-net".into());
            certify_net(&spec, &mut r)?;
            r
        }
        Command::Linearise { word, .. } => {
            let mut r = report("linearise".into());
            linearise(&spec, word.as_deref(), &mut r)?;
            r
        }
        Command::Oracle { samples, .. } => {
            let mut r = report("oracle".into());
            oracle(&spec, *samples, &mut r)?;
            r
        }
        Command::Validate { canonical: true, .. } => return Ok(Output::Raw(to_json(&spec.canonical()))),
        Command::Validate { .. } => {
            let mut r = report("validate".into());
            validate(&spec, &mut r)?;
            r
        }
    };
    Ok(Output::Report(out))
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Invariant => "invariant",
        Route::Net => "net",
        Route::Jacobian => "jacobian",
    }
}

fn which_name(w: Which) -> &'static str {
    match w {
        Which::Lattice => "lattice",
        Which::Averaging => "averaging",
        Which::Net => "net",
    }
}

fn word(spec: &LoadedSpec, w: &Word) -> String {
    spec.model.group.word_string(w)
}

/// Random rational points with small numerators and denominators.
pub fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<Rat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| Rat::new(BigInt::from(rng.gen_range(-20..=20)), BigInt::from(rng.gen_range(1..=7))))
                .collect()
        })
        .collect()
}

fn terms_value(spec: &LoadedSpec, result: &NielsenResult) -> Value {
    Value::Array(
        result
            .terms
            .iter()
            .map(|t| {
                let mut m = serde_json::Map::new();
                m.insert("coset".into(), word(spec, &t.word).into());
                if !t.level_determinants.is_empty() {
                    m.insert("level_determinants".into(), ints(&t.level_determinants));
                }
                m.insert("product".into(), int(&t.product));
                Value::Object(m)
            })
            .collect(),
    )
}

fn nielsen(spec: &LoadedSpec, route: Route, samples: usize, seed: u64, r: &mut Report) -> Result<(), CliError> {
    let (group, endo) = (&spec.model.group, &spec.model.endo);
    let hyp = spec.file.hypotheses;
    let nr_claim = format!("NR property of {}", group.averaging().name());
    let (result, claim, assertion) = match route {
        Route::Invariant => (nielsen_average_invariant(group, endo)?, nr_claim, hyp.nr),
        Route::Net => {
            let result = nielsen_average_net(group, endo)?;
            let name = group.net().map_or("K'", |k| k.name());
            (result, format!("net property of {name}"), hyp.net)
        }
        Route::Jacobian => {
            let points = sample_points(group.filtration().dim(), samples, seed);
            (nielsen_via_jacobian(group, endo, &points)?, nr_claim, hyp.nr)
        }
    };
    r.hypothesis = Some(Hypothesis::from_certification(&claim, &result.hypothesis, assertion));
    r.set("value", int(&result.value));
    r.set("index", result.index);
    r.set("terms", terms_value(spec, &result));
    if route == Route::Jacobian {
        r.set("samples_per_coset", samples);
        r.set("seed", seed);
        r.set("constancy", "passed");
    }
    Ok(())
}

fn count_value(c: &Count) -> Value {
    match c {
        Count::Finite(n) => int(n),
        Count::Infinite => "infinity".into(),
    }
}

fn reidemeister(spec: &LoadedSpec, r: &mut Report) -> Result<(), CliError> {
    let (group, endo) = (&spec.model.group, &spec.model.endo);
    let result = reidemeister_filtered(group, endo)?;
    r.set("count", count_value(&result.count));
    if result.count.is_finite() {
        let reps: Vec<Value> = result.representatives.iter().map(|c| word(spec, &c.word).into()).collect();
        r.set("representatives", reps);
    }
    if !result.infinite_nodes.is_empty() {
        let nodes: Vec<Value> = result
            .infinite_nodes
            .iter()
            .map(|n| json!({"level": n.level, "twist": word(spec, &n.twist.word)}))
            .collect();
        r.set("infinite_nodes", nodes);
    }
    if let Ok(n) = nielsen_average_invariant(group, endo) {
        r.set("nielsen", int(&n.value));
        if let Count::Finite(v) = &result.count {
            r.set("n_equals_r", *v == n.value);
        }
    }
    Ok(())
}

fn fix_set_value(f: &FixSet) -> Result<Value, CliError> {
    Ok(match f {
        FixSet::Empty => json!({"kind": "empty"}),
        FixSet::Unique(p) => json!({"kind": "unique", "point": rats(p)}),
        FixSet::PositiveDimensional(pd) => {
            let params: Vec<String> = pd.parameters.iter().map(|p| format!("x{}", p + 1)).collect();
            json!({
                "kind": "positive-dimensional",
                "first_degenerate_level": pd.first_degenerate_level,
                "kernel_basis": pd.kernel_basis.iter().map(|v| rats(v)).collect::<Vec<_>>(),
                "parameters": params,
                "parametrization": pd.parametrization.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "base_point": rats(&pd.base_point()?),
                "another_point": rats(&pd.another_point()?),
            })
        }
    })
}

fn lifted(spec: &LoadedSpec, alpha: &CanonicalMap) -> Result<CanonicalMap, CliError> {
    Ok(compose_maps(alpha, spec.model.endo.lift())?)
}

fn fixed_points(spec: &LoadedSpec, only: Option<&str>, r: &mut Report) -> Result<(), CliError> {
    let group = &spec.model.group;
    let names: Vec<String> = group.generators().iter().map(|g| g.name.clone()).collect();
    if let Some(text) = only {
        let w = specfile::parse_word(text, &names, &spec.params, "--word")?;
        let f = lifted(spec, &group.evaluate(&w)?)?;
        r.set("lift", format!("{} ∘ p", word(spec, &w)));
        r.set("fixed_set", fix_set_value(&solve_fixed_points(&f)?)?);
        return Ok(());
    }
    match count_fixed_points_on_quotient(group, &spec.model.endo) {
        Ok(FixedPointCount::Finite(n)) => r.set("count", int(&n)),
        Ok(FixedPointCount::Uncountable) => r.set("count", "uncountable"),
        Err(FixedPointError::Undetermined) => r.set("count", "undetermined"),
        Err(e) => return Err(e.into()),
    }
    let mut lifts = Vec::new();
    for c in &group.averaging().cosets {
        let f = lifted(spec, &c.map)?;
        lifts.push(json!({"coset": word(spec, &c.word), "fixed_set": fix_set_value(&solve_fixed_points(&f)?)?}));
    }
    r.set("lifts", lifts);
    Ok(())
}

fn pick(spec: &LoadedSpec, which: Which) -> &Subgroup {
    let g = &spec.model.group;
    match which {
        Which::Lattice => g.top(),
        Which::Averaging => g.averaging(),
        Which::Net => g.net().unwrap_or(g.averaging()),
    }
}

fn spectra_value(spec: &LoadedSpec, sub: &Subgroup) -> Result<Value, CliError> {
    let (actions, names) = subgroup_actions(sub, |e| word(spec, &e.word))?;
    let report = spectral_report(&actions, &names)?;
    Ok(Value::Array(
        report
            .entries
            .iter()
            .map(|e| {
                json!({
                    "level": e.level,
                    "generator": e.generator,
                    "char_poly": e.char_poly.to_string(),
                    "cyclotomic_orders": e.cyclotomic_orders,
                    "all_roots_real_positive": e.all_roots_real_positive,
                })
            })
            .collect(),
    ))
}

fn certify_nr(spec: &LoadedSpec, which: Which, r: &mut Report) -> Result<(), CliError> {
    let sub = pick(spec, which);
    let cert = nr_status(sub)?;
    let claim = format!("NR property of {}", sub.name());
    r.hypothesis = Some(Hypothesis::from_certification(&claim, &cert, spec.file.hypotheses.nr));
    r.set("subgroup", sub.name());
    r.set("spectra", spectra_value(spec, sub)?);
    Ok(())
}

fn certify_net(spec: &LoadedSpec, r: &mut Report) -> Result<(), CliError> {
    let sub = pick(spec, Which::Net);
    let cert = net_status(sub)?;
    let claim = format!("net property of {}", sub.name());
    r.hypothesis = Some(Hypothesis::from_certification(&claim, &cert, spec.file.hypotheses.net));
    r.set("subgroup", sub.name());
    r.set("spectra", spectra_value(spec, sub)?);
    Ok(())
}

fn matrix_value(m: &RationalMatrix) -> Value {
    Value::Array(m.to_rows().iter().map(|row| rats(row)).collect())
}

fn blocks_value(f: &CanonicalMap) -> Result<Value, CliError> {
    let mut levels = Vec::new();
    for level in f.filtration().levels() {
        let d = f.diag_block(level);
        let det = d.identity_minus()?.det()?;
        levels.push(json!({"level": level, "block": matrix_value(&d), "det_i_minus_block": rat(&det)}));
    }
    Ok(Value::Array(levels))
}

fn linearise(spec: &LoadedSpec, only: Option<&str>, r: &mut Report) -> Result<(), CliError> {
    let group = &spec.model.group;
    if let Some(text) = only {
        let names: Vec<String> = group.generators().iter().map(|g| g.name.clone()).collect();
        let w = specfile::parse_word(text, &names, &spec.params, "--word")?;
        let f = lifted(spec, &group.evaluate(&w)?)?;
        r.set("map", format!("{} ∘ p", word(spec, &w)));
        r.set("levels", blocks_value(&f)?);
        return Ok(());
    }
    let mut gens = Vec::new();
    for g in group.generators() {
        gens.push(json!({"generator": g.name, "levels": blocks_value(&g.map)?}));
    }
    r.set("generators", gens);
    r.set("lift", blocks_value(spec.model.endo.lift())?);
    Ok(())
}

fn validate(spec: &LoadedSpec, r: &mut Report) -> Result<(), CliError> {
    let group = &spec.model.group;
    r.set("filtration", group.filtration().block_dims().to_vec());
    r.set("generators", group.generators().iter().map(|g| g.name.clone()).collect::<Vec<_>>());
    r.set("lattice_cosets", group.top().index());
    r.set("averaging_cosets", group.averaging().index());
    if let Some(net) = group.net() {
        r.set("net_cosets", net.index());
    }
    r.set("equivariant", true);
    let invariant = spec.model.endo.check_invariant(&group.averaging().lattice).is_ok();
    r.set("averaging_invariant", invariant);
    Ok(())
}

/// `L⁻¹ D L` in the averaging lattice's coordinates, when integral.
fn level_matrix(sub: &Subgroup, f: &CanonicalMap, level: usize) -> Result<Option<IntegerMatrix>, CliError> {
    let l = sub.lattice.translation_matrix(level);
    Ok(l.inverse()?.checked_mul(&f.diag_block(level))?.checked_mul(l)?.to_integer())
}

fn oracle(spec: &LoadedSpec, samples: usize, r: &mut Report) -> Result<(), CliError> {
    let (group, endo) = (&spec.model.group, &spec.model.endo);
    let k = group.averaging();
    let mut checks = Vec::new();
    let mut failed = false;
    let mut record = |name: String, expected: Value, found: Value, status: &str| {
        failed |= status == "disagree";
        checks.push(json!({"check": name, "expected": expected, "found": found, "status": status}));
    };
    for c in &k.cosets {
        let f = lifted(spec, &c.map)?;
        for level in f.filtration().levels() {
            let name = format!("cokernel of I - F at coset {}, level {level}", word(spec, &c.word));
            let Some(m) = level_matrix(k, &f, level)? else {
                record(name, Value::Null, Value::Null, "skipped");
                continue;
            };
            let exact = reidemeister_abelian(&m)?.count;
            let Count::Finite(n) = &exact else {
                record(name, "infinity".into(), Value::Null, "skipped");
                continue;
            };
            match brute_force_coker(&m.identity_minus()?, None) {
                Ok(b) => {
                    let status = if b == *n { "agree" } else { "disagree" };
                    record(name, int(n), int(&b), status);
                }
                Err(ReidemeisterError::TorusTooLarge { .. }) => record(name, int(n), Value::Null, "skipped"),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let linear = nielsen_average_invariant(group, endo)?;
    let points = sample_points(group.filtration().dim(), samples, 0);
    match nielsen_via_jacobian(group, endo, &points) {
        Ok(j) => {
            let status = if j.value == linear.value { "agree" } else { "disagree" };
            record("Jacobian route against linear parts".into(), int(&linear.value), int(&j.value), status);
        }
        Err(e) => record("Jacobian route against linear parts".into(), int(&linear.value), e.to_string().into(), "disagree"),
    }
    let reid = reidemeister_filtered(group, endo)?.count;
    match &reid {
        Count::Finite(v) => {
            let status = if *v == linear.value { "agree" } else { "disagree" };
            record("Reidemeister number against Nielsen number".into(), int(&linear.value), int(v), status);
        }
        Count::Infinite => record("Reidemeister number against Nielsen number".into(), int(&linear.value), "infinity".into(), "skipped"),
    }
    r.set("checks", checks);
    r.set("status", if failed { "disagreement found" } else { "all checks agree" });
    r.failed = failed;
    Ok(())
}
