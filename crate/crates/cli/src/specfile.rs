//! The `nielsen-spec/1` file format: a group acting by canonical-type maps, its
//! lattice and averaging subgroups, and one endomorphism with its lift.
//!
//! Numbers are JSON integers or strings holding exact expressions (`"1/2"`,
//! `"2*k+1"`). Words are strings like `"t^-1 e2 e5^(k+1)"`; `e` or `1` is the
//! identity when no generator has that name.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use nielsen_core::canonical::{CanonicalMap, Filtration};
use nielsen_core::group::{EndoSpec, GroupSpec, SubgroupWords, Word};
use nielsen_core::models::Model;
use nielsen_core::qpoly::MultiPoly;

use crate::expr::{self, format_rat, Params, Rat};

pub const VERSION: &str = "nielsen-spec/1";

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    fn eval(&self, params: &Params) -> Result<Rat, expr::ExprError> {
        match self {
            Scalar::Int(v) => Ok(Rat::from_integer(BigInt::from(*v))),
            Scalar::Text(s) => expr::eval(s, params),
        }
    }

    fn from_rat(r: &Rat) -> Self {
        match expr::is_small_integer(r) {
            Some(v) => Scalar::Int(v),
            None => Scalar::Text(format_rat(r)),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Default values of the symbols used in expressions.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, Scalar>,
    pub filtration: Vec<usize>,
    pub generators: Vec<GeneratorSpec>,
    pub lattice: SubgroupSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaging: Option<SubgroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<SubgroupSpec>,
    pub endomorphism: EndomorphismSpec,
    #[serde(default)]
    pub hypotheses: Hypotheses,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub levels: Vec<LevelSpec>,
}

/// Level `i` of a map: `matrix · x_i + shift + Σ tail terms`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub matrix: Vec<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shift: Vec<Scalar>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tail: Vec<TermSpec>,
}

/// `coefficient · x^exponents` added to output `row` (1-based within the level).
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub row: usize,
    pub coefficient: Scalar,
    pub exponents: Vec<u32>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct SubgroupSpec {
    /// Translation basis words, one list per level.
    pub basis: Vec<Vec<String>>,
    /// Right coset representatives; the first must be the identity.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cosets: Vec<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct EndomorphismSpec {
    pub lift: Vec<LevelSpec>,
    /// Image word of every generator.
    pub images: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum Assertion {
    /// Rely on the certification alone.
    #[default]
    Certify,
    /// The user vouches for the hypothesis when certification is inconclusive.
    Assert,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq, Default)]
#[serde(deny_unknown_fields)]
pub struct Hypotheses {
    #[serde(default)]
    pub nr: Assertion,
    #[serde(default)]
    pub net: Assertion,
}

/// A load failure and where in the file it happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadError {
    pub location: String,
    pub message: String,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for LoadError {}

fn fail<T>(location: impl Into<String>, message: impl fmt::Display) -> Result<T, LoadError> {
    Err(LoadError {
        location: location.into(),
        message: message.to_string(),
    })
}

trait At<T> {
    fn at(self, location: impl FnOnce() -> String) -> Result<T, LoadError>;
}

impl<T, E: fmt::Display> At<T> for Result<T, E> {
    fn at(self, location: impl FnOnce() -> String) -> Result<T, LoadError> {
        self.or_else(|e| fail(location(), e))
    }
}

/// A validated model plus everything needed to write it back out.
#[derive(Clone, Debug)]
pub struct LoadedSpec {
    pub file: SpecFile,
    pub params: Params,
    pub model: Model,
    image_words: Vec<Word>,
    subgroup_words: [Option<SubgroupWords>; 3],
}

pub fn parse(text: &str) -> Result<SpecFile, LoadError> {
    let file: SpecFile = serde_json::from_str(text).or_else(|e| fail(format!("line {} column {}", e.line(), e.column()), e))?;
    if file.version != VERSION {
        return fail("version", format!("expected `{VERSION}`, found `{}`", file.version));
    }
    Ok(file)
}

/// `a=-1,c=3` into name/value pairs.
pub fn parse_overrides(items: &[String]) -> Result<Vec<(String, String)>, LoadError> {
    let mut out = Vec::new();
    for item in items.iter().flat_map(|s| s.split(',')).filter(|s| !s.trim().is_empty()) {
        let Some((k, v)) = item.split_once('=') else {
            return fail("--param", format!("`{item}` is not of the form name=value"));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn resolve_params(file: &SpecFile, overrides: &[(String, String)]) -> Result<Params, LoadError> {
    let empty = Params::new();
    let mut params = Params::new();
    for (name, value) in &file.parameters {
        params.insert(name.clone(), value.eval(&empty).at(|| format!("parameters.{name}"))?);
    }
    for (name, value) in overrides {
        if !params.contains_key(name) {
            return fail("--param", format!("spec has no parameter `{name}`"));
        }
        params.insert(name.clone(), expr::eval(value, &empty).at(|| format!("--param {name}"))?);
    }
    Ok(params)
}

pub fn load_str(text: &str, overrides: &[(String, String)]) -> Result<LoadedSpec, LoadError> {
    let file = parse(text)?;
    build(file, overrides)
}

pub fn load_path(path: &std::path::Path, overrides: &[(String, String)]) -> Result<LoadedSpec, LoadError> {
    let text = std::fs::read_to_string(path).at(|| path.display().to_string())?;
    load_str(&text, overrides)
}

fn build_map(filt: &Filtration, levels: &[LevelSpec], params: &Params, what: &str) -> Result<CanonicalMap, LoadError> {
    if levels.len() != filt.num_levels() {
        return fail(what, format!("{} levels given, filtration has {}", levels.len(), filt.num_levels()));
    }
    let h = filt.dim();
    let mut comps = Vec::with_capacity(h);
    for (li, level) in levels.iter().enumerate() {
        let k = filt.level_dim(li + 1);
        let here = |field: &str| format!("{what}, level {}, {field}", li + 1);
        if level.matrix.len() != k || level.matrix.iter().any(|r| r.len() != k) {
            return fail(here("matrix"), format!("expected a {k}x{k} matrix"));
        }
        if !level.shift.is_empty() && level.shift.len() != k {
            return fail(here("shift"), format!("expected {k} entries, found {}", level.shift.len()));
        }
        let offset = filt.offset(li + 1);
        for r in 0..k {
            let coeffs = level.matrix[r]
                .iter()
                .enumerate()
                .map(|(c, s)| s.eval(params).at(|| here(&format!("matrix[{}][{}]", r + 1, c + 1))))
                .collect::<Result<Vec<_>, _>>()?;
            let mut p = MultiPoly::linear(h, offset, &coeffs);
            if let Some(s) = level.shift.get(r) {
                let c = s.eval(params).at(|| here(&format!("shift[{}]", r + 1)))?;
                p = p.add(&MultiPoly::constant(h, c)).expect("same arity");
            }
            comps.push(p);
        }
        for (ti, term) in level.tail.iter().enumerate() {
            let loc = || here(&format!("tail[{ti}]"));
            if term.row == 0 || term.row > k {
                return fail(loc(), format!("row {} outside 1..={k}", term.row));
            }
            if term.exponents.len() != h {
                return fail(loc(), format!("expected {h} exponents, found {}", term.exponents.len()));
            }
            let c = term.coefficient.eval(params).at(loc)?;
            let j = offset + term.row - 1;
            comps[j] = comps[j].add(&MultiPoly::monomial(term.exponents.clone(), c)).expect("same arity");
        }
    }
    CanonicalMap::from_components(filt, comps).at(|| what.to_string())
}

pub fn parse_word(text: &str, names: &[String], params: &Params, what: &str) -> Result<Word, LoadError> {
    let t = text.trim();
    if t.is_empty() || ((t == "e" || t == "1") && !names.iter().any(|n| n == t)) {
        return Ok(Vec::new());
    }
    let b = t.as_bytes();
    let mut pos = 0;
    let mut word = Word::new();
    let skip = |pos: &mut usize| {
        while *pos < b.len() && b[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    while pos < b.len() {
        let start = pos;
        while pos < b.len() && (b[pos].is_ascii_alphanumeric() || b[pos] == b'_') {
            pos += 1;
        }
        if start == pos {
            return fail(what, format!("bad word `{text}` near offset {start}"));
        }
        let name = &t[start..pos];
        let Some(index) = names.iter().position(|n| n == name) else {
            return fail(what, format!("unknown generator `{name}` in `{text}`"));
        };
        skip(&mut pos);
        let mut exponent = BigInt::from(1);
        if pos < b.len() && b[pos] == b'^' {
            pos += 1;
            skip(&mut pos);
            let from = pos;
            if pos < b.len() && b[pos] == b'(' {
                let mut depth = 0;
                while pos < b.len() {
                    depth += match b[pos] {
                        b'(' => 1,
                        b')' => -1,
                        _ => 0,
                    };
                    pos += 1;
                    if depth == 0 {
                        break;
                    }
                }
            } else {
                if pos < b.len() && (b[pos] == b'-' || b[pos] == b'+') {
                    pos += 1;
                }
                while pos < b.len() && (b[pos].is_ascii_alphanumeric() || b[pos] == b'_') {
                    pos += 1;
                }
            }
            exponent = expr::eval_integer(&t[from..pos], params).at(|| what.to_string())?;
        }
        let Some(e) = exponent.to_i64() else {
            return fail(what, format!("exponent {exponent} too large"));
        };
        if e != 0 {
            word.push((index, e));
        }
        skip(&mut pos);
    }
    Ok(word)
}

fn subgroup_words(spec: &SubgroupSpec, name: &str, names: &[String], params: &Params) -> Result<SubgroupWords, LoadError> {
    let basis = spec
        .basis
        .iter()
        .enumerate()
        .map(|(li, level)| {
            level
                .iter()
                .enumerate()
                .map(|(j, w)| parse_word(w, names, params, &format!("{name}.basis, level {}, word {}", li + 1, j + 1)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cosets = spec
        .cosets
        .iter()
        .enumerate()
        .map(|(j, w)| parse_word(w, names, params, &format!("{name}.cosets[{j}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SubgroupWords {
        name: name.to_string(),
        basis,
        cosets,
    })
}

/// Validates a parsed file under the given parameter overrides.
pub fn build(file: SpecFile, overrides: &[(String, String)]) -> Result<LoadedSpec, LoadError> {
    let params = resolve_params(&file, overrides)?;
    let filt = Filtration::new(file.filtration.clone()).at(|| "filtration".to_string())?;
    let names: Vec<String> = file.generators.iter().map(|g| g.name.clone()).collect();
    let mut gens = Vec::with_capacity(names.len());
    for (gi, g) in file.generators.iter().enumerate() {
        let what = format!("generators[{gi}] `{}`", g.name);
        gens.push((g.name.clone(), build_map(&filt, &g.levels, &params, &what)?));
    }
    let lattice = subgroup_words(&file.lattice, "lattice", &names, &params)?;
    let averaging = file.averaging.as_ref().map(|s| subgroup_words(s, "K", &names, &params)).transpose()?;
    let net = file.net.as_ref().map(|s| subgroup_words(s, "K'", &names, &params)).transpose()?;
    let subgroup_words = [Some(lattice.clone()), averaging.clone(), net.clone()];
    let group = GroupSpec::new(&filt, gens, lattice, averaging, net).at(|| "group".to_string())?;

    let lift = build_map(&filt, &file.endomorphism.lift, &params, "endomorphism.lift")?;
    if let Some(extra) = file.endomorphism.images.keys().find(|k| !names.contains(k)) {
        return fail("endomorphism.images", format!("unknown generator `{extra}`"));
    }
    let image_words = names
        .iter()
        .map(|n| match file.endomorphism.images.get(n) {
            Some(w) => parse_word(w, &names, &params, &format!("endomorphism.images.{n}")),
            None => fail("endomorphism.images", format!("missing image of `{n}`")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let endo = EndoSpec::from_words(&group, lift, &image_words).at(|| "endomorphism".to_string())?;
    Ok(LoadedSpec {
        file,
        params,
        model: Model { group, endo },
        image_words,
        subgroup_words,
    })
}

fn level_specs(f: &CanonicalMap) -> Vec<LevelSpec> {
    let filt = f.filtration();
    filt.levels()
        .map(|level| {
            let d = f.diag_block(level);
            let tails = f.tail(level);
            let shift: Vec<Rat> = tails.iter().map(MultiPoly::constant_term).collect();
            let mut tail = Vec::new();
            for (r, p) in tails.iter().enumerate() {
                for (e, c) in p.terms() {
                    if e.iter().any(|&x| x != 0) {
                        tail.push(TermSpec {
                            row: r + 1,
                            coefficient: Scalar::from_rat(c),
                            exponents: e.to_vec(),
                        });
                    }
                }
            }
            LevelSpec {
                matrix: d.to_rows().iter().map(|row| row.iter().map(Scalar::from_rat).collect()).collect(),
                shift: if shift.iter().all(Zero::is_zero) {
                    Vec::new()
                } else {
                    shift.iter().map(Scalar::from_rat).collect()
                },
                tail,
            }
        })
        .collect()
}

impl LoadedSpec {
    /// The same model written without parameters, with every number evaluated and
    /// every map in normal form. Loading the result reproduces the model.
    pub fn canonical(&self) -> SpecFile {
        let group = &self.model.group;
        let w = |word: &Word| group.word_string(word);
        let sub = |words: &SubgroupWords| SubgroupSpec {
            basis: words.basis.iter().map(|level| level.iter().map(w).collect()).collect(),
            cosets: words.cosets.iter().map(w).collect(),
        };
        let [lattice, averaging, net] = &self.subgroup_words;
        SpecFile {
            version: VERSION.to_string(),
            name: self.file.name.clone(),
            notes: self.file.notes.clone(),
            parameters: BTreeMap::new(),
            filtration: self.file.filtration.clone(),
            generators: group
                .generators()
                .iter()
                .map(|g| GeneratorSpec {
                    name: g.name.clone(),
                    levels: level_specs(&g.map),
                })
                .collect(),
            lattice: sub(lattice.as_ref().expect("lattice words")),
            averaging: averaging.as_ref().map(sub),
            net: net.as_ref().map(sub),
            endomorphism: EndomorphismSpec {
                lift: level_specs(self.model.endo.lift()),
                images: group
                    .generators()
                    .iter()
                    .zip(&self.image_words)
                    .map(|(g, word)| (g.name.clone(), w(word)))
                    .collect(),
            },
            hypotheses: self.file.hypotheses,
        }
    }

    pub fn name(&self) -> &str {
        self.file.name.as_deref().unwrap_or("unnamed")
    }

    pub fn param_strings(&self) -> BTreeMap<String, String> {
        self.params.iter().map(|(k, v)| (k.clone(), format_rat(v))).collect()
    }
}

pub fn to_json(file: &SpecFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("spec files serialize");
    s.push('\n');
    s
}

/// Specs shipped with the tool, by file name.
pub const BUNDLED: [(&str, &str); 4] = [
    ("big_example.json", include_str!("../specs/big_example.json")),
    ("big_example_polymap.json", include_str!("../specs/big_example_polymap.json")),
    ("klein_bottle.json", include_str!("../specs/klein_bottle.json")),
    ("heisenberg_nil.json", include_str!("../specs/heisenberg_nil.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Reads a file, falling back to a bundled spec of the same name.
pub fn read_spec(path: &str) -> Result<String, LoadError> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) => bundled(path).map(str::to_string).ok_or_else(|| LoadError {
            location: path.to_string(),
            message: e.to_string(),
        }),
    }
}
