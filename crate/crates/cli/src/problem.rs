//! Problem files: a JSON schema for graded spaces, named cochains with
//! string coefficients, a task descriptor, and instantiation points.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use liext_core::{Cochain, GradedSpace, ParamSet, Parity, Rational, Scalar};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub space: SpaceDecl,
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default)]
    pub cochains: BTreeMap<String, Vec<TermDecl>>,
    #[serde(default)]
    pub task: Option<TaskDecl>,
    #[serde(default)]
    pub instantiate: Vec<BTreeMap<String, String>>,
    #[serde(default)]
    pub expect: Vec<serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDecl {
    #[serde(default)]
    pub even: Vec<String>,
    #[serde(default)]
    pub odd: Vec<String>,
    /// 1-based indices into the combined even-then-odd generator list.
    #[serde(default)]
    pub module: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDecl {
    /// 1-based generator indices of the source monomial.
    #[serde(rename = "in")]
    pub inputs: Vec<usize>,
    /// 1-based generator index of the target.
    pub out: usize,
    pub coeff: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDecl {
    pub op: String,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub a: Option<String>,
    #[serde(default)]
    pub b: Option<String>,
    #[serde(default)]
    pub delta: Option<String>,
    #[serde(default)]
    pub mu: Option<String>,
    #[serde(default)]
    pub lambda: Option<String>,
    #[serde(default)]
    pub psi: Option<String>,
    #[serde(default)]
    pub beta: Option<String>,
    #[serde(default)]
    pub operator: Option<String>,
    #[serde(default)]
    pub slice: Option<[usize; 2]>,
    #[serde(default)]
    pub theorem: Option<u32>,
    #[serde(default)]
    pub compare: Option<BTreeMap<String, String>>,
}

/// A witness for conjugation tasks: an even invertible map, row i giving the
/// coefficients of v_i in each image g(v_j), and an optional correction.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessFile {
    pub g: Vec<Vec<String>>,
    #[serde(default)]
    pub beta: Vec<TermDecl>,
}

/// A problem file resolved against a graded space: every cochain built and
/// every index validated.
pub struct Problem {
    pub space: Arc<GradedSpace>,
    pub params: ParamSet,
    pub cochains: BTreeMap<String, Cochain>,
    pub task: Option<TaskDecl>,
    pub instantiate: Vec<BTreeMap<String, Rational>>,
    pub expect: Vec<serde_json::Value>,
}

pub fn load(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file: ProblemFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        source: e,
    })?;
    resolve(file).map_err(|e| e.at_file(path))
}

fn resolve(file: ProblemFile) -> Result<Problem, CliError> {
    let mut names = Vec::new();
    let mut parities = Vec::new();
    for n in &file.space.even {
        names.push(n.clone());
        parities.push(Parity::Even);
    }
    for n in &file.space.odd {
        names.push(n.clone());
        parities.push(Parity::Odd);
    }
    let dim = names.len();
    let module: Vec<usize> = file
        .space
        .module
        .iter()
        .map(|&i| to_index(i, dim, "space.module"))
        .collect::<Result<_, _>>()?;
    let space = if module.is_empty() {
        GradedSpace::new(names, parities)
    } else {
        GradedSpace::with_module(names, parities, &module)
    }
    .map_err(|e| CliError::invalid("space", e))?;
    let space = Arc::new(space);

    let params = ParamSet::new(file.params.clone()).map_err(|e| CliError::invalid("params", e))?;
    let mut cochains = BTreeMap::new();
    for (name, terms) in &file.cochains {
        let c = build_cochain(&space, &params, name, terms)?;
        cochains.insert(name.clone(), c);
    }

    let mut instantiate = Vec::new();
    for (i, point) in file.instantiate.iter().enumerate() {
        let loc = format!("instantiate[{i}]");
        instantiate.push(parse_point(point, &file.params, &loc)?);
    }

    Ok(Problem {
        space,
        params,
        cochains,
        task: file.task,
        instantiate,
        expect: file.expect,
    })
}

/// Builds one named cochain from 1-based term declarations.
pub fn build_cochain(
    space: &Arc<GradedSpace>,
    params: &ParamSet,
    name: &str,
    terms: &[TermDecl],
) -> Result<Cochain, CliError> {
    let dim = space.dim();
    let mut list = Vec::new();
    for (i, term) in terms.iter().enumerate() {
        let loc = format!("cochain '{name}' term {}", i + 1);
        let word: Vec<usize> = term
            .inputs
            .iter()
            .map(|&j| to_index(j, dim, &loc))
            .collect::<Result<_, _>>()?;
        let out = to_index(term.out, dim, &loc)?;
        let coeff = parse_coeff(&term.coeff, params, &loc)?;
        list.push((word, out, coeff));
    }
    Cochain::from_terms(space, list).map_err(|e| CliError::invalid(&format!("cochain '{name}'"), e))
}

fn to_index(i: usize, dim: usize, loc: &str) -> Result<usize, CliError> {
    if i == 0 || i > dim {
        return Err(CliError::Invalid {
            location: loc.to_string(),
            message: format!("index {i} out of range 1..={dim}"),
        });
    }
    Ok(i - 1)
}

/// Coefficients use the scalar expression grammar over declared parameters,
/// e.g. "1", "-3/4", "a*b", "x^2 - y".
pub fn parse_coeff(text: &str, params: &ParamSet, loc: &str) -> Result<Scalar, CliError> {
    Scalar::parse(params, text).map_err(|e| CliError::Invalid {
        location: loc.to_string(),
        message: format!("coefficient {text:?}: {e}"),
    })
}

/// Parses one instantiation point, rejecting undeclared parameters.
pub fn parse_point(
    point: &BTreeMap<String, String>,
    declared: &[String],
    loc: &str,
) -> Result<BTreeMap<String, Rational>, CliError> {
    let mut out = BTreeMap::new();
    for (name, value) in point {
        if !declared.contains(name) {
            return Err(CliError::Invalid {
                location: loc.to_string(),
                message: format!("parameter {name:?} is not declared"),
            });
        }
        let r = Rational::from_str(value).map_err(|_| CliError::Invalid {
            location: loc.to_string(),
            message: format!("value {value:?} for {name:?} is not a rational"),
        })?;
        out.insert(name.clone(), r);
    }
    Ok(out)
}

pub fn load_witness(path: &Path) -> Result<WitnessFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        source: e,
    })
}
