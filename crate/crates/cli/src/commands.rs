//! Task execution: resolves cochain roles from a problem file, instantiates
//! parameters point by point, and runs the requested computation.

use std::collections::BTreeMap;
use std::path::Path;

use liext_core::cochain::pullback;
use liext_core::cohomology::{
    dl_cohomology, double_cohomology, mu_cohomology, triple_cohomology,
};
use liext_core::{
    classify_deformations, classify_extension_moduli, classify_infinitesimal_extensions,
    classify_rep_deformations_scenario1, classify_rep_deformations_scenario2, Cochain,
    ExtensionData, ImageMode, LinearMap, Rational, SliceSpec,
};
use serde_json::Value;

use crate::problem::{self, Problem, WitnessFile};
use crate::report::{terms_json, Outcome};
use crate::{CliError, Options};

pub enum Task {
    Check,
    Bracket { a: Option<String>, b: Option<String> },
    Conjugate,
    VerifyExt,
    Equiv { beta: Option<String> },
    Cohomology { operator: Option<String>, slice: Option<String> },
    Classify { theorem: Option<u32> },
}

type Point = BTreeMap<String, Rational>;

/// Runs a task over every instantiation point of a problem file; returns
/// whether the checked condition holds at all of them.
pub fn run(task: &Task, path: &Path, opts: &Options) -> Result<bool, CliError> {
    let prob = problem::load(path)?;
    let witness = match &opts.witness {
        Some(p) => Some(problem::load_witness(p)?),
        None => None,
    };
    let points = instantiation_points(&prob, &opts.at)?;
    let multi = points.len() > 1;
    let mut all_hold = true;
    let mut sections = Vec::new();
    for point in &points {
        let cochains = instantiate(&prob, point)?;
        let outcome =
            execute(task, &prob, &cochains, point, witness.as_ref()).map_err(|e| e.at_file(path))?;
        all_hold &= outcome.holds();
        if opts.json {
            let mut v = outcome.json();
            if multi {
                v["at"] = point_json(point);
            }
            sections.push(v);
        } else {
            if multi {
                println!("at {}:", point_text(point));
            }
            print!("{}", outcome.text());
        }
    }
    if opts.json {
        let value = if sections.len() == 1 {
            sections.pop().unwrap()
        } else {
            Value::Array(sections)
        };
        println!("{}", serde_json::to_string_pretty(&value).expect("serializable report"));
    }
    Ok(all_hold)
}

/// Points come from repeated `--at p=v` flags when given, else from the
/// file's `instantiate` list, else a single symbolic run.
fn instantiation_points(prob: &Problem, at: &[String]) -> Result<Vec<Point>, CliError> {
    if !at.is_empty() {
        let mut raw = BTreeMap::new();
        for binding in at {
            let (name, value) = binding.split_once('=').ok_or_else(|| CliError::Invalid {
                location: "--at".into(),
                message: format!("expected P=V, got {binding:?}"),
            })?;
            raw.insert(name.trim().to_string(), value.trim().to_string());
        }
        let declared: Vec<String> = prob.params.names().to_vec();
        return Ok(vec![problem::parse_point(&raw, &declared, "--at")?]);
    }
    if prob.instantiate.is_empty() {
        return Ok(vec![Point::new()]);
    }
    Ok(prob.instantiate.clone())
}

/// Substitutes one point into every named cochain.
fn instantiate(prob: &Problem, point: &Point) -> Result<BTreeMap<String, Cochain>, CliError> {
    let mut out = BTreeMap::new();
    for (name, c) in &prob.cochains {
        out.insert(name.clone(), substitute(c, point)?);
    }
    Ok(out)
}

fn substitute(c: &Cochain, point: &Point) -> Result<Cochain, CliError> {
    if point.is_empty() {
        return Ok(c.clone());
    }
    Ok(c.instantiate(point)?)
}

fn point_text(point: &Point) -> String {
    let parts: Vec<String> = point.iter().map(|(k, v)| format!("{k} = {v}")).collect();
    parts.join(", ")
}

fn point_json(point: &Point) -> Value {
    point.iter().map(|(k, v)| (k.clone(), Value::String(v.to_string()))).collect()
}

fn execute(
    task: &Task,
    prob: &Problem,
    cochains: &BTreeMap<String, Cochain>,
    point: &Point,
    witness: Option<&WitnessFile>,
) -> Result<Outcome, CliError> {
    match task {
        Task::Check => {
            let (_, target) = target(prob, cochains)?;
            let holds = target.is_codifferential()?;
            let obstruction = if holds {
                None
            } else {
                Some(target.codifferential_obstruction()?)
            };
            Ok(Outcome::Check { holds, obstruction })
        }
        Task::Bracket { a, b } => {
            let a_name = operand(prob, a, |t| t.a.as_ref(), "left")?;
            let b_name = operand(prob, b, |t| t.b.as_ref(), "right")?;
            let left = named(cochains, &a_name)?;
            let right = named(cochains, &b_name)?;
            Ok(Outcome::Bracket {
                left: a_name,
                right: b_name,
                value: left.bracket(right)?,
            })
        }
        Task::Conjugate => {
            let w = witness.ok_or_else(|| CliError::Invalid {
                location: "conjugate".into(),
                message: "requires --witness FILE with an invertible map g".into(),
            })?;
            let g = witness_map(prob, w, point)?;
            let (name, target) = target(prob, cochains)?;
            Ok(Outcome::Conjugate { name, value: pullback(&target, &g)? })
        }
        Task::VerifyExt => {
            let ext = extension(prob, cochains)?;
            let report = ext.verify()?;
            let holds = report.holds();
            Ok(Outcome::VerifyExt { items: owned_items(&report.items()), holds })
        }
        Task::Equiv { beta } => {
            let ext = extension(prob, cochains)?;
            let mut current = ext;
            if let Some(w) = witness {
                let g = witness_map(prob, w, point)?;
                current = current.pullback_by(&g)?;
            }
            if let Some(beta) = correction(prob, cochains, beta, point, witness)? {
                current = current.apply_correction(&beta)?;
            }
            let report = current.verify()?;
            let holds = report.holds();
            let matches = compare(prob, cochains, &current)?;
            Ok(Outcome::Equiv { items: owned_items(&report.items()), holds, matches })
        }
        Task::Cohomology { operator, slice } => {
            let operator = operator
                .clone()
                .or_else(|| prob.task.as_ref().and_then(|t| t.operator.clone()))
                .ok_or_else(|| CliError::Invalid {
                    location: "cohomology".into(),
                    message: "requires --op mu|dl|double|triple".into(),
                })?;
            let (k, l) = slice_of(prob, slice)?;
            let delta = role(prob, cochains, |t| t.delta.as_ref(), "delta")?;
            let mu = role(prob, cochains, |t| t.mu.as_ref(), "mu")?;
            let lambda = role(prob, cochains, |t| t.lambda.as_ref(), "lambda")?;
            let psi = role(prob, cochains, |t| t.psi.as_ref(), "psi")?;
            require_numeric("cohomology", prob, point, &[&delta, &mu, &lambda, &psi])?;
            let dl = delta.add(&lambda)?;
            let (dim, representatives) = match operator.as_str() {
                "mu" => {
                    let h = mu_cohomology(&mu, k, l)?;
                    (h.dim(), h.representatives().to_vec())
                }
                "dl" => {
                    let h = dl_cohomology(&dl, SliceSpec::MTarget(k, l))?;
                    (h.dim(), h.representatives().to_vec())
                }
                "double" => {
                    let h = double_cohomology(&mu, &dl, k, l, ImageMode::Strict)?;
                    (h.dim(), h.representatives().to_vec())
                }
                "triple" => {
                    let h = triple_cohomology(&mu, &dl, &psi, k, l)?;
                    (h.dim(), h.representatives().to_vec())
                }
                other => {
                    return Err(CliError::Invalid {
                        location: "cohomology".into(),
                        message: format!("unknown operator {other:?}; use mu, dl, double, or triple"),
                    })
                }
            };
            Ok(Outcome::Cohomology { operator, slice: (k, l), dim, representatives })
        }
        Task::Classify { theorem } => {
            let mode = theorem
                .or_else(|| prob.task.as_ref().and_then(|t| t.theorem))
                .ok_or_else(|| CliError::Invalid {
                    location: "classify".into(),
                    message: "requires --theorem 3|5|8|9|10".into(),
                })?;
            let delta = role(prob, cochains, |t| t.delta.as_ref(), "delta")?;
            let mu = role(prob, cochains, |t| t.mu.as_ref(), "mu")?;
            let lambda = role(prob, cochains, |t| t.lambda.as_ref(), "lambda")?;
            let psi = role(prob, cochains, |t| t.psi.as_ref(), "psi")?;
            require_numeric("classify", prob, point, &[&delta, &mu, &lambda, &psi])?;
            let report = match mode {
                3 => classify_infinitesimal_extensions(&delta, &mu)?,
                5 => classify_extension_moduli(&delta, &mu, &lambda)?,
                8 => {
                    let ext = ExtensionData::new(&prob.space, delta, mu, lambda, psi)?;
                    classify_deformations(&ext)?
                }
                9 => {
                    let ext = ExtensionData::new(&prob.space, delta, mu, lambda, psi)?;
                    classify_rep_deformations_scenario1(&ext)?
                }
                10 => {
                    let ext = ExtensionData::new(&prob.space, delta, mu, lambda, psi)?;
                    classify_rep_deformations_scenario2(&ext)?
                }
                other => {
                    return Err(CliError::Invalid {
                        location: "classify".into(),
                        message: format!("unknown mode {other}; use 3, 5, 8, 9, or 10"),
                    })
                }
            };
            Ok(Outcome::Classify { report })
        }
    }
}

fn named<'a>(cochains: &'a BTreeMap<String, Cochain>, name: &str) -> Result<&'a Cochain, CliError> {
    cochains.get(name).ok_or_else(|| CliError::Invalid {
        location: "task".into(),
        message: format!("cochain {name:?} is not defined"),
    })
}

/// A role cochain: the explicitly named one, else the cochain carrying the
/// role's default name, else zero.
fn role(
    prob: &Problem,
    cochains: &BTreeMap<String, Cochain>,
    pick: impl Fn(&crate::problem::TaskDecl) -> Option<&String>,
    default: &str,
) -> Result<Cochain, CliError> {
    match prob.task.as_ref().and_then(&pick) {
        Some(name) => Ok(named(cochains, name)?.clone()),
        None => Ok(cochains
            .get(default)
            .cloned()
            .unwrap_or_else(|| Cochain::zero(&prob.space))),
    }
}

/// The target of check and conjugate: `task.target`, else the only cochain.
fn target(
    prob: &Problem,
    cochains: &BTreeMap<String, Cochain>,
) -> Result<(String, Cochain), CliError> {
    if let Some(name) = prob.task.as_ref().and_then(|t| t.target.clone()) {
        return Ok((name.clone(), named(cochains, &name)?.clone()));
    }
    if cochains.len() == 1 {
        let (name, c) = cochains.iter().next().expect("one cochain");
        return Ok((name.clone(), c.clone()));
    }
    Err(CliError::Invalid {
        location: "task".into(),
        message: "task.target must name the cochain when several are defined".into(),
    })
}

fn operand(
    prob: &Problem,
    cli: &Option<String>,
    pick: impl Fn(&crate::problem::TaskDecl) -> Option<&String>,
    side: &str,
) -> Result<String, CliError> {
    cli.clone()
        .or_else(|| prob.task.as_ref().and_then(&pick).cloned())
        .ok_or_else(|| CliError::Invalid {
            location: "bracket".into(),
            message: format!("missing {side} operand; pass a cochain name"),
        })
}

fn extension(
    prob: &Problem,
    cochains: &BTreeMap<String, Cochain>,
) -> Result<ExtensionData, CliError> {
    let delta = role(prob, cochains, |t| t.delta.as_ref(), "delta")?;
    let mu = role(prob, cochains, |t| t.mu.as_ref(), "mu")?;
    let lambda = role(prob, cochains, |t| t.lambda.as_ref(), "lambda")?;
    let psi = role(prob, cochains, |t| t.psi.as_ref(), "psi")?;
    Ok(ExtensionData::new(&prob.space, delta, mu, lambda, psi)?)
}

/// The correction for equiv: the named cochain from the flag or the task,
/// else the witness file's beta terms.
fn correction(
    prob: &Problem,
    cochains: &BTreeMap<String, Cochain>,
    flag: &Option<String>,
    point: &Point,
    witness: Option<&WitnessFile>,
) -> Result<Option<Cochain>, CliError> {
    if let Some(name) = flag
        .clone()
        .or_else(|| prob.task.as_ref().and_then(|t| t.beta.clone()))
    {
        return Ok(Some(named(cochains, &name)?.clone()));
    }
    if let Some(w) = witness {
        if !w.beta.is_empty() {
            let c = problem::build_cochain(&prob.space, &prob.params, "beta", &w.beta)?;
            return Ok(Some(substitute(&c, point)?));
        }
    }
    Ok(None)
}

/// Componentwise comparison of the transformed extension against named
/// cochains, keyed by role.
fn compare(
    prob: &Problem,
    cochains: &BTreeMap<String, Cochain>,
    current: &ExtensionData,
) -> Result<Option<bool>, CliError> {
    let Some(map) = prob.task.as_ref().and_then(|t| t.compare.as_ref()) else {
        return Ok(None);
    };
    let mut all = true;
    for (part, name) in map {
        let actual = match part.as_str() {
            "delta" => current.delta(),
            "mu" => current.mu(),
            "lambda" => current.lambda(),
            "psi" => current.psi(),
            other => {
                return Err(CliError::Invalid {
                    location: "task.compare".into(),
                    message: format!("unknown component {other:?}; use delta, mu, lambda, psi"),
                })
            }
        };
        all &= actual == named(cochains, name)?;
    }
    Ok(Some(all))
}

fn witness_map(prob: &Problem, w: &WitnessFile, point: &Point) -> Result<LinearMap, CliError> {
    let dim = prob.space.dim();
    if w.g.len() != dim {
        return Err(CliError::Invalid {
            location: "witness g".into(),
            message: format!("expected {dim} rows, got {}", w.g.len()),
        });
    }
    let mut entries = Vec::new();
    for (i, row) in w.g.iter().enumerate() {
        let loc = format!("witness g row {}", i + 1);
        if row.len() != dim {
            return Err(CliError::Invalid {
                location: loc,
                message: format!("expected {dim} entries, got {}", row.len()),
            });
        }
        let mut out = Vec::new();
        for text in row {
            let s = problem::parse_coeff(text, &prob.params, &loc)?;
            out.push(if point.is_empty() { s } else { s.instantiate(point)? });
        }
        entries.push(out);
    }
    Ok(LinearMap::from_entries(&prob.space, entries)?)
}

fn slice_of(prob: &Problem, flag: &Option<String>) -> Result<(usize, usize), CliError> {
    if let Some(text) = flag {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let parsed: Option<(usize, usize)> = match parts.as_slice() {
            [k, l] => k.parse().ok().zip(l.parse().ok()),
            _ => None,
        };
        return parsed.ok_or_else(|| CliError::Invalid {
            location: "--slice".into(),
            message: format!("expected k,l with nonnegative integers, got {text:?}"),
        });
    }
    if let Some([k, l]) = prob.task.as_ref().and_then(|t| t.slice) {
        return Ok((k, l));
    }
    Err(CliError::Invalid {
        location: "cohomology".into(),
        message: "requires --slice k,l".into(),
    })
}

/// Numeric tasks reject leftover parameters so elimination stays exact.
fn require_numeric(
    op: &str,
    prob: &Problem,
    point: &Point,
    cochains: &[&Cochain],
) -> Result<(), CliError> {
    if cochains.iter().all(|c| c.is_instantiated()) {
        return Ok(());
    }
    let unbound: Vec<&str> = prob
        .params
        .names()
        .iter()
        .filter(|n| !point.contains_key(n.as_str()))
        .map(String::as_str)
        .collect();
    Err(CliError::Invalid {
        location: op.to_string(),
        message: format!(
            "requires numeric data; bind [{}] with --at or instantiate",
            unbound.join(", ")
        ),
    })
}

fn owned_items(items: &[(&'static str, &Cochain)]) -> Vec<(String, Cochain)> {
    items.iter().map(|(n, c)| (n.to_string(), (*c).clone())).collect()
}

/// Runs every fixture in a directory, printing one line per expectation.
pub fn run_fixtures(dir: &Path) -> Result<bool, CliError> {
    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Io { path: dir.display().to_string(), source: e })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Invalid {
            location: dir.display().to_string(),
            message: "no fixture files".into(),
        });
    }
    let mut all_ok = true;
    for file in &files {
        all_ok &= run_fixture(file).map_err(|e| e.at_file(file))?;
    }
    Ok(all_ok)
}

fn run_fixture(path: &Path) -> Result<bool, CliError> {
    let prob = problem::load(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let decl = prob.task.as_ref().ok_or_else(|| CliError::Invalid {
        location: "task".into(),
        message: "fixtures must declare a task".into(),
    })?;
    let task = match decl.op.as_str() {
        "check" => Task::Check,
        "bracket" => Task::Bracket { a: None, b: None },
        "conjugate" => Task::Conjugate,
        "verify-ext" => Task::VerifyExt,
        "equiv" => Task::Equiv { beta: None },
        "cohomology" => Task::Cohomology { operator: None, slice: None },
        "classify" => Task::Classify { theorem: None },
        "deform" => Task::Classify { theorem: Some(8) },
        other => {
            return Err(CliError::Invalid {
                location: "task.op".into(),
                message: format!("unknown op {other:?}"),
            })
        }
    };
    let points = instantiation_points(&prob, &[])?;
    if prob.expect.len() != points.len() {
        return Err(CliError::Invalid {
            location: "expect".into(),
            message: format!(
                "expected {} entries to match the instantiation points, got {}",
                points.len(),
                prob.expect.len()
            ),
        });
    }
    let mut all_ok = true;
    for (point, expect) in points.iter().zip(&prob.expect) {
        let label = if point.is_empty() {
            stem.clone()
        } else {
            format!("{stem} at {}", point_text(point))
        };
        let cochains = instantiate(&prob, point)?;
        let outcome = execute(&task, &prob, &cochains, point, None)?;
        all_ok &= check_expectations(&label, &prob, point, &outcome, expect)?;
    }
    Ok(all_ok)
}

fn check_expectations(
    label: &str,
    prob: &Problem,
    point: &Point,
    outcome: &Outcome,
    expect: &Value,
) -> Result<bool, CliError> {
    let map = expect.as_object().ok_or_else(|| CliError::Invalid {
        location: "expect".into(),
        message: "each entry must be an object".into(),
    })?;
    let mut all_ok = true;
    for (key, want) in map {
        match key.as_str() {
            "codifferential" => {
                let actual = matches!(outcome, Outcome::Check { holds: true, .. });
                all_ok &= line(label, key, want, &Value::Bool(actual));
            }
            "extension" => {
                let actual = match outcome {
                    Outcome::VerifyExt { holds, .. } | Outcome::Equiv { holds, .. } => *holds,
                    _ => false,
                };
                all_ok &= line(label, key, want, &Value::Bool(actual));
            }
            "solvable" => {
                let actual = match outcome {
                    Outcome::Classify { report } => report.solvable,
                    _ => false,
                };
                all_ok &= line(label, key, want, &Value::Bool(actual));
            }
            "deformation_parameters" => {
                let actual = match outcome {
                    Outcome::Classify { report } => report.deformation_parameters(),
                    _ => 0,
                };
                all_ok &= line(label, key, want, &Value::from(actual));
            }
            "dimension" => {
                let actual = match outcome {
                    Outcome::Cohomology { dim, .. } => *dim,
                    _ => 0,
                };
                all_ok &= line(label, key, want, &Value::from(actual));
            }
            "space_dims" => {
                let wanted = want.as_object().ok_or_else(|| CliError::Invalid {
                    location: "expect.space_dims".into(),
                    message: "must map space names to dimensions".into(),
                })?;
                for (name, dim) in wanted {
                    let actual = match outcome {
                        Outcome::Classify { report } => {
                            report.space(name).map(|s| Value::from(s.dim))
                        }
                        _ => None,
                    };
                    let actual = actual.unwrap_or(Value::Null);
                    all_ok &= line(label, &format!("space {name:?}"), dim, &actual);
                }
            }
            "result" => {
                let terms: Vec<problem::TermDecl> =
                    serde_json::from_value(want.clone()).map_err(|e| CliError::Invalid {
                        location: "expect.result".into(),
                        message: e.to_string(),
                    })?;
                let expected =
                    problem::build_cochain(&prob.space, &prob.params, "expect.result", &terms)?;
                let expected = substitute(&expected, point)?;
                let actual = match outcome {
                    Outcome::Bracket { value, .. } | Outcome::Conjugate { value, .. } => {
                        value.clone()
                    }
                    Outcome::Check { obstruction, .. } => obstruction
                        .clone()
                        .unwrap_or_else(|| Cochain::zero(&prob.space)),
                    _ => Cochain::zero(&prob.space),
                };
                all_ok &= line(label, key, &terms_json(&expected), &terms_json(&actual));
            }
            other => {
                return Err(CliError::Invalid {
                    location: "expect".into(),
                    message: format!("unknown expectation {other:?}"),
                })
            }
        }
    }
    Ok(all_ok)
}

fn line(label: &str, field: &str, expected: &Value, actual: &Value) -> bool {
    let ok = expected == actual;
    let status = if ok { "ok" } else { "MISMATCH" };
    println!("{label}: {field}: expected {expected}, actual {actual}, {status}");
    ok
}
