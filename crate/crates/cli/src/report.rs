//! Report rendering: each task produces an outcome that prints as stable
//! text or as JSON whose cochain terms reuse the problem-file term schema.

use liext_core::deformation::ClassificationReport;
use liext_core::{Cochain, Rational};
use serde_json::{json, Value};

/// Result of one task at one instantiation point.
pub enum Outcome {
    Check {
        holds: bool,
        obstruction: Option<Cochain>,
    },
    Bracket {
        left: String,
        right: String,
        value: Cochain,
    },
    Conjugate {
        name: String,
        value: Cochain,
    },
    VerifyExt {
        items: Vec<(String, Cochain)>,
        holds: bool,
    },
    Equiv {
        items: Vec<(String, Cochain)>,
        holds: bool,
        matches: Option<bool>,
    },
    Cohomology {
        operator: String,
        slice: (usize, usize),
        dim: usize,
        representatives: Vec<Cochain>,
    },
    Classify {
        report: ClassificationReport,
    },
}

impl Outcome {
    /// Whether the checked condition holds; purely descriptive tasks hold.
    pub fn holds(&self) -> bool {
        match self {
            Outcome::Check { holds, .. } => *holds,
            Outcome::Bracket { .. } | Outcome::Conjugate { .. } | Outcome::Cohomology { .. } => {
                true
            }
            Outcome::VerifyExt { holds, .. } => *holds,
            Outcome::Equiv { holds, matches, .. } => *holds && matches.unwrap_or(true),
            Outcome::Classify { report } => report.solvable,
        }
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        match self {
            Outcome::Check { holds, obstruction } => {
                out.push_str(&format!("codifferential: {holds}\n"));
                if let Some(c) = obstruction {
                    out.push_str(&format!("obstruction: {c}\n"));
                }
            }
            Outcome::Bracket { left, right, value } => {
                out.push_str(&format!("[{left}, {right}] = {value}\n"));
            }
            Outcome::Conjugate { name, value } => {
                out.push_str(&format!("{name} conjugated: {value}\n"));
            }
            Outcome::VerifyExt { items, holds } => {
                for (name, c) in items {
                    out.push_str(&format!("{name}: {c}\n"));
                }
                out.push_str(&format!("extension: {holds}\n"));
            }
            Outcome::Equiv { items, holds, matches } => {
                for (name, c) in items {
                    out.push_str(&format!("{name}: {c}\n"));
                }
                out.push_str(&format!("extension: {holds}\n"));
                if let Some(m) = matches {
                    out.push_str(&format!("matches comparison: {m}\n"));
                }
            }
            Outcome::Cohomology { operator, slice, dim, representatives } => {
                out.push_str(&format!(
                    "cohomology of {operator} at slice ({}, {}): dim {dim}\n",
                    slice.0, slice.1
                ));
                for c in representatives {
                    out.push_str(&format!("  {c}\n"));
                }
            }
            Outcome::Classify { report } => {
                out.push_str(&format!("solvable: {}\n", report.solvable));
                for (name, c) in &report.obstructions {
                    out.push_str(&format!("obstruction {name}: {c}\n"));
                }
                for space in &report.spaces {
                    out.push_str(&format!("{}: dim {}\n", space.name, space.dim));
                    for c in &space.representatives {
                        out.push_str(&format!("  {c}\n"));
                    }
                }
                for (name, coords) in &report.classes {
                    out.push_str(&format!("class {name}: {}\n", coords_text(coords)));
                }
                for (name, c) in &report.witnesses {
                    out.push_str(&format!("witness {name}: {c}\n"));
                }
                if report.solvable {
                    out.push_str(&format!(
                        "deformation parameters: {}\n",
                        report.deformation_parameters()
                    ));
                }
            }
        }
        out
    }

    pub fn json(&self) -> Value {
        match self {
            Outcome::Check { holds, obstruction } => {
                let mut v = json!({ "codifferential": holds });
                if let Some(c) = obstruction {
                    v["obstruction"] = terms_json(c);
                }
                v
            }
            Outcome::Bracket { left, right, value } => json!({
                "bracket": [left, right],
                "result": terms_json(value),
            }),
            Outcome::Conjugate { name, value } => json!({
                "conjugated": name,
                "result": terms_json(value),
            }),
            Outcome::VerifyExt { items, holds } => json!({
                "residuals": items_json(items),
                "extension": holds,
            }),
            Outcome::Equiv { items, holds, matches } => {
                let mut v = json!({
                    "residuals": items_json(items),
                    "extension": holds,
                });
                if let Some(m) = matches {
                    v["matches"] = json!(m);
                }
                v
            }
            Outcome::Cohomology { operator, slice, dim, representatives } => json!({
                "operator": operator,
                "slice": [slice.0, slice.1],
                "dimension": dim,
                "representatives": representatives.iter().map(terms_json).collect::<Vec<_>>(),
            }),
            Outcome::Classify { report } => {
                let spaces: Value = report
                    .spaces
                    .iter()
                    .map(|s| {
                        json!({
                            "name": s.name,
                            "dimension": s.dim,
                            "representatives":
                                s.representatives.iter().map(terms_json).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                let mut v = json!({
                    "solvable": report.solvable,
                    "spaces": spaces,
                });
                if !report.obstructions.is_empty() {
                    v["obstructions"] = items_json(
                        &report
                            .obstructions
                            .iter()
                            .map(|(n, c)| (n.to_string(), c.clone()))
                            .collect::<Vec<_>>(),
                    );
                }
                if !report.classes.is_empty() {
                    v["classes"] = report
                        .classes
                        .iter()
                        .map(|(n, coords)| json!({ "name": n, "coords": coords_json(coords) }))
                        .collect();
                }
                if !report.witnesses.is_empty() {
                    v["witnesses"] = items_json(
                        &report
                            .witnesses
                            .iter()
                            .map(|(n, c)| (n.to_string(), c.clone()))
                            .collect::<Vec<_>>(),
                    );
                }
                if report.solvable {
                    v["deformation_parameters"] = json!(report.deformation_parameters());
                }
                v
            }
        }
    }
}

/// Encodes a cochain as the problem-file term list, 1-based indices.
pub fn terms_json(c: &Cochain) -> Value {
    let terms: Vec<Value> = c
        .terms()
        .map(|(m, t, s)| {
            let inputs: Vec<usize> = m.indices().iter().map(|&i| i + 1).collect();
            json!({ "in": inputs, "out": t + 1, "coeff": s.to_string() })
        })
        .collect();
    Value::Array(terms)
}

fn items_json(items: &[(String, Cochain)]) -> Value {
    items
        .iter()
        .map(|(name, c)| json!({ "name": name, "terms": terms_json(c) }))
        .collect()
}

fn coords_text(coords: &[Rational]) -> String {
    let inner: Vec<String> = coords.iter().map(|r| r.to_string()).collect();
    format!("[{}]", inner.join(", "))
}

fn coords_json(coords: &[Rational]) -> Value {
    coords.iter().map(|r| json!(r.to_string())).collect()
}
