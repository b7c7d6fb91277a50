//! JSON documents served to the CLI and the workbench: the residual as a
//! structured tree, the pending list, and the session report.

use std::collections::BTreeSet;

use residua_core::reduce::excluded_set;
use residua_core::{Atom, Completeness, Formula, PartialStructure, Restriction, Time, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

use crate::session::{AssertionRecord, HistoryEntry, Result, Session};

fn atom_json(a: &Atom, l: &PartialStructure, pending: &BTreeSet<Atom>) -> Value {
    json!({
        "type": "atom",
        "text": a.to_string(),
        "pred": a.pred.name.as_str(),
        "negated": a.pred.negated,
        "args": a.args.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "subjective": l.schema().is_subjective(&a.pred),
        "pending": pending.contains(a),
    })
}

fn restriction_json(c: &Restriction) -> Value {
    match c {
        Restriction::Atom(a) => json!({
            "type": "atom",
            "text": a.to_string(),
            "pred": a.pred.name.as_str(),
            "negated": a.pred.negated,
            "args": a.args.iter().map(ToString::to_string).collect::<Vec<_>>(),
        }),
        Restriction::Top => json!({"type": "top"}),
        Restriction::Bot => json!({"type": "bot"}),
        Restriction::And(l, r) => json!({"type": "and", "left": restriction_json(l), "right": restriction_json(r)}),
        Restriction::Or(l, r) => json!({"type": "or", "left": restriction_json(l), "right": restriction_json(r)}),
        Restriction::Exists(x, c) => json!({"type": "exists", "var": x.as_str(), "body": restriction_json(c)}),
    }
}

/// The residual as a tree. Quantifier nodes list the instances already
/// discharged by earlier iterations under `excluded`.
pub fn formula_json(f: &Formula, l: &PartialStructure, pending: &BTreeSet<Atom>) -> Value {
    match f {
        Formula::Atom(a) => atom_json(a, l, pending),
        Formula::Top => json!({"type": "top"}),
        Formula::Bot => json!({"type": "bot"}),
        Formula::And(x, y) => {
            json!({"type": "and", "left": formula_json(x, l, pending), "right": formula_json(y, l, pending)})
        }
        Formula::Or(x, y) => {
            json!({"type": "or", "left": formula_json(x, l, pending), "right": formula_json(y, l, pending)})
        }
        Formula::Forall(q) | Formula::Exists(q) => {
            let excluded: Vec<String> = excluded_set(&q.guard, &q.vars)
                .map(|(_, set)| set.iter().map(ToString::to_string).collect())
                .unwrap_or_default();
            json!({
                "type": if matches!(f, Formula::Forall(_)) { "forall" } else { "exists" },
                "vars": q.vars.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
                "guard": restriction_json(&q.guard),
                "excluded": excluded,
                "body": formula_json(&q.body, l, pending),
            })
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Residual {
    pub text: String,
    pub ast: Value,
}

#[derive(Debug, Serialize)]
pub struct PendingAtom {
    pub atom: String,
    pub ast: Value,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub id: String,
    pub created: String,
    pub policy: String,
    pub residual: Residual,
    pub pending: Vec<PendingAtom>,
    pub decided: bool,
    pub verdict: Option<Verdict>,
    pub completeness: Completeness,
    pub observed_times: Vec<Time>,
    pub assertions: Vec<AssertionRecord>,
    pub history: Vec<HistoryEntry>,
}

pub fn residual(s: &Session) -> Result<Residual> {
    let pending: BTreeSet<Atom> = s.pending()?.into_iter().collect();
    Ok(Residual { text: s.residual_text(), ast: formula_json(&s.residual, &s.structure, &pending) })
}

pub fn pending(s: &Session) -> Result<Vec<PendingAtom>> {
    let all: BTreeSet<Atom> = s.pending()?.into_iter().collect();
    Ok(all
        .iter()
        .map(|a| PendingAtom { atom: a.to_string(), ast: atom_json(a, &s.structure, &all) })
        .collect())
}

pub fn report(s: &Session) -> Result<Report> {
    Ok(Report {
        id: s.id.clone(),
        created: s.created.clone(),
        policy: s.policy_source.clone(),
        residual: residual(s)?,
        pending: pending(s)?,
        decided: matches!(s.residual, Formula::Top | Formula::Bot),
        verdict: s.verdict()?,
        completeness: s.structure.completeness(),
        observed_times: s.structure.observed_times().collect(),
        assertions: s.assertions.clone(),
        history: s.history.clone(),
    })
}

/// Pretty JSON with a trailing newline; the CLI and the API emit exactly this.
pub fn render(r: &Report) -> String {
    let mut out = serde_json::to_string_pretty(r).expect("reports serialize");
    out.push('\n');
    out
}
