//! JSON Lines audit logs and structure snapshots.
//!
//! ```text
//! {"schema": {"predicates": [...]}}
//! {"timepoint": 7}
//! {"fact": {"pred": "send", "args": ["A", "B", "M"], "at": 7, "value": "tt"}}
//! {"assert": {"pred": "contains", "args": ["M", "A", "mr", 11], "value": "tt"}}
//! {"complete": {"mode": "past", "until": 10}}
//! {"unobserved": "ff"}
//! ```
//!
//! Arguments are strings (constants), integers (times), `{"time": "inf"}`,
//! `{"fn": "doc", "args": [...]}`, `{"tuple": [...]}` or `{"set": [...]}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::formula::{Atom, Pred};
use crate::schema::{Schema, SchemaDoc};
use crate::structure::{Completeness, PartialStructure, Truth, Unobserved};
use crate::term::{Symbol, Term, Time};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactRecord {
    pub pred: String,
    pub args: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Time>,
    #[serde(default = "default_value")]
    pub value: Truth,
}

fn default_value() -> Truth {
    Truth::True
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompleteRecord {
    pub mode: CompleteMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<Time>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompleteMode {
    Generic,
    Past,
    Objective,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Record {
    Schema(SchemaDoc),
    Timepoint(Time),
    Fact(FactRecord),
    Assert(FactRecord),
    Complete(CompleteRecord),
    Unobserved(Unobserved),
}

pub fn arg_to_term(v: &Value) -> std::result::Result<Term, String> {
    match v {
        Value::String(s) => Ok(Term::Const(Symbol::from(s.as_str()))),
        Value::Number(n) => n.as_u64().map(Term::time).ok_or_else(|| format!("time {n} is not a nonnegative integer")),
        Value::Object(m) => {
            let list = |key: &str| -> std::result::Result<Vec<Term>, String> {
                m.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| format!("`{key}` must be an array"))?
                    .iter()
                    .map(arg_to_term)
                    .collect()
            };
            if let Some(f) = m.get("fn") {
                let f = f.as_str().ok_or("`fn` must be a string")?;
                Ok(Term::App(Symbol::from(f), list("args")?))
            } else if m.contains_key("tuple") {
                Ok(Term::Tuple(list("tuple")?))
            } else if m.contains_key("set") {
                Ok(Term::Set(list("set")?.into_iter().collect()))
            } else if let Some(t) = m.get("time") {
                Time::deserialize(t).map(Term::Time).map_err(|e| e.to_string())
            } else {
                Err("unrecognized argument object".into())
            }
        }
        other => Err(format!("unsupported argument {other}")),
    }
}

pub fn term_to_arg(t: &Term) -> Value {
    match t {
        Term::Const(c) => Value::String(c.to_string()),
        Term::Time(Time::At(n)) => json!(n),
        Term::Time(Time::Infinity) => json!({"time": "inf"}),
        Term::App(f, args) => json!({"fn": f.as_str(), "args": args.iter().map(term_to_arg).collect::<Vec<_>>()}),
        Term::Tuple(items) => json!({"tuple": items.iter().map(term_to_arg).collect::<Vec<_>>()}),
        Term::Set(s) => json!({"set": s.iter().map(term_to_arg).collect::<Vec<_>>()}),
        Term::Var(_) | Term::Offset(..) => unreachable!("logs hold ground, folded terms only"),
    }
}

impl FactRecord {
    pub fn from_atom(a: &Atom, value: bool) -> FactRecord {
        FactRecord {
            pred: a.pred.name.to_string(),
            args: a.args.iter().map(term_to_arg).collect(),
            at: None,
            value: Truth::from_bool(value),
        }
    }

    fn to_atom(&self) -> std::result::Result<(Atom, bool), String> {
        let (name, negated) = match self.pred.strip_prefix('~') {
            Some(rest) => (rest, true),
            None => (self.pred.as_str(), false),
        };
        let mut args: Vec<Term> = self.args.iter().map(arg_to_term).collect::<std::result::Result<_, _>>()?;
        if let Some(t) = self.at {
            args.push(Term::Time(t));
        }
        let value = self.value.as_bool().ok_or("a record cannot carry the value uu")?;
        Ok((Atom { pred: Pred { name: Symbol::new(name), negated }, args }, value))
    }
}

/// Parses JSON Lines; blank lines are skipped. Each record keeps its line number.
pub fn parse_records(src: &str) -> Result<Vec<(usize, Record)>> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|r| (i + 1, r))
                .map_err(|e| Error::Log { line: i + 1, message: e.to_string() })
        })
        .collect()
}

/// Applies log records to `l`. Schema records come first, then states and
/// facts, then completeness claims, so a claim never contradicts facts that
/// arrive with it. Every offending line is reported.
pub fn apply_records(l: &PartialStructure, records: &[(usize, Record)]) -> Result<PartialStructure> {
    let mut out = l.clone();
    let mut schema: Option<Schema> = None;
    for (line, r) in records {
        if let Record::Schema(doc) = r {
            let s = schema.get_or_insert_with(|| l.schema().clone());
            s.extend_from_doc(doc).map_err(|e| Error::Log { line: *line, message: e.to_string() })?;
        }
    }
    if let Some(s) = schema {
        out = out.with_schema(Arc::new(s))?;
    }

    let mut problems = Vec::new();
    for (line, r) in records {
        let result = match r {
            Record::Timepoint(t) => out.observe(*t),
            Record::Fact(f) | Record::Assert(f) => match f.to_atom() {
                Err(message) => Err(Error::Log { line: *line, message }),
                Ok((atom, value)) => {
                    let observe = match (r, f.at) {
                        (Record::Fact(_), Some(t)) if out.schema().is_objective(&atom.pred) => out.observe(t),
                        _ => Ok(()),
                    };
                    observe.and_then(|_| match r {
                        Record::Assert(_) => out.assert_subjective(&atom, value).map(|next| out = next),
                        _ => out.add_fact(&atom, value),
                    })
                }
            },
            _ => Ok(()),
        };
        if let Err(e) = result {
            problems.push(format!("line {line}: {e}"));
        }
    }
    for (line, r) in records {
        match r {
            Record::Complete(c) => match (c.mode, c.until) {
                (CompleteMode::Past, Some(h)) => out.raise_completeness(Completeness::PastComplete(h)),
                (CompleteMode::Past, None) => problems.push(format!("line {line}: past completeness needs `until`")),
                (CompleteMode::Objective, _) => out.raise_completeness(Completeness::ObjectivelyComplete),
                (CompleteMode::Generic, _) => {}
            },
            Record::Unobserved(u) => out.set_unobserved(*u),
            _ => {}
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(Error::Conflict(problems))
    }
}

/// Parses and applies a log to `l`.
pub fn ingest(l: &PartialStructure, src: &str) -> Result<PartialStructure> {
    apply_records(l, &parse_records(src)?)
}

/// A self-contained JSON Lines rendering of the structure, including its schema.
pub fn snapshot(l: &PartialStructure) -> String {
    let mut records = vec![Record::Schema(l.schema().to_doc())];
    if l.unobserved() == Unobserved::False {
        records.push(Record::Unobserved(Unobserved::False));
    }
    records.extend(l.observed_times().map(Record::Timepoint));
    records.extend(l.facts().map(|(a, v)| Record::Fact(FactRecord::from_atom(a, v))));
    records.extend(l.assertions().map(|(a, v)| Record::Assert(FactRecord::from_atom(a, v))));
    match l.completeness() {
        Completeness::Generic => {}
        Completeness::PastComplete(h) => {
            records.push(Record::Complete(CompleteRecord { mode: CompleteMode::Past, until: Some(h) }))
        }
        Completeness::ObjectivelyComplete => {
            records.push(Record::Complete(CompleteRecord { mode: CompleteMode::Objective, until: None }))
        }
    }
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Rebuilds a structure from [`snapshot`] output.
pub fn load_snapshot(src: &str) -> Result<PartialStructure> {
    ingest(&PartialStructure::new(Arc::new(Schema::new())), src)
}
