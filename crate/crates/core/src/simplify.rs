//! Unit-law rewriting of reduce outputs, structure classification and the
//! safety / co-safety verdict procedures.

use std::collections::BTreeSet;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::formula::{Formula, Quantified};
use crate::modes::mode_check_formula;
use crate::modes::ModeEnv;
use crate::reduce::{instances, instantiate, reduce};
use crate::schema::{ClosedWorld, Kind};
use crate::structure::{Completeness, PartialStructure};
use crate::temporal::{finally, globally, TemporalFormula};
use crate::term::{Term, Time};

/// Normal form under the eight unit/absorption rules and, when
/// `quantifier_elim` is set, `forall -> top` and `exists -> bot`.
///
/// Quantifier elimination is only sound on outputs of `reduce` over an
/// objectively-complete structure; the caller decides.
pub fn simplify(f: &Formula, quantifier_elim: bool) -> Formula {
    match f {
        Formula::Atom(_) | Formula::Top | Formula::Bot => f.clone(),
        Formula::And(l, r) => match (simplify(l, quantifier_elim), simplify(r, quantifier_elim)) {
            (x, Formula::Top) | (Formula::Top, x) => x,
            (Formula::Bot, _) | (_, Formula::Bot) => Formula::Bot,
            (x, y) => Formula::and(x, y),
        },
        Formula::Or(l, r) => match (simplify(l, quantifier_elim), simplify(r, quantifier_elim)) {
            (x, Formula::Bot) | (Formula::Bot, x) => x,
            (Formula::Top, _) | (_, Formula::Top) => Formula::Top,
            (x, y) => Formula::or(x, y),
        },
        Formula::Forall(_) if quantifier_elim => Formula::Top,
        Formula::Exists(_) if quantifier_elim => Formula::Bot,
        Formula::Forall(q) => Formula::Forall(simplify_body(q, quantifier_elim)),
        Formula::Exists(q) => Formula::Exists(simplify_body(q, quantifier_elim)),
    }
}

fn simplify_body(q: &Quantified, quantifier_elim: bool) -> Quantified {
    Quantified { vars: q.vars.clone(), guard: q.guard.clone(), body: Box::new(simplify(&q.body, quantifier_elim)) }
}

/// Every formula reachable by one rewrite step at any position.
pub fn rewrite_successors(f: &Formula, quantifier_elim: bool) -> Vec<Formula> {
    let mut out = BTreeSet::new();
    match f {
        Formula::Atom(_) | Formula::Top | Formula::Bot => {}
        Formula::And(l, r) => {
            if **r == Formula::Top {
                out.insert((**l).clone());
            }
            if **l == Formula::Top {
                out.insert((**r).clone());
            }
            if **l == Formula::Bot || **r == Formula::Bot {
                out.insert(Formula::Bot);
            }
            for l2 in rewrite_successors(l, quantifier_elim) {
                out.insert(Formula::and(l2, (**r).clone()));
            }
            for r2 in rewrite_successors(r, quantifier_elim) {
                out.insert(Formula::and((**l).clone(), r2));
            }
        }
        Formula::Or(l, r) => {
            if **r == Formula::Bot {
                out.insert((**l).clone());
            }
            if **l == Formula::Bot {
                out.insert((**r).clone());
            }
            if **l == Formula::Top || **r == Formula::Top {
                out.insert(Formula::Top);
            }
            for l2 in rewrite_successors(l, quantifier_elim) {
                out.insert(Formula::or(l2, (**r).clone()));
            }
            for r2 in rewrite_successors(r, quantifier_elim) {
                out.insert(Formula::or((**l).clone(), r2));
            }
        }
        Formula::Forall(q) | Formula::Exists(q) => {
            let universal = matches!(f, Formula::Forall(_));
            if quantifier_elim {
                out.insert(if universal { Formula::Top } else { Formula::Bot });
            }
            for b in rewrite_successors(&q.body, quantifier_elim) {
                let q2 = Quantified { vars: q.vars.clone(), guard: q.guard.clone(), body: Box::new(b) };
                out.insert(if universal { Formula::Forall(q2) } else { Formula::Exists(q2) });
            }
        }
    }
    out.into_iter().collect()
}

/// Validated completeness of a structure. A past- or objectively-complete
/// claim requires every objective predicate to have a closed-world reading.
pub fn classify(l: &PartialStructure) -> Result<Completeness> {
    let c = l.completeness();
    if c == Completeness::Generic {
        return Ok(c);
    }
    let open: Vec<String> = l
        .schema()
        .declared()
        .filter(|d| d.kind == Kind::Objective && d.closed == ClosedWorld::Open)
        .map(|d| match c {
            Completeness::PastComplete(h) => format!("{}/{} atoms at times <= {h} stay uu", d.name, d.arity),
            _ => format!("{}/{} atoms stay uu", d.name, d.arity),
        })
        .collect();
    if open.is_empty() {
        Ok(c)
    } else {
        Err(Error::Completeness(open.join("; ")))
    }
}

/// Outcome of a safety or co-safety check. Every verdict speaks about the
/// states up to the horizon: `TriviallyTrue` for `G alpha` means no violation
/// so far, `TriviallyFalse` for `F alpha` means no witness so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Violated(Time),
    Satisfied(Time),
    Residual(Formula),
    TriviallyTrue,
    TriviallyFalse,
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            verdict: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            witness_time: Option<Time>,
            #[serde(skip_serializing_if = "Option::is_none")]
            residual: Option<String>,
        }
        let doc = match self {
            Verdict::Violated(t) => Doc { verdict: "violated", witness_time: Some(*t), residual: None },
            Verdict::Satisfied(t) => Doc { verdict: "satisfied", witness_time: Some(*t), residual: None },
            Verdict::Residual(f) => Doc { verdict: "residual", witness_time: None, residual: Some(f.to_string()) },
            Verdict::TriviallyTrue => Doc { verdict: "trivially_true", witness_time: None, residual: None },
            Verdict::TriviallyFalse => Doc { verdict: "trivially_false", witness_time: None, residual: None },
        };
        doc.serialize(s)
    }
}

/// Checks the preconditions shared by both procedures and returns the horizon.
fn hypothesis(l: &PartialStructure, alpha: &TemporalFormula) -> Result<Time> {
    if !alpha.is_past_only() {
        return Err(Error::Hypothesis("the property refers to the future (until/boxfuture)".into()));
    }
    if let Some(a) = alpha.atoms().into_iter().find(|a| l.schema().is_subjective(&a.pred)) {
        return Err(Error::Hypothesis(format!("the property mentions subjective predicate `{}`", a.pred.name)));
    }
    let horizon = match classify(l)? {
        Completeness::PastComplete(h) => h,
        Completeness::ObjectivelyComplete => l.observed_times().last().unwrap_or(Time::At(0)),
        Completeness::Generic => return Err(Error::Hypothesis("the structure is not past-complete".into())),
    };
    if let Some(t) = l.observed_times().find(|t| *t > horizon) {
        return Err(Error::Hypothesis(format!("observed time {t} lies beyond the horizon {horizon}")));
    }
    Ok(horizon)
}

fn prepare(l: &PartialStructure, f: &Formula) -> Result<()> {
    l.schema().validate_formula(f)?;
    if let Some(d) = mode_check_formula(l.schema(), &ModeEnv::new(), f).into_iter().next() {
        return Err(Error::UndefinedMode { atom: d.subject, reason: d.message });
    }
    Ok(())
}

/// The least time of an instance of the outermost quantifier of `f` whose
/// instantiated body normalizes to `target`.
pub fn witness(l: &PartialStructure, f: &Formula, target: &Formula, quantifier_elim: bool) -> Result<Option<Time>> {
    let (Formula::Forall(q) | Formula::Exists(q)) = f else { return Ok(None) };
    for t in instances(l, q)? {
        let nf = simplify(&reduce(l, &instantiate(&q.vars, &t, &q.body))?, quantifier_elim);
        if &nf == target {
            let time = match &t {
                Term::Tuple(items) => items.first().and_then(Term::as_time),
                other => other.as_time(),
            };
            return Ok(time);
        }
    }
    Ok(None)
}

/// Safety check of `G alpha` for past-only, subjective-free `alpha` on a
/// past-complete structure: `Violated` with the least violating time, or
/// whatever normal form remains.
pub fn check_safety(l: &PartialStructure, alpha: &TemporalFormula) -> Result<Verdict> {
    hypothesis(l, alpha)?;
    let g = globally(alpha);
    prepare(l, &g)?;
    Ok(match simplify(&reduce(l, &g)?, true) {
        Formula::Bot => match witness(l, &g, &Formula::Bot, true)? {
            Some(t) => Verdict::Violated(t),
            None => Verdict::TriviallyFalse,
        },
        Formula::Top => Verdict::TriviallyTrue,
        nf => Verdict::Residual(nf),
    })
}

/// Co-safety check of `F alpha`: `Satisfied` with the least witnessing time.
pub fn check_cosafety(l: &PartialStructure, alpha: &TemporalFormula) -> Result<Verdict> {
    hypothesis(l, alpha)?;
    let f = finally(alpha);
    prepare(l, &f)?;
    Ok(match simplify(&reduce(l, &f)?, true) {
        Formula::Top => match witness(l, &f, &Formula::Top, true)? {
            Some(t) => Verdict::Satisfied(t),
            None => Verdict::TriviallyTrue,
        },
        Formula::Bot => Verdict::TriviallyFalse,
        nf => Verdict::Residual(nf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    #[test]
    fn unit_rules() {
        let f = parse_formula("top and s(a)").unwrap();
        assert_eq!(simplify(&f, false), parse_formula("s(a)").unwrap());
        let f = parse_formula("s(a) or top").unwrap();
        assert_eq!(simplify(&f, false), Formula::Top);
        let f = parse_formula("s(a)").unwrap();
        assert_eq!(simplify(&f, false), f);
        assert!(rewrite_successors(&f, true).is_empty());
    }

    #[test]
    fn quantifier_elimination_is_opt_in() {
        let f = parse_formula("(bot and top or (bot or bot)) and top").unwrap();
        assert_eq!(simplify(&f, false), Formula::Bot);
        let f = parse_formula("(bot or (forall x. (p(x)) => q(x))) and top").unwrap();
        assert_eq!(simplify(&f, true), Formula::Top);
        assert!(matches!(simplify(&f, false), Formula::Forall(_)));
    }

    #[test]
    fn successors_cover_each_redex() {
        let f = parse_formula("(top and bot) or (s(a) and top)").unwrap();
        let next = rewrite_successors(&f, false);
        assert!(next.contains(&parse_formula("bot or (s(a) and top)").unwrap()));
        assert!(next.contains(&parse_formula("(top and bot) or s(a)").unwrap()));
    }

    #[test]
    fn verdicts_serialize_flat() {
        let v = serde_json::to_value(Verdict::Violated(Time::At(7))).unwrap();
        assert_eq!(v, serde_json::json!({"verdict": "violated", "witness_time": 7}));
        let v = serde_json::to_value(Verdict::TriviallyTrue).unwrap();
        assert_eq!(v, serde_json::json!({"verdict": "trivially_true"}));
    }
}
