//! Guard enumeration (`lift_sat`), the reduction of a policy against a
//! partial structure, and the `atoms` measure of remaining obligations.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{Atom, Formula, Quantified, Restriction};
use crate::schema::NOTIN_SET;
use crate::structure::{PartialStructure, Truth};
use crate::subst::Substitution;
use crate::term::{GroundSet, Symbol, Term};

/// All satisfying instances of a guard whose context variables are already
/// substituted, sorted canonically.
pub fn lift_sat(l: &PartialStructure, c: &Restriction) -> Result<Vec<Substitution>> {
    Ok(lift(l, c)?.into_iter().collect())
}

fn lift(l: &PartialStructure, c: &Restriction) -> Result<BTreeSet<Substitution>> {
    Ok(match c {
        Restriction::Atom(a) => l.sat(a)?.into_iter().collect(),
        Restriction::Top => [Substitution::new()].into_iter().collect(),
        Restriction::Bot => BTreeSet::new(),
        Restriction::And(c1, c2) => {
            let mut out = BTreeSet::new();
            for s in lift(l, c1)? {
                for s2 in lift(l, &s.apply_restriction(c2))? {
                    // sigma and sigma2 have disjoint domains: c2 sigma has none of dom(sigma) free.
                    out.insert(s.merge(&s2).expect("disjoint substitutions"));
                }
            }
            out
        }
        Restriction::Or(c1, c2) => {
            let mut out = lift(l, c1)?;
            out.extend(lift(l, c2)?);
            out
        }
        Restriction::Exists(x, body) => lift(l, body)?.into_iter().map(|s| s.without([x])).collect(),
    })
}

/// The quantified vector's image under each guard instance, deduplicated and sorted.
pub fn instances(l: &PartialStructure, q: &Quantified) -> Result<Vec<Term>> {
    let mut out = BTreeSet::new();
    for s in lift(l, &q.guard)? {
        let t = s.image(&q.vars);
        if !t.is_ground() {
            return Err(Error::UndefinedMode {
                atom: q.guard.to_string(),
                reason: "guard does not ground every quantified variable".into(),
            });
        }
        out.insert(t);
    }
    Ok(out.into_iter().collect())
}

fn instance_subst(vars: &[Symbol], t: &Term) -> Substitution {
    match (vars, t) {
        ([x], _) => Substitution::singleton(x.clone(), t.clone()),
        (_, Term::Tuple(items)) => Substitution::from_pairs(vars.iter().cloned().zip(items.iter().cloned())),
        _ => unreachable!("image of several variables is a tuple"),
    }
}

/// The quantifier body with `vars` replaced by the instance `t`.
pub fn instantiate(vars: &[Symbol], t: &Term, body: &Formula) -> Formula {
    instance_subst(vars, t).apply_formula(body)
}

fn subject(vars: &[Symbol]) -> Term {
    match vars {
        [x] => Term::Var(x.clone()),
        _ => Term::Tuple(vars.iter().cloned().map(Term::Var).collect()),
    }
}

/// The already-excluded tuples if `guard` ends in `notin_set(subject, S0)`.
pub fn excluded_set<'a>(guard: &'a Restriction, vars: &[Symbol]) -> Option<(&'a Restriction, &'a GroundSet)> {
    let Restriction::And(c0, last) = guard else { return None };
    let Restriction::Atom(a) = &**last else { return None };
    match a.args.as_slice() {
        [s, Term::Set(set)] if a.pred.name.as_str() == NOTIN_SET && !a.pred.negated && *s == subject(vars) => {
            Some((c0, set))
        }
        _ => None,
    }
}

/// `guard and vars notin S`, merging into an existing trailing exclusion.
fn exclude(guard: &Restriction, vars: &[Symbol], new: &[Term]) -> Restriction {
    let (base, set) = match excluded_set(guard, vars) {
        Some((c0, s0)) => (c0.clone(), s0.union(&new.iter().cloned().collect())),
        None => (guard.clone(), new.iter().cloned().collect()),
    };
    Restriction::and(base, Restriction::Atom(Atom::new(NOTIN_SET, vec![subject(vars), Term::Set(set)])))
}

/// Discharges every obligation of `f` that `l` decides. The result is
/// equivalent to `f` on every extension of `l`.
pub fn reduce(l: &PartialStructure, f: &Formula) -> Result<Formula> {
    Ok(match f {
        Formula::Atom(a) => {
            if !a.is_ground() {
                return Err(Error::NotGround(a.to_string()));
            }
            match l.valuation(a) {
                Truth::True => Formula::Top,
                Truth::False => Formula::Bot,
                Truth::Unknown => f.clone(),
            }
        }
        Formula::Top | Formula::Bot => f.clone(),
        Formula::And(a, b) => Formula::and(reduce(l, a)?, reduce(l, b)?),
        Formula::Or(a, b) => Formula::or(reduce(l, a)?, reduce(l, b)?),
        Formula::Forall(q) | Formula::Exists(q) => {
            let ts = instances(l, q)?;
            if ts.is_empty() {
                return Ok(f.clone());
            }
            let mut parts = Vec::with_capacity(ts.len() + 1);
            for t in &ts {
                parts.push(reduce(l, &instance_subst(&q.vars, t).apply_formula(&q.body))?);
            }
            let rest = Quantified { vars: q.vars.clone(), guard: exclude(&q.guard, &q.vars, &ts), body: q.body.clone() };
            if matches!(f, Formula::Forall(_)) {
                parts.push(Formula::Forall(rest));
                Formula::conjoin(parts)
            } else {
                parts.push(Formula::Exists(rest));
                Formula::disjoin(parts)
            }
        }
    })
}

/// The ground atoms `f` can still depend on in `l`: atoms outside
/// quantifiers, and atoms of each guard instance of a quantifier body.
pub fn atoms(l: &PartialStructure, f: &Formula) -> Result<BTreeSet<Atom>> {
    let mut out = BTreeSet::new();
    collect_atoms(l, f, &mut out)?;
    Ok(out)
}

fn collect_atoms(l: &PartialStructure, f: &Formula, out: &mut BTreeSet<Atom>) -> Result<()> {
    match f {
        Formula::Atom(a) => {
            out.insert(a.clone());
        }
        Formula::Top | Formula::Bot => {}
        Formula::And(a, b) | Formula::Or(a, b) => {
            collect_atoms(l, a, out)?;
            collect_atoms(l, b, out)?;
        }
        Formula::Forall(q) | Formula::Exists(q) => {
            for t in instances(l, q)? {
                collect_atoms(l, &instance_subst(&q.vars, &t).apply_formula(&q.body), out)?;
            }
        }
    }
    Ok(())
}

/// The instances a quantifier no longer ranges over, with the position of
/// the quantifier: `l`/`r` step into connectives, `b` into a quantifier body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExclusionSite {
    pub path: String,
    pub quantifier: &'static str,
    pub vars: Vec<Symbol>,
    pub excluded: Vec<String>,
}

/// Every quantifier whose guard carries an accumulated exclusion set,
/// in pre-order.
pub fn exclusion_sites(f: &Formula) -> Vec<ExclusionSite> {
    let mut out = Vec::new();
    collect_sites(f, &mut String::new(), &mut out);
    out
}

fn collect_sites(f: &Formula, path: &mut String, out: &mut Vec<ExclusionSite>) {
    let children: Vec<(char, &Formula)> = match f {
        Formula::Atom(_) | Formula::Top | Formula::Bot => vec![],
        Formula::And(l, r) | Formula::Or(l, r) => vec![('l', &**l), ('r', &**r)],
        Formula::Forall(q) | Formula::Exists(q) => {
            if let Some((_, set)) = excluded_set(&q.guard, &q.vars) {
                out.push(ExclusionSite {
                    path: path.clone(),
                    quantifier: if matches!(f, Formula::Forall(_)) { "forall" } else { "exists" },
                    vars: q.vars.clone(),
                    excluded: set.iter().map(ToString::to_string).collect(),
                });
            }
            vec![('b', &*q.body)]
        }
    };
    for (step, g) in children {
        path.push(step);
        collect_sites(g, path, out);
        path.pop();
    }
}
