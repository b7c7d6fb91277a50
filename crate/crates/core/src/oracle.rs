//! Brute-force evaluation of the satisfaction relation over a finite domain.
//!
//! Quantifiers range over every tuple of the supplied domain rather than
//! over guard instances, so this evaluator shares no code with `sat` or
//! `lift_sat` and can serve as a reference for them.

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{Atom, Formula, Quantified, Restriction};
use crate::structure::{PartialStructure, Truth};
use crate::term::{Symbol, Term, Time};

type Env = BTreeMap<Symbol, Term>;

/// `l |= f`, quantifying over `domain`. A closed formula and a domain that
/// covers the structure's and the formula's ground terms are assumed.
pub fn oracle_evaluate(l: &PartialStructure, f: &Formula, domain: &[Term]) -> bool {
    Oracle { l, domain }.formula(f, &Env::new(), true)
}

/// `l |= c` for a guard under explicit bindings.
pub fn oracle_restriction(l: &PartialStructure, c: &Restriction, bindings: &Env, domain: &[Term]) -> bool {
    Oracle { l, domain }.restriction(c, bindings, true)
}

/// Ground atomic terms of the structure and the formula, plus one constant
/// and one time point that occur in neither.
pub fn domain_for(l: &PartialStructure, f: &Formula) -> Vec<Term> {
    let mut out: BTreeSet<Term> = l.ground_terms().into_iter().filter(is_atomic).collect();
    collect_formula_terms(f, &mut out);
    let mut fresh = String::from("fresh");
    while out.contains(&Term::Const(Symbol::from(fresh.clone()))) {
        fresh.push('\'');
    }
    let next_time = out
        .iter()
        .filter_map(|t| match t {
            Term::Time(Time::At(n)) => Some(n + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    out.insert(Term::Const(Symbol::from(fresh)));
    out.insert(Term::time(next_time));
    out.into_iter().collect()
}

fn is_atomic(t: &Term) -> bool {
    matches!(t, Term::Const(_) | Term::Time(Time::At(_)) | Term::App(..)) && t.is_ground()
}

fn collect_term(t: &Term, out: &mut BTreeSet<Term>) {
    if is_atomic(t) {
        out.insert(t.clone());
    }
    if let Term::Tuple(items) | Term::App(_, items) = t {
        items.iter().for_each(|i| collect_term(i, out));
    }
    if let Term::Set(s) = t {
        s.iter().for_each(|i| collect_term(i, out));
    }
}

fn collect_atom_terms(a: &Atom, out: &mut BTreeSet<Term>) {
    a.args.iter().for_each(|t| collect_term(t, out));
}

fn collect_restriction_terms(c: &Restriction, out: &mut BTreeSet<Term>) {
    c.atoms().into_iter().for_each(|a| collect_atom_terms(a, out));
}

fn collect_formula_terms(f: &Formula, out: &mut BTreeSet<Term>) {
    match f {
        Formula::Atom(a) => collect_atom_terms(a, out),
        Formula::Top | Formula::Bot => {}
        Formula::And(l, r) | Formula::Or(l, r) => {
            collect_formula_terms(l, out);
            collect_formula_terms(r, out);
        }
        Formula::Forall(q) | Formula::Exists(q) => {
            collect_restriction_terms(&q.guard, out);
            collect_formula_terms(&q.body, out);
        }
    }
}

struct Oracle<'a> {
    l: &'a PartialStructure,
    domain: &'a [Term],
}

impl Oracle<'_> {
    /// `positive` evaluates `l |= a`, otherwise `l |= dual(a)`.
    fn atom(&self, a: &Atom, env: &Env, positive: bool) -> bool {
        let ground = Atom { pred: a.pred.clone(), args: a.args.iter().map(|t| t.map_vars(&|x| env.get(x).cloned())).collect() };
        if !ground.is_ground() {
            return false;
        }
        let want = if positive { Truth::True } else { Truth::False };
        self.l.valuation(&ground) == want
    }

    fn for_each_tuple(&self, vars: &[Symbol], env: &Env, mut pred: impl FnMut(&Env) -> bool, all: bool) -> bool {
        let n = vars.len();
        let d = self.domain.len();
        if d == 0 {
            return all;
        }
        let mut idx = vec![0usize; n];
        let mut scoped = env.clone();
        loop {
            for (x, &i) in vars.iter().zip(&idx) {
                scoped.insert(x.clone(), self.domain[i].clone());
            }
            let r = pred(&scoped);
            if all && !r {
                return false;
            }
            if !all && r {
                return true;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return all;
                }
                idx[k] += 1;
                if idx[k] < d {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn restriction(&self, c: &Restriction, env: &Env, positive: bool) -> bool {
        match c {
            Restriction::Atom(a) => self.atom(a, env, positive),
            Restriction::Top => positive,
            Restriction::Bot => !positive,
            Restriction::And(l, r) | Restriction::Or(l, r) => {
                let conj = matches!(c, Restriction::And(..)) == positive;
                if conj {
                    self.restriction(l, env, positive) && self.restriction(r, env, positive)
                } else {
                    self.restriction(l, env, positive) || self.restriction(r, env, positive)
                }
            }
            // dual(exists x. c) = forall x. (top => dual(c))
            Restriction::Exists(x, body) => {
                self.for_each_tuple(std::slice::from_ref(x), env, |e| self.restriction(body, e, positive), !positive)
            }
        }
    }

    /// `universal`: for every tuple, dual(c) holds or the body does;
    /// otherwise some tuple satisfies c and the body. `body_positive`
    /// selects the body or its dual.
    fn quantified(&self, q: &Quantified, env: &Env, universal: bool, body_positive: bool) -> bool {
        if universal {
            self.for_each_tuple(
                &q.vars,
                env,
                |e| self.restriction(&q.guard, e, false) || self.formula(&q.body, e, body_positive),
                true,
            )
        } else {
            self.for_each_tuple(
                &q.vars,
                env,
                |e| self.restriction(&q.guard, e, true) && self.formula(&q.body, e, body_positive),
                false,
            )
        }
    }

    fn formula(&self, f: &Formula, env: &Env, positive: bool) -> bool {
        match f {
            Formula::Atom(a) => self.atom(a, env, positive),
            Formula::Top => positive,
            Formula::Bot => !positive,
            Formula::And(l, r) | Formula::Or(l, r) => {
                let conj = matches!(f, Formula::And(..)) == positive;
                if conj {
                    self.formula(l, env, positive) && self.formula(r, env, positive)
                } else {
                    self.formula(l, env, positive) || self.formula(r, env, positive)
                }
            }
            // dual swaps the quantifier, keeps the guard and dualizes the body
            Formula::Forall(q) => self.quantified(q, env, positive, positive),
            Formula::Exists(q) => self.quantified(q, env, !positive, positive),
        }
    }
}
