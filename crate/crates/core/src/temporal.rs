//! The outer temporal logic and its translation into the sublogic.

use std::collections::BTreeSet;

use crate::formula::{Atom, Formula, Quantified, Restriction};
use crate::schema::{IN, NEQ, NOTIN_SET};
use crate::subst::{Fresh, Substitution};
use crate::term::{Symbol, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TemporalFormula {
    /// An untimed atom; translation appends the evaluation time.
    Atom(Atom),
    Top,
    Bot,
    And(Box<TemporalFormula>, Box<TemporalFormula>),
    Or(Box<TemporalFormula>, Box<TemporalFormula>),
    Not(Box<TemporalFormula>),
    Forall(Vec<Symbol>, Restriction, Box<TemporalFormula>),
    Exists(Vec<Symbol>, Restriction, Box<TemporalFormula>),
    /// Binds the variable to the current time.
    Freeze(Symbol, Box<TemporalFormula>),
    Since(Box<TemporalFormula>, Box<TemporalFormula>),
    Until(Box<TemporalFormula>, Box<TemporalFormula>),
    BoxPast(Box<TemporalFormula>),
    BoxFuture(Box<TemporalFormula>),
}

use TemporalFormula as T;

impl TemporalFormula {
    pub fn and(l: T, r: T) -> T {
        T::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: T, r: T) -> T {
        T::Or(Box::new(l), Box::new(r))
    }

    pub fn negate(f: T) -> T {
        T::Not(Box::new(f))
    }

    pub fn since(l: T, r: T) -> T {
        T::Since(Box::new(l), Box::new(r))
    }

    pub fn until(l: T, r: T) -> T {
        T::Until(Box::new(l), Box::new(r))
    }

    /// `once a` = `top since a`
    pub fn once(f: T) -> T {
        T::since(T::Top, f)
    }

    /// `eventually a` = `top until a`
    pub fn eventually(f: T) -> T {
        T::until(T::Top, f)
    }

    /// No `until` or `boxfuture` anywhere.
    pub fn is_past_only(&self) -> bool {
        match self {
            T::Atom(_) | T::Top | T::Bot => true,
            T::And(l, r) | T::Or(l, r) | T::Since(l, r) => l.is_past_only() && r.is_past_only(),
            T::Not(f) | T::BoxPast(f) | T::Freeze(_, f) | T::Forall(_, _, f) | T::Exists(_, _, f) => f.is_past_only(),
            T::Until(..) | T::BoxFuture(_) => false,
        }
    }

    /// Whether the formula uses any temporal operator or `not`.
    pub fn is_sublogic(&self) -> bool {
        match self {
            T::Atom(_) | T::Top | T::Bot => true,
            T::And(l, r) | T::Or(l, r) => l.is_sublogic() && r.is_sublogic(),
            T::Forall(_, _, f) | T::Exists(_, _, f) => f.is_sublogic(),
            _ => false,
        }
    }

    /// All atoms in bodies and guards.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            T::Atom(a) => out.push(a),
            T::Top | T::Bot => {}
            T::And(l, r) | T::Or(l, r) | T::Since(l, r) | T::Until(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
            T::Not(f) | T::BoxPast(f) | T::BoxFuture(f) | T::Freeze(_, f) => f.collect_atoms(out),
            T::Forall(_, c, f) | T::Exists(_, c, f) => {
                out.extend(c.atoms());
                f.collect_atoms(out);
            }
        }
    }

    fn reserve_names(&self, fresh: &mut Fresh) {
        match self {
            T::Atom(a) => {
                let mut vs = BTreeSet::new();
                a.vars_into(&mut vs);
                fresh.reserve(vs);
            }
            T::Top | T::Bot => {}
            T::And(l, r) | T::Or(l, r) | T::Since(l, r) | T::Until(l, r) => {
                l.reserve_names(fresh);
                r.reserve_names(fresh);
            }
            T::Not(f) | T::BoxPast(f) | T::BoxFuture(f) => f.reserve_names(fresh),
            T::Freeze(x, f) => {
                fresh.reserve([x.clone()]);
                f.reserve_names(fresh);
            }
            T::Forall(xs, c, f) | T::Exists(xs, c, f) => {
                fresh.reserve(xs.iter().cloned());
                fresh.reserve_restriction(c);
                f.reserve_names(fresh);
            }
        }
    }

    /// Replaces free occurrences of `x` by `t`. `t` must not mention any
    /// variable bound inside `self`; translation guarantees this by drawing
    /// time variables from a supply that avoids every name in the input.
    fn replace(&self, x: &Symbol, t: &Term) -> T {
        let s = Substitution::singleton(x.clone(), t.clone());
        let rec = |f: &T| Box::new(f.replace(x, t));
        match self {
            T::Atom(a) => T::Atom(s.apply_atom(a)),
            T::Top => T::Top,
            T::Bot => T::Bot,
            T::And(l, r) => T::And(rec(l), rec(r)),
            T::Or(l, r) => T::Or(rec(l), rec(r)),
            T::Since(l, r) => T::Since(rec(l), rec(r)),
            T::Until(l, r) => T::Until(rec(l), rec(r)),
            T::Not(f) => T::Not(rec(f)),
            T::BoxPast(f) => T::BoxPast(rec(f)),
            T::BoxFuture(f) => T::BoxFuture(rec(f)),
            T::Freeze(y, _) if y == x => self.clone(),
            T::Freeze(y, f) => T::Freeze(y.clone(), rec(f)),
            T::Forall(xs, ..) | T::Exists(xs, ..) if xs.contains(x) => self.clone(),
            T::Forall(xs, c, f) => T::Forall(xs.clone(), s.apply_restriction(c), rec(f)),
            T::Exists(xs, c, f) => T::Exists(xs.clone(), s.apply_restriction(c), rec(f)),
        }
    }

    /// Converts a formula that uses no temporal operator. `not` is read as dual.
    pub fn to_sublogic(&self) -> Option<Formula> {
        Some(match self {
            T::Atom(a) => Formula::Atom(a.clone()),
            T::Top => Formula::Top,
            T::Bot => Formula::Bot,
            T::And(l, r) => Formula::and(l.to_sublogic()?, r.to_sublogic()?),
            T::Or(l, r) => Formula::or(l.to_sublogic()?, r.to_sublogic()?),
            T::Not(f) => f.to_sublogic()?.dual(),
            T::Forall(xs, c, f) => Formula::forall(xs.clone(), c.clone(), f.to_sublogic()?),
            T::Exists(xs, c, f) => Formula::exists(xs.clone(), c.clone(), f.to_sublogic()?),
            _ => return None,
        })
    }
}

fn is_untimed(a: &Atom) -> bool {
    matches!(a.pred.name.as_str(), IN | NEQ | NOTIN_SET)
}

fn timed_atom(a: &Atom, tau: &Term) -> Atom {
    if is_untimed(a) {
        a.clone()
    } else {
        let mut args = a.args.clone();
        args.push(tau.clone());
        Atom { pred: a.pred.clone(), args }
    }
}

fn in_atom(t: Term, lo: Term, hi: Term) -> Atom {
    Atom::new(IN, vec![t, lo, hi])
}

fn neq_atom(a: Term, b: Term) -> Atom {
    Atom::new(NEQ, vec![a, b])
}

/// Guard translation: objective atoms gain the time argument.
pub fn translate_restriction(tau: &Term, c: &Restriction) -> Restriction {
    match c {
        Restriction::Atom(a) => Restriction::Atom(timed_atom(a, tau)),
        Restriction::Top => Restriction::Top,
        Restriction::Bot => Restriction::Bot,
        Restriction::And(l, r) => Restriction::and(translate_restriction(tau, l), translate_restriction(tau, r)),
        Restriction::Or(l, r) => Restriction::or(translate_restriction(tau, l), translate_restriction(tau, r)),
        Restriction::Exists(x, c) => Restriction::Exists(x.clone(), Box::new(translate_restriction(tau, c))),
    }
}

/// Translates `alpha` evaluated at time `tau` into the sublogic.
pub fn translate(tau: &Term, alpha: &TemporalFormula) -> Formula {
    let mut fresh = Fresh::new();
    alpha.reserve_names(&mut fresh);
    fresh.reserve(tau.vars());
    Translator { fresh }.go(tau, alpha)
}

struct Translator {
    fresh: Fresh,
}

impl Translator {
    fn go(&mut self, tau: &Term, alpha: &T) -> Formula {
        match alpha {
            T::Atom(a) => Formula::Atom(timed_atom(a, tau)),
            T::Top => Formula::Top,
            T::Bot => Formula::Bot,
            T::And(l, r) => Formula::and(self.go(tau, l), self.go(tau, r)),
            T::Or(l, r) => Formula::or(self.go(tau, l), self.go(tau, r)),
            T::Not(f) => self.go(tau, f).dual(),
            T::Forall(xs, c, f) => Formula::forall(xs.clone(), translate_restriction(tau, c), self.go(tau, f)),
            T::Exists(xs, c, f) => Formula::exists(xs.clone(), translate_restriction(tau, c), self.go(tau, f)),
            T::Freeze(x, f) => self.go(tau, &f.replace(x, tau)),
            T::Since(a, b) => {
                let t1 = self.fresh.next("tau");
                let t2 = self.fresh.next("tau");
                let (v1, v2) = (Term::Var(t1.clone()), Term::Var(t2.clone()));
                let inner = Formula::forall(
                    vec![t2],
                    Restriction::and(
                        Restriction::Atom(in_atom(v2.clone(), v1.clone(), tau.clone())),
                        Restriction::Atom(neq_atom(v1.clone(), v2.clone())),
                    ),
                    self.go(&v2, a),
                );
                Formula::exists(
                    vec![t1],
                    Restriction::Atom(in_atom(v1.clone(), Term::time(0), tau.clone())),
                    Formula::and(self.go(&v1, b), inner),
                )
            }
            T::Until(a, b) => {
                let t1 = self.fresh.next("tau");
                let t2 = self.fresh.next("tau");
                let (v1, v2) = (Term::Var(t1.clone()), Term::Var(t2.clone()));
                let inner = Formula::forall(
                    vec![t2],
                    Restriction::and(
                        Restriction::Atom(in_atom(v2.clone(), tau.clone(), v1.clone())),
                        Restriction::Atom(neq_atom(v2.clone(), v1.clone())),
                    ),
                    self.go(&v2, a),
                );
                Formula::exists(
                    vec![t1],
                    Restriction::Atom(in_atom(v1.clone(), tau.clone(), Term::infinity())),
                    Formula::and(self.go(&v1, b), inner),
                )
            }
            T::BoxPast(f) => {
                let t1 = self.fresh.next("tau");
                let v1 = Term::Var(t1.clone());
                Formula::forall(
                    vec![t1],
                    Restriction::Atom(in_atom(v1.clone(), Term::time(0), tau.clone())),
                    self.go(&v1, f),
                )
            }
            T::BoxFuture(f) => {
                let t1 = self.fresh.next("tau");
                let v1 = Term::Var(t1.clone());
                Formula::forall(
                    vec![t1],
                    Restriction::Atom(in_atom(v1.clone(), tau.clone(), Term::infinity())),
                    self.go(&v1, f),
                )
            }
        }
    }
}

fn fresh_time_var(alpha: &T) -> Symbol {
    let mut fresh = Fresh::new();
    alpha.reserve_names(&mut fresh);
    fresh.next("tau")
}

/// `G alpha`: `forall tau. (in(tau,0,inf)) => [alpha]_tau`, tidied below the root.
pub fn globally(alpha: &TemporalFormula) -> Formula {
    let tau = fresh_time_var(alpha);
    let v = Term::Var(tau.clone());
    let guard = Restriction::Atom(in_atom(v.clone(), Term::time(0), Term::infinity()));
    let body = tidy(&translate(&v, alpha));
    // The wrapper itself is kept even when the body is trivial.
    if body == Formula::Top {
        return Formula::forall(vec![tau], guard, body);
    }
    tidy(&Formula::forall(vec![tau], guard, body))
}

/// `F alpha`: `exists tau. (in(tau,0,inf)) & [alpha]_tau`, tidied.
pub fn finally(alpha: &TemporalFormula) -> Formula {
    let tau = fresh_time_var(alpha);
    let v = Term::Var(tau.clone());
    let guard = Restriction::Atom(in_atom(v.clone(), Term::time(0), Term::infinity()));
    let body = tidy(&translate(&v, alpha));
    if body == Formula::Bot {
        return Formula::exists(vec![tau], guard, body);
    }
    tidy(&Formula::exists(vec![tau], guard, body))
}

/// Equivalence-preserving cleanup of translated formulas: unit laws,
/// merging of directly nested universals, narrowing of `in` guards that the
/// body immediately re-states, pulling nested existentials into the
/// enclosing guard, and left-nesting guard conjunctions.
pub fn tidy(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) | Formula::Top | Formula::Bot => f.clone(),
        Formula::And(l, r) => match (tidy(l), tidy(r)) {
            (x, Formula::Top) | (Formula::Top, x) => x,
            (Formula::Bot, _) | (_, Formula::Bot) => Formula::Bot,
            (x, y) => Formula::and(x, y),
        },
        Formula::Or(l, r) => match (tidy(l), tidy(r)) {
            (x, Formula::Bot) | (Formula::Bot, x) => x,
            (Formula::Top, _) | (_, Formula::Top) => Formula::Top,
            (x, y) => Formula::or(x, y),
        },
        Formula::Forall(q) => {
            let body = tidy(&q.body);
            if body == Formula::Top {
                return Formula::Top;
            }
            let mut vars = q.vars.clone();
            let mut guard = q.guard.clone();
            let mut body = body;
            while let Formula::Forall(inner) = &body {
                let outer_names: BTreeSet<Symbol> = vars.iter().cloned().chain(guard.free_vars()).collect();
                if inner.vars.iter().any(|y| outer_names.contains(y)) {
                    break;
                }
                vars.extend(inner.vars.iter().cloned());
                guard = Restriction::and(guard, inner.guard.clone());
                body = (*inner.body).clone();
            }
            Formula::Forall(Quantified { vars, guard: left_nest(&guard), body: Box::new(body) })
        }
        Formula::Exists(q) => {
            let body = tidy(&q.body);
            if body == Formula::Bot {
                return Formula::Bot;
            }
            let (guard, body) = narrow_interval(&q.guard, body);
            let (vars, guard, body) = extrude(q.vars.clone(), guard, body);
            Formula::Exists(Quantified { vars, guard: left_nest(&guard), body: Box::new(body) })
        }
    }
}

fn leftmost_conjunct(f: &Formula) -> &Formula {
    match f {
        Formula::And(l, _) => leftmost_conjunct(l),
        other => other,
    }
}

fn drop_leftmost_conjunct(f: &Formula) -> Option<Formula> {
    match f {
        Formula::And(l, r) => match drop_leftmost_conjunct(l) {
            Some(rest) => Some(Formula::and(rest, (**r).clone())),
            None => Some((**r).clone()),
        },
        _ => None,
    }
}

/// `exists x. (in(x,a,inf)) & (in(x,a,b) & B)` becomes `exists x. (in(x,a,b)) & B`.
fn narrow_interval(guard: &Restriction, body: Formula) -> (Restriction, Formula) {
    let Restriction::Atom(g) = guard else { return (guard.clone(), body) };
    let Formula::Atom(b) = leftmost_conjunct(&body) else { return (guard.clone(), body) };
    let in_shape = |a: &Atom| a.pred.name.as_str() == IN && !a.pred.negated && a.args.len() == 3;
    if in_shape(g)
        && in_shape(b)
        && g.args[2] == Term::infinity()
        && g.args[0] == b.args[0]
        && g.args[1] == b.args[1]
    {
        if let Some(rest) = drop_leftmost_conjunct(&body) {
            return (Restriction::Atom(b.clone()), rest);
        }
    }
    (guard.clone(), body)
}

/// `exists xs. (G) & ((exists ys. (H) & C) & R)` becomes
/// `exists xs,ys. (G & H) & (C & R)` when the `ys` are not free outside.
fn extrude(mut vars: Vec<Symbol>, mut guard: Restriction, mut body: Formula) -> (Vec<Symbol>, Restriction, Formula) {
    loop {
        let (head, rest) = match &body {
            Formula::Exists(_) => (body.clone(), None),
            Formula::And(l, r) if matches!(**l, Formula::Exists(_)) => ((**l).clone(), Some((**r).clone())),
            _ => break,
        };
        let Formula::Exists(inner) = head else { break };
        let mut outside: BTreeSet<Symbol> = vars.iter().cloned().collect();
        outside.extend(guard.free_vars());
        if let Some(r) = &rest {
            outside.extend(r.free_vars());
        }
        if inner.vars.iter().any(|y| outside.contains(y)) {
            break;
        }
        vars.extend(inner.vars.iter().cloned());
        guard = Restriction::and(guard, inner.guard.clone());
        body = match rest {
            Some(r) => Formula::and(*inner.body, r),
            None => *inner.body,
        };
    }
    (vars, guard, body)
}

/// Re-associates conjunction chains in a guard to the left.
fn left_nest(c: &Restriction) -> Restriction {
    match c {
        Restriction::And(..) => Restriction::conjoin(c.conjuncts().into_iter().map(left_nest)),
        Restriction::Or(l, r) => Restriction::or(left_nest(l), left_nest(r)),
        Restriction::Exists(x, b) => Restriction::Exists(x.clone(), Box::new(left_nest(b))),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: &str) -> Symbol {
        Symbol::new(n)
    }

    #[test]
    fn atoms_gain_time_argument() {
        let a = T::Atom(Atom::new("consents", vec![Term::constant("q"), Term::constant("a")]));
        assert_eq!(
            translate(&Term::time(5), &a),
            Formula::atom("consents", vec![Term::constant("q"), Term::constant("a"), Term::time(5)])
        );
    }

    #[test]
    fn freeze_substitutes_current_time() {
        let body = T::Atom(Atom::new("p", vec![Term::offset(Term::var("x"), 30)]));
        let f = T::Freeze(sym("x"), Box::new(body));
        assert_eq!(translate(&Term::time(3), &f), Formula::atom("p", vec![Term::time(33), Term::time(3)]));
    }

    #[test]
    fn not_becomes_dual() {
        let a = T::negate(T::Atom(Atom::new("p", vec![])));
        assert_eq!(translate(&Term::time(1), &a), Formula::atom("p", vec![Term::time(1)]).dual());
        assert!(!T::until(T::Top, T::Top).is_past_only());
        assert!(T::once(T::Top).is_past_only());
    }

    #[test]
    fn trivial_bodies_keep_the_wrapper() {
        assert_eq!(finally(&T::Bot).to_string(), "exists tau. (in(tau, 0, inf)) & bot");
        assert_eq!(globally(&T::Top).to_string(), "forall tau. (in(tau, 0, inf)) => top");
        let raw = translate(&Term::var("t"), &T::Bot);
        assert_eq!(raw, Formula::Bot);
    }

    #[test]
    fn since_expands_with_fresh_times() {
        let f = translate(&Term::var("tau"), &T::since(T::Atom(Atom::new("a", vec![])), T::Atom(Atom::new("b", vec![]))));
        let Formula::Exists(q) = &f else { panic!("shape") };
        assert_eq!(q.vars, vec![sym("tau'")]);
        assert_eq!(f.free_vars(), [sym("tau")].into_iter().collect());
    }
}
