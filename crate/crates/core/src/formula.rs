//! The negation-free sublogic: atoms, restrictions (quantifier guards) and
//! formulas, together with duals, free variables and alpha-equivalence.

use std::collections::{BTreeMap, BTreeSet};

use crate::term::{Symbol, Term};

/// A predicate reference. `negated` selects the dual predicate, so duality
/// on names is an involution by construction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pred {
    pub name: Symbol,
    pub negated: bool,
}

impl Pred {
    pub fn new(name: &str) -> Self {
        Pred { name: Symbol::new(name), negated: false }
    }

    pub fn dual(&self) -> Pred {
        Pred { name: self.name.clone(), negated: !self.negated }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: Pred,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom { pred: Pred::new(pred), args }
    }

    pub fn dual(&self) -> Atom {
        Atom { pred: self.pred.dual(), args: self.args.clone() }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    /// The atom with its positive predicate.
    pub fn base(&self) -> Atom {
        Atom { pred: Pred { name: self.pred.name.clone(), negated: false }, args: self.args.clone() }
    }

    pub fn vars_into(&self, out: &mut BTreeSet<Symbol>) {
        self.args.iter().for_each(|a| a.vars_into(out));
    }
}

/// Quantifier guards: objective atoms, truth constants, conjunction,
/// disjunction and unguarded existentials.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Restriction {
    Atom(Atom),
    Top,
    Bot,
    And(Box<Restriction>, Box<Restriction>),
    Or(Box<Restriction>, Box<Restriction>),
    Exists(Symbol, Box<Restriction>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quantified {
    pub vars: Vec<Symbol>,
    pub guard: Restriction,
    pub body: Box<Formula>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(Atom),
    Top,
    Bot,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `forall vars. (guard) => body`
    Forall(Quantified),
    /// `exists vars. (guard) & body`
    Exists(Quantified),
}

impl Restriction {
    pub fn and(l: Restriction, r: Restriction) -> Restriction {
        Restriction::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Restriction, r: Restriction) -> Restriction {
        Restriction::Or(Box::new(l), Box::new(r))
    }

    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn free_vars_into(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Restriction::Atom(a) => a.vars_into(out),
            Restriction::Top | Restriction::Bot => {}
            Restriction::And(l, r) | Restriction::Or(l, r) => {
                l.free_vars_into(out);
                r.free_vars_into(out);
            }
            Restriction::Exists(x, c) => {
                let mut inner = c.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
        }
    }

    /// Views the guard as a formula; `exists x. c` becomes `exists x. (top) & c`.
    pub fn to_formula(&self) -> Formula {
        match self {
            Restriction::Atom(a) => Formula::Atom(a.clone()),
            Restriction::Top => Formula::Top,
            Restriction::Bot => Formula::Bot,
            Restriction::And(l, r) => Formula::and(l.to_formula(), r.to_formula()),
            Restriction::Or(l, r) => Formula::or(l.to_formula(), r.to_formula()),
            Restriction::Exists(x, c) => Formula::exists(vec![x.clone()], Restriction::Top, c.to_formula()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Restriction::Atom(_) | Restriction::Top | Restriction::Bot => 1,
            Restriction::And(l, r) | Restriction::Or(l, r) => 1 + l.size() + r.size(),
            Restriction::Exists(_, c) => 1 + c.size(),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Restriction::Atom(a) => out.push(a),
            Restriction::Top | Restriction::Bot => {}
            Restriction::And(l, r) | Restriction::Or(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
            Restriction::Exists(_, c) => c.collect_atoms(out),
        }
    }

    /// Flattens a conjunction chain into its conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Restriction> {
        match self {
            Restriction::And(l, r) => {
                let mut v = l.conjuncts();
                v.extend(r.conjuncts());
                v
            }
            other => vec![other],
        }
    }

    /// Rebuilds a left-nested conjunction; empty input gives `top`.
    pub fn conjoin(parts: impl IntoIterator<Item = Restriction>) -> Restriction {
        parts.into_iter().reduce(Restriction::and).unwrap_or(Restriction::Top)
    }
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn atom(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(Atom::new(pred, args))
    }

    pub fn forall(vars: Vec<Symbol>, guard: Restriction, body: Formula) -> Formula {
        Formula::Forall(Quantified { vars, guard, body: Box::new(body) })
    }

    pub fn exists(vars: Vec<Symbol>, guard: Restriction, body: Formula) -> Formula {
        Formula::Exists(Quantified { vars, guard, body: Box::new(body) })
    }

    /// Left-nested conjunction; empty input gives `top`.
    pub fn conjoin(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::Top)
    }

    /// Left-nested disjunction; empty input gives `bot`.
    pub fn disjoin(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::or).unwrap_or(Formula::Bot)
    }

    /// The structural dual: behaves as the negation of `self` would.
    /// Guards are never dualized.
    pub fn dual(&self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.dual()),
            Formula::Top => Formula::Bot,
            Formula::Bot => Formula::Top,
            Formula::And(l, r) => Formula::or(l.dual(), r.dual()),
            Formula::Or(l, r) => Formula::and(l.dual(), r.dual()),
            Formula::Forall(q) => Formula::Exists(Quantified {
                vars: q.vars.clone(),
                guard: q.guard.clone(),
                body: Box::new(q.body.dual()),
            }),
            Formula::Exists(q) => Formula::Forall(Quantified {
                vars: q.vars.clone(),
                guard: q.guard.clone(),
                body: Box::new(q.body.dual()),
            }),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn free_vars_into(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Formula::Atom(a) => a.vars_into(out),
            Formula::Top | Formula::Bot => {}
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.free_vars_into(out);
                r.free_vars_into(out);
            }
            Formula::Forall(q) | Formula::Exists(q) => {
                let mut inner = q.guard.free_vars();
                q.body.free_vars_into(&mut inner);
                for x in &q.vars {
                    inner.remove(x);
                }
                out.extend(inner);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Node count; guards count as their own node totals.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 1,
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.size() + r.size(),
            Formula::Forall(q) | Formula::Exists(q) => 1 + q.guard.size() + q.body.size(),
        }
    }

    /// Atoms occurring outside guards, in left-to-right order.
    pub fn body_atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_body_atoms(&mut out);
        out
    }

    fn collect_body_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::Top | Formula::Bot => {}
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_body_atoms(out);
                r.collect_body_atoms(out);
            }
            Formula::Forall(q) | Formula::Exists(q) => q.body.collect_body_atoms(out),
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => false,
            Formula::And(l, r) | Formula::Or(l, r) => l.has_quantifier() || r.has_quantifier(),
            Formula::Forall(_) | Formula::Exists(_) => true,
        }
    }

    /// Flattens a conjunction chain into its conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(l, r) => {
                let mut v = l.conjuncts();
                v.extend(r.conjuncts());
                v
            }
            other => vec![other],
        }
    }

    /// Equality up to consistent renaming of bound variables.
    pub fn alpha_eq(&self, other: &Formula) -> bool {
        AlphaEnv::default().formula(self, other)
    }
}

impl Restriction {
    pub fn alpha_eq(&self, other: &Restriction) -> bool {
        AlphaEnv::default().restriction(self, other)
    }
}

/// Bound-variable correspondence for alpha-equivalence. Each side maps its
/// bound names to a shared binder depth.
#[derive(Default, Clone)]
struct AlphaEnv {
    left: BTreeMap<Symbol, usize>,
    right: BTreeMap<Symbol, usize>,
    depth: usize,
}

impl AlphaEnv {
    fn bind(&self, l: &[Symbol], r: &[Symbol]) -> Option<AlphaEnv> {
        if l.len() != r.len() {
            return None;
        }
        let mut env = self.clone();
        for (a, b) in l.iter().zip(r) {
            env.left.insert(a.clone(), env.depth);
            env.right.insert(b.clone(), env.depth);
            env.depth += 1;
        }
        Some(env)
    }

    fn term(&self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => match (self.left.get(x), self.right.get(y)) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            },
            (Term::App(f, xs), Term::App(g, ys)) => f == g && self.terms(xs, ys),
            (Term::Tuple(xs), Term::Tuple(ys)) => self.terms(xs, ys),
            (Term::Offset(x, d), Term::Offset(y, e)) => d == e && self.term(x, y),
            (Term::Var(_), _) | (_, Term::Var(_)) => false,
            _ => a == b,
        }
    }

    fn terms(&self, xs: &[Term], ys: &[Term]) -> bool {
        xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.term(x, y))
    }

    fn atom(&self, a: &Atom, b: &Atom) -> bool {
        a.pred == b.pred && self.terms(&a.args, &b.args)
    }

    fn restriction(&self, a: &Restriction, b: &Restriction) -> bool {
        match (a, b) {
            (Restriction::Atom(x), Restriction::Atom(y)) => self.atom(x, y),
            (Restriction::Top, Restriction::Top) | (Restriction::Bot, Restriction::Bot) => true,
            (Restriction::And(a1, a2), Restriction::And(b1, b2))
            | (Restriction::Or(a1, a2), Restriction::Or(b1, b2)) => {
                self.restriction(a1, b1) && self.restriction(a2, b2)
            }
            (Restriction::Exists(x, c), Restriction::Exists(y, d)) => self
                .bind(std::slice::from_ref(x), std::slice::from_ref(y))
                .is_some_and(|env| env.restriction(c, d)),
            _ => false,
        }
    }

    fn quantified(&self, a: &Quantified, b: &Quantified) -> bool {
        self.bind(&a.vars, &b.vars)
            .is_some_and(|env| env.restriction(&a.guard, &b.guard) && env.formula(&a.body, &b.body))
    }

    fn formula(&self, a: &Formula, b: &Formula) -> bool {
        match (a, b) {
            (Formula::Atom(x), Formula::Atom(y)) => self.atom(x, y),
            (Formula::Top, Formula::Top) | (Formula::Bot, Formula::Bot) => true,
            (Formula::And(a1, a2), Formula::And(b1, b2)) | (Formula::Or(a1, a2), Formula::Or(b1, b2)) => {
                self.formula(a1, b1) && self.formula(a2, b2)
            }
            (Formula::Forall(x), Formula::Forall(y)) | (Formula::Exists(x), Formula::Exists(y)) => {
                self.quantified(x, y)
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn sym(n: &str) -> Symbol {
        Symbol::new(n)
    }

    #[test]
    fn dual_of_atom_flips_predicate() {
        let a = Formula::atom("p", vec![Term::constant("a"), Term::time(1)]);
        let d = a.dual();
        match &d {
            Formula::Atom(at) => assert!(at.pred.negated),
            _ => panic!("expected atom"),
        }
        assert_eq!(d.dual(), a);
        assert_eq!(Formula::Top.dual(), Formula::Bot);
    }

    #[test]
    fn dual_of_forall_keeps_guard() {
        let f = Formula::forall(
            vec![sym("x")],
            Restriction::Atom(Atom::new("p", vec![v("x")])),
            Formula::atom("q", vec![v("x")]),
        );
        let expected = Formula::exists(
            vec![sym("x")],
            Restriction::Atom(Atom::new("p", vec![v("x")])),
            Formula::atom("q", vec![v("x")]).dual(),
        );
        assert_eq!(f.dual(), expected);
    }

    #[test]
    fn free_vars_respect_binders() {
        let send = Formula::atom("send", vec![v("p1"), v("p2"), v("m"), v("tau")]);
        let names: Vec<_> = send.free_vars().into_iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["m", "p1", "p2", "tau"]);

        let c = Restriction::Exists(sym("x"), Box::new(Restriction::Atom(Atom::new("p", vec![v("x"), v("y")]))));
        assert_eq!(c.free_vars(), [sym("y")].into_iter().collect());
    }

    #[test]
    fn alpha_equivalence_tracks_binders() {
        let mk = |x: &str| {
            Formula::forall(
                vec![sym(x)],
                Restriction::Atom(Atom::new("p", vec![v(x)])),
                Formula::atom("q", vec![v(x), v("free")]),
            )
        };
        assert!(mk("x").alpha_eq(&mk("y")));
        assert!(!mk("x").alpha_eq(&mk("free")));
        assert_ne!(mk("x"), mk("y"));
    }
}
