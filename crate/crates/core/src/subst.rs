//! Substitutions and fresh-name generation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formula::{Atom, Formula, Quantified, Restriction};
use crate::term::{Symbol, Term};

/// A finite map from variables to terms. Applying it to formulas is
/// capture-avoiding: bound variables shadow the map and are renamed when a
/// replacement term mentions them.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution(BTreeMap<Symbol, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn singleton(x: Symbol, t: Term) -> Self {
        let mut s = Substitution::new();
        s.bind(x, t);
        s
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Symbol, Term)>) -> Self {
        Substitution(pairs.into_iter().collect())
    }

    pub fn bind(&mut self, x: Symbol, t: Term) {
        self.0.insert(x, t);
    }

    pub fn get(&self, x: &Symbol) -> Option<&Term> {
        self.0.get(x)
    }

    pub fn contains(&self, x: &Symbol) -> bool {
        self.0.contains_key(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.0.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Symbol> {
        self.0.keys()
    }

    pub fn is_ground(&self) -> bool {
        self.0.values().all(Term::is_ground)
    }

    /// Disjoint-or-agreeing union. `None` if both bind a variable differently.
    pub fn merge(&self, other: &Substitution) -> Option<Substitution> {
        let mut out = self.clone();
        for (x, t) in &other.0 {
            match out.0.get(x) {
                Some(existing) if existing != t => return None,
                Some(_) => {}
                None => {
                    out.0.insert(x.clone(), t.clone());
                }
            }
        }
        Some(out)
    }

    /// `self` followed by `other`: applies `other` to the range of `self`
    /// and adds the bindings of `other` for variables `self` leaves alone.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut out: BTreeMap<Symbol, Term> =
            self.0.iter().map(|(x, t)| (x.clone(), other.apply_term(t))).collect();
        for (x, t) in &other.0 {
            out.entry(x.clone()).or_insert_with(|| t.clone());
        }
        Substitution(out)
    }

    /// Drops the bindings for `vars`.
    pub fn without<'a>(&self, vars: impl IntoIterator<Item = &'a Symbol>) -> Substitution {
        let mut out = self.clone();
        for x in vars {
            out.0.remove(x);
        }
        out
    }

    /// Keeps only the bindings for `vars`.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a Symbol>) -> Substitution {
        Substitution(vars.into_iter().filter_map(|x| self.0.get(x).map(|t| (x.clone(), t.clone()))).collect())
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        t.map_vars(&|v| self.0.get(v).cloned())
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom { pred: a.pred.clone(), args: a.args.iter().map(|t| self.apply_term(t)).collect() }
    }

    fn range_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.0.values().for_each(|t| t.vars_into(&mut out));
        out
    }

    pub fn apply_restriction(&self, c: &Restriction) -> Restriction {
        if self.is_empty() {
            return c.clone();
        }
        match c {
            Restriction::Atom(a) => Restriction::Atom(self.apply_atom(a)),
            Restriction::Top => Restriction::Top,
            Restriction::Bot => Restriction::Bot,
            Restriction::And(l, r) => Restriction::and(self.apply_restriction(l), self.apply_restriction(r)),
            Restriction::Or(l, r) => Restriction::or(self.apply_restriction(l), self.apply_restriction(r)),
            Restriction::Exists(x, body) => {
                let inner = self.without([x]);
                if inner.range_vars().contains(x) {
                    let mut fresh = Fresh::avoiding_restriction(body);
                    fresh.reserve(inner.range_vars());
                    fresh.reserve(inner.domain().cloned());
                    let y = fresh.next(x.as_str());
                    let renamed = Substitution::singleton(x.clone(), Term::Var(y.clone())).apply_restriction(body);
                    Restriction::Exists(y, Box::new(inner.apply_restriction(&renamed)))
                } else {
                    Restriction::Exists(x.clone(), Box::new(inner.apply_restriction(body)))
                }
            }
        }
    }

    fn apply_quantified(&self, q: &Quantified) -> Quantified {
        let inner = self.without(&q.vars);
        let range = inner.range_vars();
        if q.vars.iter().any(|x| range.contains(x)) {
            let mut fresh = Fresh::avoiding(&Formula::Forall(q.clone()));
            fresh.reserve(range);
            fresh.reserve(inner.domain().cloned());
            let mut rename = Substitution::new();
            let mut vars = Vec::with_capacity(q.vars.len());
            for x in &q.vars {
                let y = fresh.next(x.as_str());
                rename.bind(x.clone(), Term::Var(y.clone()));
                vars.push(y);
            }
            let guard = inner.apply_restriction(&rename.apply_restriction(&q.guard));
            let body = inner.apply_formula(&rename.apply_formula(&q.body));
            Quantified { vars, guard, body: Box::new(body) }
        } else {
            Quantified {
                vars: q.vars.clone(),
                guard: inner.apply_restriction(&q.guard),
                body: Box::new(inner.apply_formula(&q.body)),
            }
        }
    }

    pub fn apply_formula(&self, f: &Formula) -> Formula {
        if self.is_empty() {
            return f.clone();
        }
        match f {
            Formula::Atom(a) => Formula::Atom(self.apply_atom(a)),
            Formula::Top => Formula::Top,
            Formula::Bot => Formula::Bot,
            Formula::And(l, r) => Formula::and(self.apply_formula(l), self.apply_formula(r)),
            Formula::Or(l, r) => Formula::or(self.apply_formula(l), self.apply_formula(r)),
            Formula::Forall(q) => Formula::Forall(self.apply_quantified(q)),
            Formula::Exists(q) => Formula::Exists(self.apply_quantified(q)),
        }
    }

    /// The image of a variable vector: a bare term for one variable, a tuple otherwise.
    pub fn image(&self, vars: &[Symbol]) -> Term {
        let mut items: Vec<Term> = vars.iter().map(|x| self.apply_term(&Term::Var(x.clone()))).collect();
        if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Term::Tuple(items)
        }
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x} -> {t:?}")?;
        }
        f.write_str("}")
    }
}

/// Deterministic fresh-name supply. Candidates are `base`, `base'`,
/// `base''`, ... and never collide with anything reserved.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    used: BTreeSet<Symbol>,
}

impl Fresh {
    pub fn new() -> Self {
        Fresh::default()
    }

    /// A supply that avoids every variable name occurring in `f`, bound or free.
    pub fn avoiding(f: &Formula) -> Self {
        let mut fresh = Fresh::new();
        fresh.reserve_formula(f);
        fresh
    }

    pub fn avoiding_restriction(c: &Restriction) -> Self {
        let mut fresh = Fresh::new();
        fresh.reserve_restriction(c);
        fresh
    }

    pub fn reserve(&mut self, names: impl IntoIterator<Item = Symbol>) {
        self.used.extend(names);
    }

    pub fn reserve_formula(&mut self, f: &Formula) {
        match f {
            Formula::Atom(a) => a.vars_into(&mut self.used),
            Formula::Top | Formula::Bot => {}
            Formula::And(l, r) | Formula::Or(l, r) => {
                self.reserve_formula(l);
                self.reserve_formula(r);
            }
            Formula::Forall(q) | Formula::Exists(q) => {
                self.used.extend(q.vars.iter().cloned());
                self.reserve_restriction(&q.guard);
                self.reserve_formula(&q.body);
            }
        }
    }

    pub fn reserve_restriction(&mut self, c: &Restriction) {
        match c {
            Restriction::Atom(a) => a.vars_into(&mut self.used),
            Restriction::Top | Restriction::Bot => {}
            Restriction::And(l, r) | Restriction::Or(l, r) => {
                self.reserve_restriction(l);
                self.reserve_restriction(r);
            }
            Restriction::Exists(x, body) => {
                self.used.insert(x.clone());
                self.reserve_restriction(body);
            }
        }
    }

    pub fn is_used(&self, name: &Symbol) -> bool {
        self.used.contains(name)
    }

    /// Returns an unused name derived from `base` and marks it used.
    pub fn next(&mut self, base: &str) -> Symbol {
        let stem = base.trim_end_matches('\'');
        let stem = if stem.is_empty() { "v" } else { stem };
        let mut candidate = stem.to_string();
        loop {
            let sym = Symbol::from(candidate.clone());
            if !self.used.contains(&sym) {
                self.used.insert(sym.clone());
                return sym;
            }
            candidate.push('\'');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: &str) -> Symbol {
        Symbol::new(n)
    }

    #[test]
    fn bound_variables_shadow_the_map() {
        let f = Formula::and(
            Formula::atom("p", vec![Term::var("x")]),
            Formula::forall(
                vec![sym("x")],
                Restriction::Atom(Atom::new("q", vec![Term::var("x")])),
                Formula::atom("r", vec![Term::var("x")]),
            ),
        );
        let s = Substitution::singleton(sym("x"), Term::constant("a"));
        let expected = Formula::and(
            Formula::atom("p", vec![Term::constant("a")]),
            Formula::forall(
                vec![sym("x")],
                Restriction::Atom(Atom::new("q", vec![Term::var("x")])),
                Formula::atom("r", vec![Term::var("x")]),
            ),
        );
        assert_eq!(s.apply_formula(&f), expected);
    }

    #[test]
    fn capture_is_avoided_by_renaming() {
        let f = Formula::exists(
            vec![sym("y")],
            Restriction::Atom(Atom::new("q", vec![Term::var("y")])),
            Formula::atom("r", vec![Term::var("x"), Term::var("y")]),
        );
        let s = Substitution::singleton(sym("x"), Term::var("y"));
        let out = s.apply_formula(&f);
        let Formula::Exists(q) = &out else { panic!("shape") };
        assert_eq!(q.vars, vec![sym("y'")]);
        assert!(out.free_vars().contains(&sym("y")));
    }

    #[test]
    fn merge_detects_conflicts() {
        let a = Substitution::singleton(sym("x"), Term::constant("a"));
        let b = Substitution::singleton(sym("x"), Term::constant("b"));
        let c = Substitution::singleton(sym("y"), Term::constant("b"));
        assert!(a.merge(&b).is_none());
        assert_eq!(a.merge(&c).unwrap().len(), 2);
        assert_eq!(a.merge(&a).unwrap(), a);
    }

    #[test]
    fn fresh_names_prime_the_stem() {
        let mut fresh = Fresh::new();
        fresh.reserve([sym("tau")]);
        assert_eq!(fresh.next("tau"), sym("tau'"));
        assert_eq!(fresh.next("tau"), sym("tau''"));
        assert_eq!(fresh.next("x"), sym("x"));
    }

    #[test]
    fn image_is_tuple_for_several_vars() {
        let s = Substitution::from_pairs([(sym("x"), Term::constant("a")), (sym("y"), Term::time(3))]);
        assert_eq!(s.image(&[sym("x")]), Term::constant("a"));
        assert_eq!(s.image(&[sym("y"), sym("x")]), Term::Tuple(vec![Term::time(3), Term::constant("a")]));
    }
}
