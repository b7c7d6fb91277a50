//! Partial structures: a three-valued fact store over ground atoms with
//! observed time points, completeness metadata and subjective assertions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Atom, Pred};
use crate::schema::{Builtin, ClosedWorld, Kind, Schema};
use crate::subst::Substitution;
use crate::term::{Symbol, Term, Time};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Truth {
    #[serde(rename = "tt")]
    True,
    #[serde(rename = "ff")]
    False,
    #[serde(rename = "uu")]
    Unknown,
}

impl Truth {
    pub fn from_bool(b: bool) -> Truth {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn dual(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Truth::True => Some(true),
            Truth::False => Some(false),
            Truth::Unknown => None,
        }
    }

    pub fn is_decided(self) -> bool {
        self != Truth::Unknown
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::True => "tt",
            Truth::False => "ff",
            Truth::Unknown => "uu",
        })
    }
}

/// Declared completeness of a structure, ordered by strength.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "until")]
pub enum Completeness {
    #[default]
    Generic,
    /// Every state and every closed-world atom at or before the horizon is recorded.
    PastComplete(Time),
    /// Every objective atom is decided.
    ObjectivelyComplete,
}

/// How `in(t, a, b)` reads for an unobserved `t` outside any completeness guarantee.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unobserved {
    #[default]
    #[serde(rename = "uu")]
    Unknown,
    #[serde(rename = "ff")]
    False,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Store {
    /// Explicit objective facts, keyed by positive ground atom.
    facts: BTreeMap<Atom, bool>,
    /// True rows per predicate, keyed by the ground input-position arguments.
    index: BTreeMap<Symbol, BTreeMap<Vec<Term>, BTreeSet<Vec<Term>>>>,
    times: BTreeSet<Time>,
    assertions: BTreeMap<Atom, bool>,
    completeness: Completeness,
    unobserved: Unobserved,
}

/// An immutable-by-convention partial structure. Mutating methods only ever
/// move to an extension; clones share storage until written.
#[derive(Clone, Debug)]
pub struct PartialStructure {
    schema: Arc<Schema>,
    store: Arc<Store>,
}

impl PartialStructure {
    pub fn new(schema: Arc<Schema>) -> Self {
        PartialStructure { schema, store: Arc::new(Store::default()) }
    }

    /// The same store under a schema that extends the current one.
    pub fn with_schema(&self, schema: Arc<Schema>) -> Result<PartialStructure> {
        if let Some(d) = self.schema.declared().find(|d| schema.get(&d.name) != Some(*d)) {
            return Err(Error::Declaration(format!("`{}` cannot be redeclared differently", d.name)));
        }
        Ok(PartialStructure { schema, store: self.store.clone() })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        self.schema.clone()
    }

    pub fn completeness(&self) -> Completeness {
        self.store.completeness
    }

    pub fn unobserved(&self) -> Unobserved {
        self.store.unobserved
    }

    pub fn observed_times(&self) -> impl Iterator<Item = Time> + '_ {
        self.store.times.iter().copied()
    }

    pub fn is_observed(&self, t: Time) -> bool {
        self.store.times.contains(&t)
    }

    pub fn facts(&self) -> impl Iterator<Item = (&Atom, bool)> {
        self.store.facts.iter().map(|(a, v)| (a, *v))
    }

    pub fn assertions(&self) -> impl Iterator<Item = (&Atom, bool)> {
        self.store.assertions.iter().map(|(a, v)| (a, *v))
    }

    pub fn is_empty(&self) -> bool {
        let s = &self.store;
        s.facts.is_empty() && s.times.is_empty() && s.assertions.is_empty() && s.completeness == Completeness::Generic
    }

    /// Every ground argument term in facts and assertions, plus observed times.
    pub fn ground_terms(&self) -> BTreeSet<Term> {
        let mut out: BTreeSet<Term> = self.store.times.iter().map(|t| Term::Time(*t)).collect();
        for a in self.store.facts.keys().chain(self.store.assertions.keys()) {
            out.extend(a.args.iter().cloned());
        }
        out
    }

    /// Three-valued valuation of a ground atom.
    pub fn valuation(&self, a: &Atom) -> Truth {
        let base = self.base_valuation(&a.pred.name, &a.args);
        if a.pred.negated {
            base.dual()
        } else {
            base
        }
    }

    fn base_valuation(&self, name: &Symbol, args: &[Term]) -> Truth {
        let decl = self.schema.get(name);
        match decl.and_then(|d| d.builtin) {
            Some(Builtin::In) => return self.in_valuation(args),
            Some(Builtin::Neq) => return Truth::from_bool(args.len() == 2 && args[0] != args[1]),
            Some(Builtin::NotInSet) => {
                return match args {
                    [x, Term::Set(s)] => Truth::from_bool(!s.contains(x)),
                    _ => Truth::False,
                }
            }
            None => {}
        }
        let key = Atom { pred: Pred { name: name.clone(), negated: false }, args: args.to_vec() };
        let Some(decl) = decl else { return Truth::Unknown };
        if decl.kind == Kind::Subjective {
            return self.store.assertions.get(&key).map_or(Truth::Unknown, |v| Truth::from_bool(*v));
        }
        if let Some(v) = self.store.facts.get(&key) {
            return Truth::from_bool(*v);
        }
        let closed = match decl.closed {
            ClosedWorld::Open => false,
            ClosedWorld::Always => true,
            ClosedWorld::Horizon => match self.store.completeness {
                Completeness::Generic => false,
                Completeness::ObjectivelyComplete => true,
                Completeness::PastComplete(h) => {
                    matches!(args.last().and_then(Term::as_time), Some(t) if t <= h)
                }
            },
        };
        if closed {
            Truth::False
        } else {
            Truth::Unknown
        }
    }

    fn in_valuation(&self, args: &[Term]) -> Truth {
        let [t1, lo, hi] = args else { return Truth::False };
        let (Some(t1), Some(lo), Some(hi)) = (t1.as_time(), lo.as_time(), hi.as_time()) else {
            return Truth::False;
        };
        if !t1.is_finite() || t1 < lo || t1 > hi {
            return Truth::False;
        }
        if self.store.times.contains(&t1) {
            return Truth::True;
        }
        let decided = match self.store.completeness {
            Completeness::ObjectivelyComplete => true,
            Completeness::PastComplete(h) => t1 <= h,
            Completeness::Generic => false,
        };
        if decided || self.store.unobserved == Unobserved::False {
            Truth::False
        } else {
            Truth::Unknown
        }
    }

    fn store_mut(&mut self) -> &mut Store {
        Arc::make_mut(&mut self.store)
    }

    /// Records a state. Fails if the structure already rules it out.
    pub fn observe(&mut self, t: Time) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::Conflict(vec!["inf cannot be observed".into()]));
        }
        if self.store.times.contains(&t) {
            return Ok(());
        }
        if self.in_valuation(&[Term::Time(t), Term::time(0), Term::infinity()]) == Truth::False {
            return Err(Error::Conflict(vec![format!("in({t},0,inf) is already ff")]));
        }
        self.store_mut().times.insert(t);
        Ok(())
    }

    /// Records an objective fact (a dual atom records the flipped base fact).
    pub fn add_fact(&mut self, a: &Atom, value: bool) -> Result<()> {
        if !a.is_ground() {
            return Err(Error::NotGround(a.to_string()));
        }
        let decl = self.schema.get(&a.pred.name).ok_or_else(|| Error::UnknownPredicate(a.pred.name.to_string()))?;
        if decl.arity != a.args.len() {
            return Err(Error::Arity { pred: a.pred.name.to_string(), expected: decl.arity, found: a.args.len() });
        }
        if decl.builtin.is_some() {
            return Err(Error::Declaration(format!("built-in `{}` cannot be stored", a.pred.name)));
        }
        if decl.kind == Kind::Subjective {
            return self.record_assertion(a, value);
        }
        let current = self.valuation(a);
        if let Some(existing) = current.as_bool() {
            return if existing == value {
                Ok(())
            } else {
                Err(Error::Contradiction { atom: a.to_string(), existing: current.to_string() })
            };
        }
        let base = a.base();
        let base_value = value != a.pred.negated;
        let moding = decl.moding.clone();
        let store = self.store_mut();
        if base_value {
            if let Some(m) = moding {
                let key: Vec<Term> = m.input.iter().map(|&i| base.args[i].clone()).collect();
                store.index.entry(base.pred.name.clone()).or_default().entry(key).or_default().insert(base.args.clone());
            }
        }
        store.facts.insert(base, base_value);
        Ok(())
    }

    /// Human input for a ground subjective atom; returns the extended structure.
    pub fn assert_subjective(&self, a: &Atom, value: bool) -> Result<PartialStructure> {
        if !a.is_ground() {
            return Err(Error::NotGround(a.to_string()));
        }
        if !self.schema.is_subjective(&a.pred) {
            return Err(Error::NotSubjective(a.to_string()));
        }
        let mut out = self.clone();
        out.record_assertion(a, value)?;
        Ok(out)
    }

    fn record_assertion(&mut self, a: &Atom, value: bool) -> Result<()> {
        let current = self.valuation(a);
        match current.as_bool() {
            Some(existing) if existing == value => Ok(()),
            Some(_) => Err(Error::Contradiction { atom: a.to_string(), existing: current.to_string() }),
            None => {
                let base_value = value != a.pred.negated;
                self.store_mut().assertions.insert(a.base(), base_value);
                Ok(())
            }
        }
    }

    /// Strengthens the completeness claim; never weakens it.
    pub fn raise_completeness(&mut self, c: Completeness) {
        if c > self.store.completeness {
            self.store_mut().completeness = c;
        }
    }

    pub fn set_unobserved(&mut self, u: Unobserved) {
        if u == Unobserved::False {
            self.store_mut().unobserved = u;
        }
    }

    /// Merges `delta` into `self`, failing with every contradicted atom if the
    /// result would not extend both inputs.
    pub fn extend(&self, delta: &PartialStructure) -> Result<PartialStructure> {
        let mut conflicts = Vec::new();
        let mut out = self.clone();
        let time_atom = |t: Time| Atom::new(crate::schema::IN, vec![Term::Time(t), Term::time(0), Term::infinity()]);

        for (a, v) in self.facts().chain(self.assertions()) {
            if delta.valuation(a) == Truth::from_bool(!v) {
                conflicts.push(format!("{a} (tt in one, ff in the other)"));
            }
        }
        for t in self.observed_times() {
            if delta.valuation(&time_atom(t)) == Truth::False {
                conflicts.push(time_atom(t).to_string());
            }
        }
        for t in delta.observed_times() {
            if out.observe(t).is_err() {
                conflicts.push(time_atom(t).to_string());
            }
        }
        for (a, v) in delta.facts().chain(delta.assertions()) {
            if out.add_fact(a, v).is_err() {
                conflicts.push(format!("{a} (tt in one, ff in the other)"));
            }
        }
        if !conflicts.is_empty() {
            conflicts.sort();
            conflicts.dedup();
            return Err(Error::Conflict(conflicts));
        }
        out.raise_completeness(delta.completeness());
        out.set_unobserved(delta.unobserved());
        Ok(out)
    }

    /// Satisfying instances of an objective atom whose input positions are ground,
    /// as substitutions over the variables in output positions.
    pub fn sat(&self, a: &Atom) -> Result<Vec<Substitution>> {
        let undefined = |reason: &str| Error::UndefinedMode { atom: a.to_string(), reason: reason.into() };
        if !self.schema.is_objective(&a.pred) {
            return Err(undefined("not an objective predicate"));
        }
        let moding = self.schema.moding(&a.pred).ok_or_else(|| undefined("predicate has no mode"))?;
        if moding.input.iter().chain(&moding.output).any(|&i| i >= a.args.len()) {
            return Err(undefined("arity does not match the mode"));
        }
        if let Some(&i) = moding.input.iter().find(|&&i| !a.args[i].is_ground()) {
            return Err(undefined(&format!("input position {} is not ground", i + 1)));
        }
        let mut out_vars = BTreeSet::new();
        for &i in &moding.output {
            a.args[i].vars_into(&mut out_vars);
        }

        let mut results = BTreeSet::new();
        let mut consider = |row: &[Term]| {
            let mut s = Substitution::new();
            if a.args.iter().zip(row).all(|(p, v)| unify(p, v, &mut s)) {
                results.insert(s.restrict(&out_vars));
            }
        };

        if a.args.iter().all(Term::is_ground) {
            if self.valuation(a) == Truth::True {
                results.insert(Substitution::new());
            }
        } else if !a.pred.negated && self.schema.builtin(&a.pred) == Some(Builtin::In) {
            if let (Some(lo), Some(hi)) = (a.args[1].as_time(), a.args[2].as_time()) {
                if lo <= hi {
                    for t in self.store.times.range(lo..=hi) {
                        consider(&[Term::Time(*t), a.args[1].clone(), a.args[2].clone()]);
                    }
                }
            }
        } else if !a.pred.negated {
            let key: Vec<Term> = moding.input.iter().map(|&i| a.args[i].clone()).collect();
            if let Some(rows) = self.store.index.get(&a.pred.name).and_then(|ix| ix.get(&key)) {
                for row in rows {
                    consider(row);
                }
            }
        }
        Ok(results.into_iter().collect())
    }
}

/// One-way matching of a pattern term against a ground value, extending `s`.
pub fn unify(pattern: &Term, value: &Term, s: &mut Substitution) -> bool {
    match pattern {
        Term::Var(x) => match s.get(x) {
            Some(bound) => bound == value,
            None => {
                s.bind(x.clone(), value.clone());
                true
            }
        },
        Term::App(f, args) => match value {
            Term::App(g, vals) => f == g && args.len() == vals.len() && args.iter().zip(vals).all(|(p, v)| unify(p, v, s)),
            _ => false,
        },
        Term::Tuple(args) => match value {
            Term::Tuple(vals) => args.len() == vals.len() && args.iter().zip(vals).all(|(p, v)| unify(p, v, s)),
            _ => false,
        },
        Term::Offset(base, d) => match value {
            Term::Time(Time::At(n)) if *n >= *d => unify(base, &Term::time(n - d), s),
            Term::Time(Time::Infinity) => unify(base, value, s),
            _ => false,
        },
        Term::Const(_) | Term::Time(_) | Term::Set(_) => pattern == value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Moding, PredicateDecl};

    fn schema() -> Arc<Schema> {
        let mut s = Schema::new();
        s.declare(PredicateDecl::objective("req", 3, Moding::new([], [0, 1, 2]))).unwrap();
        s.declare(PredicateDecl::objective("inrole", 3, Moding::new([1, 2], [0]))).unwrap();
        s.declare(PredicateDecl::subjective("ftr", 3)).unwrap();
        Arc::new(s)
    }

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    fn example_four() -> PartialStructure {
        let mut l = PartialStructure::new(schema());
        for t in [1, 3, 7] {
            l.observe(Time::At(t)).unwrap();
        }
        l.add_fact(&Atom::new("req", vec![c("Alice"), c("mr"), Term::time(3)]), true).unwrap();
        l
    }

    #[test]
    fn valuation_reads_facts_and_defaults_to_unknown() {
        let l = example_four();
        assert_eq!(l.valuation(&Atom::new("req", vec![c("Alice"), c("mr"), Term::time(3)])), Truth::True);
        assert_eq!(l.valuation(&Atom::new("req", vec![c("Bob"), c("mr"), Term::time(3)])), Truth::Unknown);
        assert_eq!(l.valuation(&Atom::new("req", vec![c("Alice"), c("mr"), Term::time(3)]).dual()), Truth::False);
        assert_eq!(l.valuation(&Atom::new("in", vec![Term::time(3), Term::time(0), Term::infinity()])), Truth::True);
        assert_eq!(l.valuation(&Atom::new("in", vec![Term::time(4), Term::time(0), Term::infinity()])), Truth::Unknown);
        assert_eq!(l.valuation(&Atom::new("in", vec![Term::time(40), Term::time(0), Term::time(33)])), Truth::False);
    }

    #[test]
    fn past_completeness_closes_objective_predicates() {
        let mut l = example_four();
        l.raise_completeness(Completeness::PastComplete(Time::At(10)));
        assert_eq!(l.valuation(&Atom::new("req", vec![c("Bob"), c("mr"), Term::time(3)])), Truth::False);
        assert_eq!(l.valuation(&Atom::new("req", vec![c("Bob"), c("mr"), Term::time(11)])), Truth::Unknown);
        assert_eq!(l.valuation(&Atom::new("in", vec![Term::time(4), Term::time(0), Term::infinity()])), Truth::False);
        assert_eq!(l.valuation(&Atom::new("ftr", vec![c("Alice"), c("mr"), Term::time(3)])), Truth::Unknown);
        assert!(l.observe(Time::At(5)).is_err());
    }

    #[test]
    fn notin_set_is_membership() {
        let l = example_four();
        let tuple = Term::Tuple(vec![Term::time(3), c("Alice"), c("mr")]);
        let set = Term::Set([tuple.clone()].into_iter().collect());
        assert_eq!(l.valuation(&Atom::new("notin_set", vec![tuple, set])), Truth::False);
    }

    #[test]
    fn assertions_are_idempotent_and_consistent() {
        let l = example_four();
        let a = Atom::new("ftr", vec![c("Alice"), c("mr"), Term::time(3)]).dual();
        let l2 = l.assert_subjective(&a, true).unwrap();
        assert_eq!(l2.valuation(&a), Truth::True);
        assert_eq!(l2.valuation(&a.dual()), Truth::False);
        assert!(l2.assert_subjective(&a, true).is_ok());
        assert!(matches!(l2.assert_subjective(&a, false), Err(Error::Contradiction { .. })));
        assert!(matches!(l.assert_subjective(&Atom::new("req", vec![c("A"), c("b"), Term::time(1)]), true), Err(Error::NotSubjective(_))));
    }

    #[test]
    fn extend_merges_and_reports_conflicts() {
        let l = example_four();
        let mut delta = PartialStructure::new(schema());
        delta.observe(Time::At(11)).unwrap();
        delta.add_fact(&Atom::new("inrole", vec![c("Bob"), c("records"), Term::time(11)]), true).unwrap();
        let merged = l.extend(&delta).unwrap();
        assert_eq!(merged.observed_times().count(), 4);
        assert_eq!(l.extend(&PartialStructure::new(schema())).unwrap().facts().count(), 1);

        let mut bad = PartialStructure::new(schema());
        bad.add_fact(&Atom::new("req", vec![c("Alice"), c("mr"), Term::time(3)]), false).unwrap();
        assert!(matches!(l.extend(&bad), Err(Error::Conflict(v)) if v.len() == 1));
    }

    #[test]
    fn sat_enumerates_outputs() {
        let l = example_four();
        let a = Atom::new("in", vec![Term::var("tau"), Term::time(0), Term::infinity()]);
        let times: Vec<_> = l.sat(&a).unwrap().iter().map(|s| s.get(&Symbol::new("tau")).cloned().unwrap()).collect();
        assert_eq!(times, [Term::time(1), Term::time(3), Term::time(7)]);

        let r = Atom::new("req", vec![Term::var("p"), Term::var("t"), Term::time(5)]);
        assert!(l.sat(&r).unwrap().is_empty());

        let bad = Atom::new("inrole", vec![Term::var("p"), Term::var("r"), Term::time(5)]);
        assert!(matches!(l.sat(&bad), Err(Error::UndefinedMode { .. })));
        let subj = Atom::new("ftr", vec![c("a"), c("b"), Term::time(5)]);
        assert!(l.sat(&subj).is_err());
    }
}
