//! Terms: constants, variables, function applications, time points and
//! the ground tuple sets used by residual guards.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// An interned-ish name. Cheap to clone, ordered lexicographically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A time point: a nonnegative tick count or infinity. `Infinity` is the
/// unique maximum under the derived order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Time {
    At(u64),
    Infinity,
}

impl Time {
    /// Adds a nonnegative offset; infinity absorbs, overflow saturates to infinity.
    pub fn offset(self, delta: u64) -> Time {
        match self {
            Time::At(t) => t.checked_add(delta).map_or(Time::Infinity, Time::At),
            Time::Infinity => Time::Infinity,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Time::At(_))
    }
}

/// Serialized as an integer, or the string `"inf"`.
impl Serialize for Time {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Time::At(t) => s.serialize_u64(*t),
            Time::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            At(u64),
            Named(String),
        }
        match Repr::deserialize(d)? {
            Repr::At(t) => Ok(Time::At(t)),
            Repr::Named(s) if s == "inf" => Ok(Time::Infinity),
            Repr::Named(s) => Err(serde::de::Error::custom(format!("expected a tick count or \"inf\", found {s:?}"))),
        }
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Time::At(t) => write!(f, "{t}"),
            Time::Infinity => f.write_str("inf"),
        }
    }
}

/// A finite set of ground terms. Multi-variable quantifiers store tuple
/// terms, single-variable ones store the bare value.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundSet(BTreeSet<Term>);

impl GroundSet {
    pub fn new() -> Self {
        GroundSet(BTreeSet::new())
    }

    pub fn insert(&mut self, t: Term) {
        debug_assert!(t.is_ground());
        self.0.insert(t);
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.0.contains(t)
    }

    pub fn union(&self, other: &GroundSet) -> GroundSet {
        GroundSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.0.iter()
    }
}

impl FromIterator<Term> for GroundSet {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        GroundSet(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Symbol),
    Var(Symbol),
    App(Symbol, Vec<Term>),
    Time(Time),
    /// `base + delta`; `base` is a variable or a time.
    Offset(Box<Term>, u64),
    Tuple(Vec<Term>),
    Set(GroundSet),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(Symbol::new(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::new(name))
    }

    pub fn time(t: u64) -> Term {
        Term::Time(Time::At(t))
    }

    pub fn infinity() -> Term {
        Term::Time(Time::Infinity)
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(Symbol::new(f), args)
    }

    /// Builds `base + delta`, folding it when `base` is already a time.
    pub fn offset(base: Term, delta: u64) -> Term {
        match base {
            Term::Time(t) => Term::Time(t.offset(delta)),
            Term::Offset(inner, d) => Term::offset(*inner, d.saturating_add(delta)),
            other if delta == 0 => other,
            other => Term::Offset(Box::new(other), delta),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Time(_) | Term::Set(_) => true,
            Term::App(_, args) | Term::Tuple(args) => args.iter().all(Term::is_ground),
            Term::Offset(base, _) => base.is_ground(),
        }
    }

    pub fn as_time(&self) -> Option<Time> {
        match self {
            Term::Time(t) => Some(*t),
            _ => None,
        }
    }

    pub fn vars_into(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) | Term::Time(_) | Term::Set(_) => {}
            Term::App(_, args) | Term::Tuple(args) => args.iter().for_each(|a| a.vars_into(out)),
            Term::Offset(base, _) => base.vars_into(out),
        }
    }

    pub fn vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    /// Replaces variables through `lookup`, folding time offsets that become ground.
    pub fn map_vars(&self, lookup: &impl Fn(&Symbol) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => lookup(v).unwrap_or_else(|| self.clone()),
            Term::Const(_) | Term::Time(_) | Term::Set(_) => self.clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.map_vars(lookup)).collect()),
            Term::Tuple(args) => Term::Tuple(args.iter().map(|a| a.map_vars(lookup)).collect()),
            Term::Offset(base, d) => Term::offset(base.map_vars(lookup), *d),
        }
    }

    /// Number of nodes, used for formula size metrics.
    pub fn size(&self) -> usize {
        match self {
            Term::App(_, args) | Term::Tuple(args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Offset(base, _) => 1 + base.size(),
            _ => 1,
        }
    }
}

impl From<Time> for Term {
    fn from(t: Time) -> Self {
        Term::Time(t)
    }
}
