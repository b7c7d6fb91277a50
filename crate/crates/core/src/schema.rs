//! Predicate declarations: objective/subjective kind, arity, moding and
//! closed-world configuration, plus the built-in predicates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Atom, Formula, Pred, Restriction};
use crate::term::Symbol;

pub const IN: &str = "in";
pub const NEQ: &str = "neq";
pub const NOTIN_SET: &str = "notin_set";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Objective,
    Subjective,
}

/// How absence of a record is read for an objective predicate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedWorld {
    /// Unrecorded atoms stay unknown.
    Open,
    /// Unrecorded atoms are false once their time argument is inside a
    /// completeness horizon.
    #[default]
    Horizon,
    /// Unrecorded atoms are always false.
    Always,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    In,
    Neq,
    NotInSet,
}

/// Input and output argument positions, 0-based. Positions in neither set
/// impose nothing and produce nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Moding {
    pub input: BTreeSet<usize>,
    pub output: BTreeSet<usize>,
}

impl Moding {
    pub fn new(input: impl IntoIterator<Item = usize>, output: impl IntoIterator<Item = usize>) -> Self {
        Moding { input: input.into_iter().collect(), output: output.into_iter().collect() }
    }

    /// Every position is an input: the atom can only be checked, not enumerated.
    pub fn check_only(arity: usize) -> Self {
        Moding { input: (0..arity).collect(), output: BTreeSet::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: Symbol,
    pub kind: Kind,
    /// Arity including the trailing time argument for timed predicates.
    pub arity: usize,
    pub moding: Option<Moding>,
    pub closed: ClosedWorld,
    pub builtin: Option<Builtin>,
}

impl PredicateDecl {
    pub fn objective(name: &str, arity: usize, moding: Moding) -> Self {
        PredicateDecl {
            name: Symbol::new(name),
            kind: Kind::Objective,
            arity,
            moding: Some(moding),
            closed: ClosedWorld::Horizon,
            builtin: None,
        }
    }

    pub fn subjective(name: &str, arity: usize) -> Self {
        PredicateDecl {
            name: Symbol::new(name),
            kind: Kind::Subjective,
            arity,
            moding: None,
            closed: ClosedWorld::Open,
            builtin: None,
        }
    }

    pub fn with_closed(mut self, closed: ClosedWorld) -> Self {
        self.closed = closed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.kind == Kind::Subjective && self.moding.is_some() {
            return Err(Error::Declaration(format!("subjective predicate `{}` cannot have a mode", self.name)));
        }
        if let Some(m) = &self.moding {
            if let Some(p) = m.input.intersection(&m.output).next() {
                return Err(Error::Declaration(format!(
                    "`{}` position {} is both input and output",
                    self.name,
                    p + 1
                )));
            }
            if let Some(p) = m.input.iter().chain(&m.output).find(|&&p| p >= self.arity) {
                return Err(Error::Declaration(format!(
                    "`{}` has arity {} but mode mentions position {}",
                    self.name,
                    self.arity,
                    p + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    preds: BTreeMap<Symbol, PredicateDecl>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema::new()
    }
}

impl Schema {
    /// A schema holding only the built-ins `in/3`, `neq/2` and `notin_set/2`.
    pub fn new() -> Self {
        let builtin = |name: &str, arity, moding, b| PredicateDecl {
            name: Symbol::new(name),
            kind: Kind::Objective,
            arity,
            moding: Some(moding),
            closed: ClosedWorld::Open,
            builtin: Some(b),
        };
        let mut preds = BTreeMap::new();
        for d in [
            builtin(IN, 3, Moding::new([1, 2], [0]), Builtin::In),
            builtin(NEQ, 2, Moding::new([0, 1], []), Builtin::Neq),
            builtin(NOTIN_SET, 2, Moding::new([0, 1], []), Builtin::NotInSet),
        ] {
            preds.insert(d.name.clone(), d);
        }
        Schema { preds }
    }

    pub fn declare(&mut self, decl: PredicateDecl) -> Result<()> {
        decl.validate()?;
        match self.preds.get(&decl.name) {
            Some(existing) if existing.builtin.is_some() => {
                Err(Error::Declaration(format!("`{}` is a built-in predicate", decl.name)))
            }
            Some(existing) if *existing != decl => {
                Err(Error::Declaration(format!("`{}` is declared twice with different signatures", decl.name)))
            }
            _ => {
                self.preds.insert(decl.name.clone(), decl);
                Ok(())
            }
        }
    }

    pub fn get(&self, name: &Symbol) -> Option<&PredicateDecl> {
        self.preds.get(name)
    }

    /// User-declared predicates, in name order.
    pub fn declared(&self) -> impl Iterator<Item = &PredicateDecl> {
        self.preds.values().filter(|d| d.builtin.is_none())
    }

    pub fn builtin(&self, pred: &Pred) -> Option<Builtin> {
        self.preds.get(&pred.name).and_then(|d| d.builtin)
    }

    pub fn is_subjective(&self, pred: &Pred) -> bool {
        self.preds.get(&pred.name).is_some_and(|d| d.kind == Kind::Subjective)
    }

    pub fn is_objective(&self, pred: &Pred) -> bool {
        self.preds.get(&pred.name).is_some_and(|d| d.kind == Kind::Objective)
    }

    /// The moding used for `sat`. Dual predicates can only be checked, so
    /// all their positions are inputs. Subjective predicates have none.
    pub fn moding(&self, pred: &Pred) -> Option<Moding> {
        let decl = self.preds.get(&pred.name)?;
        let m = decl.moding.as_ref()?;
        if pred.negated {
            Some(Moding::check_only(decl.arity))
        } else {
            Some(m.clone())
        }
    }

    fn check_atom(&self, a: &Atom) -> Result<&PredicateDecl> {
        let decl =
            self.preds.get(&a.pred.name).ok_or_else(|| Error::UnknownPredicate(a.pred.name.to_string()))?;
        if decl.arity != a.args.len() {
            return Err(Error::Arity { pred: a.pred.name.to_string(), expected: decl.arity, found: a.args.len() });
        }
        Ok(decl)
    }

    pub fn validate_restriction(&self, c: &Restriction) -> Result<()> {
        for a in c.atoms() {
            let decl = self.check_atom(a)?;
            if decl.kind == Kind::Subjective {
                return Err(Error::SubjectiveGuard(a.to_string()));
            }
        }
        Ok(())
    }

    /// Checks that every predicate is declared with the right arity and that
    /// guards mention objective predicates only.
    pub fn validate_formula(&self, f: &Formula) -> Result<()> {
        match f {
            Formula::Atom(a) => self.check_atom(a).map(|_| ()),
            Formula::Top | Formula::Bot => Ok(()),
            Formula::And(l, r) | Formula::Or(l, r) => {
                self.validate_formula(l)?;
                self.validate_formula(r)
            }
            Formula::Forall(q) | Formula::Exists(q) => {
                self.validate_restriction(&q.guard)?;
                self.validate_formula(&q.body)
            }
        }
    }

    /// `dual`, refusing formulas whose predicates have no registered dual.
    pub fn dual(&self, f: &Formula) -> Result<Formula> {
        self.validate_formula(f)?;
        Ok(f.dual())
    }

    /// Whether `f` mentions any subjective predicate.
    pub fn mentions_subjective(&self, f: &Formula) -> bool {
        f.body_atoms().iter().any(|a| self.is_subjective(&a.pred))
    }

    pub fn to_doc(&self) -> SchemaDoc {
        SchemaDoc {
            predicates: self
                .declared()
                .map(|d| PredicateDoc {
                    name: d.name.to_string(),
                    kind: d.kind,
                    arity: d.arity,
                    input: d.moding.as_ref().map(|m| m.input.iter().map(|p| p + 1).collect()),
                    output: d.moding.as_ref().map(|m| m.output.iter().map(|p| p + 1).collect()),
                    closed: d.closed,
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &SchemaDoc) -> Result<Schema> {
        let mut schema = Schema::new();
        schema.extend_from_doc(doc)?;
        Ok(schema)
    }

    pub fn extend_from_doc(&mut self, doc: &SchemaDoc) -> Result<()> {
        for p in &doc.predicates {
            self.declare(p.to_decl()?)?;
        }
        Ok(())
    }
}

/// Serialized schema: `{"predicates": [{"name", "kind", "arity", "in", "out", "closed"}]}`
/// with 1-based positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDoc {
    pub predicates: Vec<PredicateDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDoc {
    pub name: String,
    pub kind: Kind,
    pub arity: usize,
    #[serde(rename = "in", default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<usize>>,
    #[serde(rename = "out", default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Vec<usize>>,
    #[serde(default = "default_closed")]
    pub closed: ClosedWorld,
}

fn default_closed() -> ClosedWorld {
    ClosedWorld::Horizon
}

impl PredicateDoc {
    fn to_decl(&self) -> Result<PredicateDecl> {
        let positions = |v: &Option<Vec<usize>>| -> Result<BTreeSet<usize>> {
            v.iter()
                .flatten()
                .map(|&p| {
                    p.checked_sub(1)
                        .ok_or_else(|| Error::Declaration(format!("`{}`: positions are 1-based", self.name)))
                })
                .collect()
        };
        let moding = match (self.kind, &self.input, &self.output) {
            (Kind::Subjective, None, None) => None,
            (Kind::Objective, _, _) => {
                Some(Moding { input: positions(&self.input)?, output: positions(&self.output)? })
            }
            (Kind::Subjective, _, _) => {
                return Err(Error::Declaration(format!("subjective predicate `{}` cannot have a mode", self.name)))
            }
        };
        let closed = if self.kind == Kind::Subjective { ClosedWorld::Open } else { self.closed };
        Ok(PredicateDecl { name: Symbol::new(&self.name), kind: self.kind, arity: self.arity, moding, closed, builtin: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_present() {
        let s = Schema::new();
        assert_eq!(s.moding(&Pred::new(IN)), Some(Moding::new([1, 2], [0])));
        assert_eq!(s.builtin(&Pred::new(NEQ)), Some(Builtin::Neq));
        assert_eq!(s.declared().count(), 0);
    }

    #[test]
    fn rejects_overlapping_modes_and_builtin_redeclaration() {
        let mut s = Schema::new();
        assert!(s.declare(PredicateDecl::objective("p", 2, Moding::new([0], [0]))).is_err());
        assert!(s.declare(PredicateDecl::objective("p", 2, Moding::new([], [2]))).is_err());
        assert!(s.declare(PredicateDecl::objective(IN, 3, Moding::new([], [0]))).is_err());
        assert!(s.declare(PredicateDecl::objective("p", 2, Moding::new([0], [1]))).is_ok());
    }

    #[test]
    fn dual_predicates_are_check_only() {
        let mut s = Schema::new();
        s.declare(PredicateDecl::objective("send", 4, Moding::new([], [0, 1, 2, 3]))).unwrap();
        assert_eq!(s.moding(&Pred::new("send").dual()), Some(Moding::check_only(4)));
        s.declare(PredicateDecl::subjective("contains", 4)).unwrap();
        assert_eq!(s.moding(&Pred::new("contains")), None);
    }

    #[test]
    fn doc_round_trip() {
        let mut s = Schema::new();
        s.declare(PredicateDecl::objective("tagged", 4, Moding::new([0], [1, 2]))).unwrap();
        s.declare(PredicateDecl::subjective("ftr", 3)).unwrap();
        let json = serde_json::to_string(&s.to_doc()).unwrap();
        assert!(json.contains("\"in\":[1]"));
        let back = Schema::from_doc(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
