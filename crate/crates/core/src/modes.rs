//! Static mode analysis: which variables are ground where, so that every
//! guard can be enumerated by `lift_sat` and `reduce` terminates.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::formula::{Atom, Formula, Restriction};
use crate::schema::Schema;
use crate::term::Symbol;

/// A set of variables known to be ground.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModeEnv(BTreeSet<Symbol>);

impl ModeEnv {
    pub fn new() -> Self {
        ModeEnv::default()
    }

    pub fn contains(&self, x: &Symbol) -> bool {
        self.0.contains(x)
    }

    pub fn vars(&self) -> &BTreeSet<Symbol> {
        &self.0
    }

    fn without<'a>(&self, xs: impl IntoIterator<Item = &'a Symbol>) -> ModeEnv {
        let mut out = self.clone();
        for x in xs {
            out.0.remove(x);
        }
        out
    }
}

impl FromIterator<Symbol> for ModeEnv {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        ModeEnv(iter.into_iter().collect())
    }
}

/// One failed premise. `path` locates the node from the root, e.g.
/// `forall(tau,p,t)/guard/and.1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "<root>" } else { &self.path };
        write!(f, "{path}: {}: {}", self.subject, self.message)
    }
}

fn join(path: &str, seg: &str) -> String {
    if path.is_empty() {
        seg.to_string()
    } else {
        format!("{path}/{seg}")
    }
}

fn list(vars: &BTreeSet<Symbol>) -> String {
    vars.iter().map(Symbol::as_str).collect::<Vec<_>>().join(", ")
}

fn check_atom(schema: &Schema, chi: &ModeEnv, a: &Atom, path: &str) -> Result<ModeEnv, Diagnostic> {
    let diag = |message: String| Diagnostic { path: path.to_string(), subject: a.to_string(), message };
    if !schema.is_objective(&a.pred) {
        return Err(diag("guard atoms must use objective predicates".into()));
    }
    let moding = schema.moding(&a.pred).ok_or_else(|| diag("predicate has no declared mode".into()))?;
    let mut out = chi.clone();
    for (i, arg) in a.args.iter().enumerate() {
        if moding.input.contains(&i) {
            let missing: BTreeSet<Symbol> = arg.vars().into_iter().filter(|x| !chi.contains(x)).collect();
            if !missing.is_empty() {
                return Err(diag(format!("input position {} mentions non-ground variable {}", i + 1, list(&missing))));
            }
        }
    }
    for &i in &moding.output {
        if let Some(arg) = a.args.get(i) {
            arg.vars_into(&mut out.0);
        }
    }
    Ok(out)
}

fn restriction_at(schema: &Schema, chi: &ModeEnv, c: &Restriction, path: &str) -> Result<ModeEnv, Diagnostic> {
    match c {
        Restriction::Atom(a) => check_atom(schema, chi, a, path),
        Restriction::Top | Restriction::Bot => Ok(chi.clone()),
        Restriction::And(l, r) => {
            let mid = restriction_at(schema, chi, l, &join(path, "and.0"))?;
            restriction_at(schema, &mid, r, &join(path, "and.1"))
        }
        Restriction::Or(l, r) => {
            let a = restriction_at(schema, chi, l, &join(path, "or.0"))?;
            let b = restriction_at(schema, chi, r, &join(path, "or.1"))?;
            Ok(ModeEnv(a.0.intersection(&b.0).cloned().collect()))
        }
        Restriction::Exists(x, body) => {
            let inner = restriction_at(schema, &chi.without([x]), body, &join(path, &format!("exists({x})")))?;
            let mut out = inner.without([x]);
            if chi.contains(x) {
                out.0.insert(x.clone());
            }
            Ok(out)
        }
    }
}

/// `chi_i |- c : chi_o`. Returns `chi_o`, or the first failing atom.
pub fn mode_check_restriction(schema: &Schema, chi: &ModeEnv, c: &Restriction) -> Result<ModeEnv, Diagnostic> {
    restriction_at(schema, chi, c, "")
}

/// `chi |- f`. An empty result means the formula is well-moded.
pub fn mode_check_formula(schema: &Schema, chi: &ModeEnv, f: &Formula) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    formula_at(schema, chi, f, "", &mut out);
    out
}

pub fn is_well_moded(schema: &Schema, f: &Formula) -> bool {
    mode_check_formula(schema, &ModeEnv::new(), f).is_empty()
}

fn formula_at(schema: &Schema, chi: &ModeEnv, f: &Formula, path: &str, out: &mut Vec<Diagnostic>) {
    match f {
        Formula::Atom(a) => {
            let mut fv = BTreeSet::new();
            a.vars_into(&mut fv);
            let missing: BTreeSet<Symbol> = fv.into_iter().filter(|x| !chi.contains(x)).collect();
            if !missing.is_empty() {
                out.push(Diagnostic {
                    path: path.to_string(),
                    subject: a.to_string(),
                    message: format!("variable {} is not ground here", list(&missing)),
                });
            }
        }
        Formula::Top | Formula::Bot => {}
        Formula::And(l, r) => {
            formula_at(schema, chi, l, &join(path, "and.0"), out);
            formula_at(schema, chi, r, &join(path, "and.1"), out);
        }
        Formula::Or(l, r) => {
            formula_at(schema, chi, l, &join(path, "or.0"), out);
            formula_at(schema, chi, r, &join(path, "or.1"), out);
        }
        Formula::Forall(q) | Formula::Exists(q) => {
            let kw = if matches!(f, Formula::Forall(_)) { "forall" } else { "exists" };
            let names: Vec<&str> = q.vars.iter().map(Symbol::as_str).collect();
            let here = join(path, &format!("{kw}({})", names.join(",")));
            let subject = format!("{kw} {}", names.join(","));
            let inner = chi.without(&q.vars);
            let chi_o = match restriction_at(schema, &inner, &q.guard, &join(&here, "guard")) {
                Ok(chi_o) => chi_o,
                Err(d) => {
                    out.push(d);
                    return;
                }
            };
            let unbound: BTreeSet<Symbol> = q.vars.iter().filter(|x| !chi_o.contains(x)).cloned().collect();
            if !unbound.is_empty() {
                out.push(Diagnostic {
                    path: here.clone(),
                    subject: subject.clone(),
                    message: format!("guard does not ground quantified variable {}", list(&unbound)),
                });
            }
            let stray: BTreeSet<Symbol> =
                q.guard.free_vars().into_iter().filter(|x| !inner.contains(x) && !q.vars.contains(x)).collect();
            if !stray.is_empty() {
                out.push(Diagnostic {
                    path: here.clone(),
                    subject,
                    message: format!("guard mentions variable {} that is neither quantified nor ground", list(&stray)),
                });
            }
            formula_at(schema, &chi_o, &q.body, &join(&here, "body"), out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Moding, PredicateDecl};
    use crate::syntax::{parse_formula, parse_restriction};

    fn schema() -> Schema {
        let mut s = Schema::new();
        s.declare(PredicateDecl::objective("send", 4, Moding::new([], [0, 1, 2, 3]))).unwrap();
        s.declare(PredicateDecl::objective("tagged", 4, Moding::new([0], [1, 2]))).unwrap();
        s.declare(PredicateDecl::objective("p", 1, Moding::new([0], []))).unwrap();
        s
    }

    fn env(names: &[&str]) -> ModeEnv {
        names.iter().map(|n| Symbol::new(n)).collect()
    }

    #[test]
    fn in_guard_grounds_its_first_argument() {
        let c = parse_restriction("in(?tau, 0, inf)").unwrap();
        assert_eq!(mode_check_restriction(&schema(), &ModeEnv::new(), &c).unwrap(), env(&["tau"]));
    }

    #[test]
    fn chained_guard_grounds_tagged_input() {
        let c = parse_restriction("send(?p1, ?p2, ?m, ?tau) and tagged(?m, ?q, ?t, ?tau2)").unwrap();
        let out = mode_check_restriction(&schema(), &ModeEnv::new(), &c).unwrap();
        assert_eq!(out, env(&["m", "p1", "p2", "q", "t", "tau"]));

        let bad = parse_restriction("send(?p1, ?p2, ?m, ?tau) and tagged(?m2, ?q, ?t, ?tau2)").unwrap();
        let d = mode_check_restriction(&schema(), &ModeEnv::new(), &bad).unwrap_err();
        assert!(d.message.contains("input position 1"));
        assert!(d.message.contains("m2"));
        assert_eq!(d.path, "and.1");
    }

    #[test]
    fn disjunction_intersects_and_exists_hides() {
        let c = parse_restriction("send(?a, ?b, ?m, 1) or send(?a, ?c, ?m, 2)").unwrap();
        assert_eq!(mode_check_restriction(&schema(), &ModeEnv::new(), &c).unwrap(), env(&["a", "m"]));
        let c = parse_restriction("exists m. send(?a, ?b, m, 1)").unwrap();
        assert_eq!(mode_check_restriction(&schema(), &ModeEnv::new(), &c).unwrap(), env(&["a", "b"]));
    }

    #[test]
    fn formula_atoms_need_ground_variables() {
        let f = parse_formula("p(?x)").unwrap();
        assert!(mode_check_formula(&schema(), &env(&["x"]), &f).is_empty());
        assert_eq!(mode_check_formula(&schema(), &ModeEnv::new(), &f).len(), 1);
        let q = parse_formula("forall x. (p(x)) => top").unwrap();
        let ds = mode_check_formula(&schema(), &ModeEnv::new(), &q);
        assert_eq!(ds.len(), 1, "{ds:?}");
        let ok = parse_formula("forall a,b,m,t. (send(a,b,m,t)) => p(m)").unwrap();
        assert!(is_well_moded(&schema(), &ok));
    }
}
