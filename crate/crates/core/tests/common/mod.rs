//! Seeded generators for small structures, well-moded formulas and their
//! extensions, plus the request/disclosure fixtures shared by several suites.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use residua_core::syntax::parse_policy;
use residua_core::{
    Atom, Completeness, Formula, Moding, PartialStructure, PredicateDecl, Restriction, Schema, Symbol, Term, Time,
    Truth,
};

/// `p(obj, time)` with every position an output, `r(obj, obj)` computing
/// its second argument from the first, and a subjective `s(obj, time)`.
pub fn small_schema() -> Arc<Schema> {
    let mut s = Schema::new();
    s.declare(PredicateDecl::objective("p", 2, Moding::new([], [0, 1]))).unwrap();
    s.declare(PredicateDecl::objective("r", 2, Moding::new([0], [1]))).unwrap();
    s.declare(PredicateDecl::subjective("s", 2)).unwrap();
    Arc::new(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Obj,
    Time,
}

type Scope = Vec<(Symbol, Sort)>;

#[derive(Clone, Debug)]
pub struct World {
    pub consts: Vec<Term>,
    pub times: Vec<u64>,
}

impl World {
    pub fn domain(&self) -> Vec<Term> {
        self.consts.iter().cloned().chain(self.times.iter().map(|&t| Term::time(t))).collect()
    }

    fn ground(&self, sort: Sort) -> Vec<Term> {
        match sort {
            Sort::Obj => self.consts.clone(),
            Sort::Time => self.times.iter().map(|&t| Term::time(t)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Claim {
    Generic,
    Past,
    Objective,
}

/// One undecided fact of a structure: an unobserved time point or a `uu` atom.
#[derive(Clone, Debug)]
pub enum Unit {
    Time(u64),
    Atom(Atom),
}

pub struct Gen {
    pub rng: ChaCha8Rng,
    counter: usize,
    /// Whether formulas may mention the subjective predicate `s`.
    pub subjective: bool,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed), counter: 0, subjective: true }
    }

    /// At most four constants and three time points.
    pub fn world(&mut self) -> World {
        let n = self.rng.gen_range(2..=4);
        let consts = ["a", "b", "c", "d"][..n].iter().map(|c| Term::constant(c)).collect();
        let k = self.rng.gen_range(1..=3);
        let mut times: Vec<u64> = (1..=4).collect::<Vec<_>>().choose_multiple(&mut self.rng, k).copied().collect();
        times.sort_unstable();
        World { consts, times }
    }

    pub fn claim(&mut self) -> Claim {
        match self.rng.gen_range(0..20) {
            0..=13 => Claim::Generic,
            14..=16 => Claim::Past,
            _ => Claim::Objective,
        }
    }

    pub fn structure(&mut self, w: &World, claim: Claim) -> PartialStructure {
        let density = if self.rng.gen_bool(0.3) { 0.9 } else { 0.45 };
        let mut l = PartialStructure::new(small_schema());
        for &t in &w.times {
            if self.rng.gen_bool(0.6) {
                l.observe(Time::At(t)).unwrap();
            }
        }
        let mut candidates = Vec::new();
        for c in &w.consts {
            for &t in &w.times {
                candidates.push(Atom::new("p", vec![c.clone(), Term::time(t)]));
                candidates.push(Atom::new("s", vec![c.clone(), Term::time(t)]));
            }
            for d in &w.consts {
                candidates.push(Atom::new("r", vec![c.clone(), d.clone()]));
            }
        }
        for a in candidates {
            if self.rng.gen_bool(density) {
                let v = self.rng.gen_bool(0.55);
                l.add_fact(&a, v).unwrap();
            }
        }
        match claim {
            Claim::Generic => {}
            Claim::Past => {
                let h = *w.times.choose(&mut self.rng).unwrap();
                l.raise_completeness(Completeness::PastComplete(Time::At(h)));
            }
            Claim::Objective => l.raise_completeness(Completeness::ObjectivelyComplete),
        }
        l
    }

    /// The facts `l` leaves open over the world's atoms and time points.
    pub fn undecided(w: &World, l: &PartialStructure) -> Vec<Unit> {
        let mut out = Vec::new();
        for &t in &w.times {
            let probe = Atom::new("in", vec![Term::time(t), Term::time(0), Term::infinity()]);
            if l.valuation(&probe) == Truth::Unknown {
                out.push(Unit::Time(t));
            }
        }
        for a in world_atoms(w) {
            if l.valuation(&a) == Truth::Unknown {
                out.push(Unit::Atom(a));
            }
        }
        out
    }

    /// `l` itself and extensions of it: every combination when at most two
    /// facts are open, otherwise a random sample.
    pub fn extensions(&mut self, w: &World, l: &PartialStructure, samples: usize) -> (Vec<PartialStructure>, bool) {
        let units = Gen::undecided(w, l);
        if units.len() <= 2 {
            let mut out = vec![l.clone()];
            let options = |u: &Unit| -> Vec<Option<bool>> {
                match u {
                    Unit::Time(_) => vec![None, Some(true)],
                    Unit::Atom(_) => vec![None, Some(true), Some(false)],
                }
            };
            let mut combos: Vec<Vec<Option<bool>>> = vec![vec![]];
            for u in &units {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        options(u).into_iter().map(move |o| {
                            let mut c = c.clone();
                            c.push(o);
                            c
                        })
                    })
                    .collect();
            }
            for c in combos.into_iter().skip(1) {
                out.push(apply(l, &units, &c));
            }
            return (out, true);
        }
        let mut out = vec![l.clone()];
        for _ in 0..samples {
            let choice: Vec<Option<bool>> = units
                .iter()
                .map(|u| match (u, self.rng.gen_range(0..3)) {
                    (_, 0) => None,
                    (Unit::Time(_), _) => Some(true),
                    (Unit::Atom(_), k) => Some(k == 1),
                })
                .collect();
            out.push(apply(l, &units, &choice));
        }
        (out, false)
    }

    fn pick<T: Clone>(&mut self, items: &[T]) -> T {
        items.choose(&mut self.rng).unwrap().clone()
    }

    fn arg(&mut self, w: &World, scope: &Scope, sort: Sort) -> Term {
        let vars: Vec<&Symbol> = scope.iter().filter(|(_, s)| *s == sort).map(|(x, _)| x).collect();
        if !vars.is_empty() && self.rng.gen_bool(0.7) {
            Term::Var(self.pick(&vars).clone())
        } else {
            self.pick(&w.ground(sort))
        }
    }

    fn fresh(&mut self, sort: Sort, scope: &Scope, taken: &[Symbol]) -> Symbol {
        let same: Vec<Symbol> =
            scope.iter().filter(|(x, s)| *s == sort && !taken.contains(x)).map(|(x, _)| x.clone()).collect();
        if !same.is_empty() && self.rng.gen_bool(0.1) {
            // Shadow an enclosing binder of the same sort.
            return self.pick(&same);
        }
        self.counter += 1;
        Symbol::from(format!("{}{}", if sort == Sort::Obj { "x" } else { "t" }, self.counter).as_str())
    }

    /// A closed, well-moded formula of at most the given quantifier depth.
    pub fn formula(&mut self, w: &World, depth: usize) -> Formula {
        self.formula_in(w, &Vec::new(), depth, true)
    }

    fn formula_in(&mut self, w: &World, scope: &Scope, depth: usize, root: bool) -> Formula {
        let choice = match (depth, root) {
            (0, _) => 0,
            (_, true) => self.rng.gen_range(4..10),
            _ => self.rng.gen_range(0..10),
        };
        match choice {
            0..=1 => self.leaf(w, scope),
            2..=3 => Formula::and(self.formula_in(w, scope, depth - 1, false), self.formula_in(w, scope, depth - 1, false)),
            4 => Formula::or(self.formula_in(w, scope, depth - 1, false), self.formula_in(w, scope, depth - 1, false)),
            5..=7 => {
                let (vars, guard, inner) = self.guard(w, scope);
                Formula::forall(vars, guard, self.formula_in(w, &inner, depth - 1, false))
            }
            _ => {
                let (vars, guard, inner) = self.guard(w, scope);
                Formula::exists(vars, guard, self.formula_in(w, &inner, depth - 1, false))
            }
        }
    }

    fn leaf(&mut self, w: &World, scope: &Scope) -> Formula {
        if self.rng.gen_bool(0.1) {
            return if self.rng.gen_bool(0.5) { Formula::Top } else { Formula::Bot };
        }
        let kinds: &[&str] = if self.subjective {
            &["p", "~p", "r", "~r", "s", "~s", "s", "in", "neq"]
        } else {
            &["p", "~p", "r", "~r", "in", "neq"]
        };
        let kind = self.pick(kinds);
        let (name, negated) = match kind.strip_prefix('~') {
            Some(n) => (n, true),
            None => (kind, false),
        };
        let args = match name {
            "p" | "s" => vec![self.arg(w, scope, Sort::Obj), self.arg(w, scope, Sort::Time)],
            "r" | "neq" => vec![self.arg(w, scope, Sort::Obj), self.arg(w, scope, Sort::Obj)],
            _ => {
                let lo = if self.rng.gen_bool(0.5) { Term::time(0) } else { self.arg(w, scope, Sort::Time) };
                vec![self.arg(w, scope, Sort::Time), lo, Term::infinity()]
            }
        };
        let a = Atom::new(name, args);
        Formula::Atom(if negated { a.dual() } else { a })
    }

    /// A guard over fresh variables, its quantified vector and the scope
    /// of the body. Inputs are drawn from the enclosing scope.
    pub fn guard(&mut self, w: &World, scope: &Scope) -> (Vec<Symbol>, Restriction, Scope) {
        let template = self.rng.gen_range(0..7);
        let sorts: Vec<Sort> = match template {
            0 => match self.rng.gen_range(0..3) {
                0 => vec![Sort::Obj, Sort::Time],
                1 => vec![Sort::Obj],
                _ => vec![Sort::Time],
            },
            1 => {
                if self.rng.gen_bool(0.5) {
                    vec![Sort::Time, Sort::Obj]
                } else {
                    vec![Sort::Time]
                }
            }
            2 => vec![Sort::Obj],
            3 => vec![Sort::Obj, Sort::Time, Sort::Obj],
            4 => vec![Sort::Time],
            _ => vec![Sort::Obj],
        };
        let mut vars = Vec::new();
        for s in &sorts {
            let x = self.fresh(*s, scope, &vars);
            vars.push(x);
        }
        let outer: Scope = scope.iter().filter(|(x, _)| !vars.contains(x)).cloned().collect();
        let v = |i: usize| Term::Var(vars[i].clone());
        let atom = |name: &str, args: Vec<Term>| Restriction::Atom(Atom::new(name, args));
        let mut guard = match template {
            0 => match sorts.as_slice() {
                [Sort::Obj, Sort::Time] => atom("p", vec![v(0), v(1)]),
                [Sort::Obj] => {
                    let t = self.arg(w, &outer, Sort::Time);
                    atom("p", vec![v(0), t])
                }
                _ => {
                    let x = self.arg(w, &outer, Sort::Obj);
                    atom("p", vec![x, v(0)])
                }
            },
            1 => {
                let lo = match self.rng.gen_range(0..3) {
                    0 => Term::time(0),
                    _ => self.arg(w, &outer, Sort::Time),
                };
                let hi = match self.rng.gen_range(0..3) {
                    0 => Term::infinity(),
                    1 => self.arg(w, &outer, Sort::Time),
                    _ => Term::offset(self.arg(w, &outer, Sort::Time), self.rng.gen_range(0..=2)),
                };
                let x = if sorts.len() == 2 { v(1) } else { self.arg(w, &outer, Sort::Obj) };
                Restriction::and(atom("in", vec![v(0), lo, hi]), atom("p", vec![x, v(0)]))
            }
            2 => {
                let y = self.arg(w, &outer, Sort::Obj);
                atom("r", vec![y, v(0)])
            }
            3 => Restriction::and(atom("p", vec![v(0), v(1)]), atom("r", vec![v(0), v(2)])),
            4 => atom("in", vec![v(0), Term::time(0), Term::infinity()]),
            5 => {
                let t1 = self.pick(&w.ground(Sort::Time));
                let t2 = self.pick(&w.ground(Sort::Time));
                Restriction::or(atom("p", vec![v(0), t1]), atom("p", vec![v(0), t2]))
            }
            _ => {
                self.counter += 1;
                let u = Symbol::from(format!("u{}", self.counter).as_str());
                Restriction::Exists(u.clone(), Box::new(atom("p", vec![v(0), Term::Var(u)])))
            }
        };
        let mut inner = outer.clone();
        inner.extend(vars.iter().cloned().zip(sorts.iter().copied()));
        if self.rng.gen_bool(0.25) {
            let i = self.rng.gen_range(0..vars.len());
            let other = self.arg(w, &inner, sorts[i]);
            guard = Restriction::and(guard, atom("neq", vec![v(i), other]));
        }
        if self.rng.gen_bool(0.25) {
            let i = self.rng.gen_range(0..vars.len());
            let pool = w.ground(sorts[i]);
            let k = self.rng.gen_range(1..=2.min(pool.len()));
            let set: BTreeSet<Term> = pool.choose_multiple(&mut self.rng, k).cloned().collect();
            guard = Restriction::and(guard, atom("notin_set", vec![v(i), Term::Set(set.into_iter().collect())]));
        }
        if self.rng.gen_bool(0.15) {
            // A check-only dual atom over variables the guard already grounds.
            let x = self.arg(w, &inner, Sort::Obj);
            let t = self.arg(w, &inner, Sort::Time);
            guard = Restriction::and(guard, Restriction::Atom(Atom::new("p", vec![x, t]).dual()));
        }
        (vars, guard, inner)
    }

    /// A guard whose inputs are free variables of the given sorts, those
    /// variables, and the quantified vector it grounds.
    pub fn open_guard(&mut self, w: &World) -> (Scope, Vec<Symbol>, Restriction) {
        let mut scope = Scope::new();
        if self.rng.gen_bool(0.6) {
            self.counter += 1;
            scope.push((Symbol::from(format!("y{}", self.counter).as_str()), Sort::Obj));
        }
        if self.rng.gen_bool(0.6) {
            self.counter += 1;
            scope.push((Symbol::from(format!("s{}", self.counter).as_str()), Sort::Time));
        }
        let (vars, guard, _) = self.guard(w, &scope);
        let scope = scope.into_iter().filter(|(x, _)| !vars.contains(x)).collect();
        (scope, vars, guard)
    }
}

pub fn world_atoms(w: &World) -> Vec<Atom> {
    let mut out = Vec::new();
    for c in &w.consts {
        for &t in &w.times {
            out.push(Atom::new("p", vec![c.clone(), Term::time(t)]));
            out.push(Atom::new("s", vec![c.clone(), Term::time(t)]));
        }
        for d in &w.consts {
            out.push(Atom::new("r", vec![c.clone(), d.clone()]));
        }
    }
    out
}

fn apply(l: &PartialStructure, units: &[Unit], choice: &[Option<bool>]) -> PartialStructure {
    let mut out = l.clone();
    for (u, c) in units.iter().zip(choice) {
        match (u, c) {
            (_, None) => {}
            (Unit::Time(t), Some(_)) => out.observe(Time::At(*t)).unwrap(),
            (Unit::Atom(a), Some(v)) => out.add_fact(a, *v).unwrap(),
        }
    }
    out
}

/// Declarations for the disclosure and request-response policies.
pub const HEALTH_DECLS: &str = "
objective send/4 mode(in={}, out={1,2,3,4});
objective inrole/3 mode(in={2,3}, out={1});
objective req/3 mode(in={}, out={1,2,3});
objective consents/3 mode(in={}, out={1,2,3});
objective purp/3 mode(in={1}, out={2});
objective tagged/4 mode(in={1}, out={2,3});
objective attr_in/3 mode(in={1,2}, out={});
objective purp_in/3 mode(in={1,2}, out={});
subjective contains/4;
subjective ftr/3;
";

pub const DISCLOSURE: &str = "G forall p1,p2,m,u,q,t. (send(p1,p2,m) & purp(m,u) & tagged(m,q,t) & attr_in(t,phi)) \
     => (inrole(p2,doc(q)) & purp_in(u,treatment)) | once consents(q, sendaction(p1,p2,(q,t)))";

pub const RESPONSE: &str = "G freeze tau. forall p,t. (req(p,t)) => not ftr(p,t) until freeze tau2. \
     in(tau2, tau, tau+30) & exists q,m. (inrole(q,records) & send(q,p,m)) & contains(m,p,t)";

pub fn health_schema() -> Arc<Schema> {
    let f = parse_policy(&format!("{HEALTH_DECLS} top")).unwrap();
    Arc::new(f.schema(&Schema::new()).unwrap())
}

/// Compiles one of the policies above.
pub fn compile(policy: &str) -> Formula {
    parse_policy(policy).unwrap().body.compile()
}

pub fn c(name: &str) -> Term {
    Term::constant(name)
}

pub fn fact(pred: &str, args: Vec<Term>) -> Atom {
    Atom::new(pred, args)
}
