//! Iterative audit of temporal policies against incomplete logs.
//!
//! A policy is translated into a negation-free first-order logic, checked
//! for well-modedness, and then repeatedly reduced against growing partial
//! structures. Each reduction discharges what the structure decides and
//! leaves a residual policy over the undecided atoms.

pub mod error;
pub mod formula;
pub mod logfile;
pub mod modes;
pub mod oracle;
pub mod reduce;
pub mod schema;
pub mod simplify;
pub mod structure;
pub mod subst;
pub mod syntax;
pub mod temporal;
pub mod term;

pub use error::{Error, Result, Span};
pub use formula::{Atom, Formula, Pred, Quantified, Restriction};
pub use modes::{is_well_moded, mode_check_formula, mode_check_restriction, Diagnostic, ModeEnv};
pub use reduce::{atoms, lift_sat, reduce};
pub use schema::{ClosedWorld, Kind, Moding, PredicateDecl, Schema};
pub use simplify::{check_cosafety, check_safety, classify, simplify, Verdict};
pub use structure::{Completeness, PartialStructure, Truth, Unobserved};
pub use subst::Substitution;
pub use temporal::{finally, globally, translate, TemporalFormula};
pub use term::{GroundSet, Symbol, Term, Time};
