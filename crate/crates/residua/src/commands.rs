//! One-shot commands that need no session.

use residua_core::logfile;
use residua_core::syntax::PolicyBody;
use residua_core::{check_cosafety, check_safety, classify, reduce, simplify, Completeness, Error, PartialStructure, Verdict};

use crate::session::{compile_policy, Result, SessionError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Elim {
    /// Eliminate quantifiers only on objectively-complete structures.
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Safety,
    Cosafety,
}

/// The compiled sublogic formula of a well-moded policy.
pub fn check(policy: &str, schema: &str) -> Result<String> {
    let (_, f, _) = compile_policy(policy, schema)?;
    Ok(f.to_string())
}

fn structure(policy: &str, schema: &str, log: &str) -> Result<(PartialStructure, residua_core::Formula, PolicyBody)> {
    let (schema, f, body) = compile_policy(policy, schema)?;
    let l = logfile::ingest(&PartialStructure::new(schema), log)?;
    Ok((l, f, body))
}

/// The normal form of one reduction of the policy against the log.
pub fn reduce_once(policy: &str, schema: &str, log: &str, elim: Elim) -> Result<String> {
    let (l, f, _) = structure(policy, schema, log)?;
    let elim = match elim {
        Elim::Auto => classify(&l)? == Completeness::ObjectivelyComplete,
        Elim::On => true,
        Elim::Off => false,
    };
    Ok(simplify(&reduce(&l, &f)?, elim).to_string())
}

/// Safety needs a `G` policy and co-safety an `F` policy.
pub fn verdict(policy: &str, schema: &str, log: &str, mode: Mode) -> Result<Verdict> {
    let (l, _, body) = structure(policy, schema, log)?;
    match (mode, body) {
        (Mode::Safety, PolicyBody::Globally(alpha)) => Ok(check_safety(&l, &alpha)?),
        (Mode::Cosafety, PolicyBody::Finally(alpha)) => Ok(check_cosafety(&l, &alpha)?),
        (Mode::Safety, _) => Err(SessionError::Engine(Error::Hypothesis("safety checks need a `G` policy".into()))),
        (Mode::Cosafety, _) => Err(SessionError::Engine(Error::Hypothesis("co-safety checks need an `F` policy".into()))),
    }
}
