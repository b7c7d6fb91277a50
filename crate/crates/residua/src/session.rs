//! Audit sessions persisted as a directory:
//!
//! ```text
//! <root>/<id>/
//!   session.json        id and creation time
//!   policy.txt          policy source, including its declarations
//!   schema.txt          extra declarations given at creation (may be empty)
//!   structure.jsonl     current structure snapshot
//!   residual.txt        current residual, canonical text
//!   residual.sets.json  instances each quantifier of the residual has discharged
//!   history.jsonl       append-only ledger of every change
//!   assertions.jsonl    auditor decisions with justifications
//!   snapshots/NNNN.jsonl  the structure each iteration reduced against
//! ```
//!
//! Replaying the iterate entries of the ledger against their snapshots,
//! starting from the compiled policy, reproduces `residual.txt` byte for byte.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{SecondsFormat, Utc};
use residua_core::logfile;
use residua_core::reduce::exclusion_sites;
use residua_core::simplify::witness;
use residua_core::syntax::{parse_atom, parse_formula, parse_policy, parse_schema, PolicyBody};
use residua_core::{
    atoms, classify, mode_check_formula, reduce, simplify, Atom, Completeness, Diagnostic, Formula, ModeEnv,
    PartialStructure, Schema, Truth, Verdict,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Engine(#[from] residua_core::Error),
    #[error("policy is not well-moded")]
    Modes(Vec<Diagnostic>),
    #[error("`{0}` is not a pending subjective atom")]
    NotPending(String),
    #[error("an assertion needs a non-empty justification")]
    Justification,
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("session `{0}` is being modified; retry")]
    Busy(String),
    #[error("session store is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SessionError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Create,
    Ingest,
    Iterate,
    Assert,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seq: usize,
    pub kind: EntryKind,
    pub structure_digest: String,
    pub residual_digest: String,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantifier_elim: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionRecord {
    pub atom: String,
    pub value: bool,
    pub justification: String,
    pub timestamp: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Meta {
    id: String,
    created: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PolicyKind {
    Globally,
    Finally,
    Plain,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    pub created: String,
    pub policy_source: String,
    pub schema_source: String,
    kind: PolicyKind,
    pub initial: Formula,
    pub structure: PartialStructure,
    pub residual: Formula,
    pub history: Vec<HistoryEntry>,
    pub assertions: Vec<AssertionRecord>,
    /// Iteration snapshots taken in this process, by relative path.
    snapshots: Vec<(String, String)>,
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Parses the policy, merges its declarations over `schema_source`, and
/// compiles and mode-checks it.
pub fn compile_policy(policy_source: &str, schema_source: &str) -> Result<(Arc<Schema>, Formula, PolicyBody)> {
    let mut base = Schema::new();
    for decl in parse_schema(schema_source)? {
        base.declare(decl)?;
    }
    let file = parse_policy(policy_source)?;
    let schema = Arc::new(file.schema(&base)?);
    let f = file.body.compile();
    schema.validate_formula(&f)?;
    let diags = mode_check_formula(&schema, &ModeEnv::new(), &f);
    if !diags.is_empty() {
        return Err(SessionError::Modes(diags));
    }
    Ok((schema, f, file.body))
}

/// One reduction step: quantifiers are eliminated only on structures
/// classified objectively complete.
pub fn step(l: &PartialStructure, residual: &Formula) -> Result<(Formula, bool)> {
    let elim = classify(l)? == Completeness::ObjectivelyComplete;
    Ok((simplify(&reduce(l, residual)?, elim), elim))
}

impl Session {
    pub fn create(id: &str, policy_source: &str, schema_source: &str) -> Result<Session> {
        let (schema, initial, body) = compile_policy(policy_source, schema_source)?;
        let kind = match body {
            PolicyBody::Globally(_) => PolicyKind::Globally,
            PolicyBody::Finally(_) => PolicyKind::Finally,
            PolicyBody::Formula(_) => PolicyKind::Plain,
        };
        let mut s = Session {
            id: id.to_string(),
            created: now(),
            policy_source: policy_source.to_string(),
            schema_source: schema_source.to_string(),
            kind,
            residual: initial.clone(),
            initial,
            structure: PartialStructure::new(schema),
            history: Vec::new(),
            assertions: Vec::new(),
            snapshots: Vec::new(),
        };
        s.record(EntryKind::Create, None, None);
        Ok(s)
    }

    pub fn residual_text(&self) -> String {
        self.residual.to_string()
    }

    fn record(&mut self, kind: EntryKind, snapshot: Option<String>, quantifier_elim: Option<bool>) {
        self.history.push(HistoryEntry {
            seq: self.history.len(),
            kind,
            structure_digest: digest(&logfile::snapshot(&self.structure)),
            residual_digest: digest(&self.residual_text()),
            timestamp: now(),
            snapshot,
            quantifier_elim,
        });
    }

    /// Extends the structure with a JSON Lines log. The residual is untouched.
    pub fn ingest(&mut self, log: &str) -> Result<()> {
        let next = logfile::ingest(&self.structure, log)?;
        if logfile::snapshot(&next) != logfile::snapshot(&self.structure) {
            self.structure = next;
            self.record(EntryKind::Ingest, None, None);
        }
        Ok(())
    }

    /// Reduces the residual against the current structure. A decided
    /// residual is a fixed point and leaves the ledger alone.
    pub fn iterate(&mut self) -> Result<()> {
        if matches!(self.residual, Formula::Top | Formula::Bot) {
            return Ok(());
        }
        let (next, elim) = step(&self.structure, &self.residual)?;
        self.residual = next;
        let n = self.history.iter().filter(|e| e.kind == EntryKind::Iterate).count() + 1;
        let path = format!("snapshots/{n:04}.jsonl");
        self.snapshots.push((path.clone(), logfile::snapshot(&self.structure)));
        self.record(EntryKind::Iterate, Some(path), Some(elim));
        Ok(())
    }

    /// Subjective atoms of the residual that the structure leaves undecided.
    pub fn pending(&self) -> Result<Vec<Atom>> {
        let schema = self.structure.schema();
        Ok(atoms(&self.structure, &self.residual)?
            .into_iter()
            .filter(|a| schema.is_subjective(&a.pred) && self.structure.valuation(a) == Truth::Unknown)
            .collect())
    }

    /// Records an auditor's decision on a pending atom, or on its dual.
    /// Repeating a decision already on record is a no-op.
    pub fn assert(&mut self, atom_text: &str, value: bool, justification: &str) -> Result<()> {
        if justification.trim().is_empty() {
            return Err(SessionError::Justification);
        }
        let atom = parse_atom(atom_text)?;
        if !self.structure.schema().is_subjective(&atom.pred) {
            return Err(SessionError::NotPending(atom.to_string()));
        }
        if self.structure.valuation(&atom) == Truth::from_bool(value) {
            return Ok(());
        }
        let pending: BTreeSet<Atom> = self.pending()?.into_iter().collect();
        if self.structure.valuation(&atom) == Truth::Unknown
            && !pending.contains(&atom)
            && !pending.contains(&atom.dual())
        {
            return Err(SessionError::NotPending(atom.to_string()));
        }
        self.structure = self.structure.assert_subjective(&atom, value)?;
        self.assertions.push(AssertionRecord {
            atom: atom.to_string(),
            value,
            justification: justification.to_string(),
            timestamp: now(),
        });
        self.record(EntryKind::Assert, None, None);
        Ok(())
    }

    /// The verdict once the residual is decided, read according to whether
    /// the policy was a G-policy, an F-policy or a plain formula.
    pub fn verdict(&self) -> Result<Option<Verdict>> {
        let elim = classify(&self.structure)? == Completeness::ObjectivelyComplete;
        let find = |target: &Formula| witness(&self.structure, &self.initial, target, elim);
        Ok(match (&self.residual, self.kind) {
            (Formula::Bot, PolicyKind::Globally) => {
                Some(find(&Formula::Bot)?.map_or(Verdict::TriviallyFalse, Verdict::Violated))
            }
            (Formula::Top, PolicyKind::Finally) => {
                Some(find(&Formula::Top)?.map_or(Verdict::TriviallyTrue, Verdict::Satisfied))
            }
            (Formula::Bot, _) => Some(Verdict::TriviallyFalse),
            (Formula::Top, _) => Some(Verdict::TriviallyTrue),
            _ => None,
        })
    }

    /// Recomputes the residual from the compiled policy and the iteration
    /// snapshots on disk.
    pub fn replay(&self, dir: &Path) -> Result<Formula> {
        let mut f = self.initial.clone();
        for e in self.history.iter().filter(|e| e.kind == EntryKind::Iterate) {
            let path = e.snapshot.as_ref().ok_or_else(|| SessionError::Corrupt(format!("entry {} has no snapshot", e.seq)))?;
            let l = logfile::load_snapshot(&fs::read_to_string(dir.join(path))?)?;
            f = step(&l, &f)?.0;
            if digest(&f.to_string()) != e.residual_digest {
                return Err(SessionError::Corrupt(format!("replay diverges at entry {}", e.seq)));
            }
        }
        Ok(f)
    }

    /// Writes every file of the session directory. Files are replaced
    /// atomically; iteration snapshots are written once.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("snapshots"))?;
        let meta = Meta { id: self.id.clone(), created: self.created.clone() };
        write_atomic(&dir.join("session.json"), &serde_json::to_string_pretty(&meta).map_err(json_err)?)?;
        write_atomic(&dir.join("policy.txt"), &self.policy_source)?;
        write_atomic(&dir.join("schema.txt"), &self.schema_source)?;
        let snapshot = logfile::snapshot(&self.structure);
        write_atomic(&dir.join("structure.jsonl"), &snapshot)?;
        write_atomic(&dir.join("residual.txt"), &self.residual_text())?;
        let sites = serde_json::to_string_pretty(&exclusion_sites(&self.residual)).map_err(json_err)?;
        write_atomic(&dir.join("residual.sets.json"), &sites)?;
        write_atomic(&dir.join("history.jsonl"), &jsonl(&self.history)?)?;
        write_atomic(&dir.join("assertions.jsonl"), &jsonl(&self.assertions)?)?;
        for (path, text) in &self.snapshots {
            let path = dir.join(path);
            if !path.exists() {
                write_atomic(&path, text)?;
            }
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Session> {
        let read = |name: &str| fs::read_to_string(dir.join(name));
        let meta: Meta = serde_json::from_str(&read("session.json")?).map_err(json_err)?;
        let policy_source = read("policy.txt")?;
        let schema_source = read("schema.txt")?;
        let (_, initial, body) = compile_policy(&policy_source, &schema_source)?;
        let kind = match body {
            PolicyBody::Globally(_) => PolicyKind::Globally,
            PolicyBody::Finally(_) => PolicyKind::Finally,
            PolicyBody::Formula(_) => PolicyKind::Plain,
        };
        let structure = logfile::load_snapshot(&read("structure.jsonl")?)?;
        let residual_text = read("residual.txt")?;
        let residual = parse_formula(&residual_text)?;
        let history: Vec<HistoryEntry> = parse_jsonl(&read("history.jsonl")?)?;
        let assertions = parse_jsonl(&read("assertions.jsonl")?)?;
        let last = history.last().ok_or_else(|| SessionError::Corrupt("empty history".into()))?;
        if last.residual_digest != digest(&residual_text) {
            return Err(SessionError::Corrupt("residual.txt does not match the history".into()));
        }
        if residual.to_string() != residual_text {
            return Err(SessionError::Corrupt("residual.txt is not in canonical form".into()));
        }
        let sites: serde_json::Value = serde_json::from_str(&read("residual.sets.json")?).map_err(json_err)?;
        if sites != serde_json::to_value(exclusion_sites(&residual)).map_err(json_err)? {
            return Err(SessionError::Corrupt("residual.sets.json does not match residual.txt".into()));
        }
        Ok(Session {
            id: meta.id,
            created: meta.created,
            policy_source,
            schema_source,
            kind,
            initial,
            structure,
            residual,
            history,
            assertions,
            snapshots: Vec::new(),
        })
    }
}

fn json_err(e: serde_json::Error) -> SessionError {
    SessionError::Corrupt(e.to_string())
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(json_err)?);
        out.push('\n');
    }
    Ok(out)
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(src: &str) -> Result<Vec<T>> {
    src.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(json_err)).collect()
}

/// Write-then-rename, so readers never see a torn file. Only the ledger is
/// flushed to disk before the rename; flushing every file costs tens of
/// milliseconds per request on common filesystems.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(contents.as_bytes())?;
    if path.file_name().is_some_and(|n| n == "history.jsonl") {
        f.sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// Directory layout of a session store.
#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Store {
        Store { root: root.into() }
    }

    pub fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    fn valid_id(id: &str) -> bool {
        !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
    }

    pub fn create(&self, policy_source: &str, schema_source: &str) -> Result<Session> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let s = Session::create(&id, policy_source, schema_source)?;
        s.save(&self.dir(&id))?;
        Ok(s)
    }

    pub fn load(&self, id: &str) -> Result<Session> {
        let dir = self.dir(id);
        if !Self::valid_id(id) || !dir.join("session.json").exists() {
            return Err(SessionError::NotFound(id.to_string()));
        }
        Session::load(&dir)
    }

    pub fn save(&self, s: &Session) -> Result<()> {
        s.save(&self.dir(&s.id))
    }
}
