use std::fs;

use residua::report::{render, report};
use residua::session::{EntryKind, Session, SessionError, Store};
use residua_core::syntax::parse_formula;
use residua_core::{Error, Formula, Time, Verdict};

fn fixture(name: &str) -> String {
    fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

const REQUEST_REST: &str = "forall tau,p,t. (in(tau, 0, inf) and req(p, t, tau) and notin_set((tau, p, t), {(3, Alice, mr)})) \
    => exists tau2,q,m. (in(tau2, tau, tau+30) and inrole(q, records, tau2) and send(q, p, m, tau2)) \
    & (contains(m, p, t, tau2) and (forall tau3. (in(tau3, tau, tau2) and neq(tau3, tau2)) => ~ftr(p, t, tau3)))";

const PENDING: [&str; 3] = ["contains(M, Alice, mr, 11)", "~ftr(Alice, mr, 3)", "~ftr(Alice, mr, 7)"];

/// Two logs and two iterations of the request-response policy.
fn response_session(store: &Store) -> Session {
    let mut s = store.create(&fixture("response.pol"), &fixture("health.decl")).unwrap();
    s.ingest(&fixture("response-1.jsonl")).unwrap();
    s.iterate().unwrap();
    s.ingest(&fixture("response-2.jsonl")).unwrap();
    s.iterate().unwrap();
    store.save(&s).unwrap();
    s
}

#[test]
fn request_response_loop_reaches_the_pending_atoms_and_discharges_them() {
    let root = tempfile::tempdir().unwrap();
    let store = Store::new(root.path());
    let mut s = response_session(&store);
    assert_eq!(s.structure.observed_times().collect::<Vec<_>>(), [1, 3, 7, 11].map(Time::At));
    let pending: Vec<String> = s.pending().unwrap().iter().map(ToString::to_string).collect();
    assert_eq!(pending, PENDING);
    assert_eq!(s.verdict().unwrap(), None);

    for atom in PENDING {
        s.assert(atom, true, "read the record and the forwarding log").unwrap();
    }
    assert!(s.pending().unwrap().is_empty());
    s.iterate().unwrap();
    // Only the unobserved times between 3 and 11 keep the answered request open.
    let open = format!(
        "((forall tau3. (in(tau3, 3, 11) and neq(tau3, 11) and notin_set(tau3, {{3, 7}})) => ~ftr(Alice, mr, tau3)) \
         or (exists tau2,q,m. (in(tau2, 3, 33) and inrole(q, records, tau2) and send(q, Alice, m, tau2) \
         and notin_set((tau2, q, m), {{(11, Bob, M)}})) & (contains(m, Alice, mr, tau2) and \
         (forall tau3. (in(tau3, 3, tau2) and neq(tau3, tau2)) => ~ftr(Alice, mr, tau3))))) and ({REQUEST_REST})"
    );
    assert!(s.residual.alpha_eq(&parse_formula(&open).unwrap()), "{}", s.residual);
    store.save(&s).unwrap();

    let back = store.load(&s.id).unwrap();
    assert_eq!(render(&report(&back).unwrap()), render(&report(&s).unwrap()));
    assert_eq!(back.replay(&store.dir(&s.id)).unwrap(), s.residual);
    let kinds: Vec<EntryKind> = back.history.iter().map(|e| e.kind).collect();
    use EntryKind::*;
    assert_eq!(kinds, [Create, Ingest, Iterate, Ingest, Iterate, Assert, Assert, Assert, Iterate]);
    assert_eq!(back.assertions.len(), 3);

    // Declaring the log objectively complete closes every remaining quantifier.
    let mut s = back;
    s.ingest(&fixture("objective.jsonl")).unwrap();
    s.iterate().unwrap();
    assert_eq!(s.residual, Formula::Top);
    assert_eq!(s.verdict().unwrap(), Some(Verdict::TriviallyTrue));
}

#[test]
fn replay_is_deterministic_and_detects_tampering() {
    let root = tempfile::tempdir().unwrap();
    let store = Store::new(root.path());
    let s = response_session(&store);
    let dir = store.dir(&s.id);
    assert_eq!(s.replay(&dir).unwrap().to_string(), fs::read_to_string(dir.join("residual.txt")).unwrap());
    let sites: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("residual.sets.json")).unwrap()).unwrap();
    let excluded: Vec<&serde_json::Value> = sites.as_array().unwrap().iter().map(|s| &s["excluded"]).collect();
    assert_eq!(excluded, [&serde_json::json!(["3", "7"]), &serde_json::json!(["(11, Bob, M)"]), &serde_json::json!(["(3, Alice, mr)"])]);

    fs::write(dir.join("snapshots/0002.jsonl"), fs::read_to_string(dir.join("snapshots/0001.jsonl")).unwrap()).unwrap();
    assert!(matches!(s.replay(&dir), Err(SessionError::Corrupt(_))));
    fs::write(dir.join("residual.sets.json"), "[]").unwrap();
    assert!(matches!(store.load(&s.id), Err(SessionError::Corrupt(_))));
    fs::write(dir.join("residual.txt"), "top").unwrap();
    assert!(matches!(store.load(&s.id), Err(SessionError::Corrupt(_))));
}

#[test]
fn iterating_without_new_data_changes_nothing() {
    let root = tempfile::tempdir().unwrap();
    let store = Store::new(root.path());
    let mut s = response_session(&store);
    let before = s.residual.clone();
    s.iterate().unwrap();
    assert_eq!(s.residual, before);
}

#[test]
fn assertions_are_checked() {
    let root = tempfile::tempdir().unwrap();
    let mut s = response_session(&Store::new(root.path()));
    assert!(matches!(s.assert(PENDING[0], true, "  "), Err(SessionError::Justification)));
    assert!(matches!(s.assert("contains(M, Bob, mr, 11)", true, "why"), Err(SessionError::NotPending(_))));
    assert!(matches!(s.assert("send(Bob, Alice, M, 11)", true, "why"), Err(SessionError::NotPending(_))));

    s.assert(PENDING[0], true, "read it").unwrap();
    let n = s.history.len();
    s.assert(PENDING[0], true, "read it again").unwrap();
    assert_eq!(s.history.len(), n);
    assert!(matches!(s.assert(PENDING[0], false, "changed my mind"), Err(SessionError::Engine(Error::Contradiction { .. }))));
    // Deciding the dual of a pending atom decides the atom.
    s.assert("ftr(Alice, mr, 3)", false, "no forwarding at 3").unwrap();
    let pending: Vec<String> = s.pending().unwrap().iter().map(ToString::to_string).collect();
    assert_eq!(pending, [PENDING[2]]);
}

#[test]
fn ingest_rejects_conflicts_and_ignores_empty_logs() {
    let root = tempfile::tempdir().unwrap();
    let mut s = response_session(&Store::new(root.path()));
    let n = s.history.len();
    s.ingest("").unwrap();
    assert_eq!(s.history.len(), n);
    let bad = r#"{"fact": {"pred": "req", "args": ["Alice", "mr"], "at": 3, "value": "ff"}}"#;
    assert!(matches!(s.ingest(bad), Err(SessionError::Engine(Error::Conflict(_)))));
    assert_eq!(s.history.len(), n);
}

#[test]
fn creation_reports_policy_errors() {
    let decls = fixture("health.decl");
    let s = Session::create("x", &fixture("response.pol"), &decls).unwrap();
    assert_eq!(s.residual, s.initial);
    assert!(matches!(s.initial, Formula::Forall(_)));

    let Err(SessionError::Modes(diags)) = Session::create("x", &fixture("mismoded.pol"), &decls) else { panic!() };
    assert!(diags[0].subject.starts_with("tagged("));
    assert!(matches!(Session::create("x", "", &decls), Err(SessionError::Engine(Error::Parse { .. }))));
}

#[test]
fn decided_disclosure_session_reports_the_violation() {
    let root = tempfile::tempdir().unwrap();
    let store = Store::new(root.path());
    let mut s = store.create(&fixture("disclosure.pol"), &fixture("health.decl")).unwrap();
    s.ingest(&fixture("disclosure.jsonl")).unwrap();
    s.iterate().unwrap();
    // Past-complete only: quantifiers stay, so nothing is decided yet.
    assert!(!matches!(s.residual, Formula::Top | Formula::Bot));
    s.ingest(&fixture("objective.jsonl")).unwrap();
    s.iterate().unwrap();
    assert_eq!(s.residual, Formula::Bot);
    assert_eq!(s.verdict().unwrap(), Some(Verdict::Violated(Time::At(7))));
    let n = s.history.len();
    s.iterate().unwrap();
    assert_eq!(s.history.len(), n);
    let r = serde_json::to_value(report(&s).unwrap()).unwrap();
    assert_eq!(r["verdict"], serde_json::json!({"verdict": "violated", "witness_time": 7}));
    assert_eq!(r["decided"], true);
}

#[test]
fn fresh_report_carries_the_whole_policy() {
    let root = tempfile::tempdir().unwrap();
    let store = Store::new(root.path());
    let s = store.create(&fixture("response.pol"), &fixture("health.decl")).unwrap();
    let r = serde_json::to_value(report(&s).unwrap()).unwrap();
    assert_eq!(r["residual"]["text"], s.initial.to_string());
    assert_eq!(r["residual"]["ast"]["type"], "forall");
    assert_eq!(r["pending"], serde_json::json!([]));
    assert_eq!(r["verdict"], serde_json::Value::Null);
    assert!(matches!(store.load("../etc"), Err(SessionError::NotFound(_))));
}
