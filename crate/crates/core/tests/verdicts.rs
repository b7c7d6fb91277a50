mod common;

use common::*;
use residua_core::oracle::{domain_for, oracle_evaluate};
use residua_core::syntax::parse_temporal;
use residua_core::{
    check_cosafety, check_safety, finally, translate, Completeness, Error, PartialStructure, Term, Time, Verdict,
};

fn consent_log(at: &[u64], horizon: u64) -> PartialStructure {
    let mut l = PartialStructure::new(health_schema());
    for &t in at {
        l.observe(Time::At(t)).unwrap();
        l.add_fact(&fact("consents", vec![c("C"), c("X"), Term::time(t)]), true).unwrap();
    }
    l.observe(Time::At(horizon)).unwrap();
    l.raise_completeness(Completeness::PastComplete(Time::At(horizon)));
    l
}

#[test]
fn cosafety_reports_the_first_witness() {
    let alpha = parse_temporal("exists q,x. (consents(q, x)) & top").unwrap();
    let l = consent_log(&[4, 6], 9);
    assert_eq!(check_cosafety(&l, &alpha).unwrap(), Verdict::Satisfied(Time::At(4)));
    let f = finally(&alpha);
    assert!(oracle_evaluate(&l, &f, &domain_for(&l, &f)));

    // No witness up to the horizon. A later state could still supply one,
    // so only the per-state translations are refuted.
    let l = consent_log(&[], 9);
    assert_eq!(check_cosafety(&l, &alpha).unwrap(), Verdict::TriviallyFalse);
    for t in l.observed_times() {
        let at = translate(&Term::Time(t), &alpha);
        assert!(oracle_evaluate(&l, &at.dual(), &domain_for(&l, &at)));
    }
}

#[test]
fn negated_disclosure_is_witnessed_at_the_violation() {
    let alpha = parse_temporal(&format!("not ({})", DISCLOSURE.trim_start_matches("G "))).unwrap();
    let mut l = PartialStructure::new(health_schema());
    l.observe(Time::At(7)).unwrap();
    for (p, args) in [
        ("send", vec![c("A"), c("B"), c("M")]),
        ("purp", vec![c("M"), c("test")]),
        ("tagged", vec![c("M"), c("C"), c("meds")]),
        ("attr_in", vec![c("meds"), c("phi")]),
    ] {
        let mut args = args;
        args.push(Term::time(7));
        l.add_fact(&fact(p, args), true).unwrap();
    }
    l.raise_completeness(Completeness::PastComplete(Time::At(10)));
    assert_eq!(check_cosafety(&l, &alpha).unwrap(), Verdict::Satisfied(Time::At(7)));
}

#[test]
fn hypotheses_are_enforced() {
    let l = consent_log(&[4], 9);
    let future = parse_temporal("exists q,x. (consents(q, x)) & eventually top").unwrap();
    assert!(matches!(check_cosafety(&l, &future), Err(Error::Hypothesis(_))));
    let subjective = parse_temporal("forall m,p,t. (send(m,p,t)) => contains(m,p,t)").unwrap();
    assert!(matches!(check_safety(&l, &subjective), Err(Error::Hypothesis(_))));

    let mut generic = PartialStructure::new(health_schema());
    generic.observe(Time::At(1)).unwrap();
    let alpha = parse_temporal("exists q,x. (consents(q, x)) & top").unwrap();
    assert!(matches!(check_cosafety(&generic, &alpha), Err(Error::Hypothesis(_))));

    let mut late = consent_log(&[4], 9);
    late.observe(Time::At(12)).unwrap();
    assert!(check_cosafety(&late, &alpha).is_err());
}
