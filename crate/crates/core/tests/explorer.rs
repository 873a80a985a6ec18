mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use anp::explorer::*;
use anp::pdl::Formula;
use anp::process::Process;
use anp::run::Procedure;
use anp::syntax::{parse_spec, serialize, SpecDocument};
use anp::term::Term;
use common::corpus;

fn procedure(file: &str, name: &str) -> (SpecDocument, Procedure) {
    let doc = parse_spec(&corpus(file)).unwrap();
    let p = doc.procedure(name).unwrap();
    (doc, p)
}

fn bounds(s: usize, a: usize, d: usize) -> ExplorationBounds {
    ExplorationBounds { max_sessions: s, max_attacker_events: a, max_term_depth: d }
}

fn c(n: &str) -> Term {
    Term::constant(n)
}

#[test]
fn honest_single_session_is_the_reference_run() {
    let (doc, proc) = procedure("cr_sig", "cr");
    let x = enumerate_runs(&proc, &AttackerModel::for_procedure(&proc), &bounds(1, 0, 4)).unwrap();
    assert_eq!(x.runs.len(), 1);
    let reference = doc.run("cr_ref").unwrap();
    let got: BTreeSet<_> =
        x.runs[0].run.flows().map(|f| (f.writer.clone(), f.reader.clone(), f.channel.id.clone())).collect();
    let want: BTreeSet<_> =
        reference.flows().map(|f| (f.writer.clone(), f.reader.clone(), f.channel.id.clone())).collect();
    assert_eq!(got, want);
    assert_eq!(x.runs[0].attacker_events, 0);
}

#[test]
fn every_enumerated_run_is_sound_and_complete() {
    let cases = [
        ("cr_sig", "cr", bounds(2, 2, 4), Some("sig")),
        ("cap", "cap", bounds(1, 1, 3), Some("H")),
        ("handshake", "handshake", bounds(1, 1, 3), None),
    ];
    for (file, name, b, cap) in cases {
        let (_, proc) = procedure(file, name);
        let mut model = AttackerModel::for_procedure(&proc);
        if let Some(cap) = cap {
            model = model.with_capability(cap);
        }
        let x = enumerate_runs(&proc, &model, &b).unwrap();
        assert!(!x.runs.is_empty(), "{file}");
        for r in &x.runs {
            assert!(r.run.is_sound(), "{file}: {} unsound", r.run.name);
            assert!(r.run.check_complete(&proc.theory).unwrap().is_complete(), "{file}: {} incomplete", r.run.name);
            assert!(r.attacker_events <= b.max_attacker_events);
            assert!(r.sessions <= b.max_sessions);
        }
    }
}

#[test]
fn enumeration_is_deterministic() {
    let (_, proc) = procedure("cr_sig", "cr");
    let model = AttackerModel::for_procedure(&proc).with_capability("sig");
    let a = enumerate_runs(&proc, &model, &bounds(2, 2, 4)).unwrap();
    let b = enumerate_runs(&proc, &model, &bounds(2, 2, 4)).unwrap();
    assert_eq!(a.runs, b.runs);
}

#[test]
fn optimized_validation_agrees_with_naive() {
    let cases = [
        ("cr_sig", "cr", bounds(2, 2, 4), vec![None, Some("sig")]),
        ("cap", "cap", bounds(1, 1, 3), vec![None, Some("H")]),
        ("handshake", "handshake", bounds(1, 1, 3), vec![None]),
    ];
    for (file, name, b, caps) in cases {
        let (_, proc) = procedure(file, name);
        for cap in caps {
            let mut model = AttackerModel::for_procedure(&proc);
            if let Some(cap) = cap {
                model = model.with_capability(cap);
            }
            for claim in &proc.claims {
                let fast = semantic_validate(&claim.formula, &proc, &model, &b).unwrap();
                let slow = semantic_validate_naive(&claim.formula, &proc, &model, &b).unwrap();
                assert_eq!(fast, slow, "{file}/{} with {cap:?}", claim.name);
            }
            for ax in &proc.axioms {
                let fast = semantic_validate(&ax.formula, &proc, &model, &b).unwrap();
                let slow = semantic_validate_naive(&ax.formula, &proc, &model, &b).unwrap();
                assert_eq!(fast.holds(), slow.holds(), "{file}/{} with {cap:?}", ax.name);
            }
        }
    }
}

#[test]
fn forging_capability_breaks_the_signature_claim() {
    let (_, proc) = procedure("cr_sig", "cr");
    let claim = &proc.claims[0].formula;
    let honest = AttackerModel::for_procedure(&proc);
    assert!(semantic_validate(claim, &proc, &honest, &bounds(2, 2, 4)).unwrap().holds());
    let forger = honest.with_capability("sig");
    let Verdict::Counterexample(r) = semantic_validate(claim, &proc, &forger, &bounds(2, 2, 4)).unwrap() else {
        panic!("expected a counterexample");
    };
    assert!(r.attacker_events >= 1);
    // The response the verifier accepts was written by the attacker node.
    let x = enumerate_runs(&proc, &forger, &bounds(2, 2, 4)).unwrap();
    let b3 = r.run.flows().find(|f| f.reader == "b3").unwrap();
    assert_eq!(r.run.process.event(&b3.writer).unwrap().location, x.attacker_node);
}

#[test]
fn unsatisfiable_premise_holds_vacuously() {
    let (_, proc) = procedure("cr_sig", "cr");
    let never = anp::syntax::parse_formula("recv(nothing)@P => send(nothing)@Q").unwrap();
    let v = semantic_validate(&never, &proc, &AttackerModel::for_procedure(&proc), &bounds(1, 1, 3)).unwrap();
    assert!(v.holds());
}

#[test]
fn empty_process_has_one_empty_run() {
    let (_, mut proc) = procedure("cr_sig", "cr");
    proc.process = Arc::new(Process::new("empty"));
    proc.claims.clear();
    let x = enumerate_runs(&proc, &AttackerModel::for_procedure(&proc), &bounds(1, 1, 3)).unwrap();
    assert_eq!(x.runs.len(), 1);
    assert!(x.runs[0].run.process.is_empty());
    assert!(semantic_validate(&Formula::truth(), &proc, &AttackerModel::default(), &bounds(1, 1, 3)).unwrap().holds());
}

#[test]
fn closure_decomposes_and_applies_capabilities() {
    let (_, proc) = procedure("cr_sig", "cr");
    let th = &proc.theory;
    let start = KnowledgeState::new("M", [Term::pair(c("a"), c("b")), Term::apply("sig", vec![c("k")])]);
    let none = BTreeSet::new();
    let k = attacker_closure(&start, th, &none, 2).unwrap();
    assert!(k.knows(&c("a")) && k.knows(&c("b")));
    assert!(k.knows(&Term::pair(c("b"), c("a"))));
    assert!(!k.knows(&c("k")), "opaque arguments stay hidden");
    assert!(!k.knows(&Term::apply("sig", vec![c("a")])));
    let sig: BTreeSet<String> = ["sig".to_string()].into();
    let forged = attacker_closure(&start, th, &sig, 2).unwrap();
    assert!(forged.knows(&Term::apply("sig", vec![c("a")])));
    assert!(k.known.is_subset(&forged.known));
}

#[test]
fn closure_is_monotone_and_idempotent() {
    let (_, proc) = procedure("cr_sig", "cr");
    let th = &proc.theory;
    let sig: BTreeSet<String> = ["sig".to_string()].into();
    let small = KnowledgeState::new("M", [c("a")]);
    let large = KnowledgeState::new("M", [c("a"), Term::pair(c("b"), c("d"))]);
    for depth in 1..=3 {
        let s = attacker_closure(&small, th, &sig, depth).unwrap();
        let l = attacker_closure(&large, th, &sig, depth).unwrap();
        assert!(s.known.is_subset(&l.known));
        assert_eq!(attacker_closure(&s, th, &sig, depth).unwrap(), s);
        assert_eq!(attacker_closure(&l, th, &sig, depth).unwrap(), l);
    }
}

#[test]
fn unknown_capability_is_rejected() {
    let (_, proc) = procedure("cr_sig", "cr");
    let model = AttackerModel::for_procedure(&proc).with_capability("nope");
    assert_eq!(
        enumerate_runs(&proc, &model, &bounds(1, 1, 3)).unwrap_err(),
        ExploreError::UnknownCapability("nope".into())
    );
}

#[test]
fn exported_counterexample_reparses_as_a_sound_run() {
    let (_, proc) = procedure("cr_sig", "cr");
    let model = AttackerModel::for_procedure(&proc).with_capability("sig");
    let x = enumerate_runs(&proc, &model, &bounds(2, 2, 4)).unwrap();
    for r in &x.runs {
        let text = serialize(&export_run(&x, r, &proc.theory));
        let back = parse_spec(&text).unwrap_or_else(|e| panic!("{e:?}\n{text}"));
        let run = back.run(&r.run.name).unwrap();
        assert_eq!(run.assignment.len(), r.run.assignment.len());
        assert!(run.is_sound());
        assert_eq!(run.process.len(), r.run.process.len());
    }
}
