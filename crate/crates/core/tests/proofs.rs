mod common;

use anp::pdl::{check_proof, holds_in_run, ProofStatus, Stage};
use anp::syntax::parse_spec;
use common::{cited_assumptions, corpus};

const PROOFS: [(&str, &str, usize); 3] =
    [("cr_sig", "cr_sig", 4), ("cap", "cap_auth", 10), ("handshake", "handshake_b", 7)];

#[test]
fn corpus_proofs_are_accepted() {
    for (file, name, steps) in PROOFS {
        let doc = parse_spec(&corpus(file)).unwrap();
        let script = doc.proof(name).unwrap();
        assert_eq!(script.steps.len(), steps, "{name}");
        let env = doc.procedure(&script.procedure).unwrap();
        let checked = check_proof(script, &env);
        assert_eq!(checked.status, ProofStatus::Accepted, "{name}");
    }
}

#[test]
fn removing_a_cited_assumption_rejects_at_the_citing_step() {
    for (file, name, _) in PROOFS {
        let doc = parse_spec(&corpus(file)).unwrap();
        let script = doc.proof(name).unwrap();
        let env = doc.procedure(&script.procedure).unwrap();
        let mutations = cited_assumptions(script, &env);
        assert!(!mutations.is_empty());
        for m in mutations {
            match check_proof(script, &m.env).status {
                ProofStatus::Rejected { stage, .. } => {
                    assert_eq!(stage, Stage::Step(m.citing_step), "{name}: {}", m.what)
                }
                other => panic!("{name}: {} gave {other:?}", m.what),
            }
        }
    }
}

#[test]
fn assumptions_and_goals_hold_in_the_reference_runs() {
    for (file, name, _) in PROOFS {
        let doc = parse_spec(&corpus(file)).unwrap();
        let script = doc.proof(name).unwrap();
        let env = doc.procedure(&script.procedure).unwrap();
        for run in &env.secure_runs {
            let holds = |f| holds_in_run(f, run, &env.network, &env.theory).unwrap();
            assert!(holds(&script.observations), "{name}: observations");
            assert!(holds(&script.goal), "{name}: goal");
            for a in &env.axioms {
                assert!(holds(&a.formula), "{name}: axiom {}", a.name);
            }
            for c in &env.claims {
                assert!(holds(&c.formula), "{name}: claim {}", c.name);
            }
        }
    }
}

#[test]
fn goal_beyond_the_steps_is_rejected() {
    let doc = parse_spec(&corpus("cr_sig")).unwrap();
    let mut script = doc.proof("cr_sig").unwrap().clone();
    let env = doc.procedure(&script.procedure).unwrap();
    script.steps.truncate(2);
    assert!(matches!(check_proof(&script, &env).status, ProofStatus::Rejected { stage: Stage::Goal, .. }));
}

#[test]
fn claim_not_following_from_the_justification_is_rejected() {
    let doc = parse_spec(&corpus("cr_sig")).unwrap();
    let mut script = doc.proof("cr_sig").unwrap().clone();
    let env = doc.procedure(&script.procedure).unwrap();
    script.steps[0].claim = script.steps[3].claim.clone();
    assert!(matches!(check_proof(&script, &env).status, ProofStatus::Rejected { stage: Stage::Step(0), .. }));
}
