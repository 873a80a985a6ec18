mod common;

use std::collections::BTreeSet;

use anp::dot::*;
use anp::pdl::check_proof;
use anp::syntax::parse_spec;
use common::{corpus, CORPUS};

fn opts(t: RenderTarget) -> RenderOptions {
    RenderOptions::new(t)
}

/// Compares with `tests/golden/<name>.dot`; `ANP_BLESS=1` rewrites the file.
fn golden(name: &str, text: &str) {
    let path = format!("{}/tests/golden/{name}.dot", env!("CARGO_MANIFEST_DIR"));
    if std::env::var("ANP_BLESS").is_ok_and(|v| v == "1") {
        std::fs::write(&path, text).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    assert_eq!(text, want, "{name} differs from its golden file");
}

#[test]
fn golden_outputs() {
    let cap = parse_spec(&corpus("cap")).unwrap();
    golden("cap_network", &emit_network_dot(cap.network("cap").unwrap(), &opts(RenderTarget::Network)));
    golden("cap_ref_run", &emit_run_dot(cap.run("cap_ref").unwrap(), &opts(RenderTarget::Run)).unwrap());
    let cr = parse_spec(&corpus("cr_sig")).unwrap();
    let script = cr.proof("cr_sig").unwrap();
    let checked = check_proof(script, &cr.procedure("cr").unwrap());
    golden("cr_sig_derivation", &emit_derivation_dot(&checked, &opts(RenderTarget::Derivation)).unwrap());
    let hs = parse_spec(&corpus("handshake_two_round")).unwrap();
    golden("handshake_two_round_network", &emit_network_dot(&hs.networks[0], &opts(RenderTarget::Network)));
}

#[test]
fn emitters_are_deterministic() {
    for name in CORPUS {
        let a = parse_spec(&corpus(name)).unwrap();
        let b = parse_spec(&corpus(name)).unwrap();
        for (n, m) in a.networks.iter().zip(&b.networks) {
            let o = opts(RenderTarget::Network);
            assert_eq!(emit_network_dot(n, &o), emit_network_dot(m, &o));
        }
        for rd in &a.runs {
            let o = opts(RenderTarget::Run);
            assert_eq!(emit_run_dot(a.run(&rd.name).unwrap(), &o), emit_run_dot(b.run(&rd.name).unwrap(), &o));
        }
    }
}

fn edges(dot: &str) -> BTreeSet<(String, String)> {
    dot.lines()
        .filter_map(|l| {
            let (lhs, rest) = l.trim().split_once(" -> ")?;
            let rhs = rest.split([' ', ';']).next()?;
            Some((lhs.trim_matches('"').to_string(), rhs.trim_matches('"').to_string()))
        })
        .collect()
}

#[test]
fn run_edges_are_flows_plus_strand_successors() {
    for name in CORPUS {
        let doc = parse_spec(&corpus(name)).unwrap();
        for rd in &doc.runs {
            let run = doc.run(&rd.name).unwrap();
            let dot = emit_run_dot(run, &opts(RenderTarget::Run)).unwrap();
            let mut want: BTreeSet<_> = run.flows().map(|f| (f.writer.clone(), f.reader.clone())).collect();
            want.extend(run.process.covers());
            assert_eq!(edges(&dot), want, "{}", rd.name);
            assert_eq!(dot.matches(" -> ").count(), want.len());
        }
    }
}

#[test]
fn network_has_one_vertex_per_node_and_one_cluster_per_configuration() {
    let doc = parse_spec(&corpus("cap")).unwrap();
    let dot = emit_network_dot(doc.network("cap").unwrap(), &opts(RenderTarget::Network));
    assert_eq!(dot.matches("xlabel=").count(), 5);
    assert_eq!(dot.matches("subgraph").count(), 1);
    assert_eq!(dot.matches(" -> ").count(), 6);
}

#[test]
fn unsound_runs_and_rejected_proofs_are_refused() {
    let doc = parse_spec(&corpus("cr_sig")).unwrap();
    let mut run = doc.run("cr_ref").unwrap().clone();
    run.assignment.clear();
    assert!(matches!(emit_run_dot(&run, &opts(RenderTarget::Run)), Err(DotError::UnsoundRun(_))));
    let unchecked = doc.proof("cr_sig").unwrap();
    assert!(matches!(
        emit_derivation_dot(unchecked, &opts(RenderTarget::Derivation)),
        Err(DotError::RejectedDerivation(_))
    ));
}

#[test]
fn labels_are_escaped() {
    let doc = parse_spec(&corpus("cr_sig")).unwrap();
    let mut net = doc.network("cr").unwrap().clone();
    net.name = "say \"hi\"\\".into();
    let dot = emit_network_dot(&net, &opts(RenderTarget::Network));
    assert!(dot.starts_with("digraph \"say \\\"hi\\\"\\\\\" {"));
}
