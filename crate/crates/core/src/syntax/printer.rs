//! Serialization back to `.anp` text.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::network::ActorNetwork;
use crate::pdl::Derivation;
use crate::term::{AxiomTag, TermTheory, Transparency};

use super::document::{ProcedureDecl, ProcessDecl, RunDecl, SpecDocument};

/// Renders a document; parsing the result yields an equal document.
pub fn serialize(doc: &SpecDocument) -> String {
    let mut blocks = Vec::new();
    blocks.extend(doc.theories.iter().map(theory));
    blocks.extend(doc.networks.iter().map(network));
    blocks.extend(doc.processes.iter().map(process));
    blocks.extend(doc.runs.iter().map(run));
    blocks.extend(doc.procedures.iter().map(procedure));
    blocks.extend(doc.proofs.iter().map(proof));
    blocks.join("\n")
}

fn theory(th: &TermTheory) -> String {
    let mut s = format!("theory {} {{\n", th.name);
    for op in th.operators.values() {
        let _ = write!(s, "  op {}/{}", op.name, op.arity);
        if op.transparency.iter().all(|t| *t == Transparency::Opaque) {
            s.push_str(" opaque");
        } else if op.transparency.iter().all(|t| *t == Transparency::Transparent) {
            s.push_str(" transparent");
        } else {
            let parts: Vec<&str> = op
                .transparency
                .iter()
                .map(|t| if *t == Transparency::Transparent { "transparent" } else { "opaque" })
                .collect();
            let _ = write!(s, " ({})", parts.join(", "));
        }
        for tag in &op.tags {
            match tag {
                AxiomTag::Injective => s.push_str(" injective"),
                AxiomTag::VerifierOf(f) => {
                    let _ = write!(s, " verifier({f})");
                }
                AxiomTag::OriginRestricted(l) => {
                    let _ = write!(s, " origin({l})");
                }
            }
        }
        s.push_str(";\n");
    }
    if !th.constants.is_empty() {
        let names: Vec<&str> = th.constants.iter().map(String::as_str).collect();
        let _ = writeln!(s, "  const {};", names.join(", "));
    }
    for r in &th.rewrites {
        let _ = writeln!(s, "  rewrite {} -> {};", r.lhs, r.rhs);
    }
    s.push_str("}\n");
    s
}

fn list<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    items.into_iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

fn network(net: &ActorNetwork) -> String {
    let mut s = format!("network {} {{\n", net.name);
    if !net.principals.is_empty() {
        let _ = writeln!(s, "  principals {};", list(&net.principals));
    }
    if !net.nodes.is_empty() {
        let _ = writeln!(s, "  nodes {};", list(&net.nodes));
    }
    if !net.channel_types.is_empty() {
        let _ = writeln!(s, "  types {};", list(&net.channel_types));
    }
    for (name, members) in &net.configs {
        let _ = writeln!(s, "  config {name} = {{{}}};", list(members));
    }
    let mut by_principal: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
    for (loc, who) in &net.control {
        by_principal.entry(who).or_default().push(loc);
    }
    for (who, locs) in by_principal {
        let _ = writeln!(s, "  control {who}: {};", list(locs));
    }
    for ch in &net.channels {
        let _ = write!(s, "  channel {}: {} -{}-> {}", ch.id, ch.entry, ch.ty, ch.exit);
        if !ch.flags.is_empty() {
            let flags: Vec<&str> = ch.flags.iter().map(|f| f.name()).collect();
            let _ = write!(s, " [{}]", flags.join(", "));
        }
        s.push_str(";\n");
    }
    s.push_str("}\n");
    s
}

fn process(p: &ProcessDecl) -> String {
    let mut s = format!("process {} {{\n  network {};\n  theory {};\n", p.name, p.network, p.theory);
    for st in &p.strands {
        let _ = writeln!(s, "  strand {} {{", st.location);
        for e in &st.events {
            let _ = write!(s, "    {}: {}", e.point, e.kind);
            if let Some(l) = &e.location {
                let _ = write!(s, " @{l}");
            }
            s.push_str(";\n");
        }
        s.push_str("  }\n");
    }
    for (a, b) in &p.order {
        let _ = writeln!(s, "  order {a} -> {b};");
    }
    s.push_str("}\n");
    s
}

fn run(r: &RunDecl) -> String {
    let mut s = format!("run {} of {} {{\n", r.name, r.process);
    for f in &r.flows {
        let _ = writeln!(s, "  flow {} -{}-> {};", f.writer, f.channel, f.reader);
    }
    s.push_str("}\n");
    s
}

fn procedure(p: &ProcedureDecl) -> String {
    let mut s = format!("procedure {} {{\n  process {};\n", p.name, p.process);
    if !p.secure.is_empty() {
        let _ = writeln!(s, "  secure {};", list(&p.secure));
    }
    for ax in &p.axioms {
        let _ = write!(s, "  axiom {}", ax.name);
        if !ax.holes.is_empty() {
            let _ = write!(s, " ({})", list(&ax.holes));
        }
        let _ = writeln!(s, ": {};", ax.formula);
    }
    for c in &p.claims {
        let _ = writeln!(s, "  claim {}: {};", c.name, c.formula);
    }
    if let Some(a) = &p.attacker {
        s.push_str("  attacker {\n");
        if !a.channel_types.is_empty() {
            let _ = writeln!(s, "    channels {};", list(&a.channel_types));
        }
        if !a.capabilities.is_empty() {
            let _ = writeln!(s, "    capabilities {};", list(&a.capabilities));
        }
        if !a.knowledge.is_empty() {
            let terms: Vec<String> = a.knowledge.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(s, "    knows {};", terms.join(", "));
        }
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}

fn proof(d: &Derivation) -> String {
    let mut s = format!("proof {} for {} {{\n  procedure {};\n", d.name, d.principal, d.procedure);
    let _ = writeln!(s, "  assume obs: {};", d.observations);
    for st in &d.steps {
        let js: Vec<String> = st.justifications.iter().map(|j| j.to_string()).collect();
        let sep = if js.is_empty() { "" } else { " " };
        let _ = writeln!(s, "  step {}: {}{sep}gives {};", st.label, js.join(", "), st.claim);
    }
    let _ = writeln!(s, "  qed {};", d.goal);
    s.push_str("}\n");
    s
}
