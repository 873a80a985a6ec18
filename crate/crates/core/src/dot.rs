//! Deterministic Graphviz DOT output for networks, runs and derivations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use crate::network::ActorNetwork;
use crate::pdl::{Atom, Derivation, EventDesc, Formula};
use crate::run::Run;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DotError {
    #[error("run `{0}` is not sound")]
    UnsoundRun(String),
    #[error("derivation `{0}` has not been accepted")]
    RejectedDerivation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderTarget {
    Network,
    Run,
    Derivation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub target: RenderTarget,
    /// Minimum vertical distance between strand events, in inches.
    pub strand_spacing: f32,
    /// Full event and channel labels instead of point and channel names.
    pub verbose: bool,
}

impl RenderOptions {
    pub fn new(target: RenderTarget) -> Self {
        RenderOptions { target, strand_spacing: 0.4, verbose: true }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Nodes as points, configurations as clusters, channels as typed edges.
pub fn emit_network_dot(net: &ActorNetwork, opts: &RenderOptions) -> String {
    let mut s = format!("digraph {} {{\n  compound=true;\n  rankdir=LR;\n", quote(&net.name));
    s.push_str("  node [shape=point, width=0.12];\n");
    let endpoints: BTreeSet<&str> = net.channels.iter().flat_map(|c| [c.entry.as_str(), c.exit.as_str()]).collect();
    // A node sits in the first configuration listing it; nested configurations nest clusters.
    let mut placed: BTreeSet<String> = BTreeSet::new();
    let inner: BTreeSet<&String> = net.configs.values().flatten().filter(|m| net.configs.contains_key(*m)).collect();
    for name in net.configs.keys().filter(|c| !inner.contains(c)) {
        cluster(net, name, 1, &endpoints, &mut placed, &mut s);
    }
    for n in &net.nodes {
        if !placed.contains(n) {
            let _ = writeln!(s, "  {} [xlabel={}];", quote(n), quote(n));
        }
    }
    for c in &net.channels {
        let label = if opts.verbose { format!("{} {}", c.ty, c.id) } else { c.ty.clone() };
        let mut attrs = vec![format!("label={}", quote(&label))];
        if !c.flags.is_empty() {
            let flags: Vec<&str> = c.flags.iter().map(|f| f.name()).collect();
            attrs.push(format!("taillabel={}", quote(&flags.join(","))));
            attrs.push("style=bold".to_string());
        }
        let _ = writeln!(
            s,
            "  {} -> {} [{}];",
            quote(&anchor(net, &c.entry)),
            quote(&anchor(net, &c.exit)),
            attrs.join(", ")
        );
    }
    s.push_str("}\n");
    s
}

fn anchor(net: &ActorNetwork, loc: &str) -> String {
    if net.configs.contains_key(loc) {
        format!("{loc}#")
    } else {
        loc.to_string()
    }
}

fn cluster(
    net: &ActorNetwork,
    name: &str,
    level: usize,
    endpoints: &BTreeSet<&str>,
    placed: &mut BTreeSet<String>,
    s: &mut String,
) {
    let pad = "  ".repeat(level);
    let _ = writeln!(s, "{pad}subgraph {} {{", quote(&format!("cluster_{name}")));
    let _ = writeln!(s, "{pad}  label={};", quote(name));
    if endpoints.contains(name) {
        let _ = writeln!(s, "{pad}  {} [shape=plaintext, label={}];", quote(&anchor(net, name)), quote(name));
    }
    for m in &net.configs[name] {
        if net.configs.contains_key(m) {
            cluster(net, m, level + 1, endpoints, placed, s);
        } else if placed.insert(m.clone()) {
            let _ = writeln!(s, "{pad}  {} [xlabel={}];", quote(m), quote(m));
        }
    }
    let _ = writeln!(s, "{pad}}}");
}

/// Strands as vertical chains per location; order edges are the covering pairs of the
/// process order, flow edges are dashed.
pub fn emit_run_dot(run: &Run, opts: &RenderOptions) -> Result<String, DotError> {
    if !run.is_sound() {
        return Err(DotError::UnsoundRun(run.name.clone()));
    }
    let p = &run.process;
    let mut strands: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &p.events {
        strands.entry(e.location.as_str()).or_default().push(e.point.as_str());
    }
    let mut s =
        format!("digraph {} {{\n  rankdir=TB;\n  nodesep=0.6;\n  ranksep={};\n", quote(&run.name), opts.strand_spacing);
    s.push_str("  node [shape=box, style=rounded, fontsize=10];\n");
    for (loc, points) in strands.iter_mut() {
        points.sort();
        let _ = writeln!(s, "  subgraph {} {{", quote(&format!("cluster_{loc}")));
        let _ = writeln!(s, "    label={};", quote(loc));
        for pt in points.iter() {
            let ev = p.event(pt).expect("event of its own process");
            let label = if opts.verbose { format!("{pt}: {}", ev.kind) } else { pt.to_string() };
            let _ = writeln!(s, "    {} [label={}];", quote(pt), quote(&label));
        }
        s.push_str("  }\n");
    }
    let mut covers = p.covers();
    covers.sort();
    for (a, b) in covers {
        let _ = writeln!(s, "  {} -> {} [weight=10];", quote(&a), quote(&b));
    }
    let mut flows: Vec<_> = run.flows().collect();
    flows.sort_by(|a, b| (&a.writer, &a.reader).cmp(&(&b.writer, &b.reader)));
    for f in flows {
        let label = if opts.verbose { format!("{} {}", f.channel.ty, f.channel.id) } else { f.channel.ty.clone() };
        let _ = writeln!(
            s,
            "  {} -> {} [style=dashed, constraint=false, label={}];",
            quote(&f.writer),
            quote(&f.reader),
            quote(&label)
        );
    }
    s.push_str("}\n");
    Ok(s)
}

fn collect_events(f: &Formula, out: &mut Vec<EventDesc>) {
    for a in f.atoms() {
        for e in a.events() {
            if !out.contains(e) {
                out.push(e.clone());
            }
        }
    }
}

/// The facts asserted along an accepted derivation, with one numbered badge per step
/// attached to the events its claim mentions.
pub fn emit_derivation_dot(d: &Derivation, opts: &RenderOptions) -> Result<String, DotError> {
    if !d.status.is_accepted() {
        return Err(DotError::RejectedDerivation(d.name.clone()));
    }
    let mut events = Vec::new();
    collect_events(&d.observations, &mut events);
    for st in &d.steps {
        collect_events(&st.claim, &mut events);
    }
    collect_events(&d.goal, &mut events);
    let id = |e: &EventDesc| format!("e{}", events.iter().position(|x| x == e).unwrap() + 1);
    let mut s = format!("digraph {} {{\n  rankdir=TB;\n  ranksep={};\n", quote(&d.name), opts.strand_spacing);
    s.push_str("  node [shape=box, style=rounded, fontsize=10];\n");
    let mut by_loc: BTreeMap<String, Vec<&EventDesc>> = BTreeMap::new();
    for e in &events {
        by_loc.entry(e.loc.to_string()).or_default().push(e);
    }
    for (loc, evs) in &by_loc {
        let _ = writeln!(s, "  subgraph {} {{", quote(&format!("cluster_{loc}")));
        let _ = writeln!(s, "    label={};", quote(loc));
        for e in evs {
            let _ = writeln!(s, "    {} [label={}];", id(e), quote(&e.to_string()));
        }
        s.push_str("  }\n");
    }
    let mut edges = BTreeSet::new();
    let formulas = std::iter::once(&d.observations).chain(d.steps.iter().map(|st| &st.claim)).chain([&d.goal]);
    for f in formulas {
        for a in f.atoms() {
            if let Atom::Before(x, y) = a {
                edges.insert((id(x), id(y)));
            }
        }
    }
    for (a, b) in &edges {
        let _ = writeln!(s, "  {a} -> {b};");
    }
    for (i, st) in d.steps.iter().enumerate() {
        let badge = format!("step{}", i + 1);
        let js: Vec<String> = st.justifications.iter().map(|j| j.to_string()).collect();
        let tip = if opts.verbose { format!("{}: {}", st.label, js.join(", ")) } else { st.label.clone() };
        let _ = writeln!(
            s,
            "  {badge} [shape=circle, style=filled, fillcolor=black, fontcolor=white, label={}, tooltip={}];",
            quote(&(i + 1).to_string()),
            quote(&tip)
        );
        let mut mine = Vec::new();
        collect_events(&st.claim, &mut mine);
        for e in &mine {
            let _ = writeln!(s, "  {badge} -> {} [style=dotted, arrowhead=none, constraint=false];", id(e));
        }
    }
    s.push_str("}\n");
    Ok(s)
}
