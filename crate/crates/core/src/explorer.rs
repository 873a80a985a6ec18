//! Bounded exhaustive exploration of runs with a symbolic attacker.
//!
//! The attacker is an extra node that owns every channel of the attacker
//! channel types: it taps honest sends on those channels and injects its own
//! sends, built from what it tapped. Runs are complete: every event of every
//! session happens and every read has a writer.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::network::{ActorNetwork, Channel};
use crate::pdl::{holds_in_run, Formula};
use crate::process::{EventKind, LocalizedEvent, Process, ProcessError};
use crate::run::{AttackerSpec, Procedure, Run, RunError};
use crate::syntax::{EventDecl, FlowDecl, ProcessDecl, RunDecl, SpecDocument, StrandDecl};
use crate::term::{easy_subterms, match_pattern, Term, TermTheory};

/// Resource guard on the number of distinct runs.
pub const MAX_RUNS: usize = 100_000;
/// Resource guard on the number of search states.
pub const MAX_STATES: usize = 2_000_000;
/// Resource guard on the size of one knowledge set.
pub const MAX_KNOWLEDGE: usize = 20_000;

const ATTACKER_PRINCIPAL: &str = "Attacker";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("bounds exceeded: {0}")]
    BoundsExceeded(String),
    #[error("attacker capability `{0}` is not a declared operator")]
    UnknownCapability(String),
    #[error("attacker channel type `{0}` is not declared")]
    UnknownChannelType(String),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// What one party knows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeState {
    pub owner: String,
    pub known: BTreeSet<Term>,
}

impl KnowledgeState {
    pub fn new(owner: &str, known: impl IntoIterator<Item = Term>) -> Self {
        KnowledgeState { owner: owner.to_string(), known: known.into_iter().collect() }
    }

    pub fn knows(&self, t: &Term) -> bool {
        self.known.contains(t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackerModel {
    /// Channel types the attacker reads and writes.
    pub channel_types: BTreeSet<String>,
    /// Operators the attacker may apply.
    pub capabilities: BTreeSet<String>,
    pub knowledge: BTreeSet<Term>,
}

impl Default for AttackerModel {
    fn default() -> Self {
        AttackerModel {
            channel_types: ["cyb".to_string()].into(),
            capabilities: BTreeSet::new(),
            knowledge: BTreeSet::new(),
        }
    }
}

impl AttackerModel {
    pub fn from_spec(spec: &AttackerSpec) -> Self {
        let mut m = AttackerModel {
            channel_types: spec.channel_types.clone(),
            capabilities: spec.capabilities.clone(),
            knowledge: spec.knowledge.iter().cloned().collect(),
        };
        if m.channel_types.is_empty() {
            m.channel_types = AttackerModel::default().channel_types;
        }
        m
    }

    /// The procedure's declared attacker, or the default one.
    pub fn for_procedure(proc: &Procedure) -> Self {
        proc.attacker.as_ref().map(AttackerModel::from_spec).unwrap_or_default()
    }

    pub fn with_capability(mut self, op: &str) -> Self {
        self.capabilities.insert(op.to_string());
        self
    }

    fn check(&self, proc: &Procedure) -> Result<(), ExploreError> {
        if let Some(c) = self.capabilities.iter().find(|c| proc.theory.operator(c).is_none()) {
            return Err(ExploreError::UnknownCapability(c.clone()));
        }
        if let Some(t) = self.channel_types.iter().find(|t| !proc.network.channel_types.contains(*t)) {
            return Err(ExploreError::UnknownChannelType(t.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationBounds {
    pub max_sessions: usize,
    pub max_attacker_events: usize,
    pub max_term_depth: usize,
}

impl Default for ExplorationBounds {
    fn default() -> Self {
        ExplorationBounds { max_sessions: 1, max_attacker_events: 1, max_term_depth: 3 }
    }
}

fn check_size(n: usize) -> Result<(), ExploreError> {
    if n > MAX_KNOWLEDGE {
        return Err(ExploreError::BoundsExceeded(format!("knowledge set exceeds {MAX_KNOWLEDGE} terms")));
    }
    Ok(())
}

/// All argument vectors of length `n` over `items`.
fn product(items: &[Term], n: usize) -> Result<Vec<Vec<Term>>, ExploreError> {
    let count = items.len().checked_pow(n as u32).unwrap_or(usize::MAX);
    if count > MAX_KNOWLEDGE * 10 {
        return Err(ExploreError::BoundsExceeded(format!("{count} candidate applications")));
    }
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                items.iter().map(move |t| {
                    let mut v = prefix.clone();
                    v.push(t.clone());
                    v
                })
            })
            .collect();
    }
    Ok(out)
}

/// Decomposition plus capability application (and optionally pairing) to a fixpoint,
/// keeping constructed terms within `depth`.
fn saturate(
    seed: impl IntoIterator<Item = Term>,
    theory: &TermTheory,
    capabilities: &BTreeSet<String>,
    depth: usize,
    pairing: bool,
) -> Result<BTreeSet<Term>, ExploreError> {
    let mut set = BTreeSet::new();
    let mut queue: Vec<Term> = seed.into_iter().map(|t| theory.normalize(&t)).collect();
    loop {
        while let Some(t) = queue.pop() {
            if set.insert(t.clone()) {
                queue.extend(easy_subterms(theory, &t).into_iter().filter(|s| !set.contains(s)));
            }
        }
        check_size(set.len())?;
        let items: Vec<Term> = set.iter().cloned().collect();
        let mut fresh = BTreeSet::new();
        for op in capabilities {
            let Some(decl) = theory.operator(op) else { continue };
            for args in product(&items, decl.arity)? {
                let t = theory.normalize(&Term::apply(op, args));
                if t.depth() <= depth && !set.contains(&t) {
                    fresh.insert(t);
                }
            }
        }
        if pairing {
            for a in &items {
                for b in &items {
                    let t = Term::pair(a.clone(), b.clone());
                    let long = matches!(&t, Term::Tuple(v) if v.len() > depth);
                    if t.depth() <= depth && !long && !set.contains(&t) {
                        fresh.insert(t);
                    }
                }
            }
        }
        if fresh.is_empty() {
            return Ok(set);
        }
        check_size(set.len() + fresh.len())?;
        queue.extend(fresh);
    }
}

/// Closes a knowledge set under decomposition, pairing and the given operators.
/// Constructed terms stay within `depth`; tuples have at most `depth` components.
pub fn attacker_closure(
    state: &KnowledgeState,
    theory: &TermTheory,
    capabilities: &BTreeSet<String>,
    depth: usize,
) -> Result<KnowledgeState, ExploreError> {
    let known = saturate(state.known.iter().cloned(), theory, capabilities, depth, true)?;
    Ok(KnowledgeState { owner: state.owner.clone(), known })
}

/// One enumerated run together with how it was built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploredRun {
    pub run: Run,
    pub sessions: usize,
    /// Sends injected by the attacker; taps are not counted.
    pub attacker_events: usize,
}

impl ExploredRun {
    pub fn flow_count(&self) -> usize {
        self.run.assignment.len()
    }
}

#[derive(Debug, Clone)]
pub struct Exploration {
    /// The procedure's network extended by the attacker node and its channels.
    pub network: ActorNetwork,
    pub attacker_node: String,
    /// Sorted by attacker events, then flows, then a canonical key.
    pub runs: Vec<ExploredRun>,
}

fn session_name(name: &str, s: usize) -> String {
    if s == 1 {
        name.to_string()
    } else {
        format!("{name}_s{s}")
    }
}

fn session_term(t: &Term, s: usize) -> Term {
    if s == 1 {
        return t.clone();
    }
    t.map(&|u| match u {
        Term::Var(v) => Some(Term::Var(session_name(v, s))),
        Term::Indet(v) => Some(Term::Indet(session_name(v, s))),
        _ => None,
    })
}

/// `n` disjoint copies of the process; names minted by the process are renamed per copy.
fn replicate(proc: &Process, n: usize, net: &ActorNetwork) -> Result<Process, ExploreError> {
    let mut p = Process::new(&format!("{}_x{n}", proc.name));
    for s in 1..=n {
        for ev in &proc.events {
            let kind = ev.kind.map_terms(&|t| session_term(t, s));
            p.add_event(LocalizedEvent::new(&session_name(&ev.point, s), kind, &ev.location), net)?;
        }
        for (a, b) in &proc.declared {
            p.add_precedence(&session_name(a, s), &session_name(b, s), net)?;
        }
    }
    Ok(p)
}

fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

/// Adds the attacker node with a tap and an injection channel per attacker channel.
fn extend_network(net: &ActorNetwork, model: &AttackerModel) -> (ActorNetwork, String) {
    let mut ext = net.clone();
    let node = fresh_name("M", &net.locations());
    let principal = fresh_name(ATTACKER_PRINCIPAL, &net.principals);
    ext.nodes.insert(node.clone());
    ext.principals.insert(principal.clone());
    ext.control.insert(node.clone(), principal);
    let mut ids: BTreeSet<String> = net.channels.iter().map(|c| c.id.clone()).collect();
    let mut seen = BTreeSet::new();
    for c in net.channels.iter().filter(|c| model.channel_types.contains(&c.ty)) {
        for (from, to) in [(c.entry.as_str(), node.as_str()), (node.as_str(), c.exit.as_str())] {
            if from == to || !seen.insert((from.to_string(), to.to_string(), c.ty.clone())) {
                continue;
            }
            let prefix = if to == node { "tap" } else { "inj" };
            let id = fresh_name(&format!("{prefix}_{}_{}", from.to_lowercase(), to.to_lowercase()), &ids);
            ids.insert(id.clone());
            ext.channels.push(Channel::new(&id, from, to, &c.ty));
        }
    }
    (ext, node)
}

/// A writer for one read, the bindings it produces and the attack it needs, if any.
type ReadOption = (Source, BTreeMap<String, Term>, Option<Attack>);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Source {
    Honest { writer: usize, channel: String },
    Attack { index: usize, channel: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Attack {
    payload: Term,
    /// Tapped honest sends with the tap channel used.
    taps: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    done: Vec<bool>,
    bindings: BTreeMap<String, Term>,
    payloads: BTreeMap<usize, Term>,
    feeds: BTreeMap<usize, Source>,
    attacks: Vec<Attack>,
}

struct Search<'a> {
    proc: &'a Process,
    net: &'a ActorNetwork,
    node: &'a str,
    theory: &'a TermTheory,
    model: &'a AttackerModel,
    bounds: ExplorationBounds,
    preds: Vec<Vec<usize>>,
    honest_channels: Vec<&'a Channel>,
    taps: Vec<&'a Channel>,
    injections: Vec<&'a Channel>,
    visited: HashSet<State>,
    states: usize,
    found: BTreeMap<String, (State, usize)>,
}

fn reader_parts(kind: &EventKind) -> Option<(&Term, Option<&Term>)> {
    match kind {
        EventKind::Receive { pattern, guard } => Some((pattern, guard.as_ref())),
        EventKind::Sample(t) => Some((t, None)),
        _ => None,
    }
}

impl<'a> Search<'a> {
    fn enabled(&self, st: &State, i: usize) -> bool {
        !st.done[i] && self.preds[i].iter().all(|&p| st.done[p])
    }

    /// Runs every enabled non-read event; they never depend on choices.
    fn advance(&self, st: &mut State) {
        loop {
            let next = (0..self.proc.len()).find(|&i| self.enabled(st, i) && !self.proc.events[i].kind.is_read());
            let Some(i) = next else { return };
            let ev = &self.proc.events[i];
            if ev.kind.is_write() {
                let p = self.theory.normalize(&ev.kind.payload().subst_vars(&st.bindings));
                st.payloads.insert(i, p);
            }
            st.done[i] = true;
        }
    }

    fn accepts(
        &self,
        pattern: &Term,
        guard: Option<&Term>,
        found: &Term,
        st: &State,
    ) -> Option<BTreeMap<String, Term>> {
        let expected = self.theory.normalize(&pattern.subst_vars(&st.bindings));
        let mut b = st.bindings.clone();
        if !match_pattern(&expected, found, &mut b) {
            return None;
        }
        if let Some(g) = guard {
            if !self.theory.eval_guard(&g.subst_vars(&b)) {
                return None;
            }
        }
        Some(b)
    }

    fn tappable(&self, st: &State) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for &w in st.payloads.keys() {
            let ev = &self.proc.events[w];
            if !matches!(ev.kind, EventKind::Send(_)) {
                continue;
            }
            if let Some(c) = self.taps.iter().find(|c| self.net.within(&c.entry, &ev.location)) {
                out.push((w, c.id.clone()));
            }
        }
        out
    }

    fn closure(&self, seed: impl IntoIterator<Item = Term>) -> Result<BTreeSet<Term>, ExploreError> {
        let seed: Vec<Term> = self.model.knowledge.iter().cloned().chain(seed).collect();
        saturate(seed, self.theory, &self.model.capabilities, self.bounds.max_term_depth, false)
    }

    /// Instances of `pattern` the attacker can build from `known`.
    fn synthesize(&self, pattern: &Term, known: &BTreeSet<Term>) -> Result<Vec<Term>, ExploreError> {
        let depth = self.bounds.max_term_depth;
        let mut out: Vec<Term> = match pattern {
            Term::Var(_) => known.iter().cloned().collect(),
            Term::Tuple(items) => {
                let mut acc: Vec<Vec<Term>> = vec![Vec::new()];
                for it in items {
                    let opts = self.synthesize(it, known)?;
                    acc = acc
                        .into_iter()
                        .flat_map(|p| {
                            opts.iter().map(move |o| {
                                let mut v = p.clone();
                                v.push(o.clone());
                                v
                            })
                        })
                        .collect();
                    check_size(acc.len())?;
                }
                acc.into_iter().map(Term::tuple).collect()
            }
            Term::Apply(op, args) => {
                let mut v: Vec<Term> =
                    known.iter().filter(|k| matches!(k, Term::Apply(g, _) if g == op)).cloned().collect();
                if self.model.capabilities.contains(op) {
                    let mut acc: Vec<Vec<Term>> = vec![Vec::new()];
                    for a in args {
                        let opts = self.synthesize(a, known)?;
                        acc = acc
                            .into_iter()
                            .flat_map(|p| {
                                opts.iter().map(move |o| {
                                    let mut w = p.clone();
                                    w.push(o.clone());
                                    w
                                })
                            })
                            .collect();
                        check_size(acc.len())?;
                    }
                    v.extend(acc.into_iter().map(|a| self.theory.normalize(&Term::apply(op, a))));
                }
                v
            }
            ground => known.iter().filter(|k| *k == ground).cloned().collect(),
        };
        out.retain(|t| t.depth() <= depth);
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Fewest tapped sends from which `t` can be built; ties go to the earliest points.
    fn minimal_taps(
        &self,
        t: &Term,
        tappable: &[(usize, String)],
        st: &State,
    ) -> Result<Option<Vec<(usize, String)>>, ExploreError> {
        let n = tappable.len();
        if n > 16 {
            return Err(ExploreError::BoundsExceeded(format!("{n} tappable sends")));
        }
        let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        for m in masks {
            let chosen: Vec<(usize, String)> =
                (0..n).filter(|i| m & (1 << i) != 0).map(|i| tappable[i].clone()).collect();
            let known = self.closure(chosen.iter().map(|(w, _)| st.payloads[w].clone()))?;
            if self.synthesize(t, &known)?.contains(t) {
                return Ok(Some(chosen));
            }
        }
        Ok(None)
    }

    fn options(&self, st: &State, r: usize) -> Result<Vec<ReadOption>, ExploreError> {
        let ev = &self.proc.events[r];
        let (pattern, guard) = reader_parts(&ev.kind).expect("reads only");
        let is_recv = matches!(ev.kind, EventKind::Receive { .. });
        let mut out = Vec::new();
        for (&w, found) in &st.payloads {
            let wev = &self.proc.events[w];
            let pairs = matches!(
                (&wev.kind, &ev.kind),
                (EventKind::Send(_), EventKind::Receive { .. }) | (EventKind::Emit(_), EventKind::Sample(_))
            );
            if !pairs {
                continue;
            }
            let Some(b) = self.accepts(pattern, guard, found, st) else { continue };
            for c in &self.honest_channels {
                if self.net.within(&c.entry, &wev.location) && self.net.within(&c.exit, &ev.location) {
                    out.push((Source::Honest { writer: w, channel: c.id.clone() }, b.clone(), None));
                }
            }
        }
        if !is_recv {
            return Ok(out);
        }
        let inj: Vec<&Channel> =
            self.injections.iter().copied().filter(|c| self.net.within(&c.exit, &ev.location)).collect();
        if inj.is_empty() {
            return Ok(out);
        }
        for (i, a) in st.attacks.iter().enumerate() {
            if let Some(b) = self.accepts(pattern, guard, &a.payload, st) {
                for c in &inj {
                    out.push((Source::Attack { index: i, channel: c.id.clone() }, b.clone(), None));
                }
            }
        }
        if st.attacks.len() < self.bounds.max_attacker_events {
            let tappable = self.tappable(st);
            let known = self.closure(tappable.iter().map(|(w, _)| st.payloads[w].clone()))?;
            let expected = self.theory.normalize(&pattern.subst_vars(&st.bindings));
            for cand in self.synthesize(&expected, &known)? {
                let Some(b) = self.accepts(pattern, guard, &cand, st) else { continue };
                let Some(taps) = self.minimal_taps(&cand, &tappable, st)? else { continue };
                let attack = Attack { payload: cand, taps };
                for c in &inj {
                    let src = Source::Attack { index: st.attacks.len(), channel: c.id.clone() };
                    out.push((src, b.clone(), Some(attack.clone())));
                }
            }
        }
        Ok(out)
    }

    fn explore(&mut self, mut st: State) -> Result<(), ExploreError> {
        self.advance(&mut st);
        if !self.visited.insert(st.clone()) {
            return Ok(());
        }
        self.states += 1;
        if self.states > MAX_STATES {
            return Err(ExploreError::BoundsExceeded(format!("more than {MAX_STATES} search states")));
        }
        let reads: Vec<usize> = (0..self.proc.len()).filter(|&i| self.enabled(&st, i)).collect();
        if reads.is_empty() {
            if st.done.iter().all(|d| *d) {
                self.record(st)?;
            }
            return Ok(());
        }
        for r in reads {
            for (src, bindings, attack) in self.options(&st, r)? {
                let mut next = st.clone();
                next.bindings = bindings;
                next.done[r] = true;
                next.feeds.insert(r, src);
                if let Some(a) = attack {
                    next.attacks.push(a);
                }
                self.explore(next)?;
            }
        }
        Ok(())
    }

    /// Renumbers attacks canonically and files the run under a canonical key.
    fn record(&mut self, st: State) -> Result<(), ExploreError> {
        let mut order: Vec<usize> = (0..st.attacks.len()).collect();
        let readers_of = |i: usize| -> Vec<usize> {
            st.feeds
                .iter()
                .filter(|(_, s)| matches!(s, Source::Attack { index, .. } if *index == i))
                .map(|(r, _)| *r)
                .collect()
        };
        order.sort_by_key(|&i| (st.attacks[i].clone(), readers_of(i)));
        let renumber: BTreeMap<usize, usize> = order.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let mut canon = st.clone();
        canon.attacks = order.iter().map(|&i| st.attacks[i].clone()).collect();
        for src in canon.feeds.values_mut() {
            if let Source::Attack { index, .. } = src {
                *index = renumber[index];
            }
        }
        let key = format!("{:?}|{:?}", canon.attacks, canon.feeds);
        if !self.found.contains_key(&key) {
            if self.found.len() >= MAX_RUNS {
                return Err(ExploreError::BoundsExceeded(format!("more than {MAX_RUNS} runs")));
            }
            let flows = canon.feeds.len() + canon.attacks.iter().map(|a| a.taps.len()).sum::<usize>();
            self.found.insert(key, (canon, flows));
        }
        Ok(())
    }

    fn build(&self, st: &State, name: &str) -> Result<Run, ExploreError> {
        let mut p = self.proc.clone();
        let mut taken: BTreeSet<String> = p.events.iter().map(|e| e.point.clone()).collect();
        let mut attack_points = Vec::new();
        let mut tap_flows = Vec::new();
        for (i, a) in st.attacks.iter().enumerate() {
            let send = fresh_name(&format!("atk{}", i + 1), &taken);
            taken.insert(send.clone());
            let mut tap_points = Vec::new();
            for (j, (w, ch)) in a.taps.iter().enumerate() {
                let tap = fresh_name(&format!("tap{}_{}", i + 1, j + 1), &taken);
                taken.insert(tap.clone());
                let kind = EventKind::Receive { pattern: Term::var(&tap), guard: None };
                p.add_event(LocalizedEvent::new(&tap, kind, self.node), self.net)?;
                tap_flows.push((tap.clone(), self.proc.events[*w].point.clone(), ch.clone()));
                tap_points.push(tap);
            }
            p.add_event(LocalizedEvent::new(&send, EventKind::Send(a.payload.clone()), self.node), self.net)?;
            for tap in &tap_points {
                p.add_precedence(tap, &send, self.net)?;
            }
            attack_points.push(send);
        }
        let mut run = Run::new(name, Arc::new(p));
        for (&r, src) in &st.feeds {
            let reader = &self.proc.events[r].point;
            match src {
                Source::Honest { writer, channel } => {
                    run.assign_flow(self.net, reader, &self.proc.events[*writer].point, channel)?
                }
                Source::Attack { index, channel } => {
                    run.assign_flow(self.net, reader, &attack_points[*index], channel)?
                }
            }
        }
        for (tap, writer, ch) in tap_flows {
            run.assign_flow(self.net, &tap, &writer, &ch)?;
        }
        Ok(run)
    }
}

/// Enumerates the complete sound runs of 1..=`max_sessions` copies of the process,
/// with at most `max_attacker_events` injected sends.
pub fn enumerate_runs(
    proc: &Procedure,
    attacker: &AttackerModel,
    bounds: &ExplorationBounds,
) -> Result<Exploration, ExploreError> {
    attacker.check(proc)?;
    let (net, node) = extend_network(&proc.network, attacker);
    let mut all = Vec::new();
    for n in 1..=bounds.max_sessions {
        let sessioned = replicate(&proc.process, n, &net)?;
        let closure = sessioned.closure();
        let preds =
            (0..sessioned.len()).map(|j| (0..sessioned.len()).filter(|&i| closure.get(i, j)).collect()).collect();
        let honest_channels = proc.network.channels.iter().filter_map(|c| net.channel(&c.id)).collect();
        let taps = net.channels.iter().filter(|c| c.exit == node).collect();
        let injections = net.channels.iter().filter(|c| c.entry == node).collect();
        let mut search = Search {
            proc: &sessioned,
            net: &net,
            node: &node,
            theory: &proc.theory,
            model: attacker,
            bounds: *bounds,
            preds,
            honest_channels,
            taps,
            injections,
            visited: HashSet::new(),
            states: 0,
            found: BTreeMap::new(),
        };
        let start = State {
            done: vec![false; sessioned.len()],
            bindings: BTreeMap::new(),
            payloads: BTreeMap::new(),
            feeds: BTreeMap::new(),
            attacks: Vec::new(),
        };
        search.explore(start)?;
        let mut found: Vec<(usize, usize, String, State)> =
            search.found.iter().map(|(k, (st, flows))| (st.attacks.len(), *flows, k.clone(), st.clone())).collect();
        found.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
        for (attacks, _, _, st) in found {
            all.push((n, attacks, search.build(&st, "")?));
        }
    }
    all.sort_by_key(|(n, a, run)| (*a, run.assignment.len(), *n));
    let runs = all
        .into_iter()
        .enumerate()
        .map(|(i, (sessions, attacker_events, mut run))| {
            run.name = format!("explored_{}", i + 1);
            Arc::make_mut(&mut run.process).name = format!("{}_{}", proc.process.name, run.name);
            ExploredRun { run, sessions, attacker_events }
        })
        .collect();
    Ok(Exploration { network: net, attacker_node: node, runs })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds { runs_checked: usize },
    Counterexample(Box<ExploredRun>),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }
}

fn holds(f: &Formula, r: &ExploredRun, x: &Exploration, theory: &TermTheory) -> Result<bool, ExploreError> {
    Ok(holds_in_run(f, &r.run, &x.network, theory)?)
}

/// Checks `implication` on every enumerated run; the first failure in run order is minimal.
pub fn semantic_validate(
    implication: &Formula,
    proc: &Procedure,
    attacker: &AttackerModel,
    bounds: &ExplorationBounds,
) -> Result<Verdict, ExploreError> {
    let x = enumerate_runs(proc, attacker, bounds)?;
    for r in &x.runs {
        if !holds(implication, r, &x, &proc.theory)? {
            return Ok(Verdict::Counterexample(Box::new(r.clone())));
        }
    }
    Ok(Verdict::Holds { runs_checked: x.runs.len() })
}

/// Reference version of [`semantic_validate`]: evaluate everything, then pick the minimum.
pub fn semantic_validate_naive(
    implication: &Formula,
    proc: &Procedure,
    attacker: &AttackerModel,
    bounds: &ExplorationBounds,
) -> Result<Verdict, ExploreError> {
    let x = enumerate_runs(proc, attacker, bounds)?;
    let mut failing = Vec::new();
    for (i, r) in x.runs.iter().enumerate() {
        let (premise, _) = implication.as_implication();
        if holds(&premise, r, &x, &proc.theory)? && !holds(implication, r, &x, &proc.theory)? {
            failing.push((r.attacker_events, r.flow_count(), i));
        }
    }
    match failing.into_iter().min() {
        Some((_, _, i)) => Ok(Verdict::Counterexample(Box::new(x.runs[i].clone()))),
        None => Ok(Verdict::Holds { runs_checked: x.runs.len() }),
    }
}

/// A self-contained document holding the theory, the extended network, the run's process and the run.
pub fn export_run(x: &Exploration, r: &ExploredRun, theory: &TermTheory) -> SpecDocument {
    let p = &r.run.process;
    let covers = p.covers();
    let mut strands: Vec<StrandDecl> = Vec::new();
    let mut linked = BTreeSet::new();
    for ev in &p.events {
        let decl = EventDecl { point: ev.point.clone(), kind: ev.kind.clone(), location: None };
        let slot = strands.iter_mut().find(|s| {
            s.location == ev.location
                && s.events.last().is_some_and(|last| covers.contains(&(last.point.clone(), ev.point.clone())))
        });
        match slot {
            Some(s) => {
                linked.insert((s.events.last().unwrap().point.clone(), ev.point.clone()));
                s.events.push(decl);
            }
            None => strands.push(StrandDecl { location: ev.location.clone(), events: vec![decl] }),
        }
    }
    let order = covers.into_iter().filter(|c| !linked.contains(c)).collect();
    let mut network = x.network.clone();
    network.name = format!("{}_attacked", x.network.name);
    let mut th = theory.clone();
    th.name = format!("{}_{}", theory.name, r.run.name);
    let process =
        ProcessDecl { name: p.name.clone(), network: network.name.clone(), theory: th.name.clone(), strands, order };
    let mut flows: Vec<FlowDecl> = r
        .run
        .flows()
        .map(|f| FlowDecl { writer: f.writer.clone(), channel: f.channel.id.clone(), reader: f.reader.clone() })
        .collect();
    flows.sort_by(|a, b| (&a.reader, &a.writer).cmp(&(&b.reader, &b.writer)));
    let run = RunDecl { name: r.run.name.clone(), process: p.name.clone(), flows };
    let mut doc = SpecDocument::default();
    doc.theories.push(th);
    doc.networks.push(network);
    doc.processes.push(process);
    doc.runs.push(run);
    doc
}
