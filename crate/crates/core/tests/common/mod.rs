//! Generators and brute-force oracles shared by the property suites.
#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use anp::network::{ActorNetwork, Channel};
use anp::process::{EventKind, LocalizedEvent, Process, ProcessError};
use anp::run::Run;
use anp::term::{AxiomTag, OperatorDecl, Term, TermTheory, Transparency};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn corpus(name: &str) -> String {
    let path = format!("{}/corpus/{name}.anp", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub const CORPUS: [&str; 5] = ["cr_sig", "cap", "handshake", "handshake_two_round", "cyber3"];

// ---- terms ----

pub fn algebra_theory() -> TermTheory {
    let mut th = TermTheory::new("algebra");
    th.declare(OperatorDecl::opaque("H", 2).with_tag(AxiomTag::Injective)).unwrap();
    th.declare(OperatorDecl::opaque("E", 2)).unwrap();
    th.declare(OperatorDecl::opaque("D", 2)).unwrap();
    th.declare(OperatorDecl::transparent("f", 1)).unwrap();
    let mut g = OperatorDecl::opaque("g", 2);
    g.transparency = vec![Transparency::Transparent, Transparency::Opaque];
    th.declare(g).unwrap();
    th.declare(OperatorDecl::opaque("sig", 1)).unwrap();
    th.declare(OperatorDecl::opaque("V", 2).with_tag(AxiomTag::VerifierOf("sig".into()))).unwrap();
    th.constants.extend(["a", "b", "c"].map(String::from));
    th.add_rewrite(
        Term::apply("D", vec![Term::var("k"), Term::apply("E", vec![Term::var("k"), Term::var("m")])]),
        Term::var("m"),
    )
    .unwrap();
    th
}

fn leaf() -> impl Strategy<Value = Term> {
    prop_oneof![
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::constant),
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::indet),
        prop::sample::select(vec!["u", "w"]).prop_map(Term::var),
    ]
}

/// Terms over [`algebra_theory`], tuples flattened by construction.
pub fn term() -> impl Strategy<Value = Term> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Term::tuple),
            (prop::sample::select(vec!["H", "E", "D", "g", "V"]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Term::apply(op, vec![a, b])),
            (prop::sample::select(vec!["f", "sig"]), inner).prop_map(|(op, a)| Term::apply(op, vec![a])),
        ]
    })
}

pub fn non_tuple_term() -> impl Strategy<Value = Term> {
    term().prop_filter("not a tuple", |t| !matches!(t, Term::Tuple(_)))
}

/// A bijective renaming of the indeterminates `x`, `y`, `z`.
pub fn renaming() -> impl Strategy<Value = BTreeMap<String, String>> {
    let targets = vec!["x", "y", "z", "p", "q", "r"];
    Just(targets)
        .prop_shuffle()
        .prop_map(|t| ["x", "y", "z"].iter().zip(t).map(|(a, b)| (a.to_string(), b.to_string())).collect())
}

/// Easy subterms computed straight from the transparency annotations.
pub fn easy_oracle(th: &TermTheory, t: &Term) -> BTreeSet<Term> {
    let mut out = BTreeSet::from([t.clone()]);
    match t {
        Term::Tuple(items) => {
            for i in items {
                out.extend(easy_oracle(th, i));
            }
        }
        Term::Apply(op, args) => {
            let decl = th.operator(op).expect("declared operator");
            for (a, tr) in args.iter().zip(&decl.transparency) {
                if *tr == Transparency::Transparent {
                    out.extend(easy_oracle(th, a));
                }
            }
        }
        _ => {}
    }
    out
}

/// True when some `D(k, E(k, m))` redex remains.
pub fn has_redex(t: &Term) -> bool {
    let mut found = false;
    t.walk(&mut |s| {
        if let Term::Apply(op, args) = s {
            if op == "D" {
                if let Term::Apply(inner, iargs) = &args[1] {
                    found |= inner == "E" && iargs[0] == args[0];
                }
            }
        }
    });
    found
}

// ---- processes ----

/// Nodes `N1..N5` under the configurations `Q1 = {N1, N2}` and `Q2 = {Q1, N3}`,
/// with one channel per ordered node pair.
pub fn pomset_network() -> ActorNetwork {
    let mut net = ActorNetwork::new("pomsets");
    net.principals.extend(["A", "B"].map(String::from));
    let nodes = ["N1", "N2", "N3", "N4", "N5"];
    net.nodes.extend(nodes.map(String::from));
    net.channel_types.insert("cyb".into());
    net.configs.insert("Q1".into(), ["N1", "N2"].map(String::from).into());
    net.configs.insert("Q2".into(), ["Q1", "N3"].map(String::from).into());
    for (i, l) in LOCATIONS.iter().enumerate() {
        net.control.insert(l.to_string(), if i % 2 == 0 { "A" } else { "B" }.to_string());
    }
    for a in nodes {
        for b in nodes {
            if a != b {
                net.channels.push(Channel::new(&format!("{a}_{b}"), a, b, "cyb"));
            }
        }
    }
    assert!(net.validate().is_empty());
    net
}

pub const LOCATIONS: [&str; 7] = ["N1", "N2", "N3", "N4", "N5", "Q1", "Q2"];

/// Nodes underneath a location, computed from the literal membership lists.
pub fn members(loc: &str) -> BTreeSet<&'static str> {
    match loc {
        "Q1" => ["N1", "N2"].into(),
        "Q2" => ["N1", "N2", "N3"].into(),
        n => [LOCATIONS.into_iter().find(|l| *l == n).unwrap()].into(),
    }
}

pub fn comparable_oracle(a: &str, b: &str) -> bool {
    let (ma, mb) = (members(a), members(b));
    ma.is_subset(&mb) || mb.is_subset(&ma)
}

/// Reachability over explicit edges, by depth-first search from every vertex.
pub fn reach(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for s in 0..n {
        let mut stack: Vec<usize> = edges.iter().filter(|e| e.0 == s).map(|e| e.1).collect();
        while let Some(v) = stack.pop() {
            if !r[s][v] {
                r[s][v] = true;
                stack.extend(edges.iter().filter(|e| e.0 == v).map(|e| e.1));
            }
        }
    }
    r
}

pub enum Attempt {
    Accepted,
    Cycle,
    Unrelated,
}

/// What adding `a -> b` must do given the currently accepted edges.
pub fn expected_attempt(events: &[LocalizedEvent], edges: &[(usize, usize)], a: usize, b: usize) -> Attempt {
    let before = reach(events.len(), edges);
    if a == b || before[b][a] {
        return Attempt::Cycle;
    }
    let mut with = edges.to_vec();
    with.push((a, b));
    let after = reach(events.len(), &with);
    for x in 0..events.len() {
        for y in 0..events.len() {
            if after[x][y] && !comparable_oracle(&events[x].location, &events[y].location) {
                return Attempt::Unrelated;
            }
        }
    }
    Attempt::Accepted
}

pub struct ProcessCase {
    pub process: Process,
    /// Precedence attempts with the actual outcome.
    pub attempts: Vec<((usize, usize), Result<(), ProcessError>)>,
    /// Edges accepted so far, by index.
    pub edges: Vec<(usize, usize)>,
    /// Attempts whose outcome differs from the oracle's prediction.
    pub mismatches: Vec<String>,
}

pub fn random_event(rng: &mut StdRng, i: usize) -> LocalizedEvent {
    let loc = *LOCATIONS.choose(rng).unwrap();
    let c = Term::constant(["a", "b", "c"].choose(rng).unwrap());
    let kind = match rng.gen_range(0..4) {
        0 => EventKind::Send(c),
        1 => EventKind::Receive { pattern: Term::var(&format!("v{i}")), guard: None },
        2 => EventKind::Emit(c),
        _ => EventKind::Sample(Term::var(&format!("v{i}"))),
    };
    LocalizedEvent::new(&format!("p{i}"), kind, loc)
}

/// A random process; each attempted precedence is recorded with its result and
/// compared with the oracle's prediction.
pub fn random_process(seed: u64, net: &ActorNetwork) -> ProcessCase {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..10);
    let mut process = Process::new(&format!("random{seed}"));
    for i in 0..n {
        process.add_event(random_event(&mut rng, i), net).unwrap();
    }
    let mut attempts = Vec::new();
    let mut edges = Vec::new();
    let mut mismatches = Vec::new();
    for _ in 0..rng.gen_range(0..2 * n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let expected = expected_attempt(&process.events, &edges, a, b);
        let (pa, pb) = (process.events[a].point.clone(), process.events[b].point.clone());
        let got = process.add_precedence(&pa, &pb, net);
        match (&expected, &got) {
            (Attempt::Accepted, Ok(())) => edges.push((a, b)),
            (Attempt::Cycle, Err(ProcessError::CycleIntroduced { .. }))
            | (Attempt::Unrelated, Err(ProcessError::SubliminalSynchronization { .. })) => {}
            _ => mismatches.push(format!("seed {seed}: adding {pa} -> {pb} gave {got:?}")),
        }
        attempts.push(((a, b), got));
    }
    ProcessCase { process, attempts, edges, mismatches }
}

/// Assigns each read a random compatible writer and channel; `None` when some read has none.
pub fn random_run(seed: u64, process: &Arc<Process>, net: &ActorNetwork) -> Option<(Run, Vec<(usize, usize)>)> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    let mut run = Run::new("random", process.clone());
    let mut flows = Vec::new();
    for (r, re) in process.events.iter().enumerate() {
        if !re.kind.is_read() {
            continue;
        }
        let mut options = Vec::new();
        for (w, we) in process.events.iter().enumerate() {
            let pairs = matches!(
                (&we.kind, &re.kind),
                (EventKind::Send(_), EventKind::Receive { .. }) | (EventKind::Emit(_), EventKind::Sample(_))
            );
            if !pairs {
                continue;
            }
            for ch in &net.channels {
                if members(&we.location).contains(ch.entry.as_str()) && members(&re.location).contains(ch.exit.as_str())
                {
                    options.push((w, ch.id.clone()));
                }
            }
        }
        let (w, ch) = options.choose(&mut rng)?.clone();
        run.assign_flow(net, &re.point, &process.events[w].point, &ch).unwrap();
        flows.push((w, r));
    }
    Some((run, flows))
}

// ---- documents ----

/// A random, valid `.anp` document exercising every block kind.
pub fn random_document(seed: u64) -> String {
    let mut g = DocGen { rng: StdRng::seed_from_u64(seed) };
    g.document(seed)
}

struct DocGen {
    rng: StdRng,
}

impl DocGen {
    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs.choose(&mut self.rng).unwrap()
    }

    fn term(&mut self, depth: usize, ops: &[(&str, usize)], consts: &[&str]) -> String {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return match self.rng.gen_range(0..3) {
                0 => self.pick(consts).to_string(),
                1 => self.pick(&["x", "y", "n1"]).to_string(),
                _ => format!("?{}", self.pick(&["m", "k"])),
            };
        }
        if self.rng.gen_bool(0.25) {
            let a = self.term(depth - 1, ops, consts);
            let b = self.term(depth - 1, ops, consts);
            return format!("({a}, {b})");
        }
        let (op, arity) = *ops.choose(&mut self.rng).unwrap();
        let args: Vec<String> = (0..arity).map(|_| self.term(depth - 1, ops, consts)).collect();
        format!("{op}({})", args.join(", "))
    }

    fn ground_term(&mut self, ops: &[(&str, usize)], consts: &[&str]) -> String {
        let t = self.term(2, ops, consts);
        if t.contains('?') {
            self.pick(consts).to_string()
        } else {
            t
        }
    }

    fn event(&mut self, locs: &[&str], ops: &[(&str, usize)], consts: &[&str]) -> String {
        let kind = self.pick(&["send", "recv", "emit", "sample", "write", "read", "gen", "cmp"]);
        let star = if self.rng.gen_bool(0.2) { "*" } else { "" };
        let arg = self.ground_term(ops, consts);
        format!("{kind}{star}({arg})@{}", self.pick(locs))
    }

    fn atom(&mut self, locs: &[&str], ops: &[(&str, usize)], consts: &[&str]) -> String {
        match self.rng.gen_range(0..9) {
            0 => {
                let a = self.ground_term(ops, consts);
                let b = self.ground_term(ops, consts);
                format!("{a} == {b}")
            }
            1 => format!("X = {}", self.pick(locs)),
            2 => format!("X <= {}", self.pick(locs)),
            3 => format!("knows({}, {})", self.pick(locs), self.ground_term(ops, consts)),
            4 => format!("local ok({})", self.ground_term(ops, consts)),
            5 => format!("orig {}", self.event(locs, ops, consts)),
            6 => format!("ctl(A, {})", self.pick(locs)),
            7 => {
                let n = self.rng.gen_range(2..4);
                let evs: Vec<String> = (0..n).map(|_| self.event(locs, ops, consts)).collect();
                evs.join(" -> ")
            }
            _ => self.event(locs, ops, consts),
        }
    }

    fn formula(&mut self, depth: usize, locs: &[&str], ops: &[(&str, usize)], consts: &[&str]) -> String {
        if depth == 0 {
            return self.atom(locs, ops, consts);
        }
        match self.rng.gen_range(0..6) {
            0 => {
                let a = self.formula(depth - 1, locs, ops, consts);
                let b = self.formula(depth - 1, locs, ops, consts);
                format!("{a} & {b}")
            }
            1 => {
                let a = self.formula(depth - 1, locs, ops, consts);
                let b = self.formula(depth - 1, locs, ops, consts);
                format!("({a} | {b})")
            }
            2 => format!("exists v. {}", self.formula(depth - 1, locs, ops, consts)),
            3 => format!("not {}", self.event(locs, ops, consts)),
            4 => "true".to_string(),
            _ => self.atom(locs, ops, consts),
        }
    }

    fn implication(&mut self, locs: &[&str], ops: &[(&str, usize)], consts: &[&str]) -> String {
        let p = self.formula(1, locs, ops, consts);
        let c = self.formula(2, locs, ops, consts);
        format!("{p} => {c}")
    }

    fn document(&mut self, seed: u64) -> String {
        let mut ops: Vec<(&str, usize)> = vec![("sig", 1), ("V", 2)];
        let mut theory = String::from("  op sig/1 opaque injective;\n  op V/2 opaque verifier(sig);\n");
        for (name, arity, attrs) in [
            ("H", 2, "opaque injective"),
            ("f", 1, "transparent"),
            ("g", 2, "(transparent, opaque)"),
            ("E", 2, "opaque"),
        ] {
            if self.rng.gen_bool(0.6) {
                theory.push_str(&format!("  op {name}/{arity} {attrs};\n"));
                ops.push((name, arity));
            }
        }
        let consts = ["k1", "k2", "s"];
        theory.push_str("  const k1, k2, s;\n");
        if ops.iter().any(|o| o.0 == "E") && self.rng.gen_bool(0.5) {
            theory.push_str("  op D/2 opaque;\n  rewrite D(?k, E(?k, ?m)) -> ?m;\n");
        }

        let n = self.rng.gen_range(2..6);
        let nodes: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
        let mut locs: Vec<String> = nodes.clone();
        let mut net = String::from("  principals A, B;\n");
        net.push_str(&format!("  nodes {};\n", nodes.join(", ")));
        net.push_str("  types cyb, vis;\n");
        let nested = n >= 3 && self.rng.gen_bool(0.5);
        if n >= 2 && self.rng.gen_bool(0.6) {
            net.push_str("  config Q0 = {N0, N1};\n");
            locs.push("Q0".into());
            if nested {
                net.push_str("  config Q1 = {Q0, N2};\n");
                locs.push("Q1".into());
            }
        }
        let (mut a_ctl, mut b_ctl) = (Vec::new(), Vec::new());
        for l in &locs {
            if self.rng.gen_bool(0.5) { &mut a_ctl } else { &mut b_ctl }.push(l.clone());
        }
        if !a_ctl.is_empty() {
            net.push_str(&format!("  control A: {};\n", a_ctl.join(", ")));
        }
        if !b_ctl.is_empty() {
            net.push_str(&format!("  control B: {};\n", b_ctl.join(", ")));
        }
        let mut channels = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.rng.gen_bool(0.4) {
                    let id = format!("c{i}{j}");
                    let ty = self.pick(&["cyb", "vis"]);
                    let flag = match self.rng.gen_range(0..6) {
                        0 => " [auch.m.2]",
                        1 => " [auch.p.1, auch.m.1]",
                        _ => "",
                    };
                    net.push_str(&format!("  channel {id}: N{i} -{ty}-> N{j}{flag};\n"));
                    channels.push((id, i, j));
                }
            }
        }
        if channels.is_empty() {
            net.push_str("  channel c01: N0 -cyb-> N1;\n");
            channels.push(("c01".into(), 0, 1));
        }

        // Each strand is a chain at one node; flows pair a send with a matching receive.
        let mut strands: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let mut flows = Vec::new();
        let mut point = 0;
        let mut gens = 0;
        for _ in 0..self.rng.gen_range(1..5) {
            let (id, i, j) = channels.choose(&mut self.rng).unwrap().clone();
            let payload = self.ground_term(&ops, &consts);
            let (w, r) = (format!("p{point}"), format!("p{}", point + 1));
            point += 2;
            strands.entry(i).or_default().push(format!("{w}: send({payload});"));
            let pattern = if self.rng.gen_bool(0.5) { payload.clone() } else { format!("?m{point}") };
            strands.entry(j).or_default().push(format!("{r}: recv({pattern});"));
            flows.push(format!("flow {w} -{id}-> {r};"));
        }
        for _ in 0..self.rng.gen_range(0..4) {
            let at = self.rng.gen_range(0..n);
            let kind = match self.rng.gen_range(0..5) {
                0 => format!("emit({})", self.ground_term(&ops, &consts)),
                1 => format!("cmp({}, {})", self.pick(&consts), self.pick(&consts)),
                2 => {
                    gens += 1;
                    format!("gen(g{gens})")
                }
                3 => format!("ok({}, ?m{point})", self.pick(&consts)),
                _ => format!("assign(store, {})", self.pick(&consts)),
            };
            strands.entry(at).or_default().push(format!("p{point}: {kind};"));
            point += 1;
        }
        let mut process = String::from("  network net;\n  theory th;\n");
        for (at, evs) in &strands {
            process.push_str(&format!("  strand N{at} {{\n"));
            for e in evs {
                process.push_str(&format!("    {e}\n"));
            }
            process.push_str("  }\n");
        }
        let mut run = String::new();
        for f in &flows {
            run.push_str(&format!("  {f}\n"));
        }

        let lrefs: Vec<&str> = locs.iter().map(String::as_str).collect();
        let mut procedure = String::from("  process proc;\n  secure run1;\n");
        let naxioms = self.rng.gen_range(1..4);
        for i in 0..naxioms {
            let holes = if self.rng.gen_bool(0.5) { " (t, Z)" } else { "" };
            let f = self.implication(&lrefs, &ops, &consts);
            procedure.push_str(&format!("  axiom a{i}{holes}: {f};\n"));
        }
        let claim = self.implication(&lrefs, &ops, &consts);
        procedure.push_str(&format!("  claim goal: {claim};\n"));
        procedure.push_str("  attacker {\n    channels cyb;\n");
        if self.rng.gen_bool(0.5) {
            procedure.push_str("    capabilities sig;\n");
        }
        if self.rng.gen_bool(0.5) {
            procedure.push_str(&format!("    knows {};\n", self.pick(&consts)));
        }
        procedure.push_str("  }\n");

        let mut proof = String::from("  procedure proc;\n");
        proof.push_str(&format!("  assume obs: {};\n", self.formula(1, &lrefs, &ops, &consts)));
        proof.push_str(&format!("  step 1: obs gives {};\n", self.formula(1, &lrefs, &ops, &consts)));
        let ax = self.rng.gen_range(0..naxioms);
        proof.push_str(&format!("  step 2: a{ax} gives {};\n", self.formula(1, &lrefs, &ops, &consts)));
        let node = self.pick(&lrefs).to_string();
        let t = self.ground_term(&ops, &consts);
        proof.push_str(&format!(
            "  step 3: orig.m [P := {node}, t := {t}], a0 gives {};\n",
            self.formula(1, &lrefs, &ops, &consts)
        ));
        proof.push_str(&format!("  qed {};\n", self.formula(2, &lrefs, &ops, &consts)));

        format!(
            "# random document {seed}\n\
             theory th {{\n{theory}}}\n\n\
             network net {{\n{net}}}\n\n\
             process proc {{\n{process}}}\n\n\
             run run1 of proc {{\n{run}}}\n\n\
             procedure proc {{\n{procedure}}}\n\n\
             proof pf for A {{\n{proof}}}\n"
        )
    }
}

// ---- proof mutations ----

pub struct Mutation {
    pub what: String,
    pub env: anp::run::Procedure,
    /// Zero-based index of the first step citing the assumption.
    pub citing_step: usize,
}

/// One weakened environment per assumption the script cites: procedure axioms are
/// removed or replaced by `true`, channel flags cited by `auch.*` are cleared.
pub fn cited_assumptions(script: &anp::pdl::Derivation, env: &anp::run::Procedure) -> Vec<Mutation> {
    use anp::network::AuthFlag;
    use anp::pdl::{BindValue, Formula};
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, step) in script.steps.iter().enumerate() {
        for j in &step.justifications {
            if env.axiom(&j.axiom).is_some() && seen.insert(j.axiom.clone()) {
                let mut removed = env.clone();
                removed.axioms.retain(|a| a.name != j.axiom);
                out.push(Mutation { what: format!("remove axiom {}", j.axiom), env: removed, citing_step: i });
                let mut weakened = env.clone();
                for a in weakened.axioms.iter_mut().filter(|a| a.name == j.axiom) {
                    a.formula = Formula::truth();
                }
                out.push(Mutation { what: format!("weaken axiom {}", j.axiom), env: weakened, citing_step: i });
            }
            let channel = match j.bindings.get("ch") {
                Some(BindValue::Term(t)) => t.name().map(str::to_string),
                _ => None,
            };
            if let (Some(flag), Some(ch)) = (AuthFlag::from_name(&j.axiom), channel) {
                if seen.insert(format!("{ch}/{}", j.axiom)) {
                    let mut cleared = env.clone();
                    for c in cleared.network.channels.iter_mut().filter(|c| c.id == ch) {
                        c.flags.remove(&flag);
                    }
                    out.push(Mutation { what: format!("clear {} on {ch}", j.axiom), env: cleared, citing_step: i });
                }
            }
        }
    }
    out
}
