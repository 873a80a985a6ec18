//! Closure of a set of ground facts: equalities, event nodes, order paths and consistency.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::network::ActorNetwork;
use crate::term::{is_easy_subterm, Term, TermTheory};

use super::formula::{is_loc_name, Atom, EvKind, EventDesc, Formula, Loc, Subst};

/// What the checker knows beyond the facts themselves.
#[derive(Debug, Clone)]
pub struct Ctx<'a> {
    pub network: &'a ActorNetwork,
    pub theory: &'a TermTheory,
    /// Locations whose local history is fully observed.
    pub owned: BTreeSet<String>,
    pub observed: Vec<EventDesc>,
}

/// One disjunct: positive and negated atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Branch {
    pub pos: Vec<Atom>,
    pub neg: Vec<Atom>,
}

impl Branch {
    pub fn merged(&self, other: &Branch) -> Branch {
        let mut b = self.clone();
        b.pos.extend(other.pos.iter().cloned());
        b.neg.extend(other.neg.iter().cloned());
        b
    }
}

/// Source of fresh skolem names.
#[derive(Debug, Clone, Default)]
pub struct Fresh {
    next: usize,
}

impl Fresh {
    pub fn subst_for(&mut self, vars: &[String]) -> Subst {
        let mut s = Subst::default();
        for v in vars {
            self.next += 1;
            let base = v.trim_start_matches('~');
            if is_loc_name(v) {
                s.locs.insert(v.clone(), Loc::Var(format!("_{base}{}", self.next)));
            } else {
                s.terms.insert(v.clone(), Term::Const(format!("_{base}{}", self.next)));
            }
        }
        s
    }
}

/// Disjunctive normal form. Existentials are skolemized with fresh names when `fresh`
/// is given, and keep their binder names otherwise. Nested implications are dropped.
pub fn dnf(f: &Formula, fresh: &mut Option<&mut Fresh>) -> Vec<Branch> {
    match f {
        Formula::Atom(a) => vec![Branch { pos: vec![a.clone()], neg: vec![] }],
        Formula::Not(a) => vec![Branch { pos: vec![], neg: vec![a.clone()] }],
        Formula::And(fs) => {
            let mut acc = vec![Branch::default()];
            for g in fs {
                let parts = dnf(g, fresh);
                acc = acc.iter().flat_map(|a| parts.iter().map(move |p| a.merged(p))).collect();
            }
            acc
        }
        Formula::Or(fs) => fs.iter().flat_map(|g| dnf(g, fresh)).collect(),
        Formula::Exists(vs, body) => match fresh {
            Some(fr) => {
                let s = fr.subst_for(vs);
                dnf(&body.subst(&s), fresh)
            }
            None => dnf(body, fresh),
        },
        Formula::Implies(..) => vec![Branch::default()],
    }
}

/// Congruence closure over terms seeded by equality facts.
#[derive(Debug, Clone, Default)]
struct Terms {
    map: HashMap<Term, Term>,
}

fn weight(t: &Term) -> (usize, &Term) {
    (t.size(), t)
}

impl Terms {
    fn build(eqs: &[(Term, Term)], theory: &TermTheory) -> Terms {
        let mut tm = Terms::default();
        for _ in 0..64 {
            let mut changed = false;
            let keys: Vec<Term> = tm.map.keys().cloned().collect();
            for k in keys {
                let kc = tm.canon_children(&k, theory);
                if kc != k && !tm.map.contains_key(&kc) {
                    let v = tm.canon(&tm.map[&k].clone(), theory);
                    if kc != v {
                        tm.link(kc, v);
                        changed = true;
                    }
                }
            }
            for (a, b) in eqs {
                let (ca, cb) = (tm.canon(a, theory), tm.canon(b, theory));
                if ca != cb {
                    tm.link(ca, cb);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        tm
    }

    /// Structured terms represent a class when that creates no cycle; otherwise the smaller term.
    fn link(&mut self, a: Term, b: Term) {
        let leaf = |t: &Term| t.children().is_empty() && t.name().is_some();
        let occurs = |n: &Term, t: &Term| n.name().is_some_and(|n| t.mentions(n));
        if leaf(&a) && !leaf(&b) && !occurs(&a, &b) {
            self.map.insert(a, b);
        } else if leaf(&b) && !leaf(&a) && !occurs(&b, &a) {
            self.map.insert(b, a);
        } else if weight(&a) > weight(&b) {
            self.map.insert(a, b);
        } else {
            self.map.insert(b, a);
        }
    }

    fn canon_children(&self, t: &Term, theory: &TermTheory) -> Term {
        let rebuilt = match t {
            Term::Tuple(items) => Term::tuple(items.iter().map(|i| self.canon(i, theory)).collect()),
            Term::Apply(op, args) => Term::Apply(op.clone(), args.iter().map(|a| self.canon(a, theory)).collect()),
            other => other.clone(),
        };
        theory.normalize(&rebuilt)
    }

    fn canon(&self, t: &Term, theory: &TermTheory) -> Term {
        let mut cur = self.canon_children(t, theory);
        for _ in 0..64 {
            match self.map.get(&cur) {
                Some(next) => cur = self.canon_children(next, theory),
                None => break,
            }
        }
        cur
    }
}

/// Union-find over locations; declared names win as representatives.
#[derive(Debug, Clone, Default)]
struct Locs {
    parent: BTreeMap<Loc, Loc>,
}

impl Locs {
    fn find(&self, l: &Loc) -> Loc {
        let mut cur = l.clone();
        while let Some(p) = self.parent.get(&cur) {
            cur = p.clone();
        }
        cur
    }

    /// Returns the two names when distinct declared locations would be identified.
    fn union(&mut self, a: &Loc, b: &Loc) -> Option<(String, String)> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        match (&ra, &rb) {
            (Loc::Named(x), Loc::Named(y)) => Some((x.clone(), y.clone())),
            (Loc::Named(_), _) => {
                self.parent.insert(rb, ra);
                None
            }
            (_, Loc::Named(_)) => {
                self.parent.insert(ra, rb);
                None
            }
            _ => {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                self.parent.insert(hi, lo);
                None
            }
        }
    }
}

/// Everything derivable from one branch of facts without citing axioms.
pub struct Closure<'a> {
    ctx: &'a Ctx<'a>,
    branch: Branch,
    terms: Terms,
    locs: Locs,
    nodes: Vec<EventDesc>,
    alias: Vec<usize>,
    edges: BTreeSet<(usize, usize)>,
    origs: Vec<(Term, usize)>,
    within: BTreeSet<(Loc, Loc)>,
    facts: BTreeSet<Atom>,
    negs: Vec<Atom>,
    conflict: Option<String>,
}

impl<'a> Closure<'a> {
    pub fn new(ctx: &'a Ctx<'a>, branch: Branch) -> Closure<'a> {
        let theory = ctx.theory;
        let eqs: Vec<(Term, Term)> = branch
            .pos
            .iter()
            .filter_map(|a| match a {
                Atom::EqualTerms(x, y) => Some((x.clone(), y.clone())),
                _ => None,
            })
            .collect();
        let terms = Terms::build(&eqs, theory);
        let mut cl = Closure {
            ctx,
            branch,
            terms,
            locs: Locs::default(),
            nodes: Vec::new(),
            alias: Vec::new(),
            edges: BTreeSet::new(),
            origs: Vec::new(),
            within: BTreeSet::new(),
            facts: BTreeSet::new(),
            negs: Vec::new(),
            conflict: None,
        };
        cl.build_locs();
        cl.build_nodes();
        cl.check_consistency();
        cl
    }

    fn build_locs(&mut self) {
        let pos = self.branch.pos.clone();
        for a in &pos {
            if let Atom::EqualLocs(x, y) = a {
                self.union(x, y);
            }
        }
        // A value is generated at one place only.
        let mut gens: BTreeMap<Term, Loc> = BTreeMap::new();
        for a in &pos {
            for e in a.events() {
                if e.kind == EvKind::Gen && !e.contains {
                    let t = self.term(&e.arg);
                    match gens.get(&t).cloned() {
                        Some(l) => self.union(&l, &e.loc),
                        None => {
                            gens.insert(t, e.loc.clone());
                        }
                    }
                }
            }
        }
    }

    fn union(&mut self, a: &Loc, b: &Loc) {
        if let Some((x, y)) = self.locs.union(a, b) {
            self.conflict.get_or_insert(format!("distinct locations {x} and {y} identified"));
        }
    }

    pub fn term(&self, t: &Term) -> Term {
        self.terms.canon(t, self.ctx.theory)
    }

    pub fn loc(&self, l: &Loc) -> Loc {
        self.locs.find(l)
    }

    pub fn desc(&self, e: &EventDesc) -> EventDesc {
        EventDesc { kind: e.kind.clone(), arg: self.term(&e.arg), contains: e.contains, loc: self.loc(&e.loc) }
    }

    pub fn atom(&self, a: &Atom) -> Atom {
        match a {
            Atom::Happened(e) => Atom::Happened(self.desc(e)),
            Atom::Before(x, y) => Atom::Before(self.desc(x), self.desc(y)),
            Atom::OriginatesAt(t, e) => Atom::OriginatesAt(self.term(t), self.desc(e)),
            Atom::EqualTerms(x, y) => Atom::EqualTerms(self.term(x), self.term(y)),
            Atom::EqualLocs(x, y) => Atom::EqualLocs(self.loc(x), self.loc(y)),
            Atom::Within(x, y) => Atom::Within(self.loc(x), self.loc(y)),
            Atom::ControlledBy(l, p) => Atom::ControlledBy(self.loc(l), p.clone()),
            Atom::Holds(t) => Atom::Holds(self.term(t)),
            Atom::Knows(l, t) => Atom::Knows(self.loc(l), self.term(t)),
            Atom::LocalHistoryFact(tag, t) => Atom::LocalHistoryFact(tag.clone(), self.term(t)),
        }
    }

    fn node(&mut self, e: &EventDesc) -> usize {
        let d = self.desc(e);
        if let Some(i) = self.nodes.iter().position(|n| *n == d) {
            return i;
        }
        self.nodes.push(d);
        self.alias.push(self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn build_nodes(&mut self) {
        let pos = self.branch.pos.clone();
        let observed: Vec<usize> = self.ctx.observed.iter().map(|e| self.node(e)).collect();
        let mut raw_edges = Vec::new();
        let mut raw_origs = Vec::new();
        for a in &pos {
            match a {
                Atom::Happened(e) => {
                    self.node(e);
                }
                Atom::Before(x, y) => {
                    let (i, j) = (self.node(x), self.node(y));
                    raw_edges.push((i, j));
                }
                Atom::OriginatesAt(t, e) => {
                    let i = self.node(e);
                    raw_origs.push((self.term(t), i));
                }
                Atom::Within(x, y) => {
                    let w = (self.loc(x), self.loc(y));
                    self.within.insert(w);
                }
                other => {
                    let c = self.atom(other);
                    self.facts.insert(c);
                }
            }
        }
        // Complete local history: an event at an owned location is one of the observed ones.
        for n in 0..self.nodes.len() {
            if observed.contains(&n) {
                continue;
            }
            let Loc::Named(l) = &self.nodes[n].loc else { continue };
            if !self.ctx.owned.contains(l) {
                continue;
            }
            let cands: BTreeSet<usize> = observed
                .iter()
                .copied()
                .filter(|&o| o != n && self.describes(&self.nodes[o], &self.nodes[n]))
                .collect();
            match cands.len() {
                0 => {
                    let msg = format!("{} is not in the observed history of {l}", self.nodes[n]);
                    self.conflict.get_or_insert(msg);
                }
                1 => self.alias[n] = *cands.iter().next().unwrap(),
                _ => {}
            }
        }
        for (i, j) in raw_edges {
            self.edges.insert((self.alias[i], self.alias[j]));
        }
        for (t, i) in raw_origs {
            self.origs.push((t, self.alias[i]));
        }
        self.negs = self.branch.neg.clone();
    }

    fn check_consistency(&mut self) {
        if self.conflict.is_some() {
            return;
        }
        let net = self.ctx.network;
        for i in self.reps() {
            let n = &self.nodes[i];
            if let Loc::Named(l) = &n.loc {
                if n.kind.is_write() && !net.has_outgoing(l) {
                    self.conflict = Some(format!("{n}: no channel leaves {l}"));
                    return;
                }
                if n.kind.is_read() && !net.has_incoming(l) {
                    self.conflict = Some(format!("{n}: no channel enters {l}"));
                    return;
                }
            }
        }
        for neg in self.negs.clone() {
            if self.holds(&neg) {
                self.conflict = Some(format!("negated fact `{neg}` holds"));
                return;
            }
        }
    }

    pub fn conflict(&self) -> Option<&str> {
        self.conflict.as_deref()
    }

    pub fn is_consistent(&self) -> bool {
        self.conflict.is_none()
    }

    fn reps(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.alias[i] == i).collect()
    }

    pub fn loc_within(&self, a: &Loc, b: &Loc) -> bool {
        if a == b || self.within.contains(&(a.clone(), b.clone())) {
            return true;
        }
        match (a, b) {
            (Loc::Named(x), Loc::Named(y)) => self.ctx.network.within(x, y),
            _ => false,
        }
    }

    /// `n` is an event fitting the description `m`; both canonical.
    pub fn describes(&self, n: &EventDesc, m: &EventDesc) -> bool {
        if !n.kind.refines(&m.kind) || !self.loc_within(&n.loc, &m.loc) {
            return false;
        }
        if m.contains {
            is_easy_subterm(self.ctx.theory, &m.arg, &n.arg)
        } else {
            !n.contains && n.arg == m.arg
        }
    }

    fn matching(&self, d: &EventDesc) -> Vec<usize> {
        self.reps().into_iter().filter(|&i| self.describes(&self.nodes[i], d)).collect()
    }

    fn before(&self, a: &EventDesc, b: &EventDesc) -> bool {
        let targets: BTreeSet<usize> = self.matching(b).into_iter().collect();
        if targets.is_empty() {
            return false;
        }
        let reps = self.reps();
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<(usize, bool)> = self.matching(a).into_iter().map(|i| (i, false)).collect();
        while let Some((n, strict)) = queue.pop_front() {
            if strict && targets.contains(&n) {
                return true;
            }
            if !seen.insert((n, strict)) {
                continue;
            }
            for &(x, y) in &self.edges {
                if x == n {
                    queue.push_back((y, true));
                }
            }
            // The originating write comes no later than any write containing the term.
            for (t, o) in &self.origs {
                if *o != n {
                    continue;
                }
                for &w in &reps {
                    let wd = &self.nodes[w];
                    if w != n && wd.kind.is_write() && is_easy_subterm(self.ctx.theory, t, &wd.arg) {
                        queue.push_back((w, strict));
                    }
                }
            }
        }
        false
    }

    /// Positive atom entailed by this branch.
    pub fn holds(&self, a: &Atom) -> bool {
        match self.atom(a) {
            Atom::Happened(d) => !self.matching(&d).is_empty(),
            Atom::Before(x, y) => self.before(&x, &y),
            Atom::OriginatesAt(t, d) => {
                self.origs.iter().any(|(t0, n)| *t0 == t && self.describes(&self.nodes[*n], &d))
            }
            Atom::EqualTerms(x, y) => x == y,
            Atom::EqualLocs(x, y) => x == y,
            Atom::Within(x, y) => self.loc_within(&x, &y),
            Atom::ControlledBy(Loc::Named(l), p) if self.ctx.network.control.get(&l) == Some(&p) => true,
            other => self.facts.contains(&other),
        }
    }

    /// Negated atom entailed: stored as negative or contradicting the branch.
    pub fn refutes(&self, a: &Atom) -> bool {
        let ca = self.atom(a);
        if self.negs.iter().any(|n| self.atom(n) == ca) {
            return true;
        }
        let mut b = self.branch.clone();
        b.pos.push(a.clone());
        !Closure::new(self.ctx, b).is_consistent()
    }

    fn extended(&self, extra: &Branch) -> Closure<'a> {
        Closure::new(self.ctx, self.branch.merged(extra))
    }

    /// Candidate values for existential search.
    pub fn domain(&self) -> (Vec<Loc>, Vec<Term>) {
        let mut locs: BTreeSet<Loc> = self.ctx.network.locations().into_iter().map(Loc::Named).collect();
        let mut terms = BTreeSet::new();
        for a in &self.branch.pos {
            for l in a.locs() {
                locs.insert(self.loc(l));
            }
            for t in a.terms() {
                terms.extend(self.term(t).subterms());
            }
        }
        for e in &self.ctx.observed {
            terms.extend(self.term(&e.arg).subterms());
        }
        terms.insert(Term::Check);
        (locs.into_iter().collect(), terms.into_iter().collect())
    }

    pub fn entails(&self, f: &Formula) -> bool {
        if !self.is_consistent() {
            return true;
        }
        match f {
            Formula::Atom(a) => self.holds(a),
            Formula::Not(a) => self.refutes(a),
            Formula::And(fs) => fs.iter().all(|g| self.entails(g)),
            Formula::Or(fs) => fs.iter().any(|g| self.entails(g)),
            Formula::Implies(p, c) => {
                let mut fresh = Fresh::default();
                dnf(p, &mut Some(&mut fresh)).iter().all(|b| {
                    let ext = self.extended(b);
                    !ext.is_consistent() || ext.entails(c)
                })
            }
            Formula::Exists(vs, body) => {
                let (locs, terms) = self.domain();
                self.search(vs, &Subst::default(), body, &locs, &terms)
            }
        }
    }

    fn search(&self, vs: &[String], s: &Subst, body: &Formula, locs: &[Loc], terms: &[Term]) -> bool {
        let Some((v, rest)) = vs.split_first() else {
            return self.entails(&body.subst(s));
        };
        if is_loc_name(v) {
            locs.iter().any(|l| {
                let mut s2 = s.clone();
                s2.locs.insert(v.clone(), l.clone());
                self.search(rest, &s2, body, locs, terms)
            })
        } else {
            terms.iter().any(|t| {
                let mut s2 = s.clone();
                s2.terms.insert(v.clone(), t.clone());
                self.search(rest, &s2, body, locs, terms)
            })
        }
    }

    /// Canonical event nodes with their order edges, for rendering.
    pub fn graph(&self) -> (Vec<EventDesc>, Vec<(usize, usize)>) {
        let reps = self.reps();
        let pos: HashMap<usize, usize> = reps.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let nodes = reps.iter().map(|&i| self.nodes[i].clone()).collect();
        let edges = self.edges.iter().filter_map(|(a, b)| Some((*pos.get(a)?, *pos.get(b)?))).collect();
        (nodes, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Channel;

    fn net() -> ActorNetwork {
        let mut n = ActorNetwork::new("cr");
        n.principals = ["A", "B"].iter().map(|s| s.to_string()).collect();
        n.nodes = ["P", "Q"].iter().map(|s| s.to_string()).collect();
        n.channel_types.insert("cyb".into());
        n.channels = vec![Channel::new("pq", "P", "Q", "cyb"), Channel::new("qp", "Q", "P", "cyb")];
        n.control.insert("P".into(), "B".into());
        n.control.insert("Q".into(), "A".into());
        n
    }

    fn ev(kind: EvKind, arg: Term, loc: &str) -> EventDesc {
        let l =
            if is_loc_name(loc) && !["P", "Q"].contains(&loc) { Loc::Var(loc.into()) } else { Loc::Named(loc.into()) };
        EventDesc::new(kind, arg, l)
    }

    #[test]
    fn transitive_order_and_equalities() {
        let n = net();
        let th = TermTheory::default();
        let ctx = Ctx { network: &n, theory: &th, owned: BTreeSet::new(), observed: vec![] };
        let x = Term::indet("x");
        let u = Term::constant("u");
        let a = ev(EvKind::Send, x.clone(), "P");
        let b = ev(EvKind::Recv, x.clone(), "X");
        let c = ev(EvKind::Send, u.clone(), "X");
        let pos = vec![
            Atom::Before(a.clone(), b.clone()),
            Atom::Before(b.clone(), c.clone()),
            Atom::EqualTerms(u.clone(), Term::pair(x.clone(), x.clone())),
        ];
        let cl = Closure::new(&ctx, Branch { pos, neg: vec![] });
        assert!(cl.is_consistent());
        let c2 = ev(EvKind::Send, Term::pair(x.clone(), x.clone()), "X");
        assert!(cl.holds(&Atom::Before(a.clone(), c2)));
        assert!(!cl.holds(&Atom::Before(c.clone(), a.clone())));
        assert!(cl.holds(&Atom::Happened(EventDesc::containing(EvKind::Write, x, Loc::Var("X".into())))));
    }

    #[test]
    fn unique_generation_identifies_locations() {
        let n = net();
        let th = TermTheory::default();
        let ctx = Ctx { network: &n, theory: &th, owned: BTreeSet::new(), observed: vec![] };
        let x = Term::indet("x");
        let pos =
            vec![Atom::Happened(ev(EvKind::Gen, x.clone(), "P")), Atom::Happened(ev(EvKind::Gen, x.clone(), "X"))];
        let cl = Closure::new(&ctx, Branch { pos: pos.clone(), neg: vec![] });
        assert!(cl.holds(&Atom::EqualLocs(Loc::Var("X".into()), Loc::Named("P".into()))));
        let mut clash = pos;
        clash.push(Atom::Happened(ev(EvKind::Gen, x, "Q")));
        assert!(!Closure::new(&ctx, Branch { pos: clash, neg: vec![] }).is_consistent());
    }

    #[test]
    fn owned_history_is_complete() {
        let n = net();
        let th = TermTheory::default();
        let x = Term::indet("x");
        let seen = ev(EvKind::Send, x.clone(), "P");
        let ctx = Ctx { network: &n, theory: &th, owned: ["P".to_string()].into(), observed: vec![seen.clone()] };
        let emit = EventDesc::containing(EvKind::Emit, x.clone(), Loc::Named("P".into()));
        let cl = Closure::new(&ctx, Branch { pos: vec![Atom::Happened(seen.clone())], neg: vec![] });
        assert!(cl.refutes(&Atom::Happened(emit)));
        let some_send = EventDesc::containing(EvKind::Send, x.clone(), Loc::Named("P".into()));
        let later = ev(EvKind::Recv, x, "Q");
        let pos = vec![Atom::Happened(seen.clone()), Atom::Before(some_send, later.clone())];
        let cl = Closure::new(&ctx, Branch { pos, neg: vec![] });
        assert!(cl.holds(&Atom::Before(seen, later)));
    }

    #[test]
    fn dnf_splits_disjunctions() {
        let x = Term::indet("x");
        let a = Formula::Atom(Atom::Holds(x.clone()));
        let b = Formula::Atom(Atom::Knows(Loc::Named("P".into()), x.clone()));
        let f = Formula::and(vec![a.clone(), Formula::or(vec![b, Formula::Not(Atom::Holds(x))])]);
        let parts = dnf(&f, &mut None);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1].neg.len(), 1);
    }
}
