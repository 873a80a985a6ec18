//! Step-by-step derivation checking.

use std::collections::{BTreeMap, BTreeSet};

use crate::run::Procedure;
use crate::term::{easy_subterms, Term};

use super::axioms::{instantiate_procedure_axiom, instantiate_schema, AxiomSchema, HoleSort, Instance};
use super::facts::{dnf, Branch, Closure, Ctx, Fresh};
use super::formula::{Atom, EventDesc, Formula, Loc, Subst};
use super::{Derivation, PdlError, ProofStatus, Stage, Step, OBSERVATIONS};

/// Facts established so far, as alternative branches.
#[derive(Debug, Clone)]
pub struct ProofState {
    pub branches: Vec<Branch>,
    /// Names in use; claim binders must avoid them.
    pub names: BTreeSet<String>,
    /// Binders introduced by claims.
    pub eigen: BTreeSet<String>,
    pub owned: BTreeSet<String>,
    pub observed: Vec<EventDesc>,
    fresh: Fresh,
}

impl ProofState {
    /// The asserter's starting state: its observations, with its own locations fully observed.
    pub fn new(env: &Procedure, principal: &str, observations: &Formula) -> Result<ProofState, PdlError> {
        if !env.network.principals.contains(principal) {
            return Err(PdlError::UnknownPrincipal(principal.to_string()));
        }
        let owned = env.network.controlled_by(principal);
        let mut observed = Vec::new();
        for a in observations.atoms() {
            for e in a.events() {
                if !observed.contains(e) {
                    observed.push(e.clone());
                }
            }
        }
        let mut names = observations.all_names();
        names.extend(env.network.locations());
        names.extend(env.theory.constants.iter().cloned());
        let mut fresh = Fresh::default();
        let branches = dnf(observations, &mut Some(&mut fresh));
        let st = ProofState { branches, names, eigen: BTreeSet::new(), owned, observed, fresh };
        let st = st.pruned(env);
        if st.branches.is_empty() {
            return Err(PdlError::UnjustifiedStep("observations are inconsistent".into()));
        }
        Ok(st)
    }

    fn ctx<'a>(&self, env: &'a Procedure) -> Ctx<'a> {
        Ctx { network: &env.network, theory: &env.theory, owned: self.owned.clone(), observed: self.observed.clone() }
    }

    fn pruned(mut self, env: &Procedure) -> ProofState {
        let ctx = self.ctx(env);
        let mut seen = BTreeSet::new();
        let mut keep = Vec::new();
        for mut b in std::mem::take(&mut self.branches) {
            b.pos.sort();
            b.pos.dedup();
            b.neg.sort();
            b.neg.dedup();
            if !seen.insert((b.pos.clone(), b.neg.clone())) {
                continue;
            }
            if Closure::new(&ctx, b.clone()).is_consistent() {
                keep.push(b);
            }
        }
        self.branches = keep;
        self
    }

    /// Holds in every consistent branch.
    pub fn entails(&self, env: &Procedure, f: &Formula) -> bool {
        let ctx = self.ctx(env);
        self.branches.iter().all(|b| Closure::new(&ctx, b.clone()).entails(f))
    }
}

fn instance(name: &str, bindings: &BTreeMap<String, super::BindValue>, env: &Procedure) -> Result<Instance, PdlError> {
    if let Some(schema) = AxiomSchema::from_name(name) {
        instantiate_schema(schema, bindings, env, false)
    } else if let Some(ax) = env.axiom(name) {
        instantiate_procedure_axiom(ax, bindings, env, false)
    } else {
        Err(PdlError::UnknownAxiomName(name.to_string()))
    }
}

fn is_open(name: &str) -> bool {
    name.starts_with('$')
}

fn bind_term(s: &mut Subst, k: &str, v: &Term) -> bool {
    match s.terms.get(k) {
        Some(old) => old == v,
        None => {
            s.terms.insert(k.to_string(), v.clone());
            true
        }
    }
}

fn unify_term(p: &Term, t: &Term, s: &mut Subst) -> bool {
    if let Some(n) = p.name() {
        if is_open(n) && p.children().is_empty() {
            return bind_term(s, n, t);
        }
    }
    match (p, t) {
        (Term::Tuple(a), Term::Tuple(b)) | (Term::Apply(_, a), Term::Apply(_, b)) => {
            if let (Term::Apply(f, _), Term::Apply(g, _)) = (p, t) {
                if f != g {
                    return false;
                }
            }
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| unify_term(x, y, s))
        }
        _ => p == t,
    }
}

fn unify_loc(p: &Loc, l: &Loc, s: &mut Subst) -> bool {
    match p {
        Loc::Var(n) if is_open(n) => match s.locs.get(n) {
            Some(old) => old == l,
            None => {
                s.locs.insert(n.clone(), l.clone());
                true
            }
        },
        _ => p == l,
    }
}

fn unify_event(p: &EventDesc, e: &EventDesc, env: &Procedure, out: &mut Vec<Subst>, base: &Subst) {
    if !e.kind.refines(&p.kind) {
        return;
    }
    let mut s = base.clone();
    if !unify_loc(&p.loc, &e.loc, &mut s) {
        return;
    }
    let cands: Vec<Term> =
        if p.contains { easy_subterms(&env.theory, &e.arg).into_iter().collect() } else { vec![e.arg.clone()] };
    for c in cands {
        let mut s2 = s.clone();
        if unify_term(&p.arg, &c, &mut s2) {
            out.push(s2);
        }
    }
}

/// Candidate bindings for the open holes of one premise atom against known facts.
fn match_atom(p: &Atom, facts: &[Atom], env: &Procedure, base: &Subst) -> Vec<Subst> {
    let mut out = Vec::new();
    let events: Vec<&EventDesc> = facts.iter().flat_map(|a| a.events()).collect();
    match p {
        Atom::Happened(pe) | Atom::OriginatesAt(_, pe) => {
            for e in &events {
                unify_event(pe, e, env, &mut out, base);
            }
        }
        Atom::Before(x, y) => {
            let mut firsts = Vec::new();
            for e in &events {
                unify_event(x, e, env, &mut firsts, base);
            }
            for f in firsts {
                for e in &events {
                    unify_event(&y.subst(&f), e, env, &mut out, &f);
                }
            }
        }
        Atom::EqualTerms(a, b) => {
            for f in facts {
                if let Atom::EqualTerms(c, d) = f {
                    for (u, v) in [(c, d), (d, c)] {
                        let mut s = base.clone();
                        if unify_term(a, u, &mut s) && unify_term(b, v, &mut s) {
                            out.push(s);
                        }
                    }
                }
            }
        }
        Atom::Holds(a) => {
            for f in facts {
                if let Atom::Holds(c) = f {
                    let mut s = base.clone();
                    if unify_term(a, c, &mut s) {
                        out.push(s);
                    }
                }
            }
        }
        Atom::Knows(l, a) => {
            for f in facts {
                if let Atom::Knows(m, c) = f {
                    let mut s = base.clone();
                    if unify_loc(l, m, &mut s) && unify_term(a, c, &mut s) {
                        out.push(s);
                    }
                }
            }
        }
        Atom::LocalHistoryFact(tag, a) => {
            for f in facts {
                if let Atom::LocalHistoryFact(t2, c) = f {
                    let mut s = base.clone();
                    if tag == t2 && unify_term(a, c, &mut s) {
                        out.push(s);
                    }
                }
            }
        }
        _ => {}
    }
    out
}

fn all_bound(open: &[(String, HoleSort)], s: &Subst) -> bool {
    open.iter().all(|(h, _)| s.terms.contains_key(h) || s.locs.contains_key(h))
}

/// Assignments for the open holes worth trying in one branch.
fn candidates(inst: &Instance, branch: &Branch, cl: &Closure, env: &Procedure) -> Vec<Subst> {
    if inst.open.is_empty() {
        return vec![Subst::default()];
    }
    let mut facts: Vec<Atom> = branch.pos.clone();
    facts.extend(branch.pos.iter().map(|a| cl.atom(a)));
    let mut partials = vec![Subst::default()];
    for p in inst.premise.atoms() {
        let mut next = Vec::new();
        for s in &partials {
            next.extend(match_atom(&p.subst(s), &facts, env, s));
        }
        if !next.is_empty() {
            partials = next;
            partials.dedup();
        }
    }
    let (locs, terms) = cl.domain();
    let mut out = Vec::new();
    for s in partials {
        fill(&inst.open, s, &locs, &terms, &mut out);
    }
    out.sort_by_key(|s| format!("{s:?}"));
    out.dedup();
    out
}

fn fill(open: &[(String, HoleSort)], s: Subst, locs: &[Loc], terms: &[Term], out: &mut Vec<Subst>) {
    if all_bound(open, &s) {
        out.push(s);
        return;
    }
    let (h, sort) = open.iter().find(|(h, _)| !s.terms.contains_key(h) && !s.locs.contains_key(h)).unwrap();
    if *sort == HoleSort::Location {
        for l in locs {
            let mut s2 = s.clone();
            s2.locs.insert(h.clone(), l.clone());
            fill(open, s2, locs, terms, out);
        }
    } else {
        for t in terms {
            let mut s2 = s.clone();
            s2.terms.insert(h.clone(), t.clone());
            fill(open, s2, locs, terms, out);
        }
    }
}

/// Checks one step; on success returns the state extended by the cited conclusions and the claim.
pub fn check_step(state: &ProofState, step: &Step, env: &Procedure) -> Result<ProofState, PdlError> {
    let mut st = state.clone();
    for j in &step.justifications {
        if j.axiom == OBSERVATIONS && j.bindings.is_empty() {
            continue;
        }
        let inst = instance(&j.axiom, &j.bindings, env)?;
        let ctx = st.ctx(env);
        let mut used = false;
        let mut next = Vec::new();
        for b in &st.branches {
            let cl = Closure::new(&ctx, b.clone());
            let mut acc = vec![b.clone()];
            for s in candidates(&inst, b, &cl, env) {
                if !cl.entails(&inst.premise.subst(&s)) {
                    continue;
                }
                used = true;
                let parts = dnf(&inst.conclusion.subst(&s), &mut Some(&mut st.fresh));
                acc = acc.iter().flat_map(|a| parts.iter().map(move |p| a.merged(p))).collect();
            }
            next.extend(acc);
        }
        if !used {
            return Err(PdlError::UnjustifiedStep(format!("premise of `{}` is not established", j.axiom)));
        }
        st.branches = next;
        st = st.pruned(env);
        if st.branches.is_empty() {
            return Err(PdlError::UnjustifiedStep(format!("`{}` contradicts the observations", j.axiom)));
        }
    }
    if !st.entails(env, &step.claim) {
        return Err(PdlError::UnjustifiedStep(format!("claim `{}` does not follow", step.claim)));
    }
    let binders = step.claim.binders();
    for v in &binders {
        if st.names.contains(v) {
            return Err(PdlError::UnjustifiedStep(format!("`{v}` is not fresh")));
        }
    }
    let claim_parts = dnf(&step.claim, &mut None);
    st.branches = st.branches.iter().flat_map(|b| claim_parts.iter().map(move |p| b.merged(p))).collect();
    st.names.extend(step.claim.all_names());
    st.names.extend(binders.iter().cloned());
    st.eigen.extend(binders);
    let st = st.pruned(env);
    Ok(st)
}

/// Checks a whole script; the returned copy carries the status.
pub fn check_proof(script: &Derivation, env: &Procedure) -> Derivation {
    let mut out = script.clone();
    out.status = run_proof(script, env);
    out
}

fn run_proof(script: &Derivation, env: &Procedure) -> ProofStatus {
    let reject = |stage, e: PdlError| ProofStatus::Rejected { stage, reason: e.to_string() };
    let mut st = match ProofState::new(env, &script.principal, &script.observations) {
        Ok(s) => s,
        Err(e) => return reject(Stage::Observations, e),
    };
    for (i, step) in script.steps.iter().enumerate() {
        match check_step(&st, step, env) {
            Ok(s) => st = s,
            Err(e) => return reject(Stage::Step(i), e),
        }
    }
    let escaped: Vec<String> = script.goal.free_names().intersection(&st.eigen).cloned().collect();
    if !escaped.is_empty() {
        return reject(
            Stage::Goal,
            PdlError::UnjustifiedStep(format!("eigenvariables escape: {}", escaped.join(", "))),
        );
    }
    if !st.entails(env, &script.goal) {
        return reject(Stage::Goal, PdlError::UnjustifiedStep("goal is not entailed".into()));
    }
    ProofStatus::Accepted
}
