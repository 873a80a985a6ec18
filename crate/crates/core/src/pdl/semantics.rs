//! Truth of formulas in a concrete run.

use std::collections::{BTreeMap, BTreeSet};

use crate::network::ActorNetwork;
use crate::process::origination_points;
use crate::run::{Run, RunError, RunOrder};
use crate::term::{easy_subterms, match_pattern, Term, TermTheory};

use super::formula::{Atom, EventDesc, Formula, Loc};
use super::view::describe_event;

/// Values for the free names of a formula.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Env {
    pub terms: BTreeMap<String, Term>,
    pub locs: BTreeMap<String, String>,
}

/// A run prepared for evaluation: resolved events and their order.
pub struct Semantics<'a> {
    net: &'a ActorNetwork,
    theory: &'a TermTheory,
    points: Vec<(String, EventDesc)>,
    events: Vec<crate::process::LocalizedEvent>,
    order: RunOrder,
}

impl<'a> Semantics<'a> {
    pub fn new(run: &Run, net: &'a ActorNetwork, theory: &'a TermTheory) -> Result<Semantics<'a>, RunError> {
        let order = run.run_order()?;
        let bindings = run.check_complete(theory)?.bindings;
        let events = run.resolved_events(&bindings, theory);
        let points = events.iter().map(|e| (e.point.clone(), describe_event(e))).collect();
        Ok(Semantics { net, theory, points, events, order })
    }

    /// Names that are neither declared constants nor locations become pattern variables.
    fn prepare(&self, f: &Formula) -> Formula {
        let mut s = super::formula::Subst::default();
        for n in f.all_names() {
            if !self.theory.constants.contains(&n) && !self.net.is_declared(&n) {
                s.terms.insert(n.clone(), Term::var(&n));
            }
        }
        subst_all(f, &s)
    }

    pub fn holds(&self, f: &Formula) -> bool {
        !self.eval(&self.prepare(f), &Env::default()).is_empty()
    }

    /// Solutions of `f` extending `env`.
    pub fn solutions(&self, f: &Formula) -> Vec<Env> {
        self.eval(&self.prepare(f), &Env::default())
    }

    fn eval(&self, f: &Formula, env: &Env) -> Vec<Env> {
        match f {
            Formula::Atom(a) => self.atom(a, env),
            Formula::Not(a) => {
                if self.atom(a, env).is_empty() {
                    vec![env.clone()]
                } else {
                    vec![]
                }
            }
            Formula::And(fs) => {
                let mut acc = vec![env.clone()];
                for g in fs {
                    let mut next: Vec<Env> = acc.iter().flat_map(|e| self.eval(g, e)).collect();
                    next.sort();
                    next.dedup();
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            Formula::Or(fs) => {
                let mut out: Vec<Env> = fs.iter().flat_map(|g| self.eval(g, env)).collect();
                out.sort();
                out.dedup();
                out
            }
            Formula::Implies(p, c) => {
                if self.eval(p, env).iter().all(|e| !self.eval(c, e).is_empty()) {
                    vec![env.clone()]
                } else {
                    vec![]
                }
            }
            Formula::Exists(vs, body) => {
                let mut inner = env.clone();
                for v in vs {
                    inner.terms.remove(v);
                    inner.locs.remove(v);
                }
                let mut out: Vec<Env> = self
                    .eval(body, &inner)
                    .into_iter()
                    .map(|mut e| {
                        for v in vs {
                            e.terms.remove(v);
                            e.locs.remove(v);
                            if let Some(t) = env.terms.get(v) {
                                e.terms.insert(v.clone(), t.clone());
                            }
                            if let Some(l) = env.locs.get(v) {
                                e.locs.insert(v.clone(), l.clone());
                            }
                        }
                        e
                    })
                    .collect();
                out.sort();
                out.dedup();
                out
            }
        }
    }

    fn term(&self, t: &Term, env: &Env) -> Term {
        let t = t.subst_vars(&env.terms);
        if t.vars().is_empty() {
            self.theory.normalize(&t)
        } else {
            t
        }
    }

    fn bind_loc(&self, l: &Loc, actual: Option<&str>, env: &Env) -> Vec<Env> {
        match l {
            Loc::Named(n) => match actual {
                Some(a) if self.net.within(a, n) => vec![env.clone()],
                Some(_) => vec![],
                None => vec![env.clone()],
            },
            Loc::Var(v) => match (env.locs.get(v), actual) {
                (Some(b), Some(a)) if b == a => vec![env.clone()],
                (Some(_), Some(_)) => vec![],
                (Some(_), None) => vec![env.clone()],
                (None, Some(a)) => {
                    let mut e = env.clone();
                    e.locs.insert(v.clone(), a.to_string());
                    vec![e]
                }
                (None, None) => self
                    .net
                    .locations()
                    .into_iter()
                    .map(|a| {
                        let mut e = env.clone();
                        e.locs.insert(v.clone(), a);
                        e
                    })
                    .collect(),
            },
        }
    }

    fn loc_value(&self, l: &Loc, env: &Env) -> Option<String> {
        match l {
            Loc::Named(n) => Some(n.clone()),
            Loc::Var(v) => env.locs.get(v).cloned(),
        }
    }

    fn match_term(&self, pattern: &Term, t: &Term, env: &Env) -> Option<Env> {
        let p = self.term(pattern, env);
        let mut b = env.terms.clone();
        if match_pattern(&p, t, &mut b) {
            Some(Env { terms: b, locs: env.locs.clone() })
        } else {
            None
        }
    }

    /// Points fitting the description, with the extended environment.
    fn matching(&self, d: &EventDesc, env: &Env) -> Vec<(usize, Env)> {
        let mut out = Vec::new();
        for (i, (_, p)) in self.points.iter().enumerate() {
            if !p.kind.refines(&d.kind) {
                continue;
            }
            for e in self.bind_loc(&d.loc, Some(p.loc.name()), env) {
                let cands: Vec<Term> = if d.contains {
                    easy_subterms(self.theory, &p.arg).into_iter().collect()
                } else {
                    vec![p.arg.clone()]
                };
                for c in cands {
                    if let Some(e2) = self.match_term(&d.arg, &c, &e) {
                        out.push((i, e2));
                    }
                }
            }
        }
        out
    }

    fn atom(&self, a: &Atom, env: &Env) -> Vec<Env> {
        match a {
            Atom::Happened(d) => self.matching(d, env).into_iter().map(|(_, e)| e).collect(),
            Atom::Before(x, y) => {
                let mut out = Vec::new();
                for (i, e1) in self.matching(x, env) {
                    for (j, e2) in self.matching(y, &e1) {
                        if self.order.precedes(&self.points[i].0, &self.points[j].0) {
                            out.push(e2);
                        }
                    }
                }
                out
            }
            Atom::OriginatesAt(t, d) => {
                let mut out = Vec::new();
                for (i, e) in self.matching(d, env) {
                    let tv = self.term(t, &e);
                    if !tv.vars().is_empty() {
                        continue;
                    }
                    let origins: BTreeSet<String> =
                        origination_points(&self.events, |a, b| self.order.precedes(a, b), &tv, self.theory);
                    if origins.contains(&self.points[i].0) {
                        out.push(e);
                    }
                }
                out
            }
            Atom::EqualTerms(x, y) => {
                let (xv, yv) = (self.term(x, env), self.term(y, env));
                match (xv.vars().is_empty(), yv.vars().is_empty()) {
                    (true, true) => {
                        if xv == yv {
                            vec![env.clone()]
                        } else {
                            vec![]
                        }
                    }
                    (false, true) => self.match_term(&xv, &yv, env).into_iter().collect(),
                    (true, false) => self.match_term(&yv, &xv, env).into_iter().collect(),
                    (false, false) => vec![],
                }
            }
            Atom::EqualLocs(x, y) => match (self.loc_value(x, env), self.loc_value(y, env)) {
                (Some(a), Some(b)) => {
                    if a == b {
                        vec![env.clone()]
                    } else {
                        vec![]
                    }
                }
                (Some(a), None) => self.bind_loc(y, Some(&a), env),
                (None, Some(b)) => self.bind_loc(x, Some(&b), env),
                (None, None) => vec![],
            },
            Atom::Within(x, y) => {
                let mut out = Vec::new();
                for e in self.bind_loc(x, None, env) {
                    for e2 in self.bind_loc(y, None, &e) {
                        if let (Some(a), Some(b)) = (self.loc_value(x, &e2), self.loc_value(y, &e2)) {
                            if self.net.within(&a, &b) {
                                out.push(e2);
                            }
                        }
                    }
                }
                out
            }
            Atom::ControlledBy(l, p) => self
                .bind_loc(l, None, env)
                .into_iter()
                .filter(|e| self.loc_value(l, e).is_some_and(|v| self.net.control.get(&v) == Some(p)))
                .collect(),
            Atom::Holds(t) => {
                let tv = self.term(t, env);
                if tv.vars().is_empty() && self.theory.eval_guard(&tv) {
                    vec![env.clone()]
                } else {
                    vec![]
                }
            }
            Atom::Knows(l, t) => {
                let mut out = Vec::new();
                for e in self.bind_loc(l, None, env) {
                    let Some(at) = self.loc_value(l, &e) else { continue };
                    let mut known = BTreeSet::new();
                    for (_, p) in &self.points {
                        if self.net.within(p.loc.name(), &at) {
                            known.extend(easy_subterms(self.theory, &p.arg));
                        }
                    }
                    for k in known {
                        if let Some(e2) = self.match_term(t, &k, &e) {
                            out.push(e2);
                        }
                    }
                }
                out.sort();
                out.dedup();
                out
            }
            Atom::LocalHistoryFact(tag, t) => {
                let mut out = Vec::new();
                for (_, p) in &self.points {
                    if p.kind.tag() == tag {
                        if let Some(e) = self.match_term(t, &p.arg, env) {
                            out.push(e);
                        }
                    }
                }
                out
            }
        }
    }
}

fn subst_all(f: &Formula, s: &super::formula::Subst) -> Formula {
    // Binders are variables too; substitute through them.
    match f {
        Formula::Exists(vs, body) => Formula::Exists(vs.clone(), Box::new(subst_all(body, s))),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| subst_all(g, s)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| subst_all(g, s)).collect()),
        Formula::Implies(p, c) => Formula::implies(subst_all(p, s), subst_all(c, s)),
        other => other.subst(s),
    }
}

/// Whether the formula is true in the run.
pub fn holds_in_run(f: &Formula, run: &Run, net: &ActorNetwork, theory: &TermTheory) -> Result<bool, RunError> {
    Ok(Semantics::new(run, net, theory)?.holds(f))
}
