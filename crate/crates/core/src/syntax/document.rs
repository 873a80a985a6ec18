//! Parsed documents and their resolution into checked models.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::network::ActorNetwork;
use crate::pdl::{AxiomSchema, BindValue, Derivation, Formula, ProcedureAxiom, Subst, OBSERVATIONS};
use crate::process::{EventKind, LocalizedEvent, Process};
use crate::run::{AttackerSpec, Claim, Procedure, Run};
use crate::term::{Term, TermTheory};

use super::lexer::Span;
use super::parser::Parser;
use super::SpecError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDecl {
    pub point: String,
    pub kind: EventKind,
    /// Overrides the strand's location.
    pub location: Option<String>,
}

/// Events listed in order at one location; consecutive events are ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrandDecl {
    pub location: String,
    pub events: Vec<EventDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDecl {
    pub name: String,
    pub network: String,
    pub theory: String,
    pub strands: Vec<StrandDecl>,
    /// Extra precedences beyond strand order.
    pub order: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowDecl {
    pub writer: String,
    pub channel: String,
    pub reader: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDecl {
    pub name: String,
    pub process: String,
    pub flows: Vec<FlowDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcedureDecl {
    pub name: String,
    pub process: String,
    pub secure: Vec<String>,
    pub axioms: Vec<ProcedureAxiom>,
    pub claims: Vec<Claim>,
    pub attacker: Option<AttackerSpec>,
}

/// A whole `.anp` file. Equality ignores spans and built models.
#[derive(Debug, Clone, Default)]
pub struct SpecDocument {
    pub theories: Vec<TermTheory>,
    pub networks: Vec<ActorNetwork>,
    pub processes: Vec<ProcessDecl>,
    pub runs: Vec<RunDecl>,
    pub procedures: Vec<ProcedureDecl>,
    pub proofs: Vec<Derivation>,
    /// Source position per construct, keyed like `network:CAP` or `channel:CAP/c1`.
    pub spans: BTreeMap<String, Span>,
    built: Built,
}

#[derive(Debug, Clone, Default)]
struct Built {
    processes: BTreeMap<String, Arc<Process>>,
    runs: BTreeMap<String, Run>,
}

impl PartialEq for SpecDocument {
    fn eq(&self, o: &Self) -> bool {
        self.theories == o.theories
            && self.networks == o.networks
            && self.processes == o.processes
            && self.runs == o.runs
            && self.procedures == o.procedures
            && self.proofs == o.proofs
    }
}

impl SpecDocument {
    pub fn note_span(&mut self, key: &str, span: Span) {
        self.spans.entry(key.to_string()).or_insert(span);
    }

    fn span_of(&self, key: &str) -> Span {
        self.spans.get(key).copied().unwrap_or_default()
    }

    pub fn theory(&self, name: &str) -> Option<&TermTheory> {
        self.theories.iter().find(|t| t.name == name)
    }

    pub fn network(&self, name: &str) -> Option<&ActorNetwork> {
        self.networks.iter().find(|n| n.name == name)
    }

    pub fn process_decl(&self, name: &str) -> Option<&ProcessDecl> {
        self.processes.iter().find(|p| p.name == name)
    }

    pub fn proof(&self, name: &str) -> Option<&Derivation> {
        self.proofs.iter().find(|p| p.name == name)
    }

    /// The checked process model.
    pub fn process(&self, name: &str) -> Option<Arc<Process>> {
        self.built.processes.get(name).cloned()
    }

    pub fn run(&self, name: &str) -> Option<&Run> {
        self.built.runs.get(name)
    }

    /// Network and theory a process refers to.
    pub fn process_context(&self, process: &str) -> Option<(&ActorNetwork, &TermTheory)> {
        let p = self.process_decl(process)?;
        Some((self.network(&p.network)?, self.theory(&p.theory)?))
    }

    pub fn procedure(&self, name: &str) -> Option<Procedure> {
        let d = self.procedures.iter().find(|p| p.name == name)?;
        let process = self.process(&d.process)?;
        let (net, theory) = self.process_context(&d.process)?;
        Some(Procedure {
            name: d.name.clone(),
            process,
            network: net.clone(),
            theory: theory.clone(),
            secure_runs: d.secure.iter().filter_map(|r| self.run(r).cloned()).collect(),
            axioms: d.axioms.clone(),
            claims: d.claims.clone(),
            attacker: d.attacker.clone(),
        })
    }

    /// Names of everything declared, per section.
    pub fn summary(&self) -> Vec<(String, Vec<String>)> {
        vec![
            ("theory".into(), self.theories.iter().map(|t| t.name.clone()).collect()),
            ("network".into(), self.networks.iter().map(|n| n.name.clone()).collect()),
            ("process".into(), self.processes.iter().map(|p| p.name.clone()).collect()),
            ("run".into(), self.runs.iter().map(|r| r.name.clone()).collect()),
            ("procedure".into(), self.procedures.iter().map(|p| p.name.clone()).collect()),
            ("proof".into(), self.proofs.iter().map(|p| p.name.clone()).collect()),
        ]
    }
}

/// Parses and resolves a document; every problem is reported.
pub fn parse_spec(text: &str) -> Result<SpecDocument, Vec<SpecError>> {
    let mut doc = SpecDocument::default();
    let mut p = Parser::new(text).map_err(|e| vec![e])?;
    p.document(&mut doc).map_err(|e| vec![e])?;
    let errors = resolve(&mut doc);
    if errors.is_empty() {
        Ok(doc)
    } else {
        Err(errors)
    }
}

/// Parses proof blocks against an existing document and returns the first.
pub fn parse_proof(text: &str, env: &SpecDocument) -> Result<Derivation, Vec<SpecError>> {
    let mut doc = env.clone();
    doc.proofs.clear();
    let mut p = Parser::new(text).map_err(|e| vec![e])?;
    p.document(&mut doc).map_err(|e| vec![e])?;
    if doc.proofs.is_empty() {
        return Err(vec![SpecError::Syntax { span: p.span(), msg: "no proof block".into() }]);
    }
    let mut errors = Vec::new();
    let mut proofs = std::mem::take(&mut doc.proofs);
    for pr in &mut proofs {
        resolve_proof(&doc, pr, &mut errors);
    }
    if errors.is_empty() {
        Ok(proofs.swap_remove(0))
    } else {
        Err(errors)
    }
}

fn dup<'a>(kind: &str, names: impl Iterator<Item = &'a String>, doc: &SpecDocument, errors: &mut Vec<SpecError>) {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            errors.push(SpecError::DuplicateName { span: doc.span_of(&format!("{kind}:{n}")), name: n.clone() });
        }
    }
}

fn resolve(doc: &mut SpecDocument) -> Vec<SpecError> {
    let mut errors = Vec::new();
    dup("theory", doc.theories.iter().map(|t| &t.name), doc, &mut errors);
    dup("network", doc.networks.iter().map(|t| &t.name), doc, &mut errors);
    dup("process", doc.processes.iter().map(|t| &t.name), doc, &mut errors);
    dup("run", doc.runs.iter().map(|t| &t.name), doc, &mut errors);
    dup("procedure", doc.procedures.iter().map(|t| &t.name), doc, &mut errors);
    dup("proof", doc.proofs.iter().map(|t| &t.name), doc, &mut errors);

    for th in &doc.theories {
        if let Err(e) = th.check_declarations() {
            errors.push(SpecError::Invalid { span: doc.span_of(&format!("theory:{}", th.name)), msg: e.to_string() });
        }
    }
    for net in &doc.networks {
        for v in net.validate() {
            errors.push(SpecError::Unresolved {
                span: doc.span_of(&format!("network:{}", net.name)),
                msg: format!("network `{}`: {v}", net.name),
            });
        }
    }
    let mut built = Built::default();
    for pd in &doc.processes {
        match build_process(doc, pd) {
            Ok(p) => {
                built.processes.insert(pd.name.clone(), Arc::new(p));
            }
            Err(e) => errors.push(e),
        }
    }
    doc.built = built;
    let mut runs = BTreeMap::new();
    for rd in &doc.runs {
        match build_run(doc, rd) {
            Ok(r) => {
                runs.insert(rd.name.clone(), r);
            }
            Err(e) => errors.push(e),
        }
    }
    doc.built.runs = runs;

    let mut procs = std::mem::take(&mut doc.procedures);
    for pd in &mut procs {
        resolve_procedure(doc, pd, &mut errors);
    }
    doc.procedures = procs;
    let mut proofs = std::mem::take(&mut doc.proofs);
    for pr in &mut proofs {
        resolve_proof(doc, pr, &mut errors);
    }
    doc.proofs = proofs;
    errors
}

/// Names generated by `gen` events.
fn generated_names(pd: &ProcessDecl) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in &pd.strands {
        for e in &s.events {
            if let EventKind::Generate(t) = &e.kind {
                if let Some(n) = t.name() {
                    out.insert(n.to_string());
                }
            }
        }
    }
    out
}

fn indet_subst(pd: &ProcessDecl) -> BTreeMap<String, Term> {
    generated_names(pd).into_iter().map(|n| (n.clone(), Term::Indet(n))).collect()
}

fn build_process(doc: &SpecDocument, pd: &ProcessDecl) -> Result<Process, SpecError> {
    let span = doc.span_of(&format!("process:{}", pd.name));
    let net = doc.network(&pd.network).ok_or_else(|| SpecError::Unresolved {
        span,
        msg: format!("process `{}` refers to unknown network `{}`", pd.name, pd.network),
    })?;
    let theory = doc.theory(&pd.theory).ok_or_else(|| SpecError::Unresolved {
        span,
        msg: format!("process `{}` refers to unknown theory `{}`", pd.name, pd.theory),
    })?;
    let indets = indet_subst(pd);
    let mut p = Process::new(&pd.name);
    for s in &pd.strands {
        let mut prev: Option<&str> = None;
        for e in &s.events {
            let espan = doc.span_of(&format!("event:{}/{}", pd.name, e.point));
            let kind = e.kind.map_terms(&|t| t.subst_names(&indets));
            for t in kind.terms() {
                theory
                    .check(t)
                    .map_err(|err| SpecError::Invalid { span: espan, msg: format!("{}: {err}", e.point) })?;
            }
            let loc = e.location.as_deref().unwrap_or(&s.location);
            p.add_event(LocalizedEvent::new(&e.point, kind, loc), net)
                .map_err(|err| SpecError::Invalid { span: espan, msg: err.to_string() })?;
            if let Some(a) = prev {
                p.add_precedence(a, &e.point, net)
                    .map_err(|err| SpecError::Invalid { span: espan, msg: err.to_string() })?;
            }
            prev = Some(&e.point);
        }
    }
    for (a, b) in &pd.order {
        let ospan = doc.span_of(&format!("order:{}/{a}->{b}", pd.name));
        p.add_precedence(a, b, net).map_err(|err| SpecError::Invalid { span: ospan, msg: err.to_string() })?;
    }
    p.check_generation().map_err(|err| SpecError::Invalid { span, msg: err.to_string() })?;
    Ok(p)
}

fn build_run(doc: &SpecDocument, rd: &RunDecl) -> Result<Run, SpecError> {
    let span = doc.span_of(&format!("run:{}", rd.name));
    let process = doc.process(&rd.process).ok_or_else(|| SpecError::Unresolved {
        span,
        msg: format!("run `{}` refers to unknown process `{}`", rd.name, rd.process),
    })?;
    let (net, _) = doc.process_context(&rd.process).expect("built process has context");
    let mut run = Run::new(&rd.name, process);
    for f in &rd.flows {
        let fspan = doc.span_of(&format!("flow:{}/{}", rd.name, f.reader));
        run.assign_flow(net, &f.reader, &f.writer, &f.channel)
            .map_err(|err| SpecError::Invalid { span: fspan, msg: format!("run `{}`: {err}", rd.name) })?;
    }
    Ok(run)
}

/// Declared location names become named locations; generated names become indeterminates.
fn resolve_formula(f: &Formula, net: &ActorNetwork, indets: &BTreeMap<String, Term>) -> Formula {
    let mut s = Subst::default();
    for l in net.locations() {
        s.locs.insert(l.clone(), crate::pdl::Loc::Named(l));
    }
    s.terms = indets.clone();
    f.subst(&s)
}

fn resolve_bind(v: &BindValue, net: &ActorNetwork, indets: &BTreeMap<String, Term>) -> BindValue {
    match v {
        BindValue::Term(t) => BindValue::Term(t.subst_names(indets)),
        BindValue::Event(e) => {
            let f = resolve_formula(&Formula::Atom(crate::pdl::Atom::Happened(e.clone())), net, indets);
            match f {
                Formula::Atom(crate::pdl::Atom::Happened(e)) => BindValue::Event(e),
                _ => unreachable!(),
            }
        }
    }
}

fn resolve_procedure(doc: &SpecDocument, pd: &mut ProcedureDecl, errors: &mut Vec<SpecError>) {
    let span = doc.span_of(&format!("procedure:{}", pd.name));
    let Some(proc_decl) = doc.process_decl(&pd.process) else {
        errors.push(SpecError::Unresolved {
            span,
            msg: format!("procedure `{}` refers to unknown process `{}`", pd.name, pd.process),
        });
        return;
    };
    let Some((net, theory)) = doc.process_context(&pd.process) else { return };
    for r in &pd.secure {
        match doc.runs.iter().find(|d| &d.name == r) {
            Some(d) if d.process == pd.process => {}
            Some(_) => errors
                .push(SpecError::Invalid { span, msg: format!("secure run `{r}` belongs to a different process") }),
            None => errors.push(SpecError::Unresolved { span, msg: format!("unknown run `{r}`") }),
        }
    }
    let indets = indet_subst(proc_decl);
    for ax in &mut pd.axioms {
        if AxiomSchema::from_name(&ax.name).is_some() || ax.name == OBSERVATIONS {
            errors.push(SpecError::DuplicateName {
                span: doc.span_of(&format!("axiom:{}/{}", pd.name, ax.name)),
                name: ax.name.clone(),
            });
        }
        ax.formula = resolve_formula(&ax.formula, net, &indets);
    }
    dup(&format!("axiom:{}", pd.name), pd.axioms.iter().map(|a| &a.name), doc, errors);
    for c in &mut pd.claims {
        c.formula = resolve_formula(&c.formula, net, &indets);
    }
    if let Some(a) = &mut pd.attacker {
        for op in &a.capabilities {
            if theory.operator(op).is_none() {
                errors
                    .push(SpecError::Unresolved { span, msg: format!("capability `{op}` is not a declared operator") });
            }
        }
        for t in &mut a.knowledge {
            *t = t.subst_names(&indets);
        }
    }
}

fn resolve_proof(doc: &SpecDocument, pr: &mut Derivation, errors: &mut Vec<SpecError>) {
    let span = doc.span_of(&format!("proof:{}", pr.name));
    let Some(pd) = doc.procedures.iter().find(|p| p.name == pr.procedure) else {
        errors.push(SpecError::Unresolved {
            span,
            msg: format!("proof `{}` refers to unknown procedure `{}`", pr.name, pr.procedure),
        });
        return;
    };
    let (Some(proc_decl), Some((net, _))) = (doc.process_decl(&pd.process), doc.process_context(&pd.process)) else {
        return;
    };
    if !net.principals.contains(&pr.principal) {
        errors.push(SpecError::Unresolved { span, msg: format!("unknown principal `{}`", pr.principal) });
    }
    let indets = indet_subst(proc_decl);
    pr.observations = resolve_formula(&pr.observations, net, &indets);
    pr.goal = resolve_formula(&pr.goal, net, &indets);
    for st in &mut pr.steps {
        st.claim = resolve_formula(&st.claim, net, &indets);
        for j in &mut st.justifications {
            let known = j.axiom == OBSERVATIONS
                || AxiomSchema::from_name(&j.axiom).is_some()
                || pd.axioms.iter().any(|a| a.name == j.axiom);
            if !known {
                errors.push(SpecError::UnknownAxiomName {
                    span: doc.span_of(&format!("cite:{}/{}/{}", pr.name, st.label, j.axiom)),
                    name: j.axiom.clone(),
                });
            }
            for v in j.bindings.values_mut() {
                *v = resolve_bind(v, net, &indets);
            }
        }
    }
}
