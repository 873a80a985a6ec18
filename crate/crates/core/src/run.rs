//! Runs: flow assignments over processes, soundness and completeness, procedures.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::network::{ActorNetwork, Channel};
use crate::order::Closure;
use crate::pdl::{Formula, ProcedureAxiom};
use crate::process::{origination_points, EventKind, LocalizedEvent, Process};
use crate::term::{match_pattern, Term, TermTheory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowKind {
    /// send → receive
    Message,
    /// emit → sample
    Source,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Flow {
    pub writer: String,
    pub reader: String,
    pub channel: Channel,
    pub kind: FlowKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("`{0}` is not a receive or sample")]
    NotACoaction(String),
    #[error("`{0}` is not a send or emit")]
    NotAWrite(String),
    #[error("`{writer}` cannot feed `{reader}`: sends pair with receives, emits with samples")]
    TypeMismatch { writer: String, reader: String },
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("channel `{channel}` does not lead from `{from}` to `{to}`")]
    NoFlowChannel { channel: String, from: String, to: String },
    #[error("`{0}` already has a flow")]
    AlreadyAssigned(String),
    #[error("no flow assigned to `{0}`")]
    IncompleteAssignment(String),
    #[error("run order has a cycle")]
    OrderCycle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub reader: String,
    pub writer: String,
    pub expected: Term,
    pub found: Term,
    pub guard_failed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Completeness {
    pub bindings: BTreeMap<String, Term>,
    pub mismatches: Vec<Mismatch>,
}

impl Completeness {
    pub fn is_complete(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Transitive closure of process order plus writer → reader for every flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOrder {
    pub points: Vec<String>,
    closure: Closure,
}

impl RunOrder {
    pub fn precedes(&self, a: &str, b: &str) -> bool {
        match (self.points.iter().position(|p| p == a), self.points.iter().position(|p| p == b)) {
            (Some(i), Some(j)) => self.closure.get(i, j),
            _ => false,
        }
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub name: String,
    pub process: Arc<Process>,
    pub assignment: BTreeMap<String, Flow>,
}

impl Run {
    pub fn new(name: &str, process: Arc<Process>) -> Self {
        Run { name: name.to_string(), process, assignment: BTreeMap::new() }
    }

    fn event(&self, point: &str) -> Result<&LocalizedEvent, RunError> {
        self.process.event(point).ok_or_else(|| RunError::UnknownPoint(point.to_string()))
    }

    pub fn assign_flow(
        &mut self,
        net: &ActorNetwork,
        coaction: &str,
        writer: &str,
        channel: &str,
    ) -> Result<(), RunError> {
        let r = self.event(coaction)?;
        let w = self.event(writer)?;
        if !r.kind.is_read() {
            return Err(RunError::NotACoaction(coaction.into()));
        }
        if !w.kind.is_write() {
            return Err(RunError::NotAWrite(writer.into()));
        }
        let kind = match (&w.kind, &r.kind) {
            (EventKind::Send(_), EventKind::Receive { .. }) => FlowKind::Message,
            (EventKind::Emit(_), EventKind::Sample(_)) => FlowKind::Source,
            _ => return Err(RunError::TypeMismatch { writer: writer.into(), reader: coaction.into() }),
        };
        if self.assignment.contains_key(coaction) {
            return Err(RunError::AlreadyAssigned(coaction.into()));
        }
        let ch = net.channel(channel).ok_or_else(|| RunError::UnknownChannel(channel.into()))?;
        if !(net.within(&ch.entry, &w.location) && net.within(&ch.exit, &r.location)) {
            return Err(RunError::NoFlowChannel {
                channel: channel.into(),
                from: w.location.clone(),
                to: r.location.clone(),
            });
        }
        let flow = Flow { writer: writer.into(), reader: coaction.into(), channel: ch.clone(), kind };
        self.assignment.insert(coaction.to_string(), flow);
        Ok(())
    }

    pub fn flows(&self) -> impl Iterator<Item = &Flow> {
        self.assignment.values()
    }

    fn require_assigned(&self) -> Result<(), RunError> {
        match self.process.events.iter().find(|e| e.kind.is_read() && !self.assignment.contains_key(&e.point)) {
            Some(e) => Err(RunError::IncompleteAssignment(e.point.clone())),
            None => Ok(()),
        }
    }

    fn raw_order(&self) -> Closure {
        let mut c = self.process.closure().clone();
        for f in self.flows() {
            let (w, r) = (self.process.index_of(&f.writer), self.process.index_of(&f.reader));
            if let (Some(w), Some(r)) = (w, r) {
                c.insert(w, r);
            }
        }
        c
    }

    /// Flows whose reader precedes (or equals) its writer; empty iff the run is sound.
    pub fn check_sound(&self) -> Result<Vec<Flow>, RunError> {
        self.require_assigned()?;
        let c = self.raw_order();
        let bad = self
            .flows()
            .filter(|f| {
                let w = self.process.index_of(&f.writer).unwrap();
                let r = self.process.index_of(&f.reader).unwrap();
                c.get(r, w)
            })
            .cloned()
            .collect();
        Ok(bad)
    }

    pub fn is_sound(&self) -> bool {
        matches!(self.check_sound(), Ok(v) if v.is_empty())
    }

    pub fn run_order(&self) -> Result<RunOrder, RunError> {
        let c = self.raw_order();
        if c.has_cycle() {
            return Err(RunError::OrderCycle);
        }
        Ok(RunOrder { points: self.process.events.iter().map(|e| e.point.clone()).collect(), closure: c })
    }

    /// Matches each read against its writer in run order, binding pattern variables.
    pub fn check_complete(&self, theory: &TermTheory) -> Result<Completeness, RunError> {
        self.require_assigned()?;
        let order = self.run_order()?;
        let lin = order.closure.linearize().ok_or(RunError::OrderCycle)?;
        let mut out = Completeness::default();
        for i in lin {
            let ev = &self.process.events[i];
            let Some(flow) = self.assignment.get(&ev.point) else { continue };
            let writer = self.event(&flow.writer)?;
            let found = theory.normalize(&writer.kind.payload().subst_vars(&out.bindings));
            let (pattern, guard) = match &ev.kind {
                EventKind::Receive { pattern, guard } => (pattern, guard.as_ref()),
                EventKind::Sample(t) => (t, None),
                _ => continue,
            };
            let expected = theory.normalize(&pattern.subst_vars(&out.bindings));
            let mut b = out.bindings.clone();
            if !match_pattern(&expected, &found, &mut b) {
                out.mismatches.push(Mismatch {
                    reader: ev.point.clone(),
                    writer: flow.writer.clone(),
                    expected,
                    found,
                    guard_failed: false,
                });
                continue;
            }
            if let Some(g) = guard {
                if !theory.eval_guard(&g.subst_vars(&b)) {
                    out.mismatches.push(Mismatch {
                        reader: ev.point.clone(),
                        writer: flow.writer.clone(),
                        expected,
                        found,
                        guard_failed: true,
                    });
                    continue;
                }
            }
            out.bindings = b;
        }
        Ok(out)
    }

    /// Events with pattern variables replaced by their bound values.
    pub fn resolved_events(&self, bindings: &BTreeMap<String, Term>, theory: &TermTheory) -> Vec<LocalizedEvent> {
        self.process
            .events
            .iter()
            .map(|e| LocalizedEvent {
                point: e.point.clone(),
                kind: e.kind.map_terms(&|t| theory.normalize(&t.subst_vars(bindings))),
                location: e.location.clone(),
            })
            .collect()
    }

    pub fn origination_points(&self, t: &Term, theory: &TermTheory) -> Result<BTreeSet<String>, RunError> {
        let order = self.run_order()?;
        let bindings = self.check_complete(theory)?.bindings;
        let events = self.resolved_events(&bindings, theory);
        Ok(origination_points(&events, |a, b| order.precedes(a, b), t, theory))
    }
}

/// Named implication to be validated against enumerated runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub name: String,
    pub formula: Formula,
}

/// Attacker settings declared with a procedure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttackerSpec {
    pub channel_types: BTreeSet<String>,
    pub capabilities: BTreeSet<String>,
    pub knowledge: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub process: Arc<Process>,
    pub network: ActorNetwork,
    pub theory: TermTheory,
    pub secure_runs: Vec<Run>,
    pub axioms: Vec<ProcedureAxiom>,
    pub claims: Vec<Claim>,
    pub attacker: Option<AttackerSpec>,
}

impl Procedure {
    pub fn axiom(&self, name: &str) -> Option<&ProcedureAxiom> {
        self.axioms.iter().find(|a| a.name == name)
    }

    /// Secure runs whose process differs from the procedure's.
    pub fn foreign_runs(&self) -> Vec<&str> {
        self.secure_runs
            .iter()
            .filter(|r| !Arc::ptr_eq(&r.process, &self.process) && *r.process != *self.process)
            .map(|r| r.name.as_str())
            .collect()
    }
}
