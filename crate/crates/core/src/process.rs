//! Processes: partially ordered multisets of localized events.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::network::ActorNetwork;
use crate::order::Closure;
use crate::term::{event_representation, is_easy_subterm, write_args, Term, TermTheory};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Send(Term),
    Receive { pattern: Term, guard: Option<Term> },
    Emit(Term),
    Sample(Term),
    Generate(Term),
    Assign { store: String, value: Term },
    Compare(Term, Term),
    Custom { tag: String, payload: Term },
}

impl EventKind {
    pub fn tag(&self) -> &str {
        match self {
            EventKind::Send(_) => "send",
            EventKind::Receive { .. } => "recv",
            EventKind::Emit(_) => "emit",
            EventKind::Sample(_) => "sample",
            EventKind::Generate(_) => "gen",
            EventKind::Assign { .. } => "assign",
            EventKind::Compare(..) => "cmp",
            EventKind::Custom { tag, .. } => tag,
        }
    }

    /// The term an event carries; compare events carry the pair of compared terms.
    pub fn payload(&self) -> Term {
        match self {
            EventKind::Send(t) | EventKind::Emit(t) | EventKind::Sample(t) | EventKind::Generate(t) => t.clone(),
            EventKind::Receive { pattern, .. } => pattern.clone(),
            EventKind::Assign { value, .. } => value.clone(),
            EventKind::Compare(a, b) => Term::pair(a.clone(), b.clone()),
            EventKind::Custom { payload, .. } => payload.clone(),
        }
    }

    /// Actions need a controlled location.
    pub fn is_action(&self) -> bool {
        matches!(
            self,
            EventKind::Send(_)
                | EventKind::Sample(_)
                | EventKind::Generate(_)
                | EventKind::Assign { .. }
                | EventKind::Compare(..)
        )
    }

    pub fn is_write(&self) -> bool {
        matches!(self, EventKind::Send(_) | EventKind::Emit(_))
    }

    /// Reads need a flow in every run.
    pub fn is_read(&self) -> bool {
        matches!(self, EventKind::Receive { .. } | EventKind::Sample(_))
    }

    /// Applies `f` to every term inside the event.
    pub fn map_terms(&self, f: &impl Fn(&Term) -> Term) -> EventKind {
        match self {
            EventKind::Send(t) => EventKind::Send(f(t)),
            EventKind::Receive { pattern, guard } => {
                EventKind::Receive { pattern: f(pattern), guard: guard.as_ref().map(f) }
            }
            EventKind::Emit(t) => EventKind::Emit(f(t)),
            EventKind::Sample(t) => EventKind::Sample(f(t)),
            EventKind::Generate(t) => EventKind::Generate(f(t)),
            EventKind::Assign { store, value } => EventKind::Assign { store: store.clone(), value: f(value) },
            EventKind::Compare(a, b) => EventKind::Compare(f(a), f(b)),
            EventKind::Custom { tag, payload } => EventKind::Custom { tag: tag.clone(), payload: f(payload) },
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            EventKind::Send(t) | EventKind::Emit(t) | EventKind::Sample(t) | EventKind::Generate(t) => vec![t],
            EventKind::Receive { pattern, guard } => std::iter::once(pattern).chain(guard.as_ref()).collect(),
            EventKind::Assign { value, .. } => vec![value],
            EventKind::Compare(a, b) => vec![a, b],
            EventKind::Custom { payload, .. } => vec![payload],
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Receive { pattern, guard: Some(g) } => {
                write!(f, "recv(")?;
                write_args(f, pattern)?;
                write!(f, " | {g})")
            }
            EventKind::Assign { store, value } => write!(f, "assign({store}, {value})"),
            EventKind::Compare(a, b) => write!(f, "cmp({a}, {b})"),
            other => {
                write!(f, "{}(", other.tag())?;
                write_args(f, &other.payload())?;
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalizedEvent {
    pub point: String,
    pub kind: EventKind,
    pub location: String,
}

impl LocalizedEvent {
    pub fn new(point: &str, kind: EventKind, location: &str) -> Self {
        LocalizedEvent { point: point.to_string(), kind, location: location.to_string() }
    }
}

impl fmt::Display for LocalizedEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}@{}", self.point, self.kind, self.location)
    }
}

/// `(#tag, @location, payload)` for an event.
pub fn represent_event(ev: &LocalizedEvent) -> Term {
    event_representation(ev.kind.tag(), &ev.location, &ev.kind.payload())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("point `{0}` is already used")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("location `{0}` is not declared in the network")]
    UnknownLocation(String),
    #[error("action at `{location}` (point `{point}`) needs a controlled location")]
    UncontrolledActionLocation { point: String, location: String },
    #[error("ordering `{earlier}` before `{later}` closes a cycle")]
    CycleIntroduced { earlier: String, later: String },
    #[error("`{earlier}`@{from} → `{later}`@{to} orders events at unrelated locations")]
    SubliminalSynchronization { earlier: String, later: String, from: String, to: String },
    #[error("`{0}` is generated twice")]
    RepeatedGeneration(String),
    #[error("`{name}` is used at `{point}` before it is generated")]
    UsedBeforeGeneration { name: String, point: String },
    #[error("generation event `{0}` must carry an indeterminate")]
    NotAnIndeterminate(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Process {
    pub name: String,
    pub events: Vec<LocalizedEvent>,
    index: BTreeMap<String, usize>,
    order: Closure,
    /// Precedence pairs as declared, before closure.
    pub declared: Vec<(String, String)>,
}

impl Process {
    pub fn new(name: &str) -> Self {
        Process { name: name.to_string(), ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn index_of(&self, point: &str) -> Option<usize> {
        self.index.get(point).copied()
    }

    pub fn event(&self, point: &str) -> Option<&LocalizedEvent> {
        self.index_of(point).map(|i| &self.events[i])
    }

    pub fn closure(&self) -> &Closure {
        &self.order
    }

    pub fn add_event(&mut self, ev: LocalizedEvent, net: &ActorNetwork) -> Result<(), ProcessError> {
        if self.index.contains_key(&ev.point) {
            return Err(ProcessError::DuplicatePoint(ev.point));
        }
        let controller =
            net.controller(&ev.location).map_err(|_| ProcessError::UnknownLocation(ev.location.clone()))?;
        if ev.kind.is_action() && controller.is_none() {
            return Err(ProcessError::UncontrolledActionLocation { point: ev.point, location: ev.location });
        }
        if let EventKind::Generate(t) = &ev.kind {
            if !matches!(t, Term::Indet(_)) {
                return Err(ProcessError::NotAnIndeterminate(ev.point));
            }
            if self.events.iter().any(|e| e.kind == ev.kind) {
                return Err(ProcessError::RepeatedGeneration(t.to_string()));
            }
        }
        let i = self.order.grow();
        self.index.insert(ev.point.clone(), i);
        self.events.push(ev);
        Ok(())
    }

    pub fn add_precedence(&mut self, earlier: &str, later: &str, net: &ActorNetwork) -> Result<(), ProcessError> {
        let a = self.index_of(earlier).ok_or_else(|| ProcessError::UnknownPoint(earlier.to_string()))?;
        let b = self.index_of(later).ok_or_else(|| ProcessError::UnknownPoint(later.to_string()))?;
        if a == b || self.order.get(b, a) {
            return Err(ProcessError::CycleIntroduced { earlier: earlier.into(), later: later.into() });
        }
        for (x, y) in self.order.new_pairs(a, b) {
            let (lx, ly) = (&self.events[x].location, &self.events[y].location);
            if !net.comparable(lx, ly) {
                return Err(ProcessError::SubliminalSynchronization {
                    earlier: self.events[x].point.clone(),
                    later: self.events[y].point.clone(),
                    from: lx.clone(),
                    to: ly.clone(),
                });
            }
        }
        self.order.insert(a, b);
        self.declared.push((earlier.to_string(), later.to_string()));
        Ok(())
    }

    pub fn precedes(&self, a: &str, b: &str) -> Result<bool, ProcessError> {
        let i = self.index_of(a).ok_or_else(|| ProcessError::UnknownPoint(a.to_string()))?;
        let j = self.index_of(b).ok_or_else(|| ProcessError::UnknownPoint(b.to_string()))?;
        Ok(self.order.get(i, j))
    }

    /// Checks that no generated indeterminate appears at a point preceding its generation.
    pub fn check_generation(&self) -> Result<(), ProcessError> {
        for (g, ev) in self.events.iter().enumerate() {
            if let EventKind::Generate(Term::Indet(x)) = &ev.kind {
                for (i, other) in self.events.iter().enumerate() {
                    if self.order.get(i, g) && other.kind.terms().iter().any(|t| t.mentions(x)) {
                        return Err(ProcessError::UsedBeforeGeneration { name: x.clone(), point: other.point.clone() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Indeterminates minted by generation events.
    pub fn generated(&self) -> BTreeSet<String> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Generate(Term::Indet(x)) => Some(x.clone()),
                _ => None,
            })
            .collect()
    }

    /// Covering pairs of the precedence order as point names.
    pub fn covers(&self) -> Vec<(String, String)> {
        self.order
            .covers()
            .into_iter()
            .map(|(a, b)| (self.events[a].point.clone(), self.events[b].point.clone()))
            .collect()
    }
}

/// Minimal writes whose payload has `t` as an easy subterm.
pub fn origination_points<'a>(
    events: impl IntoIterator<Item = &'a LocalizedEvent>,
    precedes: impl Fn(&str, &str) -> bool,
    t: &Term,
    theory: &TermTheory,
) -> BTreeSet<String> {
    let writes: Vec<&LocalizedEvent> = events
        .into_iter()
        .filter(|e| e.kind.is_write() && is_easy_subterm(theory, t, &theory.normalize(&e.kind.payload())))
        .collect();
    writes.iter().filter(|w| !writes.iter().any(|v| precedes(&v.point, &w.point))).map(|w| w.point.clone()).collect()
}
