//! What a principal observes of a run.

use std::collections::BTreeMap;

use crate::network::{ActorNetwork, AuthFlag};
use crate::process::{EventKind, LocalizedEvent};
use crate::run::{FlowKind, Run};
use crate::term::{Term, TermTheory};

use super::formula::{Atom, EvKind, EventDesc, Formula, Loc};
use super::PdlError;

/// The description a formula uses for a concrete event.
pub fn describe_event(ev: &LocalizedEvent) -> EventDesc {
    let kind = match &ev.kind {
        EventKind::Send(_) => EvKind::Send,
        EventKind::Receive { .. } => EvKind::Recv,
        EventKind::Emit(_) => EvKind::Emit,
        EventKind::Sample(_) => EvKind::Sample,
        EventKind::Generate(_) => EvKind::Gen,
        EventKind::Assign { .. } => EvKind::Assign,
        EventKind::Compare(..) => EvKind::Compare,
        EventKind::Custom { tag, .. } => EvKind::Custom(tag.clone()),
    };
    EventDesc::new(kind, ev.kind.payload(), Loc::Named(ev.location.clone()))
}

/// Happened/Before atoms over the principal's own events, plus the cross-end atoms its
/// authentic channels license and the guards it checked.
pub fn local_view(run: &Run, principal: &str, net: &ActorNetwork, theory: &TermTheory) -> Result<Formula, PdlError> {
    if !net.principals.contains(principal) {
        return Err(PdlError::UnknownPrincipal(principal.to_string()));
    }
    let owned = net.controlled_by(principal);
    let bindings: BTreeMap<String, Term> = run.check_complete(theory).map(|c| c.bindings).unwrap_or_default();
    let events = run.resolved_events(&bindings, theory);
    let order = run.run_order().map_err(|e| PdlError::UnjustifiedStep(e.to_string()))?;
    let mine: Vec<&LocalizedEvent> = events.iter().filter(|e| owned.contains(&e.location)).collect();
    let by_point: BTreeMap<&str, &LocalizedEvent> = events.iter().map(|e| (e.point.as_str(), e)).collect();

    let mut atoms = Vec::new();
    let mut linked = vec![false; mine.len()];
    for (i, a) in mine.iter().enumerate() {
        for (j, b) in mine.iter().enumerate() {
            if !order.precedes(&a.point, &b.point) {
                continue;
            }
            let between = mine.iter().any(|c| order.precedes(&a.point, &c.point) && order.precedes(&c.point, &b.point));
            if !between {
                atoms.push(Atom::Before(describe_event(a), describe_event(b)));
                linked[i] = true;
                linked[j] = true;
            }
        }
    }
    for (i, a) in mine.iter().enumerate() {
        if !linked[i] {
            atoms.push(Atom::Happened(describe_event(a)));
        }
    }
    for flow in run.flows() {
        let (Some(w), Some(r)) = (by_point.get(flow.writer.as_str()), by_point.get(flow.reader.as_str())) else {
            continue;
        };
        let (read_flag, write_flag) = match flow.kind {
            FlowKind::Message => (AuthFlag::MsgRead, AuthFlag::MsgWrite),
            FlowKind::Source => (AuthFlag::SrcRead, AuthFlag::SrcWrite),
        };
        let reader_sees = owned.contains(&r.location) && flow.channel.flags.contains(&read_flag);
        let writer_sees = owned.contains(&w.location) && flow.channel.flags.contains(&write_flag);
        let cross = owned.contains(&r.location) != owned.contains(&w.location);
        if cross && (reader_sees || writer_sees) {
            atoms.push(Atom::Before(describe_event(w), describe_event(r)));
        }
    }
    for e in &mine {
        if let EventKind::Receive { guard: Some(g), .. } = &e.kind {
            atoms.push(Atom::Holds(g.clone()));
        }
    }
    Ok(Formula::and(atoms.into_iter().map(Formula::Atom).collect()))
}
