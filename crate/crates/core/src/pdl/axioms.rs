//! Axiom schemas and their instantiation.

use std::collections::BTreeMap;
use std::fmt;

use crate::network::{AuthFlag, Channel};
use crate::run::Procedure;
use crate::term::{event_representation, Term};

use super::formula::{Atom, EvKind, EventDesc, Formula, Loc, Subst};
use super::PdlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxiomSchema {
    OrigM,
    OrigS,
    Fresh1,
    Fresh2,
    AuchM1,
    AuchM2,
    AuchP1,
    AuchP2,
    Cr,
    Cog,
}

impl AxiomSchema {
    pub const ALL: [AxiomSchema; 10] = [
        AxiomSchema::OrigM,
        AxiomSchema::OrigS,
        AxiomSchema::Fresh1,
        AxiomSchema::Fresh2,
        AxiomSchema::AuchM1,
        AxiomSchema::AuchM2,
        AxiomSchema::AuchP1,
        AxiomSchema::AuchP2,
        AxiomSchema::Cr,
        AxiomSchema::Cog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxiomSchema::OrigM => "orig.m",
            AxiomSchema::OrigS => "orig.s",
            AxiomSchema::Fresh1 => "fresh.1",
            AxiomSchema::Fresh2 => "fresh.2",
            AxiomSchema::AuchM1 => "auch.m.1",
            AxiomSchema::AuchM2 => "auch.m.2",
            AxiomSchema::AuchP1 => "auch.p.1",
            AxiomSchema::AuchP2 => "auch.p.2",
            AxiomSchema::Cr => "cr",
            AxiomSchema::Cog => "cog",
        }
    }

    pub fn from_name(s: &str) -> Option<AxiomSchema> {
        AxiomSchema::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn holes(self) -> &'static [(&'static str, HoleSort)] {
        use HoleSort::*;
        match self {
            AxiomSchema::OrigM | AxiomSchema::OrigS => &[("P", Location), ("t", Value)],
            AxiomSchema::Fresh1 | AxiomSchema::Fresh2 => &[("x", Value), ("e", Event)],
            AxiomSchema::AuchM1 | AxiomSchema::AuchM2 | AxiomSchema::AuchP1 | AxiomSchema::AuchP2 => {
                &[("ch", ChannelId), ("t", Value), ("P", Location), ("Q", Location)]
            }
            AxiomSchema::Cr => &[("P", Location), ("Q", Location), ("x", Value), ("c", Value), ("r", Value)],
            AxiomSchema::Cog => &[("P", Location)],
        }
    }

    fn flag(self) -> Option<AuthFlag> {
        match self {
            AxiomSchema::AuchM1 => Some(AuthFlag::MsgWrite),
            AxiomSchema::AuchM2 => Some(AuthFlag::MsgRead),
            AxiomSchema::AuchP1 => Some(AuthFlag::SrcWrite),
            AxiomSchema::AuchP2 => Some(AuthFlag::SrcRead),
            _ => None,
        }
    }
}

impl fmt::Display for AxiomSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HoleSort {
    Location,
    Value,
    Event,
    ChannelId,
}

/// Value supplied for a hole.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BindValue {
    Term(Term),
    Event(EventDesc),
}

impl fmt::Display for BindValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BindValue::Term(t) => write!(f, "{t}"),
            BindValue::Event(e) => write!(f, "{e}"),
        }
    }
}

/// Assumption specific to a procedure, with explicitly declared holes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcedureAxiom {
    pub name: String,
    pub holes: Vec<String>,
    pub formula: Formula,
}

/// An instantiated axiom whose remaining holes are named `$hole`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub open: Vec<(String, HoleSort)>,
    pub premise: Formula,
    pub conclusion: Formula,
}

// Binders introduced by schemas; the prefix keeps them apart from user names.
const BOUND_LOC: &str = "~X";
const BOUND_VALUE: &str = "~y";

fn open_name(hole: &str) -> String {
    format!("${hole}")
}

struct Holes<'a> {
    env: &'a Procedure,
    bindings: &'a BTreeMap<String, BindValue>,
    open: Vec<(String, HoleSort)>,
    strict: bool,
}

impl Holes<'_> {
    fn missing(&mut self, hole: &str, sort: HoleSort) -> Result<(), PdlError> {
        if self.strict || sort == HoleSort::Event || sort == HoleSort::ChannelId {
            return Err(PdlError::MissingBinding(hole.to_string()));
        }
        self.open.push((open_name(hole), sort));
        Ok(())
    }

    fn term(&mut self, hole: &str) -> Result<Term, PdlError> {
        match self.bindings.get(hole) {
            Some(BindValue::Term(t)) => Ok(t.clone()),
            Some(BindValue::Event(_)) => Err(PdlError::BadBinding(hole.into(), "expected a term".into())),
            None => {
                self.missing(hole, HoleSort::Value)?;
                Ok(Term::Const(open_name(hole)))
            }
        }
    }

    fn loc(&mut self, hole: &str) -> Result<Loc, PdlError> {
        match self.bindings.get(hole) {
            Some(BindValue::Term(t)) => match t.name() {
                Some(n) if t.children().is_empty() => Ok(Loc::resolve(n, &self.env.network)),
                _ => Err(PdlError::BadBinding(hole.into(), "expected a location".into())),
            },
            Some(BindValue::Event(_)) => Err(PdlError::BadBinding(hole.into(), "expected a location".into())),
            None => {
                self.missing(hole, HoleSort::Location)?;
                Ok(Loc::Var(open_name(hole)))
            }
        }
    }

    fn loc_or(&mut self, hole: &str, default: &str) -> Result<Loc, PdlError> {
        if self.bindings.contains_key(hole) {
            self.loc(hole)
        } else {
            Ok(Loc::Named(default.to_string()))
        }
    }

    fn event(&mut self, hole: &str) -> Result<EventDesc, PdlError> {
        match self.bindings.get(hole) {
            Some(BindValue::Event(e)) => Ok(e.clone()),
            Some(BindValue::Term(_)) => Err(PdlError::BadBinding(hole.into(), "expected an event".into())),
            None => {
                self.missing(hole, HoleSort::Event)?;
                unreachable!()
            }
        }
    }

    fn channel(&mut self, hole: &str) -> Result<Channel, PdlError> {
        let name = match self.bindings.get(hole) {
            Some(BindValue::Term(t)) => t.name().map(str::to_string),
            _ => None,
        };
        let Some(name) = name else {
            self.missing(hole, HoleSort::ChannelId)?;
            unreachable!()
        };
        self.env
            .network
            .channel(&name)
            .cloned()
            .ok_or_else(|| PdlError::SideConditionViolated(format!("unknown channel `{name}`")))
    }
}

fn at(kind: EvKind, arg: &Term, loc: &Loc) -> EventDesc {
    EventDesc::new(kind, arg.clone(), loc.clone())
}

fn some(kind: EvKind, arg: &Term, loc: &Loc) -> EventDesc {
    EventDesc::containing(kind, arg.clone(), loc.clone())
}

fn before(a: &EventDesc, b: &EventDesc) -> Formula {
    Formula::Atom(Atom::Before(a.clone(), b.clone()))
}

fn happened(a: &EventDesc) -> Formula {
    Formula::Atom(Atom::Happened(a.clone()))
}

/// Instantiates a schema; with `strict`, every hole must be bound.
pub fn instantiate_schema(
    schema: AxiomSchema,
    bindings: &BTreeMap<String, BindValue>,
    env: &Procedure,
    strict: bool,
) -> Result<Instance, PdlError> {
    for k in bindings.keys() {
        if !schema.holes().iter().any(|(h, _)| h == k) {
            return Err(PdlError::BadBinding(k.clone(), format!("`{schema}` has no such hole")));
        }
    }
    let mut h = Holes { env, bindings, open: Vec::new(), strict };
    let x_loc = Loc::Var(BOUND_LOC.into());
    let (premise, conclusion) = match schema {
        AxiomSchema::OrigM | AxiomSchema::OrigS => {
            let p = h.loc("P")?;
            let t = h.term("t")?;
            let (w, r) = if schema == AxiomSchema::OrigM {
                (EvKind::Send, EvKind::Recv)
            } else {
                (EvKind::Emit, EvKind::Sample)
            };
            let read = at(r, &t, &p);
            (happened(&read), Formula::exists(vec![BOUND_LOC.into()], before(&at(w, &t, &x_loc), &read)))
        }
        AxiomSchema::Fresh1 | AxiomSchema::Fresh2 => {
            let x = h.term("x")?;
            let e = h.event("e")?;
            let name = x.name().filter(|_| x.children().is_empty()).map(str::to_string);
            match &name {
                Some(n) if e.arg.mentions(n) => {}
                _ => {
                    return Err(PdlError::SideConditionViolated(format!("`{x}` does not occur in `{e}`")));
                }
            }
            let gen_x = at(EvKind::Gen, &x, &x_loc);
            if schema == AxiomSchema::Fresh1 {
                (happened(&e), Formula::exists(vec![BOUND_LOC.into()], before(&gen_x, &e)))
            } else {
                let p = e.loc.clone();
                let not_here = Formula::Not(Atom::Happened(at(EvKind::Gen, &x, &p)));
                let path = |w: EvKind, r: EvKind| {
                    let out = some(w, &x, &x_loc);
                    let inn = some(r, &x, &p);
                    Formula::and(vec![
                        before(&gen_x, &out),
                        Formula::Atom(Atom::OriginatesAt(x.clone(), out.clone())),
                        before(&out, &inn),
                        before(&inn, &e),
                    ])
                };
                (
                    Formula::and(vec![not_here, happened(&e)]),
                    Formula::exists(
                        vec![BOUND_LOC.into()],
                        Formula::or(vec![path(EvKind::Send, EvKind::Recv), path(EvKind::Emit, EvKind::Sample)]),
                    ),
                )
            }
        }
        AxiomSchema::AuchM1 | AxiomSchema::AuchM2 | AxiomSchema::AuchP1 | AxiomSchema::AuchP2 => {
            let ch = h.channel("ch")?;
            let flag = schema.flag().unwrap();
            if !ch.flags.contains(&flag) {
                return Err(PdlError::SideConditionViolated(format!("channel `{}` lacks {}", ch.id, flag.name())));
            }
            let t = h.term("t")?;
            let p = h.loc_or("P", &ch.entry)?;
            let q = h.loc_or("Q", &ch.exit)?;
            let net = &env.network;
            for (end, side) in [(&ch.entry, &p), (&ch.exit, &q)] {
                if let Loc::Named(s) = side {
                    if !net.within(end, s) {
                        return Err(PdlError::SideConditionViolated(format!("`{end}` is not within `{s}`")));
                    }
                }
            }
            let (w, r) = match schema {
                AxiomSchema::AuchM1 | AxiomSchema::AuchM2 => (at(EvKind::Send, &t, &p), at(EvKind::Recv, &t, &q)),
                _ => (at(EvKind::Emit, &t, &p), at(EvKind::Sample, &t, &q)),
            };
            let trigger = if matches!(schema, AxiomSchema::AuchM1 | AxiomSchema::AuchP1) { &w } else { &r };
            (happened(trigger), before(&w, &r))
        }
        AxiomSchema::Cog => {
            let p = h.loc("P")?;
            let rep = event_representation("sample", p.name(), &Term::Check);
            let seen = at(EvKind::Sample, &rep, &p);
            (
                happened(&seen),
                Formula::exists(
                    vec![BOUND_VALUE.into()],
                    happened(&at(EvKind::Sample, &Term::constant(BOUND_VALUE), &p)),
                ),
            )
        }
        AxiomSchema::Cr => {
            let p = h.loc("P")?;
            let q = h.loc("Q")?;
            let x = h.term("x")?;
            let c = h.term("c")?;
            let r = h.term("r")?;
            if let Some(n) = x.name() {
                for (hole, t) in [("c", &c), ("r", &r)] {
                    if !t.name().is_some_and(|m| m.starts_with('$')) && !t.mentions(n) {
                        return Err(PdlError::SideConditionViolated(format!("{hole} = `{t}` does not mention `{x}`")));
                    }
                }
            }
            if let Term::Apply(op, _) = &r {
                if env.theory.operator(op).is_none() {
                    return Err(PdlError::SideConditionViolated(format!("response operator `{op}` is not declared")));
                }
            } else if !r.name().is_some_and(|m| m.starts_with('$')) {
                return Err(PdlError::SideConditionViolated(format!("response `{r}` is not an operator application")));
            }
            let (prem, concl) = cr_shape(&p, &q, &x, &c, &r);
            (prem, concl)
        }
    };
    Ok(Instance { open: h.open, premise, conclusion })
}

/// The challenge-response pattern: premise seen by the verifier at `p`, conclusion
/// placing the responder's receive and originating write in between.
pub fn cr_shape(p: &Loc, q: &Loc, x: &Term, c: &Term, r: &Term) -> (Formula, Formula) {
    let gen = at(EvKind::Gen, x, p);
    let out = at(EvKind::Send, c, p);
    let back = at(EvKind::Recv, r, p);
    let premise = Formula::and(vec![before(&gen, &out), before(&out, &back)]);
    let heard = some(EvKind::Recv, c, q);
    let answer = some(EvKind::Write, r, q);
    let conclusion = Formula::and(vec![
        before(&gen, &out),
        before(&out, &heard),
        before(&heard, &answer),
        Formula::Atom(Atom::OriginatesAt(r.clone(), answer.clone())),
        before(&answer, &back),
    ]);
    (premise, conclusion)
}

/// The cr instance as an implication, for comparing derived goals against it.
pub fn cr_goal(p: &Loc, q: &Loc, x: &Term, c: &Term, r: &Term) -> Formula {
    let (prem, concl) = cr_shape(p, q, x, c, r);
    Formula::implies(prem, concl)
}

/// Instantiates a procedure axiom; unbound holes stay open as `$hole`.
pub fn instantiate_procedure_axiom(
    ax: &ProcedureAxiom,
    bindings: &BTreeMap<String, BindValue>,
    env: &Procedure,
    strict: bool,
) -> Result<Instance, PdlError> {
    let mut s = Subst::default();
    let mut open = Vec::new();
    for k in bindings.keys() {
        if !ax.holes.contains(k) {
            return Err(PdlError::BadBinding(k.clone(), format!("`{}` has no such hole", ax.name)));
        }
    }
    for hole in &ax.holes {
        let loc_hole = super::formula::is_loc_name(hole);
        match bindings.get(hole) {
            Some(BindValue::Term(t)) if loc_hole => {
                let name = t.name().ok_or_else(|| PdlError::BadBinding(hole.clone(), "expected a location".into()))?;
                s.locs.insert(hole.clone(), Loc::resolve(name, &env.network));
            }
            Some(BindValue::Term(t)) => {
                s.terms.insert(hole.clone(), t.clone());
            }
            Some(BindValue::Event(_)) => {
                return Err(PdlError::BadBinding(hole.clone(), "procedure axioms take terms and locations".into()))
            }
            None if strict => return Err(PdlError::MissingBinding(hole.clone())),
            None if loc_hole => {
                s.locs.insert(hole.clone(), Loc::Var(open_name(hole)));
                open.push((open_name(hole), HoleSort::Location));
            }
            None => {
                s.terms.insert(hole.clone(), Term::Const(open_name(hole)));
                open.push((open_name(hole), HoleSort::Value));
            }
        }
    }
    let (p, c) = ax.formula.as_implication();
    Ok(Instance { open, premise: p.subst(&s), conclusion: c.subst(&s) })
}

/// Instantiates a named schema or procedure axiom with every hole bound.
pub fn instantiate_axiom(
    name: &str,
    bindings: &BTreeMap<String, BindValue>,
    env: &Procedure,
) -> Result<Formula, PdlError> {
    let inst = if let Some(schema) = AxiomSchema::from_name(name) {
        instantiate_schema(schema, bindings, env, true)?
    } else if let Some(ax) = env.axiom(name) {
        instantiate_procedure_axiom(ax, bindings, env, true)?
    } else {
        return Err(PdlError::UnknownAxiomName(name.to_string()));
    };
    Ok(Formula::implies(inst.premise, inst.conclusion))
}
