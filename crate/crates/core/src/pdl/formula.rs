use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::network::ActorNetwork;
use crate::term::{write_args, Term};

/// A location in a formula: a declared configuration or an unknown one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Loc {
    Named(String),
    Var(String),
}

impl Loc {
    pub fn name(&self) -> &str {
        match self {
            Loc::Named(n) | Loc::Var(n) => n,
        }
    }

    /// Named when the network declares `name`, a variable otherwise.
    pub fn resolve(name: &str, net: &ActorNetwork) -> Loc {
        if net.is_declared(name) {
            Loc::Named(name.to_string())
        } else {
            Loc::Var(name.to_string())
        }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvKind {
    Send,
    Recv,
    Emit,
    Sample,
    Gen,
    Assign,
    Compare,
    /// Any send or emit.
    Write,
    /// Any receive or sample.
    Read,
    Custom(String),
}

impl EvKind {
    pub fn from_tag(tag: &str) -> EvKind {
        match tag {
            "send" => EvKind::Send,
            "recv" => EvKind::Recv,
            "emit" => EvKind::Emit,
            "sample" => EvKind::Sample,
            "gen" => EvKind::Gen,
            "assign" => EvKind::Assign,
            "cmp" => EvKind::Compare,
            "write" => EvKind::Write,
            "read" => EvKind::Read,
            other => EvKind::Custom(other.to_string()),
        }
    }

    pub fn tag(&self) -> &str {
        match self {
            EvKind::Send => "send",
            EvKind::Recv => "recv",
            EvKind::Emit => "emit",
            EvKind::Sample => "sample",
            EvKind::Gen => "gen",
            EvKind::Assign => "assign",
            EvKind::Compare => "cmp",
            EvKind::Write => "write",
            EvKind::Read => "read",
            EvKind::Custom(t) => t,
        }
    }

    /// `self` is at least as specific as `general`.
    pub fn refines(&self, general: &EvKind) -> bool {
        self == general
            || (*general == EvKind::Write && matches!(self, EvKind::Send | EvKind::Emit))
            || (*general == EvKind::Read && matches!(self, EvKind::Recv | EvKind::Sample))
    }

    pub fn is_write(&self) -> bool {
        matches!(self, EvKind::Send | EvKind::Emit | EvKind::Write)
    }

    pub fn is_read(&self) -> bool {
        matches!(self, EvKind::Recv | EvKind::Sample | EvKind::Read)
    }
}

/// `kind(arg)@loc`, or with `contains` set, `kind*(arg)@loc`: some such event whose
/// payload has `arg` as an easy subterm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventDesc {
    pub kind: EvKind,
    pub arg: Term,
    pub contains: bool,
    pub loc: Loc,
}

impl EventDesc {
    pub fn new(kind: EvKind, arg: Term, loc: Loc) -> Self {
        EventDesc { kind, arg, contains: false, loc }
    }

    pub fn containing(kind: EvKind, arg: Term, loc: Loc) -> Self {
        EventDesc { kind, arg, contains: true, loc }
    }

    pub fn subst(&self, s: &Subst) -> EventDesc {
        EventDesc { kind: self.kind.clone(), arg: s.term(&self.arg), contains: self.contains, loc: s.loc(&self.loc) }
    }
}

impl fmt::Display for EventDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}(", self.kind.tag(), if self.contains { "*" } else { "" })?;
        write_args(f, &self.arg)?;
        write!(f, ")@{}", self.loc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Happened(EventDesc),
    Before(EventDesc, EventDesc),
    /// The term's earliest write is the described event.
    OriginatesAt(Term, EventDesc),
    EqualTerms(Term, Term),
    EqualLocs(Loc, Loc),
    Within(Loc, Loc),
    ControlledBy(Loc, String),
    /// A guard predicate, e.g. a verifier application.
    Holds(Term),
    Knows(Loc, Term),
    LocalHistoryFact(String, Term),
}

impl Atom {
    pub fn events(&self) -> Vec<&EventDesc> {
        match self {
            Atom::Happened(e) | Atom::OriginatesAt(_, e) => vec![e],
            Atom::Before(a, b) => vec![a, b],
            _ => vec![],
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Happened(e) => vec![&e.arg],
            Atom::Before(a, b) => vec![&a.arg, &b.arg],
            Atom::OriginatesAt(t, e) => vec![t, &e.arg],
            Atom::EqualTerms(a, b) => vec![a, b],
            Atom::Holds(t) | Atom::Knows(_, t) | Atom::LocalHistoryFact(_, t) => vec![t],
            _ => vec![],
        }
    }

    pub fn locs(&self) -> Vec<&Loc> {
        match self {
            Atom::Happened(e) | Atom::OriginatesAt(_, e) => vec![&e.loc],
            Atom::Before(a, b) => vec![&a.loc, &b.loc],
            Atom::EqualLocs(a, b) | Atom::Within(a, b) => vec![a, b],
            Atom::ControlledBy(l, _) | Atom::Knows(l, _) => vec![l],
            _ => vec![],
        }
    }

    pub fn subst(&self, s: &Subst) -> Atom {
        match self {
            Atom::Happened(e) => Atom::Happened(e.subst(s)),
            Atom::Before(a, b) => Atom::Before(a.subst(s), b.subst(s)),
            Atom::OriginatesAt(t, e) => Atom::OriginatesAt(s.term(t), e.subst(s)),
            Atom::EqualTerms(a, b) => Atom::EqualTerms(s.term(a), s.term(b)),
            Atom::EqualLocs(a, b) => Atom::EqualLocs(s.loc(a), s.loc(b)),
            Atom::Within(a, b) => Atom::Within(s.loc(a), s.loc(b)),
            Atom::ControlledBy(l, p) => Atom::ControlledBy(s.loc(l), p.clone()),
            Atom::Holds(t) => Atom::Holds(s.term(t)),
            Atom::Knows(l, t) => Atom::Knows(s.loc(l), s.term(t)),
            Atom::LocalHistoryFact(tag, t) => Atom::LocalHistoryFact(tag.clone(), s.term(t)),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Happened(e) => write!(f, "{e}"),
            Atom::Before(a, b) => write!(f, "{a} -> {b}"),
            Atom::OriginatesAt(t, e) if *t == e.arg => write!(f, "orig {e}"),
            Atom::OriginatesAt(t, e) => write!(f, "orig[{t}] {e}"),
            Atom::EqualTerms(a, b) => write!(f, "{a} == {b}"),
            Atom::EqualLocs(a, b) => write!(f, "{a} = {b}"),
            Atom::Within(a, b) => write!(f, "{a} <= {b}"),
            Atom::ControlledBy(l, p) => write!(f, "ctl({p}, {l})"),
            Atom::Holds(t) => write!(f, "holds {t}"),
            Atom::Knows(l, t) => write!(f, "knows({l}, {t})"),
            Atom::LocalHistoryFact(tag, t) => {
                write!(f, "local {tag}(")?;
                write_args(f, t)?;
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Not(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Binders starting with an uppercase letter range over locations, others over terms.
    Exists(Vec<String>, Box<Formula>),
}

/// Uppercase-initial names denote locations.
pub fn is_loc_name(name: &str) -> bool {
    name.trim_start_matches(['$', '~']).chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

impl Formula {
    pub fn truth() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }

    /// Conjunction with nested conjunctions spliced and singletons unwrapped.
    pub fn and(items: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Formula::And(out)
        }
    }

    pub fn or(items: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Formula::Or(out)
        }
    }

    pub fn implies(p: Formula, c: Formula) -> Formula {
        Formula::Implies(Box::new(p), Box::new(c))
    }

    pub fn exists(vars: Vec<String>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    /// A chain `a -> b -> c` as the conjunction of its links.
    pub fn chain(events: Vec<EventDesc>) -> Formula {
        if events.len() == 1 {
            return Formula::Atom(Atom::Happened(events[0].clone()));
        }
        Formula::and(events.windows(2).map(|w| Formula::Atom(Atom::Before(w[0].clone(), w[1].clone()))).collect())
    }

    pub fn subst(&self, s: &Subst) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.subst(s)),
            Formula::Not(a) => Formula::Not(a.subst(s)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.subst(s)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.subst(s)).collect()),
            Formula::Implies(p, c) => Formula::implies(p.subst(s), c.subst(s)),
            Formula::Exists(vs, body) => {
                let inner = s.without(vs);
                Formula::Exists(vs.clone(), Box::new(body.subst(&inner)))
            }
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) | Formula::Not(a) => out.push(a),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Implies(p, c) => {
                p.collect_atoms(out);
                c.collect_atoms(out);
            }
            Formula::Exists(_, b) => b.collect_atoms(out),
        }
    }

    /// Names occurring free: term leaves and location variables.
    pub fn free_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&BTreeSet::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &BTreeSet<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(a) | Formula::Not(a) => {
                for t in a.terms() {
                    t.walk(&mut |s| {
                        if let Some(n) = s.name() {
                            if !bound.contains(n) {
                                out.insert(n.to_string());
                            }
                        }
                    });
                }
                for l in a.locs() {
                    if let Loc::Var(n) = l {
                        if !bound.contains(n) {
                            out.insert(n.clone());
                        }
                    }
                }
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::Implies(p, c) => {
                p.collect_free(bound, out);
                c.collect_free(bound, out);
            }
            Formula::Exists(vs, b) => {
                let mut inner = bound.clone();
                inner.extend(vs.iter().cloned());
                b.collect_free(&inner, out);
            }
        }
    }

    /// Every name used, bound or free.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in self.atoms() {
            for t in a.terms() {
                t.walk(&mut |s| {
                    if let Some(n) = s.name() {
                        out.insert(n.to_string());
                    }
                });
            }
            for l in a.locs() {
                out.insert(l.name().to_string());
            }
        }
        self.collect_binders(&mut out);
        out
    }

    /// Names bound by existentials anywhere in the formula.
    pub fn binders(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_binders(&mut out);
        out
    }

    fn collect_binders(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Exists(vs, b) => {
                out.extend(vs.iter().cloned());
                b.collect_binders(out);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_binders(out)),
            Formula::Implies(p, c) => {
                p.collect_binders(out);
                c.collect_binders(out);
            }
            _ => {}
        }
    }

    /// Splits a top-level implication; other formulas have a trivial premise.
    pub fn as_implication(&self) -> (Formula, Formula) {
        match self {
            Formula::Implies(p, c) => ((**p).clone(), (**c).clone()),
            other => (Formula::truth(), other.clone()),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Formula::Implies(..) => 0,
            Formula::Exists(..) => 0,
            Formula::Or(_) => 1,
            Formula::And(v) if v.is_empty() => 3,
            Formula::And(_) => 2,
            _ => 3,
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(a) => write!(f, "not {a}"),
            Formula::And(fs) if fs.is_empty() => write!(f, "true"),
            Formula::And(fs) | Formula::Or(fs) => {
                let (sep, min) = if matches!(self, Formula::And(_)) { (" & ", 3) } else { (" | ", 2) };
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    g.fmt_operand(f, min)?;
                }
                Ok(())
            }
            Formula::Implies(p, c) => {
                p.fmt_operand(f, 1)?;
                write!(f, " => ")?;
                c.fmt_operand(f, 0)
            }
            Formula::Exists(vs, b) => write!(f, "exists {}. {b}", vs.join(", ")),
        }
    }
}

/// Simultaneous replacement of term leaves and location variables by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    pub terms: BTreeMap<String, Term>,
    pub locs: BTreeMap<String, Loc>,
}

impl Subst {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.locs.is_empty()
    }

    pub fn term(&self, t: &Term) -> Term {
        t.subst_names(&self.terms)
    }

    pub fn loc(&self, l: &Loc) -> Loc {
        match l {
            Loc::Var(n) => self.locs.get(n).cloned().unwrap_or_else(|| l.clone()),
            Loc::Named(_) => l.clone(),
        }
    }

    fn without(&self, names: &[String]) -> Subst {
        let mut s = self.clone();
        for n in names {
            s.terms.remove(n);
            s.locs.remove(n);
        }
        s
    }
}
