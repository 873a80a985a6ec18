//! Recursive-descent parser for `.anp` documents.

use crate::network::{ActorNetwork, AuthFlag, Channel};
use crate::pdl::{
    Atom, BindValue, Derivation, EvKind, EventDesc, Formula, Justification, Loc, ProcedureAxiom, ProofStatus, Step,
};
use crate::process::EventKind;
use crate::run::{AttackerSpec, Claim};
use crate::term::{event_representation, AxiomTag, OperatorDecl, RewriteRule, Term, TermTheory, Transparency};

use super::document::{EventDecl, FlowDecl, ProcedureDecl, ProcessDecl, RunDecl, SpecDocument, StrandDecl};
use super::lexer::{lex, Span, Tok, Token};
use super::SpecError;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SpecError>;

impl Parser {
    pub fn new(src: &str) -> PResult<Parser> {
        let toks = lex(src).map_err(|(span, msg)| SpecError::Syntax { span, msg })?;
        Ok(Parser { toks, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, what: &str) -> PResult<T> {
        Err(SpecError::Syntax { span: self.span(), msg: format!("expected {what}, found {}", self.peek()) })
    }

    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(v) if v == w)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(&format!("`{p}`"))
        }
    }

    fn keyword(&mut self, w: &str) -> PResult<()> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            self.err(&format!("`{w}`"))
        }
    }

    fn word(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.bump();
                Ok(w)
            }
            _ => self.err("a name"),
        }
    }

    fn names(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.word()?];
        while self.eat(",") {
            out.push(self.word()?);
        }
        Ok(out)
    }

    pub fn at_end(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    // ---- terms ----

    pub fn term(&mut self) -> PResult<Term> {
        if self.eat("?") {
            return Ok(Term::Var(self.word()?));
        }
        if self.eat("(") {
            let items = self.term_list(&[")"])?;
            self.expect(")")?;
            return Ok(Term::tuple(items));
        }
        let w = self.word()?;
        if w == "check" {
            return Ok(Term::Check);
        }
        if w == "rep" && self.is("(") {
            self.bump();
            let tag = self.word()?;
            let payload = if self.eat("(") {
                let items = self.term_list(&[")"])?;
                self.expect(")")?;
                Term::tuple(items)
            } else {
                Term::Check
            };
            self.expect("@")?;
            let loc = self.word()?;
            self.expect(")")?;
            return Ok(event_representation(&tag, &loc, &payload));
        }
        if self.eat("(") {
            let args = self.term_list(&[")"])?;
            self.expect(")")?;
            return Ok(Term::Apply(w, args));
        }
        Ok(Term::Const(w))
    }

    fn term_list(&mut self, stops: &[&str]) -> PResult<Vec<Term>> {
        let mut out = Vec::new();
        if stops.iter().any(|s| self.is(s)) {
            return Ok(out);
        }
        out.push(self.term()?);
        while self.eat(",") {
            out.push(self.term()?);
        }
        Ok(out)
    }

    // ---- formulas ----

    pub fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.eat("=>") {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut items = vec![self.conjunction()?];
        while self.eat("|") {
            items.push(self.conjunction()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::Or(items) })
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut items = Vec::new();
        loop {
            match self.unary()? {
                Unary::Chain(atoms) => items.extend(atoms.into_iter().map(Formula::Atom)),
                Unary::Formula(f) => items.push(*f),
            }
            if !self.eat("&") {
                break;
            }
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::And(items) })
    }

    fn unary(&mut self) -> PResult<Unary> {
        if self.is_word("true") {
            self.bump();
            return Ok(Unary::Formula(Box::new(Formula::truth())));
        }
        if self.is_word("not") {
            self.bump();
            return Ok(Unary::Formula(Box::new(Formula::Not(self.single_atom()?))));
        }
        if self.is_word("exists") {
            self.bump();
            let vars = self.names()?;
            self.expect(".")?;
            let body = self.formula()?;
            return Ok(Unary::Formula(Box::new(Formula::Exists(vars, Box::new(body)))));
        }
        if let Some(eq) = self.try_term_equality()? {
            return Ok(Unary::Formula(Box::new(Formula::Atom(eq))));
        }
        if self.is("(") {
            self.bump();
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(Unary::Formula(Box::new(f)));
        }
        if let Some(a) = self.special_atom()? {
            return Ok(Unary::Formula(Box::new(Formula::Atom(a))));
        }
        self.chain().map(|atoms| {
            if atoms.len() == 1 {
                Unary::Formula(Box::new(Formula::Atom(atoms.into_iter().next().unwrap())))
            } else {
                Unary::Chain(atoms)
            }
        })
    }

    /// `t == u`, tried speculatively.
    fn try_term_equality(&mut self) -> PResult<Option<Atom>> {
        let save = self.pos;
        if let Ok(t) = self.term() {
            if self.eat("==") {
                let u = self.term()?;
                return Ok(Some(Atom::EqualTerms(t, u)));
            }
        }
        self.pos = save;
        Ok(None)
    }

    fn special_atom(&mut self) -> PResult<Option<Atom>> {
        let Tok::Word(w) = self.peek().clone() else { return Ok(None) };
        let next_paren = matches!(self.peek_at(1), Tok::Punct("("));
        let a = match w.as_str() {
            "holds" => {
                self.bump();
                Atom::Holds(self.term()?)
            }
            "knows" if next_paren => {
                self.bump();
                self.expect("(")?;
                let l = Loc::Var(self.word()?);
                self.expect(",")?;
                let t = self.term()?;
                self.expect(")")?;
                Atom::Knows(l, t)
            }
            "ctl" if next_paren => {
                self.bump();
                self.expect("(")?;
                let p = self.word()?;
                self.expect(",")?;
                let l = Loc::Var(self.word()?);
                self.expect(")")?;
                Atom::ControlledBy(l, p)
            }
            "local" => {
                self.bump();
                let tag = self.word()?;
                self.expect("(")?;
                let items = self.term_list(&[")"])?;
                self.expect(")")?;
                Atom::LocalHistoryFact(tag, Term::tuple(items))
            }
            _ => match self.peek_at(1) {
                Tok::Punct("=") => {
                    self.bump();
                    self.bump();
                    Atom::EqualLocs(Loc::Var(w), Loc::Var(self.word()?))
                }
                Tok::Punct("<=") => {
                    self.bump();
                    self.bump();
                    Atom::Within(Loc::Var(w), Loc::Var(self.word()?))
                }
                _ => return Ok(None),
            },
        };
        Ok(Some(a))
    }

    fn single_atom(&mut self) -> PResult<Atom> {
        if let Some(a) = self.try_term_equality()? {
            return Ok(a);
        }
        if let Some(a) = self.special_atom()? {
            return Ok(a);
        }
        if self.is_word("orig") {
            let (e, orig) = self.chain_element()?;
            return Ok(orig.unwrap_or(Atom::Happened(e)));
        }
        Ok(Atom::Happened(self.event()?))
    }

    /// `e1 -> e2 -> ...`; a lone `orig e` is only the origination atom.
    fn chain(&mut self) -> PResult<Vec<Atom>> {
        let mut events = Vec::new();
        let mut origs = Vec::new();
        loop {
            let (e, orig) = self.chain_element()?;
            events.push(e);
            origs.extend(orig);
            if !self.eat("->") {
                break;
            }
        }
        let mut atoms = Vec::new();
        if events.len() == 1 {
            if origs.is_empty() {
                atoms.push(Atom::Happened(events.pop().unwrap()));
            }
        } else {
            for w in events.windows(2) {
                atoms.push(Atom::Before(w[0].clone(), w[1].clone()));
            }
        }
        atoms.extend(origs);
        Ok(atoms)
    }

    fn chain_element(&mut self) -> PResult<(EventDesc, Option<Atom>)> {
        if self.is_word("orig") {
            self.bump();
            let t = if self.eat("[") {
                let t = self.term()?;
                self.expect("]")?;
                Some(t)
            } else {
                None
            };
            let e = self.event()?;
            let t = t.unwrap_or_else(|| e.arg.clone());
            return Ok((e.clone(), Some(Atom::OriginatesAt(t, e))));
        }
        Ok((self.event()?, None))
    }

    pub fn event(&mut self) -> PResult<EventDesc> {
        let kind = self.word()?;
        let contains = self.eat("*");
        self.expect("(")?;
        let items = self.term_list(&[")"])?;
        self.expect(")")?;
        self.expect("@")?;
        let loc = Loc::Var(self.word()?);
        let arg = Term::tuple(items);
        Ok(EventDesc { kind: EvKind::from_tag(&kind), arg, contains, loc })
    }

    fn looks_like_event(&self) -> bool {
        let mut k = 1;
        if matches!(self.peek_at(k), Tok::Punct("*")) {
            return true;
        }
        if !matches!(self.peek_at(k), Tok::Punct("(")) {
            return false;
        }
        let mut depth = 0;
        loop {
            match self.peek_at(k) {
                Tok::Punct("(") => depth += 1,
                Tok::Punct(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return matches!(self.peek_at(k + 1), Tok::Punct("@"));
                    }
                }
                Tok::Eof => return false,
                _ => {}
            }
            k += 1;
        }
    }

    // ---- blocks ----

    pub fn document(&mut self, doc: &mut SpecDocument) -> PResult<()> {
        while !self.at_end() {
            let span = self.span();
            let kw = self.word()?;
            match kw.as_str() {
                "theory" => {
                    let t = self.theory()?;
                    doc.note_span(&format!("theory:{}", t.name), span);
                    doc.theories.push(t);
                }
                "network" => {
                    let n = self.network(doc)?;
                    doc.note_span(&format!("network:{}", n.name), span);
                    doc.networks.push(n);
                }
                "process" => {
                    let p = self.process(doc)?;
                    doc.note_span(&format!("process:{}", p.name), span);
                    doc.processes.push(p);
                }
                "run" => {
                    let r = self.run(doc)?;
                    doc.note_span(&format!("run:{}", r.name), span);
                    doc.runs.push(r);
                }
                "procedure" => {
                    let p = self.procedure(doc)?;
                    doc.note_span(&format!("procedure:{}", p.name), span);
                    doc.procedures.push(p);
                }
                "proof" => {
                    let p = self.proof(doc)?;
                    doc.note_span(&format!("proof:{}", p.name), span);
                    doc.proofs.push(p);
                }
                _ => return Err(SpecError::Syntax { span, msg: format!("expected a block keyword, found `{kw}`") }),
            }
        }
        Ok(())
    }

    fn theory(&mut self) -> PResult<TermTheory> {
        let mut th = TermTheory::new(&self.word()?);
        self.expect("{")?;
        while !self.eat("}") {
            let span = self.span();
            match self.word()?.as_str() {
                "op" => {
                    let name = self.word()?;
                    self.expect("/")?;
                    let arity_span = self.span();
                    let arity: usize = self
                        .word()?
                        .parse()
                        .map_err(|_| SpecError::Syntax { span: arity_span, msg: "expected an arity".into() })?;
                    let mut op = OperatorDecl::opaque(&name, arity);
                    while !self.is(";") {
                        if self.eat("(") {
                            let mut tr = Vec::new();
                            for n in self.names()? {
                                tr.push(match n.as_str() {
                                    "transparent" => Transparency::Transparent,
                                    "opaque" => Transparency::Opaque,
                                    _ => {
                                        return Err(SpecError::Syntax { span, msg: format!("bad transparency `{n}`") })
                                    }
                                });
                            }
                            self.expect(")")?;
                            op.transparency = tr;
                            continue;
                        }
                        let w = self.word()?;
                        match w.as_str() {
                            "opaque" => op.transparency = vec![Transparency::Opaque; arity],
                            "transparent" => op.transparency = vec![Transparency::Transparent; arity],
                            "injective" => op.tags.push(AxiomTag::Injective),
                            "verifier" | "origin" => {
                                self.expect("(")?;
                                let target = self.word()?;
                                self.expect(")")?;
                                op.tags.push(if w == "verifier" {
                                    AxiomTag::VerifierOf(target)
                                } else {
                                    AxiomTag::OriginRestricted(target)
                                });
                            }
                            other => {
                                return Err(SpecError::Syntax {
                                    span,
                                    msg: format!("unknown operator attribute `{other}`"),
                                })
                            }
                        }
                    }
                    self.expect(";")?;
                    th.declare(op).map_err(|e| SpecError::Invalid { span, msg: e.to_string() })?;
                }
                "const" => {
                    th.constants.extend(self.names()?);
                    self.expect(";")?;
                }
                "rewrite" => {
                    let lhs = self.term()?;
                    self.expect("->")?;
                    let rhs = self.term()?;
                    self.expect(";")?;
                    th.rewrites.push(RewriteRule { lhs, rhs });
                }
                other => return Err(SpecError::Syntax { span, msg: format!("unknown theory item `{other}`") }),
            }
        }
        Ok(th)
    }

    fn network(&mut self, doc: &mut SpecDocument) -> PResult<ActorNetwork> {
        let mut net = ActorNetwork::new(&self.word()?);
        self.expect("{")?;
        while !self.eat("}") {
            let span = self.span();
            match self.word()?.as_str() {
                "principals" => net.principals.extend(self.names()?),
                "nodes" => net.nodes.extend(self.names()?),
                "types" => net.channel_types.extend(self.names()?),
                "config" => {
                    let name = self.word()?;
                    self.expect("=")?;
                    self.expect("{")?;
                    let members = if self.is("}") { vec![] } else { self.names()? };
                    self.expect("}")?;
                    doc.note_span(&format!("config:{}/{name}", net.name), span);
                    net.configs.insert(name, members.into_iter().collect());
                }
                "control" => {
                    let who = self.word()?;
                    self.expect(":")?;
                    for l in self.names()? {
                        net.control.insert(l, who.clone());
                    }
                }
                "channel" => {
                    let id = self.word()?;
                    self.expect(":")?;
                    let entry = self.word()?;
                    self.expect("-")?;
                    let ty = self.word()?;
                    self.expect("->")?;
                    let exit = self.word()?;
                    let mut ch = Channel::new(&id, &entry, &exit, &ty);
                    if self.eat("[") {
                        for f in self.names()? {
                            let flag = AuthFlag::from_name(&f)
                                .ok_or_else(|| SpecError::Syntax { span, msg: format!("unknown flag `{f}`") })?;
                            ch = ch.with_flag(flag);
                        }
                        self.expect("]")?;
                    }
                    doc.note_span(&format!("channel:{}/{id}", net.name), span);
                    net.channels.push(ch);
                }
                other => return Err(SpecError::Syntax { span, msg: format!("unknown network item `{other}`") }),
            }
            self.expect(";")?;
        }
        Ok(net)
    }

    fn process_event(&mut self) -> PResult<EventKind> {
        let tag = self.word()?;
        self.expect("(")?;
        let kind = match tag.as_str() {
            "recv" => {
                let items = self.term_list(&[")", "|"])?;
                let guard = if self.eat("|") { Some(self.term()?) } else { None };
                EventKind::Receive { pattern: Term::tuple(items), guard }
            }
            "assign" => {
                let store = self.word()?;
                self.expect(",")?;
                let items = self.term_list(&[")"])?;
                EventKind::Assign { store, value: Term::tuple(items) }
            }
            "cmp" => {
                let a = self.term()?;
                self.expect(",")?;
                let b = self.term()?;
                EventKind::Compare(a, b)
            }
            _ => {
                let payload = Term::tuple(self.term_list(&[")"])?);
                match tag.as_str() {
                    "send" => EventKind::Send(payload),
                    "emit" => EventKind::Emit(payload),
                    "sample" => EventKind::Sample(payload),
                    "gen" => EventKind::Generate(payload),
                    _ => EventKind::Custom { tag, payload },
                }
            }
        };
        self.expect(")")?;
        Ok(kind)
    }

    fn process(&mut self, doc: &mut SpecDocument) -> PResult<ProcessDecl> {
        let name = self.word()?;
        self.expect("{")?;
        self.keyword("network")?;
        let network = self.word()?;
        self.expect(";")?;
        self.keyword("theory")?;
        let theory = self.word()?;
        self.expect(";")?;
        let mut p = ProcessDecl { name, network, theory, strands: vec![], order: vec![] };
        while !self.eat("}") {
            let span = self.span();
            match self.word()?.as_str() {
                "strand" => {
                    let location = self.word()?;
                    self.expect("{")?;
                    let mut events = Vec::new();
                    while !self.eat("}") {
                        let espan = self.span();
                        let point = self.word()?;
                        self.expect(":")?;
                        let kind = self.process_event()?;
                        let location = if self.eat("@") { Some(self.word()?) } else { None };
                        self.expect(";")?;
                        doc.note_span(&format!("event:{}/{point}", p.name), espan);
                        events.push(EventDecl { point, kind, location });
                    }
                    p.strands.push(StrandDecl { location, events });
                }
                "order" => {
                    let mut prev = self.word()?;
                    self.expect("->")?;
                    loop {
                        let next = self.word()?;
                        doc.note_span(&format!("order:{}/{prev}->{next}", p.name), span);
                        p.order.push((prev, next.clone()));
                        prev = next;
                        if !self.eat("->") {
                            break;
                        }
                    }
                    self.expect(";")?;
                }
                other => return Err(SpecError::Syntax { span, msg: format!("unknown process item `{other}`") }),
            }
        }
        Ok(p)
    }

    fn run(&mut self, doc: &mut SpecDocument) -> PResult<RunDecl> {
        let name = self.word()?;
        self.keyword("of")?;
        let process = self.word()?;
        self.expect("{")?;
        let mut flows = Vec::new();
        while !self.eat("}") {
            let span = self.span();
            self.keyword("flow")?;
            let writer = self.word()?;
            self.expect("-")?;
            let channel = self.word()?;
            self.expect("->")?;
            let reader = self.word()?;
            self.expect(";")?;
            doc.note_span(&format!("flow:{name}/{reader}"), span);
            flows.push(FlowDecl { writer, channel, reader });
        }
        Ok(RunDecl { name, process, flows })
    }

    fn procedure(&mut self, doc: &mut SpecDocument) -> PResult<ProcedureDecl> {
        let name = self.word()?;
        self.expect("{")?;
        self.keyword("process")?;
        let process = self.word()?;
        self.expect(";")?;
        let mut p = ProcedureDecl { name, process, secure: vec![], axioms: vec![], claims: vec![], attacker: None };
        while !self.eat("}") {
            let span = self.span();
            match self.word()?.as_str() {
                "secure" => {
                    p.secure.extend(self.names()?);
                    self.expect(";")?;
                }
                "axiom" => {
                    let name = self.word()?;
                    let holes = if self.eat("(") {
                        let h = if self.is(")") { vec![] } else { self.names()? };
                        self.expect(")")?;
                        h
                    } else {
                        vec![]
                    };
                    self.expect(":")?;
                    let formula = self.formula()?;
                    self.expect(";")?;
                    doc.note_span(&format!("axiom:{}/{name}", p.name), span);
                    p.axioms.push(ProcedureAxiom { name, holes, formula });
                }
                "claim" => {
                    let name = self.word()?;
                    self.expect(":")?;
                    let formula = self.formula()?;
                    self.expect(";")?;
                    p.claims.push(Claim { name, formula });
                }
                "attacker" => {
                    let mut a = AttackerSpec::default();
                    self.expect("{")?;
                    while !self.eat("}") {
                        let ispan = self.span();
                        match self.word()?.as_str() {
                            "channels" => a.channel_types.extend(self.names()?),
                            "capabilities" => a.capabilities.extend(self.names()?),
                            "knows" => a.knowledge.extend(self.term_list(&[";"])?),
                            other => {
                                return Err(SpecError::Syntax {
                                    span: ispan,
                                    msg: format!("unknown attacker item `{other}`"),
                                })
                            }
                        }
                        self.expect(";")?;
                    }
                    p.attacker = Some(a);
                }
                other => return Err(SpecError::Syntax { span, msg: format!("unknown procedure item `{other}`") }),
            }
        }
        Ok(p)
    }

    fn bind_value(&mut self) -> PResult<BindValue> {
        if matches!(self.peek(), Tok::Word(_)) && self.looks_like_event() {
            Ok(BindValue::Event(self.event()?))
        } else {
            Ok(BindValue::Term(self.term()?))
        }
    }

    fn justification(&mut self, doc: &mut SpecDocument, proof: &str, step: &str) -> PResult<Justification> {
        let span = self.span();
        let mut j = Justification::new(&self.word()?);
        doc.note_span(&format!("cite:{proof}/{step}/{}", j.axiom), span);
        if self.eat("[") {
            loop {
                let hole = self.word()?;
                self.expect(":=")?;
                let v = self.bind_value()?;
                j.bindings.insert(hole, v);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("]")?;
        }
        Ok(j)
    }

    fn proof(&mut self, doc: &mut SpecDocument) -> PResult<Derivation> {
        let name = self.word()?;
        self.keyword("for")?;
        let principal = self.word()?;
        self.expect("{")?;
        self.keyword("procedure")?;
        let procedure = self.word()?;
        self.expect(";")?;
        self.keyword("assume")?;
        self.keyword("obs")?;
        self.expect(":")?;
        let observations = self.formula()?;
        self.expect(";")?;
        let mut steps = Vec::new();
        while self.is_word("step") {
            let span = self.span();
            self.bump();
            let label = self.word()?;
            self.expect(":")?;
            doc.note_span(&format!("step:{name}/{label}"), span);
            let mut justifications = Vec::new();
            if !self.is_word("gives") {
                justifications.push(self.justification(doc, &name, &label)?);
                while self.eat(",") {
                    justifications.push(self.justification(doc, &name, &label)?);
                }
            }
            self.keyword("gives")?;
            let claim = self.formula()?;
            self.expect(";")?;
            steps.push(Step { label, justifications, claim });
        }
        self.keyword("qed")?;
        let goal = self.formula()?;
        self.expect(";")?;
        self.expect("}")?;
        Ok(Derivation { name, principal, procedure, observations, steps, goal, status: ProofStatus::Unchecked })
    }
}

enum Unary {
    Chain(Vec<Atom>),
    Formula(Box<Formula>),
}

/// Parses a standalone term expression.
pub fn parse_term(src: &str) -> PResult<Term> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    if !p.at_end() {
        return p.err("end of input");
    }
    Ok(t)
}

/// Parses a standalone formula; location names stay unresolved.
pub fn parse_formula(src: &str) -> PResult<Formula> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    if !p.at_end() {
        return p.err("end of input");
    }
    Ok(f)
}
