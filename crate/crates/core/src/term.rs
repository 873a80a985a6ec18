//! Message algebra: terms, operator declarations, normalization and easy subterms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Upper bound on rewrite steps applied by [`TermTheory::normalize`].
pub const MAX_REWRITE_STEPS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transparency {
    Transparent,
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxiomTag {
    Injective,
    /// Values built with this operator only originate at the named location.
    OriginRestricted(String),
    /// `v(u, t)` holds iff `u = f(t)` for the referenced operator `f`.
    VerifierOf(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OperatorDecl {
    pub name: String,
    pub arity: usize,
    pub transparency: Vec<Transparency>,
    pub tags: Vec<AxiomTag>,
}

impl OperatorDecl {
    /// An operator with all arguments opaque and no tags.
    pub fn opaque(name: &str, arity: usize) -> Self {
        OperatorDecl {
            name: name.to_string(),
            arity,
            transparency: vec![Transparency::Opaque; arity],
            tags: Vec::new(),
        }
    }

    pub fn transparent(name: &str, arity: usize) -> Self {
        OperatorDecl { transparency: vec![Transparency::Transparent; arity], ..OperatorDecl::opaque(name, arity) }
    }

    pub fn with_tag(mut self, tag: AxiomTag) -> Self {
        self.tags.push(tag);
        self
    }

    pub fn verifies(&self) -> Option<&str> {
        self.tags.iter().find_map(|t| match t {
            AxiomTag::VerifierOf(f) => Some(f.as_str()),
            _ => None,
        })
    }

    pub fn is_injective(&self) -> bool {
        self.tags.contains(&AxiomTag::Injective)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{op}` expects {expected} argument(s), got {found}")]
    ArityMismatch { op: String, expected: usize, found: usize },
    #[error("term is not a tuple")]
    NotATuple,
    #[error("index {index} out of range for tuple of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid operator declaration `{0}`: {1}")]
    BadDeclaration(String, String),
    #[error("cannot parse term: {0}")]
    Syntax(String),
}

/// Element of the message algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(String),
    /// Fresh value minted by a generation event.
    Indet(String),
    /// Pattern variable, bound when a receive is matched.
    Var(String),
    Tuple(Vec<Term>),
    Apply(String, Vec<Term>),
    Check,
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn indet(name: &str) -> Term {
        Term::Indet(name.to_string())
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn apply(op: &str, args: Vec<Term>) -> Term {
        Term::Apply(op.to_string(), args)
    }

    /// Builds a flat tuple. Nested tuples are spliced in; a single item is returned as is.
    pub fn tuple(items: Vec<Term>) -> Term {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Term::Tuple(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Term::Tuple(flat)
        }
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::tuple(vec![a, b])
    }

    /// Name carried by a constant, indeterminate or variable.
    pub fn name(&self) -> Option<&str> {
        match self {
            Term::Const(n) | Term::Indet(n) | Term::Var(n) => Some(n),
            _ => None,
        }
    }

    pub fn children(&self) -> &[Term] {
        match self {
            Term::Tuple(items) | Term::Apply(_, items) => items,
            _ => &[],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Term::size).sum::<usize>()
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            _ => self.children().iter().all(Term::is_ground),
        }
    }

    /// True if `t` occurs anywhere in `self`, hard positions included.
    pub fn contains(&self, t: &Term) -> bool {
        self == t || self.children().iter().any(|c| c.contains(t))
    }

    /// True if a constant, indeterminate or variable with this name occurs.
    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Term::Const(n) | Term::Indet(n) | Term::Var(n) => n == name,
            _ => self.children().iter().any(|c| c.mentions(name)),
        }
    }

    /// All subterms, hard ones included.
    pub fn subterms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.collect_subterms(&mut out);
        out
    }

    fn collect_subterms(&self, out: &mut BTreeSet<Term>) {
        if out.insert(self.clone()) {
            for c in self.children() {
                c.collect_subterms(out);
            }
        }
    }

    pub fn indeterminates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Term::Indet(n) = t {
                out.insert(n.clone());
            }
        });
        out
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Term::Var(n) = t {
                out.insert(n.clone());
            }
        });
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Rebuilds the term bottom-up, re-flattening tuples.
    pub fn map(&self, f: &impl Fn(&Term) -> Option<Term>) -> Term {
        if let Some(t) = f(self) {
            return t;
        }
        match self {
            Term::Tuple(items) => Term::tuple(items.iter().map(|i| i.map(f)).collect()),
            Term::Apply(op, args) => Term::Apply(op.clone(), args.iter().map(|a| a.map(f)).collect()),
            other => other.clone(),
        }
    }

    /// Replaces pattern variables by their bindings.
    pub fn subst_vars(&self, bindings: &BTreeMap<String, Term>) -> Term {
        self.map(&|t| match t {
            Term::Var(n) => bindings.get(n).cloned(),
            _ => None,
        })
    }

    /// Replaces any leaf (constant, indeterminate or variable) by name.
    pub fn subst_names(&self, bindings: &BTreeMap<String, Term>) -> Term {
        if bindings.is_empty() {
            return self.clone();
        }
        self.map(&|t| t.name().and_then(|n| bindings.get(n).cloned()))
    }

    pub fn rename_indets(&self, renaming: &BTreeMap<String, String>) -> Term {
        self.map(&|t| match t {
            Term::Indet(n) => renaming.get(n).map(|m| Term::Indet(m.clone())),
            _ => None,
        })
    }

    /// Splits an event representation back into (tag, location, payload).
    pub fn as_representation(&self) -> Option<(&str, &str, Term)> {
        let items = match self {
            Term::Tuple(items) if items.len() >= 3 => items,
            _ => return None,
        };
        match (&items[0], &items[1]) {
            (Term::Const(tag), Term::Const(loc)) if tag.starts_with('#') && loc.starts_with('@') => {
                Some((&tag[1..], &loc[1..], Term::tuple(items[2..].to_vec())))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((tag, loc, payload)) = self.as_representation() {
            return match payload {
                Term::Check => write!(f, "rep({tag}@{loc})"),
                Term::Tuple(items) => {
                    write!(f, "rep({tag}(")?;
                    write_list(f, &items)?;
                    write!(f, ")@{loc})")
                }
                p => write!(f, "rep({tag}({p})@{loc})"),
            };
        }
        match self {
            Term::Const(n) | Term::Indet(n) => write!(f, "{n}"),
            Term::Var(n) => write!(f, "?{n}"),
            Term::Check => write!(f, "check"),
            Term::Tuple(items) => {
                write!(f, "(")?;
                write_list(f, items)?;
                write!(f, ")")
            }
            Term::Apply(op, args) => {
                write!(f, "{op}(")?;
                write_list(f, args)?;
                write!(f, ")")
            }
        }
    }
}

/// Writes a payload as an argument list; tuples are spread, representations stay whole.
pub(crate) fn write_args(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    match t {
        Term::Tuple(items) if t.as_representation().is_none() => write_list(f, items),
        t => write!(f, "{t}"),
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Term]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

/// Tagged tuple standing for an event: `(#tag, @location, payload...)`.
pub fn event_representation(tag: &str, location: &str, payload: &Term) -> Term {
    Term::tuple(vec![Term::Const(format!("#{tag}")), Term::Const(format!("@{location}")), payload.clone()])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub lhs: Term,
    pub rhs: Term,
}

/// Operators, declared constants and oriented rewrite rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermTheory {
    pub name: String,
    pub operators: BTreeMap<String, OperatorDecl>,
    pub constants: BTreeSet<String>,
    pub rewrites: Vec<RewriteRule>,
}

impl TermTheory {
    pub fn new(name: &str) -> Self {
        TermTheory { name: name.to_string(), ..Default::default() }
    }

    pub fn declare(&mut self, op: OperatorDecl) -> Result<(), TermError> {
        if op.transparency.len() != op.arity {
            return Err(TermError::BadDeclaration(
                op.name.clone(),
                "transparency list length differs from arity".into(),
            ));
        }
        self.operators.insert(op.name.clone(), op);
        Ok(())
    }

    /// Checks tag references once all operators are declared.
    pub fn check_declarations(&self) -> Result<(), TermError> {
        for op in self.operators.values() {
            if let Some(target) = op.verifies() {
                if !self.operators.contains_key(target) {
                    return Err(TermError::BadDeclaration(
                        op.name.clone(),
                        format!("verifier of undeclared operator `{target}`"),
                    ));
                }
                if op.arity != 2 {
                    return Err(TermError::BadDeclaration(op.name.clone(), "verifier must be binary".into()));
                }
            }
        }
        for rule in &self.rewrites {
            self.check(&rule.lhs)?;
            self.check(&rule.rhs)?;
        }
        Ok(())
    }

    pub fn add_rewrite(&mut self, lhs: Term, rhs: Term) -> Result<(), TermError> {
        self.check(&lhs)?;
        self.check(&rhs)?;
        self.rewrites.push(RewriteRule { lhs, rhs });
        Ok(())
    }

    pub fn operator(&self, name: &str) -> Option<&OperatorDecl> {
        self.operators.get(name)
    }

    /// Verifies that every application uses a declared operator with the right arity.
    pub fn check(&self, t: &Term) -> Result<(), TermError> {
        if let Term::Apply(op, args) = t {
            let decl = self.operators.get(op).ok_or_else(|| TermError::UnknownOperator(op.clone()))?;
            if decl.arity != args.len() {
                return Err(TermError::ArityMismatch { op: op.clone(), expected: decl.arity, found: args.len() });
            }
        }
        t.children().iter().try_for_each(|c| self.check(c))
    }

    /// Parses a term expression, checks it and returns its normal form.
    pub fn build_term(&self, expr: &str) -> Result<Term, TermError> {
        let t = crate::syntax::parse_term(expr).map_err(|e| TermError::Syntax(e.to_string()))?;
        self.check(&t)?;
        Ok(self.normalize(&t))
    }

    /// Flattens tuples and applies rewrite rules innermost-first, bounded by [`MAX_REWRITE_STEPS`].
    pub fn normalize(&self, t: &Term) -> Term {
        let mut budget = MAX_REWRITE_STEPS;
        self.normalize_with(t, &mut budget)
    }

    fn normalize_with(&self, t: &Term, budget: &mut usize) -> Term {
        let rebuilt = match t {
            Term::Tuple(items) => Term::tuple(items.iter().map(|i| self.normalize_with(i, budget)).collect()),
            Term::Apply(op, args) => {
                Term::Apply(op.clone(), args.iter().map(|a| self.normalize_with(a, budget)).collect())
            }
            other => other.clone(),
        };
        if *budget == 0 {
            return rebuilt;
        }
        for rule in &self.rewrites {
            let mut b = BTreeMap::new();
            if match_pattern(&rule.lhs, &rebuilt, &mut b) {
                *budget -= 1;
                let out = rule.rhs.subst_vars(&b);
                return self.normalize_with(&out, budget);
            }
        }
        rebuilt
    }

    /// Evaluates a receive guard. Only verifier applications are decidable; anything else fails.
    pub fn eval_guard(&self, guard: &Term) -> bool {
        match guard {
            Term::Apply(op, args) if args.len() == 2 => match self.operators.get(op).and_then(|d| d.verifies()) {
                Some(target) => {
                    let expected = self.normalize(&Term::apply(target, vec![args[1].clone()]));
                    self.normalize(&args[0]) == expected
                }
                None => false,
            },
            _ => false,
        }
    }
}

/// Syntactic matching of a pattern with `Var` leaves. Repeated variables must agree.
pub fn match_pattern(pattern: &Term, t: &Term, b: &mut BTreeMap<String, Term>) -> bool {
    match (pattern, t) {
        (Term::Var(v), _) => match b.get(v) {
            Some(bound) => bound == t,
            None => {
                b.insert(v.clone(), t.clone());
                true
            }
        },
        (Term::Tuple(ps), Term::Tuple(ts)) => {
            ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| match_pattern(p, t, b))
        }
        (Term::Apply(f, ps), Term::Apply(g, ts)) => {
            f == g && ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| match_pattern(p, t, b))
        }
        _ => pattern == t,
    }
}

/// `i`-th component of a tuple, counting from 1.
pub fn project(t: &Term, index: usize) -> Result<Term, TermError> {
    match t {
        Term::Tuple(items) => {
            if index == 0 || index > items.len() {
                Err(TermError::IndexOutOfRange { index, len: items.len() })
            } else {
                Ok(items[index - 1].clone())
            }
        }
        _ => Err(TermError::NotATuple),
    }
}

/// The easy-subterm closure of `t`: itself, tuple components and transparent arguments, recursively.
pub fn easy_subterms(theory: &TermTheory, t: &Term) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    collect_easy(theory, t, &mut out);
    out
}

fn collect_easy(theory: &TermTheory, t: &Term, out: &mut BTreeSet<Term>) {
    if !out.insert(t.clone()) {
        return;
    }
    match t {
        Term::Tuple(items) => {
            for i in items {
                collect_easy(theory, i, out);
            }
        }
        Term::Apply(op, args) => {
            if let Some(decl) = theory.operators.get(op) {
                for (a, tr) in args.iter().zip(&decl.transparency) {
                    if *tr == Transparency::Transparent {
                        collect_easy(theory, a, out);
                    }
                }
            }
        }
        _ => {}
    }
}

pub fn is_easy_subterm(theory: &TermTheory, s: &Term, t: &Term) -> bool {
    if s == t {
        return true;
    }
    match t {
        Term::Tuple(items) => items.iter().any(|i| is_easy_subterm(theory, s, i)),
        Term::Apply(op, args) => theory.operators.get(op).is_some_and(|decl| {
            args.iter()
                .zip(&decl.transparency)
                .any(|(a, tr)| *tr == Transparency::Transparent && is_easy_subterm(theory, s, a))
        }),
        _ => false,
    }
}

/// Bijective renaming of indeterminates mapping `t1` onto `t2`, if one exists.
pub fn alpha_equal(t1: &Term, t2: &Term) -> Option<BTreeMap<String, String>> {
    let mut fwd = BTreeMap::new();
    let mut bwd = BTreeMap::new();
    if alpha_walk(t1, t2, &mut fwd, &mut bwd) {
        Some(fwd)
    } else {
        None
    }
}

fn alpha_walk(a: &Term, b: &Term, fwd: &mut BTreeMap<String, String>, bwd: &mut BTreeMap<String, String>) -> bool {
    match (a, b) {
        (Term::Indet(x), Term::Indet(y)) => match (fwd.get(x), bwd.get(y)) {
            (None, None) => {
                fwd.insert(x.clone(), y.clone());
                bwd.insert(y.clone(), x.clone());
                true
            }
            (Some(y2), Some(x2)) => y2 == y && x2 == x,
            _ => false,
        },
        (Term::Tuple(xs), Term::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_walk(x, y, fwd, bwd))
        }
        (Term::Apply(f, xs), Term::Apply(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_walk(x, y, fwd, bwd))
        }
        _ => a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    fn theory() -> TermTheory {
        let mut th = TermTheory::new("t");
        th.declare(OperatorDecl::opaque("H", 2).with_tag(AxiomTag::Injective)).unwrap();
        th.declare(OperatorDecl::opaque("E", 2)).unwrap();
        th.declare(OperatorDecl::opaque("D", 2)).unwrap();
        th.declare(OperatorDecl::opaque("sig", 1)).unwrap();
        th.declare(OperatorDecl::opaque("V", 2).with_tag(AxiomTag::VerifierOf("sig".into()))).unwrap();
        th.add_rewrite(
            Term::apply("D", vec![Term::var("k"), Term::apply("E", vec![Term::var("k"), Term::var("m")])]),
            Term::var("m"),
        )
        .unwrap();
        th
    }

    #[test]
    fn nested_pairs_flatten() {
        let t = Term::pair(Term::pair(c("x"), c("y")), c("z"));
        assert_eq!(t, Term::Tuple(vec![c("x"), c("y"), c("z")]));
        assert_eq!(theory().build_term("((x, y), z)").unwrap(), t);
    }

    #[test]
    fn build_checks_operators() {
        let th = theory();
        assert_eq!(th.build_term("a").unwrap(), c("a"));
        assert_eq!(th.build_term("H(s, x)").unwrap(), Term::apply("H", vec![c("s"), c("x")]));
        assert_eq!(th.build_term("G(s)"), Err(TermError::UnknownOperator("G".into())));
        assert!(matches!(th.build_term("H(s)"), Err(TermError::ArityMismatch { .. })));
    }

    #[test]
    fn projections() {
        let t = Term::pair(c("a"), c("b"));
        assert_eq!(project(&t, 1).unwrap(), c("a"));
        assert_eq!(project(&t, 2).unwrap(), c("b"));
        assert_eq!(project(&c("a"), 1), Err(TermError::NotATuple));
        assert!(matches!(project(&t, 3), Err(TermError::IndexOutOfRange { .. })));
    }

    #[test]
    fn easy_subterm_examples() {
        let th = theory();
        let t = Term::pair(c("a"), c("b"));
        assert_eq!(easy_subterms(&th, &t), [t.clone(), c("a"), c("b")].into_iter().collect());
        let e = Term::apply("E", vec![c("k"), c("m")]);
        assert_eq!(easy_subterms(&th, &e), [e.clone()].into_iter().collect());
        assert_eq!(easy_subterms(&th, &c("a")), [c("a")].into_iter().collect());
    }

    #[test]
    fn rewriting_decrypts() {
        let th = theory();
        let t = th.build_term("D(k, E(k, m))").unwrap();
        assert_eq!(t, c("m"));
        let stuck = th.build_term("D(j, E(k, m))").unwrap();
        assert!(matches!(stuck, Term::Apply(..)));
    }

    #[test]
    fn alpha_examples() {
        let hx = Term::apply("H", vec![c("s"), Term::indet("x")]);
        let hy = Term::apply("H", vec![c("s"), Term::indet("y")]);
        let r = alpha_equal(&hx, &hy).unwrap();
        assert_eq!(r.get("x").map(String::as_str), Some("y"));
        assert!(alpha_equal(&Term::indet("x"), &c("a")).is_none());
        let xx = Term::pair(Term::indet("x"), Term::indet("x"));
        let xy = Term::pair(Term::indet("x"), Term::indet("y"));
        assert!(alpha_equal(&xx, &xy).is_none());
        assert!(alpha_equal(&xy, &xx).is_none());
    }

    #[test]
    fn verifier_guard() {
        let th = theory();
        let x = Term::indet("x");
        let ok = Term::apply("V", vec![Term::apply("sig", vec![x.clone()]), x.clone()]);
        let bad = Term::apply("V", vec![x.clone(), x.clone()]);
        assert!(th.eval_guard(&ok));
        assert!(!th.eval_guard(&bad));
    }

    #[test]
    fn representation_roundtrip() {
        let r = event_representation("sample", "Q_A", &Term::Check);
        assert_eq!(r.as_representation(), Some(("sample", "Q_A", Term::Check)));
        assert_eq!(r.to_string(), "rep(sample@Q_A)");
        let p = event_representation("send", "P", &Term::pair(c("a"), c("b")));
        assert_eq!(p.to_string(), "rep(send(a, b)@P)");
        assert_ne!(r, event_representation("sample", "Q_B", &Term::Check));
    }
}
