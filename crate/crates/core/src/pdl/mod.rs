//! Protocol derivation logic: formulas, axioms, local views and the proof checker.

mod axioms;
mod checker;
mod facts;
mod formula;
mod semantics;
mod view;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use axioms::{
    cr_goal, cr_shape, instantiate_axiom, instantiate_procedure_axiom, instantiate_schema, AxiomSchema, BindValue,
    HoleSort, Instance, ProcedureAxiom,
};
pub use checker::{check_proof, check_step, ProofState};
pub use facts::{dnf, Branch, Closure, Ctx, Fresh};
pub use formula::{is_loc_name, Atom, EvKind, EventDesc, Formula, Loc, Subst};
pub use semantics::{holds_in_run, Semantics};
pub use view::local_view;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdlError {
    #[error("missing binding for hole `{0}`")]
    MissingBinding(String),
    #[error("bad binding for `{0}`: {1}")]
    BadBinding(String, String),
    #[error("side condition violated: {0}")]
    SideConditionViolated(String),
    #[error("unknown axiom `{0}`")]
    UnknownAxiomName(String),
    #[error("unknown principal `{0}`")]
    UnknownPrincipal(String),
    #[error("unjustified step: {0}")]
    UnjustifiedStep(String),
}

/// One cited axiom with its explicit bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Justification {
    pub axiom: String,
    pub bindings: BTreeMap<String, BindValue>,
}

impl Justification {
    pub fn new(axiom: &str) -> Self {
        Justification { axiom: axiom.to_string(), bindings: BTreeMap::new() }
    }

    pub fn bind(mut self, hole: &str, v: BindValue) -> Self {
        self.bindings.insert(hole.to_string(), v);
        self
    }
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.axiom)?;
        if !self.bindings.is_empty() {
            let parts: Vec<String> = self.bindings.iter().map(|(k, v)| format!("{k} := {v}")).collect();
            write!(f, " [{}]", parts.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub label: String,
    pub justifications: Vec<Justification>,
    pub claim: Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Observations,
    /// Zero-based position in the step list.
    Step(usize),
    Goal,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ProofStatus {
    #[default]
    Unchecked,
    Accepted,
    Rejected {
        stage: Stage,
        reason: String,
    },
}

impl ProofStatus {
    pub fn is_accepted(&self) -> bool {
        matches!(self, ProofStatus::Accepted)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Observations => f.write_str("observations"),
            Stage::Step(i) => write!(f, "step {}", i + 1),
            Stage::Goal => f.write_str("goal"),
        }
    }
}

impl fmt::Display for ProofStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProofStatus::Unchecked => f.write_str("unchecked"),
            ProofStatus::Accepted => f.write_str("accepted"),
            ProofStatus::Rejected { stage, reason } => write!(f, "rejected at {stage}: {reason}"),
        }
    }
}

/// A proof script: observations, steps and goal, asserted by one principal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub name: String,
    pub principal: String,
    pub procedure: String,
    pub observations: Formula,
    pub steps: Vec<Step>,
    pub goal: Formula,
    pub status: ProofStatus,
}

/// Name of the built-in justification that restates the observations.
pub const OBSERVATIONS: &str = "obs";
