//! The `anp` command line: validate documents, check proofs, explore runs, render DOT.

use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use crate::dot::{emit_derivation_dot, emit_network_dot, emit_run_dot, RenderOptions, RenderTarget};
use crate::explorer::{export_run, semantic_validate, AttackerModel, ExplorationBounds, Verdict};
use crate::pdl::{check_proof, ProofStatus, Stage};
use crate::syntax::{parse_spec, serialize, Span, SpecDocument, SpecError};

#[derive(Debug, Parser)]
#[command(name = "anp", version, about = "Actor-network procedures: validate, prove, explore, render")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and resolve a document, then check every run for soundness and completeness.
    Validate { file: PathBuf },
    /// Check a proof script against its procedure.
    CheckProof {
        file: PathBuf,
        #[arg(long)]
        proof: String,
    },
    /// Search bounded attacker runs for a counterexample to a claim.
    Explore {
        file: PathBuf,
        #[arg(long)]
        procedure: String,
        /// Claim to test; defaults to the procedure's first claim.
        #[arg(long)]
        claim: Option<String>,
        #[arg(long, default_value_t = 1)]
        max_sessions: usize,
        #[arg(long, default_value_t = 1)]
        max_attacker_events: usize,
        #[arg(long, default_value_t = 3)]
        max_depth: usize,
        /// Extra operator the attacker may apply; repeatable.
        #[arg(long = "capability")]
        capabilities: Vec<String>,
        /// Channel types the attacker controls; replaces the declared ones.
        #[arg(long = "channel-type")]
        channel_types: Vec<String>,
        /// Write the counterexample document here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Emit Graphviz DOT for a network, a run or an accepted proof.
    Render {
        file: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Short labels.
        #[arg(long)]
        terse: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Network,
    Run,
    Derivation,
}

/// Exit status: success.
pub const EXIT_OK: i32 = 0;
/// Exit status: the document, proof or claim failed its check.
pub const EXIT_FAIL: i32 = 1;
/// Exit status: syntax errors and unknown names.
pub const EXIT_USAGE: i32 = 2;

/// Diagnostic sink writing `file:line:col: error: msg`.
pub struct Reporter<W: Write> {
    pub out: W,
    pub color: bool,
}

impl<W: Write> Reporter<W> {
    pub fn error(&mut self, file: &Path, span: Option<Span>, msg: &str) {
        let pos = match span {
            Some(s) if s.line > 0 => format!("{}:{}:{}", file.display(), s.line, s.col),
            _ => file.display().to_string(),
        };
        let label = if self.color { "\x1b[1;31merror\x1b[0m" } else { "error" };
        let _ = writeln!(self.out, "{pos}: {label}: {msg}");
    }
}

/// Color only when stderr is a terminal and `ANP_COLOR` is not `0`.
pub fn use_color() -> bool {
    std::env::var("ANP_COLOR").map_or(true, |v| v != "0") && io::stderr().is_terminal()
}

fn spec_message(e: &SpecError) -> String {
    match e {
        SpecError::Syntax { msg, .. } => format!("syntax error: {msg}"),
        SpecError::Unresolved { msg, .. } => format!("unresolved reference: {msg}"),
        SpecError::DuplicateName { name, .. } => format!("duplicate name `{name}`"),
        SpecError::UnknownAxiomName { name, .. } => format!("unknown axiom `{name}`"),
        SpecError::Invalid { msg, .. } => msg.clone(),
    }
}

/// Loads and resolves `file`; on failure reports every error and returns the exit code.
fn load<W: Write>(file: &Path, rep: &mut Reporter<W>) -> std::result::Result<SpecDocument, i32> {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            rep.error(file, None, &format!("cannot read file: {e}"));
            return Err(EXIT_FAIL);
        }
    };
    parse_spec(&text).map_err(|errs| {
        for e in &errs {
            rep.error(file, Some(e.span()), &spec_message(e));
        }
        if errs.iter().any(SpecError::is_syntax) {
            EXIT_USAGE
        } else {
            EXIT_FAIL
        }
    })
}

/// Runs one command, writing results to `out` and diagnostics to `rep`; returns the exit code.
pub fn execute<O: Write, E: Write>(cli: &Cli, out: &mut O, rep: &mut Reporter<E>) -> Result<i32> {
    match &cli.command {
        Command::Validate { file } => validate(file, out, rep),
        Command::CheckProof { file, proof } => check(file, proof, out, rep),
        Command::Explore {
            file,
            procedure,
            claim,
            max_sessions,
            max_attacker_events,
            max_depth,
            capabilities,
            channel_types,
            export,
        } => {
            let bounds = ExplorationBounds {
                max_sessions: *max_sessions,
                max_attacker_events: *max_attacker_events,
                max_term_depth: *max_depth,
            };
            let req = ExploreRequest { procedure, claim: claim.as_deref(), bounds, capabilities, channel_types };
            explore(file, &req, export.as_deref(), out, rep)
        }
        Command::Render { file, target, name, output, terse } => {
            render(file, *target, name, output.as_deref(), *terse, out, rep)
        }
    }
}

fn validate<O: Write, E: Write>(file: &Path, out: &mut O, rep: &mut Reporter<E>) -> Result<i32> {
    let doc = match load(file, rep) {
        Ok(d) => d,
        Err(code) => return Ok(code),
    };
    let mut code = EXIT_OK;
    for rd in &doc.runs {
        let run = doc.run(&rd.name).ok_or_else(|| anyhow!("run `{}` was not built", rd.name))?;
        let span = doc.spans.get(&format!("run:{}", rd.name)).copied();
        let (_, theory) = doc.process_context(&rd.process).ok_or_else(|| anyhow!("no context for `{}`", rd.process))?;
        match run.check_sound() {
            Ok(bad) if bad.is_empty() => {}
            Ok(bad) => {
                for f in &bad {
                    rep.error(
                        file,
                        span,
                        &format!("run `{}` is not sound: `{}` does not precede `{}`", rd.name, f.writer, f.reader),
                    );
                }
                code = EXIT_FAIL;
                continue;
            }
            Err(e) => {
                rep.error(file, span, &format!("run `{}` is not sound: {e}", rd.name));
                code = EXIT_FAIL;
                continue;
            }
        }
        match run.check_complete(theory) {
            Ok(c) if c.is_complete() => {}
            Ok(c) => {
                for m in &c.mismatches {
                    rep.error(
                        file,
                        span,
                        &format!(
                            "run `{}` is incomplete: {} reads {} but {} wrote {}",
                            rd.name, m.reader, m.expected, m.writer, m.found
                        ),
                    );
                }
                code = EXIT_FAIL;
            }
            Err(e) => {
                rep.error(file, span, &format!("run `{}`: {e}", rd.name));
                code = EXIT_FAIL;
            }
        }
    }
    if code == EXIT_OK {
        for (kind, names) in doc.summary() {
            if !names.is_empty() {
                writeln!(out, "{kind}: {}", names.join(", "))?;
            }
        }
        for net in &doc.networks {
            writeln!(
                out,
                "network {}: {} nodes, {} channels{}",
                net.name,
                net.nodes.len(),
                net.channels.len(),
                if net.is_cyber_network() { ", cyber" } else { "" }
            )?;
        }
        writeln!(out, "ok")?;
    }
    Ok(code)
}

fn check<O: Write, E: Write>(file: &Path, proof: &str, out: &mut O, rep: &mut Reporter<E>) -> Result<i32> {
    let doc = match load(file, rep) {
        Ok(d) => d,
        Err(code) => return Ok(code),
    };
    let Some(script) = doc.proof(proof) else {
        rep.error(file, None, &format!("unknown proof `{proof}`"));
        return Ok(EXIT_USAGE);
    };
    let env = doc
        .procedure(&script.procedure)
        .ok_or_else(|| anyhow!("proof `{proof}` refers to unbuilt procedure `{}`", script.procedure))?;
    let checked = check_proof(script, &env);
    match &checked.status {
        ProofStatus::Accepted => {
            writeln!(out, "proof {proof}: accepted ({} steps)", checked.steps.len())?;
            Ok(EXIT_OK)
        }
        ProofStatus::Rejected { stage, reason } => {
            let key = match stage {
                Stage::Step(i) => format!("step:{proof}/{}", checked.steps[*i].label),
                _ => format!("proof:{proof}"),
            };
            rep.error(file, doc.spans.get(&key).copied(), &format!("proof `{proof}` rejected at {stage}: {reason}"));
            Ok(EXIT_FAIL)
        }
        ProofStatus::Unchecked => Err(anyhow!("proof `{proof}` was not checked")),
    }
}

struct ExploreRequest<'a> {
    procedure: &'a str,
    claim: Option<&'a str>,
    bounds: ExplorationBounds,
    capabilities: &'a [String],
    channel_types: &'a [String],
}

fn explore<O: Write, E: Write>(
    file: &Path,
    req: &ExploreRequest,
    export: Option<&Path>,
    out: &mut O,
    rep: &mut Reporter<E>,
) -> Result<i32> {
    let doc = match load(file, rep) {
        Ok(d) => d,
        Err(code) => return Ok(code),
    };
    let Some(proc) = doc.procedure(req.procedure) else {
        rep.error(file, None, &format!("unknown procedure `{}`", req.procedure));
        return Ok(EXIT_USAGE);
    };
    let claim = match req.claim {
        Some(c) => proc.claims.iter().find(|x| x.name == c),
        None => proc.claims.first(),
    };
    let Some(claim) = claim else {
        rep.error(file, None, &format!("procedure `{}` has no such claim", req.procedure));
        return Ok(EXIT_USAGE);
    };
    let mut model = AttackerModel::for_procedure(&proc);
    if !req.channel_types.is_empty() {
        model.channel_types = req.channel_types.iter().cloned().collect();
    }
    for c in req.capabilities {
        model = model.with_capability(c);
    }
    let verdict = match semantic_validate(&claim.formula, &proc, &model, &req.bounds) {
        Ok(v) => v,
        Err(e) => {
            rep.error(file, None, &e.to_string());
            return Ok(EXIT_USAGE);
        }
    };
    match verdict {
        Verdict::Holds { runs_checked } => {
            writeln!(out, "claim {}: holds ({runs_checked} runs checked)", claim.name)?;
            Ok(EXIT_OK)
        }
        Verdict::Counterexample(r) => {
            let x = crate::explorer::enumerate_runs(&proc, &model, &req.bounds)?;
            let text = serialize(&export_run(&x, &r, &proc.theory));
            writeln!(
                out,
                "claim {}: counterexample with {} attacker event(s) in {} session(s)",
                claim.name, r.attacker_events, r.sessions
            )?;
            match export {
                Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_FAIL)
        }
    }
}

fn render<O: Write, E: Write>(
    file: &Path,
    target: Target,
    name: &str,
    output: Option<&Path>,
    terse: bool,
    out: &mut O,
    rep: &mut Reporter<E>,
) -> Result<i32> {
    let doc = match load(file, rep) {
        Ok(d) => d,
        Err(code) => return Ok(code),
    };
    let rt = match target {
        Target::Network => RenderTarget::Network,
        Target::Run => RenderTarget::Run,
        Target::Derivation => RenderTarget::Derivation,
    };
    let opts = RenderOptions { verbose: !terse, ..RenderOptions::new(rt) };
    let text = match target {
        Target::Network => doc.network(name).map(|n| Ok(emit_network_dot(n, &opts))),
        Target::Run => doc.run(name).map(|r| emit_run_dot(r, &opts)),
        Target::Derivation => doc.proof(name).map(|p| {
            let env = doc.procedure(&p.procedure).expect("resolved proof has a procedure");
            emit_derivation_dot(&check_proof(p, &env), &opts)
        }),
    };
    let text = match text {
        None => {
            rep.error(file, None, &format!("unknown {} `{name}`", format!("{target:?}").to_lowercase()));
            return Ok(EXIT_USAGE);
        }
        Some(Err(e)) => {
            rep.error(file, None, &e.to_string());
            return Ok(EXIT_FAIL);
        }
        Some(Ok(t)) => t,
    };
    match output {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}
