//! Command-line driver: typecheck, normalize, compare, measure, and run
//! coherence experiments on judgments in the concrete syntax, emitting
//! human-readable reports or structured JSON.
//!
//! Exit codes: 0 on success (checks pass, terms equal), 1 when a verdict is
//! negative (DISTINCT terms, failed coherence), 2 on input errors.

use crate::multicat::{coherence_report, sym_extract, Morphism, MulticatError};
use crate::parse::{self, ParseError, ParsedJudgment};
use crate::perm::enumerate_shuffles;
use crate::print;
use crate::rewrite::{measures, normalize, RewriteError};
use crate::signature::{SigError, Signature, Type};
use crate::syntax::{display_path, Term};
use crate::typing::{check, System, TypeError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Multicat(#[from] MulticatError),
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    BadInput(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SystemArg {
    /// Ordered contexts, tensors only.
    Rep,
    /// Shuffle-merged contexts, tensors only.
    Symrep,
    /// Shuffle-merged contexts, arrows only.
    Symclosed,
    /// Shuffle-merged contexts, tensors and arrows.
    Auto,
}

impl From<SystemArg> for System {
    fn from(arg: SystemArg) -> System {
        match arg {
            SystemArg::Rep => System::Rep,
            SystemArg::Symrep => System::SymRep,
            SystemArg::Symclosed => System::SymClosed,
            SystemArg::Auto => System::Auto,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rescalc",
    version,
    about = "Typechecker, normalizer and coherence checker for linear resource calculi"
)]
pub struct Cli {
    /// Signature file (`atoms a, b;` and `arrow f : a, b -> c;` statements).
    /// Without it, a generator-free signature over the atoms mentioned in
    /// the input is used.
    #[arg(long, global = true, value_name = "PATH")]
    sig: Option<PathBuf>,

    /// Type system to work in.
    #[arg(long, global = true, value_enum, default_value_t = SystemArg::Auto)]
    system: SystemArg,

    /// Emit structured JSON instead of text reports.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Judgments `x1:a1, ..., xn:an |- s : a`, given inline.
    #[arg(value_name = "JUDGMENT")]
    judgments: Vec<String>,

    /// Read judgments from a file: one per line, `#` starts a comment.
    #[arg(long, short = 'f', value_name = "PATH")]
    file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Typecheck judgments and print their derivation trees.
    Check(InputArgs),
    /// Normalize judgments, printing each reduction step and the normal form.
    Normalize(InputArgs),
    /// Decide whether two judgments denote the same morphism.
    Equal(InputArgs),
    /// Print the termination measures of judgments.
    Measures(InputArgs),
    /// Enumerate the normal inhabitants of a typing and report coherence.
    Coherence {
        /// Context, e.g. "x:o, y:o" (use "" for the empty context).
        #[arg(value_name = "CONTEXT")]
        context: String,
        /// Target type, e.g. "(o * o)".
        #[arg(value_name = "TYPE")]
        target: String,
        /// Term-size bound for the enumeration.
        #[arg(long, default_value_t = 12)]
        bound: u64,
    },
    /// Extract the underlying permutation of symmetric judgments.
    Sym(InputArgs),
    /// List the shuffles that merge blocks of the given sizes.
    Shuffles {
        /// Block sizes, e.g. `2 1`.
        #[arg(value_name = "BLOCK", required = true)]
        blocks: Vec<usize>,
        /// Print only the count.
        #[arg(long)]
        count: bool,
    },
}

/// Parses the process arguments, runs the command, and returns the exit
/// code, reporting errors on stderr.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Inline judgments followed by the non-comment lines of `--file`.
fn gather(input: &InputArgs) -> Result<Vec<String>, CliError> {
    let mut out = input.judgments.clone();
    if let Some(path) = &input.file {
        for line in read_file(path)?.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                out.push(line.to_string());
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::BadInput(
            "no judgments given (pass them inline or with --file)".to_string(),
        ));
    }
    Ok(out)
}

fn collect_type_atoms(ty: &Type, out: &mut BTreeSet<String>) {
    match ty {
        Type::Atom(a) => {
            out.insert(a.clone());
        }
        Type::Tensor(parts) => parts.iter().for_each(|p| collect_type_atoms(p, out)),
        Type::Arrow(dom, cod) => {
            dom.iter().for_each(|p| collect_type_atoms(p, out));
            collect_type_atoms(cod, out);
        }
    }
}

fn collect_term_atoms(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::FVar(_) | Term::BVar { .. } => {}
        Term::List(es) => es.iter().for_each(|e| collect_term_atoms(e, out)),
        Term::ESub { body, binders, arg } => {
            collect_term_atoms(body, out);
            binders.iter().for_each(|b| collect_type_atoms(&b.ty, out));
            collect_term_atoms(arg, out);
        }
        Term::Abs { binders, body } => {
            binders.iter().for_each(|b| collect_type_atoms(&b.ty, out));
            collect_term_atoms(body, out);
        }
        Term::App { fun, args } => {
            collect_term_atoms(fun, out);
            args.iter().for_each(|a| collect_term_atoms(a, out));
        }
        Term::Gen { args, .. } => args.iter().for_each(|a| collect_term_atoms(a, out)),
    }
}

/// The signature to work over: the `--sig` file when given, otherwise a
/// generator-free signature over every atom the inputs mention.
fn resolve_signature(
    cli: &Cli,
    contexts: &[Vec<(String, Type)>],
    types: &[Type],
    terms: &[Term],
) -> Result<Signature, CliError> {
    let system: System = cli.system.into();
    let kind = system.signature_kind();
    if let Some(path) = &cli.sig {
        return Ok(parse::parse_signature(&read_file(path)?, kind)?);
    }
    let mut atoms = BTreeSet::new();
    for ctx in contexts {
        for (_, ty) in ctx {
            collect_type_atoms(ty, &mut atoms);
        }
    }
    for ty in types {
        collect_type_atoms(ty, &mut atoms);
    }
    for term in terms {
        collect_term_atoms(term, &mut atoms);
    }
    Ok(Signature::new(kind, atoms.into_iter().collect(), Vec::new())?)
}

fn signature_for_judgments(
    cli: &Cli,
    judgments: &[ParsedJudgment],
) -> Result<Signature, CliError> {
    let contexts: Vec<_> = judgments.iter().map(|j| j.context.clone()).collect();
    let types: Vec<_> = judgments.iter().map(|j| j.ty.clone()).collect();
    let terms: Vec<_> = judgments.iter().map(|j| j.term.clone()).collect();
    resolve_signature(cli, &contexts, &types, &terms)
}

fn parse_judgments(texts: &[String]) -> Result<Vec<ParsedJudgment>, CliError> {
    texts.iter().map(|t| Ok(parse::parse_judgment(t)?)).collect()
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON serialization"));
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let system: System = cli.system.into();
    match &cli.command {
        Command::Check(input) => {
            let judgments = parse_judgments(&gather(input)?)?;
            let sig = signature_for_judgments(cli, &judgments)?;
            let mut reports = Vec::new();
            for j in &judgments {
                let deriv = check(&sig, system, &j.context, &j.term, &j.ty)?;
                reports.push(deriv);
            }
            if cli.json {
                fn tree(d: &crate::typing::Derivation) -> Value {
                    json!({
                        "judgment": print::judgment_to_string(&d.ctx, &d.term, &d.ty),
                        "rule": d.rule.to_string(),
                        "shuffle": d.shuffle,
                        "premises": d.premises.iter().map(tree).collect::<Vec<_>>(),
                    })
                }
                print_json(&json!({
                    "system": system.to_string(),
                    "derivations": reports.iter().map(tree).collect::<Vec<_>>(),
                }));
            } else {
                for (i, deriv) in reports.iter().enumerate() {
                    if i > 0 {
                        println!();
                    }
                    print!("{}", deriv.render());
                }
            }
            Ok(0)
        }
        Command::Normalize(input) => {
            let judgments = parse_judgments(&gather(input)?)?;
            let sig = signature_for_judgments(cli, &judgments)?;
            let mut results = Vec::new();
            for j in &judgments {
                check(&sig, system, &j.context, &j.term, &j.ty)?;
                results.push((j, normalize(&sig, system, &j.context, &j.term)?));
            }
            if cli.json {
                let docs: Vec<Value> = results
                    .iter()
                    .map(|(j, n)| {
                        json!({
                            "judgment": print::judgment_to_string(&j.context, &j.term, &j.ty),
                            "initial": {
                                "size": n.initial.size,
                                "eta1": n.initial.eta1,
                                "eta2": n.initial.eta2,
                            },
                            "steps": n.trace.iter().enumerate().map(|(i, s)| {
                                json!({
                                    "step": i + 1,
                                    "kind": s.kind.to_string(),
                                    "path": display_path(&s.path),
                                    "size": s.measures.size,
                                    "eta1": s.measures.eta1,
                                    "eta2": s.measures.eta2,
                                })
                            }).collect::<Vec<_>>(),
                            "normal_form": print::term_to_string(&n.term),
                        })
                    })
                    .collect();
                print_json(&json!({ "system": system.to_string(), "results": docs }));
            } else {
                for (i, (j, n)) in results.iter().enumerate() {
                    if i > 0 {
                        println!();
                    }
                    println!(
                        "judgment: {}",
                        print::judgment_to_string(&j.context, &j.term, &j.ty)
                    );
                    for (k, s) in n.trace.iter().enumerate() {
                        println!(
                            "step {}: {} @ {} ; size={} eta1={} eta2={}",
                            k + 1,
                            s.kind,
                            display_path(&s.path),
                            s.measures.size,
                            s.measures.eta1,
                            s.measures.eta2
                        );
                    }
                    println!("normal form: {}", print::term_to_string(&n.term));
                    println!("steps: {}", n.trace.len());
                }
            }
            Ok(0)
        }
        Command::Equal(input) => {
            let judgments = parse_judgments(&gather(input)?)?;
            if judgments.len() != 2 {
                return Err(CliError::BadInput(format!(
                    "equal needs exactly two judgments, got {}",
                    judgments.len()
                )));
            }
            let sig = signature_for_judgments(cli, &judgments)?;
            let mut morphisms = Vec::new();
            for j in &judgments {
                check(&sig, system, &j.context, &j.term, &j.ty)?;
                morphisms.push(Morphism::from_judgment(&sig, system, &j.context, &j.term)?);
            }
            let equal = morphisms[0] == morphisms[1];
            let left = print::term_to_string(&morphisms[0].canon_nf);
            let right = print::term_to_string(&morphisms[1].canon_nf);
            let verdict = if equal { "EQUAL" } else { "DISTINCT" };
            if cli.json {
                print_json(&json!({
                    "system": system.to_string(),
                    "left": left,
                    "right": right,
                    "verdict": verdict,
                }));
            } else {
                println!("left:  {left}");
                println!("right: {right}");
                println!("{verdict}");
            }
            Ok(if equal { 0 } else { 1 })
        }
        Command::Measures(input) => {
            let judgments = parse_judgments(&gather(input)?)?;
            let sig = signature_for_judgments(cli, &judgments)?;
            let mut rows = Vec::new();
            for j in &judgments {
                let deriv = check(&sig, system, &j.context, &j.term, &j.ty)?;
                rows.push((j, measures(&deriv)));
            }
            if cli.json {
                let docs: Vec<Value> = rows
                    .iter()
                    .map(|(j, m)| {
                        json!({
                            "judgment": print::judgment_to_string(&j.context, &j.term, &j.ty),
                            "size": m.size,
                            "eta1": m.eta1,
                            "eta2": m.eta2,
                        })
                    })
                    .collect();
                print_json(&json!({ "system": system.to_string(), "measures": docs }));
            } else {
                for (j, m) in &rows {
                    println!(
                        "judgment: {}",
                        print::judgment_to_string(&j.context, &j.term, &j.ty)
                    );
                    println!("size={} eta1={} eta2={}", m.size, m.eta1, m.eta2);
                }
            }
            Ok(0)
        }
        Command::Coherence { context, target, bound } => {
            let ctx = if context.trim().is_empty() {
                Vec::new()
            } else {
                parse::parse_judgment(&format!("{context} |- <> : ()"))?.context
            };
            let ty = parse::parse_type(target)?;
            let sig = resolve_signature(cli, &[ctx.clone()], &[ty.clone()], &[])?;
            let report = coherence_report(&sig, system, &ctx, &ty, *bound)?;
            if cli.json {
                print_json(&json!({
                    "system": report.system.to_string(),
                    "judgment": report.judgment,
                    "inhabitants": report.inhabitants,
                    "classes": report.classes.iter().map(|c| {
                        json!({
                            "representative": print::term_to_string(&c.representative.rep),
                            "members": c.members,
                            "sym": c.sym,
                        })
                    }).collect::<Vec<_>>(),
                    "pass": report.pass,
                    "verdict": report.verdict,
                }));
            } else {
                println!("{report}");
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Sym(input) => {
            let judgments = parse_judgments(&gather(input)?)?;
            let sig = signature_for_judgments(cli, &judgments)?;
            let mut rows = Vec::new();
            for j in &judgments {
                check(&sig, system, &j.context, &j.term, &j.ty)?;
                let m = Morphism::from_judgment(&sig, system, &j.context, &j.term)?;
                rows.push((j, sym_extract(&m)?));
            }
            if cli.json {
                let docs: Vec<Value> = rows
                    .iter()
                    .map(|(j, p)| {
                        json!({
                            "judgment": print::judgment_to_string(&j.context, &j.term, &j.ty),
                            "sym": p,
                        })
                    })
                    .collect();
                print_json(&json!({ "system": system.to_string(), "sym": docs }));
            } else {
                for (_, p) in &rows {
                    println!("{p}");
                }
            }
            Ok(0)
        }
        Command::Shuffles { blocks, count } => {
            let shuffles = enumerate_shuffles(blocks);
            if cli.json {
                print_json(&json!({
                    "blocks": blocks,
                    "count": shuffles.len(),
                    "shuffles": if *count { None } else { Some(&shuffles) },
                }));
            } else {
                if !*count {
                    for s in &shuffles {
                        println!("{s}");
                    }
                }
                println!("count: {}", shuffles.len());
            }
            Ok(0)
        }
    }
}
