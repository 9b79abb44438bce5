//! Type synthesis for the four systems, with derivations that record the
//! context shuffle used at every merge.
//!
//! Judgments are linear and relevant: context variables are distinct, each
//! is used exactly once, and every binder is used exactly once. Synthesis
//! is fully syntax-directed — at every node each premise context is the
//! order-preserving restriction of the node's context to the premise's
//! free variables, which makes the recorded permutation automatically a
//! shuffle and gives every derivable judgment exactly one derivation.
//!
//! The four systems:
//!
//! * [`System::Rep`] — lists and substitutions only, and every merge must
//!   concatenate premise contexts in rule order (identity shuffles);
//! * [`System::SymRep`] — same term formers, arbitrary shuffles;
//! * [`System::SymClosed`] — abstraction and application only;
//! * [`System::Auto`] — all formers, arbitrary shuffles.
//!
//! A substitution's body premise places the binder block at the *pin*: the
//! number of body variables preceding the first binder in the body's
//! concatenation-order listing ([`crate::syntax::Term::cvo`]). The pin
//! depends only on the term, so symmetric contexts reorder without moving
//! the block relative to the body's own variables, and on identity-shuffle
//! derivations it coincides with literal context concatenation.

use crate::perm::Permutation;
use crate::print;
use crate::signature::{SigError, Signature, SignatureKind, Type};
use crate::syntax::{CvoEntry, LinearityIssue, Term};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    Rep,
    SymRep,
    SymClosed,
    Auto,
}

impl System {
    pub const ALL: [System; 4] = [System::Rep, System::SymRep, System::SymClosed, System::Auto];

    /// Which types the system's judgments may mention.
    pub fn signature_kind(self) -> SignatureKind {
        match self {
            System::Rep | System::SymRep => SignatureKind::Representable,
            System::SymClosed => SignatureKind::Closed,
            System::Auto => SignatureKind::Autonomous,
        }
    }

    /// Whether merges may shuffle (everything but [`System::Rep`]).
    pub fn symmetric(self) -> bool {
        !matches!(self, System::Rep)
    }

    /// Whether the system has lists and list eta (everything but
    /// [`System::SymClosed`]).
    pub fn allows_tensor_terms(self) -> bool {
        !matches!(self, System::SymClosed)
    }

    /// Whether the system has abstraction, application, and function eta.
    pub fn allows_arrow_terms(self) -> bool {
        matches!(self, System::SymClosed | System::Auto)
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            System::Rep => "rep",
            System::SymRep => "symrep",
            System::SymClosed => "symclosed",
            System::Auto => "auto",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for System {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rep" => Ok(System::Rep),
            "symrep" => Ok(System::SymRep),
            "symclosed" => Ok(System::SymClosed),
            "auto" => Ok(System::Auto),
            other => Err(format!("unknown system `{other}` (rep|symrep|symclosed|auto)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error("variable `{0}` is not in the context")]
    UnknownVariable(String),
    #[error("context variable `{0}` is not used by the term")]
    UnusedVariable(String),
    #[error("context variable `{0}` is declared twice")]
    RepeatedContextVariable(String),
    #[error("variable `{0}` is used more than once")]
    NonLinearVariable(String),
    #[error("binder `{0}` is never used")]
    UnusedBinder(String),
    #[error("binder `{0}` is used more than once")]
    RepeatedBinder(String),
    #[error("{construct} terms are not part of the {system} system")]
    FragmentViolation { construct: &'static str, system: System },
    #[error("expected type {expected}, found {found}")]
    TypeMismatch { expected: String, found: String },
    #[error("applied term has type {found}, which is not an arrow")]
    NotAnArrow { found: String },
    #[error("application expects {expected} arguments, found {found}")]
    AppArity { expected: usize, found: usize },
    #[error("generator `{name}` expects {expected} arguments, found {found}")]
    GenArity { name: String, expected: usize, found: usize },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("context is not the in-order concatenation of premise contexts: {0}")]
    OrderViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Var,
    List,
    ESub,
    Abs,
    App,
    Gen,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Var => "var",
            Rule::List => "list",
            Rule::ESub => "sub",
            Rule::Abs => "abs",
            Rule::App => "app",
            Rule::Gen => "gen",
        };
        write!(f, "{s}")
    }
}

/// A derivation node. `term` is the subterm with every enclosing binder
/// group opened, so `ctx |- term : ty` is a self-contained judgment.
/// Premises follow child order (substitution: body then argument).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub system: System,
    pub rule: Rule,
    pub ctx: Vec<(String, Type)>,
    pub term: Term,
    pub ty: Type,
    /// For merge rules: maps premise-concatenation positions to context
    /// positions (the context is the inverse action of this shuffle on the
    /// concatenation of the premise contexts).
    pub shuffle: Option<Permutation>,
    /// Display names chosen for the binder group opened in the body premise
    /// (substitution and abstraction nodes).
    pub opened: Vec<String>,
    /// Substitution nodes: how many body variables precede the binder block
    /// in the body premise's context.
    pub pin: Option<usize>,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    /// Multi-line rendering, premises indented under the conclusion.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(0, &mut out);
        out
    }

    fn render_into(&self, depth: usize, out: &mut String) {
        let indent = "  ".repeat(depth);
        let tag = match &self.shuffle {
            Some(s) if !s.is_identity() => format!("[{} via {}]", self.rule, s),
            _ => format!("[{}]", self.rule),
        };
        out.push_str(&format!(
            "{indent}{}   {tag}\n",
            print::judgment_to_string(&self.ctx, &self.term, &self.ty)
        ));
        for p in &self.premises {
            p.render_into(depth + 1, out);
        }
    }
}

fn restrict(ctx: &[(String, Type)], keep: &HashSet<String>) -> Vec<(String, Type)> {
    ctx.iter().filter(|(x, _)| keep.contains(x)).cloned().collect()
}

fn fv_set(t: &Term) -> HashSet<String> {
    t.fv().into_iter().collect()
}

/// The shuffle recorded at a merge: for each position in the concatenation
/// of the premise contexts, the position of that variable in the node
/// context. Premise contexts are order-preserving restrictions, so the
/// result is always monotone on each premise block.
fn merge_shuffle(
    ctx: &[(String, Type)],
    premise_ctxs: &[&[(String, Type)]],
) -> Result<Permutation, TypeError> {
    let mut imgs = Vec::with_capacity(ctx.len());
    for pctx in premise_ctxs {
        for (x, _) in *pctx {
            let pos = ctx
                .iter()
                .position(|(y, _)| y == x)
                .expect("premise variable missing from node context");
            imgs.push(pos);
        }
    }
    Ok(Permutation::from_images(imgs).expect("premise contexts partition the node context"))
}

fn freshen_against(hint: &str, used: &HashSet<String>) -> String {
    let base = if hint.is_empty() { "v" } else { hint };
    let mut name = base.to_string();
    while used.contains(&name) {
        name.push('\'');
    }
    name
}

/// Typechecks `ctx |- term : ty` and returns the unique derivation.
pub fn check(
    sig: &Signature,
    system: System,
    ctx: &[(String, Type)],
    term: &Term,
    ty: &Type,
) -> Result<Derivation, TypeError> {
    let deriv = synthesize(sig, system, ctx, term)?;
    if &deriv.ty != ty {
        return Err(TypeError::TypeMismatch {
            expected: ty.to_string(),
            found: deriv.ty.to_string(),
        });
    }
    Ok(deriv)
}

/// Synthesizes the type of `term` in `ctx` and returns the derivation.
pub fn synthesize(
    sig: &Signature,
    system: System,
    ctx: &[(String, Type)],
    term: &Term,
) -> Result<Derivation, TypeError> {
    // Context sanity: distinct names, kind-valid types.
    let mut names = HashSet::new();
    for (x, a) in ctx {
        if !names.insert(x.clone()) {
            return Err(TypeError::RepeatedContextVariable(x.clone()));
        }
        validate_type(sig, system, a)?;
    }
    // Linearity of the term, relevance of the context.
    match term.linearity_issue() {
        Some(LinearityIssue::RepeatedFree(x)) => return Err(TypeError::NonLinearVariable(x)),
        Some(LinearityIssue::UnusedBinder(x)) => return Err(TypeError::UnusedBinder(x)),
        Some(LinearityIssue::RepeatedBinder(x)) => return Err(TypeError::RepeatedBinder(x)),
        None => {}
    }
    let fv = fv_set(term);
    for x in &fv {
        if !names.contains(x) {
            return Err(TypeError::UnknownVariable(x.clone()));
        }
    }
    for (x, _) in ctx {
        if !fv.contains(x) {
            return Err(TypeError::UnusedVariable(x.clone()));
        }
    }
    let mut used: HashSet<String> = names;
    synth_node(sig, system, ctx.to_vec(), term.clone(), &mut used)
}

fn validate_type(sig: &Signature, system: System, ty: &Type) -> Result<(), SigError> {
    ty.atoms_known(sig)?;
    if !ty.valid_for_kind(system.signature_kind()) {
        return Err(SigError::KindViolation { ty: ty.to_string(), kind: system.signature_kind() });
    }
    Ok(())
}

/// Recursive synthesis. Invariant: `ctx` is exactly the term's free
/// variables (each once), and `term` has no dangling bound variables.
fn synth_node(
    sig: &Signature,
    system: System,
    ctx: Vec<(String, Type)>,
    term: Term,
    used: &mut HashSet<String>,
) -> Result<Derivation, TypeError> {
    match &term {
        Term::FVar(x) => {
            debug_assert_eq!(ctx.len(), 1);
            debug_assert_eq!(&ctx[0].0, x);
            let ty = ctx[0].1.clone();
            Ok(Derivation {
                system,
                rule: Rule::Var,
                ctx,
                term,
                ty,
                shuffle: None,
                opened: vec![],
                pin: None,
                premises: vec![],
            })
        }
        Term::BVar { .. } => unreachable!("dangling bound variable reached synthesis"),
        Term::List(es) => {
            if !system.allows_tensor_terms() {
                return Err(TypeError::FragmentViolation { construct: "list", system });
            }
            let (premises, shuffle) =
                merge_premises(sig, system, &ctx, es.clone(), used)?;
            let ty = Type::Tensor(premises.iter().map(|p| p.ty.clone()).collect());
            Ok(Derivation {
                system,
                rule: Rule::List,
                ctx,
                term,
                ty,
                shuffle: Some(shuffle),
                opened: vec![],
                pin: None,
                premises,
            })
        }
        Term::Gen { name, args } => {
            let gen = sig
                .generator(name)
                .ok_or_else(|| TypeError::UnknownGenerator(name.clone()))?
                .clone();
            if gen.sources.len() != args.len() {
                return Err(TypeError::GenArity {
                    name: name.clone(),
                    expected: gen.sources.len(),
                    found: args.len(),
                });
            }
            for ty in gen.sources.iter().chain(std::iter::once(&gen.target)) {
                validate_type(sig, system, ty)?;
            }
            let (premises, shuffle) =
                merge_premises(sig, system, &ctx, args.clone(), used)?;
            for (p, want) in premises.iter().zip(&gen.sources) {
                if &p.ty != want {
                    return Err(TypeError::TypeMismatch {
                        expected: want.to_string(),
                        found: p.ty.to_string(),
                    });
                }
            }
            Ok(Derivation {
                system,
                rule: Rule::Gen,
                ctx,
                term,
                ty: gen.target,
                shuffle: Some(shuffle),
                opened: vec![],
                pin: None,
                premises,
            })
        }
        Term::ESub { body, binders, arg } => {
            if !system.allows_tensor_terms() {
                return Err(TypeError::FragmentViolation { construct: "substitution", system });
            }
            for b in binders {
                validate_type(sig, system, &b.ty)?;
            }
            // Argument premise: order-preserving restriction.
            let arg_fv = fv_set(arg);
            let arg_ctx = restrict(&ctx, &arg_fv);
            let arg_deriv =
                synth_node(sig, system, arg_ctx, arg.as_ref().clone(), used)?;
            let want = Type::Tensor(binders.iter().map(|b| b.ty.clone()).collect());
            if arg_deriv.ty != want {
                return Err(TypeError::TypeMismatch {
                    expected: want.to_string(),
                    found: arg_deriv.ty.to_string(),
                });
            }
            // Body premise: open the binders and place the block at the pin.
            let opened: Vec<String> = binders
                .iter()
                .map(|b| {
                    let n = freshen_against(&b.hint, used);
                    used.insert(n.clone());
                    n
                })
                .collect();
            let body_opened = body.open(&opened);
            let body_fv: HashSet<String> =
                fv_set(&body_opened).difference(&opened.iter().cloned().collect()).cloned().collect();
            let body_restriction = restrict(&ctx, &body_fv);
            let pin = binder_pin(&body_opened, &opened, binders.len());
            let mut body_ctx = body_restriction.clone();
            let block: Vec<(String, Type)> = opened
                .iter()
                .cloned()
                .zip(binders.iter().map(|b| b.ty.clone()))
                .collect();
            body_ctx.splice(pin..pin, block);
            let body_deriv = synth_node(sig, system, body_ctx, body_opened, used)?;
            // Recorded shuffle: body variables around the argument block,
            // in premise order (before-pin, argument, after-pin).
            let delta = &body_restriction[..pin];
            let delta2 = &body_restriction[pin..];
            let shuffle = merge_shuffle(&ctx, &[delta, &arg_deriv.ctx, delta2])?;
            if system == System::Rep && !shuffle.is_identity() {
                return Err(TypeError::OrderViolation(print::context_to_string(&ctx)));
            }
            let ty = body_deriv.ty.clone();
            Ok(Derivation {
                system,
                rule: Rule::ESub,
                ctx,
                term,
                ty,
                shuffle: Some(shuffle),
                opened,
                pin: Some(pin),
                premises: vec![body_deriv, arg_deriv],
            })
        }
        Term::Abs { binders, body } => {
            if !system.allows_arrow_terms() {
                return Err(TypeError::FragmentViolation { construct: "abstraction", system });
            }
            for b in binders {
                validate_type(sig, system, &b.ty)?;
            }
            let opened: Vec<String> = binders
                .iter()
                .map(|b| {
                    let n = freshen_against(&b.hint, used);
                    used.insert(n.clone());
                    n
                })
                .collect();
            let body_opened = body.open(&opened);
            let mut body_ctx = ctx.clone();
            body_ctx.extend(
                opened.iter().cloned().zip(binders.iter().map(|b| b.ty.clone())),
            );
            let body_deriv = synth_node(sig, system, body_ctx, body_opened, used)?;
            let ty = Type::Arrow(
                binders.iter().map(|b| b.ty.clone()).collect(),
                Box::new(body_deriv.ty.clone()),
            );
            Ok(Derivation {
                system,
                rule: Rule::Abs,
                ctx,
                term,
                ty,
                shuffle: None,
                opened,
                pin: None,
                premises: vec![body_deriv],
            })
        }
        Term::App { fun, args } => {
            if !system.allows_arrow_terms() {
                return Err(TypeError::FragmentViolation { construct: "application", system });
            }
            let mut children = vec![fun.as_ref().clone()];
            children.extend(args.iter().cloned());
            let (premises, shuffle) = merge_premises(sig, system, &ctx, children, used)?;
            let Type::Arrow(domain, codomain) = premises[0].ty.clone() else {
                return Err(TypeError::NotAnArrow { found: premises[0].ty.to_string() });
            };
            if domain.len() != args.len() {
                return Err(TypeError::AppArity { expected: domain.len(), found: args.len() });
            }
            for (p, want) in premises[1..].iter().zip(&domain) {
                if &p.ty != want {
                    return Err(TypeError::TypeMismatch {
                        expected: want.to_string(),
                        found: p.ty.to_string(),
                    });
                }
            }
            Ok(Derivation {
                system,
                rule: Rule::App,
                ctx,
                term,
                ty: *codomain,
                shuffle: Some(shuffle),
                opened: vec![],
                pin: None,
                premises,
            })
        }
    }
}

/// Synthesizes each child under the order-preserving restriction of `ctx`
/// to its free variables and records the merge shuffle. In the
/// representable system the shuffle must be the identity.
fn merge_premises(
    sig: &Signature,
    system: System,
    ctx: &[(String, Type)],
    children: Vec<Term>,
    used: &mut HashSet<String>,
) -> Result<(Vec<Derivation>, Permutation), TypeError> {
    let mut premises = Vec::with_capacity(children.len());
    for child in children {
        let child_ctx = restrict(ctx, &fv_set(&child));
        premises.push(synth_node(sig, system, child_ctx, child, used)?);
    }
    let pctxs: Vec<&[(String, Type)]> = premises.iter().map(|p| p.ctx.as_slice()).collect();
    let shuffle = merge_shuffle(ctx, &pctxs)?;
    if system == System::Rep && !shuffle.is_identity() {
        return Err(TypeError::OrderViolation(print::context_to_string(ctx)));
    }
    Ok((premises, shuffle))
}

/// Number of body variables that precede the first binder in the opened
/// body's concatenation-order listing. With no binders the block position
/// is irrelevant and the listing's end is used.
fn binder_pin(body_opened: &Term, opened: &[String], k: usize) -> usize {
    let entries = body_opened.cvo();
    let mut non_binder_before = 0;
    if k == 0 {
        // Every free entry that is a context variable counts; the block
        // conceptually sits after all of them.
        return entries
            .iter()
            .filter(|e| matches!(e, CvoEntry::Free(x) if !opened.contains(x)))
            .count();
    }
    for e in &entries {
        match e {
            CvoEntry::Free(x) if x == &opened[0] => return non_binder_before,
            CvoEntry::Free(x) if !opened.contains(x) => non_binder_before += 1,
            _ => {}
        }
    }
    non_binder_before
}

/// Reorders the conclusion context of a derivation by `perm` (the new
/// context is `perm.act(old)`) and pushes the permutation through the whole
/// derivation without re-deriving any type: premise restrictions are
/// recomputed by name and binder blocks stay at their pins. Fails in the
/// representable system when a recomputed merge stops being the identity.
pub fn admissible_permute(
    deriv: &Derivation,
    perm: &Permutation,
) -> Result<Derivation, TypeError> {
    let new_ctx = perm
        .act(&deriv.ctx)
        .map_err(|_| TypeError::OrderViolation("permutation degree mismatch".to_string()))?;
    permute_node(deriv, new_ctx)
}

fn permute_node(
    deriv: &Derivation,
    new_ctx: Vec<(String, Type)>,
) -> Result<Derivation, TypeError> {
    debug_assert_eq!(new_ctx.len(), deriv.ctx.len());
    let mut out = deriv.clone();
    match deriv.rule {
        Rule::Var => {
            out.ctx = new_ctx;
        }
        Rule::List | Rule::Gen | Rule::App => {
            let mut new_premises = Vec::with_capacity(deriv.premises.len());
            for p in &deriv.premises {
                let keep: HashSet<String> = p.ctx.iter().map(|(x, _)| x.clone()).collect();
                let p_ctx = restrict(&new_ctx, &keep);
                new_premises.push(permute_node(p, p_ctx)?);
            }
            let pctxs: Vec<&[(String, Type)]> =
                new_premises.iter().map(|p| p.ctx.as_slice()).collect();
            let shuffle = merge_shuffle(&new_ctx, &pctxs)?;
            if deriv.system == System::Rep && !shuffle.is_identity() {
                return Err(TypeError::OrderViolation(print::context_to_string(&new_ctx)));
            }
            out.premises = new_premises;
            out.shuffle = Some(shuffle);
            out.ctx = new_ctx;
        }
        Rule::ESub => {
            let body = &deriv.premises[0];
            let arg = &deriv.premises[1];
            let pin = deriv.pin.expect("substitution node has a pin");
            let block: Vec<(String, Type)> = body.ctx[pin..pin + deriv.opened.len()].to_vec();
            let body_free: HashSet<String> = body
                .ctx
                .iter()
                .map(|(x, _)| x.clone())
                .filter(|x| !deriv.opened.contains(x))
                .collect();
            let body_restriction = restrict(&new_ctx, &body_free);
            let mut body_ctx = body_restriction.clone();
            body_ctx.splice(pin..pin, block);
            let arg_keep: HashSet<String> = arg.ctx.iter().map(|(x, _)| x.clone()).collect();
            let arg_ctx = restrict(&new_ctx, &arg_keep);
            let new_body = permute_node(body, body_ctx)?;
            let new_arg = permute_node(arg, arg_ctx)?;
            let delta = &body_restriction[..pin];
            let delta2 = &body_restriction[pin..];
            let shuffle = merge_shuffle(&new_ctx, &[delta, &new_arg.ctx, delta2])?;
            if deriv.system == System::Rep && !shuffle.is_identity() {
                return Err(TypeError::OrderViolation(print::context_to_string(&new_ctx)));
            }
            out.premises = vec![new_body, new_arg];
            out.shuffle = Some(shuffle);
            out.ctx = new_ctx;
        }
        Rule::Abs => {
            let body = &deriv.premises[0];
            let k = deriv.opened.len();
            let block: Vec<(String, Type)> = body.ctx[body.ctx.len() - k..].to_vec();
            let mut body_ctx = new_ctx.clone();
            body_ctx.extend(block);
            out.premises = vec![permute_node(body, body_ctx)?];
            out.ctx = new_ctx;
        }
    }
    Ok(out)
}
