//! Reduction: beta steps, eta expansions, normalization with traces, the
//! termination measures, and structural equivalence of substitution chains.
//!
//! The redexes:
//!
//! * `beta1` — `s[x⃗ := L[⟨t⃗⟩]] ⇒ L[s{x⃗ := t⃗}]` where `L` is a
//!   substitution chain;
//! * `beta2` — `(L[λ⟨x⃗⟩. p]) ⟨t⃗⟩ ⇒ L[p{x⃗ := t⃗}]`;
//! * `eta1` — `s ⇒ ⟨y⃗⟩[y⃗ := s]` at tensor type, excluded when `s` is a
//!   chain over a list or sits immediately under a `:=` or at the body of a
//!   substitution (the expansion targets whole chains, never their parts);
//! * `eta2` — `s ⇒ λ⟨y⃗⟩. s ⟨y⃗⟩` at arrow type, excluded when `s` is a
//!   chain over an abstraction or sits in function position or at the body
//!   of a substitution.
//!
//! Each eta1 step decreases `eta1` (the sum of tensor weights over eligible
//! positions) by exactly one, each eta2 step decreases `eta2` likewise, and
//! beta steps decrease the size, so `size + eta1 + eta2` plus slack bounds
//! every reduction sequence; `normalize` enforces that budget.
//!
//! Structural equivalence permits a substitution to move through any
//! constructor that does not capture its argument's variables — including
//! in and out of the argument of another substitution — and to commute with
//! an adjacent independent substitution. Restricting eta to chain tops makes
//! the eligible-position set invariant under these moves, which is what
//! makes the equivalence a strong bisimulation for reduction.
//! [`struct_canon`] computes a canonical representative by flattening every
//! chain into its enclosing region (delimited by capturing binders) and
//! re-ordering independent elements by a fixed key (position of the
//! leftmost bound-variable occurrence in the region's constructor skeleton,
//! then a capture-structure tie-break).

use crate::signature::{Signature, Type};
use crate::syntax::{Binder, FreshNames, Path, PathStep, Term};
use crate::typing::{check, synthesize, Derivation, Rule, System, TypeError};
use std::collections::{HashMap, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RewriteError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("normalization exceeded its step budget of {budget}")]
    Budget { budget: u64 },
    #[error("no redex of the requested kind at the given position")]
    InvalidRedex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RedexKind {
    Beta1,
    Beta2,
    Eta1,
    Eta2,
}

impl fmt::Display for RedexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RedexKind::Beta1 => "beta1",
            RedexKind::Beta2 => "beta2",
            RedexKind::Eta1 => "eta1",
            RedexKind::Eta2 => "eta2",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Redex {
    pub kind: RedexKind,
    pub path: Path,
    /// Type of the subterm at `path` (used by the eta expansions).
    pub ty: Type,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measures {
    pub size: u64,
    pub eta1: u64,
    pub eta2: u64,
}

/// The termination measures of a typed term: its size and, for each eta
/// rule, the total weight of the positions where that rule still applies
/// or could come to apply.
pub fn measures(deriv: &Derivation) -> Measures {
    let mut m = Measures { size: deriv.term.size(), eta1: 0, eta2: 0 };
    measure_walk(deriv, None, &mut m);
    m
}

fn measure_walk(d: &Derivation, last: Option<PathStep>, m: &mut Measures) {
    let eta1_excluded = matches!(last, Some(PathStep::ESubArg) | Some(PathStep::ESubBody))
        || d.term.is_list_under_chain();
    let eta2_excluded = matches!(last, Some(PathStep::AppFun) | Some(PathStep::ESubBody))
        || d.term.is_abs_under_chain();
    if !eta1_excluded {
        m.eta1 += d.ty.tensor_weight();
    }
    if !eta2_excluded {
        m.eta2 += d.ty.arrow_weight();
    }
    for (step, premise) in premise_steps(d) {
        measure_walk(premise, Some(step), m);
    }
}

/// Pairs each premise with the path step leading to it.
fn premise_steps(d: &Derivation) -> Vec<(PathStep, &Derivation)> {
    match d.rule {
        Rule::Var => vec![],
        Rule::List => d
            .premises
            .iter()
            .enumerate()
            .map(|(i, p)| (PathStep::ListElem(i), p))
            .collect(),
        Rule::Gen => d
            .premises
            .iter()
            .enumerate()
            .map(|(i, p)| (PathStep::GenArg(i), p))
            .collect(),
        Rule::ESub => vec![
            (PathStep::ESubBody, &d.premises[0]),
            (PathStep::ESubArg, &d.premises[1]),
        ],
        Rule::Abs => vec![(PathStep::AbsBody, &d.premises[0])],
        Rule::App => d
            .premises
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if i == 0 {
                    (PathStep::AppFun, p)
                } else {
                    (PathStep::AppArg(i - 1), p)
                }
            })
            .collect(),
    }
}

/// All redexes, outermost first, beta before eta at the same node, children
/// in syntactic order — so the first entry is the leftmost-outermost one.
pub fn find_redexes(deriv: &Derivation) -> Vec<Redex> {
    let mut out = Vec::new();
    redex_walk(deriv, None, &mut Vec::new(), &mut out);
    out
}

fn redex_walk(d: &Derivation, last: Option<PathStep>, path: &mut Path, out: &mut Vec<Redex>) {
    let system = d.system;
    match &d.term {
        Term::ESub { arg, .. } if arg.is_list_under_chain() => {
            out.push(Redex { kind: RedexKind::Beta1, path: path.clone(), ty: d.ty.clone() });
        }
        Term::App { fun, .. } if fun.is_abs_under_chain() => {
            out.push(Redex { kind: RedexKind::Beta2, path: path.clone(), ty: d.ty.clone() });
        }
        _ => {}
    }
    let eta1_excluded = matches!(last, Some(PathStep::ESubArg) | Some(PathStep::ESubBody))
        || d.term.is_list_under_chain();
    if system.allows_tensor_terms() && matches!(d.ty, Type::Tensor(_)) && !eta1_excluded {
        out.push(Redex { kind: RedexKind::Eta1, path: path.clone(), ty: d.ty.clone() });
    }
    let eta2_excluded = matches!(last, Some(PathStep::AppFun) | Some(PathStep::ESubBody))
        || d.term.is_abs_under_chain();
    if system.allows_arrow_terms() && matches!(d.ty, Type::Arrow(..)) && !eta2_excluded {
        out.push(Redex { kind: RedexKind::Eta2, path: path.clone(), ty: d.ty.clone() });
    }
    for (step, premise) in premise_steps(d) {
        path.push(step);
        redex_walk(premise, Some(step), path, out);
        path.pop();
    }
}

struct ChainElem {
    binders: Vec<Binder>,
    names: Vec<String>,
    arg: Term,
}

/// Peels a substitution chain, opening each binder group with internal
/// names; returns the elements outermost-first and the fully opened core.
fn open_chain(t: &Term, fresh: &mut FreshNames) -> (Vec<ChainElem>, Term) {
    let mut elems = Vec::new();
    let mut cur = t.clone();
    while let Term::ESub { body, binders, arg } = cur {
        let names: Vec<String> = binders.iter().map(|_| fresh.internal()).collect();
        let opened = body.open(&names);
        elems.push(ChainElem { binders, names, arg: *arg });
        cur = opened;
    }
    (elems, cur)
}

fn rebuild_chain(elems: Vec<ChainElem>, core: Term) -> Term {
    let mut t = core;
    for e in elems.into_iter().rev() {
        t = Term::ESub {
            body: Box::new(t.close(&e.names)),
            binders: e.binders,
            arg: Box::new(e.arg),
        };
    }
    t
}

/// Applies one redex. The term must have no dangling bound variables; the
/// path's binder groups are opened on the way down and re-closed on the
/// way back up, so the local rewrite works on locally closed subterms.
pub fn step(term: &Term, redex: &Redex, fresh: &mut FreshNames) -> Result<Term, RewriteError> {
    step_at(term, &redex.path, redex, fresh)
}

fn step_at(
    term: &Term,
    path: &[PathStep],
    redex: &Redex,
    fresh: &mut FreshNames,
) -> Result<Term, RewriteError> {
    let Some((head, rest)) = path.split_first() else {
        return apply_redex(term, redex, fresh);
    };
    match (term, head) {
        (Term::List(es), PathStep::ListElem(i)) if *i < es.len() => {
            let mut es = es.clone();
            es[*i] = step_at(&es[*i], rest, redex, fresh)?;
            Ok(Term::List(es))
        }
        (Term::Gen { name, args }, PathStep::GenArg(i)) if *i < args.len() => {
            let mut args = args.clone();
            args[*i] = step_at(&args[*i], rest, redex, fresh)?;
            Ok(Term::Gen { name: name.clone(), args })
        }
        (Term::App { fun, args }, PathStep::AppFun) => Ok(Term::App {
            fun: Box::new(step_at(fun, rest, redex, fresh)?),
            args: args.clone(),
        }),
        (Term::App { fun, args }, PathStep::AppArg(i)) if *i < args.len() => {
            let mut args = args.clone();
            args[*i] = step_at(&args[*i], rest, redex, fresh)?;
            Ok(Term::App { fun: fun.clone(), args })
        }
        (Term::ESub { body, binders, arg }, PathStep::ESubArg) => Ok(Term::ESub {
            body: body.clone(),
            binders: binders.clone(),
            arg: Box::new(step_at(arg, rest, redex, fresh)?),
        }),
        (Term::ESub { body, binders, arg }, PathStep::ESubBody) => {
            let names: Vec<String> = binders.iter().map(|_| fresh.internal()).collect();
            let new_body = step_at(&body.open(&names), rest, redex, fresh)?;
            Ok(Term::ESub {
                body: Box::new(new_body.close(&names)),
                binders: binders.clone(),
                arg: arg.clone(),
            })
        }
        (Term::Abs { binders, body }, PathStep::AbsBody) => {
            let names: Vec<String> = binders.iter().map(|_| fresh.internal()).collect();
            let new_body = step_at(&body.open(&names), rest, redex, fresh)?;
            Ok(Term::Abs { binders: binders.clone(), body: Box::new(new_body.close(&names)) })
        }
        _ => Err(RewriteError::InvalidRedex),
    }
}

fn apply_redex(term: &Term, redex: &Redex, fresh: &mut FreshNames) -> Result<Term, RewriteError> {
    match redex.kind {
        RedexKind::Beta1 => {
            let Term::ESub { body, binders, arg } = term else {
                return Err(RewriteError::InvalidRedex);
            };
            let (elems, core) = open_chain(arg, fresh);
            let Term::List(ts) = core else {
                return Err(RewriteError::InvalidRedex);
            };
            if ts.len() != binders.len() {
                return Err(RewriteError::InvalidRedex);
            }
            Ok(rebuild_chain(elems, body.instantiate(&ts)))
        }
        RedexKind::Beta2 => {
            let Term::App { fun, args } = term else {
                return Err(RewriteError::InvalidRedex);
            };
            let (elems, core) = open_chain(fun, fresh);
            let Term::Abs { binders, body } = core else {
                return Err(RewriteError::InvalidRedex);
            };
            if args.len() != binders.len() {
                return Err(RewriteError::InvalidRedex);
            }
            Ok(rebuild_chain(elems, body.instantiate(args)))
        }
        RedexKind::Eta1 => {
            let Type::Tensor(parts) = &redex.ty else {
                return Err(RewriteError::InvalidRedex);
            };
            let binders: Vec<Binder> =
                parts.iter().map(|ty| Binder { hint: fresh.visible(), ty: ty.clone() }).collect();
            let body =
                Term::List((0..parts.len()).map(|i| Term::BVar { group: 0, slot: i }).collect());
            Ok(Term::ESub { body: Box::new(body), binders, arg: Box::new(term.clone()) })
        }
        RedexKind::Eta2 => {
            let Type::Arrow(domain, _) = &redex.ty else {
                return Err(RewriteError::InvalidRedex);
            };
            let binders: Vec<Binder> =
                domain.iter().map(|ty| Binder { hint: fresh.visible(), ty: ty.clone() }).collect();
            let body = Term::App {
                fun: Box::new(term.clone()),
                args: (0..domain.len()).map(|i| Term::BVar { group: 0, slot: i }).collect(),
            };
            Ok(Term::Abs { binders, body: Box::new(body) })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub kind: RedexKind,
    pub path: Path,
    /// Measures of the term *after* this step.
    pub measures: Measures,
}

#[derive(Debug, Clone)]
pub struct Normalization {
    pub term: Term,
    pub derivation: Derivation,
    pub initial: Measures,
    pub budget: u64,
    pub trace: Vec<TraceStep>,
}

fn reserved_names<'a>(ctx: &'a [(String, Type)], term: &Term) -> Vec<String> {
    fn hints(t: &Term, out: &mut Vec<String>) {
        match t {
            Term::FVar(_) | Term::BVar { .. } => {}
            Term::List(es) => es.iter().for_each(|e| hints(e, out)),
            Term::Gen { args, .. } => args.iter().for_each(|a| hints(a, out)),
            Term::App { fun, args } => {
                hints(fun, out);
                args.iter().for_each(|a| hints(a, out));
            }
            Term::ESub { body, binders, arg } => {
                out.extend(binders.iter().map(|b| b.hint.clone()));
                hints(body, out);
                hints(arg, out);
            }
            Term::Abs { binders, body } => {
                out.extend(binders.iter().map(|b| b.hint.clone()));
                hints(body, out);
            }
        }
    }
    let mut out: Vec<String> = ctx.iter().map(|(x, _)| x.clone()).collect();
    out.extend(term.fv());
    hints(term, &mut out);
    out
}

/// Normalizes by leftmost-outermost reduction, beta before eta, tracing
/// every step. The step budget is `size + eta1 + eta2 + 16` of the input;
/// exceeding it aborts with an error rather than looping.
pub fn normalize(
    sig: &Signature,
    system: System,
    ctx: &[(String, Type)],
    term: &Term,
) -> Result<Normalization, RewriteError> {
    let mut deriv = synthesize(sig, system, ctx, term)?;
    let initial = measures(&deriv);
    let budget = initial.size + initial.eta1 + initial.eta2 + 16;
    let reserved = reserved_names(ctx, term);
    let mut fresh = FreshNames::avoiding(reserved.iter().map(|s| s.as_str()));
    let mut current = term.clone();
    let mut trace = Vec::new();
    loop {
        let redexes = find_redexes(&deriv);
        let Some(redex) = redexes.first() else {
            return Ok(Normalization { term: current, derivation: deriv, initial, budget, trace });
        };
        if trace.len() as u64 >= budget {
            return Err(RewriteError::Budget { budget });
        }
        current = step(&current, redex, &mut fresh)?;
        deriv = synthesize(sig, system, ctx, &current)?;
        trace.push(TraceStep {
            kind: redex.kind,
            path: redex.path.clone(),
            measures: measures(&deriv),
        });
    }
}

/// Beta-eta equivalence: both terms are normalized and the normal forms
/// compared up to structural equivalence. The terms must both check at the
/// same type in the given context.
pub fn equivalent(
    sig: &Signature,
    system: System,
    ctx: &[(String, Type)],
    left: &Term,
    right: &Term,
) -> Result<bool, RewriteError> {
    let ln = normalize(sig, system, ctx, left)?;
    check(sig, system, ctx, right, &ln.derivation.ty)?;
    let rn = normalize(sig, system, ctx, right)?;
    Ok(struct_equiv(&ln.term, &rn.term))
}

/// The normal-form grammar of the representable system over a discrete
/// signature: a chain of substitutions whose arguments are variables, over
/// a core built from lists and variables, every variable in the core being
/// of atomic type. Checked on the derivation so the types are available.
pub fn is_discrete_rep_nf(deriv: &Derivation) -> bool {
    fn core_ok(d: &Derivation) -> bool {
        match d.rule {
            Rule::Var => matches!(d.ty, Type::Atom(_)),
            Rule::List => d.premises.iter().all(core_ok),
            _ => false,
        }
    }
    let mut cur = deriv;
    while cur.rule == Rule::ESub {
        if cur.premises[1].rule != Rule::Var {
            return false;
        }
        cur = &cur.premises[0];
    }
    core_ok(cur)
}

// ---------------------------------------------------------------------------
// Structural equivalence.
// ---------------------------------------------------------------------------

/// Working tree for canonicalization: every binder opened with a unique
/// internal name, every substitution lifted out of the constructor tree
/// into the region (root or enclosing abstraction body) it can float to.
#[derive(Debug, Clone)]
enum CTree {
    Var(String),
    List(Vec<CTree>),
    Gen(String, Vec<CTree>),
    App(Box<CTree>, Vec<CTree>),
    Abs { binders: Vec<Binder>, names: Vec<String>, region: Region },
}

#[derive(Debug, Clone)]
struct Region {
    /// Substitution elements, innermost first once sorted.
    elems: Vec<CElem>,
    core: Box<CTree>,
}

#[derive(Debug, Clone)]
struct CElem {
    id: usize,
    binders: Vec<Binder>,
    names: Vec<String>,
    /// The argument with its own substitutions floated out: the congruence
    /// contexts reach inside argument slots, so chains cross the `:=`
    /// boundary and the stored argument is a bare constructor tree.
    arg: CTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NameOrigin {
    Lam { depth: usize, slot: usize },
    Elem { id: usize, slot: usize },
}

/// Sort key for chain elements. Ordered by the skeleton position of the
/// leftmost binder occurrence, then binder types, then the argument with
/// every variable replaced by its capture structure — user variables by
/// name, abstraction binders by depth, element binders by the owning
/// element's own key. Equal keys mean the elements are interchangeable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ElemKey {
    core_pos: usize,
    binder_tys: Vec<Type>,
    arg: MTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum NameMark {
    User(String),
    Lam(usize, usize),
    Elem(Box<ElemKey>, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum MTerm {
    Var(NameMark),
    List(Vec<MTerm>),
    Gen(String, Vec<MTerm>),
    App(Box<MTerm>, Vec<MTerm>),
    /// Binder types, the sorted keys of the pinned elements, the core.
    Abs(Vec<Type>, Vec<ElemKey>, Box<MTerm>),
}

#[derive(Default)]
struct Canon {
    counter: usize,
    next_elem: usize,
    origin: HashMap<String, NameOrigin>,
    /// Element data for key computation: binders, names, argument.
    elem_info: HashMap<usize, (Vec<Type>, Vec<String>, CTree)>,
    /// Region (by id) each element belongs to.
    elem_region: HashMap<usize, usize>,
    /// Skeleton positions of names, per region id.
    positions: HashMap<usize, HashMap<String, usize>>,
    keys: HashMap<usize, ElemKey>,
}

impl Canon {
    fn fresh(&mut self) -> String {
        self.counter += 1;
        format!("~{}", self.counter)
    }

    // ---- phase A: build the region tree ----

    fn build(
        &mut self,
        t: &Term,
        env: &mut Vec<Vec<String>>,
        depth: usize,
    ) -> (Vec<CElem>, CTree) {
        match t {
            Term::FVar(x) => (vec![], CTree::Var(x.clone())),
            Term::BVar { group, slot } => {
                let g = env.len().checked_sub(1 + group).expect("dangling bound variable");
                (vec![], CTree::Var(env[g][*slot].clone()))
            }
            Term::List(es) => {
                let mut elems = Vec::new();
                let mut cores = Vec::new();
                for e in es {
                    let (mut el, core) = self.build(e, env, depth);
                    elems.append(&mut el);
                    cores.push(core);
                }
                (elems, CTree::List(cores))
            }
            Term::Gen { name, args } => {
                let mut elems = Vec::new();
                let mut cores = Vec::new();
                for a in args {
                    let (mut el, core) = self.build(a, env, depth);
                    elems.append(&mut el);
                    cores.push(core);
                }
                (elems, CTree::Gen(name.clone(), cores))
            }
            Term::App { fun, args } => {
                let (mut elems, fun_core) = self.build(fun, env, depth);
                let mut cores = Vec::new();
                for a in args {
                    let (mut el, core) = self.build(a, env, depth);
                    elems.append(&mut el);
                    cores.push(core);
                }
                (elems, CTree::App(Box::new(fun_core), cores))
            }
            Term::ESub { body, binders, arg } => {
                let id = self.next_elem;
                self.next_elem += 1;
                let names: Vec<String> = (0..binders.len()).map(|_| self.fresh()).collect();
                for (slot, n) in names.iter().enumerate() {
                    self.origin.insert(n.clone(), NameOrigin::Elem { id, slot });
                }
                env.push(names.clone());
                let (mut elems, core) = self.build(body, env, depth);
                env.pop();
                // Chains inside the argument float out across the `:=` into
                // this element's region; placement order is recovered from
                // binder dependencies when the region is sorted.
                let (mut arg_elems, arg_core) = self.build(arg, env, depth);
                elems.append(&mut arg_elems);
                self.elem_info.insert(
                    id,
                    (
                        binders.iter().map(|b| b.ty.clone()).collect(),
                        names.clone(),
                        arg_core.clone(),
                    ),
                );
                elems.push(CElem { id, binders: binders.clone(), names, arg: arg_core });
                (elems, core)
            }
            Term::Abs { binders, body } => {
                let names: Vec<String> = (0..binders.len()).map(|_| self.fresh()).collect();
                for (slot, n) in names.iter().enumerate() {
                    self.origin.insert(n.clone(), NameOrigin::Lam { depth, slot });
                }
                env.push(names.clone());
                let (body_elems, body_core) = self.build(body, env, depth + 1);
                env.pop();
                // Pin the elements that cannot leave this abstraction: those
                // whose argument uses a binder of the abstraction, closed
                // under using a binder of an already pinned element.
                let mut pinned_names: HashSet<String> = names.iter().cloned().collect();
                let mut pinned: Vec<bool> = vec![false; body_elems.len()];
                loop {
                    let mut changed = false;
                    for (i, e) in body_elems.iter().enumerate() {
                        if !pinned[i]
                            && tree_vars(&e.arg).iter().any(|v| pinned_names.contains(v))
                        {
                            pinned[i] = true;
                            pinned_names.extend(e.names.iter().cloned());
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                let mut stay = Vec::new();
                let mut float = Vec::new();
                for (i, e) in body_elems.into_iter().enumerate() {
                    if pinned[i] {
                        stay.push(e);
                    } else {
                        float.push(e);
                    }
                }
                let node = CTree::Abs {
                    binders: binders.clone(),
                    names,
                    region: Region { elems: stay, core: Box::new(body_core) },
                };
                (float, node)
            }
        }
    }

    // ---- phase B: skeleton positions and element keys ----

    fn index_regions(&mut self, region: &Region, next_region: &mut usize) {
        let rid = *next_region;
        *next_region += 1;
        for e in &region.elems {
            self.elem_region.insert(e.id, rid);
        }
        let mut pos = HashMap::new();
        let mut idx = 0;
        skeleton_positions(&region.core, &mut pos, &mut idx);
        self.positions.insert(rid, pos);
        // Recurse into nested regions: abstractions inside the core and
        // inside the arguments of this region's elements.
        for e in &region.elems {
            self.index_tree(&e.arg, next_region);
        }
        self.index_tree(&region.core, next_region);
    }

    fn index_tree(&mut self, t: &CTree, next_region: &mut usize) {
        match t {
            CTree::Var(_) => {}
            CTree::List(es) | CTree::Gen(_, es) => {
                es.iter().for_each(|e| self.index_tree(e, next_region))
            }
            CTree::App(f, es) => {
                self.index_tree(f, next_region);
                es.iter().for_each(|e| self.index_tree(e, next_region));
            }
            CTree::Abs { region, .. } => self.index_regions(region, next_region),
        }
    }

    fn key(&mut self, id: usize) -> ElemKey {
        if let Some(k) = self.keys.get(&id) {
            return k.clone();
        }
        let (binder_tys, names, arg) = self.elem_info.get(&id).expect("known element").clone();
        let rid = self.elem_region[&id];
        let posmap = &self.positions[&rid];
        let core_pos =
            names.iter().filter_map(|n| posmap.get(n)).min().copied().unwrap_or(usize::MAX);
        let arg_mark = self.mark(&arg);
        let key = ElemKey { core_pos, binder_tys, arg: arg_mark };
        self.keys.insert(id, key.clone());
        key
    }

    fn mark(&mut self, t: &CTree) -> MTerm {
        match t {
            CTree::Var(x) => match self.origin.get(x).copied() {
                None => MTerm::Var(NameMark::User(x.clone())),
                Some(NameOrigin::Lam { depth, slot }) => MTerm::Var(NameMark::Lam(depth, slot)),
                Some(NameOrigin::Elem { id, slot }) => {
                    MTerm::Var(NameMark::Elem(Box::new(self.key(id)), slot))
                }
            },
            CTree::List(es) => MTerm::List(es.iter().map(|e| self.mark(e)).collect()),
            CTree::Gen(n, es) => {
                MTerm::Gen(n.clone(), es.iter().map(|e| self.mark(e)).collect())
            }
            CTree::App(f, es) => MTerm::App(
                Box::new(self.mark(f)),
                es.iter().map(|e| self.mark(e)).collect(),
            ),
            CTree::Abs { binders, region, .. } => {
                let mut keys: Vec<ElemKey> =
                    region.elems.iter().map(|e| self.key(e.id)).collect();
                keys.sort();
                MTerm::Abs(
                    binders.iter().map(|b| b.ty.clone()).collect(),
                    keys,
                    Box::new(self.mark(&region.core)),
                )
            }
        }
    }

    // ---- phase C: sort every region and rebuild ----

    fn sort_region(&mut self, region: &mut Region) {
        for e in &mut region.elems {
            sort_tree(self, &mut e.arg);
        }
        sort_tree(self, &mut region.core);
        let mut remaining: Vec<CElem> = std::mem::take(&mut region.elems);
        let mut ordered = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            // An element can be placed once nothing still unplaced refers
            // to its binders (inner elements are placed first).
            let mut best: Option<usize> = None;
            for (i, e) in remaining.iter().enumerate() {
                let blocked = remaining.iter().enumerate().any(|(j, other)| {
                    j != i && tree_vars(&other.arg).iter().any(|v| e.names.contains(v))
                });
                if blocked {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        if self.key(remaining[i].id) < self.key(remaining[b].id) {
                            Some(i)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            let Some(i) = best else {
                // Impossible on well-scoped linear input; fall back to the
                // collected order so the function stays total.
                ordered.append(&mut remaining);
                break;
            };
            ordered.push(remaining.remove(i));
        }
        region.elems = ordered;
    }
}

fn sort_tree(canon: &mut Canon, t: &mut CTree) {
    match t {
        CTree::Var(_) => {}
        CTree::List(es) | CTree::Gen(_, es) => es.iter_mut().for_each(|e| sort_tree(canon, e)),
        CTree::App(f, es) => {
            sort_tree(canon, f);
            es.iter_mut().for_each(|e| sort_tree(canon, e));
        }
        CTree::Abs { region, .. } => canon.sort_region(region),
    }
}

fn skeleton_positions(t: &CTree, pos: &mut HashMap<String, usize>, idx: &mut usize) {
    *idx += 1;
    match t {
        CTree::Var(x) => {
            pos.entry(x.clone()).or_insert(*idx);
        }
        CTree::List(es) | CTree::Gen(_, es) => {
            es.iter().for_each(|e| skeleton_positions(e, pos, idx))
        }
        CTree::App(f, es) => {
            skeleton_positions(f, pos, idx);
            es.iter().for_each(|e| skeleton_positions(e, pos, idx));
        }
        // Descend into the nested core but not into the nested elements:
        // skeletons ignore chains entirely, so positions are stable under
        // every chain rearrangement.
        CTree::Abs { region, .. } => skeleton_positions(&region.core, pos, idx),
    }
}

fn tree_vars_into(t: &CTree, out: &mut Vec<String>) {
    match t {
        CTree::Var(x) => out.push(x.clone()),
        CTree::List(es) | CTree::Gen(_, es) => es.iter().for_each(|e| tree_vars_into(e, out)),
        CTree::App(f, es) => {
            tree_vars_into(f, out);
            es.iter().for_each(|e| tree_vars_into(e, out));
        }
        CTree::Abs { region, .. } => region_vars_into(region, out),
    }
}

fn region_vars_into(r: &Region, out: &mut Vec<String>) {
    for e in &r.elems {
        tree_vars_into(&e.arg, out);
    }
    tree_vars_into(&r.core, out);
}

fn tree_vars(t: &CTree) -> Vec<String> {
    let mut out = Vec::new();
    tree_vars_into(t, &mut out);
    out
}

fn rebuild(t: &CTree) -> Term {
    match t {
        CTree::Var(x) => Term::FVar(x.clone()),
        CTree::List(es) => Term::List(es.iter().map(rebuild).collect()),
        CTree::Gen(n, es) => Term::Gen { name: n.clone(), args: es.iter().map(rebuild).collect() },
        CTree::App(f, es) => Term::App {
            fun: Box::new(rebuild(f)),
            args: es.iter().map(rebuild).collect(),
        },
        CTree::Abs { binders, names, region } => Term::Abs {
            binders: binders.clone(),
            body: Box::new(rebuild_region(region).close(names)),
        },
    }
}

fn rebuild_region(region: &Region) -> Term {
    let mut t = rebuild(&region.core);
    for e in &region.elems {
        t = Term::ESub {
            body: Box::new(t.close(&e.names)),
            binders: e.binders.clone(),
            arg: Box::new(rebuild(&e.arg)),
        };
    }
    t
}

/// Canonical representative of a term's structural-equivalence class.
/// Every substitution is floated as far out as scoping allows — through
/// constructors and across `:=` boundaries, stopping only below a binder
/// that captures a variable of its argument — and adjacent independent
/// substitutions are put in a fixed order. Two terms are structurally
/// equivalent iff their canonical forms are equal.
pub fn struct_canon(term: &Term) -> Term {
    let mut canon = Canon::default();
    let (elems, core) = canon.build(term, &mut Vec::new(), 0);
    let mut root = Region { elems, core: Box::new(core) };
    let mut next_region = 0;
    canon.index_regions(&root, &mut next_region);
    canon.sort_region(&mut root);
    rebuild_region(&root)
}

/// Structural equivalence: substitutions may move through constructors
/// (without capture) and commute when independent.
pub fn struct_equiv(a: &Term, b: &Term) -> bool {
    struct_canon(a) == struct_canon(b)
}

// ---------------------------------------------------------------------------
