//! Term syntax for the resource calculi, with locally nameless binding.
//!
//! Constructors:
//!
//! * variables,
//! * lists `⟨s₁,…,s_k⟩` (tensor introduction),
//! * explicit substitutions `s[x₁:a₁,…,x_k:a_k := t]` (tensor elimination;
//!   the binders scope over `s`),
//! * abstractions `λ⟨x₁:a₁,…,x_k:a_k⟩. s`,
//! * applications `s⟨t₁,…,t_k⟩` — the argument vector is part of the node,
//! * generator applications `f(s₁,…,s_k)`.
//!
//! Bound variables are de Bruijn pairs `(group, slot)` where `group` counts
//! binder groups between occurrence and binder; free variables are names.
//! Alpha-equivalence is therefore plain structural equality: binder name
//! hints are kept for printing but ignored by `Eq` and `Hash`.
//!
//! Terms of interest are *linear*: every free variable and every binder
//! occurs exactly once. Substitution is name-routed, which on linear terms
//! coincides with routing by the occurrence decomposition (the test suite
//! checks this against the occurrence oracle).

use crate::signature::Type;
use std::fmt;
use std::hash::{Hash, Hasher};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("substitution arity mismatch: {vars} variables, {terms} terms")]
    ArityMismatch { vars: usize, terms: usize },
    #[error("variable `{0}` is not free in the term")]
    NotFree(String),
    #[error("variable `{0}` occurs more than once")]
    NotLinear(String),
}

/// A binder: printing hint plus type annotation. Equality and hashing ignore
/// the hint, so term equality is alpha-equivalence.
#[derive(Debug, Clone)]
pub struct Binder {
    pub hint: String,
    pub ty: Type,
}

impl Binder {
    pub fn new(hint: &str, ty: Type) -> Binder {
        Binder { hint: hint.to_string(), ty }
    }
}

impl PartialEq for Binder {
    fn eq(&self, other: &Self) -> bool {
        self.ty == other.ty
    }
}

impl Eq for Binder {}

impl Hash for Binder {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ty.hash(state);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// Free variable.
    FVar(String),
    /// Bound variable: `group` binder groups out, position `slot` within it.
    BVar { group: usize, slot: usize },
    List(Vec<Term>),
    /// `body[binders := arg]`; the binders bind in `body` only.
    ESub { body: Box<Term>, binders: Vec<Binder>, arg: Box<Term> },
    /// `λ⟨binders⟩. body`.
    Abs { binders: Vec<Binder>, body: Box<Term> },
    /// `fun⟨args⟩`.
    App { fun: Box<Term>, args: Vec<Term> },
    /// `name(args)`.
    Gen { name: String, args: Vec<Term> },
}

/// An entry of the concatenation-order variable listing ([`Term::cvo`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CvoEntry {
    Free(String),
    /// Reference to a binder group above the term the listing was taken of.
    Bound { group: usize, slot: usize },
}

fn drop_group0(e: CvoEntry) -> Option<CvoEntry> {
    match e {
        CvoEntry::Bound { group: 0, .. } => None,
        CvoEntry::Bound { group, slot } => Some(CvoEntry::Bound { group: group - 1, slot }),
        free => Some(free),
    }
}

/// A linearity violation: the offending variable or binder hint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinearityIssue {
    RepeatedFree(String),
    UnusedBinder(String),
    RepeatedBinder(String),
}

/// One step into a term; a [`Path`] addresses a subterm occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStep {
    ListElem(usize),
    ESubBody,
    ESubArg,
    AbsBody,
    AppFun,
    AppArg(usize),
    GenArg(usize),
}

pub type Path = Vec<PathStep>;

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathStep::ListElem(i) => write!(f, "{i}"),
            PathStep::ESubBody => write!(f, "body"),
            PathStep::ESubArg => write!(f, "arg"),
            PathStep::AbsBody => write!(f, "body"),
            PathStep::AppFun => write!(f, "fun"),
            PathStep::AppArg(i) => write!(f, "arg{i}"),
            PathStep::GenArg(i) => write!(f, "{i}"),
        }
    }
}

pub fn display_path(path: &[PathStep]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// Deterministic supply of names that cannot clash with parsed identifiers
/// (used when binder groups are opened during rewriting) plus a counter for
/// user-visible `y<n>` names introduced by eta expansion.
#[derive(Debug, Clone)]
pub struct FreshNames {
    internal: usize,
    visible: usize,
}

impl FreshNames {
    /// `reserved` should include every name the visible counter must avoid;
    /// the counter starts above any `y<n>` among them.
    pub fn avoiding<'a>(reserved: impl Iterator<Item = &'a str>) -> FreshNames {
        let mut max = 0;
        for name in reserved {
            if let Some(rest) = name.strip_prefix('y') {
                if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                    if let Ok(n) = rest.parse::<usize>() {
                        max = max.max(n);
                    }
                }
            }
        }
        FreshNames { internal: 0, visible: max }
    }

    /// A name no parsed term can contain; never surfaces in output.
    pub fn internal(&mut self) -> String {
        self.internal += 1;
        format!("#{}", self.internal)
    }

    /// The next `y<n>` name, for binders introduced by eta expansion.
    pub fn visible(&mut self) -> String {
        self.visible += 1;
        format!("y{}", self.visible)
    }
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::FVar(name.to_string())
    }

    /// Number of AST constructors.
    pub fn size(&self) -> u64 {
        match self {
            Term::FVar(_) | Term::BVar { .. } => 1,
            Term::List(es) => 1 + es.iter().map(Term::size).sum::<u64>(),
            Term::ESub { body, arg, .. } => 1 + body.size() + arg.size(),
            Term::Abs { body, .. } => 1 + body.size(),
            Term::App { fun, args } => {
                1 + fun.size() + args.iter().map(Term::size).sum::<u64>()
            }
            Term::Gen { args, .. } => 1 + args.iter().map(Term::size).sum::<u64>(),
        }
    }

    /// Free variables in traversal order (list elements left to right, body
    /// before argument, function before arguments), with repetitions.
    pub fn fv(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_fv(&mut out);
        out
    }

    fn collect_fv(&self, out: &mut Vec<String>) {
        match self {
            Term::FVar(x) => out.push(x.clone()),
            Term::BVar { .. } => {}
            Term::List(es) => es.iter().for_each(|e| e.collect_fv(out)),
            Term::ESub { body, arg, .. } => {
                body.collect_fv(out);
                arg.collect_fv(out);
            }
            Term::Abs { body, .. } => body.collect_fv(out),
            Term::App { fun, args } => {
                fun.collect_fv(out);
                args.iter().for_each(|a| a.collect_fv(out));
            }
            Term::Gen { args, .. } => args.iter().for_each(|a| a.collect_fv(out)),
        }
    }

    pub fn has_fv(&self, name: &str) -> bool {
        match self {
            Term::FVar(x) => x == name,
            Term::BVar { .. } => false,
            Term::List(es) => es.iter().any(|e| e.has_fv(name)),
            Term::ESub { body, arg, .. } => body.has_fv(name) || arg.has_fv(name),
            Term::Abs { body, .. } => body.has_fv(name),
            Term::App { fun, args } => fun.has_fv(name) || args.iter().any(|a| a.has_fv(name)),
            Term::Gen { args, .. } => args.iter().any(|a| a.has_fv(name)),
        }
    }

    /// The members of `xs` in the order they occur in the term (the
    /// occurrence function used to route substitutions in proofs; it is the
    /// oracle against which name-routing is tested).
    pub fn occurrences(&self, xs: &[&str]) -> Vec<String> {
        self.fv().into_iter().filter(|x| xs.contains(&x.as_str())).collect()
    }

    /// Variable occurrences in *concatenation order*: the order the context
    /// has when every merge concatenates premise contexts in rule order.
    /// This differs from plain traversal order at substitutions, where the
    /// argument's variables sit at the first binder's occurrence slot (at
    /// the end of the body's entries when the binder vector is empty).
    /// Entries referring to binder groups above the term are returned as
    /// [`CvoEntry::Bound`]; on a term with no dangling references every
    /// entry is [`CvoEntry::Free`].
    pub fn cvo(&self) -> Vec<CvoEntry> {
        match self {
            Term::FVar(x) => vec![CvoEntry::Free(x.clone())],
            Term::BVar { group, slot } => vec![CvoEntry::Bound { group: *group, slot: *slot }],
            Term::List(es) => es.iter().flat_map(Term::cvo).collect(),
            Term::Gen { args, .. } => args.iter().flat_map(Term::cvo).collect(),
            Term::App { fun, args } => {
                let mut out = fun.cvo();
                out.extend(args.iter().flat_map(Term::cvo));
                out
            }
            Term::Abs { body, .. } => body.cvo().into_iter().filter_map(drop_group0).collect(),
            Term::ESub { body, binders, arg } => {
                let body_entries = body.cvo();
                let arg_entries = arg.cvo();
                let splice_at = if binders.is_empty() {
                    None
                } else {
                    body_entries
                        .iter()
                        .position(|e| matches!(e, CvoEntry::Bound { group: 0, slot: 0 }))
                };
                match splice_at {
                    Some(i) => {
                        let mut out: Vec<CvoEntry> =
                            body_entries[..i].iter().cloned().filter_map(drop_group0).collect();
                        out.extend(arg_entries);
                        out.extend(
                            body_entries[i + 1..].iter().cloned().filter_map(drop_group0),
                        );
                        out
                    }
                    None => {
                        let mut out: Vec<CvoEntry> =
                            body_entries.into_iter().filter_map(drop_group0).collect();
                        out.extend(arg_entries);
                        out
                    }
                }
            }
        }
    }

    /// The first linearity violation, if any: every free variable and every
    /// binder must occur exactly once.
    pub fn linearity_issue(&self) -> Option<LinearityIssue> {
        let mut seen = Vec::new();
        for x in self.fv() {
            if seen.contains(&x) {
                return Some(LinearityIssue::RepeatedFree(x));
            }
            seen.push(x);
        }
        fn slots(term: &Term, group: usize, counts: &mut [usize]) {
            match term {
                Term::FVar(_) => {}
                Term::BVar { group: g, slot } => {
                    if *g == group {
                        counts[*slot] += 1;
                    }
                }
                Term::List(es) => es.iter().for_each(|e| slots(e, group, counts)),
                Term::ESub { body, arg, .. } => {
                    slots(body, group + 1, counts);
                    slots(arg, group, counts);
                }
                Term::Abs { body, .. } => slots(body, group + 1, counts),
                Term::App { fun, args } => {
                    slots(fun, group, counts);
                    args.iter().for_each(|a| slots(a, group, counts));
                }
                Term::Gen { args, .. } => args.iter().for_each(|a| slots(a, group, counts)),
            }
        }
        fn check_binders(term: &Term) -> Option<LinearityIssue> {
            let (binders, body) = match term {
                Term::ESub { body, binders, arg } => {
                    if let Some(issue) = check_binders(arg) {
                        return Some(issue);
                    }
                    (binders, body)
                }
                Term::Abs { binders, body } => (binders, body),
                Term::List(es) | Term::Gen { args: es, .. } => {
                    return es.iter().find_map(check_binders)
                }
                Term::App { fun, args } => {
                    return check_binders(fun).or_else(|| args.iter().find_map(check_binders))
                }
                Term::FVar(_) | Term::BVar { .. } => return None,
            };
            let mut counts = vec![0; binders.len()];
            slots(body, 0, &mut counts);
            for (i, &c) in counts.iter().enumerate() {
                if c == 0 {
                    return Some(LinearityIssue::UnusedBinder(binders[i].hint.clone()));
                }
                if c > 1 {
                    return Some(LinearityIssue::RepeatedBinder(binders[i].hint.clone()));
                }
            }
            check_binders(body)
        }
        check_binders(self)
    }

    /// True iff every free variable and every binder occurs exactly once.
    pub fn is_linear(&self) -> bool {
        self.linearity_issue().is_none()
    }

    /// Replaces the outermost binder group with the given terms, shifting
    /// deeper dangling references down. `self` is the *body* of the binder.
    pub fn instantiate(&self, args: &[Term]) -> Term {
        self.instantiate_at(args, 0)
    }

    fn instantiate_at(&self, args: &[Term], depth: usize) -> Term {
        match self {
            Term::FVar(_) => self.clone(),
            Term::BVar { group, slot } => {
                if *group == depth {
                    args[*slot].clone()
                } else if *group > depth {
                    Term::BVar { group: group - 1, slot: *slot }
                } else {
                    self.clone()
                }
            }
            Term::List(es) => {
                Term::List(es.iter().map(|e| e.instantiate_at(args, depth)).collect())
            }
            Term::ESub { body, binders, arg } => Term::ESub {
                body: Box::new(body.instantiate_at(args, depth + 1)),
                binders: binders.clone(),
                arg: Box::new(arg.instantiate_at(args, depth)),
            },
            Term::Abs { binders, body } => Term::Abs {
                binders: binders.clone(),
                body: Box::new(body.instantiate_at(args, depth + 1)),
            },
            Term::App { fun, args: aas } => Term::App {
                fun: Box::new(fun.instantiate_at(args, depth)),
                args: aas.iter().map(|a| a.instantiate_at(args, depth)).collect(),
            },
            Term::Gen { name, args: aas } => Term::Gen {
                name: name.clone(),
                args: aas.iter().map(|a| a.instantiate_at(args, depth)).collect(),
            },
        }
    }

    /// Replaces the outermost binder group with free variables.
    pub fn open(&self, names: &[String]) -> Term {
        let args: Vec<Term> = names.iter().map(|n| Term::FVar(n.clone())).collect();
        self.instantiate(&args)
    }

    /// Abstracts the given free names into a new outermost binder group,
    /// shifting dangling references up. Inverse of [`Term::open`].
    pub fn close(&self, names: &[String]) -> Term {
        self.close_at(names, 0)
    }

    fn close_at(&self, names: &[String], depth: usize) -> Term {
        match self {
            Term::FVar(x) => match names.iter().position(|n| n == x) {
                Some(slot) => Term::BVar { group: depth, slot },
                None => self.clone(),
            },
            Term::BVar { group, slot } => {
                if *group >= depth {
                    Term::BVar { group: group + 1, slot: *slot }
                } else {
                    self.clone()
                }
            }
            Term::List(es) => Term::List(es.iter().map(|e| e.close_at(names, depth)).collect()),
            Term::ESub { body, binders, arg } => Term::ESub {
                body: Box::new(body.close_at(names, depth + 1)),
                binders: binders.clone(),
                arg: Box::new(arg.close_at(names, depth)),
            },
            Term::Abs { binders, body } => Term::Abs {
                binders: binders.clone(),
                body: Box::new(body.close_at(names, depth + 1)),
            },
            Term::App { fun, args } => Term::App {
                fun: Box::new(fun.close_at(names, depth)),
                args: args.iter().map(|a| a.close_at(names, depth)).collect(),
            },
            Term::Gen { name, args } => Term::Gen {
                name: name.clone(),
                args: args.iter().map(|a| a.close_at(names, depth)).collect(),
            },
        }
    }

    /// `body[binders := arg]` built from a body that mentions the binder
    /// names as free variables.
    pub fn esub_bind(body: Term, binders: Vec<(String, Type)>, arg: Term) -> Term {
        let names: Vec<String> = binders.iter().map(|(n, _)| n.clone()).collect();
        Term::ESub {
            body: Box::new(body.close(&names)),
            binders: binders.into_iter().map(|(n, t)| Binder { hint: n, ty: t }).collect(),
            arg: Box::new(arg),
        }
    }

    /// `λ⟨binders⟩. body` built from a body that mentions the binder names
    /// as free variables.
    pub fn abs_bind(binders: Vec<(String, Type)>, body: Term) -> Term {
        let names: Vec<String> = binders.iter().map(|(n, _)| n.clone()).collect();
        Term::Abs {
            binders: binders.into_iter().map(|(n, t)| Binder { hint: n, ty: t }).collect(),
            body: Box::new(body.close(&names)),
        }
    }

    /// Simultaneous linear substitution of `terms` for the free variables
    /// `xs`, routed by name. Every `xᵢ` must be free in the term.
    pub fn substitute(&self, xs: &[&str], terms: &[Term]) -> Result<Term, SyntaxError> {
        if xs.len() != terms.len() {
            return Err(SyntaxError::ArityMismatch { vars: xs.len(), terms: terms.len() });
        }
        for (i, x) in xs.iter().enumerate() {
            if xs[..i].contains(x) {
                return Err(SyntaxError::NotLinear(x.to_string()));
            }
            if !self.has_fv(x) {
                return Err(SyntaxError::NotFree(x.to_string()));
            }
        }
        Ok(self.substitute_unchecked(xs, terms))
    }

    fn substitute_unchecked(&self, xs: &[&str], terms: &[Term]) -> Term {
        match self {
            Term::FVar(x) => match xs.iter().position(|n| n == x) {
                Some(i) => terms[i].clone(),
                None => self.clone(),
            },
            Term::BVar { .. } => self.clone(),
            Term::List(es) => {
                Term::List(es.iter().map(|e| e.substitute_unchecked(xs, terms)).collect())
            }
            Term::ESub { body, binders, arg } => Term::ESub {
                body: Box::new(body.substitute_unchecked(xs, terms)),
                binders: binders.clone(),
                arg: Box::new(arg.substitute_unchecked(xs, terms)),
            },
            Term::Abs { binders, body } => Term::Abs {
                binders: binders.clone(),
                body: Box::new(body.substitute_unchecked(xs, terms)),
            },
            Term::App { fun, args } => Term::App {
                fun: Box::new(fun.substitute_unchecked(xs, terms)),
                args: args.iter().map(|a| a.substitute_unchecked(xs, terms)).collect(),
            },
            Term::Gen { name, args } => Term::Gen {
                name: name.clone(),
                args: args.iter().map(|a| a.substitute_unchecked(xs, terms)).collect(),
            },
        }
    }

    pub fn rename_free(&self, map: &[(String, String)]) -> Term {
        match self {
            Term::FVar(x) => match map.iter().find(|(from, _)| from == x) {
                Some((_, to)) => Term::FVar(to.clone()),
                None => self.clone(),
            },
            Term::BVar { .. } => self.clone(),
            Term::List(es) => Term::List(es.iter().map(|e| e.rename_free(map)).collect()),
            Term::ESub { body, binders, arg } => Term::ESub {
                body: Box::new(body.rename_free(map)),
                binders: binders.clone(),
                arg: Box::new(arg.rename_free(map)),
            },
            Term::Abs { binders, body } => {
                Term::Abs { binders: binders.clone(), body: Box::new(body.rename_free(map)) }
            }
            Term::App { fun, args } => Term::App {
                fun: Box::new(fun.rename_free(map)),
                args: args.iter().map(|a| a.rename_free(map)).collect(),
            },
            Term::Gen { name, args } => Term::Gen {
                name: name.clone(),
                args: args.iter().map(|a| a.rename_free(map)).collect(),
            },
        }
    }

    /// Splits a term into its substitution chain and core:
    /// `core[b₁:=a₁]…[b_m:=a_m]` returns the chain outermost-first along
    /// with the core. The chain elements stay in their bound form; use
    /// [`Term::open`] to enter them.
    pub fn chain_view(&self) -> (Vec<(&[Binder], &Term)>, &Term) {
        let mut chain = Vec::new();
        let mut current = self;
        while let Term::ESub { body, binders, arg } = current {
            chain.push((binders.as_slice(), arg.as_ref()));
            current = body;
        }
        (chain, current)
    }

    /// True iff the term is a substitution chain over a list.
    pub fn is_list_under_chain(&self) -> bool {
        matches!(self.chain_view().1, Term::List(_))
    }

    /// True iff the term is a substitution chain over an abstraction.
    pub fn is_abs_under_chain(&self) -> bool {
        matches!(self.chain_view().1, Term::Abs { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::Type;

    fn atom(a: &str) -> Type {
        Type::atom(a)
    }

    fn pair(x: &str, y: &str) -> Term {
        Term::List(vec![Term::var(x), Term::var(y)])
    }

    #[test]
    fn bind_and_open_round_trip() {
        let body = pair("u", "v");
        let t = Term::esub_bind(
            body.clone(),
            vec![("u".into(), atom("a")), ("v".into(), atom("b"))],
            Term::var("w"),
        );
        let Term::ESub { body: bound, .. } = &t else { panic!() };
        assert_eq!(
            **bound,
            Term::List(vec![
                Term::BVar { group: 0, slot: 0 },
                Term::BVar { group: 0, slot: 1 }
            ])
        );
        assert_eq!(bound.open(&["u".into(), "v".into()]), body);
        assert_eq!(t.fv(), vec!["w"]);
        assert!(t.is_linear());
    }

    #[test]
    fn alpha_equivalence_is_structural() {
        let mk = |names: (&str, &str)| {
            Term::esub_bind(
                pair(names.0, names.1),
                vec![(names.0.into(), atom("a")), (names.1.into(), atom("b"))],
                Term::var("w"),
            )
        };
        assert_eq!(mk(("u", "v")), mk(("p", "q")));
        // Swapping the binder order changes the term.
        let swapped = Term::esub_bind(
            pair("v", "u"),
            vec![("u".into(), atom("a")), ("v".into(), atom("b"))],
            Term::var("w"),
        );
        assert_ne!(mk(("u", "v")), swapped);
    }

    #[test]
    fn nested_groups_shift_on_open_and_close() {
        // λ⟨w⟩. (⟨u,w⟩[u := z]) — u is group 0 inside the inner body, w is
        // group 1 there and group 0 in the abstraction body.
        let inner = Term::esub_bind(
            pair("u", "w"),
            vec![("u".into(), atom("a"))],
            Term::var("z"),
        );
        let t = Term::abs_bind(vec![("w".into(), atom("b"))], inner.clone());
        let Term::Abs { body, .. } = &t else { panic!() };
        assert_eq!(body.open(&["w".into()]), inner);
        assert_eq!(t.fv(), vec!["z"]);
        assert!(t.is_linear());
    }

    #[test]
    fn traversal_order_of_free_variables() {
        // Body before argument, function before arguments.
        let t = Term::esub_bind(
            pair("u", "x"),
            vec![("u".into(), atom("a"))],
            Term::var("z"),
        );
        assert_eq!(t.fv(), vec!["x", "z"]);
        assert_eq!(t.occurrences(&["z", "x"]), vec!["x", "z"]);
        let app = Term::App {
            fun: Box::new(Term::var("f")),
            args: vec![Term::var("p"), Term::var("q")],
        };
        assert_eq!(app.fv(), vec!["f", "p", "q"]);
    }

    #[test]
    fn substitution_routes_by_name_and_satisfies_size_law() {
        let s = pair("x", "y");
        let t1 = Term::List(vec![Term::var("a1"), Term::var("a2")]);
        let t2 = Term::var("b");
        let r = s.substitute(&["x", "y"], &[t1.clone(), t2.clone()]).unwrap();
        assert_eq!(r, Term::List(vec![t1.clone(), t2.clone()]));
        // size s{x⃗ := t⃗} = size s + Σ size tᵢ − k
        assert_eq!(r.size(), s.size() + t1.size() + t2.size() - 2);
        assert_eq!(
            s.substitute(&["x"], &[]),
            Err(SyntaxError::ArityMismatch { vars: 1, terms: 0 })
        );
        assert_eq!(
            s.substitute(&["q"], &[Term::var("r")]),
            Err(SyntaxError::NotFree("q".into()))
        );
    }

    #[test]
    fn substitution_matches_occurrence_routing() {
        // Routing by name must agree with routing by occurrence order: the
        // i-th occurrence of a substituted variable receives the term paired
        // with that variable, regardless of the order in xs.
        let s = Term::List(vec![pair("y", "x"), Term::var("z")]);
        let r = s
            .substitute(&["x", "y"], &[Term::var("px"), Term::var("py")])
            .unwrap();
        // occurrences([x,y], s) = [y, x]: y first.
        assert_eq!(s.occurrences(&["x", "y"]), vec!["y", "x"]);
        assert_eq!(r, Term::List(vec![pair("py", "px"), Term::var("z")]));
    }

    #[test]
    fn linearity_detects_duplicates_and_dropped_binders() {
        assert!(!pair("x", "x").is_linear());
        let dropped = Term::ESub {
            body: Box::new(Term::var("k")),
            binders: vec![Binder::new("u", atom("a"))],
            arg: Box::new(Term::var("z")),
        };
        assert!(!dropped.is_linear());
    }

    #[test]
    fn chain_views() {
        let inner = Term::esub_bind(
            pair("u", "v"),
            vec![("u".into(), atom("a")), ("v".into(), atom("b"))],
            Term::var("z"),
        );
        let t = Term::esub_bind(inner, vec![("z".into(), atom("c"))], Term::var("w"));
        let (chain, core) = t.chain_view();
        assert_eq!(chain.len(), 2);
        assert!(matches!(core, Term::List(_)));
        assert!(t.is_list_under_chain());
        assert!(!t.is_abs_under_chain());
    }

    #[test]
    fn cvo_splices_argument_variables_at_the_first_binder() {
        let free = |x: &str| CvoEntry::Free(x.to_string());
        // ⟨z,u⟩[u := w]: the argument block sits where u occurs: [z, w].
        let t = Term::esub_bind(
            pair("z", "u"),
            vec![("u".into(), atom("a"))],
            Term::var("w"),
        );
        assert_eq!(t.cvo(), vec![free("z"), free("w")]);
        // Traversal order differs: fv is body-then-argument.
        assert_eq!(t.fv(), vec!["z", "w"]);
        // ⟨u,z⟩[u := w]: now the argument block comes first: [w, z].
        let t2 = Term::esub_bind(
            pair("u", "z"),
            vec![("u".into(), atom("a"))],
            Term::var("w"),
        );
        assert_eq!(t2.cvo(), vec![free("w"), free("z")]);
        assert_eq!(t2.fv(), vec!["z", "w"]);
        // Two binders: the block sits at the *first* binder's occurrence
        // even when the binders occur out of order.
        let t3 = Term::esub_bind(
            Term::List(vec![Term::var("v"), Term::var("z"), Term::var("u")]),
            vec![("u".into(), atom("a")), ("v".into(), atom("b"))],
            Term::var("w"),
        );
        assert_eq!(t3.cvo(), vec![free("z"), free("w")]);
        // Empty binder vector: argument variables go at the end of the body's.
        let t4 = Term::esub_bind(pair("p", "q"), vec![], Term::var("w"));
        assert_eq!(t4.cvo(), vec![free("p"), free("q"), free("w")]);
        // Abstractions drop their binders but keep body order.
        let t5 = Term::abs_bind(
            vec![("x".into(), atom("a"))],
            Term::List(vec![Term::var("p"), Term::var("x"), Term::var("q")]),
        );
        assert_eq!(t5.cvo(), vec![free("p"), free("q")]);
    }

    #[test]
    fn linearity_issues_are_named() {
        assert_eq!(
            pair("x", "x").linearity_issue(),
            Some(LinearityIssue::RepeatedFree("x".into()))
        );
        let dropped = Term::ESub {
            body: Box::new(Term::var("k")),
            binders: vec![Binder::new("u", atom("a"))],
            arg: Box::new(Term::var("z")),
        };
        assert_eq!(
            dropped.linearity_issue(),
            Some(LinearityIssue::UnusedBinder("u".into()))
        );
        let doubled = Term::ESub {
            body: Box::new(Term::List(vec![
                Term::BVar { group: 0, slot: 0 },
                Term::BVar { group: 0, slot: 0 },
            ])),
            binders: vec![Binder::new("u", atom("a"))],
            arg: Box::new(Term::var("z")),
        };
        assert_eq!(
            doubled.linearity_issue(),
            Some(LinearityIssue::RepeatedBinder("u".into()))
        );
    }

    #[test]
    fn fresh_names_avoid_existing_visible_names() {
        let names = ["y3", "x", "y12", "yq"];
        let mut fresh = FreshNames::avoiding(names.iter().copied());
        assert_eq!(fresh.visible(), "y13");
        assert_eq!(fresh.visible(), "y14");
        let internal = fresh.internal();
        assert!(internal.starts_with('#'));
    }
}
