//! Rendering terms and judgments back to concrete syntax.
//!
//! Bound variables print under their binder hints; a hint that would
//! capture a free variable (or collide with another binder in scope) is
//! freshened by appending primes, so printing followed by parsing always
//! reproduces the term up to binder hints — which term equality ignores.

use crate::signature::Type;
use crate::syntax::Term;
use std::collections::HashSet;

/// Renders a term. The result reparses to an equal term.
pub fn term_to_string(t: &Term) -> String {
    let mut used: HashSet<String> = t.fv().into_iter().collect();
    render(t, &mut Vec::new(), &mut used, Mode::Full)
}

/// Renders `x:a, y:b |- s : c`.
pub fn judgment_to_string(ctx: &[(String, Type)], term: &Term, ty: &Type) -> String {
    let mut s = context_to_string(ctx);
    if !ctx.is_empty() {
        s.push(' ');
    }
    s.push_str(&format!("|- {} : {}", term_to_string(term), ty));
    s
}

pub fn context_to_string(ctx: &[(String, Type)]) -> String {
    ctx.iter().map(|(x, a)| format!("{x}:{a}")).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    /// Any term form.
    Full,
    /// Operand of a postfix chain or a function position: abstractions
    /// need parentheses there.
    Operand,
}

fn freshen(hint: &str, used: &HashSet<String>) -> String {
    let base = if hint.is_empty() { "v" } else { hint };
    let mut name = base.to_string();
    while used.contains(&name) {
        name.push('\'');
    }
    name
}

fn pick_names(
    binders: &[crate::syntax::Binder],
    used: &mut HashSet<String>,
) -> (Vec<String>, String) {
    let names: Vec<String> = binders
        .iter()
        .map(|b| {
            let n = freshen(&b.hint, used);
            used.insert(n.clone());
            n
        })
        .collect();
    let anns = binders
        .iter()
        .zip(&names)
        .map(|(b, n)| format!("{n}:{}", b.ty))
        .collect::<Vec<_>>()
        .join(",");
    (names, anns)
}

fn render(t: &Term, env: &mut Vec<Vec<String>>, used: &mut HashSet<String>, mode: Mode) -> String {
    let rendered = match t {
        Term::FVar(x) => x.clone(),
        Term::BVar { group, slot } => {
            let g = env.len().checked_sub(1 + group).expect("dangling bound variable");
            env[g][*slot].clone()
        }
        Term::List(es) => {
            let items =
                es.iter().map(|e| render(e, env, used, Mode::Full)).collect::<Vec<_>>().join(",");
            format!("<{items}>")
        }
        Term::ESub { body, binders, arg } => {
            let (names, anns) = pick_names(binders, used);
            env.push(names);
            let body_s = render(body, env, used, Mode::Operand);
            env.pop();
            let arg_s = render(arg, env, used, Mode::Full);
            format!("{body_s}[{anns} := {arg_s}]")
        }
        Term::Abs { binders, body } => {
            let (names, anns) = pick_names(binders, used);
            env.push(names);
            let body_s = render(body, env, used, Mode::Full);
            env.pop();
            format!("\\<{anns}>. {body_s}")
        }
        Term::App { fun, args } => {
            let fun_s = render(fun, env, used, Mode::Operand);
            let args_s =
                args.iter().map(|a| render(a, env, used, Mode::Full)).collect::<Vec<_>>().join(",");
            format!("{fun_s} <{args_s}>")
        }
        Term::Gen { name, args } => {
            let args_s =
                args.iter().map(|a| render(a, env, used, Mode::Full)).collect::<Vec<_>>().join(",");
            format!("{name}({args_s})")
        }
    };
    if mode == Mode::Operand && matches!(t, Term::Abs { .. }) {
        format!("({rendered})")
    } else {
        rendered
    }
}
