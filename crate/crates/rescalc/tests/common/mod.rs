//! Shared random-judgment generator for the acceptance suite.
//!
//! Terms are generated bottom-up from a context that must be consumed
//! exactly (one use per entry), so every produced judgment is linear by
//! construction. In the non-symmetric system every production keeps the
//! term's left-to-right variable order equal to the context order, which
//! makes all merges identity shuffles; the symmetric systems distribute
//! entries freely. Every judgment is validated with `synthesize` before it
//! is handed out, so generator output is well typed by checked fact, not
//! by construction alone.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rescalc::signature::{Signature, Type};
use rescalc::syntax::Term;
use rescalc::typing::{synthesize, System};

pub struct TermGen {
    pub rng: ChaCha8Rng,
    next: usize,
}

impl TermGen {
    pub fn new(seed: u64) -> TermGen {
        TermGen { rng: ChaCha8Rng::seed_from_u64(seed), next: 0 }
    }

    fn fresh(&mut self, stem: &str) -> String {
        self.next += 1;
        format!("{stem}{}", self.next)
    }

    /// A random type over atoms `a`/`b`: tensors up to arity 3, arrows only
    /// when `arrows` is set, nesting bounded by `depth`.
    pub fn gen_type(&mut self, depth: usize, arrows: bool) -> Type {
        let atom = |g: &mut TermGen| {
            if g.rng.gen_bool(0.5) {
                Type::atom("a")
            } else {
                Type::atom("b")
            }
        };
        if depth == 0 {
            return atom(self);
        }
        match self.rng.gen_range(0..if arrows { 4 } else { 3 }) {
            0 | 1 => atom(self),
            2 => {
                let k = self.rng.gen_range(0..=3);
                Type::Tensor((0..k).map(|_| self.gen_type(depth - 1, arrows)).collect())
            }
            _ => {
                let k = self.rng.gen_range(1..=2);
                let dom = (0..k).map(|_| self.gen_type(depth - 1, arrows)).collect();
                let cod = self.gen_type(depth - 1, arrows);
                Type::Arrow(dom, Box::new(cod))
            }
        }
    }

    /// A random context of `n` fresh entries.
    pub fn gen_ctx(&mut self, n: usize, depth: usize, arrows: bool) -> Vec<(String, Type)> {
        (0..n)
            .map(|_| {
                let name = self.fresh("c");
                let ty = self.gen_type(depth, arrows);
                (name, ty)
            })
            .collect()
    }

    /// A random term consuming `avail` exactly, together with its type.
    /// Requires a system with tensor terms (the base case is a list).
    fn gen_term(
        &mut self,
        system: System,
        sig: &Signature,
        avail: Vec<(String, Type)>,
        fuel: usize,
    ) -> (Term, Type) {
        let sym = system.symmetric();
        let arrows = system.allows_arrow_terms();
        if avail.len() == 1 && (fuel == 0 || self.rng.gen_bool(0.3)) {
            let (name, ty) = avail.into_iter().next().unwrap();
            return (Term::FVar(name), ty);
        }
        if fuel == 0 {
            let tys = avail.iter().map(|(_, t)| t.clone()).collect();
            let es = avail.into_iter().map(|(n, _)| Term::FVar(n)).collect();
            return (Term::List(es), Type::Tensor(tys));
        }
        match self.rng.gen_range(0..6) {
            // Generator leaf: only when the available entries are exactly
            // the generator's sources (same order in the ordered system).
            0 if !sig.is_discrete() => {
                let tys: Vec<&Type> = avail.iter().map(|(_, t)| t).collect();
                let fits = |srcs: &[Type]| {
                    if srcs.len() != tys.len() {
                        return false;
                    }
                    if sym {
                        let mut left: Vec<&Type> = tys.clone();
                        srcs.iter().all(|s| {
                            left.iter().position(|t| *t == s).map(|i| left.remove(i)).is_some()
                        })
                    } else {
                        srcs.iter().zip(&tys).all(|(s, t)| s == *t)
                    }
                };
                let hit = sig
                    .generators()
                    .find(|(_, g)| fits(&g.sources))
                    .map(|(n, g)| (n.to_string(), g.clone()));
                match hit {
                    Some((name, g)) => {
                        let mut pool = avail;
                        let args = g
                            .sources
                            .iter()
                            .map(|s| {
                                let i = pool.iter().position(|(_, t)| t == s).unwrap();
                                Term::FVar(pool.remove(i).0)
                            })
                            .collect();
                        (Term::Gen { name, args }, g.target.clone())
                    }
                    None => self.gen_term(system, sig, avail, fuel),
                }
            }
            // List node.
            1 => {
                let k = self.rng.gen_range(if avail.is_empty() { 0 } else { 1 }..=3);
                let parts = self.split(avail, k, sym);
                let mut es = Vec::new();
                let mut tys = Vec::new();
                for p in parts {
                    let (t, ty) = self.gen_term(system, sig, p, fuel - 1);
                    es.push(t);
                    tys.push(ty);
                }
                (Term::List(es), Type::Tensor(tys))
            }
            // Explicit substitution.
            2 | 3 => {
                let (body_side, arg_side, cut) = self.esub_split(avail, sym);
                let (arg0, arg_ty) = self.gen_term(system, sig, arg_side, fuel - 1);
                let (arg, parts) = match arg_ty {
                    Type::Tensor(ps) if ps.len() <= 3 => (arg0, ps),
                    other => (Term::List(vec![arg0]), vec![other]),
                };
                let binders: Vec<(String, Type)> =
                    parts.into_iter().map(|t| (self.fresh("u"), t)).collect();
                let mut body_avail = body_side;
                let at = if sym { self.rng.gen_range(0..=body_avail.len()) } else { cut };
                for (i, b) in binders.iter().enumerate() {
                    body_avail.insert(at + i, (b.0.clone(), b.1.clone()));
                }
                let (body, body_ty) = self.gen_term(system, sig, body_avail, fuel - 1);
                (Term::esub_bind(body, binders, arg), body_ty)
            }
            // Abstraction.
            4 if arrows => {
                let k = self.rng.gen_range(1..=2);
                let binders: Vec<(String, Type)> =
                    (0..k).map(|_| (self.fresh("u"), self.gen_type(1, arrows))).collect();
                let mut body_avail = avail;
                body_avail.extend(binders.iter().cloned());
                let (body, body_ty) = self.gen_term(system, sig, body_avail, fuel - 1);
                let dom = binders.iter().map(|(_, t)| t.clone()).collect();
                (Term::abs_bind(binders, body), Type::Arrow(dom, Box::new(body_ty)))
            }
            // Application of an inline abstraction (a Beta2 redex).
            5 if arrows => {
                let j = self.rng.gen_range(1..=2);
                let mut parts = self.split(avail, j + 1, sym);
                let fun_side = parts.remove(0);
                let mut args = Vec::new();
                let mut binders = Vec::new();
                for p in parts {
                    let (t, ty) = self.gen_term(system, sig, p, fuel - 1);
                    args.push(t);
                    binders.push((self.fresh("u"), ty));
                }
                let mut body_avail = fun_side;
                body_avail.extend(binders.iter().cloned());
                let (body, body_ty) = self.gen_term(system, sig, body_avail, fuel - 1);
                let fun = Term::abs_bind(binders, body);
                (Term::App { fun: Box::new(fun), args }, body_ty)
            }
            _ => {
                if avail.len() == 1 {
                    let (name, ty) = avail.into_iter().next().unwrap();
                    (Term::FVar(name), ty)
                } else {
                    let tys = avail.iter().map(|(_, t)| t.clone()).collect();
                    let es = avail.into_iter().map(|(n, _)| Term::FVar(n)).collect();
                    (Term::List(es), Type::Tensor(tys))
                }
            }
        }
    }

    /// Splits `avail` into `k` parts: order-preserving contiguous blocks in
    /// the ordered system, a free assignment in the symmetric ones.
    fn split(
        &mut self,
        avail: Vec<(String, Type)>,
        k: usize,
        sym: bool,
    ) -> Vec<Vec<(String, Type)>> {
        let mut parts: Vec<Vec<(String, Type)>> = (0..k.max(1)).map(|_| Vec::new()).collect();
        if k == 0 {
            return Vec::new();
        }
        if sym {
            for e in avail {
                let i = self.rng.gen_range(0..k);
                parts[i].push(e);
            }
        } else {
            let mut cuts: Vec<usize> =
                (0..k - 1).map(|_| self.rng.gen_range(0..=avail.len())).collect();
            cuts.sort_unstable();
            let mut rest = avail;
            let mut taken = 0;
            for (i, c) in cuts.iter().enumerate() {
                let here: Vec<_> = rest.drain(..c - taken).collect();
                parts[i] = here;
                taken = *c;
            }
            *parts.last_mut().unwrap() = rest;
        }
        parts
    }

    /// Splits for a substitution: body side, argument side, and the cut
    /// position (where the argument span sat, used as the ordered-system
    /// binder pin).
    #[allow(clippy::type_complexity)]
    fn esub_split(
        &mut self,
        avail: Vec<(String, Type)>,
        sym: bool,
    ) -> (Vec<(String, Type)>, Vec<(String, Type)>, usize) {
        if sym {
            let mut body = Vec::new();
            let mut arg = Vec::new();
            for e in avail {
                if self.rng.gen_bool(0.5) {
                    body.push(e);
                } else {
                    arg.push(e);
                }
            }
            (body, arg, 0)
        } else {
            let i = self.rng.gen_range(0..=avail.len());
            let j = self.rng.gen_range(i..=avail.len());
            let mut body = avail;
            let arg: Vec<_> = body.drain(i..j).collect();
            (body, arg, i)
        }
    }

    /// A random well-typed judgment: context, term, synthesized type.
    /// Panics if generation cannot reach a judgment the checker accepts
    /// (which would be a generator bug worth hearing about).
    pub fn gen_judgment(
        &mut self,
        sig: &Signature,
        system: System,
        max_ctx: usize,
        ty_depth: usize,
        fuel: usize,
        max_size: u64,
    ) -> (Vec<(String, Type)>, Term, Type) {
        for _ in 0..200 {
            let n = self.rng.gen_range(0..=max_ctx);
            let ctx = self.gen_ctx(n, ty_depth, system.allows_arrow_terms());
            let (term, ty) = self.gen_term(system, sig, ctx.clone(), fuel);
            if term.size() > max_size {
                continue;
            }
            match synthesize(sig, system, &ctx, &term) {
                Ok(d) => {
                    assert_eq!(d.ty, ty, "generator predicted the wrong type");
                    return (ctx, term, ty);
                }
                Err(e) => panic!(
                    "generator produced an ill-typed judgment: {} ({e})",
                    rescalc::print::judgment_to_string(&ctx, &term, &ty)
                ),
            }
        }
        panic!("generator failed to produce a small enough judgment");
    }

    /// A random well-typed term over exactly the given context, with its
    /// synthesized type. Panics like [`TermGen::gen_judgment`] when the
    /// checker rejects generator output.
    pub fn gen_over(
        &mut self,
        sig: &Signature,
        system: System,
        ctx: &[(String, Type)],
        fuel: usize,
        max_size: u64,
    ) -> (Term, Type) {
        for _ in 0..200 {
            let (term, ty) = self.gen_term(system, sig, ctx.to_vec(), fuel);
            if term.size() > max_size {
                continue;
            }
            match synthesize(sig, system, ctx, &term) {
                Ok(d) => {
                    assert_eq!(d.ty, ty, "generator predicted the wrong type");
                    return (term, ty);
                }
                Err(e) => panic!(
                    "generator produced an ill-typed judgment: {} ({e})",
                    rescalc::print::judgment_to_string(ctx, &term, &ty)
                ),
            }
        }
        panic!("generator failed to produce a small enough judgment");
    }
}
