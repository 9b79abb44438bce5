//! Free multicategories over a signature: morphisms as equivalence classes
//! of typed terms, composition by substitution, the tensor and arrow
//! structure bijections, symmetry actions, extraction of the underlying
//! permutation, interpretation into models, and coherence experiments.

use crate::perm::{PermError, Permutation};
use crate::print;
use crate::rewrite::{normalize, struct_canon, RewriteError};
use crate::signature::{SigError, Signature, Type};
use crate::syntax::{SyntaxError, Term};
use crate::typing::{admissible_permute, synthesize, Derivation, Rule, System, TypeError};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MulticatError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("signature or system mismatch between morphisms")]
    SignatureMismatch,
    #[error("expected {expected} arguments, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("composition mismatch at position {position}: expected {expected}, found {found}")]
    CompositionMismatch { position: usize, expected: String, found: String },
    #[error("source entry {position} is not a tensor: {found}")]
    NotATensor { position: usize, found: String },
    #[error("span {start}..{end} does not fit a source of length {sources}")]
    SpanMismatch { start: usize, end: usize, sources: usize },
    #[error("target is not an arrow: {found}")]
    NotAnArrow { found: String },
    #[error("suffix length {len} exceeds source length {sources}")]
    BadSuffix { len: usize, sources: usize },
    #[error("symmetry action requires a symmetric system, got {0}")]
    NotSymmetricSystem(System),
    #[error("permutation extraction lives in the symmetric representable system, got {0}")]
    NotSymRep(System),
    #[error("operation requires a discrete signature")]
    NonDiscrete,
    #[error("model does not support the requested structure: {0}")]
    StructureMismatch(String),
}

// ---------------------------------------------------------------------------
// Morphisms of the free multicategory.
// ---------------------------------------------------------------------------

/// A morphism of the free multicategory over a signature: an equivalence
/// class of typed terms, stored as a chosen representative together with
/// the structural canonical form of its normal form. Source entries are
/// named `v1, v2, …` in order, so two morphisms are the same class iff
/// their `canon_nf` terms are syntactically equal (checked by `==`).
///
/// Build values through [`Morphism::from_judgment`] or the module
/// operations; the constructors maintain the invariant that `rep`
/// typechecks at the named source context with type `target`.
#[derive(Debug, Clone)]
pub struct Morphism {
    pub sig: Signature,
    pub system: System,
    pub source: Vec<Type>,
    pub target: Type,
    pub rep: Term,
    pub canon_nf: Term,
}

/// The canonical source names `v1, …, vn`.
fn source_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("v{i}")).collect()
}

impl Morphism {
    /// Builds the class of `ctx |- term` after renaming the context to the
    /// canonical `v1, …, vn` scheme. The term is typechecked, normalized,
    /// and structurally canonicalized.
    pub fn from_judgment(
        sig: &Signature,
        system: System,
        ctx: &[(String, Type)],
        term: &Term,
    ) -> Result<Morphism, MulticatError> {
        for (i, (x, _)) in ctx.iter().enumerate() {
            if ctx[..i].iter().any(|(y, _)| y == x) {
                return Err(TypeError::RepeatedContextVariable(x.clone()).into());
            }
        }
        let names = source_names(ctx.len());
        let map: Vec<(String, String)> =
            ctx.iter().map(|(x, _)| x.clone()).zip(names.iter().cloned()).collect();
        let rep = term.rename_free(&map);
        let vctx: Vec<(String, Type)> =
            names.into_iter().zip(ctx.iter().map(|(_, a)| a.clone())).collect();
        let deriv = synthesize(sig, system, &vctx, &rep)?;
        let norm = normalize(sig, system, &vctx, &rep)?;
        Ok(Morphism {
            sig: sig.clone(),
            system,
            source: vctx.into_iter().map(|(_, a)| a).collect(),
            target: deriv.ty,
            rep,
            canon_nf: struct_canon(&norm.term),
        })
    }

    /// The source as a named context `v1:a1, …, vn:an`.
    pub fn source_ctx(&self) -> Vec<(String, Type)> {
        source_names(self.source.len()).into_iter().zip(self.source.iter().cloned()).collect()
    }
}

impl PartialEq for Morphism {
    fn eq(&self, other: &Self) -> bool {
        self.system == other.system
            && self.source == other.source
            && self.target == other.target
            && self.canon_nf == other.canon_nf
    }
}

impl Eq for Morphism {}

impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", print::judgment_to_string(&self.source_ctx(), &self.rep, &self.target))
    }
}

/// The identity morphism at `a`: the class of `x:a |- x : a`.
pub fn identity(sig: &Signature, system: System, a: &Type) -> Result<Morphism, MulticatError> {
    Morphism::from_judgment(sig, system, &[("x".to_string(), a.clone())], &Term::var("x"))
}

/// Multicategorical composition: substitutes the representatives of `gs`
/// (renamed apart) for the source variables of `f`. The source of the
/// result is the concatenation of the sources of the `gs`.
pub fn compose(f: &Morphism, gs: &[Morphism]) -> Result<Morphism, MulticatError> {
    if gs.len() != f.source.len() {
        return Err(MulticatError::ShapeMismatch { expected: f.source.len(), found: gs.len() });
    }
    for (i, g) in gs.iter().enumerate() {
        if g.sig != f.sig || g.system != f.system {
            return Err(MulticatError::SignatureMismatch);
        }
        if g.target != f.source[i] {
            return Err(MulticatError::CompositionMismatch {
                position: i,
                expected: f.source[i].to_string(),
                found: g.target.to_string(),
            });
        }
    }
    let mut ctx = Vec::new();
    let mut pieces = Vec::new();
    for (i, g) in gs.iter().enumerate() {
        let map: Vec<(String, String)> = source_names(g.source.len())
            .into_iter()
            .enumerate()
            .map(|(j, v)| (v, format!("w{i}_{j}")))
            .collect();
        pieces.push(g.rep.rename_free(&map));
        for (j, a) in g.source.iter().enumerate() {
            ctx.push((format!("w{i}_{j}"), a.clone()));
        }
    }
    let f_names = source_names(f.source.len());
    let f_names: Vec<&str> = f_names.iter().map(|s| s.as_str()).collect();
    let rep = f.rep.substitute(&f_names, &pieces)?;
    Morphism::from_judgment(&f.sig, f.system, &ctx, &rep)
}

/// One direction of the representability bijection: replaces the tensor at
/// source position `position` by its components, substituting a list of
/// fresh variables for the corresponding variable of the representative.
pub fn rep_elim(f: &Morphism, position: usize) -> Result<Morphism, MulticatError> {
    let Some(entry) = f.source.get(position) else {
        return Err(MulticatError::NotATensor {
            position,
            found: "no such source entry".to_string(),
        });
    };
    let Type::Tensor(parts) = entry.clone() else {
        return Err(MulticatError::NotATensor { position, found: entry.to_string() });
    };
    let components: Vec<(String, Type)> =
        parts.iter().enumerate().map(|(j, a)| (format!("w{j}"), a.clone())).collect();
    let list = Term::List(components.iter().map(|(x, _)| Term::var(x)).collect());
    let old = source_names(f.source.len());
    let rep = f.rep.substitute(&[old[position].as_str()], &[list])?;
    let mut ctx: Vec<(String, Type)> = Vec::new();
    for (i, a) in f.source.iter().enumerate() {
        if i == position {
            ctx.extend(components.iter().cloned());
        } else {
            ctx.push((old[i].clone(), a.clone()));
        }
    }
    Morphism::from_judgment(&f.sig, f.system, &ctx, &rep)
}

/// The other direction of the representability bijection: binds the source
/// span `start..start+len` by an explicit substitution from a fresh
/// variable of the span's tensor type. `len` may be zero, inserting a unit
/// entry at `start`.
pub fn rep_intro(f: &Morphism, start: usize, len: usize) -> Result<Morphism, MulticatError> {
    let end = start + len;
    if end > f.source.len() {
        return Err(MulticatError::SpanMismatch { start, end, sources: f.source.len() });
    }
    let names = source_names(f.source.len());
    let binders: Vec<(String, Type)> = (start..end)
        .map(|i| (names[i].clone(), f.source[i].clone()))
        .collect();
    let tensor = Type::Tensor(f.source[start..end].to_vec());
    let rep = Term::esub_bind(f.rep.clone(), binders, Term::var("w"));
    let mut ctx: Vec<(String, Type)> = Vec::new();
    for (i, a) in f.source.iter().enumerate() {
        if i == start {
            ctx.push(("w".to_string(), tensor.clone()));
        }
        if !(start..end).contains(&i) {
            ctx.push((names[i].clone(), a.clone()));
        }
    }
    if start == f.source.len() {
        ctx.push(("w".to_string(), tensor));
    }
    Morphism::from_judgment(&f.sig, f.system, &ctx, &rep)
}

/// One direction of the closure bijection: abstracts the last `suffix`
/// source entries into an arrow target.
pub fn curry(f: &Morphism, suffix: usize) -> Result<Morphism, MulticatError> {
    if suffix > f.source.len() {
        return Err(MulticatError::BadSuffix { len: suffix, sources: f.source.len() });
    }
    let split = f.source.len() - suffix;
    let names = source_names(f.source.len());
    let binders: Vec<(String, Type)> =
        (split..f.source.len()).map(|i| (names[i].clone(), f.source[i].clone())).collect();
    let rep = Term::abs_bind(binders, f.rep.clone());
    let ctx: Vec<(String, Type)> =
        (0..split).map(|i| (names[i].clone(), f.source[i].clone())).collect();
    Morphism::from_judgment(&f.sig, f.system, &ctx, &rep)
}

/// The other direction of the closure bijection: applies an arrow-targeted
/// morphism to fresh variables appended to the source.
pub fn uncurry(f: &Morphism) -> Result<Morphism, MulticatError> {
    let Type::Arrow(dom, _) = f.target.clone() else {
        return Err(MulticatError::NotAnArrow { found: f.target.to_string() });
    };
    let fresh: Vec<(String, Type)> =
        dom.iter().enumerate().map(|(j, a)| (format!("w{j}"), a.clone())).collect();
    let rep = Term::App {
        fun: Box::new(f.rep.clone()),
        args: fresh.iter().map(|(x, _)| Term::var(x)).collect(),
    };
    let mut ctx = f.source_ctx();
    ctx.extend(fresh);
    Morphism::from_judgment(&f.sig, f.system, &ctx, &rep)
}

/// The symmetry action: re-types the same representative at the permuted
/// source (`perm.act(source)`), via the admissible permutation rule.
pub fn sym_act(f: &Morphism, perm: &Permutation) -> Result<Morphism, MulticatError> {
    if !f.system.symmetric() {
        return Err(MulticatError::NotSymmetricSystem(f.system));
    }
    let deriv = synthesize(&f.sig, f.system, &f.source_ctx(), &f.rep)?;
    let permuted = admissible_permute(&deriv, perm)?;
    Morphism::from_judgment(&f.sig, f.system, &permuted.ctx, &permuted.term)
}

// ---------------------------------------------------------------------------
// Underlying permutations.
// ---------------------------------------------------------------------------

/// Atom counts of the context entries (the strictification block sizes).
fn ctx_atom_sizes(ctx: &[(String, Type)]) -> Result<Vec<usize>, MulticatError> {
    ctx.iter().map(|(_, a)| Ok(a.strictify()?.len())).collect()
}

/// The atom-level routing of a tensor-only derivation: the permutation
/// sending each target atom position to the source atom position it reads,
/// so that `act(strict(ctx), routing) = strict(ty)`. Computed by structural
/// recursion: variables route identically, lists block-sum their elements
/// under the recorded merge shuffle, and substitutions splice the argument
/// routing into the binder block of the body routing.
fn routing(deriv: &Derivation) -> Result<Permutation, MulticatError> {
    match deriv.rule {
        Rule::Var => Ok(Permutation::identity(deriv.ty.strictify()?.len())),
        Rule::List => {
            let parts = deriv
                .premises
                .iter()
                .map(routing)
                .collect::<Result<Vec<_>, _>>()?;
            let blocks = Permutation::block_sum(&parts);
            let shuffle = deriv.shuffle.as_ref().expect("list nodes record their shuffle");
            let inflated = shuffle.inflate(&ctx_atom_sizes(&deriv.ctx)?)?;
            Ok(inflated.compose(&blocks)?)
        }
        Rule::ESub => {
            let body = routing(&deriv.premises[0])?;
            let arg = routing(&deriv.premises[1])?;
            let pin = deriv.pin.expect("substitution nodes record their pin");
            let k = deriv.opened.len();
            let body_sizes = ctx_atom_sizes(&deriv.premises[0].ctx)?;
            let before: usize = body_sizes[..pin].iter().sum();
            let after: usize = body_sizes[pin + k..].iter().sum();
            let mid = Permutation::block_sum(&[
                Permutation::identity(before),
                arg,
                Permutation::identity(after),
            ]);
            let shuffle = deriv.shuffle.as_ref().expect("substitution nodes record their shuffle");
            let inflated = shuffle.inflate(&ctx_atom_sizes(&deriv.ctx)?)?;
            Ok(inflated.compose(&mid.compose(&body)?)?)
        }
        Rule::Gen | Rule::Abs | Rule::App => Err(MulticatError::StructureMismatch(
            "permutation routing is defined on generator-free tensor terms".to_string(),
        )),
    }
}

/// Extracts the underlying permutation of a symmetric representable
/// morphism over a discrete signature: the unique atom-level permutation σ
/// such that the structural canonical normal form is the right action of σ
/// on a non-symmetric normal term, i.e. `act(strictify(source), σ) =
/// strictify(target)` with σ reading off, for each target atom position,
/// the source atom position that feeds it.
pub fn sym_extract(f: &Morphism) -> Result<Permutation, MulticatError> {
    if f.system != System::SymRep {
        return Err(MulticatError::NotSymRep(f.system));
    }
    if !f.sig.is_discrete() {
        return Err(MulticatError::NonDiscrete);
    }
    let deriv = synthesize(&f.sig, f.system, &f.source_ctx(), &f.canon_nf)?;
    routing(&deriv)
}

// ---------------------------------------------------------------------------
// Models and interpretation.
// ---------------------------------------------------------------------------

/// An executable multicategory to interpret terms into. Operations return
/// errors when the instance lacks the requested structure (tensors,
/// arrows, or symmetry).
pub trait Model {
    type Obj: Clone + PartialEq + fmt::Debug;
    type Mor: Clone + PartialEq + fmt::Debug;

    fn identity(&self, a: &Self::Obj) -> Result<Self::Mor, MulticatError>;
    fn compose(&self, f: &Self::Mor, gs: &[Self::Mor]) -> Result<Self::Mor, MulticatError>;
    fn tensor_obj(&self, parts: &[Self::Obj]) -> Result<Self::Obj, MulticatError>;
    fn arrow_obj(&self, dom: &[Self::Obj], cod: &Self::Obj) -> Result<Self::Obj, MulticatError>;
    /// The universal tensor introduction `a1, …, ak -> ⊗(a1…ak)`.
    fn tensor_intro(&self, parts: &[Self::Obj]) -> Result<Self::Mor, MulticatError>;
    /// The representability inverse: collapses the source span
    /// `start..start+len` of `f` into its tensor (binding the block).
    fn tensor_bind(
        &self,
        f: &Self::Mor,
        start: usize,
        len: usize,
    ) -> Result<Self::Mor, MulticatError>;
    /// The symmetry action relocating sources along `perm`.
    fn sym_act(&self, f: &Self::Mor, perm: &Permutation) -> Result<Self::Mor, MulticatError>;
    /// Evaluation `(a⃗ ⊸ b), a1, …, ak -> b`.
    fn eval(&self, dom: &[Self::Obj], cod: &Self::Obj) -> Result<Self::Mor, MulticatError>;
    /// Currying: moves the last `suffix` source entries into the arrow
    /// domain of the target.
    fn curry(&self, f: &Self::Mor, suffix: usize) -> Result<Self::Mor, MulticatError>;
}

/// How atoms and generators of a signature land in a model.
pub trait SignatureMap<M: Model> {
    fn atom(&self, name: &str) -> Result<M::Obj, MulticatError>;
    fn generator(&self, name: &str) -> Result<M::Mor, MulticatError>;
}

fn obj_of<M: Model>(
    map: &impl SignatureMap<M>,
    model: &M,
    ty: &Type,
) -> Result<M::Obj, MulticatError> {
    match ty {
        Type::Atom(a) => map.atom(a),
        Type::Tensor(parts) => {
            let objs =
                parts.iter().map(|p| obj_of(map, model, p)).collect::<Result<Vec<_>, _>>()?;
            model.tensor_obj(&objs)
        }
        Type::Arrow(dom, cod) => {
            let dom =
                dom.iter().map(|p| obj_of(map, model, p)).collect::<Result<Vec<_>, _>>()?;
            let cod = obj_of(map, model, cod)?;
            model.arrow_obj(&dom, &cod)
        }
    }
}

/// Relocates a merge-rule composite (whose sources are in premise
/// concatenation order) to the conclusion context order by acting with the
/// inverse of the recorded shuffle.
fn unshuffle<M: Model>(
    model: &M,
    f: M::Mor,
    shuffle: &Option<Permutation>,
) -> Result<M::Mor, MulticatError> {
    match shuffle {
        Some(s) if !s.is_identity() => model.sym_act(&f, &s.inverse()),
        _ => Ok(f),
    }
}

/// Interprets a morphism into a model by structural recursion on its
/// representative's derivation: variables become identities, lists become
/// tensor introductions composed with the interpreted elements under the
/// recorded shuffle, substitutions become bind-composites, abstractions
/// curry their bodies, applications become evaluation composites, and
/// generators are looked up through the signature map.
pub fn interpret<M: Model>(
    map: &impl SignatureMap<M>,
    model: &M,
    f: &Morphism,
) -> Result<M::Mor, MulticatError> {
    let deriv = synthesize(&f.sig, f.system, &f.source_ctx(), &f.rep)?;
    interpret_node(map, model, &deriv)
}

fn interpret_node<M: Model>(
    map: &impl SignatureMap<M>,
    model: &M,
    deriv: &Derivation,
) -> Result<M::Mor, MulticatError> {
    match deriv.rule {
        Rule::Var => model.identity(&obj_of(map, model, &deriv.ty)?),
        Rule::List => {
            let parts = deriv
                .premises
                .iter()
                .map(|p| interpret_node(map, model, p))
                .collect::<Result<Vec<_>, _>>()?;
            let targets = deriv
                .premises
                .iter()
                .map(|p| obj_of(map, model, &p.ty))
                .collect::<Result<Vec<_>, _>>()?;
            let intro = model.tensor_intro(&targets)?;
            let merged = model.compose(&intro, &parts)?;
            unshuffle(model, merged, &deriv.shuffle)
        }
        Rule::Gen => {
            let Term::Gen { name, .. } = &deriv.term else {
                unreachable!("generator rule on a non-generator term");
            };
            let parts = deriv
                .premises
                .iter()
                .map(|p| interpret_node(map, model, p))
                .collect::<Result<Vec<_>, _>>()?;
            let gen = map.generator(name)?;
            let merged = model.compose(&gen, &parts)?;
            unshuffle(model, merged, &deriv.shuffle)
        }
        Rule::ESub => {
            let body = interpret_node(map, model, &deriv.premises[0])?;
            let arg = interpret_node(map, model, &deriv.premises[1])?;
            let pin = deriv.pin.expect("substitution nodes record their pin");
            let k = deriv.opened.len();
            let bound = model.tensor_bind(&body, pin, k)?;
            let body_ctx = &deriv.premises[0].ctx;
            let mut gs = Vec::with_capacity(body_ctx.len() - k + 1);
            for (_, a) in &body_ctx[..pin] {
                gs.push(model.identity(&obj_of(map, model, a)?)?);
            }
            gs.push(arg);
            for (_, a) in &body_ctx[pin + k..] {
                gs.push(model.identity(&obj_of(map, model, a)?)?);
            }
            let merged = model.compose(&bound, &gs)?;
            unshuffle(model, merged, &deriv.shuffle)
        }
        Rule::Abs => {
            let body = interpret_node(map, model, &deriv.premises[0])?;
            model.curry(&body, deriv.opened.len())
        }
        Rule::App => {
            let parts = deriv
                .premises
                .iter()
                .map(|p| interpret_node(map, model, p))
                .collect::<Result<Vec<_>, _>>()?;
            let Type::Arrow(dom, cod) = &deriv.premises[0].ty else {
                unreachable!("application head is not an arrow");
            };
            let dom =
                dom.iter().map(|a| obj_of(map, model, a)).collect::<Result<Vec<_>, _>>()?;
            let cod = obj_of(map, model, cod)?;
            let ev = model.eval(&dom, &cod)?;
            let merged = model.compose(&ev, &parts)?;
            unshuffle(model, merged, &deriv.shuffle)
        }
    }
}

// ---------------------------------------------------------------------------
// The permutation model.
// ---------------------------------------------------------------------------

/// The symmetric representable model whose objects are atom counts and
/// whose morphisms are permutations at the atom level: `perm` sends each
/// target atom position to the source atom position it reads.
#[derive(Debug, Clone, Copy, Default)]
pub struct PermModel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermMor {
    /// Atom counts of the source entries.
    pub sources: Vec<usize>,
    /// Target atom position -> source atom position.
    pub perm: Permutation,
}

impl Model for PermModel {
    type Obj = usize;
    type Mor = PermMor;

    fn identity(&self, a: &usize) -> Result<PermMor, MulticatError> {
        Ok(PermMor { sources: vec![*a], perm: Permutation::identity(*a) })
    }

    fn compose(&self, f: &PermMor, gs: &[PermMor]) -> Result<PermMor, MulticatError> {
        if gs.len() != f.sources.len() {
            return Err(MulticatError::ShapeMismatch {
                expected: f.sources.len(),
                found: gs.len(),
            });
        }
        for (i, g) in gs.iter().enumerate() {
            if g.perm.degree() != f.sources[i] {
                return Err(MulticatError::CompositionMismatch {
                    position: i,
                    expected: f.sources[i].to_string(),
                    found: g.perm.degree().to_string(),
                });
            }
        }
        let blocks = Permutation::block_sum(&gs.iter().map(|g| g.perm.clone()).collect::<Vec<_>>());
        Ok(PermMor {
            sources: gs.iter().flat_map(|g| g.sources.iter().copied()).collect(),
            perm: blocks.compose(&f.perm)?,
        })
    }

    fn tensor_obj(&self, parts: &[usize]) -> Result<usize, MulticatError> {
        Ok(parts.iter().sum())
    }

    fn arrow_obj(&self, _dom: &[usize], _cod: &usize) -> Result<usize, MulticatError> {
        Err(MulticatError::StructureMismatch(
            "the permutation model has no internal homs".to_string(),
        ))
    }

    fn tensor_intro(&self, parts: &[usize]) -> Result<PermMor, MulticatError> {
        Ok(PermMor {
            sources: parts.to_vec(),
            perm: Permutation::identity(parts.iter().sum()),
        })
    }

    fn tensor_bind(&self, f: &PermMor, start: usize, len: usize) -> Result<PermMor, MulticatError> {
        let end = start + len;
        if end > f.sources.len() {
            return Err(MulticatError::SpanMismatch { start, end, sources: f.sources.len() });
        }
        let mut sources = f.sources[..start].to_vec();
        sources.push(f.sources[start..end].iter().sum());
        sources.extend_from_slice(&f.sources[end..]);
        Ok(PermMor { sources, perm: f.perm.clone() })
    }

    fn sym_act(&self, f: &PermMor, perm: &Permutation) -> Result<PermMor, MulticatError> {
        let inflated = perm.inflate(&f.sources)?;
        Ok(PermMor {
            sources: perm.act(&f.sources)?,
            perm: inflated.inverse().compose(&f.perm)?,
        })
    }

    fn eval(&self, _dom: &[usize], _cod: &usize) -> Result<PermMor, MulticatError> {
        Err(MulticatError::StructureMismatch(
            "the permutation model has no evaluation maps".to_string(),
        ))
    }

    fn curry(&self, _f: &PermMor, _suffix: usize) -> Result<PermMor, MulticatError> {
        Err(MulticatError::StructureMismatch(
            "the permutation model has no currying".to_string(),
        ))
    }
}

/// Maps every atom to a single counted position. Defined for discrete
/// signatures: generators have no canonical permutation.
#[derive(Debug, Clone, Copy, Default)]
pub struct AtomCount;

impl SignatureMap<PermModel> for AtomCount {
    fn atom(&self, _name: &str) -> Result<usize, MulticatError> {
        Ok(1)
    }

    fn generator(&self, _name: &str) -> Result<PermMor, MulticatError> {
        Err(MulticatError::NonDiscrete)
    }
}

// ---------------------------------------------------------------------------
// The tally model.
// ---------------------------------------------------------------------------

/// A degenerate representable model for smoke-testing interpretation:
/// objects are atom multisets and a morphism is the witness that its
/// sources tally up to its target.
#[derive(Debug, Clone, Copy, Default)]
pub struct TallyModel;

pub type Tally = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TallyMor {
    pub sources: Vec<Tally>,
    pub target: Tally,
}

fn tally_union(parts: &[Tally]) -> Tally {
    let mut out = Tally::new();
    for part in parts {
        for (atom, count) in part {
            *out.entry(atom.clone()).or_insert(0) += count;
        }
    }
    out
}

impl Model for TallyModel {
    type Obj = Tally;
    type Mor = TallyMor;

    fn identity(&self, a: &Tally) -> Result<TallyMor, MulticatError> {
        Ok(TallyMor { sources: vec![a.clone()], target: a.clone() })
    }

    fn compose(&self, f: &TallyMor, gs: &[TallyMor]) -> Result<TallyMor, MulticatError> {
        if gs.len() != f.sources.len() {
            return Err(MulticatError::ShapeMismatch {
                expected: f.sources.len(),
                found: gs.len(),
            });
        }
        for (i, g) in gs.iter().enumerate() {
            if g.target != f.sources[i] {
                return Err(MulticatError::CompositionMismatch {
                    position: i,
                    expected: format!("{:?}", f.sources[i]),
                    found: format!("{:?}", g.target),
                });
            }
        }
        Ok(TallyMor {
            sources: gs.iter().flat_map(|g| g.sources.iter().cloned()).collect(),
            target: f.target.clone(),
        })
    }

    fn tensor_obj(&self, parts: &[Tally]) -> Result<Tally, MulticatError> {
        Ok(tally_union(parts))
    }

    fn arrow_obj(&self, _dom: &[Tally], _cod: &Tally) -> Result<Tally, MulticatError> {
        Err(MulticatError::StructureMismatch("the tally model has no internal homs".to_string()))
    }

    fn tensor_intro(&self, parts: &[Tally]) -> Result<TallyMor, MulticatError> {
        Ok(TallyMor { sources: parts.to_vec(), target: tally_union(parts) })
    }

    fn tensor_bind(&self, f: &TallyMor, start: usize, len: usize) -> Result<TallyMor, MulticatError> {
        let end = start + len;
        if end > f.sources.len() {
            return Err(MulticatError::SpanMismatch { start, end, sources: f.sources.len() });
        }
        let mut sources = f.sources[..start].to_vec();
        sources.push(tally_union(&f.sources[start..end]));
        sources.extend_from_slice(&f.sources[end..]);
        Ok(TallyMor { sources, target: f.target.clone() })
    }

    fn sym_act(&self, f: &TallyMor, perm: &Permutation) -> Result<TallyMor, MulticatError> {
        Ok(TallyMor { sources: perm.act(&f.sources)?, target: f.target.clone() })
    }

    fn eval(&self, _dom: &[Tally], _cod: &Tally) -> Result<TallyMor, MulticatError> {
        Err(MulticatError::StructureMismatch(
            "the tally model has no evaluation maps".to_string(),
        ))
    }

    fn curry(&self, _f: &TallyMor, _suffix: usize) -> Result<TallyMor, MulticatError> {
        Err(MulticatError::StructureMismatch("the tally model has no currying".to_string()))
    }
}

/// Maps each atom to the singleton multiset; a generator is interpretable
/// only when it conserves atoms.
#[derive(Debug, Clone)]
pub struct AtomTally {
    pub sig: Signature,
}

impl SignatureMap<TallyModel> for AtomTally {
    fn atom(&self, name: &str) -> Result<Tally, MulticatError> {
        Ok(Tally::from([(name.to_string(), 1)]))
    }

    fn generator(&self, name: &str) -> Result<TallyMor, MulticatError> {
        let gen = self
            .sig
            .generator(name)
            .ok_or_else(|| MulticatError::Type(TypeError::UnknownGenerator(name.to_string())))?;
        let tally_of = |ty: &Type| -> Result<Tally, MulticatError> {
            let mut out = Tally::new();
            for atom in ty.strictify()? {
                *out.entry(atom.to_string()).or_insert(0) += 1;
            }
            Ok(out)
        };
        let sources =
            gen.sources.iter().map(&tally_of).collect::<Result<Vec<_>, MulticatError>>()?;
        let target = tally_of(&gen.target)?;
        if tally_union(&sources) != target {
            return Err(MulticatError::StructureMismatch(format!(
                "generator {name} does not conserve atoms"
            )));
        }
        Ok(TallyMor { sources, target })
    }
}

// ---------------------------------------------------------------------------
// The free model over its own signature.
// ---------------------------------------------------------------------------

/// The free multicategory itself as a model: interpretation along
/// [`Inclusion`] must be the identity on morphism classes.
#[derive(Debug, Clone)]
pub struct FreeModel {
    pub sig: Signature,
    pub system: System,
}

impl Model for FreeModel {
    type Obj = Type;
    type Mor = Morphism;

    fn identity(&self, a: &Type) -> Result<Morphism, MulticatError> {
        identity(&self.sig, self.system, a)
    }

    fn compose(&self, f: &Morphism, gs: &[Morphism]) -> Result<Morphism, MulticatError> {
        compose(f, gs)
    }

    fn tensor_obj(&self, parts: &[Type]) -> Result<Type, MulticatError> {
        if !self.system.allows_tensor_terms() {
            return Err(MulticatError::StructureMismatch(format!(
                "system {} has no tensors",
                self.system
            )));
        }
        Ok(Type::Tensor(parts.to_vec()))
    }

    fn arrow_obj(&self, dom: &[Type], cod: &Type) -> Result<Type, MulticatError> {
        if !self.system.allows_arrow_terms() {
            return Err(MulticatError::StructureMismatch(format!(
                "system {} has no arrows",
                self.system
            )));
        }
        Ok(Type::Arrow(dom.to_vec(), Box::new(cod.clone())))
    }

    fn tensor_intro(&self, parts: &[Type]) -> Result<Morphism, MulticatError> {
        let ctx: Vec<(String, Type)> =
            parts.iter().enumerate().map(|(i, a)| (format!("x{i}"), a.clone())).collect();
        let term = Term::List(ctx.iter().map(|(x, _)| Term::var(x)).collect());
        Morphism::from_judgment(&self.sig, self.system, &ctx, &term)
    }

    fn tensor_bind(&self, f: &Morphism, start: usize, len: usize) -> Result<Morphism, MulticatError> {
        rep_intro(f, start, len)
    }

    fn sym_act(&self, f: &Morphism, perm: &Permutation) -> Result<Morphism, MulticatError> {
        sym_act(f, perm)
    }

    fn eval(&self, dom: &[Type], cod: &Type) -> Result<Morphism, MulticatError> {
        let mut ctx =
            vec![("f0".to_string(), Type::Arrow(dom.to_vec(), Box::new(cod.clone())))];
        ctx.extend(dom.iter().enumerate().map(|(i, a)| (format!("x{i}"), a.clone())));
        let term = Term::App {
            fun: Box::new(Term::var("f0")),
            args: dom.iter().enumerate().map(|(i, _)| Term::var(&format!("x{i}"))).collect(),
        };
        Morphism::from_judgment(&self.sig, self.system, &ctx, &term)
    }

    fn curry(&self, f: &Morphism, suffix: usize) -> Result<Morphism, MulticatError> {
        curry(f, suffix)
    }
}

/// The inclusion of a signature into its own free multicategory.
#[derive(Debug, Clone)]
pub struct Inclusion {
    pub sig: Signature,
    pub system: System,
}

impl SignatureMap<FreeModel> for Inclusion {
    fn atom(&self, name: &str) -> Result<Type, MulticatError> {
        if !self.sig.atoms().iter().any(|a| a == name) {
            return Err(MulticatError::Sig(SigError::UnknownAtom(name.to_string())));
        }
        Ok(Type::atom(name))
    }

    fn generator(&self, name: &str) -> Result<Morphism, MulticatError> {
        let gen = self
            .sig
            .generator(name)
            .ok_or_else(|| MulticatError::Type(TypeError::UnknownGenerator(name.to_string())))?;
        let ctx: Vec<(String, Type)> =
            gen.sources.iter().enumerate().map(|(i, a)| (format!("x{i}"), a.clone())).collect();
        let term = Term::Gen {
            name: name.to_string(),
            args: ctx.iter().map(|(x, _)| Term::var(x)).collect(),
        };
        Morphism::from_judgment(&self.sig, self.system, &ctx, &term)
    }
}

// ---------------------------------------------------------------------------
// Enumeration of normal inhabitants and coherence reports.
// ---------------------------------------------------------------------------

/// All distinct normal terms inhabiting `ctx |- _ : target` in the
/// tensor-only systems over a discrete signature, generated by the
/// normal-form grammar: a chain of variable-argument substitutions over a
/// core of lists whose variables are atomic. Every substitution order is
/// generated, so structurally equivalent rearrangements appear; callers
/// deduplicate by canonicalization.
fn enumerate_normal_terms(
    sig: &Signature,
    system: System,
    ctx: &[(String, Type)],
    target: &Type,
    size_bound: u64,
) -> Result<Vec<Term>, MulticatError> {
    struct Search<'a> {
        sig: &'a Signature,
        system: System,
        ctx: &'a [(String, Type)],
        target: &'a Type,
        size_bound: u64,
        counter: usize,
        out: Vec<Term>,
    }

    impl Search<'_> {
        fn fresh(&mut self) -> String {
            loop {
                self.counter += 1;
                let name = format!("u{}", self.counter);
                if !self.ctx.iter().any(|(x, _)| x == &name) {
                    return name;
                }
            }
        }

        /// Branch over which tensor-typed variable to open next; once all
        /// are atomic, fill the target shape with every atom-respecting
        /// assignment of the remaining variables.
        fn split(
            &mut self,
            available: &[(String, Type)],
            chain: &[(Vec<(String, Type)>, String)],
        ) -> Result<(), MulticatError> {
            let tensors: Vec<usize> = available
                .iter()
                .enumerate()
                .filter(|(_, (_, a))| matches!(a, Type::Tensor(_)))
                .map(|(i, _)| i)
                .collect();
            if tensors.is_empty() {
                self.emit(available, chain)?;
                return Ok(());
            }
            for &i in &tensors {
                let (name, ty) = available[i].clone();
                let Type::Tensor(parts) = &ty else { unreachable!() };
                let binders: Vec<(String, Type)> =
                    parts.iter().map(|p| (self.fresh(), p.clone())).collect();
                let mut rest = available.to_vec();
                rest.remove(i);
                rest.extend(binders.iter().cloned());
                let mut longer = chain.to_vec();
                longer.push((binders, name));
                self.split(&rest, &longer)?;
            }
            Ok(())
        }

        fn emit(
            &mut self,
            atoms: &[(String, Type)],
            chain: &[(Vec<(String, Type)>, String)],
        ) -> Result<(), MulticatError> {
            let positions = self.target.strictify()?;
            let positions: Vec<String> = positions.iter().map(|s| s.to_string()).collect();
            let mut used = vec![false; atoms.len()];
            let mut leaves: Vec<String> = Vec::with_capacity(positions.len());
            self.assign(&positions, atoms, &mut used, &mut leaves, chain)
        }

        /// Backtracking assignment of atomic variables to the target's
        /// atom positions.
        fn assign(
            &mut self,
            positions: &[String],
            atoms: &[(String, Type)],
            used: &mut Vec<bool>,
            leaves: &mut Vec<String>,
            chain: &[(Vec<(String, Type)>, String)],
        ) -> Result<(), MulticatError> {
            if leaves.len() == positions.len() {
                if used.iter().all(|&u| u) {
                    self.build(leaves, chain)?;
                }
                return Ok(());
            }
            let want = &positions[leaves.len()];
            for i in 0..atoms.len() {
                if used[i] || atoms[i].1 != Type::Atom(want.clone()) {
                    continue;
                }
                used[i] = true;
                leaves.push(atoms[i].0.clone());
                self.assign(positions, atoms, used, leaves, chain)?;
                leaves.pop();
                used[i] = false;
            }
            Ok(())
        }

        fn build(
            &mut self,
            leaves: &[String],
            chain: &[(Vec<(String, Type)>, String)],
        ) -> Result<(), MulticatError> {
            fn core(ty: &Type, leaves: &mut std::slice::Iter<'_, String>) -> Term {
                match ty {
                    Type::Atom(_) => Term::var(leaves.next().expect("leaf per atom")),
                    Type::Tensor(parts) => {
                        Term::List(parts.iter().map(|p| core(p, leaves)).collect())
                    }
                    Type::Arrow(..) => unreachable!("arrow-free target"),
                }
            }
            let mut term = core(self.target, &mut leaves.iter());
            for (binders, arg) in chain.iter().rev() {
                term = Term::esub_bind(term, binders.clone(), Term::var(arg));
            }
            if term.size() <= self.size_bound
                && synthesize(self.sig, self.system, self.ctx, &term).is_ok()
            {
                self.out.push(term);
            }
            Ok(())
        }
    }

    let mut search = Search { sig, system, ctx, target, size_bound, counter: 0, out: Vec::new() };
    search.split(ctx, &[])?;
    let mut distinct: Vec<Term> = Vec::new();
    for t in search.out {
        if !distinct.contains(&t) {
            distinct.push(t);
        }
    }
    Ok(distinct)
}

fn check_enumerable(sig: &Signature, system: System) -> Result<(), MulticatError> {
    if !sig.is_discrete() {
        return Err(MulticatError::NonDiscrete);
    }
    if !matches!(system, System::Rep | System::SymRep) {
        return Err(MulticatError::StructureMismatch(
            "inhabitant enumeration covers the tensor-only systems".to_string(),
        ));
    }
    Ok(())
}

/// All equivalence classes of normal inhabitants of `ctx |- _ : target`
/// with term size at most `size_bound`, for the tensor-only systems over a
/// discrete signature. Classes are deduplicated by structural canonical
/// form.
pub fn enumerate_normal_inhabitants(
    sig: &Signature,
    system: System,
    ctx: &[(String, Type)],
    target: &Type,
    size_bound: u64,
) -> Result<Vec<Morphism>, MulticatError> {
    check_enumerable(sig, system)?;
    let mut classes: Vec<Morphism> = Vec::new();
    for term in enumerate_normal_terms(sig, system, ctx, target, size_bound)? {
        let m = Morphism::from_judgment(sig, system, ctx, &term)?;
        if !classes.contains(&m) {
            classes.push(m);
        }
    }
    Ok(classes)
}

/// One equivalence class of a coherence experiment.
#[derive(Debug, Clone)]
pub struct CoherenceClass {
    pub representative: Morphism,
    /// Distinct enumerated normal terms falling into this class.
    pub members: usize,
    /// The extracted permutation (symmetric representable runs only).
    pub sym: Option<Permutation>,
}

/// The outcome of a coherence experiment over one judgment.
#[derive(Debug, Clone)]
pub struct CoherenceReport {
    pub system: System,
    pub judgment: String,
    /// Distinct enumerated normal terms.
    pub inhabitants: usize,
    pub classes: Vec<CoherenceClass>,
    pub pass: bool,
    pub verdict: String,
}

impl fmt::Display for CoherenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "judgment: {}", self.judgment)?;
        writeln!(f, "system: {}", self.system)?;
        writeln!(f, "normal inhabitants: {}", self.inhabitants)?;
        writeln!(f, "classes: {}", self.classes.len())?;
        for (i, class) in self.classes.iter().enumerate() {
            let sym = match &class.sym {
                Some(p) => format!(" ; sym {p}"),
                None => String::new(),
            };
            writeln!(
                f,
                "  class {}: {} ({} members){}",
                i + 1,
                print::term_to_string(&class.representative.rep),
                class.members,
                sym
            )?;
        }
        write!(f, "{}: {}", if self.pass { "PASS" } else { "FAIL" }, self.verdict)
    }
}

/// Runs a coherence experiment: enumerates normal inhabitants, partitions
/// them into equivalence classes, and checks the coherence statement for
/// the system — representable runs must give at most one class, symmetric
/// representable runs must be classified exactly by the extracted
/// permutation.
pub fn coherence_report(
    sig: &Signature,
    system: System,
    ctx: &[(String, Type)],
    target: &Type,
    size_bound: u64,
) -> Result<CoherenceReport, MulticatError> {
    check_enumerable(sig, system)?;
    let terms = enumerate_normal_terms(sig, system, ctx, target, size_bound)?;
    let inhabitants = terms.len();
    let mut classes: Vec<(Morphism, usize, Option<Permutation>)> = Vec::new();
    let mut pass = true;
    let mut verdict = String::new();
    for term in &terms {
        let m = Morphism::from_judgment(sig, system, ctx, term)?;
        let sym = match system {
            System::SymRep => Some(sym_extract(&m)?),
            _ => None,
        };
        match classes.iter_mut().find(|(rep, _, _)| rep == &m) {
            Some((rep, members, stored)) => {
                *members += 1;
                if stored != &sym {
                    pass = false;
                    verdict = format!(
                        "class of {} has inconsistent permutations",
                        print::term_to_string(&rep.rep)
                    );
                }
            }
            None => classes.push((m, 1, sym)),
        }
    }
    if pass {
        match system {
            System::Rep => {
                if classes.len() > 1 {
                    pass = false;
                    verdict = format!(
                        "expected at most one class, found {} (e.g. {} vs {})",
                        classes.len(),
                        print::term_to_string(&classes[0].0.rep),
                        print::term_to_string(&classes[1].0.rep)
                    );
                } else {
                    verdict = "all normal inhabitants are equivalent".to_string();
                }
            }
            System::SymRep => {
                let mut seen: Vec<&Permutation> = Vec::new();
                for (m, _, sym) in &classes {
                    let p = sym.as_ref().expect("symmetric runs extract permutations");
                    if seen.contains(&p) {
                        pass = false;
                        verdict = format!(
                            "distinct classes share the permutation {p} (e.g. {})",
                            print::term_to_string(&m.rep)
                        );
                        break;
                    }
                    seen.push(p);
                }
                if pass {
                    verdict =
                        "classes are in bijection with their underlying permutations".to_string();
                }
            }
            _ => unreachable!("guarded by check_enumerable"),
        }
    }
    Ok(CoherenceReport {
        system,
        judgment: format!("{} |- _ : {}", print::context_to_string(ctx), target),
        inhabitants,
        classes: classes
            .into_iter()
            .map(|(representative, members, sym)| CoherenceClass { representative, members, sym })
            .collect(),
        pass,
        verdict,
    })
}
