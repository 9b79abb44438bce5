//! Signatures: atoms, generator arrows, and the type grammars they inhabit.
//!
//! A signature has a [`SignatureKind`] fixing which types exist over its
//! atoms:
//!
//! * `Representable` — `a ::= o | (a₁ * … * a_k)`;
//! * `Closed` — `a ::= o | [a₁,…,a_k] -o a`;
//! * `Autonomous` — both constructors, freely nested.
//!
//! Tensors are unbiased and k-ary: the unit `()` is the 0-ary tensor and the
//! unary tensor `(a)` is distinct from `a`. Arrow domains are kept as lists
//! of types, never as a nested tensor node, so a closed type contains no
//! tensor node at all.
//!
//! Generator arrows have a list of source types and one target type; a
//! signature with no generators is *discrete*. Discreteness is what several
//! coherence constructions require, so it is a first-class query.

use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SigError {
    #[error("duplicate atom `{0}`")]
    DuplicateAtom(String),
    #[error("duplicate generator `{0}`")]
    DuplicateGenerator(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("type `{ty}` is not valid for a {kind} signature")]
    KindViolation { ty: String, kind: SignatureKind },
    #[error("type `{0}` has no strictification: it contains an arrow")]
    NotRepresentable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureKind {
    Representable,
    Closed,
    Autonomous,
}

impl fmt::Display for SignatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignatureKind::Representable => write!(f, "representable"),
            SignatureKind::Closed => write!(f, "closed"),
            SignatureKind::Autonomous => write!(f, "autonomous"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Atom(String),
    /// Unbiased k-ary tensor; `Tensor(vec![])` is the unit.
    Tensor(Vec<Type>),
    /// `Arrow(domain, codomain)`: the domain is the list of argument types.
    Arrow(Vec<Type>, Box<Type>),
}

impl Type {
    pub fn atom(name: &str) -> Type {
        Type::Atom(name.to_string())
    }

    pub fn unit() -> Type {
        Type::Tensor(Vec::new())
    }

    /// True iff the type uses only constructors available in `kind`.
    pub fn valid_for_kind(&self, kind: SignatureKind) -> bool {
        match self {
            Type::Atom(_) => true,
            Type::Tensor(parts) => {
                kind != SignatureKind::Closed
                    && parts.iter().all(|t| t.valid_for_kind(kind))
            }
            Type::Arrow(args, res) => {
                kind != SignatureKind::Representable
                    && args.iter().all(|t| t.valid_for_kind(kind))
                    && res.valid_for_kind(kind)
            }
        }
    }

    /// The list of atoms obtained by flattening all tensors. Only defined
    /// for arrow-free types.
    pub fn strictify(&self) -> Result<Vec<&str>, SigError> {
        match self {
            Type::Atom(a) => Ok(vec![a.as_str()]),
            Type::Tensor(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.strictify()?);
                }
                Ok(out)
            }
            Type::Arrow(..) => Err(SigError::NotRepresentable(self.to_string())),
        }
    }

    /// Number of tensor nodes, recursing through arrows without counting
    /// them. On arrow-free types this is the representable type size
    /// (`|o| = 0`, `|(a₁*…*a_k)| = 1 + Σ|aᵢ|`).
    pub fn tensor_weight(&self) -> u64 {
        match self {
            Type::Atom(_) => 0,
            Type::Tensor(parts) => 1 + parts.iter().map(Type::tensor_weight).sum::<u64>(),
            Type::Arrow(args, res) => {
                args.iter().map(Type::tensor_weight).sum::<u64>() + res.tensor_weight()
            }
        }
    }

    /// Number of arrow nodes, recursing through tensors without counting
    /// them. On tensor-free types this is the closed type size
    /// (`|o| = 0`, `|[a⃗] -o a| = 1 + Σ|aᵢ| + |a|`).
    pub fn arrow_weight(&self) -> u64 {
        match self {
            Type::Atom(_) => 0,
            Type::Tensor(parts) => parts.iter().map(Type::arrow_weight).sum(),
            Type::Arrow(args, res) => {
                1 + args.iter().map(Type::arrow_weight).sum::<u64>() + res.arrow_weight()
            }
        }
    }

    pub fn atoms_known(&self, sig: &Signature) -> Result<(), SigError> {
        match self {
            Type::Atom(a) => {
                if sig.atoms.iter().any(|x| x == a) {
                    Ok(())
                } else {
                    Err(SigError::UnknownAtom(a.clone()))
                }
            }
            Type::Tensor(parts) => parts.iter().try_for_each(|t| t.atoms_known(sig)),
            Type::Arrow(args, res) => {
                args.iter().try_for_each(|t| t.atoms_known(sig))?;
                res.atoms_known(sig)
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Atom(a) => write!(f, "{a}"),
            Type::Tensor(parts) => {
                write!(f, "(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
            Type::Arrow(args, res) => {
                write!(f, "[")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "] -o {res}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub sources: Vec<Type>,
    pub target: Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    kind: SignatureKind,
    atoms: Vec<String>,
    generators: BTreeMap<String, Generator>,
}

impl Signature {
    /// Builds and validates a signature: atom and generator names must be
    /// distinct and every generator type must be kind-valid over the atoms.
    pub fn new(
        kind: SignatureKind,
        atoms: Vec<String>,
        generators: Vec<(String, Generator)>,
    ) -> Result<Signature, SigError> {
        let mut seen = Vec::new();
        for a in &atoms {
            if seen.contains(&a) {
                return Err(SigError::DuplicateAtom(a.clone()));
            }
            seen.push(a);
        }
        let mut sig = Signature { kind, atoms, generators: BTreeMap::new() };
        for (name, gen) in generators {
            for ty in gen.sources.iter().chain(std::iter::once(&gen.target)) {
                sig.validate_type(ty)?;
            }
            if sig.generators.insert(name.clone(), gen).is_some() {
                return Err(SigError::DuplicateGenerator(name));
            }
        }
        Ok(sig)
    }

    /// A generator-free signature over the given atoms.
    pub fn discrete(kind: SignatureKind, atoms: &[&str]) -> Result<Signature, SigError> {
        Signature::new(kind, atoms.iter().map(|s| s.to_string()).collect(), Vec::new())
    }

    pub fn kind(&self) -> SignatureKind {
        self.kind
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn generator(&self, name: &str) -> Option<&Generator> {
        self.generators.get(name)
    }

    pub fn generators(&self) -> impl Iterator<Item = (&str, &Generator)> {
        self.generators.iter().map(|(n, g)| (n.as_str(), g))
    }

    pub fn is_discrete(&self) -> bool {
        self.generators.is_empty()
    }

    /// Checks that a type only mentions known atoms and fits the
    /// signature's kind.
    pub fn validate_type(&self, ty: &Type) -> Result<(), SigError> {
        ty.atoms_known(self)?;
        if !ty.valid_for_kind(self.kind) {
            return Err(SigError::KindViolation { ty: ty.to_string(), kind: self.kind });
        }
        Ok(())
    }
}
