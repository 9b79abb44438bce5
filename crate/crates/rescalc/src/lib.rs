//! A kernel for linear resource calculi and the multicategories they present.
//!
//! The crate implements four interrelated term calculi over user-supplied
//! signatures — one with tensor lists and explicit substitutions, its
//! symmetric variant, a symmetric calculus of abstractions and applications,
//! and the combination of all constructors — together with:
//!
//! * shuffle-based context merging and canonical typing derivations
//!   ([`typing`]),
//! * beta/eta rewriting with termination measures, structural equivalence and
//!   canonical forms ([`rewrite`]),
//! * a free-multicategory layer whose morphisms are equivalence classes of
//!   terms, with interpretation into concrete models and coherence checks
//!   ([`multicat`]),
//! * a concrete syntax with parser and printer ([`parse`], [`print`]) used by
//!   the `rescalc` command-line driver.
//!
//! Everything is deterministic: typing derivations are canonical, the
//! normalizer is leftmost-outermost with a seeded fresh-name supply, and
//! canonical forms are unique representatives of their structural-equivalence
//! classes.

pub mod cli;
pub mod multicat;
pub mod parse;
pub mod perm;
pub mod print;
pub mod rewrite;
pub mod signature;
pub mod syntax;
pub mod typing;
