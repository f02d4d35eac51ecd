//! Core of the `lces` workbench: a concurrent call-by-value lambda calculus
//! with explicit substitutions for both term variables and references.
//!
//! The crate is `no_std` (with `alloc`): everything in here is pure term
//! manipulation over immutable trees, so it can be embedded anywhere. IO,
//! file formats and the command-line driver live in the companion `lces-cli`
//! crate.
//!
//! Module map:
//! - [`syntax`] — terms, values, sums, substitutions, canonical forms and the
//!   meta-operations on substitutions.
//! - [`surface`] — the ASCII grammar: parser and printer for terms, types and
//!   source files (both the `lces` dialect and the `lc` source calculus).
//! - [`reduction`] — the small-step rules, redex decomposition, strategies,
//!   traces and reduction graphs (full and non-deterministic modes).
//! - [`typing`] — stratified reference contexts, subtyping, type-and-effect
//!   inference, and the subject-reduction / progress oracles.
//! - [`analysis`] — skeletons, reachability, the simulation preorders, local
//!   confluence checking, environment reduction and the well-behavedness
//!   probe.
//! - [`lambda_c`] — the source calculus with global cumulative stores, its
//!   translation into this calculus, and the simulation checker.
//! - [`corpus`] — seeded generators of well-typed terms and programs, plus
//!   exhaustive small-term enumeration, used by the meta suites.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod corpus;
pub mod lambda_c;
pub mod reduction;
mod rng;
pub mod surface;
pub mod syntax;
pub mod typing;

pub use rng::Rng;
