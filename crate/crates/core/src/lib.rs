//! Synthesis and independent checking of affine inductive distributional
//! invariants for Markov decision processes viewed as transformers of
//! probability distributions.
//!
//! The crate is `no_std` (with `alloc`). Everything that touches the outside
//! world (files, solver processes, the command line) lives in the companion
//! `distinv` crate; solvers are reached through the [`smt::SmtBackend`] trait.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod certificate;
pub mod constraints;
pub mod model;
pub mod presolve;
pub mod qelim;
pub mod rational;
pub mod ring;
pub mod smt;
pub mod synth;
