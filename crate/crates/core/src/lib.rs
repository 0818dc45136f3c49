//! Compiler and synthesis back-ends for a small probabilistic
//! program-induction language.
//!
//! A model source is preprocessed, parsed and checked ([`frontend`]), unrolled
//! into a gated factor graph ([`ir`]) and then handed to one of the solvers:
//! gradient descent on forward marginals ([`fmgd`]), a gated linear program
//! ([`lp`]), SMT-LIB ([`smt`]) or Sketch source ([`sketch`]). The interpreter
//! in [`interp`] is the reference semantics every answer is checked against.

pub mod bench;
pub mod fmgd;
pub mod frontend;
pub mod interp;
pub mod ir;
pub mod lp;
pub mod report;
pub mod sketch;
pub mod smt;
