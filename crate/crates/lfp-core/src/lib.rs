//! Workbench for least fixed-point (LFP) logic over finite structures.
//!
//! The crate is organized around five layers:
//!
//! - [`formula`] / [`parser`]: syntax of FO + lfp (AST, grammar, polarity
//!   analysis, substitution, rendering);
//! - [`structure`] / [`family`]: finite structures, their JSON storage
//!   format, and generators for the standard families (pure sets, successor,
//!   linear orders, Paley graphs, random graphs, disjoint unions);
//! - [`eval`] / [`stages`] / [`unfold`]: semantics — Tarskian evaluation,
//!   fixpoint stage computation, closure ordinals, stage comparison, and the
//!   finite unfolding of an lfp body into plain first-order formulas;
//! - [`dividing`]: brute-force detectors and verifiers for the combinatorial
//!   dividing lines OP(n), sOP(n), IP(n), TP2(n), defining sentences, and
//!   family-level profiling;
//! - [`constructions`]: constructive gadgets — containment and stage
//!   preorders, the height formula, the arithmetic/bit/factor library over
//!   linear orders, tuple interpretation, relativization, indiscernible
//!   extraction, and the IP-from-OP pipeline.
//!
//! [`report`] bundles the experiment harness used by the CLI.

pub mod constructions;
pub mod dividing;
pub mod eval;
pub mod family;
pub mod formula;
pub mod parser;
pub mod report;
pub mod signature;
pub mod stages;
pub mod structure;
pub mod unfold;

mod bits;
mod table;

pub use bits::BitSet;
pub use formula::{Formula, PartitionedFormula, Polarity};
pub use parser::{parse_formula, MacroSet, ParseError};
pub use signature::Signature;
pub use structure::FiniteStructure;
/// Row-major tuple enumeration order used for witness tie-breaking.
pub use table::{all_tuples, tuple_from_rank, tuple_rank};
