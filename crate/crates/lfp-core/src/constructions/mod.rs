//! Constructive gadgets: preorder transformers, the arithmetic library over
//! linear orders, tuple interpretation, relativization, φ_η families,
//! indiscernible extraction, and the IP-from-OP pipeline.

mod arith;
mod indiscernible;
mod interpret;
mod pipeline;
mod preorders;

pub use arith::{arithmetic_library, define_arith_macros, ArithmeticLibrary, ARITH_MACROS};
pub use indiscernible::{
    build_phi_eta, check_indiscernible, delta_k, extract_indiscernible, Indiscernible, PhiEta,
};
pub use interpret::{
    interpret, relativize, relativize_partitioned, InterpretError, InterpretedFormula,
};
pub use pipeline::{derive_ip_witness, ChainExhibit, IpDiagnostic, IpOutcome, PipelineError};
pub use preorders::{
    containment_preorder, height_formula, materialize_preorder, sop_from_chain, PreorderFormula,
    StagePreorder,
};
