//! Compile trained multilayer perceptrons into combinational logic.
//!
//! Three lowering routes are provided:
//!
//! * direct arithmetic lowering of every neuron into multipliers, an
//!   accumulator, a ReLU comparator/multiplexer, a shifter and a clipper;
//! * per-bit random forests distilled from the quantized activations;
//! * per-bit LogicNets (randomly wired LUT networks trained by counting).
//!
//! All routes produce a word-level [`netlist::Netlist`] which is bit-blasted
//! into an [`aig::Aig`]. The resulting graphs can be simulated, swept,
//! written as ASCII AIGER, checked for equivalence with the built-in CDCL
//! solver and rendered as readable equation reports.

pub mod aig;
pub mod analysis;
pub mod dataset;
pub mod error;
pub mod fixedpoint;
pub mod forest;
pub mod lutnet;
pub mod mlp;
pub mod netlist;
pub mod pipeline;
pub mod sat;
pub mod twolevel;

pub use error::{Error, Result};
