//! Exact compilers from Boolean objects to ReLU networks, plus the
//! composition rules that keep their complexity profiles honest.

pub mod clamp;
pub mod combine;
pub mod compose;
pub mod fourier;
pub mod leaky;
pub mod ltf;
pub mod parity;
pub mod predicate;

pub use clamp::{clamp_layer, clamp_net, clamp_reciprocal, reciprocal_of};
pub use combine::{add_output_bias, embed_inputs, linear_combine, pad_depth, pad_size, rebalance, stack};
pub use compose::{chain, chain_with, compose, Junction};
pub use fourier::{fourier_transform, FourierExpansion};
pub use leaky::leaky_to_relu;
pub use ltf::{layer_circuit, ltf_to_relu, random_layered, Gate, LtfCircuit};
pub use parity::{compile_parity, compile_predicate};
pub use predicate::{index_point, point_index, Predicate, MAX_ARITY};
