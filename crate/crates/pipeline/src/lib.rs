//! Hard generators assembled from a clamp front-end, a local PRG, a bit
//! decoder and a target pushforward network.

pub mod decoder;
pub mod generator;
pub mod target;

pub use decoder::{bits_per_coordinate, build_bit_decoder, decode_block};
pub use generator::{
    assemble, build_frontend, draw_seed, draw_seeds, sample_bits, sample_generator, sample_unit_cube, Accounting,
    GeneratorSpec, SeedKind, Stage, StageRole,
};
pub use target::{gaussian_weights, sample_target, TargetModel};
