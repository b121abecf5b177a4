//! Average-case hardness of PRG range membership, checked by enumeration.

pub mod bound;
pub mod instances;
pub mod range;

pub use bound::{
    agreement_probability, check_hardness_bound, exact_counts, Classifier, Counts, HardnessReport, MixtureDist, Mode,
    BOUND_TOLERANCE, MAX_EXACT_D,
};
pub use instances::{constant_circuit, copying_prg, random_instance};
pub use range::{build_hard_function, pack, unpack, HardFunction};
