//! Numerical substrate: dyadic fixed-point scalars, sparse layered ReLU
//! networks with exact and floating evaluation, bound propagation, Lipschitz
//! checks, seeded random streams, and sample sets.

pub mod bounds;
pub mod dyadic;
pub mod error;
pub mod fixed;
pub mod linalg;
pub mod lipschitz;
pub mod matrix;
pub mod net;
pub mod rng;
pub mod samples;

pub use bounds::Interval;
pub use dyadic::Dyadic;
pub use error::{ForgeError, Result};
pub use fixed::{dy, FixedScalar};
pub use lipschitz::empirical_lipschitz;
pub use matrix::Matrix;
pub use net::{ComplexityProfile, ExactConfig, Layer, ReluNet};
pub use samples::{Provenance, SampleSet};
