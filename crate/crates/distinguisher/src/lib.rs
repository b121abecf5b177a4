//! Distinguishing attacks: threshold scans, trained MLP discriminators and
//! IPM estimates over fixed network families.

pub mod ipm;
pub mod mlp;
pub mod report;
pub mod sampler;
pub mod scan;

pub use ipm::ipm_report;
pub use mlp::{evaluate, train_discriminator, Adam, AdamConfig, EvalStats, Mlp, TrainConfig};
pub use report::{dkw_halfwidth, hoeffding_halfwidth, AttackReport, CurvePoint, Method};
pub use sampler::{BitsSampler, GeneratorSampler, PrgSampler, ResampleSampler, Sampler};
pub use scan::{scan_window, subgaussian_scale, threshold_scan, threshold_scan_in, CONFIDENCE};
