//! Wasserstein-1 estimation and diversity certificates.

pub mod certificate;
pub mod gap;
pub mod ot;

pub use certificate::{
    best_box_radius, box_certificate, certify_leaky_target, diversity_from_separation, levy_box, levy_to_diversity,
    tensorize_w1, DiversityCertificate, LevyBound, Step,
};
pub use gap::{min_separation, support_gap_certificate, support_gap_lower_bound, TargetKind, MAX_SUPPORT_LOG2};
pub use ot::{cost_matrix, min_cost_assignment, w1_empirical, w1_empirical_capped, w1_line, DEFAULT_MAX_POINTS};
