//! W1 lower bounds between a finitely supported generator and a target.

use std::collections::BTreeSet;

use rayon::prelude::*;

use forge_core::error::{ensure_dim, invalid, ForgeError, Result};
use forge_core::SampleSet;

use crate::certificate::{box_certificate, diversity_from_separation, DiversityCertificate};

/// Largest support enumerated by [`support_gap_certificate`], as a power of two.
pub const MAX_SUPPORT_LOG2: u32 = 20;

/// Target distributions with a known certificate.
#[derive(Clone, Debug)]
pub enum TargetKind {
    /// Uniform on `{±1}^d`.
    UniformBits(usize),
    /// Uniform on `[0,1]^d`.
    UnitCube(usize),
    /// Uniform on the distinct rows of a sample.
    Empirical(SampleSet),
}

impl TargetKind {
    pub fn d(&self) -> usize {
        match self {
            TargetKind::UniformBits(d) | TargetKind::UnitCube(d) => *d,
            TargetKind::Empirical(s) => s.d(),
        }
    }
}

fn distinct_rows<'a>(rows: impl Iterator<Item = &'a [f64]>) -> Vec<Vec<f64>> {
    let set: BTreeSet<Vec<u64>> = rows.map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
    set.into_iter().map(|r| r.into_iter().map(f64::from_bits).collect()).collect()
}

/// Smallest pairwise distance among `points`.
pub fn min_separation(points: &[Vec<f64>]) -> f64 {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            points[i + 1..]
                .iter()
                .map(|q| points[i].iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
        .sqrt()
}

/// Certificate for the target evaluated at `N = |distinct support|`.
pub fn support_gap_certificate(support: &SampleSet, target: &TargetKind) -> Result<DiversityCertificate> {
    ensure_dim(target.d(), support.d(), "support dimension")?;
    if support.n() > 1 << MAX_SUPPORT_LOG2 {
        return Err(ForgeError::TooLarge(format!("support of {} points", support.n())));
    }
    let n = distinct_rows(support.rows()).len();
    let log2_n = (n as f64).log2();
    match target {
        TargetKind::UniformBits(d) => diversity_from_separation(2.0, log2_n, *d as f64),
        TargetKind::UnitCube(d) => box_certificate(*d, log2_n),
        TargetKind::Empirical(s) => {
            let pts = distinct_rows(s.rows());
            if pts.len() < 2 {
                return invalid("empirical target needs two distinct points");
            }
            diversity_from_separation(min_separation(&pts), log2_n, (pts.len() as f64).log2())
        }
    }
}

/// `beta` of [`support_gap_certificate`].
pub fn support_gap_lower_bound(support: &SampleSet, target: &TargetKind) -> Result<f64> {
    Ok(support_gap_certificate(support, target)?.beta)
}
