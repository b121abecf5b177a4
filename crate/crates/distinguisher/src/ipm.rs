//! Integral-probability-metric estimates over a fixed family of networks.

use forge_core::error::{ensure_dim, invalid, Result};
use forge_core::{ReluNet, SampleSet};

use crate::report::{hoeffding_halfwidth, AttackReport, Method};
use crate::scan::CONFIDENCE;

/// Diameter of the bounding box of both sample sets.
fn box_diameter(p: &SampleSet, q: &SampleSet) -> f64 {
    let d = p.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in p.rows().chain(q.rows()) {
        for (j, &v) in r.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `max_f |E_p f - E_q f|` over `family`.
///
/// Each `f` is confined to a range of width `Lambda_f * diam`, with `diam` the
/// diameter of the box spanned by the samples. The interval is Hoeffding on
/// both sides, Bonferroni-corrected over the family.
pub fn ipm_report(family: &[ReluNet], p: &SampleSet, q: &SampleSet) -> Result<AttackReport> {
    if family.is_empty() {
        return invalid("empty discriminator family");
    }
    if p.n() == 0 || q.n() == 0 {
        return invalid("empty sample set");
    }
    ensure_dim(p.d(), q.d(), "sample dimension")?;
    for f in family {
        ensure_dim(p.d(), f.d_in(), "discriminator input")?;
        ensure_dim(1, f.d_out(), "discriminator output")?;
    }
    let diam = box_diameter(p, q);
    let delta = (1.0 - CONFIDENCE) / (2 * family.len()) as f64;
    let mut best = (0usize, -1.0f64);
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let mut gaps = Vec::with_capacity(family.len());
    for (i, f) in family.iter().enumerate() {
        let gap = (mean(&f.eval_float_batch(p.data())?) - mean(&f.eval_float_batch(q.data())?)).abs();
        let range = f.profile().lambda * diam;
        let hw = hoeffding_halfwidth(p.n(), range, delta) + hoeffding_halfwidth(q.n(), range, delta);
        lo = lo.max(gap - hw);
        hi = hi.max(gap + hw);
        if gap > best.1 {
            best = (i, gap);
        }
        gaps.push(gap);
    }
    let mut r = AttackReport::new(
        Method::CustomNet { index: best.0, family_size: family.len() },
        best.1,
        (lo.max(0.0), hi),
        p.n(),
        q.n(),
    );
    r.metrics.insert("box_diameter".into(), diam);
    for (i, g) in gaps.iter().enumerate() {
        r.metrics.insert(format!("gap_{i}"), *g);
    }
    Ok(r)
}
