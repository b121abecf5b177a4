//! Threshold distinguishers on scalar statistics.

use forge_core::error::{invalid, Result};

use crate::report::{dkw_halfwidth, AttackReport, Method};

/// Confidence level of reported intervals.
pub const CONFIDENCE: f64 = 0.95;

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return invalid("threshold scan needs two non-empty samples");
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return invalid("threshold scan needs finite values");
    }
    Ok(())
}

/// Best threshold test `1[v > t]` between `x` and `y`.
///
/// Every cut of the pooled sorted sample is tried (thresholds at midpoints of
/// consecutive distinct values, plus both ends). The interval is the
/// two-sample DKW band at 95%.
pub fn threshold_scan(x: &[f64], y: &[f64]) -> Result<AttackReport> {
    threshold_scan_in(x, y, (f64::NEG_INFINITY, f64::INFINITY))
}

/// [`threshold_scan`] restricted to thresholds inside `window`.
pub fn threshold_scan_in(x: &[f64], y: &[f64], window: (f64, f64)) -> Result<AttackReport> {
    check(x, y)?;
    let mut pooled: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    // counts at or below the current cut
    let (mut cx, mut cy) = (0usize, 0usize);
    let mut best = (0.0f64, f64::NEG_INFINITY);
    let lowest = pooled[0].0;
    if window.0 <= lowest {
        best = (0.0, if window.0.is_finite() { window.0 } else { lowest - 1.0 });
    }
    let mut i = 0;
    while i < pooled.len() {
        let v = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == v {
            if pooled[i].1 {
                cx += 1;
            } else {
                cy += 1;
            }
            i += 1;
        }
        let t = match pooled.get(i) {
            Some(next) => v + (next.0 - v) / 2.0,
            None => v + 1.0,
        };
        if t < window.0 || t > window.1 {
            continue;
        }
        // Pr[X > t] - Pr[Y > t]
        let gap = (x.len() - cx) as f64 / nx - (y.len() - cy) as f64 / ny;
        if gap.abs() > best.0.abs() {
            best = (gap, t);
        }
    }
    let adv = best.0.abs();
    let slack = dkw_halfwidth(x.len(), (1.0 - CONFIDENCE) / 2.0) + dkw_halfwidth(y.len(), (1.0 - CONFIDENCE) / 2.0);
    let mut r = AttackReport::new(
        Method::ThresholdScan { threshold: best.1 },
        adv,
        ((adv - slack).max(0.0), (adv + slack).min(1.0)),
        x.len(),
        y.len(),
    );
    r.metrics.insert("signed_gap".into(), best.0);
    Ok(r)
}

/// `Lambda sqrt(2n)`: sub-Gaussian scale of a `Lambda`-Lipschitz function of
/// `n` independent ±1 bits.
pub fn subgaussian_scale(lipschitz: f64, n: usize) -> Result<f64> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) || n == 0 {
        return invalid("sub-Gaussian scale needs a positive Lipschitz constant and n >= 1");
    }
    Ok(lipschitz * (2.0 * n as f64).sqrt())
}

/// Window `[min mean - c s, max mean + c s]` with `s = sigma sqrt(ln(sigma/alpha))`,
/// outside which thresholds cannot gain more than `alpha`.
pub fn scan_window(mean_x: f64, mean_y: f64, sigma: f64, alpha: f64, c: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && alpha > 0.0 && c > 0.0) {
        return invalid("scan window needs positive sigma, alpha and c");
    }
    let s = c * sigma * (sigma / alpha).ln().max(1.0).sqrt();
    Ok((mean_x.min(mean_y) - s, mean_x.max(mean_y) + s))
}
