//! Diversity certificates: `(N, beta)` such that every distribution on at
//! most `N` points is at W1 distance at least `beta` from the target.
//!
//! Support sizes and small-ball masses are carried as base-2 logarithms so
//! that `2^200`-point supports and `2^-500` masses stay representable.

use serde::{Deserialize, Serialize};

use forge_core::error::{invalid, ForgeError, Result};
use forge_pipeline::TargetModel;

/// Relative tolerance used when re-deriving a trace.
const RECHECK_TOL: f64 = 1e-9;

/// Small-ball bound `Q(r) <= 2^log2_alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyBound {
    pub r: f64,
    pub log2_alpha: f64,
}

impl LevyBound {
    pub fn alpha(&self) -> f64 {
        self.log2_alpha.exp2()
    }
}

/// One derivation step of a certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum Step {
    /// Uniform target on `2^log2_n_prime` points at pairwise distance `>= alpha`.
    Separation { alpha: f64, log2_n: f64, log2_n_prime: f64, beta: f64 },
    /// Volume bound for the uniform cube `[0,1]^d`.
    LevyBox { d: usize, r: f64, log2_alpha: f64 },
    /// Linear map with smallest singular value `sigma_min`.
    LinearPush { layer: usize, gamma: f64, threshold: f64, sigma_min: f64, r_in: f64, r_out: f64, log2_alpha: f64 },
    /// Entrywise leaky ReLU on `width` coordinates.
    LeakyPush { width: usize, lambda: f64, r_in: f64, r_out: f64, log2_alpha_in: f64, log2_alpha_out: f64 },
    /// Small-ball bound turned into a certificate at support `2^log2_n`.
    LevyToDiversity { r: f64, log2_alpha: f64, log2_n: f64, beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiversityCertificate {
    pub log2_n: f64,
    pub beta: f64,
    pub trace: Vec<Step>,
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= RECHECK_TOL * a.abs().max(b.abs()).max(1.0)
}

fn mismatch(what: &str) -> ForgeError {
    ForgeError::Invalid(format!("trace step does not re-derive: {what}"))
}

fn levy_box_log2(d: usize, r: f64) -> f64 {
    (d as f64 / 2.0 * (18.0 * r * r / d as f64).log2()).min(0.0)
}

fn levy_beta(r: f64, log2_alpha: f64, log2_n: f64) -> f64 {
    (r * (1.0 - (log2_n + log2_alpha).exp2())).max(0.0)
}

fn separation_beta(alpha: f64, log2_n: f64, log2_n_prime: f64) -> f64 {
    alpha * (1.0 - (log2_n - log2_n_prime).exp2())
}

impl DiversityCertificate {
    /// Support bound `N` (may be `inf` for huge supports).
    pub fn n(&self) -> f64 {
        self.log2_n.exp2()
    }

    /// Recomputes every step from its inputs and checks that consecutive
    /// steps chain.
    pub fn verify(&self) -> Result<()> {
        if self.trace.is_empty() {
            return Err(mismatch("empty trace"));
        }
        if self.beta < 0.0 {
            return Err(mismatch("negative beta"));
        }
        let mut state: Option<(f64, f64)> = None;
        for s in &self.trace {
            match *s {
                Step::Separation { alpha, log2_n, log2_n_prime, beta } => {
                    if !close(beta, separation_beta(alpha, log2_n, log2_n_prime)) {
                        return Err(mismatch("separation"));
                    }
                }
                Step::LevyBox { d, r, log2_alpha } => {
                    if !close(log2_alpha, levy_box_log2(d, r)) {
                        return Err(mismatch("levy box"));
                    }
                    state = Some((r, log2_alpha));
                }
                Step::LinearPush { gamma, threshold, sigma_min, r_in, r_out, log2_alpha, .. } => {
                    let (r, a) = state.ok_or_else(|| mismatch("linear push without a bound"))?;
                    if !close(r, r_in) || !close(a, log2_alpha) {
                        return Err(mismatch("linear push input"));
                    }
                    if !close(threshold, gamma / (2.0 * (1.0 + gamma))) || sigma_min < threshold {
                        return Err(mismatch("linear push threshold"));
                    }
                    if !close(r_out, sigma_min * r_in) {
                        return Err(mismatch("linear push radius"));
                    }
                    state = Some((r_out, log2_alpha));
                }
                Step::LeakyPush { width, lambda, r_in, r_out, log2_alpha_in, log2_alpha_out } => {
                    let (r, a) = state.ok_or_else(|| mismatch("leaky push without a bound"))?;
                    if !close(r, r_in) || !close(a, log2_alpha_in) {
                        return Err(mismatch("leaky push input"));
                    }
                    if !close(r_out, lambda * r_in) || !close(log2_alpha_out, (log2_alpha_in + width as f64).min(0.0)) {
                        return Err(mismatch("leaky push output"));
                    }
                    state = Some((r_out, log2_alpha_out));
                }
                Step::LevyToDiversity { r, log2_alpha, log2_n, beta } => {
                    if let Some((r0, a0)) = state {
                        if !close(r, r0) || !close(log2_alpha, a0) {
                            return Err(mismatch("levy input"));
                        }
                    }
                    if !close(beta, levy_beta(r, log2_alpha, log2_n)) {
                        return Err(mismatch("levy beta"));
                    }
                }
            }
        }
        let last = match self.trace.last() {
            Some(Step::Separation { log2_n, beta, .. }) | Some(Step::LevyToDiversity { log2_n, beta, .. }) => {
                (*log2_n, *beta)
            }
            _ => return Err(mismatch("trace does not end in a certificate")),
        };
        if !close(last.0, self.log2_n) || !close(last.1, self.beta) {
            return Err(mismatch("headline (N, beta)"));
        }
        Ok(())
    }
}

/// Uniform distribution on `2^log2_n_prime` points with pairwise distances
/// at least `alpha_sep`: certificate `(N, alpha (1 - N/N'))`.
pub fn diversity_from_separation(alpha_sep: f64, log2_n: f64, log2_n_prime: f64) -> Result<DiversityCertificate> {
    if !(alpha_sep > 0.0 && alpha_sep.is_finite()) {
        return invalid("separation must be positive");
    }
    if log2_n > log2_n_prime {
        return invalid("support bound exceeds the number of target points");
    }
    let beta = separation_beta(alpha_sep, log2_n, log2_n_prime);
    Ok(DiversityCertificate {
        log2_n,
        beta,
        trace: vec![Step::Separation { alpha: alpha_sep, log2_n, log2_n_prime, beta }],
    })
}

/// `Q_{[0,1]^d}(r) <= min(1, (18 r^2 / d)^{d/2})`.
pub fn levy_box(d: usize, r: f64) -> Result<LevyBound> {
    if d == 0 || !(r > 0.0 && r.is_finite()) {
        return invalid("levy bound needs d >= 1 and r > 0");
    }
    Ok(LevyBound { r, log2_alpha: levy_box_log2(d, r) })
}

/// `(N, r (1 - N alpha))`, floored at zero.
pub fn levy_to_diversity(b: &LevyBound, log2_n: f64) -> DiversityCertificate {
    let beta = levy_beta(b.r, b.log2_alpha, log2_n);
    DiversityCertificate {
        log2_n,
        beta,
        trace: vec![Step::LevyToDiversity { r: b.r, log2_alpha: b.log2_alpha, log2_n, beta }],
    }
}

/// Radius maximising `r (1 - N (18 r^2/d)^{d/2})`.
pub fn best_box_radius(d: usize, log2_n: f64) -> f64 {
    let d = d as f64;
    // stationary point: N c (d+1) r^d = 1 with c = (18/d)^{d/2}
    let log2_c = d / 2.0 * (18.0 / d).log2();
    ((-(log2_n + log2_c + (d + 1.0).log2())) / d).exp2()
}

/// Certificate for the uniform cube `[0,1]^d` at support `2^log2_n`, using the
/// best radius.
pub fn box_certificate(d: usize, log2_n: f64) -> Result<DiversityCertificate> {
    let b = levy_box(d, best_box_radius(d, log2_n))?;
    let mut c = levy_to_diversity(&b, log2_n);
    c.trace.insert(0, Step::LevyBox { d, r: b.r, log2_alpha: b.log2_alpha });
    Ok(c)
}

/// Runs the small-ball recursion through a sampled leaky target on the cube
/// `[0,1]^{k_0}`, starting from radius `r0`, with the measured smallest
/// singular values. Emits `N = 1/(2 alpha_L)` and `beta = r_L / 2`.
pub fn certify_leaky_target(t: &TargetModel, r0: f64) -> Result<DiversityCertificate> {
    let lambda = t.lambda_leak.to_f64();
    let b = levy_box(t.r(), r0)?;
    let mut trace = vec![Step::LevyBox { d: t.r(), r: r0, log2_alpha: b.log2_alpha }];
    let (mut r, mut a) = (r0, b.log2_alpha);
    if t.sigma_min.len() != t.depth() {
        return invalid("target is missing singular values");
    }
    for i in 0..t.depth() {
        if i > 0 {
            let width = t.dims[i];
            let a_out = (a + width as f64).min(0.0);
            trace.push(Step::LeakyPush {
                width,
                lambda,
                r_in: r,
                r_out: lambda * r,
                log2_alpha_in: a,
                log2_alpha_out: a_out,
            });
            r *= lambda;
            a = a_out;
        }
        let gamma = t.dims[i + 1] as f64 / t.dims[i] as f64 - 1.0;
        let threshold = gamma / (2.0 * (1.0 + gamma));
        let sigma = t.sigma_min[i];
        if !(sigma >= threshold) {
            return Err(ForgeError::Refused(format!(
                "layer {}: smallest singular value {sigma:.4} is below {threshold:.4}",
                i + 1
            )));
        }
        trace.push(Step::LinearPush {
            layer: i + 1,
            gamma,
            threshold,
            sigma_min: sigma,
            r_in: r,
            r_out: sigma * r,
            log2_alpha: a,
        });
        r *= sigma;
    }
    if a >= -1.0 {
        return Err(ForgeError::Refused("small-ball mass too large for a non-trivial certificate".into()));
    }
    let log2_n = -1.0 - a;
    let mut c = levy_to_diversity(&LevyBound { r, log2_alpha: a }, log2_n);
    trace.append(&mut c.trace);
    c.trace = trace;
    Ok(c)
}

/// `eps sqrt(n)`, the product-measure bound `W1(p^n, q^n) <= eps sqrt(n)`.
///
/// The bound holds when an optimal coupling moves every point the same
/// distance (e.g. translates). For general measures only `eps * n` is valid.
pub fn tensorize_w1(eps: f64, n: usize) -> Result<f64> {
    if eps < 0.0 || n == 0 {
        return invalid("need eps >= 0 and n >= 1");
    }
    Ok(eps * (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use forge_core::dy;
    use forge_pipeline::sample_target;

    #[test]
    fn separation_formula() {
        assert_eq!(diversity_from_separation(2.0, 10.0, 10.0).unwrap().beta, 0.0);
        let c = diversity_from_separation(2.0, 10.0, 20.0).unwrap();
        assert_eq!(c.beta, 2.0 * (1.0 - 2f64.powi(-10)));
        c.verify().unwrap();
        assert!(diversity_from_separation(2.0, 11.0, 10.0).is_err());
    }

    #[test]
    fn box_formula() {
        let b = levy_box(40, 1.0).unwrap();
        assert!((b.alpha() / (18.0f64 / 40.0).powi(20) - 1.0).abs() < 1e-12);
        assert_eq!(levy_box(1, 10.0).unwrap().alpha(), 1.0);
        let c = levy_to_diversity(&b, f64::NEG_INFINITY);
        assert_eq!(c.beta, 1.0);
        let full = LevyBound { r: 1.0, log2_alpha: -3.0 };
        assert_eq!(levy_to_diversity(&full, 3.0).beta, 0.0);
    }

    #[test]
    fn refusal_on_small_sigma() {
        let mut t = sample_target(&[20, 24, 30], dy(1, 2), 0).unwrap();
        certify_leaky_target(&t, 1.0 / 3.0).unwrap().verify().unwrap();
        t.sigma_min[1] = 0.0;
        assert!(certify_leaky_target(&t, 1.0 / 3.0).is_err());
    }

    #[test]
    fn tampered_trace_fails() {
        let mut c = box_certificate(10, 3.0).unwrap();
        c.verify().unwrap();
        c.beta *= 1.01;
        assert!(c.verify().is_err());
    }

    #[test]
    fn tensorize() {
        assert_eq!(tensorize_w1(0.0, 5).unwrap(), 0.0);
        assert_eq!(tensorize_w1(0.3, 1).unwrap(), 0.3);
        assert!((tensorize_w1(0.1, 4).unwrap() - 0.2).abs() < 1e-15);
    }
}
