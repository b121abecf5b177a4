use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use forge_core::error::{ForgeError, Result};

use crate::mlp::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    ThresholdScan {
        threshold: f64,
    },
    Mlp {
        depth: usize,
    },
    /// Best member of a fixed family of networks.
    CustomNet {
        index: usize,
        family_size: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub test_loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub method: Method,
    pub advantage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_gen: usize,
    pub n_target: usize,
    #[serde(default)]
    pub loss_curve: Option<Vec<CurvePoint>>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub config: Option<TrainConfig>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl AttackReport {
    pub fn new(method: Method, advantage: f64, ci: (f64, f64), n_gen: usize, n_target: usize) -> Self {
        AttackReport {
            method,
            advantage,
            ci_low: ci.0.min(advantage),
            ci_high: ci.1.max(advantage),
            n_gen,
            n_target,
            loss_curve: None,
            metrics: BTreeMap::new(),
            config: None,
            notes: Vec::new(),
        }
    }

    /// Writes `step,test_loss,accuracy` rows.
    pub fn write_curve_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| ForgeError::Invalid(format!("i/o: {e}"));
        writeln!(w, "step,test_loss,accuracy").map_err(io)?;
        for p in self.loss_curve.iter().flatten() {
            writeln!(w, "{},{},{}", p.step, p.test_loss, p.accuracy).map_err(io)?;
        }
        Ok(())
    }
}

/// DKW half-width: `sup_t |F_n(t) - F(t)| <= sqrt(ln(2/delta) / (2n))` w.p. `1 - delta`.
pub fn dkw_halfwidth(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Hoeffding half-width for the mean of `n` values in a range of width `range`.
pub fn hoeffding_halfwidth(n: usize, range: f64, delta: f64) -> f64 {
    range * dkw_halfwidth(n, delta)
}
