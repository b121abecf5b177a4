//! Experiment configuration files (JSON, unknown keys rejected).

use serde::{Deserialize, Serialize};

use forge_distinguisher::TrainConfig;
use forge_pipeline::SeedKind;

use crate::error::CliError;

/// Bundled configuration reproducing the four-depth discriminator curves.
pub const FIGURE1: &str = include_str!("../configs/figure1.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; section seeds default to values derived from it.
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub prg: Option<PrgSection>,
    #[serde(default)]
    pub generator: Option<GeneratorSection>,
    #[serde(default)]
    pub certify: Option<CertifySection>,
    #[serde(default)]
    pub attack: Option<AttackSection>,
    #[serde(default)]
    pub hardness: Option<HardnessSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrgSection {
    pub m: usize,
    pub d: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub seed_kind: SeedKind,
    pub epsilon: f64,
    /// Widths of the leaky target, input first.
    pub target_dims: Vec<usize>,
    pub lambda_leak: f64,
    #[serde(default)]
    pub target_seed: Option<u64>,
    /// Samples written to `samples.csv`.
    #[serde(default)]
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CertifySection {
    /// Small-ball recursion through a random leaky target.
    Leaky {
        dims: Vec<usize>,
        lambda_leak: f64,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_r0")]
        r0: f64,
    },
    /// Uniform cube `[0,1]^d` at support `2^log2_n`.
    Cube { d: usize, log2_n: f64 },
    /// Support gap of the configured PRG against uniform bits.
    PrgSupport,
}

fn default_r0() -> f64 {
    1.0 / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AttackMethod {
    Scan,
    Mlp,
}

/// What plays the generator in an attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GenSource {
    Prg,
    Generator,
    Bits { p_plus: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub method: AttackMethod,
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    #[serde(default = "default_source")]
    pub source: GenSource,
    #[serde(default)]
    pub train: TrainOverrides,
    /// Samples per side for the scan.
    #[serde(default = "default_scan_samples")]
    pub samples: usize,
}

fn default_depths() -> Vec<usize> {
    vec![1]
}

fn default_source() -> GenSource {
    GenSource::Prg
}

fn default_scan_samples() -> usize {
    100_000
}

/// Optional replacements for the training defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub width: Option<usize>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub steps: Option<usize>,
    pub eval_every: Option<usize>,
    pub eval_samples: Option<usize>,
    pub final_eval_samples: Option<usize>,
}

impl TrainOverrides {
    pub fn apply(&self, depth: usize, seed: u64) -> TrainConfig {
        let mut c = TrainConfig { hidden_layers: depth, seed, ..Default::default() };
        if let Some(v) = self.width {
            c.width = v;
        }
        if let Some(v) = self.lr {
            c.adam.lr = v;
        }
        if let Some(v) = self.batch {
            c.batch = v;
        }
        if let Some(v) = self.steps {
            c.steps = v;
        }
        if let Some(v) = self.eval_every {
            c.eval_every = v;
        }
        if let Some(v) = self.eval_samples {
            c.eval_samples = v;
        }
        if let Some(v) = self.final_eval_samples {
            c.final_eval_samples = v;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardnessSection {
    pub m: usize,
    pub d: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the line and column.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::User(format!("config line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |s: String| Err(CliError::User(s));
        if let Some(p) = &self.prg {
            if p.m < 5 || p.d == 0 {
                return bad(format!("prg: need m >= 5 and d >= 1 (got m={}, d={})", p.m, p.d));
            }
        }
        if let Some(g) = &self.generator {
            if self.prg.is_none() {
                return bad("generator: needs a prg section".into());
            }
            if !(g.epsilon > 0.0 && g.epsilon < 1.0) {
                return bad(format!("generator: epsilon {} not in (0, 1)", g.epsilon));
            }
            if g.target_dims.is_empty() {
                return bad("generator: target_dims is empty".into());
            }
        }
        if let Some(CertifySection::PrgSupport) = &self.certify {
            if self.prg.is_none() {
                return bad("certify: prg-support needs a prg section".into());
            }
        }
        if let Some(a) = &self.attack {
            match a.source {
                GenSource::Prg if self.prg.is_none() => return bad("attack: source prg needs a prg section".into()),
                GenSource::Generator if self.generator.is_none() => {
                    return bad("attack: source generator needs a generator section".into())
                }
                GenSource::Bits { p_plus } if !(0.0..=1.0).contains(&p_plus) => {
                    return bad(format!("attack: p_plus {p_plus} not in [0, 1]"))
                }
                GenSource::Bits { .. } if self.prg.is_none() => {
                    return bad("attack: bits source takes d from the prg section".into())
                }
                _ => {}
            }
            if a.method == AttackMethod::Mlp && (a.depths.is_empty() || a.depths.iter().any(|d| !(1..=4).contains(d))) {
                return bad("attack: depths must be in 1..=4".into());
            }
            for &depth in &a.depths {
                a.train.apply(depth, 0).validate().map_err(|e| CliError::User(format!("attack: {e}")))?;
            }
        }
        Ok(())
    }
}
