//! Generator assembly and sampling.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use forge_compiler::clamp::{clamp_layer, clamp_reciprocal};
use forge_compiler::combine::stack;
use forge_compiler::compose::chain;
use forge_core::error::{invalid, ForgeError, Result};
use forge_core::rng::{stream_rng, RngSeed};
use forge_core::{FixedScalar, Layer, Matrix, Provenance, ReluNet, SampleSet};
use forge_prg::LocalPrg;

use crate::decoder::{bits_per_coordinate, build_bit_decoder};
use crate::target::TargetModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    /// Uniform ±1 bits.
    Bits,
    /// Standard Gaussian.
    Gaussian,
    /// Uniform on `[-1, 1]^m`.
    UnitBox,
}

impl SeedKind {
    pub fn is_continuous(self) -> bool {
        self != SeedKind::Bits
    }

    fn label(self) -> &'static str {
        match self {
            SeedKind::Bits => "bits",
            SeedKind::Gaussian => "gaussian",
            SeedKind::UnitBox => "unit-box",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageRole {
    Frontend,
    Prg,
    Decoder,
    Pushforward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub role: StageRole,
    pub net: ReluNet,
}

/// Computed profile of the assembled network next to the values predicted
/// by summing stages and junctions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Accounting {
    pub depth: usize,
    pub size: usize,
    pub tau: u32,
    pub lambda: f64,
    pub predicted_depth: usize,
    pub predicted_size: usize,
    pub max_stage_tau: u32,
    /// Units spent passing values between consecutive stages.
    pub junction_units: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub m: usize,
    pub d: usize,
    pub epsilon: f64,
    pub seed_kind: SeedKind,
    /// Bits decoded into each latent coordinate.
    pub bits_per_coordinate: usize,
    /// Bits consumed by the decoder (`latent dim * bits_per_coordinate`).
    pub s: usize,
    /// True when the seed itself is projected instead of running the PRG.
    pub projected: bool,
    /// Integer reciprocal of the clamp width, for continuous seeds.
    pub clamp_reciprocal: Option<u64>,
    pub stages: Vec<Stage>,
    pub net: ReluNet,
    pub accounting: Accounting,
}

/// First `s` coordinates of `R^m`.
fn projection(m: usize, s: usize) -> Result<ReluNet> {
    let t = (0..s).map(|i| (i, i, FixedScalar::ONE)).collect();
    ReluNet::new(vec![Layer::new(Matrix::from_triplets(s, m, t)?, vec![FixedScalar::ZERO; s])])?
        .with_domain(forge_core::bounds::unit_box(m))
}

/// Assembles `G = H o J o PRG (o clamp)`.
///
/// `s = r * ceil(log2(1/eps))` bits feed the decoder. If `s <= m` the seed is
/// projected directly; otherwise the first `s` PRG outputs are used. For
/// continuous seeds the entrywise clamp front-end has width
/// `1/ceil(1/xi')` with `xi' = eps / (Lambda'' sqrt((2/pi) m^3 d))`,
/// where `Lambda''` is the Lipschitz claim of the downstream stages.
pub fn assemble(prg: &LocalPrg, target: &TargetModel, seed_kind: SeedKind, epsilon: f64) -> Result<GeneratorSpec> {
    let n = bits_per_coordinate(epsilon)?;
    let m = prg.m();
    let r = target.r();
    let d = target.d();
    let s = r * n;
    let projected = s <= m;
    let bits_stage = if projected {
        projection(m, s)?
    } else {
        if prg.d() < s {
            return invalid(format!("PRG has {} outputs but the decoder needs {s} bits", prg.d()));
        }
        let nets = prg.realize_networks()?;
        let refs: Vec<&ReluNet> = nets.iter().take(s).collect();
        stack(&refs)?
    };
    let decoder = build_bit_decoder(s, epsilon)?;
    let pd = chain(&bits_stage, &decoder)?;
    let pdh = chain(&pd, &target.net)?;
    let mut junction = s + r;
    let mut stages = vec![
        Stage { role: StageRole::Prg, net: bits_stage },
        Stage { role: StageRole::Decoder, net: decoder },
        Stage { role: StageRole::Pushforward, net: target.net.clone() },
    ];
    let (net, recip) = if seed_kind.is_continuous() {
        let (front, big_n) = build_frontend(m, d, epsilon, pdh.profile().lambda)?;
        let net = chain(&front, &pdh)?;
        stages.insert(0, Stage { role: StageRole::Frontend, net: front });
        junction += m;
        (net, Some(big_n))
    } else {
        (pdh, None)
    };
    let predicted_depth = stages.iter().map(|s| s.net.depth()).sum();
    let predicted_size = stages.iter().map(|s| s.net.size()).sum::<usize>() + junction;
    let p = net.profile().clone();
    let accounting = Accounting {
        depth: p.depth,
        size: p.size,
        tau: p.tau,
        lambda: p.lambda,
        predicted_depth,
        predicted_size,
        max_stage_tau: stages.iter().map(|s| s.net.profile().tau).max().unwrap_or(0),
        junction_units: junction,
    };
    Ok(GeneratorSpec {
        m,
        d,
        epsilon,
        seed_kind,
        bits_per_coordinate: n,
        s,
        projected,
        clamp_reciprocal: recip,
        stages,
        net,
        accounting,
    })
}

/// Entrywise clamp `h_xi` on `R^m` with `xi' = eps / (Lambda'' sqrt((2/pi) m^3 d))`
/// and `xi = 1/ceil(1/xi')`. Returns the network and `ceil(1/xi')`.
pub fn build_frontend(m: usize, d: usize, epsilon: f64, lambda_downstream: f64) -> Result<(ReluNet, u64)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if !(lambda_downstream.is_finite() && lambda_downstream > 0.0) {
        return invalid("downstream Lipschitz bound must be positive and finite");
    }
    let xi_prime =
        epsilon / (lambda_downstream * ((2.0 / std::f64::consts::PI) * (m as f64).powi(3) * d as f64).sqrt());
    let big_n = clamp_reciprocal(xi_prime)?;
    Ok((clamp_layer(m, big_n)?, big_n))
}

/// Draws one seed of the given kind.
pub fn draw_seed<R: Rng>(kind: SeedKind, m: usize, rng: &mut R) -> Vec<f64> {
    (0..m)
        .map(|_| match kind {
            SeedKind::Bits => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            SeedKind::Gaussian => rng.sample(StandardNormal),
            SeedKind::UnitBox => rng.random_range(-1.0..=1.0),
        })
        .collect()
}

/// `n` seeds, row-major; sample `i` uses its own stream of `seed`.
pub fn draw_seeds(kind: SeedKind, m: usize, n: usize, seed: RngSeed) -> Vec<f64> {
    (0..n).into_par_iter().flat_map_iter(|i| draw_seed(kind, m, &mut stream_rng(seed, i as u64))).collect()
}

/// Pushes `n` fresh seeds through the generator.
pub fn sample_generator(spec: &GeneratorSpec, n: usize, seed: RngSeed) -> Result<SampleSet> {
    if n == 0 {
        return invalid("need at least one sample");
    }
    let seeds = draw_seeds(spec.seed_kind, spec.m, n, seed);
    let out = spec.net.eval_float_batch(&seeds)?;
    let prov = Provenance::new(format!("generator:{}", spec.seed_kind.label()), seed)
        .note(format!("m={} d={} epsilon={}", spec.m, spec.d, spec.epsilon));
    SampleSet::new(n, spec.d, out, prov)
}

/// `n` uniform ±1 vectors in dimension `d`, with per-row `Pr[+1] = p_plus`.
pub fn sample_bits(d: usize, n: usize, p_plus: f64, seed: RngSeed) -> Result<SampleSet> {
    if !(0.0..=1.0).contains(&p_plus) {
        return invalid("probability must lie in [0, 1]");
    }
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = stream_rng(seed, i as u64);
            (0..d).map(|_| if rng.random_bool(p_plus) { 1.0 } else { -1.0 }).collect::<Vec<_>>()
        })
        .collect();
    SampleSet::new(n, d, data, Provenance::new(format!("bits:p={p_plus}"), seed))
}

/// `n` uniform points of `[0, 1]^d`.
pub fn sample_unit_cube(d: usize, n: usize, seed: RngSeed) -> Result<SampleSet> {
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = stream_rng(seed, i as u64);
            (0..d).map(|_| rng.random::<f64>()).collect::<Vec<_>>()
        })
        .collect();
    SampleSet::new(n, d, data, Provenance::new("unit-cube", seed))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageRef {
    role: StageRole,
    file: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    m: usize,
    d: usize,
    epsilon: f64,
    seed_kind: SeedKind,
    bits_per_coordinate: usize,
    s: usize,
    projected: bool,
    clamp_reciprocal: Option<u64>,
    stages: Vec<StageRef>,
    net_file: String,
    accounting: Accounting,
}

fn io(e: std::io::Error) -> ForgeError {
    ForgeError::Invalid(format!("i/o: {e}"))
}

impl GeneratorSpec {
    /// Writes `generator.json` plus one file per stage and the assembled net.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io)?;
        let mut refs = Vec::new();
        for (i, st) in self.stages.iter().enumerate() {
            let name = format!("stage{i}_{}.json", serde_json::to_value(st.role)?.as_str().unwrap_or("stage"));
            fs::write(dir.join(&name), st.net.to_json()?).map_err(io)?;
            refs.push(StageRef { role: st.role, file: name });
        }
        fs::write(dir.join("assembled.json"), self.net.to_json()?).map_err(io)?;
        let file = SpecFile {
            m: self.m,
            d: self.d,
            epsilon: self.epsilon,
            seed_kind: self.seed_kind,
            bits_per_coordinate: self.bits_per_coordinate,
            s: self.s,
            projected: self.projected,
            clamp_reciprocal: self.clamp_reciprocal,
            stages: refs,
            net_file: "assembled.json".into(),
            accounting: self.accounting.clone(),
        };
        fs::write(dir.join("generator.json"), serde_json::to_string_pretty(&file)?).map_err(io)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(&fs::read_to_string(dir.join("generator.json")).map_err(io)?)?;
        let read =
            |name: &str| -> Result<ReluNet> { ReluNet::from_json(&fs::read_to_string(dir.join(name)).map_err(io)?) };
        let stages =
            file.stages.iter().map(|r| Ok(Stage { role: r.role, net: read(&r.file)? })).collect::<Result<Vec<_>>>()?;
        let net = read(&file.net_file)?;
        if net.d_in() != file.m || net.d_out() != file.d {
            return invalid("assembled network does not match the declared dimensions");
        }
        Ok(GeneratorSpec {
            m: file.m,
            d: file.d,
            epsilon: file.epsilon,
            seed_kind: file.seed_kind,
            bits_per_coordinate: file.bits_per_coordinate,
            s: file.s,
            projected: file.projected,
            clamp_reciprocal: file.clamp_reciprocal,
            stages,
            net,
            accounting: file.accounting,
        })
    }

    pub fn stage(&self, role: StageRole) -> Option<&ReluNet> {
        self.stages.iter().find(|s| s.role == role).map(|s| &s.net)
    }

    /// Clamp width `xi = 1/N` for continuous seeds.
    pub fn xi(&self) -> Option<f64> {
        self.clamp_reciprocal.map(|n| 1.0 / n as f64)
    }
}
