//! Operations shared by the subcommands and the experiment runner.

use std::path::Path;

use serde::Serialize;

use forge_compiler::random_layered;
use forge_core::rng::{derive_seed, stream_rng};
use forge_core::{FixedScalar, Provenance, ReluNet, SampleSet};
use forge_distinguisher::{threshold_scan, train_discriminator, AttackReport, Sampler, TrainConfig};
use forge_diversity::{
    box_certificate, certify_leaky_target, support_gap_certificate, DiversityCertificate, TargetKind,
};
use forge_hardness::{build_hard_function, check_hardness_bound, Classifier, HardnessReport};
use forge_pipeline::{sample_target, sample_unit_cube, TargetModel};
use forge_prg::LocalPrg;

use crate::error::{CliError, CliResult};

/// Output encoding for sample files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn dyadic(v: f64, what: &str) -> CliResult<FixedScalar> {
    FixedScalar::from_f64_exact(v).map_err(|_| CliError::User(format!("{what} = {v} must be a dyadic rational")))
}

pub fn target_model(dims: &[usize], lambda_leak: f64, seed: u64) -> CliResult<TargetModel> {
    Ok(sample_target(dims, dyadic(lambda_leak, "lambda_leak")?, seed)?)
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> CliResult<Vec<u8>> {
    let bytes = (serde_json::to_string_pretty(v)? + "\n").into_bytes();
    std::fs::write(path, &bytes)?;
    Ok(bytes)
}

#[derive(Serialize)]
struct JsonSamples<'a> {
    provenance: &'a Provenance,
    n: usize,
    d: usize,
    rows: Vec<&'a [f64]>,
}

pub fn encode_samples(s: &SampleSet, format: Format) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => s.write_csv(&mut buf)?,
        Format::Json => {
            let j = JsonSamples { provenance: &s.provenance, n: s.n(), d: s.d(), rows: s.rows().collect() };
            buf = (serde_json::to_string(&j)? + "\n").into_bytes();
        }
    }
    Ok(buf)
}

/// Leaky target pushforward of the uniform cube.
pub struct TargetSampler {
    pub target: TargetModel,
}

impl Sampler for TargetSampler {
    fn dim(&self) -> usize {
        self.target.d()
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<f32> {
        let xs = sample_unit_cube(self.target.r(), n, seed).expect("positive dimension");
        let ys = self.target.net.eval_float_batch(xs.data()).expect("dimension checked at construction");
        ys.iter().map(|&v| v as f32).collect()
    }

    fn name(&self) -> String {
        format!("target(dims={:?})", self.target.dims)
    }
}

pub fn certify(
    kind: &crate::config::CertifySection,
    prg: Option<&LocalPrg>,
    seed: u64,
) -> CliResult<DiversityCertificate> {
    use crate::config::CertifySection::*;
    let c = match kind {
        Leaky { dims, lambda_leak, r0, .. } => certify_leaky_target(&target_model(dims, *lambda_leak, seed)?, *r0)?,
        Cube { d, log2_n } => box_certificate(*d, *log2_n)?,
        PrgSupport => {
            let prg = prg.ok_or_else(|| CliError::User("prg-support needs a PRG".into()))?;
            let img: Vec<Vec<f64>> = prg.image()?.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
            let set = SampleSet::from_rows(&img, Provenance::new("prg-image", 0))?;
            support_gap_certificate(&set, &TargetKind::UniformBits(prg.d()))?
        }
    };
    c.verify()?;
    Ok(c)
}

pub fn attack_mlp(cfg: &TrainConfig, gen: &dyn Sampler, target: &dyn Sampler) -> CliResult<AttackReport> {
    let (_, mut r) = train_discriminator(cfg, gen, target)?;
    r.notes.push(format!("generator: {}", gen.name()));
    r.notes.push(format!("target: {}", target.name()));
    Ok(r)
}

/// Scan on `f(x)` (first output of `net`), or on the normalized coordinate sum.
pub fn attack_scan(
    net: Option<&ReluNet>,
    gen: &dyn Sampler,
    target: &dyn Sampler,
    n: usize,
    seed: u64,
) -> CliResult<AttackReport> {
    let d = forge_distinguisher::sampler::check_dims(gen, target)?;
    let stat = |data: Vec<f32>| -> CliResult<Vec<f64>> {
        let xs: Vec<f64> = data.iter().map(|&v| v as f64).collect();
        match net {
            Some(f) => {
                let k = f.d_out();
                Ok(f.eval_float_batch(&xs)?.chunks(k).map(|r| r[0]).collect())
            }
            None => Ok(xs.chunks(d).map(|r| r.iter().sum::<f64>() / (d as f64).sqrt()).collect()),
        }
    };
    let x = stat(target.sample(n, derive_seed(seed, "scan-target")))?;
    let y = stat(gen.sample(n, derive_seed(seed, "scan-gen")))?;
    let mut r = threshold_scan(&x, &y)?;
    r.notes.push(match net {
        Some(_) => "statistic: first output of the supplied network".into(),
        None => "statistic: coordinate sum / sqrt(d)".into(),
    });
    Ok(r)
}

/// TSA PRG with the given hypergraph seed against a random layered circuit.
pub fn hardness_check(m: usize, d: usize, seed: u64) -> CliResult<HardnessReport> {
    let prg = LocalPrg::tsa(m, d, seed)?;
    let h = build_hard_function(&prg)?;
    let mut rng = stream_rng(seed, 7);
    let f = random_layered(d, &[3, 1], 4, 1, &mut rng)?;
    Ok(check_hardness_bound(&Classifier::Circuit(f), &h, 1.max(h.image_size() / 64))?)
}
