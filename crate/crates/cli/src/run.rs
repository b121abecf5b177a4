//! Config-driven experiments: stages run in a fixed order and every output
//! is hashed into the manifest.

use std::path::{Path, PathBuf};

use forge_core::rng::derive_seed;
use forge_distinguisher::{BitsSampler, GeneratorSampler, PrgSampler, Sampler};
use forge_pipeline::{assemble, sample_generator, GeneratorSpec};
use forge_prg::LocalPrg;

use crate::config::{AttackMethod, CertifySection, ExperimentConfig, GenSource};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, Manifest, OutputFile, StageRecord, Status};
use crate::ops::{self, Format, TargetSampler};

/// Stage names and the files each will write.
pub fn plan(cfg: &ExperimentConfig) -> Vec<(String, Vec<String>)> {
    let mut p = Vec::new();
    if cfg.prg.is_some() {
        p.push(("prg".into(), vec!["prg.json".into()]));
    }
    if let Some(g) = &cfg.generator {
        let mut f = vec!["generator/generator.json".to_string()];
        if g.samples > 0 {
            f.push("generator_samples.csv".into());
        }
        p.push(("generator".into(), f));
    }
    if cfg.certify.is_some() {
        p.push(("certify".into(), vec!["certificate.json".into()]));
    }
    if let Some(a) = &cfg.attack {
        let f = match a.method {
            AttackMethod::Scan => vec!["attack_scan.json".to_string()],
            AttackMethod::Mlp => a
                .depths
                .iter()
                .flat_map(|k| [format!("loss_curve_depth{k}.csv"), format!("attack_depth{k}.json")])
                .collect(),
        };
        p.push(("attack".into(), f));
    }
    if cfg.hardness.is_some() {
        p.push(("hardness".into(), vec!["hardness.json".into()]));
    }
    p
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    manifest: Manifest,
    prg: Option<LocalPrg>,
    generator: Option<GeneratorSpec>,
}

impl Ctx<'_> {
    fn seed(&mut self, role: &str, explicit: Option<u64>) -> u64 {
        let s = explicit.unwrap_or_else(|| derive_seed(self.cfg.seed, role));
        self.manifest.seeds.insert(role.to_string(), s);
        s
    }

    fn record(&self, rel: &str, bytes: &[u8]) -> OutputFile {
        OutputFile { path: rel.to_string(), sha256: sha256_hex(bytes) }
    }

    fn write(&self, rel: &str, bytes: &[u8]) -> CliResult<OutputFile> {
        std::fs::write(self.dir.join(rel), bytes)?;
        Ok(self.record(rel, bytes))
    }

    fn write_json<T: serde::Serialize>(&self, rel: &str, v: &T) -> CliResult<OutputFile> {
        let bytes = ops::write_json(&self.dir.join(rel), v)?;
        Ok(self.record(rel, &bytes))
    }

    fn stage(&mut self, name: &str) -> CliResult<Vec<OutputFile>> {
        match name {
            "prg" => {
                let p = self.cfg.prg.clone().expect("planned");
                let seed = self.seed("prg", p.seed);
                let prg = LocalPrg::tsa(p.m, p.d, seed)?;
                let out = self.write_json("prg.json", &prg)?;
                self.prg = Some(prg);
                Ok(vec![out])
            }
            "generator" => {
                let g = self.cfg.generator.clone().expect("planned");
                let tseed = self.seed("target", g.target_seed);
                let target = ops::target_model(&g.target_dims, g.lambda_leak, tseed)?;
                let spec = assemble(self.prg.as_ref().expect("validated"), &target, g.seed_kind, g.epsilon)?;
                let gdir = self.dir.join("generator");
                std::fs::create_dir_all(&gdir)?;
                spec.save(&gdir)?;
                let mut outs = Vec::new();
                let mut names: Vec<_> = std::fs::read_dir(&gdir)?.collect::<Result<Vec<_>, _>>()?;
                names.sort_by_key(|e| e.file_name());
                for e in names {
                    let rel = format!("generator/{}", e.file_name().to_string_lossy());
                    outs.push(self.record(&rel, &std::fs::read(e.path())?));
                }
                if g.samples > 0 {
                    let sseed = self.seed("generator-samples", None);
                    let s = sample_generator(&spec, g.samples, sseed)?;
                    outs.push(self.write("generator_samples.csv", &ops::encode_samples(&s, Format::Csv)?)?);
                }
                self.generator = Some(spec);
                Ok(outs)
            }
            "certify" => {
                let c = self.cfg.certify.clone().expect("planned");
                let explicit = match &c {
                    CertifySection::Leaky { seed, .. } => *seed,
                    _ => None,
                };
                let seed = self.seed("certify", explicit);
                let cert = ops::certify(&c, self.prg.as_ref(), seed)?;
                Ok(vec![self.write_json("certificate.json", &cert)?])
            }
            "attack" => self.attack(),
            "hardness" => {
                let h = self.cfg.hardness.clone().expect("planned");
                let seed = self.seed("hardness", h.seed);
                let r = ops::hardness_check(h.m, h.d, seed)?;
                let out = self.write_json("hardness.json", &r)?;
                if !r.holds || r.witness_failures > 0 {
                    return Err(CliError::Internal("hardness bound or witness check failed".into()));
                }
                Ok(vec![out])
            }
            other => unreachable!("unknown stage {other}"),
        }
    }

    fn attack(&mut self) -> CliResult<Vec<OutputFile>> {
        let a = self.cfg.attack.clone().expect("planned");
        let gen: Box<dyn Sampler> = match &a.source {
            GenSource::Prg => Box::new(PrgSampler { prg: self.prg.clone().expect("validated") }),
            GenSource::Bits { p_plus } => {
                Box::new(BitsSampler { d: self.cfg.prg.as_ref().expect("validated").d, p_plus: *p_plus })
            }
            GenSource::Generator => Box::new(GeneratorSampler { spec: self.generator.clone().expect("validated") }),
        };
        let target: Box<dyn Sampler> = match &a.source {
            GenSource::Generator => {
                let g = self.cfg.generator.as_ref().expect("validated");
                let tseed = self.manifest.seeds["target"];
                Box::new(TargetSampler { target: ops::target_model(&g.target_dims, g.lambda_leak, tseed)? })
            }
            _ => Box::new(BitsSampler::uniform(gen.dim())),
        };
        let mut outs = Vec::new();
        match a.method {
            AttackMethod::Scan => {
                let seed = self.seed("attack-scan", None);
                let r = ops::attack_scan(None, gen.as_ref(), target.as_ref(), a.samples, seed)?;
                outs.push(self.write_json("attack_scan.json", &r)?);
            }
            AttackMethod::Mlp => {
                for &k in &a.depths {
                    let seed = self.seed(&format!("attack-depth{k}"), None);
                    let r = ops::attack_mlp(&a.train.apply(k, seed), gen.as_ref(), target.as_ref())?;
                    let mut csv = Vec::new();
                    r.write_curve_csv(&mut csv)?;
                    outs.push(self.write(&format!("loss_curve_depth{k}.csv"), &csv)?);
                    outs.push(self.write_json(&format!("attack_depth{k}.json"), &r)?);
                }
            }
        }
        Ok(outs)
    }
}

/// Runs every configured stage into `dir`. A failing stage stops the run;
/// the manifest is written either way and records the failure.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> CliResult<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut ctx = Ctx { cfg, dir: dir.to_path_buf(), manifest: Manifest::new(cfg)?, prg: None, generator: None };
    let mut failure = None;
    for (name, _) in plan(cfg) {
        if failure.is_some() {
            ctx.manifest.stages.push(StageRecord { name, status: Status::Skipped, error: None, outputs: vec![] });
            continue;
        }
        match ctx.stage(&name) {
            Ok(outputs) => ctx.manifest.stages.push(StageRecord { name, status: Status::Ok, error: None, outputs }),
            Err(e) => {
                ctx.manifest.stages.push(StageRecord {
                    name,
                    status: Status::Failed,
                    error: Some(e.to_string()),
                    outputs: vec![],
                });
                failure = Some(e);
            }
        }
    }
    if failure.is_some() {
        ctx.manifest.status = Status::Failed;
    }
    ctx.manifest.write(dir)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(ctx.manifest),
    }
}
