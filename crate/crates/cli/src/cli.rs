//! Argument parsing and subcommand dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use forge_compiler::{compile_predicate, ltf_to_relu, LtfCircuit, Predicate};
use forge_core::{Provenance, ReluNet, SampleSet};
use forge_distinguisher::{BitsSampler, PrgSampler, Sampler};
use forge_pipeline::{assemble, sample_generator, GeneratorSpec, SeedKind};
use forge_prg::{tsa_predicate, LocalPrg};

use crate::config::{AttackMethod, CertifySection, ExperimentConfig, TrainOverrides, FIGURE1};
use crate::error::{CliError, CliResult};
use crate::ops::{self, Format};
use crate::run::{plan, run_experiment};

#[derive(Parser, Debug)]
#[command(name = "forge", version, about = "Build, certify and attack PRG-based ReLU generators")]
pub struct Cli {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file or directory (stdout when omitted, where applicable).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Encoding for sample outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile a predicate truth table (JSON) into an exact ReLU network.
    CompilePredicate {
        /// Predicate JSON `{"k":..,"table":[..]}`; the TSA predicate when omitted.
        input: Option<PathBuf>,
    },
    /// Compile a threshold circuit (JSON) into a ReLU network.
    CompileCircuit {
        input: PathBuf,
        /// Clamp width; the largest valid power of two when omitted.
        #[arg(long)]
        xi_prime: Option<f64>,
    },
    /// Local PRG instances.
    Prg {
        #[command(subcommand)]
        cmd: PrgCmd,
    },
    /// Generator assembly and sampling.
    Gen {
        #[command(subcommand)]
        cmd: GenCmd,
    },
    /// Diversity certificates.
    Certify {
        #[command(subcommand)]
        kind: CertifyCmd,
    },
    /// Distinguishing attack on a PRG (or biased bits) against uniform bits.
    Attack {
        #[arg(long, value_enum)]
        method: AttackMethod,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        /// PRG JSON; otherwise a fresh TSA instance from --m/--d.
        #[arg(long)]
        prg: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        d: usize,
        /// Attack biased bits with this Pr[+1] instead of a PRG.
        #[arg(long)]
        p_plus: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Scan statistic network (first output); coordinate sum when omitted.
        #[arg(long)]
        net: Option<PathBuf>,
        /// Samples per side for the scan.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Range-membership hardness checks.
    Hardness {
        #[command(subcommand)]
        cmd: HardnessCmd,
    },
    /// Run an experiment config.
    Run {
        /// Config file; use --bundled for shipped configs.
        config: Option<PathBuf>,
        /// Name of a bundled config (`figure1`).
        #[arg(long)]
        bundled: Option<String>,
        /// Validate and print the plan without writing anything.
        #[arg(long)]
        dry_run: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum PrgCmd {
    /// Sample a TSA instance and print its JSON.
    Sample {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
    },
    /// Evaluate a PRG on explicit seeds or on `--n` random seeds. Seeds are
    /// written as `+`/`-` strings or as bits with `0` for `+1`.
    Eval {
        prg: PathBuf,
        #[arg(long = "input", value_name = "SIGNS")]
        inputs: Vec<String>,
        #[arg(long, default_value_t = 0)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum GenCmd {
    /// Assemble a generator into the --out directory.
    Build {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = SeedKindArg::Gaussian)]
        seed_kind: SeedKindArg,
        /// Target widths, comma separated, input first.
        #[arg(long, value_delimiter = ',', required = true)]
        target_dims: Vec<usize>,
        #[arg(long, default_value_t = 0.25)]
        lambda_leak: f64,
    },
    /// Draw samples from a generator directory.
    Sample {
        spec: PathBuf,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum SeedKindArg {
    Bits,
    Gaussian,
    UnitBox,
}

impl From<SeedKindArg> for SeedKind {
    fn from(k: SeedKindArg) -> Self {
        match k {
            SeedKindArg::Bits => SeedKind::Bits,
            SeedKindArg::Gaussian => SeedKind::Gaussian,
            SeedKindArg::UnitBox => SeedKind::UnitBox,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum CertifyCmd {
    /// Random leaky target on the unit cube.
    Leaky {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0.25)]
        lambda_leak: f64,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        r0: f64,
    },
    /// Uniform cube `[0,1]^d` against supports of size 2^log2_n.
    Cube {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        log2_n: f64,
    },
    /// Image of a TSA PRG against uniform bits.
    Prg {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum HardnessCmd {
    /// Exact agreement bound for a TSA PRG and a random threshold circuit.
    Check {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
    },
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, v: &T) -> CliResult<()> {
    emit(out, (serde_json::to_string_pretty(v)? + "\n").as_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::User(format!("{}:{}:{}: {e}", p.display(), e.line(), e.column())))
}

fn parse_signs(s: &str) -> CliResult<Vec<i8>> {
    s.chars()
        .map(|c| match c {
            '+' | '0' => Ok(1),
            '-' | '1' => Ok(-1),
            _ => Err(CliError::User(format!("seed character {c:?} is not one of + - 0 1"))),
        })
        .collect()
}

fn rows_to_set(rows: Vec<Vec<i8>>, prov: Provenance) -> CliResult<SampleSet> {
    let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
    Ok(SampleSet::from_rows(&rows, prov)?)
}

pub fn execute(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    let out = cli.out.as_deref();
    let seed = cli.seed;
    match cli.cmd {
        Command::CompilePredicate { input } => {
            let p: Predicate = match input {
                Some(path) => read_json(&path)?,
                None => tsa_predicate(),
            };
            emit(out, compile_predicate(&p)?.to_json()?.as_bytes())
        }
        Command::CompileCircuit { input, xi_prime } => {
            let c: LtfCircuit = read_json(&input)?;
            let xi = match xi_prime {
                Some(v) => ops::dyadic(v, "xi_prime")?,
                None => c.auto_xi_prime()?,
            };
            emit(out, ltf_to_relu(&c, xi)?.to_json()?.as_bytes())
        }
        Command::Prg { cmd } => match cmd {
            PrgCmd::Sample { m, d } => emit_json(out, &LocalPrg::tsa(m, d, seed)?),
            PrgCmd::Eval { prg, inputs, n } => {
                let prg: LocalPrg = read_json(&prg)?;
                let set = if inputs.is_empty() {
                    if n == 0 {
                        return Err(CliError::User("give --input seeds or --n".into()));
                    }
                    let data = PrgSampler { prg: prg.clone() }.sample(n, seed);
                    SampleSet::new(n, prg.d(), data.iter().map(|&v| v as f64).collect(), Provenance::new("prg", seed))?
                } else {
                    let rows = inputs.iter().map(|s| Ok(prg.eval(&parse_signs(s)?)?)).collect::<CliResult<_>>()?;
                    rows_to_set(rows, Provenance::new("prg-explicit", 0))?
                };
                emit(out, &ops::encode_samples(&set, cli.format)?)
            }
        },
        Command::Gen { cmd } => match cmd {
            GenCmd::Build { m, d, epsilon, seed_kind, target_dims, lambda_leak } => {
                let dir = out.ok_or_else(|| CliError::User("gen build needs --out DIR".into()))?;
                let prg = LocalPrg::tsa(m, d, seed)?;
                let target = ops::target_model(&target_dims, lambda_leak, seed)?;
                let spec = assemble(&prg, &target, seed_kind.into(), epsilon)?;
                std::fs::create_dir_all(dir)?;
                spec.save(dir)?;
                eprintln!("{}", serde_json::to_string(&spec.accounting)?);
                Ok(())
            }
            GenCmd::Sample { spec, n } => {
                let spec = GeneratorSpec::load(&spec)?;
                emit(out, &ops::encode_samples(&sample_generator(&spec, n, seed)?, cli.format)?)
            }
        },
        Command::Certify { kind } => {
            let (section, prg) = match kind {
                CertifyCmd::Leaky { dims, lambda_leak, r0 } => {
                    (CertifySection::Leaky { dims, lambda_leak, seed: Some(seed), r0 }, None)
                }
                CertifyCmd::Cube { d, log2_n } => (CertifySection::Cube { d, log2_n }, None),
                CertifyCmd::Prg { m, d } => (CertifySection::PrgSupport, Some(LocalPrg::tsa(m, d, seed)?)),
            };
            emit_json(out, &ops::certify(&section, prg.as_ref(), seed)?)
        }
        Command::Attack { method, depth, prg, m, d, p_plus, steps, net, samples } => {
            let gen: Box<dyn Sampler> = match (p_plus, prg) {
                (Some(p), _) => Box::new(BitsSampler { d, p_plus: p }),
                (None, Some(path)) => Box::new(PrgSampler { prg: read_json(&path)? }),
                (None, None) => Box::new(PrgSampler { prg: LocalPrg::tsa(m, d, seed)? }),
            };
            let target = BitsSampler::uniform(gen.dim());
            let report = match method {
                AttackMethod::Scan => {
                    let f =
                        net.map(|p| -> CliResult<ReluNet> { Ok(ReluNet::from_json(&std::fs::read_to_string(p)?)?) });
                    ops::attack_scan(f.transpose()?.as_ref(), gen.as_ref(), &target, samples, seed)?
                }
                AttackMethod::Mlp => {
                    let over = TrainOverrides { steps, ..Default::default() };
                    ops::attack_mlp(&over.apply(depth, seed), gen.as_ref(), &target)?
                }
            };
            emit_json(out, &report)
        }
        Command::Hardness { cmd: HardnessCmd::Check { m, d } } => {
            let r = ops::hardness_check(m, d, seed)?;
            emit_json(out, &r)?;
            if r.holds && r.witness_failures == 0 {
                Ok(())
            } else {
                Err(CliError::Internal("hardness bound or witness check failed".into()))
            }
        }
        Command::Run { config, bundled, dry_run } => {
            let (text, origin) = match (config, bundled.as_deref()) {
                (Some(p), None) => (std::fs::read_to_string(&p)?, p.display().to_string()),
                (None, Some("figure1")) => (FIGURE1.to_string(), "bundled:figure1".into()),
                (None, Some(other)) => return Err(CliError::User(format!("no bundled config named {other:?}"))),
                _ => return Err(CliError::User("give exactly one of CONFIG or --bundled".into())),
            };
            let cfg = ExperimentConfig::parse(&text).map_err(|e| CliError::User(format!("{origin}: {e}")))?;
            let dir = out
                .map(Path::to_path_buf)
                .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
                .ok_or_else(|| CliError::User("no output directory (--out or output_dir)".into()))?;
            if dry_run {
                println!("config {origin} is valid; output directory {}", dir.display());
                for (stage, files) in plan(&cfg) {
                    println!("{stage}: {}", files.join(", "));
                }
                return Ok(());
            }
            run_experiment(&cfg, &dir).map(|_| ())
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
