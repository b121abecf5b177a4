//! Batch samplers feeding discriminators.
//!
//! `sample(n, seed)` fills rows in chunks of [`CHUNK`], chunk `c` drawing from
//! stream `c` of `seed`, so results never depend on how work is split.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use forge_core::error::{ensure_dim, invalid, Result};
use forge_core::rng::{stream_rng, RngSeed};
use forge_core::SampleSet;
use forge_pipeline::{sample_generator, GeneratorSpec};
use forge_prg::LocalPrg;

pub const CHUNK: usize = 1024;

pub trait Sampler: Sync {
    fn dim(&self) -> usize;
    /// `n` rows, row-major.
    fn sample(&self, n: usize, seed: RngSeed) -> Vec<f32>;
    fn name(&self) -> String;
}

fn chunked(n: usize, d: usize, seed: RngSeed, mut fill: impl FnMut(&mut ChaCha8Rng, &mut [f32])) -> Vec<f32> {
    let mut out = vec![0f32; n * d];
    if d == 0 {
        return out;
    }
    for (c, rows) in out.chunks_mut(CHUNK * d).enumerate() {
        let mut rng = stream_rng(seed, c as u64);
        for row in rows.chunks_mut(d) {
            fill(&mut rng, row);
        }
    }
    out
}

/// Independent ±1 coordinates with `Pr[+1] = p_plus`.
#[derive(Clone, Debug)]
pub struct BitsSampler {
    pub d: usize,
    pub p_plus: f64,
}

impl BitsSampler {
    pub fn uniform(d: usize) -> Self {
        BitsSampler { d, p_plus: 0.5 }
    }
}

impl Sampler for BitsSampler {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, n: usize, seed: RngSeed) -> Vec<f32> {
        chunked(n, self.d, seed, |rng, row| {
            for v in row {
                *v = if rng.random_bool(self.p_plus) { 1.0 } else { -1.0 };
            }
        })
    }

    fn name(&self) -> String {
        format!("bits(d={}, p={})", self.d, self.p_plus)
    }
}

/// A local PRG on uniform ±1 seeds, outputs in the ±1 codec.
#[derive(Clone, Debug)]
pub struct PrgSampler {
    pub prg: LocalPrg,
}

impl Sampler for PrgSampler {
    fn dim(&self) -> usize {
        self.prg.d()
    }

    fn sample(&self, n: usize, seed: RngSeed) -> Vec<f32> {
        let m = self.prg.m();
        let mut s = vec![0i8; m];
        chunked(n, self.dim(), seed, |rng, row| {
            for b in s.iter_mut() {
                *b = if rng.random::<bool>() { 1 } else { -1 };
            }
            let y = self.prg.eval(&s).expect("seed is ±1 of the right length");
            for (v, b) in row.iter_mut().zip(y) {
                *v = b as f32;
            }
        })
    }

    fn name(&self) -> String {
        format!("prg(m={}, d={})", self.prg.m(), self.prg.d())
    }
}

/// An assembled generator network.
#[derive(Clone, Debug)]
pub struct GeneratorSampler {
    pub spec: GeneratorSpec,
}

impl Sampler for GeneratorSampler {
    fn dim(&self) -> usize {
        self.spec.d
    }

    fn sample(&self, n: usize, seed: RngSeed) -> Vec<f32> {
        if n == 0 {
            return Vec::new();
        }
        sample_generator(&self.spec, n, seed)
            .expect("generator spec was validated at construction")
            .data()
            .iter()
            .map(|&v| v as f32)
            .collect()
    }

    fn name(&self) -> String {
        format!("generator(m={}, d={})", self.spec.m, self.spec.d)
    }
}

/// Resamples rows of a stored sample set with replacement.
#[derive(Clone, Debug)]
pub struct ResampleSampler {
    pub set: SampleSet,
}

impl ResampleSampler {
    pub fn new(set: SampleSet) -> Result<Self> {
        if set.n() == 0 {
            return invalid("cannot resample an empty set");
        }
        Ok(ResampleSampler { set })
    }
}

impl Sampler for ResampleSampler {
    fn dim(&self) -> usize {
        self.set.d()
    }

    fn sample(&self, n: usize, seed: RngSeed) -> Vec<f32> {
        chunked(n, self.dim(), seed, |rng, row| {
            let r = self.set.row(rng.random_range(0..self.set.n()));
            for (v, x) in row.iter_mut().zip(r) {
                *v = *x as f32;
            }
        })
    }

    fn name(&self) -> String {
        format!("resample({})", self.set.provenance.source)
    }
}

pub fn check_dims(a: &dyn Sampler, b: &dyn Sampler) -> Result<usize> {
    ensure_dim(a.dim(), b.dim(), "sampler dimension")?;
    Ok(a.dim())
}
