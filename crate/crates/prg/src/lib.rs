//! Local pseudorandom generators: every output bit is a fixed predicate of
//! a few seed bits chosen by a random hypergraph.
//!
//! Bits are ±1 throughout. [`bits01`] and [`from_bits01`] convert to and from
//! the `{0, 1}` encoding with `0 ↔ +1`, `1 ↔ -1`.

use std::collections::BTreeMap;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use forge_compiler::combine::{embed_inputs, stack};
use forge_compiler::predicate::{and_pm, index_point, point_index};
use forge_compiler::{compile_predicate, Predicate};
use forge_core::bounds::unit_box;
use forge_core::error::{ensure_dim, invalid, ForgeError, Result};
use forge_core::rng::{stream_rng, RngSeed};
use forge_core::ReluNet;

/// Largest seed length for which the image is enumerated.
pub const MAX_ENUM_SEED: usize = 20;

/// `d` index sets of size `k` over `[m]`, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct Hypergraph {
    m: usize,
    k: usize,
    sets: Vec<Vec<usize>>,
    rng_seed: Option<RngSeed>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    m: usize,
    d: usize,
    k: usize,
    sets: Vec<Vec<usize>>,
    #[serde(default)]
    rng_seed: Option<RngSeed>,
}

impl TryFrom<GraphFile> for Hypergraph {
    type Error = ForgeError;
    fn try_from(f: GraphFile) -> Result<Self> {
        ensure_dim(f.d, f.sets.len(), "hypergraph set count")?;
        let mut g = Hypergraph::from_sets(f.m, f.k, f.sets)?;
        g.rng_seed = f.rng_seed;
        Ok(g)
    }
}

impl From<Hypergraph> for GraphFile {
    fn from(g: Hypergraph) -> Self {
        GraphFile { m: g.m, d: g.sets.len(), k: g.k, sets: g.sets, rng_seed: g.rng_seed }
    }
}

impl Hypergraph {
    /// Validates explicit sets. Sets are kept in the given order; indices in
    /// each set must be distinct.
    pub fn from_sets(m: usize, k: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if m == 0 || sets.is_empty() {
            return invalid("hypergraph needs m > 0 and at least one set");
        }
        for (l, s) in sets.iter().enumerate() {
            ensure_dim(k, s.len(), "hyperedge size")?;
            let mut t = s.clone();
            t.sort_unstable();
            t.dedup();
            if t.len() != k || t.iter().any(|&i| i >= m) {
                return invalid(format!("set {l} must hold {k} distinct indices below {m}"));
            }
        }
        Ok(Hypergraph { m, k, sets, rng_seed: None })
    }

    /// `d` independent uniform `k`-subsets of `[m]`, each sorted.
    pub fn sample(m: usize, d: usize, k: usize, seed: RngSeed) -> Result<Self> {
        if k > m {
            return invalid(format!("set size {k} exceeds seed length {m}"));
        }
        if k == 0 || d == 0 {
            return invalid("need k >= 1 and d >= 1");
        }
        let mut rng = stream_rng(seed, 0);
        let sets = (0..d)
            .map(|_| {
                let mut s = index::sample(&mut rng, m, k).into_vec();
                s.sort_unstable();
                s
            })
            .collect();
        let mut g = Hypergraph::from_sets(m, k, sets)?;
        g.rng_seed = Some(seed);
        Ok(g)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.sets.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn rng_seed(&self) -> Option<RngSeed> {
        self.rng_seed
    }

    /// Sets that occur more than once, with their multiplicity.
    pub fn repeated_sets(&self) -> BTreeMap<Vec<usize>, usize> {
        let mut c: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for s in &self.sets {
            let mut t = s.clone();
            t.sort_unstable();
            *c.entry(t).or_default() += 1;
        }
        c.retain(|_, v| *v > 1);
        c
    }
}

/// `x1 x2 x3 (x4 AND x5)` on ±1 inputs.
pub fn tsa_predicate() -> Predicate {
    Predicate::from_fn(5, |x| x[0] * x[1] * x[2] * and_pm(x[3], x[4])).expect("arity 5 is valid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrgFile", into = "PrgFile")]
pub struct LocalPrg {
    graph: Hypergraph,
    predicate: Predicate,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrgFile {
    graph: Hypergraph,
    predicate: Predicate,
}

impl TryFrom<PrgFile> for LocalPrg {
    type Error = ForgeError;
    fn try_from(f: PrgFile) -> Result<Self> {
        LocalPrg::new(f.graph, f.predicate)
    }
}

impl From<LocalPrg> for PrgFile {
    fn from(p: LocalPrg) -> Self {
        PrgFile { graph: p.graph, predicate: p.predicate }
    }
}

impl LocalPrg {
    pub fn new(graph: Hypergraph, predicate: Predicate) -> Result<Self> {
        ensure_dim(graph.k(), predicate.k(), "predicate arity")?;
        Ok(LocalPrg { graph, predicate })
    }

    /// Random hypergraph with the TSA predicate.
    pub fn tsa(m: usize, d: usize, seed: RngSeed) -> Result<Self> {
        LocalPrg::new(Hypergraph::sample(m, d, 5, seed)?, tsa_predicate())
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn m(&self) -> usize {
        self.graph.m
    }

    pub fn d(&self) -> usize {
        self.graph.d()
    }

    /// Output bit `l` is the predicate applied to the seed restricted to set `l`.
    pub fn eval(&self, seed: &[i8]) -> Result<Vec<i8>> {
        ensure_dim(self.m(), seed.len(), "seed length")?;
        if let Some(i) = seed.iter().position(|&v| v != 1 && v != -1) {
            return invalid(format!("seed entry {i} is {}, expected ±1", seed[i]));
        }
        Ok(self.eval_unchecked(seed))
    }

    fn eval_unchecked(&self, seed: &[i8]) -> Vec<i8> {
        let mut buf = vec![0i8; self.graph.k];
        self.graph
            .sets
            .iter()
            .map(|s| {
                for (b, &i) in buf.iter_mut().zip(s) {
                    *b = seed[i];
                }
                self.predicate.eval_index(point_index(&buf))
            })
            .collect()
    }

    /// Distinct outputs over all `2^m` seeds, sorted.
    pub fn image(&self) -> Result<Vec<Vec<i8>>> {
        let m = self.m();
        if m > MAX_ENUM_SEED {
            return Err(ForgeError::TooLarge(format!("2^{m} seeds")));
        }
        let mut out: Vec<Vec<i8>> =
            (0..1usize << m).into_par_iter().map(|i| self.eval_unchecked(&index_point(i, m))).collect();
        out.par_sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// One network per output coordinate, each over the full seed `R^m`.
    ///
    /// The predicate is compiled once and its first layer re-indexed onto the
    /// coordinate's set. Every network has depth `k` and the compiled
    /// predicate's size.
    pub fn realize_networks(&self) -> Result<Vec<ReluNet>> {
        let base = compile_predicate(&self.predicate)?;
        self.graph.sets.iter().map(|s| embed_inputs(&base, self.m(), s)?.with_domain(unit_box(self.m()))).collect()
    }

    /// All coordinate networks side by side: a single `R^m -> R^d` network.
    pub fn realize_stacked(&self) -> Result<ReluNet> {
        let nets = self.realize_networks()?;
        let refs: Vec<&ReluNet> = nets.iter().collect();
        stack(&refs)
    }
}

/// `{0, 1}` encoding of ±1 bits (`+1 -> 0`, `-1 -> 1`).
pub fn bits01(x: &[i8]) -> Vec<u8> {
    x.iter().map(|&v| u8::from(v < 0)).collect()
}

pub fn from_bits01(b: &[u8]) -> Result<Vec<i8>> {
    b.iter()
        .map(|&v| match v {
            0 => Ok(1),
            1 => Ok(-1),
            _ => invalid(format!("bit value {v} is not 0 or 1")),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_single_set() {
        let g = Hypergraph::sample(5, 1, 5, 3).unwrap();
        assert_eq!(g.sets(), &[vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(Hypergraph::sample(50, 200, 5, 9).unwrap(), Hypergraph::sample(50, 200, 5, 9).unwrap());
        assert_ne!(Hypergraph::sample(50, 200, 5, 9).unwrap(), Hypergraph::sample(50, 200, 5, 10).unwrap());
        assert!(Hypergraph::sample(4, 2, 5, 0).is_err());
    }

    #[test]
    fn tsa_values() {
        let p = tsa_predicate();
        assert_eq!(p.eval(&[1, 1, 1, 1, 1]), 1);
        assert_eq!(p.eval(&[-1, 1, 1, 1, 1]), -1);
        assert_eq!(p.eval(&[-1, -1, -1, -1, -1]), 1);
        assert_eq!(p.eval(&[1, 1, 1, -1, 1]), -1);
    }

    #[test]
    fn constant_seeds() {
        let g = LocalPrg::tsa(12, 30, 1).unwrap();
        assert_eq!(g.eval(&[1; 12]).unwrap(), vec![1; 30]);
        assert_eq!(g.eval(&[-1; 12]).unwrap(), vec![1; 30]);
        assert!(g.eval(&[0; 12]).is_err());
    }

    #[test]
    fn projection_prg() {
        let g = Hypergraph::from_sets(3, 1, vec![vec![2]]).unwrap();
        let prg = LocalPrg::new(g, Predicate::parity(1, &[0]).unwrap()).unwrap();
        let nets = prg.realize_networks().unwrap();
        assert_eq!(nets[0].depth(), 1);
        assert_eq!(nets[0].eval_float(&[0.1, 0.2, -0.7]).unwrap(), vec![-0.7]);
    }

    #[test]
    fn codec_round_trip() {
        let x = vec![1, -1, -1, 1];
        assert_eq!(bits01(&x), vec![0, 1, 1, 0]);
        assert_eq!(from_bits01(&bits01(&x)).unwrap(), x);
        assert!(from_bits01(&[2]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = LocalPrg::tsa(10, 4, 5).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<LocalPrg>(&s).unwrap(), p);
    }
}
