//! Small random instances for regression runs.

use rand::Rng;

use forge_compiler::{random_layered, Gate, LtfCircuit, Predicate};
use forge_core::error::Result;
use forge_core::rng::{stream_rng, RngSeed};
use forge_core::FixedScalar;
use forge_prg::{Hypergraph, LocalPrg};

use crate::bound::Classifier;

/// One-gate circuit that is `+1` everywhere.
pub fn constant_circuit(d: usize) -> Result<LtfCircuit> {
    LtfCircuit::new(d, vec![Gate::new(vec![0], vec![FixedScalar::ZERO], FixedScalar::ZERO)], 0)
}

/// A PRG that copies seed bits, each at least once, possibly all negated.
/// It is injective by construction.
pub fn copying_prg(m: usize, d: usize, seed: RngSeed) -> Result<LocalPrg> {
    let mut rng = stream_rng(seed, 1);
    let sets: Vec<Vec<usize>> = (0..d).map(|l| vec![if l < m { l } else { rng.random_range(0..m) }]).collect();
    let flip = Predicate::new(1, vec![-1, 1])?;
    let keep = Predicate::parity(1, &[0])?;
    let p = if rng.random_bool(0.5) { keep } else { flip };
    LocalPrg::new(Hypergraph::from_sets(m, 1, sets)?, p)
}

/// An enumerable instance: a random local PRG with `m <= 8`, `d <= 16`, and
/// a random layered threshold circuit on `d` inputs. With `constant` set, the
/// PRG is injective and the circuit is constant `+1`.
pub fn random_instance(seed: RngSeed, constant: bool) -> Result<(LocalPrg, Classifier)> {
    let mut rng = stream_rng(seed, 2);
    let m = rng.random_range(4..=8);
    let d = rng.random_range(m + 1..=16);
    if constant {
        return Ok((copying_prg(m, d, seed)?, Classifier::Circuit(constant_circuit(d)?)));
    }
    let k = rng.random_range(2..=m.min(5));
    let prg = LocalPrg::new(Hypergraph::sample(m, d, k, seed)?, Predicate::random(k, &mut rng)?)?;
    let mut widths: Vec<usize> = (0..rng.random_range(0..3)).map(|_| rng.random_range(1..=4)).collect();
    widths.push(1);
    let f = random_layered(d, &widths, 4, rng.random_range(0..3), &mut rng)?;
    Ok((prg, Classifier::Circuit(f)))
}
