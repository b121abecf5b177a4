//! Boolean predicates on the ±1 hypercube.
//!
//! Inputs are indexed by integers: bit `i` of the index is set exactly when
//! coordinate `i` equals `-1`. So index 0 is the all-`+1` point.

use forge_core::error::{invalid, ForgeError, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Arity cap for truth-table predicates.
pub const MAX_ARITY: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PredicateFile", into = "PredicateFile")]
pub struct Predicate {
    k: usize,
    table: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredicateFile {
    k: usize,
    table: Vec<i8>,
}

impl TryFrom<PredicateFile> for Predicate {
    type Error = forge_core::ForgeError;
    fn try_from(f: PredicateFile) -> Result<Self> {
        Predicate::new(f.k, f.table)
    }
}

impl From<Predicate> for PredicateFile {
    fn from(p: Predicate) -> Self {
        PredicateFile { k: p.k, table: p.table }
    }
}

/// Index of a ±1 point.
pub fn point_index(x: &[i8]) -> usize {
    x.iter().enumerate().fold(0, |acc, (i, &v)| if v < 0 { acc | (1 << i) } else { acc })
}

/// The ±1 point with the given index.
pub fn index_point(idx: usize, k: usize) -> Vec<i8> {
    (0..k).map(|i| if idx >> i & 1 == 1 { -1 } else { 1 }).collect()
}

/// `AND` on ±1 values: `+1` exactly when both inputs are `+1`.
pub fn and_pm(a: i8, b: i8) -> i8 {
    if a == 1 && b == 1 {
        1
    } else {
        -1
    }
}

impl Predicate {
    pub fn new(k: usize, table: Vec<i8>) -> Result<Self> {
        if k == 0 || k > MAX_ARITY {
            return invalid(format!("arity must be in 1..={MAX_ARITY}, got {k}"));
        }
        if table.len() != 1 << k {
            return invalid(format!("a {k}-ary table needs {} entries, got {}", 1 << k, table.len()));
        }
        if table.iter().any(|&v| v != 1 && v != -1) {
            return invalid("table entries must be +1 or -1");
        }
        Ok(Predicate { k, table })
    }

    pub fn from_fn(k: usize, f: impl Fn(&[i8]) -> i8) -> Result<Self> {
        if k == 0 || k > MAX_ARITY {
            return invalid(format!("arity must be in 1..={MAX_ARITY}, got {k}"));
        }
        let table = (0..1usize << k).map(|i| f(&index_point(i, k))).collect();
        Predicate::new(k, table)
    }

    pub fn constant(k: usize, v: i8) -> Result<Self> {
        Predicate::from_fn(k, |_| v)
    }

    /// Product of the coordinates in `set` (0-based).
    pub fn parity(k: usize, set: &[usize]) -> Result<Self> {
        if set.iter().any(|&i| i >= k) {
            return invalid("parity index out of range");
        }
        Predicate::from_fn(k, |x| set.iter().map(|&i| x[i]).product())
    }

    pub fn random<R: Rng>(k: usize, rng: &mut R) -> Result<Self> {
        if k > MAX_ARITY {
            return Err(ForgeError::TooLarge(format!("arity {k}")));
        }
        let table = (0..1usize << k).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        Predicate::new(k, table)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    pub fn eval(&self, x: &[i8]) -> i8 {
        debug_assert_eq!(x.len(), self.k);
        self.table[point_index(x)]
    }

    pub fn eval_index(&self, idx: usize) -> i8 {
        self.table[idx]
    }
}
