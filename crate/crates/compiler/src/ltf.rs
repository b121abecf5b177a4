//! Linear threshold circuits and their compilation to ReLU networks.
//!
//! Wires are indexed so that `0..n` are the circuit inputs and `n + g` is the
//! output of gate `g`. A gate computes `sgn(<w, x> - b)` with `sgn(0) = +1`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use rand::Rng;
use serde::{Deserialize, Serialize};

use forge_core::bounds::{unit_box, Interval};
use forge_core::error::{invalid, ForgeError, Result};
use forge_core::linalg::opnorm_upper;
use forge_core::{Dyadic, FixedScalar, Layer, Matrix, ReluNet};

use crate::predicate::index_point;

/// Largest fan-in for which gate margins are found by enumeration.
pub const MARGIN_ENUM_FANIN: usize = 20;
/// Largest input arity for truth-table enumeration.
pub const TABLE_MAX_INPUTS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub inputs: Vec<usize>,
    pub weights: Vec<FixedScalar>,
    pub bias: FixedScalar,
}

impl Gate {
    pub fn new(inputs: Vec<usize>, weights: Vec<FixedScalar>, bias: FixedScalar) -> Self {
        Gate { inputs, weights, bias }
    }

    /// `sgn(1 * v - 0)`: copies a ±1 wire.
    pub fn pass_through(src: usize) -> Self {
        Gate::new(vec![src], vec![FixedScalar::ONE], FixedScalar::ZERO)
    }

    /// Weights with repeated sources summed, keyed by source wire.
    fn merged(&self) -> Result<BTreeMap<usize, FixedScalar>> {
        let mut m: BTreeMap<usize, FixedScalar> = BTreeMap::new();
        for (&s, w) in self.inputs.iter().zip(&self.weights) {
            let e = m.entry(s).or_insert(FixedScalar::ZERO);
            *e = e.checked_add(w)?;
        }
        Ok(m)
    }

    fn frac_bits(&self) -> u32 {
        self.weights.iter().chain(std::iter::once(&self.bias)).map(|v| v.frac_bits()).max().unwrap_or(0)
    }
}

/// Integer form of a gate at a common exponent, when it fits in `i128`.
#[derive(Clone, Debug)]
struct Kernel {
    w: Vec<i128>,
    b: i128,
}

impl Kernel {
    fn build(g: &Gate) -> Option<Kernel> {
        let f = g.frac_bits();
        let cap = (1i128 << 96) / (g.weights.len() as i128 + 1);
        let fit = |v: &FixedScalar| v.scaled_int(f).filter(|x| x.abs() <= cap);
        let w = g.weights.iter().map(fit).collect::<Option<Vec<_>>>()?;
        let b = fit(&g.bias)?;
        Some(Kernel { w, b })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    n: usize,
    gates: Vec<Gate>,
    #[serde(default)]
    output: Option<usize>,
}

/// A single-output threshold circuit over `n` ±1 inputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CircuitFile", into = "CircuitFile")]
pub struct LtfCircuit {
    n: usize,
    gates: Vec<Gate>,
    output: usize,
    #[serde(skip)]
    order: Vec<usize>,
    #[serde(skip)]
    kernels: Vec<Option<Kernel>>,
}

impl TryFrom<CircuitFile> for LtfCircuit {
    type Error = ForgeError;
    fn try_from(f: CircuitFile) -> Result<Self> {
        let out = match f.output {
            Some(o) => o,
            None if !f.gates.is_empty() => f.gates.len() - 1,
            None => return invalid("circuit has no gates"),
        };
        LtfCircuit::new(f.n, f.gates, out)
    }
}

impl From<LtfCircuit> for CircuitFile {
    fn from(c: LtfCircuit) -> Self {
        CircuitFile { n: c.n, gates: c.gates, output: Some(c.output) }
    }
}

impl PartialEq for LtfCircuit {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.gates == o.gates && self.output == o.output
    }
}

impl LtfCircuit {
    /// Validates wiring, acyclicity and that every gate feeds the output.
    pub fn new(n: usize, gates: Vec<Gate>, output: usize) -> Result<Self> {
        if gates.is_empty() {
            return invalid("circuit has no gates");
        }
        if output >= gates.len() {
            return invalid(format!("output gate {output} out of range"));
        }
        let wires = n + gates.len();
        for (g, gate) in gates.iter().enumerate() {
            if gate.inputs.len() != gate.weights.len() {
                return invalid(format!("gate {g}: {} inputs but {} weights", gate.inputs.len(), gate.weights.len()));
            }
            if let Some(&bad) = gate.inputs.iter().find(|&&s| s >= wires) {
                return invalid(format!("gate {g}: wire {bad} out of range"));
            }
        }
        let order = topo_order(n, &gates)?;
        // Every gate must reach the output.
        let mut live = vec![false; gates.len()];
        live[output] = true;
        for &g in order.iter().rev() {
            if live[g] {
                for &s in &gates[g].inputs {
                    if s >= n {
                        live[s - n] = true;
                    }
                }
            }
        }
        if let Some(dead) = live.iter().position(|&l| !l) {
            return invalid(format!("gate {dead} does not feed the output"));
        }
        let kernels = gates.iter().map(Kernel::build).collect();
        Ok(LtfCircuit { n, gates, output, order, kernels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn wires(&self) -> usize {
        self.gates.iter().map(|g| g.inputs.len()).sum()
    }

    /// Longest input-to-gate path length (in gates) for every gate.
    pub fn levels(&self) -> Vec<usize> {
        let mut lv = vec![0usize; self.gates.len()];
        for &g in &self.order {
            lv[g] = 1 + self.gates[g]
                .inputs
                .iter()
                .map(|&s| if s < self.n { 0 } else { lv[s - self.n] })
                .max()
                .unwrap_or(0);
        }
        lv
    }

    pub fn depth(&self) -> usize {
        self.levels()[self.output]
    }

    /// True when every wire joins consecutive levels.
    pub fn is_layered(&self) -> bool {
        let lv = self.levels();
        self.gates
            .iter()
            .enumerate()
            .all(|(g, gate)| gate.inputs.iter().all(|&s| (if s < self.n { 0 } else { lv[s - self.n] }) + 1 == lv[g]))
    }

    fn gate_value(&self, g: usize, vals: &[i8]) -> i8 {
        let gate = &self.gates[g];
        let nonneg = match &self.kernels[g] {
            Some(k) => {
                let s: i128 = gate.inputs.iter().zip(&k.w).map(|(&i, &w)| w * vals[i] as i128).sum();
                s >= k.b
            }
            None => {
                let mut s = Dyadic::from(gate.bias).neg();
                for (&i, w) in gate.inputs.iter().zip(&gate.weights) {
                    let t = Dyadic::from(*w);
                    s = s.add(&if vals[i] > 0 { t } else { t.neg() });
                }
                !s.is_negative()
            }
        };
        if nonneg {
            1
        } else {
            -1
        }
    }

    /// Values of every wire on a ±1 input.
    pub fn eval_all(&self, x: &[i8]) -> Result<Vec<i8>> {
        if x.len() != self.n {
            return Err(ForgeError::DimMismatch { expected: self.n, got: x.len(), context: "circuit input" });
        }
        if x.iter().any(|&v| v != 1 && v != -1) {
            return invalid("circuit inputs must be ±1");
        }
        let mut vals = vec![0i8; self.n + self.gates.len()];
        vals[..self.n].copy_from_slice(x);
        for &g in &self.order {
            vals[self.n + g] = self.gate_value(g, &vals);
        }
        Ok(vals)
    }

    pub fn eval(&self, x: &[i8]) -> Result<i8> {
        Ok(self.eval_all(x)?[self.n + self.output])
    }

    /// Outputs on all `2^n` inputs, indexed as in [`index_point`].
    pub fn truth_table(&self) -> Result<Vec<i8>> {
        if self.n > TABLE_MAX_INPUTS {
            return Err(ForgeError::TooLarge(format!("2^{} inputs", self.n)));
        }
        (0..1usize << self.n).map(|i| self.eval(&index_point(i, self.n))).collect()
    }

    /// Smallest `|<w,x> - b|` over gates and ±1 inputs where the gate is
    /// negative, or `None` if no gate can ever be negative. Gates with fan-in
    /// above [`MARGIN_ENUM_FANIN`] use the granularity bound `2^-f` instead.
    pub fn margin(&self) -> Result<Option<Dyadic>> {
        let mut best: Option<Dyadic> = None;
        for gate in &self.gates {
            if let Some(m) = gate_margin(gate)? {
                if best.as_ref().is_none_or(|b| m < *b) {
                    best = Some(m);
                }
            }
        }
        Ok(best)
    }

    /// Largest power of two strictly below the margin (1 if the margin is unbounded).
    pub fn auto_xi_prime(&self) -> Result<FixedScalar> {
        let Some(m) = self.margin()? else {
            return Ok(FixedScalar::ONE);
        };
        let mut e: i32 = m.to_f64().log2().floor() as i32 + 1;
        loop {
            let cand = pow2(e)?;
            if Dyadic::from(cand) < m {
                return Ok(cand);
            }
            e -= 1;
        }
    }
}

fn pow2(e: i32) -> Result<FixedScalar> {
    FixedScalar::ONE.scale_pow2(e)
}

fn topo_order(n: usize, gates: &[Gate]) -> Result<Vec<usize>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; gates.len()];
    let mut order = Vec::with_capacity(gates.len());
    for root in 0..gates.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (g, ref mut next)) = stack.last_mut() {
            if let Some(&s) = gates[g].inputs.get(*next) {
                *next += 1;
                if s < n {
                    continue;
                }
                let h = s - n;
                match state[h] {
                    0 => {
                        state[h] = 1;
                        stack.push((h, 0));
                    }
                    1 => return Err(ForgeError::Cycle(h)),
                    _ => {}
                }
            } else {
                state[g] = 2;
                order.push(g);
                stack.pop();
            }
        }
    }
    Ok(order)
}

fn gate_margin(gate: &Gate) -> Result<Option<Dyadic>> {
    let merged = gate.merged()?;
    let f = gate.frac_bits();
    let kern =
        Kernel::build(&Gate::new(merged.keys().copied().collect(), merged.values().copied().collect(), gate.bias));
    let k = match kern {
        Some(k) if merged.len() <= MARGIN_ENUM_FANIN => k,
        _ => {
            // <w,x> - b is a multiple of 2^-f.
            return Ok(Some(Dyadic::new(BigInt::from(1), f)));
        }
    };
    // Gray-code walk over all sign patterns, starting from all +1.
    let mut s: i128 = k.w.iter().sum::<i128>() - k.b;
    let mut signs = vec![1i128; k.w.len()];
    let mut best: Option<i128> = None;
    let mut note = |s: i128| {
        if s < 0 && best.is_none_or(|b| -s < b) {
            best = Some(-s);
        }
    };
    note(s);
    for step in 1u64..(1u64 << k.w.len()) {
        let t = step.trailing_zeros() as usize;
        s -= 2 * signs[t] * k.w[t];
        signs[t] = -signs[t];
        note(s);
    }
    Ok(best.map(|b| Dyadic::new(BigInt::from(b), f)))
}

/// Equivalent circuit in which every wire joins consecutive levels.
///
/// A wire that skips levels is routed through a chain of pass-through gates;
/// chains are shared between all readers of the same source. Gates are
/// emitted level by level.
pub fn layer_circuit(c: &LtfCircuit) -> Result<LtfCircuit> {
    let n = c.n;
    let lv = c.levels();
    let wire_level = |s: usize| if s < n { 0 } else { lv[s - n] };
    let mut gates: Vec<Gate> = Vec::new();
    let mut level_of: Vec<usize> = Vec::new();
    let mut new_id: Vec<usize> = vec![usize::MAX; c.gates.len()];
    let mut copies: HashMap<(usize, usize), usize> = HashMap::new();

    // New wire index carrying original wire `s` at level `at`.
    fn route(
        s: usize,
        at: usize,
        n: usize,
        base: usize,
        new_id: &[usize],
        copies: &mut HashMap<(usize, usize), usize>,
        gates: &mut Vec<Gate>,
        level_of: &mut Vec<usize>,
    ) -> usize {
        if at == base {
            return if s < n { s } else { n + new_id[s - n] };
        }
        if let Some(&g) = copies.get(&(s, at)) {
            return n + g;
        }
        let below = route(s, at - 1, n, base, new_id, copies, gates, level_of);
        gates.push(Gate::pass_through(below));
        level_of.push(at);
        let g = gates.len() - 1;
        copies.insert((s, at), g);
        n + g
    }

    for &g in &c.order {
        let gate = &c.gates[g];
        let inputs = gate
            .inputs
            .iter()
            .map(|&s| route(s, lv[g] - 1, n, wire_level(s), &new_id, &mut copies, &mut gates, &mut level_of))
            .collect();
        gates.push(Gate::new(inputs, gate.weights.clone(), gate.bias));
        level_of.push(lv[g]);
        new_id[g] = gates.len() - 1;
    }

    // Reorder by level, keeping creation order within a level.
    let mut perm: Vec<usize> = (0..gates.len()).collect();
    perm.sort_by_key(|&g| level_of[g]);
    let mut pos = vec![0usize; gates.len()];
    for (p, &g) in perm.iter().enumerate() {
        pos[g] = p;
    }
    let remap = |s: usize| if s < n { s } else { n + pos[s - n] };
    let sorted: Vec<Gate> = perm
        .iter()
        .map(|&g| {
            let gt = &gates[g];
            Gate::new(gt.inputs.iter().map(|&s| remap(s)).collect(), gt.weights.clone(), gt.bias)
        })
        .collect();
    LtfCircuit::new(n, sorted, pos[new_id[c.output]])
}

/// Compiles a layered circuit to a ReLU network that agrees with it on
/// `{±1}^n`.
///
/// Each gate becomes two units `u = relu(N s + 2)` and `v = relu(N s)` with
/// `s = <w, o> - b` and `N = 2/xi_prime`; the gate value is `u - v - 1`, which
/// is `+1` for `s >= 0` and `-1` for `s <= -xi_prime`. The `-1` and the
/// pair difference are folded into the next layer. Depth is the circuit depth
/// plus one, size is twice the gate count. `xi_prime` must be a power of two
/// strictly below the circuit margin.
pub fn ltf_to_relu(c: &LtfCircuit, xi_prime: FixedScalar) -> Result<ReluNet> {
    if !c.is_layered() {
        return invalid("circuit is not layered; run layer_circuit first");
    }
    // 2/xi_prime = 2^scale
    let scale = match xi_prime.ratio() {
        (1, e) => e as i32 + 1,
        (m, 0) if m > 0 && (m as u128).is_power_of_two() => 1 - m.trailing_zeros() as i32,
        _ => return invalid(format!("clamp width {xi_prime} must be a power of two")),
    };
    if let Some(m) = c.margin()? {
        if Dyadic::from(xi_prime) >= m {
            return Err(ForgeError::MarginTooSmall { xi_prime: xi_prime.to_f64(), margin: m.to_f64() });
        }
    }
    let n = c.n;
    let lv = c.levels();
    let depth = c.depth();
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
    for (g, &l) in lv.iter().enumerate() {
        by_level[l].push(g);
    }
    let mut pos = vec![0usize; c.gates.len()];
    for gs in &by_level {
        for (p, &g) in gs.iter().enumerate() {
            pos[g] = p;
        }
    }
    let two = FixedScalar::from_int(2)?;
    let mut layers = Vec::with_capacity(depth + 1);
    for l in 1..=depth {
        let gs = &by_level[l];
        let cols = if l == 1 { n } else { 2 * by_level[l - 1].len() };
        let mut t = Vec::new();
        let mut bias = Vec::with_capacity(2 * gs.len());
        for (j, &g) in gs.iter().enumerate() {
            let merged = c.gates[g].merged()?;
            // offset = -b, minus sum of weights when reading (u - v - 1)
            let mut offset = c.gates[g].bias.neg();
            for (&s, w) in &merged {
                if w.is_zero() {
                    continue;
                }
                let nw = w.scale_pow2(scale)?;
                if l == 1 {
                    t.push((2 * j, s, nw));
                    t.push((2 * j + 1, s, nw));
                } else {
                    let p = pos[s - n];
                    t.push((2 * j, 2 * p, nw));
                    t.push((2 * j, 2 * p + 1, nw.neg()));
                    t.push((2 * j + 1, 2 * p, nw));
                    t.push((2 * j + 1, 2 * p + 1, nw.neg()));
                    offset = offset.checked_sub(w)?;
                }
            }
            let nb = offset.scale_pow2(scale)?;
            bias.push(nb.checked_add(&two)?);
            bias.push(nb);
        }
        layers.push(Layer::new(Matrix::from_triplets(2 * gs.len(), cols, t)?, bias));
    }
    let out = Matrix::from_dense(1, 2, &[FixedScalar::ONE, FixedScalar::NEG_ONE])?;
    layers.push(Layer::new(out, vec![FixedScalar::NEG_ONE]));
    let net = ReluNet::new(layers)?;
    let lambda: f64 = (0..net.depth()).map(|i| opnorm_upper(net.float_layer(i).0)).product();
    net.with_lambda(lambda)?.with_domain(unit_box(n))?.with_range_hint(vec![Interval::sym(1.0)])
}

/// Random layered circuit with the given gate counts per level (the last
/// level must have one gate). Weights are integers in `[-w_max, w_max]`
/// scaled by `2^-frac`; biases are multiples of `2^-frac-1`.
pub fn random_layered<R: Rng>(n: usize, widths: &[usize], w_max: i64, frac: u32, rng: &mut R) -> Result<LtfCircuit> {
    if n == 0 || widths.is_empty() || *widths.last().unwrap() != 1 || widths.contains(&0) {
        return invalid("need n > 0, non-empty widths ending in 1");
    }
    let mut gates = Vec::new();
    let mut prev: Vec<usize> = (0..n).collect();
    for (l, &w) in widths.iter().enumerate() {
        let mut cur = Vec::with_capacity(w);
        for j in 0..w {
            let mut ins: Vec<usize> = prev.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
            if l > 0 {
                // make every previous gate feed someone
                for (i, &p) in prev.iter().enumerate() {
                    if i % w == j && !ins.contains(&p) {
                        ins.push(p);
                    }
                }
            }
            if ins.is_empty() {
                ins.push(prev[rng.random_range(0..prev.len())]);
            }
            let weights = ins
                .iter()
                .map(|_| {
                    let v = rng.random_range(-w_max..=w_max);
                    FixedScalar::from_ratio(if v == 0 { 1 } else { v } as i128, frac)
                })
                .collect::<Result<_>>()?;
            let bmax = (w_max * ins.len() as i64) << 1;
            let bias = FixedScalar::from_ratio(rng.random_range(-bmax..=bmax) as i128, frac + 1)?;
            gates.push(Gate::new(ins, weights, bias));
            cur.push(n + gates.len() - 1);
        }
        prev = cur;
    }
    let out = gates.len() - 1;
    LtfCircuit::new(n, gates, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use forge_core::dy;
    use rand::SeedableRng;

    fn and2() -> LtfCircuit {
        LtfCircuit::new(2, vec![Gate::new(vec![0, 1], vec![dy(1, 0), dy(1, 0)], dy(3, 1))], 0).unwrap()
    }

    fn net_table(net: &ReluNet, n: usize) -> Vec<i8> {
        (0..1usize << n)
            .map(|i| {
                let x: Vec<FixedScalar> = index_point(i, n).iter().map(|&v| dy(v as i128, 0)).collect();
                let y = net.eval_exact(&x).unwrap()[0];
                assert!(y == FixedScalar::ONE || y == FixedScalar::NEG_ONE, "{y}");
                y.signum() as i8
            })
            .collect()
    }

    #[test]
    fn and_gate() {
        let c = and2();
        assert_eq!(c.truth_table().unwrap(), vec![1, -1, -1, -1]);
        assert_eq!(c.margin().unwrap().unwrap(), Dyadic::from(dy(3, 1)));
        let xi = c.auto_xi_prime().unwrap();
        assert_eq!(xi, FixedScalar::ONE);
        let net = ltf_to_relu(&c, xi).unwrap();
        assert_eq!(net_table(&net, 2), c.truth_table().unwrap());
        assert_eq!((net.depth(), net.size()), (2, 2));
        assert!(matches!(ltf_to_relu(&c, dy(2, 0)), Err(ForgeError::MarginTooSmall { .. })));
    }

    #[test]
    fn zero_sum_counts_as_positive() {
        // sgn(x0 + x1) is +1 when the inputs disagree
        let c =
            LtfCircuit::new(2, vec![Gate::new(vec![0, 1], vec![dy(1, 0), dy(1, 0)], FixedScalar::ZERO)], 0).unwrap();
        assert_eq!(c.truth_table().unwrap(), vec![1, 1, 1, -1]);
        let net = ltf_to_relu(&c, c.auto_xi_prime().unwrap()).unwrap();
        assert_eq!(net_table(&net, 2), vec![1, 1, 1, -1]);
    }

    #[test]
    fn xor_from_thresholds() {
        // OR and NAND feeding AND
        let or = Gate::new(vec![0, 1], vec![dy(1, 0), dy(1, 0)], dy(-3, 1));
        let nand = Gate::new(vec![0, 1], vec![dy(-1, 0), dy(-1, 0)], dy(-3, 1));
        let and = Gate::new(vec![2, 3], vec![dy(1, 0), dy(1, 0)], dy(3, 1));
        let c = LtfCircuit::new(2, vec![or, nand, and], 2).unwrap();
        assert_eq!(c.truth_table().unwrap(), vec![-1, 1, 1, -1]);
        let net = ltf_to_relu(&c, c.auto_xi_prime().unwrap()).unwrap();
        assert_eq!(net_table(&net, 2), vec![-1, 1, 1, -1]);
        assert_eq!((net.depth(), net.size()), (3, 6));
    }

    #[test]
    fn constant_gate() {
        let c = LtfCircuit::new(3, vec![Gate::new(vec![], vec![], dy(-10, 0))], 0).unwrap();
        assert_eq!(c.margin().unwrap(), None);
        let net = ltf_to_relu(&c, FixedScalar::ONE).unwrap();
        assert_eq!(net_table(&net, 3), vec![1; 8]);
    }

    #[test]
    fn skip_wire_gets_pass_through() {
        let g0 = Gate::new(vec![0], vec![dy(-1, 0)], FixedScalar::ZERO);
        let g1 = Gate::new(vec![2, 1], vec![dy(1, 0), dy(1, 0)], dy(1, 0));
        let c = LtfCircuit::new(2, vec![g0, g1], 1).unwrap();
        assert!(!c.is_layered());
        let l = layer_circuit(&c).unwrap();
        assert!(l.is_layered());
        assert_eq!(l.size(), 3);
        assert_eq!(l.depth(), 2);
        assert_eq!(l.truth_table().unwrap(), c.truth_table().unwrap());
        assert!(l.size() <= c.depth() * c.size());
    }

    #[test]
    fn layered_is_unchanged() {
        let c = and2();
        assert!(c.is_layered());
        assert_eq!(layer_circuit(&c).unwrap(), c);
    }

    #[test]
    fn rejects_cycles_and_dead_gates() {
        let a = Gate::new(vec![2], vec![dy(1, 0)], FixedScalar::ZERO);
        let b = Gate::new(vec![1], vec![dy(1, 0)], FixedScalar::ZERO);
        assert!(matches!(LtfCircuit::new(1, vec![a, b], 1), Err(ForgeError::Cycle(_))));
        let a = Gate::new(vec![0], vec![dy(1, 0)], FixedScalar::ZERO);
        assert!(LtfCircuit::new(1, vec![a.clone(), a], 1).is_err());
    }

    #[test]
    fn random_circuits_compile() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let c = random_layered(6, &[4, 3, 1], 3, 1, &mut rng).unwrap();
            assert!(c.is_layered());
            let net = ltf_to_relu(&c, c.auto_xi_prime().unwrap()).unwrap();
            assert_eq!(net_table(&net, 6), c.truth_table().unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        let c = and2();
        let s = serde_json::to_string(&c).unwrap();
        let back: LtfCircuit = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let plain: LtfCircuit =
            serde_json::from_str(r#"{"n":2,"gates":[{"inputs":[0,1],"weights":[1,1],"bias":1.5}]}"#).unwrap();
        assert_eq!(plain, c);
    }
}
