//! Intervals and interval bound propagation through ReLU networks.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, invalid, Result};
use crate::net::ReluNet;

/// Closed interval `[lo, hi]`; infinite endpoints mean unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return invalid(format!("bad interval [{lo}, {hi}]"));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn sym(r: f64) -> Self {
        Interval { lo: -r, hi: r }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_value(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Widens both ends by a relative slack to absorb rounding.
    pub fn widen(&self) -> Interval {
        let pad = |v: f64| 1e-9 * (1.0 + v.abs());
        Interval { lo: self.lo - pad(self.lo), hi: self.hi + pad(self.hi) }
    }
}

pub fn unit_box(d: usize) -> Vec<Interval> {
    vec![Interval::sym(1.0); d]
}

pub fn all_finite(b: &[Interval]) -> bool {
    b.iter().all(Interval::is_finite)
}

/// Sound outer bounds on every output coordinate for inputs inside `input`.
pub fn propagate(net: &ReluNet, input: &[Interval]) -> Result<Vec<Interval>> {
    ensure_dim(net.d_in(), input.len(), "bound propagation input")?;
    let mut cur: Vec<Interval> = input.to_vec();
    let last = net.depth() - 1;
    for (li, (w, b)) in net.float_layers().enumerate() {
        let mut next = Vec::with_capacity(w.rows);
        for r in 0..w.rows {
            let (mut lo, mut hi) = (b[r], b[r]);
            for i in w.row_ptr[r]..w.row_ptr[r + 1] {
                let a = w.vals[i];
                let x = cur[w.col_idx[i]];
                let (p, q) = if a >= 0.0 { (a * x.lo, a * x.hi) } else { (a * x.hi, a * x.lo) };
                lo += p;
                hi += q;
            }
            let mut iv = Interval { lo, hi }.widen();
            if li < last {
                iv.lo = iv.lo.max(0.0);
                iv.hi = iv.hi.max(0.0);
            }
            next.push(iv);
        }
        cur = next;
    }
    Ok(cur)
}

/// Bounds on the network output over its declared domain, tightened by any range hint.
pub fn output_bounds(net: &ReluNet) -> Result<Vec<Interval>> {
    let dom = net.domain().map(|d| d.to_vec()).unwrap_or_else(|| vec![Interval::UNBOUNDED; net.d_in()]);
    let mut out = propagate(net, &dom)?;
    if let Some(hint) = net.range_hint() {
        for (o, h) in out.iter_mut().zip(hint) {
            *o = o.intersect(h);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::dy;
    use crate::matrix::Matrix;
    use crate::net::{Layer, ReluNet};

    #[test]
    fn propagation_through_abs() {
        // |x| = relu(x) + relu(-x)
        let w1 = Matrix::from_dense(2, 1, &[dy(1, 0), dy(-1, 0)]).unwrap();
        let w2 = Matrix::from_dense(1, 2, &[dy(1, 0), dy(1, 0)]).unwrap();
        let net = ReluNet::new(vec![Layer::new(w1, vec![dy(0, 0); 2]), Layer::new(w2, vec![dy(0, 0)])]).unwrap();
        let b = propagate(&net, &[Interval::new(-2.0, 1.0).unwrap()]).unwrap();
        assert!(b[0].lo <= 0.0 && b[0].lo > -1e-6);
        assert!(b[0].hi >= 3.0 && b[0].hi < 3.0 + 1e-6);
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::sym(1.0).contains(&Interval::point(0.5)));
        assert!(!Interval::UNBOUNDED.is_finite());
    }
}
