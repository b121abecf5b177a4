//! Lipschitz upper bounds and sampled lower estimates.

use rand::Rng;

use crate::bounds::Interval;
use crate::linalg::{norm, opnorm_upper};
use crate::matrix::CsrF64;
use crate::net::ReluNet;
use crate::rng::stream_rng;

/// Product of per-layer operator-norm upper bounds. ReLU is 1-Lipschitz, so
/// this bounds the Lipschitz constant of the whole network.
pub fn lipschitz_upper<'a>(layers: impl Iterator<Item = &'a CsrF64>) -> f64 {
    layers.map(opnorm_upper).product()
}

/// Largest observed `||f(x) - f(y)|| / ||x - y||` over sampled pairs.
///
/// Half of the trials are uniform pairs from the declared domain (or
/// `[-1,1]^d` when none is declared). The other half probe the local linear
/// piece around a random point along its top singular direction, which finds
/// near-worst-case ratios quickly.
pub fn empirical_lipschitz(net: &ReluNet, trials: usize, seed: u64) -> f64 {
    let d = net.d_in();
    if d == 0 {
        return 0.0;
    }
    let dom: Vec<Interval> = net.domain().map(|b| b.to_vec()).unwrap_or_else(|| vec![Interval::sym(1.0); d]);
    let mut rng = stream_rng(seed, 0x11b);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        dom.iter().map(|iv| iv.lo + (iv.hi - iv.lo) * rng.random::<f64>()).collect()
    };
    let ratio = |x: &[f64], y: &[f64]| -> f64 {
        let dx: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let nx = norm(&dx);
        if nx == 0.0 {
            return 0.0;
        }
        let fx = net.eval_float(x).expect("finite input");
        let fy = net.eval_float(y).expect("finite input");
        let df: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
        norm(&df) / nx
    };
    let mut best = 0.0f64;
    for t in 0..trials.max(1) {
        let x = draw(&mut rng);
        if t % 2 == 0 {
            let y = draw(&mut rng);
            best = best.max(ratio(&x, &y));
        } else {
            let masks = net.activation_masks(&x);
            let mut v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            for _ in 0..30 {
                let n = norm(&v);
                if n == 0.0 {
                    break;
                }
                v.iter_mut().for_each(|c| *c /= n);
                let jv = net.jvp(&masks, &v);
                v = net.vjp(&masks, &jv);
            }
            let n = norm(&v);
            if n == 0.0 {
                continue;
            }
            // On the open linear piece around x, the ratio for y = x + h v
            // equals ||J v|| / ||v|| for every small h; evaluate that limit
            // directly to avoid cancellation in f(y) - f(x).
            let jv = net.jvp(&masks, &v);
            best = best.max(norm(&jv) / n);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::{dy, FixedScalar};
    use crate::matrix::Matrix;
    use crate::net::Layer;

    fn scaled_identity(k: i128, d: usize) -> ReluNet {
        let diag: Vec<_> = (0..d).map(|i| (i, i, dy(k, 0))).collect();
        let w = Matrix::from_triplets(d, d, diag).unwrap();
        ReluNet::new(vec![Layer::new(w, vec![FixedScalar::ZERO; d])]).unwrap()
    }

    #[test]
    fn identity_estimate_at_most_one() {
        let est = empirical_lipschitz(&scaled_identity(1, 3), 200, 7);
        assert!(est <= 1.0 + 1e-9);
        assert!(est > 0.99);
    }

    #[test]
    fn scaled_linear_net() {
        let net = scaled_identity(5, 2);
        let est = empirical_lipschitz(&net, 100, 3);
        assert!(est <= 5.0 + 1e-9 && est >= 4.9, "{est}");
        assert!(net.profile().lambda >= 5.0);
    }
}
