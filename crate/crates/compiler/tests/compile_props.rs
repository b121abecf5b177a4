use forge_compiler::clamp::clamp_value;
use forge_compiler::fourier::subset_members;
use forge_compiler::leaky::leaky;
use forge_compiler::predicate::and_pm;
use forge_compiler::*;
use forge_core::bounds::Interval;
use forge_core::{dy, empirical_lipschitz, FixedScalar, Layer, Matrix, ReluNet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tsa() -> Predicate {
    Predicate::from_fn(5, |x| x[0] * x[1] * x[2] * and_pm(x[3], x[4])).unwrap()
}

fn cube_point(i: usize, k: usize) -> Vec<FixedScalar> {
    index_point(i, k).iter().map(|&v| dy(v as i128, 0)).collect()
}

fn exact_table(net: &ReluNet, k: usize) -> Vec<FixedScalar> {
    (0..1usize << k).map(|i| net.eval_exact(&cube_point(i, k)).unwrap()[0]).collect()
}

fn as_scalars(t: &[i8]) -> Vec<FixedScalar> {
    t.iter().map(|&v| dy(v as i128, 0)).collect()
}

fn random_net(rng: &mut ChaCha8Rng, d_in: usize, widths: &[usize], d_out: usize) -> ReluNet {
    let mut dims = vec![d_in];
    dims.extend_from_slice(widths);
    dims.push(d_out);
    let layers = dims
        .windows(2)
        .map(|w| {
            let data: Vec<FixedScalar> = (0..w[0] * w[1]).map(|_| dy(rng.random_range(-8..=8), 3)).collect();
            let bias = (0..w[1]).map(|_| dy(rng.random_range(-4..=4), 2)).collect();
            Layer::new(Matrix::from_dense(w[1], w[0], &data).unwrap(), bias)
        })
        .collect();
    ReluNet::new(layers).unwrap().with_domain(vec![Interval::sym(1.0); d_in]).unwrap()
}

#[test]
fn tsa_fourier_coefficients() {
    let f = fourier_transform(&tsa());
    let half = dy(1, 1);
    let mut expect = std::collections::BTreeMap::new();
    expect.insert(0b00111u32, half.neg());
    expect.insert(0b01111, half);
    expect.insert(0b10111, half);
    expect.insert(0b11111, half);
    assert_eq!(f.coeffs, expect);
    assert_eq!(f.parseval_sum().unwrap(), FixedScalar::ONE);
}

#[test]
fn fourier_coefficients_match_expectation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = Predicate::random(5, &mut rng).unwrap();
    let f = fourier_transform(&p);
    for s in 0u32..32 {
        let members = subset_members(s);
        let sum: i64 = (0..32)
            .map(|i| {
                let x = index_point(i, 5);
                p.eval(&x) as i64 * members.iter().map(|&j| x[j] as i64).product::<i64>()
            })
            .sum();
        assert_eq!(f.coeff(s), FixedScalar::from_ratio(sum as i128, 5).unwrap());
    }
}

#[test]
fn tsa_compiles_exactly() {
    let p = tsa();
    let net = compile_predicate(&p).unwrap();
    assert_eq!(net.depth(), 5);
    assert_eq!(exact_table(&net, 5), as_scalars(p.table()));
}

#[test]
fn tsa_through_selectors_matches_direct() {
    let p = tsa();
    let direct = compile_predicate(&p).unwrap().with_domain(vec![Interval::sym(1.0); 5]).unwrap();
    let selectors: Vec<ReluNet> = (0..5)
        .map(|i| {
            let w = Matrix::from_triplets(1, 5, vec![(0, i, FixedScalar::ONE)]).unwrap();
            ReluNet::new(vec![Layer::new(w, vec![FixedScalar::ZERO])])
                .unwrap()
                .with_domain(vec![Interval::sym(1.0); 5])
                .unwrap()
        })
        .collect();
    let refs: Vec<&ReluNet> = selectors.iter().collect();
    let c = compose(&refs, &direct).unwrap();
    assert_eq!(c.depth(), 1 + direct.depth());
    assert_eq!(c.size(), 5 + direct.size());
    assert_eq!(exact_table(&c, 5), as_scalars(p.table()));
}

#[test]
fn linear_combine_cancels() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_net(&mut rng, 3, &[4], 1);
    let z = linear_combine(&[&a, &a], &[FixedScalar::ONE, FixedScalar::NEG_ONE]).unwrap();
    for _ in 0..50 {
        let x: Vec<FixedScalar> = (0..3).map(|_| dy(rng.random_range(-64..=64), 6)).collect();
        assert_eq!(z.eval_exact(&x).unwrap(), vec![FixedScalar::ZERO]);
    }
    assert_eq!(z.size(), 2 * a.size());
}

#[test]
fn outer_identity_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inner = random_net(&mut rng, 2, &[3], 1);
    let id = ReluNet::new(vec![Layer::new(Matrix::identity(1), vec![FixedScalar::ZERO])]).unwrap();
    let c = compose(&[&inner], &id).unwrap();
    assert_eq!(c.depth(), inner.depth() + 1);
    for _ in 0..50 {
        let x: Vec<FixedScalar> = (0..2).map(|_| dy(rng.random_range(-16..=16), 4)).collect();
        assert_eq!(c.eval_exact(&x).unwrap(), inner.eval_exact(&x).unwrap());
    }
}

#[test]
fn clamp_boundary_and_slope() {
    for n in [1u64, 3, 8, 100] {
        let h = clamp_net(n).unwrap();
        let xi = 1.0 / n as f64;
        assert!((h.eval_float(&[xi]).unwrap()[0] - 1.0).abs() < 1e-12);
        assert_eq!(h.eval_float(&[-2.0 * xi]).unwrap()[0], -1.0);
        let slope = (h.eval_float(&[xi / 2.0]).unwrap()[0] - h.eval_float(&[0.0]).unwrap()[0]) / (xi / 2.0);
        assert!((slope - n as f64).abs() < 1e-9);
    }
}

#[test]
fn leaky_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dims = [4usize, 6, 5, 2];
    let ws: Vec<Matrix> = dims
        .windows(2)
        .map(|w| {
            let data: Vec<FixedScalar> = (0..w[0] * w[1]).map(|_| dy(rng.random_range(-64..=64), 5)).collect();
            Matrix::from_dense(w[1], w[0], &data).unwrap()
        })
        .collect();
    let lam = dy(1, 2);
    let net = leaky_to_relu(&ws, None, lam).unwrap();
    assert_eq!(net.hidden_widths(), vec![12, 10]);
    let dense: Vec<Vec<f64>> = ws.iter().map(|w| w.to_dense().iter().map(|v| v.to_f64()).collect()).collect();
    for _ in 0..1000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut h = x.clone();
        for (l, w) in dense.iter().enumerate() {
            let (rows, cols) = (dims[l + 1], dims[l]);
            let mut z: Vec<f64> = (0..rows).map(|r| (0..cols).map(|c| w[r * cols + c] * h[c]).sum()).collect();
            if l + 1 < dense.len() {
                z.iter_mut().for_each(|v| *v = leaky(*v, 0.25));
            }
            h = z;
        }
        let got = net.eval_float(&x).unwrap();
        for (a, b) in got.iter().zip(&h) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn random_predicates_compile_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for k in 2..=6 {
        let p = Predicate::random(k, &mut rng).unwrap();
        let net = compile_predicate(&p).unwrap();
        assert_eq!(exact_table(&net, k), as_scalars(p.table()), "k={k}");
    }
}

#[test]
fn random_circuits_agree_after_layering() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let c = random_layered(7, &[5, 3, 1], 4, 2, &mut rng).unwrap();
        // add a skip wire from an input into the output gate
        let mut gates = c.gates().to_vec();
        let out = c.output();
        gates[out].inputs.push(0);
        gates[out].weights.push(dy(1, 2));
        let skip = LtfCircuit::new(7, gates, out).unwrap();
        let layered = layer_circuit(&skip).unwrap();
        assert!(layered.is_layered());
        assert_eq!(layered.truth_table().unwrap(), skip.truth_table().unwrap());
        let net = ltf_to_relu(&layered, layered.auto_xi_prime().unwrap()).unwrap();
        let table: Vec<i8> = exact_table(&net, 7).iter().map(|v| v.signum() as i8).collect();
        assert_eq!(table, skip.truth_table().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fourier_round_trip(k in 1usize..=7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Predicate::random(k, &mut rng).unwrap();
        let f = fourier_transform(&p);
        prop_assert_eq!(f.inverse().unwrap(), as_scalars(p.table()));
        prop_assert_eq!(f.parseval_sum().unwrap(), FixedScalar::ONE);
        for (s, c) in &f.coeffs {
            let _ = s;
            prop_assert!(c.frac_bits() <= k as u32);
        }
    }

    #[test]
    fn compose_profile_laws(seed in any::<u64>(), r in 1usize..4, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inners: Vec<ReluNet> = (0..r)
            .map(|_| {
                let depth = rng.random_range(1..4);
                let widths: Vec<usize> = (1..depth).map(|_| rng.random_range(1..5)).collect();
                random_net(&mut rng, d, &widths, 1)
            })
            .collect();
        let outer_widths: Vec<usize> = (0..rng.random_range(0..3)).map(|_| rng.random_range(1..5)).collect();
        let outer = random_net(&mut rng, r, &outer_widths, 1).without_domain();
        let refs: Vec<&ReluNet> = inners.iter().collect();
        let c = compose(&refs, &outer).unwrap();
        let l1 = inners.iter().map(|n| n.depth()).max().unwrap();
        let padded_sizes: Vec<usize> = inners.iter().map(|n| pad_depth(n, l1).unwrap().size()).collect();
        let s1 = *padded_sizes.iter().max().unwrap();
        let (p, po) = (c.profile(), outer.profile());
        prop_assert_eq!(p.depth, l1 + po.depth);
        prop_assert_eq!(p.size, (s1 + 1) * r + po.size);
        let tau1 = inners.iter().map(|n| n.profile().tau).max().unwrap();
        prop_assert_eq!(p.tau, tau1.max(po.tau));
        let lam1 = inners.iter().map(|n| n.profile().lambda).fold(0.0, f64::max);
        prop_assert_eq!(p.lambda, lam1 * po.lambda * (r as f64).sqrt());
        let emp = empirical_lipschitz(&c, 200, seed);
        prop_assert!(emp <= p.lambda * (1.0 + 1e-9), "{} > {}", emp, p.lambda);
        for _ in 0..20 {
            let x: Vec<FixedScalar> = (0..d).map(|_| dy(rng.random_range(-32..=32), 5)).collect();
            let mid: Vec<FixedScalar> = inners.iter().map(|n| n.eval_exact(&x).unwrap()[0]).collect();
            prop_assert_eq!(c.eval_exact(&x).unwrap(), outer.eval_exact(&mid).unwrap());
        }
    }

    #[test]
    fn clamp_matches_reference(n in 1u64..1000, x in -5.0f64..5.0) {
        let h = clamp_net(n).unwrap();
        prop_assert!((h.eval_float(&[x]).unwrap()[0] - clamp_value(x, n)).abs() < 1e-9);
    }
}
