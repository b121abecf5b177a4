use forge_compiler::predicate::index_point;
use forge_core::{dy, FixedScalar};
use forge_prg::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn to_fixed(x: &[i8]) -> Vec<FixedScalar> {
    x.iter().map(|&v| dy(v as i128, 0)).collect()
}

#[test]
fn index_frequencies_look_uniform() {
    let g = Hypergraph::sample(50, 200, 5, 2024).unwrap();
    let mut counts = [0f64; 50];
    for s in g.sets() {
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        for &i in s {
            counts[i] += 1.0;
        }
    }
    let expected = 200.0 * 5.0 / 50.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let crit = ChiSquared::new(49.0).unwrap().inverse_cdf(1.0 - 1e-3);
    assert!(chi2 < crit, "chi2 {chi2} >= {crit}");
}

#[test]
fn networks_agree_on_every_seed_small() {
    let prg = LocalPrg::tsa(10, 4, 77).unwrap();
    let nets = prg.realize_networks().unwrap();
    for n in &nets {
        assert_eq!(n.depth(), 5);
    }
    for i in 0..1usize << 10 {
        let x = index_point(i, 10);
        let want = prg.eval(&x).unwrap();
        let xf = to_fixed(&x);
        for (l, n) in nets.iter().enumerate() {
            assert_eq!(n.eval_exact(&xf).unwrap(), vec![dy(want[l] as i128, 0)]);
        }
    }
}

#[test]
fn stacked_network_agrees_on_random_seeds() {
    let prg = LocalPrg::tsa(50, 200, 5).unwrap();
    let net = prg.realize_stacked().unwrap();
    assert_eq!((net.d_in(), net.d_out(), net.depth()), (50, 200, 5));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let seeds: Vec<Vec<i8>> =
        (0..n).map(|_| (0..50).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()).collect();
    let flat: Vec<f64> = seeds.iter().flatten().map(|&v| v as f64).collect();
    let out = net.eval_float_batch(&flat).unwrap();
    for (s, y) in seeds.iter().zip(out.chunks(200)) {
        let want = prg.eval(s).unwrap();
        for (a, b) in want.iter().zip(y) {
            assert_eq!(*a as f64, *b);
        }
    }
    // exact arithmetic on a subset
    for s in seeds.iter().take(200) {
        let want: Vec<FixedScalar> = to_fixed(&prg.eval(s).unwrap());
        assert_eq!(net.eval_exact(&to_fixed(s)).unwrap(), want);
    }
}

#[test]
fn image_is_bounded_by_seed_count() {
    let prg = LocalPrg::tsa(12, 30, 8).unwrap();
    let img = prg.image().unwrap();
    assert!(img.len() <= 1 << 12);
    assert!(img.windows(2).all(|w| w[0] < w[1]));
    assert!(LocalPrg::tsa(21, 30, 8).unwrap().image().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn networks_are_local(seed in any::<u64>(), coord in 0usize..8) {
        let prg = LocalPrg::tsa(12, 8, seed).unwrap();
        let nets = prg.realize_networks().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<FixedScalar> = (0..12).map(|_| dy(rng.random_range(-8..=8), 3)).collect();
        let base = nets[coord].eval_exact(&x).unwrap();
        let set = &prg.graph().sets()[coord];
        for j in (0..12).filter(|j| !set.contains(j)) {
            let mut y = x.clone();
            y[j] = dy(rng.random_range(-1000..=1000), 2);
            prop_assert_eq!(&nets[coord].eval_exact(&y).unwrap(), &base);
        }
    }

    #[test]
    fn eval_is_deterministic(seed in any::<u64>(), bits in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 16)) {
        let prg = LocalPrg::tsa(16, 20, seed).unwrap();
        prop_assert_eq!(prg.eval(&bits).unwrap(), prg.eval(&bits).unwrap());
        let same = LocalPrg::tsa(16, 20, seed).unwrap();
        prop_assert_eq!(prg.eval(&bits).unwrap(), same.eval(&bits).unwrap());
    }
}
