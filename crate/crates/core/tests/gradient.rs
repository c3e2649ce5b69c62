mod common;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use probe_core::oracle::{finite_difference_gradient, max_relative_error, relaxed_loss};
use probe_core::rng::SeededRng;
use probe_core::toylm::{ToyLmDims, ToyLmParams};

fn dims_strategy() -> impl Strategy<Value = ToyLmDims> {
    (2usize..20, 1usize..8, 1usize..8, 1usize..7, 0.3f64..1.0, 0.1f64..1.0).prop_map(
        |(v, d, h, c, decay, init_scale)| ToyLmDims {
            vocab_size: v,
            embed_dim: d,
            hidden_dim: h,
            context: c,
            decay,
            init_scale,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        rng_seed: RngSeed::Fixed(0x6AD),
        ..ProptestConfig::default()
    })]

    #[test]
    fn analytic_gradient_matches_finite_differences(
        dims in dims_strategy(),
        seed in any::<u64>(),
        suffix_len in 1usize..5,
    ) {
        let p = ToyLmParams::random(dims, &mut SeededRng::new(seed)).unwrap();
        let inst = common::random_instance(dims.vocab_size, 3, suffix_len, 3, seed ^ 0xF00D);
        let grads = p.onehot_gradients(&inst).unwrap();
        prop_assert_eq!(grads.len(), suffix_len);
        for (pos, g) in grads.iter().enumerate() {
            let fd = finite_difference_gradient(&p, &inst, pos, 1e-5);
            let err = max_relative_error(g, &fd);
            prop_assert!(err < 1e-5, "position {}: {:e}", pos, err);
            prop_assert_eq!(g, &p.onehot_gradient(&inst, pos).unwrap());
        }
    }

    #[test]
    fn relaxed_loss_at_one_hot_equals_nll(
        dims in dims_strategy(),
        seed in any::<u64>(),
    ) {
        let p = ToyLmParams::random(dims, &mut SeededRng::new(seed)).unwrap();
        let inst = common::random_instance(dims.vocab_size, 2, 3, 2, seed);
        let at = inst.suffix_positions().start;
        let mut w = vec![0.0; dims.vocab_size];
        w[inst.suffix().tokens()[0] as usize] = 1.0;
        let a = relaxed_loss(&p, &inst, at, &w);
        let b = p.nll_loss(&inst).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn forward_is_pure(dims in dims_strategy(), seed in any::<u64>()) {
        let p = ToyLmParams::random(dims, &mut SeededRng::new(seed)).unwrap();
        let inst = common::random_instance(dims.vocab_size, 2, 3, 2, seed);
        prop_assert_eq!(p.nll_loss(&inst).unwrap().to_bits(), p.nll_loss(&inst).unwrap().to_bits());
        prop_assert_eq!(p.onehot_gradients(&inst).unwrap(), p.onehot_gradients(&inst).unwrap());
    }
}

#[test]
fn suffix_outside_context_has_zero_gradient() {
    let dims = ToyLmDims {
        vocab_size: 6,
        embed_dim: 3,
        hidden_dim: 3,
        context: 1,
        decay: 0.8,
        init_scale: 0.5,
    };
    let p = ToyLmParams::random(dims, &mut SeededRng::new(3)).unwrap();
    // context 1: only the last suffix token feeds the first target position
    let inst = common::instance(6, &[1, 2], &[3, 4, 5], &[0, 1]);
    let g = p.onehot_gradients(&inst).unwrap();
    assert!(g[0].iter().all(|&x| x == 0.0));
    assert!(g[1].iter().all(|&x| x == 0.0));
    assert!(g[2].iter().any(|&x| x != 0.0));
}
