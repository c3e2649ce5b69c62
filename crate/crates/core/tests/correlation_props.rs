use proptest::prelude::*;

use probe_core::correlation::{agreement, spearman_alpha, CorrelationMethod};
use probe_core::oracle;
use probe_core::Error;

/// Tie-free pair: `a` a shuffled range plus fractional offsets, `b` another.
fn tie_free() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=64).prop_flat_map(|k| {
        let perm = || Just((0..k).collect::<Vec<usize>>()).prop_shuffle();
        (perm(), perm(), prop::collection::vec(0.0f64..0.5, k), -3.0f64..3.0)
            .prop_map(|(pa, pb, jitter, shift)| {
                let a = pa.iter().zip(&jitter).map(|(&r, j)| r as f64 + j).collect();
                let b = pb.iter().map(|&r| (r as f64) * 0.37 + shift).collect();
                (a, b)
            })
    })
}

fn oracle_value(m: CorrelationMethod, a: &[f64], b: &[f64]) -> f64 {
    match m {
        CorrelationMethod::Spearman => oracle::spearman(a, b),
        CorrelationMethod::Pearson => oracle::pearson(a, b),
        CorrelationMethod::Kendall => oracle::kendall(a, b),
        CorrelationMethod::Gamma => oracle::gamma(a, b),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_brute_force((a, b) in tie_free()) {
        for m in CorrelationMethod::ALL {
            let got = agreement(m, &a, &b).unwrap();
            prop_assert!((got.value - oracle_value(m, &a, &b)).abs() <= 1e-12, "{m}");
            prop_assert_eq!(got.sample_size, a.len());
            prop_assert_eq!(got.method, m);
        }
    }

    #[test]
    fn symmetric((a, b) in tie_free()) {
        for m in CorrelationMethod::ALL {
            let ab = agreement(m, &a, &b).unwrap().value;
            let ba = agreement(m, &b, &a).unwrap().value;
            prop_assert!((ab - ba).abs() <= 1e-12, "{m}: {ab} vs {ba}");
        }
    }

    #[test]
    fn spearman_invariant_under_monotone_maps((a, b) in tie_free()) {
        let base = spearman_alpha(&a, &b).unwrap().value;
        let cubed: Vec<f64> = a.iter().map(|x| x * x * x - 5.0).collect();
        let exped: Vec<f64> = b.iter().map(|x| (x / 10.0).exp()).collect();
        prop_assert_eq!(spearman_alpha(&cubed, &b).unwrap().value, base);
        prop_assert_eq!(spearman_alpha(&a, &exped).unwrap().value, base);
        prop_assert_eq!(spearman_alpha(&cubed, &exped).unwrap().value, base);
    }

    #[test]
    fn identical_and_reversed_orders((a, _) in tie_free()) {
        let rev: Vec<f64> = a.iter().map(|x| -x).collect();
        let scaled: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
        for m in CorrelationMethod::ALL {
            let same = agreement(m, &a, &scaled).unwrap().value;
            if m == CorrelationMethod::Pearson {
                prop_assert!((same - 1.0).abs() < 1e-12);
            } else {
                prop_assert_eq!(same, 1.0, "{}", m);
            }
            prop_assert!(agreement(m, &a, &rev).unwrap().value.abs() < 1e-12, "{}", m);
        }
    }

    #[test]
    fn always_in_unit_interval(
        pairs in prop::collection::vec((0u8..5, 0u8..5), 2..40)
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        for m in CorrelationMethod::ALL {
            match agreement(m, &a, &b) {
                Ok(s) => prop_assert!((0.0..=1.0).contains(&s.value), "{m}: {}", s.value),
                Err(Error::Degenerate(_)) => {}
                Err(e) => prop_assert!(false, "{m}: {e}"),
            }
        }
    }
}

#[test]
fn worked_example_is_exactly_nine_tenths() {
    let s = spearman_alpha(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]).unwrap();
    assert_eq!(s.value, 0.9);
}

#[test]
fn constant_list_is_degenerate() {
    assert!(matches!(
        spearman_alpha(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn too_short_or_mismatched() {
    assert!(matches!(
        spearman_alpha(&[1.0], &[1.0]),
        Err(Error::InsufficientSample(1))
    ));
    assert!(matches!(
        agreement(CorrelationMethod::Kendall, &[1.0, 2.0], &[1.0]),
        Err(Error::Shape(_))
    ));
    assert!(matches!(
        agreement(CorrelationMethod::Gamma, &[1.0, f64::NAN], &[1.0, 2.0]),
        Err(Error::NonFinite(_))
    ));
}
