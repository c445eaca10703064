mod common;

use common::{alpha_oracle, ari_oracle, nmi_oracle};
use eventcause::annotation::{krippendorff_alpha, majority_vote, CausalLabel, ReliabilityData};
use eventcause::metrics::{adjusted_rand_index, normalized_mutual_information};
use proptest::prelude::*;

fn labelings() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (2usize..40).prop_flat_map(|n| (prop::collection::vec(0u8..5, n), prop::collection::vec(0u8..4, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ari_matches_pair_counting((p, t) in labelings()) {
        let got = adjusted_rand_index(&p, &t).unwrap();
        prop_assert!((got - ari_oracle(&p, &t)).abs() < 1e-9, "{got}");
    }

    #[test]
    fn nmi_matches_block_oracle((p, t) in labelings()) {
        let got = normalized_mutual_information(&p, &t).unwrap();
        prop_assert!((got - nmi_oracle(&p, &t)).abs() < 1e-9, "{got}");
    }

    #[test]
    fn partition_scores_ignore_label_names((p, t) in labelings(), shift in 1u8..50) {
        let renamed: Vec<u8> = p.iter().map(|x| x.wrapping_mul(7).wrapping_add(shift)).collect();
        let a = adjusted_rand_index(&p, &t).unwrap();
        prop_assert!((a - adjusted_rand_index(&renamed, &t).unwrap()).abs() < 1e-12);
        let m = normalized_mutual_information(&p, &t).unwrap();
        prop_assert!((m - normalized_mutual_information(&renamed, &t).unwrap()).abs() < 1e-12);
        prop_assert!((a - adjusted_rand_index(&t, &p).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0 + 1e-12).contains(&a));
        prop_assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn alpha_matches_pairwise_definition(
        units in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0u8..3), 1..5), 1..12)
    ) {
        let r = ReliabilityData::new(units.clone());
        match (krippendorff_alpha(&r), alpha_oracle(&units)) {
            (Ok(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}"),
            (Err(_), None) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn majority_ignores_order(labels in prop::collection::vec(0usize..3, 3..9), seed in any::<u64>()) {
        let labels: Vec<CausalLabel> = labels.into_iter().map(|i| CausalLabel::ALL[i]).collect();
        let mut shuffled = labels.clone();
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        prop_assert_eq!(majority_vote(&labels).unwrap(), majority_vote(&shuffled).unwrap());
    }
}

#[test]
fn toy_partition_goldens() {
    let p = [0, 0, 1, 1];
    let t = [0, 1, 0, 1];
    assert!((adjusted_rand_index(&p, &t).unwrap() + 0.5).abs() < 1e-12);
    assert!((ari_oracle(&p, &t) + 0.5).abs() < 1e-12);
}

#[test]
fn ari_of_independent_random_labelings_averages_zero() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
    let trials = 1000;
    let mean = (0..trials)
        .map(|_| {
            let p: Vec<u8> = (0..60).map(|_| rng.gen_range(0..5)).collect();
            let t: Vec<u8> = (0..60).map(|_| rng.gen_range(0..4)).collect();
            adjusted_rand_index(&p, &t).unwrap()
        })
        .sum::<f64>()
        / f64::from(trials);
    assert!(mean.abs() < 0.05, "mean ARI {mean}");
}
