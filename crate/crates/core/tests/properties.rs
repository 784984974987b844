use proptest::prelude::*;

use trustdyn::analysis::{detect_clusters, histogram, histogram_distance};
use trustdyn::experiment::quantized_opinion_histogram;
use trustdyn::sentiment::{empirical_distribution, quantize, quantize_score, SentimentRecord};
use trustdyn::trust::{Topology, WeightLaw};
use trustdyn::{
    extended_step, generate_trust, hk_classic_step, ClassicHkParams, MediaCoupling, ModelParams, OpinionState,
    TrustGenSpec, TrustMatrix,
};

fn symmetric_trust(n: usize, lower: &[f64]) -> TrustMatrix {
    let mut d = TrustMatrix::zeros(n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..i {
            d.set(i, j, lower[k]);
            d.set(j, i, lower[k]);
            k += 1;
        }
    }
    d
}

fn opinions_and_lower(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-0.3f64..0.5, n * (n - 1) / 2),
        )
    })
}

fn record_for(x: f64) -> SentimentRecord {
    // pos - neg == x exactly
    if x >= 0.0 {
        SentimentRecord::new("s", 0.0, 1.0 - x, x).unwrap()
    } else {
        SentimentRecord::new("s", -x, 1.0 + x, 0.0).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_trust_conserves_mean((init, lower) in opinions_and_lower(8),
                                      beta in 1.0f64..20.0, b in 0.2f64..2.0) {
        let n = init.len();
        let trust = symmetric_trust(n, &lower);
        let params = ModelParams::new(0.0, beta, b, 0.01).unwrap();
        let coupling = MediaCoupling::zeros(n);
        let mut s = OpinionState::new(init).unwrap();
        let m0 = s.mean();
        for _ in 0..1000 {
            s = extended_step(&s, &trust, &params, &coupling, 0.0).unwrap();
        }
        prop_assert!((s.mean() - m0).abs() <= 1e-9, "mean drift {}", s.mean() - m0);
    }
}

proptest! {
    #[test]
    fn consensus_is_a_fixed_point(x in -5.0f64..5.0, n in 1usize..10, w in -1.0f64..1.0,
                                  beta in 0.1f64..50.0, b in 0.0f64..3.0, dt in 0.001f64..1.0) {
        let trust = TrustMatrix::from_row_major(n, vec![w; n * n]).unwrap();
        let params = ModelParams::new(0.0, beta, b, dt).unwrap();
        let s = OpinionState::new(vec![x; n]).unwrap();
        let next = extended_step(&s, &trust, &params, &MediaCoupling::constant(n, 0.7).unwrap(), 0.0).unwrap();
        prop_assert_eq!(next.opinions, vec![x; n]);
    }

    #[test]
    fn classic_range_never_widens(init in prop::collection::vec(-1.0f64..1.0, 1..40), eps in 0.01f64..1.0) {
        let hk = ClassicHkParams::new(eps).unwrap();
        let mut s = OpinionState::new(init).unwrap();
        let range = |s: &OpinionState| {
            let lo = s.opinions.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.opinions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        for _ in 0..30 {
            let (lo, hi) = range(&s);
            s = hk_classic_step(&s, &hk);
            let (lo2, hi2) = range(&s);
            prop_assert!(lo2 >= lo && hi2 <= hi);
        }
    }

    #[test]
    fn pure_decay_matches_closed_form(init in prop::collection::vec(-3.0f64..3.0, 1..6),
                                      alpha in 0.0f64..2.0, dt in 0.001f64..0.45, steps in 1u64..200) {
        prop_assume!(alpha * dt < 1.0);
        let n = init.len();
        let params = ModelParams::new(alpha, 10.0, 1.0, dt).unwrap();
        let mut s = OpinionState::new(init.clone()).unwrap();
        for _ in 0..steps {
            s = extended_step(&s, &TrustMatrix::zeros(n), &params, &MediaCoupling::zeros(n), 3.0).unwrap();
        }
        let factor = (1.0 - alpha * dt).powi(steps as i32);
        for (got, x0) in s.opinions.iter().zip(&init) {
            let want = x0 * factor;
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1e-300) || got == &want,
                "got {got}, want {want}");
        }
    }

    #[test]
    fn histogram_counts_every_value(xs in prop::collection::vec(-3.0f64..3.0, 0..100),
                                    lo in -2.0f64..0.0, width in 0.1f64..3.0, n_bins in 1usize..20) {
        let h = histogram(&xs, lo, lo + width, n_bins).unwrap();
        let binned: u64 = h.counts.iter().sum();
        prop_assert_eq!(binned + h.out_of_range_low + h.out_of_range_high, xs.len() as u64);
        prop_assert_eq!(h.total, xs.len() as u64);
    }

    #[test]
    fn clusters_partition_sorted_opinions(xs in prop::collection::vec(-2.0f64..2.0, 1..60), gap in 0.0f64..0.5) {
        let report = detect_clusters(&xs, gap).unwrap();
        let joined: Vec<f64> = report
            .clusters
            .iter()
            .flat_map(|c| c.member_indices.iter().map(|&k| xs[k]))
            .collect();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(joined, sorted);
    }

    #[test]
    fn histogram_distance_is_a_sane_metric(a in prop::collection::vec(0.0f64..1.0, 1..50),
                                           b in prop::collection::vec(0.0f64..1.0, 1..50),
                                           n_bins in 1usize..12) {
        let ha = histogram(&a, 0.0, 1.0, n_bins).unwrap();
        let hb = histogram(&b, 0.0, 1.0, n_bins).unwrap();
        let ab = histogram_distance(&ha, &hb).unwrap();
        let ba = histogram_distance(&hb, &ha).unwrap();
        prop_assert!(ab.l1 >= 0.0 && ab.emd >= 0.0);
        prop_assert_eq!(ab.l1, ba.l1);
        prop_assert!((ab.emd - ba.emd).abs() <= 1e-15);
        prop_assert!(ab.emd <= ab.l1 * (1.0 - 0.0) / 2.0 + 1e-12);
        let same = histogram_distance(&ha, &ha).unwrap();
        prop_assert_eq!((same.l1, same.emd), (0.0, 0.0));
        if ha.normalized().unwrap() != hb.normalized().unwrap() {
            prop_assert!(ab.l1 > 0.0);
        }
    }

    #[test]
    fn grid_scores_quantize_to_themselves(k in -4i32..=4) {
        let g = f64::from(k) * 0.25;
        prop_assert_eq!(quantize(&record_for(g)).grid_score, g);
    }

    #[test]
    fn integrated_is_grid_plus_one(neg in 0.0f64..1.0, share in 0.0f64..1.0) {
        let pos = (1.0 - neg) * share;
        let r = SentimentRecord::new("r", neg, 1.0 - neg - pos, pos).unwrap();
        let q = quantize(&r);
        prop_assert_eq!(q.integrated_score - 1.0, q.grid_score);
        prop_assert_eq!(quantize_score(q.grid_score).grid_score, q.grid_score);
    }

    #[test]
    fn simulated_and_synthetic_histograms_agree(xs in prop::collection::vec(-1.0f64..=1.0, 1..80)) {
        let (sim, clamped) = quantized_opinion_histogram(&xs).unwrap();
        let records: Vec<_> = xs.iter().map(|&x| record_for(x)).collect();
        let emp = empirical_distribution(&records).unwrap();
        prop_assert_eq!(clamped, 0);
        prop_assert_eq!(emp.binned(), records.len() as u64);
        prop_assert_eq!(sim.counts, emp.counts);
    }

    #[test]
    fn trust_generation_is_seed_deterministic(n in 1usize..15, seed in any::<u64>(), p in 0.0f64..=1.0,
                                              frac in 0.0f64..=1.0) {
        let spec = TrustGenSpec {
            n_agents: n,
            topology: Topology::RandomSparse { connection_probability: p },
            weight_law: WeightLaw::SignedMix { magnitude_lo: 0.1, magnitude_hi: 1.0, distrust_fraction: frac },
            factions: None,
            seed: Some(seed),
        };
        let a = generate_trust(&spec).unwrap();
        prop_assert_eq!(&a, &generate_trust(&spec).unwrap());
        prop_assert!((0..n).all(|i| a.get(i, i) == 0.0));
    }
}
