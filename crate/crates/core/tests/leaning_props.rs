mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use vaxnet::leaning::{
    aggregate_runs, ensemble_leaning, propagate_labels, select_extremes, tune_balance, Community, LeaningScores,
};
use vaxnet::synth::{planted_partition, PlantedSpec};
use vaxnet::{giant_component, Execution};

fn scores(counts: Vec<u32>, runs: u32) -> LeaningScores {
    LeaningScores {
        month: 1,
        users: (0..counts.len()).map(|i| format!("u{i:04}")).collect(),
        counts,
        runs,
        reference_seed: 0,
        beta: 0.5,
    }
}

#[test]
fn tuning_prefers_the_planted_balance() {
    let p = planted_partition(&PlantedSpec { sizes: (320, 80), p_in: 0.06, p_out: 0.001, seed: 9 }).unwrap();
    let gc = giant_component(&p.graph);
    let grid = [0.2, 0.5];
    let t = tune_balance(&gc.graph, &grid, 20, 3, 0.05, Execution::Parallel).unwrap();
    assert_eq!(t.confident.len(), 2);
    assert_eq!(t.beta, 0.2, "confident counts {:?}", t.confident);
}

#[test]
fn null_model_has_few_confident_users() {
    let p = planted_partition(&PlantedSpec { sizes: (150, 150), p_in: 0.03, p_out: 0.03, seed: 2 }).unwrap();
    let gc = giant_component(&p.graph);
    let s = ensemble_leaning(&gc.graph, 0.5, 40, 1).unwrap();
    assert!((s.confident_count() as f64) < 0.5 * s.len() as f64);
}

#[test]
fn ensemble_independent_of_execution() {
    let p = planted_partition(&PlantedSpec { sizes: (60, 60), p_in: 0.1, p_out: 0.01, seed: 8 }).unwrap();
    let g = giant_component(&p.graph).graph;
    let a = vaxnet::leaning::ensemble_leaning_with(&g, 0.5, 0.05, 12, 4, Execution::Sequential).unwrap();
    let b = vaxnet::leaning::ensemble_leaning_with(&g, 0.5, 0.05, 12, 4, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_bounded_and_alignment_invariant(
        runs in prop::collection::vec(prop::collection::vec(0u8..2, 15), 1..12),
        flip in prop::collection::vec(any::<bool>(), 12),
    ) {
        let counts = aggregate_runs(&runs);
        prop_assert!(counts.iter().all(|&c| c as usize <= runs.len()));
        // complementing any run after the first leaves the counts unchanged
        // (15 nodes: agreement is never exactly one half)
        let flipped: Vec<Vec<u8>> = runs
            .iter()
            .enumerate()
            .map(|(i, r)| if i > 0 && flip[i] { r.iter().map(|&s| 1 - s).collect() } else { r.clone() })
            .collect();
        prop_assert_eq!(aggregate_runs(&flipped), counts);
    }

    #[test]
    fn extremes_are_disjoint_tails(counts in prop::collection::vec(0u32..=20, 1..80), f in 0.01f64..=1.0) {
        let s = scores(counts, 20);
        let ex = select_extremes(&s, f).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for e in &ex {
            prop_assert!(seen.insert(e.node));
        }
        let low_max = ex.iter().filter(|e| e.tail == 0).map(|e| e.count).max();
        let high_min = ex.iter().filter(|e| e.tail == 1).map(|e| e.count).min();
        if let (Some(a), Some(b)) = (low_max, high_min) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn propagation_labels_everyone(counts in prop::collection::vec(0u32..=10, 4..60)) {
        let s = scores(counts, 10);
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by_key(|&v| s.counts[v]);
        let lo = order[0];
        let hi = *order.last().unwrap();
        prop_assume!(s.counts[lo] < s.counts[hi]);
        let seeds = BTreeMap::from([
            (s.users[lo].clone(), Community::NoVax),
            (s.users[hi].clone(), Community::ProVax),
        ]);
        let p = propagate_labels(&s, &seeds).unwrap();
        prop_assert_eq!(p.labeling.labels.len(), s.len());
        // labels are monotone in the score between the two seeds
        for v in 0..s.len() {
            let c = s.counts[v];
            if 2 * c < s.counts[lo] + s.counts[hi] {
                prop_assert_eq!(p.labeling.labels[v], Community::NoVax);
            } else if 2 * c > s.counts[lo] + s.counts[hi] {
                prop_assert_eq!(p.labeling.labels[v], Community::ProVax);
            }
        }
    }
}
