mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use superhighway::construct::{
    identify_candidates, superhighway_weight, ConstructOptions, SuperhighwayPlan,
};
use superhighway::graph::stats;
use superhighway::{
    construct_superhighway, merge_highway, single_structure, ConstructionParams, DomainTag, NodeId,
};

use common::{check_construction, toy_system};

#[test]
fn random_toy_systems_match_brute_force() {
    for seed in 0..50 {
        let raw = toy_system(seed);
        for (a, b) in [(1, 0.5), (3, 1.0), (5, 1.5), (8, 0.7), (10, 1.2)] {
            if let Err(msg) = check_construction(&raw, a, b) {
                panic!("seed {seed}: {msg}");
            }
        }
    }
}

#[test]
fn plan_reuse_equals_direct_construction() {
    for seed in 100..120 {
        let raw = toy_system(seed);
        if raw.shared().is_empty() {
            continue;
        }
        let sys = raw.build().unwrap();
        let hw = merge_highway(&sys);
        for a in [0.1, 0.5, 1.0] {
            let plan = SuperhighwayPlan::new(&sys, a, &ConstructOptions::default()).unwrap();
            for b in [0.5, 1.0, 1.5] {
                let direct = construct_superhighway(
                    &sys,
                    &ConstructionParams::new(a, b).unwrap(),
                    &ConstructOptions::default(),
                )
                .unwrap();
                assert_eq!(plan.realize(&hw, b).unwrap(), direct);
            }
        }
    }
}

fn user_user_weights(s: &superhighway::TrainingStructure) -> BTreeMap<(NodeId, NodeId), f64> {
    let g = s.graph();
    g.edges()
        .filter(|&(a, b, _)| g.node(a).is_user() && g.node(b).is_user())
        .map(|(a, b, w)| ((g.node(a).clone(), g.node(b).clone()), w))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn candidates_shrink_as_alpha_grows(seed in any::<u64>(), a1 in 1u32..=10, a2 in 1u32..=10) {
        let raw = toy_system(seed);
        prop_assume!(!raw.shared().is_empty());
        let sys = raw.build().unwrap();
        let (lo, hi) = (a1.min(a2) as f64 / 10.0, a1.max(a2) as f64 / 10.0);
        for tag in [DomainTag::Source, DomainTag::Target] {
            let wide = identify_candidates(&sys, tag, lo).unwrap();
            let narrow = identify_candidates(&sys, tag, hi).unwrap();
            for u in &narrow.users {
                prop_assert!(wide.contains(u));
            }
        }
    }

    #[test]
    fn weights_are_exactly_linear_in_beta(seed in any::<u64>(), a in 1u32..=10, b in 0u32..=30) {
        let raw = toy_system(seed);
        prop_assume!(!raw.shared().is_empty());
        let sys = raw.build().unwrap();
        let alpha = a as f64 / 10.0;
        let beta = b as f64 / 10.0;
        let unit = user_user_weights(&construct_superhighway(&sys, &ConstructionParams::new(alpha, 1.0).unwrap(), &ConstructOptions::default()).unwrap());
        let scaled = user_user_weights(&construct_superhighway(&sys, &ConstructionParams::new(alpha, beta).unwrap(), &ConstructOptions::default()).unwrap());
        if beta == 0.0 {
            prop_assert!(scaled.is_empty());
        } else {
            prop_assert_eq!(unit.len(), scaled.len());
            for (k, w) in &unit {
                prop_assert_eq!(scaled[k], beta * w);
                prop_assert_eq!(w.fract(), 0.0);
            }
        }
    }

    #[test]
    fn superhighway_weight_matches_pair_lookup(seed in any::<u64>()) {
        let raw = toy_system(seed);
        let sys = raw.build().unwrap();
        for (s, s_items) in &raw.source {
            for (t, t_items) in &raw.target {
                let w = superhighway_weight(&sys, &NodeId::user(DomainTag::Source, s), &NodeId::user(DomainTag::Target, t), 1.5).unwrap();
                prop_assert_eq!(w, 1.5 * s_items.intersection(t_items).count() as f64);
            }
        }
    }

    #[test]
    fn structures_are_well_formed(seed in any::<u64>(), a in 1u32..=10) {
        let raw = toy_system(seed);
        prop_assume!(!raw.shared().is_empty());
        let sys = raw.build().unwrap();
        let single = single_structure(&sys);
        let hw = merge_highway(&sys);
        let sh = construct_superhighway(&sys, &ConstructionParams::new(a as f64 / 10.0, 1.0).unwrap(), &ConstructOptions::default()).unwrap();
        for s in [&single, &hw, &sh] {
            let g = s.graph();
            let degree_sum: usize = (0..g.node_count()).map(|v| g.degree(v)).sum();
            prop_assert_eq!(degree_sum, 2 * g.edge_count());
            for (x, y, w) in g.edges() {
                prop_assert!(x != y && w > 0.0 && w.is_finite());
                prop_assert!(g.has_edge(y, x));
            }
        }
        prop_assert_eq!(hw.graph().edge_count(), sys.source().edge_count() + sys.target().edge_count());
        prop_assert_eq!(stats(single.graph()).user_user_edges, 0);
        prop_assert_eq!(stats(hw.graph()).user_user_edges, 0);
        prop_assert_eq!(
            sh.graph().edge_count(),
            hw.graph().edge_count() + sh.provenance().materialized_edges.unwrap() as usize
        );
        // Items present in both domains appear once in the union.
        let items = hw.graph().namespace_range(superhighway::Namespace::Item).len();
        prop_assert_eq!(items, sys.source().items().len() + sys.target().items().len() - sys.shared_items().len());
    }
}
