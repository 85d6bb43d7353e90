mod support;

use osp_core::analysis::{
    approximation_ratio, case_split_check, thm13_ratio_formula, RatioValue, CASE_SPLIT_IDS,
};
use osp_core::greedy::{make_paper_priority_table, CompiledTable, EngineKind, Runner};
use osp_core::instances::{make_paper_instance, Params};
use osp_core::ospgraph::{
    attach_payments, build_all_graphs, check_2cmon, check_cmon, compute_payments, DEFAULT_PROFILE_CAP,
};
use osp_core::rational::{frac, int};
use osp_core::tree::{binarize, build_tree_from_table, NodeKind};
use proptest::prelude::*;
use support::*;

fn engine() -> impl Strategy<Value = usize> {
    0..3usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratio_is_at_least_one_and_scan_is_exhaustive(seed in any::<u64>(), e in engine()) {
        let mut rng = rng(seed);
        let inst = random_instance(&mut rng);
        let table = random_monotone_table(&mut rng, &inst);
        let r = approximation_ratio(&inst, engines()[e], &table).unwrap();
        prop_assert!(r.worst_ratio >= RatioValue::Finite(int(1)));
        let product: u128 = inst.domains().iter().map(|d| d.len() as u128).product();
        prop_assert_eq!(r.profiles_scanned, product);
    }

    #[test]
    fn table_tree_runs_the_engine(seed in any::<u64>(), e in engine()) {
        let mut rng = rng(seed);
        let inst = random_instance(&mut rng);
        let table = random_monotone_table(&mut rng, &inst);
        let kind = engines()[e];
        let tree = build_tree_from_table(&inst, &table, kind).unwrap();
        let compiled = CompiledTable::compile(&inst, &table).unwrap();
        let mut runner = Runner::new(&inst, &compiled, kind);
        for idx in all_profiles(&inst) {
            let mask = runner.outcome(&idx).unwrap();
            let out = tree.run_mechanism(&to_profile(&inst, &idx)).unwrap();
            prop_assert_eq!(out.solution.mask(), mask);
        }
    }

    #[test]
    fn binarize_keeps_outcomes_and_arity(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let inst = random_instance(&mut rng);
        let tree = random_tree(&mut rng, &inst);
        let bin = binarize(&tree).unwrap();
        for idx in all_profiles(&inst) {
            let p = to_profile(&inst, &idx);
            prop_assert_eq!(tree.run_mechanism(&p).unwrap().solution, bin.run_mechanism(&p).unwrap().solution);
        }
        for id in bin.preorder() {
            if let NodeKind::Internal { parts, .. } = &bin.node(id).kind {
                prop_assert_eq!(parts.len(), 2);
            }
        }
    }

    #[test]
    fn negative_two_cycle_is_a_negative_cycle(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let inst = random_instance(&mut rng);
        let tree = random_tree(&mut rng, &inst);
        for g in build_all_graphs(&inst, &tree, DEFAULT_PROFILE_CAP).unwrap() {
            if !check_2cmon(&g).passed() {
                prop_assert!(!check_cmon(&g).passed());
            }
            prop_assert_eq!(check_cmon(&g).passed(), compute_payments(&g).is_ok());
        }
    }

    #[test]
    fn payments_satisfy_every_edge(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let inst = random_instance(&mut rng);
        let table = random_monotone_table(&mut rng, &inst);
        let tree = build_tree_from_table(&inst, &table, EngineKind::TwoWay).unwrap();
        let graphs = build_all_graphs(&inst, &tree, DEFAULT_PROFILE_CAP).unwrap();
        let priced = attach_payments(&inst, &tree, DEFAULT_PROFILE_CAP);
        for g in &graphs {
            let Ok(p) = compute_payments(g) else { continue };
            for e in g.edges() {
                prop_assert!(p[e.to] <= &p[e.from] + &e.weight);
            }
            // Leaf payments agree with the per-profile distances.
            let Ok(priced) = priced.as_ref() else { continue };
            for id in 0..g.profile_count() {
                let out = priced.run_mechanism(&g.profile(id)).unwrap();
                prop_assert_eq!(&out.payments.unwrap()[g.agent()], &p[id]);
            }
        }
    }

    #[test]
    fn forward_rule_matches_closed_form(
        k in 2usize..=5,
        (num, den) in (2i64..20).prop_flat_map(|d| (1..d, Just(d))),
    ) {
        let tmed = frac(num, den);
        let p: Params = [("k", int(k as i64)), ("tmin", int(0)), ("tmed", tmed.clone()), ("tmax", int(1))]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b))
            .collect();
        let inst = make_paper_instance("asym-knapsack", &p).unwrap();
        let table = make_paper_priority_table("alg5", &p).unwrap();
        let r = approximation_ratio(&inst, EngineKind::Forward, &table).unwrap();
        let want = thm13_ratio_formula(k, &int(0), &tmed, &int(1)).unwrap();
        prop_assert_eq!(r.worst_ratio, RatioValue::Finite(want));
    }
}

#[test]
fn case_splits_cover_every_ordering() {
    for id in CASE_SPLIT_IDS {
        let r = case_split_check(id, &Params::new()).unwrap();
        assert!(r.orderings_checked > 0, "{id}");
        assert!(r.uncovered.is_empty(), "{id}: {:?}", r.uncovered);
    }
}
