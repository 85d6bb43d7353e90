//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use osp_core::greedy::{
    check_all_monotone, Direction, EngineKind, HistorySpec, MissingPolicy, OrderedTableBuilder,
    PriorityTable,
};
use osp_core::instances::{
    members, next_profile, AgentDomain, FeasibleFamily, Orientation, SetSystemInstance, TypeProfile,
};
use osp_core::rational::int;
use osp_core::tree::{ImplementationTree, TreeSpec};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 2 or 3 agents, domains of 2 or 3 distinct values in 1..=6, either
/// orientation, and a random explicit family with at least two sets.
pub fn random_instance(rng: &mut ChaCha8Rng) -> SetSystemInstance {
    let n = rng.gen_range(2..=3usize);
    let domains = (0..n)
        .map(|_| {
            let size = rng.gen_range(2..=3usize);
            let mut vals: Vec<i64> = (1..=6).collect();
            vals.shuffle(rng);
            vals.truncate(size);
            vals.sort_unstable();
            AgentDomain::from_ints(&vals).unwrap()
        })
        .collect();
    let orientation = if rng.gen_bool(0.5) {
        Orientation::Cost
    } else {
        Orientation::Valuation
    };
    let mut masks: Vec<u64> = (0..1u64 << n).filter(|_| rng.gen_bool(0.5)).collect();
    while masks.len() < 2 {
        let m = rng.gen_range(0..1u64 << n);
        if !masks.contains(&m) {
            masks.push(m);
        }
    }
    masks.sort_unstable();
    let sets = masks.into_iter().map(members).collect();
    SetSystemInstance::new(domains, orientation, FeasibleFamily::Explicit { sets }).unwrap()
}

/// A random tree whose queries split the current types of a random agent
/// into 2 or 3 arbitrary parts and whose leaves pick random feasible sets.
pub fn random_tree(rng: &mut ChaCha8Rng, inst: &SetSystemInstance) -> ImplementationTree {
    let sub: Vec<Vec<usize>> = inst.radices().iter().map(|&m| (0..m).collect()).collect();
    let spec = spec_node(rng, inst, &sub, 0);
    ImplementationTree::from_spec(inst, &spec).unwrap()
}

fn spec_node(rng: &mut ChaCha8Rng, inst: &SetSystemInstance, sub: &[Vec<usize>], depth: usize) -> TreeSpec {
    let open: Vec<usize> = (0..sub.len()).filter(|&i| sub[i].len() > 1).collect();
    if open.is_empty() || rng.gen_bool((0.1 * depth as f64).min(0.9)) {
        let sets = inst.feasible_masks();
        return TreeSpec::Leaf(members(sets[rng.gen_range(0..sets.len())]));
    }
    let agent = *open.choose(rng).unwrap();
    let mut types = sub[agent].clone();
    types.shuffle(rng);
    let k = rng.gen_range(2..=types.len().min(3));
    let mut cuts: Vec<usize> = (1..types.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    cuts.push(types.len());
    let mut parts = Vec::new();
    let mut start = 0;
    for c in cuts {
        let mut part = types[start..c].to_vec();
        part.sort_unstable();
        start = c;
        let mut child_sub = sub.to_vec();
        child_sub[agent] = part.clone();
        let values = part.iter().map(|&t| inst.value(agent, t).clone()).collect();
        parts.push((values, spec_node(rng, inst, &child_sub, depth + 1)));
    }
    TreeSpec::query(agent, parts)
}

/// Preference order of an agent's types for a direction, best first.
pub fn preference(inst: &SetSystemInstance, agent: usize, dir: Direction) -> Vec<usize> {
    let order = inst.cost_order(agent);
    match dir {
        Direction::In => order,
        Direction::Out => order.into_iter().rev().collect(),
    }
}

/// A uniformly random interleaving of every (agent, direction) chain in
/// preference order, so the table is all-monotone by construction.
pub fn random_monotone_table(rng: &mut ChaCha8Rng, inst: &SetSystemInstance) -> PriorityTable {
    let mut chains: Vec<(usize, Direction, Vec<usize>)> = Vec::new();
    for a in 0..inst.n() {
        for d in [Direction::In, Direction::Out] {
            chains.push((a, d, preference(inst, a, d)));
        }
    }
    let mut pos = vec![0usize; chains.len()];
    let mut b = OrderedTableBuilder::new();
    loop {
        let remaining: Vec<usize> = (0..chains.len()).map(|c| chains[c].2.len() - pos[c]).collect();
        let total: usize = remaining.iter().sum();
        if total == 0 {
            break;
        }
        let mut pick = rng.gen_range(0..total);
        let c = remaining
            .iter()
            .position(|&r| {
                if pick < r {
                    true
                } else {
                    pick -= r;
                    false
                }
            })
            .unwrap();
        let (a, d, order) = &chains[c];
        let t = order[pos[c]];
        pos[c] += 1;
        b.push(*a, *d, inst.value(*a, t).clone(), HistorySpec::Any);
    }
    let table = b.finish(MissingPolicy::FloorMissing).unwrap();
    debug_assert!(check_all_monotone(inst, &table).unwrap().passed());
    table
}

/// Every type-index profile of `inst` in odometer order.
pub fn all_profiles(inst: &SetSystemInstance) -> Vec<Vec<usize>> {
    let radices = inst.radices();
    let mut p = vec![0; radices.len()];
    let mut out = Vec::new();
    loop {
        out.push(p.clone());
        if !next_profile(&mut p, &radices) {
            break;
        }
    }
    out
}

pub fn to_profile(inst: &SetSystemInstance, idx: &[usize]) -> TypeProfile {
    inst.profile_from_indices(idx)
}

pub fn engines() -> [EngineKind; 3] {
    [EngineKind::Forward, EngineKind::Reverse, EngineKind::TwoWay]
}

pub fn ints(v: &[i64]) -> Vec<osp_core::Rational> {
    v.iter().map(|&x| int(x)).collect()
}
