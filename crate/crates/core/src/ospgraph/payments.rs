use num_traits::Zero;

use super::cycles::{distances, witness};
use super::{build_all_graphs, check_domains, tree_outcomes, OspGraph};
use crate::error::{Error, Result};
use crate::instances::{next_profile, SetSystemInstance, TypeProfile};
use crate::rational::Rational;
use crate::tree::{ImplementationTree, NodeId, NodeKind};

/// Per-profile transfers to the graph's agent: shortest-path distances from
/// a virtual source, which meet every edge constraint with equality or slack.
pub fn compute_payments(graph: &OspGraph) -> Result<Vec<Rational>> {
    distances(graph).map_err(|c| Error::NegativeCycle(Box::new(witness(graph, &c))))
}

/// `payments[agent][profile id]` for every agent.
pub fn compute_all_payments(
    instance: &SetSystemInstance,
    tree: &ImplementationTree,
    cap: u128,
) -> Result<Vec<Vec<Rational>>> {
    build_all_graphs(instance, tree, cap)?
        .iter()
        .map(compute_payments)
        .collect()
}

/// Copy of `tree` whose leaves carry the shortest-path payments.
///
/// Distances depend only on incoming edges, and profiles sharing a leaf have
/// the same incoming edges, so each leaf gets a single payment per agent.
pub fn attach_payments(
    instance: &SetSystemInstance,
    tree: &ImplementationTree,
    cap: u128,
) -> Result<ImplementationTree> {
    let payments = compute_all_payments(instance, tree, cap)?;
    let radices = tree.radices();
    let mut out = tree.clone();
    let mut p = vec![0; radices.len()];
    let mut id = 0usize;
    let mut assigned = std::collections::HashMap::new();
    loop {
        let leaf = tree.leaf_for(&p)?;
        let values: Vec<Rational> = payments.iter().map(|per| per[id].clone()).collect();
        if let Some(prev) = assigned.insert(leaf, values.clone()) {
            debug_assert_eq!(prev, values, "payments differ within leaf {leaf}");
        }
        id += 1;
        if !next_profile(&mut p, &radices) {
            break;
        }
    }
    for (leaf, values) in assigned {
        out.set_leaf_payments(leaf, values)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct OracleViolation {
    pub node: NodeId,
    pub agent: usize,
    /// Worst truthful profile for the agent's type at the node.
    pub truthful: TypeProfile,
    /// Best profile reachable by answering in another part.
    pub deviation: TypeProfile,
    pub truthful_utility: Rational,
    pub deviation_utility: Rational,
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub violation: Option<OracleViolation>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks the OSP definition directly: at every node `u` and every type `t`
/// of the queried agent in `u`'s domain, the worst utility of answering
/// truthfully is at least the best utility of any profile through `u` that
/// answers in another part, all evaluated at type `t`.
///
/// `payments[agent][profile id]` are transfers to the agent, with profile
/// ids in odometer order.
pub fn brute_force_osp_oracle(
    instance: &SetSystemInstance,
    tree: &ImplementationTree,
    payments: &[Vec<Rational>],
) -> Result<OracleReport> {
    check_domains(instance, tree)?;
    let outcomes = tree_outcomes(tree, u128::MAX)?;
    let radices = tree.radices();
    if payments.len() != tree.n() || payments.iter().any(|p| p.len() != outcomes.len()) {
        return Err(Error::InvalidParams(
            "payments must cover every agent and profile".into(),
        ));
    }
    let id_of = |p: &[usize]| crate::instances::encode_profile(p, &radices) as usize;
    for u in tree.preorder() {
        let node = tree.node(u);
        let NodeKind::Internal { agent, parts, .. } = &node.kind else {
            continue;
        };
        let i = *agent;
        let lens: Vec<usize> = node.subdomain.iter().map(Vec::len).collect();
        let mut through = Vec::new();
        let mut pick = vec![0; lens.len()];
        loop {
            let p: Vec<usize> = pick.iter().enumerate().map(|(j, &k)| node.subdomain[j][k]).collect();
            through.push(p);
            if !next_profile(&mut pick, &lens) {
                break;
            }
        }
        let part_of = |t: usize| parts.iter().position(|q| q.binary_search(&t).is_ok());
        for &t in &node.subdomain[i] {
            let c = instance.orientation().cost_key(instance.value(i, t));
            let utility = |p: &[usize]| {
                let id = id_of(p);
                let f = outcomes[id] & (1u64 << i) != 0;
                let pay = &payments[i][id];
                if f {
                    pay - &c
                } else {
                    pay.clone()
                }
            };
            let own = part_of(t);
            let mut worst: Option<(Rational, &Vec<usize>)> = None;
            let mut best: Option<(Rational, &Vec<usize>)> = None;
            for p in &through {
                let v = utility(p);
                if p[i] == t {
                    if worst.as_ref().is_none_or(|(w, _)| v < *w) {
                        worst = Some((v, p));
                    }
                } else if part_of(p[i]) != own && best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, p));
                }
            }
            if let (Some((w, wp)), Some((b, bp))) = (worst, best) {
                if w < b {
                    let profile = |p: &[usize]| instance.profile_from_indices(p);
                    return Ok(OracleReport {
                        violation: Some(OracleViolation {
                            node: u,
                            agent: i,
                            truthful: profile(wp),
                            deviation: profile(bp),
                            truthful_utility: w,
                            deviation_utility: b,
                        }),
                    });
                }
            }
        }
    }
    Ok(OracleReport { violation: None })
}

/// All-zero payments for every agent and profile.
pub fn zero_payments(tree: &ImplementationTree) -> Vec<Vec<Rational>> {
    let total: usize = tree.radices().iter().product();
    vec![vec![Rational::zero(); total]; tree.n()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_paper_instance, Params};
    use crate::ospgraph::tests::one_agent;
    use crate::ospgraph::{build_osp_graph, DEFAULT_PROFILE_CAP};
    use crate::rational::int;
    use crate::tree::{four_type_violation, make_paper_tree};

    #[test]
    fn two_type_payments_by_hand() {
        // f(1) = 1, f(2) = 0: constraints p(2) <= p(1) - 1 and p(1) <= p(2) + 2.
        let (inst, tree) = one_agent(true);
        let g = build_osp_graph(&inst, &tree, 0).unwrap();
        let p = compute_payments(&g).unwrap();
        assert_eq!(p, vec![int(0), int(-1)]);
        assert!(brute_force_osp_oracle(&inst, &tree, &[p]).unwrap().passed());
    }

    #[test]
    fn zero_payments_fail_when_selection_varies() {
        let (inst, tree) = one_agent(true);
        let r = brute_force_osp_oracle(&inst, &tree, &zero_payments(&tree)).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn negative_cycle_blocks_payments() {
        let (inst, tree) = four_type_violation().unwrap();
        let g = build_osp_graph(&inst, &tree, 0).unwrap();
        assert!(matches!(compute_payments(&g), Err(Error::NegativeCycle(_))));
    }

    #[test]
    fn auction_tree_payments_at_leaves() {
        let inst = make_paper_instance("ca-appendixB", &Params::new()).unwrap();
        let tree = make_paper_tree("ca-appendixB", &inst).unwrap();
        let paid = attach_payments(&inst, &tree, DEFAULT_PROFILE_CAP).unwrap();
        for leaf in paid.leaves() {
            let NodeKind::Leaf { payments, .. } = &paid.node(leaf).kind else {
                unreachable!()
            };
            assert_eq!(payments.as_ref().unwrap().len(), 3);
        }
        let all = compute_all_payments(&inst, &tree, DEFAULT_PROFILE_CAP).unwrap();
        assert!(brute_force_osp_oracle(&inst, &tree, &all).unwrap().passed());
    }
}
