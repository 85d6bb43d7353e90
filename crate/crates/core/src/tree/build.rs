use super::{check_cap, ImplementationTree, NodeId, NodeKind, TreeNode, DEFAULT_NODE_CAP};
use crate::error::{Error, Result};
use crate::greedy::{check_all_monotone, CompiledTable, Direction, EngineKind, MissingPolicy, PriorityTable, RankKey};
use crate::instances::{AgentMask, SetSystemInstance};
use crate::rational::format_exact;

/// Engine state shared by every profile reaching a node.
#[derive(Clone)]
struct State {
    subdomain: Vec<Vec<usize>>,
    alive: Vec<bool>,
    active: AgentMask,
    infeasible: AgentMask,
    history: Vec<(usize, usize)>,
}

struct Builder<'a> {
    instance: &'a SetSystemInstance,
    table: CompiledTable,
    kind: EngineKind,
    tree: ImplementationTree,
    cap: usize,
}

/// Builds the implementation tree of a greedy engine run under `table`.
///
/// Each node holds the engine state common to its profiles. The highest
/// entry over all candidate agents and their remaining types is separated
/// by a query `{t*}` against the rest; on `{t*}` the engine acts on it, on
/// the rest `t*` is discarded. An agent whose winning direction cannot be
/// committed joins the infeasible set without a query, unless the table has
/// exact-history entries, where the moment it leaves can change later
/// lookups. Leaves are reached when one feasible set survives, so every
/// profile reaches the leaf holding its engine outcome.
pub fn build_tree_from_table(
    instance: &SetSystemInstance,
    table: &PriorityTable,
    kind: EngineKind,
) -> Result<ImplementationTree> {
    build_tree_from_table_with_cap(instance, table, kind, DEFAULT_NODE_CAP)
}

/// `build_tree_from_table` with an explicit bound on the node count.
pub fn build_tree_from_table_with_cap(
    instance: &SetSystemInstance,
    table: &PriorityTable,
    kind: EngineKind,
    node_cap: usize,
) -> Result<ImplementationTree> {
    let report = check_all_monotone(instance, table)?;
    if let Some(v) = report.violation {
        return Err(Error::MonotonicityViolation(v.to_string()));
    }
    let n = instance.n();
    let mut b = Builder {
        instance,
        table: CompiledTable::compile(instance, table)?,
        kind,
        tree: ImplementationTree::empty(instance.domains().to_vec(), instance.orientation()),
        cap: node_cap,
    };
    let state = State {
        subdomain: instance.radices().iter().map(|&m| (0..m).collect()).collect(),
        alive: vec![true; instance.feasible_masks().len()],
        active: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
        infeasible: 0,
        history: Vec::new(),
    };
    let root = b.node(state)?;
    b.tree.set_root(root);
    Ok(b.tree)
}

impl Builder<'_> {
    fn uses(&self, dir: Direction) -> bool {
        match self.kind {
            EngineKind::TwoWay => true,
            EngineKind::Forward => dir == Direction::In,
            EngineKind::Reverse => dir == Direction::Out,
        }
    }

    fn node(&mut self, mut state: State) -> Result<NodeId> {
        loop {
            check_cap(self.tree.len(), self.cap)?;
            let sets = self.instance.feasible_masks();
            let survivors: Vec<usize> = (0..sets.len()).filter(|&s| state.alive[s]).collect();
            if survivors.len() == 1 {
                return Ok(self.tree.push(TreeNode {
                    subdomain: state.subdomain,
                    kind: NodeKind::Leaf {
                        solution: sets[survivors[0]],
                        payments: None,
                    },
                }));
            }
            let candidates = state.active & !state.infeasible;
            if candidates == 0 {
                return Err(Error::NoProgress(survivors.len()));
            }
            let mut best: Option<(RankKey, usize, Direction, usize)> = None;
            for agent in crate::instances::members(candidates) {
                for dir in [Direction::In, Direction::Out] {
                    if !self.uses(dir) {
                        continue;
                    }
                    for &t in &state.subdomain[agent] {
                        let key = self.table.key(agent, dir, t, Some(&state.history));
                        if !key.is_defined() && self.table.policy() == MissingPolicy::FailOnMissing {
                            return Err(Error::MissingPriority {
                                agent,
                                direction: dir,
                                type_value: format_exact(self.instance.value(agent, t)),
                            });
                        }
                        if best.is_none_or(|(k, ..)| key > k) {
                            best = Some((key, agent, dir, t));
                        }
                    }
                }
            }
            let (_, agent, dir, t) = best.expect("candidates is nonempty");
            let bit = 1u64 << agent;
            let keeps = |s: AgentMask| match dir {
                Direction::In => s & bit != 0,
                Direction::Out => s & bit == 0,
            };
            let possible = sets.iter().zip(&state.alive).any(|(&s, &a)| a && keeps(s));
            // Without history-dependent entries an agent that cannot be
            // committed is dropped for every type alike, so no query is needed.
            let skip = !possible && !self.table.has_exact_entries();
            if !skip && state.subdomain[agent].len() >= 2 {
                return self.query(state, agent, t);
            }
            if possible {
                for (s, a) in sets.iter().zip(state.alive.iter_mut()) {
                    *a = *a && keeps(*s);
                }
                state.active &= !bit;
                let pos = state.history.partition_point(|&(a, _)| a < agent);
                state.history.insert(pos, (agent, t));
            } else {
                state.infeasible |= bit;
            }
        }
    }

    fn query(&mut self, state: State, agent: usize, t: usize) -> Result<NodeId> {
        let rest: Vec<usize> = state.subdomain[agent].iter().copied().filter(|&x| x != t).collect();
        let single = vec![t];
        let parts = if t < rest[0] { vec![single, rest] } else { vec![rest, single] };
        let id = self.tree.push(TreeNode {
            subdomain: state.subdomain.clone(),
            kind: NodeKind::Internal {
                agent,
                parts: parts.clone(),
                children: Vec::new(),
            },
        });
        let mut children = Vec::with_capacity(2);
        for part in parts {
            let mut s = state.clone();
            s.subdomain[agent] = part;
            children.push(self.node(s)?);
        }
        self.tree.set_children(id, children);
        Ok(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{make_paper_priority_table, Runner};
    use crate::instances::{make_paper_instance, next_profile, Params};

    fn agrees(instance: &SetSystemInstance, table: &PriorityTable, kind: EngineKind) {
        let tree = build_tree_from_table(instance, table, kind).unwrap();
        tree.validate().unwrap();
        assert!(tree.is_extremal());
        assert_eq!(tree.leaf_profile_total(), instance.profile_count());
        let compiled = CompiledTable::compile(instance, table).unwrap();
        let mut runner = Runner::new(instance, &compiled, kind);
        let radices = instance.radices();
        let mut p = vec![0; radices.len()];
        loop {
            let leaf = tree.leaf_for(&p).unwrap();
            assert_eq!(tree.solution_at(leaf), runner.outcome(&p).unwrap(), "profile {p:?}");
            if !next_profile(&mut p, &radices) {
                break;
            }
        }
    }

    #[test]
    fn tree_matches_engine_on_paper_tables() {
        let sc = make_paper_instance("sc-parallel", &Params::new()).unwrap();
        let t8 = make_paper_priority_table("thm8-two-way", &Params::new()).unwrap();
        agrees(&sc, &t8, EngineKind::TwoWay);
        let sw = make_paper_instance("sw-parallel", &Params::new()).unwrap();
        let t9 = make_paper_priority_table("thm9-ordering", &Params::new()).unwrap();
        agrees(&sw, &t9, EngineKind::TwoWay);
        let dc = make_paper_instance("dc-gap", &Params::new()).unwrap();
        let a4 = make_paper_priority_table("alg4", &Params::new()).unwrap();
        agrees(&dc, &a4, EngineKind::TwoWay);
        let ak = make_paper_instance("asym-knapsack", &Params::new()).unwrap();
        let a5 = make_paper_priority_table("alg5", &Params::new()).unwrap();
        agrees(&ak, &a5, EngineKind::Forward);
    }

    #[test]
    fn non_monotone_table_is_rejected() {
        let dc = make_paper_instance("dc-gap", &Params::new()).unwrap();
        let mut b = crate::greedy::OrderedTableBuilder::new();
        let lo = dc.value(0, 0).clone();
        let hi = dc.value(0, dc.domain(0).len() - 1).clone();
        let (better, worse) = if dc.orientation().improves(&lo, &hi) { (lo, hi) } else { (hi, lo) };
        b.push(0, Direction::In, worse, crate::greedy::HistorySpec::Any);
        b.push(0, Direction::In, better, crate::greedy::HistorySpec::Any);
        let table = b.finish(MissingPolicy::FloorMissing).unwrap();
        let r = build_tree_from_table(&dc, &table, EngineKind::TwoWay);
        assert!(matches!(r, Err(Error::MonotonicityViolation(_))));
    }
}
