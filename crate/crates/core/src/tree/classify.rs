use std::collections::HashMap;

use super::{ImplementationTree, NodeId, NodeKind, QueryKind};
use crate::error::{Error, Result};
use crate::greedy::Direction;
use crate::instances::Orientation;

/// Outcome class of one type of an agent at a node, over all profiles in the
/// node's subtree where the agent holds that type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TypeClass {
    /// The agent is never selected.
    Always0,
    /// The agent is always selected.
    Always1,
    Unclear,
}

impl TypeClass {
    fn from_bits(bits: u8) -> Self {
        match bits {
            0b01 => TypeClass::Always0,
            0b10 => TypeClass::Always1,
            _ => TypeClass::Unclear,
        }
    }
}

/// Memoized outcome reachability over one tree.
pub struct Classifier<'a> {
    tree: &'a ImplementationTree,
    memo: HashMap<(NodeId, usize, usize), u8>,
}

impl<'a> Classifier<'a> {
    pub fn new(tree: &'a ImplementationTree) -> Self {
        Classifier {
            tree,
            memo: HashMap::new(),
        }
    }

    /// bit 0: some leaf below excludes `agent`; bit 1: some leaf includes it.
    fn reach(&mut self, u: NodeId, agent: usize, t: usize) -> u8 {
        if let Some(&b) = self.memo.get(&(u, agent, t)) {
            return b;
        }
        let bits = match &self.tree.node(u).kind {
            NodeKind::Leaf { solution, .. } => {
                if solution & (1u64 << agent) != 0 {
                    0b10
                } else {
                    0b01
                }
            }
            NodeKind::Internal { agent: j, parts, children } => {
                if *j == agent {
                    let pos = parts
                        .iter()
                        .position(|p| p.binary_search(&t).is_ok())
                        .expect("type lies in the node's subdomain");
                    self.reach(children[pos], agent, t)
                } else {
                    let children = children.clone();
                    children.iter().fold(0, |acc, &c| acc | self.reach(c, agent, t))
                }
            }
        };
        self.memo.insert((u, agent, t), bits);
        bits
    }

    pub fn class(&mut self, u: NodeId, agent: usize, t: usize) -> TypeClass {
        TypeClass::from_bits(self.reach(u, agent, t))
    }

    /// Classes of `types`, in the given order.
    pub fn classes(&mut self, u: NodeId, agent: usize, types: &[usize]) -> Vec<TypeClass> {
        types.iter().map(|&t| self.class(u, agent, t)).collect()
    }

    /// In cost order (best first), all types but at most one are covered by
    /// a leading run of `Always1` and a trailing run of `Always0`.
    pub fn revealable_on(&mut self, u: NodeId, agent: usize, types: &[usize]) -> bool {
        let order = cost_sorted(self.tree.orientation(), types);
        let classes = self.classes(u, agent, &order);
        let lead = classes.iter().take_while(|&&c| c == TypeClass::Always1).count();
        let trail = classes.iter().rev().take_while(|&&c| c == TypeClass::Always0).count();
        lead + trail + 1 >= classes.len()
    }

    pub fn is_revealable(&mut self, u: NodeId, agent: usize) -> bool {
        let types = self.tree.node(u).subdomain[agent].clone();
        self.revealable_on(u, agent, &types)
    }

    /// Class shared by every type of `part`, if any.
    pub fn homogeneous(&mut self, u: NodeId, agent: usize, part: &[usize]) -> Option<TypeClass> {
        let classes = self.classes(u, agent, part);
        let first = *classes.first()?;
        (first != TypeClass::Unclear && classes.iter().all(|&c| c == first)).then_some(first)
    }
}

/// `types` reordered best cost first.
pub(crate) fn cost_sorted(orientation: Orientation, types: &[usize]) -> Vec<usize> {
    let mut v = types.to_vec();
    match orientation {
        Orientation::Cost => v.sort_unstable(),
        Orientation::Valuation => v.sort_unstable_by(|a, b| b.cmp(a)),
    }
    v
}

/// Classes of every type of `agent` at node `u`, ascending by type index.
pub fn classify_types(tree: &ImplementationTree, u: NodeId, agent: usize) -> Vec<(usize, TypeClass)> {
    let types = tree.node(u).subdomain[agent].clone();
    let mut c = Classifier::new(tree);
    types.iter().map(|&t| (t, c.class(u, agent, t))).collect()
}

/// Classes of every type of `agent` at the root.
pub fn classify_agent(tree: &ImplementationTree, agent: usize) -> Vec<(usize, TypeClass)> {
    classify_types(tree, tree.root(), agent)
}

pub fn is_revealable(tree: &ImplementationTree, u: NodeId, agent: usize) -> bool {
    Classifier::new(tree).is_revealable(u, agent)
}

/// First node, in preorder, holding a split that has no homogeneous side
/// and is not revealable on its own domain. A k-ary query is read as the
/// chain `P1 | P2 ∪ .. ∪ Pk`, `P2 | P3 ∪ .. ∪ Pk`, and so on.
pub fn check_admissible_queries(tree: &ImplementationTree) -> Option<NodeId> {
    let mut c = Classifier::new(tree);
    for u in tree.preorder() {
        let NodeKind::Internal { agent, parts, .. } = &tree.node(u).kind else {
            continue;
        };
        for j in 0..parts.len() - 1 {
            let head = &parts[j];
            let mut tail: Vec<usize> = parts[j + 1..].iter().flatten().copied().collect();
            tail.sort_unstable();
            let homogeneous =
                c.homogeneous(u, *agent, head).is_some() || c.homogeneous(u, *agent, &tail).is_some();
            let mut domain = head.clone();
            domain.extend(&tail);
            if !homogeneous && !c.revealable_on(u, *agent, &domain) {
                return Some(u);
            }
        }
    }
    None
}

/// Direction of an extremal query: `In` separates the cost-best type,
/// `Out` the cost-worst. Queries on two types are ambiguous.
pub(crate) fn query_direction(tree: &ImplementationTree, u: NodeId) -> Option<Direction> {
    let node = tree.node(u);
    let agent = node.queried_agent()?;
    if node.subdomain[agent].len() <= 2 {
        return None;
    }
    let low_is_best = tree.orientation() == Orientation::Cost;
    match tree.query_kind(u)? {
        QueryKind::Bottom if low_is_best => Some(Direction::In),
        QueryKind::Bottom => Some(Direction::Out),
        QueryKind::Top if low_is_best => Some(Direction::Out),
        QueryKind::Top => Some(Direction::In),
        QueryKind::General => None,
    }
}

/// On an extremal tree, reports the first node where an agent's query
/// direction differs from its last definite direction on the path while the
/// agent is not revealable there.
pub fn check_weak_interleaving(tree: &ImplementationTree) -> Result<Option<NodeId>> {
    if let Some(u) = tree.first_non_extremal() {
        return Err(Error::NotExtremal(u));
    }
    let mut c = Classifier::new(tree);
    let mut stack = vec![(tree.root(), vec![None; tree.n()])];
    while let Some((u, last)) = stack.pop() {
        let NodeKind::Internal { agent, children, .. } = &tree.node(u).kind else {
            continue;
        };
        let mut next = last.clone();
        if let Some(dir) = query_direction(tree, u) {
            if last[*agent].is_some_and(|d| d != dir) && !c.is_revealable(u, *agent) {
                return Ok(Some(u));
            }
            next[*agent] = Some(dir);
        }
        for &ch in children.iter().rev() {
            stack.push((ch, next.clone()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_paper_instance, Params};
    use crate::tree::make_paper_tree;

    #[test]
    fn auction_tree_classes_at_root() {
        let inst = make_paper_instance("ca-appendixB", &Params::new()).unwrap();
        let tree = make_paper_tree("ca-appendixB", &inst).unwrap();
        // Bidder 0 at tmax always wins; at 0 it can still win with bidder 1.
        let classes = classify_agent(&tree, 0);
        assert_eq!(classes[2].1, TypeClass::Always1);
        assert_eq!(classes[0].1, TypeClass::Unclear);
        assert!(check_admissible_queries(&tree).is_none());
    }

    #[test]
    fn revealable_pattern() {
        let inst = make_paper_instance("ca-appendixB", &Params::new()).unwrap();
        let tree = make_paper_tree("ca-appendixB", &inst).unwrap();
        // At the root bidder 2 at tmax can still lose to bidder 0 at tmax.
        let cl = classify_agent(&tree, 2);
        assert_eq!(cl[0].1, TypeClass::Always0);
        assert_eq!(cl[2].1, TypeClass::Unclear);
        assert!(!is_revealable(&tree, tree.root(), 2));
        // Once bidders 0 and 1 have denied tmax, bidder 2 at tmax always wins.
        let u = tree
            .preorder()
            .into_iter()
            .find(|&u| tree.node(u).queried_agent() == Some(2))
            .unwrap();
        assert_eq!(classify_types(&tree, u, 2)[2].1, TypeClass::Always1);
        assert!(is_revealable(&tree, u, 2));
    }
}
