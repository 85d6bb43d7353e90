//! Outcome-preserving rewrites. Every rewrite maps each profile to the same
//! leaf outcome as the input tree.

use super::classify::{cost_sorted, Classifier, TypeClass};
use super::{check_cap, ImplementationTree, NodeId, NodeKind, TreeNode, DEFAULT_NODE_CAP};
use crate::error::{Error, Result};

/// Replaces every k-ary query `P1 | .. | Pk` by the chain
/// `P1 | P2 ∪ .. ∪ Pk`, `P2 | P3 ∪ .. ∪ Pk`, ...
pub fn binarize(tree: &ImplementationTree) -> Result<ImplementationTree> {
    let mut dst = ImplementationTree::empty(tree.domains().to_vec(), tree.orientation());
    let root = binarize_node(&mut dst, tree, tree.root(), DEFAULT_NODE_CAP)?;
    dst.set_root(root);
    Ok(dst)
}

fn binarize_node(
    dst: &mut ImplementationTree,
    src: &ImplementationTree,
    id: NodeId,
    cap: usize,
) -> Result<NodeId> {
    check_cap(dst.len(), cap)?;
    let node = src.node(id);
    match &node.kind {
        NodeKind::Leaf { .. } => Ok(dst.push(node.clone())),
        NodeKind::Internal { agent, parts, children } => {
            binarize_chain(dst, src, &node.subdomain, *agent, parts, children, cap)
        }
    }
}

fn binarize_chain(
    dst: &mut ImplementationTree,
    src: &ImplementationTree,
    subdomain: &[Vec<usize>],
    agent: usize,
    parts: &[Vec<usize>],
    children: &[NodeId],
    cap: usize,
) -> Result<NodeId> {
    if parts.len() == 1 {
        return binarize_node(dst, src, children[0], cap);
    }
    let mut rest: Vec<usize> = parts[1..].iter().flatten().copied().collect();
    rest.sort_unstable();
    let me = dst.push(TreeNode {
        subdomain: subdomain.to_vec(),
        kind: NodeKind::Internal {
            agent,
            parts: vec![parts[0].clone(), rest.clone()],
            children: Vec::new(),
        },
    });
    let head = binarize_node(dst, src, children[0], cap)?;
    let mut sub = subdomain.to_vec();
    sub[agent] = rest;
    let tail = binarize_chain(dst, src, &sub, agent, &parts[1..], &children[1..], cap)?;
    dst.set_children(me, vec![head, tail]);
    Ok(me)
}

/// Copies `src` with the node `target` replaced by whatever `emit` builds.
fn rewrite_at(
    src: &ImplementationTree,
    target: NodeId,
    cap: usize,
    emit: impl FnOnce(&mut ImplementationTree) -> Result<NodeId>,
) -> Result<ImplementationTree> {
    let mut dst = ImplementationTree::empty(src.domains().to_vec(), src.orientation());
    let mut emit = Some(emit);
    let root = copy_with(&mut dst, src, src.root(), target, cap, &mut emit)?;
    dst.set_root(root);
    Ok(dst)
}

fn copy_with<F: FnOnce(&mut ImplementationTree) -> Result<NodeId>>(
    dst: &mut ImplementationTree,
    src: &ImplementationTree,
    id: NodeId,
    target: NodeId,
    cap: usize,
    emit: &mut Option<F>,
) -> Result<NodeId> {
    check_cap(dst.len(), cap)?;
    if id == target {
        let f = emit.take().expect("target appears once");
        return f(dst);
    }
    let node = src.node(id);
    let me = dst.push(TreeNode {
        subdomain: node.subdomain.clone(),
        kind: match &node.kind {
            NodeKind::Leaf { .. } => node.kind.clone(),
            NodeKind::Internal { agent, parts, .. } => NodeKind::Internal {
                agent: *agent,
                parts: parts.clone(),
                children: Vec::new(),
            },
        },
    });
    if let NodeKind::Internal { children, .. } = &node.kind {
        let mut ids = Vec::with_capacity(children.len());
        for &c in children {
            ids.push(copy_with(dst, src, c, target, cap, emit)?);
        }
        dst.set_children(me, ids);
    }
    Ok(me)
}

/// A chain of extremal queries on `agent` starting at node `u` of `src`.
/// Each entry of `peels` is split off in turn; its branch is `source(p)`
/// restricted to `agent = p`. Peeling stops once one type is left, and the
/// remaining types get `source` of their first member restricted to them.
struct Chain<'a, F: Fn(usize) -> NodeId> {
    src: &'a ImplementationTree,
    u: NodeId,
    agent: usize,
    peels: Vec<usize>,
    source: F,
    cap: usize,
}

impl<F: Fn(usize) -> NodeId> Chain<'_, F> {
    fn build(&self, dst: &mut ImplementationTree, idx: usize, remaining: Vec<usize>) -> Result<NodeId> {
        check_cap(dst.len(), self.cap)?;
        let mut allowed = self.src.node(self.u).subdomain.clone();
        if remaining.len() == 1 || idx == self.peels.len() {
            let from = (self.source)(remaining[0]);
            allowed[self.agent] = remaining;
            return dst.copy_restricted(self.src, from, &allowed, self.cap);
        }
        let p = self.peels[idx];
        let rest: Vec<usize> = remaining.iter().copied().filter(|&x| x != p).collect();
        debug_assert!(p < rest[0] || p > rest[rest.len() - 1]);
        let single = vec![p];
        let single_first = p < rest[0];
        allowed[self.agent] = remaining;
        let me = dst.push(TreeNode {
            subdomain: allowed.clone(),
            kind: NodeKind::Internal {
                agent: self.agent,
                parts: if single_first {
                    vec![single.clone(), rest.clone()]
                } else {
                    vec![rest.clone(), single.clone()]
                },
                children: Vec::new(),
            },
        });
        allowed[self.agent] = single;
        let yes = dst.copy_restricted(self.src, (self.source)(p), &allowed, self.cap)?;
        let no = self.build(dst, idx + 1, rest)?;
        dst.set_children(me, if single_first { vec![yes, no] } else { vec![no, yes] });
        Ok(me)
    }
}

/// Types to split off, in order, to make the binary node `u` extremal.
fn extremal_peels(tree: &ImplementationTree, c: &mut Classifier, u: NodeId) -> Result<Vec<usize>> {
    let node = tree.node(u);
    let NodeKind::Internal { agent, parts, .. } = &node.kind else {
        unreachable!("only internal nodes are rewritten");
    };
    let agent = *agent;
    let order = cost_sorted(tree.orientation(), &node.subdomain[agent]);
    let pos = |t: usize| order.iter().position(|&x| x == t).expect("type in domain");
    for part in parts {
        match c.homogeneous(u, agent, part) {
            Some(TypeClass::Always0) => {
                let best = part.iter().map(|&t| pos(t)).min().expect("nonempty part");
                return Ok(order[best..].iter().rev().copied().collect());
            }
            Some(TypeClass::Always1) => {
                let worst = part.iter().map(|&t| pos(t)).max().expect("nonempty part");
                return Ok(order[..=worst].to_vec());
            }
            _ => {}
        }
    }
    if !c.revealable_on(u, agent, &order) {
        return Err(Error::NotApplicable(u));
    }
    let clean = parts
        .iter()
        .find(|p| c.classes(u, agent, p).iter().all(|&k| k != TypeClass::Unclear))
        .expect("a revealable split has a part free of unclear types");
    let classes: Vec<(usize, TypeClass)> = clean.iter().map(|&t| (pos(t), c.class(u, agent, t))).collect();
    let front = classes.iter().filter(|(_, k)| *k == TypeClass::Always1).map(|&(p, _)| p).max();
    let back = classes.iter().filter(|(_, k)| *k == TypeClass::Always0).map(|&(p, _)| p).min();
    let mut peels: Vec<usize> = front.map_or(Vec::new(), |f| order[..=f].to_vec());
    if let Some(b) = back {
        debug_assert!(front.is_none_or(|f| f < b));
        peels.extend(order[b..].iter().rev());
    }
    Ok(peels)
}

/// Rewrites the tree until every query is binary and splits off the
/// minimum or the maximum of the queried agent's current types.
///
/// Each pass takes the topmost non-extremal query and unrolls it into a
/// chain of extremal queries from one end of the cost order, picked so
/// that a homogeneous part, or the clean part of a revealable split, is
/// split off one type at a time.
pub fn extremalize(tree: &ImplementationTree) -> Result<ImplementationTree> {
    extremalize_with_cap(tree, DEFAULT_NODE_CAP)
}

pub fn extremalize_with_cap(tree: &ImplementationTree, cap: usize) -> Result<ImplementationTree> {
    let mut current = binarize(tree)?;
    let mut passes = 0usize;
    while let Some(u) = current.first_non_extremal() {
        passes += 1;
        check_cap(passes, cap)?;
        let peels = extremal_peels(&current, &mut Classifier::new(&current), u)?;
        let NodeKind::Internal { agent, parts, children } = current.node(u).kind.clone() else {
            unreachable!("non-extremal nodes are internal");
        };
        let chain = Chain {
            src: &current,
            u,
            agent,
            peels,
            source: |t: usize| {
                let i = parts.iter().position(|p| p.binary_search(&t).is_ok()).expect("type in a part");
                children[i]
            },
            cap,
        };
        let domain = current.node(u).subdomain[agent].clone();
        current = rewrite_at(&current, u, cap, |dst| chain.build(dst, 0, domain))?;
    }
    Ok(current)
}

/// Order in which a revealable agent's types are resolved at `u`: cost-worst
/// `Always0` types first, then cost-best `Always1` types, until one is left.
fn resolution_order(tree: &ImplementationTree, c: &mut Classifier, u: NodeId, agent: usize) -> Vec<usize> {
    let order = cost_sorted(tree.orientation(), &tree.node(u).subdomain[agent]);
    let classes = c.classes(u, agent, &order);
    let (mut lo, mut hi) = (0, order.len());
    let mut peels = Vec::new();
    while hi - lo > 1 && classes[hi - 1] == TypeClass::Always0 {
        hi -= 1;
        peels.push(order[hi]);
    }
    while hi - lo > 1 && classes[lo] == TypeClass::Always1 {
        peels.push(order[lo]);
        lo += 1;
    }
    peels
}

/// Whether `u` already starts a chain of queries on `agent` splitting off
/// `peels` in order.
fn follows(tree: &ImplementationTree, mut v: NodeId, agent: usize, peels: &[usize]) -> bool {
    for &p in peels {
        match &tree.node(v).kind {
            NodeKind::Internal { agent: a, parts, children } if *a == agent && parts.len() == 2 => {
                let Some(k) = parts.iter().position(|q| q == &[p]) else {
                    return false;
                };
                v = children[1 - k];
            }
            _ => return false,
        }
    }
    true
}

/// Rewrites an extremal tree so that, at every node querying a revealable
/// agent, that agent's types are resolved first: its `Always0` types from
/// the cost-worst end, then its `Always1` types from the cost-best end, each
/// followed by the original subtree restricted to that type.
pub fn well_order(tree: &ImplementationTree) -> Result<ImplementationTree> {
    well_order_with_cap(tree, DEFAULT_NODE_CAP)
}

pub fn well_order_with_cap(tree: &ImplementationTree, cap: usize) -> Result<ImplementationTree> {
    if let Some(u) = tree.first_non_extremal() {
        return Err(Error::NotExtremal(u));
    }
    let mut current = tree.clone();
    let mut passes = 0usize;
    loop {
        let mut c = Classifier::new(&current);
        let mut found = None;
        for u in current.preorder() {
            let Some(agent) = current.node(u).queried_agent() else {
                continue;
            };
            if current.node(u).subdomain[agent].len() < 2 || !c.is_revealable(u, agent) {
                continue;
            }
            let peels = resolution_order(&current, &mut c, u, agent);
            if !follows(&current, u, agent, &peels) {
                found = Some((u, agent, peels));
                break;
            }
        }
        let Some((u, agent, peels)) = found else {
            return Ok(current);
        };
        passes += 1;
        check_cap(passes, cap)?;
        let chain = Chain {
            src: &current,
            u,
            agent,
            peels,
            source: |_| u,
            cap,
        };
        let domain = current.node(u).subdomain[agent].clone();
        current = rewrite_at(&current, u, cap, |dst| chain.build(dst, 0, domain))?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_paper_instance, next_profile, Params};
    use crate::tree::{check_weak_interleaving, four_type_violation, make_paper_tree};

    fn same_outcomes(a: &ImplementationTree, b: &ImplementationTree) {
        b.validate().unwrap();
        let radices = a.radices();
        let mut p = vec![0; radices.len()];
        loop {
            let la = a.solution_at(a.leaf_for(&p).unwrap());
            let lb = b.solution_at(b.leaf_for(&p).unwrap());
            assert_eq!(la, lb, "profile {p:?}");
            if !next_profile(&mut p, &radices) {
                break;
            }
        }
    }

    #[test]
    fn binarize_splits_ternary_root() {
        let (_, tree) = four_type_violation().unwrap();
        let b = binarize(&tree).unwrap();
        same_outcomes(&tree, &b);
        assert_eq!(b.len(), tree.len() + 1);
    }

    #[test]
    fn extremalize_four_type_tree() {
        let (_, tree) = four_type_violation().unwrap();
        let e = extremalize(&tree).unwrap();
        same_outcomes(&tree, &e);
        assert!(e.is_extremal());
    }

    #[test]
    fn auction_tree_extremal_and_well_ordered() {
        let inst = make_paper_instance("ca-appendixB", &Params::new()).unwrap();
        let tree = make_paper_tree("ca-appendixB", &inst).unwrap();
        assert!(tree.is_extremal());
        let w = well_order(&tree).unwrap();
        same_outcomes(&tree, &w);
        assert!(w.is_extremal());
        assert!(check_weak_interleaving(&w).unwrap().is_none());
    }

    #[test]
    fn well_order_rejects_non_extremal() {
        let (_, tree) = four_type_violation().unwrap();
        assert!(matches!(well_order(&tree), Err(Error::NotExtremal(_))));
    }
}
