//! Extensive-form implementation trees: construction from priority tables,
//! execution, type classification and outcome-preserving rewrites.

mod build;
mod classify;
mod paper;
mod transform;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{AgentDomain, AgentMask, Orientation, SetSystemInstance, Solution, TypeProfile};
use crate::rational::{format_decimal_exact, format_exact, parse_decimal, Rational};

pub use build::{build_tree_from_table, build_tree_from_table_with_cap};
pub use classify::{
    check_admissible_queries, check_weak_interleaving, classify_agent, classify_types,
    is_revealable, Classifier, TypeClass,
};
pub use paper::{four_type_violation, make_paper_tree};
pub use transform::{binarize, extremalize, well_order};

pub type NodeId = usize;

/// Default bound on the node count of trees produced by the rewrites.
pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryKind {
    /// Separates the maximum of the current subdomain.
    Top,
    /// Separates the minimum of the current subdomain.
    Bottom,
    General,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Internal {
        agent: usize,
        /// Sorted type indices; together they partition `subdomain[agent]`.
        parts: Vec<Vec<usize>>,
        children: Vec<NodeId>,
    },
    Leaf {
        solution: AgentMask,
        /// Transfer to each agent, when synthesized.
        payments: Option<Vec<Rational>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    /// Per agent, the sorted type indices still compatible with this node.
    pub subdomain: Vec<Vec<usize>>,
    pub kind: NodeKind,
}

impl TreeNode {
    pub fn queried_agent(&self) -> Option<usize> {
        match &self.kind {
            NodeKind::Internal { agent, .. } => Some(*agent),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    /// Number of full profiles reaching this node.
    pub fn profile_count(&self) -> u128 {
        self.subdomain.iter().map(|d| d.len() as u128).product()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismOutcome {
    pub leaf: NodeId,
    pub solution: Solution,
    pub payments: Option<Vec<Rational>>,
}

/// Arena-allocated implementation tree. Types are addressed by their index
/// in the owning agent's domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImplementationTree {
    domains: Vec<AgentDomain>,
    orientation: Orientation,
    nodes: Vec<TreeNode>,
    root: NodeId,
}

/// Recursive description used to assemble trees by hand or from files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeSpec {
    Leaf(Vec<usize>),
    Query {
        agent: usize,
        parts: Vec<(Vec<Rational>, TreeSpec)>,
    },
}

impl TreeSpec {
    pub fn leaf(selected: &[usize]) -> Self {
        TreeSpec::Leaf(selected.to_vec())
    }

    pub fn query(agent: usize, parts: Vec<(Vec<Rational>, TreeSpec)>) -> Self {
        TreeSpec::Query { agent, parts }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpecFile {
    Leaf { select: Vec<usize> },
    Query { agent: usize, parts: Vec<PartFile> },
}

#[derive(Serialize, Deserialize)]
struct PartFile {
    types: Vec<String>,
    child: SpecFile,
}

impl SpecFile {
    fn into_spec(self) -> Result<TreeSpec> {
        Ok(match self {
            SpecFile::Leaf { select } => TreeSpec::Leaf(select),
            SpecFile::Query { agent, parts } => TreeSpec::Query {
                agent,
                parts: parts
                    .into_iter()
                    .map(|p| {
                        let types = p
                            .types
                            .iter()
                            .map(|t| parse_decimal(t))
                            .collect::<Result<Vec<_>>>()?;
                        Ok((types, p.child.into_spec()?))
                    })
                    .collect::<Result<Vec<_>>>()?,
            },
        })
    }
}

impl ImplementationTree {
    /// An empty arena; nodes are added by `push` and the root set last.
    pub(crate) fn empty(domains: Vec<AgentDomain>, orientation: Orientation) -> Self {
        ImplementationTree {
            domains,
            orientation,
            nodes: Vec::new(),
            root: 0,
        }
    }

    pub(crate) fn push(&mut self, node: TreeNode) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub(crate) fn set_root(&mut self, root: NodeId) {
        self.root = root;
    }

    pub fn from_spec(instance: &SetSystemInstance, spec: &TreeSpec) -> Result<Self> {
        let mut tree = ImplementationTree::empty(instance.domains().to_vec(), instance.orientation());
        let full: Vec<Vec<usize>> = instance.radices().iter().map(|&m| (0..m).collect()).collect();
        let root = tree.add_spec(instance, spec, full)?;
        tree.set_root(root);
        tree.validate()?;
        Ok(tree)
    }

    /// Reads the JSON tree format: `{"select": [..]}` leaves and
    /// `{"agent": i, "parts": [{"types": ["1", ...], "child": ...}, ...]}` queries.
    pub fn from_json(instance: &SetSystemInstance, text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(instance, &file.into_spec()?)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = self.spec_file(self.root)?;
        serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
    }

    fn spec_file(&self, id: NodeId) -> Result<SpecFile> {
        Ok(match &self.nodes[id].kind {
            NodeKind::Leaf { solution, .. } => SpecFile::Leaf {
                select: crate::instances::members(*solution),
            },
            NodeKind::Internal { agent, parts, children } => SpecFile::Query {
                agent: *agent,
                parts: parts
                    .iter()
                    .zip(children)
                    .map(|(p, &c)| {
                        let types = p
                            .iter()
                            .map(|&t| {
                                let v = self.value(*agent, t);
                                format_decimal_exact(v).ok_or_else(|| {
                                    Error::InvalidParams(format!(
                                        "type {} has no finite decimal form",
                                        format_exact(v)
                                    ))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok(PartFile {
                            types,
                            child: self.spec_file(c)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            },
        })
    }

    fn add_spec(
        &mut self,
        instance: &SetSystemInstance,
        spec: &TreeSpec,
        subdomain: Vec<Vec<usize>>,
    ) -> Result<NodeId> {
        match spec {
            TreeSpec::Leaf(selected) => {
                if !instance.is_feasible(selected) {
                    return Err(Error::MalformedTree(format!(
                        "leaf selects {}, which is not feasible",
                        Solution::new(selected.clone())
                    )));
                }
                Ok(self.push(TreeNode {
                    subdomain,
                    kind: NodeKind::Leaf {
                        solution: crate::instances::mask_of(selected),
                        payments: None,
                    },
                }))
            }
            TreeSpec::Query { agent, parts } => {
                if *agent >= instance.n() {
                    return Err(Error::MalformedTree(format!("query names unknown agent {agent}")));
                }
                let mut index_parts = Vec::with_capacity(parts.len());
                for (types, _) in parts {
                    let mut idx = types
                        .iter()
                        .map(|v| {
                            instance.domain(*agent).index_of(v).ok_or_else(|| {
                                Error::MalformedTree(format!(
                                    "type {} is not in the domain of agent {agent}",
                                    format_exact(v)
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    idx.sort_unstable();
                    index_parts.push(idx);
                }
                let id = self.push(TreeNode {
                    subdomain: subdomain.clone(),
                    kind: NodeKind::Internal {
                        agent: *agent,
                        parts: index_parts.clone(),
                        children: Vec::new(),
                    },
                });
                let mut children = Vec::with_capacity(parts.len());
                for ((_, child), part) in parts.iter().zip(index_parts) {
                    let mut sub = subdomain.clone();
                    sub[*agent] = part;
                    children.push(self.add_spec(instance, child, sub)?);
                }
                if let NodeKind::Internal { children: c, .. } = &mut self.nodes[id].kind {
                    *c = children;
                }
                Ok(id)
            }
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[AgentDomain] {
        &self.domains
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn radices(&self) -> Vec<usize> {
        self.domains.iter().map(AgentDomain::len).collect()
    }

    pub fn value(&self, agent: usize, type_idx: usize) -> &Rational {
        self.domains[agent].value(type_idx)
    }

    /// Node ids in preorder.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let NodeKind::Internal { children, .. } = &self.nodes[id].kind {
                stack.extend(children.iter().rev());
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.nodes[id].is_leaf())
            .collect()
    }

    /// Leaf reached by a type-index profile.
    pub fn leaf_for(&self, profile: &[usize]) -> Result<NodeId> {
        let mut id = self.root;
        loop {
            match &self.nodes[id].kind {
                NodeKind::Leaf { .. } => return Ok(id),
                NodeKind::Internal { agent, parts, children } => {
                    let t = profile[*agent];
                    let pos = parts
                        .iter()
                        .position(|p| p.binary_search(&t).is_ok())
                        .ok_or_else(|| {
                            Error::MalformedTree(format!(
                                "node {id}: no part holds type {} of agent {agent}",
                                format_exact(self.value(*agent, t))
                            ))
                        })?;
                    id = children[pos];
                }
            }
        }
    }

    pub fn solution_at(&self, leaf: NodeId) -> AgentMask {
        match &self.nodes[leaf].kind {
            NodeKind::Leaf { solution, .. } => *solution,
            NodeKind::Internal { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    /// Walks from the root to the leaf compatible with `profile`.
    pub fn run_mechanism(&self, profile: &TypeProfile) -> Result<MechanismOutcome> {
        if profile.len() != self.n() {
            return Err(Error::InvalidParams(format!(
                "profile has {} types, tree has {} agents",
                profile.len(),
                self.n()
            )));
        }
        let idx = profile
            .types()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                self.domains[i].index_of(v).ok_or_else(|| {
                    Error::InvalidParams(format!(
                        "type {} is not in the domain of agent {i}",
                        format_exact(v)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let leaf = self.leaf_for(&idx)?;
        match &self.nodes[leaf].kind {
            NodeKind::Leaf { solution, payments } => Ok(MechanismOutcome {
                leaf,
                solution: Solution::from_mask(*solution),
                payments: payments.clone(),
            }),
            NodeKind::Internal { .. } => unreachable!("leaf_for stops at leaves"),
        }
    }

    pub fn set_leaf_payments(&mut self, leaf: NodeId, values: Vec<Rational>) -> Result<()> {
        match &mut self.nodes[leaf].kind {
            NodeKind::Leaf { payments, .. } => {
                *payments = Some(values);
                Ok(())
            }
            NodeKind::Internal { .. } => Err(Error::MalformedTree(format!("node {leaf} is not a leaf"))),
        }
    }

    /// Sum over leaves of their compatible profile counts.
    pub fn leaf_profile_total(&self) -> u128 {
        self.leaves().iter().map(|&l| self.nodes[l].profile_count()).sum()
    }

    pub fn query_kind(&self, id: NodeId) -> Option<QueryKind> {
        let node = &self.nodes[id];
        let NodeKind::Internal { agent, parts, .. } = &node.kind else {
            return None;
        };
        let d = &node.subdomain[*agent];
        let (min, max) = (d[0], d[d.len() - 1]);
        if parts.len() != 2 {
            return Some(QueryKind::General);
        }
        if parts.iter().any(|p| p == &[min]) {
            Some(QueryKind::Bottom)
        } else if parts.iter().any(|p| p == &[max]) {
            Some(QueryKind::Top)
        } else {
            Some(QueryKind::General)
        }
    }

    /// Every query is binary and splits off the minimum or maximum.
    pub fn is_extremal(&self) -> bool {
        self.first_non_extremal().is_none()
    }

    pub fn first_non_extremal(&self) -> Option<NodeId> {
        self.preorder()
            .into_iter()
            .find(|&id| self.query_kind(id) == Some(QueryKind::General))
    }

    /// Checks the structural invariants: every internal node has at least two
    /// nonempty parts partitioning the queried agent's subdomain, children
    /// carry the matching subdomains, and leaves are reachable only by their
    /// own profiles.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::MalformedTree(format!("node {id} is shared")));
            }
            let node = &self.nodes[id];
            if node.subdomain.len() != self.n() || node.subdomain.iter().any(|d| d.is_empty()) {
                return Err(Error::MalformedTree(format!("node {id} has an empty subdomain")));
            }
            if let NodeKind::Internal { agent, parts, children } = &node.kind {
                if parts.len() < 2 || parts.len() != children.len() {
                    return Err(Error::MalformedTree(format!(
                        "node {id} needs at least two parts, one child each"
                    )));
                }
                let mut union: Vec<usize> = parts.iter().flatten().copied().collect();
                union.sort_unstable();
                if parts.iter().any(|p| p.is_empty()) || union != node.subdomain[*agent] {
                    return Err(Error::MalformedTree(format!(
                        "node {id}: parts do not partition the subdomain of agent {agent}"
                    )));
                }
                for (part, &c) in parts.iter().zip(children) {
                    let mut expect = node.subdomain.clone();
                    expect[*agent] = part.clone();
                    if self.nodes[c].subdomain != expect {
                        return Err(Error::MalformedTree(format!(
                            "child {c} of node {id} has inconsistent subdomains"
                        )));
                    }
                    stack.push(c);
                }
            }
        }
        Ok(())
    }

    /// Preorder text dump: one line per node with id, queried agent and
    /// parts, or the leaf outcome.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(self.root, 0, &mut out);
        out
    }

    fn dump_node(&self, id: NodeId, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match &self.nodes[id].kind {
            NodeKind::Leaf { solution, payments } => {
                let _ = write!(out, "{pad}#{id} leaf {}", Solution::from_mask(*solution));
                if let Some(p) = payments {
                    let items: Vec<String> = p.iter().map(format_exact).collect();
                    let _ = write!(out, " payments [{}]", items.join(", "));
                }
                out.push('\n');
            }
            NodeKind::Internal { agent, parts, children } => {
                let rendered: Vec<String> = parts
                    .iter()
                    .map(|p| {
                        let v: Vec<String> =
                            p.iter().map(|&t| format_exact(self.value(*agent, t))).collect();
                        format!("[{}]", v.join(","))
                    })
                    .collect();
                let _ = writeln!(out, "{pad}#{id} agent {agent} {}", rendered.join(" | "));
                for &c in children {
                    self.dump_node(c, depth + 1, out);
                }
            }
        }
    }

    /// Copies the subtree at `id` of `src` into `self`, restricted to the
    /// given per-agent types. Queries left with a single nonempty part are
    /// skipped.
    pub(crate) fn copy_restricted(
        &mut self,
        src: &ImplementationTree,
        id: NodeId,
        allowed: &[Vec<usize>],
        cap: usize,
    ) -> Result<NodeId> {
        check_cap(self.nodes.len(), cap)?;
        let node = &src.nodes[id];
        let subdomain = intersect_all(&node.subdomain, allowed);
        match &node.kind {
            NodeKind::Leaf { solution, payments } => Ok(self.push(TreeNode {
                subdomain,
                kind: NodeKind::Leaf {
                    solution: *solution,
                    payments: payments.clone(),
                },
            })),
            NodeKind::Internal { agent, parts, children } => {
                let kept: Vec<(Vec<usize>, NodeId)> = parts
                    .iter()
                    .zip(children)
                    .map(|(p, &c)| (intersect(p, &allowed[*agent]), c))
                    .filter(|(p, _)| !p.is_empty())
                    .collect();
                if kept.len() == 1 {
                    return self.copy_restricted(src, kept[0].1, allowed, cap);
                }
                let me = self.push(TreeNode {
                    subdomain,
                    kind: NodeKind::Internal {
                        agent: *agent,
                        parts: kept.iter().map(|(p, _)| p.clone()).collect(),
                        children: Vec::new(),
                    },
                });
                let mut ids = Vec::with_capacity(kept.len());
                for (p, c) in &kept {
                    let mut sub = allowed.to_vec();
                    sub[*agent] = p.clone();
                    ids.push(self.copy_restricted(src, *c, &sub, cap)?);
                }
                self.set_children(me, ids);
                Ok(me)
            }
        }
    }

    pub(crate) fn set_children(&mut self, id: NodeId, ids: Vec<NodeId>) {
        if let NodeKind::Internal { children, .. } = &mut self.nodes[id].kind {
            *children = ids;
        }
    }
}

pub(crate) fn check_cap(len: usize, cap: usize) -> Result<()> {
    if len >= cap {
        return Err(Error::CapExceeded {
            what: "tree node count",
            required: format!("more than {len} nodes"),
            cap: cap as u128,
        });
    }
    Ok(())
}

/// Both inputs sorted.
pub(crate) fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

pub(crate) fn intersect_all(a: &[Vec<usize>], b: &[Vec<usize>]) -> Vec<Vec<usize>> {
    a.iter().zip(b).map(|(x, y)| intersect(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{FeasibleFamily, Params};
    use crate::rational::int;

    fn one_agent() -> SetSystemInstance {
        SetSystemInstance::new(
            vec![AgentDomain::from_ints(&[1, 2]).unwrap()],
            Orientation::Cost,
            FeasibleFamily::Explicit {
                sets: vec![vec![], vec![0]],
            },
        )
        .unwrap()
    }

    #[test]
    fn depth_one_tree_routes_by_part() {
        let inst = one_agent();
        let spec = TreeSpec::query(
            0,
            vec![(vec![int(1)], TreeSpec::leaf(&[0])), (vec![int(2)], TreeSpec::leaf(&[]))],
        );
        let tree = ImplementationTree::from_spec(&inst, &spec).unwrap();
        let out = tree.run_mechanism(&TypeProfile::from_ints(&[1])).unwrap();
        assert_eq!(out.solution.selected(), &[0]);
        assert_eq!(out.leaf, tree.leaves()[0]);
        assert_eq!(tree.leaf_profile_total(), 2);
        assert_eq!(tree.query_kind(tree.root()), Some(QueryKind::Bottom));
    }

    #[test]
    fn malformed_specs_are_rejected() {
        let inst = one_agent();
        let overlapping = TreeSpec::query(
            0,
            vec![
                (vec![int(1)], TreeSpec::leaf(&[0])),
                (vec![int(1), int(2)], TreeSpec::leaf(&[])),
            ],
        );
        assert!(ImplementationTree::from_spec(&inst, &overlapping).is_err());
        let single = TreeSpec::query(0, vec![(vec![int(1), int(2)], TreeSpec::leaf(&[]))]);
        assert!(ImplementationTree::from_spec(&inst, &single).is_err());
        let infeasible = TreeSpec::query(
            0,
            vec![(vec![int(1)], TreeSpec::leaf(&[0])), (vec![int(2)], TreeSpec::leaf(&[0, 1]))],
        );
        assert!(ImplementationTree::from_spec(&inst, &infeasible).is_err());
    }

    #[test]
    fn json_round_trip_and_dump() {
        let inst = crate::instances::make_paper_instance("ca-appendixB", &Params::new()).unwrap();
        let tree = make_paper_tree("ca-appendixB", &inst).unwrap();
        let back = ImplementationTree::from_json(&inst, &tree.to_json().unwrap()).unwrap();
        assert_eq!(back.dump(), tree.dump());
        assert!(tree.dump().starts_with("#0 agent 0 [0,1] | [3]\n"));
    }

    #[test]
    fn restricted_copy_collapses_single_parts() {
        let inst = one_agent();
        let spec = TreeSpec::query(
            0,
            vec![(vec![int(1)], TreeSpec::leaf(&[0])), (vec![int(2)], TreeSpec::leaf(&[]))],
        );
        let tree = ImplementationTree::from_spec(&inst, &spec).unwrap();
        let mut dst = ImplementationTree::empty(tree.domains.clone(), tree.orientation);
        let root = dst.copy_restricted(&tree, tree.root(), &[vec![1]], DEFAULT_NODE_CAP).unwrap();
        dst.set_root(root);
        assert_eq!(dst.len(), 1);
        assert_eq!(dst.solution_at(root), 0);
    }
}
