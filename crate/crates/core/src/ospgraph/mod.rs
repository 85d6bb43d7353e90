//! Per-agent OSP graphs over full type profiles, cycle-monotonicity checks
//! and shortest-path payments.
//!
//! Payments are transfers to the agent. With `c` the cost key of a type
//! (the cost itself, or minus the valuation), an agent of type `t` facing
//! outcome `f` and payment `p` has utility `p - c(t) f`. An edge `a -> b`
//! encodes `p(b) <= p(a) + w(a, b)` with `w(a, b) = c(a_i) (f(b) - f(a))`.

mod cycles;
mod payments;

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instances::{decode_profile, encode_profile, next_profile, AgentDomain, AgentMask, SetSystemInstance, TypeProfile};
use crate::rational::{format_exact, Rational};
use crate::tree::{ImplementationTree, NodeId, NodeKind};

pub use cycles::{
    check_2cmon, check_cmon, CmonReport, CycleWitness, FourProfile, TwoCycleReport, TwoCycleViolation,
};
pub use payments::{
    attach_payments, brute_force_osp_oracle, compute_all_payments, compute_payments, zero_payments,
    OracleReport, OracleViolation,
};

/// Default bound on the number of profiles, i.e. graph vertices.
pub const DEFAULT_PROFILE_CAP: u128 = 500_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OspEdge {
    pub from: usize,
    pub to: usize,
    pub weight: Rational,
    /// First tree node found separating the endpoints.
    pub node: NodeId,
}

/// The OSP graph of one agent. Vertices are profile ids in odometer order.
#[derive(Clone, Debug)]
pub struct OspGraph {
    agent: usize,
    domains: Vec<AgentDomain>,
    radices: Vec<usize>,
    /// Cost key of each type of `agent`.
    cost: Vec<Rational>,
    /// Outcome at each profile.
    outcome: Vec<AgentMask>,
    edges: Vec<OspEdge>,
    index: HashMap<(usize, usize), usize>,
}

/// Leaf outcome of every profile, in odometer order.
pub(crate) fn tree_outcomes(tree: &ImplementationTree, cap: u128) -> Result<Vec<AgentMask>> {
    let radices = tree.radices();
    let total: u128 = radices.iter().map(|&r| r as u128).product();
    if total > cap {
        return Err(Error::CapExceeded {
            what: "profile count",
            required: total.to_string(),
            cap,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut p = vec![0; radices.len()];
    loop {
        out.push(tree.solution_at(tree.leaf_for(&p)?));
        if !next_profile(&mut p, &radices) {
            break;
        }
    }
    Ok(out)
}

fn check_domains(instance: &SetSystemInstance, tree: &ImplementationTree) -> Result<()> {
    if instance.domains() != tree.domains() || instance.orientation() != tree.orientation() {
        return Err(Error::InvalidParams(
            "tree and instance disagree on domains or orientation".into(),
        ));
    }
    Ok(())
}

/// Profile ids compatible with `subdomain`, each with its part index for
/// `agent` under `parts`.
fn compatible(radices: &[usize], subdomain: &[Vec<usize>], agent: usize, parts: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let lens: Vec<usize> = subdomain.iter().map(Vec::len).collect();
    let mut pick = vec![0; lens.len()];
    let mut out = Vec::new();
    let mut p: Vec<usize> = subdomain.iter().map(|d| d[0]).collect();
    loop {
        for (i, &k) in pick.iter().enumerate() {
            p[i] = subdomain[i][k];
        }
        let part = parts
            .iter()
            .position(|q| q.binary_search(&p[agent]).is_ok())
            .expect("parts cover the subdomain");
        out.push((encode_profile(&p, radices) as usize, part));
        if !next_profile(&mut pick, &lens) {
            break;
        }
    }
    out
}

impl OspGraph {
    pub(crate) fn from_outcomes(tree: &ImplementationTree, agent: usize, outcome: Vec<AgentMask>) -> Self {
        let radices = tree.radices();
        let cost: Vec<Rational> = tree.domains()[agent]
            .values()
            .iter()
            .map(|v| tree.orientation().cost_key(v))
            .collect();
        let mut g = OspGraph {
            agent,
            domains: tree.domains().to_vec(),
            radices,
            cost,
            outcome,
            edges: Vec::new(),
            index: HashMap::new(),
        };
        for u in tree.preorder() {
            let node = tree.node(u);
            let NodeKind::Internal { agent: i, parts, .. } = &node.kind else {
                continue;
            };
            if *i != agent {
                continue;
            }
            let profiles = compatible(&g.radices, &node.subdomain, agent, parts);
            for &(a, pa) in &profiles {
                for &(b, pb) in &profiles {
                    if pa != pb && !g.index.contains_key(&(a, b)) {
                        let weight = g.formula_weight(a, b);
                        g.index.insert((a, b), g.edges.len());
                        g.edges.push(OspEdge {
                            from: a,
                            to: b,
                            weight,
                            node: u,
                        });
                    }
                }
            }
        }
        g
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn profile_count(&self) -> usize {
        self.outcome.len()
    }

    pub fn edges(&self) -> &[OspEdge] {
        &self.edges
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&OspEdge> {
        self.index.get(&(from, to)).map(|&k| &self.edges[k])
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.index.contains_key(&(from, to))
    }

    /// Whether some edge starts or ends at `id`.
    pub fn is_incident(&self, id: usize) -> bool {
        self.edges.iter().any(|e| e.from == id || e.to == id)
    }

    pub fn profile_id(&self, indices: &[usize]) -> usize {
        encode_profile(indices, &self.radices) as usize
    }

    pub fn profile_indices(&self, id: usize) -> Vec<usize> {
        decode_profile(id as u128, &self.radices)
    }

    pub fn profile(&self, id: usize) -> TypeProfile {
        TypeProfile::new(
            self.profile_indices(id)
                .iter()
                .enumerate()
                .map(|(i, &t)| self.domains[i].value(t).clone())
                .collect(),
        )
    }

    /// Type index of the graph's agent at profile `id`.
    pub fn own_type(&self, id: usize) -> usize {
        let stride: usize = self.radices[self.agent + 1..].iter().product();
        (id / stride) % self.radices[self.agent]
    }

    /// Cost key of the graph's agent at profile `id`.
    pub fn own_cost(&self, id: usize) -> &Rational {
        &self.cost[self.own_type(id)]
    }

    /// Whether the graph's agent is selected at profile `id`.
    pub fn selected(&self, id: usize) -> bool {
        self.outcome[id] & (1u64 << self.agent) != 0
    }

    /// `c(a_i) (f(b) - f(a))`.
    pub fn formula_weight(&self, a: usize, b: usize) -> Rational {
        let diff = i64::from(self.selected(b)) - i64::from(self.selected(a));
        self.own_cost(a) * Rational::from_integer(diff.into())
    }

    pub fn render_profile(&self, id: usize) -> String {
        self.profile(id).render()
    }
}

/// The OSP graph of `agent` under `tree`.
pub fn build_osp_graph(instance: &SetSystemInstance, tree: &ImplementationTree, agent: usize) -> Result<OspGraph> {
    build_osp_graph_with_cap(instance, tree, agent, DEFAULT_PROFILE_CAP)
}

pub fn build_osp_graph_with_cap(
    instance: &SetSystemInstance,
    tree: &ImplementationTree,
    agent: usize,
    cap: u128,
) -> Result<OspGraph> {
    check_domains(instance, tree)?;
    if agent >= tree.n() {
        return Err(Error::InvalidParams(format!("no agent {agent}")));
    }
    Ok(OspGraph::from_outcomes(tree, agent, tree_outcomes(tree, cap)?))
}

/// Graphs of every agent, sharing one pass over the profiles.
pub fn build_all_graphs(instance: &SetSystemInstance, tree: &ImplementationTree, cap: u128) -> Result<Vec<OspGraph>> {
    check_domains(instance, tree)?;
    let outcomes = tree_outcomes(tree, cap)?;
    Ok((0..tree.n())
        .map(|i| OspGraph::from_outcomes(tree, i, outcomes.clone()))
        .collect())
}

/// Both checks for one agent.
#[derive(Clone, Debug)]
pub struct AgentVerdict {
    pub agent: usize,
    pub two_cycle: TwoCycleReport,
    pub cmon: CmonReport,
}

#[derive(Clone, Debug)]
pub struct OspVerdict {
    pub agents: Vec<AgentVerdict>,
}

impl OspVerdict {
    pub fn passed(&self) -> bool {
        self.agents.iter().all(|a| a.cmon.passed())
    }

    pub fn render(&self, explain: bool) -> String {
        let mut out = String::new();
        for a in &self.agents {
            let _ = writeln!(
                out,
                "agent {}: 2CMON {}, CMON {}",
                a.agent,
                if a.two_cycle.passed() { "pass" } else { "fail" },
                if a.cmon.passed() { "pass" } else { "fail" },
            );
            if explain {
                if let Some(v) = &a.two_cycle.violation {
                    let _ = writeln!(
                        out,
                        "  two-cycle {} <-> {} weight {}",
                        v.a.render(),
                        v.b.render(),
                        format_exact(&v.weight)
                    );
                }
                if let Some(w) = &a.cmon.witness {
                    for line in w.render().lines() {
                        let _ = writeln!(out, "  {line}");
                    }
                }
            }
        }
        let _ = writeln!(out, "verdict: {}", if self.passed() { "OSP" } else { "not OSP" });
        out
    }
}

/// Runs the 2-cycle and full cycle checks on every agent's graph.
pub fn verify_osp(instance: &SetSystemInstance, tree: &ImplementationTree, cap: u128) -> Result<OspVerdict> {
    let graphs = build_all_graphs(instance, tree, cap)?;
    Ok(OspVerdict {
        agents: graphs
            .iter()
            .map(|g| AgentVerdict {
                agent: g.agent(),
                two_cycle: check_2cmon(g),
                cmon: check_cmon(g),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{FeasibleFamily, Orientation};
    use crate::rational::int;
    use crate::tree::TreeSpec;

    pub(crate) fn one_agent(select_low: bool) -> (SetSystemInstance, ImplementationTree) {
        let inst = SetSystemInstance::new(
            vec![AgentDomain::from_ints(&[1, 2]).unwrap()],
            Orientation::Cost,
            FeasibleFamily::Explicit {
                sets: vec![vec![], vec![0]],
            },
        )
        .unwrap();
        let (lo, hi) = if select_low { (vec![0], vec![]) } else { (vec![], vec![0]) };
        let spec = TreeSpec::query(
            0,
            vec![(vec![int(1)], TreeSpec::Leaf(lo)), (vec![int(2)], TreeSpec::Leaf(hi))],
        );
        let tree = ImplementationTree::from_spec(&inst, &spec).unwrap();
        (inst, tree)
    }

    #[test]
    fn two_type_edges_follow_formula() {
        let (inst, tree) = one_agent(true);
        let g = build_osp_graph(&inst, &tree, 0).unwrap();
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.edge(0, 1).unwrap().weight, int(-1));
        assert_eq!(g.edge(1, 0).unwrap().weight, int(2));
    }

    #[test]
    fn profile_cap_is_enforced() {
        let (inst, tree) = one_agent(true);
        assert!(matches!(
            build_osp_graph_with_cap(&inst, &tree, 0, 1),
            Err(Error::CapExceeded { .. })
        ));
    }
}
