use std::fmt::Write as _;
use std::ops::Add;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::OspGraph;
use crate::instances::TypeProfile;
use crate::rational::{common_denominator, format_exact, Rational};

#[derive(Clone, Debug)]
pub struct TwoCycleViolation {
    pub a_id: usize,
    pub b_id: usize,
    pub a: TypeProfile,
    pub b: TypeProfile,
    /// `w(a, b) + w(b, a) < 0`.
    pub weight: Rational,
}

#[derive(Clone, Debug)]
pub struct TwoCycleReport {
    pub violation: Option<TwoCycleViolation>,
}

impl TwoCycleReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Four profiles `b1, b2, b3, b4` whose own-type cost keys strictly
/// increase, with the agent selected at `b1`, `b3` and not at `b2`, `b4`,
/// and no edge `b2 -> b3`.
#[derive(Clone, Debug)]
pub struct FourProfile {
    pub ids: [usize; 4],
    pub profiles: [TypeProfile; 4],
}

/// A negative cycle in one agent's OSP graph.
#[derive(Clone, Debug)]
pub struct CycleWitness {
    pub agent: usize,
    /// Profile ids; the cycle closes from the last back to the first.
    pub cycle: Vec<usize>,
    pub profiles: Vec<TypeProfile>,
    /// `weights[k]` is the weight of the edge leaving `cycle[k]`.
    pub weights: Vec<Rational>,
    pub total_weight: Rational,
    pub four_profile: Option<FourProfile>,
}

impl CycleWitness {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "negative cycle for agent {}:", self.agent);
        for (p, w) in self.profiles.iter().zip(&self.weights) {
            let _ = writeln!(out, "  {} --[{}]->", p.render(), format_exact(w));
        }
        let _ = writeln!(out, "  total {}", format_exact(&self.total_weight));
        if let Some(fp) = &self.four_profile {
            let names = ["b1", "b2", "b3", "b4"];
            let items: Vec<String> = names
                .iter()
                .zip(&fp.profiles)
                .map(|(n, p)| format!("{n}={}", p.render()))
                .collect();
            let _ = writeln!(out, "  four-profile {}", items.join(" "));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CmonReport {
    pub witness: Option<CycleWitness>,
}

impl CmonReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Every edge has its reverse, since separation is symmetric; the two-cycle
/// weight is `(c(a_i) - c(b_i)) (f(b) - f(a))`.
pub fn check_2cmon(graph: &OspGraph) -> TwoCycleReport {
    for e in graph.edges() {
        if e.from > e.to {
            continue;
        }
        let Some(back) = graph.edge(e.to, e.from) else {
            continue;
        };
        let weight = &e.weight + &back.weight;
        if weight < Rational::zero() {
            return TwoCycleReport {
                violation: Some(TwoCycleViolation {
                    a_id: e.from,
                    b_id: e.to,
                    a: graph.profile(e.from),
                    b: graph.profile(e.to),
                    weight,
                }),
            };
        }
    }
    TwoCycleReport { violation: None }
}

/// Label-correcting shortest paths from a virtual source joined to every
/// vertex by a zero edge. Returns the distances, or the edge indices of a
/// negative cycle in forward order.
pub(crate) fn shortest_paths<W>(n: usize, edges: &[(usize, usize, W)]) -> std::result::Result<Vec<W>, Vec<usize>>
where
    W: Clone + Ord + Zero + for<'a> Add<&'a W, Output = W>,
{
    let mut dist = vec![W::zero(); n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    for _ in 0..=n {
        let mut changed = false;
        for (k, (a, b, w)) in edges.iter().enumerate() {
            let cand = dist[*a].clone() + w;
            if cand < dist[*b] {
                dist[*b] = cand;
                pred[*b] = Some(k);
                changed = true;
            }
        }
        if !changed {
            return Ok(dist);
        }
        // Any cycle among predecessor links has negative weight.
        if let Some(c) = predecessor_cycle(&pred, edges) {
            return Err(c);
        }
    }
    unreachable!("n + 1 improving rounds leave a predecessor cycle")
}

fn predecessor_cycle<W>(pred: &[Option<usize>], edges: &[(usize, usize, W)]) -> Option<Vec<usize>> {
    let n = pred.len();
    let mut walk = vec![usize::MAX; n];
    for start in 0..n {
        let mut v = start;
        while walk[v] == usize::MAX {
            walk[v] = start;
            match pred[v] {
                Some(k) => v = edges[k].0,
                None => break,
            }
        }
        if walk[v] == start && pred[v].is_some() {
            // `v` lies on a cycle of the walk just taken.
            let mut cyc = Vec::new();
            let mut x = v;
            loop {
                let k = pred[x].expect("cycle vertices have predecessors");
                cyc.push(k);
                x = edges[k].0;
                if x == v {
                    break;
                }
            }
            cyc.reverse();
            return Some(cyc);
        }
    }
    None
}

/// Scale factor turning the agent's cost keys into integers, and the scaled
/// weights when they fit comfortably in `i128` distances.
fn scaled_edges(graph: &OspGraph) -> (BigInt, Option<Vec<(usize, usize, i128)>>) {
    let scale = common_denominator(graph.cost.iter());
    let limit = BigInt::from(1u128 << 90);
    let scale_r = Rational::from_integer(scale.clone());
    let mut out = Vec::with_capacity(graph.edges().len());
    for e in graph.edges() {
        let w = (&e.weight * &scale_r).to_integer();
        if w.magnitude() > limit.magnitude() {
            return (scale, None);
        }
        out.push((e.from, e.to, w.to_i128().expect("bounded above")));
    }
    (scale, Some(out))
}

/// Distances from the virtual source, or a negative cycle as edge indices.
pub(crate) fn distances(graph: &OspGraph) -> std::result::Result<Vec<Rational>, Vec<usize>> {
    let n = graph.profile_count();
    match scaled_edges(graph) {
        (scale, Some(edges)) => {
            let d = shortest_paths(n, &edges)?;
            let scale_r = Rational::from_integer(scale);
            Ok(d.into_iter().map(|x| Rational::from_integer(x.into()) / &scale_r).collect())
        }
        (_, None) => {
            let edges: Vec<(usize, usize, Rational)> =
                graph.edges().iter().map(|e| (e.from, e.to, e.weight.clone())).collect();
            shortest_paths(n, &edges)
        }
    }
}

pub(crate) fn witness(graph: &OspGraph, cycle_edges: &[usize]) -> CycleWitness {
    let edges: Vec<_> = cycle_edges.iter().map(|&k| &graph.edges()[k]).collect();
    let cycle: Vec<usize> = edges.iter().map(|e| e.from).collect();
    let weights: Vec<Rational> = edges.iter().map(|e| e.weight.clone()).collect();
    let total_weight = weights.iter().fold(Rational::zero(), |acc, w| acc + w);
    let four_profile = if check_2cmon(graph).passed() {
        four_profile(graph, &cycle)
    } else {
        None
    };
    CycleWitness {
        agent: graph.agent(),
        profiles: cycle.iter().map(|&id| graph.profile(id)).collect(),
        cycle,
        weights,
        total_weight,
        four_profile,
    }
}

/// Takes the edge into selection with the smallest source cost and the
/// edge out of selection with the largest source cost. A negative cycle
/// forces the first cost below the second, and nonnegative two-cycles
/// order each edge's endpoints and rule out an edge between the middles.
fn four_profile(graph: &OspGraph, cycle: &[usize]) -> Option<FourProfile> {
    let m = cycle.len();
    let step = |k: usize| (cycle[k], cycle[(k + 1) % m]);
    let ups = (0..m).map(step).filter(|&(a, b)| !graph.selected(a) && graph.selected(b));
    let downs = (0..m).map(step).filter(|&(a, b)| graph.selected(a) && !graph.selected(b));
    let (b2, b1) = ups.min_by(|x, y| graph.own_cost(x.0).cmp(graph.own_cost(y.0)))?;
    let (b3, b4) = downs.max_by(|x, y| graph.own_cost(x.0).cmp(graph.own_cost(y.0)))?;
    let ids = [b1, b2, b3, b4];
    Some(FourProfile {
        ids,
        profiles: ids.map(|id| graph.profile(id)),
    })
}

/// Searches for a negative cycle. When every two-cycle is nonnegative the
/// witness carries a four-profile.
pub fn check_cmon(graph: &OspGraph) -> CmonReport {
    CmonReport {
        witness: distances(graph).err().map(|c| witness(graph, &c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ospgraph::build_osp_graph;
    use crate::ospgraph::tests::one_agent;
    use crate::rational::int;
    use crate::tree::four_type_violation;

    #[test]
    fn two_cycle_signs() {
        let (inst, tree) = one_agent(true);
        let g = build_osp_graph(&inst, &tree, 0).unwrap();
        assert!(check_2cmon(&g).passed());
        assert!(check_cmon(&g).passed());
        let (inst, tree) = one_agent(false);
        let g = build_osp_graph(&inst, &tree, 0).unwrap();
        let v = check_2cmon(&g).violation.unwrap();
        assert_eq!(v.weight, int(-1));
        let w = check_cmon(&g).witness.unwrap();
        assert_eq!(w.total_weight, int(-1));
        assert!(w.four_profile.is_none());
    }

    #[test]
    fn four_type_violation_has_four_profile() {
        let (inst, tree) = four_type_violation().unwrap();
        let g = build_osp_graph(&inst, &tree, 0).unwrap();
        assert!(check_2cmon(&g).passed());
        let w = check_cmon(&g).witness.unwrap();
        assert!(w.total_weight < Rational::zero());
        let fp = w.four_profile.unwrap();
        let costs: Vec<&Rational> = fp.ids.iter().map(|&id| g.own_cost(id)).collect();
        assert_eq!(costs, vec![&int(1), &int(2), &int(3), &int(4)]);
        assert_eq!(fp.profiles[1].types()[1], int(1));
        assert_eq!(fp.profiles[2].types()[1], int(2));
    }

    #[test]
    fn shortest_paths_without_edges_are_zero() {
        let d = shortest_paths::<i128>(3, &[]).unwrap();
        assert_eq!(d, vec![0, 0, 0]);
    }
}
