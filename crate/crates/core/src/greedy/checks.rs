use std::fmt;

use super::table::{CompiledEntry, CompiledTable, Direction, History, HistorySpec, PriorityTable, RankKey};
use crate::error::Result;
use crate::instances::SetSystemInstance;
use crate::rational::{format_exact, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneViolation {
    pub agent: usize,
    pub direction: Direction,
    pub history: HistorySpec,
    /// The better type (lower cost or higher valuation) of the offending pair.
    pub better: Rational,
    pub worse: Rational,
}

impl fmt::Display for MonotoneViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "agent {} ({}) at history {}: type {} does not outrank type {}",
            self.agent,
            self.direction,
            self.history,
            format_exact(&self.better),
            format_exact(&self.worse)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneReport {
    pub violation: Option<MonotoneViolation>,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterleavingViolation {
    pub agent: usize,
    /// Rank of the entry after which the agent changes direction.
    pub entry_rank: Rational,
    /// Rank of the opposite-direction entry that realizes the change.
    pub switch_rank: Rational,
    /// Unexplored types of `agent` that some other agent's unexplored type
    /// outranks; more than one of these is a violation.
    pub failing_types: Vec<Rational>,
    pub blocking_agent: usize,
}

impl fmt::Display for InterleavingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let types: Vec<String> = self.failing_types.iter().map(format_exact).collect();
        write!(
            f,
            "agent {} switches direction at rank {} (after rank {}) but types [{}] are outranked by agent {}",
            self.agent,
            format_exact(&self.switch_rank),
            format_exact(&self.entry_rank),
            types.join(", "),
            self.blocking_agent
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterleavingReport {
    pub violation: Option<InterleavingViolation>,
}

impl InterleavingReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

type Ctx<'a> = Option<&'a [(usize, usize)]>;

/// Both slices sorted by agent.
fn is_submap(small: &[(usize, usize)], big: &[(usize, usize)]) -> bool {
    small.iter().all(|p| big.binary_search(p).is_ok())
}

/// `inner` is a history at which the run may have been before reaching `outer`.
fn precedes(inner: Ctx, outer: Ctx) -> bool {
    match (inner, outer) {
        (None, _) => true,
        (Some(i), None) => i.is_empty(),
        (Some(i), Some(o)) => is_submap(i, o),
    }
}

fn index_history(instance: &SetSystemInstance, h: Ctx) -> HistorySpec {
    match h {
        None => HistorySpec::Any,
        Some(pairs) => HistorySpec::Exact(History::from_pairs(
            pairs.iter().map(|&(a, t)| (a, instance.value(a, t).clone())),
        )),
    }
}

/// Verifies that, at every history context present in the table, In keys
/// strictly decrease from better to worse types and Out keys strictly
/// increase. Under `FailOnMissing` only defined pairs are compared.
pub fn check_all_monotone(
    instance: &SetSystemInstance,
    table: &PriorityTable,
) -> Result<MonotoneReport> {
    let compiled = CompiledTable::compile(instance, table)?;
    let strict = compiled.policy() == super::MissingPolicy::FailOnMissing;
    let mut contexts: Vec<Ctx> = vec![None];
    contexts.extend(compiled.exact_histories().iter().map(|h| Some(h.as_slice())));
    for ctx in contexts {
        for agent in 0..instance.n() {
            let order = instance.cost_order(agent);
            for dir in [Direction::In, Direction::Out] {
                let mut prev: Option<(usize, RankKey)> = None;
                for &t in &order {
                    let key = compiled.key(agent, dir, t, ctx);
                    if strict && !key.is_defined() {
                        continue;
                    }
                    if let Some((p, pk)) = prev {
                        // In: better types first must rank higher. Out: the
                        // reverse, so `p` is the worse type of the pair.
                        let ok = match dir {
                            Direction::In => pk > key,
                            Direction::Out => key > pk,
                        };
                        if !ok {
                            return Ok(MonotoneReport {
                                violation: Some(MonotoneViolation {
                                    agent,
                                    direction: dir,
                                    history: index_history(instance, ctx),
                                    better: instance.value(agent, p).clone(),
                                    worse: instance.value(agent, t).clone(),
                                }),
                            });
                        }
                    }
                    prev = Some((t, key));
                }
            }
        }
    }
    Ok(MonotoneReport { violation: None })
}

struct Scan<'a> {
    table: &'a CompiledTable,
    radices: &'a [usize],
}

impl Scan<'_> {
    fn entry(&self, pos: usize) -> &CompiledEntry {
        &self.table.entries()[pos]
    }

    /// Types of `agent` explored strictly before the entry at `pos`: those
    /// carried by higher-ranked entries at a history the run could have
    /// passed through, plus the entry's own type when the agent matches.
    fn explored(&self, pos: usize, agent: usize) -> Vec<bool> {
        let e = self.entry(pos);
        let ctx = e.history.as_deref();
        let mut seen = vec![false; self.radices[agent]];
        if e.agent == agent {
            seen[e.type_idx] = true;
        }
        for other in &self.table.entries()[pos + 1..] {
            if other.agent == agent && precedes(other.history.as_deref(), ctx) {
                seen[other.type_idx] = true;
            }
        }
        seen
    }

    fn unexplored(&self, pos: usize, agent: usize) -> Vec<usize> {
        self.explored(pos, agent)
            .into_iter()
            .enumerate()
            .filter_map(|(t, s)| (!s).then_some(t))
            .collect()
    }

    fn best_key(&self, agent: usize, t: usize, ctx: Ctx) -> RankKey {
        let a = self.table.key(agent, Direction::In, t, ctx);
        let b = self.table.key(agent, Direction::Out, t, ctx);
        a.max(b)
    }
}

/// Checks the interleaving condition on the defined entries of the table.
///
/// For every entry `e = (i, d, b, h)` and every lower-ranked entry
/// `e' = (i, opposite d, b', h')` with `h'` extending `h` and `b'` still
/// unexplored at `e`, all but at most one unexplored type `x` of `i` at `e'`
/// must outrank (best direction, history `h'`) every unexplored type of
/// every other agent still active at `h'`.
pub fn check_interleaving(
    instance: &SetSystemInstance,
    table: &PriorityTable,
) -> Result<InterleavingReport> {
    let compiled = CompiledTable::compile(instance, table)?;
    let scan = Scan {
        table: &compiled,
        radices: compiled.radices(),
    };
    let n = instance.n();
    let entries = compiled.entries();
    // Dense positions ascend with rank, so lower positions are later in φ.
    for pos in (0..entries.len()).rev() {
        let e = &entries[pos];
        let h = e.history.as_deref();
        let open_at_e = scan.explored(pos, e.agent);
        for later in (0..pos).rev() {
            let s = &entries[later];
            if s.agent != e.agent || s.direction == e.direction || open_at_e[s.type_idx] {
                continue;
            }
            let h2 = s.history.as_deref();
            let extends = match (h, h2) {
                (Some(a), Some(b)) => is_submap(a, b),
                _ => true,
            };
            if !extends {
                continue;
            }
            let i = e.agent;
            let rivals: Vec<(usize, Vec<usize>)> = (0..n)
                .filter(|&j| j != i)
                .filter(|&j| h2.is_none_or(|hh| hh.binary_search_by_key(&j, |p| p.0).is_err()))
                .map(|j| (j, scan.unexplored(later, j)))
                .collect();
            let mut failing = Vec::new();
            let mut blocker = None;
            for x in scan.unexplored(later, i) {
                let kx = scan.best_key(i, x, h2);
                let beaten_by = rivals.iter().find_map(|(j, ys)| {
                    ys.iter()
                        .any(|&y| scan.best_key(*j, y, h2) >= kx)
                        .then_some(*j)
                });
                if let Some(j) = beaten_by {
                    failing.push(x);
                    blocker.get_or_insert(j);
                }
            }
            if failing.len() > 1 {
                return Ok(InterleavingReport {
                    violation: Some(InterleavingViolation {
                        agent: i,
                        entry_rank: compiled.rank_of(pos as u32).clone(),
                        switch_rank: compiled.rank_of(later as u32).clone(),
                        failing_types: failing
                            .iter()
                            .map(|&t| instance.value(i, t).clone())
                            .collect(),
                        blocking_agent: blocker.expect("set with the first failure"),
                    }),
                });
            }
        }
    }
    Ok(InterleavingReport { violation: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{make_paper_priority_table, MissingPolicy, OrderedTableBuilder};
    use crate::instances::{make_paper_instance, AgentDomain, FeasibleFamily, Orientation, Params};
    use crate::rational::int;

    fn sc() -> SetSystemInstance {
        make_paper_instance("sc-parallel", &Params::new()).unwrap()
    }

    #[test]
    fn monotone_in_ranks_pass() {
        let mut b = OrderedTableBuilder::new();
        b.push(0, Direction::In, int(10), HistorySpec::Any);
        b.push(0, Direction::In, int(22), HistorySpec::Any);
        let t = b.finish(MissingPolicy::FloorMissing).unwrap();
        assert!(check_all_monotone(&sc(), &t).unwrap().passed());
    }

    #[test]
    fn inverted_in_ranks_fail_with_pair() {
        let mut b = OrderedTableBuilder::new();
        b.push(0, Direction::In, int(22), HistorySpec::Any);
        b.push(0, Direction::In, int(10), HistorySpec::Any);
        let t = b.finish(MissingPolicy::FailOnMissing).unwrap();
        let v = check_all_monotone(&sc(), &t).unwrap().violation.unwrap();
        assert_eq!((v.agent, v.direction), (0, Direction::In));
        assert_eq!((v.better, v.worse), (int(10), int(22)));
    }

    #[test]
    fn out_ranks_prefer_worse_types() {
        let mut b = OrderedTableBuilder::new();
        b.push(1, Direction::Out, int(36), HistorySpec::Any);
        b.push(1, Direction::Out, int(22), HistorySpec::Any);
        b.push(1, Direction::Out, int(10), HistorySpec::Any);
        let t = b.finish(MissingPolicy::FailOnMissing).unwrap();
        assert!(check_all_monotone(&sc(), &t).unwrap().passed());
    }

    #[test]
    fn pure_in_table_interleaves_vacuously() {
        let mut b = OrderedTableBuilder::new();
        for t in [10, 22, 36] {
            for a in 0..3 {
                b.push(a, Direction::In, int(t), HistorySpec::Any);
            }
        }
        let t = b.finish(MissingPolicy::FailOnMissing).unwrap();
        assert!(check_interleaving(&sc(), &t).unwrap().passed());
    }

    #[test]
    fn ordering_on_three_types_interleaves() {
        let inst = make_paper_instance("sw-parallel", &Params::new()).unwrap();
        let t = make_paper_priority_table("thm9-ordering", &Params::new()).unwrap();
        assert!(check_all_monotone(&inst, &t).unwrap().passed());
        assert!(check_interleaving(&inst, &t).unwrap().passed());
    }

    #[test]
    fn direction_change_with_two_open_types_is_caught() {
        // Agent 0 has four cost types; after In at 1 it switches to Out at 4
        // while 2 and 3 both rank below agent 1's unexplored type 1.
        let inst = SetSystemInstance::new(
            vec![
                AgentDomain::from_ints(&[1, 2, 3, 4]).unwrap(),
                AgentDomain::from_ints(&[1, 2]).unwrap(),
            ],
            Orientation::Cost,
            FeasibleFamily::ParallelSolutions {
                sets: vec![vec![0], vec![1]],
            },
        )
        .unwrap();
        let mut b = OrderedTableBuilder::new();
        b.push(0, Direction::In, int(1), HistorySpec::Any);
        b.push(0, Direction::Out, int(4), HistorySpec::Any);
        b.push(1, Direction::In, int(1), HistorySpec::Any);
        b.push(1, Direction::In, int(2), HistorySpec::Any);
        b.push(0, Direction::In, int(2), HistorySpec::Any);
        b.push(0, Direction::In, int(3), HistorySpec::Any);
        let t = b.finish(MissingPolicy::FloorMissing).unwrap();
        assert!(check_all_monotone(&inst, &t).unwrap().passed());
        let v = check_interleaving(&inst, &t).unwrap().violation.unwrap();
        assert_eq!(v.agent, 0);
        assert_eq!(v.failing_types, vec![int(2), int(3)]);
        assert_eq!(v.blocking_agent, 1);

        // Resolving agent 0 right after the switch repairs it.
        let mut b = OrderedTableBuilder::new();
        b.push(0, Direction::In, int(1), HistorySpec::Any);
        b.push(0, Direction::Out, int(4), HistorySpec::Any);
        b.push(0, Direction::In, int(2), HistorySpec::Any);
        b.push(0, Direction::In, int(3), HistorySpec::Any);
        b.push(1, Direction::In, int(1), HistorySpec::Any);
        b.push(1, Direction::In, int(2), HistorySpec::Any);
        let t = b.finish(MissingPolicy::FloorMissing).unwrap();
        assert!(check_interleaving(&inst, &t).unwrap().passed());
    }
}
