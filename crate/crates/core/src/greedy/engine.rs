use serde::{Deserialize, Serialize};

use super::table::{CompiledTable, Direction, PriorityTable, RankKey};
use crate::error::{Error, Result};
use crate::instances::{AgentMask, SetSystemInstance, Solution, TypeProfile};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Forward,
    Reverse,
    TwoWay,
}

impl EngineKind {
    fn uses(self, dir: Direction) -> bool {
        matches!(
            (self, dir),
            (EngineKind::TwoWay, _)
                | (EngineKind::Forward, Direction::In)
                | (EngineKind::Reverse, Direction::Out)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Forward => "forward",
            EngineKind::Reverse => "reverse",
            EngineKind::TwoWay => "two-way",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "forward" => Ok(EngineKind::Forward),
            "reverse" => Ok(EngineKind::Reverse),
            "two-way" | "twoway" => Ok(EngineKind::TwoWay),
            other => Err(Error::UnknownId(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepAction {
    /// Included (In) or excluded (Out) and deactivated.
    Committed,
    /// The winning direction was not realizable; the agent joins I.
    MarkedInfeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyStep {
    pub chosen_agent: usize,
    pub direction: Direction,
    pub type_value: Rational,
    /// `None` when the winning entry was floored.
    pub rank_used: Option<Rational>,
    pub action: StepAction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
    pub final_solution: Solution,
}

pub(crate) struct StepRecord {
    pub agent: usize,
    pub direction: Direction,
    pub type_idx: usize,
    pub key: RankKey,
    pub committed: bool,
}

/// Reusable state for repeated runs of one engine over one table.
pub struct Runner<'a> {
    instance: &'a SetSystemInstance,
    table: &'a CompiledTable,
    kind: EngineKind,
    alive: Vec<bool>,
    history: Vec<(usize, usize)>,
}

impl<'a> Runner<'a> {
    pub fn new(instance: &'a SetSystemInstance, table: &'a CompiledTable, kind: EngineKind) -> Self {
        Runner {
            instance,
            table,
            kind,
            alive: vec![true; instance.feasible_masks().len()],
            history: Vec::with_capacity(instance.n()),
        }
    }

    /// Surviving solution at a type-index profile.
    pub fn outcome(&mut self, profile: &[usize]) -> Result<AgentMask> {
        self.run(profile, |_| {})
    }

    pub(crate) fn run(
        &mut self,
        profile: &[usize],
        mut on_step: impl FnMut(StepRecord),
    ) -> Result<AgentMask> {
        let sets = self.instance.feasible_masks();
        let n = self.instance.n();
        self.alive.iter_mut().for_each(|a| *a = true);
        self.history.clear();
        let mut alive_count = sets.len();
        let mut active: AgentMask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut infeasible: AgentMask = 0;
        let mut steps = 0usize;
        while alive_count > 1 {
            let candidates = active & !infeasible;
            if candidates == 0 {
                return Err(Error::NoProgress(alive_count));
            }
            let mut best: Option<(RankKey, usize, Direction)> = None;
            let mut m = candidates;
            while m != 0 {
                let agent = m.trailing_zeros() as usize;
                m &= m - 1;
                let t = profile[agent];
                for dir in [Direction::In, Direction::Out] {
                    if !self.kind.uses(dir) {
                        continue;
                    }
                    let key = self
                        .table
                        .lookup(self.instance, agent, dir, t, &self.history)?;
                    if best.is_none_or(|(k, _, _)| key > k) {
                        best = Some((key, agent, dir));
                    }
                }
            }
            let (key, agent, dir) = best.expect("candidates is nonempty");
            let bit = 1u64 << agent;
            let keeps = |s: AgentMask| match dir {
                Direction::In => s & bit != 0,
                Direction::Out => s & bit == 0,
            };
            let possible = sets
                .iter()
                .zip(&self.alive)
                .any(|(&s, &a)| a && keeps(s));
            if possible {
                for (s, a) in sets.iter().zip(self.alive.iter_mut()) {
                    if *a && !keeps(*s) {
                        *a = false;
                        alive_count -= 1;
                    }
                }
                active &= !bit;
                let t = profile[agent];
                let pos = self.history.partition_point(|&(a, _)| a < agent);
                self.history.insert(pos, (agent, t));
            } else {
                infeasible |= bit;
            }
            on_step(StepRecord {
                agent,
                direction: dir,
                type_idx: profile[agent],
                key,
                committed: possible,
            });
            steps += 1;
            debug_assert!(steps <= 2 * n);
        }
        let idx = self
            .alive
            .iter()
            .position(|&a| a)
            .expect("exactly one solution survives");
        Ok(sets[idx])
    }

    pub fn trace(&mut self, profile: &[usize]) -> Result<GreedyTrace> {
        let mut records = Vec::new();
        let mask = self.run(profile, |r| records.push(r))?;
        let steps = records
            .into_iter()
            .map(|r| GreedyStep {
                chosen_agent: r.agent,
                direction: r.direction,
                type_value: self.instance.value(r.agent, r.type_idx).clone(),
                rank_used: match r.key {
                    RankKey::Defined(p) => Some(self.table.rank_of(p).clone()),
                    RankKey::Floor(_) => None,
                },
                action: if r.committed {
                    StepAction::Committed
                } else {
                    StepAction::MarkedInfeasible
                },
            })
            .collect();
        Ok(GreedyTrace {
            steps,
            final_solution: Solution::from_mask(mask),
        })
    }
}

pub fn run_greedy(
    kind: EngineKind,
    instance: &SetSystemInstance,
    table: &PriorityTable,
    profile: &TypeProfile,
) -> Result<GreedyTrace> {
    let compiled = CompiledTable::compile(instance, table)?;
    let idx = instance.profile_indices(profile)?;
    Runner::new(instance, &compiled, kind).trace(&idx)
}

/// Repeatedly commits the highest-ranked In entry when some surviving
/// solution contains the agent; otherwise the agent joins I.
pub fn forward_greedy(
    instance: &SetSystemInstance,
    table: &PriorityTable,
    profile: &TypeProfile,
) -> Result<GreedyTrace> {
    run_greedy(EngineKind::Forward, instance, table, profile)
}

/// Out-direction mirror of `forward_greedy`.
pub fn reverse_greedy(
    instance: &SetSystemInstance,
    table: &PriorityTable,
    profile: &TypeProfile,
) -> Result<GreedyTrace> {
    run_greedy(EngineKind::Reverse, instance, table, profile)
}

/// Takes the highest entry over both directions; a non-realizable winner
/// marks its agent infeasible.
pub fn two_way_greedy(
    instance: &SetSystemInstance,
    table: &PriorityTable,
    profile: &TypeProfile,
) -> Result<GreedyTrace> {
    run_greedy(EngineKind::TwoWay, instance, table, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::table::{HistorySpec, MissingPolicy, PriorityEntry};
    use crate::greedy::OrderedTableBuilder;
    use crate::instances::{
        graphic_matroid_instance, make_paper_instance, AgentDomain, FeasibleFamily, Orientation,
        Params,
    };
    use crate::rational::int;

    fn sc() -> SetSystemInstance {
        make_paper_instance("sc-parallel", &Params::new()).unwrap()
    }

    #[test]
    fn forward_commits_top_in_entry() {
        let mut b = OrderedTableBuilder::new();
        b.push(0, Direction::In, int(10), HistorySpec::Any);
        b.push(0, Direction::In, int(22), HistorySpec::Any);
        b.push(0, Direction::In, int(36), HistorySpec::Any);
        b.push(1, Direction::In, int(10), HistorySpec::Any);
        b.push(2, Direction::In, int(10), HistorySpec::Any);
        let table = b.finish(MissingPolicy::FloorMissing).unwrap();
        let inst = sc();
        let trace = forward_greedy(&inst, &table, &TypeProfile::from_ints(&[36, 10, 10])).unwrap();
        assert_eq!(trace.final_solution.selected(), &[0]);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].action, StepAction::Committed);
        let value = inst.objective_value(&TypeProfile::from_ints(&[36, 10, 10]), &trace.final_solution);
        assert_eq!(value, int(36));
    }

    #[test]
    fn reverse_drops_top_out_entry() {
        let mut b = OrderedTableBuilder::new();
        b.push(0, Direction::Out, int(36), HistorySpec::Any);
        let table = b.finish(MissingPolicy::FloorMissing).unwrap();
        let trace = reverse_greedy(&sc(), &table, &TypeProfile::from_ints(&[36, 22, 22])).unwrap();
        assert_eq!(trace.final_solution.selected(), &[1, 2]);
    }

    #[test]
    fn single_feasible_set_returns_immediately() {
        let inst = SetSystemInstance::new(
            vec![AgentDomain::from_ints(&[1, 2]).unwrap(); 2],
            Orientation::Cost,
            FeasibleFamily::Explicit {
                sets: vec![vec![1]],
            },
        )
        .unwrap();
        let table = PriorityTable::new(vec![], MissingPolicy::FailOnMissing).unwrap();
        for kind in [EngineKind::Forward, EngineKind::Reverse, EngineKind::TwoWay] {
            let t = run_greedy(kind, &inst, &table, &TypeProfile::from_ints(&[2, 1])).unwrap();
            assert!(t.steps.is_empty());
            assert_eq!(t.final_solution.selected(), &[1]);
        }
    }

    #[test]
    fn missing_priority_under_strict_policy() {
        let table = PriorityTable::new(
            vec![PriorityEntry {
                agent: 0,
                direction: Direction::Out,
                type_value: int(10),
                history: HistorySpec::Any,
                rank: int(1),
            }],
            MissingPolicy::FailOnMissing,
        )
        .unwrap();
        let r = forward_greedy(&sc(), &table, &TypeProfile::from_ints(&[10, 10, 10]));
        assert!(matches!(r, Err(Error::MissingPriority { .. })));
    }

    #[test]
    fn greedy_by_cost_on_triangle() {
        let inst = graphic_matroid_instance(
            3,
            &[(0, 1), (1, 2), (0, 2)],
            vec![AgentDomain::from_ints(&[1, 2, 3]).unwrap(); 3],
        )
        .unwrap();
        let mut b = OrderedTableBuilder::new();
        for c in [1, 2, 3] {
            for e in 0..3 {
                b.push(e, Direction::In, int(c), HistorySpec::Any);
            }
        }
        for c in [3, 2, 1] {
            for e in 0..3 {
                b.push(e, Direction::Out, int(c), HistorySpec::Any);
            }
        }
        let table = b.finish(MissingPolicy::FailOnMissing).unwrap();
        let p = TypeProfile::from_ints(&[1, 2, 3]);
        let fwd = forward_greedy(&inst, &table, &p).unwrap();
        assert_eq!(fwd.final_solution.selected(), &[0, 1]);
        assert_eq!(inst.objective_value(&p, &fwd.final_solution), int(3));
        let rev = reverse_greedy(&inst, &table, &p).unwrap();
        assert_eq!(rev.final_solution, fwd.final_solution);
        assert_eq!(inst.brute_force_optimum(&p).unwrap().0, fwd.final_solution);
    }
}
