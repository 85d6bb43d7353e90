use num_traits::{One, Zero};

use super::table::{Direction, History, HistorySpec, MissingPolicy, PriorityEntry, PriorityTable};
use crate::error::{Error, Result};
use crate::instances::{dc_gap_values, param_rational, param_usize, Params, DEFAULT_ENUMERATION_CAP};
use crate::rational::{frac, int, Rational};

/// Collects entries from highest to lowest priority and assigns integer
/// ranks `len, len-1, ..., 1` on `finish`.
#[derive(Clone, Debug, Default)]
pub struct OrderedTableBuilder {
    entries: Vec<(usize, Direction, Rational, HistorySpec)>,
}

impl OrderedTableBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, agent: usize, direction: Direction, type_value: Rational, history: HistorySpec) {
        self.entries.push((agent, direction, type_value, history));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn finish(self, policy: MissingPolicy) -> Result<PriorityTable> {
        let len = self.entries.len() as i64;
        let entries = self
            .entries
            .into_iter()
            .enumerate()
            .map(|(idx, (agent, direction, type_value, history))| PriorityEntry {
                agent,
                direction,
                type_value,
                history,
                rank: int(len - idx as i64),
            })
            .collect();
        PriorityTable::new(entries, policy)
    }
}

/// Builds the named table. Recognized ids:
///
/// * `thm8-two-way` (alias `thm8`): the two-way rule on `sc-parallel`.
/// * `thm9-ordering` (alias `thm9`): the six-entry ordering on `sw-parallel`.
/// * `alg4` (`k`): the history-driven table for `dc-gap`.
/// * `alg5` (`k`, `tmin`, `tmed`, `tmax`): the forward table for `asym-knapsack`.
pub fn make_paper_priority_table(id: &str, params: &Params) -> Result<PriorityTable> {
    match id {
        "thm8-two-way" | "thm8" => thm8_two_way(),
        "thm9-ordering" | "thm9" => thm9_ordering(),
        "alg4" => alg4(param_usize(params, "k", Some(4))?),
        "alg5" => alg5(
            param_usize(params, "k", Some(4))?,
            param_rational(params, "tmin", Some(Rational::zero()))?,
            param_rational(params, "tmed", Some(frac(1, 2)))?,
            param_rational(params, "tmax", Some(Rational::one()))?,
        ),
        other => Err(Error::UnknownId(other.to_string())),
    }
}

fn thm8_two_way() -> Result<PriorityTable> {
    let (x, y, z) = (0, 1, 2);
    let mut b = OrderedTableBuilder::new();
    b.push(y, Direction::Out, int(36), HistorySpec::Any);
    b.push(z, Direction::Out, int(36), HistorySpec::Any);
    b.push(x, Direction::In, int(10), HistorySpec::Any);
    b.push(x, Direction::In, int(22), HistorySpec::Any);
    b.push(y, Direction::In, int(10), HistorySpec::Any);
    b.push(z, Direction::In, int(10), HistorySpec::Any);
    b.push(x, Direction::In, int(36), HistorySpec::Any);
    b.finish(MissingPolicy::FloorMissing)
}

fn thm9_ordering() -> Result<PriorityTable> {
    let inst = crate::instances::make_paper_instance("sw-parallel", &Params::new())?;
    let d = inst.domain(0).values();
    let (tmin, tmed, tmax) = (d[0].clone(), d[1].clone(), d[2].clone());
    let (x, y, z) = (0, 1, 2);
    let mut b = OrderedTableBuilder::new();
    b.push(y, Direction::In, tmax.clone(), HistorySpec::Any);
    b.push(z, Direction::In, tmax, HistorySpec::Any);
    b.push(x, Direction::Out, tmin.clone(), HistorySpec::Any);
    b.push(y, Direction::Out, tmin.clone(), HistorySpec::Any);
    b.push(z, Direction::Out, tmin, HistorySpec::Any);
    b.push(y, Direction::In, tmed, HistorySpec::Any);
    b.finish(MissingPolicy::FloorMissing)
}

/// Agent 0 is the singleton solution S, agents 1..=k form T.
///
/// The control flow maps onto exact-history blocks. At the empty history any
/// T agent at `tmax` commits In (T is returned), then S at `tmin` commits Out.
/// At a history R of T agents excluded at `tmin` with |R| < k/2, the
/// remaining T agents are probed Out at `tmin` in index order with S probed
/// Out at `tmed` after the first of them, and S Out at `tmax` closes the
/// block (T \ R). At |R| = k/2, S In at `tmax` returns S, a remaining T agent
/// In at `tmed` returns T \ R, and S In at `tmed` returns S. Everything left
/// open is resolved by the floors, which include every remaining T agent.
fn alg4(k: usize) -> Result<PriorityTable> {
    if k < 4 || !k.is_multiple_of(2) || k + 1 > DEFAULT_ENUMERATION_CAP {
        return Err(Error::InvalidParams(format!("alg4 needs an even k >= 4, got {k}")));
    }
    let [tmin, tmed, tmax] = dc_gap_values(k)?;
    let s = 0usize;
    let half = k / 2;
    let mut b = OrderedTableBuilder::new();
    for mask in 0u64..(1u64 << k) {
        let size = mask.count_ones() as usize;
        if size > half {
            continue;
        }
        let excluded: Vec<usize> = (1..=k).filter(|j| mask >> (j - 1) & 1 == 1).collect();
        let remaining: Vec<usize> = (1..=k).filter(|j| mask >> (j - 1) & 1 == 0).collect();
        let h = HistorySpec::Exact(History::from_pairs(
            excluded.iter().map(|&j| (j, tmin.clone())),
        ));
        if size == half {
            b.push(s, Direction::In, tmax.clone(), h.clone());
            for &u in &remaining {
                b.push(u, Direction::In, tmax.clone(), h.clone());
            }
            for &u in &remaining {
                b.push(u, Direction::In, tmed.clone(), h.clone());
            }
            b.push(s, Direction::In, tmed.clone(), h);
            continue;
        }
        if size == 0 {
            for &u in &remaining {
                b.push(u, Direction::In, tmax.clone(), h.clone());
            }
            b.push(s, Direction::Out, tmin.clone(), h.clone());
        }
        for (pos, &u) in remaining.iter().enumerate() {
            b.push(u, Direction::Out, tmin.clone(), h.clone());
            if pos == 0 {
                if size > 0 {
                    b.push(s, Direction::Out, tmin.clone(), h.clone());
                }
                b.push(s, Direction::Out, tmed.clone(), h.clone());
            }
        }
        b.push(s, Direction::Out, tmax.clone(), h);
    }
    b.finish(MissingPolicy::FloorMissing)
}

const BAND_TOP: i64 = 3000;
const BAND_MID: i64 = 2000;
const BAND_LOW: i64 = 1000;

/// Forward table over agent 0 (S) and agents 1..=k (T) with rank bands
/// 3000 / 2000 / 1000 and unit spacing inside each band.
fn alg5(k: usize, tmin: Rational, tmed: Rational, tmax: Rational) -> Result<PriorityTable> {
    if k < 2 || k as i64 >= BAND_LOW - 1 {
        return Err(Error::InvalidParams(format!("alg5 needs 2 <= k < 999, got {k}")));
    }
    if !(Rational::zero() <= tmin && tmin < tmed && tmed < tmax) {
        return Err(Error::InvalidParams("alg5 needs 0 <= tmin < tmed < tmax".into()));
    }
    let kk = int(k as i64);
    let s = 0usize;
    let mut entries = Vec::new();
    let mut add = |agent: usize, t: &Rational, rank: i64| {
        entries.push(PriorityEntry {
            agent,
            direction: Direction::In,
            type_value: t.clone(),
            history: HistorySpec::Any,
            rank: int(rank),
        })
    };
    let top = |i: usize| BAND_TOP + (k + 1 - i) as i64;
    for i in 1..=k {
        add(i, &tmax, top(i));
    }
    let t_ratio = &tmax / (&tmed + (&kk - int(1)) * &tmin);
    let s_ratio = &kk * &tmed / &tmax;
    let max_first = tmed <= &tmax / &kk || t_ratio > s_ratio;
    if max_first {
        add(s, &tmax, BAND_MID + k as i64 + 1);
        for i in 1..=k {
            add(i, &tmed, BAND_MID + (k + 1 - i) as i64);
        }
    } else {
        add(s, &tmax, BAND_MID + 1);
        for i in 1..=k {
            add(i, &tmed, BAND_MID + 1 + (k + 1 - i) as i64);
        }
    }
    if tmed > &kk * &tmin {
        add(s, &tmed, BAND_LOW + 1);
    }
    add(1, &tmin, BAND_LOW - 1);
    let bands_ok = top(k) > BAND_MID + k as i64 + 1 && BAND_MID > BAND_LOW + 1;
    debug_assert!(bands_ok);
    PriorityTable::new(entries, MissingPolicy::FloorMissing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{check_all_monotone, forward_greedy, two_way_greedy};
    use crate::instances::{make_paper_instance, TypeProfile};

    fn params(pairs: &[(&str, Rational)]) -> Params {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn thm8_rule_returns_s_at_22_10_10() {
        let inst = make_paper_instance("sc-parallel", &Params::new()).unwrap();
        let t = make_paper_priority_table("thm8", &Params::new()).unwrap();
        assert!(check_all_monotone(&inst, &t).unwrap().passed());
        let tr = two_way_greedy(&inst, &t, &TypeProfile::from_ints(&[22, 10, 10])).unwrap();
        assert_eq!(tr.final_solution.selected(), &[0]);
        let tr = two_way_greedy(&inst, &t, &TypeProfile::from_ints(&[36, 10, 22])).unwrap();
        assert_eq!(tr.final_solution.selected(), &[1, 2]);
        let tr = two_way_greedy(&inst, &t, &TypeProfile::from_ints(&[36, 10, 36])).unwrap();
        assert_eq!(tr.final_solution.selected(), &[0]);
    }

    #[test]
    fn thm9_ordering_returns_t_at_med_max_min() {
        let inst = make_paper_instance("sw-parallel", &Params::new()).unwrap();
        let t = make_paper_priority_table("thm9-ordering", &Params::new()).unwrap();
        assert_eq!(t.entries().len(), 6);
        let d = inst.domain(0).values().to_vec();
        let p = TypeProfile::new(vec![d[1].clone(), d[2].clone(), d[0].clone()]);
        let tr = two_way_greedy(&inst, &t, &p).unwrap();
        assert_eq!(tr.final_solution.selected(), &[1, 2]);
    }

    #[test]
    fn alg5_bands_and_branch() {
        let p = params(&[("k", int(4))]);
        let inst = make_paper_instance("asym-knapsack", &p).unwrap();
        let t = make_paper_priority_table("alg5", &p).unwrap();
        assert!(check_all_monotone(&inst, &t).unwrap().passed());
        let top = t.sorted_desc();
        assert!(top[..4].iter().all(|e| e.agent != 0 && e.type_value == int(1)));
        // tmed = tmax / sqrt(k) ties the two ratios; the strict test falls
        // through to the T-first branch.
        assert_eq!((top[4].agent, top[4].type_value.clone()), (1, frac(1, 2)));
        assert_eq!((top[8].agent, top[8].type_value.clone()), (0, int(1)));
        let half = frac(1, 2);
        let profile = TypeProfile::new(vec![int(1), half.clone(), half.clone(), half.clone(), half]);
        let tr = forward_greedy(&inst, &t, &profile).unwrap();
        assert_eq!(tr.final_solution.selected(), &[1, 2, 3, 4]);
    }

    #[test]
    fn alg4_returns_t_when_some_t_agent_is_max() {
        let p = params(&[("k", int(4))]);
        let inst = make_paper_instance("dc-gap", &p).unwrap();
        let t = make_paper_priority_table("alg4", &p).unwrap();
        assert!(check_all_monotone(&inst, &t).unwrap().passed());
        let [tmin, _, tmax] = dc_gap_values(4).unwrap();
        let mut types = vec![tmax.clone(); 5];
        types[0] = tmin.clone();
        types[2] = tmin;
        let tr = two_way_greedy(&inst, &t, &TypeProfile::new(types)).unwrap();
        assert_eq!(tr.final_solution.selected(), &[1, 2, 3, 4]);
    }
}
