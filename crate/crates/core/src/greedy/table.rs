use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{Orientation, SetSystemInstance};
use crate::rational::{format_decimal_exact, format_exact, parse_decimal, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::In => Direction::Out,
            Direction::Out => Direction::In,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Direction::In => 0,
            Direction::Out => 1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

/// Types of the agents that are no longer active, keyed by agent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History(BTreeMap<usize, Rational>);

impl History {
    pub fn new() -> Self {
        History(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Rational)>) -> Self {
        History(pairs.into_iter().collect())
    }

    pub fn insert(&mut self, agent: usize, value: Rational) {
        self.0.insert(agent, value);
    }

    pub fn with(&self, agent: usize, value: Rational) -> Self {
        let mut h = self.clone();
        h.insert(agent, value);
        h
    }

    pub fn get(&self, agent: usize) -> Option<&Rational> {
        self.0.get(&agent)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &Rational)> {
        self.0.iter()
    }

    /// True iff `other` is a sub-map of `self`.
    pub fn extends(&self, other: &History) -> bool {
        other.0.iter().all(|(a, v)| self.0.get(a) == Some(v))
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .0
            .iter()
            .map(|(a, v)| format!("{a}:{}", format_exact(v)))
            .collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HistorySpec {
    /// Applies at any history lacking an exact entry.
    Any,
    Exact(History),
}

impl HistorySpec {
    pub fn empty() -> Self {
        HistorySpec::Exact(History::new())
    }
}

impl fmt::Display for HistorySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistorySpec::Any => f.write_str("*"),
            HistorySpec::Exact(h) => h.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityEntry {
    pub agent: usize,
    pub direction: Direction,
    pub type_value: Rational,
    pub history: HistorySpec,
    pub rank: Rational,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    FailOnMissing,
    #[default]
    FloorMissing,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityTable {
    entries: Vec<PriorityEntry>,
    policy: MissingPolicy,
}

impl PriorityTable {
    /// Rejects duplicate ranks and duplicate (agent, direction, type, history) keys.
    pub fn new(entries: Vec<PriorityEntry>, policy: MissingPolicy) -> Result<Self> {
        let mut ranks = BTreeSet::new();
        let mut keys = BTreeSet::new();
        for e in &entries {
            if !ranks.insert(e.rank.clone()) {
                return Err(Error::InvalidParams(format!(
                    "duplicate rank {}",
                    format_exact(&e.rank)
                )));
            }
            let key = (e.agent, e.direction, e.type_value.clone(), e.history.clone());
            if !keys.insert(key) {
                return Err(Error::InvalidParams(format!(
                    "duplicate entry for agent {} ({}) at type {} and history {}",
                    e.agent,
                    e.direction,
                    format_exact(&e.type_value),
                    e.history
                )));
            }
        }
        Ok(PriorityTable { entries, policy })
    }

    pub fn entries(&self) -> &[PriorityEntry] {
        &self.entries
    }

    pub fn policy(&self) -> MissingPolicy {
        self.policy
    }

    pub fn with_policy(mut self, policy: MissingPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Entries sorted by decreasing rank.
    pub fn sorted_desc(&self) -> Vec<&PriorityEntry> {
        let mut v: Vec<&PriorityEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| b.rank.cmp(&a.rank));
        v
    }

    /// Accepts either a bare array of entry records (floor policy) or
    /// `{"policy": ..., "entries": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let (policy, records) = match file {
            TableFile::Bare(records) => (MissingPolicy::FloorMissing, records),
            TableFile::Wrapped { policy, entries } => (policy, entries),
        };
        let entries = records
            .into_iter()
            .map(EntryRecord::into_entry)
            .collect::<Result<Vec<_>>>()?;
        PriorityTable::new(entries, policy)
    }

    pub fn to_json(&self) -> Result<String> {
        let entries = self
            .entries
            .iter()
            .map(EntryRecord::from_entry)
            .collect::<Result<Vec<_>>>()?;
        let file = TableFile::Wrapped {
            policy: self.policy,
            entries,
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TableFile {
    Bare(Vec<EntryRecord>),
    Wrapped {
        policy: MissingPolicy,
        entries: Vec<EntryRecord>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum HistoryField {
    Wildcard(String),
    Map(BTreeMap<String, String>),
}

#[derive(Serialize, Deserialize)]
struct EntryRecord {
    agent: usize,
    direction: Direction,
    #[serde(rename = "type")]
    type_value: String,
    history: HistoryField,
    rank: String,
}

fn decimal(v: &Rational) -> Result<String> {
    format_decimal_exact(v)
        .ok_or_else(|| Error::InvalidParams(format!("{} has no finite decimal form", format_exact(v))))
}

impl EntryRecord {
    fn into_entry(self) -> Result<PriorityEntry> {
        let history = match self.history {
            HistoryField::Wildcard(s) if s == "*" => HistorySpec::Any,
            HistoryField::Wildcard(s) => {
                return Err(Error::Parse(format!("history must be a map or \"*\", got `{s}`")))
            }
            HistoryField::Map(m) => {
                let mut h = History::new();
                for (k, v) in m {
                    let agent: usize = k
                        .parse()
                        .map_err(|_| Error::Parse(format!("history key `{k}` is not an agent index")))?;
                    h.insert(agent, parse_decimal(&v)?);
                }
                HistorySpec::Exact(h)
            }
        };
        Ok(PriorityEntry {
            agent: self.agent,
            direction: self.direction,
            type_value: parse_decimal(&self.type_value)?,
            history,
            rank: parse_decimal(&self.rank)?,
        })
    }

    fn from_entry(e: &PriorityEntry) -> Result<Self> {
        let history = match &e.history {
            HistorySpec::Any => HistoryField::Wildcard("*".into()),
            HistorySpec::Exact(h) => HistoryField::Map(
                h.iter()
                    .map(|(a, v)| Ok((a.to_string(), decimal(v)?)))
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(EntryRecord {
            agent: e.agent,
            direction: e.direction,
            type_value: decimal(&e.type_value)?,
            history,
            rank: decimal(&e.rank)?,
        })
    }
}

/// Effective priority of an (agent, direction, type) lookup. Defined entries
/// outrank every floored one; floored entries order by (agent, direction,
/// preference position), smaller tuples first, where the preference position
/// puts better types first for `In` and worse types first for `Out`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RankKey {
    Floor(Reverse<(usize, Direction, usize)>),
    Defined(u32),
}

impl RankKey {
    pub fn is_defined(self) -> bool {
        matches!(self, RankKey::Defined(_))
    }
}

/// Sorted (agent, type index) pairs.
pub(crate) type IndexHistory = Vec<(usize, usize)>;

/// A table resolved against an instance: ranks become dense positions and
/// types become domain indices.
#[derive(Clone, Debug)]
pub struct CompiledTable {
    orientation: Orientation,
    radices: Vec<usize>,
    policy: MissingPolicy,
    /// `[agent][type][direction]`.
    wildcard: Vec<Vec<[Option<u32>; 2]>>,
    exact: HashMap<(usize, Direction, usize), Vec<(IndexHistory, u32)>>,
    exact_histories: Vec<IndexHistory>,
    ranks: Vec<Rational>,
    /// Indexed by dense position, ascending rank.
    entries: Vec<CompiledEntry>,
}

/// A table entry with its type and history resolved to indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct CompiledEntry {
    pub agent: usize,
    pub direction: Direction,
    pub type_idx: usize,
    /// `None` for the wildcard history.
    pub history: Option<IndexHistory>,
}

impl CompiledTable {
    pub fn compile(instance: &SetSystemInstance, table: &PriorityTable) -> Result<Self> {
        let n = instance.n();
        let radices = instance.radices();
        let mut sorted: Vec<&PriorityEntry> = table.entries.iter().collect();
        sorted.sort_by(|a, b| a.rank.cmp(&b.rank));
        let mut wildcard: Vec<Vec<[Option<u32>; 2]>> =
            radices.iter().map(|&m| vec![[None, None]; m]).collect();
        let mut exact: HashMap<(usize, Direction, usize), Vec<(IndexHistory, u32)>> =
            HashMap::new();
        let mut histories = BTreeSet::new();
        let mut ranks = Vec::with_capacity(sorted.len());
        let mut compiled = Vec::with_capacity(sorted.len());
        let type_index = |agent: usize, v: &Rational| -> Result<usize> {
            if agent >= n {
                return Err(Error::InvalidParams(format!(
                    "priority entry names agent {agent}, instance has {n}"
                )));
            }
            instance.domain(agent).index_of(v).ok_or_else(|| {
                Error::InvalidParams(format!(
                    "type {} is not in the domain of agent {agent}",
                    format_exact(v)
                ))
            })
        };
        for (pos, e) in sorted.iter().enumerate() {
            let pos = pos as u32;
            ranks.push(e.rank.clone());
            let t = type_index(e.agent, &e.type_value)?;
            let history = match &e.history {
                HistorySpec::Any => {
                    wildcard[e.agent][t][e.direction.index()] = Some(pos);
                    None
                }
                HistorySpec::Exact(h) => {
                    let ih = h
                        .iter()
                        .map(|(&a, v)| Ok((a, type_index(a, v)?)))
                        .collect::<Result<IndexHistory>>()?;
                    histories.insert(ih.clone());
                    exact
                        .entry((e.agent, e.direction, t))
                        .or_default()
                        .push((ih.clone(), pos));
                    Some(ih)
                }
            };
            compiled.push(CompiledEntry {
                agent: e.agent,
                direction: e.direction,
                type_idx: t,
                history,
            });
        }
        Ok(CompiledTable {
            orientation: instance.orientation(),
            radices,
            policy: table.policy,
            wildcard,
            exact,
            exact_histories: histories.into_iter().collect(),
            ranks,
            entries: compiled,
        })
    }

    pub(crate) fn entries(&self) -> &[CompiledEntry] {
        &self.entries
    }

    pub(crate) fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn policy(&self) -> MissingPolicy {
        self.policy
    }

    pub fn has_exact_entries(&self) -> bool {
        !self.exact.is_empty()
    }

    pub(crate) fn exact_histories(&self) -> &[IndexHistory] {
        &self.exact_histories
    }

    /// Original rank of a dense position.
    pub fn rank_of(&self, pos: u32) -> &Rational {
        &self.ranks[pos as usize]
    }

    /// Position of `type_idx` in the agent's preference order for `dir`.
    pub(crate) fn preference_position(&self, agent: usize, dir: Direction, type_idx: usize) -> usize {
        let m = self.radices[agent];
        let cost_pos = match self.orientation {
            Orientation::Cost => type_idx,
            Orientation::Valuation => m - 1 - type_idx,
        };
        match dir {
            Direction::In => cost_pos,
            Direction::Out => m - 1 - cost_pos,
        }
    }

    /// Exact-history entry first, then the wildcard. `history = None` looks
    /// up wildcard entries only.
    pub(crate) fn defined(
        &self,
        agent: usize,
        dir: Direction,
        type_idx: usize,
        history: Option<&[(usize, usize)]>,
    ) -> Option<u32> {
        if let Some(h) = history.filter(|_| !self.exact.is_empty()) {
            if let Some(list) = self.exact.get(&(agent, dir, type_idx)) {
                if let Some((_, pos)) = list.iter().find(|(eh, _)| eh.as_slice() == h) {
                    return Some(*pos);
                }
            }
        }
        self.wildcard[agent][type_idx][dir.index()]
    }

    /// Effective key with the floor fallback, regardless of policy.
    pub(crate) fn key(
        &self,
        agent: usize,
        dir: Direction,
        type_idx: usize,
        history: Option<&[(usize, usize)]>,
    ) -> RankKey {
        match self.defined(agent, dir, type_idx, history) {
            Some(p) => RankKey::Defined(p),
            None => RankKey::Floor(Reverse((
                agent,
                dir,
                self.preference_position(agent, dir, type_idx),
            ))),
        }
    }

    /// Policy-aware lookup used by the engines.
    pub(crate) fn lookup(
        &self,
        instance: &SetSystemInstance,
        agent: usize,
        dir: Direction,
        type_idx: usize,
        history: &[(usize, usize)],
    ) -> Result<RankKey> {
        let key = self.key(agent, dir, type_idx, Some(history));
        if !key.is_defined() && self.policy == MissingPolicy::FailOnMissing {
            return Err(Error::MissingPriority {
                agent,
                direction: dir,
                type_value: format_exact(instance.value(agent, type_idx)),
            });
        }
        Ok(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_paper_instance, Params};
    use crate::rational::int;

    fn entry(agent: usize, direction: Direction, t: i64, rank: i64) -> PriorityEntry {
        PriorityEntry {
            agent,
            direction,
            type_value: int(t),
            history: HistorySpec::Any,
            rank: int(rank),
        }
    }

    #[test]
    fn duplicate_ranks_are_rejected() {
        let r = PriorityTable::new(
            vec![entry(0, Direction::In, 10, 1), entry(1, Direction::In, 10, 1)],
            MissingPolicy::FloorMissing,
        );
        assert!(r.is_err());
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let r = PriorityTable::new(
            vec![entry(0, Direction::In, 10, 1), entry(0, Direction::In, 10, 2)],
            MissingPolicy::FloorMissing,
        );
        assert!(r.is_err());
    }

    #[test]
    fn history_extension() {
        let h = History::from_pairs([(0, int(1))]);
        let h2 = h.with(2, int(5));
        assert!(h2.extends(&h));
        assert!(!h.extends(&h2));
        assert!(h.extends(&History::new()));
        assert!(!History::from_pairs([(0, int(2))]).extends(&h));
    }

    #[test]
    fn compile_rejects_foreign_types() {
        let inst = make_paper_instance("sc-parallel", &Params::new()).unwrap();
        let t = PriorityTable::new(vec![entry(0, Direction::In, 11, 1)], MissingPolicy::FloorMissing)
            .unwrap();
        assert!(CompiledTable::compile(&inst, &t).is_err());
        let t = PriorityTable::new(vec![entry(5, Direction::In, 10, 1)], MissingPolicy::FloorMissing)
            .unwrap();
        assert!(CompiledTable::compile(&inst, &t).is_err());
    }

    #[test]
    fn exact_history_beats_wildcard() {
        let inst = make_paper_instance("sc-parallel", &Params::new()).unwrap();
        let mut e = entry(1, Direction::In, 10, 5);
        e.history = HistorySpec::Exact(History::from_pairs([(0, int(36))]));
        let t = PriorityTable::new(
            vec![entry(1, Direction::In, 10, 1), e],
            MissingPolicy::FloorMissing,
        )
        .unwrap();
        let c = CompiledTable::compile(&inst, &t).unwrap();
        assert_eq!(c.key(1, Direction::In, 0, Some(&[(0, 2)])), RankKey::Defined(1));
        assert_eq!(c.key(1, Direction::In, 0, Some(&[])), RankKey::Defined(0));
        assert!(!c.key(1, Direction::Out, 0, Some(&[])).is_defined());
    }

    #[test]
    fn floors_are_monotone_within_an_agent() {
        let inst = make_paper_instance("sw-parallel", &Params::new()).unwrap();
        let t = PriorityTable::new(vec![], MissingPolicy::FloorMissing).unwrap();
        let c = CompiledTable::compile(&inst, &t).unwrap();
        // Valuations: the highest value is the best type for In.
        assert!(c.key(0, Direction::In, 2, None) > c.key(0, Direction::In, 1, None));
        assert!(c.key(0, Direction::Out, 0, None) > c.key(0, Direction::Out, 1, None));
        assert!(c.key(0, Direction::Out, 0, None) > c.key(1, Direction::In, 2, None));
    }

    #[test]
    fn json_round_trip() {
        let mut e = entry(1, Direction::Out, 22, 3);
        e.history = HistorySpec::Exact(History::from_pairs([(0, int(36))]));
        let t = PriorityTable::new(
            vec![entry(0, Direction::In, 10, 7), e],
            MissingPolicy::FailOnMissing,
        )
        .unwrap();
        let back = PriorityTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        let bare = r#"[{"agent":0,"direction":"in","type":"10","history":"*","rank":"2.5"}]"#;
        let b = PriorityTable::from_json(bare).unwrap();
        assert_eq!(b.policy(), MissingPolicy::FloorMissing);
        assert_eq!(b.entries()[0].rank, crate::rational::frac(5, 2));
    }
}
