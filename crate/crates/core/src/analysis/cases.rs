use std::collections::HashSet;
use std::fmt::Write as _;

use num_traits::Zero;
use serde_json::json;

use super::bounds::thm10_beta;
use super::scan::{ratio_at, RatioValue};
use crate::error::{Error, Result};
use crate::greedy::{
    check_all_monotone, CompiledTable, Direction, EngineKind, HistorySpec, MissingPolicy,
    OrderedTableBuilder, PriorityTable, RankKey,
};
use crate::instances::{
    inverse_sqrt, make_paper_instance, param_rational, param_usize, Params, SetSystemInstance,
    Solution, TypeProfile,
};
use crate::rational::{frac, int, round12, sqrt_exact, Rational};

/// Theorem ids accepted by `case_split_check`.
pub const CASE_SPLIT_IDS: &[&str] = &[
    "thm8-forward",
    "thm8-reverse",
    "thm9-forward",
    "thm9-reverse",
    "thm10-forward",
    "thm10-reverse",
    "thm11",
    "thm12",
];

/// (agent, direction, type index).
type Entry = (usize, Direction, usize);

fn inn(agent: usize, t: usize) -> Entry {
    (agent, Direction::In, t)
}

fn out(agent: usize, t: usize) -> Entry {
    (agent, Direction::Out, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Agg {
    Max,
    Min,
}

/// A first-round priority, or the best or worst of several.
struct Named {
    name: &'static str,
    entries: Vec<Entry>,
    agg: Agg,
}

impl Named {
    fn one(name: &'static str, e: Entry) -> Self {
        Named { name, entries: vec![e], agg: Agg::Max }
    }

    fn max(name: &'static str, entries: Vec<Entry>) -> Self {
        Named { name, entries, agg: Agg::Max }
    }

    fn min(name: &'static str, entries: Vec<Entry>) -> Self {
        Named { name, entries, agg: Agg::Min }
    }

    fn eval(&self, table: &CompiledTable) -> NamedValue {
        let keyed = self
            .entries
            .iter()
            .map(|&(a, d, t)| (table.key(a, d, t, Some(&[])), a));
        let (key, agent) = match self.agg {
            Agg::Max => keyed.max(),
            Agg::Min => keyed.min(),
        }
        .expect("named priorities have entries");
        NamedValue { key, agent }
    }
}

/// Value of a named priority in a concrete table, with the agent attaining it.
#[derive(Clone, Copy, Debug)]
struct NamedValue {
    key: RankKey,
    agent: usize,
}

type Pred = Box<dyn Fn(&[RankKey]) -> bool>;
type Profiles = Box<dyn Fn(&[NamedValue]) -> Vec<(Option<&'static str>, Vec<usize>)>>;

struct Branch {
    label: &'static str,
    condition: &'static str,
    pred: Pred,
    /// Highest entries of the branch table; the rest is completed monotonically.
    prefix: Vec<Entry>,
    profiles: Profiles,
    claimed: RatioValue,
    strict: bool,
}

struct Split {
    theorem: String,
    instance_id: String,
    instance: SetSystemInstance,
    engine: EngineKind,
    type_names: Vec<&'static str>,
    named: Vec<Named>,
    /// Orderings of the named priorities that all-monotone tables allow.
    constraint: Pred,
    branches: Vec<Branch>,
    notes: Vec<String>,
}

fn fixed(profiles: Vec<Vec<usize>>) -> Profiles {
    Box::new(move |_| profiles.iter().map(|p| (None, p.clone())).collect())
}

fn any_order() -> Pred {
    Box::new(|_| true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub label: String,
    pub condition: String,
    pub engine: EngineKind,
    /// Top entries of the constructed table, highest first.
    pub table_prefix: Vec<String>,
    /// The adversarial profile attaining the measured ratio.
    pub profile: TypeProfile,
    pub profile_names: String,
    pub solution: Solution,
    pub alg_value: Rational,
    pub opt_value: Rational,
    pub claimed: RatioValue,
    /// Whether the claim is `measured > claimed` rather than `>=`.
    pub strict: bool,
    pub measured: RatioValue,
    /// Reading used when the adversarial profile is ambiguous.
    pub reading: Option<String>,
    /// Every reading with its ratio.
    pub readings: Vec<(String, RatioValue)>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseSplitReport {
    pub theorem: String,
    pub instance: String,
    /// `name = definition` for each named first-round priority.
    pub named: Vec<String>,
    pub cases: Vec<CaseResult>,
    /// Strict orderings of the named priorities allowed by all-monotonicity.
    pub orderings_checked: usize,
    /// Allowed orderings matched by no branch, highest first.
    pub uncovered: Vec<String>,
    pub notes: Vec<String>,
}

impl CaseSplitReport {
    pub fn passed(&self) -> bool {
        self.uncovered.is_empty() && self.cases.iter().all(|c| c.pass)
    }

    pub fn case(&self, label: &str) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.label == label)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "case split {} on {}", self.theorem, self.instance);
        for n in &self.named {
            let _ = writeln!(out, "  {n}");
        }
        for c in &self.cases {
            let _ = writeln!(
                out,
                "  [{}] {} ({}): profile {} -> {} ratio {} {} {}{}",
                if c.pass { "pass" } else { "FAIL" },
                c.label,
                c.condition,
                c.profile_names,
                c.solution,
                c.measured.render(),
                if c.strict { ">" } else { ">=" },
                c.claimed.render(),
                c.reading
                    .as_ref()
                    .map(|r| format!(" [reading {r}]"))
                    .unwrap_or_default()
            );
            if c.readings.len() > 1 {
                for (r, v) in &c.readings {
                    let _ = writeln!(out, "      reading {r}: {}", v.render());
                }
            }
        }
        let _ = writeln!(
            out,
            "  coverage: {} orderings, {} uncovered",
            self.orderings_checked,
            self.uncovered.len()
        );
        for u in &self.uncovered {
            let _ = writeln!(out, "    uncovered: {u}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        let _ = writeln!(out, "  verdict: {}", if self.passed() { "pass" } else { "FAIL" });
        out
    }

    pub fn records(&self) -> Vec<serde_json::Value> {
        let mut recs: Vec<serde_json::Value> = self
            .cases
            .iter()
            .map(|c| {
                json!({
                    "kind": "case",
                    "theorem": self.theorem,
                    "label": c.label,
                    "condition": c.condition,
                    "engine": c.engine.name(),
                    "table_prefix": c.table_prefix,
                    "profile": c.profile.render(),
                    "solution": c.solution.to_string(),
                    "claimed": c.claimed.render(),
                    "strict": c.strict,
                    "measured": c.measured.render(),
                    "reading": c.reading,
                    "pass": c.pass,
                })
            })
            .collect();
        recs.push(json!({
            "kind": "coverage",
            "theorem": self.theorem,
            "orderings": self.orderings_checked,
            "uncovered": self.uncovered,
        }));
        recs
    }
}

/// Runs the case analysis of `id` (see `CASE_SPLIT_IDS`). Each branch gets
/// a concrete all-monotone table whose first-round priorities satisfy the
/// branch condition; the engine runs on the branch's adversarial profiles
/// and the worst ratio is compared with the claimed bound. Coverage
/// enumerates every strict ordering of the named priorities.
pub fn case_split_check(id: &str, params: &Params) -> Result<CaseSplitReport> {
    let split = match id {
        "thm8-forward" => thm8_forward()?,
        "thm8-reverse" => thm8_reverse()?,
        "thm9-forward" => thm9_forward()?,
        "thm9-reverse" => thm9_reverse()?,
        "thm10-forward" => thm10(params, true)?,
        "thm10-reverse" => thm10(params, false)?,
        "thm11" => thm11(params)?,
        "thm12" => thm12(params)?,
        other => return Err(Error::UnknownTheorem(other.to_string())),
    };
    run_split(&split)
}

fn render_entry(split: &Split, &(a, d, t): &Entry) -> String {
    format!("{d}{a}({})", split.type_names[t])
}

fn run_split(split: &Split) -> Result<CaseSplitReport> {
    let inst = &split.instance;
    let mut cases = Vec::new();
    for b in &split.branches {
        let table = branch_table(inst, &b.prefix)?;
        let inconsistent = |why: &str| {
            Error::InvalidParams(format!(
                "{} branch {}: constructed table {why}",
                split.theorem, b.label
            ))
        };
        if !check_all_monotone(inst, &table)?.passed() {
            return Err(inconsistent("is not all-monotone"));
        }
        let compiled = CompiledTable::compile(inst, &table)?;
        let values: Vec<NamedValue> = split.named.iter().map(|n| n.eval(&compiled)).collect();
        let keys: Vec<RankKey> = values.iter().map(|v| v.key).collect();
        if keys.iter().collect::<HashSet<_>>().len() != keys.len() {
            return Err(inconsistent("gives two named priorities the same entry"));
        }
        if !(split.constraint)(&keys) || !(b.pred)(&keys) {
            return Err(inconsistent("violates the branch condition"));
        }
        let mut best: Option<(Option<&str>, Vec<usize>, super::scan::ProfileRatio)> = None;
        let mut readings = Vec::new();
        for (reading, p) in (b.profiles)(&values) {
            let r = ratio_at(inst, &compiled, split.engine, &p)?;
            if let Some(name) = reading {
                readings.push((name.to_string(), r.ratio.clone()));
            }
            if best.as_ref().is_none_or(|(_, _, cur)| r.ratio > cur.ratio) {
                best = Some((reading, p, r));
            }
        }
        let (reading, p, r) = best.expect("branches carry profiles");
        let pass = if b.strict {
            r.ratio > b.claimed
        } else {
            r.ratio >= b.claimed
        };
        cases.push(CaseResult {
            label: b.label.to_string(),
            condition: b.condition.to_string(),
            engine: split.engine,
            table_prefix: b.prefix.iter().map(|e| render_entry(split, e)).collect(),
            profile: inst.profile_from_indices(&p),
            profile_names: format!(
                "({})",
                p.iter().map(|&t| split.type_names[t]).collect::<Vec<_>>().join(", ")
            ),
            solution: r.solution,
            alg_value: r.alg_value,
            opt_value: r.opt_value,
            claimed: b.claimed.clone(),
            strict: b.strict,
            measured: r.ratio,
            reading: reading.map(str::to_string),
            readings,
            pass,
        });
    }
    let (orderings_checked, uncovered) = coverage(split);
    Ok(CaseSplitReport {
        theorem: split.theorem.clone(),
        instance: split.instance_id.clone(),
        named: split
            .named
            .iter()
            .map(|n| {
                let items: Vec<String> = n.entries.iter().map(|e| render_entry(split, e)).collect();
                let agg = match n.agg {
                    Agg::Max => "max",
                    Agg::Min => "min",
                };
                if items.len() == 1 {
                    format!("{} = {}", n.name, items[0])
                } else {
                    format!("{} = {agg}{{{}}}", n.name, items.join(", "))
                }
            })
            .collect(),
        cases,
        orderings_checked,
        uncovered,
        notes: split.notes.clone(),
    })
}

/// Preference order of an agent's types for a direction, best first: In
/// prefers cheaper types, Out prefers dearer ones.
fn preference(inst: &SetSystemInstance, agent: usize, dir: Direction) -> Vec<usize> {
    let order = inst.cost_order(agent);
    match dir {
        Direction::In => order,
        Direction::Out => order.into_iter().rev().collect(),
    }
}

/// Ranks `prefix` highest, each entry preceded by the entries of the same
/// agent and direction it must outrank, then every remaining In entry by
/// (preference position, agent), then every remaining Out entry likewise.
fn branch_table(inst: &SetSystemInstance, prefix: &[Entry]) -> Result<PriorityTable> {
    let mut order = Vec::new();
    let mut seen = HashSet::new();
    let mut add = |e: Entry| {
        if seen.insert(e) {
            order.push(e);
        }
    };
    for &(a, d, t) in prefix {
        for u in preference(inst, a, d) {
            add((a, d, u));
            if u == t {
                break;
            }
        }
    }
    let width = inst.radices().into_iter().max().unwrap_or(0);
    for d in [Direction::In, Direction::Out] {
        for pos in 0..width {
            for a in 0..inst.n() {
                if let Some(&t) = preference(inst, a, d).get(pos) {
                    add((a, d, t));
                }
            }
        }
    }
    let mut b = OrderedTableBuilder::new();
    for (a, d, t) in order {
        b.push(a, d, inst.value(a, t).clone(), HistorySpec::Any);
    }
    b.finish(MissingPolicy::FloorMissing)
}

/// Counts the allowed strict orderings of the named priorities and lists
/// those no branch condition accepts.
fn coverage(split: &Split) -> (usize, Vec<String>) {
    let m = split.named.len();
    let mut perm: Vec<u32> = (0..m as u32).collect();
    let mut checked = 0;
    let mut uncovered = Vec::new();
    loop {
        let keys: Vec<RankKey> = perm.iter().map(|&r| RankKey::Defined(r)).collect();
        if (split.constraint)(&keys) {
            checked += 1;
            if !split.branches.iter().any(|b| (b.pred)(&keys)) {
                let mut names: Vec<(u32, &str)> =
                    perm.iter().zip(&split.named).map(|(&r, n)| (r, n.name)).collect();
                names.sort_by_key(|x| std::cmp::Reverse(x.0));
                uncovered.push(names.iter().map(|x| x.1).collect::<Vec<_>>().join(" > "));
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    (checked, uncovered)
}

fn next_permutation(p: &mut [u32]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("p[i] qualifies");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn claim(r: Rational) -> RatioValue {
    RatioValue::Finite(r)
}

/// `sqrt(2)` rounded to the crate precision, less `10^-9`.
fn sqrt2_claim() -> Result<RatioValue> {
    Ok(claim(round12(std::f64::consts::SQRT_2)? - frac(1, 1_000_000_000)))
}

/// `sqrt(k)`: exact for perfect squares, else rounded less `10^-9`.
fn sqrt_claim(k: usize) -> Result<RatioValue> {
    Ok(claim(match sqrt_exact(&int(k as i64)) {
        Some(r) => r,
        None => round12((k as f64).sqrt())? - frac(1, 1_000_000_000),
    }))
}

// Social cost on two parallel solutions S = {x}, T = {y, z}, types 10, 22, 36.
const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

fn sc_split(theorem: &str, engine: EngineKind, named: Vec<Named>, branches: Vec<Branch>) -> Result<Split> {
    Ok(Split {
        theorem: theorem.into(),
        instance_id: "sc-parallel".into(),
        instance: make_paper_instance("sc-parallel", &Params::new())?,
        engine,
        type_names: vec!["10", "22", "36"],
        named,
        constraint: any_order(),
        branches,
        notes: Vec::new(),
    })
}

fn thm8_forward() -> Result<Split> {
    sc_split(
        "thm8-forward",
        EngineKind::Forward,
        vec![
            Named::one("gS", inn(X, 2)),
            Named::max("gT", vec![inn(Y, 0), inn(Z, 0)]),
        ],
        vec![
            Branch {
                label: "F1",
                condition: "gS > gT",
                pred: Box::new(|v| v[0] > v[1]),
                prefix: vec![inn(X, 2), inn(Y, 0), inn(Z, 0)],
                profiles: fixed(vec![vec![2, 0, 0]]),
                claimed: claim(frac(36, 20)),
                strict: false,
            },
            Branch {
                label: "F2",
                condition: "gS < gT",
                pred: Box::new(|v| v[0] < v[1]),
                prefix: vec![inn(Y, 0), inn(Z, 0), inn(X, 2)],
                profiles: fixed(vec![vec![2, 0, 2], vec![2, 2, 0]]),
                claimed: claim(frac(46, 36)),
                strict: false,
            },
        ],
    )
}

fn thm8_reverse() -> Result<Split> {
    sc_split(
        "thm8-reverse",
        EngineKind::Reverse,
        vec![
            Named::one("gS", out(X, 2)),
            Named::max("gT", vec![out(Y, 1), out(Z, 1)]),
        ],
        vec![
            Branch {
                label: "R1",
                condition: "gS > gT",
                pred: Box::new(|v| v[0] > v[1]),
                prefix: vec![out(X, 2), out(Y, 1), out(Z, 1)],
                profiles: fixed(vec![vec![2, 1, 1]]),
                claimed: claim(frac(44, 36)),
                strict: false,
            },
            Branch {
                label: "R2",
                condition: "gS < gT",
                pred: Box::new(|v| v[0] < v[1]),
                prefix: vec![out(Z, 1), out(Y, 1), out(X, 2)],
                // The T agent with the top out-priority sits at 22.
                profiles: fixed(vec![vec![2, 0, 1], vec![2, 1, 0]]),
                claimed: claim(frac(36, 32)),
                strict: false,
            },
        ],
    )
}

fn sw_split(theorem: &str, engine: EngineKind, named: Vec<Named>, constraint: Pred, branches: Vec<Branch>) -> Result<Split> {
    Ok(Split {
        theorem: theorem.into(),
        instance_id: "sw-parallel".into(),
        instance: make_paper_instance("sw-parallel", &Params::new())?,
        engine,
        type_names: vec!["tmin", "tmed", "tmax"],
        named,
        constraint,
        branches,
        notes: Vec::new(),
    })
}

fn thm9_forward() -> Result<Split> {
    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;
    let low = |v: &[RankKey]| v[A].min(v[B]);
    let f0 = move |v: &[RankKey]| v[C] > low(v) || v[D] > low(v);
    let s = sqrt2_claim()?;
    let mut split = sw_split(
        "thm9-forward",
        EngineKind::Forward,
        vec![
            Named::one("A", inn(Y, 2)),
            Named::one("B", inn(Z, 2)),
            Named::one("C", inn(X, 2)),
            Named::max("D", vec![inn(Y, 1), inn(Z, 1)]),
        ],
        // in(j, tmed) < in(j, tmax) for j = y, z.
        Box::new(|v| v[D] < v[A].max(v[B])),
        vec![
            Branch {
                label: "F0",
                condition: "C > min(A,B) or D > min(A,B)",
                pred: Box::new(f0),
                prefix: vec![inn(Y, 2), inn(X, 2), inn(Z, 2)],
                profiles: fixed(vec![vec![2, 1, 2], vec![2, 2, 1]]),
                claimed: s.clone(),
                strict: false,
            },
            Branch {
                label: "F1",
                condition: "A, B on top and C > D",
                pred: Box::new(move |v| !f0(v) && v[C] > v[D]),
                prefix: vec![inn(Y, 2), inn(Z, 2), inn(X, 2), inn(Y, 1), inn(Z, 1)],
                profiles: fixed(vec![vec![2, 1, 1]]),
                claimed: s.clone(),
                strict: false,
            },
            Branch {
                label: "F2",
                condition: "A, B on top and C < D",
                pred: Box::new(move |v| !f0(v) && v[C] < v[D]),
                prefix: vec![inn(Y, 2), inn(Z, 2), inn(Y, 1), inn(X, 2)],
                profiles: fixed(vec![vec![2, 1, 0], vec![2, 0, 1]]),
                claimed: s,
                strict: false,
            },
        ],
    )?;
    split.notes.push("tmed is 1/sqrt(2) rounded to 12 significant digits; claims are rounded sqrt(2) less 1e-9".into());
    Ok(split)
}

fn thm9_reverse() -> Result<Split> {
    const E: usize = 0;
    const G: usize = 1;
    const H: usize = 2;
    let s = sqrt2_claim()?;
    sw_split(
        "thm9-reverse",
        EngineKind::Reverse,
        vec![
            Named::one("E", out(X, 0)),
            Named::one("G", out(X, 1)),
            Named::max("H", vec![out(Y, 0), out(Z, 0)]),
        ],
        // out(x, tmin) > out(x, tmed).
        Box::new(|v| v[E] > v[G]),
        vec![
            Branch {
                label: "R0",
                condition: "H > E",
                pred: Box::new(|v| v[H] > v[E]),
                prefix: vec![out(Y, 0), out(X, 0)],
                profiles: fixed(vec![vec![0, 0, 2]]),
                claimed: s.clone(),
                strict: false,
            },
            Branch {
                label: "R1",
                condition: "E > H > G",
                pred: Box::new(|v| v[E] > v[H] && v[H] > v[G]),
                prefix: vec![out(X, 0), out(Z, 0), out(Y, 0), out(X, 1)],
                profiles: fixed(vec![vec![1, 2, 0], vec![1, 0, 2]]),
                claimed: s.clone(),
                strict: false,
            },
            Branch {
                label: "R2",
                condition: "E > G > H",
                pred: Box::new(|v| v[G] > v[H]),
                prefix: vec![out(X, 0), out(X, 1), out(Y, 0), out(Z, 0)],
                profiles: fixed(vec![vec![1, 0, 0]]),
                claimed: s,
                strict: false,
            },
        ],
    )
}

/// Downward-closed gap instance: S = {0}, T = {1..k}.
fn thm10(params: &Params, forward: bool) -> Result<Split> {
    let k = param_usize(params, "k", Some(4))?;
    let p: Params = [("k".to_string(), int(k as i64))].into_iter().collect();
    let instance = make_paper_instance("dc-gap", &p)?;
    let beta = claim(thm10_beta(k)?);
    let t: Vec<usize> = (1..=k).collect();
    let all = |ty: usize| -> Vec<usize> { std::iter::once(ty).chain(std::iter::repeat_n(ty, k)).collect() };
    let mut notes = vec![format!("claims are ((rho+1)k-1)/(rho k) at k = {k} on the rounded golden ratio")];
    let (engine, named, branches) = if forward {
        let top_t: Vec<Entry> = t.iter().map(|&j| inn(j, 2)).collect();
        let mut fs = top_t.clone();
        fs.push(inn(0, 2));
        fs.extend(t.iter().map(|&j| inn(j, 1)));
        let mut ft = top_t;
        ft.push(inn(1, 1));
        ft.push(inn(0, 2));
        let mut med = all(1);
        med[0] = 2;
        notes.push(
            "every in(T, tmax) entry ranks first; below them the top In entry is in(S, tmax) or some in(j, tmed), since all-monotone tables rank in(S, tmed) under in(S, tmax) and in(j, tmin) under in(j, tmed)".into(),
        );
        (
            EngineKind::Forward,
            vec![
                Named::one("P2", inn(0, 2)),
                Named::max("P3", t.iter().map(|&j| inn(j, 1)).collect()),
            ],
            vec![
                Branch {
                    label: "F-S",
                    condition: "P2 > P3",
                    pred: Box::new(|v| v[0] > v[1]),
                    prefix: fs,
                    profiles: fixed(vec![med]),
                    claimed: beta.clone(),
                    strict: false,
                },
                Branch {
                    label: "F-T",
                    condition: "P3 > P2",
                    pred: Box::new(|v| v[1] > v[0]),
                    prefix: ft,
                    profiles: Box::new(move |v| {
                        let mut p = vec![0; k + 1];
                        p[0] = 2;
                        p[v[1].agent] = 1;
                        vec![(None, p)]
                    }),
                    claimed: beta,
                    strict: false,
                },
            ],
        )
    } else {
        let mut ra = vec![out(0, 0)];
        ra.extend((1..k).map(|j| out(j, 0)));
        ra.push(out(0, 1));
        ra.push(out(k, 0));
        let mut rb = vec![out(0, 0)];
        rb.extend(t.iter().map(|&j| out(j, 0)));
        rb.push(out(0, 1));
        let mut tmin_t = all(0);
        tmin_t[0] = 1;
        notes.push(
            "excluding an agent is always realizable on a downward-closed family, so the reverse engine ends at the empty set and every branch measures an infinite ratio".into(),
        );
        (
            EngineKind::Reverse,
            vec![
                Named::one("O2", out(0, 1)),
                Named::min("M", t.iter().map(|&j| out(j, 0)).collect()),
            ],
            vec![
                Branch {
                    label: "R-a",
                    condition: "O2 > M",
                    pred: Box::new(|v| v[0] > v[1]),
                    prefix: ra,
                    profiles: fixed(vec![tmin_t]),
                    claimed: beta.clone(),
                    strict: false,
                },
                Branch {
                    label: "R-b",
                    condition: "M > O2",
                    pred: Box::new(|v| v[1] > v[0]),
                    prefix: rb,
                    profiles: Box::new(move |v| {
                        let mut p = vec![0; k + 1];
                        p[0] = 1;
                        p[v[1].agent] = 1;
                        vec![(None, p)]
                    }),
                    claimed: beta,
                    strict: false,
                },
            ],
        )
    };
    Ok(Split {
        theorem: if forward { "thm10-forward" } else { "thm10-reverse" }.into(),
        instance_id: format!("dc-gap:k={k}"),
        instance,
        engine,
        type_names: vec!["tmin", "tmed", "tmax"],
        named,
        constraint: any_order(),
        branches,
        notes,
    })
}

/// Two parallel cost solutions S = {0..s-1}, T = {s..s+k-1}, types
/// {tmin, tmax}; the claim is a ratio above `rho`.
fn thm11(params: &Params) -> Result<Split> {
    let s = param_usize(params, "s", Some(2))?;
    let k = param_usize(params, "k", Some(3))?;
    let tmin = param_rational(params, "tmin", Some(int(1)))?;
    let tmax = param_rational(params, "tmax", Some(int(100)))?;
    let rho = param_rational(params, "rho", Some(int(5)))?;
    let p: Params = [
        ("s".to_string(), int(s as i64)),
        ("k".to_string(), int(k as i64)),
        ("tmin".to_string(), tmin.clone()),
        ("tmax".to_string(), tmax.clone()),
    ]
    .into_iter()
    .collect();
    let instance = make_paper_instance("two-solutions", &p)?;
    let sa: Vec<usize> = (0..s).collect();
    let ta: Vec<usize> = (s..s + k).collect();
    let n = s + k;
    let profile = |lo: usize, one: usize, rest_s: usize, rest_t: usize| {
        let mut p = vec![0; n];
        for &i in &sa {
            p[i] = rest_s;
        }
        for &i in &ta {
            p[i] = rest_t;
        }
        p[lo] = one;
        p
    };
    let mut notes = Vec::new();
    let ratio = &tmax / &tmin;
    let sm1 = int(s as i64 - 1);
    let first = (&rho * int(k as i64) - int(1)) / &sm1.max(int(1));
    let second_den = int(s as i64) - &rho;
    if second_den > Rational::zero() {
        let second = &rho * int(k as i64 - 1) / &second_den;
        notes.push(format!(
            "tmax/tmin = {} against the required max{{(rho k-1)/(s-1), rho (k-1)/(s-rho)}} = {}",
            crate::rational::format_both(&ratio),
            crate::rational::format_both(&first.max(second))
        ));
    } else {
        notes.push(format!(
            "s = {s} is not above rho = {}: the bound s tmax / (tmax + (k-1) tmin) of the out(T, tmax) branch stays below s, so no domain makes it exceed rho",
            crate::rational::format_both(&rho)
        ));
    }
    let c = claim(rho);
    Ok(Split {
        theorem: "thm11".into(),
        instance_id: format!(
            "two-solutions:s={s},k={k},tmin={},tmax={}",
            crate::rational::format_exact(&tmin),
            crate::rational::format_exact(&tmax)
        ),
        instance,
        engine: EngineKind::TwoWay,
        type_names: vec!["tmin", "tmax"],
        named: vec![
            Named::max("a", sa.iter().map(|&i| inn(i, 0)).collect()),
            Named::max("b", ta.iter().map(|&i| out(i, 1)).collect()),
            Named::max("c", ta.iter().map(|&i| inn(i, 0)).collect()),
            Named::max("d", sa.iter().map(|&i| out(i, 1)).collect()),
        ],
        constraint: any_order(),
        branches: vec![
            Branch {
                label: "B1",
                condition: "in(S, tmin) on top",
                pred: Box::new(|v| v[0] > v[1].max(v[2]).max(v[3])),
                prefix: vec![inn(0, 0)],
                profiles: {
                    let p = profile(0, 0, 1, 0);
                    fixed(vec![p])
                },
                claimed: c.clone(),
                strict: true,
            },
            Branch {
                label: "B2",
                condition: "out(T, tmax) on top",
                pred: Box::new(|v| v[1] > v[0].max(v[2]).max(v[3])),
                prefix: vec![out(s, 1)],
                profiles: fixed(vec![profile(s, 1, 1, 0)]),
                claimed: c.clone(),
                strict: true,
            },
            Branch {
                label: "B3",
                condition: "in(T, tmin) on top",
                pred: Box::new(|v| v[2] > v[0].max(v[1]).max(v[3])),
                prefix: vec![inn(s, 0)],
                profiles: fixed(vec![profile(s, 0, 0, 1)]),
                claimed: c.clone(),
                strict: true,
            },
            Branch {
                label: "B4",
                condition: "out(S, tmax) on top",
                pred: Box::new(|v| v[3] > v[0].max(v[1]).max(v[2])),
                prefix: vec![out(0, 1)],
                profiles: fixed(vec![profile(0, 1, 0, 1)]),
                claimed: c,
                strict: true,
            },
        ],
        notes,
    })
}

/// Singleton S = {0} against T = {1..k} with valuations {0, 1/sqrt k, 1}
/// under the two-way engine.
fn thm12(params: &Params) -> Result<Split> {
    let k = param_usize(params, "k", Some(4))?;
    let p: Params = [
        ("k".to_string(), int(k as i64)),
        ("tmin".to_string(), int(0)),
        ("tmed".to_string(), inverse_sqrt(k)?),
        ("tmax".to_string(), int(1)),
    ]
    .into_iter()
    .collect();
    let instance = make_paper_instance("asym-knapsack", &p)?;
    let t: Vec<usize> = (1..=k).collect();
    let n = k + 1;
    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;
    const E: usize = 4;
    const F: usize = 5;
    let root = sqrt_claim(k)?;
    // Profile with S at `s`, every T agent at `rest`, then overrides.
    let prof = move |s: usize, rest: usize, over: &[(usize, usize)]| {
        let mut p = vec![rest; n];
        p[0] = s;
        for &(i, ty) in over {
            p[i] = ty;
        }
        p
    };
    let top_in_t: Vec<Entry> = t.iter().map(|&j| inn(j, 2)).collect();
    let with = |extra: &[Entry]| {
        let mut v = top_in_t.clone();
        v.extend_from_slice(extra);
        v
    };
    let a_top = |v: &[RankKey]| v[A] > v[B] && v[A] > v[C] && v[A] > v[D];
    let f_over = move |v: &[RankKey]| a_top(v) && v[F] > v[B] && v[F] > v[C] && v[F] > v[E];
    let next_is = move |v: &[RankKey], i: usize| f_over(v) && [B, C, D, E].iter().all(|&j| j == i || v[i] > v[j]);
    let branches = vec![
        Branch {
            label: "1",
            condition: "a < b",
            pred: Box::new(|v| v[A] < v[B]),
            prefix: vec![out(1, 0)],
            profiles: Box::new(move |v| {
                let (j, it) = (v[B].agent, v[A].agent);
                vec![
                    (Some("r1: S and j at tmin, other T at tmed"), prof(0, 1, &[(j, 0)])),
                    (Some("r2: S and j at tmin, i_T at tmed, other T at tmin"), prof(0, 0, &[(it, 1), (j, 0)])),
                    (Some("r3: S and j at tmin, i_T at tmax, other T at tmed"), prof(0, 1, &[(it, 2), (j, 0)])),
                ]
            }),
            claimed: RatioValue::Infinite,
            strict: false,
        },
        Branch {
            label: "2",
            condition: "b < a < c",
            pred: Box::new(|v| v[A] > v[B] && v[A] < v[C]),
            prefix: vec![inn(0, 2)],
            profiles: Box::new(move |v| vec![(None, prof(2, 1, &[(v[A].agent, 2)]))]),
            claimed: root.clone(),
            strict: true,
        },
        Branch {
            label: "3",
            condition: "max(b, c) < a < d",
            pred: Box::new(|v| v[A] > v[B] && v[A] > v[C] && v[A] < v[D]),
            prefix: {
                let mut p = vec![out(0, 1)];
                p.extend(t.iter().map(|&j| inn(j, 2)));
                p
            },
            profiles: fixed(vec![prof(1, 0, &[])]),
            claimed: RatioValue::Infinite,
            strict: false,
        },
        Branch {
            label: "4a",
            condition: "a > max(b, c, d), e > f, c > e",
            pred: Box::new(move |v| a_top(v) && v[E] > v[F] && v[C] > v[E]),
            prefix: with(&[inn(0, 2)].into_iter().chain(t.iter().map(|&j| inn(j, 1))).collect::<Vec<_>>()),
            profiles: fixed(vec![prof(2, 1, &[])]),
            claimed: root.clone(),
            strict: false,
        },
        Branch {
            label: "4b",
            condition: "a > max(b, c, d), e > f, e > c",
            pred: Box::new(move |v| a_top(v) && v[E] > v[F] && v[E] > v[C]),
            prefix: with(&[inn(1, 1), inn(0, 2)]),
            profiles: Box::new(move |v| vec![(None, prof(2, 0, &[(v[E].agent, 1)]))]),
            claimed: root.clone(),
            strict: false,
        },
        Branch {
            label: "5a",
            condition: "a > max(b, c, d), e < f < b",
            pred: Box::new(move |v| a_top(v) && v[F] > v[E] && v[F] < v[B]),
            prefix: with(&[out(1, 0), out(0, 0)]),
            profiles: Box::new(move |v| {
                let j = v[B].agent;
                vec![
                    (Some("r1: S at tmin, T at tmed"), prof(0, 1, &[])),
                    (Some("r2: S and j at tmin, other T at tmed"), prof(0, 1, &[(j, 0)])),
                    (Some("r3: every agent at tmin"), prof(0, 0, &[])),
                ]
            }),
            claimed: RatioValue::Infinite,
            strict: false,
        },
        Branch {
            label: "5b",
            condition: "a > max(b, c, d), max(b, e) < f < c",
            pred: Box::new(move |v| a_top(v) && v[F] > v[E] && v[F] > v[B] && v[F] < v[C]),
            prefix: with(&[inn(0, 2), out(0, 0)]),
            profiles: fixed(vec![prof(2, 1, &[])]),
            claimed: root.clone(),
            strict: false,
        },
        Branch {
            label: "5c",
            condition: "a, f > b, c, e; then e",
            pred: Box::new(move |v| next_is(v, E)),
            prefix: with(&[out(0, 0), inn(1, 1)]),
            profiles: Box::new(move |v| vec![(None, prof(2, 0, &[(v[E].agent, 1)]))]),
            claimed: root.clone(),
            strict: false,
        },
        Branch {
            label: "5d",
            condition: "a, f > b, c, e; then b",
            pred: Box::new(move |v| next_is(v, B)),
            prefix: with(&[out(0, 0), out(1, 0)]),
            profiles: Box::new(move |v| vec![(None, prof(1, 1, &[(v[B].agent, 0)]))]),
            claimed: claim(int(k as i64 - 1)),
            strict: false,
        },
        Branch {
            label: "5e",
            condition: "a, f > b, c, e; then c",
            pred: Box::new(move |v| next_is(v, C)),
            prefix: with(&[out(0, 0), inn(0, 2)]),
            profiles: fixed(vec![prof(2, 1, &[])]),
            claimed: root.clone(),
            strict: false,
        },
        Branch {
            label: "5f",
            condition: "a, f > b, c, e; then d",
            pred: Box::new(move |v| next_is(v, D)),
            prefix: with(&[out(0, 0), out(0, 1)]),
            profiles: fixed(vec![prof(1, 0, &[])]),
            claimed: RatioValue::Infinite,
            strict: false,
        },
    ];
    Ok(Split {
        theorem: "thm12".into(),
        instance_id: format!("asym-knapsack:k={k},tmin=0,tmed=1/sqrt(k),tmax=1"),
        instance,
        engine: EngineKind::TwoWay,
        type_names: vec!["tmin", "tmed", "tmax"],
        named: vec![
            Named::min("a", t.iter().map(|&j| inn(j, 2)).collect()),
            Named::max("b", t.iter().map(|&j| out(j, 0)).collect()),
            Named::one("c", inn(0, 2)),
            Named::one("d", out(0, 1)),
            Named::max("e", t.iter().map(|&j| inn(j, 1)).collect()),
            Named::one("f", out(0, 0)),
        ],
        // out(S, tmin) > out(S, tmed).
        constraint: Box::new(|v| v[F] > v[D]),
        branches,
        notes: vec![
            "i_T is the T agent attaining a, j the one attaining b; ambiguous adversarial profiles are measured under every reading and the worst reading is reported".into(),
            "in branch 5a the profile text puts the tmed agents in S; S is a singleton, so the readings place them in T".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(id: &str) -> CaseSplitReport {
        case_split_check(id, &Params::new()).unwrap()
    }

    #[test]
    fn thm8_forward_branches() {
        let r = run("thm8-forward");
        assert!(r.passed(), "{}", r.render());
        assert_eq!(r.case("F1").unwrap().measured, RatioValue::Finite(frac(36, 20)));
        assert_eq!(r.case("F2").unwrap().measured, RatioValue::Finite(frac(46, 36)));
        assert_eq!(r.orderings_checked, 2);
    }

    #[test]
    fn thm8_reverse_branches() {
        let r = run("thm8-reverse");
        assert!(r.passed(), "{}", r.render());
        assert_eq!(r.case("R1").unwrap().measured, RatioValue::Finite(frac(44, 36)));
        assert_eq!(r.case("R2").unwrap().measured, RatioValue::Finite(frac(36, 32)));
    }

    #[test]
    fn thm11_out_branch_stays_below_two() {
        let r = run("thm11");
        assert_eq!(r.case("B1").unwrap().measured, RatioValue::Finite(frac(101, 3)));
        assert_eq!(r.case("B2").unwrap().measured, RatioValue::Finite(frac(100, 51)));
        assert_eq!(r.case("B3").unwrap().measured, RatioValue::Finite(frac(201, 2)));
        assert_eq!(r.case("B4").unwrap().measured, RatioValue::Finite(frac(300, 101)));
        assert!(!r.passed());
        assert!(r.uncovered.is_empty());
        assert_eq!(r.orderings_checked, 24);
    }

    #[test]
    fn unknown_theorem() {
        assert!(matches!(
            case_split_check("thm99", &Params::new()),
            Err(Error::UnknownTheorem(_))
        ));
    }

    #[test]
    fn permutations_are_exhaustive() {
        let mut p = vec![0u32, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, vec![3, 2, 1, 0]);
    }
}
