//! Binary-allocation set-system instances: domains, feasible families,
//! profiles, objective evaluation and the constructions used by the
//! separation and lower-bound experiments.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, frac, int, parse_decimal, round12, Rational};

/// Agents are addressed by bit position, so instances hold at most 64 agents.
pub const MAX_AGENTS: usize = 64;

/// Largest ground set whose subsets are enumerated (knapsack, downward
/// closures, spanning trees) and default cap for brute-force optima.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

pub type Params = BTreeMap<String, Rational>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Cost,
    Valuation,
}

impl Orientation {
    /// Costs as-is, valuations negated. Lower key means a better type for
    /// being selected; all query-direction logic runs on this key.
    pub fn cost_key(self, v: &Rational) -> Rational {
        match self {
            Orientation::Cost => v.clone(),
            Orientation::Valuation => -v.clone(),
        }
    }

    /// Whether objective value `a` beats `b` strictly.
    pub fn improves(self, a: &Rational, b: &Rational) -> bool {
        match self {
            Orientation::Cost => a < b,
            Orientation::Valuation => a > b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::Cost => "cost",
            Orientation::Valuation => "valuation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentDomain {
    values: Vec<Rational>,
}

impl AgentDomain {
    /// Requires at least two nonnegative values in strictly increasing order.
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidDomain(format!(
                "a domain needs at least 2 values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| v < &Rational::zero()) {
            return Err(Error::InvalidDomain("domain values must be nonnegative".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDomain(
                "domain values must be strictly increasing".into(),
            ));
        }
        Ok(AgentDomain { values })
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| int(v)).collect())
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, idx: usize) -> &Rational {
        &self.values[idx]
    }

    pub fn index_of(&self, v: &Rational) -> Option<usize> {
        self.values.binary_search(v).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleFamily {
    Explicit { sets: Vec<Vec<usize>> },
    Knapsack { sizes: Vec<u64>, capacity: u64 },
    /// Agents are the edges; feasible sets are the spanning trees.
    GraphicMatroid {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    /// Pairwise-disjoint nonempty sets; exactly these are feasible.
    ParallelSolutions { sets: Vec<Vec<usize>> },
    /// Every subset of some base is feasible.
    DownwardClosure { bases: Vec<Vec<usize>> },
}

/// Bitmask of agent indices.
pub type AgentMask = u64;

pub fn mask_of(indices: &[usize]) -> AgentMask {
    indices.iter().fold(0, |m, &i| m | (1u64 << i))
}

pub fn members(mask: AgentMask) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// Lexicographic order on sorted index lists: `{} < {0} < {0,1} < {0,2} < {1}`.
pub fn lex_cmp(a: AgentMask, b: AgentMask) -> Ordering {
    let (mut x, mut y) = (a, b);
    loop {
        match (x == 0, y == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (ix, iy) = (x.trailing_zeros(), y.trailing_zeros());
        if ix != iy {
            return ix.cmp(&iy);
        }
        x &= x - 1;
        y &= y - 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    selected: Vec<usize>,
}

impl Solution {
    pub fn new(mut selected: Vec<usize>) -> Self {
        selected.sort_unstable();
        selected.dedup();
        Solution { selected }
    }

    pub fn from_mask(mask: AgentMask) -> Self {
        Solution {
            selected: members(mask),
        }
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn mask(&self) -> AgentMask {
        mask_of(&self.selected)
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.selected.binary_search(&agent).is_ok()
    }

    pub fn indicator(&self, agent: usize) -> u8 {
        u8::from(self.contains(agent))
    }
}

impl std::fmt::Display for Solution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let items: Vec<String> = self.selected.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypeProfile {
    types: Vec<Rational>,
}

impl TypeProfile {
    pub fn new(types: Vec<Rational>) -> Self {
        TypeProfile { types }
    }

    pub fn from_ints(types: &[i64]) -> Self {
        TypeProfile::new(types.iter().map(|&v| int(v)).collect())
    }

    pub fn types(&self) -> &[Rational] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Comma-separated exact values.
    pub fn render(&self) -> String {
        let parts: Vec<String> = self.types.iter().map(rational::format_exact).collect();
        format!("({})", parts.join(", "))
    }

    /// Parses `a,b,c` decimals.
    pub fn parse(text: &str) -> Result<Self> {
        let types = text
            .split(',')
            .map(parse_decimal)
            .collect::<Result<Vec<_>>>()?;
        Ok(TypeProfile::new(types))
    }
}

/// Odometer over type-index profiles; the last agent varies fastest, so
/// iteration order is lexicographic with agent 0 most significant.
pub fn next_profile(profile: &mut [usize], radices: &[usize]) -> bool {
    for i in (0..profile.len()).rev() {
        profile[i] += 1;
        if profile[i] < radices[i] {
            return true;
        }
        profile[i] = 0;
    }
    false
}

/// Mixed-radix decoding matching `next_profile` order.
pub fn decode_profile(mut index: u128, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for i in (0..radices.len()).rev() {
        let r = radices[i] as u128;
        out[i] = (index % r) as usize;
        index /= r;
    }
    out
}

pub fn encode_profile(profile: &[usize], radices: &[usize]) -> u128 {
    profile
        .iter()
        .zip(radices)
        .fold(0u128, |acc, (&t, &r)| acc * r as u128 + t as u128)
}

#[derive(Clone, Debug)]
pub struct SetSystemInstance {
    domains: Vec<AgentDomain>,
    orientation: Orientation,
    family: FeasibleFamily,
    feasible: Vec<AgentMask>,
}

impl SetSystemInstance {
    pub fn new(
        domains: Vec<AgentDomain>,
        orientation: Orientation,
        family: FeasibleFamily,
    ) -> Result<Self> {
        Self::with_enumeration_cap(domains, orientation, family, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_enumeration_cap(
        domains: Vec<AgentDomain>,
        orientation: Orientation,
        family: FeasibleFamily,
        cap: usize,
    ) -> Result<Self> {
        let n = domains.len();
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::InvalidParams(format!(
                "agent count must be in 1..={MAX_AGENTS}, got {n}"
            )));
        }
        let feasible = enumerate_family(n, &family, cap)?;
        if feasible.is_empty() {
            return Err(Error::InvalidParams("family has no feasible set".into()));
        }
        Ok(SetSystemInstance {
            domains,
            orientation,
            family,
            feasible,
        })
    }

    pub fn n(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[AgentDomain] {
        &self.domains
    }

    pub fn domain(&self, agent: usize) -> &AgentDomain {
        &self.domains[agent]
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn family(&self) -> &FeasibleFamily {
        &self.family
    }

    /// All feasible sets in lexicographic order.
    pub fn feasible_masks(&self) -> &[AgentMask] {
        &self.feasible
    }

    pub fn radices(&self) -> Vec<usize> {
        self.domains.iter().map(AgentDomain::len).collect()
    }

    /// Number of full profiles, saturating at `u128::MAX`.
    pub fn profile_count(&self) -> u128 {
        self.domains
            .iter()
            .fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
    }

    pub fn value(&self, agent: usize, type_idx: usize) -> &Rational {
        self.domains[agent].value(type_idx)
    }

    pub fn cost_key(&self, agent: usize, type_idx: usize) -> Rational {
        self.orientation.cost_key(self.value(agent, type_idx))
    }

    /// Type indices of `agent` sorted by increasing cost key.
    pub fn cost_order(&self, agent: usize) -> Vec<usize> {
        let m = self.domains[agent].len();
        match self.orientation {
            Orientation::Cost => (0..m).collect(),
            Orientation::Valuation => (0..m).rev().collect(),
        }
    }

    pub fn profile_indices(&self, profile: &TypeProfile) -> Result<Vec<usize>> {
        if profile.len() != self.n() {
            return Err(Error::InvalidParams(format!(
                "profile has {} types, instance has {} agents",
                profile.len(),
                self.n()
            )));
        }
        profile
            .types()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                self.domains[i].index_of(v).ok_or_else(|| {
                    Error::InvalidParams(format!(
                        "type {} is not in the domain of agent {i}",
                        rational::format_exact(v)
                    ))
                })
            })
            .collect()
    }

    pub fn profile_from_indices(&self, indices: &[usize]) -> TypeProfile {
        TypeProfile::new(
            indices
                .iter()
                .enumerate()
                .map(|(i, &t)| self.value(i, t).clone())
                .collect(),
        )
    }

    pub fn is_feasible(&self, subset: &[usize]) -> bool {
        if subset.iter().any(|&i| i >= self.n()) {
            return false;
        }
        let mask = mask_of(subset);
        match &self.family {
            FeasibleFamily::Explicit { sets } | FeasibleFamily::ParallelSolutions { sets } => {
                sets.iter().any(|s| mask_of(s) == mask)
            }
            FeasibleFamily::Knapsack { sizes, capacity } => {
                members(mask).iter().map(|&i| sizes[i]).sum::<u64>() <= *capacity
            }
            FeasibleFamily::GraphicMatroid { vertices, edges } => {
                is_spanning_tree(*vertices, edges, mask)
            }
            FeasibleFamily::DownwardClosure { bases } => {
                bases.iter().any(|b| mask & !mask_of(b) == 0)
            }
        }
    }

    pub fn objective_value(&self, profile: &TypeProfile, solution: &Solution) -> Rational {
        solution
            .selected()
            .iter()
            .fold(Rational::zero(), |acc, &i| acc + &profile.types()[i])
    }

    /// Objective of `mask` at a type-index profile.
    pub fn objective_indices(&self, profile: &[usize], mask: AgentMask) -> Rational {
        let mut m = mask;
        let mut total = Rational::zero();
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            total += self.value(i, profile[i]);
            m &= m - 1;
        }
        total
    }

    pub fn brute_force_optimum(&self, profile: &TypeProfile) -> Result<(Solution, Rational)> {
        self.brute_force_optimum_with_cap(profile, DEFAULT_ENUMERATION_CAP)
    }

    /// Best feasible set; ties go to the lexicographically smallest set.
    pub fn brute_force_optimum_with_cap(
        &self,
        profile: &TypeProfile,
        cap: usize,
    ) -> Result<(Solution, Rational)> {
        let enumerated = matches!(
            self.family,
            FeasibleFamily::Knapsack { .. } | FeasibleFamily::DownwardClosure { .. }
        );
        if enumerated && self.n() > cap {
            return Err(Error::CapExceeded {
                what: "brute-force enumeration",
                required: format!("{} agents", self.n()),
                cap: cap as u128,
            });
        }
        let idx = self.profile_indices(profile)?;
        let (mask, value) = self.optimum_indices(&idx);
        Ok((Solution::from_mask(mask), value))
    }

    pub fn optimum_indices(&self, profile: &[usize]) -> (AgentMask, Rational) {
        let mut best: Option<(AgentMask, Rational)> = None;
        for &s in &self.feasible {
            let v = self.objective_indices(profile, s);
            let better = match &best {
                None => true,
                Some((_, bv)) => self.orientation.improves(&v, bv),
            };
            if better {
                best = Some((s, v));
            }
        }
        best.expect("instances always hold a feasible set")
    }

    pub fn to_json(&self) -> Result<String> {
        let domains = self
            .domains
            .iter()
            .map(|d| {
                d.values()
                    .iter()
                    .map(|v| {
                        rational::format_decimal_exact(v).ok_or_else(|| {
                            Error::InvalidParams(format!(
                                "{} has no finite decimal form",
                                rational::format_exact(v)
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let file = InstanceFile {
            n: self.n(),
            orientation: self.orientation,
            domains,
            family: self.family.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.domains.len() != file.n {
            return Err(Error::Parse(format!(
                "n = {} but {} domains given",
                file.n,
                file.domains.len()
            )));
        }
        let domains = file
            .domains
            .iter()
            .map(|d| {
                let values = d
                    .iter()
                    .map(|s| parse_decimal(s))
                    .collect::<Result<Vec<_>>>()?;
                AgentDomain::new(values)
            })
            .collect::<Result<Vec<_>>>()?;
        SetSystemInstance::new(domains, file.orientation, file.family)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    orientation: Orientation,
    domains: Vec<Vec<String>>,
    family: FeasibleFamily,
}

fn check_indices(n: usize, sets: &[Vec<usize>]) -> Result<()> {
    for s in sets {
        if let Some(&bad) = s.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidParams(format!(
                "agent index {bad} out of range for {n} agents"
            )));
        }
    }
    Ok(())
}

fn subset_cap_error(what: &'static str, size: usize, cap: usize) -> Error {
    Error::CapExceeded {
        what,
        required: format!("2^{size} subsets"),
        cap: 1u128 << cap.min(127),
    }
}

fn enumerate_family(n: usize, family: &FeasibleFamily, cap: usize) -> Result<Vec<AgentMask>> {
    let mut out: Vec<AgentMask> = match family {
        FeasibleFamily::Explicit { sets } => {
            check_indices(n, sets)?;
            sets.iter().map(|s| mask_of(s)).collect()
        }
        FeasibleFamily::ParallelSolutions { sets } => {
            check_indices(n, sets)?;
            let mut seen = 0u64;
            for s in sets {
                let m = mask_of(s);
                if m == 0 {
                    return Err(Error::InvalidParams("parallel solutions must be nonempty".into()));
                }
                if m & seen != 0 {
                    return Err(Error::InvalidParams(
                        "parallel solutions must be pairwise disjoint".into(),
                    ));
                }
                seen |= m;
            }
            sets.iter().map(|s| mask_of(s)).collect()
        }
        FeasibleFamily::Knapsack { sizes, capacity } => {
            if sizes.len() != n {
                return Err(Error::InvalidParams(format!(
                    "knapsack has {} sizes for {n} agents",
                    sizes.len()
                )));
            }
            if sizes.contains(&0) || *capacity == 0 {
                return Err(Error::InvalidParams(
                    "knapsack sizes and capacity must be positive".into(),
                ));
            }
            if n > cap {
                return Err(subset_cap_error("knapsack enumeration", n, cap));
            }
            (0..(1u64 << n))
                .filter(|&m| members(m).iter().map(|&i| sizes[i]).sum::<u64>() <= *capacity)
                .collect()
        }
        FeasibleFamily::GraphicMatroid { vertices, edges } => {
            if edges.len() != n {
                return Err(Error::InvalidParams(format!(
                    "graphic matroid has {} edges for {n} agents",
                    edges.len()
                )));
            }
            if *vertices == 0 || edges.iter().any(|&(a, b)| a >= *vertices || b >= *vertices) {
                return Err(Error::InvalidParams("edge endpoint out of range".into()));
            }
            if n > cap {
                return Err(subset_cap_error("spanning-tree enumeration", n, cap));
            }
            (0..(1u64 << n))
                .filter(|&m| is_spanning_tree(*vertices, edges, m))
                .collect()
        }
        FeasibleFamily::DownwardClosure { bases } => {
            check_indices(n, bases)?;
            let mut all = Vec::new();
            for b in bases {
                let base = mask_of(b);
                let size = base.count_ones() as usize;
                if size > cap {
                    return Err(subset_cap_error("downward-closure enumeration", size, cap));
                }
                // Submask walk, including the empty set.
                let mut sub = base;
                loop {
                    all.push(sub);
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & base;
                }
            }
            all
        }
    };
    out.sort_by(|a, b| lex_cmp(*a, *b));
    out.dedup();
    Ok(out)
}

fn is_spanning_tree(vertices: usize, edges: &[(usize, usize)], mask: AgentMask) -> bool {
    if mask.count_ones() as usize + 1 != vertices {
        return false;
    }
    let mut parent: Vec<usize> = (0..vertices).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for e in members(mask) {
        let (a, b) = edges[e];
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Splits `id:key=value,key=value` into the id and its decimal parameters.
pub fn parse_id_spec(spec: &str) -> Result<(String, Params)> {
    let (id, rest) = match spec.split_once(':') {
        Some((id, rest)) => (id, rest),
        None => (spec, ""),
    };
    let mut params = Params::new();
    for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
        params.insert(k.trim().to_string(), parse_decimal(v)?);
    }
    Ok((id.trim().to_string(), params))
}

pub fn param_rational(params: &Params, key: &str, default: Option<Rational>) -> Result<Rational> {
    match params.get(key) {
        Some(v) => Ok(v.clone()),
        None => default.ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`"))),
    }
}

pub fn param_usize(params: &Params, key: &str, default: Option<usize>) -> Result<usize> {
    match params.get(key) {
        Some(v) => {
            if !v.is_integer() || v < &Rational::zero() {
                return Err(Error::InvalidParams(format!(
                    "parameter `{key}` must be a nonnegative integer"
                )));
            }
            v.to_integer()
                .try_into()
                .map_err(|_| Error::InvalidParams(format!("parameter `{key}` is too large")))
        }
        None => default.ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`"))),
    }
}

/// Golden ratio materialized at the crate-wide precision.
pub fn golden_ratio() -> Result<Rational> {
    round12((1.0 + 5f64.sqrt()) / 2.0)
}

/// `1/sqrt(k)`: exact for perfect squares, rounded otherwise.
pub fn inverse_sqrt(k: usize) -> Result<Rational> {
    match rational::sqrt_exact(&int(k as i64)) {
        Some(r) => Ok(Rational::one() / r),
        None => round12(1.0 / (k as f64).sqrt()),
    }
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "rounded construction violates a required strict inequality: {what}"
        )))
    }
}

fn uniform_domains(n: usize, values: &[Rational]) -> Result<Vec<AgentDomain>> {
    let d = AgentDomain::new(values.to_vec())?;
    Ok(vec![d; n])
}

/// Builds the named construction. Recognized ids and parameters:
///
/// * `sc-parallel`: costs {10,22,36}, S = {0}, T = {1,2}.
/// * `sw-parallel`: valuations {0, 1/sqrt 2, 1}, S = {0}, T = {1,2}.
/// * `dc-gap` (`k`, even, >= 4): valuations {1, rho k, (k/2)(rho k + 1)},
///   feasible sets {0} and every subset of {1..k}.
/// * `two-solutions` (`s`, `k`, `tmin`, `tmax`): costs {tmin, tmax},
///   S = {0..s-1}, T = the next k agents.
/// * `asym-knapsack` (`k`, `tmin`, `tmed`, `tmax`): valuations, S = {0},
///   T = {1..k}.
/// * `knapsack-log` (`k`): valuations {0, t_k < ... < t_1, 1} with
///   t_x = 1/(x sqrt(2 ln k)), feasible sets {0} and every subset of {1..k}.
/// * `ca-appendixB` (`tmed` = 1, `tmax` = 3): bidders 0 and 1 want one item
///   each, bidder 2 wants both; valuations {0, tmed, tmax}.
/// * `matroid`: triangle graph, every edge with cost domain {1,2,3}.
pub fn make_paper_instance(id: &str, params: &Params) -> Result<SetSystemInstance> {
    match id {
        "sc-parallel" => SetSystemInstance::new(
            uniform_domains(3, &[int(10), int(22), int(36)])?,
            Orientation::Cost,
            FeasibleFamily::ParallelSolutions {
                sets: vec![vec![0], vec![1, 2]],
            },
        ),
        "sw-parallel" => {
            let tmed = round12(std::f64::consts::FRAC_1_SQRT_2)?;
            require(tmed > Rational::zero() && tmed < Rational::one(), "0 < tmed < 1")?;
            require(&tmed * int(2) > Rational::one(), "2 tmed > tmax")?;
            SetSystemInstance::new(
                uniform_domains(3, &[Rational::zero(), tmed, Rational::one()])?,
                Orientation::Valuation,
                FeasibleFamily::ParallelSolutions {
                    sets: vec![vec![0], vec![1, 2]],
                },
            )
        }
        "dc-gap" => {
            let k = param_usize(params, "k", Some(4))?;
            if k < 4 || k % 2 != 0 || k + 1 > DEFAULT_ENUMERATION_CAP {
                return Err(Error::InvalidParams(format!(
                    "dc-gap needs an even k with 4 <= k <= {}, got {k}",
                    DEFAULT_ENUMERATION_CAP - 1
                )));
            }
            let [tmin, tmed, tmax] = dc_gap_values(k)?;
            let rho = golden_ratio()?;
            require(tmin < tmed && tmed < tmax, "tmin < tmed < tmax")?;
            require(int(k as i64 / 2) > rho, "k/2 > rho")?;
            SetSystemInstance::new(
                uniform_domains(k + 1, &[tmin, tmed, tmax])?,
                Orientation::Valuation,
                FeasibleFamily::DownwardClosure {
                    bases: vec![vec![0], (1..=k).collect()],
                },
            )
        }
        "two-solutions" => {
            let s = param_usize(params, "s", Some(2))?;
            let k = param_usize(params, "k", Some(3))?;
            let tmin = param_rational(params, "tmin", Some(int(1)))?;
            let tmax = param_rational(params, "tmax", Some(int(100)))?;
            if s == 0 || k == 0 || s + k > MAX_AGENTS {
                return Err(Error::InvalidParams("s and k must be positive".into()));
            }
            if tmin >= tmax {
                return Err(Error::InvalidParams("two-solutions needs tmin < tmax".into()));
            }
            SetSystemInstance::new(
                uniform_domains(s + k, &[tmin, tmax])?,
                Orientation::Cost,
                FeasibleFamily::ParallelSolutions {
                    sets: vec![(0..s).collect(), (s..s + k).collect()],
                },
            )
        }
        "asym-knapsack" => {
            let k = param_usize(params, "k", Some(4))?;
            let tmin = param_rational(params, "tmin", Some(Rational::zero()))?;
            let tmed = param_rational(params, "tmed", Some(frac(1, 2)))?;
            let tmax = param_rational(params, "tmax", Some(Rational::one()))?;
            if k < 2 || k + 1 > MAX_AGENTS {
                return Err(Error::InvalidParams(format!("asym-knapsack needs k >= 2, got {k}")));
            }
            if !(tmin < tmed && tmed < tmax) {
                return Err(Error::InvalidParams(
                    "asym-knapsack needs tmin < tmed < tmax".into(),
                ));
            }
            SetSystemInstance::new(
                uniform_domains(k + 1, &[tmin, tmed, tmax])?,
                Orientation::Valuation,
                FeasibleFamily::ParallelSolutions {
                    sets: vec![vec![0], (1..=k).collect()],
                },
            )
        }
        "knapsack-log" => {
            let k = param_usize(params, "k", Some(4))?;
            if k < 2 || k + 1 > DEFAULT_ENUMERATION_CAP {
                return Err(Error::InvalidParams(format!(
                    "knapsack-log needs 2 <= k <= {}, got {k}",
                    DEFAULT_ENUMERATION_CAP - 1
                )));
            }
            let scale = (2.0 * (k as f64).ln()).sqrt();
            let mut values = vec![Rational::zero()];
            for x in (1..=k).rev() {
                values.push(round12(1.0 / (x as f64 * scale))?);
            }
            values.push(Rational::one());
            require(
                values.windows(2).all(|w| w[0] < w[1]),
                "0 < t_k < ... < t_1 < 1",
            )?;
            SetSystemInstance::new(
                uniform_domains(k + 1, &values)?,
                Orientation::Valuation,
                FeasibleFamily::DownwardClosure {
                    bases: vec![vec![0], (1..=k).collect()],
                },
            )
        }
        "ca-appendixB" => {
            let tmed = param_rational(params, "tmed", Some(Rational::one()))?;
            let tmax = param_rational(params, "tmax", Some(int(3)))?;
            if !(tmed > Rational::zero() && &tmed * int(2) < tmax) {
                return Err(Error::InvalidParams(
                    "ca-appendixB needs 0 < tmed and 2 tmed < tmax".into(),
                ));
            }
            SetSystemInstance::new(
                uniform_domains(3, &[Rational::zero(), tmed, tmax])?,
                Orientation::Valuation,
                FeasibleFamily::DownwardClosure {
                    bases: vec![vec![0, 1], vec![2]],
                },
            )
        }
        "matroid" => graphic_matroid_instance(
            3,
            &[(0, 1), (1, 2), (0, 2)],
            uniform_domains(3, &[int(1), int(2), int(3)])?,
        ),
        other => Err(Error::UnknownId(other.to_string())),
    }
}

/// `[1, rho k, (k/2)(rho k + 1)]` on the rounded golden ratio.
pub fn dc_gap_values(k: usize) -> Result<[Rational; 3]> {
    let rho = golden_ratio()?;
    let kk = int(k as i64);
    let tmed = &rho * &kk;
    let tmax = (&kk / int(2)) * (&tmed + Rational::one());
    Ok([Rational::one(), tmed, tmax])
}

/// Minimization over the spanning trees of a multigraph whose edges are the agents.
pub fn graphic_matroid_instance(
    vertices: usize,
    edges: &[(usize, usize)],
    domains: Vec<AgentDomain>,
) -> Result<SetSystemInstance> {
    if edges.len() > 8 {
        return Err(Error::InvalidParams(format!(
            "graphic matroids are limited to 8 edges, got {}",
            edges.len()
        )));
    }
    SetSystemInstance::new(
        domains,
        Orientation::Cost,
        FeasibleFamily::GraphicMatroid {
            vertices,
            edges: edges.to_vec(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parallel() -> SetSystemInstance {
        make_paper_instance("sc-parallel", &Params::new()).unwrap()
    }

    #[test]
    fn parallel_membership() {
        let inst = parallel();
        assert!(inst.is_feasible(&[1, 2]));
        assert!(!inst.is_feasible(&[0, 1]));
        assert!(inst.is_feasible(&[0]));
        assert!(!inst.is_feasible(&[]));
    }

    #[test]
    fn knapsack_membership() {
        let inst = SetSystemInstance::new(
            vec![AgentDomain::from_ints(&[1, 2]).unwrap(); 3],
            Orientation::Valuation,
            FeasibleFamily::Knapsack {
                sizes: vec![2, 2, 3],
                capacity: 4,
            },
        )
        .unwrap();
        assert!(inst.is_feasible(&[0, 1]));
        assert!(!inst.is_feasible(&[0, 2]));
    }

    #[test]
    fn objective_values() {
        let inst = parallel();
        let p = TypeProfile::from_ints(&[36, 10, 10]);
        assert_eq!(inst.objective_value(&p, &Solution::new(vec![1, 2])), int(20));
        let q = TypeProfile::from_ints(&[22, 10, 10]);
        assert_eq!(inst.objective_value(&q, &Solution::new(vec![0])), int(22));
        assert_eq!(inst.objective_value(&q, &Solution::new(vec![])), int(0));
    }

    #[test]
    fn optimum_on_parallel_instance() {
        let inst = parallel();
        let (sol, v) = inst
            .brute_force_optimum(&TypeProfile::from_ints(&[36, 10, 10]))
            .unwrap();
        assert_eq!(sol.selected(), &[1, 2]);
        assert_eq!(v, int(20));
    }

    #[test]
    fn optimum_single_set() {
        let inst = SetSystemInstance::new(
            vec![AgentDomain::from_ints(&[1, 2]).unwrap(); 2],
            Orientation::Cost,
            FeasibleFamily::Explicit {
                sets: vec![vec![0, 1]],
            },
        )
        .unwrap();
        let (sol, v) = inst
            .brute_force_optimum(&TypeProfile::from_ints(&[2, 2]))
            .unwrap();
        assert_eq!(sol.selected(), &[0, 1]);
        assert_eq!(v, int(4));
    }

    #[test]
    fn knapsack_optimum_matches_enumeration() {
        let inst = SetSystemInstance::new(
            vec![AgentDomain::from_ints(&[0, 1, 2, 3]).unwrap(); 3],
            Orientation::Valuation,
            FeasibleFamily::Knapsack {
                sizes: vec![1, 1, 1],
                capacity: 2,
            },
        )
        .unwrap();
        let (sol, v) = inst
            .brute_force_optimum(&TypeProfile::from_ints(&[3, 2, 1]))
            .unwrap();
        assert_eq!(sol.selected(), &[0, 1]);
        assert_eq!(v, int(5));
    }

    #[test]
    fn optimum_cap_is_enforced() {
        let inst = SetSystemInstance::with_enumeration_cap(
            vec![AgentDomain::from_ints(&[0, 1]).unwrap(); 4],
            Orientation::Valuation,
            FeasibleFamily::Knapsack {
                sizes: vec![1; 4],
                capacity: 2,
            },
            4,
        )
        .unwrap();
        let p = TypeProfile::from_ints(&[1, 1, 0, 0]);
        assert!(matches!(
            inst.brute_force_optimum_with_cap(&p, 3),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn lexicographic_tie_break() {
        let inst = SetSystemInstance::new(
            vec![AgentDomain::from_ints(&[1, 2]).unwrap(); 3],
            Orientation::Cost,
            FeasibleFamily::Explicit {
                sets: vec![vec![1, 2], vec![0, 2], vec![0, 1]],
            },
        )
        .unwrap();
        let (sol, _) = inst
            .brute_force_optimum(&TypeProfile::from_ints(&[1, 1, 1]))
            .unwrap();
        assert_eq!(sol.selected(), &[0, 1]);
    }

    #[test]
    fn lex_order_of_masks() {
        let mut sets = vec![mask_of(&[1]), mask_of(&[0, 2]), 0, mask_of(&[0]), mask_of(&[0, 1])];
        sets.sort_by(|a, b| lex_cmp(*a, *b));
        assert_eq!(
            sets,
            vec![0, mask_of(&[0]), mask_of(&[0, 1]), mask_of(&[0, 2]), mask_of(&[1])]
        );
    }

    #[test]
    fn paper_instances_have_expected_shape() {
        let sw = make_paper_instance("sw-parallel", &Params::new()).unwrap();
        assert_eq!(sw.orientation(), Orientation::Valuation);
        assert_eq!(
            sw.domain(0).value(1),
            &parse_decimal("0.707106781187").unwrap()
        );
        let mut p = Params::new();
        p.insert("k".into(), int(4));
        let dc = make_paper_instance("dc-gap", &p).unwrap();
        assert_eq!(dc.n(), 5);
        // {0} plus the 16 subsets of T.
        assert_eq!(dc.feasible_masks().len(), 17);
        assert_eq!(dc.domain(1).value(1), &(golden_ratio().unwrap() * int(4)));
        assert!(make_paper_instance("dc-gap", &Params::from([("k".into(), int(5))])).is_err());
        assert!(matches!(
            make_paper_instance("nope", &Params::new()),
            Err(Error::UnknownId(_))
        ));
        let ca = make_paper_instance("ca-appendixB", &Params::new()).unwrap();
        assert_eq!(ca.feasible_masks().len(), 5);
        let m = make_paper_instance("matroid", &Params::new()).unwrap();
        assert_eq!(m.feasible_masks().len(), 3);
        let kl = make_paper_instance("knapsack-log", &Params::from([("k".into(), int(6))])).unwrap();
        assert_eq!(kl.domain(0).len(), 8);
    }

    #[test]
    fn json_round_trip() {
        let inst = parallel();
        let text = inst.to_json().unwrap();
        let back = SetSystemInstance::from_json(&text).unwrap();
        assert_eq!(back.domains(), inst.domains());
        assert_eq!(back.family(), inst.family());
        assert_eq!(back.feasible_masks(), inst.feasible_masks());
    }

    #[test]
    fn json_rejects_scientific_notation() {
        let text = r#"{"n":1,"orientation":"cost","domains":[["1e2","3"]],
            "family":{"kind":"explicit","sets":[[0]]}}"#;
        assert!(matches!(SetSystemInstance::from_json(text), Err(Error::Parse(_))));
    }

    #[test]
    fn id_spec_parsing() {
        let (id, params) = parse_id_spec("two-solutions:s=2,k=3,tmax=100").unwrap();
        assert_eq!(id, "two-solutions");
        assert_eq!(params["tmax"], int(100));
        assert_eq!(parse_id_spec("sc-parallel").unwrap().1.len(), 0);
    }

    #[test]
    fn profile_codec_round_trip() {
        let radices = [3, 2, 4];
        let mut p = vec![0; 3];
        let mut idx = 0u128;
        loop {
            assert_eq!(encode_profile(&p, &radices), idx);
            assert_eq!(decode_profile(idx, &radices), p);
            idx += 1;
            if !next_profile(&mut p, &radices) {
                break;
            }
        }
        assert_eq!(idx, 24);
    }
}
