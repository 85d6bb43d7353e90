use std::cmp::Ordering;
use std::fmt;
use std::ops::{AddAssign, Mul};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greedy::{CompiledTable, EngineKind, PriorityTable, Runner};
use crate::instances::{
    decode_profile, next_profile, AgentMask, Orientation, SetSystemInstance, Solution, TypeProfile,
};
use crate::rational::{common_denominator, format_both, to_f64, Rational};

/// Default bound on the number of profiles an exhaustive scan may visit.
pub const DEFAULT_SCAN_CAP: u128 = 200_000_000;

/// Oriented approximation ratio: `opt/alg` for valuations, `alg/opt` for
/// costs. A zero denominator under a positive numerator is `Infinite`;
/// `0/0` counts as exact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RatioValue {
    Finite(Rational),
    Infinite,
}

impl RatioValue {
    pub fn of(orientation: Orientation, alg: &Rational, opt: &Rational) -> RatioValue {
        let (num, den) = match orientation {
            Orientation::Cost => (alg, opt),
            Orientation::Valuation => (opt, alg),
        };
        if !den.is_zero() {
            RatioValue::Finite(num / den)
        } else if num.is_zero() {
            RatioValue::Finite(Rational::one())
        } else {
            RatioValue::Infinite
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RatioValue::Infinite)
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            RatioValue::Finite(r) => Some(r),
            RatioValue::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            RatioValue::Finite(r) => to_f64(r),
            RatioValue::Infinite => f64::INFINITY,
        }
    }

    /// Exact fraction plus six decimals, or `infinite`.
    pub fn render(&self) -> String {
        match self {
            RatioValue::Finite(r) => format_both(r),
            RatioValue::Infinite => "infinite".to_string(),
        }
    }
}

impl fmt::Display for RatioValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioReport {
    pub worst_ratio: RatioValue,
    /// First profile, in odometer order, attaining the worst ratio.
    pub witness_profile: TypeProfile,
    pub witness_solution: Solution,
    pub alg_value: Rational,
    pub opt_value: Rational,
    pub profiles_scanned: u128,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanOptions {
    pub profile_cap: u128,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            profile_cap: DEFAULT_SCAN_CAP,
            jobs: None,
        }
    }
}

/// Ratio, outcome and values at one type-index profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileRatio {
    pub ratio: RatioValue,
    pub solution: Solution,
    pub alg_value: Rational,
    pub opt_value: Rational,
}

pub fn ratio_at(
    instance: &SetSystemInstance,
    table: &CompiledTable,
    kind: EngineKind,
    profile: &[usize],
) -> Result<ProfileRatio> {
    let mask = Runner::new(instance, table, kind).outcome(profile)?;
    let alg_value = instance.objective_indices(profile, mask);
    let opt_value = instance.optimum_indices(profile).1;
    Ok(ProfileRatio {
        ratio: RatioValue::of(instance.orientation(), &alg_value, &opt_value),
        solution: Solution::from_mask(mask),
        alg_value,
        opt_value,
    })
}

pub fn approximation_ratio(
    instance: &SetSystemInstance,
    kind: EngineKind,
    table: &PriorityTable,
) -> Result<RatioReport> {
    approximation_ratio_with(instance, kind, table, ScanOptions::default())
}

/// Runs the engine on every profile and keeps the worst ratio against the
/// brute-force optimum. Ties keep the earliest profile.
pub fn approximation_ratio_with(
    instance: &SetSystemInstance,
    kind: EngineKind,
    table: &PriorityTable,
    options: ScanOptions,
) -> Result<RatioReport> {
    let total = instance.profile_count();
    if total > options.profile_cap {
        return Err(Error::CapExceeded {
            what: "profile count",
            required: total.to_string(),
            cap: options.profile_cap,
        });
    }
    if instance
        .domains()
        .iter()
        .any(|d| d.values().iter().any(Signed::is_negative))
    {
        return Err(Error::InvalidParams(
            "ratios need nonnegative domain values".into(),
        ));
    }
    let compiled = CompiledTable::compile(instance, table)?;
    let scan = || match scaled_values(instance) {
        Some(vals) => scan_all(instance, &compiled, kind, &vals, total),
        None => {
            let vals: Vec<Vec<Rational>> =
                instance.domains().iter().map(|d| d.values().to_vec()).collect();
            scan_all(instance, &compiled, kind, &vals, total)
        }
    };
    let id = match options.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?
            .install(scan)?,
        None => scan()?,
    };
    let idx = decode_profile(id, &instance.radices());
    let r = ratio_at(instance, &compiled, kind, &idx)?;
    Ok(RatioReport {
        worst_ratio: r.ratio,
        witness_profile: instance.profile_from_indices(&idx),
        witness_solution: r.solution,
        alg_value: r.alg_value,
        opt_value: r.opt_value,
        profiles_scanned: total,
    })
}

/// Domain values times their common denominator, when every feasible sum
/// stays below 2^62 so that cross products fit in `i128`.
fn scaled_values(instance: &SetSystemInstance) -> Option<Vec<Vec<i128>>> {
    let all = instance.domains().iter().flat_map(|d| d.values());
    let scale = Rational::from_integer(common_denominator(all));
    let limit = BigInt::from(1u64 << 62) / BigInt::from(instance.n() as u64);
    instance
        .domains()
        .iter()
        .map(|d| {
            d.values()
                .iter()
                .map(|v| {
                    let s = (v * &scale).to_integer();
                    (s < limit).then(|| s.to_i128()).flatten()
                })
                .collect()
        })
        .collect()
}

trait Scalar: Clone + Ord + Zero + One + for<'a> AddAssign<&'a Self> + Send + Sync
where
    for<'a> &'a Self: Mul<&'a Self, Output = Self>,
{
}

impl<T> Scalar for T
where
    T: Clone + Ord + Zero + One + for<'a> AddAssign<&'a T> + Send + Sync,
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
}

/// `num/den` with `den = 0` standing for infinity.
#[derive(Clone)]
struct Worst<T> {
    num: T,
    den: T,
    id: u128,
}

fn cmp_ratio<T: Scalar>(a: &Worst<T>, b: &Worst<T>) -> Ordering
where
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    match (a.den.is_zero(), b.den.is_zero()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => (&a.num * &b.den).cmp(&(&b.num * &a.den)),
    }
}

fn worse<T: Scalar>(a: Worst<T>, b: Worst<T>) -> Worst<T>
where
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    match cmp_ratio(&a, &b) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal if a.id <= b.id => a,
        Ordering::Equal => b,
    }
}

/// Profile id of the worst ratio.
fn scan_all<T: Scalar>(
    instance: &SetSystemInstance,
    table: &CompiledTable,
    kind: EngineKind,
    vals: &[Vec<T>],
    total: u128,
) -> Result<u128>
where
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    let workers = rayon::current_num_threads() as u128;
    let chunk = (total / (workers * 16)).max(4096);
    let starts: Vec<u128> = (0..total.div_ceil(chunk)).map(|c| c * chunk).collect();
    let parts = starts
        .par_iter()
        .map(|&s| scan_chunk(instance, table, kind, vals, s, chunk.min(total - s)))
        .collect::<Result<Vec<_>>>()?;
    let best = parts
        .into_iter()
        .reduce(worse)
        .expect("every instance has at least one profile");
    Ok(best.id)
}

fn scan_chunk<T: Scalar>(
    instance: &SetSystemInstance,
    table: &CompiledTable,
    kind: EngineKind,
    vals: &[Vec<T>],
    start: u128,
    len: u128,
) -> Result<Worst<T>>
where
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    let radices = instance.radices();
    let sets = instance.feasible_masks();
    let valuation = instance.orientation() == Orientation::Valuation;
    let mut p = decode_profile(start, &radices);
    let mut runner = Runner::new(instance, table, kind);
    let mut cur: Vec<T> = vec![T::zero(); p.len()];
    let sum = |cur: &[T], mut m: AgentMask| {
        let mut s = T::zero();
        while m != 0 {
            s += &cur[m.trailing_zeros() as usize];
            m &= m - 1;
        }
        s
    };
    let mut best: Option<Worst<T>> = None;
    for off in 0..len {
        for (i, &t) in p.iter().enumerate() {
            cur[i] = vals[i][t].clone();
        }
        let alg = sum(&cur, runner.outcome(&p)?);
        let sums = sets.iter().map(|&s| sum(&cur, s));
        let opt = if valuation { sums.max() } else { sums.min() }.expect("nonempty family");
        let (num, den) = if valuation { (opt, alg) } else { (alg, opt) };
        let w = match (num.is_zero(), den.is_zero()) {
            (true, true) => Worst { num: T::one(), den: T::one(), id: start + off },
            (false, true) => Worst { num: T::one(), den: T::zero(), id: start + off },
            _ => Worst { num, den, id: start + off },
        };
        if best.as_ref().is_none_or(|b| cmp_ratio(&w, b) == Ordering::Greater) {
            best = Some(w);
        }
        next_profile(&mut p, &radices);
    }
    Ok(best.expect("chunks are nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::make_paper_priority_table;
    use crate::instances::{make_paper_instance, Params};
    use crate::rational::{frac, int};

    #[test]
    fn thm8_two_way_ratio() {
        let inst = make_paper_instance("sc-parallel", &Params::new()).unwrap();
        let t = make_paper_priority_table("thm8", &Params::new()).unwrap();
        let r = approximation_ratio(&inst, EngineKind::TwoWay, &t).unwrap();
        assert_eq!(r.worst_ratio, RatioValue::Finite(frac(11, 10)));
        assert_eq!(r.witness_profile, TypeProfile::from_ints(&[22, 10, 10]));
        assert_eq!(r.profiles_scanned, 27);
        assert_eq!((r.alg_value, r.opt_value), (int(22), int(20)));
    }

    #[test]
    fn ratio_orientation_and_infinity() {
        let v = Orientation::Valuation;
        assert_eq!(RatioValue::of(v, &int(0), &int(3)), RatioValue::Infinite);
        assert_eq!(RatioValue::of(v, &int(0), &int(0)), RatioValue::Finite(int(1)));
        assert_eq!(RatioValue::of(Orientation::Cost, &int(3), &int(2)), RatioValue::Finite(frac(3, 2)));
        assert!(RatioValue::Finite(int(1_000_000)) < RatioValue::Infinite);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = make_paper_instance("sc-parallel", &Params::new()).unwrap();
        let t = make_paper_priority_table("thm8", &Params::new()).unwrap();
        let opts = ScanOptions { profile_cap: 26, jobs: Some(1) };
        assert!(matches!(
            approximation_ratio_with(&inst, EngineKind::TwoWay, &t, opts),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn job_count_does_not_change_the_report() {
        let p: Params = [("k".to_string(), int(4))].into_iter().collect();
        let inst = make_paper_instance("dc-gap", &p).unwrap();
        let t = make_paper_priority_table("alg4", &p).unwrap();
        let one = approximation_ratio_with(&inst, EngineKind::TwoWay, &t, ScanOptions { jobs: Some(1), ..Default::default() }).unwrap();
        let two = approximation_ratio_with(&inst, EngineKind::TwoWay, &t, ScanOptions { jobs: Some(2), ..Default::default() }).unwrap();
        assert_eq!(one, two);
    }
}
