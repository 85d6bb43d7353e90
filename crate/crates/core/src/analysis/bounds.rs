use std::fmt;

use num_traits::{One, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::instances::golden_ratio;
use crate::rational::{int, Rational};

/// Guarantee of the three-value forward rule on the singleton-versus-`k`
/// instance: exact when `tmed <= tmax/k`, otherwise the smaller of the two
/// losses `tmax/(tmed + (k-1) tmin)` and `k tmed/tmax`.
pub fn thm13_ratio_formula(k: usize, tmin: &Rational, tmed: &Rational, tmax: &Rational) -> Result<Rational> {
    if !(&Rational::zero() <= tmin && tmin < tmed && tmed < tmax) {
        return Err(Error::InvalidDomain("need 0 <= tmin < tmed < tmax".into()));
    }
    if k == 0 {
        return Err(Error::InvalidDomain("need k >= 1".into()));
    }
    let kk = int(k as i64);
    if tmed <= &(tmax / &kk) {
        return Ok(Rational::one());
    }
    let t_loss = tmax / (tmed + (&kk - int(1)) * tmin);
    let s_loss = &kk * tmed / tmax;
    Ok(t_loss.min(s_loss))
}

/// Guarantee of the two-way rule on the downward-closed gap instance,
/// `((rho+1)k - 1) / ((rho+1/2)k - 1)` on the rounded golden ratio.
pub fn thm10_alpha(k: usize) -> Result<Rational> {
    let rho = golden_ratio()?;
    let kk = int(k as i64);
    Ok(((&rho + int(1)) * &kk - int(1)) / ((&rho + Rational::new(1.into(), 2.into())) * &kk - int(1)))
}

/// Lower bound for one-directional rules on the same instance,
/// `((rho+1)k - 1) / (rho k)`.
pub fn thm10_beta(k: usize) -> Result<Rational> {
    let rho = golden_ratio()?;
    let kk = int(k as i64);
    Ok(((&rho + int(1)) * &kk - int(1)) / (&rho * &kk))
}

/// Margin a strict floating inequality needs to count as holding.
pub const STRICT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InequalityStatus {
    Pass,
    Fail,
    /// Holds only for large enough `k`; failing below that is expected.
    FailedBelowThreshold,
}

impl fmt::Display for InequalityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InequalityStatus::Pass => "pass",
            InequalityStatus::Fail => "fail",
            InequalityStatus::FailedBelowThreshold => "failed-below-threshold",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub statement: String,
    /// Value of the tight side at the worst point of the range.
    pub lhs: f64,
    pub rhs: f64,
    /// Where the range was tightest, e.g. `x = 28`.
    pub at: String,
    pub status: InequalityStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub k: u64,
    pub epsilon: f64,
    pub rho: f64,
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == InequalityStatus::Pass)
    }

    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn records(&self) -> Vec<serde_json::Value> {
        self.checks
            .iter()
            .map(|c| {
                json!({
                    "kind": "inequality",
                    "name": c.name,
                    "statement": c.statement,
                    "lhs": format!("{:.12}", c.lhs),
                    "rhs": format!("{:.12}", c.rhs),
                    "at": c.at,
                    "status": c.status.to_string(),
                })
            })
            .collect()
    }
}

fn harmonic(n: u64) -> f64 {
    (1..=n).rev().map(|x| 1.0 / x as f64).sum()
}

/// Tightest point of `lhs(x) > rhs` over `xs` (or `<` when `less`).
fn over_range(
    xs: impl Iterator<Item = u64>,
    less: bool,
    rhs: f64,
    lhs: impl Fn(u64) -> f64,
) -> Option<(u64, f64)> {
    let margin = |v: f64| if less { rhs - v } else { v - rhs };
    xs.map(|x| (x, lhs(x)))
        .min_by(|a, b| margin(a.1).total_cmp(&margin(b.1)))
}

fn status(holds: bool) -> InequalityStatus {
    if holds {
        InequalityStatus::Pass
    } else {
        InequalityStatus::Fail
    }
}

/// Evaluates the six valuation inequalities behind the logarithmic lower
/// bound on downward-closed systems, with `t_x = 1/(x sqrt(2 ln k))` and
/// `rho = sqrt(ln k)/(sqrt 2 + epsilon)`. Range inequalities are checked at
/// every integer point of their range.
pub fn thm14_inequality_suite(k: u64, epsilon: f64) -> Result<InequalityReport> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("the suite needs k >= 2, got {k}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    let ln = (k as f64).ln();
    let root = (2.0 * ln).sqrt();
    let rho = ln.sqrt() / (2f64.sqrt() + epsilon);
    let t = |x: u64| 1.0 / (x as f64 * root);
    let gt = |l: f64, r: f64| l - r > STRICT_TOLERANCE;
    let lt = |l: f64, r: f64| r - l > STRICT_TOLERANCE;
    let ceil_ln = ln.ceil() as u64;
    let mut checks = Vec::new();

    let lo = 2 * ceil_ln;
    let m1 = over_range(lo..=k, false, rho, |x| x as f64 * t(2));
    checks.push(match m1 {
        Some((x, v)) => InequalityCheck {
            name: "M1",
            statement: format!("x t_2 > rho for {lo} <= x <= k"),
            lhs: v,
            rhs: rho,
            at: format!("x = {x}"),
            status: status(gt(v, rho)),
        },
        None => InequalityCheck {
            name: "M1",
            statement: format!("x t_2 > rho for {lo} <= x <= k"),
            lhs: f64::NAN,
            rhs: rho,
            at: "empty range".into(),
            status: InequalityStatus::Fail,
        },
    });

    // (1 + (x-y)/(k-y)) grows with x and is 2 at x = k, y = 0.
    let m2 = t(1) + k as f64 * t(k);
    checks.push(InequalityCheck {
        name: "M2",
        statement: "t_1 + (x-y) t_(k-y) < 1/rho for y < x <= k".into(),
        lhs: m2,
        rhs: 1.0 / rho,
        at: "x = k, y = 0".into(),
        status: status(lt(m2, 1.0 / rho)),
    });

    let (x, v) = over_range(2..=k, true, 1.0 / rho, |x| t(x - 1) + (x - 1) as f64 * t(x))
        .expect("k >= 2");
    checks.push(InequalityCheck {
        name: "no_interl",
        statement: "t_(x-1) + (x-1) t_x < 1/rho for 2 <= x <= k".into(),
        lhs: v,
        rhs: 1.0 / rho,
        at: format!("x = {x}"),
        status: status(lt(v, 1.0 / rho)),
    });

    let from = (ln + 1.0).ceil() as u64;
    let ni2 = over_range(from..=k, false, rho, |x| t(x) + (x - 1) as f64 * t(1));
    checks.push(match ni2 {
        Some((x, v)) => InequalityCheck {
            name: "no_interl2",
            statement: format!("t_x + (x-1) t_1 > rho for {from} <= x <= k"),
            lhs: v,
            rhs: rho,
            at: format!("x = {x}"),
            status: status(gt(v, rho)),
        },
        None => InequalityCheck {
            name: "no_interl2",
            statement: format!("t_x + (x-1) t_1 > rho for {from} <= x <= k"),
            lhs: f64::NAN,
            rhs: rho,
            at: "empty range".into(),
            status: InequalityStatus::Fail,
        },
    });

    let sum = harmonic(k) / root;
    checks.push(InequalityCheck {
        name: "sum",
        statement: "H_k / sqrt(2 ln k) > rho".into(),
        lhs: sum,
        rhs: rho,
        at: format!("k = {k}"),
        status: status(gt(sum, rho)),
    });

    let red = harmonic(lo) / root;
    checks.push(InequalityCheck {
        name: "red_sum",
        statement: format!("H_{lo} / sqrt(2 ln k) < 1"),
        lhs: red,
        rhs: 1.0,
        at: format!("k = {k}"),
        status: if lt(red, 1.0) {
            InequalityStatus::Pass
        } else {
            InequalityStatus::FailedBelowThreshold
        },
    });

    Ok(InequalityReport {
        k,
        epsilon,
        rho,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, to_f64};

    #[test]
    fn formula_examples() {
        let f = |k, tmed: Rational| thm13_ratio_formula(k, &int(0), &tmed, &int(1)).unwrap();
        assert_eq!(f(4, frac(1, 2)), int(2));
        assert_eq!(f(9, frac(1, 3)), int(3));
        assert_eq!(f(4, frac(1, 4)), int(1));
        assert!(thm13_ratio_formula(4, &int(1), &int(1), &int(2)).is_err());
        assert!(thm13_ratio_formula(4, &int(-1), &int(1), &int(2)).is_err());
    }

    #[test]
    fn beta_over_alpha_grows_toward_limit() {
        let q = |k| to_f64(&(thm10_beta(k).unwrap() / thm10_alpha(k).unwrap()));
        assert!(q(4) < q(6) && q(6) < q(8));
        let limit = (2.0 + 5f64.sqrt()) / (1.0 + 5f64.sqrt());
        assert!(q(1000) < limit && limit - q(1000) < 1e-3);
    }

    #[test]
    fn million_passes_and_eight_is_below_threshold() {
        let r = thm14_inequality_suite(1_000_000, 0.1).unwrap();
        assert!(r.passed(), "{r:?}");
        let red = r.check("red_sum").unwrap();
        assert!((red.lhs - 0.747).abs() < 0.01);
        let small = thm14_inequality_suite(8, 0.1).unwrap();
        assert_eq!(small.check("red_sum").unwrap().status, InequalityStatus::FailedBelowThreshold);
        assert!(thm14_inequality_suite(1, 0.1).is_err());
    }
}
