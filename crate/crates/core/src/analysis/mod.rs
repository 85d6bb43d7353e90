//! Exhaustive approximation-ratio scans, closed-form bounds, branch-by-branch
//! case analyses and the reproduction drivers built on them.

mod bounds;
mod cases;
mod repro;
mod scan;

pub use bounds::{
    thm10_alpha, thm10_beta, thm13_ratio_formula, thm14_inequality_suite, InequalityCheck,
    InequalityReport, InequalityStatus, STRICT_TOLERANCE,
};
pub use cases::{case_split_check, CaseResult, CaseSplitReport, CASE_SPLIT_IDS};
pub use repro::{repro_theorem, thm13_grid, ReproOptions, ReproReport, REPRO_IDS};
pub use scan::{
    approximation_ratio, approximation_ratio_with, ratio_at, ProfileRatio, RatioReport, RatioValue,
    ScanOptions, DEFAULT_SCAN_CAP,
};
