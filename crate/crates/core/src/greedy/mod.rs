//! Priority tables and the forward, reverse and two-way greedy engines.

mod checks;
mod engine;
mod paper;
mod table;

pub use checks::{
    check_all_monotone, check_interleaving, InterleavingReport, InterleavingViolation,
    MonotoneReport, MonotoneViolation,
};
pub use engine::{
    forward_greedy, reverse_greedy, run_greedy, two_way_greedy, EngineKind, GreedyStep,
    GreedyTrace, Runner, StepAction,
};
pub use paper::{make_paper_priority_table, OrderedTableBuilder};
pub use table::{
    CompiledTable, Direction, History, HistorySpec, MissingPolicy, PriorityEntry, PriorityTable,
    RankKey,
};
