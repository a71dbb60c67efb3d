//! Incentive audits: strategyproofness replay for the quality mechanisms,
//! a Bayes-Nash deviation search for the truth-serum lottery, and the
//! effort gap between careful and careless reviewers.

mod effort;
mod incentive;
mod invariance;
mod lottery;
mod strategy;

pub use effort::{audit_effort_gap, EffortGapReport, EffortMechanism};
pub use incentive::{incentive_example, IncentiveEstimate, ReferenceMode, StylizedReporter};
pub use invariance::{
    audit_counterexample, audit_selection_invariance, borda_ranking, bundle_reorderings, replay_strategyproofness, topup_counterexample,
    CounterexampleInstance, CounterexampleReport, InvarianceReport, ReplayMechanism, ReplayReport,
};
pub use lottery::{
    audit_lottery_deviation, changed_sub_lotteries, estimate_posteriors, LotteryAudit, LotteryWorld, StrategyRow,
};
pub use strategy::{strategy_grid, DeviationStrategy};
