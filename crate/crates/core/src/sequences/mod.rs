//! Candidate constant sequences and their asymptotic classification.

mod classify;
mod estimate;
mod generators;

pub use classify::{
    classify, dyadic_probe, polynomial_rejection, proposition_py_harness, ClassificationReport,
    DichotomyBranch, DyadicProbe, EnvelopeCheck, HarnessMember, HarnessReport, PolynomialVerdict,
    ProbeRow, RejectionReason, Side, Verdict, Violation, WellBehaved, CROSSING_SEARCH_MAX_EXP,
};
pub use estimate::{
    difference_limit_estimate, ratio_limit_estimate, Evidence, ExtendedLimitEstimate, LimitStatus,
    Schedule, WindowStat,
};
pub use generators::{
    block_index, gen, parse_params, Generator, Params, SequenceSpec, SpecEcho, GENERATOR_IDS,
};
