//! Dichotomy classification of candidate constant sequences.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{
    difference_limit_estimate, ratio_limit_estimate, ExtendedLimitEstimate, LimitStatus, Schedule,
};
use super::generators::{SequenceSpec, SpecEcho};
use crate::constants::{alpha, beta, ConstantSequence};
use crate::error::{Error, Result};
use crate::scalar::Ext;

/// Largest exponent tried when looking for an envelope crossing past the horizon.
pub const CROSSING_SEARCH_MAX_EXP: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WellBehaved {
    Yes,
    No,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DichotomyBranch {
    BranchI,
    BranchIi,
    EnvelopeViolation,
    Undetermined,
}

impl DichotomyBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            DichotomyBranch::BranchI => "branch-i",
            DichotomyBranch::BranchIi => "branch-ii",
            DichotomyBranch::EnvelopeViolation => "envelope-violation",
            DichotomyBranch::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `R_n < 1 - tol`
    BelowOne,
    /// `R_n > upper(n) + tol`
    AboveUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub n: u64,
    pub side: Side,
    pub log_value: f64,
    pub log_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub reference: String,
    /// Every `n` in `1..=checked_up_to` was compared.
    pub checked_up_to: u64,
    pub first_violation: Option<Violation>,
}

impl EnvelopeCheck {
    pub fn ok(&self) -> bool {
        self.first_violation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub sequence: SpecEcho,
    pub tol: f64,
    pub um: ExtendedLimitEstimate,
    pub dois: ExtendedLimitEstimate,
    pub well_behaved: WellBehaved,
    pub dichotomy_branch: DichotomyBranch,
    pub ratio_in_alpha_window: bool,
    pub envelope: EnvelopeCheck,
    /// An index past the horizon where the envelope is violated, if one was found.
    pub crossing_index: Option<Violation>,
    /// Inconsistencies and tie-breaking decisions, in order of discovery.
    pub notes: Vec<String>,
}

fn violates(log_r: f64, log_upper: f64, tol: f64) -> Option<Side> {
    if log_r < (-tol).ln_1p() {
        Some(Side::BelowOne)
    } else if log_r > log_upper + (tol * (-log_upper).exp()).ln_1p() {
        Some(Side::AboveUpper)
    } else {
        None
    }
}

fn check_at(
    seq: &SequenceSpec,
    upper: &ConstantSequence<f64>,
    n: u64,
    tol: f64,
) -> Option<Violation> {
    let log_value = seq.log_value(n);
    let log_upper = upper.log_eval(n as usize).ok()?;
    violates(log_value, log_upper, tol).map(|side| Violation {
        n,
        side,
        log_value,
        log_upper,
    })
}

fn check_envelope(seq: &SequenceSpec, upper: &ConstantSequence<f64>, tol: f64) -> EnvelopeCheck {
    let last = match upper.horizon() {
        Some(h) => seq.horizon.min(h as u64),
        None => seq.horizon,
    };
    EnvelopeCheck {
        reference: upper.name.clone(),
        checked_up_to: last,
        first_violation: (1..=last).find_map(|n| check_at(seq, upper, n, tol)),
    }
}

/// Probe `horizon * 2^l` until the envelope breaks, then bisect back to the
/// first violating index of the bracketing dyadic step.
fn find_crossing(seq: &SequenceSpec, upper: &ConstantSequence<f64>, tol: f64) -> Option<Violation> {
    let cap = 1u64 << CROSSING_SEARCH_MAX_EXP;
    let cap = upper.horizon().map_or(cap, |h| cap.min(h as u64));
    let mut lo = seq.horizon;
    while lo < cap {
        let hi = lo.saturating_mul(2).min(cap);
        if let Some(mut found) = check_at(seq, upper, hi, tol) {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1 {
                let mid = a + (b - a) / 2;
                match check_at(seq, upper, mid, tol) {
                    Some(v) => {
                        found = v;
                        b = mid;
                    }
                    None => a = mid,
                }
            }
            return Some(found);
        }
        lo = hi;
    }
    None
}

/// Marginal estimates, within a factor two of the tolerance, are ties.
fn marginal(est: &ExtendedLimitEstimate) -> bool {
    let spread = est.spread();
    match est.status {
        LimitStatus::NoExtendedLimit => spread.is_finite() && spread <= 2.0 * est.tol,
        _ => false,
    }
}

pub fn classify(
    seq: &SequenceSpec,
    upper_reference: &ConstantSequence<f64>,
    schedule: &Schedule,
) -> Result<ClassificationReport> {
    let tol = schedule.tol;
    let um = ratio_limit_estimate(seq, schedule)?;
    let dois = difference_limit_estimate(seq, schedule)?;
    let envelope = check_envelope(seq, upper_reference, tol);
    let mut notes = Vec::new();
    if envelope.checked_up_to < seq.horizon {
        notes.push(format!(
            "reference `{}` is tabulated only up to n = {}",
            envelope.reference, envelope.checked_up_to
        ));
    }

    let well_behaved = if marginal(&um) || marginal(&dois) {
        notes.push("an estimate is within 2*tol of converging; not deciding".into());
        WellBehaved::Undetermined
    } else if um.has_extended_limit() && dois.has_extended_limit() {
        WellBehaved::Yes
    } else {
        WellBehaved::No
    };

    let a = alpha::<f64>();
    let ratio_in_alpha_window = um
        .converged_value()
        .is_some_and(|v| (1.0 - tol..=a + tol).contains(&v));
    let dois_zero = dois.converged_value().is_some_and(|v| v.abs() <= tol);

    let mut crossing_index = None;
    let dichotomy_branch = if !envelope.ok() {
        DichotomyBranch::EnvelopeViolation
    } else {
        match well_behaved {
            WellBehaved::No => DichotomyBranch::BranchI,
            WellBehaved::Undetermined => DichotomyBranch::Undetermined,
            WellBehaved::Yes if ratio_in_alpha_window && dois_zero => DichotomyBranch::BranchIi,
            WellBehaved::Yes => {
                if ratio_in_alpha_window {
                    notes.push(format!(
                        "INCONSISTENT: ratio limit lies in [1, alpha] but the difference limit is not 0 (status {:?})",
                        dois.status
                    ));
                } else {
                    notes.push(format!(
                        "INCONSISTENT: well-behaved with ratio limit {} outside [1, {a:.6}]; the envelope must fail eventually",
                        describe(&um)
                    ));
                }
                crossing_index = find_crossing(seq, upper_reference, tol);
                match crossing_index {
                    Some(v) => {
                        notes.push(format!("envelope crossing found at n = {}", v.n));
                        DichotomyBranch::EnvelopeViolation
                    }
                    None => {
                        notes.push(format!(
                            "no envelope crossing against `{}` found up to n = 2^{CROSSING_SEARCH_MAX_EXP}",
                            upper_reference.name
                        ));
                        DichotomyBranch::Undetermined
                    }
                }
            }
        }
    };

    Ok(ClassificationReport {
        sequence: seq.echo(),
        tol,
        um,
        dois,
        well_behaved,
        dichotomy_branch,
        ratio_in_alpha_window,
        envelope,
        crossing_index,
        notes,
    })
}

fn describe(est: &ExtendedLimitEstimate) -> String {
    match est.status {
        LimitStatus::Converges { value } => format!("{}", value.0),
        LimitStatus::DivergesToInfinity => "inf".into(),
        LimitStatus::NoExtendedLimit => "undefined".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub l: u32,
    pub n: u64,
    pub log_value: f64,
    /// `(n / R_n) / (n0 / R_{n0})`
    pub growth: Ext,
    /// `growth > (4/3)^l`
    pub dominates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicProbe {
    pub n0: u64,
    pub rows: Vec<ProbeRow>,
    /// Smallest `l0` such that every row with `l >= l0` dominates.
    pub dominates_from: Option<u32>,
    /// The last rows fail to dominate `(4/3)^l`.
    pub growth_violation: bool,
}

/// Growth of `n / R_n` along `n0, 2 n0, 4 n0, ...` against `(4/3)^l`.
pub fn dyadic_probe(seq: &SequenceSpec, n0: u64, l_max: u32) -> Result<DyadicProbe> {
    if n0 == 0 || l_max == 0 {
        return Err(Error::InvalidParams("n0 and l_max must be positive".into()));
    }
    let last = (n0 as u128) << l_max;
    if l_max >= 64 || last > seq.horizon as u128 {
        return Err(Error::HorizonTooSmall {
            needed: u64::try_from(last).unwrap_or(u64::MAX),
            got: seq.horizon,
        });
    }
    let base = seq.log_value(n0);
    let log43 = (4.0f64 / 3.0).ln();
    let rows: Vec<ProbeRow> = (1..=l_max)
        .map(|l| {
            let n = n0 << l;
            let log_value = seq.log_value(n);
            let log_growth = l as f64 * LN_2 + base - log_value;
            ProbeRow {
                l,
                n,
                log_value,
                growth: Ext(log_growth.exp()),
                dominates: log_growth > l as f64 * log43,
            }
        })
        .collect();
    let tail = rows.iter().rev().take_while(|r| r.dominates).count();
    let dominates_from = (tail > 0).then(|| rows[rows.len() - tail].l);
    Ok(DyadicProbe {
        n0,
        growth_violation: tail == 0,
        dominates_from,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectionReason {
    /// `q < 0` would force `K_n -> 0`, but `K_n >= 1`.
    NegativeExponent,
    /// `K_n` cannot be asymptotic to a non-constant polynomial.
    NonConstantPolynomial,
    /// `2^q > alpha`.
    RatioAboveAlpha,
    /// `c` must be positive and finite.
    NonPositiveCoefficient,
}

impl RejectionReason {
    pub fn message(self) -> &'static str {
        match self {
            RejectionReason::NegativeExponent => "q < 0 is impossible since K_n lies in [1, inf)",
            RejectionReason::NonConstantPolynomial => {
                "K_n is not asymptotic to a non-constant polynomial"
            }
            RejectionReason::RatioAboveAlpha => "2^q exceeds alpha, outside the dichotomy window",
            RejectionReason::NonPositiveCoefficient => "c must be positive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "kebab-case")]
pub enum Verdict {
    Admissible,
    Rejected(RejectionReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialVerdict {
    pub q: f64,
    pub c: f64,
    /// `lim K_{2n} / K_n = 2^q` under `K_n ~ c n^q`.
    pub ratio_limit: f64,
    pub beta: f64,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Whether `K_n ~ c n^q` is compatible with the dichotomy: iff `q` lies in `[0, beta]`.
pub fn polynomial_rejection(q: f64, c: f64) -> PolynomialVerdict {
    let b = beta::<f64>();
    let verdict = if !(c > 0.0 && c.is_finite()) {
        Verdict::Rejected(RejectionReason::NonPositiveCoefficient)
    } else if q < 0.0 {
        Verdict::Rejected(RejectionReason::NegativeExponent)
    } else if q >= 1.0 && q.fract() == 0.0 {
        Verdict::Rejected(RejectionReason::NonConstantPolynomial)
    } else if q <= b {
        Verdict::Admissible
    } else {
        Verdict::Rejected(RejectionReason::RatioAboveAlpha)
    };
    PolynomialVerdict {
        q,
        c,
        ratio_limit: q.exp2(),
        beta: b,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessMember {
    pub sequence: SpecEcho,
    pub known_ratio_limit: f64,
    pub ratio_estimate: Option<f64>,
    pub difference: ExtendedLimitEstimate,
    /// `max |R_n - R_{n-1}|` over the last window.
    pub max_tail_difference: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub tol: f64,
    pub members: Vec<HarnessMember>,
    pub all_passed: bool,
}

/// For well-behaved sequences with ratio limit in `[1, 2)`, check that the
/// difference limit is 0. Members outside the hypothesis are refused up front.
pub fn proposition_py_harness(
    family: &[SequenceSpec],
    schedule: &Schedule,
) -> Result<HarnessReport> {
    for seq in family {
        let limit = seq.generator.known_ratio_limit();
        let ok = seq.generator.known_well_behaved() == Some(true)
            && limit.is_some_and(|l| (1.0..2.0).contains(&l));
        if !ok {
            return Err(Error::Precondition(format!(
                "{} {:?} needs a known ratio limit in [1, 2) and well-behavedness, got {:?}",
                seq.generator.id(),
                seq.echo().params,
                limit
            )));
        }
    }
    let members = family
        .par_iter()
        .map(|seq| -> Result<HarnessMember> {
            let um = ratio_limit_estimate(seq, schedule)?;
            let difference = difference_limit_estimate(seq, schedule)?;
            let last = difference.windows.last().expect("estimate has windows");
            let max_tail_difference = last.lo.0.abs().max(last.hi.0.abs());
            let passed = difference
                .converged_value()
                .is_some_and(|v| v.abs() <= schedule.tol);
            Ok(HarnessMember {
                sequence: seq.echo(),
                known_ratio_limit: seq.generator.known_ratio_limit().unwrap_or(f64::NAN),
                ratio_estimate: um.converged_value(),
                difference,
                max_tail_difference,
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HarnessReport {
        tol: schedule.tol,
        all_passed: members.iter().all(|m| m.passed),
        members,
    })
}
