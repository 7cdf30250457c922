//! Finite-horizon estimates of extended limits in `[-inf, inf]`.
//!
//! The protocol scans the last `windows` dyadic windows `[2^j, 2^{j+1})` below
//! the largest admissible index and records the minimum and maximum on each.
//!
//! 1. Converges if `max(hi) - min(lo) <= tol` over those windows.
//! 2. Otherwise, if both the window minima and the window maxima contract
//!    geometrically (consistent successive-difference ratio in `(-1, 1)`),
//!    both are Aitken-extrapolated; converges if the extrapolations agree
//!    within `tol`.
//! 3. Diverges to infinity if the window minima are positive, do not
//!    contract, and the smallest minimum over the later half of the windows
//!    exceeds the smallest over the earlier half by more than `tol`.
//! 4. Otherwise there is no extended limit.
//!
//! Structure-aware probes at `n = 2^k`, `2^k - 1`, `2^k + 1` (split by the
//! parity of `k` where it matters) are always attached as evidence.

use serde::{Deserialize, Serialize};

use super::generators::SequenceSpec;
use crate::error::{Error, Result};
use crate::scalar::Ext;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub windows: u32,
    pub tol: f64,
    /// Number of trailing exponents `k` sampled by each probe subsequence.
    pub probe_exponents: u32,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            windows: 4,
            tol: 1e-2,
            probe_exponents: 8,
        }
    }
}

impl Schedule {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum LimitStatus {
    Converges { value: Ext },
    DivergesToInfinity,
    NoExtendedLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStat {
    /// Window `[2^j, 2^{j+1})`.
    pub j: u32,
    pub lo: Ext,
    pub hi: Ext,
    pub argmin: u64,
    pub argmax: u64,
}

/// A named subsequence and its tail values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub subsequence: String,
    pub indices: Vec<u64>,
    pub values: Vec<Ext>,
}

impl Evidence {
    pub fn last(&self) -> Option<f64> {
        self.values.last().map(|v| v.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedLimitEstimate {
    /// What was estimated, e.g. `R_{2n}/R_n`.
    pub quantity: String,
    #[serde(flatten)]
    pub status: LimitStatus,
    pub liminf_est: Ext,
    pub limsup_est: Ext,
    pub tol: f64,
    pub extrapolated: bool,
    pub windows: Vec<WindowStat>,
    pub evidence: Vec<Evidence>,
}

impl ExtendedLimitEstimate {
    pub fn converged_value(&self) -> Option<f64> {
        match self.status {
            LimitStatus::Converges { value } => Some(value.0),
            _ => None,
        }
    }

    pub fn has_extended_limit(&self) -> bool {
        !matches!(self.status, LimitStatus::NoExtendedLimit)
    }

    /// `limsup_est - liminf_est`.
    pub fn spread(&self) -> f64 {
        self.limsup_est.0 - self.liminf_est.0
    }

    pub fn evidence_named(&self, name: &str) -> Option<&Evidence> {
        self.evidence.iter().find(|e| e.subsequence == name)
    }
}

/// `lim R_{2n} / R_n`.
pub fn ratio_limit_estimate(
    seq: &SequenceSpec,
    schedule: &Schedule,
) -> Result<ExtendedLimitEstimate> {
    let max_n = seq.horizon / 2;
    let probes = [
        Probe::PowerOfTwo,
        Probe::BelowPowerOfTwo(Parity::Even),
        Probe::BelowPowerOfTwo(Parity::Odd),
        Probe::Generic,
    ];
    estimate(
        "R_{2n}/R_n",
        |n| seq.ratio(n),
        max_n,
        seq.horizon,
        schedule,
        &probes,
    )
}

/// `lim (R_n - R_{n-1})`.
pub fn difference_limit_estimate(
    seq: &SequenceSpec,
    schedule: &Schedule,
) -> Result<ExtendedLimitEstimate> {
    let probes = [
        Probe::PowerOfTwo,
        Probe::AbovePowerOfTwo,
        Probe::BelowPowerOfTwo(Parity::Even),
        Probe::BelowPowerOfTwo(Parity::Odd),
        Probe::Generic,
    ];
    estimate(
        "R_n - R_{n-1}",
        |n| seq.difference(n),
        seq.horizon,
        seq.horizon,
        schedule,
        &probes,
    )
}

#[derive(Debug, Clone, Copy)]
enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy)]
enum Probe {
    PowerOfTwo,
    AbovePowerOfTwo,
    BelowPowerOfTwo(Parity),
    Generic,
}

impl Probe {
    fn name(self) -> &'static str {
        match self {
            Probe::PowerOfTwo => "n=2^k",
            Probe::AbovePowerOfTwo => "n=2^k+1",
            Probe::BelowPowerOfTwo(Parity::Even) => "n=2^k-1, k even",
            Probe::BelowPowerOfTwo(Parity::Odd) => "n=2^k-1, k odd",
            Probe::Generic => "n=3*2^(k-2)",
        }
    }

    fn index(self, k: u32) -> Option<u64> {
        let p = 1u64 << k;
        match self {
            Probe::PowerOfTwo => Some(p),
            Probe::AbovePowerOfTwo => Some(p + 1),
            Probe::BelowPowerOfTwo(Parity::Even) => k.is_multiple_of(2).then_some(p - 1),
            Probe::BelowPowerOfTwo(Parity::Odd) => (!k.is_multiple_of(2)).then_some(p - 1),
            Probe::Generic => Some(3 * (p >> 2)),
        }
    }
}

fn estimate(
    quantity: &str,
    f: impl Fn(u64) -> f64,
    max_n: u64,
    horizon: u64,
    schedule: &Schedule,
    probes: &[Probe],
) -> Result<ExtendedLimitEstimate> {
    let w = schedule.windows.max(2);
    // last window [2^top, 2^{top+1}) must fit below max_n
    let top = if max_n + 1 >= 2 {
        63 - (max_n + 1).leading_zeros()
    } else {
        0
    };
    let needed = || (1u64 << (w + 2)) * (horizon / max_n.max(1)).max(1);
    if top < w + 1 {
        return Err(Error::HorizonTooSmall {
            needed: needed(),
            got: horizon,
        });
    }
    let top = top - 1;
    let first = top + 1 - w;

    let windows: Vec<WindowStat> = (first..=top)
        .map(|j| {
            let mut stat = WindowStat {
                j,
                lo: Ext(f64::INFINITY),
                hi: Ext(f64::NEG_INFINITY),
                argmin: 0,
                argmax: 0,
            };
            for n in (1u64 << j)..(1u64 << (j + 1)) {
                let v = f(n);
                if v.is_nan() {
                    continue;
                }
                if v < stat.lo.0 {
                    stat.lo = Ext(v);
                    stat.argmin = n;
                }
                if v > stat.hi.0 {
                    stat.hi = Ext(v);
                    stat.argmax = n;
                }
            }
            stat
        })
        .collect();

    let lo: Vec<f64> = windows.iter().map(|s| s.lo.0).collect();
    let hi: Vec<f64> = windows.iter().map(|s| s.hi.0).collect();
    let min_lo = lo.iter().copied().fold(f64::INFINITY, f64::min);
    let max_hi = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = schedule.tol;

    let mut evidence = vec![
        Evidence {
            subsequence: "window minima".into(),
            indices: windows.iter().map(|s| s.argmin).collect(),
            values: windows.iter().map(|s| s.lo).collect(),
        },
        Evidence {
            subsequence: "window maxima".into(),
            indices: windows.iter().map(|s| s.argmax).collect(),
            values: windows.iter().map(|s| s.hi).collect(),
        },
    ];
    let k_hi = 63 - max_n.leading_zeros();
    let k_lo = k_hi.saturating_sub(schedule.probe_exponents).max(2);
    for probe in probes {
        let indices: Vec<u64> = (k_lo..=k_hi)
            .filter_map(|k| probe.index(k))
            .filter(|&n| n >= 2 && n <= max_n)
            .collect();
        let values = indices.iter().map(|&n| Ext(f(n))).collect();
        evidence.push(Evidence {
            subsequence: probe.name().into(),
            indices,
            values,
        });
    }

    let lo_trend = aitken(&lo);
    let hi_trend = aitken(&hi);
    let mut extrapolated = false;
    let (status, liminf, limsup) = if max_hi - min_lo <= tol {
        let last = windows.last().expect("at least two windows");
        let value = 0.5 * (last.lo.0 + last.hi.0);
        (LimitStatus::Converges { value: Ext(value) }, min_lo, max_hi)
    } else if let (Trend::Contracting(a), Trend::Contracting(b)) = (lo_trend, hi_trend) {
        if (a - b).abs() <= tol {
            extrapolated = true;
            (
                LimitStatus::Converges {
                    value: Ext(0.5 * (a + b)),
                },
                a.min(b),
                a.max(b),
            )
        } else {
            (LimitStatus::NoExtendedLimit, a.min(b), a.max(b))
        }
    } else {
        let half = lo.len() / 2;
        let early = lo[..half].iter().copied().fold(f64::INFINITY, f64::min);
        let late = lo[half..].iter().copied().fold(f64::INFINITY, f64::min);
        let diverging =
            min_lo > 0.0 && !matches!(lo_trend, Trend::Contracting(_)) && late > early + tol;
        if diverging {
            (LimitStatus::DivergesToInfinity, late, f64::INFINITY)
        } else {
            let liminf = if lo_trend == Trend::Decreasing {
                f64::NEG_INFINITY
            } else {
                min_lo
            };
            let limsup = if hi_trend == Trend::Increasing {
                f64::INFINITY
            } else {
                max_hi
            };
            (LimitStatus::NoExtendedLimit, liminf, limsup)
        }
    };

    Ok(ExtendedLimitEstimate {
        quantity: quantity.to_string(),
        status,
        liminf_est: Ext(liminf),
        limsup_est: Ext(limsup),
        tol,
        extrapolated,
        windows,
        evidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Trend {
    /// Geometric contraction, with the Aitken limit.
    Contracting(f64),
    /// Strictly decreasing without contraction.
    Decreasing,
    /// Strictly increasing without contraction.
    Increasing,
    Other,
}

/// Classify the trend of per-window extremes and extrapolate when they contract.
fn aitken(x: &[f64]) -> Trend {
    if x.len() < 3 || x.iter().any(|v| !v.is_finite()) {
        return monotone(x);
    }
    let d: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
    if d.iter().all(|&v| v == 0.0) {
        return Trend::Contracting(*x.last().unwrap());
    }
    if d.contains(&0.0) {
        return monotone(x);
    }
    let rho: Vec<f64> = d.windows(2).map(|p| p[1] / p[0]).collect();
    let contracting = rho.iter().all(|r| r.abs() < 1.0 - 1e-9)
        && rho.windows(2).all(|p| (p[1] - p[0]).abs() <= 0.1);
    if contracting {
        let r = *rho.last().unwrap();
        let last = *x.last().unwrap();
        let step = *d.last().unwrap();
        Trend::Contracting(last + step * r / (1.0 - r))
    } else {
        monotone(x)
    }
}

fn monotone(x: &[f64]) -> Trend {
    if x.windows(2).all(|p| p[1] < p[0]) {
        Trend::Decreasing
    } else if x.windows(2).all(|p| p[1] > p[0]) {
        Trend::Increasing
    } else {
        Trend::Other
    }
}
