//! Certified lower bounds on the optimal constants by extremal search.
//!
//! Every certified ratio `mixed / sup` of a nonzero form is a lower bound on
//! the optimal constant for its field and degree. The search perturbs one
//! coefficient at a time, keeps strict improvements of a fast objective, and
//! certifies the final form of every restart with the strictest sup-norm
//! certificate available.

mod store;

use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{envelope, real_lower_bound, ConstantSequence, UpperCatalogue};
use crate::error::{Error, Result};
use crate::forms::{
    ascend_from, bh_ratio, sup_norm_ascend_with, sup_norm_real_exact_with, Args, CertPolicy,
    CertificateKind, MultilinearForm, NormReport, SupConfig,
};
use crate::scalar::ScalarField;

pub use store::{CommitOutcome, ResultStore, IMPROVEMENT_TOL};

type Form = MultilinearForm<f64>;

/// Slack allowed above a known upper bound before a result is an invariant violation.
pub const CAP_TOL: f64 = 1e-9;

/// Largest `(n - 1)(N - 1)` for which the exact oracle drives the ascent.
const EXACT_OBJECTIVE_MAX_FREE: usize = 12;

/// Restarts of the heuristic sup estimate inside the objective.
const OBJECTIVE_RESTARTS: usize = 2;

/// The `[[1, 1], [1, -1]]` real bilinear form.
pub fn seed_littlewood() -> Form {
    Form::littlewood(ScalarField::Real)
}

pub fn seed_random(degree: usize, dim: usize, field: ScalarField, seed: u64) -> Result<Form> {
    Form::random(field, degree, dim, seed)
}

pub fn seed_tensor_power(base: &Form, k: usize) -> Result<Form> {
    base.tensor_power(k)
}

/// Littlewood tensor power of degree `n`, times a coordinate functional when
/// `n` is odd, padded to `dim`. `None` when `n < 2` or `dim < 2`.
fn littlewood_seed(degree: usize, dim: usize, field: ScalarField) -> Result<Option<Form>> {
    if degree < 2 || dim < 2 {
        return Ok(None);
    }
    let mut form = Form::littlewood(field).tensor_power(degree / 2)?;
    if degree % 2 == 1 {
        let e1 = Form::new(
            field,
            1,
            2,
            vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
        )?;
        form = form.tensor_product(&e1)?;
    }
    form.padded(dim).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub degree: usize,
    pub dim: usize,
    pub field: ScalarField,
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
    /// Phase-grid mesh for complex certification; the finest grid within
    /// budget when absent.
    pub mesh: Option<f64>,
    #[serde(skip)]
    pub sup: SupConfig,
}

impl SearchConfig {
    pub fn new(degree: usize, dim: usize, field: ScalarField) -> Self {
        Self {
            degree,
            dim,
            field,
            restarts: 50,
            steps: 2000,
            seed: 0,
            mesh: None,
            sup: SupConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Ratio against the exact sup.
    Exact,
    /// Ratio against a warm-started alternating-ascent sup estimate.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    LittlewoodTensor,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
    pub objective: Objective,
    pub best_restart: usize,
    pub start: StartKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSummary {
    pub lower: f64,
    pub upper: f64,
    pub kind: CertificateKind,
    pub mesh: f64,
}

/// A named comparison value, not a pass/fail target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub field: ScalarField,
    pub degree: usize,
    pub dim: usize,
    /// `mixed / sup.upper`.
    pub certified_lower: f64,
    pub mixed: f64,
    pub sup: SupSummary,
    pub method: Method,
    pub reference: Option<ReferenceLine>,
    pub form: Form,
    pub timestamp: String,
}

impl SearchResult {
    fn validate(&self) -> Result<()> {
        let f = &self.form;
        if (f.field(), f.degree(), f.dim()) != (self.field, self.degree, self.dim) {
            return Err(Error::Shape(format!(
                "record is for ({}, n={}, N={}) but its form is ({}, n={}, N={})",
                self.field,
                self.degree,
                self.dim,
                f.field(),
                f.degree(),
                f.dim()
            )));
        }
        if !(self.certified_lower > 0.0 && self.certified_lower.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "certified_lower must be positive, got {}",
                self.certified_lower
            )));
        }
        if !self.sup.kind.is_certified() {
            return Err(Error::InvalidParams("record is not certified".into()));
        }
        Ok(())
    }

    /// Certify the stored form again with the recorded certificate kind.
    pub fn recertify(&self, sup: &SupConfig) -> Result<NormReport<f64>> {
        let policy = match self.sup.kind {
            CertificateKind::Exact => CertPolicy::Exact,
            // the stored mesh is the realized grid step; nudge so the same step is chosen
            CertificateKind::LipschitzGrid => CertPolicy::Grid {
                mesh: self.sup.mesh * (1.0 + 1e-12),
            },
            CertificateKind::HeuristicLowerOnly => {
                return Err(Error::InvalidParams("record is not certified".into()))
            }
        };
        bh_ratio(&self.form, policy, sup)
    }
}

/// The certificate used at the end of a search, or a refusal if there is none.
pub fn certification_policy(config: &SearchConfig) -> Result<CertPolicy<f64>> {
    let (n, dim) = (config.degree, config.dim);
    if n == 0 || dim == 0 {
        return Err(Error::Shape("degree and dim must be positive".into()));
    }
    match config.field {
        ScalarField::Real => {
            if n * dim > config.sup.enumeration_budget {
                return Err(Error::EnumerationBudget {
                    required: n * dim,
                    budget: config.sup.enumeration_budget,
                });
            }
            Ok(CertPolicy::Exact)
        }
        ScalarField::Complex => {
            let vars = (n - 1) * (dim - 1);
            let budget = config.sup.grid_budget as f64;
            let per_axis = |mesh: f64| (2.0 * PI / mesh).ceil().max(1.0);
            let mesh = match config.mesh {
                Some(m) if !(m > 0.0 && m.is_finite()) => {
                    return Err(Error::InvalidParams(format!(
                        "mesh must be positive, got {m}"
                    )))
                }
                Some(m) => m,
                None if vars == 0 => 2.0 * PI,
                None => 2.0 * PI / budget.powf(1.0 / vars as f64).floor().max(1.0),
            };
            let required_points = per_axis(mesh).powi(vars as i32);
            if required_points > budget
                || (config.mesh.is_none() && vars > 0 && per_axis(mesh) < 8.0)
            {
                let fits = budget.powf(1.0 / vars as f64).floor().max(1.0);
                return Err(Error::GridBudget {
                    required_points,
                    budget: config.sup.grid_budget,
                    required_mesh: 2.0 * PI / fits.max(8.0),
                });
            }
            Ok(CertPolicy::Grid { mesh })
        }
    }
}

fn objective_kind(config: &SearchConfig) -> Objective {
    let free = (config.degree - 1) * (config.dim - 1);
    if config.field == ScalarField::Real
        && config.degree * config.dim <= config.sup.enumeration_budget
        && free <= EXACT_OBJECTIVE_MAX_FREE
    {
        Objective::Exact
    } else {
        Objective::Heuristic
    }
}

/// Derived per-restart seed (SplitMix64 finalizer over `seed` and `r`).
fn derive_seed(seed: u64, r: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Evaluator<'a> {
    kind: Objective,
    sup: &'a SupConfig,
    seed: u64,
}

impl Evaluator<'_> {
    /// Ratio estimate and the witness it was attained at.
    fn eval(&self, form: &Form, warm: Option<&Args<f64>>) -> Result<(f64, Args<f64>)> {
        if form.is_zero() {
            return Ok((0.0, Vec::new()));
        }
        let (sup, witness) = match self.kind {
            Objective::Exact => {
                let c = sup_norm_real_exact_with(form, self.sup)?;
                (c.lower, c.witness)
            }
            Objective::Heuristic => {
                let c = sup_norm_ascend_with(form, OBJECTIVE_RESTARTS, self.seed, self.sup)?;
                let mut best = (c.lower, c.witness);
                if let Some(w) = warm.filter(|w| !w.is_empty()) {
                    let run = ascend_from(form, w.clone(), self.sup.max_sweeps)?;
                    if run.value > best.0 {
                        best = (run.value, run.args);
                    }
                }
                best
            }
        };
        let ratio = if sup > 0.0 {
            form.mixed_norm() / sup
        } else {
            0.0
        };
        Ok((ratio, witness))
    }
}

/// One coefficient-ascent run.
#[derive(Debug, Clone)]
pub struct CoefficientAscent {
    pub form: Form,
    pub objective: f64,
    /// Objective after every step; nondecreasing.
    pub trace: Vec<f64>,
    pub accepted: usize,
}

/// Change one coefficient: scale by `1 +- 10%` or `1 +- 1%`, flip its sign,
/// or (complex) rotate its phase. Zero coefficients are revived at modulus 0.1.
fn perturb(form: &mut Form, rng: &mut ChaCha8Rng) {
    let complex = form.field() == ScalarField::Complex;
    let coeffs = form.coeffs_mut();
    let i = rng.random_range(0..coeffs.len());
    let c = coeffs[i];
    if c.norm() == 0.0 {
        coeffs[i] = if complex {
            Complex::from_polar(0.1, rng.random_range(0.0..2.0 * PI))
        } else {
            Complex::new(if rng.random_bool(0.5) { 0.1 } else { -0.1 }, 0.0)
        };
        return;
    }
    let moves = if complex { 7 } else { 5 };
    coeffs[i] = match rng.random_range(0..moves) {
        0 => c * 1.1,
        1 => c * 0.9,
        2 => c * 1.01,
        3 => c * 0.99,
        4 => -c,
        5 => c * Complex::from_polar(1.0, if rng.random_bool(0.5) { 0.1 } else { -0.1 }),
        _ => c * Complex::from_polar(1.0, if rng.random_bool(0.5) { 0.01 } else { -0.01 }),
    };
}

/// Coordinate ascent on the coefficients, accepting strict improvements only.
pub fn ascend_coefficients(
    start: Form,
    steps: usize,
    seed: u64,
    objective: Objective,
    sup: &SupConfig,
) -> Result<CoefficientAscent> {
    let eval = Evaluator {
        kind: objective,
        sup,
        seed: derive_seed(seed, 0, 2),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut form = start;
    let (mut value, mut witness) = eval.eval(&form, None)?;
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(value);
    let mut accepted = 0;
    for _ in 0..steps {
        let mut candidate = form.clone();
        perturb(&mut candidate, &mut rng);
        let (v, w) = eval.eval(&candidate, Some(&witness))?;
        if v > value + IMPROVEMENT_TOL {
            form = candidate;
            value = v;
            witness = w;
            accepted += 1;
        }
        trace.push(value);
    }
    Ok(CoefficientAscent {
        form,
        objective: value,
        trace,
        accepted,
    })
}

struct Finished {
    restart: usize,
    start: StartKind,
    report: NormReport<f64>,
    form: Form,
}

/// Multi-restart search. Restart 0 starts from the Littlewood tensor seed
/// when the shape allows one; the others start from random forms. Restarts
/// run in parallel and reduce deterministically: highest certified value,
/// lowest restart index on ties.
pub fn optimize_lower_bound(config: &SearchConfig) -> Result<SearchResult> {
    if config.restarts == 0 {
        return Err(Error::InvalidParams(
            "at least one restart is required".into(),
        ));
    }
    let policy = certification_policy(config)?;
    let objective = objective_kind(config);
    let (n, dim, field) = (config.degree, config.dim, config.field);
    let littlewood = littlewood_seed(n, dim, field)?;

    let runs = (0..config.restarts)
        .into_par_iter()
        .map(|r| -> Result<Finished> {
            let (start, kind) = match (&littlewood, r) {
                (Some(f), 0) => (f.clone(), StartKind::LittlewoodTensor),
                _ => (
                    seed_random(n, dim, field, derive_seed(config.seed, r as u64, 0))?,
                    StartKind::Random,
                ),
            };
            let run = ascend_coefficients(
                start,
                config.steps,
                derive_seed(config.seed, r as u64, 1),
                objective,
                &config.sup,
            )?;
            let report = bh_ratio(&run.form, policy, &config.sup)?;
            Ok(Finished {
                restart: r,
                start: kind,
                report,
                form: run.form,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = runs
        .into_iter()
        .reduce(|a, b| {
            if b.report.ratio_lower > a.report.ratio_lower {
                b
            } else {
                a
            }
        })
        .expect("restarts >= 1");

    let cap = envelope(n, field, None, &UpperCatalogue::<f64>::default())?;
    if best.report.ratio_lower > cap.upper + CAP_TOL {
        return Err(Error::Invariant(format!(
            "certified ratio {} exceeds the {} upper bound {} for ({field}, n={n})",
            best.report.ratio_lower, cap.upper_source, cap.upper
        )));
    }

    let reference = match field {
        ScalarField::Real => Some(ReferenceLine {
            name: "real-lower".into(),
            value: real_lower_bound(n)?,
        }),
        ScalarField::Complex => None,
    };
    Ok(SearchResult {
        field,
        degree: n,
        dim,
        certified_lower: best.report.ratio_lower,
        mixed: best.report.mixed,
        sup: SupSummary {
            lower: best.report.sup.lower,
            upper: best.report.sup.upper,
            kind: best.report.sup.kind,
            mesh: best.report.sup.mesh,
        },
        method: Method {
            restarts: config.restarts,
            steps: config.steps,
            seed: config.seed,
            objective,
            best_restart: best.restart,
            start: best.start,
        },
        reference,
        form: best.form,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyLabel {
    /// `mixed <= c * sup` with an exact sup.
    Verified,
    /// Nonnegative margin against a sup that is not exact.
    Indicative,
    /// `mixed > c * sup.upper`: the inequality fails for this constant.
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub sequence: String,
    pub field: ScalarField,
    pub degree: usize,
    pub dim: usize,
    pub constant: f64,
    pub mixed: f64,
    pub sup: SupSummary,
    /// `constant * sup.lower - mixed`
    pub margin: f64,
    pub label: VerifyLabel,
}

/// Check `mixed <= c_n * sup` for the constant `c_n` taken from `sequence`.
pub fn verify_inequality(
    form: &Form,
    sequence: &ConstantSequence<f64>,
    policy: CertPolicy<f64>,
    sup: &SupConfig,
) -> Result<VerifyReport> {
    if !sequence.field_scope.covers(form.field()) {
        return Err(Error::FieldMismatch(format!(
            "`{}` does not apply to {} forms",
            sequence.name,
            form.field()
        )));
    }
    let constant = sequence.eval(form.degree())?;
    let report = bh_ratio(form, policy, sup)?;
    let margin = constant * report.sup.lower - report.mixed;
    let tol = 1e-12 * report.mixed.max(1.0);
    let label = if constant * report.sup.upper < report.mixed - tol {
        VerifyLabel::Violated
    } else if margin >= -tol {
        if report.sup.kind == CertificateKind::Exact {
            VerifyLabel::Verified
        } else {
            VerifyLabel::Indicative
        }
    } else {
        VerifyLabel::Inconclusive
    };
    Ok(VerifyReport {
        sequence: sequence.name.clone(),
        field: form.field(),
        degree: form.degree(),
        dim: form.dim(),
        constant,
        mixed: report.mixed,
        sup: SupSummary {
            lower: report.sup.lower,
            upper: report.sup.upper,
            kind: report.sup.kind,
            mesh: report.sup.mesh,
        },
        margin,
        label,
    })
}
