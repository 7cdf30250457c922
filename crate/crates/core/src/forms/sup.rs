//! Bounds on `sup |T|` over the admissible domain.
//!
//! The domain is closed (`[-1, 1]^N` per slot for real forms, the closed unit
//! polydisc for complex ones); by continuity the supremum agrees with the one
//! over the open polydisc.
//!
//! Three certificates are available:
//!
//! * [`sup_norm_real_exact`]: vertex enumeration. A multilinear form is affine
//!   in every coordinate, so the maximum of `|T|` over the cube is attained at
//!   a sign vertex. Negating a whole slot only flips the sign of `T`, so the
//!   first coordinate of every slot but the last is pinned to `+1`, and the
//!   last slot is optimized in closed form (`sum |f_j|` for the induced
//!   functional `f`).
//! * [`sup_norm_ascend`]: alternating maximization, a heuristic lower bound.
//! * [`sup_norm_complex_certified_upper`]: a phase grid on the torus plus a
//!   Lipschitz correction, an upper bound that is sound for complex forms.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{contract_leading, Args, MultilinearForm};
use crate::error::{Error, Result};
use crate::scalar::{cis, cone, czero, Real, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Exact,
    HeuristicLowerOnly,
    LipschitzGrid,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::Exact => "exact",
            CertificateKind::HeuristicLowerOnly => "heuristic-lower-only",
            CertificateKind::LipschitzGrid => "lipschitz-grid",
        }
    }

    /// Whether `upper` is a proven bound tight enough to certify a ratio.
    pub fn is_certified(self) -> bool {
        !matches!(self, CertificateKind::HeuristicLowerOnly)
    }
}

/// `lower <= sup |T| <= upper`, with a witness attaining `lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupNormCertificate<T> {
    pub lower: T,
    pub upper: T,
    pub kind: CertificateKind,
    pub witness: Args<T>,
    /// Grid spacing for `lipschitz-grid`, zero otherwise.
    pub mesh: T,
}

impl<T: Real> SupNormCertificate<T> {
    pub fn gap(&self) -> T {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupConfig {
    /// Largest `n * N` accepted by vertex enumeration.
    pub enumeration_budget: usize,
    /// Largest number of phase-grid points.
    pub grid_budget: u64,
    pub max_sweeps: usize,
}

impl Default for SupConfig {
    fn default() -> Self {
        Self {
            enumeration_budget: 20,
            grid_budget: 1 << 22,
            max_sweeps: 500,
        }
    }
}

pub fn sup_norm_real_exact<T: Real>(form: &MultilinearForm<T>) -> Result<SupNormCertificate<T>> {
    sup_norm_real_exact_with(form, &SupConfig::default())
}

pub fn sup_norm_real_exact_with<T: Real>(
    form: &MultilinearForm<T>,
    config: &SupConfig,
) -> Result<SupNormCertificate<T>> {
    if form.field() != ScalarField::Real {
        return Err(Error::FieldMismatch(
            "vertex enumeration is only exact for real forms".into(),
        ));
    }
    let required = form.degree() * form.dim();
    if required > config.enumeration_budget {
        return Err(Error::EnumerationBudget {
            required,
            budget: config.enumeration_budget,
        });
    }
    let coeffs: Vec<T> = form.coeffs().iter().map(|c| c.re).collect();
    let mut search = VertexSearch {
        dim: form.dim(),
        best: -T::one(),
        best_args: Vec::new(),
        prefix: Vec::with_capacity(form.degree()),
    };
    search.descend(&coeffs, form.degree());
    let witness = search
        .best_args
        .into_iter()
        .map(|v| v.into_iter().map(|x| Complex::new(x, T::zero())).collect())
        .collect();
    Ok(SupNormCertificate {
        lower: search.best,
        upper: search.best,
        kind: CertificateKind::Exact,
        witness,
        mesh: T::zero(),
    })
}

struct VertexSearch<T> {
    dim: usize,
    best: T,
    best_args: Vec<Vec<T>>,
    prefix: Vec<Vec<T>>,
}

impl<T: Real> VertexSearch<T> {
    fn descend(&mut self, t: &[T], slots_left: usize) {
        if slots_left == 1 {
            let value = t.iter().fold(T::zero(), |acc, x| acc + x.abs());
            if value > self.best {
                self.best = value;
                let last = t
                    .iter()
                    .map(|x| if *x < T::zero() { -T::one() } else { T::one() })
                    .collect();
                self.best_args = self.prefix.clone();
                self.best_args.push(last);
            }
            return;
        }
        let free = self.dim - 1;
        for mask in 0u64..(1u64 << free) {
            let z: Vec<T> = (0..self.dim)
                .map(|i| {
                    if i > 0 && mask >> (i - 1) & 1 == 1 {
                        -T::one()
                    } else {
                        T::one()
                    }
                })
                .collect();
            let next = contract_leading(t, self.dim, &z);
            self.prefix.push(z);
            self.descend(&next, slots_left - 1);
            self.prefix.pop();
        }
    }
}

/// One alternating-maximization run.
#[derive(Debug, Clone)]
pub struct AscentRun<T> {
    pub value: T,
    pub args: Args<T>,
    pub sweeps: usize,
    /// `|T|` at the start and after every slot update.
    pub trace: Vec<T>,
}

/// Alternating maximization from `start`.
///
/// With every slot but `j` fixed, `T` is the linear functional `f` in slot
/// `j`, maximized on the domain by `z_i = sign(f_i)` (real) or
/// `z_i = conj(f_i) / |f_i|` (complex), giving `sum |f_i|`. Entries with
/// `f_i = 0` keep their current value.
pub fn ascend_from<T: Real>(
    form: &MultilinearForm<T>,
    start: Args<T>,
    max_sweeps: usize,
) -> Result<AscentRun<T>> {
    let mut args = start;
    let mut value = form.evaluate(&args)?.norm();
    let mut trace = vec![value];
    let eps = T::epsilon() * T::lit(64.0);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut improved = false;
        for slot in 0..form.degree() {
            let f = form.functional(&args, slot)?;
            let mut next = T::zero();
            for (z, fi) in args[slot].iter_mut().zip(&f) {
                let m = fi.norm();
                if m == T::zero() {
                    continue;
                }
                *z = match form.field() {
                    ScalarField::Real => Complex::new(
                        if fi.re < T::zero() {
                            -T::one()
                        } else {
                            T::one()
                        },
                        T::zero(),
                    ),
                    ScalarField::Complex => fi.conj() / m,
                };
                next = next + m;
            }
            if next > value + eps * value.max(T::one()) {
                improved = true;
            }
            // alignment never lowers |T|; keep the trace monotone under rounding
            value = value.max(next);
            trace.push(value);
        }
        if !improved {
            break;
        }
    }
    Ok(AscentRun {
        value,
        args,
        sweeps,
        trace,
    })
}

fn random_start<T: Real>(form: &MultilinearForm<T>, rng: &mut ChaCha8Rng) -> Args<T> {
    (0..form.degree())
        .map(|_| {
            (0..form.dim())
                .map(|_| match form.field() {
                    ScalarField::Real => {
                        Complex::new(T::lit(rng.random_range(-1.0..=1.0)), T::zero())
                    }
                    ScalarField::Complex => cis(T::lit(rng.random_range(0.0..2.0 * PI))),
                })
                .collect()
        })
        .collect()
}

pub fn sup_norm_ascend<T: Real>(
    form: &MultilinearForm<T>,
    restarts: usize,
    seed: u64,
) -> Result<SupNormCertificate<T>> {
    sup_norm_ascend_with(form, restarts, seed, &SupConfig::default())
}

/// Best of `restarts` ascents, restart `r` seeded with `seed + r`.
pub fn sup_norm_ascend_with<T: Real>(
    form: &MultilinearForm<T>,
    restarts: usize,
    seed: u64,
    config: &SupConfig,
) -> Result<SupNormCertificate<T>> {
    if restarts == 0 {
        return Err(Error::InvalidParams(
            "at least one restart is required".into(),
        ));
    }
    let mut best: Option<AscentRun<T>> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let run = ascend_from(form, random_start(form, &mut rng), config.max_sweeps)?;
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");
    let upper = form.abs_sum().max(best.value);
    Ok(SupNormCertificate {
        lower: best.value,
        upper,
        kind: CertificateKind::HeuristicLowerOnly,
        witness: best.args,
        mesh: T::zero(),
    })
}

/// Number of phase variables the grid certificate discretizes: the first
/// coordinate of every slot is pinned to phase 0 (a slot-wide phase only
/// rotates `T`) and the last slot is maximized in closed form.
pub fn grid_variables<T: Real>(form: &MultilinearForm<T>) -> usize {
    (form.degree() - 1) * (form.dim() - 1)
}

fn points_per_axis(mesh: f64) -> f64 {
    (2.0 * PI / mesh).ceil().max(1.0)
}

/// Grid size for a given mesh.
pub fn grid_points<T: Real>(form: &MultilinearForm<T>, mesh: T) -> f64 {
    points_per_axis(mesh.to_f64_lossy()).powi(grid_variables(form) as i32)
}

/// Mesh whose Lipschitz correction `Lambda * mesh / 2 * vars` equals `gap`.
pub fn grid_mesh_for_gap<T: Real>(form: &MultilinearForm<T>, gap: T) -> T {
    let vars = grid_variables(form);
    let lambda = form.abs_sum();
    if vars == 0 || lambda == T::zero() {
        return T::lit(2.0 * PI);
    }
    (T::lit(2.0) * gap / (lambda * T::lit(vars as f64))).min(T::lit(2.0 * PI))
}

pub fn sup_norm_complex_certified_upper<T: Real>(
    form: &MultilinearForm<T>,
    mesh: T,
) -> Result<SupNormCertificate<T>> {
    sup_norm_complex_certified_upper_with(form, mesh, &SupConfig::default())
}

/// Phase-grid certificate.
///
/// Writing every coordinate as `e^{i theta}`, `|T|` maximized over the last
/// slot is `g(theta) = sum_j |f_j(theta)|`, which moves by at most
/// `Lambda = sum |c|` per unit change of any single phase. Every point of the
/// torus is within half a grid step of the grid in each phase, so
/// `sup |T| <= max_grid g + Lambda * h / 2 * vars` for grid step `h <= mesh`.
pub fn sup_norm_complex_certified_upper_with<T: Real>(
    form: &MultilinearForm<T>,
    mesh: T,
    config: &SupConfig,
) -> Result<SupNormCertificate<T>> {
    if form.field() != ScalarField::Complex {
        return Err(Error::FieldMismatch(
            "the phase-grid certificate is for complex forms".into(),
        ));
    }
    if !(mesh > T::zero()) || !mesh.is_finite() {
        return Err(Error::InvalidParams(format!(
            "mesh must be positive, got {mesh}"
        )));
    }
    let vars = grid_variables(form);
    let per_axis = points_per_axis(mesh.to_f64_lossy());
    let required_points = per_axis.powi(vars as i32);
    if required_points > config.grid_budget as f64 {
        let fits = (config.grid_budget as f64)
            .powf(1.0 / vars as f64)
            .floor()
            .max(1.0);
        return Err(Error::GridBudget {
            required_points,
            budget: config.grid_budget,
            required_mesh: 2.0 * PI / fits,
        });
    }
    let m = per_axis as usize;
    let step = T::lit(2.0 * PI / per_axis);
    let phases: Vec<Complex<T>> = (0..m).map(|k| cis(step * T::lit(k as f64))).collect();

    let mut search = GridSearch {
        dim: form.dim(),
        phases: &phases,
        best: -T::one(),
        best_args: Vec::new(),
        prefix: Vec::with_capacity(form.degree()),
    };
    search.descend(form.coeffs(), form.degree());

    let lambda = form.abs_sum();
    let slack = lambda * step / T::lit(2.0) * T::lit(vars as f64);
    Ok(SupNormCertificate {
        lower: search.best,
        upper: search.best + slack,
        kind: CertificateKind::LipschitzGrid,
        witness: search.best_args,
        mesh: step,
    })
}

struct GridSearch<'a, T> {
    dim: usize,
    phases: &'a [Complex<T>],
    best: T,
    best_args: Args<T>,
    prefix: Args<T>,
}

impl<T: Real> GridSearch<'_, T> {
    fn descend(&mut self, t: &[Complex<T>], slots_left: usize) {
        if slots_left == 1 {
            let value = t.iter().fold(T::zero(), |acc, f| acc + f.norm());
            if value > self.best {
                self.best = value;
                let last = t
                    .iter()
                    .map(|f| {
                        let m = f.norm();
                        if m == T::zero() {
                            cone()
                        } else {
                            f.conj() / m
                        }
                    })
                    .collect();
                self.best_args = self.prefix.clone();
                self.best_args.push(last);
            }
            return;
        }
        let free = self.dim - 1;
        let m = self.phases.len();
        let mut digits = vec![0usize; free];
        let mut z = vec![czero(); self.dim];
        z[0] = cone();
        loop {
            for (slot, &d) in z[1..].iter_mut().zip(&digits) {
                *slot = self.phases[d];
            }
            let next = contract_leading(t, self.dim, &z);
            self.prefix.push(z.clone());
            self.descend(&next, slots_left - 1);
            self.prefix.pop();
            // odometer over the free phases
            let mut pos = 0;
            loop {
                if pos == free {
                    return;
                }
                digits[pos] += 1;
                if digits[pos] < m {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type F = MultilinearForm<f64>;

    /// Independent oracle: every sign vertex of every slot, naive evaluation.
    fn brute_vertices(form: &F) -> f64 {
        let n = form.degree();
        let dim = form.dim();
        let total = n * dim;
        let mut best = 0.0f64;
        for mask in 0u64..(1 << total) {
            let args: Vec<Vec<f64>> = (0..n)
                .map(|s| {
                    (0..dim)
                        .map(|i| {
                            if mask >> (s * dim + i) & 1 == 1 {
                                -1.0
                            } else {
                                1.0
                            }
                        })
                        .collect()
                })
                .collect();
            let mut v = 0.0;
            for (flat, c) in form.coeffs().iter().enumerate() {
                let mut rest = flat;
                let mut prod = c.re;
                for s in (0..n).rev() {
                    prod *= args[s][rest % dim];
                    rest /= dim;
                }
                v += prod;
            }
            best = best.max(v.abs());
        }
        best
    }

    #[test]
    fn exact_littlewood() {
        let l2 = F::littlewood(ScalarField::Real);
        let cert = sup_norm_real_exact(&l2).unwrap();
        assert_eq!(cert.kind, CertificateKind::Exact);
        assert_eq!(cert.lower, 2.0);
        assert_eq!(cert.upper, 2.0);
        assert_eq!(l2.evaluate(&cert.witness).unwrap().norm(), 2.0);
        assert_eq!(brute_vertices(&l2), 2.0);
    }

    #[test]
    fn exact_simple_cases() {
        let mut coeffs = vec![0.0; 4];
        coeffs[0] = 5.0;
        assert_eq!(
            sup_norm_real_exact(&F::real(2, 2, coeffs).unwrap())
                .unwrap()
                .lower,
            5.0
        );
        assert_eq!(
            sup_norm_real_exact(&F::real(1, 2, vec![3.0, -4.0]).unwrap())
                .unwrap()
                .lower,
            7.0
        );
        let zero = sup_norm_real_exact(&F::zero(ScalarField::Real, 2, 3).unwrap()).unwrap();
        assert_eq!((zero.lower, zero.upper), (0.0, 0.0));
    }

    #[test]
    fn exact_matches_brute_force_and_witness() {
        for (seed, n, dim) in [
            (1, 2, 3),
            (2, 3, 2),
            (3, 3, 3),
            (4, 4, 2),
            (5, 2, 5),
            (6, 1, 6),
        ] {
            let f = F::random(ScalarField::Real, n, dim, seed).unwrap();
            let cert = sup_norm_real_exact(&f).unwrap();
            let brute = brute_vertices(&f);
            assert!((cert.lower - brute).abs() < 1e-12, "seed {seed}");
            assert!((f.evaluate(&cert.witness).unwrap().norm() - cert.lower).abs() < 1e-12);
            assert!(cert.witness.iter().flatten().all(|z| z.norm() <= 1.0));
        }
    }

    #[test]
    fn exact_refuses_over_budget_and_complex() {
        let f = F::zero(ScalarField::Real, 3, 7).unwrap();
        assert!(matches!(
            sup_norm_real_exact(&f),
            Err(Error::EnumerationBudget {
                required: 21,
                budget: 20
            })
        ));
        let c = F::littlewood(ScalarField::Complex);
        assert!(matches!(
            sup_norm_real_exact(&c),
            Err(Error::FieldMismatch(_))
        ));
    }

    #[test]
    fn ascent_littlewood_real_within_three_sweeps() {
        let l2 = F::littlewood(ScalarField::Real);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = ascend_from(&l2, random_start(&l2, &mut rng), 100).unwrap();
            assert!((run.value - 2.0).abs() < 1e-12);
            // the final sweep only confirms no slot improves
            assert!(run.sweeps <= 3, "sweeps {}", run.sweeps);
        }
    }

    #[test]
    fn ascent_linear_complex_is_one_sweep() {
        let f = F::complex(1, 2, vec![cone(), cone()]).unwrap();
        let cert = sup_norm_ascend(&f, 1, 0).unwrap();
        assert!((cert.lower - 2.0).abs() < 1e-15);
        let w = &cert.witness[0];
        assert!((w[0] - w[1]).norm() < 1e-15);
    }

    #[test]
    fn ascent_littlewood_complex() {
        let l2 = F::littlewood(ScalarField::Complex);
        let cert = sup_norm_ascend(&l2, 20, 1).unwrap();
        assert!((cert.lower - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        // brute grid over y = (1, e^{it}): |y1 + y2| + |y1 - y2|
        let brute = (0..100_000)
            .map(|k| {
                let y2 = cis(2.0 * PI * k as f64 / 100_000.0);
                (cone::<f64>() + y2).norm() + (cone::<f64>() - y2).norm()
            })
            .fold(0.0, f64::max);
        assert!((brute - cert.lower).abs() < 1e-8);
        assert!(cert.lower <= brute + 1e-12);
    }

    #[test]
    fn ascent_is_deterministic_and_monotone() {
        let f = F::random(ScalarField::Complex, 3, 3, 9).unwrap();
        let a = sup_norm_ascend(&f, 5, 77).unwrap();
        let b = sup_norm_ascend(&f, 5, 77).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let run = ascend_from(&f, random_start(&f, &mut rng), 500).unwrap();
        assert!(run.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(sup_norm_ascend(&f, 0, 0).is_err());
    }

    #[test]
    fn ascent_tie_keeps_entry() {
        // c = (1, 0): the second coordinate never influences T
        let f = F::real(1, 2, vec![1.0, 0.0]).unwrap();
        let start = vec![vec![Complex::new(0.5, 0.0), Complex::new(-0.25, 0.0)]];
        let run = ascend_from(&f, start, 10).unwrap();
        assert_eq!(run.args[0][1], Complex::new(-0.25, 0.0));
        assert_eq!(run.value, 1.0);
    }

    #[test]
    fn grid_linear_converges_to_l1() {
        let f = F::complex(1, 2, vec![cone(), cone()]).unwrap();
        for mesh in [0.5, 0.1, 0.01] {
            let cert = sup_norm_complex_certified_upper(&f, mesh).unwrap();
            assert!(cert.lower <= 2.0 + 1e-15 && cert.upper >= 2.0 - 1e-15);
            assert!((cert.upper - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_zero_form() {
        let z = F::zero(ScalarField::Complex, 2, 3).unwrap();
        let cert = sup_norm_complex_certified_upper(&z, 0.3).unwrap();
        assert_eq!((cert.lower, cert.upper), (0.0, 0.0));
    }

    #[test]
    fn grid_littlewood_brackets_true_value() {
        let l2 = F::littlewood(ScalarField::Complex);
        let truth = 2.0 * 2f64.sqrt();
        let cert = sup_norm_complex_certified_upper(&l2, 0.05).unwrap();
        assert!(cert.lower <= truth + 1e-12 && truth <= cert.upper);
        assert!(cert.gap() <= 4.0 * 0.05 * 4.0 / 2.0);
        assert!(cert.mesh <= 0.05);
        assert!((l2.evaluate(&cert.witness).unwrap().norm() - cert.lower).abs() < 1e-12);
    }

    #[test]
    fn grid_refusals() {
        let c = F::random(ScalarField::Complex, 3, 3, 1).unwrap();
        match sup_norm_complex_certified_upper(&c, 1e-3) {
            Err(Error::GridBudget { required_mesh, .. }) => {
                assert!(sup_norm_complex_certified_upper(&c, required_mesh).is_ok());
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        let r = F::littlewood(ScalarField::Real);
        assert!(matches!(
            sup_norm_complex_certified_upper(&r, 0.1),
            Err(Error::FieldMismatch(_))
        ));
        assert!(sup_norm_complex_certified_upper(&c, 0.0).is_err());
    }

    #[test]
    fn mesh_for_gap_inverts_slack() {
        let c = F::random(ScalarField::Complex, 2, 3, 5).unwrap();
        let mesh = grid_mesh_for_gap(&c, 0.1);
        let slack = c.abs_sum() * mesh / 2.0 * grid_variables(&c) as f64;
        assert!((slack - 0.1).abs() < 1e-12);
        let cert = sup_norm_complex_certified_upper(&c, mesh).unwrap();
        assert!(cert.gap() <= 0.1 + 1e-12);
    }
}
