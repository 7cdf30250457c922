//! Multilinear forms and both sides of the Bohnenblust-Hille inequality.
//!
//! A degree-`n` form on `K^N x ... x K^N` is stored as a dense coefficient
//! tensor of `N^n` entries in row-major order: the first slot's index varies
//! slowest and the last slot's index fastest, so the flat position of
//! `(i_1, ..., i_n)` is `((i_1 * N + i_2) * N + ...) * N + i_n`.
//!
//! Coefficients are always held as complex numbers; a real form keeps every
//! imaginary part at exactly zero.

mod io;
mod ratio;
mod sup;

use std::ops::{Add, Mul};

use num_complex::Complex;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{czero, CompensatedSum, Real, ScalarField};

pub use io::{FormRecord, INDEX_ORDER};
pub use ratio::{bh_ratio, CertPolicy, NormReport};
pub use sup::{
    ascend_from, grid_mesh_for_gap, grid_points, grid_variables, sup_norm_ascend,
    sup_norm_ascend_with, sup_norm_complex_certified_upper, sup_norm_complex_certified_upper_with,
    sup_norm_real_exact, sup_norm_real_exact_with, AscentRun, CertificateKind, SupConfig,
    SupNormCertificate,
};

/// Largest coefficient tensor accepted by constructors.
pub const MAX_COEFFS: usize = 1_000_000;

/// An argument tuple: one vector of length `dim` per slot.
pub type Args<T> = Vec<Vec<Complex<T>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearForm<T> {
    field: ScalarField,
    degree: usize,
    dim: usize,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> MultilinearForm<T> {
    pub fn new(
        field: ScalarField,
        degree: usize,
        dim: usize,
        coeffs: Vec<Complex<T>>,
    ) -> Result<Self> {
        if degree == 0 || dim == 0 {
            return Err(Error::Shape(format!(
                "degree and dim must be positive (got degree {degree}, dim {dim})"
            )));
        }
        let expected = checked_len(dim, degree)?;
        if coeffs.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} coefficients for dim {dim}, degree {degree}, got {}",
                coeffs.len()
            )));
        }
        if field == ScalarField::Real && coeffs.iter().any(|c| !c.im.is_zero()) {
            return Err(Error::FieldMismatch(
                "a real form must have zero imaginary parts".into(),
            ));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::InvalidParams("coefficients must be finite".into()));
        }
        Ok(Self {
            field,
            degree,
            dim,
            coeffs,
        })
    }

    pub fn real(degree: usize, dim: usize, coeffs: Vec<T>) -> Result<Self> {
        let coeffs = coeffs
            .into_iter()
            .map(|re| Complex::new(re, T::zero()))
            .collect();
        Self::new(ScalarField::Real, degree, dim, coeffs)
    }

    pub fn complex(degree: usize, dim: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        Self::new(ScalarField::Complex, degree, dim, coeffs)
    }

    pub fn zero(field: ScalarField, degree: usize, dim: usize) -> Result<Self> {
        let len = checked_len(dim, degree)?;
        Self::new(field, degree, dim, vec![czero(); len])
    }

    /// The 2x2 bilinear form with coefficients `[[1, 1], [1, -1]]`.
    pub fn littlewood(field: ScalarField) -> Self {
        let c = |x: f64| Complex::new(T::lit(x), T::zero());
        Self::new(field, 2, 2, vec![c(1.0), c(1.0), c(1.0), c(-1.0)])
            .expect("littlewood shape is valid")
    }

    /// Random form with independent standard Gaussian coefficients (real and
    /// imaginary parts for complex forms), rescaled so the largest coefficient
    /// has modulus one.
    pub fn random(field: ScalarField, degree: usize, dim: usize, seed: u64) -> Result<Self> {
        let len = checked_len(dim, degree)?;
        if degree == 0 {
            return Err(Error::Shape("degree must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> T { T::lit(StandardNormal.sample(&mut rng)) };
        let mut coeffs: Vec<Complex<T>> = (0..len)
            .map(|_| match field {
                ScalarField::Real => Complex::new(draw(), T::zero()),
                ScalarField::Complex => {
                    let re = draw();
                    Complex::new(re, draw())
                }
            })
            .collect();
        let max = coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max);
        if max > T::zero() {
            for c in &mut coeffs {
                *c = *c / max;
            }
        }
        Self::new(field, degree, dim, coeffs)
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// `sum |c|`, which bounds `|T|` on the unit polydisc.
    pub fn abs_sum(&self) -> T {
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .collect::<CompensatedSum<T>>()
            .value()
    }

    /// Coefficient at the multi-index `(i_1, ..., i_n)`.
    pub fn coeff(&self, index: &[usize]) -> Result<Complex<T>> {
        if index.len() != self.degree || index.iter().any(|&i| i >= self.dim) {
            return Err(Error::Shape(format!("index {index:?} out of range")));
        }
        let flat = index.iter().fold(0, |acc, &i| acc * self.dim + i);
        Ok(self.coeffs[flat])
    }

    pub fn scaled(&self, factor: Complex<T>) -> Result<Self> {
        if self.field == ScalarField::Real && !factor.im.is_zero() {
            return Err(Error::FieldMismatch(
                "cannot scale a real form by a non-real factor".into(),
            ));
        }
        let coeffs = self.coeffs.iter().map(|c| *c * factor).collect();
        Self::new(self.field, self.degree, self.dim, coeffs)
    }

    /// Relabel the coordinates of one slot: new index `perm[i]` takes the
    /// coefficient previously at index `i`.
    pub fn permute_slot(&self, slot: usize, perm: &[usize]) -> Result<Self> {
        if slot >= self.degree || perm.len() != self.dim {
            return Err(Error::Shape("bad slot permutation".into()));
        }
        let mut seen = vec![false; self.dim];
        for &p in perm {
            if p >= self.dim || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Shape("not a permutation".into()));
            }
        }
        let stride = self.dim.pow((self.degree - 1 - slot) as u32);
        let mut out = vec![czero(); self.coeffs.len()];
        for (flat, c) in self.coeffs.iter().enumerate() {
            let i = (flat / stride) % self.dim;
            let moved = flat - i * stride + perm[i] * stride;
            out[moved] = *c;
        }
        Self::new(self.field, self.degree, self.dim, out)
    }

    /// Zero-pad every slot to `dim` coordinates.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::Shape(format!(
                "cannot pad dim {} down to {dim}",
                self.dim
            )));
        }
        if dim == self.dim {
            return Ok(self.clone());
        }
        let len = checked_len(dim, self.degree)?;
        let mut out = vec![czero(); len];
        for (flat, c) in self.coeffs.iter().enumerate() {
            let mut rest = flat;
            let mut digits = vec![0; self.degree];
            for d in digits.iter_mut().rev() {
                *d = rest % self.dim;
                rest /= self.dim;
            }
            let target = digits.iter().fold(0, |acc, &i| acc * dim + i);
            out[target] = *c;
        }
        Self::new(self.field, self.degree, dim, out)
    }

    fn check_args(&self, args: &[Vec<Complex<T>>]) -> Result<()> {
        if args.len() != self.degree {
            return Err(Error::Shape(format!(
                "expected {} argument vectors, got {}",
                self.degree,
                args.len()
            )));
        }
        if let Some(bad) = args.iter().find(|v| v.len() != self.dim) {
            return Err(Error::Shape(format!(
                "argument vector of length {} for dim {}",
                bad.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `T(x^1, ..., x^n) = sum c_{i_1..i_n} x^1_{i_1} ... x^n_{i_n}`.
    pub fn evaluate(&self, args: &[Vec<Complex<T>>]) -> Result<Complex<T>> {
        self.check_args(args)?;
        let mut t = self.coeffs.clone();
        for z in args {
            t = contract_leading(&t, self.dim, z);
        }
        Ok(t[0])
    }

    /// Evaluation with real argument vectors.
    pub fn evaluate_real(&self, args: &[Vec<T>]) -> Result<Complex<T>> {
        let args: Args<T> = args
            .iter()
            .map(|v| v.iter().map(|&x| Complex::new(x, T::zero())).collect())
            .collect();
        self.evaluate(&args)
    }

    /// The linear functional induced on `slot` when every other slot is fixed
    /// to the corresponding entry of `args` (the entry at `slot` is ignored).
    pub fn functional(&self, args: &[Vec<Complex<T>>], slot: usize) -> Result<Vec<Complex<T>>> {
        self.check_args(args)?;
        if slot >= self.degree {
            return Err(Error::Shape(format!("slot {slot} out of range")));
        }
        let mut t = self.coeffs.clone();
        for z in &args[..slot] {
            t = contract_leading(&t, self.dim, z);
        }
        for z in args[slot + 1..].iter().rev() {
            t = contract_trailing(&t, self.dim, z);
        }
        Ok(t)
    }

    /// `(sum |c|^p)^(1/p)` with `p = 2n / (n + 1)`.
    pub fn mixed_norm(&self) -> T {
        let n = T::lit(self.degree as f64);
        let p = T::lit(2.0) * n / (n + T::one());
        if self.degree == 1 {
            return self.abs_sum();
        }
        let total = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .filter(|a| !a.is_zero())
            .map(|a| a.powf(p))
            .collect::<CompensatedSum<T>>()
            .value();
        total.powf(p.recip())
    }

    /// Form on the disjoint union of the slots of `self` and `other`, with
    /// coefficients `a_{i} * b_{j}`. Differing dims are zero-padded to the max.
    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(format!(
                "{} form tensored with {} form",
                self.field, other.field
            )));
        }
        let dim = self.dim.max(other.dim);
        let degree = self.degree + other.degree;
        checked_len(dim, degree)?;
        let a = self.padded(dim)?;
        let b = other.padded(dim)?;
        let mut coeffs = Vec::with_capacity(a.coeffs.len() * b.coeffs.len());
        for x in &a.coeffs {
            coeffs.extend(b.coeffs.iter().map(|y| *x * *y));
        }
        Self::new(self.field, degree, dim, coeffs)
    }

    /// `k`-fold tensor power.
    pub fn tensor_power(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams(
                "tensor power must be at least 1".into(),
            ));
        }
        let mut out = self.clone();
        for _ in 1..k {
            out = out.tensor_product(self)?;
        }
        Ok(out)
    }
}

fn checked_len(dim: usize, degree: usize) -> Result<usize> {
    let len = u32::try_from(degree)
        .ok()
        .and_then(|d| dim.checked_pow(d))
        .filter(|&len| len <= MAX_COEFFS)
        .ok_or_else(|| {
            Error::Shape(format!(
                "dim {dim} ^ degree {degree} exceeds the {MAX_COEFFS} coefficient cap"
            ))
        })?;
    Ok(len)
}

/// Contract the slowest index of a row-major tensor against `z`.
pub(crate) fn contract_leading<S>(t: &[S], dim: usize, z: &[S]) -> Vec<S>
where
    S: Copy + Zero + Add<Output = S> + Mul<Output = S>,
{
    let stride = t.len() / dim;
    let mut out = vec![S::zero(); stride];
    for (i, &zi) in z.iter().enumerate() {
        if zi.is_zero() {
            continue;
        }
        let block = &t[i * stride..(i + 1) * stride];
        for (o, &b) in out.iter_mut().zip(block) {
            *o = *o + zi * b;
        }
    }
    out
}

/// Contract the fastest index of a row-major tensor against `z`.
pub(crate) fn contract_trailing<S>(t: &[S], dim: usize, z: &[S]) -> Vec<S>
where
    S: Copy + Zero + Add<Output = S> + Mul<Output = S>,
{
    t.chunks_exact(dim)
        .map(|row| {
            row.iter()
                .zip(z)
                .fold(S::zero(), |acc, (&c, &zi)| acc + c * zi)
        })
        .collect()
}
