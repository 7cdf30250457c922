use serde::{Deserialize, Serialize};

use super::sup::{
    grid_variables, sup_norm_ascend_with, sup_norm_complex_certified_upper_with,
    sup_norm_real_exact_with, SupConfig, SupNormCertificate,
};
use super::MultilinearForm;
use crate::error::{Error, Result};
use crate::scalar::{Real, ScalarField};

/// How the sup norm is bounded when assembling a [`NormReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertPolicy<T> {
    Exact,
    Ascent {
        restarts: usize,
        seed: u64,
    },
    Grid {
        mesh: T,
    },
    /// Exact for real forms within the enumeration budget, the finest phase
    /// grid that fits the grid budget for complex forms, ascent otherwise.
    Auto,
}

/// Both sides of the inequality for one form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport<T> {
    pub mixed: T,
    pub sup: SupNormCertificate<T>,
    /// `mixed / sup.upper`: a proven lower bound on the ratio.
    pub ratio_lower: T,
    /// `mixed / sup.lower`, infinite when `sup.lower` is zero.
    pub ratio_upper: T,
}

pub fn bh_ratio<T: Real>(
    form: &MultilinearForm<T>,
    policy: CertPolicy<T>,
    config: &SupConfig,
) -> Result<NormReport<T>> {
    if form.is_zero() {
        return Err(Error::ZeroForm);
    }
    let sup = match policy {
        CertPolicy::Exact => sup_norm_real_exact_with(form, config)?,
        CertPolicy::Ascent { restarts, seed } => {
            sup_norm_ascend_with(form, restarts, seed, config)?
        }
        CertPolicy::Grid { mesh } => sup_norm_complex_certified_upper_with(form, mesh, config)?,
        CertPolicy::Auto => auto_certificate(form, config)?,
    };
    let mixed = form.mixed_norm();
    let ratio_lower = mixed / sup.upper;
    let ratio_upper = if sup.lower > T::zero() {
        mixed / sup.lower
    } else {
        T::infinity()
    };
    Ok(NormReport {
        mixed,
        sup,
        ratio_lower,
        ratio_upper,
    })
}

fn auto_certificate<T: Real>(
    form: &MultilinearForm<T>,
    config: &SupConfig,
) -> Result<SupNormCertificate<T>> {
    match form.field() {
        ScalarField::Real if form.degree() * form.dim() <= config.enumeration_budget => {
            sup_norm_real_exact_with(form, config)
        }
        ScalarField::Complex => {
            let vars = grid_variables(form);
            let per_axis = if vars == 0 {
                1.0
            } else {
                (config.grid_budget as f64).powf(1.0 / vars as f64).floor()
            };
            if per_axis >= 8.0 {
                let mesh = T::lit(2.0 * std::f64::consts::PI / per_axis);
                sup_norm_complex_certified_upper_with(form, mesh, config)
            } else {
                sup_norm_ascend_with(form, 50, 0, config)
            }
        }
        ScalarField::Real => sup_norm_ascend_with(form, 50, 0, config),
    }
}
