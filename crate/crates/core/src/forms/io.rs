//! JSON form records:
//! `{"field", "degree", "dim", "coeffs", "index_order"}` where `coeffs` is a
//! flat array of numbers (real) or `[re, im]` pairs (complex).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::MultilinearForm;
use crate::error::Error;
use crate::scalar::{Real, ScalarField};

/// The only layout written and accepted: first index slowest, last fastest.
pub const INDEX_ORDER: &str = "row-major-last-fastest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff<T> {
    Re(T),
    Complex([T; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormRecord<T> {
    pub field: ScalarField,
    pub degree: usize,
    pub dim: usize,
    pub coeffs: Vec<Coeff<T>>,
    pub index_order: String,
}

impl<T: Real> From<MultilinearForm<T>> for FormRecord<T> {
    fn from(form: MultilinearForm<T>) -> Self {
        let coeffs = form
            .coeffs
            .iter()
            .map(|c| match form.field {
                ScalarField::Real => Coeff::Re(c.re),
                ScalarField::Complex => Coeff::Complex([c.re, c.im]),
            })
            .collect();
        FormRecord {
            field: form.field,
            degree: form.degree,
            dim: form.dim,
            coeffs,
            index_order: INDEX_ORDER.to_string(),
        }
    }
}

impl<T: Real> TryFrom<FormRecord<T>> for MultilinearForm<T> {
    type Error = Error;

    fn try_from(rec: FormRecord<T>) -> Result<Self, Error> {
        if rec.index_order != INDEX_ORDER {
            return Err(Error::InvalidParams(format!(
                "unsupported index_order `{}` (expected `{INDEX_ORDER}`)",
                rec.index_order
            )));
        }
        let coeffs = rec
            .coeffs
            .into_iter()
            .map(|c| match c {
                Coeff::Re(re) => Complex::new(re, T::zero()),
                Coeff::Complex([re, im]) => Complex::new(re, im),
            })
            .collect();
        MultilinearForm::new(rec.field, rec.degree, rec.dim, coeffs)
    }
}

impl<T: Real> Serialize for MultilinearForm<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FormRecord::from(self.clone()).serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for MultilinearForm<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rec = FormRecord::<T>::deserialize(deserializer)?;
        MultilinearForm::try_from(rec).map_err(serde::de::Error::custom)
    }
}
