//! Named constants and constant sequences, and per-degree bound envelopes.
//!
//! Closed forms are evaluated directly for `n <= 300` and through their
//! natural logarithm beyond that, where `2^((n-1)/2)` and friends approach the
//! overflow range.

use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real, ScalarField};

/// Beyond this degree formulas are evaluated in log space.
pub const LOG_SPACE_FROM: usize = 300;

/// Terms of the harmonic sum used by [`euler_gamma`].
pub const GAMMA_TERMS: u64 = 1_000_000;

/// `-log m + sum_{k=1}^m 1/k`, decreasing in `m` towards the Euler constant.
pub fn euler_gamma_raw<T: Real>(m: u64) -> T {
    assert!(m >= 1, "euler_gamma_raw needs m >= 1");
    // smallest terms first
    let mut acc = CompensatedSum::<T>::new();
    for k in (1..=m).rev() {
        acc.add(T::one() / T::lit(k as f64));
    }
    acc.add(-T::lit(m as f64).ln());
    acc.value()
}

/// The Euler constant from the raw sum at `m = 10^6` with the Euler-Maclaurin
/// tail `-1/(2m) + 1/(12m^2) - 1/(120m^4)`.
pub fn euler_gamma<T: Real>() -> T {
    static GAMMA: OnceLock<f64> = OnceLock::new();
    let g = *GAMMA.get_or_init(|| {
        let m = GAMMA_TERMS as f64;
        let raw = euler_gamma_raw::<f64>(GAMMA_TERMS);
        raw - 1.0 / (2.0 * m) + 1.0 / (12.0 * m * m) - 1.0 / (120.0 * m.powi(4))
    });
    T::lit(g)
}

/// `e^{1 - gamma/2} / sqrt(2)`: the ceiling for `lim R_{2n}/R_n`.
pub fn alpha<T: Real>() -> T {
    (T::one() - euler_gamma::<T>() / T::lit(2.0)).exp() / T::lit(2.0).sqrt()
}

/// `log2(alpha)`: the ceiling for polynomial exponents.
pub fn beta<T: Real>() -> T {
    alpha::<T>().log2()
}

/// Upper-bound families for the complex inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpperName {
    /// `n^{(n+1)/(2n)} 2^{(n-1)/2}`
    BhOriginal,
    /// `2^{(n-1)/2}`
    DavieKaijser,
    /// `(2/sqrt(pi))^{n-1}`
    Queffelec,
}

impl UpperName {
    pub const ALL: [UpperName; 3] = [
        UpperName::BhOriginal,
        UpperName::DavieKaijser,
        UpperName::Queffelec,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UpperName::BhOriginal => "bh-original",
            UpperName::DavieKaijser => "davie-kaijser",
            UpperName::Queffelec => "queffelec",
        }
    }

    fn log_eval<T: Real>(self, n: usize) -> T {
        let nf = T::lit(n as f64);
        let two = T::lit(2.0);
        let ln2 = T::LN_2();
        match self {
            UpperName::BhOriginal => {
                (nf + T::one()) / (two * nf) * nf.ln() + (nf - T::one()) / two * ln2
            }
            UpperName::DavieKaijser => (nf - T::one()) / two * ln2,
            UpperName::Queffelec => (nf - T::one()) * (ln2 - T::PI().ln() / two),
        }
    }

    fn eval<T: Real>(self, n: usize) -> T {
        if n > LOG_SPACE_FROM {
            return self.log_eval::<T>(n).exp();
        }
        let nf = T::lit(n as f64);
        let two = T::lit(2.0);
        match self {
            UpperName::BhOriginal => {
                nf.powf((nf + T::one()) / (two * nf)) * two.powf((nf - T::one()) / two)
            }
            UpperName::DavieKaijser => two.powf((nf - T::one()) / two),
            UpperName::Queffelec => (two / T::PI().sqrt()).powf(nf - T::one()),
        }
    }
}

impl FromStr for UpperName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UpperName::ALL
            .into_iter()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

pub fn upper_bound<T: Real>(name: UpperName, n: usize) -> Result<T> {
    check_degree(n)?;
    Ok(name.eval(n))
}

/// Same as [`upper_bound`] with the family given by name.
pub fn upper_bound_named<T: Real>(name: &str, n: usize) -> Result<T> {
    upper_bound(name.parse()?, n)
}

/// `2^{1 - 1/n}`, the known lower bound for the real constants.
pub fn real_lower_bound<T: Real>(n: usize) -> Result<T> {
    check_degree(n)?;
    Ok(T::lit(2.0).powf(T::one() - T::one() / T::lit(n as f64)))
}

fn check_degree(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParams("degree must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Upper,
    Lower,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldScope {
    Real,
    Complex,
    Both,
}

impl FieldScope {
    pub fn covers(self, field: ScalarField) -> bool {
        matches!(
            (self, field),
            (FieldScope::Both, _)
                | (FieldScope::Real, ScalarField::Real)
                | (FieldScope::Complex, ScalarField::Complex)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rule<T> {
    Upper(UpperName),
    RealLower,
    /// `n^beta`: doubling ratio exactly alpha.
    AlphaPower,
    Table(Vec<T>),
}

/// A named map `n -> value >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSequence<T> {
    pub name: String,
    pub kind: SequenceKind,
    pub field_scope: FieldScope,
    rule: Rule<T>,
}

impl<T: Real> ConstantSequence<T> {
    pub fn upper(name: UpperName) -> Self {
        let field_scope = match name {
            UpperName::DavieKaijser => FieldScope::Both,
            _ => FieldScope::Complex,
        };
        Self {
            name: name.as_str().to_string(),
            kind: SequenceKind::Upper,
            field_scope,
            rule: Rule::Upper(name),
        }
    }

    pub fn real_lower() -> Self {
        Self {
            name: "real-lower".into(),
            kind: SequenceKind::Lower,
            field_scope: FieldScope::Real,
            rule: Rule::RealLower,
        }
    }

    /// Synthetic reference `n^beta`, whose doubling ratio is exactly alpha.
    /// It is a stand-in with the right growth, not a known bound.
    pub fn alpha_power() -> Self {
        Self {
            name: "alpha-power".into(),
            kind: SequenceKind::Reference,
            field_scope: FieldScope::Both,
            rule: Rule::AlphaPower,
        }
    }

    /// Tabulated sequence; `values[0]` is the value at `n = 1`.
    pub fn table(
        name: impl Into<String>,
        kind: SequenceKind,
        field_scope: FieldScope,
        values: Vec<T>,
    ) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidParams(format!("table `{name}` is empty")));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= T::one()) || !v.is_finite())
        {
            return Err(Error::InvalidParams(format!(
                "table `{name}` has value {v} < 1 at n = {}",
                i + 1
            )));
        }
        Ok(Self {
            name,
            kind,
            field_scope,
            rule: Rule::Table(values),
        })
    }

    /// Look a built-in sequence up by name.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "real-lower" => Ok(Self::real_lower()),
            "alpha-power" => Ok(Self::alpha_power()),
            other => Ok(Self::upper(other.parse()?)),
        }
    }

    /// Last `n` with a defined value, `None` for closed forms.
    pub fn horizon(&self) -> Option<usize> {
        match &self.rule {
            Rule::Table(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn eval(&self, n: usize) -> Result<T> {
        check_degree(n)?;
        match &self.rule {
            Rule::Upper(u) => Ok(u.eval(n)),
            Rule::RealLower => real_lower_bound(n),
            Rule::AlphaPower => Ok(T::lit(n as f64).powf(beta())),
            Rule::Table(v) => v.get(n - 1).copied().ok_or_else(|| self.beyond(n)),
        }
    }

    pub fn log_eval(&self, n: usize) -> Result<T> {
        check_degree(n)?;
        match &self.rule {
            Rule::Upper(u) => Ok(u.log_eval(n)),
            Rule::RealLower => Ok((T::one() - T::one() / T::lit(n as f64)) * T::LN_2()),
            Rule::AlphaPower => Ok(T::lit(n as f64).ln() * beta()),
            Rule::Table(v) => v.get(n - 1).map(|x| x.ln()).ok_or_else(|| self.beyond(n)),
        }
    }

    fn beyond(&self, n: usize) -> Error {
        Error::InvalidParams(format!(
            "sequence `{}` has no value at n = {n}; tabulated only up to n = {}",
            self.name,
            self.horizon().unwrap_or(0)
        ))
    }
}

/// On-disk form of a tabulated reference: `{"name": .., "values": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableFile {
    pub name: String,
    pub values: Vec<f64>,
}

/// Load a real-scalar upper reference table.
pub fn load_real_table(path: &Path) -> Result<ConstantSequence<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: TableFile = serde_json::from_str(&text)?;
    ConstantSequence::table(
        file.name,
        SequenceKind::Upper,
        FieldScope::Real,
        file.values,
    )
}

/// Source of certified lower bounds for the envelope, typically the search store.
pub trait CertifiedLowers<T> {
    /// Best certified value for `(field, n)` across every dimension, with a label.
    fn best_certified(&self, field: ScalarField, n: usize) -> Option<(T, String)>;
}

/// The corridor `[lower, upper]` known to contain the optimal constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEnvelope<T> {
    pub n: usize,
    pub field: ScalarField,
    pub lower: T,
    pub upper: T,
    pub lower_source: String,
    pub upper_source: String,
}

impl<T: Real> BoundEnvelope<T> {
    pub fn is_consistent(&self, tol: T) -> bool {
        T::one() <= self.lower + tol && self.lower <= self.upper + tol
    }
}

/// Upper sequences consulted by [`envelope`].
#[derive(Debug, Clone)]
pub struct UpperCatalogue<T> {
    pub sequences: Vec<ConstantSequence<T>>,
}

impl<T: Real> Default for UpperCatalogue<T> {
    fn default() -> Self {
        Self {
            sequences: UpperName::ALL
                .into_iter()
                .map(ConstantSequence::upper)
                .collect(),
        }
    }
}

impl<T: Real> UpperCatalogue<T> {
    pub fn with(mut self, seq: ConstantSequence<T>) -> Self {
        self.sequences.push(seq);
        self
    }

    /// `min(davie-kaijser, queffelec)` for complex scalars, and for real
    /// scalars a loaded table where one covers `n`, else davie-kaijser.
    pub fn reference_upper(&self, field: ScalarField, n: usize) -> Result<(T, String)> {
        if field == ScalarField::Real {
            if let Some(t) = self.sequences.iter().find(|s| {
                matches!(s.rule, Rule::Table(_))
                    && s.field_scope.covers(field)
                    && s.horizon().is_some_and(|h| n <= h)
            }) {
                return Ok((t.eval(n)?, t.name.clone()));
            }
            let dk = UpperName::DavieKaijser;
            return Ok((dk.eval(n), dk.as_str().into()));
        }
        let dk: T = upper_bound(UpperName::DavieKaijser, n)?;
        let q: T = upper_bound(UpperName::Queffelec, n)?;
        Ok(if q <= dk {
            (q, UpperName::Queffelec.as_str().into())
        } else {
            (dk, UpperName::DavieKaijser.as_str().into())
        })
    }
}

pub const SHARP_REAL_2: &str = "sharp-real-n2";

pub fn envelope<T: Real>(
    n: usize,
    field: ScalarField,
    store: Option<&dyn CertifiedLowers<T>>,
    catalogue: &UpperCatalogue<T>,
) -> Result<BoundEnvelope<T>> {
    check_degree(n)?;
    let mut lower = (T::one(), "trivial".to_string());
    if field == ScalarField::Real {
        let rl = real_lower_bound::<T>(n)?;
        if rl > lower.0 {
            lower = (rl, "real-lower".into());
        }
    }
    // a certified record that ties the closed-form bound is credited as the source
    if let Some((v, src)) = store.and_then(|s| s.best_certified(field, n)) {
        if v >= lower.0 * (T::one() - T::lit(1e-12)) {
            lower = (v.max(lower.0), src);
        }
    }

    let mut upper: Option<(T, String)> = None;
    for seq in &catalogue.sequences {
        if !seq.field_scope.covers(field) || seq.kind != SequenceKind::Upper {
            continue;
        }
        if seq.horizon().is_some_and(|h| n > h) {
            continue;
        }
        let v = seq.eval(n)?;
        if upper.as_ref().is_none_or(|(u, _)| v < *u) {
            upper = Some((v, seq.name.clone()));
        }
    }
    if field == ScalarField::Real && n == 2 {
        upper = Some((T::lit(2.0).sqrt(), SHARP_REAL_2.into()));
    }
    let (upper, upper_source) = upper.ok_or_else(|| {
        Error::Precondition(format!("no upper sequence applies to {field} scalars"))
    })?;
    Ok(BoundEnvelope {
        n,
        field,
        lower: lower.0,
        upper,
        lower_source: lower.1,
        upper_source,
    })
}
