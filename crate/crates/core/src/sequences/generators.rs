//! Deterministic candidate sequences `R_n`, `n >= 1`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::constants::ConstantSequence;
use crate::error::{Error, Result};

/// Generator parameters as given on the command line, e.g. `a=0.6,b=1`.
pub type Params = BTreeMap<String, String>;

pub fn parse_params(text: &str) -> Result<Params> {
    let mut out = Params::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("expected key=value, got `{part}`")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `b n^a + c`
    Power {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `b a^{c n}`
    Exponential {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `b a^{c / n}`
    InverseExponential {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `b log n`
    Log {
        b: f64,
    },
    /// `sum_j a_j n^j` with positive leading coefficient
    Polynomial {
        coeffs: Vec<f64>,
    },
    Constant {
        value: f64,
    },
    /// `sqrt(n)` at powers of two, `2 sqrt(n)` elsewhere.
    Contra,
    /// On `B_k = {2^k - 1, ..., 2^{k+1} - 2}`: `n^k` for odd `k` and
    /// `(min B_k)^k + k n` for even `k`. `n = 1, 2` fall in `k = 1`.
    Blocks,
    /// `2^{1 - 1/n}` at powers of two, the reference sequence elsewhere.
    Mix {
        reference: ConstantSequence<f64>,
    },
    /// `2^{1 - 1/n}`
    RealLower,
}

pub const GENERATOR_IDS: [&str; 10] = [
    "power",
    "exponential",
    "inverse-exponential",
    "log",
    "polynomial",
    "constant",
    "contra",
    "blocks",
    "mix",
    "real-lower",
];

fn num(params: &Params, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| {
                Error::InvalidParams(format!("`{key}` must be a finite number, got `{v}`"))
            }),
        None => default.ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`"))),
    }
}

fn check_keys(params: &Params, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidParams(format!("unexpected parameter `{k}`"))),
        None => Ok(()),
    }
}

impl Generator {
    pub fn from_id(id: &str, params: &Params) -> Result<Self> {
        let g = match id {
            "power" => {
                check_keys(params, &["a", "b", "c"])?;
                let b = num(params, "b", Some(1.0))?;
                if b <= 0.0 {
                    return Err(Error::InvalidParams("power needs b > 0".into()));
                }
                Generator::Power {
                    a: num(params, "a", None)?,
                    b,
                    c: num(params, "c", Some(0.0))?,
                }
            }
            "exponential" | "inverse-exponential" => {
                check_keys(params, &["a", "b", "c"])?;
                let a = num(params, "a", None)?;
                let b = num(params, "b", Some(1.0))?;
                let c = num(params, "c", Some(1.0))?;
                if a <= 0.0 || b <= 0.0 {
                    return Err(Error::InvalidParams(format!("{id} needs a > 0 and b > 0")));
                }
                if id == "exponential" {
                    Generator::Exponential { a, b, c }
                } else {
                    Generator::InverseExponential { a, b, c }
                }
            }
            "log" => {
                check_keys(params, &["b"])?;
                let b = num(params, "b", Some(1.0))?;
                if b <= 0.0 {
                    return Err(Error::InvalidParams("log needs b > 0".into()));
                }
                Generator::Log { b }
            }
            "polynomial" => {
                let mut coeffs = Vec::new();
                for (k, v) in params {
                    let j: usize = k
                        .strip_prefix('a')
                        .and_then(|d| d.parse().ok())
                        .ok_or_else(|| {
                            Error::InvalidParams(format!(
                                "polynomial keys are a0, a1, ..; got `{k}`"
                            ))
                        })?;
                    if coeffs.len() <= j {
                        coeffs.resize(j + 1, 0.0);
                    }
                    coeffs[j] = num(params, k, None).map_err(|_| {
                        Error::InvalidParams(format!("`{k}` must be a number, got `{v}`"))
                    })?;
                }
                while coeffs.last() == Some(&0.0) {
                    coeffs.pop();
                }
                match coeffs.last() {
                    Some(&lead) if lead > 0.0 => Generator::Polynomial { coeffs },
                    _ => {
                        return Err(Error::InvalidParams(
                            "polynomial needs a positive leading coefficient".into(),
                        ))
                    }
                }
            }
            "constant" => {
                check_keys(params, &["value"])?;
                let value = num(params, "value", Some(1.0))?;
                if value <= 0.0 {
                    return Err(Error::InvalidParams("constant needs value > 0".into()));
                }
                Generator::Constant { value }
            }
            "contra" => {
                check_keys(params, &[])?;
                Generator::Contra
            }
            "blocks" => {
                check_keys(params, &[])?;
                Generator::Blocks
            }
            "mix" => {
                check_keys(params, &["ref"])?;
                let name = params
                    .get("ref")
                    .map(String::as_str)
                    .unwrap_or("davie-kaijser");
                Generator::Mix {
                    reference: ConstantSequence::named(name)?,
                }
            }
            "real-lower" => {
                check_keys(params, &[])?;
                Generator::RealLower
            }
            other => return Err(Error::UnknownName(other.to_string())),
        };
        Ok(g)
    }

    pub fn id(&self) -> &'static str {
        match self {
            Generator::Power { .. } => "power",
            Generator::Exponential { .. } => "exponential",
            Generator::InverseExponential { .. } => "inverse-exponential",
            Generator::Log { .. } => "log",
            Generator::Polynomial { .. } => "polynomial",
            Generator::Constant { .. } => "constant",
            Generator::Contra => "contra",
            Generator::Blocks => "blocks",
            Generator::Mix { .. } => "mix",
            Generator::RealLower => "real-lower",
        }
    }

    /// Generators whose values leave the double range are evaluated in log space.
    pub fn needs_log_space(&self) -> bool {
        matches!(
            self,
            Generator::Blocks | Generator::Mix { .. } | Generator::Exponential { .. }
        )
    }

    /// `R_n`, possibly infinite for log-space generators.
    pub fn value(&self, n: u64) -> f64 {
        let x = n as f64;
        match self {
            Generator::Power { a, b, c } => b * x.powf(*a) + c,
            Generator::Log { b } => b * x.ln(),
            Generator::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a),
            Generator::Constant { value } => *value,
            Generator::Contra => {
                if n.is_power_of_two() {
                    x.sqrt()
                } else {
                    2.0 * x.sqrt()
                }
            }
            Generator::RealLower => (1.0 - 1.0 / x).exp2(),
            _ => self.log_value(n).exp(),
        }
    }

    /// `ln R_n`; NaN where `R_n < 0`.
    pub fn log_value(&self, n: u64) -> f64 {
        let x = n as f64;
        match self {
            Generator::Exponential { a, b, c } => b.ln() + c * x * a.ln(),
            Generator::InverseExponential { a, b, c } => b.ln() + c / x * a.ln(),
            Generator::Power { a, b, c } if *c == 0.0 => b.ln() + a * x.ln(),
            Generator::Blocks => {
                let k = block_index(n);
                if k % 2 == 1 {
                    k as f64 * x.ln()
                } else {
                    let min = ((1u64 << k) - 1) as f64;
                    log_add_exp(k as f64 * min.ln(), (k as f64 * x).ln())
                }
            }
            Generator::Mix { reference } => {
                if n.is_power_of_two() {
                    (1.0 - 1.0 / x) * LN_2
                } else {
                    reference.log_eval(n as usize).unwrap_or(f64::NAN)
                }
            }
            Generator::RealLower => (1.0 - 1.0 / x) * LN_2,
            _ => self.value(n).ln(),
        }
    }

    /// `R_n - R_{n-1}` in closed form where log-space subtraction would cancel.
    fn exact_difference(&self, n: u64) -> Option<f64> {
        match self {
            Generator::Blocks if n >= 2 && block_index(n) == block_index(n - 1) => {
                let k = block_index(n);
                if k.is_multiple_of(2) {
                    Some(k as f64)
                } else {
                    // n^k (1 - (1 - 1/n)^k)
                    let x = n as f64;
                    let k = k as f64;
                    Some((k * x.ln()).exp() * -(k * (-1.0 / x).ln_1p()).exp_m1())
                }
            }
            _ => None,
        }
    }

    /// `lim R_{2n}/R_n` where it follows from the closed form.
    pub fn known_ratio_limit(&self) -> Option<f64> {
        match self {
            Generator::Power { a, .. } => Some(a.exp2()),
            Generator::Log { .. }
            | Generator::Constant { .. }
            | Generator::InverseExponential { .. }
            | Generator::RealLower => Some(1.0),
            Generator::Polynomial { coeffs } => Some(((coeffs.len() - 1) as f64).exp2()),
            Generator::Exponential { a, c, .. } => {
                let rate = c * a.ln();
                Some(if rate > 0.0 {
                    f64::INFINITY
                } else if rate < 0.0 {
                    0.0
                } else {
                    1.0
                })
            }
            Generator::Contra => Some(std::f64::consts::SQRT_2),
            Generator::Blocks | Generator::Mix { .. } => None,
        }
    }

    /// Whether both extended limits exist by construction.
    pub fn known_well_behaved(&self) -> Option<bool> {
        match self {
            Generator::Contra | Generator::Blocks => Some(false),
            Generator::Mix { .. } => None,
            _ => Some(true),
        }
    }

    fn params_echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: f64| {
            m.insert(k.to_string(), format!("{v}"));
        };
        match self {
            Generator::Power { a, b, c }
            | Generator::Exponential { a, b, c }
            | Generator::InverseExponential { a, b, c } => {
                put("a", *a);
                put("b", *b);
                put("c", *c);
            }
            Generator::Log { b } => put("b", *b),
            Generator::Constant { value } => put("value", *value),
            Generator::Polynomial { coeffs } => {
                for (j, a) in coeffs.iter().enumerate() {
                    put(&format!("a{j}"), *a);
                }
            }
            Generator::Mix { reference } => {
                m.insert("ref".into(), reference.name.clone());
            }
            Generator::Contra | Generator::Blocks | Generator::RealLower => {}
        }
        m
    }
}

/// `k` with `n` in `B_k`, i.e. `floor(log2(n + 1))`, at least 1.
pub fn block_index(n: u64) -> u32 {
    (63 - (n + 1).leading_zeros()).max(1)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Generator plus the index range it is examined on.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub generator: Generator,
    pub horizon: u64,
    /// Values handled as natural logarithms.
    pub log_space: bool,
    /// Candidate for a Bohnenblust-Hille constant sequence: values must be `>= 1`.
    pub bh_candidate: bool,
}

/// Echo of a [`SequenceSpec`] for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub generator: String,
    pub params: BTreeMap<String, String>,
    pub horizon: u64,
    pub log_space: bool,
    pub bh_candidate: bool,
}

/// Build and validate a sequence. Under `bh_candidate`, every value up to the
/// horizon must be at least 1.
pub fn gen(id: &str, params: &Params, horizon: u64, bh_candidate: bool) -> Result<SequenceSpec> {
    let generator = Generator::from_id(id, params)?;
    SequenceSpec::new(generator, horizon, bh_candidate)
}

impl SequenceSpec {
    pub fn new(generator: Generator, horizon: u64, bh_candidate: bool) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::HorizonTooSmall {
                needed: 2,
                got: horizon,
            });
        }
        let spec = Self {
            log_space: generator.needs_log_space(),
            generator,
            horizon,
            bh_candidate,
        };
        if bh_candidate {
            if let Some(n) = (1..=horizon).find(|&n| !(spec.log_value(n) >= -1e-12)) {
                return Err(Error::InvalidParams(format!(
                    "{} yields R_{n} = {} < 1 but is flagged as a candidate",
                    spec.generator.id(),
                    spec.value(n)
                )));
            }
        }
        Ok(spec)
    }

    pub fn with_log_space(mut self, on: bool) -> Self {
        self.log_space = on || self.generator.needs_log_space();
        self
    }

    pub fn value(&self, n: u64) -> f64 {
        self.generator.value(n)
    }

    pub fn log_value(&self, n: u64) -> f64 {
        self.generator.log_value(n)
    }

    /// `R_{2n} / R_n`.
    pub fn ratio(&self, n: u64) -> f64 {
        if self.log_space {
            (self.log_value(2 * n) - self.log_value(n)).exp()
        } else {
            self.value(2 * n) / self.value(n)
        }
    }

    /// `R_n - R_{n-1}`; may be infinite in log space.
    pub fn difference(&self, n: u64) -> f64 {
        if !self.log_space {
            return self.value(n) - self.value(n - 1);
        }
        if let Some(d) = self.generator.exact_difference(n) {
            return d;
        }
        let (cur, prev) = (self.log_value(n), self.log_value(n - 1));
        if cur >= prev {
            // R_n (1 - R_{n-1}/R_n)
            (cur + (-(prev - cur).exp_m1()).ln()).exp()
        } else {
            -(prev + (-(cur - prev).exp_m1()).ln()).exp()
        }
    }

    pub fn echo(&self) -> SpecEcho {
        SpecEcho {
            generator: self.generator.id().to_string(),
            params: self.generator.params_echo(),
            horizon: self.horizon,
            log_space: self.log_space,
            bh_candidate: self.bh_candidate,
        }
    }
}
