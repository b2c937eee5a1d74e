//! Signature-matrix criteria: capacity, BER and the constellation measures
//! MD (`ν1`), QD (`ν2`) and ED (`ν3`), plus the common fitness dispatch used
//! by the optimizer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ber::ber_from_constellation;
use crate::capacity::{estimate_from_constellation, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{check_sigma, Constellation, SignatureMatrix, DEFAULT_MAX_USERS};
use crate::special::q_function;

/// Curve-fit constants of `Q(x) ≈ a·exp(-((x + b)/c)²)`.
pub const Q_FIT_A: f64 = 0.7;
pub const Q_FIT_B: f64 = 1.0;
pub const Q_FIT_C: f64 = 1.6;

// Pairwise sums over constellations at least this large are split across workers.
const PARALLEL_POINTS: usize = 512;

/// Gaussian-shaped approximation of the Q function.
pub fn q_approx(x: f64) -> f64 {
    Q_FIT_A * (-((x + Q_FIT_B) / Q_FIT_C).powi(2)).exp()
}

/// `Σ_{i≠j} g(‖Z_i - Z_j‖)` over ordered pairs, evaluated as twice the sum
/// over `i < j`. Row partial sums are added in index order.
pub(crate) fn pair_sum<G>(cons: &Constellation, g: G) -> f64
where
    G: Fn(f64) -> f64 + Sync + Send,
{
    let len = cons.len();
    let rows = Exec::default().for_len(len, PARALLEL_POINTS).map(len, |i| {
        (i + 1..len).map(|j| g(cons.dist2(i, j).sqrt())).sum::<f64>()
    });
    2.0 * rows.iter().sum::<f64>()
}

/// `ν1`: smallest distance between two constellation points (0 when two
/// inputs collide).
pub fn min_distance(cons: &Constellation) -> f64 {
    let len = cons.len();
    let rows = Exec::default().for_len(len, PARALLEL_POINTS).map(len, |i| {
        (i + 1..len).map(|j| cons.dist2(i, j)).fold(f64::INFINITY, f64::min)
    });
    rows.into_iter().fold(f64::INFINITY, f64::min).sqrt()
}

/// `ν2`: ordered-pair sum of `Q(d_ij / 2σ)` with the exact tail function.
pub fn q_distance(cons: &Constellation, sigma: f64) -> f64 {
    let inv = 0.5 / sigma;
    pair_sum(cons, |d| q_function(d * inv))
}

fn ed_exponent(d: f64, inv_two_sigma: f64) -> f64 {
    -((d * inv_two_sigma + Q_FIT_B) / Q_FIT_C).powi(2)
}

/// `ν3`: `ν2` with `Q` replaced by the curve fit, without the constant
/// prefactor `a`.
pub fn exp_distance(cons: &Constellation, sigma: f64) -> f64 {
    let inv = 0.5 / sigma;
    pair_sum(cons, |d| ed_exponent(d, inv).exp())
}

/// `ln ν3`, computed with a max shift so it stays finite when every term of
/// `ν3` underflows (very small `sigma`).
pub fn ln_exp_distance(cons: &Constellation, sigma: f64) -> f64 {
    let inv = 0.5 / sigma;
    let len = cons.len();
    let mut max = f64::NEG_INFINITY;
    for i in 0..len {
        for j in i + 1..len {
            max = max.max(ed_exponent(cons.dist2(i, j).sqrt(), inv));
        }
    }
    let mut sum = 0.0;
    for i in 0..len {
        for j in i + 1..len {
            sum += (ed_exponent(cons.dist2(i, j).sqrt(), inv) - max).exp();
        }
    }
    std::f64::consts::LN_2 + max + sum.ln()
}

/// The optimization criteria, with their stable lowercase identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriterionKind {
    #[serde(rename = "capacity")]
    Capacity,
    #[serde(rename = "ber")]
    Ber,
    #[serde(rename = "md")]
    MinDistance,
    #[serde(rename = "qd")]
    QDistance,
    #[serde(rename = "ed")]
    ExpDistance,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 5] = [
        CriterionKind::Capacity,
        CriterionKind::Ber,
        CriterionKind::MinDistance,
        CriterionKind::QDistance,
        CriterionKind::ExpDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::Capacity => "capacity",
            CriterionKind::Ber => "ber",
            CriterionKind::MinDistance => "md",
            CriterionKind::QDistance => "qd",
            CriterionKind::ExpDistance => "ed",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, CriterionKind::Capacity | CriterionKind::Ber)
    }

    pub fn needs_sigma(self) -> bool {
        self != CriterionKind::MinDistance
    }

    /// Default samples (capacity) or blocks (BER) per fitness evaluation.
    pub fn default_budget(self) -> usize {
        match self {
            CriterionKind::Capacity => 4_000,
            CriterionKind::Ber => 10_000,
            _ => 0,
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CriterionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

/// How stochastic criteria pick their evaluation seed during optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// A fresh seed every generation, shared by all individuals of that generation.
    #[default]
    PerGeneration,
    /// One seed for the whole run.
    Fixed,
}

/// A criterion together with its evaluation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub kind: CriterionKind,
    pub sigma: Option<f64>,
    pub eval_budget: usize,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
}

impl CriterionSpec {
    pub fn new(kind: CriterionKind, sigma: Option<f64>) -> Result<Self> {
        let spec = Self { kind, sigma, eval_budget: kind.default_budget(), seed_policy: SeedPolicy::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_budget(mut self, budget: usize) -> Result<Self> {
        self.eval_budget = budget;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.needs_sigma() {
            match self.sigma {
                Some(s) => check_sigma(s)?,
                None => return Err(Error::InvalidConfig(format!("criterion `{}` needs a noise sigma", self.kind))),
            }
        }
        if self.kind.is_stochastic() && self.eval_budget < MIN_SAMPLES {
            return Err(Error::InvalidSamples { got: self.eval_budget, min: MIN_SAMPLES });
        }
        Ok(())
    }

    fn sigma_or_nan(&self) -> f64 {
        self.sigma.unwrap_or(f64::NAN)
    }
}

/// Fitness to maximize: sum capacity, `-BER`, `ν1`, `-ν2` or `-ν3`.
pub fn fitness(spec: &CriterionSpec, a: &SignatureMatrix, seed: u64) -> Result<f64> {
    fitness_with(spec, a, seed, Exec::default())
}

pub fn fitness_with(spec: &CriterionSpec, a: &SignatureMatrix, seed: u64, exec: Exec) -> Result<f64> {
    spec.validate()?;
    let cons = Constellation::build(a, DEFAULT_MAX_USERS)?;
    let sigma = spec.sigma_or_nan();
    Ok(match spec.kind {
        CriterionKind::Capacity => estimate_from_constellation(&cons, sigma, spec.eval_budget, seed, exec).sum_bits,
        CriterionKind::Ber => -ber_from_constellation(&cons, sigma, spec.eval_budget, seed, exec).ber,
        CriterionKind::MinDistance => min_distance(&cons),
        CriterionKind::QDistance => -q_distance(&cons, sigma),
        CriterionKind::ExpDistance => -exp_distance(&cons, sigma),
    })
}
