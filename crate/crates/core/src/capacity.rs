//! Sum capacity `C(A) = h(Y) - h(N)` under uniform binary inputs.
//!
//! The output density is the equal-weight Gaussian mixture centred on the
//! constellation. `h(Y)` is estimated by Monte Carlo with that exact density;
//! a 1-D quadrature routine serves as an oracle for single-user channels.

use std::f64::consts::{E, LN_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{check_sigma, sq_dist, Constellation, SignatureMatrix, DEFAULT_MAX_USERS};
use crate::rng::Substreams;

/// Smallest sample budget accepted by [`estimate_capacity`].
pub const MIN_SAMPLES: usize = 100;

/// Default Monte-Carlo budget.
pub const DEFAULT_SAMPLES: usize = 200_000;

/// A Monte-Carlo estimate of sum capacity, in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    pub sum_bits: f64,
    pub per_user_bits: f64,
    pub std_error: f64,
    pub samples: usize,
    pub sigma: f64,
}

/// Differential entropy of `m` i.i.d. `N(0, sigma²)` entries, in bits.
pub fn noise_entropy(m: usize, sigma: f64) -> f64 {
    0.5 * m as f64 * (2.0 * PI * E * sigma * sigma).log2()
}

/// `ln` of the mixture sum `Σ_i exp(-‖y - Z_i‖² / 2σ²)`, max-shifted.
fn ln_kernel_sum(cons: &Constellation, inv_two_var: f64, y: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for i in 0..cons.len() {
        max = max.max(-sq_dist(y, cons.point(i)) * inv_two_var);
    }
    let mut sum = 0.0;
    for i in 0..cons.len() {
        sum += (-sq_dist(y, cons.point(i)) * inv_two_var - max).exp();
    }
    max + sum.ln()
}

/// `log2 f_Y(y)` for the output of a channel with constellation `cons`.
pub fn log_output_density(cons: &Constellation, sigma: f64, y: &[f64]) -> f64 {
    debug_assert_eq!(y.len(), cons.dim());
    let m = cons.dim() as f64;
    let ln_f = -(cons.users() as f64) * LN_2 - 0.5 * m * (2.0 * PI * sigma * sigma).ln()
        + ln_kernel_sum(cons, 0.5 / (sigma * sigma), y);
    ln_f / LN_2
}

/// Monte-Carlo sum capacity with the default execution strategy.
pub fn estimate_capacity(a: &SignatureMatrix, sigma: f64, samples: usize, seed: u64) -> Result<CapacityEstimate> {
    estimate_capacity_with(a, sigma, samples, seed, Exec::default())
}

/// Monte-Carlo sum capacity.
///
/// Sample `k` draws its input index and its unit-variance noise from the
/// substream `(seed, k)`, and the noise is scaled by `sigma` afterwards. Two
/// calls with the same seed therefore share their random numbers across
/// `sigma` and across matrices of the same shape.
pub fn estimate_capacity_with(
    a: &SignatureMatrix,
    sigma: f64,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<CapacityEstimate> {
    check_sigma(sigma)?;
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidSamples { got: samples, min: MIN_SAMPLES });
    }
    let cons = Constellation::build(a, DEFAULT_MAX_USERS)?;
    Ok(estimate_from_constellation(&cons, sigma, samples, seed, exec))
}

pub(crate) fn estimate_from_constellation(
    cons: &Constellation,
    sigma: f64,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> CapacityEstimate {
    let streams = Substreams::new(seed);
    let m = cons.dim();
    let points = cons.len();
    let neg_log2_f = exec.map(samples, |k| {
        let mut rng = streams.get(k as u64);
        let idx = rng.random_range(0..points);
        let mut y = cons.point(idx).to_vec();
        for v in y.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v += sigma * g;
        }
        -log_output_density(cons, sigma, &y)
    });
    let count = samples as f64;
    let mean = neg_log2_f.iter().sum::<f64>() / count;
    let var = neg_log2_f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let sum_bits = mean - noise_entropy(m, sigma);
    CapacityEstimate {
        sum_bits,
        per_user_bits: sum_bits / cons.users() as f64,
        std_error: (var / count).sqrt(),
        samples,
        sigma,
    }
}

/// Absolute tolerance of [`exact_capacity_1d`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// Mutual information of `Y = scale·X + N`, `X` uniform on `±1`, by adaptive
/// Gauss–Kronrod quadrature of the output entropy.
pub fn exact_capacity_1d(scale: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let s = scale.abs();
    let inv_two_var = 0.5 / (sigma * sigma);
    let ln_norm = -LN_2 - 0.5 * (2.0 * PI * sigma * sigma).ln();
    let integrand = |y: f64| {
        let a = -(y - s) * (y - s) * inv_two_var;
        let b = -(y + s) * (y + s) * inv_two_var;
        let hi = a.max(b);
        let ln_f = ln_norm + hi + ((a - hi).exp() + (b - hi).exp()).ln();
        -ln_f.exp() * ln_f / LN_2
    };
    let reach = s + 14.0 * sigma;
    let mut breaks = vec![-reach, -s, 0.0, s, reach];
    breaks.dedup();
    let budget = QUADRATURE_TOLERANCE / 10.0;
    let mut h = 0.0;
    let mut err = 0.0;
    for w in breaks.windows(2) {
        let (v, e) = adaptive_gk(&integrand, w[0], w[1], budget / (breaks.len() - 1) as f64, 0);
        h += v;
        err += e;
    }
    if err.is_nan() || err > QUADRATURE_TOLERANCE {
        return Err(Error::QuadratureFailure { tol: QUADRATURE_TOLERANCE, estimate: err });
    }
    Ok(h - noise_entropy(1, sigma))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd nodes 1, 3, 5, 7 of the Kronrod set.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for j in 0..7 {
        let dx = h * GK_NODES[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += KRONROD_WEIGHTS[j] * pair;
        if j % 2 == 1 {
            gauss += GAUSS_WEIGHTS[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= 40 {
        return (value, err);
    }
    let mid = 0.5 * (a + b);
    let (l, el) = adaptive_gk(f, a, mid, 0.5 * tol, depth + 1);
    let (r, er) = adaptive_gk(f, mid, b, 0.5 * tol, depth + 1);
    (l + r, el + er)
}
