#![allow(dead_code)]

use cdma_sig::baselines::random_normalized;
use cdma_sig::SignatureMatrix;

/// Ranks with ties averaged, 1-based.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

pub fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

pub fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

/// `count` seeded random normalized matrices.
pub fn random_set(m: usize, n: usize, count: usize, base_seed: u64) -> Vec<SignatureMatrix> {
    (0..count as u64).map(|k| random_normalized(m, n, base_seed + k).unwrap()).collect()
}

/// Composite Simpson rule with `intervals` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Gaussian tail `Q(x)` by direct quadrature of the standard normal density.
pub fn q_by_quadrature(x: f64) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    simpson(pdf, x, x + 40.0, 400_000)
}

/// Binary-input AWGN mutual information via
/// `I = 1 - E_N[log2(1 + exp(-2 s (s + N) / σ²))]`, by Simpson quadrature
/// over the noise density.
pub fn biawgn_capacity_oracle(scale: f64, sigma: f64) -> f64 {
    let s = scale.abs();
    let var = sigma * sigma;
    let integrand = |z: f64| {
        let pdf = (-0.5 * z * z / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let t = -2.0 * s * (s + z) / var;
        // log2(1 + e^t), stable for large |t|
        let softplus = if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
        pdf * softplus / std::f64::consts::LN_2
    };
    1.0 - simpson(integrand, -16.0 * sigma, 16.0 * sigma, 200_000)
}
