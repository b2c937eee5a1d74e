//! Maximum-likelihood detection, Monte-Carlo bit error rate, and the
//! pairwise union bound on the block error probability.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::criteria::pair_sum;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{check_sigma, sq_dist, Constellation, InputVector, SignatureMatrix, DEFAULT_MAX_USERS};
use crate::rng::Substreams;
use crate::special::q_function;

/// Outcome of a BER simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_simulated: u64,
    /// Binomial standard error of `ber`.
    pub std_error: f64,
    pub block_error_rate: f64,
    pub block_errors: u64,
    pub blocks: u64,
    pub block_std_error: f64,
    pub sigma: f64,
}

/// Index of the constellation point nearest to `y`; the lowest index wins ties.
pub fn ml_decode_index(cons: &Constellation, y: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for i in 0..cons.len() {
        let d = sq_dist(y, cons.point(i));
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Maximum-likelihood (nearest point) estimate of the transmitted input.
pub fn ml_decode<'c>(cons: &'c Constellation, y: &[f64]) -> &'c InputVector {
    cons.input(ml_decode_index(cons, y))
}

pub fn simulate_ber(a: &SignatureMatrix, sigma: f64, blocks: usize, seed: u64) -> Result<BerEstimate> {
    simulate_ber_with(a, sigma, blocks, seed, Exec::default())
}

/// Sends `blocks` uniformly random input vectors through the channel and
/// counts bit and block errors of the ML decoder. Block `b` uses substream
/// `(seed, b)`, with noise drawn at unit variance and scaled by `sigma`.
pub fn simulate_ber_with(a: &SignatureMatrix, sigma: f64, blocks: usize, seed: u64, exec: Exec) -> Result<BerEstimate> {
    check_sigma(sigma)?;
    if blocks == 0 {
        return Err(Error::InvalidSamples { got: 0, min: 1 });
    }
    let cons = Constellation::build(a, DEFAULT_MAX_USERS)?;
    Ok(ber_from_constellation(&cons, sigma, blocks, seed, exec))
}

pub(crate) fn ber_from_constellation(cons: &Constellation, sigma: f64, blocks: usize, seed: u64, exec: Exec) -> BerEstimate {
    let streams = Substreams::new(seed);
    let points = cons.len();
    let errors = exec.map(blocks, |b| {
        let mut rng = streams.get(b as u64);
        let sent = rng.random_range(0..points);
        let mut y = cons.point(sent).to_vec();
        for v in y.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v += sigma * g;
        }
        let got = ml_decode_index(cons, &y);
        (sent ^ got).count_ones()
    });
    let bit_errors: u64 = errors.iter().map(|&e| e as u64).sum();
    let block_errors = errors.iter().filter(|&&e| e > 0).count() as u64;
    let blocks = blocks as u64;
    let bits_simulated = blocks * cons.users() as u64;
    let ber = bit_errors as f64 / bits_simulated as f64;
    let block_error_rate = block_errors as f64 / blocks as f64;
    BerEstimate {
        ber,
        bit_errors,
        bits_simulated,
        std_error: binomial_std_error(ber, bits_simulated),
        block_error_rate,
        block_errors,
        blocks,
        block_std_error: binomial_std_error(block_error_rate, blocks),
        sigma,
    }
}

fn binomial_std_error(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `2^-n Σ_i Σ_{j≠i} Q(‖Z_i - Z_j‖ / 2σ)`, unclamped.
pub fn union_bound(cons: &Constellation, sigma: f64) -> f64 {
    let inv = 0.5 / sigma;
    pair_sum(cons, |d| q_function(d * inv)) / cons.len() as f64
}
