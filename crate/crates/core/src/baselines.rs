//! Reference signature sets: WBE (unit-norm tight frames), random
//! normalized matrices, and orthonormal columns for the non-overloaded case.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_columns, SignatureMatrix};
use crate::rng::seeded;

/// Default tight-frame tolerance for [`wbe_matrix`].
pub const WBE_TOLERANCE: f64 = 1e-10;

/// Iteration cap of the tight-frame projection.
pub const WBE_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Wbe,
    RandomNormalized,
    Orthogonal,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Wbe => "wbe",
            BaselineKind::RandomNormalized => "random",
            BaselineKind::Orthogonal => "orthogonal",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wbe" => Ok(BaselineKind::Wbe),
            "random" => Ok(BaselineKind::RandomNormalized),
            "orthogonal" => Ok(BaselineKind::Orthogonal),
            other => Err(Error::InvalidConfig(format!("unknown baseline `{other}` (expected wbe, random or orthogonal)"))),
        }
    }
}

/// Builds the baseline of the given kind.
pub fn generate(kind: BaselineKind, m: usize, n: usize, seed: u64) -> Result<SignatureMatrix> {
    match kind {
        BaselineKind::Wbe => wbe_matrix(m, n, seed, WBE_TOLERANCE),
        BaselineKind::RandomNormalized => random_normalized(m, n, seed),
        BaselineKind::Orthogonal => orthogonal_matrix(m, n, seed),
    }
}

pub(crate) fn random_normalized_from<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> Result<SignatureMatrix> {
    loop {
        let raw: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
        match normalize_columns(m, n, &raw) {
            Err(Error::ZeroColumn { .. }) => continue,
            other => return other,
        }
    }
}

/// I.i.d. Gaussian entries with normalized columns.
pub fn random_normalized(m: usize, n: usize, seed: u64) -> Result<SignatureMatrix> {
    random_normalized_from(&mut seeded(seed), m, n)
}

/// First `n` columns of a Haar-random `m × m` orthogonal matrix.
pub fn orthogonal_matrix(m: usize, n: usize, seed: u64) -> Result<SignatureMatrix> {
    if n > m {
        return Err(Error::Dimension(format!("orthogonal columns need n <= m, got {m}x{n}")));
    }
    if n == 0 {
        return Err(Error::Dimension("matrix must have at least one column".into()));
    }
    let mut rng = seeded(seed);
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut raw = vec![0.0; m * n];
    for c in 0..n {
        let sign = if r[(c, c)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..m {
            raw[row * n + c] = sign * q[(row, c)];
        }
    }
    normalize_columns(m, n, &raw)
}

fn to_dmatrix(a: &SignatureMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.chips(), a.users(), a.entries())
}

/// `max |A·Aᵀ - (n/m)·I|` over all entries.
pub fn frame_residual(a: &SignatureMatrix) -> f64 {
    let d = to_dmatrix(a);
    let mut gram = &d * d.transpose();
    let target = a.overloading_factor();
    for i in 0..a.chips() {
        gram[(i, i)] -= target;
    }
    gram.amax()
}

/// A unit-norm tight frame (`A·Aᵀ = (n/m)·I`), found by alternating between
/// the nearest tight frame (polar factor of the rows, rescaled) and column
/// normalization, starting from `random_normalized(m, n, seed)`.
pub fn wbe_matrix(m: usize, n: usize, seed: u64, tol: f64) -> Result<SignatureMatrix> {
    if n < m {
        return Err(Error::Dimension(format!("a WBE set needs n >= m, got {m}x{n}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let beta_sqrt = (n as f64 / m as f64).sqrt();
    let mut a = random_normalized(m, n, seed)?;
    let mut residual = frame_residual(&a);
    for _ in 0..WBE_MAX_ITERATIONS {
        if residual <= tol {
            return Ok(a);
        }
        let d = to_dmatrix(&a);
        let eig = (&d * d.transpose()).symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l.is_nan() || l <= 1e-14) {
            // Rank-deficient rows: restart the projection from a fresh draw.
            a = random_normalized(m, n, seed.wrapping_add(1))?;
            residual = frame_residual(&a);
            continue;
        }
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let polar = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose() * &d * beta_sqrt;
        let raw: Vec<f64> = (0..m).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| polar[(r, c)]).collect();
        a = normalize_columns(m, n, &raw)?;
        residual = frame_residual(&a);
    }
    if residual <= tol {
        return Ok(a);
    }
    Err(Error::NonConvergence { iterations: WBE_MAX_ITERATIONS, residual })
}
