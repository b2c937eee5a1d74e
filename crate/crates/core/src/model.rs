//! Channel model `Y = A·X + N`: signature matrices, binary inputs, the
//! noiseless output constellation and noisy transmission.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest user count for which the 2^n input set is enumerated by default.
pub const DEFAULT_MAX_USERS: usize = 16;

/// Column norms must equal one within this tolerance.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Columns shorter than this cannot be normalized.
pub const ZERO_COLUMN_NORM: f64 = 1e-12;

/// An `m × n` real signature matrix with unit-norm columns, one column per user.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMatrix {
    m: usize,
    n: usize,
    entries: Vec<f64>,
}

impl SignatureMatrix {
    /// Wraps row-major `entries`, checking finiteness and unit column norms.
    pub fn new(m: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        check_shape(m, n, entries.len())?;
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry { index });
        }
        let a = Self { m, n, entries };
        for c in 0..n {
            let norm = a.column_norm(c);
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NotNormalized { column: c, norm });
            }
        }
        Ok(a)
    }

    /// Square identity matrix, the orthonormal signature set of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { m: n, n, entries }
    }

    pub fn chips(&self) -> usize {
        self.m
    }

    pub fn users(&self) -> usize {
        self.n
    }

    /// Overloading factor `n / m`.
    pub fn overloading_factor(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.m).map(|r| self.get(r, col)).collect()
    }

    pub fn column_norm(&self, col: usize) -> f64 {
        (0..self.m).map(|r| self.get(r, col).powi(2)).sum::<f64>().sqrt()
    }

    /// `A·x` for a sign vector, accumulating users in index order.
    pub fn apply(&self, x: &InputVector) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "input length must equal the user count");
        (0..self.m)
            .map(|r| {
                let row = &self.entries[r * self.n..(r + 1) * self.n];
                row.iter().zip(x.bits()).fold(0.0, |acc, (&a, &b)| if b > 0 { acc + a } else { acc - a })
            })
            .collect()
    }

    /// Returns the matrix with its columns reordered: column `j` of the result
    /// is column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut entries = vec![0.0; self.entries.len()];
        for r in 0..self.m {
            for (j, &src) in perm.iter().enumerate() {
                entries[r * self.n + j] = self.get(r, src);
            }
        }
        Self { m: self.m, n: self.n, entries }
    }

    /// Returns the matrix with column `col` negated.
    pub fn negate_column(&self, col: usize) -> Self {
        let mut out = self.clone();
        for r in 0..self.m {
            out.entries[r * self.n + col] = -out.entries[r * self.n + col];
        }
        out
    }
}

fn check_shape(m: usize, n: usize, len: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::Dimension(format!("matrix must be at least 1x1, got {m}x{n}")));
    }
    if len != m * n {
        return Err(Error::Dimension(format!("{m}x{n} matrix needs {} entries, got {len}", m * n)));
    }
    Ok(())
}

/// Scales every column of the row-major `raw` matrix to unit Euclidean norm.
pub fn normalize_columns(m: usize, n: usize, raw: &[f64]) -> Result<SignatureMatrix> {
    check_shape(m, n, raw.len())?;
    if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntry { index });
    }
    let mut entries = raw.to_vec();
    for c in 0..n {
        let norm = (0..m).map(|r| raw[r * n + c].powi(2)).sum::<f64>().sqrt();
        if norm < ZERO_COLUMN_NORM {
            return Err(Error::ZeroColumn { column: c, norm });
        }
        for r in 0..m {
            entries[r * n + c] /= norm;
        }
    }
    Ok(SignatureMatrix { m, n, entries })
}

/// One binary input per user, entries `+1` or `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputVector(Vec<i8>);

impl InputVector {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if bits.iter().any(|&b| b != 1 && b != -1) {
            return Err(Error::Dimension("input entries must be +1 or -1".into()));
        }
        Ok(Self(bits))
    }

    /// Canonical labelling: bit `k` of `index` clear means `+1` for user `k`.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self((0..n).map(|k| if (index >> k) & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn index(&self) -> usize {
        self.0.iter().enumerate().fold(0, |acc, (k, &b)| if b < 0 { acc | (1 << k) } else { acc })
    }

    pub fn bits(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &InputVector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

fn check_users(n: usize, max_users: usize) -> Result<()> {
    if n > max_users || n >= usize::BITS as usize {
        return Err(Error::TooManyUsers { n, max: max_users });
    }
    Ok(())
}

/// All `2^n` sign vectors in canonical order.
pub fn enumerate_inputs(n: usize) -> Result<Vec<InputVector>> {
    enumerate_inputs_with_limit(n, DEFAULT_MAX_USERS)
}

pub fn enumerate_inputs_with_limit(n: usize, max_users: usize) -> Result<Vec<InputVector>> {
    check_users(n, max_users)?;
    Ok((0..1usize << n).map(|i| InputVector::from_index(i, n)).collect())
}

/// The `2^n` noiseless outputs `Z_i = A·X_i`, indexed canonically.
#[derive(Debug, Clone)]
pub struct Constellation {
    m: usize,
    n: usize,
    points: Vec<f64>,
    inputs: Vec<InputVector>,
}

impl Constellation {
    pub fn build(a: &SignatureMatrix, max_users: usize) -> Result<Self> {
        let inputs = enumerate_inputs_with_limit(a.users(), max_users)?;
        let mut points = Vec::with_capacity(inputs.len() * a.chips());
        for x in &inputs {
            points.extend(a.apply(x));
        }
        Ok(Self { m: a.chips(), n: a.users(), points, inputs })
    }

    /// Builds a constellation from explicit points; used for geometric queries
    /// on point sets that do not come from a signature matrix.
    pub fn from_points(m: usize, n: usize, points: Vec<f64>) -> Result<Self> {
        let inputs = enumerate_inputs(n)?;
        if points.len() != inputs.len() * m {
            return Err(Error::Dimension(format!("expected {} points of dimension {m}", inputs.len())));
        }
        Ok(Self { m, n, points, inputs })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn users(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.m..(i + 1) * self.m]
    }

    pub fn input(&self, i: usize) -> &InputVector {
        &self.inputs[i]
    }

    pub fn inputs(&self) -> &[InputVector] {
        &self.inputs
    }

    /// Squared Euclidean distance between points `i` and `j`.
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.point(i), self.point(j))
    }

    /// Pairs `(i, j)`, `i < j`, that map to the same output point.
    pub fn collisions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.point(i) == self.point(j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Constellation with the default user limit.
pub fn build_constellation(a: &SignatureMatrix) -> Result<Constellation> {
    Constellation::build(a, DEFAULT_MAX_USERS)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Noise standard deviation per chip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    sigma: f64,
}

impl ChannelSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self { sigma })
    }

    /// Each user has unit symbol energy, so `SNR_dB = -20 log10(sigma)`.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(10f64.powf(-snr_db / 20.0))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn snr_db(&self) -> f64 {
        snr_db(self.sigma)
    }
}

/// Display-only dB value of a noise standard deviation.
pub fn snr_db(sigma: f64) -> f64 {
    -20.0 * sigma.log10()
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSigma(sigma))
    }
}

/// One noisy channel use: `A·x + g` with i.i.d. `N(0, sigma²)` entries in `g`.
pub fn transmit<R: Rng + ?Sized>(a: &SignatureMatrix, x: &InputVector, chan: ChannelSpec, rng: &mut R) -> Result<Vec<f64>> {
    if x.len() != a.users() {
        return Err(Error::Dimension(format!("input has {} entries for {} users", x.len(), a.users())));
    }
    let mut y = a.apply(x);
    add_noise(&mut y, chan.sigma(), rng);
    Ok(y)
}

pub(crate) fn add_noise<R: Rng + ?Sized>(y: &mut [f64], sigma: f64, rng: &mut R) {
    for v in y.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *v += sigma * g;
    }
}
