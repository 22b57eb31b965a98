//! Block-structured measurement matrices and spectra, the random ensembles
//! used by the experiments, SNR-calibrated noise and the success test.
//!
//! Block indices are zero-based throughout: block `i` covers columns
//! `i*d .. (i+1)*d`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use crate::error::Error;
use crate::linalg::{norm2, thin_qr, Matrix};

/// Unit-norm tolerance for measurement matrix columns.
pub const UNIT_NORM_TOL: f64 = 1e-10;

/// Column-normalized m×n measurement matrix partitioned into `n / d` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    entries: Matrix,
    block_len: usize,
}

impl BlockMatrix {
    /// Wraps an already-normalized matrix.
    pub fn new(entries: Matrix, block_len: usize) -> Result<Self, Error> {
        if block_len == 0 || entries.cols() % block_len != 0 {
            return Err(Error::Shape("column count must be a multiple of the block length"));
        }
        for j in 0..entries.cols() {
            let norm = norm2(entries.col(j));
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::NotNormalized { column: j, norm });
            }
        }
        Ok(Self { entries, block_len })
    }

    /// Rescales every column to unit norm, then wraps.
    pub fn normalized(mut entries: Matrix, block_len: usize) -> Result<Self, Error> {
        for j in 0..entries.cols() {
            let norm = norm2(entries.col(j));
            if norm == 0.0 {
                return Err(Error::NotNormalized { column: j, norm });
            }
            entries.col_mut(j).iter_mut().for_each(|x| *x /= norm);
        }
        Self::new(entries, block_len)
    }

    /// Same entries, different block partition.
    pub fn with_block_len(&self, block_len: usize) -> Result<Self, Error> {
        if block_len == 0 || self.n() % block_len != 0 {
            return Err(Error::Shape("column count must be a multiple of the block length"));
        }
        Ok(Self {
            entries: self.entries.clone(),
            block_len,
        })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.entries.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.entries.cols()
    }

    #[inline]
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    #[inline]
    pub fn n_blocks(&self) -> usize {
        self.n() / self.block_len
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    #[inline]
    pub fn block_columns(&self, block: usize) -> Range<usize> {
        block * self.block_len..(block + 1) * self.block_len
    }

    /// Contiguous column-major storage of block `block` (m·d values).
    #[inline]
    pub fn block(&self, block: usize) -> &[f64] {
        self.entries.col_range(block * self.block_len, self.block_len)
    }

    /// Column indices covered by a list of blocks, in list order.
    pub fn columns_of(&self, blocks: &[usize]) -> Vec<usize> {
        blocks.iter().flat_map(|&b| self.block_columns(b)).collect()
    }

    /// Noiseless measurement `D x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.entries.mul_vec(x)
    }
}

/// Length-n spectrum with `k` active blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseSignal {
    entries: Vec<f64>,
    block_len: usize,
    support: Vec<usize>,
}

impl BlockSparseSignal {
    /// Checks that entries outside `support` are exactly zero. `support` is sorted on entry.
    pub fn new(entries: Vec<f64>, block_len: usize, mut support: Vec<usize>) -> Result<Self, Error> {
        if block_len == 0 || entries.len() % block_len != 0 {
            return Err(Error::Shape("signal length must be a multiple of the block length"));
        }
        let n_blocks = entries.len() / block_len;
        support.sort_unstable();
        support.dedup();
        if support.iter().any(|&b| b >= n_blocks) {
            return Err(Error::InvalidArgument("support block index out of range"));
        }
        for b in 0..n_blocks {
            if support.binary_search(&b).is_err()
                && entries[b * block_len..(b + 1) * block_len].iter().any(|&v| v != 0.0)
            {
                return Err(Error::InvalidArgument("nonzero entry outside the support"));
            }
        }
        Ok(Self {
            entries,
            block_len,
            support,
        })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Sorted active block indices.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    /// Sorted nonzero-capable column indices (all columns of active blocks).
    pub fn support_columns(&self) -> Vec<usize> {
        self.support
            .iter()
            .flat_map(|&b| b * self.block_len..(b + 1) * self.block_len)
            .collect()
    }

    pub fn block(&self, b: usize) -> &[f64] {
        &self.entries[b * self.block_len..(b + 1) * self.block_len]
    }
}

/// Amplitude law of the active entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalDist {
    /// N(0, 1)
    Gauss01,
    /// N(1, 0.01)
    Gauss1Var001,
}

impl SignalDist {
    pub fn name(self) -> &'static str {
        match self {
            SignalDist::Gauss01 => "gauss01",
            SignalDist::Gauss1Var001 => "gauss1_001",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gauss01" => Some(SignalDist::Gauss01),
            "gauss1_001" => Some(SignalDist::Gauss1Var001),
            _ => None,
        }
    }
}

/// Noise level of a trial: an absolute standard deviation or a target SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Sigma(f64),
    /// `f64::INFINITY` means noiseless.
    SnrDb(f64),
}

/// Deterministic generator for a plain seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for trial `trial` of grid point `point`.
pub fn trial_rng(master_seed: u64, point: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

fn check_shape(m: usize, n: usize, d: usize) -> Result<(), Error> {
    if m == 0 || n == 0 || d == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive"));
    }
    if n % d != 0 {
        return Err(Error::Shape("block length must divide n"));
    }
    Ok(())
}

/// Gaussian N(0, 1/m) matrix whose d-column blocks are orthonormalized, so the
/// sub-coherence is zero.
pub fn gen_gaussian_block_orthogonal<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<BlockMatrix, Error> {
    check_shape(m, n, d)?;
    if d > m {
        return Err(Error::BlockTooTall { block_len: d, rows: m });
    }
    let scale = 1.0 / libm::sqrt(m as f64);
    let mut data = Vec::with_capacity(m * n);
    let mut block = Matrix::zeros(m, d);
    for _ in 0..n / d {
        loop {
            for j in 0..d {
                for v in block.col_mut(j) {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = z * scale;
                }
            }
            // A Gaussian block is full rank with probability one; redraw otherwise.
            if let Ok(qr) = thin_qr(&block) {
                data.extend_from_slice(qr.q.as_col_major());
                break;
            }
        }
    }
    BlockMatrix::normalized(Matrix::from_col_major(m, n, data), d)
}

/// Hybrid ensemble with columns `a_i (h_i + g_i 1)`, `h_i` standard Gaussian,
/// `g_i ~ U[0, G]`, `a_i` normalizing. Coherence is close to one.
pub fn gen_hybrid<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    d: usize,
    offset_max: f64,
    rng: &mut R,
) -> Result<BlockMatrix, Error> {
    check_shape(m, n, d)?;
    if !(offset_max > 0.0) || !offset_max.is_finite() {
        return Err(Error::InvalidArgument("hybrid offset bound G must be positive"));
    }
    let offset = Uniform::new_inclusive(0.0, offset_max)
        .map_err(|_| Error::InvalidArgument("hybrid offset bound G must be positive"))?;
    let mut entries = Matrix::zeros(m, n);
    for j in 0..n {
        let g = offset.sample(rng);
        for v in entries.col_mut(j) {
            let h: f64 = StandardNormal.sample(rng);
            *v = h + g;
        }
    }
    BlockMatrix::normalized(entries, d)
}

/// Identity concatenated with a randomly signed and permuted Sylvester
/// Hadamard basis (n = 2m, m a power of two). Each block takes its columns
/// from a single basis, so the sub-coherence is zero and the coherence is
/// exactly `1/sqrt(m)`.
pub fn gen_two_orthobasis<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> Result<BlockMatrix, Error> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::InvalidArgument("two-orthobasis ensemble needs m a power of two"));
    }
    check_shape(m, 2 * m, d)?;
    if m % d != 0 {
        return Err(Error::Shape("block length must divide m"));
    }
    let scale = 1.0 / libm::sqrt(m as f64);
    let row_sign: Vec<f64> = (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let row_perm = permutation(m, rng);
    let id_cols = permutation(m, rng);
    let had_cols = permutation(m, rng);

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(2 * m);
    for &c in &id_cols {
        let mut e = vec![0.0; m];
        e[c] = 1.0;
        columns.push(e);
    }
    for &c in &had_cols {
        let col = (0..m)
            .map(|i| {
                let src = row_perm[i];
                let sign = if (src & c).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                sign * row_sign[i] * scale
            })
            .collect();
        columns.push(col);
    }
    let n_blocks = 2 * m / d;
    let block_order = permutation(n_blocks, rng);
    let mut data = Vec::with_capacity(2 * m * m);
    for &b in &block_order {
        for c in &columns[b * d..(b + 1) * d] {
            data.extend_from_slice(c);
        }
    }
    BlockMatrix::normalized(Matrix::from_col_major(m, 2 * m, data), d)
}

fn permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    rand::seq::index::sample(rng, n, n).into_vec()
}

/// Block-sparse spectrum with `k` active blocks drawn uniformly without replacement.
pub fn gen_signal<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    k: usize,
    dist: SignalDist,
    rng: &mut R,
) -> Result<BlockSparseSignal, Error> {
    if d == 0 || n % d != 0 {
        return Err(Error::Shape("block length must divide n"));
    }
    let n_blocks = n / d;
    if k > n_blocks {
        return Err(Error::TooManyBlocks { k, n_blocks });
    }
    let mut support = rand::seq::index::sample(rng, n_blocks, k).into_vec();
    support.sort_unstable();
    let law = match dist {
        SignalDist::Gauss01 => Normal::new(0.0, 1.0),
        SignalDist::Gauss1Var001 => Normal::new(1.0, 0.1),
    }
    .expect("fixed valid parameters");
    let mut entries = vec![0.0; n];
    for &b in &support {
        for v in &mut entries[b * d..(b + 1) * d] {
            *v = law.sample(rng);
        }
    }
    BlockSparseSignal::new(entries, d, support)
}

/// Standard deviation giving `‖Dx‖² / (m σ²) = 10^(snr_db/10)` for this realization.
pub fn sigma_for_snr(clean_norm: f64, m: usize, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    clean_norm / libm::sqrt(m as f64 * libm::pow(10.0, snr_db / 10.0))
}

/// i.i.d. N(0, σ²) noise of length `m`.
pub fn draw_noise<R: Rng + ?Sized>(m: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; m];
    }
    (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
        .collect()
}

/// Noise calibrated per realization to the requested SNR. Returns `(ε, σ)`.
pub fn calibrate_noise<R: Rng + ?Sized>(
    matrix: &BlockMatrix,
    signal: &[f64],
    snr_db: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64), Error> {
    if signal.len() != matrix.n() {
        return Err(Error::Shape("signal length must equal matrix column count"));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument("SNR must be a number above -inf"));
    }
    if snr_db == f64::INFINITY {
        return Ok((vec![0.0; matrix.m()], 0.0));
    }
    let clean_norm = norm2(&matrix.apply(signal));
    if clean_norm == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let sigma = sigma_for_snr(clean_norm, matrix.m(), snr_db);
    Ok((draw_noise(matrix.m(), sigma, rng), sigma))
}

/// Noise for an explicit [`NoiseSpec`].
pub fn noise_for<R: Rng + ?Sized>(
    matrix: &BlockMatrix,
    signal: &[f64],
    spec: NoiseSpec,
    rng: &mut R,
) -> Result<(Vec<f64>, f64), Error> {
    match spec {
        NoiseSpec::Sigma(s) if s > 0.0 && s.is_finite() => Ok((draw_noise(matrix.m(), s, rng), s)),
        NoiseSpec::Sigma(_) => Err(Error::InvalidArgument("sigma must be positive and finite")),
        NoiseSpec::SnrDb(db) => calibrate_noise(matrix, signal, db, rng),
    }
}

/// `y = D x + ε`.
pub fn measure(matrix: &BlockMatrix, signal: &[f64], noise: &[f64]) -> Vec<f64> {
    let mut y = matrix.apply(signal);
    for (yi, e) in y.iter_mut().zip(noise) {
        *yi += e;
    }
    y
}

/// Default relative ℓ₂ tolerance of [`is_success`].
pub const DEFAULT_SUCCESS_REL_TOL: f64 = 1e-2;

/// `‖x̂ − x‖₂ ≤ rel_tol·‖x‖₂`; for `x = 0`, `‖x̂‖₂ ≤ rel_tol`.
pub fn is_success(x_hat: &[f64], x_true: &[f64], rel_tol: f64) -> bool {
    assert_eq!(x_hat.len(), x_true.len(), "length mismatch");
    let err = libm::sqrt(
        x_hat
            .iter()
            .zip(x_true)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>(),
    );
    let reference = norm2(x_true);
    if reference == 0.0 {
        err <= rel_tol
    } else {
        err <= rel_tol * reference
    }
}
