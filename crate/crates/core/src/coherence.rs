//! Mutual coherence, block-coherence, sub-coherence and the exact ERC
//! constant of a [`BlockMatrix`].

use alloc::vec::Vec;

use crate::block_model::BlockMatrix;
use crate::error::Error;
use crate::linalg::{norm2, solve_upper, spectral_norm, thin_qr, tr_mul_cols, Matrix};

/// Incoherence quantities of one matrix at one block length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceProfile {
    /// Largest |⟨D_i, D_j⟩| over distinct columns.
    pub mu: f64,
    /// Largest spectral norm of a cross-block Gram `D[i]ᵀD[j]`, divided by d.
    pub mu_b: f64,
    /// Largest |⟨D_i, D_j⟩| over distinct columns of the same block.
    pub nu: f64,
    pub block_len: usize,
}

/// Exact ERC constant and whether it certifies recovery (`gamma < 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErcValue {
    pub gamma: f64,
    pub satisfied: bool,
}

const TILE_COLS: usize = 512;

#[derive(Default, Clone, Copy)]
struct Scan {
    mu: f64,
    nu: f64,
    block_norm: f64,
}

/// Visits the upper triangle of `DᵀD` tile by tile; `d` aligns tiles with blocks.
fn scan_gram(entries: &Matrix, d: usize, want_blocks: bool) -> Scan {
    let (m, n) = (entries.rows(), entries.cols());
    let tile = (TILE_COLS / d).max(1) * d;
    let mut out = Scan::default();
    let mut sub = Matrix::zeros(d, d);
    let mut i0 = 0;
    while i0 < n {
        let ni = tile.min(n - i0);
        let mut j0 = i0;
        while j0 < n {
            let nj = tile.min(n - j0);
            let g = tr_mul_cols(m, entries.col_range(i0, ni), ni, entries.col_range(j0, nj), nj);
            for jj in 0..nj {
                let gj = j0 + jj;
                let col = g.col(jj);
                let i_end = if i0 == j0 { jj } else { ni };
                for (ii, &v) in col[..i_end].iter().enumerate() {
                    let a = v.abs();
                    if a > out.mu {
                        out.mu = a;
                    }
                    if (i0 + ii) / d == gj / d && a > out.nu {
                        out.nu = a;
                    }
                }
            }
            if want_blocks {
                let bi_count = ni / d;
                let bj_count = nj / d;
                for bj in 0..bj_count {
                    let bi_end = if i0 == j0 { bj } else { bi_count };
                    for bi in 0..bi_end {
                        let s = block_spectral_norm(&g, bi * d, bj * d, d, &mut sub);
                        if s > out.block_norm {
                            out.block_norm = s;
                        }
                    }
                }
            }
            j0 += nj;
        }
        i0 += ni;
    }
    out
}

/// Spectral norm of the d×d window of `g` at (`r0`, `c0`).
fn block_spectral_norm(g: &Matrix, r0: usize, c0: usize, d: usize, scratch: &mut Matrix) -> f64 {
    match d {
        1 => g.get(r0, c0).abs(),
        2 => {
            let (a, b) = (g.get(r0, c0), g.get(r0, c0 + 1));
            let (c, e) = (g.get(r0 + 1, c0), g.get(r0 + 1, c0 + 1));
            let s = a * a + b * b + c * c + e * e;
            let det = a * e - b * c;
            let disc = (s * s - 4.0 * det * det).max(0.0);
            libm::sqrt(0.5 * (s + libm::sqrt(disc)))
        }
        _ => {
            for j in 0..d {
                for i in 0..d {
                    scratch.set(i, j, g.get(r0 + i, c0 + j));
                }
            }
            spectral_norm(scratch)
        }
    }
}

/// Largest absolute off-diagonal Gram entry.
pub fn mutual_coherence(entries: &Matrix) -> f64 {
    scan_gram(entries, 1, false).mu
}

/// Largest cross-block Gram spectral norm over `d`.
pub fn block_coherence(matrix: &BlockMatrix) -> f64 {
    let d = matrix.block_len();
    scan_gram(matrix.matrix(), d, true).block_norm / d as f64
}

/// Largest within-block off-diagonal Gram entry; zero when `d = 1`.
pub fn sub_coherence(matrix: &BlockMatrix) -> f64 {
    scan_gram(matrix.matrix(), matrix.block_len(), false).nu
}

/// All three quantities from a single pass over the Gram matrix.
pub fn coherence_profile(matrix: &BlockMatrix) -> CoherenceProfile {
    let d = matrix.block_len();
    let s = scan_gram(matrix.matrix(), d, true);
    CoherenceProfile {
        mu: s.mu,
        mu_b: s.block_norm / d as f64,
        nu: s.nu,
        block_len: d,
    }
}

/// Orthonormal basis of the span of `cols`, or `RankDeficient`.
pub(crate) fn orthonormal_basis(matrix: &Matrix, cols: &[usize]) -> Result<Matrix, Error> {
    let sel = matrix.select_columns(cols);
    thin_qr(&sel).map(|qr| qr.q).map_err(|_| Error::RankDeficient)
}

/// `(I − Q Qᵀ) v` for orthonormal `Q`, applied twice for stability.
pub(crate) fn project_out(q: &Matrix, v: &mut [f64]) {
    for _ in 0..2 {
        for j in 0..q.cols() {
            let c = q.col(j);
            let h = crate::linalg::dot(c, v);
            crate::linalg::axpy(-h, c, v);
        }
    }
}

/// Exact ERC constant for support `true_blocks` after selecting `selected_blocks`.
///
/// Both the remaining support columns and the off-support columns are projected
/// onto the orthogonal complement of the selection and rescaled to unit norm
/// (the `1/‖P⊥ D_i‖` normalizers); γ is the largest column-block sum of d×d
/// spectral norms of `(D_rem R_rem)† (D_off R_off)`.
pub fn erc_gamma(matrix: &BlockMatrix, true_blocks: &[usize], selected_blocks: &[usize]) -> Result<ErcValue, Error> {
    let d = matrix.block_len();
    let nb = matrix.n_blocks();
    if true_blocks.iter().chain(selected_blocks).any(|&b| b >= nb) {
        return Err(Error::InvalidArgument("block index out of range"));
    }
    if selected_blocks.iter().any(|b| !true_blocks.contains(b)) {
        return Err(Error::InvalidArgument("selected blocks must lie in the true support"));
    }
    let remaining: Vec<usize> = true_blocks
        .iter()
        .copied()
        .filter(|b| !selected_blocks.contains(b))
        .collect();
    let off: Vec<usize> = (0..nb).filter(|b| !true_blocks.contains(b)).collect();
    if remaining.is_empty() || off.is_empty() {
        return Ok(ErcValue {
            gamma: 0.0,
            satisfied: true,
        });
    }

    let entries = matrix.matrix();
    let basis = if selected_blocks.is_empty() {
        None
    } else {
        Some(orthonormal_basis(entries, &matrix.columns_of(selected_blocks))?)
    };
    let projected_normalized = |blocks: &[usize]| -> Result<Matrix, Error> {
        let cols = matrix.columns_of(blocks);
        let mut out = entries.select_columns(&cols);
        for j in 0..out.cols() {
            let c = out.col_mut(j);
            if let Some(q) = &basis {
                project_out(q, c);
            }
            let nrm = norm2(c);
            if nrm <= 1e-12 {
                return Err(Error::RankDeficient);
            }
            c.iter_mut().for_each(|x| *x /= nrm);
        }
        Ok(out)
    };
    let a = projected_normalized(&remaining)?;
    let b = projected_normalized(&off)?;

    // A† B = R⁻¹ Qᵀ B for full-column-rank A.
    let qr = thin_qr(&a).map_err(|_| Error::RankDeficient)?;
    let qtb = qr.q.tr_mul(&b);
    let p = a.cols();
    let mut coeff = Matrix::zeros(p, b.cols());
    for j in 0..b.cols() {
        let x = solve_upper(&qr.r, qtb.col(j));
        coeff.col_mut(j).copy_from_slice(&x);
    }

    let mut scratch = Matrix::zeros(d, d);
    let mut gamma = 0.0f64;
    for bj in 0..off.len() {
        let mut sum = 0.0;
        for bi in 0..remaining.len() {
            sum += block_spectral_norm(&coeff, bi * d, bj * d, d, &mut scratch);
        }
        gamma = gamma.max(sum);
    }
    Ok(ErcValue {
        gamma,
        satisfied: gamma < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block_model::{gen_gaussian_block_orthogonal, seeded_rng};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_normalized(m: usize, n: usize, d: usize, seed: u64) -> BlockMatrix {
        let mut rng = seeded_rng(seed);
        let data: Vec<f64> = (0..m * n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        BlockMatrix::normalized(Matrix::from_col_major(m, n, data), d).unwrap()
    }

    #[test]
    fn identity_is_incoherent() {
        let d = BlockMatrix::new(Matrix::identity(3), 1).unwrap();
        assert_eq!(mutual_coherence(d.matrix()), 0.0);
        assert_eq!(block_coherence(&d), 0.0);
        assert_eq!(sub_coherence(&d), 0.0);
    }

    #[test]
    fn two_column_coherence() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let d = Matrix::from_row_major(2, 2, &[1.0, h, 0.0, h]);
        assert_abs_diff_eq!(mutual_coherence(&d), h, epsilon = 1e-15);
    }

    #[test]
    fn orthogonal_blocks_have_zero_block_coherence() {
        // blocks {e0,e1} and {e2,e3}; within-block correlation nonzero
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let m = Matrix::from_row_major(4, 4, &[1.0, h, 0.0, 0.0, 0.0, h, 0.0, 0.0, 0.0, 0.0, 1.0, h, 0.0, 0.0, 0.0, h]);
        let d = BlockMatrix::new(m, 2).unwrap();
        assert_eq!(block_coherence(&d), 0.0);
        assert_abs_diff_eq!(sub_coherence(&d), h, epsilon = 1e-15);
    }

    #[test]
    fn unit_block_length_collapses() {
        let d = random_normalized(6, 10, 1, 3);
        let p = coherence_profile(&d);
        assert_eq!(p.mu, p.mu_b);
        assert_eq!(p.nu, 0.0);
    }

    /// Independent scan over all block pairs with nalgebra singular values.
    fn brute_block_coherence(d: &BlockMatrix) -> f64 {
        let bl = d.block_len();
        let m = d.m();
        let dm = nalgebra::DMatrix::from_column_slice(m, d.n(), d.matrix().as_col_major());
        let g = dm.transpose() * &dm;
        let mut best = 0.0f64;
        for i in 0..d.n_blocks() {
            for j in 0..d.n_blocks() {
                if i == j {
                    continue;
                }
                let blk = g.view((i * bl, j * bl), (bl, bl)).into_owned();
                let s = blk.singular_values().max();
                best = best.max(s);
            }
        }
        best / bl as f64
    }

    #[test]
    fn block_coherence_matches_brute_force() {
        for (m, n, d, seed) in [(8, 8, 2, 1), (6, 12, 3, 2), (10, 20, 4, 3), (5, 30, 5, 4)] {
            let mat = random_normalized(m, n, d, seed);
            assert_abs_diff_eq!(block_coherence(&mat), brute_block_coherence(&mat), epsilon = 1e-12);
        }
    }

    #[test]
    fn sub_coherence_matches_brute_force() {
        let mat = random_normalized(6, 6, 3, 8);
        let g = mat.matrix().tr_mul(mat.matrix());
        let mut best = 0.0f64;
        for b in 0..2 {
            for i in b * 3..b * 3 + 3 {
                for j in b * 3..b * 3 + 3 {
                    if i != j {
                        best = best.max(g.get(i, j).abs());
                    }
                }
            }
        }
        assert_abs_diff_eq!(sub_coherence(&mat), best, epsilon = 1e-15);
    }

    #[test]
    fn tiling_does_not_change_results() {
        // n larger than one tile, with odd tail
        let mat = random_normalized(7, 1100, 2, 5);
        let g = mat.matrix().tr_mul(mat.matrix());
        let mut best = 0.0f64;
        for j in 0..1100 {
            for i in 0..j {
                best = best.max(g.get(i, j).abs());
            }
        }
        assert_abs_diff_eq!(mutual_coherence(mat.matrix()), best, epsilon = 1e-15);
    }

    #[test]
    fn erc_zero_for_orthonormal_dictionary() {
        let d = BlockMatrix::new(Matrix::identity(8), 2).unwrap();
        let v = erc_gamma(&d, &[0, 2], &[]).unwrap();
        assert_eq!(v.gamma, 0.0);
        assert!(v.satisfied);
        let v = erc_gamma(&d, &[0, 2], &[2]).unwrap();
        assert_eq!(v.gamma, 0.0);
    }

    #[test]
    fn erc_rejects_bad_selection() {
        let d = BlockMatrix::new(Matrix::identity(8), 2).unwrap();
        assert!(erc_gamma(&d, &[0, 2], &[1]).is_err());
        assert!(erc_gamma(&d, &[0, 9], &[]).is_err());
    }

    #[test]
    fn erc_invariant_to_column_sign_flips() {
        let d = gen_gaussian_block_orthogonal(16, 32, 2, &mut seeded_rng(4)).unwrap();
        let g0 = erc_gamma(&d, &[1, 5], &[]).unwrap().gamma;
        let mut flipped = d.matrix().clone();
        for j in [0usize, 7, 20, 31] {
            flipped.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
        let d2 = BlockMatrix::new(flipped, 2).unwrap();
        let g1 = erc_gamma(&d2, &[1, 5], &[]).unwrap().gamma;
        assert_abs_diff_eq!(g0, g1, epsilon = 1e-10);
    }
}
