//! Greedy solvers: OMP, OLS and their block versions BOMP and BOLS, with
//! fixed-count, residual and blind ℓ₂,∞ stopping rules.
//!
//! BOLS keeps `W = P⊥_S D` for every column and an orthonormal basis of the
//! selected columns, so scoring a candidate block costs one small
//! Gram-Schmidt pass on `W[:, block]` instead of a fresh least-squares solve.

use alloc::vec;
use alloc::vec::Vec;

use crate::block_model::BlockMatrix;
use crate::error::Error;
use crate::linalg::{axpy, dot, lstsq_min_norm, norm2, orthogonalize_against, solve_upper, Matrix, RANK_TOL};

/// Relative residual below which the loop stops regardless of rule.
pub const ZERO_RESIDUAL_REL: f64 = 1e-12;

/// Singular-value cutoff for the minimum-norm fallback solve.
pub const LSTSQ_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Omp,
    Ols,
    Bomp,
    Bols,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Omp, Algorithm::Ols, Algorithm::Bomp, Algorithm::Bols];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Omp => "omp",
            Algorithm::Ols => "ols",
            Algorithm::Bomp => "bomp",
            Algorithm::Bols => "bols",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s))
    }

    pub fn is_block(self) -> bool {
        matches!(self, Algorithm::Bomp | Algorithm::Bols)
    }

    fn is_least_squares(self) -> bool {
        matches!(self, Algorithm::Ols | Algorithm::Bols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    /// Run exactly T selections.
    FixedIterations(usize),
    /// Stop once `‖r‖₂ ≤ τ`.
    ResidualNorm(f64),
    /// Stop once `‖Dᵀr‖₂,∞ / ‖r‖₂ ≤ √d ξ μ_B`.
    BlindBlock { xi: f64, mu_b: f64, d: usize },
    /// Stop once `‖Dᵀr‖∞ / ‖r‖₂ ≤ ξ μ`.
    BlindScalar { xi: f64, mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub kind: RuleKind,
    /// Hard cap on selections; further limited to `floor(m/d)` and the block count.
    pub max_iterations: usize,
}

impl StoppingRule {
    pub fn new(kind: RuleKind) -> Self {
        Self {
            kind,
            max_iterations: usize::MAX,
        }
    }

    pub fn fixed(t: usize) -> Self {
        Self::new(RuleKind::FixedIterations(t))
    }

    pub fn with_cap(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    /// Threshold on the blind statistic, if this is a blind rule.
    pub fn blind_threshold(&self) -> Option<f64> {
        match self.kind {
            RuleKind::BlindBlock { xi, mu_b, d } => Some(libm::sqrt(d as f64) * xi * mu_b),
            RuleKind::BlindScalar { xi, mu } => Some(xi * mu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    BlindRule,
    FixedCount,
    Residual,
    Cap,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::BlindRule => "blind_rule",
            StopReason::FixedCount => "fixed_count",
            StopReason::Residual => "residual",
            StopReason::Cap => "cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    /// Selection order; column indices for the scalar algorithms.
    pub selected_blocks: Vec<usize>,
    /// Block length the selection indices refer to.
    pub block_len: usize,
    /// `‖r^t‖₂` for t = 0..=iterations.
    pub residual_trace: Vec<f64>,
    /// Blind statistic at every guard evaluation.
    pub blind_stat_trace: Vec<f64>,
    pub stop_reason: StopReason,
    pub iterations: usize,
    /// The selected columns were numerically dependent; `x_hat` is the minimum-norm solution.
    pub rank_deficient: bool,
}

impl RecoveryResult {
    pub fn selected_columns(&self) -> Vec<usize> {
        let d = self.block_len;
        self.selected_blocks.iter().flat_map(|&b| b * d..(b + 1) * d).collect()
    }

    /// Selected column set in increasing order.
    pub fn support(&self) -> Vec<usize> {
        let mut cols = self.selected_columns();
        cols.sort_unstable();
        cols
    }
}

/// Largest ℓ₂ norm over consecutive length-d blocks of `v`.
pub fn l2inf_norm(v: &[f64], d: usize) -> Result<f64, Error> {
    if d == 0 || v.len() % d != 0 {
        return Err(Error::Shape("vector length must be a multiple of the block length"));
    }
    Ok(v.chunks_exact(d).map(norm2).fold(0.0, f64::max))
}

/// `‖Dᵀr‖₂,∞ / ‖r‖₂`.
pub fn blind_statistic(matrix: &Matrix, r: &[f64], d: usize) -> Result<f64, Error> {
    if r.len() != matrix.rows() {
        return Err(Error::Shape("residual length must equal row count"));
    }
    let nr = norm2(r);
    if nr == 0.0 {
        return Err(Error::InvalidArgument("blind statistic undefined for a zero residual"));
    }
    Ok(l2inf_norm(&matrix.tr_mul_vec(r), d)? / nr)
}

/// Block minimizing the residual of `y` projected off `S_t ∪ {block}`.
pub fn bols_step(matrix: &BlockMatrix, y: &[f64], selected: &[usize]) -> Result<usize, Error> {
    let mut state = State::new(matrix.matrix(), matrix.block_len(), y, true)?;
    for &b in selected {
        state.validate_block(b)?;
        state.add_block(b);
    }
    if state.rank_deficient {
        return Err(Error::RankDeficient);
    }
    state.bols_select()
}

/// Unselected block with the largest `‖D[j]ᵀ r‖₂`.
pub fn bomp_step(matrix: &BlockMatrix, r: &[f64], selected: &[usize]) -> Result<usize, Error> {
    if r.len() != matrix.m() {
        return Err(Error::Shape("residual length must equal row count"));
    }
    let mut taken = vec![false; matrix.n_blocks()];
    for &b in selected {
        *taken.get_mut(b).ok_or(Error::InvalidArgument("block index out of range"))? = true;
    }
    let corr = matrix.matrix().tr_mul_vec(r);
    argmax_correlation(&corr, matrix.block_len(), &taken).ok_or(Error::InvalidArgument("no unselected block left"))
}

fn argmax_correlation(corr: &[f64], d: usize, taken: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in corr.chunks_exact(d).enumerate() {
        if taken[j] {
            continue;
        }
        let e = dot(c, c);
        if best.is_none_or(|(_, b)| e > b) {
            best = Some((j, e));
        }
    }
    best.map(|(j, _)| j)
}

/// Runs `algorithm` on `y ≈ D x` until `rule` fires.
///
/// Scalar algorithms treat every column as its own block and accept only the
/// scalar blind rule; block algorithms use the block length of `matrix`.
pub fn recover(matrix: &BlockMatrix, y: &[f64], algorithm: Algorithm, rule: &StoppingRule) -> Result<RecoveryResult, Error> {
    let d = if algorithm.is_block() { matrix.block_len() } else { 1 };
    match rule.kind {
        RuleKind::BlindBlock { d: rule_d, .. } if !algorithm.is_block() || rule_d != d => {
            return Err(Error::InvalidArgument("blind_block rule requires a block algorithm with matching d"));
        }
        RuleKind::BlindScalar { .. } if algorithm.is_block() && d != 1 => {
            return Err(Error::InvalidArgument("blind_scalar rule requires a scalar algorithm"));
        }
        RuleKind::ResidualNorm(tau) if tau.is_nan() || tau < 0.0 => {
            return Err(Error::InvalidArgument("residual threshold must be nonnegative"));
        }
        _ => {}
    }
    if rule.max_iterations == 0 {
        return Err(Error::InvalidArgument("iteration cap must be at least 1"));
    }
    let mat = matrix.matrix();
    let n_blocks = mat.cols() / d;
    let cap = rule.max_iterations.min(mat.rows() / d).min(n_blocks);
    let threshold = rule.blind_threshold();

    let mut state = State::new(mat, d, y, algorithm.is_least_squares())?;
    let y_norm = norm2(y);
    let mut residual_trace = vec![y_norm];
    let mut blind_stat_trace = Vec::new();
    let stop_reason = loop {
        let t = state.selected_blocks.len();
        let r_norm = norm2(&state.r);
        if r_norm <= ZERO_RESIDUAL_REL * y_norm || y_norm == 0.0 {
            break StopReason::Residual;
        }
        let corr = mat.tr_mul_vec(&state.r);
        let stat = l2inf_norm(&corr, d)? / r_norm;
        blind_stat_trace.push(stat);
        match rule.kind {
            RuleKind::FixedIterations(target) if t >= target => break StopReason::FixedCount,
            RuleKind::ResidualNorm(tau) if r_norm <= tau => break StopReason::Residual,
            _ => {}
        }
        if threshold.is_some_and(|th| stat <= th) {
            break StopReason::BlindRule;
        }
        if t >= cap {
            break StopReason::Cap;
        }
        let next = if algorithm.is_least_squares() {
            state.bols_select()?
        } else {
            argmax_correlation(&corr, d, &state.taken).ok_or(Error::AllCandidatesDegenerate)?
        };
        state.add_block(next);
        residual_trace.push(norm2(&state.r));
    };
    let iterations = state.selected_blocks.len();
    let (x_hat, rank_deficient) = state.estimate();
    Ok(RecoveryResult {
        x_hat,
        selected_blocks: state.selected_blocks,
        block_len: d,
        residual_trace,
        blind_stat_trace,
        stop_reason,
        iterations,
        rank_deficient,
    })
}

/// Incremental least-squares state for a growing selection.
struct State<'a> {
    mat: &'a Matrix,
    d: usize,
    y: &'a [f64],
    /// Orthonormal basis of the selected columns.
    basis: Vec<Vec<f64>>,
    /// Columns of the triangular factor, one per selected column.
    r_factor: Vec<Vec<f64>>,
    /// `Qᵀy`.
    qty: Vec<f64>,
    r: Vec<f64>,
    selected_blocks: Vec<usize>,
    taken: Vec<bool>,
    rank_deficient: bool,
    /// `P⊥_S D`, kept only for the least-squares selectors.
    projected: Option<Matrix>,
}

impl<'a> State<'a> {
    fn new(mat: &'a Matrix, d: usize, y: &'a [f64], keep_projected: bool) -> Result<Self, Error> {
        if y.len() != mat.rows() {
            return Err(Error::Shape("measurement length must equal row count"));
        }
        if d == 0 || mat.cols() % d != 0 {
            return Err(Error::Shape("column count must be a multiple of the block length"));
        }
        Ok(Self {
            mat,
            d,
            y,
            basis: Vec::new(),
            r_factor: Vec::new(),
            qty: Vec::new(),
            r: y.to_vec(),
            selected_blocks: Vec::new(),
            taken: vec![false; mat.cols() / d],
            rank_deficient: false,
            projected: keep_projected.then(|| mat.clone()),
        })
    }

    fn validate_block(&self, b: usize) -> Result<(), Error> {
        match self.taken.get(b) {
            None => Err(Error::InvalidArgument("block index out of range")),
            Some(true) => Err(Error::InvalidArgument("block selected twice")),
            Some(false) => Ok(()),
        }
    }

    fn add_block(&mut self, b: usize) {
        self.taken[b] = true;
        self.selected_blocks.push(b);
        let mut new_q = Vec::with_capacity(self.d);
        for col in b * self.d..(b + 1) * self.d {
            let mut v = self.mat.col(col).to_vec();
            let orig = norm2(&v);
            let mut coeffs = orthogonalize_against(&self.basis, &mut v);
            let nv = norm2(&v);
            if nv <= RANK_TOL * orig || nv == 0.0 {
                self.rank_deficient = true;
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            coeffs.push(nv);
            self.r_factor.push(coeffs);
            let mut h = 0.0;
            for _ in 0..2 {
                let step = dot(&v, &self.r);
                axpy(-step, &v, &mut self.r);
                h += step;
            }
            self.qty.push(h);
            self.basis.push(v.clone());
            new_q.push(v);
        }
        if let Some(w) = self.projected.as_mut() {
            for q in &new_q {
                for j in 0..w.cols() {
                    let c = w.col_mut(j);
                    let h = dot(q, c);
                    axpy(-h, q, c);
                }
            }
        }
    }

    /// Candidate with the largest residual reduction `‖P_{W_j} r‖²`.
    fn bols_select(&self) -> Result<usize, Error> {
        let w = self.projected.as_ref().expect("least-squares state keeps the projected dictionary");
        let d = self.d;
        let mut best: Option<(usize, f64)> = None;
        let mut block_basis: Vec<Vec<f64>> = Vec::with_capacity(d);
        for j in 0..self.taken.len() {
            if self.taken[j] {
                continue;
            }
            block_basis.clear();
            let mut degenerate = false;
            let mut reduction = 0.0;
            for col in j * d..(j + 1) * d {
                let mut v = w.col(col).to_vec();
                orthogonalize_against(&block_basis, &mut v);
                let nv = norm2(&v);
                let orig = norm2(self.mat.col(col));
                if nv <= RANK_TOL * orig || nv == 0.0 {
                    degenerate = true;
                    break;
                }
                v.iter_mut().for_each(|x| *x /= nv);
                let c = dot(&v, &self.r);
                reduction += c * c;
                block_basis.push(v);
            }
            if degenerate {
                continue;
            }
            if best.is_none_or(|(_, b)| reduction > b) {
                best = Some((j, reduction));
            }
        }
        best.map(|(j, _)| j).ok_or(Error::AllCandidatesDegenerate)
    }

    fn estimate(&self) -> (Vec<f64>, bool) {
        let mut x = vec![0.0; self.mat.cols()];
        let cols: Vec<usize> = self
            .selected_blocks
            .iter()
            .flat_map(|&b| b * self.d..(b + 1) * self.d)
            .collect();
        if cols.is_empty() {
            return (x, false);
        }
        let coef = if self.rank_deficient {
            lstsq_min_norm(&self.mat.select_columns(&cols), self.y, LSTSQ_RCOND)
        } else {
            let p = cols.len();
            let mut r = Matrix::zeros(p, p);
            for (j, c) in self.r_factor.iter().enumerate() {
                for (i, &v) in c.iter().enumerate() {
                    r.set(i, j, v);
                }
            }
            solve_upper(&r, &self.qty)
        };
        for (&c, v) in cols.iter().zip(coef) {
            x[c] = v;
        }
        (x, self.rank_deficient)
    }
}
