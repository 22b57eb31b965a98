//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # recovery versus sparsity
//! matrix_kind = gaussian_block_orth
//! m = 128
//! n = 512
//! d = 4
//! k_grid = 1:8
//! snr_db = 20
//! algorithms = ols, bols, omp, bomp, b-omp, b-bols
//! trials = 300
//! master_seed = 7
//! ```

use std::collections::BTreeMap;
use std::fmt;

use bbols_core::block_model::DEFAULT_SUCCESS_REL_TOL;
use bbols_core::SignalDist;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    GaussianBlockOrth,
    Hybrid,
    TwoOrthobasis,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::GaussianBlockOrth => "gaussian_block_orth",
            MatrixKind::Hybrid => "hybrid",
            MatrixKind::TwoOrthobasis => "two_orthobasis",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [MatrixKind::GaussianBlockOrth, MatrixKind::Hybrid, MatrixKind::TwoOrthobasis]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// A named solver configuration, one curve per method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Omp,
    Ols,
    Bomp,
    Bols,
    /// OMP stopped by the scalar blind rule.
    BlindOmp,
    /// BOLS stopped by the block blind rule.
    BlindBols,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ols,
        Method::Bols,
        Method::Omp,
        Method::Bomp,
        Method::BlindOmp,
        Method::BlindBols,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Omp => "omp",
            Method::Ols => "ols",
            Method::Bomp => "bomp",
            Method::Bols => "bols",
            Method::BlindOmp => "b-omp",
            Method::BlindBols => "b-bols",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn is_blind(self) -> bool {
        matches!(self, Method::BlindOmp | Method::BlindBols)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The swept quantity.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Sparsity { k_grid: Vec<usize>, snr_db: f64 },
    Snr { snr_grid: Vec<f64>, k: usize },
}

impl Axis {
    pub fn len(&self) -> usize {
        match self {
            Axis::Sparsity { k_grid, .. } => k_grid.len(),
            Axis::Snr { snr_grid, .. } => snr_grid.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(abscissa, k, snr_db)` at grid index `i`.
    pub fn point(&self, i: usize) -> (f64, usize, f64) {
        match self {
            Axis::Sparsity { k_grid, snr_db } => (k_grid[i] as f64, k_grid[i], *snr_db),
            Axis::Snr { snr_grid, k } => (snr_grid[i], *k, snr_grid[i]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuccessMetric {
    /// Recovered support equals the true support.
    Support,
    /// `‖x̂ − x‖₂ ≤ tol·‖x‖₂`.
    RelError,
}

impl SuccessMetric {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "support" => Some(SuccessMetric::Support),
            "rel_error" => Some(SuccessMetric::RelError),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub matrix_kind: MatrixKind,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub axis: Axis,
    pub signal_dist: SignalDist,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub master_seed: u64,
    pub success_metric: SuccessMetric,
    pub success_rel_tol: f64,
    /// Target probability from which the blind-rule ξ is derived.
    pub p_target: f64,
    /// ξ used when the derivation is outside the valid regime.
    pub xi_fallback: Option<f64>,
    /// Offset bound of the hybrid ensemble.
    pub hybrid_g: f64,
    /// One matrix for the whole sweep instead of one per trial.
    pub fixed_matrix: bool,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(m: usize, n: usize, d: usize, axis: Axis) -> Self {
        Self {
            matrix_kind: MatrixKind::GaussianBlockOrth,
            m,
            n,
            d,
            axis,
            signal_dist: SignalDist::Gauss01,
            methods: Method::ALL.to_vec(),
            trials: 1000,
            master_seed: 0,
            success_metric: SuccessMetric::Support,
            success_rel_tol: DEFAULT_SUCCESS_REL_TOL,
            p_target: 0.95,
            xi_fallback: None,
            hybrid_g: 5.0,
            fixed_matrix: false,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.m == 0 || self.n == 0 || self.d == 0 {
            return fail("m, n and d must be positive");
        }
        if self.n % self.d != 0 {
            return fail("d must divide n");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.axis.is_empty() {
            return fail("the sweep grid is empty");
        }
        if self.methods.is_empty() {
            return fail("no algorithms configured");
        }
        if !(self.p_target > 0.0 && self.p_target < 1.0) {
            return fail("p_target must lie in (0, 1)");
        }
        if self.xi_fallback.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
            return fail("xi must be positive");
        }
        if !(self.success_rel_tol >= 0.0) {
            return fail("success_rel_tol must be nonnegative");
        }
        let n_blocks = self.n / self.d;
        let max_k = (0..self.axis.len()).map(|i| self.axis.point(i).1).max().unwrap_or(0);
        if max_k > n_blocks {
            return fail("k exceeds the number of blocks");
        }
        if self.matrix_kind == MatrixKind::TwoOrthobasis && (self.n != 2 * self.m || !self.m.is_power_of_two()) {
            return fail("two_orthobasis needs m a power of two and n = 2m");
        }
        Ok(())
    }

    /// Parses the flat configuration format; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut kv = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(HarnessError::Config(format!("duplicate key {}", k.trim())));
            }
        }
        let mut take = |key: &str| kv.remove(key);

        let m = required(&mut take, "m")?;
        let n = required(&mut take, "n")?;
        let d = required(&mut take, "d")?;
        let k_grid = take("k_grid");
        let snr_grid = take("snr_grid");
        let axis = match (k_grid, snr_grid) {
            (Some(g), None) => Axis::Sparsity {
                k_grid: parse_usize_grid(&g)?,
                snr_db: take("snr_db").map(|s| parse_num(&s, "snr_db")).transpose()?.unwrap_or(20.0),
            },
            (None, Some(g)) => Axis::Snr {
                snr_grid: parse_f64_grid(&g)?,
                k: required(&mut take, "k")?,
            },
            _ => return Err(HarnessError::Config("exactly one of k_grid and snr_grid is required".into())),
        };
        let mut cfg = ExperimentConfig::new(m, n, d, axis);
        if let Some(v) = take("matrix_kind") {
            cfg.matrix_kind = MatrixKind::parse(&v).ok_or_else(|| bad("matrix_kind", &v))?;
        }
        if let Some(v) = take("signal_dist") {
            cfg.signal_dist = SignalDist::parse(&v).ok_or_else(|| bad("signal_dist", &v))?;
        }
        if let Some(v) = take("algorithms") {
            cfg.methods = v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| Method::parse(s).ok_or_else(|| bad("algorithms", s)))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = take("trials") {
            cfg.trials = parse_num(&v, "trials")?;
        }
        if let Some(v) = take("master_seed") {
            cfg.master_seed = parse_num(&v, "master_seed")?;
        }
        if let Some(v) = take("success_metric") {
            cfg.success_metric = SuccessMetric::parse(&v).ok_or_else(|| bad("success_metric", &v))?;
        }
        if let Some(v) = take("success_rel_tol") {
            cfg.success_rel_tol = parse_num(&v, "success_rel_tol")?;
        }
        if let Some(v) = take("p_target") {
            cfg.p_target = parse_num(&v, "p_target")?;
        }
        if let Some(v) = take("xi") {
            cfg.xi_fallback = Some(parse_num(&v, "xi")?);
        }
        if let Some(v) = take("G") {
            cfg.hybrid_g = parse_num(&v, "G")?;
        }
        if let Some(v) = take("fixed_matrix") {
            cfg.fixed_matrix = parse_num(&v, "fixed_matrix")?;
        }
        if let Some(v) = take("workers") {
            cfg.workers = parse_num(&v, "workers")?;
        }
        if let Some(key) = kv.keys().next() {
            return Err(HarnessError::Config(format!("unknown key {key}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn bad(key: &str, value: &str) -> HarnessError {
    HarnessError::Config(format!("invalid value for {key}: {value}"))
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T, HarnessError> {
    s.trim().parse().map_err(|_| bad(key, s))
}

fn required<T: std::str::FromStr>(take: &mut impl FnMut(&str) -> Option<String>, key: &str) -> Result<T, HarnessError> {
    let v = take(key).ok_or_else(|| HarnessError::Config(format!("missing key {key}")))?;
    parse_num(&v, key)
}

/// `1,2,5` or the inclusive range `1:8`.
pub fn parse_usize_grid(s: &str) -> Result<Vec<usize>, HarnessError> {
    if let Some((a, b)) = s.split_once(':') {
        let (a, b): (usize, usize) = (parse_num(a, "grid")?, parse_num(b, "grid")?);
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| parse_num(t, "grid")).collect()
}

/// `0,5,10` or the inclusive range `start:step:stop`.
pub fn parse_f64_grid(s: &str) -> Result<Vec<f64>, HarnessError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parse_num(parts[0], "grid")?;
        let step: f64 = parse_num(parts[1], "grid")?;
        let stop: f64 = parse_num(parts[2], "grid")?;
        if !(step > 0.0) || stop < start {
            return Err(bad("grid", s));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    s.split(',').map(|t| parse_num(t, "grid")).collect()
}
