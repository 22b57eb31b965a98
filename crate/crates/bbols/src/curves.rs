//! Bound curves over parameter grids, written as CSV with one row per point.

use std::io::Write;

use bbols_core::bounds::{BoundsParams, BoundsReport, CubicBranch};

use crate::format::{g9, g9_or_nan};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Eigenvalue intervals versus μ at k = 4, d = 2.
    EigenMu,
    /// Eigenvalue intervals versus k at μ = 0.05, d = 2.
    EigenK,
    /// Projection-norm bounds versus μ (k = 4) and versus k (μ = 0.05), d = 2.
    Projection,
    /// Sparsity bound 𝓒 versus μ for d ∈ {2, 4}.
    Sparsity,
    /// Minimum-component SNR versus target probability for two (m, μ) pairs.
    Snr,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::EigenMu, Preset::EigenK, Preset::Projection, Preset::Sparsity, Preset::Snr];

    pub fn name(self) -> &'static str {
        match self {
            Preset::EigenMu => "eigen-mu",
            Preset::EigenK => "eigen-k",
            Preset::Projection => "projection",
            Preset::Sparsity => "sparsity",
            Preset::Snr => "snr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn points(self) -> Vec<CurvePointSpec> {
        match self {
            Preset::EigenMu => mu_panel("mu", 4, 2),
            Preset::EigenK => k_panel("k", 0.05, 2),
            Preset::Projection => {
                let mut pts = mu_panel("mu", 4, 2);
                pts.extend(k_panel("k", 0.05, 2));
                pts
            }
            Preset::Sparsity => [2usize, 4]
                .into_iter()
                .flat_map(|d| {
                    (0..=80).map(move |i| {
                        let mu = 0.02 + 0.001 * i as f64;
                        CurvePointSpec::new(if d == 2 { "d2" } else { "d4" }, BoundsParams {
                            k: 1,
                            d,
                            mu,
                            mu_b: mu / d as f64,
                            m: None,
                            n: None,
                            p_target: None,
                            xi: None,
                        })
                    })
                })
                .collect(),
            Preset::Snr => [(1024usize, 0.135), (2048, 0.109)]
                .into_iter()
                .flat_map(|(m, mu)| {
                    (0..10).map(move |i| {
                        CurvePointSpec::new(if m == 1024 { "m1024" } else { "m2048" }, BoundsParams {
                            k: 2,
                            d: 2,
                            mu,
                            mu_b: mu / 2.0,
                            m: Some(m),
                            n: Some(8192),
                            p_target: Some(0.9 + 0.01 * i as f64),
                            xi: None,
                        })
                    })
                })
                .collect(),
        }
    }
}

/// One parameter point with a panel label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePointSpec {
    pub panel: &'static str,
    pub params: BoundsParams,
}

impl CurvePointSpec {
    pub fn new(panel: &'static str, params: BoundsParams) -> Self {
        Self { panel, params }
    }
}

fn scalar_params(k: usize, d: usize, mu: f64) -> BoundsParams {
    BoundsParams {
        k,
        d,
        mu,
        mu_b: mu / d as f64,
        m: None,
        n: None,
        p_target: None,
        xi: None,
    }
}

fn mu_panel(panel: &'static str, k: usize, d: usize) -> Vec<CurvePointSpec> {
    (0..=90)
        .map(|i| CurvePointSpec::new(panel, scalar_params(k, d, 0.01 + 0.001 * i as f64)))
        .collect()
}

fn k_panel(panel: &'static str, mu: f64, d: usize) -> Vec<CurvePointSpec> {
    (2..=8).map(|k| CurvePointSpec::new(panel, scalar_params(k, d, mu))).collect()
}

/// Cartesian product of user-supplied value lists.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomGrid {
    pub k: Vec<usize>,
    pub d: usize,
    pub mu: Vec<f64>,
    /// Defaults to μ/d when absent.
    pub mu_b: Option<f64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub p_target: Vec<f64>,
    pub xi: Option<f64>,
}

impl CustomGrid {
    pub fn points(&self) -> Result<Vec<CurvePointSpec>, HarnessError> {
        if self.k.is_empty() || self.mu.is_empty() || self.d == 0 {
            return Err(HarnessError::Config("custom grid needs k, mu and d".into()));
        }
        let targets: Vec<Option<f64>> = if self.p_target.is_empty() {
            vec![None]
        } else {
            self.p_target.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for &k in &self.k {
            for &mu in &self.mu {
                for &p in &targets {
                    out.push(CurvePointSpec::new("custom", BoundsParams {
                        k,
                        d: self.d,
                        mu,
                        mu_b: self.mu_b.unwrap_or(mu / self.d as f64),
                        m: self.m,
                        n: self.n,
                        p_target: p,
                        xi: self.xi,
                    }));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub panel: &'static str,
    pub report: BoundsReport,
}

pub fn run_bound_curves(points: &[CurvePointSpec]) -> Vec<BoundRow> {
    points
        .iter()
        .map(|p| BoundRow {
            panel: p.panel,
            report: BoundsReport::evaluate(p.params),
        })
        .collect()
}

pub const BOUNDS_HEADER: &str = "panel,k,d,mu,mu_b,m,n,p_target,lambda_lo,lambda_hi,lambda_lo_existing,lambda_hi_existing,\
b_factor,proj_lower,proj_existing_scalar,proj_existing_block,c_sparsity,c_method,gamma_bound,eta,xi,xi_tight,p_xi,\
snr_min_standard,snr_min_tight";

fn branch_name(b: CubicBranch) -> &'static str {
    match b {
        CubicBranch::Cardano => "cardano",
        CubicBranch::Trigonometric => "trigonometric",
        CubicBranch::Quadratic => "quadratic",
        CubicBranch::Linear => "linear",
        CubicBranch::Unbounded => "unbounded",
    }
}

pub fn bound_row_fields(row: &BoundRow) -> Vec<String> {
    let r = &row.report;
    let p = &r.params;
    let opt = |v: Option<f64>| v.map(g9).unwrap_or_else(|| "nan".into());
    vec![
        row.panel.to_string(),
        p.k.to_string(),
        p.d.to_string(),
        g9(p.mu),
        g9(p.mu_b),
        opt(p.m.map(|m| m as f64)),
        opt(p.n.map(|n| n as f64)),
        opt(p.p_target),
        g9_or_nan(r.eigen.map(|i| i.lo)),
        g9_or_nan(r.eigen.map(|i| i.hi)),
        g9_or_nan(r.eigen_existing.map(|i| i.lo)),
        g9_or_nan(r.eigen_existing.map(|i| i.hi)),
        g9_or_nan(r.projection.map(|b| b.factor)),
        g9_or_nan(r.projection.map(|b| b.lower)),
        g9_or_nan(r.projection_existing_scalar),
        g9_or_nan(r.projection_existing_block),
        g9_or_nan(r.sparsity.map(|c| c.value)),
        r.sparsity.map(|c| branch_name(c.branch)).unwrap_or("nan").to_string(),
        g9_or_nan(r.gamma_bound.map(|g| g.value)),
        g9_or_nan(r.eta),
        g9_or_nan(r.xi),
        g9_or_nan(r.xi_tight),
        g9_or_nan(r.p_xi),
        g9_or_nan(r.snr_min_standard.map(|s| s.value)),
        g9_or_nan(r.snr_min_tight.map(|s| s.value)),
    ]
}

pub fn write_bounds_csv<W: Write>(mut out: W, rows: &[BoundRow]) -> std::io::Result<()> {
    writeln!(out, "{BOUNDS_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", bound_row_fields(row).join(","))?;
    }
    Ok(())
}
