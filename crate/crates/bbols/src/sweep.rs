//! Monte Carlo recovery sweeps. Every trial draws its matrix, spectrum and
//! noise from its own stream `(master_seed, point, trial)` and runs every
//! configured method on the same data; aggregation is a sum over trials in
//! index order, so results do not depend on the worker count.

use std::io::Write;

use bbols_core::block_model::{
    calibrate_noise, gen_gaussian_block_orthogonal, gen_hybrid, gen_signal, gen_two_orthobasis, is_success, measure,
    trial_rng,
};
use bbols_core::bounds::{erc_sparsity_bound, eta, xi_from_probability, GuaranteeVariant};
use bbols_core::recovery::{recover, Algorithm, RuleKind, StopReason, StoppingRule};
use bbols_core::{coherence_profile, BlockMatrix, CoherenceProfile, Error as CoreError};
use log::{debug, warn};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, MatrixKind, Method, SuccessMetric};
use crate::format::g9;
use crate::HarnessError;

/// Stream index reserved for the sweep-wide matrix.
const FIXED_MATRIX_POINT: u32 = u32::MAX;

pub const CURVE_HEADER: &str = "abscissa,algorithm,success_prob,stderr,mean_iters";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub success: bool,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// One entry per configured method, in configuration order.
    pub outcomes: Vec<MethodOutcome>,
    /// A blind method ran with the fallback ξ.
    pub xi_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodStat {
    pub method: Method,
    pub success_prob: f64,
    pub stderr: f64,
    pub mean_iters: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub stats: Vec<MethodStat>,
    /// Trials in which a blind ξ came from the fallback.
    pub xi_fallbacks: usize,
}

impl CurvePoint {
    pub fn stat(&self, method: Method) -> Option<&MethodStat> {
        self.stats.iter().find(|s| s.method == method)
    }
}

/// Blind-rule scale factors derived from one matrix.
#[derive(Debug, Clone, Copy)]
struct BlindScales {
    profile: CoherenceProfile,
    block_xi: Option<f64>,
    scalar_xi: Option<f64>,
}

/// ξ reaching `p_target` for coherence `mu_b` at block length `d`, if the
/// probability bound is non-vacuous there.
pub fn derive_xi(mu: f64, mu_b: f64, d: usize, m: usize, n: usize, p_target: f64) -> Result<f64, String> {
    let c = erc_sparsity_bound(mu, mu_b, d).map_err(|e| e.to_string())?.value;
    let e = eta(m, c).map_err(|e| e.to_string())?;
    xi_from_probability(p_target, m, n, mu_b, e, c, GuaranteeVariant::Standard).map_err(|e| e.to_string())
}

fn blind_scales(matrix: &BlockMatrix, cfg: &ExperimentConfig) -> BlindScales {
    let profile = coherence_profile(matrix);
    let (m, n) = (matrix.m(), matrix.n());
    let wants = |method| cfg.methods.contains(&method);
    let block_xi = wants(Method::BlindBols)
        .then(|| derive_xi(profile.mu, profile.mu_b, cfg.d, m, n, cfg.p_target))
        .and_then(|r| r.map_err(|e| debug!("block xi unavailable: {e}")).ok());
    let scalar_xi = wants(Method::BlindOmp)
        .then(|| derive_xi(profile.mu, profile.mu, 1, m, n, cfg.p_target))
        .and_then(|r| r.map_err(|e| debug!("scalar xi unavailable: {e}")).ok());
    BlindScales {
        profile,
        block_xi,
        scalar_xi,
    }
}

pub fn generate_matrix<R: rand::Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<BlockMatrix, CoreError> {
    match cfg.matrix_kind {
        MatrixKind::GaussianBlockOrth => gen_gaussian_block_orthogonal(cfg.m, cfg.n, cfg.d, rng),
        MatrixKind::Hybrid => gen_hybrid(cfg.m, cfg.n, cfg.d, cfg.hybrid_g, rng),
        MatrixKind::TwoOrthobasis => gen_two_orthobasis(cfg.m, cfg.d, rng),
    }
}

/// Shared state for one sweep.
pub struct SweepContext<'a> {
    cfg: &'a ExperimentConfig,
    fixed: Option<(BlockMatrix, Option<BlindScales>)>,
}

impl<'a> SweepContext<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let fixed = if cfg.fixed_matrix {
            let matrix = generate_matrix(cfg, &mut trial_rng(cfg.master_seed, FIXED_MATRIX_POINT, 0))?;
            let scales = cfg.methods.iter().any(|m| m.is_blind()).then(|| blind_scales(&matrix, cfg));
            Some((matrix, scales))
        } else {
            None
        };
        Ok(Self { cfg, fixed })
    }

    /// Runs every method on trial `trial` of grid point `point`.
    pub fn run_trial(&self, point: usize, trial: usize) -> Result<TrialOutcome, HarnessError> {
        let cfg = self.cfg;
        let (_, k, snr_db) = cfg.axis.point(point);
        let mut rng = trial_rng(cfg.master_seed, point as u32, trial as u32);
        let owned;
        let (matrix, fixed_scales) = match &self.fixed {
            Some((m, s)) => (m, *s),
            None => {
                owned = generate_matrix(cfg, &mut rng)?;
                (&owned, None)
            }
        };
        let signal = gen_signal(cfg.n, cfg.d, k, cfg.signal_dist, &mut rng)?;
        let noise = match calibrate_noise(matrix, signal.entries(), snr_db, &mut rng) {
            Ok((noise, _)) => noise,
            Err(CoreError::ZeroSignal) => vec![0.0; cfg.m],
            Err(e) => return Err(e.into()),
        };
        let y = measure(matrix, signal.entries(), &noise);
        let true_support = signal.support_columns();

        let scales = match fixed_scales {
            Some(s) => Some(s),
            None if cfg.methods.iter().any(|m| m.is_blind()) => Some(blind_scales(matrix, cfg)),
            None => None,
        };
        let mut xi_fallback = false;
        let mut pick_xi = |derived: Option<f64>| -> Result<f64, HarnessError> {
            match (derived, cfg.xi_fallback) {
                (Some(xi), _) => Ok(xi),
                (None, Some(xi)) => {
                    xi_fallback = true;
                    Ok(xi)
                }
                (None, None) => Err(HarnessError::Regime(format!(
                    "blind-rule xi is not derivable from p_target = {} at point {point}; set xi explicitly",
                    cfg.p_target
                ))),
            }
        };

        let mut outcomes = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let (algorithm, rule) = match method {
                Method::Omp => (Algorithm::Omp, StoppingRule::fixed(k * cfg.d)),
                Method::Ols => (Algorithm::Ols, StoppingRule::fixed(k * cfg.d)),
                Method::Bomp => (Algorithm::Bomp, StoppingRule::fixed(k)),
                Method::Bols => (Algorithm::Bols, StoppingRule::fixed(k)),
                Method::BlindOmp => {
                    let s = scales.expect("scales computed for blind methods");
                    let xi = pick_xi(s.scalar_xi)?;
                    (Algorithm::Omp, StoppingRule::new(RuleKind::BlindScalar { xi, mu: s.profile.mu }))
                }
                Method::BlindBols => {
                    let s = scales.expect("scales computed for blind methods");
                    let xi = pick_xi(s.block_xi)?;
                    let kind = RuleKind::BlindBlock {
                        xi,
                        mu_b: s.profile.mu_b,
                        d: cfg.d,
                    };
                    (Algorithm::Bols, StoppingRule::new(kind))
                }
            };
            let res = recover(matrix, &y, algorithm, &rule)?;
            let success = match cfg.success_metric {
                SuccessMetric::Support => res.support() == true_support,
                SuccessMetric::RelError => is_success(&res.x_hat, signal.entries(), cfg.success_rel_tol),
            };
            outcomes.push(MethodOutcome {
                success,
                iterations: res.iterations,
                stop_reason: res.stop_reason,
            });
        }
        Ok(TrialOutcome { outcomes, xi_fallback })
    }

    /// All trials of one grid point, in trial order.
    pub fn run_point(&self, point: usize) -> Result<Vec<TrialOutcome>, HarnessError> {
        (0..self.cfg.trials)
            .into_par_iter()
            .map(|t| self.run_trial(point, t))
            .collect()
    }
}

pub fn aggregate(cfg: &ExperimentConfig, abscissa: f64, trials: &[TrialOutcome]) -> CurvePoint {
    let count = trials.len() as f64;
    let stats = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let successes = trials.iter().filter(|t| t.outcomes[i].success).count() as f64;
            let iters: usize = trials.iter().map(|t| t.outcomes[i].iterations).sum();
            let p = successes / count;
            MethodStat {
                method,
                success_prob: p,
                stderr: (p * (1.0 - p) / count).sqrt(),
                mean_iters: iters as f64 / count,
            }
        })
        .collect();
    CurvePoint {
        abscissa,
        stats,
        xi_fallbacks: trials.iter().filter(|t| t.xi_fallback).count(),
    }
}

/// One [`CurvePoint`] per grid point.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>, HarnessError> {
    let ctx = SweepContext::new(cfg)?;
    let run = || -> Result<Vec<CurvePoint>, HarnessError> {
        (0..cfg.axis.len())
            .map(|p| {
                let trials = ctx.run_point(p)?;
                let point = aggregate(cfg, cfg.axis.point(p).0, &trials);
                if point.xi_fallbacks > 0 {
                    warn!(
                        "point {}: blind xi fell back to the configured value in {} of {} trials",
                        g9(point.abscissa),
                        point.xi_fallbacks,
                        cfg.trials
                    );
                }
                Ok(point)
            })
            .collect()
    };
    if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| HarnessError::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
        pool.install(run)
    } else {
        run()
    }
}

pub fn write_curve_csv<W: Write>(mut out: W, points: &[CurvePoint]) -> std::io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for p in points {
        for s in &p.stats {
            writeln!(
                out,
                "{},{},{},{},{}",
                g9(p.abscissa),
                s.method,
                g9(s.success_prob),
                g9(s.stderr),
                g9(s.mean_iters)
            )?;
        }
    }
    Ok(())
}
