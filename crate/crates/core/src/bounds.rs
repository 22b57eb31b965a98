//! Closed-form recovery bounds for block OLS under the mutual incoherence
//! property: eigenvalue intervals, the projection-norm factor 𝓑, the cubic
//! sparsity bound 𝓒, the ERC bound, noisy selection thresholds, η, the
//! minimum-component SNR bounds and the probability ↔ ξ relation used by the
//! blind stopping rule.
//!
//! Every bound returns [`Bound`]: outside the hypotheses of the underlying
//! result the value is an [`InvalidRegime`] naming the failed condition,
//! never a silently negative radicand. Logarithms are natural.

use core::f64::consts::PI;
use core::fmt;

/// A hypothesis of a bound does not hold at the given parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvalidRegime {
    pub condition: &'static str,
}

impl fmt::Display for InvalidRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bound not valid: requires {}", self.condition)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for InvalidRegime {}

#[cfg(feature = "std")]
extern crate std;

pub type Bound<T> = Result<T, InvalidRegime>;

fn require(ok: bool, condition: &'static str) -> Bound<()> {
    if ok {
        Ok(())
    } else {
        Err(InvalidRegime { condition })
    }
}

/// Closed eigenvalue interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_within(&self, outer: &Interval) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }
}

fn symmetric_interval(spread: f64) -> Interval {
    Interval {
        lo: 1.0 - spread,
        hi: 1.0 + spread,
    }
}

/// Eigenvalue range of `D₀ᵀD₀` for k blocks of length d under ν = 0:
/// `1 ∓ (k−1)dμ_B`.
pub fn eigen_bounds_block(k: usize, d: usize, mu_b: f64) -> Bound<Interval> {
    require(k >= 1 && d >= 1, "k >= 1 and d >= 1")?;
    let spread = (k - 1) as f64 * d as f64 * mu_b;
    require(spread < 1.0, "(k-1) d mu_B < 1")?;
    Ok(symmetric_interval(spread))
}

/// Same range written in the full sparsity `K = kd`: `1 ∓ (K−d)μ_B`.
pub fn eigen_bounds_total_sparsity(total_sparsity: usize, d: usize, mu_b: f64) -> Bound<Interval> {
    require(d >= 1 && total_sparsity >= d, "K >= d >= 1")?;
    let spread = (total_sparsity - d) as f64 * mu_b;
    require(spread < 1.0, "(K-d) mu_B < 1")?;
    Ok(symmetric_interval(spread))
}

/// Classical scalar-coherence range `1 ∓ (K−1)μ`, the comparison baseline.
pub fn eigen_bounds_existing(total_sparsity: usize, mu: f64) -> Bound<Interval> {
    require(total_sparsity >= 1, "K >= 1")?;
    let spread = (total_sparsity - 1) as f64 * mu;
    require(spread < 1.0, "(K-1) mu < 1")?;
    Ok(symmetric_interval(spread))
}

/// Projection-norm factor and the resulting lower bound on `‖P⊥_S D_i‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionBound {
    /// 𝓑 ≥ 1.
    pub factor: f64,
    /// `sqrt(1/𝓑)`.
    pub lower: f64,
}

/// `𝓑 = (1 − kdμ²(1+(k−1)dμ_B) / (1−(k−1)dμ)²)⁻¹`.
pub fn projection_bound(k: usize, d: usize, mu: f64, mu_b: f64) -> Bound<ProjectionBound> {
    require(k >= 1 && d >= 1, "k >= 1 and d >= 1")?;
    let (kf, df) = (k as f64, d as f64);
    require((kf - 1.0) * df * mu_b < 1.0, "(k-1) d mu_B < 1")?;
    let c = 1.0 - (kf - 1.0) * df * mu;
    require(c > 0.0, "(k-1) d mu < 1")?;
    let frac = kf * df * mu * mu * (1.0 + (kf - 1.0) * df * mu_b) / (c * c);
    require(frac < 1.0, "k d mu^2 (1+(k-1) d mu_B) < (1-(k-1) d mu)^2")?;
    let factor = 1.0 / (1.0 - frac);
    Ok(ProjectionBound {
        factor,
        lower: libm::sqrt(1.0 / factor),
    })
}

/// `sqrt(1 − kdμ)`.
pub fn projection_bound_existing_scalar(k: usize, d: usize, mu: f64) -> Bound<f64> {
    let v = 1.0 - k as f64 * d as f64 * mu;
    require(v >= 0.0, "k d mu <= 1")?;
    Ok(libm::sqrt(v))
}

/// `sqrt(1 − (sqrt(1+(kd−1)μ)·sqrt(kdμ²) / (1−(k−1)dμ))²)`.
pub fn projection_bound_existing_block(k: usize, d: usize, mu: f64) -> Bound<f64> {
    require(k >= 1 && d >= 1, "k >= 1 and d >= 1")?;
    let (kf, df) = (k as f64, d as f64);
    let c = 1.0 - (kf - 1.0) * df * mu;
    require(c > 0.0, "(k-1) d mu < 1")?;
    let t = libm::sqrt(1.0 + (kf * df - 1.0) * mu) * libm::sqrt(kf * df * mu * mu) / c;
    require(t <= 1.0, "ratio term <= 1")?;
    Ok(libm::sqrt(1.0 - t * t))
}

/// Both comparison baselines at once.
pub fn projection_bounds_existing(k: usize, d: usize, mu: f64) -> (Bound<f64>, Bound<f64>) {
    (
        projection_bound_existing_scalar(k, d, mu),
        projection_bound_existing_block(k, d, mu),
    )
}

/// Coefficients of `αk³ + βk² + ωk + δ < 0`, the sparsity condition for the ERC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub delta: f64,
}

impl CubicCoefficients {
    pub fn new(mu: f64, mu_b: f64, d: usize) -> Self {
        let d = d as f64;
        let (d2, d3) = (d * d, d * d * d);
        let (m2, b2) = (mu * mu, mu_b * mu_b);
        Self {
            alpha: -d3 * b2 * m2 + 3.0 * d3 * mu_b * m2,
            beta: d3 * b2 * m2 + d2 * mu_b * m2 - 7.0 * d3 * mu_b * m2 - 6.0 * d2 * mu_b * mu - 2.0 * d2 * m2,
            omega: 5.0 * d3 * mu_b * m2 - 2.0 * d2 * mu_b * m2
                + 8.0 * d2 * mu_b * mu
                + 4.0 * d2 * m2
                + 2.0 * d * m2
                + 3.0 * d * mu_b
                + 4.0 * d * mu,
            delta: -d3 * mu_b * m2 - 2.0 * d2 * mu_b * mu - 2.0 * d2 * m2 - d * mu_b - 4.0 * d * mu - 2.0,
        }
    }

    pub fn eval(&self, k: f64) -> f64 {
        ((self.alpha * k + self.beta) * k + self.omega) * k + self.delta
    }

    /// `𝒬` of the depressed cubic `t³ + 𝒫t + 𝒬`.
    pub fn depressed_q(&self) -> f64 {
        let (a, b, w, e) = (self.alpha, self.beta, self.omega, self.delta);
        (27.0 * a * a * e - 9.0 * a * b * w + 2.0 * b * b * b) / (27.0 * a * a * a)
    }

    /// `𝒫` of the depressed cubic.
    pub fn depressed_p(&self) -> f64 {
        let (a, b, w) = (self.alpha, self.beta, self.omega);
        (3.0 * a * w - b * b) / (3.0 * a * a)
    }

    /// `Δ = (𝒬/2)² + (𝒫/3)³`.
    pub fn discriminant(&self) -> f64 {
        let q = self.depressed_q();
        let p = self.depressed_p();
        (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0)
    }
}

/// Values above this are reported as unbounded.
pub const SPARSITY_CAP: f64 = 1e6;

/// How the closed form of 𝓒 was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicBranch {
    /// Δ ≥ 0: one real root, sum of real cube roots.
    Cardano,
    /// Δ < 0: three real roots via the trigonometric form.
    Trigonometric,
    /// α = 0 and β ≠ 0.
    Quadratic,
    /// α = β = 0.
    Linear,
    /// The left side stays negative for all positive k.
    Unbounded,
}

/// Sparsity bound 𝓒 with its cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityBound {
    /// 𝓒; `f64::INFINITY` above [`SPARSITY_CAP`].
    pub value: f64,
    /// First positive sign change of the cubic, located by bracketing and bisection.
    pub bracketed: f64,
    pub discriminant: f64,
    pub branch: CubicBranch,
    pub coefficients: CubicCoefficients,
}

/// 𝓒: the right-hand side of the cubic sparsity condition `k < 𝓒`.
pub fn erc_sparsity_bound(mu: f64, mu_b: f64, d: usize) -> Bound<SparsityBound> {
    require(d >= 1, "d >= 1")?;
    require(mu >= 0.0 && mu_b >= 0.0 && mu.is_finite() && mu_b.is_finite(), "finite mu, mu_B >= 0")?;
    let c = CubicCoefficients::new(mu, mu_b, d);
    let bracketed = first_positive_root(&c);
    let (value, branch, discriminant) = if c.alpha != 0.0 {
        let disc = c.discriminant();
        if disc >= 0.0 {
            (cardano_root(&c, disc), CubicBranch::Cardano, disc)
        } else {
            (trigonometric_root(&c), CubicBranch::Trigonometric, disc)
        }
    } else if c.beta != 0.0 {
        (smallest_positive_quadratic_root(c.beta, c.omega, c.delta), CubicBranch::Quadratic, f64::NAN)
    } else if c.omega > 0.0 {
        (-c.delta / c.omega, CubicBranch::Linear, f64::NAN)
    } else {
        (f64::INFINITY, CubicBranch::Unbounded, f64::NAN)
    };
    let value = if value.is_finite() && value <= SPARSITY_CAP {
        value
    } else {
        f64::INFINITY
    };
    Ok(SparsityBound {
        value,
        bracketed,
        discriminant,
        branch,
        coefficients: c,
    })
}

/// `∛(−𝒬/2+√Δ) + ∛(−𝒬/2−√Δ) − β/3α`, with the second cube root taken as
/// `−𝒫/(3u)` so the sum does not cancel catastrophically.
fn cardano_root(c: &CubicCoefficients, disc: f64) -> f64 {
    let q = c.depressed_q();
    let p = c.depressed_p();
    let shift = c.beta / (3.0 * c.alpha);
    let sq = libm::sqrt(disc);
    let u = if q > 0.0 {
        libm::cbrt(-q / 2.0 - sq)
    } else {
        libm::cbrt(-q / 2.0 + sq)
    };
    let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
    t - shift
}

/// Smallest positive of the three real roots when Δ < 0.
fn trigonometric_root(c: &CubicCoefficients) -> f64 {
    let q = c.depressed_q();
    let p = c.depressed_p();
    let shift = c.beta / (3.0 * c.alpha);
    let r = 2.0 * libm::sqrt(-p / 3.0);
    let arg = (3.0 * q / (2.0 * p) * libm::sqrt(-3.0 / p)).clamp(-1.0, 1.0);
    let phi = libm::acos(arg) / 3.0;
    let mut best = f64::INFINITY;
    for j in 0..3 {
        let root = r * libm::cos(phi - 2.0 * PI * j as f64 / 3.0) - shift;
        if root > 0.0 && root < best {
            best = root;
        }
    }
    best
}

fn smallest_positive_quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = libm::sqrt(disc);
    let q = -0.5 * (b + libm::copysign(sq, b));
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { f64::INFINITY };
    [r1, r2]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// First k > 0 where the cubic changes sign, found on monotone pieces
/// between critical points; `INFINITY` if none below [`SPARSITY_CAP`].
fn first_positive_root(c: &CubicCoefficients) -> f64 {
    // critical points of 3αk² + 2βk + ω
    let mut knots = [0.0f64, SPARSITY_CAP, SPARSITY_CAP, SPARSITY_CAP];
    let (a, b, w) = (3.0 * c.alpha, 2.0 * c.beta, c.omega);
    if a != 0.0 {
        let disc = b * b - 4.0 * a * w;
        if disc >= 0.0 {
            let sq = libm::sqrt(disc);
            knots[1] = (-b - sq) / (2.0 * a);
            knots[2] = (-b + sq) / (2.0 * a);
        }
    } else if b != 0.0 {
        knots[1] = -w / b;
    }
    for kn in knots.iter_mut() {
        *kn = kn.clamp(0.0, SPARSITY_CAP);
    }
    knots.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    let start = c.eval(0.0);
    for pair in knots.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let f_hi = c.eval(hi);
        if (f_hi >= 0.0) != (start >= 0.0) || f_hi == 0.0 {
            return bisect(|k| c.eval(k), lo, hi, start >= 0.0);
        }
    }
    f64::INFINITY
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, lo_nonneg: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) >= 0.0) == lo_nonneg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper bound on the ERC constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBound {
    pub value: f64,
    pub below_one: bool,
}

/// `2𝓑kdμ_B / (2 − (k−𝓑)dμ_B)`.
pub fn gamma_bound(k: usize, d: usize, mu_b: f64, b_factor: f64) -> Bound<GammaBound> {
    require(k >= 1 && d >= 1, "k >= 1 and d >= 1")?;
    let (kf, df) = (k as f64, d as f64);
    require((kf - 1.0) * df * mu_b < 1.0, "(k-1) d mu_B < 1")?;
    let den = 2.0 - (kf - b_factor) * df * mu_b;
    require(den > 0.0, "2 - (k-B) d mu_B > 0")?;
    let value = 2.0 * b_factor * kf * df * mu_b / den;
    Ok(GammaBound {
        value,
        below_one: value < 1.0,
    })
}

/// `sqrt(m + 2 sqrt(m log m))`, the high-probability bound on `‖ε‖₂/σ`.
pub fn noise_radius(m: f64) -> f64 {
    libm::sqrt(m + 2.0 * libm::sqrt(m * libm::log(m)))
}

/// The two positive denominators shared by the noisy guarantees.
fn guarantee_denominators(k: usize, d: usize, mu_b: f64, b_factor: f64) -> Bound<(f64, f64, f64)> {
    require(k >= 1 && d >= 1, "k >= 1 and d >= 1")?;
    let (kf, df) = (k as f64, d as f64);
    let eig = 1.0 - (kf - 1.0) * df * mu_b;
    require(eig > 0.0, "(k-1) d mu_B < 1")?;
    let g = 2.0 - (kf - b_factor) * df * mu_b;
    let gap = g - 2.0 * b_factor * kf * df * mu_b;
    require(gap > 0.0, "2 - (k-B) d mu_B - 2 B k d mu_B > 0")?;
    Ok((eig, g, gap))
}

/// Minimum `‖x_{0\S}‖₂` for which BOLS picks a correct block at iteration
/// `t + 1` with probability at least `1 − 1/m`.
pub fn selection_threshold(k: usize, t: usize, d: usize, mu_b: f64, b_factor: f64, m: usize, sigma: f64) -> Bound<f64> {
    require(t < k, "t < k")?;
    let per_block = block_selection_threshold(k, d, mu_b, b_factor, m, sigma)?;
    Ok(libm::sqrt((k - t) as f64) * per_block)
}

/// Per-block amplitude above which every iteration selects correctly
/// (the `√(k−t)` factor set to one).
pub fn block_selection_threshold(k: usize, d: usize, mu_b: f64, b_factor: f64, m: usize, sigma: f64) -> Bound<f64> {
    require(m >= 1, "m >= 1")?;
    require(sigma >= 0.0, "sigma >= 0")?;
    let (eig, g, gap) = guarantee_denominators(k, d, mu_b, b_factor)?;
    Ok(2.0 * g * libm::sqrt(d as f64) * sigma * noise_radius(m as f64) / (eig * gap))
}

/// `η = sqrt(4(m−𝓒)−2) − sqrt(m−𝓒 + 2 sqrt((m−𝓒) log(m−𝓒)))`.
pub fn eta(m: usize, sparsity_bound: f64) -> Bound<f64> {
    let q = m as f64 - sparsity_bound;
    require(q > 1.0, "m - C > 1")?;
    Ok(libm::sqrt(4.0 * q - 2.0) - libm::sqrt(q + 2.0 * libm::sqrt(q * libm::log(q))))
}

/// Which noisy guarantee to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuaranteeVariant {
    /// SNR bound with the `sqrt(m + 2 sqrt(m log m))` noise radius.
    Standard,
    /// Tighter SNR bound with `ξ μ_B η` in place of the noise radius.
    Tight,
}

impl GuaranteeVariant {
    pub fn name(self) -> &'static str {
        match self {
            GuaranteeVariant::Standard => "standard",
            GuaranteeVariant::Tight => "tight",
        }
    }
}

/// Inputs of the minimum-component SNR bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrBoundParams {
    pub k: usize,
    pub d: usize,
    pub mu_b: f64,
    pub b_factor: f64,
    pub m: usize,
    pub xi: f64,
    pub eta: f64,
}

/// Lower bound on SNR_min (linear), with both branches of the max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrMinBound {
    pub value: f64,
    /// Correct-selection branch.
    pub selection: f64,
    /// No-early-stop branch.
    pub continuation: f64,
}

pub fn snr_min_bound(p: &SnrBoundParams, variant: GuaranteeVariant) -> Bound<SnrMinBound> {
    require(p.xi >= 0.0, "xi >= 0")?;
    let (eig, g, gap) = guarantee_denominators(p.k, p.d, p.mu_b, p.b_factor)?;
    let (kf, df, mf) = (p.k as f64, p.d as f64, p.m as f64);
    let radius = noise_radius(mf);
    let noise_term = match variant {
        GuaranteeVariant::Standard => radius,
        GuaranteeVariant::Tight => p.xi * p.mu_b * p.eta,
    };
    let sel_num = 2.0 * g * libm::sqrt(df) * noise_term;
    let sel_den = eig * gap;
    let selection = sel_num * sel_num / (mf * sel_den * sel_den);

    let cont_den = eig - libm::sqrt(kf * df) * p.xi * p.mu_b * (1.0 + (kf - 1.0) * df * p.mu_b);
    require(cont_den > 0.0, "1-(k-1) d mu_B - sqrt(kd) xi mu_B (1+(k-1) d mu_B) > 0")?;
    let cont_num = libm::sqrt(df) * p.xi * p.mu_b * radius;
    let continuation = cont_num * cont_num / (mf * cont_den * cont_den);
    Ok(SnrMinBound {
        value: selection.max(continuation),
        selection,
        continuation,
    })
}

/// `n / (sqrt(2π) z e^{z²/2})` evaluated in log space.
fn gaussian_tail_term(n: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return f64::INFINITY;
    }
    libm::exp(libm::log(n) - 0.5 * z * z - libm::log(libm::sqrt(2.0 * PI) * z))
}

/// Limit of the success probability as ξ → ∞.
pub fn probability_ceiling(m: usize, sparsity_bound: f64, variant: GuaranteeVariant) -> f64 {
    let mf = m as f64;
    let lead = match variant {
        GuaranteeVariant::Standard => sparsity_bound / mf,
        GuaranteeVariant::Tight => 1.0 / mf,
    };
    1.0 - lead - 1.0 / (mf - sparsity_bound)
}

/// Lower bound on the probability that the blind rule recovers the signal.
/// May be negative where the bound is vacuous.
pub fn success_probability(
    m: usize,
    n: usize,
    mu_b: f64,
    xi: f64,
    eta: f64,
    sparsity_bound: f64,
    variant: GuaranteeVariant,
) -> Bound<f64> {
    require(m as f64 > sparsity_bound, "m > C")?;
    require(xi > 0.0 && mu_b > 0.0 && eta > 0.0, "xi, mu_B, eta > 0")?;
    let tail = gaussian_tail_term(n as f64, xi * mu_b * eta);
    let weight = match variant {
        GuaranteeVariant::Standard => 1.0,
        GuaranteeVariant::Tight => sparsity_bound,
    };
    Ok(probability_ceiling(m, sparsity_bound, variant) - weight * tail)
}

/// Why ξ could not be derived from a target probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiError {
    /// The target is at or above the ξ → ∞ limit.
    Unreachable { ceiling: f64 },
    Invalid(InvalidRegime),
}

impl From<InvalidRegime> for XiError {
    fn from(e: InvalidRegime) -> Self {
        XiError::Invalid(e)
    }
}

impl fmt::Display for XiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XiError::Unreachable { ceiling } => {
                write!(f, "target probability unreachable; achievable ceiling is {ceiling}")
            }
            XiError::Invalid(e) => e.fmt(f),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for XiError {}

/// Smallest ξ whose success probability reaches `p_target`, by bisection.
pub fn xi_from_probability(
    p_target: f64,
    m: usize,
    n: usize,
    mu_b: f64,
    eta: f64,
    sparsity_bound: f64,
    variant: GuaranteeVariant,
) -> Result<f64, XiError> {
    require(p_target > 0.0 && p_target < 1.0, "0 < P < 1")?;
    require(m as f64 > sparsity_bound, "m > C")?;
    require(mu_b > 0.0 && eta > 0.0, "mu_B, eta > 0")?;
    let ceiling = probability_ceiling(m, sparsity_bound, variant);
    if p_target >= ceiling {
        return Err(XiError::Unreachable { ceiling });
    }
    let scale = mu_b * eta;
    let prob = |xi: f64| success_probability(m, n, mu_b, xi, eta, sparsity_bound, variant);
    let mut lo = 0.0;
    let mut hi = 1.0 / scale;
    while prob(hi)? < p_target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(XiError::Unreachable { ceiling });
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if prob(mid)? >= p_target {
            hi = mid;
        } else {
            lo = mid;
        }
        if prob(hi)? - p_target <= 1e-12 && hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Parameter point for a full [`BoundsReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsParams {
    pub k: usize,
    pub d: usize,
    pub mu: f64,
    pub mu_b: f64,
    /// Measurement count; needed for η, ξ and the SNR bounds.
    pub m: Option<usize>,
    /// Column count; needed for ξ and the probabilities.
    pub n: Option<usize>,
    /// Target recovery probability for deriving ξ.
    pub p_target: Option<f64>,
    /// Explicit ξ, overriding `p_target`.
    pub xi: Option<f64>,
}

/// Every closed-form quantity at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub params: BoundsParams,
    pub eigen: Bound<Interval>,
    pub eigen_total_sparsity: Bound<Interval>,
    pub eigen_existing: Bound<Interval>,
    pub projection: Bound<ProjectionBound>,
    pub projection_existing_scalar: Bound<f64>,
    pub projection_existing_block: Bound<f64>,
    pub sparsity: Bound<SparsityBound>,
    pub gamma_bound: Bound<GammaBound>,
    pub eta: Bound<f64>,
    /// ξ for the standard probability expression (or the explicit ξ).
    pub xi: Bound<f64>,
    /// ξ for the tight probability expression (or the explicit ξ).
    pub xi_tight: Bound<f64>,
    pub p_xi: Bound<f64>,
    pub snr_min_standard: Bound<SnrMinBound>,
    pub snr_min_tight: Bound<SnrMinBound>,
}

const NEEDS_M: InvalidRegime = InvalidRegime { condition: "m given" };
const NEEDS_N: InvalidRegime = InvalidRegime { condition: "n given" };
const NEEDS_XI: InvalidRegime = InvalidRegime {
    condition: "xi or target probability given",
};

impl BoundsReport {
    pub fn evaluate(params: BoundsParams) -> Self {
        let BoundsParams { k, d, mu, mu_b, .. } = params;
        let projection = projection_bound(k, d, mu, mu_b);
        let sparsity = erc_sparsity_bound(mu, mu_b, d);
        let gamma = projection.and_then(|p| gamma_bound(k, d, mu_b, p.factor));
        let m = params.m.ok_or(NEEDS_M);
        let n = params.n.ok_or(NEEDS_N);
        let eta_v = m.and_then(|m| sparsity.and_then(|c| eta(m, c.value)));

        let solve_xi = |variant: GuaranteeVariant| -> Bound<f64> {
            if let Some(xi) = params.xi {
                return Ok(xi);
            }
            let p = params.p_target.ok_or(NEEDS_XI)?;
            let (m, n, e, c) = (m?, n?, eta_v?, sparsity?.value);
            xi_from_probability(p, m, n, mu_b, e, c, variant).map_err(|err| match err {
                XiError::Invalid(inv) => inv,
                XiError::Unreachable { .. } => InvalidRegime {
                    condition: "target probability below the achievable ceiling",
                },
            })
        };
        let xi = solve_xi(GuaranteeVariant::Standard);
        let xi_c2 = solve_xi(GuaranteeVariant::Tight);
        let p_xi = (|| success_probability(m?, n?, mu_b, xi?, eta_v?, sparsity?.value, GuaranteeVariant::Standard))();

        let snr = |variant: GuaranteeVariant, xi: Bound<f64>| -> Bound<SnrMinBound> {
            let p = SnrBoundParams {
                k,
                d,
                mu_b,
                b_factor: projection?.factor,
                m: m?,
                xi: xi?,
                eta: eta_v?,
            };
            snr_min_bound(&p, variant)
        };
        Self {
            params,
            eigen: eigen_bounds_block(k, d, mu_b),
            eigen_total_sparsity: eigen_bounds_total_sparsity(k * d, d, mu_b),
            eigen_existing: eigen_bounds_existing(k * d, mu),
            projection,
            projection_existing_scalar: projection_bound_existing_scalar(k, d, mu),
            projection_existing_block: projection_bound_existing_block(k, d, mu),
            sparsity,
            gamma_bound: gamma,
            eta: eta_v,
            xi,
            xi_tight: xi_c2,
            p_xi,
            snr_min_standard: snr(GuaranteeVariant::Standard, xi),
            snr_min_tight: snr(GuaranteeVariant::Tight, xi_c2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigen_intervals() {
        assert_eq!(eigen_bounds_block(1, 2, 0.3).unwrap(), Interval { lo: 1.0, hi: 1.0 });
        let iv = eigen_bounds_block(4, 2, 0.025).unwrap();
        assert_abs_diff_eq!(iv.lo, 0.85, epsilon = 1e-15);
        assert_abs_diff_eq!(iv.hi, 1.15, epsilon = 1e-15);
        assert!(eigen_bounds_block(4, 2, 0.2).is_err());

        assert_eq!(eigen_bounds_total_sparsity(2, 2, 0.3).unwrap(), Interval { lo: 1.0, hi: 1.0 });
        let c = eigen_bounds_total_sparsity(8, 2, 0.025).unwrap();
        assert_abs_diff_eq!(c.lo, iv.lo, epsilon = 1e-15);
        assert_abs_diff_eq!(c.hi, iv.hi, epsilon = 1e-15);

        assert_eq!(eigen_bounds_existing(1, 0.4).unwrap(), Interval { lo: 1.0, hi: 1.0 });
        let e = eigen_bounds_existing(8, 0.05).unwrap();
        assert_abs_diff_eq!(e.lo, 0.65, epsilon = 1e-15);
        assert_abs_diff_eq!(e.hi, 1.35, epsilon = 1e-15);
        assert!(iv.is_within(&e));
    }

    #[test]
    fn projection_factor_values() {
        let p = projection_bound(3, 2, 0.0, 0.0).unwrap();
        assert_eq!(p.factor, 1.0);
        assert_eq!(p.lower, 1.0);
        // independent high-precision evaluation of the same formula
        let p = projection_bound(2, 2, 0.05, 0.025).unwrap();
        assert_abs_diff_eq!(p.factor, 1.013_133_208_255_159_5, epsilon = 1e-14);
        assert_abs_diff_eq!(p.lower, 0.993_497_376_462_080_6, epsilon = 1e-14);
        assert!(projection_bound(6, 2, 0.1, 0.05).is_err());
    }

    #[test]
    fn existing_projection_values() {
        let (a, b) = projection_bounds_existing(4, 2, 0.0);
        assert_eq!((a.unwrap(), b.unwrap()), (1.0, 1.0));
        let (a, b) = projection_bounds_existing(2, 2, 0.05);
        assert_abs_diff_eq!(a.unwrap(), 0.894_427_190_999_915_9, epsilon = 1e-15);
        assert_abs_diff_eq!(b.unwrap(), 0.992_875_857_867_338_0, epsilon = 1e-14);
    }

    #[test]
    fn gamma_bound_values() {
        assert_eq!(gamma_bound(3, 2, 0.0, 1.0).unwrap().value, 0.0);
        let g = gamma_bound(2, 2, 0.025, 1.01175).unwrap();
        assert_abs_diff_eq!(g.value, 0.103_737_976_378_911_48, epsilon = 1e-14);
        assert!(g.below_one);
    }

    #[test]
    fn selection_threshold_values() {
        let b = projection_bound(2, 2, 0.05, 0.025).unwrap().factor;
        assert_eq!(selection_threshold(2, 0, 2, 0.025, b, 128, 0.0).unwrap(), 0.0);
        let v = selection_threshold(2, 0, 2, 0.025, b, 128, 0.1).unwrap();
        assert_abs_diff_eq!(v, 6.265_932_027_890_344_6, epsilon = 1e-12);
        let per_block = block_selection_threshold(2, 2, 0.025, b, 128, 0.1).unwrap();
        assert_abs_diff_eq!(v, per_block * 2f64.sqrt(), epsilon = 1e-12);
        assert!(selection_threshold(2, 2, 2, 0.025, b, 128, 0.1).is_err());
    }

    #[test]
    fn eta_values() {
        assert_abs_diff_eq!(eta(12, 2.0).unwrap(), 1.737_558_253_751_913_6, epsilon = 1e-13);
        assert_abs_diff_eq!(eta(4, 2.0).unwrap(), 0.362_669_183_887_193_5, epsilon = 1e-13);
        assert!(eta(3, 2.0).is_err());
        let mut prev = f64::NEG_INFINITY;
        for m in 5..400 {
            let v = eta(m, 3.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn success_probability_vacuous_example() {
        // ξ μ_B η = 3
        let p = success_probability(1024, 8192, 0.5, 3.0, 2.0, 4.0, GuaranteeVariant::Standard).unwrap();
        assert_abs_diff_eq!(p, -11.106_787_372_355_581, epsilon = 1e-11);
        let ceiling = probability_ceiling(1024, 4.0, GuaranteeVariant::Standard);
        let far = success_probability(1024, 8192, 0.5, 1e3, 2.0, 4.0, GuaranteeVariant::Standard).unwrap();
        assert_abs_diff_eq!(far, ceiling, epsilon = 1e-15);
    }

    #[test]
    fn probability_increasing_in_xi() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let xi = i as f64 * 0.05;
            let p = success_probability(1024, 8192, 0.0675, xi, 20.0, 2.9, GuaranteeVariant::Standard).unwrap();
            assert!(p > prev || (p == prev && p == probability_ceiling(1024, 2.9, GuaranteeVariant::Standard)));
            prev = p;
        }
    }

    #[test]
    fn xi_round_trip_and_unreachable() {
        for variant in [GuaranteeVariant::Standard, GuaranteeVariant::Tight] {
            let c = 2.93;
            let e = eta(1024, c).unwrap();
            let xi = xi_from_probability(0.9, 1024, 8192, 0.0675, e, c, variant).unwrap();
            let p = success_probability(1024, 8192, 0.0675, xi, e, c, variant).unwrap();
            assert!(p >= 0.9 && p - 0.9 <= 1e-9, "{p}");
            let ceiling = probability_ceiling(1024, c, variant);
            match xi_from_probability(ceiling, 1024, 8192, 0.0675, e, c, variant) {
                Err(XiError::Unreachable { ceiling: got }) => assert_eq!(got, ceiling),
                other => panic!("{other:?}"),
            }
            let near = xi_from_probability(ceiling - 1e-12, 1024, 8192, 0.0675, e, c, variant).unwrap();
            assert!(near.is_finite() && near > xi);
        }
    }

    #[test]
    fn snr_bound_limit_without_coherence() {
        // μ_B = 0, ξ = 0: only the selection branch survives, equal to 4 d (m + 2 sqrt(m ln m)) / m
        let p = SnrBoundParams {
            k: 2,
            d: 2,
            mu_b: 0.0,
            b_factor: 1.0,
            m: 128,
            xi: 0.0,
            eta: 5.0,
        };
        let v = snr_min_bound(&p, GuaranteeVariant::Standard).unwrap();
        assert_eq!(v.continuation, 0.0);
        assert_abs_diff_eq!(v.value, 11.115_134_110_730_906, epsilon = 1e-12);
    }

    #[test]
    fn sparsity_bound_degenerate_cases() {
        let c = erc_sparsity_bound(0.0, 0.0, 2).unwrap();
        assert_eq!(c.value, f64::INFINITY);
        assert_eq!(c.branch, CubicBranch::Unbounded);
        // μ = 0: linear condition 3dμ_B k < dμ_B + 2
        let c = erc_sparsity_bound(0.0, 0.1, 2).unwrap();
        assert_eq!(c.branch, CubicBranch::Linear);
        assert_abs_diff_eq!(c.value, (0.2 + 2.0) / 0.6, epsilon = 1e-14);
        let c = erc_sparsity_bound(1e-9, 5e-10, 2).unwrap();
        assert_eq!(c.value, f64::INFINITY);
        let c = erc_sparsity_bound(0.1, 0.0, 2).unwrap();
        assert_eq!(c.branch, CubicBranch::Quadratic);
        assert_abs_diff_eq!(c.value, c.bracketed, epsilon = 1e-9);
    }

    #[test]
    fn sparsity_bound_both_branches_agree_with_bracketing() {
        // Δ > 0 at d = 2; Δ < 0 at d = 4 for small μ
        let c = erc_sparsity_bound(0.05, 0.025, 2).unwrap();
        assert_eq!(c.branch, CubicBranch::Cardano);
        assert_abs_diff_eq!(c.value, 7.873_155_736_229_007, epsilon = 1e-9);
        assert_abs_diff_eq!(c.value, c.bracketed, epsilon = 1e-9);
        let c = erc_sparsity_bound(0.02, 0.005, 4).unwrap();
        assert_eq!(c.branch, CubicBranch::Trigonometric);
        assert_abs_diff_eq!(c.value, 11.367_835_56, epsilon = 1e-7);
        assert_abs_diff_eq!(c.value, c.bracketed, epsilon = 1e-9);
    }

    #[test]
    fn report_collects_everything() {
        let r = BoundsReport::evaluate(BoundsParams {
            k: 2,
            d: 2,
            mu: 0.135,
            mu_b: 0.0675,
            m: Some(1024),
            n: Some(8192),
            p_target: Some(0.95),
            xi: None,
        });
        assert!(r.eigen.is_ok() && r.projection.is_ok() && r.sparsity.is_ok());
        let p = r.p_xi.unwrap();
        assert!(p >= 0.95 && p - 0.95 < 1e-9);
        assert!(r.snr_min_standard.is_ok());
        let bare = BoundsReport::evaluate(BoundsParams {
            m: None,
            n: None,
            p_target: None,
            ..r.params
        });
        assert_eq!(bare.eta, Err(NEEDS_M));
        assert!(bare.xi.is_err() && bare.snr_min_tight.is_err());
    }
}
