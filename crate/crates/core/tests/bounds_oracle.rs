use approx::assert_abs_diff_eq;
use bbols_core::block_model::{gen_gaussian_block_orthogonal, gen_two_orthobasis, seeded_rng};
use bbols_core::bounds::*;
use bbols_core::coherence::{coherence_profile, erc_gamma};
use bbols_core::BlockMatrix;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;

/// Cubic from its written coefficients, transcribed independently.
fn cubic(k: f64, mu: f64, mb: f64, d: f64) -> f64 {
    let a = -d.powi(3) * mb * mb * mu * mu + 3.0 * d.powi(3) * mb * mu * mu;
    let b = d.powi(3) * mb * mb * mu * mu + d * d * mb * mu * mu - 7.0 * d.powi(3) * mb * mu * mu
        - 6.0 * d * d * mb * mu
        - 2.0 * d * d * mu * mu;
    let w = 5.0 * d.powi(3) * mb * mu * mu - 2.0 * d * d * mb * mu * mu
        + 8.0 * d * d * mb * mu
        + 4.0 * d * d * mu * mu
        + 2.0 * d * mu * mu
        + 3.0 * d * mb
        + 4.0 * d * mu;
    let e = -d.powi(3) * mb * mu * mu - 2.0 * d * d * mb * mu - 2.0 * d * d * mu * mu - d * mb - 4.0 * d * mu - 2.0;
    a * k.powi(3) + b * k * k + w * k + e
}

/// First k on a 1e-4 grid (after a 1e-2 coarse pass) where the cubic is nonnegative.
fn sign_scan(mu: f64, mb: f64, d: usize) -> f64 {
    let d = d as f64;
    let mut k = 0.0;
    while cubic(k + 1e-2, mu, mb, d) < 0.0 {
        k += 1e-2;
        assert!(k < 1e5);
    }
    while cubic(k, mu, mb, d) < 0.0 {
        k += 1e-4;
    }
    k
}

#[test]
fn sparsity_bound_matches_sign_scan() {
    for d in [2usize, 4] {
        for i in 0..50 {
            let mu = 0.01 + 0.09 * i as f64 / 49.0;
            let c = erc_sparsity_bound(mu, mu / d as f64, d).unwrap();
            let scan = sign_scan(mu, mu / d as f64, d);
            assert!((c.value - scan).abs() < 1e-3, "mu {mu} d {d}: {} vs {scan}", c.value);
            assert!((c.value - c.bracketed).abs() < 1e-9 * c.value.max(1.0));
        }
    }
}

#[test]
fn sparsity_bound_decreasing_in_mu() {
    for d in [2usize, 4] {
        let mut prev = f64::INFINITY;
        for i in 0..=80 {
            let mu = 0.02 + 0.001 * i as f64;
            let c = erc_sparsity_bound(mu, mu / d as f64, d).unwrap().value;
            assert!(c < prev);
            prev = c;
        }
    }
}

fn support_gram(a: &BlockMatrix, blocks: &[usize]) -> DMatrix<f64> {
    let na = DMatrix::from_column_slice(a.m(), a.n(), a.matrix().as_col_major());
    let cols = a.columns_of(blocks);
    let sub = na.select_columns(&cols);
    sub.transpose() * sub
}

fn projected_column_norm(a: &BlockMatrix, s_blocks: &[usize], col: usize) -> f64 {
    let na = DMatrix::from_column_slice(a.m(), a.n(), a.matrix().as_col_major());
    let v = na.column(col).into_owned();
    if s_blocks.is_empty() {
        return v.norm();
    }
    let sub = na.select_columns(&a.columns_of(s_blocks));
    let coef = sub.clone().svd(true, true).solve(&v, 1e-14).unwrap();
    let r: DVector<f64> = v - sub * coef;
    r.norm()
}

#[test]
fn eigenvalues_and_projections_inside_bounds() {
    let mut rng = seeded_rng(11);
    let mut tested = 0;
    for inst in 0..60 {
        let a = gen_gaussian_block_orthogonal(64, 256, 2, &mut rng).unwrap();
        let p = coherence_profile(&a);
        let k = 2 + inst % 3;
        let Ok(iv) = eigen_bounds_block(k, 2, p.mu_b) else { continue };
        let blocks: Vec<usize> = sample(&mut rng, a.n_blocks(), k).into_vec();
        let eig = SymmetricEigen::new(support_gram(&a, &blocks)).eigenvalues;
        assert!(eig.min() >= iv.lo - 1e-12 && eig.max() <= iv.hi + 1e-12);
        if let Ok(pb) = projection_bound(k, 2, p.mu, p.mu_b) {
            for s in 0..k {
                let col = blocks[s] * 2 + rng.random_range(0..2);
                let norm = projected_column_norm(&a, &blocks[..s], col);
                assert!(norm >= pb.lower - 1e-12);
            }
        }
        tested += 1;
    }
    assert!(tested > 20);
}

#[test]
fn gamma_inside_bound_on_two_orthobases() {
    let mut rng = seeded_rng(12);
    for _ in 0..30 {
        let a = gen_two_orthobasis(32, 2, &mut rng).unwrap();
        let p = coherence_profile(&a);
        let k = 1;
        let b = projection_bound(k, 2, p.mu, p.mu_b).unwrap();
        let g = gamma_bound(k, 2, p.mu_b, b.factor).unwrap();
        let blocks: Vec<usize> = sample(&mut rng, a.n_blocks(), k).into_vec();
        let gamma = erc_gamma(&a, &blocks, &[]).unwrap().gamma;
        assert!(gamma <= g.value + 1e-12 && g.below_one, "{gamma} > {}", g.value);
    }
}

#[test]
fn snr_bound_at_reference_point() {
    let (mu, d, k, m, n) = (0.135, 2, 2, 1024, 8192);
    let mu_b = mu / 2.0;
    let c = erc_sparsity_bound(mu, mu_b, d).unwrap().value;
    let e = eta(m, c).unwrap();
    let b = projection_bound(k, d, mu, mu_b).unwrap().factor;
    // independent 40-digit evaluation
    assert_abs_diff_eq!(c, 2.933_605_831_570_650, epsilon = 1e-10);
    assert_abs_diff_eq!(e, 29.406_565_536_652_42, epsilon = 1e-9);
    assert_abs_diff_eq!(b, 1.183_805_259_702_971_3, epsilon = 1e-12);
    let cases = [
        (GuaranteeVariant::Standard, 2.217_352_549_649_811_4, 28.434_454_085_328_353),
        (GuaranteeVariant::Tight, 2.327_652_652_637_653_4, 0.509_002_629_080_690_97),
    ];
    for (variant, xi_ref, snr_ref) in cases {
        let xi = xi_from_probability(0.95, m, n, mu_b, e, c, variant).unwrap();
        assert_abs_diff_eq!(xi, xi_ref, epsilon = 1e-7);
        let p = SnrBoundParams { k, d, mu_b, b_factor: b, m, xi, eta: e };
        let v = snr_min_bound(&p, variant).unwrap();
        assert!((v.value - snr_ref).abs() < 1e-6 * snr_ref);
    }
}

#[test]
fn xi_minimal_on_coarse_grid_and_monotone_in_target() {
    let (m, n, mu_b) = (1024, 8192, 0.0675);
    let c = erc_sparsity_bound(0.135, mu_b, 2).unwrap().value;
    let e = eta(m, c).unwrap();
    let xi = xi_from_probability(0.9, m, n, mu_b, e, c, GuaranteeVariant::Standard).unwrap();
    let p = success_probability(m, n, mu_b, xi, e, c, GuaranteeVariant::Standard).unwrap();
    assert!(p >= 0.9 && p - 0.9 <= 1e-9);
    let mut g = 0.0;
    while g < xi * (1.0 - 1e-9) {
        let pg = success_probability(m, n, mu_b, g.max(1e-6), e, c, GuaranteeVariant::Standard).unwrap();
        assert!(pg < 0.9);
        g += xi / 1000.0;
    }
    let mut prev = 0.0;
    for i in 0..10 {
        let target = 0.9 + 0.01 * i as f64;
        let x = xi_from_probability(target, m, n, mu_b, e, c, GuaranteeVariant::Standard).unwrap();
        assert!(x >= prev);
        prev = x;
    }
}

#[test]
fn tight_variant_below_standard_under_numerator_condition() {
    let (k, d, m) = (2, 2, 1024);
    let mu_b = 0.0675;
    let b = projection_bound(k, d, 0.135, mu_b).unwrap().factor;
    let e = eta(m, 2.93).unwrap();
    let radius = noise_radius(m as f64);
    for i in 1..40 {
        let xi = i as f64 * 0.1;
        if xi * mu_b * e > radius {
            continue;
        }
        let p = SnrBoundParams { k, d, mu_b, b_factor: b, m, xi, eta: e };
        let (Ok(t3), Ok(c2)) = (snr_min_bound(&p, GuaranteeVariant::Standard), snr_min_bound(&p, GuaranteeVariant::Tight)) else {
            continue;
        };
        assert!(c2.value <= t3.value);
    }
}

#[test]
fn projection_dominance_fails_for_many_blocks_at_high_coherence() {
    // the scalar bound overtakes near mu = 0.0834 for k = 5
    let ours = projection_bound(5, 2, 0.085, 0.0425).unwrap().lower;
    let scalar = projection_bound_existing_scalar(5, 2, 0.085).unwrap();
    assert!(ours < scalar);
    let ours = projection_bound(5, 2, 0.08, 0.04).unwrap().lower;
    assert!(ours > projection_bound_existing_scalar(5, 2, 0.08).unwrap());
}

proptest! {
    #[test]
    fn eigen_intervals_nest(mu in 0.001f64..0.2, k in 1usize..10, d in 1usize..6) {
        let mu_b = mu / d as f64;
        if let (Ok(ours), Ok(theirs)) = (eigen_bounds_block(k, d, mu_b), eigen_bounds_existing(k * d, mu)) {
            prop_assert!(ours.is_within(&theirs));
            prop_assert!(ours.lo <= 1.0 && 1.0 <= ours.hi);
        }
        if let (Ok(a), Ok(b)) = (eigen_bounds_block(k, d, mu_b), eigen_bounds_total_sparsity(k * d, d, mu_b)) {
            prop_assert!((a.lo - b.lo).abs() < 1e-14 && (a.hi - b.hi).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_factor_at_least_one(mu in 0.0f64..0.3, k in 1usize..12, d in 1usize..5) {
        if let Ok(p) = projection_bound(k, d, mu, mu / d as f64) {
            prop_assert!(p.factor >= 1.0 && p.lower <= 1.0);
        }
    }

    #[test]
    fn projection_bound_dominates_up_to_four_blocks(mu in 0.0f64..0.1, k in 1usize..5) {
        if let Ok(p) = projection_bound(k, 2, mu, mu / 2.0) {
            let (a, b) = projection_bounds_existing(k, 2, mu);
            if let Ok(a) = a { prop_assert!(p.lower >= a - 1e-15); }
            if let Ok(b) = b { prop_assert!(p.lower >= b - 1e-15); }
        }
    }

    #[test]
    fn sparsity_bound_closed_form_matches_bracket(mu in 1e-3f64..0.5, ratio in 0.05f64..1.0, d in 1usize..9) {
        let c = erc_sparsity_bound(mu, mu * ratio, d).unwrap();
        if c.value.is_finite() {
            prop_assert!((c.value - c.bracketed).abs() <= 1e-9 * c.value.max(1.0));
            prop_assert!(c.coefficients.eval(c.value * (1.0 - 1e-6)) < 0.0);
        }
    }

    #[test]
    fn probability_round_trip(p in 0.5f64..0.99, mu_b in 0.01f64..0.2) {
        let c = 3.0;
        let e = eta(1024, c).unwrap();
        for variant in [GuaranteeVariant::Standard, GuaranteeVariant::Tight] {
            let xi = xi_from_probability(p, 1024, 8192, mu_b, e, c, variant).unwrap();
            let back = success_probability(1024, 8192, mu_b, xi, e, c, variant).unwrap();
            prop_assert!(back >= p && back - p <= 1e-9);
        }
    }
}
