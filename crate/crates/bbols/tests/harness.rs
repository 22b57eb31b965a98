use bbols::curves::{run_bound_curves, write_bounds_csv, Preset};
use bbols::io::{read_matrix, read_vector, write_matrix, write_vector};
use bbols::sweep::{write_curve_csv, SweepContext, CURVE_HEADER};
use bbols::{occupancy_from_recovery, run_sweep, Axis, ExperimentConfig, Method};
use bbols_core::block_model::{gen_gaussian_block_orthogonal, seeded_rng};
use bbols_core::recovery::{recover, Algorithm, StopReason, StoppingRule};
use bbols_core::RecoveryResult;

fn small_config(trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        32,
        64,
        2,
        Axis::Sparsity {
            k_grid: vec![1, 2, 3],
            snr_db: 25.0,
        },
    );
    cfg.trials = trials;
    cfg.master_seed = 99;
    cfg.xi_fallback = Some(3.0);
    cfg
}

fn csv(points: &[bbols::CurvePoint]) -> String {
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, points).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn sweep_is_deterministic_and_worker_independent() {
    let mut cfg = small_config(12);
    cfg.workers = 1;
    let serial = csv(&run_sweep(&cfg).unwrap());
    assert_eq!(serial, csv(&run_sweep(&cfg).unwrap()));
    cfg.workers = 3;
    assert_eq!(serial, csv(&run_sweep(&cfg).unwrap()));
    assert!(serial.starts_with(CURVE_HEADER));
    assert_eq!(serial.lines().count(), 1 + 3 * Method::ALL.len());
}

#[test]
fn probabilities_and_stderr_consistent() {
    let cfg = small_config(20);
    for point in run_sweep(&cfg).unwrap() {
        for s in &point.stats {
            assert!((0.0..=1.0).contains(&s.success_prob));
            let want = (s.success_prob * (1.0 - s.success_prob) / 20.0).sqrt();
            assert!((s.stderr - want).abs() < 1e-15);
        }
    }
}

#[test]
fn zero_signal_counts_as_success_everywhere() {
    let mut cfg = small_config(1);
    cfg.axis = Axis::Sparsity {
        k_grid: vec![0],
        snr_db: 20.0,
    };
    let points = run_sweep(&cfg).unwrap();
    for s in &points[0].stats {
        assert_eq!(s.success_prob, 1.0, "{}", s.method);
        assert_eq!(s.mean_iters, 0.0);
    }
}

#[test]
fn fixed_matrix_mode_produces_full_curve() {
    let mut cfg = small_config(10);
    let fresh = csv(&run_sweep(&cfg).unwrap());
    cfg.fixed_matrix = true;
    let fixed = csv(&run_sweep(&cfg).unwrap());
    assert_eq!(fresh.lines().count(), fixed.lines().count());
}

#[test]
fn blind_methods_without_fallback_report_regime_error() {
    // with m = 8 the default target probability exceeds the achievable ceiling
    let mut cfg = ExperimentConfig::new(8, 16, 2, Axis::Sparsity { k_grid: vec![1], snr_db: 20.0 });
    cfg.trials = 2;
    cfg.methods = vec![Method::BlindBols];
    let res = run_sweep(&cfg);
    assert!(matches!(res, Err(bbols::HarnessError::Regime(_))));
    cfg.xi_fallback = Some(2.0);
    assert!(run_sweep(&cfg).is_ok());
}

#[test]
fn paired_trials_share_data() {
    let mut cfg = small_config(1);
    cfg.methods = vec![Method::Bols, Method::Bols];
    let ctx = SweepContext::new(&cfg).unwrap();
    let t = ctx.run_trial(1, 0).unwrap();
    assert_eq!(t.outcomes[0], t.outcomes[1]);
}

#[test]
fn occupancy_examples() {
    let a = gen_gaussian_block_orthogonal(64, 128, 2, &mut seeded_rng(4)).unwrap();
    let empty = recover(&a, &[0.0; 64], Algorithm::Bols, &StoppingRule::fixed(2)).unwrap();
    let occ = occupancy_from_recovery(&empty, 64);
    assert_eq!(occ.free_blocks().len(), 64);

    let mut x = vec![0.0; 128];
    for b in [3usize, 17, 40] {
        x[2 * b] = 1.0;
        x[2 * b + 1] = -0.7;
    }
    let y = a.apply(&x);
    let res = recover(&a, &y, Algorithm::Bols, &StoppingRule::fixed(3)).unwrap();
    let occ = occupancy_from_recovery(&res, 64);
    assert_eq!(occ.occupied_blocks(), vec![3, 17, 40]);
    assert_eq!(occ.occupied.len(), 64);

    let mut spurious: RecoveryResult = res.clone();
    spurious.selected_blocks.push(50);
    spurious.x_hat[100] = 1e-12;
    let occ = occupancy_from_recovery(&spurious, 64);
    assert_eq!(occ.occupied_blocks(), vec![3, 17, 40]);
    assert_eq!(spurious.stop_reason, StopReason::Residual);
}

#[test]
fn matrix_and_vector_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_gaussian_block_orthogonal(8, 16, 4, &mut seeded_rng(1)).unwrap();
    let path = dir.path().join("a.txt");
    write_matrix(&path, &a).unwrap();
    let back = read_matrix(&path).unwrap();
    assert_eq!(back, a);
    let v = vec![1.5, -2.25e-9, 3.0];
    let vp = dir.path().join("v.txt");
    write_vector(&vp, &v).unwrap();
    assert_eq!(read_vector(&vp).unwrap(), v);
}

#[test]
fn bound_presets_emit_uniform_rows() {
    for p in Preset::ALL {
        let rows = run_bound_curves(&p.points());
        let mut buf = Vec::new();
        write_bounds_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let width = text.lines().next().unwrap().split(',').count();
        assert!(text.lines().all(|l| l.split(',').count() == width), "{}", p.name());
        assert_eq!(text.lines().count(), rows.len() + 1);
    }
}

#[test]
fn snr_threshold_decreases_with_measurements() {
    let rows = run_bound_curves(&Preset::Snr.points());
    let (small, large): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r.report.params.m == Some(1024));
    for (a, b) in small.iter().zip(&large) {
        assert_eq!(a.report.params.p_target, b.report.params.p_target);
        let va = a.report.snr_min_standard.unwrap().value;
        let vb = b.report.snr_min_standard.unwrap().value;
        assert!(vb < va);
    }
}
