//! End-to-end Harnack checks on one shared proximal trajectory:
//! cosine initial density (amplitude 1/2) on a 128-node circle, horizon
//! K = 0.05 split into N = 32 steps.

use once_cell::sync::Lazy;

use jkolab::harnack::{
    check_chain_consistency, check_diff_harnack, check_harnack_pair, check_recursion,
    HarnackSamples, NodeSampling,
};
use jkolab::jko::{run_trajectory, InnerSettings, JkoTrajectory};
use jkolab::torus::{DensityField, TorusGrid};

const TAU: f64 = 0.05 / 32.0;

static TRAJECTORY: Lazy<JkoTrajectory> = Lazy::new(|| {
    let grid = TorusGrid::new(1, 128).unwrap();
    let rho = DensityField::cosine(grid, 0.5).unwrap();
    run_trajectory(&rho, TAU, 32, &InnerSettings::default()).unwrap()
});

#[test]
fn hessian_lower_bound_holds_with_wide_margin() {
    let report = check_diff_harnack(&TRAJECTORY, 1.0, 0.0, 1e-3).unwrap();
    assert!(report.pass);
    assert_eq!(report.rows.len(), 32);

    // The density flattens, so the minimum eigenvalue of log ρ_k rises
    // monotonically while the bound −1/(τ(k+1)) relaxes much faster.
    for pair in report.rows.windows(2) {
        assert!(pair[1].a_k > pair[0].a_k);
    }
    let first = &report.rows[0];
    let last = report.rows.last().unwrap();
    assert!((first.a_k - (-12.6017)).abs() < 1e-2);
    assert!((first.bound - (-320.0)).abs() < 1e-9);
    assert!((last.a_k - (-2.5936)).abs() < 1e-2);
    assert!((last.bound - (-320.0 / 16.5)).abs() < 1e-9);

    // The margin never drops below its terminal value ≈ 16.8.
    let min_slack = report
        .rows
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    assert!(min_slack > 16.0, "min slack {min_slack}");

    // Even the strongest admissible constant is feasible here.
    assert_eq!(report.smallest_feasible_c, Some(0.5));
}

#[test]
fn eigenvalue_recursion_holds_strictly() {
    let report = check_recursion(&TRAJECTORY, 0.0).unwrap();
    assert!(report.pass);
    assert_eq!(report.skipped_count, 0);
    assert_eq!(report.rows.len(), 32);

    // Worst slack measured at −6.98e-5: strictly inside the inequality.
    let worst_gap = report
        .rows
        .iter()
        .map(|r| r.lhs.unwrap() - r.rhs)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(worst_gap < 0.0, "worst gap {worst_gap}");
    assert!(worst_gap > -1e-3, "worst gap {worst_gap}");
}

#[test]
fn two_time_bound_holds_for_all_sampled_tuples() {
    let report = check_harnack_pair(&TRAJECTORY, &HarnackSamples::default()).unwrap();
    assert!(report.pass);
    assert_eq!(report.failures, 0);
    // 16 strided nodes squared times 1830 admissible time pairs.
    assert_eq!(report.tuples_checked, 468_480);
    assert_eq!(report.recorded.len(), 1024);

    // The tightest tuple compares adjacent plateaus at the crest (node 0),
    // where the prefactor (t₂+τ)/t₁ bottoms out at ≈ 1.082.
    assert!((report.worst_ratio - 0.9322).abs() < 1e-3);
    let top = &report.recorded[0];
    assert_eq!((top.x_node, top.y_node), (0, 0));
    assert_eq!((top.k1, top.k2), (31, 32));
    assert!((top.t1 - 30.5 * TAU).abs() < 1e-12);
    assert!((top.t2 - 32.0 * TAU).abs() < 1e-12);
    for pair in report.recorded.windows(2) {
        assert!(pair[0].ratio >= pair[1].ratio);
    }
}

#[test]
fn chained_step_bounds_stay_below_the_two_time_bound() {
    let rows = check_chain_consistency(
        &TRAJECTORY,
        1.0,
        &[1, 2, 4],
        NodeSampling::Strided { per_dim: 16 },
        1e-3,
    )
    .unwrap();
    // (31 + 30 + 28) start indices times 16² node pairs.
    assert_eq!(rows.len(), 22_784);

    let mut worst_leg = f64::NEG_INFINITY;
    for row in &rows {
        assert!(row.pass, "row {row:?}");
        // At C = 1 the per-step prefactors telescope exactly.
        assert!((row.chained_rhs / row.final_rhs - 1.0).abs() < 1e-12);
        worst_leg = worst_leg.max(row.worst_leg_ratio);
    }
    // Every leg holds strictly, without the tolerance; measured 0.9737.
    assert!(worst_leg < 1.0, "worst leg {worst_leg}");
    assert!((worst_leg - 0.9737).abs() < 1e-3);
}
