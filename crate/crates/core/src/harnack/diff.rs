//! Hessian lower bounds: the per-step matrix Harnack bound, the recursion
//! that propagates it, and the scalar threshold behind the recursion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jko::JkoTrajectory;

use super::{hessian_log_min_eigs, validate_c, validate_tol};

/// One step of the Hessian lower-bound check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiffHarnackRow {
    /// Step index, 1-based.
    pub k: usize,
    /// Step time t = kτ.
    pub t: f64,
    /// Global minimum eigenvalue of ∇²log ρ_k.
    pub a_k: f64,
    /// Lower bound −C/(τ(k+1)).
    pub bound: f64,
    /// a_k − bound; nonnegative when the bound holds exactly.
    pub slack: f64,
}

/// Result of [`check_diff_harnack`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiffHarnackReport {
    pub c: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub rows: Vec<DiffHarnackRow>,
    /// True iff every row satisfies slack ≥ −(tol_abs + tol_rel·|bound|).
    pub pass: bool,
    /// Smallest constant in [½, 1] (bisection to 1e-3) for which every row
    /// still passes — reported as empirical data, weaker C means a sharper
    /// certified bound. `None` when even C = 1 fails.
    pub smallest_feasible_c: Option<f64>,
}

const BISECTION_TOL: f64 = 1e-3;

/// Checks a_k ≥ −C/(τ(k+1)) for k = 1..=n_steps, where a_k is the global
/// minimum eigenvalue of ∇²log ρ_k.
///
/// A row passes when its slack is at least −(tol_abs + tol_rel·|bound|); the
/// relative term absorbs discretization error proportional to the bound's
/// own size, and setting both tolerances to zero gives a strict check.
pub fn check_diff_harnack(
    traj: &JkoTrajectory,
    c: f64,
    tol_abs: f64,
    tol_rel: f64,
) -> Result<DiffHarnackReport> {
    validate_c(c)?;
    validate_tol(tol_abs, "tol_abs")?;
    validate_tol(tol_rel, "tol_rel")?;
    let tau = traj.tau();
    let a = hessian_log_min_eigs(traj);

    let feasible = |cc: f64| -> bool {
        (1..a.len()).all(|k| {
            let bound = -cc / (tau * (k + 1) as f64);
            a[k] - bound >= -(tol_abs + tol_rel * bound.abs())
        })
    };

    let rows: Vec<DiffHarnackRow> = (1..a.len())
        .map(|k| {
            let bound = -c / (tau * (k + 1) as f64);
            DiffHarnackRow {
                k,
                t: tau * k as f64,
                a_k: a[k],
                bound,
                slack: a[k] - bound,
            }
        })
        .collect();
    let pass = feasible(c);

    // The bound −C/(τ(k+1)) weakens as C grows, so feasibility is monotone
    // in C and bisection applies.
    let smallest_feasible_c = if !feasible(1.0) {
        None
    } else if feasible(0.5) {
        Some(0.5)
    } else {
        let (mut lo, mut hi) = (0.5, 1.0);
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    };

    Ok(DiffHarnackReport {
        c,
        tol_abs,
        tol_rel,
        rows,
        pass,
        smallest_feasible_c,
    })
}

/// One step of the lower-bound recursion.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RecursionRow {
    /// Step index, 1-based; the row relates a_{k−1} to a_k.
    pub k: usize,
    pub a_prev: f64,
    pub a_k: f64,
    /// 1 − 4τ·a_{k−1}; the row is skipped when this is negative.
    pub radicand: f64,
    /// (1 − √radicand)/2, absent on skipped rows.
    pub lhs: Option<f64>,
    /// τ·a_k/(1 + τ·a_k).
    pub rhs: f64,
    /// lhs ≤ rhs + tol_abs; vacuously true on skipped rows.
    pub satisfied: bool,
    pub skipped: bool,
}

/// Result of [`check_recursion`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecursionReport {
    pub tol_abs: f64,
    pub rows: Vec<RecursionRow>,
    /// True iff every non-skipped row is satisfied.
    pub pass: bool,
    pub skipped_count: usize,
}

/// Verifies the one-step recursion (1 − √(1 − 4τ·a_{k−1}))/2 ≤ τ·a_k/(1 + τ·a_k)
/// on the computed minimum eigenvalues of ∇²log ρ_k.
///
/// Rows whose radicand 1 − 4τ·a_{k−1} is negative fall outside the regime
/// where the recursion is used (the inductive bound keeps the radicand ≥ 1)
/// and are recorded as skipped. A step with 1 + τ·a_k ≤ 0 invalidates the
/// whole run and is returned as an error.
pub fn check_recursion(traj: &JkoTrajectory, tol_abs: f64) -> Result<RecursionReport> {
    validate_tol(tol_abs, "tol_abs")?;
    let tau = traj.tau();
    let a = hessian_log_min_eigs(traj);
    let mut rows = Vec::with_capacity(a.len().saturating_sub(1));
    for k in 1..a.len() {
        rows.push(recursion_row(k, tau, a[k - 1], a[k], tol_abs)?);
    }
    let skipped_count = rows.iter().filter(|r| r.skipped).count();
    let pass = rows.iter().all(|r| r.satisfied);
    Ok(RecursionReport {
        tol_abs,
        rows,
        pass,
        skipped_count,
    })
}

/// Evaluates one recursion row from scalar data.
fn recursion_row(k: usize, tau: f64, a_prev: f64, a_k: f64, tol_abs: f64) -> Result<RecursionRow> {
    let one_plus = 1.0 + tau * a_k;
    if one_plus <= 0.0 {
        return Err(Error::PositivityViolated { k, value: one_plus });
    }
    let radicand = 1.0 - 4.0 * tau * a_prev;
    let rhs = tau * a_k / one_plus;
    if radicand < 0.0 {
        return Ok(RecursionRow {
            k,
            a_prev,
            a_k,
            radicand,
            lhs: None,
            rhs,
            satisfied: true,
            skipped: true,
        });
    }
    let lhs = 0.5 * (1.0 - radicand.sqrt());
    Ok(RecursionRow {
        k,
        a_prev,
        a_k,
        radicand,
        lhs: Some(lhs),
        rhs,
        satisfied: lhs <= rhs + tol_abs,
        skipped: false,
    })
}

/// One row of the scalar threshold table.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub k: usize,
    /// Fixed point of the recursion started at −C/k:
    /// (1 − √(1 + 4C/k)) / (1 + √(1 + 4C/k)).
    pub lhs: f64,
    /// Target value −C/(k+1).
    pub rhs: f64,
    pub inequality_holds: bool,
    /// k ≥ (1−C)²/(2C−1).
    pub threshold_reached: bool,
    /// The two predicates must coincide for every k.
    pub agree: bool,
}

/// Result of [`scalar_threshold_equivalence`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub c: f64,
    /// (1−C)²/(2C−1); requires C > ½.
    pub threshold: f64,
    pub rows: Vec<ThresholdRow>,
    pub all_agree: bool,
}

/// Verifies, for k = 1..=k_max, the equivalence
///
/// ```text
/// (1 − √(1 + 4C/k)) / (1 + √(1 + 4C/k)) ≥ −C/(k+1)   ⇔   k ≥ (1−C)²/(2C−1)
/// ```
///
/// for ½ < C ≤ 1. The left side is where the recursion sends the inductive
/// bound −C/(τk) after one step; the equivalence pins down from which step
/// onward the bound propagates.
pub fn scalar_threshold_equivalence(c: f64, k_max: usize) -> Result<ThresholdTable> {
    if c <= 0.5 {
        return Err(Error::ThresholdUndefined { c });
    }
    if c > 1.0 {
        return Err(Error::InvalidInput(format!(
            "the Harnack constant must lie in (1/2, 1], got {c}"
        )));
    }
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let threshold = (1.0 - c) * (1.0 - c) / (2.0 * c - 1.0);
    let rows: Vec<ThresholdRow> = (1..=k_max)
        .map(|k| {
            let root = (1.0 + 4.0 * c / k as f64).sqrt();
            let lhs = (1.0 - root) / (1.0 + root);
            let rhs = -c / (k + 1) as f64;
            let inequality_holds = lhs >= rhs;
            let threshold_reached = k as f64 >= threshold;
            ThresholdRow {
                k,
                lhs,
                rhs,
                inequality_holds,
                threshold_reached,
                agree: inequality_holds == threshold_reached,
            }
        })
        .collect();
    let all_agree = rows.iter().all(|r| r.agree);
    Ok(ThresholdTable {
        c,
        threshold,
        rows,
        all_agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jko::JkoTrajectory;
    use crate::reference::heat_solve;
    use crate::torus::{DensityField, TorusGrid};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn uniform_trajectory(n: usize) -> JkoTrajectory {
        let grid = TorusGrid::new(1, 32).unwrap();
        let rho = DensityField::uniform(grid);
        JkoTrajectory::from_densities(0.1, vec![rho; n + 1]).unwrap()
    }

    /// Heat-flow snapshots at times kτ wrapped as a trajectory.
    fn heat_snapshots(grid: TorusGrid, amplitude: f64, tau: f64, n: usize) -> JkoTrajectory {
        let rho = DensityField::cosine(grid, amplitude).unwrap();
        let densities: Vec<DensityField> = (0..=n)
            .map(|k| heat_solve(&rho, tau * k as f64).unwrap())
            .collect();
        JkoTrajectory::from_densities(tau, densities).unwrap()
    }

    #[test]
    fn uniform_trajectory_passes_strictly_with_any_constant() {
        let traj = uniform_trajectory(4);
        let report = check_diff_harnack(&traj, 1.0, 0.0, 0.0).unwrap();
        assert!(report.pass);
        for row in &report.rows {
            // a_k = 0 for the uniform density, so the slack is |bound|.
            assert!(row.a_k.abs() <= 1e-13);
            assert_abs_diff_eq!(row.slack, -row.bound, epsilon = 1e-12);
        }
        assert_eq!(report.smallest_feasible_c, Some(0.5));
    }

    #[test]
    fn constants_outside_the_admissible_range_are_rejected() {
        let traj = uniform_trajectory(2);
        assert!(check_diff_harnack(&traj, 0.4, 0.0, 0.0).is_err());
        assert!(check_diff_harnack(&traj, 1.1, 0.0, 0.0).is_err());
        assert!(check_diff_harnack(&traj, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn heat_snapshots_match_the_closed_form_eigenvalue() {
        // For ρ_t = 1 + b(t)·cos(2πx) with b(t) = b₀·e^{−4π²t} and b ≤ ½,
        // min ∇²log ρ_t = −4π²·b/(1+b), attained where the density peaks.
        let grid = TorusGrid::new(1, 128).unwrap();
        let tau = 0.05 / 16.0;
        let traj = heat_snapshots(grid, 0.5, tau, 16);
        let a = hessian_log_min_eigs(&traj);
        let four_pi_sq = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        for (k, &a_k) in a.iter().enumerate() {
            let b = 0.5 * (-four_pi_sq * tau * k as f64).exp();
            let closed = -four_pi_sq * b / (1.0 + b);
            assert_abs_diff_eq!(a_k, closed, epsilon = 2e-2);
        }
        // The continuum bound a(t) ≥ −1/t holds with a wide margin on [τ, K]:
        // t·4π²·b(t) ≤ 1 + b(t) peaks near t = 1/(2π²) at ≈ 0.068 < 1.
        for step in 1..=1600 {
            let t = tau * 16.0 * step as f64 / 1600.0;
            if t < tau {
                continue;
            }
            let b = 0.5 * (-four_pi_sq * t).exp();
            assert!(-four_pi_sq * b / (1.0 + b) >= -1.0 / t);
        }
        let report = check_diff_harnack(&traj, 1.0, 0.0, 1e-3).unwrap();
        assert!(report.pass);
        assert!(report.rows.iter().all(|r| r.slack > 0.0));
        assert_eq!(report.smallest_feasible_c, Some(0.5));
    }

    #[test]
    fn infeasible_trajectories_report_no_constant() {
        // τ = 1 makes the k = 1 bound −C/2 ≥ −0.5, far above the cosine
        // density's minimum eigenvalue ≈ −13.2.
        let grid = TorusGrid::new(1, 64).unwrap();
        let rho = DensityField::cosine(grid, 0.5).unwrap();
        let traj = JkoTrajectory::from_densities(1.0, vec![rho.clone(), rho.clone()]).unwrap();
        let report = check_diff_harnack(&traj, 1.0, 0.0, 1e-3).unwrap();
        assert!(!report.pass);
        assert_eq!(report.smallest_feasible_c, None);
    }

    #[test]
    fn recursion_rows_flip_at_the_fixed_point_boundary() {
        // With a_{k−1} = −1/(τk) at k = 1 the radicand is 5 and the left side
        // is (1−√5)/2 ≈ −0.618034; the right side crosses it at
        // τ·a_k = (1−√5)/(3−√5) ≈ −0.381966.
        let tau = 1.0;
        let lhs = 0.5 * (1.0 - 5.0f64.sqrt());
        let row = recursion_row(1, tau, -1.0, -0.3819, 0.0).unwrap();
        assert_abs_diff_eq!(row.lhs.unwrap(), lhs, epsilon = 1e-12);
        assert!(row.satisfied, "rhs {} vs lhs {}", row.rhs, lhs);
        let row = recursion_row(1, tau, -1.0, -0.3820, 0.0).unwrap();
        assert!(!row.satisfied, "rhs {} vs lhs {}", row.rhs, lhs);
    }

    #[test]
    fn recursion_skips_rows_with_negative_radicand_and_flags_positivity() {
        // Radicand 1 − 4τ·a_prev < 0 requires a_prev > 1/(4τ) > 0.
        let row = recursion_row(3, 0.5, 0.6, 0.1, 0.0).unwrap();
        assert!(row.skipped);
        assert!(row.satisfied);
        assert!(row.lhs.is_none());
        assert!(row.radicand < 0.0);
        assert!(row.rhs.is_finite());

        let err = recursion_row(2, 0.1, 0.0, -10.5, 0.0).unwrap_err();
        assert!(matches!(err, Error::PositivityViolated { k: 2, .. }));
    }

    #[test]
    fn recursion_over_a_too_large_step_is_invalidated() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let uniform = DensityField::uniform(grid);
        let cosine = DensityField::cosine(grid, 0.5).unwrap();
        // 1 + τ·a_1 = 1 − 0.1·13.16 < 0.
        let traj = JkoTrajectory::from_densities(0.1, vec![uniform, cosine]).unwrap();
        let err = check_recursion(&traj, 0.0).unwrap_err();
        assert!(matches!(err, Error::PositivityViolated { k: 1, .. }));
    }

    #[test]
    fn recursion_on_uniform_trajectories_is_tight() {
        let traj = uniform_trajectory(3);
        let report = check_recursion(&traj, 0.0).unwrap();
        assert!(report.pass);
        assert_eq!(report.skipped_count, 0);
        for row in &report.rows {
            assert_abs_diff_eq!(row.lhs.unwrap(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(row.rhs, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn recursion_holds_along_heat_snapshots() {
        let grid = TorusGrid::new(1, 128).unwrap();
        let traj = heat_snapshots(grid, 0.5, 0.05 / 16.0, 16);
        let report = check_recursion(&traj, 1e-6).unwrap();
        assert!(report.pass, "rows: {:?}", report.rows);
        assert_eq!(report.skipped_count, 0);
    }

    #[test]
    fn threshold_table_matches_the_frozen_flip_points() {
        // C = 1: threshold 0, inequality from the first step.
        let table = scalar_threshold_equivalence(1.0, 20).unwrap();
        assert_eq!(table.threshold, 0.0);
        assert!(table.all_agree);
        assert!(table.rows.iter().all(|r| r.inequality_holds));

        // C = 0.6: threshold 0.16/0.2 = 0.8 < 1.
        let table = scalar_threshold_equivalence(0.6, 20).unwrap();
        assert_abs_diff_eq!(table.threshold, 0.8, epsilon = 1e-15);
        assert!(table.all_agree);
        assert!(table.rows.iter().all(|r| r.inequality_holds));

        // C = 0.51: threshold 0.49²/0.02 ≈ 12.005, so the predicate flips
        // between k = 12 and k = 13.
        let table = scalar_threshold_equivalence(0.51, 50).unwrap();
        assert_abs_diff_eq!(table.threshold, 12.005, epsilon = 1e-12);
        assert!(table.all_agree);
        for row in &table.rows {
            assert_eq!(row.inequality_holds, row.k >= 13, "row {}", row.k);
        }
    }

    #[test]
    fn threshold_requires_a_constant_above_one_half() {
        assert!(matches!(
            scalar_threshold_equivalence(0.5, 10).unwrap_err(),
            Error::ThresholdUndefined { .. }
        ));
        assert!(scalar_threshold_equivalence(0.49, 10).is_err());
        assert!(scalar_threshold_equivalence(1.01, 10).is_err());
        assert!(scalar_threshold_equivalence(0.8, 0).is_err());
    }

    #[test]
    fn threshold_equivalence_holds_on_a_constant_grid() {
        // Sweep C over (½, 1] in steps of 0.01; the two predicates must agree
        // for every k on every table.
        for i in 51..=100 {
            let c = i as f64 / 100.0;
            let table = scalar_threshold_equivalence(c, 60).unwrap();
            assert!(table.all_agree, "disagreement at C = {c}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Feasibility is monotone in the constant: a pass with C stays a
        /// pass with any C' ≥ C.
        #[test]
        fn diff_harnack_feasibility_is_monotone_in_c(
            c1 in 0.5f64..1.0,
            c2 in 0.5f64..1.0,
        ) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let grid = TorusGrid::new(1, 32).unwrap();
            let traj = heat_snapshots(grid, 0.4, 0.01, 4);
            let report_lo = check_diff_harnack(&traj, lo, 0.0, 1e-3).unwrap();
            let report_hi = check_diff_harnack(&traj, hi, 0.0, 1e-3).unwrap();
            if report_lo.pass {
                prop_assert!(report_hi.pass);
            }
            for (rl, rh) in report_lo.rows.iter().zip(&report_hi.rows) {
                prop_assert!(rh.slack >= rl.slack - 1e-12);
            }
        }
    }
}
