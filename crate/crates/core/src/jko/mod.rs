//! Proximal (minimizing-movement) discretization of the heat flow.
//!
//! One step with parameter τ replaces the density ρ_prev by the minimizer of
//!
//! ```text
//! ρ ↦ ½·W₂²(ρ_prev, ρ) + τ·∫ ρ log ρ ,
//! ```
//!
//! and a trajectory is K/τ such steps. Two independent inner solvers are
//! provided:
//!
//! * [`jko_step`] (default): entropic scaling iterations on the blurred
//!   transport problem with a decreasing-ε ladder ([`scaling`]);
//! * the same entry point with [`InnerSettings::oracle_mode`]: mirror descent
//!   over the density simplex driven by exact linear-programming transport
//!   solves and their dual prices ([`oracle`]); limited to tiny grids and
//!   used to cross-check the scaling path.
//!
//! The module also measures the structural residuals a converged step should
//! satisfy — the Jacobian change-of-variables identity between consecutive
//! densities and the first-order optimality identity linking the envelope
//! potential to the previous density ([`residuals`]) — and runs τ-refinement
//! studies against the spectral reference ([`convergence_study`]).
//!
//! # Grid mobility
//!
//! On a grid of spacing h the discrete transport cost is polyhedral: moving
//! mass to the neighboring node costs ½h² per unit, while one step gains at
//! most τ·|∂ log ρ|·h per unit in entropy. Below the mobility threshold
//! τ ≳ h / (2·max|∂ log ρ|) the exact discrete minimizer is ρ_prev itself
//! and the scheme stalls. The entropic blur smooths this kink: with
//! √ε of the order of h the solver tracks the continuum step through
//! sub-cell displacements, which is why the default terminal blur is tied
//! to the grid scale and why desk-scale experiments should keep τ near or
//! above the threshold.

mod oracle;
mod residuals;
mod scaling;

pub use oracle::MAX_ORACLE_NODES;
pub use residuals::{monge_ampere_residual, optimality_residual, MaResidual, OptimalityResidual};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::{heat_solve, l1_distance, linf_distance};
use crate::torus::{DensityField, TorusGrid};

/// Discrete Boltzmann entropy ∫ ρ log ρ (Riemann sum over nodes).
///
/// Nonnegative for probability densities on the unit torus, zero exactly for
/// the uniform density.
pub fn entropy(rho: &DensityField) -> f64 {
    let volume = rho.grid().cell_volume();
    rho.values().iter().map(|&v| v * v.ln()).sum::<f64>() * volume
}

/// Default terminal blur for the inner solver: small enough that the
/// entropic bias stays below both the step scale (τ/20) and the grid scale
/// (h²), capped at 1e-4.
pub fn default_eps_terminal(tau: f64, h: f64) -> f64 {
    (1e-4f64).min(tau / 20.0).min(h * h)
}

/// Inner-solver configuration for one proximal step.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerSettings {
    /// First rung of the geometric ε ladder.
    pub eps_start: f64,
    /// Ladder decay factor in (0, 1).
    pub eps_factor: f64,
    /// Last rung; `None` selects [`default_eps_terminal`].
    pub eps_terminal: Option<f64>,
    /// Scaling-round budget per rung.
    pub max_iters: usize,
    /// L¹ defect of the prescribed marginal at which a rung is converged.
    pub marginal_tol: f64,
    /// Replace the scaling solver by the exact-transport mirror-descent
    /// oracle (tiny grids only).
    pub oracle_mode: bool,
}

impl Default for InnerSettings {
    fn default() -> Self {
        Self {
            eps_start: 1e-1,
            eps_factor: 0.5,
            eps_terminal: None,
            max_iters: 50_000,
            marginal_tol: 1e-9,
            oracle_mode: false,
        }
    }
}

impl InnerSettings {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.eps_start > 0.0) {
            return Err(Error::InvalidInput(format!(
                "eps_start must be positive, got {}",
                self.eps_start
            )));
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return Err(Error::InvalidInput(format!(
                "eps_factor must lie in (0, 1), got {}",
                self.eps_factor
            )));
        }
        if let Some(e) = self.eps_terminal {
            if !(e > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "eps_terminal must be positive, got {e}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.marginal_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "marginal_tol must be positive, got {}",
                self.marginal_tol
            )));
        }
        Ok(())
    }

    /// Terminal blur actually used on a given grid.
    pub fn terminal_eps(&self, tau: f64, grid: TorusGrid) -> f64 {
        self.eps_terminal
            .unwrap_or_else(|| default_eps_terminal(tau, grid.h()))
    }
}

/// Inner-solver summary attached to every step.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverStats {
    /// Scaling rounds over the whole ε ladder (or accepted mirror-descent
    /// iterations in oracle mode).
    pub iterations: usize,
    /// Final blur (0 in oracle mode: the transport solves are exact).
    pub eps_final: f64,
    /// L¹ defect of the prescribed marginal at exit (or the stationarity
    /// measure in oracle mode).
    pub marginal_residual: f64,
}

/// Output of one proximal step.
#[derive(Clone, Debug)]
pub struct StepSolution {
    pub density: DensityField,
    /// Transport value Σ γ·d² between the previous and the new density.
    pub w2_sq: f64,
    /// Entropy of the new density.
    pub entropy: f64,
    pub solver: SolverStats,
}

/// Per-step record kept by trajectories.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Step index, starting at 1.
    pub k: usize,
    pub w2_sq: f64,
    pub entropy: f64,
    /// ½·w2_sq + τ·entropy — the value of the proximal objective at the
    /// minimizer.
    pub objective: f64,
    /// objective − τ·entropy(previous density): nonpositive up to the
    /// entropic blur, since the previous density is admissible.
    pub descent_residual: f64,
    pub solver: SolverStats,
}

/// One proximal step from `prev` with step size `tau`.
pub fn jko_step(prev: &DensityField, tau: f64, settings: &InnerSettings) -> Result<StepSolution> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {tau}"
        )));
    }
    settings.validate()?;
    if settings.oracle_mode {
        oracle::mirror_descent_step(prev, tau, settings)
    } else {
        scaling::scaling_step(prev, tau, settings)
    }
}

/// A proximal trajectory: the initial density plus one density per step,
/// together with per-step diagnostics.
#[derive(Clone, Debug)]
pub struct JkoTrajectory {
    tau: f64,
    densities: Vec<DensityField>,
    diagnostics: Vec<StepDiagnostics>,
}

impl JkoTrajectory {
    /// Wraps an externally produced density sequence (diagnostics empty).
    /// `densities[0]` is the initial state.
    pub fn from_densities(tau: f64, densities: Vec<DensityField>) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step size must be positive, got {tau}"
            )));
        }
        let Some(first) = densities.first() else {
            return Err(Error::InvalidInput(
                "a trajectory needs at least the initial density".into(),
            ));
        };
        let grid = first.grid();
        if densities.iter().any(|d| d.grid() != grid) {
            return Err(Error::GridMismatch(
                "trajectory densities live on different grids".into(),
            ));
        }
        Ok(Self {
            tau,
            densities,
            diagnostics: Vec::new(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn grid(&self) -> TorusGrid {
        self.densities[0].grid()
    }

    /// Number of proximal steps (densities run from index 0 to n_steps).
    pub fn n_steps(&self) -> usize {
        self.densities.len() - 1
    }

    /// Time horizon covered: τ·n_steps.
    pub fn final_time(&self) -> f64 {
        self.tau * self.n_steps() as f64
    }

    pub fn densities(&self) -> &[DensityField] {
        &self.densities
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    pub fn initial(&self) -> &DensityField {
        &self.densities[0]
    }

    pub fn final_density(&self) -> &DensityField {
        self.densities.last().expect("nonempty by construction")
    }

    pub fn density(&self, k: usize) -> Option<&DensityField> {
        self.densities.get(k)
    }

    /// Piecewise-constant interpolation u_t = ρ_{⌊t/τ⌋} for t in
    /// [0, final_time]; the right endpoint maps to the last density.
    pub fn density_at_time(&self, t: f64) -> Result<&DensityField> {
        let horizon = self.final_time();
        if !(t >= 0.0) || t > horizon * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::InvalidInput(format!(
                "time {t} outside the trajectory horizon [0, {horizon}]"
            )));
        }
        let idx = ((t / self.tau).floor() as usize).min(self.n_steps());
        Ok(&self.densities[idx])
    }

    pub(crate) fn push_step(&mut self, density: DensityField, diag: StepDiagnostics) {
        self.densities.push(density);
        self.diagnostics.push(diag);
    }
}

/// Runs `n_steps` proximal steps from `initial`.
pub fn run_trajectory(
    initial: &DensityField,
    tau: f64,
    n_steps: usize,
    settings: &InnerSettings,
) -> Result<JkoTrajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidInput(
            "a trajectory needs at least one step".into(),
        ));
    }
    let mut trajectory = JkoTrajectory::from_densities(tau, vec![initial.clone()])?;
    let mut entropy_prev = entropy(initial);
    for k in 1..=n_steps {
        let step = jko_step(trajectory.final_density(), tau, settings).map_err(|e| e.at_step(k))?;
        let objective = 0.5 * step.w2_sq + tau * step.entropy;
        let diag = StepDiagnostics {
            k,
            w2_sq: step.w2_sq,
            entropy: step.entropy,
            objective,
            descent_residual: objective - tau * entropy_prev,
            solver: step.solver,
        };
        entropy_prev = step.entropy;
        trajectory.push_step(step.density, diag);
    }
    Ok(trajectory)
}

/// One row of a τ-refinement study at a fixed horizon.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_steps: usize,
    pub tau: f64,
    /// L¹ gap between the trajectory endpoint and the spectral solution.
    pub l1_gap: f64,
    /// L∞ gap between the same densities.
    pub linf_gap: f64,
    /// Wall-clock milliseconds spent on the trajectory (not reproducible
    /// across runs, unlike every other field).
    pub runtime_ms: f64,
}

/// Compares trajectory endpoints u(K) = ρ_N against the heat solution at the
/// horizon for each step count, holding the grid and horizon fixed.
pub fn convergence_study(
    initial: &DensityField,
    horizon: f64,
    step_counts: &[usize],
    settings: &InnerSettings,
) -> Result<Vec<ConvergenceRow>> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if step_counts.is_empty() {
        return Err(Error::InvalidInput("no step counts requested".into()));
    }
    let target = heat_solve(initial, horizon)?;
    let mut rows = Vec::with_capacity(step_counts.len());
    for &n in step_counts {
        if n == 0 {
            return Err(Error::InvalidInput("step counts must be positive".into()));
        }
        let tau = horizon / n as f64;
        let start = std::time::Instant::now();
        let trajectory = run_trajectory(initial, tau, n, settings)?;
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        rows.push(ConvergenceRow {
            n_steps: n,
            tau,
            l1_gap: l1_distance(trajectory.final_density(), &target)?,
            linf_gap: linf_distance(trajectory.final_density(), &target)?,
            runtime_ms,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid1(m: usize) -> TorusGrid {
        TorusGrid::new(1, m).unwrap()
    }

    #[test]
    fn entropy_of_uniform_vanishes_exactly() {
        for grid in [grid1(16), TorusGrid::new(2, 8).unwrap()] {
            assert_eq!(entropy(&DensityField::uniform(grid)), 0.0);
        }
    }

    #[test]
    fn entropy_of_a_two_level_density_matches_the_closed_form() {
        // Alternating 1.5 / 0.5 on 8 nodes: ∫ρ log ρ = ½(1.5·ln 1.5 + 0.5·ln 0.5).
        let grid = grid1(8);
        let values: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.5 } else { 0.5 }).collect();
        let rho = DensityField::new(crate::torus::GridField::new(grid, values).unwrap()).unwrap();
        let expected = 0.5 * (1.5 * 1.5f64.ln() + 0.5 * 0.5f64.ln());
        assert_abs_diff_eq!(entropy(&rho), expected, epsilon = 1e-15);
    }

    #[test]
    fn entropy_decreases_along_the_heat_flow() {
        let grid = grid1(64);
        let rho = DensityField::cosine(grid, 0.6).unwrap();
        let s0 = entropy(&rho);
        let s1 = entropy(&heat_solve(&rho, 1e-3).unwrap());
        let s2 = entropy(&heat_solve(&rho, 1e-2).unwrap());
        assert!(s0 > s1 && s1 > s2, "{s0} / {s1} / {s2}");
        assert!(s2 > 0.0);
    }

    #[test]
    fn default_terminal_blur_takes_the_tightest_bound() {
        // τ/20 binds here: min(1e-4, 5e-5, (1/128)² ≈ 6.1e-5).
        assert_abs_diff_eq!(
            default_eps_terminal(1e-3, 1.0 / 128.0),
            5e-5,
            epsilon = 1e-18
        );
        // h² binds on fine grids once τ/20 passes it.
        assert_abs_diff_eq!(
            default_eps_terminal(1e-2, 1.0 / 128.0),
            1.0 / 16384.0,
            epsilon = 1e-18
        );
        // The 1e-4 cap binds for large τ on coarse grids.
        assert_abs_diff_eq!(default_eps_terminal(1.0, 1.0 / 16.0), 1e-4, epsilon = 1e-18);
    }

    #[test]
    fn one_step_tracks_the_heat_semigroup() {
        let grid = grid1(128);
        let rho = DensityField::cosine(grid, 0.5).unwrap();
        let tau = 1e-3;
        let step = jko_step(&rho, tau, &InnerSettings::default()).unwrap();
        let target = heat_solve(&rho, tau).unwrap();
        let gap = linf_distance(&step.density, &target).unwrap();
        assert!(
            gap <= 5e-4,
            "one-step sup gap {gap} exceeds the 5e-4 budget"
        );
        assert!(step.w2_sq > 0.0);
        assert!(step.solver.iterations > 0);
        assert_abs_diff_eq!(step.solver.eps_final, 5e-5, epsilon = 1e-18);
        assert!(step.solver.marginal_residual <= 1e-8);
    }

    #[test]
    fn one_step_strictly_decreases_the_entropy() {
        let grid = grid1(64);
        let rho = DensityField::random_trig(grid, 42, 3, 0.3).unwrap();
        let step = jko_step(&rho, 2e-3, &InnerSettings::default()).unwrap();
        assert!(step.entropy < entropy(&rho));
    }

    #[test]
    fn trajectory_diagnostics_are_complete_and_monotone() {
        let grid = grid1(64);
        let rho = DensityField::cosine(grid, 0.5).unwrap();
        let tau = 2e-3;
        let trajectory = run_trajectory(&rho, tau, 5, &InnerSettings::default()).unwrap();
        assert_eq!(trajectory.n_steps(), 5);
        assert_eq!(trajectory.densities().len(), 6);
        assert_eq!(trajectory.diagnostics().len(), 5);
        assert_abs_diff_eq!(trajectory.final_time(), 0.01, epsilon = 1e-15);
        let mut prev_entropy = entropy(&rho);
        for (idx, diag) in trajectory.diagnostics().iter().enumerate() {
            assert_eq!(diag.k, idx + 1);
            assert!(diag.w2_sq > 0.0);
            assert!(
                diag.entropy < prev_entropy,
                "entropy rose at step {}",
                diag.k
            );
            assert_abs_diff_eq!(
                diag.objective,
                0.5 * diag.w2_sq + tau * diag.entropy,
                epsilon = 1e-15
            );
            prev_entropy = diag.entropy;
        }
    }

    #[test]
    fn piecewise_constant_time_lookup_uses_floor_indexing() {
        let grid = grid1(32);
        let rho = DensityField::cosine(grid, 0.4).unwrap();
        let tau = 1e-3;
        let trajectory = run_trajectory(&rho, tau, 4, &InnerSettings::default()).unwrap();
        let same = |a: &DensityField, b: &DensityField| linf_distance(a, b).unwrap() == 0.0;
        assert!(same(
            trajectory.density_at_time(0.0).unwrap(),
            trajectory.initial()
        ));
        assert!(same(
            trajectory.density_at_time(0.5 * tau).unwrap(),
            trajectory.initial()
        ));
        assert!(same(
            trajectory.density_at_time(1.5 * tau).unwrap(),
            trajectory.density(1).unwrap()
        ));
        assert!(same(
            trajectory.density_at_time(4.0 * tau).unwrap(),
            trajectory.final_density()
        ));
        assert!(trajectory.density_at_time(-1e-9).is_err());
        assert!(trajectory.density_at_time(4.1 * tau).is_err());
    }

    #[test]
    fn failed_steps_carry_their_index() {
        let grid = grid1(32);
        let rho = DensityField::cosine(grid, 0.5).unwrap();
        let strict = InnerSettings {
            max_iters: 1,
            marginal_tol: 1e-15,
            ..InnerSettings::default()
        };
        let err = run_trajectory(&rho, 1e-3, 3, &strict).unwrap_err();
        match err {
            Error::StepFailed { k, source } => {
                assert_eq!(k, 1);
                assert!(matches!(*source, Error::NonConvergence { .. }));
            }
            other => panic!("expected a step failure, got {other:?}"),
        }
    }

    #[test]
    fn from_densities_validates_grids_and_supports_lookup() {
        let g = grid1(16);
        let a = DensityField::uniform(g);
        let b = DensityField::cosine(g, 0.3).unwrap();
        let t = JkoTrajectory::from_densities(0.1, vec![a.clone(), b]).unwrap();
        assert_eq!(t.n_steps(), 1);
        assert!(t.diagnostics().is_empty());
        let other = DensityField::uniform(grid1(32));
        assert!(JkoTrajectory::from_densities(0.1, vec![a, other]).is_err());
        assert!(JkoTrajectory::from_densities(0.1, vec![]).is_err());
    }

    #[test]
    fn two_dimensional_step_tracks_the_heat_semigroup_loosely() {
        let grid = TorusGrid::new(2, 64).unwrap();
        let rho = DensityField::cosine(grid, 0.4).unwrap();
        let tau = 1e-3;
        // A blur with √ε ≈ 0.6·h bridges the sub-cell displacements of a
        // small step without adding visible extra diffusion; the default
        // (5e-5 here) sits below the grid scale and under-transports.
        let settings = InnerSettings {
            eps_terminal: Some(1e-4),
            ..InnerSettings::default()
        };
        let step = jko_step(&rho, tau, &settings).unwrap();
        let target = heat_solve(&rho, tau).unwrap();
        let gap = linf_distance(&step.density, &target).unwrap();
        assert!(gap <= 2e-3, "2-D one-step sup gap {gap}");
        assert_eq!(step.solver.eps_final, 1e-4);
    }

    #[test]
    fn refinement_study_halves_the_endpoint_gap_with_tau() {
        // All step sizes stay above the grid mobility threshold
        // h/(2·max|∂ₓ log ρ|) ≈ 2.2e-3, so the endpoint gap is dominated by
        // the O(τ) scheme bias (measured 3.3e-2 / 1.8e-2 / 8.8e-3).
        let grid = grid1(64);
        let rho = DensityField::cosine(grid, 0.5).unwrap();
        let rows = convergence_study(&rho, 0.04, &[2, 4, 8], &InnerSettings::default()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_abs_diff_eq!(rows[0].tau, 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[2].tau, 0.005, epsilon = 1e-15);
        for pair in rows.windows(2) {
            assert!(
                pair[1].l1_gap < 0.65 * pair[0].l1_gap,
                "weak improvement: {} vs {}",
                pair[0].l1_gap,
                pair[1].l1_gap
            );
        }
        assert!(rows[2].l1_gap < 1e-2);
        assert!(rows.iter().all(|r| r.linf_gap >= r.l1_gap));
        assert!(rows.iter().all(|r| r.runtime_ms >= 0.0));
    }

    #[test]
    fn invalid_settings_are_rejected_up_front() {
        let rho = DensityField::uniform(grid1(16));
        let bad = InnerSettings {
            eps_factor: 1.5,
            ..InnerSettings::default()
        };
        assert!(jko_step(&rho, 1e-3, &bad).is_err());
        assert!(jko_step(&rho, 0.0, &InnerSettings::default()).is_err());
        assert!(run_trajectory(&rho, 1e-3, 0, &InnerSettings::default()).is_err());
        assert!(convergence_study(&rho, 0.0, &[2], &InnerSettings::default()).is_err());
        assert!(convergence_study(&rho, 0.1, &[], &InnerSettings::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn entropy_is_nonnegative_and_zero_only_for_uniform(seed in 0u64..1000) {
            let grid = grid1(32);
            let rho = DensityField::random_trig(grid, seed, 3, 0.3).unwrap();
            let s = entropy(&rho);
            prop_assert!(s >= -1e-12);
            let spread = rho.max_value() - rho.min_value();
            if spread > 1e-6 {
                prop_assert!(s > 0.0);
            }
        }
    }
}
