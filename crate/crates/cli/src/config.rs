//! Run configuration: one JSON document describes the grid, the proximal
//! run, the initial density ρ₀, the checks to execute, and their pass
//! thresholds. Unknown keys are rejected so an archived config stays the
//! authoritative record of what produced a directory of artifacts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use jkolab::jko::InnerSettings;
use jkolab::torus::{DensityField, TorusGrid};
use serde::{Deserialize, Serialize};

use crate::{config_err, CliError, Result};

fn default_harnack_constant() -> f64 {
    1.0
}

fn default_ladder() -> Vec<usize> {
    vec![4, 8, 16, 32]
}

/// Everything one experiment needs, parseable from a single JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Total time horizon K > 0; the proximal step size is τ = K/N.
    pub horizon: f64,
    /// Number of proximal steps N ≥ 1.
    pub n_steps: usize,
    /// Torus dimension n ∈ {1, 2}.
    pub dim: usize,
    /// Grid nodes per dimension M.
    pub points_per_dim: usize,
    /// Inner entropic-solver settings.
    #[serde(default)]
    pub solver: SolverConfig,
    /// Initial density ρ₀.
    pub initial: InitialDensity,
    /// Checks to run against the finished trajectory, in the listed order.
    #[serde(default)]
    pub checks: Vec<CheckName>,
    /// Constant C ∈ [1/2, 1] of the log-density Hessian bound −C/(τ(k+1)).
    #[serde(default = "default_harnack_constant")]
    pub harnack_constant: f64,
    /// Pass thresholds for the individual checks.
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Strictly increasing step counts for the convergence ladder.
    #[serde(default = "default_ladder")]
    pub convergence_ladder: Vec<usize>,
    /// Directory receiving every artifact of this run.
    pub output_dir: PathBuf,
    /// Seed for generated transport self-test instances.
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Reads and validates a configuration document.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: Self = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Proximal step size τ = K/N.
    pub fn tau(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Builds the configured grid.
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.points_per_dim).map_err(config_err)
    }

    /// Rejects values that can never drive a run, so that misconfiguration
    /// surfaces as a usage error instead of a mid-run failure.
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(CliError::Config(format!(
                "horizon must be a positive real, got {}",
                self.horizon
            )));
        }
        if self.n_steps == 0 {
            return Err(CliError::Config("n_steps must be at least 1".into()));
        }
        self.grid()?;
        if !(self.harnack_constant.is_finite()
            && (0.5..=1.0).contains(&self.harnack_constant))
        {
            return Err(CliError::Config(format!(
                "harnack_constant must lie in [0.5, 1], got {}",
                self.harnack_constant
            )));
        }
        self.solver.validate()?;
        self.tolerances.validate()?;
        if self.convergence_ladder.is_empty() {
            return Err(CliError::Config("convergence_ladder must not be empty".into()));
        }
        if self.convergence_ladder[0] == 0 {
            return Err(CliError::Config("convergence_ladder entries must be at least 1".into()));
        }
        if self.convergence_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!(
                "convergence_ladder must be strictly increasing, got {:?}",
                self.convergence_ladder
            )));
        }
        Ok(())
    }
}

/// Inner-solver settings in JSON-friendly form; absent fields take the
/// library defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// First rung of the geometric ε ladder.
    pub eps_start: f64,
    /// Ladder decay factor in (0, 1).
    pub eps_factor: f64,
    /// Last rung; `null` selects the τ- and grid-aware default.
    pub eps_terminal: Option<f64>,
    /// Scaling-round budget per rung.
    pub max_iters: usize,
    /// L¹ defect of the prescribed marginal at which a rung has converged.
    pub marginal_tol: f64,
    /// Replace the scaling solver by the direct small-grid minimizer.
    pub oracle_mode: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = InnerSettings::default();
        Self {
            eps_start: s.eps_start,
            eps_factor: s.eps_factor,
            eps_terminal: s.eps_terminal,
            max_iters: s.max_iters,
            marginal_tol: s.marginal_tol,
            oracle_mode: s.oracle_mode,
        }
    }
}

impl SolverConfig {
    /// The core solver settings this configuration describes.
    pub fn to_settings(&self) -> InnerSettings {
        InnerSettings {
            eps_start: self.eps_start,
            eps_factor: self.eps_factor,
            eps_terminal: self.eps_terminal,
            max_iters: self.max_iters,
            marginal_tol: self.marginal_tol,
            oracle_mode: self.oracle_mode,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps_start.is_finite() && self.eps_start > 0.0) {
            return Err(CliError::Config(format!(
                "solver.eps_start must be positive, got {}",
                self.eps_start
            )));
        }
        if !(self.eps_factor.is_finite() && 0.0 < self.eps_factor && self.eps_factor < 1.0) {
            return Err(CliError::Config(format!(
                "solver.eps_factor must lie in (0, 1), got {}",
                self.eps_factor
            )));
        }
        if let Some(eps) = self.eps_terminal {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(CliError::Config(format!(
                    "solver.eps_terminal must be positive when set, got {eps}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(CliError::Config("solver.max_iters must be at least 1".into()));
        }
        if !(self.marginal_tol.is_finite() && self.marginal_tol > 0.0) {
            return Err(CliError::Config(format!(
                "solver.marginal_tol must be positive, got {}",
                self.marginal_tol
            )));
        }
        Ok(())
    }
}

/// Closed-form initial density families.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "family", rename_all = "kebab-case")]
pub enum InitialDensity {
    /// ρ₀ ≡ 1.
    Uniform,
    /// 1 + a·cos(2πx) in one dimension, 1 + a·cos(2πx)cos(2πy) in two.
    Cosine { amplitude: f64 },
    /// Seeded random positive trigonometric polynomial with modes up to
    /// `max_mode` and minimum value at least `margin`.
    RandomTrig { seed: u64, max_mode: usize, margin: f64 },
}

impl InitialDensity {
    /// Samples this family on `grid`; invalid parameters surface as
    /// configuration errors.
    pub fn build(&self, grid: TorusGrid) -> Result<DensityField> {
        match *self {
            InitialDensity::Uniform => Ok(DensityField::uniform(grid)),
            InitialDensity::Cosine { amplitude } => {
                DensityField::cosine(grid, amplitude).map_err(config_err)
            }
            InitialDensity::RandomTrig {
                seed,
                max_mode,
                margin,
            } => DensityField::random_trig(grid, seed, max_mode, margin).map_err(config_err),
        }
    }
}

/// The check suites a run can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    /// Log-density Hessian lower bound −C/(τ(k+1)) on every step.
    DiffHarnack,
    /// Two-time pointwise comparison over sampled space-time tuples.
    Harnack,
    /// Step-over-step eigenvalue recursion.
    Recursion,
    /// Change-of-variables residual maxima per step.
    MaResidual,
    /// First-order-optimality residual maxima per step.
    Optimality,
    /// Envelope inequality and attainment identities per step.
    Ctransform,
    /// L¹ gap ladder against the spectral heat solution.
    Convergence,
    /// Transport solvers against exact references on small instances.
    OtSelftest,
}

impl CheckName {
    /// The configuration spelling of this check.
    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::DiffHarnack => "diff-harnack",
            CheckName::Harnack => "harnack",
            CheckName::Recursion => "recursion",
            CheckName::MaResidual => "ma-residual",
            CheckName::Optimality => "optimality",
            CheckName::Ctransform => "ctransform",
            CheckName::Convergence => "convergence",
            CheckName::OtSelftest => "ot-selftest",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pass thresholds for the individual checks; defaults match the desk-scale
/// reference experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Absolute slack for the Hessian lower bound.
    pub diff_harnack_abs: f64,
    /// Relative slack (fraction of |bound|) for the Hessian lower bound.
    pub diff_harnack_rel: f64,
    /// Absolute slack for the eigenvalue recursion.
    pub recursion_abs: f64,
    /// Relative slack for two-time pointwise ratios.
    pub harnack_rel: f64,
    /// Ceiling on the change-of-variables residual maximum.
    pub ma_ceiling: f64,
    /// Ceiling on the first-order-optimality residual maximum.
    pub optimality_ceiling: f64,
    /// Ceiling on envelope inequality and attainment defects.
    pub ctransform: f64,
    /// Agreement band between entropic and exact transport values.
    pub ot_gap: f64,
    /// Allowed upward wiggle along the convergence ladder.
    pub convergence_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            diff_harnack_abs: 0.0,
            diff_harnack_rel: 1e-3,
            recursion_abs: 1e-6,
            harnack_rel: 1e-3,
            ma_ceiling: 1e-2,
            optimality_ceiling: 2e-2,
            ctransform: 1e-12,
            ot_gap: 1e-3,
            convergence_slack: 1e-9,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let named = [
            ("diff_harnack_abs", self.diff_harnack_abs),
            ("diff_harnack_rel", self.diff_harnack_rel),
            ("recursion_abs", self.recursion_abs),
            ("harnack_rel", self.harnack_rel),
            ("ma_ceiling", self.ma_ceiling),
            ("optimality_ceiling", self.optimality_ceiling),
            ("ctransform", self.ctransform),
            ("ot_gap", self.ot_gap),
            ("convergence_slack", self.convergence_slack),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value >= 0.0) {
                return Err(CliError::Config(format!(
                    "tolerances.{name} must be a nonnegative real, got {value}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "horizon": 0.05,
            "n_steps": 32,
            "dim": 1,
            "points_per_dim": 128,
            "initial": {"family": "cosine", "amplitude": 0.5},
            "checks": ["diff-harnack", "ma-residual"],
            "output_dir": "out"
        })
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: ExperimentConfig =
            serde_json::from_value(minimal_json()).expect("minimal config");
        config.validate().expect("valid");
        assert_eq!(config.tau(), 0.05 / 32.0);
        assert_eq!(config.harnack_constant, 1.0);
        assert_eq!(config.convergence_ladder, vec![4, 8, 16, 32]);
        assert_eq!(config.solver.max_iters, InnerSettings::default().max_iters);
        assert_eq!(
            config.checks,
            vec![CheckName::DiffHarnack, CheckName::MaResidual]
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut doc = minimal_json();
        doc["horzion"] = serde_json::json!(0.1);
        let err = serde_json::from_value::<ExperimentConfig>(doc).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");

        let mut doc = minimal_json();
        doc["solver"] = serde_json::json!({"eps_begin": 0.1});
        let err = serde_json::from_value::<ExperimentConfig>(doc).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn check_names_use_kebab_case() {
        assert_eq!(
            serde_json::to_string(&CheckName::MaResidual).unwrap(),
            "\"ma-residual\""
        );
        assert_eq!(
            serde_json::from_str::<CheckName>("\"ot-selftest\"").unwrap(),
            CheckName::OtSelftest
        );
        assert_eq!(CheckName::DiffHarnack.to_string(), "diff-harnack");
    }

    #[test]
    fn semantic_validation_rejects_bad_values() {
        let mut config: ExperimentConfig = serde_json::from_value(minimal_json()).unwrap();
        config.harnack_constant = 0.4;
        assert!(matches!(config.validate(), Err(CliError::Config(_))));

        let mut config: ExperimentConfig = serde_json::from_value(minimal_json()).unwrap();
        config.convergence_ladder = vec![8, 8];
        assert!(matches!(config.validate(), Err(CliError::Config(_))));

        let mut config: ExperimentConfig = serde_json::from_value(minimal_json()).unwrap();
        config.solver.eps_factor = 1.0;
        assert!(matches!(config.validate(), Err(CliError::Config(_))));

        let mut config: ExperimentConfig = serde_json::from_value(minimal_json()).unwrap();
        config.dim = 3;
        assert!(matches!(config.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn density_families_round_trip_and_build() {
        let grid = TorusGrid::new(1, 16).unwrap();
        for doc in [
            serde_json::json!({"family": "uniform"}),
            serde_json::json!({"family": "cosine", "amplitude": 0.3}),
            serde_json::json!({"family": "random-trig", "seed": 7, "max_mode": 3, "margin": 0.3}),
        ] {
            let family: InitialDensity = serde_json::from_value(doc.clone()).unwrap();
            let rho = family.build(grid).expect("buildable family");
            assert!((rho.mass() - 1.0).abs() <= 1e-9);
            assert_eq!(serde_json::to_value(&family).unwrap(), doc);
        }

        let bad: InitialDensity =
            serde_json::from_value(serde_json::json!({"family": "cosine", "amplitude": 1.5}))
                .unwrap();
        assert!(matches!(bad.build(grid), Err(CliError::Config(_))));
    }
}
