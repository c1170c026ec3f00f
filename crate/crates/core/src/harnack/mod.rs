//! Inequality checks on proximal trajectories.
//!
//! A positive solution of the heat equation satisfies a matrix differential
//! Harnack bound — a uniform lower bound ∇²log u ≥ −(C/t)·I with ½ ≤ C ≤ 1 —
//! and, as a consequence, a pointwise two-time comparison
//!
//! ```text
//! u_{t1}(x) ≤ ((t2+τ)/t1)^n · exp(d²(x,y)/(2(t2−t1−τ))) · u_{t2}(y).
//! ```
//!
//! This module verifies the whole discrete chain behind those statements on
//! computed trajectories:
//!
//! * [`check_diff_harnack`] — per-step Hessian lower bounds
//!   a_k ≥ −C/(τ(k+1)) with a_k the global minimum eigenvalue of ∇²log ρ_k,
//!   plus the empirically smallest feasible constant;
//! * [`check_recursion`] — the one-step recursion tying a_{k−1} to a_k that
//!   propagates the bound, (1 − √(1 − 4τ·a_{k−1}))/2 ≤ τ·a_k/(1 + τ·a_k);
//! * [`scalar_threshold_equivalence`] — the scalar fact that the recursion's
//!   fixed-point inequality holds exactly for k ≥ (1−C)²/(2C−1);
//! * [`check_step_harnack`] — the single-step pointwise comparison
//!   ρ_{k−1}(x) ≤ ((k+1)/(k+1−C))^n · exp(d²(x,y)/(2τ)) · ρ_k(y);
//! * [`check_harnack_pair`] — the two-time comparison above on sampled
//!   space-time tuples;
//! * [`check_chain_consistency`] — the telescoping argument: per-step bounds
//!   chained along a minimizing geodesic imply the two-time bound.
//!
//! All checks are pure functions over immutable trajectories; per-pair work
//! is data-parallel with a deterministic aggregation order.

mod diff;
mod pointwise;

pub use diff::{
    check_diff_harnack, check_recursion, scalar_threshold_equivalence, DiffHarnackReport,
    DiffHarnackRow, RecursionReport, RecursionRow, ThresholdRow, ThresholdTable,
};
pub use pointwise::{
    check_chain_consistency, check_harnack_pair, check_step_harnack, ChainCheckRow, HarnackReport,
    HarnackSamples, HarnackTuple, PairVerdict, StepHarnackReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jko::JkoTrajectory;
use crate::torus::{hessian, min_eig_stats, TorusGrid};

/// Default constant in the Hessian lower bound; the admissible range is
/// [½, 1] and C = 1 gives threshold (1−C)²/(2C−1) = 0, so the bound holds
/// from the first step.
pub const DEFAULT_C: f64 = 1.0;

/// Default multiplicative slack for pointwise comparisons, absorbing the
/// O(h²) discretization error of the fields being compared.
pub const DEFAULT_TOL_REL: f64 = 1e-3;

/// Node-set ceiling below which sampling defaults to the full grid.
pub const MAX_FULL_NODES: usize = 4096;

const STRIDED_PER_DIM: usize = 16;

/// Spatial sampling strategy for pointwise checks.
///
/// `Auto` uses every node when the grid has at most [`MAX_FULL_NODES`] of
/// them and falls back to a deterministic stride of 16 nodes per dimension
/// otherwise; exhaustive where cheap, reproducible where not.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSampling {
    Auto,
    Full,
    Strided { per_dim: usize },
}

impl Default for NodeSampling {
    fn default() -> Self {
        NodeSampling::Auto
    }
}

impl NodeSampling {
    /// Resolves the strategy to a sorted list of node indices.
    pub fn select(&self, grid: TorusGrid) -> Result<Vec<usize>> {
        match *self {
            NodeSampling::Auto => {
                if grid.num_nodes() <= MAX_FULL_NODES {
                    Ok((0..grid.num_nodes()).collect())
                } else {
                    strided_nodes(grid, STRIDED_PER_DIM)
                }
            }
            NodeSampling::Full => Ok((0..grid.num_nodes()).collect()),
            NodeSampling::Strided { per_dim } => strided_nodes(grid, per_dim),
        }
    }
}

fn strided_nodes(grid: TorusGrid, per_dim: usize) -> Result<Vec<usize>> {
    if per_dim == 0 {
        return Err(Error::InvalidInput(
            "strided sampling needs at least one node per dimension".into(),
        ));
    }
    let m = grid.points_per_dim();
    let stride = (m / per_dim.min(m)).max(1);
    let axis: Vec<usize> = (0..m).step_by(stride).collect();
    let nodes = match grid.dim() {
        1 => axis,
        _ => {
            let mut nodes = Vec::with_capacity(axis.len() * axis.len());
            for &i in &axis {
                for &j in &axis {
                    nodes.push(grid.node_index([i, j]));
                }
            }
            nodes
        }
    };
    Ok(nodes)
}

/// Global minimum eigenvalue of ∇²log ρ_k for every density in the
/// trajectory, k = 0..=n_steps.
pub fn hessian_log_min_eigs(traj: &JkoTrajectory) -> Vec<f64> {
    traj.densities()
        .iter()
        .map(|rho| min_eig_stats(&hessian(&rho.log_field())).global_min)
        .collect()
}

fn validate_c(c: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&c) {
        return Err(Error::InvalidInput(format!(
            "the Harnack constant must lie in [1/2, 1], got {c}"
        )));
    }
    Ok(())
}

fn validate_tol(tol: f64, name: &str) -> Result<()> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "{name} must be nonnegative, got {tol}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_sampling_is_exhaustive_on_small_grids() {
        let grid = TorusGrid::new(1, 128).unwrap();
        let nodes = NodeSampling::Auto.select(grid).unwrap();
        assert_eq!(nodes.len(), 128);
        assert_eq!(nodes[0], 0);
        assert_eq!(nodes[127], 127);

        let grid2 = TorusGrid::new(2, 64).unwrap();
        assert_eq!(NodeSampling::Auto.select(grid2).unwrap().len(), 4096);
    }

    #[test]
    fn auto_sampling_strides_large_grids() {
        let grid = TorusGrid::new(2, 128).unwrap();
        let nodes = NodeSampling::Auto.select(grid).unwrap();
        assert_eq!(nodes.len(), 16 * 16);
        // Accepted nodes sit on the stride-8 sublattice.
        for &node in &nodes {
            let multi = grid.multi_index(node);
            assert_eq!(multi[0] % 8, 0);
            assert_eq!(multi[1] % 8, 0);
        }
    }

    #[test]
    fn explicit_strides_and_degenerate_inputs() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let nodes = NodeSampling::Strided { per_dim: 16 }.select(grid).unwrap();
        assert_eq!(nodes.len(), 16);
        assert_eq!(nodes[1], 4);
        assert!(NodeSampling::Strided { per_dim: 0 }.select(grid).is_err());
        // Requesting more nodes per dimension than exist degrades to full.
        let all = NodeSampling::Strided { per_dim: 1000 }
            .select(grid)
            .unwrap();
        assert_eq!(all.len(), 64);
        assert_eq!(NodeSampling::Full.select(grid).unwrap().len(), 64);
    }
}
