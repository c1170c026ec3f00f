//! Quadratic-cost optimal transport on the torus: exact small-instance
//! solvers, a balanced transportation LP, entropic scaling iterations, and
//! the c-transform with its identity checks.
//!
//! Conventions. The *cost matrix* carries c(x, y) = ½·d²(x, y) (half squared
//! torus distance) — the integrand of the proximal functional and of the
//! infimal convolution f(x) = (1/τ)·min_y [½d²(x,y) + τ·g(y)]. Reported
//! transport *values*, however, are always the squared Wasserstein distance
//! W₂² = Σ γ_ij d²_ij (no ½), so the two conventions differ by the factor 2
//! exactly where the formulas do.

mod ctransform;
mod exact;
pub mod lp;
pub(crate) mod sinkhorn;

pub use ctransform::{
    c_transform, hessian_transfer_residual, potential_psd_margin, verify_ctransform_identities,
    CTransformCheck, CTransformField, HessianTransferResidual,
};
pub use exact::{w2_exact_small, DiscreteMeasure, MAX_EXACT_ATOMS};
pub use sinkhorn::{
    geometric_schedule, sinkhorn, sinkhorn_with_mode, SinkhornMode, SinkhornOutput,
    LOG_DOMAIN_THRESHOLD,
};

use crate::error::{Error, Result};
use crate::torus::{torus_distance_sq, Point, TorusGrid};

/// Largest node count for which dense all-pairs objects (cost matrices,
/// materialized plans) may be built; beyond this, operations must stay
/// factored or sparse.
pub const MAX_DENSE_NODES: usize = 4096;

/// Dense matrix of half squared distances c_ij = ½·d²(x_i, y_j).
#[derive(Clone, Debug)]
pub struct CostMatrix {
    n_sources: usize,
    n_targets: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    /// Builds the cost between two explicit point sets of dimension `dim`.
    pub fn from_points(dim: usize, sources: &[Point], targets: &[Point]) -> Self {
        let mut entries = Vec::with_capacity(sources.len() * targets.len());
        for x in sources {
            for y in targets {
                entries.push(0.5 * torus_distance_sq(&x[..dim], &y[..dim]));
            }
        }
        Self {
            n_sources: sources.len(),
            n_targets: targets.len(),
            entries,
        }
    }

    /// All-pairs cost over the nodes of a grid (symmetric, zero diagonal).
    pub fn from_grid(grid: TorusGrid) -> Result<Self> {
        let n = grid.num_nodes();
        if n > MAX_DENSE_NODES {
            return Err(Error::InstanceTooLarge {
                atoms: n,
                limit: MAX_DENSE_NODES,
            });
        }
        let points: Vec<Point> = (0..n).map(|i| grid.coords(i)).collect();
        Ok(Self::from_points(grid.dim(), &points, &points))
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    /// Half squared distance between source `i` and target `j`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_targets + j]
    }
}

/// Sparse coupling between a source and a target measure, with its cost.
///
/// `entries` hold strictly positive masses in row-major (i, then j) order;
/// `cost_value` is Σ γ_ij·d²_ij — the squared Wasserstein distance when the
/// plan is optimal.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub n_sources: usize,
    pub n_targets: usize,
    pub entries: Vec<PlanEntry>,
    pub source_masses: Vec<f64>,
    pub target_masses: Vec<f64>,
    pub cost_value: f64,
}

/// One coupling triplet: mass moved from source `i` to target `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanEntry {
    pub i: u32,
    pub j: u32,
    pub mass: f64,
}

impl TransportPlan {
    /// Row sums Σ_j γ_ij.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_sources];
        for e in &self.entries {
            sums[e.i as usize] += e.mass;
        }
        sums
    }

    /// Column sums Σ_i γ_ij.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_targets];
        for e in &self.entries {
            sums[e.j as usize] += e.mass;
        }
        sums
    }

    /// L1 defects of the two marginals against the stored masses:
    /// (Σ_i |rowsum_i − a_i|, Σ_j |colsum_j − b_j|).
    pub fn marginal_defects(&self) -> (f64, f64) {
        let row: f64 = self
            .row_sums()
            .iter()
            .zip(&self.source_masses)
            .map(|(s, a)| (s - a).abs())
            .sum();
        let col: f64 = self
            .col_sums()
            .iter()
            .zip(&self.target_masses)
            .map(|(s, b)| (s - b).abs())
            .sum();
        (row, col)
    }

    /// Largest of the two L1 marginal defects.
    pub fn marginal_violation(&self) -> f64 {
        let (r, c) = self.marginal_defects();
        r.max(c)
    }

    /// Checks nonnegativity and both marginals within `tol` (L1).
    pub fn validate(&self, tol: f64) -> Result<()> {
        if let Some(e) = self.entries.iter().find(|e| e.mass < 0.0) {
            return Err(Error::InvalidInput(format!(
                "plan entry ({}, {}) carries negative mass {}",
                e.i, e.j, e.mass
            )));
        }
        let violation = self.marginal_violation();
        if violation > tol {
            return Err(Error::NonConvergence {
                iterations: 0,
                residual: violation,
                tolerance: tol,
            });
        }
        Ok(())
    }
}
