//! Structural residuals of a converged proximal step.
//!
//! For a true minimizer ρ_next of ½W₂²(ρ_prev, ·) + τ·∫ρ log ρ, the optimal
//! map from ρ_next back to ρ_prev is x ↦ x + τ∇log ρ_next(x), and the
//! Jacobian change-of-variables identity
//!
//! ```text
//! ρ_next(x) = ρ_prev(x + τ∇L(x)) · det(I + τ∇²L(x)),   L = log ρ_next
//! ```
//!
//! holds pointwise. [`monge_ampere_residual`] measures its defect on the
//! grid (and, for contrast, the same expression with the roles of the two
//! densities swapped, which is *not* an identity and stays O(τ²) at best).
//!
//! Equivalently, with f the proximal envelope of L (see the transport
//! module), first-order optimality pins f against the previous density:
//!
//! ```text
//! f − log ρ_prev + log det(I − τ∇²f) − (τ/2)|∇f|² = 0 ,
//! ```
//!
//! with no free additive constant. [`optimality_residual`] measures that
//! defect using the polished envelope and finite-difference derivatives.

use crate::error::{Error, Result};
use crate::torus::{gradient, hessian, interp_scalar, wrap_unit, DensityField, GridField};
use crate::transport::c_transform;

/// Pointwise defect of the change-of-variables identity.
#[derive(Clone, Debug)]
pub struct MaResidual {
    /// |ρ_next − ρ_prev∘φ · det(I + τ∇²log ρ_next)| per node.
    pub residuals: GridField,
    pub max_residual: f64,
    pub argmax_node: usize,
    /// Same expression with the densities' roles swapped — reported for
    /// contrast, not expected to vanish.
    pub mirrored_max: f64,
}

/// Pointwise defect of the envelope optimality identity.
#[derive(Clone, Debug)]
pub struct OptimalityResidual {
    pub residuals: GridField,
    pub max_residual: f64,
    pub argmax_node: usize,
    /// Envelope nodes where Newton polishing fell back to the scanned value.
    pub polish_failures: usize,
}

/// Measures the change-of-variables defect between consecutive densities.
///
/// Fails with a non-orientation-preserving report when `I + τ∇²log ρ_next`
/// loses positivity at any node, since the forward map is then no longer a
/// diffeomorphism on the resolved scales.
pub fn monge_ampere_residual(
    prev: &DensityField,
    next: &DensityField,
    tau: f64,
) -> Result<MaResidual> {
    let grid = common_grid(prev, next, tau)?;
    let ln_next = next.log_field();
    let grad_next = gradient(&ln_next);
    let hess_next = hessian(&ln_next);

    for i in 0..grid.num_nodes() {
        let eig = hess_next.at(i).identity_plus_scaled(tau).min_eig();
        if eig <= 0.0 {
            return Err(Error::MapNotOrientationPreserving {
                node: i,
                min_eig: eig,
            });
        }
    }

    let dim = grid.dim();
    let mut residuals = Vec::with_capacity(grid.num_nodes());
    let mut max_residual = 0.0f64;
    let mut argmax_node = 0usize;
    for i in 0..grid.num_nodes() {
        let x = grid.coords(i);
        let mut image = [0.0f64; 2];
        for d in 0..dim {
            image[d] = wrap_unit(x[d] + tau * grad_next.at(i)[d]);
        }
        let det = hess_next.at(i).identity_plus_scaled(tau).det();
        let pulled = interp_scalar(prev.as_field(), &image[..dim]);
        let defect = (next.value(i) - pulled * det).abs();
        if defect > max_residual {
            max_residual = defect;
            argmax_node = i;
        }
        residuals.push(defect);
    }

    // Swapped roles, computed without any positivity precondition.
    let ln_prev = prev.log_field();
    let grad_prev = gradient(&ln_prev);
    let hess_prev = hessian(&ln_prev);
    let mut mirrored_max = 0.0f64;
    for i in 0..grid.num_nodes() {
        let x = grid.coords(i);
        let mut image = [0.0f64; 2];
        for d in 0..dim {
            image[d] = wrap_unit(x[d] + tau * grad_prev.at(i)[d]);
        }
        let det = hess_prev.at(i).identity_plus_scaled(tau).det();
        let pulled = interp_scalar(next.as_field(), &image[..dim]);
        mirrored_max = mirrored_max.max((prev.value(i) - pulled * det).abs());
    }

    Ok(MaResidual {
        residuals: GridField::new(grid, residuals)?,
        max_residual,
        argmax_node,
        mirrored_max,
    })
}

/// Measures the envelope optimality defect of a step pair.
///
/// Fails with a degenerate-potential report when `I − τ∇²f` loses positivity
/// at any node (the log-determinant is then undefined).
pub fn optimality_residual(
    prev: &DensityField,
    next: &DensityField,
    tau: f64,
) -> Result<OptimalityResidual> {
    let grid = common_grid(prev, next, tau)?;
    let envelope = c_transform(&next.log_field(), tau)?;
    let f = &envelope.f_smooth;
    let grad_f = gradient(f);
    let hess_f = hessian(f);
    let ln_prev = prev.log_field();

    let mut residuals = Vec::with_capacity(grid.num_nodes());
    let mut max_residual = 0.0f64;
    let mut argmax_node = 0usize;
    for i in 0..grid.num_nodes() {
        let contraction = hess_f.at(i).identity_plus_scaled(-tau);
        let det = contraction.det();
        let eig = contraction.min_eig();
        if eig <= 0.0 {
            return Err(Error::DegeneratePotential {
                node: i,
                min_eig: eig,
            });
        }
        let defect = f.value(i) - ln_prev.value(i) + det.ln() - 0.5 * tau * grad_f.norm_sq(i);
        let defect = defect.abs();
        if defect > max_residual {
            max_residual = defect;
            argmax_node = i;
        }
        residuals.push(defect);
    }

    Ok(OptimalityResidual {
        residuals: GridField::new(grid, residuals)?,
        max_residual,
        argmax_node,
        polish_failures: envelope.polish_failures,
    })
}

fn common_grid(
    prev: &DensityField,
    next: &DensityField,
    tau: f64,
) -> Result<crate::torus::TorusGrid> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {tau}"
        )));
    }
    if prev.grid() != next.grid() {
        return Err(Error::GridMismatch(
            "step pair lives on different grids".into(),
        ));
    }
    Ok(prev.grid())
}
