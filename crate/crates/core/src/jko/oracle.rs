//! Exact-transport oracle for one proximal step on tiny grids.
//!
//! Minimizes G(q) = ½·W₂²(p, q) + τ·Σ q log(q/hⁿ) directly over the simplex
//! of node masses by mirror descent (exponentiated gradient): every
//! evaluation solves the transport linear program exactly, and the dual
//! prices of the target marginals supply the gradient of the ½W₂² term.
//! Entropic smoothing never enters, which makes this path an independent
//! check of the scaling solver.

use crate::error::{Error, Result};
use crate::torus::{torus_distance_sq, DensityField};
use crate::transport::lp::solve_transport_lp;

use super::{entropy, InnerSettings, SolverStats, StepSolution};

/// Node ceiling: every iteration solves a dense LP over node pairs.
pub const MAX_ORACLE_NODES: usize = 64;

/// Stationarity target: spread of the KKT multipliers across nodes.
const STATIONARITY_TOL: f64 = 1e-10;
const MAX_OUTER: usize = 2000;
const MIN_STEP: f64 = 1e-12;

pub(super) fn mirror_descent_step(
    prev: &DensityField,
    tau: f64,
    _settings: &InnerSettings,
) -> Result<StepSolution> {
    let grid = prev.grid();
    let nodes = grid.num_nodes();
    if nodes > MAX_ORACLE_NODES {
        return Err(Error::InstanceTooLarge {
            atoms: nodes,
            limit: MAX_ORACLE_NODES,
        });
    }
    let dim = grid.dim();
    let hn = grid.cell_volume();
    let points: Vec<_> = (0..nodes).map(|i| grid.coords(i)).collect();
    let cost = |i: usize, j: usize| torus_distance_sq(&points[i][..dim], &points[j][..dim]);

    let p = prev.masses();
    let mut q = p.clone();

    // Objective value and gradient at q; the gradient of ½W₂² in the target
    // marginal is half the dual price vector of the column constraints.
    let evaluate = |q: &[f64]| -> Result<(f64, f64, Vec<f64>)> {
        let lp = solve_transport_lp(&p, q, cost)?;
        let ent: f64 = q.iter().map(|&m| m * (m / hn).ln()).sum();
        let objective = 0.5 * lp.value + tau * ent;
        let grad = lp
            .col_potentials
            .iter()
            .zip(q)
            .map(|(&beta, &m)| 0.5 * beta + tau * ((m / hn).ln() + 1.0))
            .collect();
        Ok((objective, lp.value, grad))
    };

    let (mut objective, mut w2_sq, mut grad) = evaluate(&q)?;
    let mut eta = 1.0;
    let mut accepted = 0usize;
    let mut stationarity = stationarity_gap(&q, &grad);

    for _ in 0..MAX_OUTER {
        if stationarity <= STATIONARITY_TOL {
            break;
        }
        // Exponentiated-gradient trial with renormalization, backtracking on
        // the exact objective.
        let mut improved = false;
        while eta >= MIN_STEP {
            let mut trial: Vec<f64> = q
                .iter()
                .zip(&grad)
                .map(|(&m, &g)| m * (-eta * (g - grad[0])).exp())
                .collect();
            let total: f64 = trial.iter().sum();
            for t in trial.iter_mut() {
                *t /= total;
            }
            let (trial_obj, trial_w2, trial_grad) = evaluate(&trial)?;
            if trial_obj < objective - 1e-16 {
                q = trial;
                objective = trial_obj;
                w2_sq = trial_w2;
                grad = trial_grad;
                accepted += 1;
                improved = true;
                eta *= 1.5;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
        stationarity = stationarity_gap(&q, &grad);
    }

    let values: Vec<f64> = q.iter().map(|&m| m / hn).collect();
    let density = DensityField::normalized(grid, values)?;
    Ok(StepSolution {
        entropy: entropy(&density),
        density,
        w2_sq,
        solver: SolverStats {
            iterations: accepted,
            eps_final: 0.0,
            marginal_residual: stationarity,
        },
    })
}

/// KKT defect on the simplex: the gradient must be constant across nodes
/// (all masses stay interior thanks to the entropy term), so the mass-weighted
/// spread around the mean multiplier measures distance from stationarity.
fn stationarity_gap(q: &[f64], grad: &[f64]) -> f64 {
    let mean: f64 = q.iter().zip(grad).map(|(&m, &g)| m * g).sum();
    grad.iter()
        .zip(q)
        .map(|(&g, &m)| m * (g - mean).abs())
        .sum()
}
