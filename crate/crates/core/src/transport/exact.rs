//! Exact optimal transport for small discrete instances.
//!
//! Two exhaustive strategies, chosen by instance shape:
//! * equal atom counts with equal masses → brute force over all assignments
//!   (every extreme coupling is a permutation matrix in this case);
//! * anything else → depth-first enumeration of the transport polytope's
//!   vertices by recursive mass splitting (repeatedly pick a live
//!   source–target pair and move the largest feasible mass), with a
//!   row-completion lower bound pruning the search.
//!
//! Values are the squared Wasserstein distance Σ γ_ij·d²_ij (no ½ factor).

use crate::error::{Error, Result};
use crate::torus::{torus_distance_sq, wrap_unit, DensityField, Point, MAX_DIM};

use super::{PlanEntry, TransportPlan};

/// Atom-count ceiling for the exhaustive paths.
pub const MAX_EXACT_ATOMS: usize = 8;

/// Mass-balance tolerance for exact transport.
const MASS_TOL: f64 = 1e-12;

/// Finitely supported nonnegative measure on the torus.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Point>,
    masses: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates dimension, wraps coordinates into [0, 1), and requires
    /// nonnegative masses with positive total.
    pub fn new(dim: usize, points: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "measure dimension must be 1 or 2, got {dim}"
            )));
        }
        if points.len() != masses.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} masses",
                points.len(),
                masses.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("measure has no atoms".into()));
        }
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0)) {
            return Err(Error::InvalidInput(format!("negative atom mass {m}")));
        }
        let wrapped = points
            .iter()
            .map(|p| {
                let mut q = [0.0; MAX_DIM];
                for d in 0..dim {
                    q[d] = wrap_unit(p[d]);
                }
                q
            })
            .collect();
        Ok(Self {
            dim,
            points: wrapped,
            masses,
        })
    }

    /// Uniform measure (equal masses summing to 1) on the given points.
    pub fn uniform_on(dim: usize, points: Vec<Point>) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let masses = vec![w; points.len()];
        Self::new(dim, points, masses)
    }

    /// A single unit-mass atom.
    pub fn dirac(dim: usize, point: Point) -> Result<Self> {
        Self::new(dim, vec![point], vec![1.0])
    }

    /// The atomic measure carried by a grid density: node coordinates with
    /// masses ρ_i·h^n.
    pub fn from_density(rho: &DensityField) -> Self {
        let grid = rho.grid();
        let points = (0..grid.num_nodes()).map(|i| grid.coords(i)).collect();
        Self {
            dim: grid.dim(),
            points,
            masses: rho.masses(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Exact squared Wasserstein distance between two small discrete measures,
/// together with an optimal plan.
pub fn w2_exact_small(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    if mu.dim() != nu.dim() {
        return Err(Error::GridMismatch(format!(
            "measure dimensions differ: {} vs {}",
            mu.dim(),
            nu.dim()
        )));
    }
    let atoms = mu.len().max(nu.len());
    if atoms > MAX_EXACT_ATOMS {
        return Err(Error::InstanceTooLarge {
            atoms,
            limit: MAX_EXACT_ATOMS,
        });
    }
    let gap = (mu.total_mass() - nu.total_mass()).abs();
    if gap > MASS_TOL {
        return Err(Error::Unbalanced { gap });
    }

    let dim = mu.dim();
    let cost: Vec<f64> = mu
        .points()
        .iter()
        .flat_map(|x| {
            nu.points()
                .iter()
                .map(|y| torus_distance_sq(&x[..dim], &y[..dim]))
        })
        .collect();
    let n_targets = nu.len();
    let cost_at = |i: usize, j: usize| cost[i * n_targets + j];

    let equal_masses = mu.len() == nu.len()
        && mu
            .masses()
            .iter()
            .chain(nu.masses())
            .all(|&m| (m - mu.masses()[0]).abs() <= MASS_TOL);

    let (value, triplets) = if equal_masses {
        permutation_min(mu.masses()[0], mu.len(), &cost_at)
    } else {
        mass_splitting_min(mu.masses(), nu.masses(), &cost_at)
    };

    let entries = triplets
        .into_iter()
        .filter(|&(_, _, m)| m > 0.0)
        .map(|(i, j, mass)| PlanEntry {
            i: i as u32,
            j: j as u32,
            mass,
        })
        .collect();
    let plan = TransportPlan {
        n_sources: mu.len(),
        n_targets: nu.len(),
        entries,
        source_masses: mu.masses().to_vec(),
        target_masses: nu.masses().to_vec(),
        cost_value: value,
    };
    Ok((value, plan))
}

/// Minimum assignment cost over all permutations (equal masses `w` each).
fn permutation_min(
    w: f64,
    n: usize,
    cost: &impl Fn(usize, usize) -> f64,
) -> (f64, Vec<(usize, usize, f64)>) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Vec<usize> = perm.clone();
    let mut best_cost = assignment_cost(&perm, cost);
    // Heap's algorithm, iterative counter form.
    let mut counters = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            let c = assignment_cost(&perm, cost);
            if c < best_cost {
                best_cost = c;
                best.copy_from_slice(&perm);
            }
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    let plan = best.iter().enumerate().map(|(i, &j)| (i, j, w)).collect();
    (w * best_cost, plan)
}

fn assignment_cost(perm: &[usize], cost: &impl Fn(usize, usize) -> f64) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost(i, j)).sum()
}

/// Depth-first enumeration of polytope vertices by mass splitting with
/// branch-and-bound pruning.
fn mass_splitting_min(
    a: &[f64],
    b: &[f64],
    cost: &impl Fn(usize, usize) -> f64,
) -> (f64, Vec<(usize, usize, f64)>) {
    let mut state = SplitState {
        rem_a: a.to_vec(),
        rem_b: b.to_vec(),
        stack: Vec::new(),
        current_cost: 0.0,
        best_cost: f64::INFINITY,
        best_plan: Vec::new(),
    };
    // Greedy nearest-target incumbent keeps early pruning effective.
    let greedy = greedy_plan(a, b, cost);
    state.best_cost = greedy.iter().map(|&(i, j, m)| m * cost(i, j)).sum();
    state.best_plan = greedy;
    split_recurse(&mut state, cost);
    (state.best_cost, state.best_plan)
}

struct SplitState {
    rem_a: Vec<f64>,
    rem_b: Vec<f64>,
    stack: Vec<(usize, usize, f64)>,
    current_cost: f64,
    best_cost: f64,
    best_plan: Vec<(usize, usize, f64)>,
}

fn greedy_plan(
    a: &[f64],
    b: &[f64],
    cost: &impl Fn(usize, usize) -> f64,
) -> Vec<(usize, usize, f64)> {
    let mut rem_a = a.to_vec();
    let mut rem_b = b.to_vec();
    let mut plan = Vec::new();
    loop {
        let i = match rem_a.iter().position(|&m| m > MASS_TOL) {
            Some(i) => i,
            None => break,
        };
        let mut best_j = usize::MAX;
        let mut best_c = f64::INFINITY;
        for (j, &m) in rem_b.iter().enumerate() {
            if m > MASS_TOL && cost(i, j) < best_c {
                best_c = cost(i, j);
                best_j = j;
            }
        }
        if best_j == usize::MAX {
            break;
        }
        let delta = rem_a[i].min(rem_b[best_j]);
        plan.push((i, best_j, delta));
        rem_a[i] -= delta;
        rem_b[best_j] -= delta;
    }
    plan
}

fn split_recurse(state: &mut SplitState, cost: &impl Fn(usize, usize) -> f64) {
    // Row-completion lower bound: every remaining source unit must pay at
    // least its cheapest reachable target.
    let mut bound = state.current_cost;
    let mut live_mass = 0.0;
    for (i, &ra) in state.rem_a.iter().enumerate() {
        if ra <= MASS_TOL {
            continue;
        }
        live_mass += ra;
        let mut cheapest = f64::INFINITY;
        for (j, &rb) in state.rem_b.iter().enumerate() {
            if rb > MASS_TOL {
                let c = cost(i, j);
                if c < cheapest {
                    cheapest = c;
                }
            }
        }
        if cheapest.is_finite() {
            bound += ra * cheapest;
        }
    }
    if live_mass <= MASS_TOL {
        if state.current_cost < state.best_cost {
            state.best_cost = state.current_cost;
            state.best_plan = state.stack.clone();
        }
        return;
    }
    if bound >= state.best_cost - 1e-15 {
        return;
    }

    // Branch over every live pair, cheapest first so the incumbent tightens
    // quickly; every polytope vertex is reachable because a vertex support is
    // a forest and some live pair always carries min(rem_a, rem_b) exactly.
    let mut branches: Vec<(usize, usize)> = Vec::new();
    for (i, &ra) in state.rem_a.iter().enumerate() {
        if ra <= MASS_TOL {
            continue;
        }
        for (j, &rb) in state.rem_b.iter().enumerate() {
            if rb > MASS_TOL {
                branches.push((i, j));
            }
        }
    }
    branches.sort_by(|&(i1, j1), &(i2, j2)| {
        cost(i1, j1)
            .partial_cmp(&cost(i2, j2))
            .unwrap()
            .then(i1.cmp(&i2))
            .then(j1.cmp(&j2))
    });
    for (i, j) in branches {
        // Save-and-restore keeps the backtracking bit-exact: undoing a float
        // subtraction by re-adding would drift and poison sibling branches.
        let saved_a = state.rem_a[i];
        let saved_b = state.rem_b[j];
        let saved_cost = state.current_cost;
        let delta = saved_a.min(saved_b);
        state.rem_a[i] = saved_a - delta;
        state.rem_b[j] = saved_b - delta;
        state.current_cost = saved_cost + delta * cost(i, j);
        state.stack.push((i, j, delta));
        split_recurse(state, cost);
        state.stack.pop();
        state.current_cost = saved_cost;
        state.rem_a[i] = saved_a;
        state.rem_b[j] = saved_b;
    }
}
