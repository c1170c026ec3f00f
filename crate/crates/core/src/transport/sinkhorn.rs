//! Entropic optimal transport between grid densities by alternating kernel
//! scaling, with a decreasing-ε schedule (warm-started) and two engines:
//!
//! * dense scaling on the Gibbs kernel exp(−d²/(2ε)) for moderate ε;
//! * log-domain updates (log-sum-exp) below [`LOG_DOMAIN_THRESHOLD`], where
//!   dense kernel entries underflow.
//!
//! The Gibbs kernel of the squared torus distance factorizes across
//! coordinates, so every kernel application and every log-sum-exp pass runs
//! dimension-by-dimension in O(M^{n+1}) — the full M^n × M^n kernel is never
//! materialized. The reported value is the plain transport cost Σ γ_ij·d²_ij
//! (the entropic penalty is excluded).

use crate::error::{Error, Result};
use crate::torus::{periodic_delta, DensityField, GridField, TorusGrid};

use super::{PlanEntry, TransportPlan, MAX_DENSE_NODES};

/// Below this ε the dense Gibbs kernel is numerically unusable on desk-scale
/// grids; log-domain updates are mandatory.
pub const LOG_DOMAIN_THRESHOLD: f64 = 1e-3;

/// Plan entries below this mass are dropped from the sparse output (their
/// contribution is still counted in the value and the marginal residual).
const PLAN_MASS_FLOOR: f64 = 1e-16;

/// Engine selection for the scaling iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SinkhornMode {
    /// Dense for ε ≥ [`LOG_DOMAIN_THRESHOLD`], log-domain below.
    Auto,
    /// Dense scaling at every ε; errors on kernel underflow.
    Dense,
    /// Log-domain updates at every ε.
    LogDomain,
}

/// Converged transport output: value, sparse plan, and dual potentials.
#[derive(Clone, Debug)]
pub struct SinkhornOutput {
    /// Σ γ_ij·d²_ij at the terminal ε.
    pub value: f64,
    pub plan: TransportPlan,
    /// Source potential f (physical units: γ = exp((f ⊕ g − ½d²)/ε)).
    pub potential_source: GridField,
    /// Target potential g.
    pub potential_target: GridField,
    /// Scaling rounds summed over the whole ε schedule.
    pub iterations: usize,
    /// L1 defect of the worse marginal at exit.
    pub marginal_residual: f64,
    /// Last ε of the schedule.
    pub eps_final: f64,
}

/// Geometric ε ladder from `start` down to exactly `terminal`.
pub fn geometric_schedule(start: f64, terminal: f64, factor: f64) -> Vec<f64> {
    assert!(start > 0.0 && terminal > 0.0 && start >= terminal);
    assert!((0.0..1.0).contains(&factor) && factor > 0.0);
    let mut schedule = Vec::new();
    let mut eps = start;
    while eps > terminal * (1.0 + 1e-12) {
        schedule.push(eps);
        eps *= factor;
    }
    schedule.push(terminal);
    schedule
}

/// Entropic transport with automatic engine choice per rung.
pub fn sinkhorn(
    mu: &DensityField,
    nu: &DensityField,
    eps_schedule: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<SinkhornOutput> {
    sinkhorn_with_mode(mu, nu, eps_schedule, max_iters, tol, SinkhornMode::Auto)
}

/// Entropic transport with an explicit engine.
pub fn sinkhorn_with_mode(
    mu: &DensityField,
    nu: &DensityField,
    eps_schedule: &[f64],
    max_iters: usize,
    tol: f64,
    mode: SinkhornMode,
) -> Result<SinkhornOutput> {
    let grid = mu.grid();
    if nu.grid() != grid {
        return Err(Error::GridMismatch(
            "transport endpoints live on different grids".into(),
        ));
    }
    validate_schedule(eps_schedule)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "marginal tolerance must be positive, got {tol}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidInput("max_iters must be at least 1".into()));
    }
    if grid.num_nodes() > MAX_DENSE_NODES {
        return Err(Error::InstanceTooLarge {
            atoms: grid.num_nodes(),
            limit: MAX_DENSE_NODES,
        });
    }

    let costs = GridCosts::new(grid);
    let p = mu.masses();
    let q = nu.masses();
    let nodes = grid.num_nodes();
    let mut f = vec![0.0; nodes];
    let mut g = vec![0.0; nodes];
    let mut iterations = 0usize;

    for (rung, &eps) in eps_schedule.iter().enumerate() {
        let terminal = rung + 1 == eps_schedule.len();
        // Intermediate rungs only warm-start the next one; they stop early.
        let rung_tol = if terminal { tol } else { tol.max(1e-2 * eps) };
        let use_dense = match mode {
            SinkhornMode::Auto => eps >= LOG_DOMAIN_THRESHOLD,
            SinkhornMode::Dense => true,
            SinkhornMode::LogDomain => false,
        };
        let outcome = if use_dense {
            dense_rung(&costs, eps, &p, &q, &mut f, &mut g, max_iters, rung_tol)?
        } else {
            log_rung(&costs, eps, &p, &q, &mut f, &mut g, max_iters, rung_tol)
        };
        iterations += outcome.rounds;
        if terminal && outcome.residual > tol {
            return Err(Error::NonConvergence {
                iterations,
                residual: outcome.residual,
                tolerance: tol,
            });
        }
    }

    let eps_final = *eps_schedule.last().expect("validated nonempty");
    let extraction = extract_plan(&costs, eps_final, &p, &q, &f, &g);
    Ok(SinkhornOutput {
        value: extraction.value,
        plan: TransportPlan {
            n_sources: nodes,
            n_targets: nodes,
            entries: extraction.entries,
            source_masses: p,
            target_masses: q,
            cost_value: extraction.value,
        },
        potential_source: GridField::new(grid, f)?,
        potential_target: GridField::new(grid, g)?,
        iterations,
        marginal_residual: extraction.marginal_residual,
        eps_final,
    })
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty eps schedule".into()));
    }
    for pair in schedule.windows(2) {
        if pair[1] > pair[0] {
            return Err(Error::InvalidInput(
                "eps schedule must be non-increasing".into(),
            ));
        }
    }
    if schedule.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("eps values must be positive".into()));
    }
    Ok(())
}

/// Per-dimension half squared distances of a grid: `row[i·M + j] = ½·δ²` with
/// δ the wrapped difference of coordinates i·h and j·h. Both dimensions share
/// the table (the grid is uniform and periodic in each).
pub(crate) struct GridCosts {
    pub grid: TorusGrid,
    pub half_sq: Vec<f64>,
}

impl GridCosts {
    pub fn new(grid: TorusGrid) -> Self {
        let m = grid.points_per_dim();
        let h = grid.h();
        let mut half_sq = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let delta = periodic_delta(i as f64 * h, j as f64 * h);
                half_sq[i * m + j] = 0.5 * delta * delta;
            }
        }
        Self { grid, half_sq }
    }

    /// Half squared distance between two nodes (full dimension).
    pub fn between_nodes(&self, a: usize, b: usize) -> f64 {
        let m = self.grid.points_per_dim();
        match self.grid.dim() {
            1 => self.half_sq[a * m + b],
            _ => {
                let (a0, a1) = (a / m, a % m);
                let (b0, b1) = (b / m, b % m);
                self.half_sq[a0 * m + b0] + self.half_sq[a1 * m + b1]
            }
        }
    }

    /// Smallest strictly positive per-dimension cost (adjacent nodes).
    fn min_offdiag(&self) -> f64 {
        let m = self.grid.points_per_dim();
        self.half_sq[1] // pair (0, 1): ½h², the minimum over off-diagonals
            .min(self.half_sq[m * m - m]) // pair (M−1, 0), same by symmetry
    }
}

struct RungOutcome {
    rounds: usize,
    residual: f64,
}

/// Dense scaling rung: u ← p ⊘ Kv, v ← q ⊘ Ku on the factored kernel.
#[allow(clippy::too_many_arguments)]
fn dense_rung(
    costs: &GridCosts,
    eps: f64,
    p: &[f64],
    q: &[f64],
    f: &mut [f64],
    g: &mut [f64],
    max_iters: usize,
    tol: f64,
) -> Result<RungOutcome> {
    if (-costs.min_offdiag() / eps).exp() == 0.0 {
        // The kernel degenerated to the identity matrix: scaling cannot move
        // any mass between distinct nodes at this ε.
        return Err(Error::KernelUnderflow { eps });
    }
    let kernel: Vec<f64> = costs.half_sq.iter().map(|&c| (-c / eps).exp()).collect();

    // Center the source potential so exp(f/ε) stays in range; the opposite
    // shift on g preserves the coupling exp((f ⊕ g − c)/ε).
    let center = 0.5
        * (f.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            + f.iter().cloned().fold(f64::INFINITY, f64::min));
    let mut u: Vec<f64> = f.iter().map(|&fi| ((fi - center) / eps).exp()).collect();
    let mut v: Vec<f64> = g.iter().map(|&gi| ((gi + center) / eps).exp()).collect();

    let mut rounds = 0;
    let mut residual = f64::INFINITY;
    while rounds < max_iters {
        rounds += 1;
        let kv = apply_kernel(costs.grid, &kernel, &v);
        for i in 0..u.len() {
            if kv[i] <= 0.0 || !kv[i].is_finite() {
                return Err(Error::KernelUnderflow { eps });
            }
            u[i] = p[i] / kv[i];
        }
        let ku = apply_kernel(costs.grid, &kernel, &u);
        for j in 0..v.len() {
            if ku[j] <= 0.0 || !ku[j].is_finite() {
                return Err(Error::KernelUnderflow { eps });
            }
            v[j] = q[j] / ku[j];
        }
        // Row marginal defect after the column update.
        let kv = apply_kernel(costs.grid, &kernel, &v);
        residual = u
            .iter()
            .zip(&kv)
            .zip(p)
            .map(|((ui, kvi), pi)| (ui * kvi - pi).abs())
            .sum();
        if residual <= tol {
            break;
        }
    }
    for (fi, ui) in f.iter_mut().zip(&u) {
        *fi = eps * ui.ln() + center;
    }
    for (gi, vi) in g.iter_mut().zip(&v) {
        *gi = eps * vi.ln() - center;
    }
    Ok(RungOutcome { rounds, residual })
}

/// Log-domain rung: f ← ε·ln p − ε·LSE((g − c)/ε) and symmetrically for g.
#[allow(clippy::too_many_arguments)]
fn log_rung(
    costs: &GridCosts,
    eps: f64,
    p: &[f64],
    q: &[f64],
    f: &mut [f64],
    g: &mut [f64],
    max_iters: usize,
    tol: f64,
) -> RungOutcome {
    let ln_p: Vec<f64> = p.iter().map(|&x| x.ln()).collect();
    let ln_q: Vec<f64> = q.iter().map(|&x| x.ln()).collect();
    let mut rounds = 0;
    let mut residual = f64::INFINITY;
    let mut scratch: Vec<f64> = vec![0.0; f.len()];
    while rounds < max_iters {
        rounds += 1;
        // f-update: exact row marginals.
        for (s, gj) in scratch.iter_mut().zip(g.iter()) {
            *s = *gj / eps;
        }
        let lse_g = lse_kernel(costs, eps, &scratch);
        for i in 0..f.len() {
            f[i] = eps * (ln_p[i] - lse_g[i]);
        }
        // g-update: exact column marginals.
        for (s, fi) in scratch.iter_mut().zip(f.iter()) {
            *s = *fi / eps;
        }
        let lse_f = lse_kernel(costs, eps, &scratch);
        for j in 0..g.len() {
            g[j] = eps * (ln_q[j] - lse_f[j]);
        }
        // Row defect after the g-update.
        for (s, gj) in scratch.iter_mut().zip(g.iter()) {
            *s = *gj / eps;
        }
        let lse_g = lse_kernel(costs, eps, &scratch);
        residual = (0..f.len())
            .map(|i| ((f[i] / eps + lse_g[i]).exp() - p[i]).abs())
            .sum();
        if residual <= tol {
            break;
        }
    }
    RungOutcome { rounds, residual }
}

/// Factored application of the dense kernel: y_i = Σ_j K_ij x_j with
/// K = k ⊗ k for n = 2.
pub(crate) fn apply_kernel(grid: TorusGrid, kernel1d: &[f64], x: &[f64]) -> Vec<f64> {
    let m = grid.points_per_dim();
    match grid.dim() {
        1 => {
            let mut y = vec![0.0; m];
            for i in 0..m {
                let row = &kernel1d[i * m..(i + 1) * m];
                y[i] = row.iter().zip(x).map(|(k, xv)| k * xv).sum();
            }
            y
        }
        _ => {
            // Contract the inner index, then the outer one.
            let mut mid = vec![0.0; m * m];
            for i0 in 0..m {
                for i1 in 0..m {
                    let row = &kernel1d[i1 * m..(i1 + 1) * m];
                    let xrow = &x[i0 * m..(i0 + 1) * m];
                    mid[i0 * m + i1] = row.iter().zip(xrow).map(|(k, xv)| k * xv).sum();
                }
            }
            let mut y = vec![0.0; m * m];
            for i0 in 0..m {
                let row = &kernel1d[i0 * m..(i0 + 1) * m];
                for i1 in 0..m {
                    y[i0 * m + i1] = (0..m).map(|j0| row[j0] * mid[j0 * m + i1]).sum();
                }
            }
            y
        }
    }
}

/// Factored log-sum-exp: out_i = LSE_j (φ_j − c_ij/ε), φ given per node.
pub(crate) fn lse_kernel(costs: &GridCosts, eps: f64, phi: &[f64]) -> Vec<f64> {
    let grid = costs.grid;
    let m = grid.points_per_dim();
    match grid.dim() {
        1 => (0..m)
            .map(|i| {
                let row = &costs.half_sq[i * m..(i + 1) * m];
                lse_iter(row.iter().zip(phi).map(|(c, p)| p - c / eps))
            })
            .collect(),
        _ => {
            // Inner pass over j1 for every (j0, i1), then outer over j0.
            let mut inner = vec![0.0; m * m];
            for j0 in 0..m {
                let phirow = &phi[j0 * m..(j0 + 1) * m];
                for i1 in 0..m {
                    let crow = &costs.half_sq[i1 * m..(i1 + 1) * m];
                    inner[j0 * m + i1] =
                        lse_iter(crow.iter().zip(phirow).map(|(c, p)| p - c / eps));
                }
            }
            let mut out = vec![0.0; m * m];
            for i0 in 0..m {
                let crow = &costs.half_sq[i0 * m..(i0 + 1) * m];
                for i1 in 0..m {
                    out[i0 * m + i1] =
                        lse_iter((0..m).map(|j0| inner[j0 * m + i1] - crow[j0] / eps));
                }
            }
            out
        }
    }
}

pub(crate) fn lse_iter(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

pub(crate) struct Extraction {
    pub(crate) value: f64,
    pub(crate) entries: Vec<PlanEntry>,
    pub(crate) marginal_residual: f64,
}

/// Materializes the sparse plan, the transport value Σγd², and the exact
/// marginal defects from the potentials (single all-pairs pass; guarded by
/// the caller's node-count check).
pub(crate) fn extract_plan(
    costs: &GridCosts,
    eps: f64,
    p: &[f64],
    q: &[f64],
    f: &[f64],
    g: &[f64],
) -> Extraction {
    let nodes = costs.grid.num_nodes();
    let mut value = 0.0;
    let mut entries = Vec::new();
    let mut row_sums = vec![0.0; nodes];
    let mut col_sums = vec![0.0; nodes];
    for i in 0..nodes {
        let fi = f[i];
        for j in 0..nodes {
            let c = costs.between_nodes(i, j);
            let mass = ((fi + g[j] - c) / eps).exp();
            if mass > 0.0 {
                value += mass * 2.0 * c;
                row_sums[i] += mass;
                col_sums[j] += mass;
                if mass > PLAN_MASS_FLOOR {
                    entries.push(PlanEntry {
                        i: i as u32,
                        j: j as u32,
                        mass,
                    });
                }
            }
        }
    }
    let row_defect: f64 = row_sums.iter().zip(p).map(|(s, a)| (s - a).abs()).sum();
    let col_defect: f64 = col_sums.iter().zip(q).map(|(s, b)| (s - b).abs()).sum();
    Extraction {
        value,
        entries,
        marginal_residual: row_defect.max(col_defect),
    }
}
