//! Pointwise Harnack comparisons: the one-step bound, the two-time bound on
//! whole trajectories, and the consistency of chained one-step bounds with
//! the direct two-time bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::jko::JkoTrajectory;
use crate::torus::{torus_distance_sq, wrap_unit, DensityField, TrigInterpolant, MAX_DIM};

use super::{validate_c, validate_tol, NodeSampling, DEFAULT_TOL_REL};

/// Largest number of verdicts a step report stores verbatim; beyond this the
/// report keeps failures (up to the same cap) plus the worst passing pair.
const STORE_ALL_LIMIT: usize = 65_536;

/// One (x, y) comparison of the one-step bound.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PairVerdict {
    pub x_node: usize,
    pub y_node: usize,
    /// ρ_{k−1}(x).
    pub lhs: f64,
    /// ((k+1)/(k+1−C))^n · exp(d²(x,y)/(2τ)) · ρ_k(y).
    pub rhs: f64,
    /// lhs/rhs; at most 1 when the bound holds exactly.
    pub ratio: f64,
    pub pass: bool,
}

/// Result of [`check_step_harnack`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepHarnackReport {
    pub k: usize,
    pub tau: f64,
    pub c: f64,
    pub tol_rel: f64,
    /// Dimensional prefactor ((k+1)/(k+1−C))^n.
    pub factor: f64,
    /// All verdicts when few pairs were checked, otherwise the failures and
    /// the worst passing pair; ordered by (x_node, y_node).
    pub verdicts: Vec<PairVerdict>,
    pub pairs_checked: usize,
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Checks the one-step bound ρ_{k−1}(x) ≤ ((k+1)/(k+1−C))^n ·
/// exp(d²(x,y)/(2τ)) · ρ_k(y) over all sampled node pairs (x, y).
///
/// A pair passes when its ratio lhs/rhs stays below 1 + tol_rel. The step
/// index k is 1-based: `prev` plays the role of ρ_{k−1} and `next` of ρ_k.
pub fn check_step_harnack(
    prev: &DensityField,
    next: &DensityField,
    k: usize,
    tau: f64,
    c: f64,
    sampling: NodeSampling,
    tol_rel: f64,
) -> Result<StepHarnackReport> {
    if prev.grid() != next.grid() {
        return Err(Error::GridMismatch(
            "step comparison needs both densities on one grid".into(),
        ));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {tau}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("step index k is 1-based".into()));
    }
    validate_c(c)?;
    validate_tol(tol_rel, "tol_rel")?;

    let grid = prev.grid();
    let dim = grid.dim();
    let factor = (((k + 1) as f64) / ((k + 1) as f64 - c)).powi(dim as i32);
    let nodes = sampling.select(grid)?;
    let pairs_checked = nodes.len() * nodes.len();
    let store_all = pairs_checked <= STORE_ALL_LIMIT;
    let inv_two_tau = 1.0 / (2.0 * tau);

    struct Partial {
        verdicts: Vec<PairVerdict>,
        worst: Option<PairVerdict>,
    }

    // Each x is independent; partials are merged in node order afterwards,
    // so the result does not depend on thread scheduling.
    let partials: Vec<Partial> = nodes
        .par_iter()
        .map(|&x| {
            let px = grid.coords(x);
            let lhs = prev.value(x);
            let mut verdicts = Vec::new();
            let mut worst: Option<PairVerdict> = None;
            for &y in &nodes {
                let py = grid.coords(y);
                let d_sq = torus_distance_sq(&px[..dim], &py[..dim]);
                let rhs = factor * (d_sq * inv_two_tau).exp() * next.value(y);
                let ratio = lhs / rhs;
                let verdict = PairVerdict {
                    x_node: x,
                    y_node: y,
                    lhs,
                    rhs,
                    ratio,
                    pass: ratio <= 1.0 + tol_rel,
                };
                if store_all || !verdict.pass {
                    verdicts.push(verdict);
                }
                if worst.is_none_or(|w| ratio > w.ratio) {
                    worst = Some(verdict);
                }
            }
            Partial { verdicts, worst }
        })
        .collect();

    let mut verdicts = Vec::new();
    let mut worst: Option<PairVerdict> = None;
    for partial in partials {
        if verdicts.len() < STORE_ALL_LIMIT {
            verdicts.extend(
                partial
                    .verdicts
                    .into_iter()
                    .take(STORE_ALL_LIMIT - verdicts.len()),
            );
        }
        if let Some(w) = partial.worst {
            if worst.is_none_or(|prev_w| w.ratio > prev_w.ratio) {
                worst = Some(w);
            }
        }
    }
    let worst = worst.expect("sampling always yields at least one node");
    if !store_all && worst.pass {
        verdicts.push(worst);
    }
    let pass = worst.ratio <= 1.0 + tol_rel;

    Ok(StepHarnackReport {
        k,
        tau,
        c,
        tol_rel,
        factor,
        verdicts,
        pairs_checked,
        worst_ratio: worst.ratio,
        pass,
    })
}

/// Sampling plan for [`check_harnack_pair`].
///
/// Times are taken as t₁ = (k₁−1+θ₁)τ and t₂ = (k₂+θ₂)τ, so θ offsets probe
/// the interior of the piecewise-constant interpolation plateaus; only
/// admissible combinations (t₁ ≥ τ, t₂ ≤ Nτ, t₂ − t₁ − τ > 0) are kept.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnackSamples {
    pub nodes: NodeSampling,
    /// Plateau offsets θ₁ ∈ [0, 1) for the earlier time.
    pub theta1: Vec<f64>,
    /// Plateau offsets θ₂ ∈ [0, 1) for the later time.
    pub theta2: Vec<f64>,
    pub tol_rel: f64,
    /// Number of highest-ratio tuples kept in the report.
    pub max_recorded: usize,
}

impl Default for HarnackSamples {
    fn default() -> Self {
        Self {
            nodes: NodeSampling::Strided { per_dim: 16 },
            theta1: vec![0.0, 0.5],
            theta2: vec![0.0, 0.5],
            tol_rel: DEFAULT_TOL_REL,
            max_recorded: 1024,
        }
    }
}

/// One space-time comparison u_{t₁}(x) vs u_{t₂}(y).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HarnackTuple {
    pub x_node: usize,
    pub y_node: usize,
    pub t1: f64,
    pub t2: f64,
    /// Step index with u_{t₁} = ρ_{k₁−1}.
    pub k1: usize,
    /// Step index with u_{t₂} = ρ_{k₂}.
    pub k2: usize,
    /// u_{t₁}(x).
    pub lhs: f64,
    /// ((t₂+τ)/t₁)^n · exp(d²(x,y)/(2(t₂−t₁−τ))) · u_{t₂}(y).
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Result of [`check_harnack_pair`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarnackReport {
    pub tau: f64,
    pub dim: usize,
    pub tol_rel: f64,
    pub tuples_checked: u64,
    pub failures: u64,
    pub worst_ratio: f64,
    pub pass: bool,
    /// The highest-ratio tuples, sorted by ratio descending (ties broken by
    /// node and step indices), capped at `max_recorded`.
    pub recorded: Vec<HarnackTuple>,
}

/// An admissible (k₁, θ₁, k₂, θ₂) combination with times in units of τ.
struct TimePair {
    k1: usize,
    k2: usize,
    /// t₁/τ = k₁−1+θ₁.
    a1: f64,
    /// t₂/τ = k₂+θ₂.
    a2: f64,
    /// ((t₂+τ)/t₁)^n.
    space_factor: f64,
}

/// Strictly ordered key for selecting the highest-ratio tuples: every tuple
/// has a distinct (node, step, time) signature, so the top set is unique and
/// independent of the merge order.
#[derive(Clone, Copy)]
struct RankedTuple(HarnackTuple);

impl RankedTuple {
    fn key_cmp(&self, other: &Self) -> Ordering {
        let a = &self.0;
        let b = &other.0;
        a.ratio
            .total_cmp(&b.ratio)
            .then_with(|| b.x_node.cmp(&a.x_node))
            .then_with(|| b.y_node.cmp(&a.y_node))
            .then_with(|| b.k1.cmp(&a.k1))
            .then_with(|| b.k2.cmp(&a.k2))
            .then_with(|| b.t1.total_cmp(&a.t1))
            .then_with(|| b.t2.total_cmp(&a.t2))
    }
}

/// Keeps the `cap` largest tuples under the [`RankedTuple`] order.
struct TopTuples {
    cap: usize,
    entries: Vec<RankedTuple>,
}

impl TopTuples {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            entries: Vec::with_capacity(cap.min(4096) + 1),
        }
    }

    fn push(&mut self, tuple: HarnackTuple) {
        if self.cap == 0 {
            return;
        }
        let ranked = RankedTuple(tuple);
        if self.entries.len() == self.cap
            && ranked.key_cmp(self.entries.last().expect("nonempty at cap")) != Ordering::Greater
        {
            return;
        }
        let pos = self
            .entries
            .partition_point(|e| e.key_cmp(&ranked) == Ordering::Greater);
        self.entries.insert(pos, ranked);
        self.entries.truncate(self.cap);
    }

    fn merge(mut self, other: Self) -> Self {
        for entry in other.entries {
            self.push(entry.0);
        }
        self
    }
}

/// Checks the two-time bound u_{t₁}(x) ≤ ((t₂+τ)/t₁)^n ·
/// exp(d²(x,y)/(2(t₂−t₁−τ))) · u_{t₂}(y) over all sampled nodes and all
/// admissible time pairs drawn from the sampling plan.
///
/// The trajectory is read through its piecewise-constant interpolation
/// u_t = ρ_{⌊t/τ⌋}. The bound is free of the Hessian constant C. Errors with
/// [`Error::NoAdmissiblePairs`] when the plan admits no time pair, e.g. when
/// the trajectory is too short for the waiting period t₂ − t₁ > τ.
pub fn check_harnack_pair(traj: &JkoTrajectory, samples: &HarnackSamples) -> Result<HarnackReport> {
    validate_tol(samples.tol_rel, "tol_rel")?;
    for &theta in samples.theta1.iter().chain(&samples.theta2) {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidInput(format!(
                "plateau offsets must lie in [0, 1), got {theta}"
            )));
        }
    }
    let grid = traj.grid();
    let dim = grid.dim();
    let tau = traj.tau();
    let n = traj.n_steps();

    let mut time_pairs = Vec::new();
    for k1 in 1..=n {
        for &theta1 in &samples.theta1 {
            let a1 = (k1 - 1) as f64 + theta1;
            if a1 < 1.0 {
                continue;
            }
            for k2 in k1..=n {
                for &theta2 in &samples.theta2 {
                    let a2 = k2 as f64 + theta2;
                    if a2 > n as f64 || a2 - a1 - 1.0 <= 0.0 {
                        continue;
                    }
                    time_pairs.push(TimePair {
                        k1,
                        k2,
                        a1,
                        a2,
                        space_factor: ((a2 + 1.0) / a1).powi(dim as i32),
                    });
                }
            }
        }
    }
    if time_pairs.is_empty() {
        return Err(Error::NoAdmissiblePairs);
    }

    let nodes = sampling_nodes(traj, samples)?;
    let tol_rel = samples.tol_rel;

    struct Partial {
        tuples: u64,
        failures: u64,
        worst_ratio: f64,
        top: TopTuples,
    }

    let identity = || Partial {
        tuples: 0,
        failures: 0,
        worst_ratio: f64::NEG_INFINITY,
        top: TopTuples::new(samples.max_recorded),
    };

    let merged = nodes
        .par_iter()
        .fold(identity, |mut acc, &x| {
            let px = grid.coords(x);
            for &y in &nodes {
                let py = grid.coords(y);
                let d_sq = torus_distance_sq(&px[..dim], &py[..dim]);
                for pair in &time_pairs {
                    let lhs = traj.densities()[pair.k1 - 1].value(x);
                    let gap = (pair.a2 - pair.a1 - 1.0) * tau;
                    let rhs = pair.space_factor
                        * (d_sq / (2.0 * gap)).exp()
                        * traj.densities()[pair.k2].value(y);
                    let ratio = lhs / rhs;
                    let pass = ratio <= 1.0 + tol_rel;
                    acc.tuples += 1;
                    if !pass {
                        acc.failures += 1;
                    }
                    if ratio > acc.worst_ratio {
                        acc.worst_ratio = ratio;
                    }
                    acc.top.push(HarnackTuple {
                        x_node: x,
                        y_node: y,
                        t1: pair.a1 * tau,
                        t2: pair.a2 * tau,
                        k1: pair.k1,
                        k2: pair.k2,
                        lhs,
                        rhs,
                        ratio,
                        pass,
                    });
                }
            }
            acc
        })
        .reduce(identity, |a, b| Partial {
            tuples: a.tuples + b.tuples,
            failures: a.failures + b.failures,
            worst_ratio: a.worst_ratio.max(b.worst_ratio),
            top: a.top.merge(b.top),
        });

    Ok(HarnackReport {
        tau,
        dim,
        tol_rel,
        tuples_checked: merged.tuples,
        failures: merged.failures,
        worst_ratio: merged.worst_ratio,
        pass: merged.failures == 0,
        recorded: merged.top.entries.into_iter().map(|r| r.0).collect(),
    })
}

fn sampling_nodes(traj: &JkoTrajectory, samples: &HarnackSamples) -> Result<Vec<usize>> {
    samples.nodes.select(traj.grid())
}

/// One chained comparison along the geodesic from x to y.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ChainCheckRow {
    pub k1: usize,
    pub k2: usize,
    pub x_node: usize,
    pub y_node: usize,
    /// ρ_{k₁−1}(x).
    pub lhs: f64,
    /// Product of the m = k₂−k₁+1 one-step bounds along equal geodesic legs:
    /// ∏_k ((k+1)/(k+1−C))^n · exp(d²/(2mτ)) · ρ_{k₂}(y).
    pub chained_rhs: f64,
    /// Closed two-time form ((k₂+1)/(k₁+1−C))^n · exp(d²/(2mτ)) · ρ_{k₂}(y).
    pub final_rhs: f64,
    /// Largest lhs/rhs over the individual legs.
    pub worst_leg_ratio: f64,
    pub pass: bool,
}

/// Verifies that chaining one-step bounds along the x→y geodesic reproduces
/// the two-time bound.
///
/// For each step offset δ in `deltas` and each admissible start k₁ (so
/// k₂ = k₁ + δ ≤ N), the geodesic is split into m = δ+1 equal legs with
/// waypoints z_j; every leg must satisfy the one-step bound (interior
/// waypoints are evaluated by trigonometric interpolation), the chained
/// product must dominate ρ_{k₁−1}(x), and the chained prefactor must never
/// exceed the closed two-time prefactor — at C = 1 the product telescopes
/// and the two coincide.
pub fn check_chain_consistency(
    traj: &JkoTrajectory,
    c: f64,
    deltas: &[usize],
    sampling: NodeSampling,
    tol_rel: f64,
) -> Result<Vec<ChainCheckRow>> {
    validate_c(c)?;
    validate_tol(tol_rel, "tol_rel")?;
    let grid = traj.grid();
    let dim = grid.dim();
    let tau = traj.tau();
    let n = traj.n_steps();
    let nodes = sampling.select(grid)?;

    if deltas.iter().all(|&delta| delta + 1 > n) {
        return Err(Error::NoAdmissiblePairs);
    }

    let interpolants: Vec<TrigInterpolant> = traj
        .densities()
        .iter()
        .map(|rho| TrigInterpolant::new(rho.as_field()))
        .collect();
    let fac = |k: usize| (((k + 1) as f64) / ((k + 1) as f64 - c)).powi(dim as i32);

    let mut rows = Vec::new();
    for &delta in deltas {
        let m = delta + 1;
        for k1 in 1..=n.saturating_sub(delta) {
            let k2 = k1 + delta;
            let chained_factor: f64 = (k1..=k2).map(fac).product();
            let final_factor = (((k2 + 1) as f64) / ((k1 + 1) as f64 - c)).powi(dim as i32);
            for &x in &nodes {
                let px = grid.coords(x);
                for &y in &nodes {
                    let py = grid.coords(y);
                    // Per-dimension displacement along the minimizing
                    // geodesic, each component wrapped into [−1/2, 1/2).
                    let mut step = [0.0; MAX_DIM];
                    let mut d_sq = 0.0;
                    for d in 0..dim {
                        let raw = py[d] - px[d];
                        let wrapped = raw - raw.round();
                        d_sq += wrapped * wrapped;
                        step[d] = wrapped / m as f64;
                    }
                    let leg_sq = d_sq / (m * m) as f64;
                    let leg_gain = (leg_sq / (2.0 * tau)).exp();

                    let waypoint_value = |j: usize, field_idx: usize| -> f64 {
                        if j == 0 {
                            traj.densities()[field_idx].value(x)
                        } else if j == m {
                            traj.densities()[field_idx].value(y)
                        } else {
                            let mut z = [0.0; MAX_DIM];
                            for d in 0..dim {
                                z[d] = wrap_unit(px[d] + j as f64 * step[d]);
                            }
                            interpolants[field_idx].value(&z[..dim])
                        }
                    };

                    let mut worst_leg_ratio = f64::NEG_INFINITY;
                    for (j, k) in (k1..=k2).enumerate() {
                        let leg_lhs = waypoint_value(j, k - 1);
                        let leg_rhs = fac(k) * leg_gain * waypoint_value(j + 1, k);
                        worst_leg_ratio = worst_leg_ratio.max(leg_lhs / leg_rhs);
                    }

                    let tail =
                        (d_sq / (2.0 * m as f64 * tau)).exp() * traj.densities()[k2].value(y);
                    let lhs = traj.densities()[k1 - 1].value(x);
                    let chained_rhs = chained_factor * tail;
                    let final_rhs = final_factor * tail;
                    let pass = worst_leg_ratio <= 1.0 + tol_rel
                        && lhs <= chained_rhs * (1.0 + tol_rel).powi(m as i32)
                        && chained_rhs <= final_rhs * (1.0 + 1e-9);
                    rows.push(ChainCheckRow {
                        k1,
                        k2,
                        x_node: x,
                        y_node: y,
                        lhs,
                        chained_rhs,
                        final_rhs,
                        worst_leg_ratio,
                        pass,
                    });
                }
            }
        }
    }
    Ok(rows)
}
