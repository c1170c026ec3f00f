//! Transport-solver self-test: every instance has an independent exact
//! reference. Atom clouds are solved both by the small-support exact solver
//! and by the transportation simplex, which must agree to round-off; grid
//! densities are solved by the entropic ε-ladder, whose value must land
//! within a stated band of the simplex optimum. A deliberately coarse
//! terminal ε therefore turns into a visible failure, not a silent bias.

use std::fs;
use std::path::{Path, PathBuf};

use jkolab::torus::{torus_distance_sq, DensityField, Point, TorusGrid};
use jkolab::transport::lp::solve_transport_lp;
use jkolab::transport::{geometric_schedule, sinkhorn, w2_exact_small, DiscreteMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::InitialDensity;
use crate::{config_err, runtime_err, CliError, Result};

/// Agreement demanded of the two exact engines on atom instances; both are
/// exact, so anything beyond accumulated round-off is a defect.
const EXACT_AGREEMENT: f64 = 1e-9;

/// Iteration budget and marginal tolerance for the entropic runs.
const SINKHORN_MAX_ITERS: usize = 200_000;
const SINKHORN_MARGINAL_TOL: f64 = 1e-10;

fn default_terminal_eps() -> f64 {
    1e-5
}

fn default_gap() -> f64 {
    1e-3
}

/// A battery of self-test instances, loadable from a JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestBattery {
    /// Terminal blur of the entropic ε ladder used on grid instances.
    #[serde(default = "default_terminal_eps")]
    pub terminal_eps: f64,
    /// Allowed |entropic − exact| gap on grid instances.
    #[serde(default = "default_gap")]
    pub tolerance: f64,
    #[serde(default)]
    pub atom_instances: Vec<AtomInstance>,
    #[serde(default)]
    pub grid_instances: Vec<GridInstance>,
    /// Directory receiving the JSON report and the materialized battery;
    /// `null` keeps everything on stdout.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl SelftestBattery {
    /// Reads a battery document; a battery without instances is a usage
    /// error, since it would certify nothing.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| {
            CliError::Config(format!("cannot read battery {}: {e}", path.display()))
        })?;
        let battery: Self = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("battery {}: {e}", path.display())))?;
        if battery.atom_instances.is_empty() && battery.grid_instances.is_empty() {
            return Err(CliError::Config(format!(
                "battery {} lists no instances",
                path.display()
            )));
        }
        Ok(battery)
    }
}

/// Two equal-mass atom clouds; coordinates are lists of `dim` reals.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomInstance {
    pub dim: usize,
    pub mu: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
}

/// Two grid densities compared between the entropic solver and the simplex.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridInstance {
    pub dim: usize,
    pub points_per_dim: usize,
    pub mu: InitialDensity,
    pub nu: InitialDensity,
}

/// Which engine pair a row compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    /// Small-support exact solver vs transportation simplex.
    Atoms,
    /// Entropic ε-ladder vs transportation simplex.
    Grid,
}

/// Verdict for one instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestRow {
    pub kind: RowKind,
    /// Index within the instance list of its kind.
    pub index: usize,
    pub dim: usize,
    /// Atom count or grid nodes per dimension.
    pub size: usize,
    /// Transportation-simplex optimum.
    pub reference_value: f64,
    /// Value from the solver under test.
    pub tested_value: f64,
    pub gap: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `ot_selftest.json`: all rows plus the worst offender relative to its
/// tolerance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestReport {
    pub terminal_eps: f64,
    pub tolerance: f64,
    pub rows: Vec<SelftestRow>,
    pub worst: Option<SelftestRow>,
    pub pass: bool,
}

/// Deterministic built-in battery: seeded atom clouds in both dimensions
/// plus three fixed grid pairs.
pub fn bundled_battery(seed: u64, tolerance: f64) -> SelftestBattery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atom_instances = Vec::with_capacity(12);
    for i in 0..12usize {
        let n_atoms = 2 + (i % 5);
        let dim = if i < 6 { 1 } else { 2 };
        let mut cloud = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..n_atoms)
                .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
                .collect()
        };
        let mu = cloud(&mut rng);
        let nu = cloud(&mut rng);
        atom_instances.push(AtomInstance { dim, mu, nu });
    }
    let grid_instances = vec![
        GridInstance {
            dim: 1,
            points_per_dim: 16,
            mu: InitialDensity::Cosine { amplitude: 0.4 },
            nu: InitialDensity::Uniform,
        },
        GridInstance {
            dim: 1,
            points_per_dim: 16,
            mu: InitialDensity::RandomTrig {
                seed: seed.wrapping_mul(2).wrapping_add(1),
                max_mode: 3,
                margin: 0.3,
            },
            nu: InitialDensity::RandomTrig {
                seed: seed.wrapping_mul(2).wrapping_add(5),
                max_mode: 3,
                margin: 0.3,
            },
        },
        GridInstance {
            dim: 2,
            points_per_dim: 16,
            mu: InitialDensity::Cosine { amplitude: 0.5 },
            nu: InitialDensity::Uniform,
        },
    ];
    SelftestBattery {
        terminal_eps: default_terminal_eps(),
        tolerance,
        atom_instances,
        grid_instances,
        output_dir: None,
    }
}

fn atoms_to_measure(dim: usize, coords: &[Vec<f64>], side: &str) -> Result<DiscreteMeasure> {
    if !(1..=2).contains(&dim) {
        return Err(CliError::Config(format!(
            "atom instances need dim 1 or 2, got {dim}"
        )));
    }
    let mut points = Vec::with_capacity(coords.len());
    for (i, coord) in coords.iter().enumerate() {
        if coord.len() != dim {
            return Err(CliError::Config(format!(
                "{side} atom {i} has {} coordinates, expected {dim}",
                coord.len()
            )));
        }
        let mut p: Point = [0.0; 2];
        p[..dim].copy_from_slice(coord);
        points.push(p);
    }
    DiscreteMeasure::uniform_on(dim, points).map_err(config_err)
}

fn atom_row(index: usize, instance: &AtomInstance) -> Result<SelftestRow> {
    let mu = atoms_to_measure(instance.dim, &instance.mu, "mu")?;
    let nu = atoms_to_measure(instance.dim, &instance.nu, "nu")?;
    let dim = instance.dim;
    let (tested_value, plan) = w2_exact_small(&mu, &nu).map_err(config_err)?;
    plan.validate(1e-9).map_err(runtime_err)?;
    let cost =
        |i: usize, j: usize| torus_distance_sq(&mu.points()[i][..dim], &nu.points()[j][..dim]);
    let lp = solve_transport_lp(mu.masses(), nu.masses(), cost).map_err(runtime_err)?;
    let gap = (tested_value - lp.value).abs();
    Ok(SelftestRow {
        kind: RowKind::Atoms,
        index,
        dim,
        size: mu.len(),
        reference_value: lp.value,
        tested_value,
        gap,
        tol: EXACT_AGREEMENT,
        pass: gap <= EXACT_AGREEMENT,
    })
}

fn grid_row(
    index: usize,
    instance: &GridInstance,
    schedule: &[f64],
    tolerance: f64,
) -> Result<SelftestRow> {
    let grid = TorusGrid::new(instance.dim, instance.points_per_dim).map_err(config_err)?;
    let mu = instance.mu.build(grid)?;
    let nu = instance.nu.build(grid)?;
    let out = sinkhorn(&mu, &nu, schedule, SINKHORN_MAX_ITERS, SINKHORN_MARGINAL_TOL)
        .map_err(runtime_err)?;
    let dim = grid.dim();
    let cost =
        |i: usize, j: usize| torus_distance_sq(&grid.coords(i)[..dim], &grid.coords(j)[..dim]);
    let lp = solve_transport_lp(&mu.masses(), &nu.masses(), cost).map_err(runtime_err)?;
    let gap = (out.value - lp.value).abs();
    Ok(SelftestRow {
        kind: RowKind::Grid,
        index,
        dim,
        size: instance.points_per_dim,
        reference_value: lp.value,
        tested_value: out.value,
        gap,
        tol: tolerance,
        pass: gap <= tolerance,
    })
}

/// Runs every instance and summarizes the outcome. The worst row is the one
/// with the largest gap relative to its own tolerance.
pub fn run_battery(battery: &SelftestBattery) -> Result<SelftestReport> {
    if !(battery.terminal_eps.is_finite() && battery.terminal_eps > 0.0) {
        return Err(CliError::Config(format!(
            "terminal_eps must be positive, got {}",
            battery.terminal_eps
        )));
    }
    if !(battery.tolerance.is_finite() && battery.tolerance > 0.0) {
        return Err(CliError::Config(format!(
            "tolerance must be positive, got {}",
            battery.tolerance
        )));
    }
    if battery.atom_instances.is_empty() && battery.grid_instances.is_empty() {
        return Err(CliError::Config("battery lists no instances".into()));
    }

    let mut rows = Vec::new();
    for (index, instance) in battery.atom_instances.iter().enumerate() {
        rows.push(atom_row(index, instance)?);
    }
    let schedule = geometric_schedule(1e-1, battery.terminal_eps, 0.5);
    for (index, instance) in battery.grid_instances.iter().enumerate() {
        rows.push(grid_row(index, instance, &schedule, battery.tolerance)?);
    }

    let worst = rows
        .iter()
        .max_by(|a, b| (a.gap / a.tol).total_cmp(&(b.gap / b.tol)))
        .cloned();
    let pass = rows.iter().all(|r| r.pass);
    Ok(SelftestReport {
        terminal_eps: battery.terminal_eps,
        tolerance: battery.tolerance,
        rows,
        worst,
        pass,
    })
}
