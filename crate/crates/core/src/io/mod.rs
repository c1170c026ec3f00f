//! Artifact serialization: grid fields and transport plans as CSV with JSON
//! headers, whole trajectories as density directories with a manifest, study
//! tables as CSV, reports as JSON and aligned text, and gnuplot-ready column
//! files.
//!
//! # Formats
//!
//! * **Grid field** — `<base>.csv` holds one `value` column in node order
//!   (row-major over dimensions); `<base>.json` holds `{dim, M, kind}`.
//! * **Transport plan** — `<base>.csv` holds sparse `(i, j, mass)` triplets;
//!   `<base>.json` records the shape and the transport cost.
//! * **Trajectory** — a directory with `density_0000.csv` … `density_NNNN.csv`
//!   (flat value columns; the manifest carries the grid shape) plus
//!   `manifest.json` with the horizon, step count, grid, per-step entropies
//!   and objectives, solver statistics, and per-step residual maxima.
//!   Squared distances are not stored: they are recovered on import from
//!   w₂² = 2·(objective − τ·entropy).
//!
//! All writers emit byte-identical output for identical inputs: floats are
//! printed in shortest round-trip form, map-like JSON comes from ordered
//! structs, and files end with a newline.

mod text;

pub use text::{TextReport, TextTable};

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jko::{ConvergenceRow, JkoTrajectory, SolverStats, StepDiagnostics};
use crate::jko::{monge_ampere_residual, optimality_residual};
use crate::torus::{DensityField, GridField, TorusGrid};
use crate::transport::{hessian_transfer_residual, PlanEntry, TransportPlan};

/// What a serialized grid field holds, recorded in its JSON header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// A probability density (positive, unit mass).
    Density,
    /// An arbitrary scalar field (potentials, residuals, logarithms).
    Scalar,
}

/// JSON header accompanying a grid-field CSV.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub dim: usize,
    #[serde(rename = "M")]
    pub points_per_dim: usize,
    pub kind: FieldKind,
}

fn csv_path(base: &Path) -> PathBuf {
    base.with_extension("csv")
}

fn json_path(base: &Path) -> PathBuf {
    base.with_extension("json")
}

/// Writes `field` as `<base>.csv` (single `value` column, node order) plus a
/// `<base>.json` header.
pub fn write_grid_field(base: &Path, field: &GridField, kind: FieldKind) -> Result<()> {
    let header = FieldHeader {
        dim: field.grid().dim(),
        points_per_dim: field.grid().points_per_dim(),
        kind,
    };
    write_json(&json_path(base), &header)?;
    write_value_column(&csv_path(base), field.values())
}

/// Reads a grid field written by [`write_grid_field`].
pub fn read_grid_field(base: &Path) -> Result<(GridField, FieldKind)> {
    let header: FieldHeader = read_json(&json_path(base))?;
    let grid = TorusGrid::new(header.dim, header.points_per_dim)?;
    let values = read_value_column(&csv_path(base))?;
    Ok((GridField::new(grid, values)?, header.kind))
}

/// Writes a density with a [`FieldKind::Density`] header.
pub fn write_density(base: &Path, density: &DensityField) -> Result<()> {
    write_grid_field(base, density.as_field(), FieldKind::Density)
}

/// Reads a density written by [`write_density`]. Positivity and unit mass
/// are re-validated, but the stored values are kept verbatim (no
/// renormalization), so round trips are bit-exact.
pub fn read_density(base: &Path) -> Result<DensityField> {
    let (field, kind) = read_grid_field(base)?;
    if kind != FieldKind::Density {
        return Err(Error::InvalidInput(format!(
            "expected a density header at {}, found {kind:?}",
            json_path(base).display()
        )));
    }
    DensityField::new(field)
}

fn write_value_column(path: &Path, values: &[f64]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["value"])?;
    for v in values {
        writer.write_record([format_f64(*v)])?;
    }
    writer.flush().map_err(std::io::Error::from)?;
    Ok(())
}

fn read_value_column(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let cell = record.get(0).ok_or_else(|| {
            Error::InvalidInput(format!("empty row in {}", path.display()))
        })?;
        values.push(parse_f64(cell, path)?);
    }
    Ok(values)
}

/// Shortest round-trip decimal form; parsing it back yields the same bits.
fn format_f64(v: f64) -> String {
    format!("{v}")
}

fn parse_f64(cell: &str, path: &Path) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| {
        Error::InvalidInput(format!("unparseable number {cell:?} in {}", path.display()))
    })
}

/// JSON header accompanying a transport-plan CSV.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanHeader {
    pub n_sources: usize,
    pub n_targets: usize,
    pub entries: usize,
    /// Transport cost ∑ γ_ij·c_ij of the stored plan; not recoverable from
    /// the triplets alone.
    pub cost_value: f64,
}

/// Writes `plan` as `<base>.csv` (`i, j, mass` triplets) plus a header.
pub fn write_plan(base: &Path, plan: &TransportPlan) -> Result<()> {
    let header = PlanHeader {
        n_sources: plan.n_sources,
        n_targets: plan.n_targets,
        entries: plan.entries.len(),
        cost_value: plan.cost_value,
    };
    write_json(&json_path(base), &header)?;
    let mut writer = csv::Writer::from_path(csv_path(base))?;
    writer.write_record(["i", "j", "mass"])?;
    for entry in &plan.entries {
        writer.write_record([
            entry.i.to_string(),
            entry.j.to_string(),
            format_f64(entry.mass),
        ])?;
    }
    writer.flush().map_err(std::io::Error::from)?;
    Ok(())
}

/// Reads a plan written by [`write_plan`]; marginals are rebuilt by summing
/// triplets.
pub fn read_plan(base: &Path) -> Result<TransportPlan> {
    let header: PlanHeader = read_json(&json_path(base))?;
    let path = csv_path(base);
    let mut reader = csv::Reader::from_path(&path)?;
    let mut entries = Vec::with_capacity(header.entries);
    let mut source_masses = vec![0.0; header.n_sources];
    let mut target_masses = vec![0.0; header.n_targets];
    for record in reader.records() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "plan rows need exactly (i, j, mass), got {} cells in {}",
                record.len(),
                path.display()
            )));
        }
        let i: u32 = record[0].trim().parse().map_err(|_| {
            Error::InvalidInput(format!("bad source index {:?} in {}", &record[0], path.display()))
        })?;
        let j: u32 = record[1].trim().parse().map_err(|_| {
            Error::InvalidInput(format!("bad target index {:?} in {}", &record[1], path.display()))
        })?;
        let mass = parse_f64(&record[2], &path)?;
        if i as usize >= header.n_sources || j as usize >= header.n_targets {
            return Err(Error::InvalidInput(format!(
                "plan entry ({i}, {j}) outside the {}x{} shape in {}",
                header.n_sources,
                header.n_targets,
                path.display()
            )));
        }
        source_masses[i as usize] += mass;
        target_masses[j as usize] += mass;
        entries.push(PlanEntry { i, j, mass });
    }
    if entries.len() != header.entries {
        return Err(Error::InvalidInput(format!(
            "plan header promises {} entries, CSV holds {}",
            header.entries,
            entries.len()
        )));
    }
    Ok(TransportPlan {
        n_sources: header.n_sources,
        n_targets: header.n_targets,
        entries,
        source_masses,
        target_masses,
        cost_value: header.cost_value,
    })
}

/// `manifest.json` of an exported trajectory directory.
///
/// All per-step arrays have length N and are indexed by step k = 1..=N.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryManifest {
    /// Time horizon K = N·τ.
    #[serde(rename = "K")]
    pub horizon: f64,
    /// Number of proximal steps.
    #[serde(rename = "N")]
    pub n_steps: usize,
    /// Grid nodes per dimension.
    #[serde(rename = "M")]
    pub points_per_dim: usize,
    /// Torus dimension.
    #[serde(rename = "n")]
    pub dim: usize,
    pub tau: f64,
    /// Entropy ∫ρ_k log ρ_k after each step.
    pub entropies: Vec<f64>,
    /// Proximal objective ½w₂² + τ·entropy at each minimizer.
    pub objectives: Vec<f64>,
    pub descent_residuals: Vec<f64>,
    pub solver_iterations: Vec<usize>,
    pub solver_eps_final: Vec<f64>,
    pub solver_marginal_residuals: Vec<f64>,
    /// Largest Monge–Ampère defect per step.
    pub ma_residual_max: Vec<f64>,
    /// Largest first-order-optimality defect per step.
    pub optimality_residual_max: Vec<f64>,
    /// Largest Hessian-transfer defect of each step's terminal density.
    pub hessian_transfer_residual_max: Vec<f64>,
}

fn density_file(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("density_{k:04}.csv"))
}

/// Writes a trajectory as a directory of per-step density CSVs plus
/// `manifest.json`, computing the three identity-residual maxima for every
/// step along the way.
pub fn export_trajectory(dir: &Path, traj: &JkoTrajectory) -> Result<TrajectoryManifest> {
    let grid = traj.grid();
    let tau = traj.tau();
    let n = traj.n_steps();
    if traj.diagnostics().len() != n {
        return Err(Error::InvalidInput(format!(
            "trajectory carries {} diagnostic records for {n} steps; \
             only solver-produced trajectories can be exported",
            traj.diagnostics().len()
        )));
    }

    let mut ma_residual_max = Vec::with_capacity(n);
    let mut optimality_residual_max = Vec::with_capacity(n);
    let mut hessian_transfer_residual_max = Vec::with_capacity(n);
    for k in 1..=n {
        let prev = &traj.densities()[k - 1];
        let next = &traj.densities()[k];
        ma_residual_max.push(monge_ampere_residual(prev, next, tau)?.max_residual);
        optimality_residual_max.push(optimality_residual(prev, next, tau)?.max_residual);
        hessian_transfer_residual_max
            .push(hessian_transfer_residual(&next.log_field(), tau)?.max_residual);
    }

    let diagnostics = traj.diagnostics();
    let manifest = TrajectoryManifest {
        horizon: traj.final_time(),
        n_steps: n,
        points_per_dim: grid.points_per_dim(),
        dim: grid.dim(),
        tau,
        entropies: diagnostics.iter().map(|d| d.entropy).collect(),
        objectives: diagnostics.iter().map(|d| d.objective).collect(),
        descent_residuals: diagnostics.iter().map(|d| d.descent_residual).collect(),
        solver_iterations: diagnostics.iter().map(|d| d.solver.iterations).collect(),
        solver_eps_final: diagnostics.iter().map(|d| d.solver.eps_final).collect(),
        solver_marginal_residuals: diagnostics
            .iter()
            .map(|d| d.solver.marginal_residual)
            .collect(),
        ma_residual_max,
        optimality_residual_max,
        hessian_transfer_residual_max,
    };

    fs::create_dir_all(dir)?;
    write_json(&dir.join("manifest.json"), &manifest)?;
    for (k, density) in traj.densities().iter().enumerate() {
        write_value_column(&density_file(dir, k), density.values())?;
    }
    Ok(manifest)
}

/// Reads back a directory written by [`export_trajectory`].
///
/// Per-step squared distances are recovered as w₂² = 2·(objective −
/// τ·entropy); the manifest's array lengths, τ·N = K consistency, and each
/// density's mass are validated.
pub fn import_trajectory(dir: &Path) -> Result<(JkoTrajectory, TrajectoryManifest)> {
    let manifest: TrajectoryManifest = read_json(&dir.join("manifest.json"))?;
    let n = manifest.n_steps;
    if n == 0 {
        return Err(Error::InvalidInput("manifest declares zero steps".into()));
    }
    if (manifest.tau * n as f64 - manifest.horizon).abs() > 1e-9 * manifest.horizon.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "manifest is inconsistent: tau*N = {} but K = {}",
            manifest.tau * n as f64,
            manifest.horizon
        )));
    }
    let lengths = [
        manifest.entropies.len(),
        manifest.objectives.len(),
        manifest.descent_residuals.len(),
        manifest.solver_iterations.len(),
        manifest.solver_eps_final.len(),
        manifest.solver_marginal_residuals.len(),
        manifest.ma_residual_max.len(),
        manifest.optimality_residual_max.len(),
        manifest.hessian_transfer_residual_max.len(),
    ];
    if lengths.iter().any(|&l| l != n) {
        return Err(Error::InvalidInput(format!(
            "manifest arrays must all have length N = {n}, got {lengths:?}"
        )));
    }

    let grid = TorusGrid::new(manifest.dim, manifest.points_per_dim)?;
    let mut densities = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let path = density_file(dir, k);
        let values = read_value_column(&path)?;
        let field = GridField::new(grid, values)?;
        densities.push(DensityField::new(field).map_err(|e| e.at_step(k))?);
    }

    let mut traj = JkoTrajectory::from_densities(manifest.tau, vec![densities.remove(0)])?;
    for (k, density) in densities.into_iter().enumerate() {
        let idx = k + 1;
        let entropy = manifest.entropies[k];
        let objective = manifest.objectives[k];
        let diag = StepDiagnostics {
            k: idx,
            w2_sq: 2.0 * (objective - manifest.tau * entropy),
            entropy,
            objective,
            descent_residual: manifest.descent_residuals[k],
            solver: SolverStats {
                iterations: manifest.solver_iterations[k],
                eps_final: manifest.solver_eps_final[k],
                marginal_residual: manifest.solver_marginal_residuals[k],
            },
        };
        traj.push_step(density, diag);
    }
    Ok((traj, manifest))
}

/// Serializes `value` as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a JSON document written by [`write_json`].
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Writes a τ-refinement study as CSV with columns
/// `N, l1_gap, linf_gap, runtime_ms`.
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["N", "l1_gap", "linf_gap", "runtime_ms"])?;
    for row in rows {
        writer.write_record([
            row.n_steps.to_string(),
            format_f64(row.l1_gap),
            format_f64(row.linf_gap),
            format_f64(row.runtime_ms),
        ])?;
    }
    writer.flush().map_err(std::io::Error::from)?;
    Ok(())
}

/// Writes gnuplot-ready whitespace-separated columns with a `#`-prefixed
/// header line naming them.
pub fn write_plot_columns(path: &Path, names: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    for row in rows {
        if row.len() != names.len() {
            return Err(Error::InvalidInput(format!(
                "plot rows need {} columns, got {}",
                names.len(),
                row.len()
            )));
        }
    }
    let mut out = Vec::new();
    writeln!(out, "# {}", names.join(" ")).map_err(std::io::Error::from)?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        writeln!(out, "{}", cells.join(" ")).map_err(std::io::Error::from)?;
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jko::{run_trajectory, InnerSettings};
    use crate::transport::sinkhorn;
    use approx::assert_abs_diff_eq;
    use tempfile::tempdir;

    #[test]
    fn grid_fields_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let grid = TorusGrid::new(2, 8).unwrap();
        let field = GridField::from_fn(grid, |p| (2.0 * std::f64::consts::PI * p[0]).sin() + p[1]);
        let base = dir.path().join("field");
        write_grid_field(&base, &field, FieldKind::Scalar).unwrap();

        let (back, kind) = read_grid_field(&base).unwrap();
        assert_eq!(kind, FieldKind::Scalar);
        assert_eq!(back.grid(), grid);
        // Shortest round-trip decimal form reproduces the exact bits.
        assert_eq!(back.values(), field.values());
    }

    #[test]
    fn densities_round_trip_and_reject_non_densities() {
        let dir = tempdir().unwrap();
        let grid = TorusGrid::new(1, 32).unwrap();
        let rho = DensityField::cosine(grid, 0.4).unwrap();
        let base = dir.path().join("rho");
        write_density(&base, &rho).unwrap();
        let back = read_density(&base).unwrap();
        assert_eq!(back.values(), rho.values());

        // A scalar header is not accepted as a density...
        let base2 = dir.path().join("scalar");
        write_grid_field(&base2, rho.as_field(), FieldKind::Scalar).unwrap();
        assert!(read_density(&base2).is_err());

        // ...nor is a field with the wrong mass.
        let base3 = dir.path().join("heavy");
        let heavy = GridField::constant(grid, 2.0);
        write_grid_field(&base3, &heavy, FieldKind::Density).unwrap();
        assert!(read_density(&base3).is_err());
    }

    #[test]
    fn field_headers_reject_unknown_keys_and_short_columns() {
        let dir = tempdir().unwrap();
        let base = dir.path().join("field");
        let grid = TorusGrid::new(1, 16).unwrap();
        write_grid_field(&base, &GridField::constant(grid, 1.0), FieldKind::Scalar).unwrap();

        // Unknown header key.
        fs::write(
            json_path(&base),
            "{\"dim\": 1, \"M\": 16, \"kind\": \"scalar\", \"extra\": 3}\n",
        )
        .unwrap();
        assert!(read_grid_field(&base).is_err());

        // Value count no longer matches the declared grid.
        fs::write(json_path(&base), "{\"dim\": 1, \"M\": 16, \"kind\": \"scalar\"}\n").unwrap();
        fs::write(csv_path(&base), "value\n1.0\n2.0\n").unwrap();
        assert!(read_grid_field(&base).is_err());
    }

    #[test]
    fn plans_round_trip_with_rebuilt_marginals() {
        let dir = tempdir().unwrap();
        let grid = TorusGrid::new(1, 8).unwrap();
        let mu = DensityField::cosine(grid, 0.3).unwrap();
        let nu = DensityField::uniform(grid);
        let plan = sinkhorn(&mu, &nu, &[1e-1, 1e-2, 1e-3], 20_000, 1e-10)
            .unwrap()
            .plan;

        let base = dir.path().join("plan");
        write_plan(&base, &plan).unwrap();
        let back = read_plan(&base).unwrap();
        assert_eq!(back.n_sources, plan.n_sources);
        assert_eq!(back.entries.len(), plan.entries.len());
        assert_eq!(back.cost_value, plan.cost_value);
        for (a, b) in back.entries.iter().zip(&plan.entries) {
            assert_eq!((a.i, a.j), (b.i, b.j));
            assert_eq!(a.mass, b.mass);
        }
        // Marginals are recomputed from triplets, not stored; they agree with
        // the prescribed ones up to the solver's marginal residual (1e-10).
        for (a, b) in back.source_masses.iter().zip(&plan.source_masses) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }

        // Out-of-shape entries are rejected.
        fs::write(csv_path(&base), "i,j,mass\n9,0,0.5\n").unwrap();
        fs::write(
            json_path(&base),
            "{\"n_sources\": 8, \"n_targets\": 8, \"entries\": 1, \"cost_value\": 0.0}\n",
        )
        .unwrap();
        assert!(read_plan(&base).is_err());
    }

    #[test]
    fn trajectories_export_and_import_losslessly() {
        let dir = tempdir().unwrap();
        let grid = TorusGrid::new(1, 32).unwrap();
        let rho = DensityField::cosine(grid, 0.5).unwrap();
        let traj = run_trajectory(&rho, 0.01, 3, &InnerSettings::default()).unwrap();

        let out = dir.path().join("run");
        let manifest = export_trajectory(&out, &traj).unwrap();
        assert_eq!(manifest.n_steps, 3);
        assert_abs_diff_eq!(manifest.horizon, 0.03, epsilon = 1e-15);
        assert_eq!(manifest.ma_residual_max.len(), 3);
        assert!(manifest.ma_residual_max.iter().all(|&r| r > 0.0));
        assert!(out.join("manifest.json").is_file());
        for k in 0..=3 {
            assert!(density_file(&out, k).is_file());
        }

        let (back, manifest2) = import_trajectory(&out).unwrap();
        assert_eq!(manifest2.n_steps, manifest.n_steps);
        assert_eq!(back.n_steps(), traj.n_steps());
        for (a, b) in back.densities().iter().zip(traj.densities()) {
            assert_eq!(a.values(), b.values());
        }
        for (a, b) in back.diagnostics().iter().zip(traj.diagnostics()) {
            assert_eq!(a.k, b.k);
            assert_eq!(a.entropy, b.entropy);
            assert_eq!(a.objective, b.objective);
            // w₂² is recovered from the stored objective and entropy.
            assert_abs_diff_eq!(a.w2_sq, b.w2_sq, epsilon = 1e-12);
            assert_eq!(a.solver.iterations, b.solver.iterations);
        }
    }

    #[test]
    fn corrupt_manifests_are_rejected() {
        let dir = tempdir().unwrap();
        let grid = TorusGrid::new(1, 32).unwrap();
        let rho = DensityField::cosine(grid, 0.5).unwrap();
        let traj = run_trajectory(&rho, 0.01, 2, &InnerSettings::default()).unwrap();
        let out = dir.path().join("run");
        export_trajectory(&out, &traj).unwrap();

        let manifest_path = out.join("manifest.json");
        let good = fs::read_to_string(&manifest_path).unwrap();

        // Array length mismatch.
        let mut manifest: TrajectoryManifest = serde_json::from_str(&good).unwrap();
        manifest.entropies.pop();
        write_json(&manifest_path, &manifest).unwrap();
        assert!(import_trajectory(&out).is_err());

        // Inconsistent tau vs horizon.
        let mut manifest: TrajectoryManifest = serde_json::from_str(&good).unwrap();
        manifest.tau *= 2.0;
        write_json(&manifest_path, &manifest).unwrap();
        assert!(import_trajectory(&out).is_err());

        // Unknown manifest key.
        fs::write(&manifest_path, good.replacen("{", "{\n  \"bogus\": 1,", 1)).unwrap();
        assert!(import_trajectory(&out).is_err());
    }

    #[test]
    fn study_tables_and_plot_columns_have_frozen_layouts() {
        let dir = tempdir().unwrap();
        let rows = vec![
            ConvergenceRow {
                n_steps: 4,
                tau: 0.0125,
                l1_gap: 0.03125,
                linf_gap: 0.0625,
                runtime_ms: 12.5,
            },
            ConvergenceRow {
                n_steps: 8,
                tau: 0.00625,
                l1_gap: 0.015625,
                linf_gap: 0.03125,
                runtime_ms: 25.0,
            },
        ];
        let csv_file = dir.path().join("study.csv");
        write_convergence_csv(&csv_file, &rows).unwrap();
        assert_eq!(
            fs::read_to_string(&csv_file).unwrap(),
            "N,l1_gap,linf_gap,runtime_ms\n4,0.03125,0.0625,12.5\n8,0.015625,0.03125,25\n"
        );

        let dat = dir.path().join("gaps.dat");
        write_plot_columns(
            &dat,
            &["N", "l1_gap"],
            &[vec![4.0, 0.03125], vec![8.0, 0.015625]],
        )
        .unwrap();
        assert_eq!(
            fs::read_to_string(&dat).unwrap(),
            "# N l1_gap\n4 0.03125\n8 0.015625\n"
        );
        assert!(write_plot_columns(&dat, &["a"], &[vec![1.0, 2.0]]).is_err());
    }
}
