//! Geometry of the flat torus Tⁿ = ℝⁿ/ℤⁿ and the uniform grids living on it.
//!
//! The torus has period 1 in every coordinate, n ∈ {1, 2}. A grid places
//! M nodes per dimension at coordinates x_i = i·h with spacing h = 1/M, so a
//! scalar field is a vector of M^n values in row-major node order
//! (node (i₀, i₁) ↦ i₀·M + i₁ for n = 2).
//!
//! Distances minimize over integer translates: because coordinates live in
//! [0, 1) and the period is 1, the per-coordinate shift is one of {−1, 0, +1}.

mod calculus;
mod interp;

pub use calculus::{
    gradient, hessian, min_eig_stats, MinEigStats, SymMat, SymMatField, VectorField,
};
pub(crate) use interp::{forward_dft, inverse_dft, signed_frequency};
pub use interp::{interp_scalar, interp_symmat, TrigInterpolant};

use crate::error::{Error, Result};

/// Maximum coordinate dimension supported; eigenvalues of 2×2 symmetric
/// matrices stay closed-form, which every inequality check relies on.
pub const MAX_DIM: usize = 2;

/// A point on the torus. Only the first [`TorusGrid::dim`] entries are
/// meaningful; the tail is zero.
pub type Point = [f64; MAX_DIM];

/// Uniform periodic lattice on Tⁿ: `dim` ∈ {1, 2}, `points_per_dim` = M ≥ 8,
/// spacing h = 1/M, cell volume h^n.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    points_per_dim: usize,
}

impl TorusGrid {
    /// Smallest supported grid: coarser lattices cannot carry second-order
    /// finite differences of the test fields meaningfully.
    pub const MIN_POINTS: usize = 8;

    /// Builds a grid with `dim` ∈ {1, 2} and M = `points_per_dim` ≥ 8.
    pub fn new(dim: usize, points_per_dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if points_per_dim < Self::MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "points per dimension must be at least {}, got {points_per_dim}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self {
            dim,
            points_per_dim,
        })
    }

    /// Coordinate dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per dimension M.
    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    /// Grid spacing h = 1/M.
    pub fn h(&self) -> f64 {
        1.0 / self.points_per_dim as f64
    }

    /// Total node count M^n.
    pub fn num_nodes(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    /// Volume h^n of one grid cell; the quadrature weight of every node.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Splits a flat node index into per-dimension indices.
    pub fn multi_index(&self, node: usize) -> [usize; MAX_DIM] {
        debug_assert!(node < self.num_nodes());
        match self.dim {
            1 => [node, 0],
            _ => [node / self.points_per_dim, node % self.points_per_dim],
        }
    }

    /// Flattens per-dimension indices (each already in 0..M) to a node index.
    pub fn node_index(&self, multi: [usize; MAX_DIM]) -> usize {
        match self.dim {
            1 => multi[0],
            _ => multi[0] * self.points_per_dim + multi[1],
        }
    }

    /// Coordinates x = i·h of a node.
    pub fn coords(&self, node: usize) -> Point {
        let multi = self.multi_index(node);
        let h = self.h();
        let mut p = [0.0; MAX_DIM];
        for d in 0..self.dim {
            p[d] = multi[d] as f64 * h;
        }
        p
    }

    /// Node reached from `node` by moving `offset` lattice steps along
    /// dimension `d`, wrapping periodically.
    pub fn neighbor(&self, node: usize, d: usize, offset: isize) -> usize {
        debug_assert!(d < self.dim);
        let m = self.points_per_dim as isize;
        let mut multi = self.multi_index(node);
        let shifted = (multi[d] as isize + offset).rem_euclid(m);
        multi[d] = shifted as usize;
        self.node_index(multi)
    }

    /// Nearest node to an arbitrary point (used by exact solvers to snap
    /// atoms back onto the lattice when needed).
    pub fn nearest_node(&self, p: &[f64]) -> usize {
        let m = self.points_per_dim;
        let mut multi = [0usize; MAX_DIM];
        for d in 0..self.dim {
            let scaled = wrap_unit(p[d]) * m as f64;
            multi[d] = (scaled.round() as usize) % m;
        }
        self.node_index(multi)
    }
}

/// Wraps a coordinate into [0, 1).
pub fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Signed periodic difference a − b wrapped into [−½, ½).
pub fn periodic_delta(a: f64, b: f64) -> f64 {
    let d = a - b;
    let w = d - d.round();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Squared torus distance Σ_d min_{m ∈ {−1,0,1}} (x_d − y_d + m)².
///
/// Total on coordinates in [0, 1); symmetric; zero exactly when x = y.
pub fn torus_distance_sq(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut total = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        let raw = a - b;
        let mut best = raw * raw;
        for shift in [-1.0, 1.0] {
            let c = raw + shift;
            let sq = c * c;
            if sq < best {
                best = sq;
            }
        }
        total += best;
    }
    total
}

/// Scalar field sampled at every grid node (row-major order).
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridField {
    /// Wraps raw node values; the length must equal M^n.
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::GridMismatch(format!(
                "field carries {} values but the grid has {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node coordinate.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.num_nodes())
            .map(|node| f(&grid.coords(node)))
            .collect();
        Self { grid, values }
    }

    /// The constant field.
    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.num_nodes()],
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Applies `f` to every value, keeping the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Riemann sum Σ u_i · h^n.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Largest absolute node value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Strictly positive, unit-mass scalar field: a probability density with
/// respect to the Lebesgue measure of the torus.
///
/// Invariants enforced on construction: every node value > 0 and
/// |Σ ρ_i h^n − 1| ≤ 1e-9.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    field: GridField,
}

/// Mass-defect tolerance accepted by [`DensityField::new`].
pub const MASS_TOLERANCE: f64 = 1e-9;

impl DensityField {
    /// Validates positivity and unit mass.
    pub fn new(field: GridField) -> Result<Self> {
        let mut min_value = f64::INFINITY;
        let mut min_node = 0;
        for (node, &v) in field.values().iter().enumerate() {
            if v < min_value {
                min_value = v;
                min_node = node;
            }
        }
        if !(min_value > 0.0) {
            return Err(Error::PositivityLost {
                node: min_node,
                min_value,
            });
        }
        let mass = field.integral();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "density mass {mass} deviates from 1 by more than {MASS_TOLERANCE:e}"
            )));
        }
        Ok(Self { field })
    }

    /// Rescales arbitrary positive node values to unit mass, then validates.
    pub fn normalized(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        let field = GridField::new(grid, values)?;
        let mass = field.integral();
        if !(mass > 0.0) && mass.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cannot normalize a field of total mass {mass}"
            )));
        }
        Self::new(field.map(|v| v / mass))
    }

    /// The uniform density ρ ≡ 1.
    pub fn uniform(grid: TorusGrid) -> Self {
        Self {
            field: GridField::constant(grid, 1.0),
        }
    }

    /// Single-mode test density 1 + a·cos(2πx) (n = 1) or
    /// 1 + a·cos(2πx)cos(2πy) (n = 2), a ∈ (0, 1).
    pub fn cosine(grid: TorusGrid, amplitude: f64) -> Result<Self> {
        if !(0.0 < amplitude && amplitude < 1.0) {
            return Err(Error::InvalidInput(format!(
                "cosine amplitude must lie in (0, 1), got {amplitude}"
            )));
        }
        let two_pi = std::f64::consts::TAU;
        let field = GridField::from_fn(grid, |p| {
            let mut mode = (two_pi * p[0]).cos();
            if grid.dim() == 2 {
                mode *= (two_pi * p[1]).cos();
            }
            1.0 + amplitude * mode
        });
        // The sampled cosine sums to zero exactly over a full period, but the
        // individual rounding of M^n cosines can leave a mass defect near the
        // f64 epsilon; normalize to keep the constructor invariant exact.
        Self::normalized(grid, field.values().to_vec())
    }

    /// Seeded random trigonometric polynomial bounded away from zero:
    /// 1 + Σ_{|m| ≤ max_mode} a_m·(trig modes), rescaled so the oscillation
    /// stays below `1 − margin` in absolute value.
    pub fn random_trig(grid: TorusGrid, seed: u64, max_mode: usize, margin: f64) -> Result<Self> {
        if !(0.0 < margin && margin < 1.0) {
            return Err(Error::InvalidInput(format!(
                "margin must lie in (0, 1), got {margin}"
            )));
        }
        if max_mode == 0 || max_mode * 4 > grid.points_per_dim() {
            return Err(Error::InvalidInput(format!(
                "max_mode must be in 1..=M/4, got {max_mode}"
            )));
        }
        let mut state = SplitMix64::new(seed);
        let two_pi = std::f64::consts::TAU;
        let mut oscillation = GridField::constant(grid, 0.0);
        for m in 1..=max_mode {
            // One cosine and one sine amplitude per mode and dimension.
            for d in 0..grid.dim() {
                let ac = state.next_symmetric();
                let as_ = state.next_symmetric();
                for node in 0..grid.num_nodes() {
                    let p = grid.coords(node);
                    let phase = two_pi * m as f64 * p[d];
                    oscillation.values_mut()[node] += ac * phase.cos() + as_ * phase.sin();
                }
            }
        }
        let peak = oscillation.max_abs().max(f64::MIN_POSITIVE);
        let scale = (1.0 - margin) / peak;
        let values = oscillation
            .values()
            .iter()
            .map(|v| 1.0 + scale * v)
            .collect();
        Self::normalized(grid, values)
    }

    pub fn grid(&self) -> TorusGrid {
        self.field.grid()
    }

    pub fn as_field(&self) -> &GridField {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn value(&self, node: usize) -> f64 {
        self.field.value(node)
    }

    /// Node masses ρ_i·h^n (sum to 1 within the constructor tolerance).
    pub fn masses(&self) -> Vec<f64> {
        let w = self.grid().cell_volume();
        self.values().iter().map(|&v| v * w).collect()
    }

    /// Total mass Σ ρ_i h^n.
    pub fn mass(&self) -> f64 {
        self.field.integral()
    }

    pub fn min_value(&self) -> f64 {
        self.field.min_value()
    }

    pub fn max_value(&self) -> f64 {
        self.field.max_value()
    }

    /// log ρ as a plain scalar field.
    pub fn log_field(&self) -> GridField {
        self.field.map(f64::ln)
    }
}

/// Small deterministic generator (split-mix) for seeded test densities;
/// keeps the core crate free of RNG dependencies.
struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [−1, 1).
    fn next_symmetric(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }
}
