//! Second-order periodic finite-difference calculus on torus grids.
//!
//! Gradients use centered differences (u_{i+1} − u_{i−1})/(2h); Hessian
//! diagonals use the standard second difference (u_{i+1} − 2u_i + u_{i−1})/h²;
//! the 2-D off-diagonal composes centered first differences in both
//! directions. All stencils wrap periodically, are exact on constants, and
//! carry O(h²) truncation error on smooth fields.

use super::{GridField, TorusGrid, MAX_DIM};

/// Vector field on a grid: `dim` components per node, stored node-major
/// (`comps[node*dim + d]`).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: TorusGrid,
    comps: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            comps: vec![0.0; grid.num_nodes() * grid.dim()],
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn component(&self, node: usize, d: usize) -> f64 {
        self.comps[node * self.grid.dim() + d]
    }

    pub fn set_component(&mut self, node: usize, d: usize, value: f64) {
        self.comps[node * self.grid.dim() + d] = value;
    }

    /// The vector at a node, padded with zeros beyond `dim`.
    pub fn at(&self, node: usize) -> [f64; MAX_DIM] {
        let mut v = [0.0; MAX_DIM];
        for d in 0..self.grid.dim() {
            v[d] = self.component(node, d);
        }
        v
    }

    /// Squared Euclidean length of the vector at a node.
    pub fn norm_sq(&self, node: usize) -> f64 {
        (0..self.grid.dim())
            .map(|d| self.component(node, d).powi(2))
            .sum()
    }

    /// Largest |v_d| over all nodes and components.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Symmetric n×n matrix, n ∈ {1, 2}, stored as [a₀₀, a₀₁, a₁₁]
/// (the tail unused for n = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat {
    pub dim: usize,
    pub e: [f64; 3],
}

impl SymMat {
    pub fn zero(dim: usize) -> Self {
        Self { dim, e: [0.0; 3] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        m.e[0] = 1.0;
        if dim == 2 {
            m.e[2] = 1.0;
        }
        m
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        match (r, c) {
            (0, 0) => self.e[0],
            (0, 1) | (1, 0) => self.e[1],
            (1, 1) => self.e[2],
            _ => panic!("symmetric matrix index ({r},{c}) out of range"),
        }
    }

    /// I + t·A.
    pub fn identity_plus_scaled(&self, t: f64) -> SymMat {
        let mut out = *self;
        out.e[0] = 1.0 + t * self.e[0];
        out.e[1] = t * self.e[1];
        out.e[2] = if self.dim == 2 {
            1.0 + t * self.e[2]
        } else {
            0.0
        };
        out
    }

    pub fn scaled(&self, t: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            e: [t * self.e[0], t * self.e[1], t * self.e[2]],
        }
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        debug_assert_eq!(self.dim, other.dim);
        SymMat {
            dim: self.dim,
            e: [
                self.e[0] - other.e[0],
                self.e[1] - other.e[1],
                self.e[2] - other.e[2],
            ],
        }
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.e[0],
            _ => self.e[0] * self.e[2] - self.e[1] * self.e[1],
        }
    }

    pub fn trace(&self) -> f64 {
        match self.dim {
            1 => self.e[0],
            _ => self.e[0] + self.e[2],
        }
    }

    /// Smallest eigenvalue, closed-form.
    pub fn min_eig(&self) -> f64 {
        match self.dim {
            1 => self.e[0],
            _ => {
                let half_tr = 0.5 * (self.e[0] + self.e[2]);
                let half_gap = 0.5 * (self.e[0] - self.e[2]);
                half_tr - (half_gap * half_gap + self.e[1] * self.e[1]).sqrt()
            }
        }
    }

    /// Largest eigenvalue, closed-form.
    pub fn max_eig(&self) -> f64 {
        match self.dim {
            1 => self.e[0],
            _ => {
                let half_tr = 0.5 * (self.e[0] + self.e[2]);
                let half_gap = 0.5 * (self.e[0] - self.e[2]);
                half_tr + (half_gap * half_gap + self.e[1] * self.e[1]).sqrt()
            }
        }
    }

    /// Inverse; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<SymMat> {
        let det = self.det();
        if det == 0.0 {
            return None;
        }
        Some(match self.dim {
            1 => SymMat {
                dim: 1,
                e: [1.0 / self.e[0], 0.0, 0.0],
            },
            _ => SymMat {
                dim: 2,
                e: [self.e[2] / det, -self.e[1] / det, self.e[0] / det],
            },
        })
    }

    /// Symmetric product A·B for commuting symmetric A, B (used for
    /// H·(I + tH)⁻¹, where both factors are polynomials in H and the product
    /// is symmetric). The off-diagonal is formed from the (0,1) entry of the
    /// plain matrix product.
    pub fn mul_commuting(&self, other: &SymMat) -> SymMat {
        debug_assert_eq!(self.dim, other.dim);
        match self.dim {
            1 => SymMat {
                dim: 1,
                e: [self.e[0] * other.e[0], 0.0, 0.0],
            },
            _ => SymMat {
                dim: 2,
                e: [
                    self.e[0] * other.e[0] + self.e[1] * other.e[1],
                    self.e[0] * other.e[1] + self.e[1] * other.e[2],
                    self.e[1] * other.e[1] + self.e[2] * other.e[2],
                ],
            },
        }
    }

    /// Largest absolute entry (matrix max-norm used by residual fields).
    pub fn max_abs_entry(&self) -> f64 {
        match self.dim {
            1 => self.e[0].abs(),
            _ => self.e[0].abs().max(self.e[1].abs()).max(self.e[2].abs()),
        }
    }
}

/// Field of symmetric n×n matrices, one per node; upper triangle stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatField {
    grid: TorusGrid,
    /// `stride` entries per node: 1 for n = 1, 3 for n = 2 ([a₀₀, a₀₁, a₁₁]).
    entries: Vec<f64>,
}

impl SymMatField {
    fn stride(dim: usize) -> usize {
        match dim {
            1 => 1,
            _ => 3,
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            entries: vec![0.0; grid.num_nodes() * Self::stride(grid.dim())],
        }
    }

    /// Builds a constant field from a single matrix.
    pub fn constant(grid: TorusGrid, m: SymMat) -> Self {
        assert_eq!(m.dim, grid.dim());
        let mut field = Self::zeros(grid);
        for node in 0..grid.num_nodes() {
            field.set(node, m);
        }
        field
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn at(&self, node: usize) -> SymMat {
        let dim = self.grid.dim();
        let s = Self::stride(dim);
        let base = node * s;
        let mut m = SymMat::zero(dim);
        m.e[..s].copy_from_slice(&self.entries[base..base + s]);
        m
    }

    pub fn set(&mut self, node: usize, m: SymMat) {
        let s = Self::stride(self.grid.dim());
        let base = node * s;
        self.entries[base..base + s].copy_from_slice(&m.e[..s]);
    }
}

/// Centered second-order periodic gradient of a scalar field.
pub fn gradient(field: &GridField) -> VectorField {
    let grid = field.grid();
    let inv_2h = 0.5 / grid.h();
    let mut out = VectorField::zeros(grid);
    for node in 0..grid.num_nodes() {
        for d in 0..grid.dim() {
            let fwd = field.value(grid.neighbor(node, d, 1));
            let bwd = field.value(grid.neighbor(node, d, -1));
            out.set_component(node, d, (fwd - bwd) * inv_2h);
        }
    }
    out
}

/// Periodic finite-difference Hessian: second differences on the diagonal,
/// composed centered first differences off-diagonal (n = 2).
pub fn hessian(field: &GridField) -> SymMatField {
    let grid = field.grid();
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let inv_4h2 = 0.25 * inv_h2;
    let mut out = SymMatField::zeros(grid);
    for node in 0..grid.num_nodes() {
        let center = field.value(node);
        let mut m = SymMat::zero(grid.dim());
        for d in 0..grid.dim() {
            let fwd = field.value(grid.neighbor(node, d, 1));
            let bwd = field.value(grid.neighbor(node, d, -1));
            let second = (fwd - 2.0 * center + bwd) * inv_h2;
            if d == 0 {
                m.e[0] = second;
            } else {
                m.e[2] = second;
            }
        }
        if grid.dim() == 2 {
            let pp = field.value(grid.neighbor(grid.neighbor(node, 0, 1), 1, 1));
            let pm = field.value(grid.neighbor(grid.neighbor(node, 0, 1), 1, -1));
            let mp = field.value(grid.neighbor(grid.neighbor(node, 0, -1), 1, 1));
            let mm = field.value(grid.neighbor(grid.neighbor(node, 0, -1), 1, -1));
            m.e[1] = (pp - pm - mp + mm) * inv_4h2;
        }
        out.set(node, m);
    }
    out
}

/// Per-node smallest eigenvalue of a symmetric matrix field, with the global
/// minimum and its node (ties broken by the lowest node index).
#[derive(Clone, Debug)]
pub struct MinEigStats {
    pub eigmin: GridField,
    pub global_min: f64,
    pub argmin: usize,
}

/// Computes [`MinEigStats`] for a Hessian-like field.
pub fn min_eig_stats(field: &SymMatField) -> MinEigStats {
    let grid = field.grid();
    let mut values = Vec::with_capacity(grid.num_nodes());
    let mut global_min = f64::INFINITY;
    let mut argmin = 0;
    for node in 0..grid.num_nodes() {
        let eig = field.at(node).min_eig();
        if eig < global_min {
            global_min = eig;
            argmin = node;
        }
        values.push(eig);
    }
    MinEigStats {
        eigmin: GridField::new(grid, values).expect("eigenvalue count matches grid"),
        global_min,
        argmin,
    }
}
