//! Off-grid evaluation of node fields: periodic multilinear interpolation and
//! a trigonometric (Fourier) interpolant with analytic derivatives.
//!
//! Multilinear interpolation is the convex-combination rule used wherever a
//! composed map lands between nodes (it preserves positivity and bounds and
//! is O(h²)-accurate). The trigonometric interpolant reproduces band-limited
//! fields exactly and supplies smooth first and second derivatives; it backs
//! the sub-grid refinement of infimal convolutions, where a merely piecewise
//! interpolant would contaminate second differences.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{wrap_unit, GridField, SymMat, SymMatField, TorusGrid};

/// Periodic multilinear interpolation of a scalar field at an arbitrary
/// point (coordinates need not be pre-wrapped).
pub fn interp_scalar(field: &GridField, point: &[f64]) -> f64 {
    let grid = field.grid();
    let (corners, weights, count) = corner_weights(grid, point);
    let mut acc = 0.0;
    for c in 0..count {
        acc += weights[c] * field.value(corners[c]);
    }
    acc
}

/// Periodic multilinear interpolation of a symmetric-matrix field,
/// entry by entry (linearity preserves symmetry).
pub fn interp_symmat(field: &SymMatField, point: &[f64]) -> SymMat {
    let grid = field.grid();
    let (corners, weights, count) = corner_weights(grid, point);
    let mut out = SymMat::zero(grid.dim());
    for c in 0..count {
        let m = field.at(corners[c]);
        for k in 0..3 {
            out.e[k] += weights[c] * m.e[k];
        }
    }
    out
}

/// Corner nodes and convex weights of the grid cell containing `point`.
fn corner_weights(grid: TorusGrid, point: &[f64]) -> ([usize; 4], [f64; 4], usize) {
    let m = grid.points_per_dim();
    let mut base = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for d in 0..grid.dim() {
        let scaled = wrap_unit(point[d]) * m as f64;
        let cell = scaled.floor();
        base[d] = (cell as usize) % m;
        frac[d] = scaled - cell;
    }
    let mut corners = [0usize; 4];
    let mut weights = [0.0f64; 4];
    let count = match grid.dim() {
        1 => {
            let i0 = base[0];
            let i1 = (base[0] + 1) % m;
            corners[0] = i0;
            corners[1] = i1;
            weights[0] = 1.0 - frac[0];
            weights[1] = frac[0];
            2
        }
        _ => {
            let i0 = base[0];
            let i1 = (base[0] + 1) % m;
            let j0 = base[1];
            let j1 = (base[1] + 1) % m;
            let (tx, ty) = (frac[0], frac[1]);
            corners[0] = grid.node_index([i0, j0]);
            corners[1] = grid.node_index([i1, j0]);
            corners[2] = grid.node_index([i0, j1]);
            corners[3] = grid.node_index([i1, j1]);
            weights[0] = (1.0 - tx) * (1.0 - ty);
            weights[1] = tx * (1.0 - ty);
            weights[2] = (1.0 - tx) * ty;
            weights[3] = tx * ty;
            4
        }
    };
    (corners, weights, count)
}

/// Value, gradient, and Hessian of a trigonometric interpolant at one point.
#[derive(Clone, Copy, Debug)]
pub struct TrigJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: SymMat,
}

/// Trigonometric interpolant of a grid scalar field: the unique band-limited
/// representation u(y) = Re Σ_m ĉ_m e^{2πi m̃·y}, with signed frequencies
/// m̃ ∈ [−M/2, M/2). Exact at the nodes; infinitely smooth in between.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    grid: TorusGrid,
    /// Normalized DFT coefficients, row-major like the node values.
    coeffs: Vec<Complex<f64>>,
    /// Angular frequency ω_m = 2π·m̃ per per-dimension index.
    omega: Vec<f64>,
}

impl TrigInterpolant {
    pub fn new(field: &GridField) -> Self {
        let grid = field.grid();
        let m = grid.points_per_dim();
        let mut coeffs: Vec<Complex<f64>> = field
            .values()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        forward_dft(grid, &mut coeffs);
        let norm = 1.0 / grid.num_nodes() as f64;
        for c in coeffs.iter_mut() {
            *c *= norm;
        }
        let omega = (0..m)
            .map(|idx| std::f64::consts::TAU * signed_frequency(idx, m))
            .collect();
        Self {
            grid,
            coeffs,
            omega,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Evaluates value, gradient, and Hessian at `point` in one pass.
    pub fn jet(&self, point: &[f64]) -> TrigJet {
        let m = self.grid.points_per_dim();
        match self.grid.dim() {
            1 => {
                let phases = phase_table(&self.omega, wrap_unit(point[0]));
                let mut s = Complex::new(0.0, 0.0);
                let mut s1 = Complex::new(0.0, 0.0);
                let mut s11 = Complex::new(0.0, 0.0);
                for (idx, &c) in self.coeffs.iter().enumerate() {
                    let w = c * phases[idx];
                    let omega = self.omega[idx];
                    s += w;
                    s1 += w * Complex::new(0.0, omega);
                    s11 += w * (-omega * omega);
                }
                TrigJet {
                    value: s.re,
                    grad: [s1.re, 0.0],
                    hess: SymMat {
                        dim: 1,
                        e: [s11.re, 0.0, 0.0],
                    },
                }
            }
            _ => {
                let ph0 = phase_table(&self.omega, wrap_unit(point[0]));
                let ph1 = phase_table(&self.omega, wrap_unit(point[1]));
                let mut s = Complex::new(0.0, 0.0);
                let mut s0 = Complex::new(0.0, 0.0);
                let mut s1 = Complex::new(0.0, 0.0);
                let mut s00 = Complex::new(0.0, 0.0);
                let mut s01 = Complex::new(0.0, 0.0);
                let mut s11 = Complex::new(0.0, 0.0);
                for m0 in 0..m {
                    let w0 = self.omega[m0];
                    // Partial sums over the inner index, already phase-weighted.
                    let mut t = Complex::new(0.0, 0.0);
                    let mut t1 = Complex::new(0.0, 0.0);
                    let mut t11 = Complex::new(0.0, 0.0);
                    let row = &self.coeffs[m0 * m..(m0 + 1) * m];
                    for m1 in 0..m {
                        let w1 = self.omega[m1];
                        let w = row[m1] * ph1[m1];
                        t += w;
                        t1 += w * Complex::new(0.0, w1);
                        t11 += w * (-w1 * w1);
                    }
                    let outer = ph0[m0];
                    s += t * outer;
                    s0 += t * outer * Complex::new(0.0, w0);
                    s1 += t1 * outer;
                    s00 += t * outer * (-w0 * w0);
                    s01 += t1 * outer * Complex::new(0.0, w0);
                    s11 += t11 * outer;
                }
                TrigJet {
                    value: s.re,
                    grad: [s0.re, s1.re],
                    hess: SymMat {
                        dim: 2,
                        e: [s00.re, s01.re, s11.re],
                    },
                }
            }
        }
    }

    /// Value only.
    pub fn value(&self, point: &[f64]) -> f64 {
        self.jet(point).value
    }
}

fn phase_table(omega: &[f64], x: f64) -> Vec<Complex<f64>> {
    omega
        .iter()
        .map(|&w| Complex::from_polar(1.0, w * x))
        .collect()
}

/// In-place forward DFT over every dimension of a row-major complex array.
pub(crate) fn forward_dft(grid: TorusGrid, data: &mut [Complex<f64>]) {
    let m = grid.points_per_dim();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    match grid.dim() {
        1 => fft.process(data),
        _ => {
            // Rows (contiguous), then columns (gathered through scratch).
            for row in data.chunks_exact_mut(m) {
                fft.process(row);
            }
            let mut scratch = vec![Complex::new(0.0, 0.0); m];
            for col in 0..m {
                for (r, slot) in scratch.iter_mut().enumerate() {
                    *slot = data[r * m + col];
                }
                fft.process(&mut scratch);
                for (r, &v) in scratch.iter().enumerate() {
                    data[r * m + col] = v;
                }
            }
        }
    }
}

/// Inverse of [`forward_dft`] including the 1/Mⁿ normalization, so the
/// roundtrip reproduces the input.
pub(crate) fn inverse_dft(grid: TorusGrid, data: &mut [Complex<f64>]) {
    let m = grid.points_per_dim();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(m);
    match grid.dim() {
        1 => fft.process(data),
        _ => {
            for row in data.chunks_exact_mut(m) {
                fft.process(row);
            }
            let mut scratch = vec![Complex::new(0.0, 0.0); m];
            for col in 0..m {
                for (r, slot) in scratch.iter_mut().enumerate() {
                    *slot = data[r * m + col];
                }
                fft.process(&mut scratch);
                for (r, &v) in scratch.iter().enumerate() {
                    data[r * m + col] = v;
                }
            }
        }
    }
    let norm = 1.0 / grid.num_nodes() as f64;
    for c in data.iter_mut() {
        *c *= norm;
    }
}

/// Signed integer frequency for a DFT index: m̃ ∈ [−M/2, M/2).
pub(crate) fn signed_frequency(index: usize, m: usize) -> f64 {
    if index * 2 >= m {
        index as f64 - m as f64
    } else {
        index as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn multilinear_is_exact_at_nodes() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let u = GridField::from_fn(grid, |p| {
            (TAU * p[0]).sin() + 0.5 * (TAU * 2.0 * p[1]).cos()
        });
        for node in 0..grid.num_nodes() {
            let p = grid.coords(node);
            assert_abs_diff_eq!(interp_scalar(&u, &p), u.value(node), epsilon = 1e-13);
        }
    }

    #[test]
    fn multilinear_wraps_across_the_last_cell() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let u = GridField::from_fn(grid, |p| (TAU * p[0]).cos());
        // Midpoint of the seam cell [7h, 1): average of the two endpoint nodes.
        let mid = 7.5 * grid.h();
        let expected = 0.5 * (u.value(7) + u.value(0));
        assert_abs_diff_eq!(interp_scalar(&u, &[mid]), expected, epsilon = 1e-14);
    }

    #[test]
    fn trig_interpolant_reproduces_band_limited_fields_exactly() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let u = GridField::from_fn(grid, |p| 1.0 + 0.3 * (TAU * p[0]).sin());
        let trig = TrigInterpolant::new(&u);
        for &x in &[0.0, 0.013, 0.37, 0.5, 0.9991] {
            let jet = trig.jet(&[x]);
            assert_abs_diff_eq!(jet.value, 1.0 + 0.3 * (TAU * x).sin(), epsilon = 1e-12);
            assert_abs_diff_eq!(jet.grad[0], 0.3 * TAU * (TAU * x).cos(), epsilon = 1e-10);
            assert_abs_diff_eq!(
                jet.hess.e[0],
                -0.3 * TAU * TAU * (TAU * x).sin(),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn trig_interpolant_matches_two_dimensional_product_mode() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let u = GridField::from_fn(grid, |p| {
            1.0 + 0.4 * (TAU * p[0]).cos() * (TAU * p[1]).cos()
        });
        let trig = TrigInterpolant::new(&u);
        let p = [0.21, 0.68];
        let jet = trig.jet(&p);
        let (cx, sx) = ((TAU * p[0]).cos(), (TAU * p[0]).sin());
        let (cy, sy) = ((TAU * p[1]).cos(), (TAU * p[1]).sin());
        assert_abs_diff_eq!(jet.value, 1.0 + 0.4 * cx * cy, epsilon = 1e-12);
        assert_abs_diff_eq!(jet.grad[0], -0.4 * TAU * sx * cy, epsilon = 1e-10);
        assert_abs_diff_eq!(jet.grad[1], -0.4 * TAU * cx * sy, epsilon = 1e-10);
        assert_abs_diff_eq!(jet.hess.e[0], -0.4 * TAU * TAU * cx * cy, epsilon = 1e-8);
        assert_abs_diff_eq!(jet.hess.e[1], 0.4 * TAU * TAU * sx * sy, epsilon = 1e-8);
        assert_abs_diff_eq!(jet.hess.e[2], -0.4 * TAU * TAU * cx * cy, epsilon = 1e-8);
    }

    #[test]
    fn trig_interpolant_is_exact_at_grid_nodes_for_generic_fields() {
        let grid = TorusGrid::new(1, 32).unwrap();
        // Not band-limited to low modes: includes a sharp bump.
        let u = GridField::from_fn(grid, |p| (-((p[0] - 0.5) * (p[0] - 0.5)) * 40.0).exp());
        let trig = TrigInterpolant::new(&u);
        for node in 0..grid.num_nodes() {
            let p = grid.coords(node);
            assert_abs_diff_eq!(trig.value(&p), u.value(node), epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn multilinear_stays_within_field_bounds(
            x in 0.0..1.0f64,
            y in 0.0..1.0f64,
        ) {
            let grid = TorusGrid::new(2, 8).unwrap();
            let u = GridField::from_fn(grid, |p| (TAU * p[0]).sin() * (TAU * p[1]).cos());
            let v = interp_scalar(&u, &[x, y]);
            prop_assert!(v >= u.min_value() - 1e-12);
            prop_assert!(v <= u.max_value() + 1e-12);
        }

        #[test]
        fn multilinear_approaches_trig_on_smooth_fields(
            x in 0.0..1.0f64,
        ) {
            let grid = TorusGrid::new(1, 128).unwrap();
            let u = GridField::from_fn(grid, |p| 1.0 + 0.5 * (TAU * p[0]).cos());
            let trig = TrigInterpolant::new(&u);
            let gap = (interp_scalar(&u, &[x]) - trig.value(&[x])).abs();
            // Multilinear carries O(h²·|u''|) ≈ 1.2e-3 error; trig is exact.
            prop_assert!(gap <= 2e-3, "gap {} too large", gap);
        }

        #[test]
        fn symmat_interpolation_is_entrywise_linear(
            t in 0.0..1.0f64,
        ) {
            let grid = TorusGrid::new(1, 8).unwrap();
            let u = GridField::from_fn(grid, |p| (TAU * p[0]).sin());
            let hess = crate::torus::hessian(&u);
            let x = t * grid.h(); // inside the first cell
            let interp = interp_symmat(&hess, &[x]);
            let expected = (1.0 - t) * hess.at(0).e[0] + t * hess.at(1).e[0];
            prop_assert!((interp.e[0] - expected).abs() <= 1e-12);
        }
    }
}
