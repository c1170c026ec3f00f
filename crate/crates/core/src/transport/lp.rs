//! Balanced transportation linear program, solved exactly by the
//! transportation simplex (northwest-corner start, tree potentials, cycle
//! pivots).
//!
//! This is the general exact route for instances too large for exhaustive
//! enumeration but still dense-representable (grids up to a few thousand
//! nodes). Besides optimal values it returns the dual potentials, whose
//! column part is the derivative of the optimal value with respect to the
//! demand masses — the gradient used by the direct proximal minimizer.

use crate::error::{Error, Result};

/// Exact primal/dual solution of a balanced transportation problem.
#[derive(Clone, Debug)]
pub struct LpSolution {
    /// Optimal cost Σ γ_ij·c_ij.
    pub value: f64,
    /// Strictly positive basic masses (i, j, mass), original indices.
    pub plan: Vec<(usize, usize, f64)>,
    /// Row duals α_i (zero for rows with zero supply).
    pub row_potentials: Vec<f64>,
    /// Column duals β_j with α_i + β_j ≤ c_ij, tight on the support.
    pub col_potentials: Vec<f64>,
    /// Simplex pivots performed.
    pub pivots: usize,
}

const MASS_EPS: f64 = 1e-15;
const BALANCE_TOL: f64 = 1e-9;

/// Solves min Σ γ_ij c(i,j) over couplings of `supplies` and `demands`.
pub fn solve_transport_lp(
    supplies: &[f64],
    demands: &[f64],
    cost: impl Fn(usize, usize) -> f64,
) -> Result<LpSolution> {
    if supplies.is_empty() || demands.is_empty() {
        return Err(Error::InvalidInput(
            "transportation problem needs at least one supply and one demand".into(),
        ));
    }
    if supplies.iter().chain(demands).any(|&m| !(m >= 0.0)) {
        return Err(Error::InvalidInput(
            "supplies and demands must be nonnegative".into(),
        ));
    }
    let total_a: f64 = supplies.iter().sum();
    let total_b: f64 = demands.iter().sum();
    let gap = (total_a - total_b).abs();
    if gap > BALANCE_TOL * total_a.max(1.0) {
        return Err(Error::Unbalanced { gap });
    }

    // Work on the strictly positive rows/columns only.
    let rows: Vec<usize> = (0..supplies.len())
        .filter(|&i| supplies[i] > MASS_EPS)
        .collect();
    let cols: Vec<usize> = (0..demands.len())
        .filter(|&j| demands[j] > MASS_EPS)
        .collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidInput(
            "transportation problem with no positive mass".into(),
        ));
    }
    let m = rows.len();
    let n = cols.len();
    let c = |i: usize, j: usize| cost(rows[i], cols[j]);
    let cost_scale = {
        let mut s = 0.0f64;
        for i in 0..m {
            for j in 0..n {
                s = s.max(c(i, j).abs());
            }
        }
        s.max(1.0)
    };
    let reduced_tol = 1e-12 * cost_scale;

    let mut basis = northwest_corner(
        &rows.iter().map(|&i| supplies[i]).collect::<Vec<_>>(),
        &cols.iter().map(|&j| demands[j]).collect::<Vec<_>>(),
    );

    let max_pivots = 40 * m * n + 2000;
    let mut pivots = 0;
    let mut degenerate_streak = 0usize;
    let mut alpha = vec![0.0; m];
    let mut beta = vec![0.0; n];
    loop {
        solve_potentials(&basis, m, n, &c, &mut alpha, &mut beta);

        // Entering cell: most negative reduced cost (Dantzig); after a run of
        // degenerate pivots, lexicographically first negative (Bland) to
        // guarantee termination.
        let bland = degenerate_streak > 32;
        let mut entering: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..m {
            for j in 0..n {
                let r = c(i, j) - alpha[i] - beta[j];
                if r < -reduced_tol {
                    match entering {
                        Some((_, _, best)) if !bland && r >= best => {}
                        Some(_) if bland => {}
                        _ => entering = Some((i, j, r)),
                    }
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let (ei, ej) = match entering {
            Some((i, j, _)) => (i, j),
            None => break,
        };

        if pivots >= max_pivots {
            return Err(Error::NonConvergence {
                iterations: pivots,
                residual: entering.map(|(_, _, r)| -r).unwrap_or(0.0),
                tolerance: reduced_tol,
            });
        }
        pivots += 1;

        // Unique cycle: path from row ei to col ej through the basis tree,
        // closed by the entering cell. Signs alternate with entering = '+'.
        let path = tree_path(&basis, m, n, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (pos, &cell_idx) in path.iter().enumerate() {
            // The path runs from the column end (sharing col ej with the
            // entering cell) to the row end, so even positions are donors
            // ('−') and odd positions receivers ('+').
            if pos % 2 == 0 {
                let mass = basis[cell_idx].2;
                let take = match leaving {
                    None => true,
                    Some(prev) => {
                        mass < theta
                            || (mass == theta
                                && (basis[cell_idx].0, basis[cell_idx].1)
                                    < (basis[prev].0, basis[prev].1))
                    }
                };
                if take {
                    theta = mass;
                    leaving = Some(cell_idx);
                }
            }
        }
        let leaving = leaving.expect("cycle always contains a donor cell");
        if theta <= MASS_EPS {
            degenerate_streak += 1;
        } else {
            degenerate_streak = 0;
        }

        for (pos, &cell_idx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[cell_idx].2 -= theta;
            } else {
                basis[cell_idx].2 += theta;
            }
        }
        basis[leaving] = (ei, ej, theta);
    }

    let mut value = 0.0;
    let mut plan = Vec::new();
    for &(i, j, mass) in &basis {
        if mass > MASS_EPS {
            value += mass * c(i, j);
            plan.push((rows[i], cols[j], mass));
        }
    }
    plan.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let mut row_potentials = vec![0.0; supplies.len()];
    let mut col_potentials = vec![0.0; demands.len()];
    for (i, &orig) in rows.iter().enumerate() {
        row_potentials[orig] = alpha[i];
    }
    for (j, &orig) in cols.iter().enumerate() {
        col_potentials[orig] = beta[j];
    }
    Ok(LpSolution {
        value,
        plan,
        row_potentials,
        col_potentials,
        pivots,
    })
}

/// Northwest-corner initial basis: exactly m + n − 1 cells, zero-mass cells
/// retained to keep the spanning tree intact.
fn northwest_corner(a: &[f64], b: &[f64]) -> Vec<(usize, usize, f64)> {
    let m = a.len();
    let n = b.len();
    let mut rem_a = a.to_vec();
    let mut rem_b = b.to_vec();
    let mut basis = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let delta = rem_a[i].min(rem_b[j]).max(0.0);
        basis.push((i, j, delta));
        rem_a[i] -= delta;
        rem_b[j] -= delta;
        if i == m - 1 && j == n - 1 {
            break;
        }
        // Advance along one axis only, even on ties, so the basis stays a
        // path (tree) with exactly m + n − 1 cells.
        if rem_a[i] <= MASS_EPS && i < m - 1 {
            i += 1;
        } else if j < n - 1 {
            j += 1;
        } else {
            i += 1;
        }
    }
    basis
}

/// Solves α_i + β_j = c_ij on the basis spanning tree, α_0 = 0.
fn solve_potentials(
    basis: &[(usize, usize, f64)],
    m: usize,
    n: usize,
    c: &impl Fn(usize, usize) -> f64,
    alpha: &mut [f64],
    beta: &mut [f64],
) {
    // Bipartite adjacency: node ids 0..m are rows, m..m+n are columns.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
    for (idx, &(i, j, _)) in basis.iter().enumerate() {
        adj[i].push((m + j, idx));
        adj[m + j].push((i, idx));
    }
    let mut seen = vec![false; m + n];
    let mut stack = vec![0usize];
    alpha[0] = 0.0;
    seen[0] = true;
    while let Some(node) = stack.pop() {
        for &(next, cell) in &adj[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            let (i, j, _) = basis[cell];
            if next >= m {
                beta[next - m] = c(i, j) - alpha[i];
            } else {
                alpha[next] = c(i, j) - beta[j];
            }
            stack.push(next);
        }
    }
}

/// Edge sequence (basis indices) of the unique tree path from column `ej`
/// back to row `ei`.
fn tree_path(
    basis: &[(usize, usize, f64)],
    m: usize,
    n: usize,
    ei: usize,
    ej: usize,
) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
    for (idx, &(i, j, _)) in basis.iter().enumerate() {
        adj[i].push((m + j, idx));
        adj[m + j].push((i, idx));
    }
    // BFS from the column node to the row node.
    let start = m + ej;
    let goal = ei;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n]; // (prev node, edge)
    let mut seen = vec![false; m + n];
    let mut queue = std::collections::VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(node) = queue.pop_front() {
        if node == goal {
            break;
        }
        for &(next, cell) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, cell));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = goal;
    while let Some((prev, cell)) = parent[node] {
        path.push(cell);
        node = prev;
    }
    path.reverse(); // now ordered from the column end toward the row end
    path
}
