//! Preconditioned conjugate-gradient solves for the shifted five-point systems every
//! implicit operation steps through.
//!
//! Harmonic extension, the implicit half of each gradient-flow step, and inverse power
//! iteration all reduce to one Dirichlet problem
//!
//!   c0 u - c1 lap u = rhs   at interior nodes,   u = data   on the boundary,
//!
//! with c0 >= 0, c1 > 0: a symmetric positive definite M-matrix on the interior unknowns.
//! The solver is CG preconditioned with a zero-fill incomplete Cholesky factor (IC(0)),
//! which keeps iteration counts in the tens even for the nearly-singular pure-Laplace
//! case on fine grids.
//!
//! Vectors are full-grid: the caller seeds the boundary entries of `x` with the Dirichlet
//! data, CG updates interior entries only, and search directions carry zero boundary
//! entries so the fixed data enters the residual exactly once. All reductions are
//! fixed-order sums, so solves are bitwise reproducible.

use crate::complex::Complex;
use crate::grid::{ComplexField, Grid};

/// Outcome of one conjugate-gradient solve.
#[derive(Clone, Copy, Debug)]
pub struct CgStats {
    pub iterations: usize,
    /// Final residual norm relative to the right-hand side norm.
    pub rel_residual: f64,
    pub converged: bool,
}

fn dot(a: &[Complex], b: &[Complex]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x.re * y.re + x.im * y.im;
    }
    acc
}

/// Applies `c0 x - c1 lap x` at interior nodes of `x` into `out`; boundary entries of
/// `out` are zeroed.
fn apply(grid: &Grid, c0: f64, c1: f64, x: &[Complex], out: &mut [Complex]) {
    let side = grid.side();
    let s = c1 / (grid.h * grid.h);
    out.fill(Complex::ZERO);
    for iy in 1..grid.n_cells {
        let row = iy * side;
        for ix in 1..grid.n_cells {
            let p = row + ix;
            let nb = x[p - 1] + x[p + 1] + x[p - side] + x[p + side];
            out[p] = x[p].scale(c0 + 4.0 * s) - nb.scale(s);
        }
    }
}

/// Zero-fill incomplete Cholesky pivots for the interior operator `c0 I - c1 lap`.
///
/// The factor keeps the five-point sparsity: off-diagonals equal the matrix entry -s
/// divided by the neighbor pivot, so only the diagonal of L needs storing. Returns the
/// pivots (boundary slots unused).
fn ic0_pivots(grid: &Grid, c0: f64, c1: f64) -> Vec<f64> {
    let side = grid.side();
    let s = c1 / (grid.h * grid.h);
    let diag = c0 + 4.0 * s;
    let mut pivot = vec![0.0f64; grid.n_nodes()];
    for iy in 1..grid.n_cells {
        for ix in 1..grid.n_cells {
            let p = iy * side + ix;
            let mut d = diag;
            if ix > 1 {
                d -= (s * s) / pivot[p - 1];
            }
            if iy > 1 {
                d -= (s * s) / pivot[p - side];
            }
            pivot[p] = d.max(1e-300);
        }
    }
    pivot
}

/// Solves `M z = r` with the IC(0) factor: forward sweep with L, backward sweep with L^T.
fn ic0_solve(grid: &Grid, c1_over_h2: f64, pivot: &[f64], r: &[Complex], z: &mut [Complex]) {
    let side = grid.side();
    let s = c1_over_h2;
    z.fill(Complex::ZERO);
    for iy in 1..grid.n_cells {
        let row = iy * side;
        for ix in 1..grid.n_cells {
            let p = row + ix;
            let mut acc = r[p];
            if ix > 1 {
                acc += z[p - 1].scale(s);
            }
            if iy > 1 {
                acc += z[p - side].scale(s);
            }
            z[p] = acc.scale(1.0 / pivot[p]);
        }
    }
    for iy in (1..grid.n_cells).rev() {
        let row = iy * side;
        for ix in (1..grid.n_cells).rev() {
            let p = row + ix;
            let mut acc = z[p].scale(pivot[p]);
            if ix + 1 < grid.n_cells {
                acc += z[p + 1].scale(s);
            }
            if iy + 1 < grid.n_cells {
                acc += z[p + side].scale(s);
            }
            z[p] = acc.scale(1.0 / pivot[p]);
        }
    }
}

/// Solves `c0 u - c1 lap u = rhs` at interior nodes with the Dirichlet data already
/// stored in the boundary entries of `x`. Interior entries of `x` serve as the initial
/// guess and are overwritten with the solution. Boundary entries of `rhs` are ignored.
pub fn solve_shifted_laplacian(
    grid: &Grid,
    c0: f64,
    c1: f64,
    rhs: &[Complex],
    x: &mut ComplexField,
    rel_tol: f64,
    max_iters: usize,
) -> CgStats {
    let n_nodes = grid.n_nodes();
    debug_assert_eq!(rhs.len(), n_nodes);
    debug_assert_eq!(x.len(), n_nodes);
    let side = grid.side();

    // The effective load is the rhs plus the coupling of the pinned boundary values,
    // so boundary-driven solves (zero rhs, nonzero Dirichlet data) get a real target.
    let mut ax = vec![Complex::ZERO; n_nodes];
    let mut bc = vec![Complex::ZERO; n_nodes];
    for bn in &grid.boundary_order {
        bc[bn.index] = x[bn.index];
    }
    apply(grid, c0, c1, &bc, &mut ax);
    let mut load_sq = 0.0;
    for iy in 1..grid.n_cells {
        for ix in 1..grid.n_cells {
            let p = iy * side + ix;
            load_sq += (rhs[p] - ax[p]).abs_sq();
        }
    }
    let rhs_norm = load_sq.sqrt().max(1e-300);
    let target = rel_tol * rhs_norm;

    // Residual lives on interior nodes only.
    apply(grid, c0, c1, x, &mut ax);
    let mut r = vec![Complex::ZERO; n_nodes];
    for iy in 1..grid.n_cells {
        for ix in 1..grid.n_cells {
            let p = iy * side + ix;
            r[p] = rhs[p] - ax[p];
        }
    }

    let mut r_norm = dot(&r, &r).sqrt();
    if r_norm <= target {
        return CgStats { iterations: 0, rel_residual: r_norm / rhs_norm, converged: true };
    }

    let pivot = ic0_pivots(grid, c0, c1);
    let s = c1 / (grid.h * grid.h);
    let mut z = vec![Complex::ZERO; n_nodes];
    ic0_solve(grid, s, &pivot, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![Complex::ZERO; n_nodes];
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        apply(grid, c0, c1, &p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n_nodes {
            x[i] += p[i].scale(alpha);
            r[i] -= ap[i].scale(alpha);
        }
        r_norm = dot(&r, &r).sqrt();
        if r_norm <= target || !r_norm.is_finite() || r_norm > 1e8 * rhs_norm {
            break;
        }
        ic0_solve(grid, s, &pivot, &r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n_nodes {
            p[i] = z[i] + p[i].scale(beta);
        }
    }

    CgStats {
        iterations,
        rel_residual: r_norm / rhs_norm,
        converged: r_norm <= target,
    }
}
