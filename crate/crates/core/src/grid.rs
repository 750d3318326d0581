//! Uniform grid on the closed unit square, with the discrete calculus the lab runs on.
//!
//! Nodes sit at (ix h, iy h) for 0 <= ix, iy <= n_cells, h = 1/n_cells, stored row-major
//! (index = iy (n_cells+1) + ix). Three operators live here:
//!
//! - trapezoid quadrature: node weight h^2 in the interior, h^2/2 on edges, h^2/4 at
//!   corners, so the weights sum to the unit area exactly;
//! - the five-point Laplacian (f_E + f_W + f_N + f_S - 4 f_C)/h^2 at interior nodes;
//! - second-order one-sided outward normal derivatives on the boundary,
//!   (3 f_b - 4 f_{b-nu h} + f_{b-2 nu h}) / (2h), averaged over both edges at corners.
//!
//! The boundary is walked counterclockwise from the origin, and each boundary node carries
//! the perimeter parameter t in [0,1) (arc length divided by 4) that boundary data is
//! evaluated at.

use crate::complex::Complex;
use thiserror::Error;

/// Real-valued nodal field, one entry per grid node, row-major.
pub type ScalarField = Vec<f64>;
/// Complex-valued nodal field, one entry per grid node, row-major.
pub type ComplexField = Vec<Complex>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("n_cells must be even, got {0}")]
    OddCells(usize),
    #[error("n_cells must be at least 4, got {0}")]
    TooCoarse(usize),
}

/// One node of the counterclockwise boundary walk.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryNode {
    /// Row-major node index.
    pub index: usize,
    /// Perimeter parameter in [0,1): arc length from (0,0), counterclockwise, divided by 4.
    pub t: f64,
    /// True at the four corners of the square.
    pub corner: bool,
}

/// Outward normal derivative sample at one boundary node.
#[derive(Clone, Copy, Debug)]
pub struct NormalSample {
    /// Row-major node index.
    pub index: usize,
    /// Perimeter parameter of the node.
    pub t: f64,
    /// True when the value is the average of the two one-sided corner stencils.
    pub corner: bool,
    /// d field / d nu, outward.
    pub dnu: Complex,
}

/// Uniform grid over [0,1]^2.
#[derive(Clone, Debug)]
pub struct Grid {
    /// Cells per side; even and at least 4.
    pub n_cells: usize,
    /// Mesh width 1/n_cells.
    pub h: f64,
    /// Boundary nodes in counterclockwise order starting at the origin.
    pub boundary_order: Vec<BoundaryNode>,
    /// Quadrature weight units per node: 4 interior, 2 edge, 1 corner (units of h^2/4).
    weight_units: Vec<f64>,
}

/// Builds the grid, rejecting odd or too-coarse resolutions.
pub fn build_grid(n_cells: usize) -> Result<Grid, GridError> {
    if n_cells % 2 != 0 {
        return Err(GridError::OddCells(n_cells));
    }
    if n_cells < 4 {
        return Err(GridError::TooCoarse(n_cells));
    }
    let n = n_cells;
    let side = n + 1;
    let h = 1.0 / n as f64;

    let mut weight_units = vec![4.0; side * side];
    for i in 0..side {
        for &(ix, iy) in &[(i, 0), (i, n), (0, i), (n, i)] {
            weight_units[iy * side + ix] = 2.0;
        }
    }
    for &(ix, iy) in &[(0, 0), (n, 0), (n, n), (0, n)] {
        weight_units[iy * side + ix] = 1.0;
    }

    // Counterclockwise walk: bottom, right, top, left; each node listed once.
    let mut boundary_order = Vec::with_capacity(4 * n);
    let quarter = |dist: f64| dist / 4.0;
    for ix in 0..n {
        boundary_order.push((ix, 0usize, quarter(ix as f64 * h)));
    }
    for iy in 0..n {
        boundary_order.push((n, iy, quarter(1.0 + iy as f64 * h)));
    }
    for ix in 0..n {
        let jx = n - ix;
        boundary_order.push((jx, n, quarter(2.0 + (n - jx) as f64 * h)));
    }
    for iy in 0..n {
        let jy = n - iy;
        boundary_order.push((0, jy, quarter(3.0 + (n - jy) as f64 * h)));
    }
    let boundary_order = boundary_order
        .into_iter()
        .map(|(ix, iy, t)| BoundaryNode {
            index: iy * side + ix,
            t,
            corner: (ix == 0 || ix == n) && (iy == 0 || iy == n),
        })
        .collect();

    Ok(Grid {
        n_cells,
        h,
        boundary_order,
        weight_units,
    })
}

impl Grid {
    /// Nodes per side, n_cells + 1.
    #[must_use]
    pub fn side(&self) -> usize {
        self.n_cells + 1
    }

    /// Total node count, (n_cells + 1)^2.
    #[must_use]
    pub fn n_nodes(&self) -> usize {
        self.side() * self.side()
    }

    /// Row-major node index of (ix, iy).
    #[must_use]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.side() + ix
    }

    /// Coordinates (x, y) of a node index.
    #[must_use]
    pub fn coords(&self, index: usize) -> (f64, f64) {
        let side = self.side();
        ((index % side) as f64 * self.h, (index / side) as f64 * self.h)
    }

    /// True for nodes on the boundary of the square.
    #[must_use]
    pub fn is_boundary(&self, index: usize) -> bool {
        let side = self.side();
        let (ix, iy) = (index % side, index / side);
        ix == 0 || iy == 0 || ix == self.n_cells || iy == self.n_cells
    }

    /// Physical quadrature weight of a node.
    #[must_use]
    pub fn weight(&self, index: usize) -> f64 {
        self.weight_units[index] * self.h * self.h / 4.0
    }

    /// Quadrature-weighted sum over all nodes, in fixed row-major order.
    ///
    /// Accumulates integer weight units and divides by 4 n_cells^2 once at the end,
    /// so the constant field 1 integrates to exactly 1.0.
    #[must_use]
    pub fn integrate(&self, field: &[f64]) -> f64 {
        debug_assert_eq!(field.len(), self.n_nodes());
        let mut acc = 0.0;
        for (units, value) in self.weight_units.iter().zip(field) {
            acc += units * value;
        }
        acc / (4.0 * (self.n_cells * self.n_cells) as f64)
    }

    /// Five-point Laplacian at interior nodes; boundary entries of the result are zero.
    #[must_use]
    pub fn laplacian(&self, field: &[Complex]) -> ComplexField {
        debug_assert_eq!(field.len(), self.n_nodes());
        let side = self.side();
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut out = vec![Complex::ZERO; field.len()];
        for iy in 1..self.n_cells {
            for ix in 1..self.n_cells {
                let p = iy * side + ix;
                let sum = field[p - 1] + field[p + 1] + field[p - side] + field[p + side]
                    - field[p].scale(4.0);
                out[p] = sum.scale(inv_h2);
            }
        }
        out
    }

    /// Five-point Laplacian of a real field; boundary entries of the result are zero.
    #[must_use]
    pub fn laplacian_scalar(&self, field: &[f64]) -> ScalarField {
        debug_assert_eq!(field.len(), self.n_nodes());
        let side = self.side();
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut out = vec![0.0; field.len()];
        for iy in 1..self.n_cells {
            for ix in 1..self.n_cells {
                let p = iy * side + ix;
                out[p] = (field[p - 1] + field[p + 1] + field[p - side] + field[p + side]
                    - 4.0 * field[p])
                    * inv_h2;
            }
        }
        out
    }

    /// Outward normal derivative along the boundary walk.
    ///
    /// Non-corner nodes use the one-sided stencil (3 f_b - 4 f_1 + f_2)/(2h) with f_1, f_2
    /// one and two steps inward; corners average the two edge stencils and are flagged.
    #[must_use]
    pub fn normal_derivative(&self, field: &[Complex]) -> Vec<NormalSample> {
        debug_assert_eq!(field.len(), self.n_nodes());
        let side = self.side();
        let n = self.n_cells;
        let one_sided = |p: usize, step: isize| -> Complex {
            let p1 = (p as isize + step) as usize;
            let p2 = (p as isize + 2 * step) as usize;
            (field[p].scale(3.0) - field[p1].scale(4.0) + field[p2]).scale(1.0 / (2.0 * self.h))
        };
        self.boundary_order
            .iter()
            .map(|bn| {
                let (ix, iy) = (bn.index % side, bn.index / side);
                let mut stencils = Vec::with_capacity(2);
                if iy == 0 {
                    stencils.push(one_sided(bn.index, side as isize));
                }
                if iy == n {
                    stencils.push(one_sided(bn.index, -(side as isize)));
                }
                if ix == 0 {
                    stencils.push(one_sided(bn.index, 1));
                }
                if ix == n {
                    stencils.push(one_sided(bn.index, -1));
                }
                let sum = stencils.iter().fold(Complex::ZERO, |a, &b| a + b);
                NormalSample {
                    index: bn.index,
                    t: bn.t,
                    corner: bn.corner,
                    dnu: sum.scale(1.0 / stencils.len() as f64),
                }
            })
            .collect()
    }
}
