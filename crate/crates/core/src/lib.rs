//! Numerical laboratory for n-component Ginzburg-Landau vortices on the unit square.
//!
//! The lab minimizes the coupled energy
//!
//!   E_eps(u_1..u_n) = 1/2 int sum_j |grad u_j|^2  +  1/(4 eps^2) int (n - sum_j |u_j|^2)^2
//!
//! over complex-valued fields with prescribed boundary data g_j(t) = exp(i(2 pi d_j t + psi_j(t))),
//! and the eps -> 0 limit problem: the Dirichlet energy I(u) = sum_j int |grad u_j|^2 constrained
//! to sum_j |u_j|^2 = n pointwise. Everything lives on a uniform (n_cells+1)^2 node grid with the
//! five-point Laplacian and forward-difference Dirichlet energy, so discrete energies, gradients
//! and Euler-Lagrange residuals are mutually exact rather than merely consistent.
//!
//! Module map:
//! - [`complex`]: complex numbers as explicit pairs of reals
//! - [`grid`]: the grid, quadrature, five-point Laplacian, one-sided normal derivatives
//! - [`linsys`]: conjugate-gradient solves of the shifted-Laplacian systems every flow step needs
//! - [`boundary`]: boundary loops, winding numbers, phase lifting, harmonic extension
//! - [`field`]: multi-component fields, energies, gradients, initializers, snapshot format
//! - [`solver`]: semi-implicit gradient flow for the coupled energy
//! - [`harmonic`]: the constrained limit problem (projected flow), phase construction, lambda_1
//! - [`asymptotics`]: eps-continuation runs and the diagnostics extracted from them

pub mod asymptotics;
pub mod boundary;
pub mod complex;
pub mod field;
pub mod grid;
pub mod harmonic;
pub mod linsys;
pub mod snapshot;
pub mod solver;

pub use complex::Complex;
pub use grid::Grid;
