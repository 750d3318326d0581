//! Prescribed boundary data on the unit square and the loop diagnostics attached to it.
//!
//! Each field component carries boundary data g(t) = exp(i (2 pi d t + psi(t))) on the
//! counterclockwise perimeter parameter t in [0,1), where d >= 0 is the winding degree
//! and psi is a finite series sum_k a_k sin(2 pi f_k t + theta_k). A frequency-0 term
//! contributes the constant a sin(theta), which is how a family g_j = e^{i gamma_j} g_1
//! is written in this parametrization.
//!
//! The module also owns the discrete loop calculus: winding numbers from principal-branch
//! phase increments, continuous phase lifts for degree-zero loops, and the discrete
//! harmonic extension that seeds minimizers and builds the degree-zero phase construction.

use crate::complex::Complex;
use crate::grid::{ComplexField, Grid};
use crate::linsys::solve_shifted_laplacian;
use thiserror::Error;

/// One term `amplitude * sin(2 pi frequency t + phase)` of a boundary phase series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseTerm {
    pub frequency: u32,
    pub amplitude: f64,
    pub phase: f64,
}

/// Boundary data of one component: winding degree plus phase perturbation series.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMap {
    pub degree: u32,
    pub psi: Vec<PhaseTerm>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LoopError {
    #[error("winding needs at least 8 samples, got {0}")]
    TooFewSamples(usize),
    #[error("loop passes through zero: |z| = {modulus:.3e} at sample {index}")]
    ThroughZero { index: usize, modulus: f64 },
    #[error("undersampled loop: phase jump {jump:.3} at sample {index}")]
    Undersampled { index: usize, jump: f64 },
    #[error("no global phase lift: loop winds {0} times")]
    NoGlobalLift(i64),
}

impl BoundaryMap {
    #[must_use]
    pub fn new(degree: u32, psi: Vec<PhaseTerm>) -> Self {
        Self { degree, psi }
    }

    /// Plain degree-d data with no phase perturbation.
    #[must_use]
    pub fn pure_degree(degree: u32) -> Self {
        Self { degree, psi: Vec::new() }
    }

    /// The perturbation psi(t).
    #[must_use]
    pub fn psi(&self, t: f64) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        self.psi
            .iter()
            .map(|term| term.amplitude * (two_pi * f64::from(term.frequency) * t + term.phase).sin())
            .sum()
    }

    /// Constant part of psi (the frequency-0 terms).
    #[must_use]
    pub fn dc_offset(&self) -> f64 {
        self.psi
            .iter()
            .filter(|term| term.frequency == 0)
            .map(|term| term.amplitude * term.phase.sin())
            .sum()
    }

    /// The oscillating part of the series, for structural comparison between components.
    #[must_use]
    pub fn oscillating_terms(&self) -> Vec<PhaseTerm> {
        self.psi.iter().copied().filter(|term| term.frequency != 0).collect()
    }
}

/// Evaluates g(t) = exp(i (2 pi d t + psi(t))); t is reduced mod 1.
#[must_use]
pub fn evaluate_g(map: &BoundaryMap, t: f64) -> Complex {
    let t = t - t.floor();
    let theta = 2.0 * std::f64::consts::PI * f64::from(map.degree) * t + map.psi(t);
    Complex::unit(theta)
}

/// Samples g at every node of the grid's boundary walk, in walk order.
#[must_use]
pub fn boundary_samples(grid: &Grid, map: &BoundaryMap) -> Vec<Complex> {
    grid.boundary_order.iter().map(|bn| evaluate_g(map, bn.t)).collect()
}

/// Principal-branch phase increment from `a` to `b`, validated against zero crossings.
fn increment(a: Complex, b: Complex, index: usize) -> Result<f64, LoopError> {
    for (z, at) in [(a, index), (b, index + 1)] {
        if z.abs() < 1e-8 {
            return Err(LoopError::ThroughZero { index: at, modulus: z.abs() });
        }
    }
    let jump = (b * a.conj()).arg();
    if jump.abs() >= std::f64::consts::PI - 0.1 {
        return Err(LoopError::Undersampled { index, jump });
    }
    Ok(jump)
}

/// Winding number of a closed sampled loop (the first sample is not repeated at the end).
///
/// Sums principal-branch phase increments around the loop and rounds the total divided
/// by 2 pi. Rejects loops with fewer than 8 samples, samples within 1e-8 of zero, and
/// phase jumps of pi - 0.1 or more.
pub fn winding_number(samples: &[Complex]) -> Result<i64, LoopError> {
    if samples.len() < 8 {
        return Err(LoopError::TooFewSamples(samples.len()));
    }
    let mut total = 0.0;
    for k in 0..samples.len() {
        let next = samples[(k + 1) % samples.len()];
        total += increment(samples[k], next, k)?;
    }
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

/// Continuous phase along a degree-zero loop: phi_0 = arg(z_0), then accumulated
/// principal increments, so exp(i phi_k) = z_k / |z_k| to rounding accuracy.
///
/// Fails on loops of nonzero winding (no global lift exists) and on the same sampling
/// defects `winding_number` rejects.
pub fn lift_phase(samples: &[Complex]) -> Result<Vec<f64>, LoopError> {
    let w = winding_number(samples)?;
    if w != 0 {
        return Err(LoopError::NoGlobalLift(w));
    }
    let mut phi = Vec::with_capacity(samples.len());
    let mut current = samples[0].arg();
    phi.push(current);
    for k in 1..samples.len() {
        current += increment(samples[k - 1], samples[k], k - 1)?;
        phi.push(current);
    }
    Ok(phi)
}

/// Discrete harmonic extension: solves lap u = 0 with the given values (in boundary walk
/// order) pinned on the boundary. Satisfies the discrete maximum principle.
#[must_use]
pub fn harmonic_extension(grid: &Grid, boundary_values: &[Complex]) -> ComplexField {
    debug_assert_eq!(boundary_values.len(), grid.boundary_order.len());
    // Seeding with the boundary mean makes constant data exact (zero CG iterations)
    // and centers the start for everything else.
    let mean = boundary_values
        .iter()
        .fold(Complex::ZERO, |acc, &v| acc + v)
        .scale(1.0 / boundary_values.len() as f64);
    let mut x = vec![mean; grid.n_nodes()];
    for (bn, &v) in grid.boundary_order.iter().zip(boundary_values) {
        x[bn.index] = v;
    }
    let rhs = vec![Complex::ZERO; grid.n_nodes()];
    let stats = solve_shifted_laplacian(grid, 0.0, 1.0, &rhs, &mut x, 1e-12, 40 * grid.n_nodes());
    debug_assert!(stats.converged, "harmonic extension CG stalled at {}", stats.rel_residual);
    x
}

/// Scalar harmonic extension (used for lifted phases).
#[must_use]
pub fn harmonic_extension_scalar(grid: &Grid, boundary_values: &[f64]) -> Vec<f64> {
    let complex: Vec<Complex> = boundary_values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    harmonic_extension(grid, &complex).into_iter().map(|z| z.re).collect()
}

/// Detects a rotation family g_j = e^{i gamma_j} g_1: equal degrees, literally equal
/// oscillating psi series, offsets differing only in the frequency-0 terms. Returns the
/// offsets gamma_j relative to component 1.
#[must_use]
pub fn rotation_gammas(maps: &[BoundaryMap]) -> Option<Vec<f64>> {
    let first = maps.first()?;
    let reference = first.oscillating_terms();
    let mut gammas = Vec::with_capacity(maps.len());
    for map in maps {
        if map.degree != first.degree || map.oscillating_terms() != reference {
            return None;
        }
        gammas.push(map.dc_offset() - first.dc_offset());
    }
    Some(gammas)
}
