//! The eps -> 0 limit problem: Dirichlet energy constrained to the sphere sum |u_j|^2 = n.
//!
//! Three objects live here.
//!
//! - beta: the infimum of I(u) = sum_j int |grad u_j|^2 over fields with the prescribed
//!   boundary data and the pointwise constraint, computed by projected descent (one
//!   implicit heat step, then exact renormalization w_j = sqrt(n) v_j / sqrt(sum |v_k|^2)).
//!   A converged state satisfies the discrete optimality system
//!   lap u_j + u_j S/n = 0, where S is the incident-edge average of sum_k |grad u_k|^2.
//! - alpha: for all-degree-zero data the componentwise circle-valued minimizer is the
//!   explicit field u_j = e^{i phi_j} with phi_j the harmonic extension of the lifted
//!   boundary phase; alpha is its Dirichlet energy. alpha >= beta always.
//! - lambda_1: the first Dirichlet eigenvalue of the (discrete) Laplacian on the square,
//!   by inverse power iteration. Couplings eps > sqrt(n / lambda_1) force every solution
//!   of the coupled system into the rotation family u_j = e^{i gamma_j} u_1, so
//!   `rotation_threshold` marks where that symmetry regime starts.

use crate::boundary::{boundary_samples, lift_phase, BoundaryMap, LoopError};
use crate::complex::Complex;
use crate::field::{energy_dirichlet, init_field, InitStrategy, MultiField};
use crate::grid::{Grid, ScalarField};
use crate::linsys::solve_shifted_laplacian;
use crate::solver::{pin_boundary, ranking_budget, SolveConfig, SolveStats, StopReason, TracePoint};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("projection undefined: sum_j |v_j|^2 = {value:.3e} at node {node}")]
    ProjectionUndefined { node: usize, value: f64 },
    #[error("descent failed to find a feasible step after restart")]
    StepExhausted,
    #[error("alpha needs all boundary degrees zero, got component {component} with degree {degree}")]
    WoundComponent { component: usize, degree: u32 },
    #[error("boundary loop defect: {0}")]
    BadLoop(#[from] LoopError),
}

/// Summary of one limit-problem run.
#[derive(Clone, Debug)]
pub struct AlphaBetaReport {
    /// Present only when every component has degree zero.
    pub alpha: Option<f64>,
    pub beta: f64,
    /// alpha - beta when alpha exists.
    pub gap: Option<f64>,
    pub lambda1: f64,
    /// sqrt(n / lambda_1): couplings above it sit in the rotation-symmetry regime.
    pub rotation_threshold: f64,
    pub beta_residual: f64,
    pub beta_converged: bool,
    pub beta_iterations: usize,
}

/// Minimizers backing an [`AlphaBetaReport`].
#[derive(Clone, Debug)]
pub struct AlphaBetaOutcome {
    pub report: AlphaBetaReport,
    pub beta_minimizer: MultiField,
    pub alpha_minimizer: Option<MultiField>,
}

/// Exact nodewise renormalization onto the constraint sphere:
/// w_j = sqrt(n) v_j / sqrt(sum_k |v_k|^2). Fails where the total modulus is below 1e-10.
pub fn project_sphere(psi: &MultiField) -> Result<MultiField, ConstraintError> {
    let n = psi.n() as f64;
    let n_nodes = psi.components.first().map_or(0, Vec::len);
    let mut components = psi.components.clone();
    for p in 0..n_nodes {
        let total: f64 = psi.components.iter().map(|c| c[p].abs_sq()).sum();
        if total < 1e-10 {
            return Err(ConstraintError::ProjectionUndefined { node: p, value: total });
        }
        let scale = (n / total).sqrt();
        for c in &mut components {
            c[p] = c[p].scale(scale);
        }
    }
    Ok(MultiField { n_cells: psi.n_cells, components })
}

/// Largest nodewise deviation |sum_j |u_j|^2 - n| from the constraint sphere.
#[must_use]
pub fn constraint_deviation(psi: &MultiField) -> f64 {
    let n = psi.n() as f64;
    let n_nodes = psi.components.first().map_or(0, Vec::len);
    (0..n_nodes)
        .map(|p| (psi.components.iter().map(|c| c[p].abs_sq()).sum::<f64>() - n).abs())
        .fold(0.0, f64::max)
}

/// Incident-edge average of sum_j |grad u_j|^2 at interior nodes (zero on the boundary):
/// S(p) = sum_j sum_{q ~ p} |u_j(q) - u_j(p)|^2 / (2 h^2). This is the exact constraint
/// multiplier of the discrete optimality system, and an O(h^2)-consistent gradient square.
#[must_use]
pub fn gradient_square_edges(grid: &Grid, psi: &MultiField) -> ScalarField {
    let side = grid.side();
    let scale = 1.0 / (2.0 * grid.h * grid.h);
    let mut out = vec![0.0; grid.n_nodes()];
    for iy in 1..grid.n_cells {
        for ix in 1..grid.n_cells {
            let p = iy * side + ix;
            let mut acc = 0.0;
            for c in &psi.components {
                acc += (c[p - 1] - c[p]).abs_sq()
                    + (c[p + 1] - c[p]).abs_sq()
                    + (c[p - side] - c[p]).abs_sq()
                    + (c[p + side] - c[p]).abs_sq();
            }
            out[p] = acc * scale;
        }
    }
    out
}

/// Max-norm of the constrained optimality residual r_j = lap u_j + u_j S / n over
/// interior nodes and components.
#[must_use]
pub fn residual_harmonic(grid: &Grid, psi: &MultiField) -> f64 {
    let side = grid.side();
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let inv_n = 1.0 / psi.n() as f64;
    let s_field = gradient_square_edges(grid, psi);
    let mut worst = 0.0f64;
    for iy in 1..grid.n_cells {
        for ix in 1..grid.n_cells {
            let p = iy * side + ix;
            for c in &psi.components {
                let lap = (c[p - 1] + c[p + 1] + c[p - side] + c[p + side] - c[p].scale(4.0))
                    .scale(inv_h2);
                let r = lap + c[p].scale(inv_n * s_field[p]);
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

/// Default budgets for the constrained descent on a grid.
#[must_use]
pub fn beta_defaults(grid: &Grid) -> SolveConfig {
    SolveConfig {
        tol_residual: (1e-4 * grid.h * grid.h).max(1e-8),
        max_iters: 200_000,
        dt0: 5e-3,
        seed: 0,
    }
}

fn flow_to_beta(
    grid: &Grid,
    maps: &[BoundaryMap],
    init: MultiField,
    cfg: &SolveConfig,
) -> Result<(MultiField, SolveStats), ConstraintError> {
    let mut u = init;
    pin_boundary(grid, maps, &mut u);
    let mut u = project_sphere(&u)?;
    pin_boundary(grid, maps, &mut u);

    let n_nodes = grid.n_nodes();
    let mut energy = energy_dirichlet(grid, &u);
    let mut residual = residual_harmonic(grid, &u);
    let mut dt = cfg.dt0;
    let mut iterations = 0usize;
    let mut backtracks = 0usize;
    let mut cg_total = 0usize;
    let mut stop = StopReason::MaxIters;
    let mut history = vec![TracePoint { iter: 0, energy, residual }];

    if residual <= cfg.tol_residual {
        stop = StopReason::Converged;
    } else {
        'outer: while iterations < cfg.max_iters {
            iterations += 1;
            // The multiplier field of the constrained system, frozen over this step.
            let s_field = gradient_square_edges(grid, &u);
            let inv_n = 1.0 / u.n() as f64;
            loop {
                // One implicit heat step per component with the multiplier as explicit
                // forcing, then exact renormalization. The step is solved in correction
                // form (I - dt Lap) delta = dt (Lap u + (S/n) u), so the inner solver works
                // on a right side that shrinks with the defect and the iteration can reach
                // any stationary point of the constrained system instead of flooring at
                // the inner tolerance amplified by 1/h^2.
                let mut stepped = u.clone();
                let mut cg_ok = true;
                for (j, c) in u.components.iter().enumerate() {
                    let lap = grid.laplacian(c);
                    let rhs: Vec<Complex> = (0..n_nodes)
                        .map(|p| (lap[p] + c[p].scale(inv_n * s_field[p])).scale(dt))
                        .collect();
                    let mut delta = vec![Complex::ZERO; n_nodes];
                    let stats = solve_shifted_laplacian(
                        grid,
                        1.0,
                        dt,
                        &rhs,
                        &mut delta,
                        1e-6,
                        30 * grid.side(),
                    );
                    cg_total += stats.iterations;
                    if !stats.converged {
                        cg_ok = false;
                        break;
                    }
                    for (value, step) in stepped.components[j].iter_mut().zip(&delta) {
                        *value = *value + *step;
                    }
                }
                let projected = if cg_ok { project_sphere(&stepped) } else { Err(ConstraintError::StepExhausted) };
                if let Ok(mut candidate) = projected {
                    pin_boundary(grid, maps, &mut candidate);
                    let e_new = energy_dirichlet(grid, &candidate);
                    let slack = 1e-12 * (1.0 + energy.abs());
                    if e_new.is_finite() {
                        if e_new <= energy - slack {
                            u = candidate;
                            energy = e_new;
                            dt = (dt * 1.1).min(1.0);
                            break;
                        }
                        // Below the f64 resolution of the energy sum the comparison
                        // cannot arbitrate the step; keep it only if the residual
                        // improved, and freeze dt.
                        if e_new <= energy + slack && residual_harmonic(grid, &candidate) < residual {
                            u = candidate;
                            energy = e_new;
                            break;
                        }
                    }
                }
                backtracks += 1;
                dt *= 0.5;
                if dt < 1e-18 {
                    stop = StopReason::StepCollapse;
                    break 'outer;
                }
            }
            residual = residual_harmonic(grid, &u);
            if history.len() < 4096 {
                history.push(TracePoint { iter: iterations, energy, residual });
            }
            if residual <= cfg.tol_residual {
                stop = StopReason::Converged;
                break;
            }
        }
    }

    let stats = SolveStats {
        iterations,
        residual,
        energy,
        converged: stop == StopReason::Converged,
        stop,
        backtracks,
        dt_final: dt,
        cg_iterations: cg_total,
        history,
        start_label: "given",
    };
    Ok((u, stats))
}

/// Projected descent to the constrained minimum beta. Starts from the projected harmonic
/// extension and, when any component is wound, also from the vortex product; the lower
/// Dirichlet energy wins and is polished to the configured tolerance.
pub fn solve_beta(
    grid: &Grid,
    maps: &[BoundaryMap],
    cfg: &SolveConfig,
) -> Result<(MultiField, SolveStats), ConstraintError> {
    let mut strategies = vec![("harmonic", InitStrategy::Harmonic)];
    if maps.iter().any(|m| m.degree > 0) {
        strategies.push(("vortex_product", InitStrategy::VortexProduct));
    } else {
        strategies.push(("random_a", InitStrategy::Random(cfg.seed)));
    }

    let mut best: Option<(f64, &'static str, MultiField)> = None;
    let mut first_error = None;
    for (label, strategy) in strategies {
        let init = init_field(grid, maps, strategy);
        let coarse = SolveConfig {
            tol_residual: (1e-3 * residual_harmonic(grid, &init)).max(cfg.tol_residual),
            max_iters: ranking_budget(grid).min(cfg.max_iters / 4),
            ..*cfg
        };
        match flow_to_beta(grid, maps, init, &coarse) {
            Ok((field, stats)) => {
                if best.as_ref().is_none_or(|(e, _, _)| stats.energy < *e) {
                    best = Some((stats.energy, label, field));
                }
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    let (_, label, field) = match best {
        Some(b) => b,
        None => return Err(first_error.unwrap_or(ConstraintError::StepExhausted)),
    };
    let (field, mut stats) = flow_to_beta(grid, maps, field, cfg)?;
    stats.start_label = label;
    Ok((field, stats))
}

/// Explicit componentwise circle-valued minimizer for all-degree-zero data:
/// u_j = e^{i phi_j}, phi_j the harmonic extension of the lifted boundary phase.
/// Returns the field and alpha = its Dirichlet energy I.
pub fn solve_alpha(grid: &Grid, maps: &[BoundaryMap]) -> Result<(MultiField, f64), ConstraintError> {
    for (j, map) in maps.iter().enumerate() {
        if map.degree != 0 {
            return Err(ConstraintError::WoundComponent { component: j, degree: map.degree });
        }
    }
    let mut components = Vec::with_capacity(maps.len());
    for map in maps {
        let samples = boundary_samples(grid, map);
        let phases = lift_phase(&samples)?;
        let phi = crate::boundary::harmonic_extension_scalar(grid, &phases);
        components.push(phi.iter().map(|&t| Complex::unit(t)).collect());
    }
    let mut field = MultiField { n_cells: grid.n_cells, components };
    pin_boundary(grid, maps, &mut field);
    let alpha = energy_dirichlet(grid, &field);
    Ok((field, alpha))
}

/// First Dirichlet eigenvalue of -lap on the square by inverse power iteration,
/// converged to relative changes below 1e-12. The discrete value has the closed form
/// (2/h^2)(2 - 2 cos(pi h)) and approaches 2 pi^2.
#[must_use]
pub fn lambda1(grid: &Grid) -> f64 {
    let n_nodes = grid.n_nodes();
    let mut v: Vec<Complex> = (0..n_nodes)
        .map(|p| if grid.is_boundary(p) { Complex::ZERO } else { Complex::ONE })
        .collect();
    let norm = |a: &[Complex]| a.iter().map(|z| z.abs_sq()).sum::<f64>().sqrt();
    let scale = 1.0 / norm(&v);
    for z in &mut v {
        *z = z.scale(scale);
    }

    let mut lambda = 0.0f64;
    for _ in 0..500 {
        let mut w = v.clone();
        solve_shifted_laplacian(grid, 0.0, 1.0, &v, &mut w, 1e-13, 50 * grid.side());
        // Rayleigh quotient of w for -lap: with -lap w = v, it is <w, v> / <w, w>.
        let mut wv = 0.0;
        let mut ww = 0.0;
        for (a, b) in w.iter().zip(&v) {
            wv += a.re * b.re + a.im * b.im;
            ww += a.abs_sq();
        }
        let next = wv / ww;
        let w_norm = ww.sqrt();
        for (slot, z) in v.iter_mut().zip(&w) {
            *slot = z.scale(1.0 / w_norm);
        }
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Discrete closed form of lambda_1: (2/h^2)(2 - 2 cos(pi h)), both axes summed.
#[must_use]
pub fn lambda1_closed_form(grid: &Grid) -> f64 {
    let h = grid.h;
    (2.0 / (h * h)) * (2.0 - 2.0 * (std::f64::consts::PI * h).cos())
}

/// Coupling threshold sqrt(n / lambda_1) above which the rotation symmetry is forced.
#[must_use]
pub fn rotation_threshold(grid: &Grid, n_components: usize) -> f64 {
    (n_components as f64 / lambda1(grid)).sqrt()
}

/// Runs the full limit-problem battery for one boundary configuration.
pub fn alpha_beta(
    grid: &Grid,
    maps: &[BoundaryMap],
    cfg: &SolveConfig,
) -> Result<AlphaBetaOutcome, ConstraintError> {
    let (beta_minimizer, stats) = solve_beta(grid, maps, cfg)?;
    let beta = stats.energy;
    let all_zero = maps.iter().all(|m| m.degree == 0);
    let (alpha_minimizer, alpha) = if all_zero {
        let (field, alpha) = solve_alpha(grid, maps)?;
        (Some(field), Some(alpha))
    } else {
        (None, None)
    };
    let l1 = lambda1(grid);
    let report = AlphaBetaReport {
        alpha,
        beta,
        gap: alpha.map(|a| a - beta),
        lambda1: l1,
        rotation_threshold: (maps.len() as f64 / l1).sqrt(),
        beta_residual: stats.residual,
        beta_converged: stats.converged,
        beta_iterations: stats.iterations,
    };
    Ok(AlphaBetaOutcome { report, beta_minimizer, alpha_minimizer })
}
