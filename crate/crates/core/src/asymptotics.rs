//! Coupling-continuation experiments and the diagnostics that probe the eps -> 0 limit.
//!
//! A sweep solves the coupled system along a strictly decreasing schedule of eps values,
//! warm-starting each solve from the previous one, and compares every state against the
//! constrained reference field computed once by `solve_beta`. Each record captures the
//! quantities whose limiting behavior the theory pins down:
//!
//! - the potential part of the energy, which decays once components are wound,
//! - the uniform modulus defect sup |n - sum |u_j|^2|,
//! - f_eps = (n - sum |u_j|^2) / eps^2 against its limit f* = (1/n) sum |grad u*_j|^2,
//! - per-component potential traces with a divergence verdict,
//! - the boundary integral of squared normal derivatives, bounded uniformly in eps,
//! - the rotation defect when the boundary data lies in a rotation family,
//! - vortex cells (phase winding per grid cell) with signed charges.

use crate::boundary::{rotation_gammas, BoundaryMap};
use crate::complex::Complex;
use crate::field::{
    energy_gl, f_epsilon_field, sup_modulus_defect, EnergyReport, MultiField,
};
use crate::grid::{Grid, ScalarField};
use crate::harmonic::{
    beta_defaults, constraint_deviation, gradient_square_edges, solve_beta, ConstraintError,
};
use crate::solver::{residual_el, solve_gl, solve_gl_multi, SolveConfig, SolveError, SolveStats, TracePoint};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("eps schedule must be strictly decreasing and positive, got {0:?}")]
    BadSchedule(Vec<f64>),
    #[error("interior margin {margin} must be at least 2h = {min}")]
    MarginTooSmall { margin: f64, min: f64 },
    #[error("interior margin {margin} leaves no interior nodes")]
    MarginEmpty { margin: f64 },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Knobs for one continuation sweep. `None` entries fall back to the grid- and
/// eps-dependent defaults (residual ladder, dt0 = 0.1 eps^2).
#[derive(Clone, Debug)]
pub struct ContinuationConfig {
    pub tol_residual: Option<f64>,
    pub max_iters: usize,
    pub dt0: Option<f64>,
    pub seed: u64,
    /// Inset distance for all interior comparisons; boundary layers of width O(eps)
    /// must stay outside it.
    pub margin: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig { tol_residual: None, max_iters: 200_000, dt0: None, seed: 0, margin: 0.1 }
    }
}

/// Diagnostics for a single eps value.
#[derive(Clone, Debug)]
pub struct ContinuationRecord {
    pub epsilon: f64,
    pub energy: EnergyReport,
    pub residual_el: f64,
    pub sup_modulus_defect: f64,
    /// Relative interior L2 distance between f_eps and f*.
    pub f_rel_err: f64,
    pub pohozaev: f64,
    /// Present only when the boundary data is a rotation family.
    pub rotation_defect: Option<f64>,
    /// Interior L2 distance per component to the constrained reference field.
    pub interior_l2_err: Vec<f64>,
    /// Signed vortex charge per component (sum over flagged cells).
    pub zero_charges: Vec<i64>,
    /// Number of flagged vortex cells per component.
    pub zero_counts: Vec<usize>,
    pub converged: bool,
    /// eps below 2h cannot resolve the core; the record is kept but marked.
    pub under_resolved: bool,
    pub iterations: usize,
    pub start_label: &'static str,
    /// Decimated (iteration, energy, residual) trail of the solve behind this record.
    pub history: Vec<TracePoint>,
}

/// One full sweep: records in schedule order plus the shared reference data.
#[derive(Clone, Debug)]
pub struct ContinuationResult {
    pub records: Vec<ContinuationRecord>,
    pub fields: Vec<MultiField>,
    pub u_star: MultiField,
    pub u_star_converged: bool,
    pub beta: f64,
    /// Rotation offsets gamma_j when the boundary data is a rotation family.
    pub gammas: Option<Vec<f64>>,
    /// Total energy dropped more than 5% between consecutive records. Minimal energy
    /// grows as the coupling shrinks, so a drop means the warm start changed basins
    /// and trend assertions on this sweep are suspect.
    pub branch_jump: bool,
    /// A solve produced non-finite values and the sweep stopped early.
    pub aborted: bool,
}

fn check_schedule(schedule: &[f64]) -> Result<(), SweepError> {
    let ok = !schedule.is_empty()
        && schedule.iter().all(|e| e.is_finite() && *e > 0.0)
        && schedule.windows(2).all(|w| w[1] < w[0]);
    if ok { Ok(()) } else { Err(SweepError::BadSchedule(schedule.to_vec())) }
}

fn interior_nodes(grid: &Grid, margin: f64) -> Result<Vec<usize>, SweepError> {
    if margin < 2.0 * grid.h - 1e-12 {
        return Err(SweepError::MarginTooSmall { margin, min: 2.0 * grid.h });
    }
    let nodes: Vec<usize> = (0..grid.n_nodes())
        .filter(|&p| {
            let (x, y) = grid.coords(p);
            x.min(1.0 - x).min(y).min(1.0 - y) >= margin - 1e-12
        })
        .collect();
    if nodes.is_empty() {
        return Err(SweepError::MarginEmpty { margin });
    }
    Ok(nodes)
}

/// Limit profile f* = (1/n) sum_j |grad u*_j|^2 by centered differences on interior
/// nodes (zero on the boundary). The input must lie on the constraint sphere.
#[must_use]
pub fn f_star_field(grid: &Grid, u_star: &MultiField) -> ScalarField {
    debug_assert!(constraint_deviation(u_star) < 1e-8, "reference field off the sphere");
    let side = grid.side();
    let inv_2h = 1.0 / (2.0 * grid.h);
    let inv_n = 1.0 / u_star.n() as f64;
    let mut out = vec![0.0; grid.n_nodes()];
    for iy in 1..grid.n_cells {
        for ix in 1..grid.n_cells {
            let p = iy * side + ix;
            let mut acc = 0.0;
            for c in &u_star.components {
                let dx = (c[p + 1] - c[p - 1]).scale(inv_2h);
                let dy = (c[p + side] - c[p - side]).scale(inv_2h);
                acc += dx.abs_sq() + dy.abs_sq();
            }
            out[p] = acc * inv_n;
        }
    }
    out
}

/// Relative interior L2 error between f_eps of a coupled-system state and f* of the
/// constrained reference, over nodes at distance >= margin from the boundary.
/// Both norms below 1e-12 count as exact agreement (the constant case).
pub fn compare_f(
    grid: &Grid,
    psi_eps: &MultiField,
    epsilon: f64,
    u_star: &MultiField,
    margin: f64,
) -> Result<f64, SweepError> {
    let nodes = interior_nodes(grid, margin)?;
    let f_eps = f_epsilon_field(grid, psi_eps, epsilon);
    let f_star = f_star_field(grid, u_star);
    let mut diff = 0.0;
    let mut reference = 0.0;
    for &p in &nodes {
        diff += (f_eps[p] - f_star[p]).powi(2);
        reference += f_star[p].powi(2);
    }
    let diff = diff.sqrt();
    let reference = reference.sqrt();
    if diff < 1e-12 && reference < 1e-12 {
        return Ok(0.0);
    }
    Ok(diff / reference.max(1e-12))
}

/// Interior L2 distance per component between a sweep state and the reference field.
pub fn interior_l2_errors(
    grid: &Grid,
    psi: &MultiField,
    u_star: &MultiField,
    margin: f64,
) -> Result<Vec<f64>, SweepError> {
    let nodes = interior_nodes(grid, margin)?;
    let h2 = grid.h * grid.h;
    Ok(psi
        .components
        .iter()
        .zip(&u_star.components)
        .map(|(a, b)| {
            let sum: f64 = nodes.iter().map(|&p| (a[p] - b[p]).abs_sq()).sum();
            (h2 * sum).sqrt()
        })
        .collect())
}

/// Boundary quadrature of sum_j |du_j/dnu|^2: weight h per non-corner boundary node,
/// one-sided second-order normal derivatives, corners excluded.
#[must_use]
pub fn pohozaev_boundary_integral(grid: &Grid, psi: &MultiField) -> f64 {
    let mut total = 0.0;
    for c in &psi.components {
        for sample in grid.normal_derivative(c) {
            if !sample.corner {
                total += grid.h * sample.dnu.abs_sq();
            }
        }
    }
    total
}

/// Largest nodewise deviation from the rotation relation u_j = e^{i gamma_j} u_1.
/// `gammas` must have one entry per component with gammas[0] = 0.
#[must_use]
pub fn rotation_defect(psi: &MultiField, gammas: &[f64]) -> f64 {
    debug_assert_eq!(gammas.len(), psi.n());
    debug_assert_eq!(gammas[0], 0.0);
    let first = &psi.components[0];
    let mut worst = 0.0f64;
    for (c, &gamma) in psi.components.iter().zip(gammas) {
        let phase = Complex::unit(gamma);
        for (z, w) in c.iter().zip(first) {
            worst = worst.max((*z - phase * *w).abs());
        }
    }
    worst
}

/// Max-norm residual of the scaled-potential equation
/// -eps^2 lap f + 2 (sum |u_j|^2) f = 2 sum |grad u_j|^2
/// over nodes at distance >= 2h from the boundary, with the gradient square taken as
/// the incident-edge average so a converged coupled-system state nulls it identically.
#[must_use]
pub fn f_equation_residual(grid: &Grid, psi: &MultiField, epsilon: f64) -> f64 {
    let side = grid.side();
    let n = psi.n() as f64;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let f: Vec<f64> = (0..grid.n_nodes())
        .map(|p| {
            let rho: f64 = psi.components.iter().map(|c| c[p].abs_sq()).sum();
            (n - rho) / (epsilon * epsilon)
        })
        .collect();
    let s_field = gradient_square_edges(grid, psi);
    let mut worst = 0.0f64;
    for iy in 2..grid.n_cells.saturating_sub(1) {
        for ix in 2..grid.n_cells.saturating_sub(1) {
            let p = iy * side + ix;
            let lap = (f[p - 1] + f[p + 1] + f[p - side] + f[p + side] - 4.0 * f[p]) * inv_h2;
            let rho: f64 = psi.components.iter().map(|c| c[p].abs_sq()).sum();
            let r = -epsilon * epsilon * lap + 2.0 * rho * f[p] - 2.0 * s_field[p];
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// A grid cell whose corner phases wind, i.e. a vortex location.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZeroCell {
    pub ix: usize,
    pub iy: usize,
    pub charge: i64,
}

/// Vortex scan of one component: every cell with nonzero corner-phase winding.
#[derive(Clone, Debug, Default)]
pub struct ZeroScan {
    pub cells: Vec<ZeroCell>,
    pub count: usize,
    pub charge_sum: i64,
}

/// Flags cells around whose four corners the phase winds a nonzero number of turns.
/// Zeros sitting exactly on a grid node are attributed to adjacent cells by the same
/// principal-branch test; the scan is a diagnostic, not a root finder.
#[must_use]
pub fn detect_zeros(grid: &Grid, component: &[Complex]) -> ZeroScan {
    let side = grid.side();
    let mut scan = ZeroScan::default();
    for iy in 0..grid.n_cells {
        for ix in 0..grid.n_cells {
            let p = iy * side + ix;
            let corners = [component[p], component[p + 1], component[p + 1 + side], component[p + side]];
            let mut total = 0.0;
            for k in 0..4 {
                let a = corners[k];
                let b = corners[(k + 1) % 4];
                total += (b * a.conj()).arg();
            }
            let charge = (total / std::f64::consts::TAU).round() as i64;
            if charge != 0 {
                scan.cells.push(ZeroCell { ix, iy, charge });
                scan.count += 1;
                scan.charge_sum += charge;
            }
        }
    }
    scan
}

/// Divergence verdict for a per-component potential trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivergenceVerdict {
    Diverging,
    Bounded,
    Inconclusive,
}

impl DivergenceVerdict {
    #[must_use]
    pub fn as_str(self) -> &'static str {
        match self {
            DivergenceVerdict::Diverging => "diverging",
            DivergenceVerdict::Bounded => "bounded",
            DivergenceVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Per-eps series of the scaled single-component potential (1/eps^2) int (1 - |u_j|^2)^2,
/// with a verdict: "diverging" when the value grows by at least a factor 1.3 per eps
/// halving over the last three converged records and ends positive, "bounded" otherwise,
/// "inconclusive" with fewer than three converged records.
#[must_use]
pub fn component_potential_trace(
    result: &ContinuationResult,
    j: usize,
) -> (Vec<(f64, f64)>, DivergenceVerdict) {
    let series: Vec<(f64, f64)> = result
        .records
        .iter()
        .map(|r| (r.epsilon, r.energy.potential_per_component[j]))
        .collect();
    let converged: Vec<(f64, f64)> = result
        .records
        .iter()
        .filter(|r| r.converged)
        .map(|r| (r.epsilon, r.energy.potential_per_component[j]))
        .collect();
    if converged.len() < 3 {
        return (series, DivergenceVerdict::Inconclusive);
    }
    let tail = &converged[converged.len() - 3..];
    let mut diverging = tail[2].1 > 0.0;
    for pair in tail.windows(2) {
        let halvings = (pair[0].0 / pair[1].0).log2();
        if pair[1].1 < pair[0].1 * 1.3f64.powf(halvings) {
            diverging = false;
        }
    }
    let verdict = if diverging { DivergenceVerdict::Diverging } else { DivergenceVerdict::Bounded };
    (series, verdict)
}

/// Assembles the full diagnostics record for one solved state against the shared
/// constrained reference.
pub fn record_diagnostics(
    grid: &Grid,
    psi: &MultiField,
    epsilon: f64,
    u_star: &MultiField,
    gammas: Option<&[f64]>,
    margin: f64,
    stats: &SolveStats,
) -> Result<ContinuationRecord, SweepError> {
    let energy = energy_gl(grid, psi, epsilon);
    let zeros: Vec<ZeroScan> = psi.components.iter().map(|c| detect_zeros(grid, c)).collect();
    Ok(ContinuationRecord {
        epsilon,
        residual_el: residual_el(grid, psi, epsilon),
        sup_modulus_defect: sup_modulus_defect(grid, psi),
        f_rel_err: compare_f(grid, psi, epsilon, u_star, margin)?,
        pohozaev: pohozaev_boundary_integral(grid, psi),
        rotation_defect: gammas.map(|g| rotation_defect(psi, g)),
        interior_l2_err: interior_l2_errors(grid, psi, u_star, margin)?,
        zero_charges: zeros.iter().map(|z| z.charge_sum).collect(),
        zero_counts: zeros.iter().map(|z| z.count).collect(),
        converged: stats.converged,
        under_resolved: epsilon < 2.0 * grid.h,
        iterations: stats.iterations,
        start_label: stats.start_label,
        history: stats.history.clone(),
        energy,
    })
}

/// Runs the sweep: multi-start at the first eps, warm starts afterwards, one record per
/// schedule entry. Non-converged solves are recorded and the sweep continues; a solve
/// that leaves the finite range stops the sweep with the records gathered so far.
pub fn continuation(
    grid: &Grid,
    maps: &[BoundaryMap],
    schedule: &[f64],
    cfg: &ContinuationConfig,
) -> Result<ContinuationResult, SweepError> {
    check_schedule(schedule)?;
    interior_nodes(grid, cfg.margin)?;

    let beta_cfg = SolveConfig { max_iters: cfg.max_iters, seed: cfg.seed, ..beta_defaults(grid) };
    let (u_star, beta_stats) = solve_beta(grid, maps, &beta_cfg)?;
    let gammas = rotation_gammas(maps);

    let mut result = ContinuationResult {
        records: Vec::with_capacity(schedule.len()),
        fields: Vec::with_capacity(schedule.len()),
        u_star,
        u_star_converged: beta_stats.converged,
        beta: beta_stats.energy,
        gammas,
        branch_jump: false,
        aborted: false,
    };

    let mut warm: Option<MultiField> = None;
    for &epsilon in schedule {
        let solve_cfg = SolveConfig {
            tol_residual: cfg
                .tol_residual
                .unwrap_or_else(|| (1e-4 * grid.h * grid.h).max(1e-8)),
            max_iters: cfg.max_iters,
            dt0: cfg.dt0.unwrap_or(0.1 * epsilon * epsilon),
            seed: cfg.seed,
        };
        let solved = match warm.take() {
            None => solve_gl_multi(grid, maps, epsilon, &solve_cfg),
            Some(init) => solve_gl(grid, maps, epsilon, init, &solve_cfg),
        };
        let (psi, stats) = match solved {
            Ok(pair) => pair,
            Err(SolveError::NonFinite(_)) => {
                result.aborted = true;
                break;
            }
        };
        let record = record_diagnostics(
            grid,
            &psi,
            epsilon,
            &result.u_star,
            result.gammas.as_deref(),
            cfg.margin,
            &stats,
        )?;
        if let Some(prev) = result.records.last() {
            if record.energy.total < prev.energy.total * 0.95 {
                result.branch_jump = true;
            }
        }
        result.records.push(record);
        warm = Some(psi.clone());
        result.fields.push(psi);
    }
    Ok(result)
}

/// Renders records as CSV with the pinned column order. Formatting is the shortest
/// round-trip decimal form, so identical runs produce byte-identical files; a missing
/// rotation defect prints as "nan".
#[must_use]
pub fn diagnostics_csv(n: usize, records: &[ContinuationRecord]) -> String {
    let mut out = String::new();
    out.push_str("epsilon,energy_total,dirichlet_total,potential_total");
    for j in 1..=n {
        let _ = write!(out, ",potential_c{j}");
    }
    out.push_str(",residual_el,sup_modulus_defect,f_rel_err,pohozaev,rotation_defect");
    for j in 1..=n {
        let _ = write!(out, ",zeros_c{j}");
    }
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{}",
            r.epsilon, r.energy.total, r.energy.dirichlet_total, r.energy.potential_total
        );
        for v in &r.energy.potential_per_component {
            let _ = write!(out, ",{v}");
        }
        let _ = write!(
            out,
            ",{},{},{},{}",
            r.residual_el, r.sup_modulus_defect, r.f_rel_err, r.pohozaev
        );
        match r.rotation_defect {
            Some(d) => {
                let _ = write!(out, ",{d}");
            }
            None => out.push_str(",nan"),
        }
        for charge in &r.zero_charges {
            let _ = write!(out, ",{charge}");
        }
        out.push('\n');
    }
    out
}
