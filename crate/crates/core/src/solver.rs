//! Semi-implicit gradient flow for the coupled energy.
//!
//! One step at pseudo-time increment dt treats the stiffness implicitly and the
//! potential explicitly, componentwise:
//!
//!   (I - dt lap) u_j^{k+1} = u_j^k + dt u_j^k (n - sum_i |u_i^k|^2) / eps^2,
//!
//! with the boundary pinned to the prescribed data, solved by the preconditioned
//! conjugate gradients in [`crate::linsys`]. Steps are accepted only if the energy does
//! not increase: rejected steps halve dt, accepted steps grow it by 1.1 up to a cap, so
//! the flow self-tunes to the stability limit of the explicit potential term (about
//! eps^2/2 on the slow modes). The run stops when the Euler-Lagrange residual
//!
//!   r_j = lap u_j + u_j (n - sum_i |u_i|^2) / eps^2
//!
//! has max-norm at or below the configured tolerance, which makes the reported state a
//! solution of the discrete optimality system rather than merely a stagnated iterate.

use crate::boundary::{evaluate_g, BoundaryMap};
use crate::complex::Complex;
use crate::field::{energy_gl, init_field, InitStrategy, MultiField};
use crate::grid::Grid;
use crate::linsys::solve_shifted_laplacian;
use thiserror::Error;

/// Tolerances and budgets of one minimization run.
#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    /// Target max-norm of the Euler-Lagrange residual.
    pub tol_residual: f64,
    /// Outer iteration budget.
    pub max_iters: usize,
    /// Initial pseudo-time step.
    pub dt0: f64,
    /// Seed for randomized starts.
    pub seed: u64,
}

impl SolveConfig {
    /// Defaults for a grid/coupling pair: tol = max(1e-8, 1e-4 h^2), dt0 = 0.1 eps^2.
    #[must_use]
    pub fn defaults(grid: &Grid, epsilon: f64) -> Self {
        Self {
            tol_residual: (1e-4 * grid.h * grid.h).max(1e-8),
            max_iters: 200_000,
            dt0: 0.1 * epsilon * epsilon,
            seed: 0,
        }
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    /// Backtracking drove dt to nothing without finding a descent step.
    StepCollapse,
}

/// One decimated trace point of a run.
#[derive(Clone, Copy, Debug)]
pub struct TracePoint {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
}

/// Outcome bookkeeping of one run.
#[derive(Clone, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub backtracks: usize,
    pub dt_final: f64,
    pub cg_iterations: usize,
    pub history: Vec<TracePoint>,
    /// Which start produced the field ("given" unless the multi-start driver chose).
    pub start_label: &'static str,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("non-finite field values at iteration {0}")]
    NonFinite(usize),
}

/// Max-norm of the Euler-Lagrange residual r_j = lap u_j + u_j (n - sum |u_i|^2)/eps^2
/// over interior nodes and components.
#[must_use]
pub fn residual_el(grid: &Grid, psi: &MultiField, epsilon: f64) -> f64 {
    let side = grid.side();
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let n = psi.n() as f64;
    let mut worst = 0.0f64;
    for iy in 1..grid.n_cells {
        for ix in 1..grid.n_cells {
            let p = iy * side + ix;
            let defect = n - psi.components.iter().map(|c| c[p].abs_sq()).sum::<f64>();
            for c in &psi.components {
                let lap = (c[p - 1] + c[p + 1] + c[p - side] + c[p + side] - c[p].scale(4.0))
                    .scale(inv_h2);
                let r = lap + c[p].scale(inv_eps2 * defect);
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

/// Pins the boundary nodes of every component to the prescribed data.
pub fn pin_boundary(grid: &Grid, maps: &[BoundaryMap], psi: &mut MultiField) {
    for (component, map) in psi.components.iter_mut().zip(maps) {
        for bn in &grid.boundary_order {
            component[bn.index] = evaluate_g(map, bn.t);
        }
    }
}

/// Componentwise Euler-Lagrange residual r_j = lap u_j + u_j (n - sum |u_i|^2)/eps^2.
/// Boundary entries come out exactly zero: the discrete laplacian vanishes there and
/// the prescribed data keeps the defect at zero.
fn residual_field(grid: &Grid, u: &MultiField, epsilon: f64) -> Vec<Vec<Complex>> {
    let n_nodes = grid.n_nodes();
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let n = u.n() as f64;
    let defect: Vec<f64> = (0..n_nodes)
        .map(|p| n - u.components.iter().map(|c| c[p].abs_sq()).sum::<f64>())
        .collect();
    u.components
        .iter()
        .map(|c| {
            let lap = grid.laplacian(c);
            (0..n_nodes).map(|p| lap[p] + c[p].scale(inv_eps2 * defect[p])).collect()
        })
        .collect()
}

/// Action of the energy Hessian at `u` on a perturbation `v` that vanishes on the
/// boundary: (H v)_j = -lap v_j - v_j (n - S)/eps^2 + 2 u_j sum_k Re(conj(u_k) v_k)/eps^2,
/// with S = sum |u_i|^2. The map is real-linear (it conjugates v) and symmetric in the
/// real inner product, and it preserves zero boundary values.
fn hessian_apply(grid: &Grid, u: &MultiField, epsilon: f64, v: &[Vec<Complex>]) -> Vec<Vec<Complex>> {
    let n_nodes = grid.n_nodes();
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let n = u.n() as f64;
    let defect: Vec<f64> = (0..n_nodes)
        .map(|p| n - u.components.iter().map(|c| c[p].abs_sq()).sum::<f64>())
        .collect();
    let mix: Vec<f64> = (0..n_nodes)
        .map(|p| {
            2.0 * inv_eps2
                * u.components
                    .iter()
                    .zip(v)
                    .map(|(c, w)| c[p].re * w[p].re + c[p].im * w[p].im)
                    .sum::<f64>()
        })
        .collect();
    u.components
        .iter()
        .zip(v)
        .map(|(c, w)| {
            let lap = grid.laplacian(w);
            (0..n_nodes)
                .map(|p| {
                    lap[p].scale(-1.0) + w[p].scale(-inv_eps2 * defect[p]) + c[p].scale(mix[p])
                })
                .collect()
        })
        .collect()
}

fn real_dot(a: &[Vec<Complex>], b: &[Vec<Complex>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(f, g)| f.iter().zip(g).map(|(x, y)| x.re * y.re + x.im * y.im).sum::<f64>())
        .sum()
}

fn max_abs(fields: &[Vec<Complex>]) -> f64 {
    fields.iter().flat_map(|f| f.iter()).fold(0.0, |m, z| m.max(z.abs()))
}

/// Finishes a stalled run with damped Newton steps on the Euler-Lagrange system.
/// The descent flow relaxes soft modes (vortex position, long-wavelength phase) at a
/// rate capped by the reaction-limited dt, so near the stationary point it can plateau
/// orders of magnitude above the target; the Hessian system closes that gap in a few
/// steps. Each correction solves H delta = r by conjugate gradients in the real inner
/// product and is accepted only if it lowers the residual max-norm, so `u` never
/// regresses. Returns true once the residual reaches `tol`; any sign of indefiniteness
/// or a step that cannot improve the residual aborts with false and leaves `u` at the
/// best visited state.
fn newton_polish(
    grid: &Grid,
    epsilon: f64,
    u: &mut MultiField,
    tol: f64,
    cg_total: &mut usize,
) -> bool {
    for _ in 0..8 {
        let r = residual_field(grid, u, epsilon);
        let r_norm = max_abs(&r);
        if r_norm <= tol {
            return true;
        }

        let mut delta: Vec<Vec<Complex>> =
            r.iter().map(|f| vec![Complex::ZERO; f.len()]).collect();
        let mut cg_res = r.clone();
        let mut p = cg_res.clone();
        let mut rr = real_dot(&cg_res, &cg_res);
        let rr_target = 1e-6 * rr;
        let mut indefinite = false;
        for _ in 0..2000 {
            let ap = hessian_apply(grid, u, epsilon, &p);
            let pap = real_dot(&p, &ap);
            if pap <= 0.0 {
                indefinite = true;
                break;
            }
            let alpha = rr / pap;
            for (dj, pj) in delta.iter_mut().zip(&p) {
                for (d, q) in dj.iter_mut().zip(pj) {
                    *d = *d + q.scale(alpha);
                }
            }
            for (rj, aj) in cg_res.iter_mut().zip(&ap) {
                for (x, a) in rj.iter_mut().zip(aj) {
                    *x = *x + a.scale(-alpha);
                }
            }
            *cg_total += 1;
            let rr_new = real_dot(&cg_res, &cg_res);
            let grow = rr_new / rr;
            rr = rr_new;
            if rr <= rr_target {
                break;
            }
            for (pj, rj) in p.iter_mut().zip(&cg_res) {
                for (q, x) in pj.iter_mut().zip(rj) {
                    *q = *x + q.scale(grow);
                }
            }
        }
        if indefinite {
            return false;
        }

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..6 {
            let mut candidate = u.clone();
            for (cj, dj) in candidate.components.iter_mut().zip(&delta) {
                for (c, d) in cj.iter_mut().zip(dj) {
                    *c = *c + d.scale(scale);
                }
            }
            if candidate.is_finite() && residual_el(grid, &candidate, epsilon) < r_norm {
                *u = candidate;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return false;
        }
    }
    residual_el(grid, u, epsilon) <= tol
}

/// Records into a decimated history capped at 2048 points.
struct Trace {
    points: Vec<TracePoint>,
    stride: usize,
}

impl Trace {
    fn new() -> Self {
        Self { points: Vec::new(), stride: 1 }
    }

    fn push(&mut self, point: TracePoint) {
        if point.iter % self.stride != 0 {
            return;
        }
        self.points.push(point);
        if self.points.len() >= 2048 {
            let mut kept = Vec::with_capacity(1024);
            for (k, p) in self.points.drain(..).enumerate() {
                if k % 2 == 0 {
                    kept.push(p);
                }
            }
            self.points = kept;
            self.stride *= 2;
        }
    }
}

/// Runs the flow from `init` until the Euler-Lagrange residual max-norm reaches
/// `cfg.tol_residual` or a budget runs out. Returns the final state (boundary pinned,
/// partial if unconverged) and the run statistics.
pub fn solve_gl(
    grid: &Grid,
    maps: &[BoundaryMap],
    epsilon: f64,
    init: MultiField,
    cfg: &SolveConfig,
) -> Result<(MultiField, SolveStats), SolveError> {
    let mut u = init;
    pin_boundary(grid, maps, &mut u);
    if !u.is_finite() {
        return Err(SolveError::NonFinite(0));
    }

    let n_nodes = grid.n_nodes();
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let n = u.n() as f64;
    let mut energy = energy_gl(grid, &u, epsilon).total;
    let mut residual = residual_el(grid, &u, epsilon);
    let mut dt = cfg.dt0;
    let dt_cap = 1.0;
    let mut trace = Trace::new();
    trace.push(TracePoint { iter: 0, energy, residual });

    let mut backtracks = 0usize;
    let mut cg_total = 0usize;
    let mut iterations = 0usize;
    let mut stop = StopReason::MaxIters;
    let mut anchor = (0usize, residual);
    let mut newton_spent = false;

    if residual <= cfg.tol_residual {
        stop = StopReason::Converged;
    } else {
        'outer: while iterations < cfg.max_iters {
            iterations += 1;

            // Shared explicit multiplier (n - sum |u_i|^2) at every node.
            let defect: Vec<f64> = (0..n_nodes)
                .map(|p| n - u.components.iter().map(|c| c[p].abs_sq()).sum::<f64>())
                .collect();

            loop {
                // Semi-implicit step in correction form: (I - dt Lap) delta =
                // dt (Lap u + u defect / eps^2), candidate = u + delta. The right side
                // shrinks with the Euler-Lagrange defect, so inner-solver error cannot
                // floor the outer residual at 1/h^2 times the inner tolerance.
                let mut candidate = u.clone();
                let mut cg_this = 0usize;
                let mut cg_ok = true;
                for (j, c) in u.components.iter().enumerate() {
                    let lap = grid.laplacian(c);
                    let rhs: Vec<Complex> = (0..n_nodes)
                        .map(|p| (lap[p] + c[p].scale(inv_eps2 * defect[p])).scale(dt))
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
                    cg_this += stats.iterations;
                    if !stats.converged {
                        cg_ok = false;
                        break;
                    }
                    for (value, step) in candidate.components[j].iter_mut().zip(&delta) {
                        *value = *value + *step;
                    }
                }
                cg_total += cg_this;

                let e_new = if cg_ok { energy_gl(grid, &candidate, epsilon).total } else { f64::NAN };
                let slack = 1e-12 * (1.0 + energy.abs());
                if cg_ok && e_new.is_finite() {
                    if !candidate.is_finite() {
                        return Err(SolveError::NonFinite(iterations));
                    }
                    if e_new <= energy - slack {
                        u = candidate;
                        energy = e_new;
                        dt = (dt * 1.1).min(dt_cap);
                        break;
                    }
                    // The energy change is below what f64 summation can resolve, so
                    // it cannot arbitrate the step. Fall back to the residual: keep
                    // the step only if it moved toward the stationary point, and
                    // freeze dt, which otherwise ratchets up until steps get noisy.
                    if e_new <= energy + slack && residual_el(grid, &candidate, epsilon) < residual {
                        u = candidate;
                        energy = e_new;
                        break;
                    }
                }
                backtracks += 1;
                dt *= 0.5;
                if dt < 1e-18 {
                    if !newton_spent
                        && newton_polish(grid, epsilon, &mut u, cfg.tol_residual, &mut cg_total)
                    {
                        energy = energy_gl(grid, &u, epsilon).total;
                        residual = residual_el(grid, &u, epsilon);
                        trace.push(TracePoint { iter: iterations, energy, residual });
                        stop = StopReason::Converged;
                        break 'outer;
                    }
                    stop = StopReason::StepCollapse;
                    break 'outer;
                }
            }

            residual = residual_el(grid, &u, epsilon);
            trace.push(TracePoint { iter: iterations, energy, residual });
            if residual <= cfg.tol_residual {
                stop = StopReason::Converged;
                break;
            }
            // The flow handles the stiff transient well but relaxes soft modes at a
            // rate proportional to the reaction-limited dt. Once the residual stops
            // halving over a window the remaining gap belongs to those modes, and one
            // Newton finish is cheaper than grinding the flow further.
            if iterations >= anchor.0 + 128 {
                if !newton_spent && residual > 0.5 * anchor.1 {
                    newton_spent = true;
                    let done =
                        newton_polish(grid, epsilon, &mut u, cfg.tol_residual, &mut cg_total);
                    energy = energy_gl(grid, &u, epsilon).total;
                    residual = residual_el(grid, &u, epsilon);
                    trace.push(TracePoint { iter: iterations, energy, residual });
                    if done {
                        stop = StopReason::Converged;
                        break;
                    }
                }
                anchor = (iterations, residual);
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
        history: trace.points,
        start_label: "given",
    };
    Ok((u, stats))
}

/// Single-component run: the coupled energy with n = 1 is the classical scalar energy
/// 1/2 int |grad u|^2 + 1/(4 eps^2) int (1 - |u|^2)^2 used as the baseline.
pub fn solve_single_gl(
    grid: &Grid,
    map: &BoundaryMap,
    epsilon: f64,
    init: MultiField,
    cfg: &SolveConfig,
) -> Result<(MultiField, SolveStats), SolveError> {
    assert_eq!(init.components.len(), 1, "baseline runs carry one component");
    solve_gl(grid, std::slice::from_ref(map), epsilon, init, cfg)
}

const START_LABELS: [&str; 4] = ["harmonic", "vortex_product", "random_a", "random_b"];

/// Multi-start driver: runs the flow from the harmonic, vortex-product and two seeded
/// random starts at a coarse tolerance, keeps the lowest-energy candidate, and polishes
/// it to the configured tolerance. Ties keep the earliest start in the fixed order.
/// Iteration allowance for one ranking pass of a multi-start solve. A few
/// hundred steps settle any start field enough to compare basin energies;
/// running each candidate to full convergence would repeat the most expensive
/// part of the solve once per candidate.
pub(crate) fn ranking_budget(grid: &Grid) -> usize {
    (4 * grid.side()).max(400)
}

pub fn solve_gl_multi(
    grid: &Grid,
    maps: &[BoundaryMap],
    epsilon: f64,
    cfg: &SolveConfig,
) -> Result<(MultiField, SolveStats), SolveError> {
    let strategies = [
        InitStrategy::Harmonic,
        InitStrategy::VortexProduct,
        InitStrategy::Random(cfg.seed),
        InitStrategy::Random(cfg.seed.wrapping_add(1)),
    ];
    let mut best: Option<(f64, usize, MultiField)> = None;
    for (k, strategy) in strategies.into_iter().enumerate() {
        let init = init_field(grid, maps, strategy);
        let coarse_tol = (1e-3 * residual_el(grid, &init, epsilon)).max(cfg.tol_residual);
        let coarse = SolveConfig {
            tol_residual: coarse_tol,
            max_iters: ranking_budget(grid).min(cfg.max_iters / 4),
            ..*cfg
        };
        match solve_gl(grid, maps, epsilon, init, &coarse) {
            Ok((field, stats)) => {
                if best.as_ref().is_none_or(|(e, _, _)| stats.energy < *e) {
                    best = Some((stats.energy, k, field));
                }
            }
            Err(SolveError::NonFinite(_)) => continue,
        }
    }
    let (_, which, field) = best.ok_or(SolveError::NonFinite(0))?;
    let (field, mut stats) = solve_gl(grid, maps, epsilon, field, cfg)?;
    stats.start_label = START_LABELS[which];
    Ok((field, stats))
}
