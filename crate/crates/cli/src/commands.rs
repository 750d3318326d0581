//! The five laboratory commands and the run-directory plumbing they share.
//!
//! Every run writes into its own directory: a copy of the resolved config, binary field
//! snapshots, `diagnostics.csv` in the pinned column order, and a human-readable
//! `summary.txt` with the verdicts. `--out` names the directory exactly; otherwise a
//! timestamped subdirectory is created under `output.dir`.

use crate::config::{ConfigError, RunConfig};
use glvortex_core::asymptotics::{
    component_potential_trace, continuation, diagnostics_csv, record_diagnostics,
    ContinuationRecord, ContinuationResult, SweepError,
};
use glvortex_core::boundary::{boundary_samples, rotation_gammas, winding_number, BoundaryMap, PhaseTerm};
use glvortex_core::field::{
    energy_gl, grad_energy_gl, init_field, InitStrategy, MultiField,
};
use glvortex_core::grid::build_grid;
use glvortex_core::harmonic::{
    alpha_beta, beta_defaults, constraint_deviation, lambda1, lambda1_closed_form,
    project_sphere, ConstraintError,
};
use glvortex_core::snapshot::save_snapshot;
use glvortex_core::solver::{solve_gl_multi, solve_single_gl, SolveConfig, SolveStats, TracePoint};
use glvortex_core::{Complex, Grid};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    /// 1 for configuration problems, 2 for numerical failure (non-convergence, abort).
    #[must_use]
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::BadSchedule(_)
            | SweepError::MarginTooSmall { .. }
            | SweepError::MarginEmpty { .. } => {
                CliError::Config(ConfigError::Invalid(e.to_string()))
            }
            SweepError::Constraint(_) | SweepError::Solve(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ConstraintError> for CliError {
    fn from(e: ConstraintError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

/// Flag overrides shared by the config-driven commands.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
    pub trace: bool,
    pub seed: Option<u64>,
}

pub struct Prepared {
    pub config: RunConfig,
    pub grid: Grid,
    pub maps: Vec<BoundaryMap>,
    pub run_dir: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn resolve_run_dir(config: &RunConfig, out: Option<&Path>, command: &str) -> Result<PathBuf, CliError> {
    let dir = match out {
        Some(dir) => dir.to_path_buf(),
        None => {
            let stamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let mut k = 0u32;
            loop {
                let name = if k == 0 {
                    format!("{stamp}-{command}")
                } else {
                    format!("{stamp}-{command}-{k}")
                };
                let candidate = config.output.dir.join(name);
                if !candidate.exists() {
                    break candidate;
                }
                k += 1;
            }
        }
    };
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    Ok(dir)
}

/// Loads the config, applies flag overrides, builds the grid, and claims a run directory
/// holding a copy of the resolved config.
pub fn prepare(config_path: &Path, overrides: &Overrides, command: &str) -> Result<Prepared, CliError> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = overrides.seed {
        config.solver.seed = Some(seed);
    }
    if overrides.trace {
        config.diagnostics.trace = true;
    }
    for warning in config.warnings() {
        eprintln!("warning: {warning}");
    }
    let grid = build_grid(config.grid.n_cells)
        .map_err(|e| ConfigError::Invalid(format!("grid.n_cells: {e}")))?;
    let maps = config.boundary_maps();
    let run_dir = resolve_run_dir(&config, overrides.out.as_deref(), command)?;
    let rendered = toml::to_string_pretty(&config)
        .map_err(|e| ConfigError::Invalid(format!("cannot render resolved config: {e}")))?;
    write_file(&run_dir.join("config.toml"), &rendered)?;
    Ok(Prepared { config, grid, maps, run_dir })
}

/// Rejects a comparison margin below the two-cell floor before any solve starts, so the
/// failure costs nothing instead of surfacing after minutes of iteration.
fn check_margin(grid: &Grid, margin: f64) -> Result<(), CliError> {
    let floor = 2.0 * grid.h;
    if margin < floor {
        return Err(ConfigError::Invalid(format!(
            "diagnostics.margin = {margin} must be at least 2h = {floor} for this grid"
        ))
        .into());
    }
    Ok(())
}

fn save_field(dir: &Path, name: &str, psi: &MultiField, epsilon: f64) -> Result<(), CliError> {
    let path = dir.join(name);
    save_snapshot(&path, psi, epsilon).map_err(|e| CliError::Io {
        path,
        source: std::io::Error::other(e.to_string()),
    })
}

fn trace_csv(history: &[TracePoint]) -> String {
    let mut out = String::from("iter,energy,residual\n");
    for point in history {
        let _ = writeln!(out, "{},{},{}", point.iter, point.energy, point.residual);
    }
    out
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "nan".into(), |v| format!("{v}"))
}

/// One coupled-system solve at a single eps: snapshot, one-row diagnostics, summary.
pub fn cmd_solve(config_path: &Path, overrides: &Overrides) -> Result<i32, CliError> {
    let prepared = prepare(config_path, overrides, "solve")?;
    let Prepared { config, grid, maps, run_dir } = &prepared;
    let epsilon = overrides
        .epsilon
        .or_else(|| config.schedule().and_then(|s| s.first().copied()))
        .ok_or_else(|| {
            ConfigError::Invalid("solve needs --epsilon or a [sweep] section".into())
        })?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ConfigError::Invalid(format!("--epsilon must be positive, got {epsilon}")).into());
    }
    check_margin(grid, config.diagnostics.margin)?;

    let beta_cfg = SolveConfig {
        max_iters: config.solver.max_iters.unwrap_or(200_000),
        seed: config.solver.seed.unwrap_or(0),
        ..beta_defaults(grid)
    };
    let (u_star, beta_stats) = solve_beta_checked(grid, maps, &beta_cfg)?;

    let solve_cfg = config.solve_config(grid, epsilon);
    let (psi, stats) = solve_gl_multi(grid, maps, epsilon, &solve_cfg)
        .map_err(|e| CliError::Numeric(e.to_string()))?;

    let gammas = rotation_gammas(maps);
    let record = record_diagnostics(
        grid,
        &psi,
        epsilon,
        &u_star,
        gammas.as_deref(),
        config.diagnostics.margin,
        &stats,
    )?;

    save_field(run_dir, "field.snap", &psi, epsilon)?;
    save_field(run_dir, "u_star.snap", &u_star, f64::NAN)?;
    write_file(&run_dir.join("diagnostics.csv"), &diagnostics_csv(psi.n(), std::slice::from_ref(&record)))?;
    if config.diagnostics.trace {
        write_file(&run_dir.join("trace.csv"), &trace_csv(&stats.history))?;
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "command: solve");
    let _ = writeln!(summary, "epsilon: {epsilon}");
    let _ = writeln!(summary, "converged: {}", stats.converged);
    let _ = writeln!(summary, "iterations: {}", stats.iterations);
    let _ = writeln!(summary, "start: {}", stats.start_label);
    let _ = writeln!(summary, "energy_total: {}", record.energy.total);
    let _ = writeln!(summary, "residual_el: {}", record.residual_el);
    let _ = writeln!(summary, "sup_modulus_defect: {}", record.sup_modulus_defect);
    let _ = writeln!(summary, "f_rel_err: {}", record.f_rel_err);
    let _ = writeln!(summary, "pohozaev: {}", record.pohozaev);
    let _ = writeln!(summary, "rotation_defect: {}", fmt_opt(record.rotation_defect));
    let _ = writeln!(summary, "beta_reference: {} (converged: {})", beta_stats.energy, beta_stats.converged);
    let _ = writeln!(summary, "under_resolved: {}", record.under_resolved);
    for (j, (charge, count)) in record.zero_charges.iter().zip(&record.zero_counts).enumerate() {
        let _ = writeln!(summary, "zeros_c{}: charge {charge} in {count} cells", j + 1);
    }
    write_file(&run_dir.join("summary.txt"), &summary)?;
    println!("{}", run_dir.display());
    print!("{summary}");

    Ok(if stats.converged { 0 } else { 2 })
}

fn solve_beta_checked(
    grid: &Grid,
    maps: &[BoundaryMap],
    cfg: &SolveConfig,
) -> Result<(MultiField, SolveStats), CliError> {
    let (u_star, stats) = glvortex_core::harmonic::solve_beta(grid, maps, cfg)?;
    if !stats.converged {
        eprintln!(
            "warning: constrained reference solve stopped at residual {} (target {})",
            stats.residual, cfg.tol_residual
        );
    }
    Ok((u_star, stats))
}

fn verdict_block(result: &ContinuationResult) -> String {
    let n = result.u_star.n();
    let mut out = String::new();
    let records = &result.records;
    let _ = writeln!(out, "beta_reference: {} (converged: {})", result.beta, result.u_star_converged);
    if let Some(gammas) = &result.gammas {
        let _ = writeln!(out, "rotation_family: gammas {gammas:?}");
    }
    if result.branch_jump {
        let _ = writeln!(out, "warning: energy dropped > 5% between records; branch jump suspected, trends suspended");
    }
    if result.aborted {
        let _ = writeln!(out, "warning: sweep aborted on a non-finite solve; records are partial");
    }
    if records.is_empty() {
        return out;
    }

    let first = &records[0];
    let last = &records[records.len() - 1];
    let decreasing = |f: fn(&ContinuationRecord) -> f64| records.windows(2).all(|w| f(&w[1]) < f(&w[0]));

    let _ = writeln!(
        out,
        "potential_total: first {} last {} strictly_decreasing {} ratio {}",
        first.energy.potential_total,
        last.energy.potential_total,
        decreasing(|r| r.energy.potential_total),
        last.energy.potential_total / first.energy.potential_total.max(1e-300),
    );
    let _ = writeln!(
        out,
        "sup_modulus_defect: first {} last {} decreasing {}",
        first.sup_modulus_defect,
        last.sup_modulus_defect,
        decreasing(|r| r.sup_modulus_defect),
    );
    let _ = writeln!(
        out,
        "f_rel_err: first {} last {} decreasing {}",
        first.f_rel_err,
        last.f_rel_err,
        decreasing(|r| r.f_rel_err),
    );
    let poho_max = records.iter().map(|r| r.pohozaev).fold(f64::MIN, f64::max);
    let poho_min = records.iter().map(|r| r.pohozaev).fold(f64::MAX, f64::min);
    let _ = writeln!(
        out,
        "pohozaev: min {} max {} ratio {}",
        poho_min,
        poho_max,
        poho_max / poho_min.max(1e-300),
    );
    for j in 0..n {
        let (_, verdict) = component_potential_trace(result, j);
        let _ = writeln!(out, "component_{}_potential: {}", j + 1, verdict.as_str());
    }
    for j in 0..n {
        let errs: Vec<f64> = records.iter().map(|r| r.interior_l2_err[j]).collect();
        let trend = errs.windows(2).all(|w| w[1] < w[0]);
        let _ = writeln!(
            out,
            "interior_l2_c{}: first {} last {} decreasing {}",
            j + 1,
            errs[0],
            errs[errs.len() - 1],
            trend
        );
    }
    if records.iter().any(|r| r.rotation_defect.is_some()) {
        let _ = writeln!(out, "rotation_defect_final: {}", fmt_opt(last.rotation_defect));
    }
    for r in records {
        let _ = writeln!(
            out,
            "record eps {}: energy {} converged {} under_resolved {} start {} iterations {}",
            r.epsilon, r.energy.total, r.converged, r.under_resolved, r.start_label, r.iterations
        );
    }
    out
}

/// Full eps-continuation sweep with warm starts; writes `diagnostics.csv`, per-record
/// snapshots, the constrained reference, and a verdict summary.
pub fn cmd_continue(config_path: &Path, overrides: &Overrides) -> Result<i32, CliError> {
    let prepared = prepare(config_path, overrides, "continue")?;
    let Prepared { config, grid, maps, run_dir } = &prepared;
    let schedule = config
        .schedule()
        .ok_or_else(|| ConfigError::Invalid("continue needs a [sweep] section".into()))?;
    check_margin(grid, config.diagnostics.margin)?;

    let result = continuation(grid, maps, &schedule, &config.continuation_config())?;

    write_file(
        &run_dir.join("diagnostics.csv"),
        &diagnostics_csv(result.u_star.n(), &result.records),
    )?;
    save_field(run_dir, "u_star.snap", &result.u_star, f64::NAN)?;
    for (k, (record, field)) in result.records.iter().zip(&result.fields).enumerate() {
        save_field(run_dir, &format!("field_{:03}.snap", k + 1), field, record.epsilon)?;
        if config.diagnostics.trace {
            write_file(&run_dir.join(format!("trace_{:03}.csv", k + 1)), &trace_csv(&record.history))?;
        }
    }

    let mut summary = String::from("command: continue\n");
    summary.push_str(&verdict_block(&result));
    write_file(&run_dir.join("summary.txt"), &summary)?;
    println!("{}", run_dir.display());
    print!("{summary}");

    let clean = !result.aborted && result.records.iter().all(|r| r.converged);
    Ok(if clean { 0 } else { 2 })
}

/// Limit-problem report: beta always, alpha when every degree vanishes, lambda_1 and the
/// rotation-symmetry threshold.
pub fn cmd_alpha_beta(config_path: &Path, overrides: &Overrides) -> Result<i32, CliError> {
    let prepared = prepare(config_path, overrides, "alpha-beta")?;
    let Prepared { config, grid, maps, run_dir } = &prepared;

    let cfg = SolveConfig {
        max_iters: config.solver.max_iters.unwrap_or(200_000),
        seed: config.solver.seed.unwrap_or(0),
        tol_residual: config.solver.tol.unwrap_or(beta_defaults(grid).tol_residual),
        ..beta_defaults(grid)
    };
    let outcome = alpha_beta(grid, maps, &cfg)?;
    let report = &outcome.report;

    let mut csv = String::from(
        "alpha,beta,gap,lambda1,rotation_threshold,beta_residual,beta_converged,beta_iterations\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{}",
        fmt_opt(report.alpha),
        report.beta,
        fmt_opt(report.gap),
        report.lambda1,
        report.rotation_threshold,
        report.beta_residual,
        report.beta_converged,
        report.beta_iterations
    );
    write_file(&run_dir.join("report.csv"), &csv)?;
    save_field(run_dir, "beta_minimizer.snap", &outcome.beta_minimizer, f64::NAN)?;
    if let Some(alpha_field) = &outcome.alpha_minimizer {
        save_field(run_dir, "alpha_minimizer.snap", alpha_field, f64::NAN)?;
    }

    let mut summary = String::from("command: alpha-beta\n");
    match report.alpha {
        Some(alpha) => {
            let _ = writeln!(summary, "alpha: {alpha}");
            let _ = writeln!(summary, "gap: {}", fmt_opt(report.gap));
        }
        None => {
            let _ = writeln!(summary, "alpha: undefined (nonzero degree)");
        }
    }
    let _ = writeln!(summary, "beta: {}", report.beta);
    let _ = writeln!(
        summary,
        "beta_residual: {} (converged: {}, iterations: {})",
        report.beta_residual, report.beta_converged, report.beta_iterations
    );
    let _ = writeln!(summary, "lambda1: {}", report.lambda1);
    let _ = writeln!(summary, "rotation_threshold: {}", report.rotation_threshold);
    let _ = writeln!(summary, "constraint_deviation: {}", constraint_deviation(&outcome.beta_minimizer));
    for (j, c) in outcome.beta_minimizer.components.iter().enumerate() {
        let min = c.iter().map(|z| z.abs()).fold(f64::MAX, f64::min);
        let max = c.iter().map(|z| z.abs()).fold(0.0f64, f64::max);
        let _ = writeln!(summary, "beta_minimizer_c{} modulus: min {min} max {max}", j + 1);
    }
    write_file(&run_dir.join("summary.txt"), &summary)?;
    println!("{}", run_dir.display());
    print!("{summary}");

    Ok(if report.beta_converged { 0 } else { 2 })
}

/// Single-component sweep of the first configured component: energy versus log(1/eps)
/// with its least-squares slope, the classic logarithmic-growth baseline.
pub fn cmd_baseline(config_path: &Path, overrides: &Overrides) -> Result<i32, CliError> {
    let prepared = prepare(config_path, overrides, "baseline")?;
    let Prepared { config, grid, maps, run_dir } = &prepared;
    let schedule = config
        .schedule()
        .ok_or_else(|| ConfigError::Invalid("baseline needs a [sweep] section".into()))?;
    if maps.len() > 1 {
        eprintln!("baseline uses component 1 of {} configured components", maps.len());
    }
    let map = maps[0].clone();

    let mut csv = String::from("epsilon,energy_total,dirichlet_total,potential_total,residual_el,converged\n");
    let mut rows: Vec<(f64, f64, bool)> = Vec::new();
    let mut warm: Option<MultiField> = None;
    for (k, &epsilon) in schedule.iter().enumerate() {
        let cfg = config.solve_config(grid, epsilon);
        let (psi, stats) = match warm.take() {
            None => {
                let strategy = if map.degree > 0 { InitStrategy::VortexProduct } else { InitStrategy::Harmonic };
                let init = init_field(grid, std::slice::from_ref(&map), strategy);
                solve_single_gl(grid, &map, epsilon, init, &cfg)
            }
            Some(init) => solve_single_gl(grid, &map, epsilon, init, &cfg),
        }
        .map_err(|e| CliError::Numeric(e.to_string()))?;
        let energy = energy_gl(grid, &psi, epsilon);
        let residual = glvortex_core::solver::residual_el(grid, &psi, epsilon);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            epsilon, energy.total, energy.dirichlet_total, energy.potential_total, residual, stats.converged
        );
        if config.diagnostics.trace {
            write_file(&run_dir.join(format!("trace_{:03}.csv", k + 1)), &trace_csv(&stats.history))?;
        }
        save_field(run_dir, &format!("field_{:03}.snap", k + 1), &psi, epsilon)?;
        rows.push((epsilon, energy.total, stats.converged));
        warm = Some(psi);
    }
    write_file(&run_dir.join("baseline.csv"), &csv)?;

    // Least-squares slope of E against log(1/eps) over converged rows.
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(_, _, ok)| *ok)
        .map(|&(eps, e, _)| ((1.0 / eps).ln(), e))
        .collect();
    let slope = if fit.len() >= 2 {
        let n = fit.len() as f64;
        let sx: f64 = fit.iter().map(|(x, _)| x).sum();
        let sy: f64 = fit.iter().map(|(_, y)| y).sum();
        let sxx: f64 = fit.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = fit.iter().map(|(x, y)| x * y).sum();
        Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
    } else {
        None
    };

    let mut summary = String::from("command: baseline\n");
    let _ = writeln!(summary, "degree: {}", map.degree);
    let _ = writeln!(summary, "converged_rows: {} of {}", fit.len(), rows.len());
    match slope {
        Some(s) => {
            let _ = writeln!(summary, "energy_slope_vs_log_inv_eps: {s}");
            let _ = writeln!(summary, "slope_over_pi: {}", s / std::f64::consts::PI);
        }
        None => {
            let _ = writeln!(summary, "energy_slope_vs_log_inv_eps: nan (need >= 2 converged rows)");
        }
    }
    write_file(&run_dir.join("summary.txt"), &summary)?;
    println!("{}", run_dir.display());
    print!("{summary}");

    Ok(if rows.iter().all(|(_, _, ok)| *ok) { 0 } else { 2 })
}

/// Fast invariant suite with no config: gradient versus finite differences, projection
/// exactness, boundary winding, and the lambda_1 closed form. Exit 0 iff all pass.
pub fn cmd_check() -> i32 {
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("{}: {} ({detail})", name, if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    {
        let grid = build_grid(16).unwrap();
        let maps = vec![BoundaryMap::pure_degree(1), BoundaryMap::pure_degree(0)];
        let mut psi = init_field(&grid, &maps, InitStrategy::Random(7));
        let epsilon = 0.3;
        let grad = grad_energy_gl(&grid, &psi, epsilon);
        let delta = 1e-6;
        let mut worst = 0.0f64;
        for &(j, ix, iy, real_part) in
            &[(0usize, 3usize, 4usize, true), (0, 8, 8, false), (1, 5, 11, true), (1, 12, 6, false)]
        {
            let p = grid.idx(ix, iy);
            let base = psi.components[j][p];
            let bump = if real_part { Complex::new(delta, 0.0) } else { Complex::new(0.0, delta) };
            psi.components[j][p] = base + bump;
            let e_plus = energy_gl(&grid, &psi, epsilon).total;
            psi.components[j][p] = base - bump;
            let e_minus = energy_gl(&grid, &psi, epsilon).total;
            psi.components[j][p] = base;
            let fd = (e_plus - e_minus) / (2.0 * delta);
            let g = if real_part { grad.components[j][p].re } else { grad.components[j][p].im };
            worst = worst.max((fd - g).abs() / g.abs().max(1e-3));
        }
        report("gradient_vs_finite_differences", worst < 1e-6, format!("worst rel err {worst:.3e}, want < 1e-6"));
    }

    {
        let grid = build_grid(8).unwrap();
        let maps = vec![BoundaryMap::pure_degree(0), BoundaryMap::pure_degree(0)];
        let psi = init_field(&grid, &maps, InitStrategy::Random(5));
        match project_sphere(&psi).and_then(|w| project_sphere(&w).map(|w2| (w, w2))) {
            Ok((w, w2)) => {
                let deviation = constraint_deviation(&w);
                let moved = w
                    .components
                    .iter()
                    .zip(&w2.components)
                    .flat_map(|(a, b)| a.iter().zip(b))
                    .map(|(x, y)| (*x - *y).abs())
                    .fold(0.0f64, f64::max);
                report(
                    "projection_exact_and_idempotent",
                    deviation < 1e-12 && moved < 1e-14,
                    format!("deviation {deviation:.3e} (want < 1e-12), idempotence {moved:.3e} (want < 1e-14)"),
                );
            }
            Err(e) => report("projection_exact_and_idempotent", false, e.to_string()),
        }
    }

    {
        let grid = build_grid(16).unwrap();
        let mut ok = true;
        let mut detail = String::new();
        for degree in 0..4u32 {
            let map = BoundaryMap::new(degree, vec![PhaseTerm { frequency: 1, amplitude: 0.3, phase: 0.1 }]);
            let samples = boundary_samples(&grid, &map);
            match winding_number(&samples) {
                Ok(w) if w == i64::from(degree) => {}
                other => {
                    ok = false;
                    let _ = write!(detail, "degree {degree} gave {other:?}; ");
                }
            }
        }
        if detail.is_empty() {
            detail = "degrees 0..=3 recovered".into();
        }
        report("boundary_winding", ok, detail);
    }

    {
        let grid = build_grid(32).unwrap();
        let computed = lambda1(&grid);
        let closed = lambda1_closed_form(&grid);
        let rel = ((computed - closed) / closed).abs();
        let continuum = (closed / (2.0 * std::f64::consts::PI.powi(2)) - 1.0).abs();
        report(
            "lambda1_closed_form",
            rel < 1e-9,
            format!("rel err {rel:.3e} (want < 1e-9); continuum offset {continuum:.3e}"),
        );
    }

    if all_ok { 0 } else { 1 }
}
