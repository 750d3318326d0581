//! Strict TOML run configuration.
//!
//! Every section rejects unknown keys so a typo in an eps schedule or a tolerance can
//! never silently change an experiment. The same structs serialize back to TOML for the
//! resolved-config copy placed in each run directory.

use glvortex_core::boundary::{BoundaryMap, PhaseTerm};
use glvortex_core::{asymptotics::ContinuationConfig, solver::SolveConfig, Grid};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config error: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_cells: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    pub components: Vec<ComponentSection>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSection {
    pub degree: u32,
    #[serde(default)]
    pub psi: Vec<PsiTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiTerm {
    pub frequency: u32,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_schedule: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometric: Option<GeometricSweep>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricSweep {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub trace: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection { margin: default_margin(), trace: false }
    }
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_output_dir() }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let config: RunConfig = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.problem.n == 0 {
            return Err(ConfigError::Invalid("problem.n must be at least 1".into()));
        }
        if self.problem.n != self.problem.components.len() {
            return Err(ConfigError::Invalid(format!(
                "problem.n = {} but problem.components has {} entries",
                self.problem.n,
                self.problem.components.len()
            )));
        }
        if self.grid.n_cells < 4 || self.grid.n_cells % 2 != 0 {
            return Err(ConfigError::Invalid(format!(
                "grid.n_cells must be even and at least 4, got {}",
                self.grid.n_cells
            )));
        }
        if !(0.0..0.5).contains(&self.diagnostics.margin) {
            return Err(ConfigError::Invalid(format!(
                "diagnostics.margin must lie in [0, 0.5), got {}",
                self.diagnostics.margin
            )));
        }
        if let Some(sweep) = &self.sweep {
            match (&sweep.eps_schedule, &sweep.geometric) {
                (Some(_), Some(_)) => {
                    return Err(ConfigError::Invalid(
                        "sweep.eps_schedule and sweep.geometric are mutually exclusive".into(),
                    ))
                }
                (None, None) => {
                    return Err(ConfigError::Invalid(
                        "sweep needs either sweep.eps_schedule or sweep.geometric".into(),
                    ))
                }
                (Some(schedule), None) => {
                    let ok = !schedule.is_empty()
                        && schedule.iter().all(|e| e.is_finite() && *e > 0.0)
                        && schedule.windows(2).all(|w| w[1] < w[0]);
                    if !ok {
                        return Err(ConfigError::Invalid(format!(
                            "sweep.eps_schedule must be strictly decreasing and positive, got {schedule:?}"
                        )));
                    }
                }
                (None, Some(g)) => {
                    if !(g.start > 0.0 && g.start.is_finite()) {
                        return Err(ConfigError::Invalid(format!(
                            "sweep.geometric.start must be positive, got {}",
                            g.start
                        )));
                    }
                    if !(g.ratio > 0.0 && g.ratio < 1.0) {
                        return Err(ConfigError::Invalid(format!(
                            "sweep.geometric.ratio must lie in (0, 1), got {}",
                            g.ratio
                        )));
                    }
                    if g.count == 0 {
                        return Err(ConfigError::Invalid(
                            "sweep.geometric.count must be at least 1".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parse-time heads-ups that do not block the run, e.g. schedule entries below the
    /// 2h resolution floor (their records will be marked under-resolved).
    #[must_use]
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let floor = 2.0 / self.grid.n_cells as f64;
        if let Some(schedule) = self.schedule() {
            for eps in schedule {
                if eps < floor {
                    out.push(format!(
                        "eps = {eps} is below the resolution floor 2h = {floor}; its record will be under-resolved"
                    ));
                }
            }
        }
        out
    }

    /// The eps schedule, with a geometric specification expanded.
    #[must_use]
    pub fn schedule(&self) -> Option<Vec<f64>> {
        let sweep = self.sweep.as_ref()?;
        if let Some(schedule) = &sweep.eps_schedule {
            return Some(schedule.clone());
        }
        let g = sweep.geometric.as_ref()?;
        Some((0..g.count).map(|k| g.start * g.ratio.powi(k as i32)).collect())
    }

    #[must_use]
    pub fn boundary_maps(&self) -> Vec<BoundaryMap> {
        self.problem
            .components
            .iter()
            .map(|c| {
                BoundaryMap::new(
                    c.degree,
                    c.psi
                        .iter()
                        .map(|t| PhaseTerm {
                            frequency: t.frequency,
                            amplitude: t.amplitude,
                            phase: t.phase,
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// Solver knobs for one eps, with grid- and eps-dependent defaults filled in.
    #[must_use]
    pub fn solve_config(&self, grid: &Grid, epsilon: f64) -> SolveConfig {
        let defaults = SolveConfig::defaults(grid, epsilon);
        SolveConfig {
            tol_residual: self.solver.tol.unwrap_or(defaults.tol_residual),
            max_iters: self.solver.max_iters.unwrap_or(defaults.max_iters),
            dt0: self.solver.dt0.unwrap_or(defaults.dt0),
            seed: self.solver.seed.unwrap_or(defaults.seed),
        }
    }

    #[must_use]
    pub fn continuation_config(&self) -> ContinuationConfig {
        let base = ContinuationConfig::default();
        ContinuationConfig {
            tol_residual: self.solver.tol,
            max_iters: self.solver.max_iters.unwrap_or(base.max_iters),
            dt0: self.solver.dt0,
            seed: self.solver.seed.unwrap_or(base.seed),
            margin: self.diagnostics.margin,
        }
    }
}
