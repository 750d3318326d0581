//! Browser front end for the coupled vortex flows: an interruptible stepper over the
//! same grid, energies, and linear solves the command-line lab uses, plus pixel
//! renderers for the modulus, phase, and constraint-defect fields.
//!
//! The stepper runs one accepted backtracking step at a time so a page can animate the
//! relaxation. A positive coupling length runs the coupled system; zero selects the
//! constrained limit flow, which renormalizes the total modulus after every step.

use glvortex_core::asymptotics::detect_zeros;
use glvortex_core::boundary::{BoundaryMap, PhaseTerm};
use glvortex_core::field::{
    energy_dirichlet, energy_gl, init_field, sup_modulus_defect, InitStrategy, MultiField,
};
use glvortex_core::grid::build_grid;
use glvortex_core::harmonic::{gradient_square_edges, project_sphere, residual_harmonic};
use glvortex_core::linsys::solve_shifted_laplacian;
use glvortex_core::solver::{pin_boundary, residual_el};
use glvortex_core::{Complex, Grid};
use wasm_bindgen::prelude::*;

const DT_CAP: f64 = 1.0;
const DT_FLOOR: f64 = 1e-18;

/// Interactive minimization session over one grid and one set of boundary data.
#[wasm_bindgen]
pub struct GlLab {
    grid: Grid,
    maps: Vec<BoundaryMap>,
    field: MultiField,
    epsilon: f64,
    dt: f64,
    energy: f64,
    iterations: u32,
    stalled: bool,
}

/// Linear interpolation through a small color table, t clamped to [0, 1].
fn ramp(stops: &[[f64; 3]], t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let lo = (t.floor() as usize).min(stops.len() - 2);
    let frac = t - lo as f64;
    let mut rgb = [0u8; 3];
    for (k, channel) in rgb.iter_mut().enumerate() {
        let v = stops[lo][k] + frac * (stops[lo + 1][k] - stops[lo][k]);
        *channel = (v * 255.0).round().clamp(0.0, 255.0) as u8;
    }
    rgb
}

/// Dark-blue to yellow ramp for nonnegative magnitudes.
fn magnitude_color(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [0.05, 0.03, 0.22],
        [0.23, 0.20, 0.51],
        [0.13, 0.56, 0.55],
        [0.37, 0.78, 0.38],
        [0.99, 0.91, 0.14],
    ];
    ramp(&STOPS, t)
}

/// Hue wheel for a phase angle in radians.
fn phase_color(theta: f64) -> [u8; 3] {
    let hue = (theta / std::f64::consts::TAU).rem_euclid(1.0) * 6.0;
    let sector = hue.floor() as usize % 6;
    let f = hue - hue.floor();
    let q = 1.0 - f;
    let (r, g, b) = match sector {
        0 => (1.0, f, 0.0),
        1 => (q, 1.0, 0.0),
        2 => (0.0, 1.0, f),
        3 => (0.0, q, 1.0),
        4 => (f, 0.0, 1.0),
        _ => (1.0, 0.0, q),
    };
    [
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8,
    ]
}

/// Blue-white-red ramp for signed values scaled to [-1, 1].
fn diverging_color(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 3] = [[0.13, 0.31, 0.78], [0.97, 0.97, 0.97], [0.84, 0.19, 0.15]];
    ramp(&STOPS, (t.clamp(-1.0, 1.0) + 1.0) / 2.0)
}

#[wasm_bindgen]
impl GlLab {
    /// Builds a session on an n_cells x n_cells grid. Component j carries boundary
    /// data of degree `degrees[j]` with phase perturbation `psi_amplitude sin(2 pi t)`.
    /// `epsilon = 0` selects the constrained limit flow. Wound data starts from the
    /// unit-vortex product, unwound data from a seeded smooth perturbation.
    #[wasm_bindgen(constructor)]
    pub fn new(
        n_cells: usize,
        epsilon: f64,
        degrees: &[u32],
        psi_amplitude: f64,
        seed: u32,
    ) -> Result<GlLab, String> {
        if degrees.is_empty() {
            return Err("need at least one component degree".to_string());
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(format!("epsilon must be finite and >= 0, got {epsilon}"));
        }
        if !psi_amplitude.is_finite() {
            return Err("psi amplitude must be finite".to_string());
        }
        let grid = build_grid(n_cells).map_err(|e| e.to_string())?;
        let maps: Vec<BoundaryMap> = degrees
            .iter()
            .map(|&d| {
                let psi = if psi_amplitude == 0.0 {
                    Vec::new()
                } else {
                    vec![PhaseTerm { frequency: 1, amplitude: psi_amplitude, phase: 0.0 }]
                };
                BoundaryMap::new(d, psi)
            })
            .collect();
        let mut lab = GlLab {
            grid,
            maps,
            field: MultiField { n_cells, components: Vec::new() },
            epsilon,
            dt: 0.0,
            energy: 0.0,
            iterations: 0,
            stalled: false,
        };
        lab.reset(seed)?;
        Ok(lab)
    }

    /// Reseeds the state and restarts the flow.
    pub fn reset(&mut self, seed: u32) -> Result<(), String> {
        let wound = self.maps.iter().any(|m| m.degree > 0);
        let strategy = if wound {
            InitStrategy::VortexProduct
        } else {
            InitStrategy::Random(u64::from(seed))
        };
        let mut field = init_field(&self.grid, &self.maps, strategy);
        if self.epsilon == 0.0 {
            field = project_sphere(&field).map_err(|e| e.to_string())?;
            pin_boundary(&self.grid, &self.maps, &mut field);
        }
        self.field = field;
        self.iterations = 0;
        self.stalled = false;
        self.reset_step_control();
        Ok(())
    }

    /// Switches the coupling length without touching the current state; zero moves to
    /// the constrained limit flow by renormalizing the total modulus.
    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<(), String> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(format!("epsilon must be finite and >= 0, got {epsilon}"));
        }
        self.epsilon = epsilon;
        if epsilon == 0.0 {
            let mut projected = project_sphere(&self.field).map_err(|e| e.to_string())?;
            pin_boundary(&self.grid, &self.maps, &mut projected);
            self.field = projected;
        }
        self.stalled = false;
        self.reset_step_control();
        Ok(())
    }

    /// Advances up to `count` accepted steps and returns the equation residual after
    /// the last one. Stops early once the step size collapses.
    pub fn step(&mut self, count: u32) -> f64 {
        for _ in 0..count {
            if self.stalled || !self.step_once() {
                break;
            }
        }
        self.residual()
    }

    /// Max-norm equation residual of the current state.
    #[must_use]
    pub fn residual(&self) -> f64 {
        if self.epsilon > 0.0 {
            residual_el(&self.grid, &self.field, self.epsilon)
        } else {
            residual_harmonic(&self.grid, &self.field)
        }
    }

    /// Energy of the current state: coupled energy for positive epsilon, total
    /// Dirichlet energy in the limit flow.
    #[must_use]
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Dirichlet part of the energy.
    #[must_use]
    pub fn energy_dirichlet(&self) -> f64 {
        energy_dirichlet(&self.grid, &self.field)
    }

    /// Potential part of the coupled energy; zero in the limit flow.
    #[must_use]
    pub fn energy_potential(&self) -> f64 {
        if self.epsilon > 0.0 {
            energy_gl(&self.grid, &self.field, self.epsilon).potential_total
        } else {
            0.0
        }
    }

    /// Largest deviation of the total squared modulus from the component count.
    #[must_use]
    pub fn constraint_deviation(&self) -> f64 {
        sup_modulus_defect(&self.grid, &self.field)
    }

    /// Accepted steps since the last reset.
    #[must_use]
    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// Current coupling length; zero in the limit flow.
    #[must_use]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Nodes per side of the pixel buffers.
    #[must_use]
    pub fn side(&self) -> usize {
        self.grid.side()
    }

    /// Number of components.
    #[must_use]
    pub fn n_components(&self) -> usize {
        self.field.n()
    }

    /// True once backtracking has exhausted the step size and stepping stopped.
    #[must_use]
    pub fn is_stalled(&self) -> bool {
        self.stalled
    }

    /// RGBA pixels of |u_j|, scaled against sqrt(n); row 0 is the top of the square.
    pub fn render_modulus(&self, component: usize) -> Result<Vec<u8>, String> {
        let c = self.component(component)?;
        let cap = (self.field.n() as f64).sqrt();
        Ok(self.pixels(|p| magnitude_color(c[p].abs() / cap)))
    }

    /// RGBA pixels of arg(u_j) as a hue wheel; row 0 is the top of the square.
    pub fn render_phase(&self, component: usize) -> Result<Vec<u8>, String> {
        let c = self.component(component)?;
        Ok(self.pixels(|p| phase_color(c[p].arg())))
    }

    /// RGBA pixels of the constraint defect n - sum |u_j|^2, blue negative, red
    /// positive, scaled by its current max magnitude.
    #[must_use]
    pub fn render_defect(&self) -> Vec<u8> {
        let n = self.field.n() as f64;
        let defect: Vec<f64> = (0..self.grid.n_nodes())
            .map(|p| n - self.field.components.iter().map(|c| c[p].abs_sq()).sum::<f64>())
            .collect();
        let scale = defect.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1e-12);
        self.pixels(|p| diverging_color(defect[p] / scale))
    }

    /// Zero cells of one component as flattened (ix, iy, charge) triples.
    pub fn vortex_cells(&self, component: usize) -> Result<Vec<i32>, String> {
        let c = self.component(component)?;
        let scan = detect_zeros(&self.grid, c);
        Ok(scan
            .cells
            .iter()
            .flat_map(|cell| [cell.ix as i32, cell.iy as i32, cell.charge as i32])
            .collect())
    }
}

impl GlLab {
    fn component(&self, j: usize) -> Result<&[Complex], String> {
        self.field
            .components
            .get(j)
            .map(Vec::as_slice)
            .ok_or_else(|| format!("component {j} out of range (n = {})", self.field.n()))
    }

    fn reset_step_control(&mut self) {
        self.dt = if self.epsilon > 0.0 { 0.1 * self.epsilon * self.epsilon } else { 5e-3 };
        self.energy = self.current_energy(&self.field);
    }

    fn current_energy(&self, state: &MultiField) -> f64 {
        if self.epsilon > 0.0 {
            energy_gl(&self.grid, state, self.epsilon).total
        } else {
            energy_dirichlet(&self.grid, state)
        }
    }

    /// One accepted backtracking step of the active flow, in the same correction form
    /// as the batch solvers. Returns false once the step size collapses.
    fn step_once(&mut self) -> bool {
        let n_nodes = self.grid.n_nodes();
        let n = self.field.n() as f64;
        let forcing: Vec<f64> = if self.epsilon > 0.0 {
            let inv_eps2 = 1.0 / (self.epsilon * self.epsilon);
            (0..n_nodes)
                .map(|p| {
                    let total: f64 = self.field.components.iter().map(|c| c[p].abs_sq()).sum();
                    inv_eps2 * (n - total)
                })
                .collect()
        } else {
            let s = gradient_square_edges(&self.grid, &self.field);
            s.iter().map(|v| v / n).collect()
        };

        loop {
            let mut candidate = self.field.clone();
            let mut solved = true;
            for (j, c) in self.field.components.iter().enumerate() {
                let lap = self.grid.laplacian(c);
                let rhs: Vec<Complex> = (0..n_nodes)
                    .map(|p| (lap[p] + c[p].scale(forcing[p])).scale(self.dt))
                    .collect();
                let mut delta = vec![Complex::ZERO; n_nodes];
                let stats = solve_shifted_laplacian(
                    &self.grid,
                    1.0,
                    self.dt,
                    &rhs,
                    &mut delta,
                    1e-8,
                    30 * self.grid.side(),
                );
                if !stats.converged {
                    solved = false;
                    break;
                }
                for (value, step) in candidate.components[j].iter_mut().zip(&delta) {
                    *value = *value + *step;
                }
            }

            if solved {
                if self.epsilon == 0.0 {
                    match project_sphere(&candidate) {
                        Ok(projected) => candidate = projected,
                        Err(_) => solved = false,
                    }
                }
            }
            if solved {
                pin_boundary(&self.grid, &self.maps, &mut candidate);
                let e_new = self.current_energy(&candidate);
                let slack = 1e-12 * (1.0 + self.energy.abs());
                if e_new.is_finite() {
                    if e_new <= self.energy - slack {
                        self.field = candidate;
                        self.energy = e_new;
                        self.dt = (self.dt * 1.1).min(DT_CAP);
                        self.iterations += 1;
                        return true;
                    }
                    // Below the f64 resolution of the energy the comparison cannot
                    // arbitrate the step; keep it only if the residual improved,
                    // and freeze dt.
                    if e_new <= self.energy + slack {
                        let r_new = if self.epsilon > 0.0 {
                            residual_el(&self.grid, &candidate, self.epsilon)
                        } else {
                            residual_harmonic(&self.grid, &candidate)
                        };
                        if r_new < self.residual() {
                            self.field = candidate;
                            self.energy = e_new;
                            self.iterations += 1;
                            return true;
                        }
                    }
                }
            }
            self.dt *= 0.5;
            if self.dt < DT_FLOOR {
                self.stalled = true;
                return false;
            }
        }
    }

    fn pixels(&self, color_at: impl Fn(usize) -> [u8; 3]) -> Vec<u8> {
        let side = self.grid.side();
        let mut out = vec![0u8; side * side * 4];
        for py in 0..side {
            let iy = side - 1 - py;
            for px in 0..side {
                let p = iy * side + px;
                let [r, g, b] = color_at(p);
                let at = (py * side + px) * 4;
                out[at] = r;
                out[at + 1] = g;
                out[at + 2] = b;
                out[at + 3] = 255;
            }
        }
        out
    }
}
