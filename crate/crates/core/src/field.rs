//! Multi-component fields, the coupled energy, its exact discrete gradient, and initializers.
//!
//! The discrete energy of u = (u_1, .., u_n) at coupling eps is
//!
//!   E_eps(u) = 1/2 sum_j sum_edges w_e |u_j(q) - u_j(p)|^2
//!            + 1/(4 eps^2) sum_nodes w_p (n - sum_j |u_j(p)|^2)^2,
//!
//! with forward differences per cell edge (edge weight 1, halved for edges lying on the
//! boundary lines so the sum is the trapezoid rule transversally) and nodal trapezoid
//! weights w_p. With these choices the energy gradient with respect to an interior nodal
//! value is exactly
//!
//!   g_j(p) = -h^2 ( lap u_j + u_j (n - sum_k |u_k|^2) / eps^2 )(p),
//!
//! i.e. -h^2 times the Euler-Lagrange residual, with no discretization slack between the
//! energy and its gradient. Finite-difference probes of the energy reproduce the gradient
//! to rounding accuracy, and descent methods inherit an exact energy-decrease test.

use crate::boundary::{boundary_samples, evaluate_g, BoundaryMap};
use crate::complex::Complex;
use crate::grid::{ComplexField, Grid, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An n-component complex field on a shared grid.
#[derive(Clone, Debug)]
pub struct MultiField {
    /// Grid resolution the components live on.
    pub n_cells: usize,
    /// One nodal field per component.
    pub components: Vec<ComplexField>,
}

impl MultiField {
    /// Number of components n.
    #[must_use]
    pub fn n(&self) -> usize {
        self.components.len()
    }

    /// True when every nodal value of every component is finite.
    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.iter().all(|z| z.is_finite()))
    }

    /// Largest deviation of the boundary nodes from the prescribed data.
    #[must_use]
    pub fn boundary_defect(&self, grid: &Grid, maps: &[BoundaryMap]) -> f64 {
        let mut worst = 0.0f64;
        for (component, map) in self.components.iter().zip(maps) {
            for bn in &grid.boundary_order {
                worst = worst.max((component[bn.index] - evaluate_g(map, bn.t)).abs());
            }
        }
        worst
    }
}

/// Energy of one state, split the way the diagnostics need it.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub epsilon: f64,
    pub total: f64,
    /// 1/2 int |grad u_j|^2 per component.
    pub dirichlet_per_component: Vec<f64>,
    pub dirichlet_total: f64,
    /// 1/(4 eps^2) int (n - sum |u_j|^2)^2.
    pub potential_total: f64,
    /// 1/eps^2 int (1 - |u_j|^2)^2 per component.
    pub potential_per_component: Vec<f64>,
}

/// Weight of the lattice edge from `p` along one axis: 1 in the bulk, 1/2 on the two
/// boundary lines parallel to the edge (trapezoid rule in the transverse direction).
/// Half-weighted edges join boundary nodes only, so interior energy gradients are
/// untouched by the halving.
#[inline]
fn edge_weight(transverse_index: usize, n_cells: usize) -> f64 {
    if transverse_index == 0 || transverse_index == n_cells {
        0.5
    } else {
        1.0
    }
}

/// Compensated accumulator. Long energy sums feed finite-difference checks that divide
/// by steps as small as 1e-6, so the plain sequential rounding walk of a few thousand
/// f64 additions would dominate the quantity being checked.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// 1/2 sum_edges w_e |u(q) - u(p)|^2 of one component: the discrete 1/2 int |grad u|^2.
#[must_use]
fn dirichlet_half(grid: &Grid, component: &[Complex]) -> f64 {
    let side = grid.side();
    let n = grid.n_cells;
    let mut acc = Kahan::default();
    for iy in 0..=n {
        let w = edge_weight(iy, n);
        let row = iy * side;
        for ix in 0..n {
            acc.add(w * (component[row + ix + 1] - component[row + ix]).abs_sq());
        }
    }
    for ix in 0..=n {
        let w = edge_weight(ix, n);
        for iy in 0..n {
            acc.add(w * (component[iy * side + ix + side] - component[iy * side + ix]).abs_sq());
        }
    }
    0.5 * acc.sum
}

/// Modulus defect n - sum_j |u_j(p)|^2 at one node.
#[inline]
fn defect_at(psi: &MultiField, p: usize) -> f64 {
    let n = psi.n() as f64;
    n - psi.components.iter().map(|c| c[p].abs_sq()).sum::<f64>()
}

/// Full energy report of a state at coupling eps.
#[must_use]
pub fn energy_gl(grid: &Grid, psi: &MultiField, epsilon: f64) -> EnergyReport {
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let dirichlet_per_component: Vec<f64> =
        psi.components.iter().map(|c| dirichlet_half(grid, c)).collect();
    let dirichlet_total: f64 = dirichlet_per_component.iter().sum();

    let mut pot_units = Kahan::default();
    let mut pot_component_units = vec![Kahan::default(); psi.n()];
    for p in 0..grid.n_nodes() {
        let w = grid.weight(p);
        let d = defect_at(psi, p);
        pot_units.add(w * d * d);
        for (j, c) in psi.components.iter().enumerate() {
            let dj = 1.0 - c[p].abs_sq();
            pot_component_units[j].add(w * dj * dj);
        }
    }
    let potential_total = 0.25 * inv_eps2 * pot_units.sum;
    let potential_per_component: Vec<f64> =
        pot_component_units.iter().map(|v| inv_eps2 * v.sum).collect();

    EnergyReport {
        epsilon,
        total: dirichlet_total + potential_total,
        dirichlet_per_component,
        dirichlet_total,
        potential_total,
        potential_per_component,
    }
}

/// Dirichlet part without the 1/2: sum_j int |grad u_j|^2, the constrained-limit functional I.
#[must_use]
pub fn energy_dirichlet(grid: &Grid, psi: &MultiField) -> f64 {
    2.0 * psi.components.iter().map(|c| dirichlet_half(grid, c)).sum::<f64>()
}

/// Exact gradient of `energy_gl` with respect to interior nodal values; boundary entries
/// are zero (boundary values are constrained data, not unknowns).
#[must_use]
pub fn grad_energy_gl(grid: &Grid, psi: &MultiField, epsilon: f64) -> MultiField {
    let side = grid.side();
    let n = grid.n_cells;
    let h2_inv_eps2 = grid.h * grid.h / (epsilon * epsilon);
    let mut components = Vec::with_capacity(psi.n());
    for c in &psi.components {
        let mut g = vec![Complex::ZERO; grid.n_nodes()];
        for iy in 1..n {
            let row = iy * side;
            for ix in 1..n {
                let p = row + ix;
                let nb = c[p - 1] + c[p + 1] + c[p - side] + c[p + side];
                let stiff = c[p].scale(4.0) - nb;
                g[p] = stiff - c[p].scale(h2_inv_eps2 * defect_at(psi, p));
            }
        }
        components.push(g);
    }
    MultiField { n_cells: psi.n_cells, components }
}

/// Pointwise potential multiplier f_eps = (n - sum_j |u_j|^2) / eps^2 at every node.
#[must_use]
pub fn f_epsilon_field(grid: &Grid, psi: &MultiField, epsilon: f64) -> ScalarField {
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    (0..grid.n_nodes()).map(|p| defect_at(psi, p) * inv_eps2).collect()
}

/// Largest pointwise modulus defect max_p |n - sum_j |u_j(p)|^2|.
#[must_use]
pub fn sup_modulus_defect(grid: &Grid, psi: &MultiField) -> f64 {
    (0..grid.n_nodes()).map(|p| defect_at(psi, p).abs()).fold(0.0, f64::max)
}

/// How a minimization run is seeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStrategy {
    /// Componentwise harmonic extension of the boundary data.
    Harmonic,
    /// Product of unit vortices at a centered regular polygon, one factor per unit of degree.
    VortexProduct,
    /// Harmonic extension plus seeded smooth Fourier modes vanishing on the boundary.
    Random(u64),
}

/// Default vortex positions for one component: the vertices of a regular polygon of
/// radius 0.25 around the center of the square, one vertex per unit of degree.
#[must_use]
pub fn default_vortex_points(degree: u32) -> Vec<(f64, f64)> {
    let d = degree as usize;
    (0..d)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / d as f64;
            (0.5 + 0.25 * theta.cos(), 0.5 + 0.25 * theta.sin())
        })
        .collect()
}

/// Moves vortex points off grid nodes (by h/2 in x) so the unit-vortex product never
/// divides by zero. Returns the adjusted points and whether anything moved.
#[must_use]
pub fn adjust_vortex_points(grid: &Grid, points: &[(f64, f64)]) -> (Vec<(f64, f64)>, bool) {
    let h = grid.h;
    let mut moved = false;
    let adjusted = points
        .iter()
        .map(|&(x, y)| {
            let on_node = |v: f64| (v / h - (v / h).round()).abs() < 1e-12;
            if on_node(x) && on_node(y) {
                moved = true;
                ((x + 0.5 * h).min(1.0 - h), y)
            } else {
                (x, y)
            }
        })
        .collect();
    (adjusted, moved)
}

/// Unit-vortex product field for one component: prod_k (z - a_k) / |z - a_k| at interior
/// nodes (1 for degree 0), boundary pinned to the component's data.
#[must_use]
pub fn vortex_product_field(grid: &Grid, map: &BoundaryMap, points: &[(f64, f64)]) -> ComplexField {
    let (points, moved) = adjust_vortex_points(grid, points);
    if moved {
        eprintln!("vortex init: moved a point off a grid node by h/2");
    }
    let mut field: ComplexField = (0..grid.n_nodes())
        .map(|p| {
            let (x, y) = grid.coords(p);
            let mut v = Complex::ONE;
            for &(ax, ay) in &points {
                let d = Complex::new(x - ax, y - ay);
                v = v * d.scale(1.0 / d.abs());
            }
            v
        })
        .collect();
    for bn in &grid.boundary_order {
        field[bn.index] = evaluate_g(map, bn.t);
    }
    field
}

/// Builds an initial state for the boundary data with the chosen strategy. The boundary
/// nodes are pinned to g_j exactly in every case.
#[must_use]
pub fn init_field(grid: &Grid, maps: &[BoundaryMap], strategy: InitStrategy) -> MultiField {
    let components = maps
        .iter()
        .enumerate()
        .map(|(j, map)| match strategy {
            InitStrategy::Harmonic => {
                crate::boundary::harmonic_extension(grid, &boundary_samples(grid, map))
            }
            InitStrategy::VortexProduct => {
                vortex_product_field(grid, map, &default_vortex_points(map.degree))
            }
            InitStrategy::Random(seed) => {
                let mut field =
                    crate::boundary::harmonic_extension(grid, &boundary_samples(grid, map));
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed.wrapping_add(j as u64 * 0x9E37_79B9_7F4A_7C15));
                let modes: Vec<(f64, f64, Complex)> = (1..=3)
                    .flat_map(|k| (1..=3).map(move |l| (k, l)))
                    .map(|(k, l)| {
                        let scale = 0.4 / (k * k + l * l) as f64;
                        let a = Complex::new(
                            rng.random_range(-1.0..1.0) * scale,
                            rng.random_range(-1.0..1.0) * scale,
                        );
                        (k as f64 * std::f64::consts::PI, l as f64 * std::f64::consts::PI, a)
                    })
                    .collect();
                for p in 0..grid.n_nodes() {
                    let (x, y) = grid.coords(p);
                    for &(kx, ly, a) in &modes {
                        field[p] += a.scale((kx * x).sin() * (ly * y).sin());
                    }
                }
                field
            }
        })
        .collect();
    MultiField { n_cells: grid.n_cells, components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::PhaseTerm;
    use crate::grid::build_grid;

    fn two_maps() -> Vec<BoundaryMap> {
        vec![
            BoundaryMap::new(1, vec![PhaseTerm { frequency: 1, amplitude: 0.3, phase: 0.0 }]),
            BoundaryMap::pure_degree(0),
        ]
    }

    #[test]
    fn linear_component_has_unit_dirichlet_energy() {
        // u = x + i y has int |grad u|^2 = 2, and the forward-difference sum is exact
        // because the differences are constant.
        let grid = build_grid(8).unwrap();
        let u: ComplexField = (0..grid.n_nodes())
            .map(|p| {
                let (x, y) = grid.coords(p);
                Complex::new(x, y)
            })
            .collect();
        let psi = MultiField { n_cells: 8, components: vec![u] };
        let report = energy_gl(&grid, &psi, 1.0);
        assert!(
            (report.dirichlet_total - 1.0).abs() < 1e-14,
            "half Dirichlet energy = {}",
            report.dirichlet_total
        );
        assert!((energy_dirichlet(&grid, &psi) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn saturated_constant_state_has_zero_energy() {
        let grid = build_grid(4).unwrap();
        let ones = vec![Complex::ONE; grid.n_nodes()];
        let psi = MultiField { n_cells: 4, components: vec![ones.clone(), ones] };
        let report = energy_gl(&grid, &psi, 0.25);
        assert_eq!(report.total, 0.0, "constant saturated state must cost nothing");
        assert_eq!(sup_modulus_defect(&grid, &psi), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences_of_the_energy() {
        let grid = build_grid(8).unwrap();
        let maps = two_maps();
        let mut psi = init_field(&grid, &maps, InitStrategy::Random(11));
        let epsilon = 0.3;
        let grad = grad_energy_gl(&grid, &psi, epsilon);
        let delta = 1e-6;
        // Probe a handful of interior nodes in both components and both parts.
        for &(j, ix, iy, real_part) in
            &[(0usize, 2usize, 3usize, true), (0, 5, 5, false), (1, 3, 6, true), (1, 6, 2, false)]
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
            assert!(
                (fd - g).abs() <= 1e-6 * g.abs().max(1e-3),
                "component {j} node ({ix},{iy}) re={real_part}: fd {fd} vs grad {g}"
            );
        }
    }

    #[test]
    fn gradient_vanishes_on_the_boundary() {
        let grid = build_grid(8).unwrap();
        let psi = init_field(&grid, &two_maps(), InitStrategy::Harmonic);
        let grad = grad_energy_gl(&grid, &psi, 0.5);
        for c in &grad.components {
            for bn in &grid.boundary_order {
                assert_eq!(c[bn.index], Complex::ZERO);
            }
        }
    }

    #[test]
    fn initializers_pin_the_boundary_exactly() {
        let grid = build_grid(12).unwrap();
        let maps = two_maps();
        for strategy in
            [InitStrategy::Harmonic, InitStrategy::VortexProduct, InitStrategy::Random(3)]
        {
            let psi = init_field(&grid, &maps, strategy);
            assert!(psi.is_finite());
            assert!(
                psi.boundary_defect(&grid, &maps) < 1e-14,
                "{strategy:?} left boundary defect {}",
                psi.boundary_defect(&grid, &maps)
            );
        }
    }

    #[test]
    fn vortex_product_carries_the_degree_and_avoids_nodes() {
        let grid = build_grid(16).unwrap();
        // Degree 1 default point (0.75, 0.5) lands exactly on a node at this resolution;
        // the initializer must shift it and stay finite.
        let map = BoundaryMap::pure_degree(1);
        let field = vortex_product_field(&grid, &map, &default_vortex_points(1));
        assert!(field.iter().all(|z| z.is_finite()), "vortex product hit a node");
        // Interior values keep unit modulus.
        for p in 0..grid.n_nodes() {
            if !grid.is_boundary(p) {
                assert!((field[p].abs() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f_epsilon_vanishes_on_the_pinned_boundary() {
        let grid = build_grid(8).unwrap();
        let psi = init_field(&grid, &two_maps(), InitStrategy::Harmonic);
        let f = f_epsilon_field(&grid, &psi, 0.2);
        for bn in &grid.boundary_order {
            assert!(
                f[bn.index].abs() < 1e-10,
                "boundary data is unit modulus so the defect must vanish, got {}",
                f[bn.index]
            );
        }
    }

    #[test]
    fn random_init_is_reproducible() {
        let grid = build_grid(8).unwrap();
        let maps = two_maps();
        let a = init_field(&grid, &maps, InitStrategy::Random(42));
        let b = init_field(&grid, &maps, InitStrategy::Random(42));
        for (ca, cb) in a.components.iter().zip(&b.components) {
            assert_eq!(ca, cb, "same seed must give bitwise identical fields");
        }
        let c = init_field(&grid, &maps, InitStrategy::Random(43));
        assert!(
            a.components[0].iter().zip(&c.components[0]).any(|(x, y)| x != y),
            "different seeds should differ"
        );
    }
}
