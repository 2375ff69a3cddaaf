//! Differentially heated square cavity in nondimensional form.
//!
//! Unit square, hot left wall (T = 1), cold right wall (T = 0), adiabatic top
//! and bottom, Pr = 0.71. With ρ = c_p = k = β = 1, μ = Pr and
//! g = (0, −Ra·Pr) the dimensional solver integrates the standard scaled
//! equations directly.

use std::collections::BTreeMap;

use crate::geometry::Grid;
use crate::materials::{JouleSource, MaterialId, MaterialProps, MaterialTable};
use crate::solver::{AdvectionScheme, BoundaryConditions, FlowProblem, SolutionState, SolverConfig, SolverError, ThermalBc};

pub const PRANDTL: f64 = 0.71;

/// Published mean hot-wall Nusselt numbers (de Vahl Davis 1983).
pub const REFERENCE_NUSSELT: [(f64, f64); 2] = [(1e3, 1.118), (1e4, 2.243)];

/// Set up the cavity at Rayleigh number `ra` on an `n × n` grid.
pub fn cavity_problem(n: usize, ra: f64) -> FlowProblem {
    let grid = Grid::uniform(n, n, 1.0, 1.0, MaterialId::Air).expect("n ≥ 2");
    let props = BTreeMap::from([(MaterialId::Air, MaterialProps::fluid(1.0, 1.0, 1.0, PRANDTL, 1.0))]);
    let table = MaterialTable::new(props, 0.5, [0.0, -ra * PRANDTL]).expect("valid properties");
    let bc = BoundaryConditions {
        t_ambient: 0.5,
        p_atm: 1.0,
        west: ThermalBc::Fixed(1.0),
        east: ThermalBc::Fixed(0.0),
        south: ThermalBc::Adiabatic,
        north: ThermalBc::Adiabatic,
    };
    FlowProblem::new(&grid, &table, &JouleSource::off(), bc).expect("consistent problem")
}

/// Solver settings used for the benchmark.
pub fn cavity_config() -> SolverConfig {
    SolverConfig {
        advection_scheme: AdvectionScheme::CentralDeferred,
        velocity_relaxation: 0.9,
        pressure_relaxation: 0.1,
        outer_tolerance: 1e-7,
        max_outer_iterations: 20_000,
        ..SolverConfig::default()
    }
}

/// Mean Nusselt number on the hot wall from the discrete wall flux.
pub fn hot_wall_nusselt(problem: &FlowProblem, state: &SolutionState) -> f64 {
    let g = &problem.grid;
    let t_hot = 1.0;
    let flux: f64 = (0..g.ny)
        .map(|j| problem.conductivity(g.idx(0, j)) * (t_hot - state.t[g.idx(0, j)]) / (0.5 * g.dx) * g.dy)
        .sum();
    flux / g.height()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkResult {
    pub rayleigh: f64,
    pub n: usize,
    pub nusselt: f64,
    pub reference: f64,
    pub iterations: usize,
}

impl BenchmarkResult {
    pub fn relative_error(&self) -> f64 {
        (self.nusselt - self.reference).abs() / self.reference
    }
}

/// Solve the cavity at `ra` on `n × n` cells and compare with the reference.
pub fn run_cavity(n: usize, ra: f64) -> Result<BenchmarkResult, SolverError> {
    let reference = REFERENCE_NUSSELT
        .iter()
        .find(|(r, _)| *r == ra)
        .map_or(f64::NAN, |&(_, nu)| nu);
    let problem = cavity_problem(n, ra);
    let state = problem.solve(&cavity_config(), None)?;
    Ok(BenchmarkResult {
        rayleigh: ra,
        n,
        nusselt: hot_wall_nusselt(&problem, &state),
        reference,
        iterations: state.iterations,
    })
}
