//! Steady Boussinesq natural convection with conjugate heat transfer.
//!
//! Pressure and temperature live at cell centres, velocity components on the
//! cell faces (MAC arrangement). Solid cells carry only the conduction
//! equation; their faces have zero velocity. The coupled system is driven to
//! steady state with an under-relaxed SIMPLE iteration:
//!
//! ```text
//! loop {
//!     momentum predictor   (u*, v*)     SOR
//!     pressure correction  p'           Jacobi-CG
//!     velocity correction  u = u* + d ∇p'
//!     energy               T            Jacobi-BiCGSTAB
//!     residuals from the fields alone → stop when all ≤ outer_tolerance
//! }
//! ```
//!
//! The energy equation is the steady temperature form
//! `∇·(ρ₀c_p v T) = ∇·(k∇T) + S_h` in fluids and `0 = ∇·(k∇T) + S_h` in
//! solids; buoyancy enters the fluid momentum as `−ρ₀β(T − T₀)g`.

mod assembly;
mod post;
mod problem;
mod simple;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Grid;
use crate::materials::{JouleSource, MaterialTable};

pub use post::{decompose_pressure, energy_balance, residual_norms, EnergyBalance, PressureDecomposition};
pub use problem::{BoundaryConditions, FieldFn, FlowProblem, Forcing, ThermalBc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvectionScheme {
    Upwind,
    /// Central differencing applied as a deferred correction to upwind.
    CentralDeferred,
}

/// How the pressure correction maps onto face velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    Simple,
    /// Neighbour corrections folded in; tolerates pressure relaxation near 1.
    Simplec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub coupling: Coupling,
    pub velocity_relaxation: f64,
    pub pressure_relaxation: f64,
    pub temperature_relaxation: f64,
    /// Stop when every normalized residual is at or below this value.
    pub outer_tolerance: f64,
    pub max_outer_iterations: usize,
    pub advection_scheme: AdvectionScheme,
    /// Relative residual reduction asked of each momentum sweep set.
    pub momentum_tolerance: f64,
    pub momentum_max_sweeps: usize,
    pub pressure_tolerance: f64,
    pub pressure_max_iterations: usize,
    pub energy_tolerance: f64,
    pub energy_max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            coupling: Coupling::Simple,
            velocity_relaxation: 0.7,
            pressure_relaxation: 0.3,
            temperature_relaxation: 0.9,
            outer_tolerance: 1e-7,
            max_outer_iterations: 5000,
            advection_scheme: AdvectionScheme::Upwind,
            momentum_tolerance: 0.1,
            momentum_max_sweeps: 50,
            pressure_tolerance: 1e-3,
            pressure_max_iterations: 2000,
            energy_tolerance: 1e-3,
            energy_max_iterations: 2000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let relax = [
            ("velocity_relaxation", self.velocity_relaxation),
            ("pressure_relaxation", self.pressure_relaxation),
            ("temperature_relaxation", self.temperature_relaxation),
        ];
        for (name, value) in relax {
            if !(value > 0.0 && value <= 1.0) {
                return Err(SolverError::InvalidConfig(format!("{name} = {value} outside (0, 1]")));
            }
        }
        let tols = [
            ("outer_tolerance", self.outer_tolerance),
            ("momentum_tolerance", self.momentum_tolerance),
            ("pressure_tolerance", self.pressure_tolerance),
            ("energy_tolerance", self.energy_tolerance),
        ];
        for (name, value) in tols {
            if !(value > 0.0) {
                return Err(SolverError::InvalidConfig(format!("{name} = {value} must be positive")));
            }
        }
        if self.coupling == Coupling::Simplec && self.velocity_relaxation >= 1.0 {
            return Err(SolverError::InvalidConfig("simplec needs velocity_relaxation below 1".into()));
        }
        if self.max_outer_iterations == 0 {
            return Err(SolverError::InvalidConfig("max_outer_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Normalized residuals of each conservation equation. Each is the 2-norm
/// of the discrete imbalance divided by the 2-norm of the summed term
/// magnitudes, so zero means exact balance and one means no balance at all.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub continuity: f64,
    pub momentum_x: f64,
    pub momentum_y: f64,
    pub energy: f64,
}

impl ResidualNorms {
    pub fn max(&self) -> f64 {
        self.continuity.max(self.momentum_x).max(self.momentum_y).max(self.energy)
    }

    fn as_array(&self) -> [f64; 4] {
        [self.continuity, self.momentum_x, self.momentum_y, self.energy]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, PartialEq)]
pub struct SolutionState {
    pub nx: usize,
    pub ny: usize,
    /// Cell temperature, K.
    pub t: Vec<f64>,
    /// Cell dynamic pressure, Pa; zero mean over each fluid cavity, zero in solids.
    pub p_dyn: Vec<f64>,
    /// x-face velocity, `(nx + 1) × ny`, m/s.
    pub u: Vec<f64>,
    /// y-face velocity, `nx × (ny + 1)`, m/s.
    pub v: Vec<f64>,
    /// Total pressure, Pa; empty until [`decompose_pressure`] fills it.
    pub p_total: Vec<f64>,
    pub residual_history: Vec<ResidualNorms>,
    pub iterations: usize,
    pub converged: bool,
}

impl std::fmt::Debug for SolutionState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionState")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("iterations", &self.iterations)
            .field("converged", &self.converged)
            .field("final_residuals", &self.final_residuals())
            .finish_non_exhaustive()
    }
}

impl SolutionState {
    pub fn initial(grid: &Grid, t: f64) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        Self {
            nx,
            ny,
            t: vec![t; nx * ny],
            p_dyn: vec![0.0; nx * ny],
            u: vec![0.0; (nx + 1) * ny],
            v: vec![0.0; nx * (ny + 1)],
            p_total: Vec::new(),
            residual_history: Vec::new(),
            iterations: 0,
            converged: false,
        }
    }

    pub fn u_at(&self, i: usize, j: usize) -> f64 {
        self.u[j * (self.nx + 1) + i]
    }

    pub fn v_at(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.nx + i]
    }

    /// Cell-centred velocity from face averages.
    pub fn cell_velocity(&self, i: usize, j: usize) -> [f64; 2] {
        [0.5 * (self.u_at(i, j) + self.u_at(i + 1, j)), 0.5 * (self.v_at(i, j) + self.v_at(i, j + 1))]
    }

    pub fn max_speed(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn final_residuals(&self) -> Option<ResidualNorms> {
        self.residual_history.last().copied()
    }

    /// Interpolate onto a grid with every cell split in four, as a starting
    /// iterate for the finer solve. Wall-normal face velocities stay zero.
    pub fn refined(&self) -> Self {
        let (nx, ny) = (self.nx, self.ny);
        let (fx, fy) = (2 * nx, 2 * ny);
        // Fine cell k sits a quarter coarse cell off centre k / 2.
        let near = |k: usize, n: usize| -> (usize, usize) {
            let c = k / 2;
            let other = if k.is_multiple_of(2) { c.saturating_sub(1) } else { (c + 1).min(n - 1) };
            (c, other)
        };
        let cells = |f: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; fx * fy];
            for jj in 0..fy {
                let (j0, j1) = near(jj, ny);
                for ii in 0..fx {
                    let (i0, i1) = near(ii, nx);
                    let at = |i: usize, j: usize| f[j * nx + i];
                    out[jj * fx + ii] = 0.5625 * at(i0, j0) + 0.1875 * (at(i1, j0) + at(i0, j1)) + 0.0625 * at(i1, j1);
                }
            }
            out
        };
        let mut u = vec![0.0; (fx + 1) * fy];
        for jj in 0..fy {
            let (j0, j1) = near(jj, ny);
            let row = |i: usize| 0.75 * self.u_at(i, j0) + 0.25 * self.u_at(i, j1);
            for ii in 0..=fx {
                u[jj * (fx + 1) + ii] = if ii.is_multiple_of(2) { row(ii / 2) } else { 0.5 * (row(ii / 2) + row(ii / 2 + 1)) };
            }
        }
        let mut v = vec![0.0; fx * (fy + 1)];
        for jj in 0..=fy {
            for ii in 0..fx {
                let (i0, i1) = near(ii, nx);
                let col = |j: usize| 0.75 * self.v_at(i0, j) + 0.25 * self.v_at(i1, j);
                v[jj * fx + ii] = if jj.is_multiple_of(2) { col(jj / 2) } else { 0.5 * (col(jj / 2) + col(jj / 2 + 1)) };
            }
        }
        Self {
            nx: fx,
            ny: fy,
            t: cells(&self.t),
            p_dyn: cells(&self.p_dyn),
            u,
            v,
            p_total: Vec::new(),
            residual_history: Vec::new(),
            iterations: 0,
            converged: false,
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.t, &self.p_dyn, &self.u, &self.v].iter().all(|f| f.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("diverged after {} outer iterations", .0.iterations)]
    Diverged(Box<SolutionState>),
    #[error("not converged after {} outer iterations (max residual {:.3e})", .0.iterations, .0.final_residuals().map_or(f64::NAN, |r| r.max()))]
    NotConverged(Box<SolutionState>),
}

impl SolverError {
    /// The last iterate of a failed solve, for inspection.
    pub fn state(&self) -> Option<&SolutionState> {
        match self {
            Self::Diverged(s) | Self::NotConverged(s) => Some(s),
            _ => None,
        }
    }
}

/// Solve the device problem to steady state.
pub fn solve_steady(
    grid: &Grid,
    table: &MaterialTable,
    source: &JouleSource,
    bc: &BoundaryConditions,
    cfg: &SolverConfig,
) -> Result<SolutionState, SolverError> {
    let problem = FlowProblem::new(grid, table, source, bc.clone())?;
    problem.solve(cfg, None)
}

#[cfg(test)]
mod tests;
