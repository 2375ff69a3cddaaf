//! Quantities recomputed from a finished state: residuals, the global
//! energy balance and the total-pressure decomposition.

use crate::geometry::Grid;
use crate::materials::MaterialTable;
use crate::numerics::norm2;

use super::assembly::{assemble_energy, assemble_u, assemble_v, FieldsRef, LinearSystem};
use super::problem::{BoundaryConditions, FlowProblem, ThermalBc};
use super::{AdvectionScheme, ResidualNorms, SolutionState};

fn normalized(sys: &LinearSystem, x: &[f64]) -> f64 {
    let r = norm2(&sys.matrix.residual(&sys.rhs, x));
    if r == 0.0 {
        0.0
    } else {
        r / norm2(&sys.magnitude)
    }
}

pub(crate) fn residual_norms_with(pb: &FlowProblem, state: &SolutionState, scheme: AdvectionScheme) -> ResidualNorms {
    let f = FieldsRef { t: &state.t, p: &state.p_dyn, u: &state.u, v: &state.v };
    let faces = &pb.faces;
    let momentum_x = assemble_u(pb, &f, scheme, 1.0).map_or(0.0, |sys| {
        let x: Vec<f64> = faces.u_list.iter().map(|&(i, j)| state.u[pb.uidx(i, j)]).collect();
        normalized(&sys, &x)
    });
    let momentum_y = assemble_v(pb, &f, scheme, 1.0).map_or(0.0, |sys| {
        let x: Vec<f64> = faces.v_list.iter().map(|&(i, j)| state.v[pb.vidx(i, j)]).collect();
        normalized(&sys, &x)
    });
    let energy = {
        let sys = assemble_energy(pb, &f, scheme, 1.0);
        let theta: Vec<f64> = state.t.iter().map(|t| t - pb.t_ref).collect();
        normalized(&sys, &theta)
    };

    let (nx, dx, dy) = (pb.grid.nx, pb.grid.dx, pb.grid.dy);
    let (mut div2, mut mag2) = (0.0, 0.0);
    for &c in &faces.p_list {
        let (i, j) = (c % nx, c / nx);
        let (ue, uw) = (state.u[pb.uidx(i + 1, j)], state.u[pb.uidx(i, j)]);
        let (vn, vs) = (state.v[pb.vidx(i, j + 1)], state.v[pb.vidx(i, j)]);
        div2 += ((ue - uw) * dy + (vn - vs) * dx).powi(2);
        mag2 += ((ue.abs() + uw.abs()) * dy + (vn.abs() + vs.abs()) * dx).powi(2);
    }
    let continuity = if div2 == 0.0 { 0.0 } else { (div2 / mag2).sqrt() };
    ResidualNorms { continuity, momentum_x, momentum_y, energy }
}

/// Normalized residuals of continuity, both momentum components and energy,
/// recomputed from the fields of `state`.
pub fn residual_norms(pb: &FlowProblem, state: &SolutionState, scheme: AdvectionScheme) -> ResidualNorms {
    residual_norms_with(pb, state, scheme)
}

/// Global steady energy balance per unit depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// Joule power deposited, W/m.
    pub power_in: f64,
    /// Conductive power leaving through the outer walls, W/m.
    pub power_out: f64,
    /// `|in − out| / in`; zero by convention when no power is deposited.
    pub imbalance_fraction: f64,
}

pub fn energy_balance(pb: &FlowProblem, state: &SolutionState) -> EnergyBalance {
    let g = &pb.grid;
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    let power_in: f64 = pb.heat.iter().map(|s| s * dx * dy).sum();
    let mut power_out = 0.0;
    let mut wall = |bc: &ThermalBc, c: usize, area: f64, dist: f64, x: f64, y: f64| {
        let tb = match bc {
            ThermalBc::Fixed(t) => *t,
            ThermalBc::Profile(func) => func(x, y),
            ThermalBc::Adiabatic => return,
        };
        power_out += pb.k[c] * area / (0.5 * dist) * (state.t[c] - tb);
    };
    for j in 0..ny {
        wall(&pb.bc.west, g.idx(0, j), dy, dx, 0.0, g.yc(j));
        wall(&pb.bc.east, g.idx(nx - 1, j), dy, dx, g.width(), g.yc(j));
    }
    for i in 0..nx {
        wall(&pb.bc.south, g.idx(i, 0), dx, dy, g.xc(i), 0.0);
        wall(&pb.bc.north, g.idx(i, ny - 1), dx, dy, g.xc(i), g.height());
    }
    let imbalance_fraction = if power_in == 0.0 { 0.0 } else { (power_in - power_out).abs() / power_in };
    EnergyBalance { power_in, power_out, imbalance_fraction }
}

/// Sealed-cavity pressure level plus the dynamic field.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureDecomposition {
    /// Mean fluid temperature, K.
    pub mean_fluid_t: f64,
    /// Isochoric ideal-gas level `p_atm · T̄_fluid / T_ambient`, Pa.
    pub p_thermo: f64,
    /// `p_thermo + p_dyn` on every cell (solids carry `p_dyn = 0`).
    pub p_total: Vec<f64>,
}

/// Split the total pressure into the sealed-gas level and the dynamic part.
pub fn decompose_pressure(
    state: &SolutionState,
    grid: &Grid,
    table: &MaterialTable,
    bc: &BoundaryConditions,
) -> PressureDecomposition {
    let fluid = |c: usize| table.get(grid.material[c]).map(|p| p.is_fluid).unwrap_or(false);
    let (sum, n) = (0..grid.len()).filter(|&c| fluid(c)).fold((0.0, 0usize), |(s, n), c| (s + state.t[c], n + 1));
    let mean_fluid_t = if n == 0 { bc.t_ambient } else { sum / n as f64 };
    let p_thermo = bc.p_atm * mean_fluid_t / bc.t_ambient;
    let p_total = state.p_dyn.iter().map(|p| p_thermo + p).collect();
    PressureDecomposition { mean_fluid_t, p_thermo, p_total }
}

impl FlowProblem {
    /// Fill `state.p_total` from [`decompose_pressure`] and return the level.
    pub fn attach_total_pressure(&self, state: &mut SolutionState, table: &MaterialTable) -> PressureDecomposition {
        let d = decompose_pressure(state, &self.grid, table, &self.bc);
        state.p_total = d.p_total.clone();
        d
    }
}
