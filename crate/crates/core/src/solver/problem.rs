//! Discrete problem definition: per-cell properties, staggered face maps and
//! boundary data.

use std::fmt;
use std::sync::Arc;

use crate::geometry::Grid;
use crate::materials::{JouleSource, MaterialError, MaterialProps, MaterialTable};

use super::SolverError;

pub const INACTIVE: usize = usize::MAX;

/// Scalar field `f(x, y)` in SI units.
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Thermal condition on one side of the domain.
#[derive(Clone)]
pub enum ThermalBc {
    /// Fixed temperature, K.
    Fixed(f64),
    /// Temperature prescribed as a function of the boundary point.
    Profile(FieldFn),
    Adiabatic,
}

impl fmt::Debug for ThermalBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(t) => write!(f, "Fixed({t})"),
            Self::Profile(_) => f.write_str("Profile(..)"),
            Self::Adiabatic => f.write_str("Adiabatic"),
        }
    }
}

/// Outer-wall conditions. Velocity is no-slip on every wall (sealed device).
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    /// Environmental temperature, K; also the reference for the sealed-gas
    /// pressure level.
    pub t_ambient: f64,
    /// Pressure of the sealed gas at `t_ambient`, Pa.
    pub p_atm: f64,
    pub west: ThermalBc,
    pub east: ThermalBc,
    pub south: ThermalBc,
    pub north: ThermalBc,
}

impl BoundaryConditions {
    /// All four outer walls held at `t_ambient`.
    pub fn ambient(t_ambient: f64) -> Self {
        Self {
            t_ambient,
            p_atm: crate::materials::STANDARD_PRESSURE,
            west: ThermalBc::Fixed(t_ambient),
            east: ThermalBc::Fixed(t_ambient),
            south: ThermalBc::Fixed(t_ambient),
            north: ThermalBc::Fixed(t_ambient),
        }
    }
}

/// Extra volumetric sources, used for manufactured-solution studies.
#[derive(Clone)]
pub struct Forcing {
    /// N/m³, evaluated at x-face centres.
    pub momentum_x: FieldFn,
    /// N/m³, evaluated at y-face centres.
    pub momentum_y: FieldFn,
    /// W/m³, evaluated at cell centres.
    pub energy: FieldFn,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Forcing { .. }")
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SampledForcing {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cell: Vec<f64>,
}

/// Everything the SIMPLE iteration needs, frozen for one solve.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    pub grid: Grid,
    pub bc: BoundaryConditions,
    pub t_ref: f64,
    pub gravity: [f64; 2],
    pub forcing: Option<Forcing>,
    /// `forcing` sampled at x-faces, y-faces and cell centres.
    pub(crate) sampled_forcing: Option<SampledForcing>,
    pub(crate) fluid_props: Option<MaterialProps>,
    pub(crate) is_fluid: Vec<bool>,
    pub(crate) k: Vec<f64>,
    /// Joule heating per cell, W/m³.
    pub(crate) heat: Vec<f64>,
    pub(crate) faces: FaceMaps,
}

/// Active staggered faces and pressure unknowns.
#[derive(Debug, Clone)]
pub(crate) struct FaceMaps {
    /// Unknown number of each x-face, `INACTIVE` where velocity is pinned to 0.
    pub u_unknown: Vec<usize>,
    pub u_list: Vec<(usize, usize)>,
    pub v_unknown: Vec<usize>,
    pub v_list: Vec<(usize, usize)>,
    /// Pressure-correction unknown of each cell.
    pub p_unknown: Vec<usize>,
    pub p_list: Vec<usize>,
    /// Fluid component of each cell, for the per-cavity pressure gauge.
    pub component: Vec<Option<usize>>,
    pub n_components: usize,
}

impl FlowProblem {
    pub fn new(
        grid: &Grid,
        table: &MaterialTable,
        source: &JouleSource,
        bc: BoundaryConditions,
    ) -> Result<Self, SolverError> {
        if !(bc.t_ambient > 0.0) {
            return Err(SolverError::InvalidProblem(format!("ambient temperature {} K", bc.t_ambient)));
        }
        let n = grid.len();
        let mut k = Vec::with_capacity(n);
        let mut is_fluid = Vec::with_capacity(n);
        let mut heat = Vec::with_capacity(n);
        let mut fluid_props: Option<MaterialProps> = None;
        for &m in &grid.material {
            let props = table.get(m).map_err(|e: MaterialError| SolverError::InvalidProblem(e.to_string()))?;
            k.push(props.k);
            is_fluid.push(props.is_fluid);
            heat.push(if m.is_heat_source() { source.s_h } else { 0.0 });
            if props.is_fluid {
                match fluid_props {
                    Some(f) if f != *props => {
                        return Err(SolverError::InvalidProblem("more than one fluid material".into()));
                    }
                    _ => fluid_props = Some(*props),
                }
            }
        }
        let faces = FaceMaps::build(grid, &is_fluid);
        Ok(Self {
            grid: grid.clone(),
            bc,
            t_ref: table.t_ref,
            gravity: table.gravity,
            forcing: None,
            sampled_forcing: None,
            fluid_props,
            is_fluid,
            k,
            heat,
            faces,
        })
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        let g = &self.grid;
        let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
        let mut u = Vec::with_capacity((nx + 1) * ny);
        for j in 0..ny {
            u.extend((0..=nx).map(|i| (forcing.momentum_x)(i as f64 * dx, (j as f64 + 0.5) * dy)));
        }
        let mut v = Vec::with_capacity(nx * (ny + 1));
        for j in 0..=ny {
            v.extend((0..nx).map(|i| (forcing.momentum_y)((i as f64 + 0.5) * dx, j as f64 * dy)));
        }
        let cell = (0..g.len()).map(|c| (forcing.energy)(g.xc(c % nx), g.yc(c / nx))).collect();
        self.sampled_forcing = Some(SampledForcing { u, v, cell });
        self.forcing = Some(forcing);
        self
    }

    pub fn has_flow(&self) -> bool {
        self.fluid_props.is_some() && !self.faces.p_list.is_empty()
    }

    pub fn fluid_props(&self) -> Option<&MaterialProps> {
        self.fluid_props.as_ref()
    }

    pub fn is_fluid(&self, cell: usize) -> bool {
        self.is_fluid[cell]
    }

    pub fn conductivity(&self, cell: usize) -> f64 {
        self.k[cell]
    }

    pub fn heat_source(&self, cell: usize) -> f64 {
        self.heat[cell]
    }

    pub(crate) fn uidx(&self, i: usize, j: usize) -> usize {
        j * (self.grid.nx + 1) + i
    }

    pub(crate) fn vidx(&self, i: usize, j: usize) -> usize {
        j * self.grid.nx + i
    }
}

impl FaceMaps {
    fn build(grid: &Grid, is_fluid: &[bool]) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let fluid = |i: usize, j: usize| is_fluid[j * nx + i];
        let mut u_unknown = vec![INACTIVE; (nx + 1) * ny];
        let mut u_list = Vec::new();
        for j in 0..ny {
            for i in 1..nx {
                if fluid(i - 1, j) && fluid(i, j) {
                    u_unknown[j * (nx + 1) + i] = u_list.len();
                    u_list.push((i, j));
                }
            }
        }
        let mut v_unknown = vec![INACTIVE; nx * (ny + 1)];
        let mut v_list = Vec::new();
        for j in 1..ny {
            for i in 0..nx {
                if fluid(i, j - 1) && fluid(i, j) {
                    v_unknown[j * nx + i] = v_list.len();
                    v_list.push((i, j));
                }
            }
        }
        let mut p_unknown = vec![INACTIVE; nx * ny];
        let mut p_list = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let has_face = u_unknown[j * (nx + 1) + i] != INACTIVE
                    || u_unknown[j * (nx + 1) + i + 1] != INACTIVE
                    || v_unknown[j * nx + i] != INACTIVE
                    || v_unknown[(j + 1) * nx + i] != INACTIVE;
                if has_face {
                    p_unknown[j * nx + i] = p_list.len();
                    p_list.push(j * nx + i);
                }
            }
        }
        let (component, n_components) = grid.components(|c| is_fluid[c]);
        Self { u_unknown, u_list, v_unknown, v_list, p_unknown, p_list, component, n_components }
    }
}
