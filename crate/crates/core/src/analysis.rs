//! Observables extracted from converged device fields: probe profiles,
//! pressure differentials across the proof masses, torque, the offset proxy
//! and the gap/ambient trend table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DeviceLayout, Grid, PROBE_ABOVE_LEFT, PROBE_ABOVE_RIGHT};
use crate::materials::MaterialTable;
use crate::solver::{decompose_pressure, BoundaryConditions, SolutionState};

const UM: f64 = 1e-6;
/// Fewest cells allowed across each side of a proof mass.
pub const MIN_CELLS_PER_SIDE: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("unknown probe {0:?}")]
    UnknownProbe(String),
    #[error("proof mass {index} is covered by {nx} x {ny} cells; at least {MIN_CELLS_PER_SIDE} per side are needed")]
    UnresolvedProofMass { index: usize, nx: usize, ny: usize },
    #[error("no fluid cells border proof mass {0}")]
    NoAdjacentFluid(usize),
    #[error("state is {state_nx} x {state_ny} but the grid is {grid_nx} x {grid_ny}")]
    ShapeMismatch { state_nx: usize, state_ny: usize, grid_nx: usize, grid_ny: usize },
    #[error("total pressure has not been attached to the state")]
    MissingTotalPressure,
    #[error("field contains non-finite values")]
    NonFiniteField,
    #[error("trend table needs at least one case")]
    EmptyCaseList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Temperature,
    PressureTotal,
    PressureDyn,
    Speed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineProfile {
    pub probe_name: String,
    pub field_kind: FieldKind,
    /// Distance from the probe start, m; strictly increasing.
    pub positions: Vec<f64>,
    /// Sample points, m.
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

fn check_shape(state: &SolutionState, grid: &Grid) -> Result<(), AnalysisError> {
    if state.nx != grid.nx || state.ny != grid.ny {
        return Err(AnalysisError::ShapeMismatch {
            state_nx: state.nx,
            state_ny: state.ny,
            grid_nx: grid.nx,
            grid_ny: grid.ny,
        });
    }
    Ok(())
}

fn cell_field(state: &SolutionState, grid: &Grid, kind: FieldKind) -> Result<Vec<f64>, AnalysisError> {
    let field = match kind {
        FieldKind::Temperature => state.t.clone(),
        FieldKind::PressureDyn => state.p_dyn.clone(),
        FieldKind::PressureTotal => {
            if state.p_total.len() != grid.len() {
                return Err(AnalysisError::MissingTotalPressure);
            }
            state.p_total.clone()
        }
        FieldKind::Speed => (0..grid.len())
            .map(|c| {
                let [u, v] = state.cell_velocity(c % grid.nx, c / grid.nx);
                u.hypot(v)
            })
            .collect(),
    };
    if field.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteField);
    }
    Ok(field)
}

/// Bilinear interpolation of a cell-centred field, clamped at the outer
/// cell centres.
fn bilinear(grid: &Grid, field: &[f64], x: f64, y: f64) -> f64 {
    let locate = |s: f64, h: f64, n: usize| {
        let f = (s / h - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = (f.floor() as usize).min(n - 2);
        (i0, f - i0 as f64)
    };
    let (i0, tx) = locate(x, grid.dx, grid.nx);
    let (j0, ty) = locate(y, grid.dy, grid.ny);
    let at = |i: usize, j: usize| field[grid.idx(i, j)];
    let bottom = at(i0, j0) * (1.0 - tx) + at(i0 + 1, j0) * tx;
    let top = at(i0, j0 + 1) * (1.0 - tx) + at(i0 + 1, j0 + 1) * tx;
    bottom * (1.0 - ty) + top * ty
}

/// Sample a field along a named probe at cell-size spacing.
pub fn line_profile(
    state: &SolutionState,
    grid: &Grid,
    probe_name: &str,
    field_kind: FieldKind,
) -> Result<LineProfile, AnalysisError> {
    check_shape(state, grid)?;
    let seg = grid.probes.get(probe_name).ok_or_else(|| AnalysisError::UnknownProbe(probe_name.to_string()))?;
    let field = cell_field(state, grid, field_kind)?;
    let length = seg.length();
    let [dx, dy] = [seg.end[0] - seg.start[0], seg.end[1] - seg.start[1]];
    let spacing = if dy.abs() > dx.abs() { grid.dy } else { grid.dx };
    let n = ((length / spacing).round() as usize).max(1) + 1;
    let mut positions = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let s = k as f64 / (n - 1) as f64;
        let p = [seg.start[0] + s * dx, seg.start[1] + s * dy];
        positions.push(s * length);
        values.push(bilinear(grid, &field, p[0], p[1]));
        points.push(p);
    }
    Ok(LineProfile { probe_name: probe_name.to_string(), field_kind, positions, points, values })
}

/// Pressure loading of one proof mass.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProofMassLoad {
    /// Mean total pressure in the fluid row just above the mass, Pa.
    pub mean_above: f64,
    /// Mean total pressure in the fluid row just below the mass, Pa.
    pub mean_under: f64,
    /// `mean_above − mean_under`, Pa.
    pub delta_p: f64,
    /// `∫(p_under − p_above) dx`, N/m (upward positive).
    pub force: f64,
    /// `∫(p_under − p_above)(x − x_c) dx`, N·m/m (counter-clockwise positive).
    pub torque: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofMassReport {
    /// Left then right proof mass.
    pub masses: Vec<ProofMassLoad>,
}

impl ProofMassReport {
    pub fn left(&self) -> &ProofMassLoad {
        &self.masses[0]
    }

    pub fn right(&self) -> &ProofMassLoad {
        &self.masses[self.masses.len() - 1]
    }
}

/// Integrate the pressure on the fluid cells bordering each proof mass.
///
/// The sealed-gas level `p_thermo` is common to every fluid cell, so the
/// differences are formed from the dynamic pressure and the level is added
/// back only where the covered lengths above and below differ. This keeps
/// sub-ulp differentials of a ~10⁵ Pa level intact.
pub fn proofmass_report(
    state: &SolutionState,
    grid: &Grid,
    layout: &DeviceLayout,
    table: &MaterialTable,
    bc: &BoundaryConditions,
) -> Result<ProofMassReport, AnalysisError> {
    check_shape(state, grid)?;
    if state.p_dyn.iter().chain(&state.t).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteField);
    }
    let p_thermo = decompose_pressure(state, grid, table, bc).p_thermo;
    let fluid = |i: usize, j: usize| table.get(grid.material_at(i, j)).map(|p| p.is_fluid).unwrap_or(false);
    let mut masses = Vec::with_capacity(layout.proof_masses.len());
    for (index, pm) in layout.proof_masses.iter().enumerate() {
        let (x0, x1, y0, y1) = (pm.x0 * UM, pm.x1 * UM, pm.y0 * UM, pm.y1 * UM);
        let cols: Vec<usize> = (0..grid.nx).filter(|&i| (x0..x1).contains(&grid.xc(i))).collect();
        let rows: Vec<usize> = (0..grid.ny).filter(|&j| (y0..y1).contains(&grid.yc(j))).collect();
        if cols.len() < MIN_CELLS_PER_SIDE || rows.len() < MIN_CELLS_PER_SIDE {
            return Err(AnalysisError::UnresolvedProofMass { index, nx: cols.len(), ny: rows.len() });
        }
        let (j_under, j_above) = (rows[0].checked_sub(1), rows[rows.len() - 1] + 1);
        let xc = 0.5 * (x0 + x1);

        let (mut len_a, mut len_u, mut dyn_a, mut dyn_u) = (0.0, 0.0, 0.0, 0.0);
        let (mut force, mut torque) = (0.0, 0.0);
        for &i in &cols {
            let arm = grid.xc(i) - xc;
            if j_above < grid.ny && fluid(i, j_above) {
                let p = state.p_dyn[grid.idx(i, j_above)];
                len_a += grid.dx;
                dyn_a += p * grid.dx;
                force -= p * grid.dx;
                torque -= p * arm * grid.dx;
            }
            if let Some(j) = j_under.filter(|&j| fluid(i, j)) {
                let p = state.p_dyn[grid.idx(i, j)];
                len_u += grid.dx;
                dyn_u += p * grid.dx;
                force += p * grid.dx;
                torque += p * arm * grid.dx;
            }
        }
        if len_a == 0.0 || len_u == 0.0 {
            return Err(AnalysisError::NoAdjacentFluid(index));
        }
        // Level contribution when the two sides are not equally covered; its
        // torque about the centroid is p_thermo times the first moment of the
        // uncovered cells.
        force += p_thermo * (len_u - len_a);
        for &i in &cols {
            let arm = grid.xc(i) - xc;
            let above = j_above < grid.ny && fluid(i, j_above);
            let under = j_under.is_some_and(|j| fluid(i, j));
            torque += p_thermo * arm * grid.dx * (under as u8 as f64 - above as u8 as f64);
        }
        let (mean_dyn_a, mean_dyn_u) = (dyn_a / len_a, dyn_u / len_u);
        masses.push(ProofMassLoad {
            mean_above: p_thermo + mean_dyn_a,
            mean_under: p_thermo + mean_dyn_u,
            delta_p: mean_dyn_a - mean_dyn_u,
            force,
            torque,
        });
    }
    Ok(ProofMassReport { masses })
}

/// Scalar model of the zero-rate offset produced by unequal proof-mass
/// loading. The form is a modelling assumption, reported in arbitrary units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetProxy {
    pub epsilon: f64,
    /// Length converting the force asymmetry into a moment, m.
    pub arm_scale: f64,
    pub value: f64,
}

/// `ε·|τ_L − τ_R| + ε·|F_L − F_R|·arm_scale`.
pub fn offset_proxy(report: &ProofMassReport, epsilon: f64, arm_scale: f64) -> OffsetProxy {
    let (l, r) = (report.left(), report.right());
    let value = epsilon * (l.torque - r.torque).abs() + epsilon * (l.force - r.force).abs() * arm_scale;
    OffsetProxy { epsilon, arm_scale, value }
}

/// Default moment arm: half the proof-mass width, m.
pub fn default_arm_scale(layout: &DeviceLayout) -> f64 {
    0.5 * layout.params.proof_mass_width_um * UM
}

/// Per-case scalars that feed the trend table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub gap_um: f64,
    pub ambient_k: f64,
    /// Mean fluid temperature, K.
    pub mean_t: f64,
    pub p_thermo: f64,
    /// Mean `|∂p/∂x|` along the probes above both proof masses, Pa/m.
    pub grad_p: f64,
    pub report: ProofMassReport,
    pub offset: OffsetProxy,
}

/// Mean absolute slope of a sampled profile.
pub fn mean_abs_gradient(profile: &LineProfile) -> f64 {
    let n = profile.values.len();
    if n < 2 {
        return 0.0;
    }
    let sum: f64 = (1..n)
        .map(|k| {
            let ds = profile.positions[k] - profile.positions[k - 1];
            ((profile.values[k] - profile.values[k - 1]) / ds).abs()
        })
        .sum();
    sum / (n - 1) as f64
}

impl CaseSummary {
    #[allow(clippy::too_many_arguments)]
    pub fn from_solution(
        state: &SolutionState,
        grid: &Grid,
        layout: &DeviceLayout,
        table: &MaterialTable,
        bc: &BoundaryConditions,
        epsilon: f64,
        arm_scale: f64,
    ) -> Result<Self, AnalysisError> {
        check_shape(state, grid)?;
        let decomposition = decompose_pressure(state, grid, table, bc);
        let report = proofmass_report(state, grid, layout, table, bc)?;
        // The level is uniform, so the dynamic field carries the whole gradient.
        let mut grad = 0.0;
        for probe in [PROBE_ABOVE_LEFT, PROBE_ABOVE_RIGHT] {
            grad += mean_abs_gradient(&line_profile(state, grid, probe, FieldKind::PressureDyn)?);
        }
        Ok(Self {
            gap_um: layout.params.gap_height_um,
            ambient_k: bc.t_ambient,
            mean_t: decomposition.mean_fluid_t,
            p_thermo: decomposition.p_thermo,
            grad_p: 0.5 * grad,
            offset: offset_proxy(&report, epsilon, arm_scale),
            report,
        })
    }
}

/// One row of the sweep summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub gap_um: f64,
    pub ambient_k: f64,
    pub mean_t_k: f64,
    pub p_thermo_pa: f64,
    pub grad_p_pa_per_m: f64,
    pub delta_p_left_pa: f64,
    pub delta_p_right_pa: f64,
    pub torque_left_nm_per_m: f64,
    pub torque_right_nm_per_m: f64,
    pub offset_proxy_au: f64,
}

/// Least-squares slope of the mean proof-mass `delta_p` against ambient
/// temperature at one gap height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientSlope {
    pub gap_um: f64,
    /// Pa/K.
    pub slope: f64,
    pub points: usize,
}

/// A case that did not produce a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub gap_um: f64,
    pub ambient_k: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepReport {
    /// Sorted by gap, then ambient temperature.
    pub rows: Vec<TrendRow>,
    /// One entry per gap with at least two ambient temperatures.
    pub slopes: Vec<AmbientSlope>,
    pub failures: Vec<CaseFailure>,
}

impl SweepReport {
    pub fn slope_at(&self, gap_um: f64) -> Option<f64> {
        self.slopes.iter().find(|s| s.gap_um == gap_um).map(|s| s.slope)
    }

    pub fn rows_at_ambient(&self, ambient_k: f64) -> impl Iterator<Item = &TrendRow> {
        self.rows.iter().filter(move |r| r.ambient_k == ambient_k)
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Aggregate case summaries into the sorted trend table.
pub fn trend_table(cases: &[CaseSummary]) -> Result<SweepReport, AnalysisError> {
    if cases.is_empty() {
        return Err(AnalysisError::EmptyCaseList);
    }
    let mut rows: Vec<TrendRow> = cases
        .iter()
        .map(|c| TrendRow {
            gap_um: c.gap_um,
            ambient_k: c.ambient_k,
            mean_t_k: c.mean_t,
            p_thermo_pa: c.p_thermo,
            grad_p_pa_per_m: c.grad_p,
            delta_p_left_pa: c.report.left().delta_p,
            delta_p_right_pa: c.report.right().delta_p,
            torque_left_nm_per_m: c.report.left().torque,
            torque_right_nm_per_m: c.report.right().torque,
            offset_proxy_au: c.offset.value,
        })
        .collect();
    rows.sort_by(|a, b| a.gap_um.total_cmp(&b.gap_um).then(a.ambient_k.total_cmp(&b.ambient_k)));

    let mut slopes = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let gap = rows[start].gap_um;
        let end = start + rows[start..].iter().take_while(|r| r.gap_um == gap).count();
        let points: Vec<(f64, f64)> = rows[start..end]
            .iter()
            .map(|r| (r.ambient_k, 0.5 * (r.delta_p_left_pa + r.delta_p_right_pa)))
            .collect();
        let distinct = points.windows(2).filter(|w| w[0].0 != w[1].0).count() + 1;
        if distinct >= 2 {
            slopes.push(AmbientSlope { gap_um: gap, slope: least_squares_slope(&points), points: points.len() });
        }
        start = end;
    }
    Ok(SweepReport { rows, slopes, failures: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_device, rasterize, DeviceParams, Segment};
    use crate::materials::{default_table, MaterialId};

    fn device() -> (DeviceLayout, Grid, MaterialTable, BoundaryConditions) {
        let layout = build_device(&DeviceParams::default()).unwrap();
        let grid = rasterize(&layout, 200, 192).unwrap();
        (layout, grid, default_table(300.0).unwrap(), BoundaryConditions::ambient(300.0))
    }

    fn with_pressure(grid: &Grid, table: &MaterialTable, p: impl Fn(f64, f64) -> f64) -> SolutionState {
        let mut s = SolutionState::initial(grid, 300.0);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if table.get(grid.material_at(i, j)).unwrap().is_fluid {
                    s.p_dyn[grid.idx(i, j)] = p(grid.xc(i), grid.yc(j));
                }
            }
        }
        s
    }

    #[test]
    fn constant_field_profile_is_constant() {
        let mut grid = Grid::uniform(10, 10, 1.0, 1.0, MaterialId::Air).unwrap();
        grid.probes.insert("mid".into(), Segment::horizontal(0.05, 0.95, 0.45));
        let state = SolutionState::initial(&grid, 42.0);
        let prof = line_profile(&state, &grid, "mid", FieldKind::Temperature).unwrap();
        assert_eq!(prof.values.len(), 10);
        assert!(prof.values.iter().all(|&v| v == 42.0));
        assert!(prof.positions.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn linear_field_profile_has_its_slope() {
        let mut grid = Grid::uniform(16, 8, 2.0, 1.0, MaterialId::Air).unwrap();
        grid.probes.insert("row".into(), Segment::horizontal(grid.xc(1), grid.xc(14), grid.yc(3)));
        let mut state = SolutionState::initial(&grid, 0.0);
        for c in 0..grid.len() {
            state.p_dyn[c] = 3.5 * grid.xc(c % grid.nx);
        }
        let prof = line_profile(&state, &grid, "row", FieldKind::PressureDyn).unwrap();
        for w in prof.positions.windows(2).zip(prof.values.windows(2)) {
            let slope = (w.1[1] - w.1[0]) / (w.0[1] - w.0[0]);
            assert!((slope - 3.5).abs() < 1e-12);
        }
        assert!((mean_abs_gradient(&prof) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn unknown_probe_and_missing_total_pressure() {
        let grid = Grid::uniform(4, 4, 1.0, 1.0, MaterialId::Air).unwrap();
        let state = SolutionState::initial(&grid, 1.0);
        assert_eq!(
            line_profile(&state, &grid, "nowhere", FieldKind::Speed),
            Err(AnalysisError::UnknownProbe("nowhere".into()))
        );
        let (_, dev, _, _) = device();
        let state = SolutionState::initial(&dev, 1.0);
        assert_eq!(
            line_profile(&state, &dev, PROBE_ABOVE_LEFT, FieldKind::PressureTotal),
            Err(AnalysisError::MissingTotalPressure)
        );
    }

    #[test]
    fn uniform_pressure_gives_no_load() {
        let (layout, grid, table, bc) = device();
        let state = with_pressure(&grid, &table, |_, _| 0.0);
        let report = proofmass_report(&state, &grid, &layout, &table, &bc).unwrap();
        for m in &report.masses {
            assert_eq!((m.delta_p, m.force, m.torque), (0.0, 0.0, 0.0));
            assert_eq!(m.mean_above, m.mean_under);
        }
        assert_eq!(offset_proxy(&report, 0.3, 1e-3).value, 0.0);
    }

    #[test]
    fn linear_pressure_above_gives_analytic_torque() {
        let (layout, grid, table, bc) = device();
        let a = 250.0;
        let pm = layout.proof_masses[0];
        let (xc, y_top) = (pm.center_x() * UM, pm.y1 * UM);
        let state = with_pressure(&grid, &table, |x, y| if y > y_top { a * (x - xc) } else { 0.0 });
        let report = proofmass_report(&state, &grid, &layout, &table, &bc).unwrap();
        let w = pm.width() * UM;
        let m = report.left();
        assert!(m.force.abs() < 1e-12 * a * w * w, "force {}", m.force);
        let expected = -a * w.powi(3) / 12.0;
        // Midpoint quadrature of x² misses dx²·w/12.
        let tol = a * w * grid.dx * grid.dx / 12.0 * 1.01;
        assert!((m.torque - expected).abs() <= tol, "{} vs {expected}", m.torque);
    }

    #[test]
    fn delta_p_is_above_minus_under() {
        let (layout, grid, table, bc) = device();
        let state = with_pressure(&grid, &table, |x, y| 1e-3 * (x * 7e2).sin() + y * 2.0);
        let report = proofmass_report(&state, &grid, &layout, &table, &bc).unwrap();
        for m in &report.masses {
            let ulp = f64::EPSILON * m.mean_above.abs();
            assert!((m.delta_p - (m.mean_above - m.mean_under)).abs() <= 4.0 * ulp);
        }
    }

    #[test]
    fn coarse_grid_rejects_proof_mass() {
        let params = DeviceParams { wire_thickness_um: 40.0, tether_thickness_um: 0.0, ..DeviceParams::default() };
        let layout = build_device(&params).unwrap();
        // 40 um rows leave two cell centres inside the 100 um proof mass.
        let grid = rasterize(&layout, 200, 30).unwrap();
        let table = default_table(300.0).unwrap();
        let state = SolutionState::initial(&grid, 300.0);
        let err = proofmass_report(&state, &grid, &layout, &table, &BoundaryConditions::ambient(300.0));
        assert_eq!(err, Err(AnalysisError::UnresolvedProofMass { index: 0, nx: 48, ny: 2 }));
    }

    #[test]
    fn offset_proxy_is_linear_in_epsilon() {
        let report = ProofMassReport {
            masses: vec![
                ProofMassLoad { force: 2.0, torque: 0.5, ..Default::default() },
                ProofMassLoad { force: -1.0, torque: -0.25, ..Default::default() },
            ],
        };
        assert_eq!(offset_proxy(&report, 0.0, 0.1).value, 0.0);
        let one = offset_proxy(&report, 0.2, 0.1).value;
        let two = offset_proxy(&report, 0.4, 0.1).value;
        assert!((two - 2.0 * one).abs() < 1e-15);
        assert!((one - (0.2 * 0.75 + 0.2 * 3.0 * 0.1)).abs() < 1e-15);
    }

    fn summary(gap: f64, ambient: f64, dp: f64) -> CaseSummary {
        let load = ProofMassLoad { delta_p: dp, ..Default::default() };
        CaseSummary {
            gap_um: gap,
            ambient_k: ambient,
            mean_t: ambient,
            p_thermo: 1e5,
            grad_p: 0.0,
            report: ProofMassReport { masses: vec![load, load] },
            offset: OffsetProxy { epsilon: 1.0, arm_scale: 1.0, value: 0.0 },
        }
    }

    #[test]
    fn trend_table_sorts_and_fits_slopes() {
        assert_eq!(trend_table(&[]), Err(AnalysisError::EmptyCaseList));
        let one = trend_table(&[summary(50.0, 300.0, 1.0)]).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert!(one.slopes.is_empty());

        let cases = [
            summary(200.0, 333.0, 0.5),
            summary(50.0, 313.0, 3.0),
            summary(200.0, 293.0, 0.1),
            summary(50.0, 293.0, 1.0),
            summary(50.0, 333.0, 5.0),
        ];
        let report = trend_table(&cases).unwrap();
        let keys: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.gap_um, r.ambient_k)).collect();
        assert_eq!(keys, vec![(50.0, 293.0), (50.0, 313.0), (50.0, 333.0), (200.0, 293.0), (200.0, 333.0)]);
        assert!((report.slope_at(50.0).unwrap() - 0.1).abs() < 1e-12);
        assert!((report.slope_at(200.0).unwrap() - 0.01).abs() < 1e-12);
    }
}
