//! Parametric fan-out over gap heights and ambient temperatures.
//!
//! Every (gap, ambient) pair is an independent solve on its own grid. Cases
//! run on a bounded rayon pool and are collected in plan order, so the
//! report never depends on completion order.

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{default_arm_scale, trend_table, CaseFailure, CaseSummary, SweepReport};
use crate::geometry::{build_device, rasterize_for_gap, DeviceLayout, DeviceParams, Grid};
use crate::materials::{default_table, joule_source, JouleSource, MaterialTable};
use crate::solver::{energy_balance, BoundaryConditions, EnergyBalance, FlowProblem, SolutionState, SolverConfig, SolverError};

const UM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolution {
    /// Cells across the full device width.
    pub nx: usize,
    /// Lower bound on the rows of every case grid.
    pub min_ny: usize,
    /// Rows across the thinnest fluid layer; sets `ny` per case.
    pub cells_per_min_gap: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { nx: 200, min_ny: 16, cells_per_min_gap: 8 }
    }
}

/// Electrical drive of the heater wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Drive {
    pub i_rms_a: f64,
    pub resistance_ohm: f64,
}

impl Default for Drive {
    fn default() -> Self {
        Self { i_rms_a: 0.01, resistance_ohm: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub gap_heights_um: Vec<f64>,
    pub ambient_temperatures_k: Vec<f64>,
    /// Base geometry; its gap height is replaced per case.
    pub device: DeviceParams,
    pub resolution: Resolution,
    pub solver: SolverConfig,
    pub drive: Drive,
    /// Imperfection factor of the offset proxy.
    pub epsilon: f64,
    /// Moment arm of the offset proxy, µm; half the proof-mass width if unset.
    pub arm_scale_um: Option<f64>,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            gap_heights_um: vec![50.0, 100.0, 150.0, 200.0],
            ambient_temperatures_k: vec![300.0],
            device: DeviceParams::default(),
            resolution: Resolution::default(),
            solver: SolverConfig::default(),
            drive: Drive::default(),
            epsilon: 0.01,
            arm_scale_um: None,
            threads: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid plan: {key} {reason}")]
    InvalidPlan { key: &'static str, reason: String },
    #[error("all {} cases failed; first: {}", .0.len(), .0.first().map_or("", |f| f.error.as_str()))]
    AllCasesFailed(Vec<CaseFailure>),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

fn invalid(key: &'static str, reason: impl Into<String>) -> SweepError {
    SweepError::InvalidPlan { key, reason: reason.into() }
}

fn check_axis(key: &'static str, values: &[f64]) -> Result<(), SweepError> {
    if values.is_empty() {
        return Err(invalid(key, "is empty"));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(invalid(key, format!("contains {v}; entries must be positive")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(key, "must be strictly increasing"));
    }
    Ok(())
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), SweepError> {
        check_axis("gap_heights_um", &self.gap_heights_um)?;
        check_axis("ambient_temperatures_K", &self.ambient_temperatures_k)?;
        for &gap in &self.gap_heights_um {
            let params = DeviceParams { gap_height_um: gap, ..self.device.clone() };
            params.validate().map_err(|e| invalid("device", e.to_string()))?;
        }
        let r = &self.resolution;
        if r.nx < 2 || r.min_ny < 2 || r.cells_per_min_gap == 0 {
            return Err(invalid("resolution", "needs nx, min_ny >= 2 and cells_per_min_gap >= 1"));
        }
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        if !(self.drive.resistance_ohm > 0.0) {
            return Err(invalid("resistance_ohm", "must be positive"));
        }
        if !(self.drive.i_rms_a >= 0.0) {
            return Err(invalid("i_rms_A", "must be non-negative"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(invalid("epsilon", "must be non-negative"));
        }
        if let Some(arm) = self.arm_scale_um {
            if !(arm > 0.0) {
                return Err(invalid("arm_scale_um", "must be positive"));
            }
        }
        Ok(())
    }

    /// All (gap, ambient) pairs, sorted by gap then ambient.
    pub fn cases(&self) -> Vec<(f64, f64)> {
        self.gap_heights_um
            .iter()
            .flat_map(|&g| self.ambient_temperatures_k.iter().map(move |&t| (g, t)))
            .collect()
    }
}

/// Everything produced by one case, successful or not.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub gap_um: f64,
    pub ambient_k: f64,
    pub layout: Option<DeviceLayout>,
    pub grid: Option<Grid>,
    pub table: Option<MaterialTable>,
    pub source: Option<JouleSource>,
    /// Final or best-effort state.
    pub state: Option<SolutionState>,
    pub balance: Option<EnergyBalance>,
    pub summary: Option<CaseSummary>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl CaseOutcome {
    fn empty(gap_um: f64, ambient_k: f64) -> Self {
        Self {
            gap_um,
            ambient_k,
            layout: None,
            grid: None,
            table: None,
            source: None,
            state: None,
            balance: None,
            summary: None,
            error: None,
            seconds: 0.0,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: SweepReport,
    /// In plan order.
    pub cases: Vec<CaseOutcome>,
}

/// Heater power density for the plan's drive on this layout. The 2D wire
/// cross-section is extruded over a unit depth.
pub fn device_source(layout: &DeviceLayout, drive: &Drive) -> Result<JouleSource, crate::materials::MaterialError> {
    let volume = layout.heat_source.area() * UM * UM;
    joule_source(drive.i_rms_a, drive.resistance_ohm, volume)
}

/// Solve a single case. Never panics on solver trouble; the error is stored.
pub fn run_case(plan: &SweepPlan, gap_um: f64, ambient_k: f64) -> CaseOutcome {
    let start = std::time::Instant::now();
    let mut out = CaseOutcome::empty(gap_um, ambient_k);
    if let Err(e) = solve_into(plan, &mut out) {
        out.error = Some(e);
    }
    out.seconds = start.elapsed().as_secs_f64();
    out
}

fn solve_into(plan: &SweepPlan, out: &mut CaseOutcome) -> Result<(), String> {
    let params = DeviceParams { gap_height_um: out.gap_um, ..plan.device.clone() };
    let layout = build_device(&params).map_err(|e| e.to_string())?;
    let r = &plan.resolution;
    let grid = rasterize_for_gap(&layout, r.nx, r.min_ny, r.cells_per_min_gap).map_err(|e| e.to_string())?;
    let table = default_table(out.ambient_k).map_err(|e| e.to_string())?;
    let source = device_source(&layout, &plan.drive).map_err(|e| e.to_string())?;
    let bc = BoundaryConditions::ambient(out.ambient_k);
    let problem = FlowProblem::new(&grid, &table, &source, bc.clone()).map_err(|e| e.to_string())?;

    out.layout = Some(layout.clone());
    out.table = Some(table.clone());
    out.source = Some(source);
    let result = problem.solve(&plan.solver, None);
    out.grid = Some(grid.clone());
    let mut state = match result {
        Ok(s) => s,
        Err(e) => {
            let message = e.to_string();
            if let SolverError::Diverged(s) | SolverError::NotConverged(s) = e {
                let mut s = *s;
                problem.attach_total_pressure(&mut s, &table);
                out.state = Some(s);
            }
            return Err(message);
        }
    };
    problem.attach_total_pressure(&mut state, &table);
    out.balance = Some(energy_balance(&problem, &state));
    let arm = plan.arm_scale_um.map_or_else(|| default_arm_scale(&layout), |a| a * UM);
    let summary = CaseSummary::from_solution(&state, &grid, &layout, &table, &bc, plan.epsilon, arm);
    out.state = Some(state);
    out.summary = Some(summary.map_err(|e| e.to_string())?);
    Ok(())
}

/// Run every case of `plan` and aggregate the successful ones.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepOutcome, SweepError> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let cases: Vec<CaseOutcome> = pool.install(|| {
        plan.cases()
            .into_par_iter()
            .map(|(gap, ambient)| {
                let case = run_case(plan, gap, ambient);
                match &case.error {
                    None => info!(
                        "gap {gap} um, ambient {ambient} K: {} outer iterations, {:.1} s",
                        case.state.as_ref().map_or(0, |s| s.iterations),
                        case.seconds
                    ),
                    Some(e) => warn!("gap {gap} um, ambient {ambient} K failed: {e}"),
                }
                case
            })
            .collect()
    });

    let failures: Vec<CaseFailure> = cases
        .iter()
        .filter_map(|c| {
            c.error.as_ref().map(|e| CaseFailure { gap_um: c.gap_um, ambient_k: c.ambient_k, error: e.clone() })
        })
        .collect();
    let summaries: Vec<CaseSummary> = cases.iter().filter_map(|c| c.summary.clone()).collect();
    if summaries.is_empty() {
        return Err(SweepError::AllCasesFailed(failures));
    }
    let mut report = trend_table(&summaries).expect("at least one summary");
    report.failures = failures;
    Ok(SweepOutcome { report, cases })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(gaps: Vec<f64>, ambients: Vec<f64>) -> SweepPlan {
        SweepPlan {
            gap_heights_um: gaps,
            ambient_temperatures_k: ambients,
            resolution: Resolution { nx: 100, min_ny: 16, cells_per_min_gap: 2 },
            ..SweepPlan::default()
        }
    }

    #[test]
    fn plan_axes_are_validated() {
        let bad = [vec![], vec![-50.0], vec![100.0, 50.0], vec![50.0, 50.0]];
        for gaps in bad {
            let plan = quick(gaps, vec![300.0]);
            assert!(matches!(plan.validate(), Err(SweepError::InvalidPlan { key: "gap_heights_um", .. })));
        }
        let plan = quick(vec![50.0], vec![0.0]);
        assert!(matches!(plan.validate(), Err(SweepError::InvalidPlan { key: "ambient_temperatures_K", .. })));
        assert!(matches!(run_sweep(&quick(vec![], vec![300.0])), Err(SweepError::InvalidPlan { .. })));
    }

    #[test]
    fn cases_are_ordered_by_gap_then_ambient() {
        let plan = quick(vec![50.0, 100.0], vec![293.0, 313.0]);
        assert_eq!(plan.cases(), vec![(50.0, 293.0), (50.0, 313.0), (100.0, 293.0), (100.0, 313.0)]);
    }

    #[test]
    fn default_drive_is_one_milliwatt_over_the_wire() {
        let layout = build_device(&DeviceParams::default()).unwrap();
        let s = device_source(&layout, &Drive::default()).unwrap();
        assert!((s.power() - 1e-3).abs() < 1e-15);
        assert!((s.s_h - 1e-3 / (200e-6 * 25e-6)).abs() < 1e-6);
    }

    #[test]
    fn ambient_sweep_gives_rows_and_one_slope() {
        let plan = quick(vec![100.0], vec![293.0, 313.0, 333.0]);
        let out = run_sweep(&plan).unwrap();
        assert_eq!(out.report.rows.len(), 3);
        assert_eq!(out.report.slopes.len(), 1);
        assert!(out.report.failures.is_empty());
        let ambients: Vec<f64> = out.report.rows.iter().map(|r| r.ambient_k).collect();
        assert_eq!(ambients, vec![293.0, 313.0, 333.0]);
    }

    #[test]
    fn failed_cases_are_recorded_not_dropped() {
        let mut plan = quick(vec![50.0, 100.0], vec![300.0]);
        plan.solver.max_outer_iterations = 1;
        match run_sweep(&plan) {
            Err(SweepError::AllCasesFailed(f)) => assert_eq!(f.len(), 2),
            other => panic!("expected AllCasesFailed, got {other:?}"),
        }
    }

    #[test]
    fn thread_count_does_not_change_the_report() {
        let mut plan = quick(vec![50.0, 100.0, 150.0], vec![300.0]);
        plan.threads = 1;
        let serial = run_sweep(&plan).unwrap().report;
        plan.threads = 3;
        let parallel = run_sweep(&plan).unwrap().report;
        assert_eq!(serial, parallel);
    }
}
