use std::collections::BTreeMap;
use std::sync::Arc;

use super::*;
use crate::geometry::{build_device, rasterize, DeviceParams, Grid};
use crate::materials::{default_table, joule_source, MaterialId, MaterialProps, MaterialTable};

fn nondim_table(ra: f64) -> MaterialTable {
    let pr = 0.71;
    let props = BTreeMap::from([
        (MaterialId::Air, MaterialProps::fluid(1.0, 1.0, 1.0, pr, 1.0)),
        (MaterialId::Aluminum, MaterialProps::solid(1.0, 1.0, 1.0)),
    ]);
    MaterialTable::new(props, 0.5, [0.0, -ra * pr]).unwrap()
}

fn heated_box(n: usize, ra: f64, hot_west: bool) -> FlowProblem {
    let grid = Grid::uniform(n, n, 1.0, 1.0, MaterialId::Air).unwrap();
    let (w, e) = if hot_west { (1.0, 0.0) } else { (0.0, 1.0) };
    let bc = BoundaryConditions {
        t_ambient: 0.5,
        p_atm: 1.0,
        west: ThermalBc::Fixed(w),
        east: ThermalBc::Fixed(e),
        south: ThermalBc::Adiabatic,
        north: ThermalBc::Adiabatic,
    };
    FlowProblem::new(&grid, &nondim_table(ra), &JouleSource::off(), bc).unwrap()
}

fn tight() -> SolverConfig {
    SolverConfig { outer_tolerance: 1e-8, ..SolverConfig::default() }
}

#[test]
fn quiescent_device_is_an_exact_equilibrium() {
    let layout = build_device(&DeviceParams::default()).unwrap();
    let grid = rasterize(&layout, 100, 96).unwrap();
    let table = default_table(300.0).unwrap();
    let state = solve_steady(&grid, &table, &JouleSource::off(), &BoundaryConditions::ambient(300.0), &tight()).unwrap();
    assert!(state.converged);
    assert_eq!(state.iterations, 1);
    assert_eq!(state.final_residuals().unwrap().max(), 0.0);
    assert_eq!(state.max_speed(), 0.0);
    assert!(state.t.iter().all(|&t| t == 300.0));
}

#[test]
fn heated_slab_matches_parabolic_profile() {
    let (n, len, k, s_h) = (64, 1e-3, 237.0, 1e9);
    let grid = Grid::uniform(n, 4, len, 1e-4, MaterialId::Aluminum).unwrap();
    let mut table = default_table(300.0).unwrap();
    table.gravity = [0.0, 0.0];
    let source = joule_source(1.0, s_h, 1.0).unwrap();
    let bc = BoundaryConditions {
        south: ThermalBc::Adiabatic,
        north: ThermalBc::Adiabatic,
        ..BoundaryConditions::ambient(300.0)
    };
    let state = solve_steady(&grid, &table, &source, &bc, &tight()).unwrap();
    let peak = state.t.iter().cloned().fold(f64::MIN, f64::max) - 300.0;
    let exact = s_h * len * len / (8.0 * k);
    assert!((peak - exact).abs() / exact < 0.01, "peak {peak} vs {exact}");
    for i in 0..n {
        let x = grid.xc(i);
        let expected = s_h / (2.0 * k) * x * (len - x);
        assert!((state.t[grid.idx(i, 1)] - 300.0 - expected).abs() < 0.01 * exact);
    }
}

#[test]
fn energy_balance_closes_and_scales_linearly() {
    let layout = build_device(&DeviceParams::default()).unwrap();
    let grid = rasterize(&layout, 100, 96).unwrap();
    let table = default_table(300.0).unwrap();
    let bc = BoundaryConditions::ambient(300.0);
    let mut rises = Vec::new();
    for s_h in [1e8, 2e8] {
        let source = joule_source(1.0, s_h, 1.0).unwrap();
        let pb = FlowProblem::new(&grid, &table, &source, bc.clone()).unwrap();
        let state = pb.solve(&tight(), None).unwrap();
        let balance = energy_balance(&pb, &state);
        assert!(balance.imbalance_fraction < 1e-3, "{balance:?}");
        rises.push(state.t.iter().cloned().fold(f64::MIN, f64::max) - 300.0);
    }
    assert!((rises[1] / rises[0] - 2.0).abs() < 1e-2, "{rises:?}");
}

#[test]
fn zero_fields_have_zero_residuals() {
    let pb = heated_box(8, 1e3, true);
    let mut state = SolutionState::initial(&pb.grid, 0.5);
    // Remove the wall forcing so the zero state is a true solution.
    let bc = BoundaryConditions { west: ThermalBc::Fixed(0.5), east: ThermalBc::Fixed(0.5), ..pb.bc.clone() };
    let pb = FlowProblem::new(&pb.grid, &nondim_table(1e3), &JouleSource::off(), bc).unwrap();
    let r = residual_norms(&pb, &state, AdvectionScheme::Upwind);
    assert_eq!(r, ResidualNorms::default());

    state.u[pb.uidx(4, 4)] += 1.0;
    let r = residual_norms(&pb, &state, AdvectionScheme::Upwind);
    assert!(r.continuity > 0.0 && r.momentum_x > 0.0);
}

#[test]
fn perturbing_a_converged_state_raises_continuity_residual() {
    let pb = heated_box(16, 1e3, true);
    let mut state = pb.solve(&tight(), None).unwrap();
    let before = residual_norms(&pb, &state, AdvectionScheme::Upwind);
    state.u[pb.uidx(8, 8)] += 1.0;
    let after = residual_norms(&pb, &state, AdvectionScheme::Upwind);
    assert!(after.continuity > before.continuity * 10.0);
}

#[test]
fn buoyant_cell_rises_at_the_hot_wall_and_mirrors() {
    let n = 20;
    let west = heated_box(n, 1e4, true).solve(&tight(), None).unwrap();
    let east = heated_box(n, 1e4, false).solve(&tight(), None).unwrap();
    let mid = n / 2;
    assert!(west.v_at(0, mid) > 0.0, "fluid near the hot wall rises");
    assert!(west.v_at(n - 1, mid) < 0.0);
    for j in 0..n {
        for i in 0..n {
            let a = west.t[j * n + i];
            let b = east.t[j * n + (n - 1 - i)];
            assert!((a - b).abs() < 1e-6, "T mirror at ({i}, {j}): {a} vs {b}");
        }
        for i in 0..=n {
            let a = west.u_at(i, j);
            let b = -east.u_at(n - i, j);
            assert!((a - b).abs() < 1e-6 * west.max_speed());
        }
    }
}

#[test]
fn temperature_stays_within_boundary_values() {
    let pb = heated_box(16, 1e4, true);
    let state = pb.solve(&tight(), None).unwrap();
    assert!(state.t.iter().all(|&t| (0.0..=1.0).contains(&t)));
}

#[test]
fn pressure_gauge_has_zero_mean_and_zero_solids() {
    let layout = build_device(&DeviceParams::default()).unwrap();
    let grid = rasterize(&layout, 100, 96).unwrap();
    let table = default_table(300.0).unwrap();
    let source = joule_source(1.0, 2e8, 1.0).unwrap();
    let pb = FlowProblem::new(&grid, &table, &source, BoundaryConditions::ambient(300.0)).unwrap();
    let state = pb.solve(&tight(), None).unwrap();
    let mean: f64 = (0..grid.len()).filter(|&c| pb.is_fluid(c)).map(|c| state.p_dyn[c]).sum::<f64>();
    let scale = state.p_dyn.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    assert!(mean.abs() <= 1e-9 * scale * grid.len() as f64);
    assert!((0..grid.len()).filter(|&c| !pb.is_fluid(c)).all(|c| state.p_dyn[c] == 0.0));
}

#[test]
fn thermodynamic_pressure_level() {
    let grid = Grid::uniform(4, 4, 1.0, 1.0, MaterialId::Air).unwrap();
    let table = default_table(300.0).unwrap();
    let mut state = SolutionState::initial(&grid, 303.0);
    state.p_dyn[5] = 2.0;
    let bc = BoundaryConditions::ambient(300.0);
    let d = decompose_pressure(&state, &grid, &table, &bc);
    assert!((d.p_thermo - 102_338.25).abs() < 1e-6);
    assert!((d.p_total[5] - 102_340.25).abs() < 1e-6);
}

#[test]
fn invalid_configuration_is_rejected() {
    let pb = heated_box(4, 1.0, true);
    let cfg = SolverConfig { velocity_relaxation: 1.5, ..SolverConfig::default() };
    assert!(matches!(pb.solve(&cfg, None), Err(SolverError::InvalidConfig(_))));
}

#[test]
fn profile_boundary_is_honoured() {
    let grid = Grid::uniform(32, 32, 1.0, 1.0, MaterialId::Aluminum).unwrap();
    let mut table = nondim_table(0.0);
    table.gravity = [0.0, 0.0];
    let lin: FieldFn = Arc::new(|x, _| 1.0 + x);
    let bc = BoundaryConditions {
        t_ambient: 1.0,
        p_atm: 1.0,
        west: ThermalBc::Profile(lin.clone()),
        east: ThermalBc::Profile(lin.clone()),
        south: ThermalBc::Profile(lin.clone()),
        north: ThermalBc::Profile(lin),
    };
    let pb = FlowProblem::new(&grid, &table, &JouleSource::off(), bc).unwrap();
    let state = pb.solve(&tight(), None).unwrap();
    for j in 0..32 {
        for i in 0..32 {
            assert!((state.t[grid.idx(i, j)] - (1.0 + grid.xc(i))).abs() < 1e-6);
        }
    }
}

#[test]
fn conduction_power_out_is_linear_in_source() {
    let layout = build_device(&DeviceParams::default()).unwrap();
    let grid = rasterize(&layout, 100, 96).unwrap();
    let mut table = default_table(300.0).unwrap();
    table.gravity = [0.0, 0.0];
    let bc = BoundaryConditions::ambient(300.0);
    let out: Vec<f64> = [1e8, 2e8]
        .iter()
        .map(|&s_h| {
            let source = joule_source(1.0, s_h, 1.0).unwrap();
            let pb = FlowProblem::new(&grid, &table, &source, bc.clone()).unwrap();
            let cfg = SolverConfig { outer_tolerance: 1e-10, energy_tolerance: 1e-8, ..SolverConfig::default() };
            energy_balance(&pb, &pb.solve(&cfg, None).unwrap()).power_out
        })
        .collect();
    assert!((out[1] / out[0] - 2.0).abs() / 2.0 < 1e-6, "{out:?}");
}

#[test]
fn zero_source_balance_is_zero_by_convention() {
    let pb = heated_box(8, 0.0, true);
    let state = SolutionState::initial(&pb.grid, 0.5);
    let b = energy_balance(&pb, &state);
    assert_eq!(b.power_in, 0.0);
    assert_eq!(b.imbalance_fraction, 0.0);
}

#[test]
fn plume_rises_above_a_bottom_heater() {
    let n = 24;
    let mut grid = Grid::uniform(n, n, 1.0, 1.0, MaterialId::Air).unwrap();
    for i in n / 2 - 2..n / 2 + 2 {
        grid.material[i] = MaterialId::Aluminum;
    }
    let bc = BoundaryConditions {
        t_ambient: 0.5,
        p_atm: 1.0,
        west: ThermalBc::Fixed(0.5),
        east: ThermalBc::Fixed(0.5),
        south: ThermalBc::Adiabatic,
        north: ThermalBc::Fixed(0.5),
    };
    let source = joule_source(1.0, 50.0, 1.0).unwrap();
    let pb = FlowProblem::new(&grid, &nondim_table(1e4), &source, bc).unwrap();
    let state = pb.solve(&tight(), None).unwrap();
    for j in 2..n / 2 {
        let v = 0.5 * (state.v_at(n / 2 - 1, j) + state.v_at(n / 2, j));
        assert!(v > 0.0, "row {j}: v = {v}");
    }
}

#[test]
fn heated_device_obeys_the_maximum_principle() {
    let layout = build_device(&DeviceParams::default()).unwrap();
    let grid = rasterize(&layout, 100, 96).unwrap();
    let table = default_table(300.0).unwrap();
    let source = joule_source(0.01, 10.0, 200e-6 * 25e-6).unwrap();
    let state = solve_steady(&grid, &table, &source, &BoundaryConditions::ambient(300.0), &tight()).unwrap();
    let min = state.t.iter().cloned().fold(f64::MAX, f64::min);
    assert!(min >= 300.0 - 1e-9, "min T {min}");
}

#[test]
fn simplec_reaches_the_simple_solution() {
    let pb = heated_box(16, 1e4, true);
    let simple = pb.solve(&tight(), None).unwrap();
    let cfg = SolverConfig { coupling: Coupling::Simplec, velocity_relaxation: 0.8, pressure_relaxation: 1.0, ..tight() };
    let simplec = pb.solve(&cfg, None).unwrap();
    let scale = simple.max_speed();
    for (a, b) in simple.u.iter().zip(&simplec.u).chain(simple.v.iter().zip(&simplec.v)) {
        assert!((a - b).abs() < 1e-5 * scale, "{a} vs {b}");
    }
    for (a, b) in simple.t.iter().zip(&simplec.t) {
        assert!((a - b).abs() < 1e-6);
    }
    let unrelaxed = SolverConfig { coupling: Coupling::Simplec, velocity_relaxation: 1.0, ..tight() };
    assert!(matches!(pb.solve(&unrelaxed, None), Err(SolverError::InvalidConfig(_))));
}

#[test]
fn refinement_preserves_linear_fields() {
    let (n, h) = (6, 1.0 / 6.0);
    let grid = Grid::uniform(n, n, 1.0, 1.0, MaterialId::Air).unwrap();
    let mut s = SolutionState::initial(&grid, 0.0);
    let f = |x: f64, y: f64| 2.0 * x - 3.0 * y + 1.0;
    for c in 0..n * n {
        s.t[c] = f(grid.xc(c % n), grid.yc(c / n));
    }
    for j in 0..n {
        for i in 1..n {
            s.u[j * (n + 1) + i] = f(i as f64 * h, grid.yc(j));
        }
    }
    let fine = s.refined();
    let (m, hf) = (2 * n, h / 2.0);
    assert_eq!((fine.nx, fine.ny, fine.u.len(), fine.v.len()), (m, m, (m + 1) * m, m * (m + 1)));
    // Away from the outermost ring the interpolation is exact for linear data.
    for j in 1..m - 1 {
        for i in 1..m - 1 {
            let want = f((i as f64 + 0.5) * hf, (j as f64 + 0.5) * hf);
            assert!((fine.t[j * m + i] - want).abs() < 1e-12);
        }
        for i in 2..m - 1 {
            let want = f(i as f64 * hf, (j as f64 + 0.5) * hf);
            assert!((fine.u_at(i, j) - want).abs() < 1e-12, "u at ({i}, {j})");
        }
        assert_eq!((fine.u_at(0, j), fine.u_at(m, j)), (0.0, 0.0));
    }
    assert_eq!(fine.iterations, 0);
}
