//! File writers: the sweep summary CSV and per-case field dumps.
//!
//! Numbers are written with Rust's `Display` for `f64`, which is the
//! shortest decimal string that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::analysis::SweepReport;
use crate::geometry::Grid;
use crate::solver::SolutionState;

pub const SUMMARY_HEADER: &str = "gap_um,ambient_K,mean_T_K,p_thermo_Pa,grad_p_Pa_per_m,delta_p_left_Pa,delta_p_right_Pa,torque_left_Nm_per_m,torque_right_Nm_per_m,offset_proxy_au";

pub const FIELD_HEADER: &str = "x_m,y_m,material,T_K,p_dyn_Pa,p_total_Pa,u_m_per_s,v_m_per_s";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("report has no rows")]
    EmptyReport,
    #[error("state is {state_nx} x {state_ny} but the grid is {grid_nx} x {grid_ny}")]
    ShapeMismatch { state_nx: usize, state_ny: usize, grid_nx: usize, grid_ny: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Summary CSV text; rows are emitted in the report's (gap, ambient) order.
pub fn summary_csv(report: &SweepReport) -> Result<String, OutputError> {
    if report.rows.is_empty() {
        return Err(OutputError::EmptyReport);
    }
    let mut s = String::with_capacity(64 * (report.rows.len() + 1));
    s.push_str(SUMMARY_HEADER);
    s.push('\n');
    for r in &report.rows {
        let cells = [
            r.gap_um,
            r.ambient_k,
            r.mean_t_k,
            r.p_thermo_pa,
            r.grad_p_pa_per_m,
            r.delta_p_left_pa,
            r.delta_p_right_pa,
            r.torque_left_nm_per_m,
            r.torque_right_nm_per_m,
            r.offset_proxy_au,
        ];
        for (k, v) in cells.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            write!(s, "{v}").expect("writing to a String");
        }
        s.push('\n');
    }
    Ok(s)
}

/// Write [`summary_csv`] to `path`. Nothing is created for an empty report.
pub fn write_summary_csv(report: &SweepReport, path: &Path) -> Result<(), OutputError> {
    let text = summary_csv(report)?;
    fs::write(path, text)?;
    Ok(())
}

fn check_shape(state: &SolutionState, grid: &Grid) -> Result<(), OutputError> {
    if state.nx != grid.nx || state.ny != grid.ny {
        return Err(OutputError::ShapeMismatch {
            state_nx: state.nx,
            state_ny: state.ny,
            grid_nx: grid.nx,
            grid_ny: grid.ny,
        });
    }
    Ok(())
}

/// Total pressure if attached, otherwise the dynamic field.
fn total_pressure(state: &SolutionState) -> &[f64] {
    if state.p_total.len() == state.p_dyn.len() {
        &state.p_total
    } else {
        &state.p_dyn
    }
}

fn push_values(s: &mut String, values: impl Iterator<Item = f64>) {
    for v in values {
        writeln!(s, "{v}").expect("writing to a String");
    }
}

/// Legacy ASCII VTK with one point per cell centre.
pub fn vtk_fields(state: &SolutionState, grid: &Grid) -> Result<String, OutputError> {
    check_shape(state, grid)?;
    let n = grid.len();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("cavityflow steady fields\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET STRUCTURED_POINTS\n");
    writeln!(s, "DIMENSIONS {} {} 1", grid.nx, grid.ny).unwrap();
    writeln!(s, "ORIGIN {} {} 0", grid.xc(0), grid.yc(0)).unwrap();
    writeln!(s, "SPACING {} {} 1", grid.dx, grid.dy).unwrap();
    writeln!(s, "POINT_DATA {n}").unwrap();

    let scalars: [(&str, &[f64]); 3] = [("T", &state.t), ("p_dyn", &state.p_dyn), ("p_total", total_pressure(state))];
    for (name, field) in scalars {
        writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        push_values(&mut s, field.iter().copied());
    }
    s.push_str("SCALARS material int 1\nLOOKUP_TABLE default\n");
    for m in &grid.material {
        writeln!(s, "{}", m.code()).unwrap();
    }
    s.push_str("VECTORS velocity double\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let [u, v] = state.cell_velocity(i, j);
            writeln!(s, "{u} {v} 0").unwrap();
        }
    }
    Ok(s)
}

pub fn write_vtk_fields(state: &SolutionState, grid: &Grid, path: &Path) -> Result<(), OutputError> {
    let text = vtk_fields(state, grid)?;
    fs::write(path, text)?;
    Ok(())
}

/// Cell-centred fields as CSV, one row per cell in row-major order.
pub fn field_csv(state: &SolutionState, grid: &Grid) -> Result<String, OutputError> {
    check_shape(state, grid)?;
    let p_total = total_pressure(state);
    let mut s = String::new();
    s.push_str(FIELD_HEADER);
    s.push('\n');
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let c = grid.idx(i, j);
            let [u, v] = state.cell_velocity(i, j);
            writeln!(
                s,
                "{},{},{},{},{},{},{u},{v}",
                grid.xc(i),
                grid.yc(j),
                grid.material[c].code(),
                state.t[c],
                state.p_dyn[c],
                p_total[c]
            )
            .unwrap();
        }
    }
    Ok(s)
}

pub fn write_field_csv(state: &SolutionState, grid: &Grid, path: &Path) -> Result<(), OutputError> {
    let text = field_csv(state, grid)?;
    fs::write(path, text)?;
    Ok(())
}
