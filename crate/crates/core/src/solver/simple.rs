use log::{debug, trace};

use crate::numerics::{solve_bicgstab, solve_cg, solve_sor, SolveError};

use super::assembly::{assemble_energy, assemble_pressure_correction, assemble_u, assemble_v, FieldsRef, LinearSystem};
use super::post::residual_norms_with;
use super::problem::{FlowProblem, INACTIVE};
use super::{Coupling, SolutionState, SolverConfig, SolverError};

/// Growth over the first residual that counts as divergence.
const DIVERGENCE_FACTOR: f64 = 1e6;

fn accept(result: Result<(Vec<f64>, crate::numerics::SolveStats), SolveError>) -> Option<Vec<f64>> {
    match result {
        Ok((x, _)) => Some(x),
        Err(e) => e.into_partial().map(|(x, _)| x),
    }
}

/// Solve `A δ = b − A x` and return the correction.
fn correction(
    sys: &LinearSystem,
    x: &[f64],
    solve: impl Fn(&crate::numerics::SparseMatrix, &[f64], &[f64]) -> Result<(Vec<f64>, crate::numerics::SolveStats), SolveError>,
) -> Option<Vec<f64>> {
    let r = sys.matrix.residual(&sys.rhs, x);
    let zero = vec![0.0; x.len()];
    accept(solve(&sys.matrix, &r, &zero))
}

/// Velocity response to a unit pressure difference, per unit face area.
fn face_coefficient(sys: &LinearSystem, row: usize, alpha: f64, coupling: Coupling) -> f64 {
    match coupling {
        Coupling::Simple => alpha / sys.a_p[row],
        // The relaxed diagonal less the neighbour coefficients is the row sum.
        Coupling::Simplec => 1.0 / sys.matrix.row(row).map(|(_, v)| v).sum::<f64>(),
    }
}

impl FlowProblem {
    /// Run the SIMPLE iteration, optionally from a previous state.
    pub fn solve(&self, cfg: &SolverConfig, init: Option<SolutionState>) -> Result<SolutionState, SolverError> {
        cfg.validate()?;
        let mut state = match init {
            Some(s) if s.nx == self.grid.nx && s.ny == self.grid.ny => s,
            Some(_) => return Err(SolverError::InvalidProblem("initial state has the wrong shape".into())),
            None => SolutionState::initial(&self.grid, self.bc.t_ambient),
        };
        state.converged = false;
        let mut first = None;
        for it in 1..=cfg.max_outer_iterations {
            if self.has_flow() {
                self.momentum_and_pressure(&mut state, cfg);
            }
            self.energy_step(&mut state, cfg);
            state.iterations += 1;

            let norms = residual_norms_with(self, &state, cfg.advection_scheme);
            state.residual_history.push(norms);
            trace!("outer {it}: {norms:?}");
            if !norms.is_finite() || !state.is_finite() {
                return Err(SolverError::Diverged(Box::new(state)));
            }
            let first = *first.get_or_insert(norms);
            let grew = |now: f64, then: f64| then > 0.0 && now > DIVERGENCE_FACTOR * then;
            if grew(norms.continuity, first.continuity)
                || grew(norms.momentum_x, first.momentum_x)
                || grew(norms.momentum_y, first.momentum_y)
                || grew(norms.energy, first.energy)
            {
                return Err(SolverError::Diverged(Box::new(state)));
            }
            if norms.max() <= cfg.outer_tolerance {
                debug!("converged in {it} outer iterations: {norms:?}");
                state.converged = true;
                return Ok(state);
            }
        }
        Err(SolverError::NotConverged(Box::new(state)))
    }

    fn momentum_and_pressure(&self, state: &mut SolutionState, cfg: &SolverConfig) {
        let scheme = cfg.advection_scheme;
        let alpha = cfg.velocity_relaxation;
        let faces = &self.faces;
        let (dx, dy) = (self.grid.dx, self.grid.dy);
        let (sys_u, sys_v) = {
            let f = FieldsRef { t: &state.t, p: &state.p_dyn, u: &state.u, v: &state.v };
            (assemble_u(self, &f, scheme, alpha), assemble_v(self, &f, scheme, alpha))
        };
        let sor = |a: &_, b: &[f64], x0: &[f64]| solve_sor(a, b, x0, 1.0, cfg.momentum_tolerance, cfg.momentum_max_sweeps);

        let mut d_u = vec![0.0; faces.u_list.len()];
        if let Some(sys) = &sys_u {
            let x: Vec<f64> = faces.u_list.iter().map(|&(i, j)| state.u[self.uidx(i, j)]).collect();
            if let Some(delta) = correction(sys, &x, sor) {
                for (id, &(i, j)) in faces.u_list.iter().enumerate() {
                    state.u[self.uidx(i, j)] += delta[id];
                }
            }
            for (id, d) in d_u.iter_mut().enumerate() {
                *d = dy * face_coefficient(sys, id, alpha, cfg.coupling);
            }
        }
        let mut d_v = vec![0.0; faces.v_list.len()];
        if let Some(sys) = &sys_v {
            let x: Vec<f64> = faces.v_list.iter().map(|&(i, j)| state.v[self.vidx(i, j)]).collect();
            if let Some(delta) = correction(sys, &x, sor) {
                for (id, &(i, j)) in faces.v_list.iter().enumerate() {
                    state.v[self.vidx(i, j)] += delta[id];
                }
            }
            for (id, d) in d_v.iter_mut().enumerate() {
                *d = dx * face_coefficient(sys, id, alpha, cfg.coupling);
            }
        }

        let Some((a, mut b)) = assemble_pressure_correction(self, &state.u, &state.v, &d_u, &d_v) else {
            return;
        };
        // Project the mass source onto the range of the Neumann operator,
        // one sealed cavity at a time.
        let mut sums = vec![(0.0, 0usize); faces.n_components];
        for (row, &c) in faces.p_list.iter().enumerate() {
            let comp = faces.component[c].expect("pressure cells are fluid");
            sums[comp].0 += b[row];
            sums[comp].1 += 1;
        }
        for (row, &c) in faces.p_list.iter().enumerate() {
            let (s, n) = sums[faces.component[c].expect("fluid")];
            b[row] -= s / n as f64;
        }
        let zero = vec![0.0; b.len()];
        let Some(pc) = accept(solve_cg(&a, &b, &zero, cfg.pressure_tolerance, cfg.pressure_max_iterations)) else {
            return;
        };
        let p_corr = |c: usize| {
            let id = faces.p_unknown[c];
            if id == INACTIVE {
                0.0
            } else {
                pc[id]
            }
        };
        for (id, &(i, j)) in faces.u_list.iter().enumerate() {
            let (w, e) = (self.grid.idx(i - 1, j), self.grid.idx(i, j));
            state.u[self.uidx(i, j)] += d_u[id] * (p_corr(w) - p_corr(e));
        }
        for (id, &(i, j)) in faces.v_list.iter().enumerate() {
            let (s, n) = (self.grid.idx(i, j - 1), self.grid.idx(i, j));
            state.v[self.vidx(i, j)] += d_v[id] * (p_corr(s) - p_corr(n));
        }
        for &c in &faces.p_list {
            state.p_dyn[c] += cfg.pressure_relaxation * p_corr(c);
        }
        self.apply_pressure_gauge(&mut state.p_dyn);
    }

    /// Zero-mean dynamic pressure over each fluid cavity, zero in solids.
    pub(crate) fn apply_pressure_gauge(&self, p: &mut [f64]) {
        let faces = &self.faces;
        let mut sums = vec![(0.0, 0usize); faces.n_components];
        for (c, comp) in faces.component.iter().enumerate() {
            if let Some(k) = comp {
                sums[*k].0 += p[c];
                sums[*k].1 += 1;
            }
        }
        for (c, comp) in faces.component.iter().enumerate() {
            match comp {
                Some(k) => p[c] -= sums[*k].0 / sums[*k].1 as f64,
                None => p[c] = 0.0,
            }
        }
    }

    fn energy_step(&self, state: &mut SolutionState, cfg: &SolverConfig) {
        let sys = {
            let f = FieldsRef { t: &state.t, p: &state.p_dyn, u: &state.u, v: &state.v };
            assemble_energy(self, &f, cfg.advection_scheme, 1.0)
        };
        // The energy equation is linear in T for frozen velocities, so the
        // relaxation is applied to the full correction rather than through
        // the diagonal, which would stall the smooth conduction modes.
        let alpha = cfg.temperature_relaxation;
        let theta: Vec<f64> = state.t.iter().map(|t| t - self.t_ref).collect();
        let krylov = |a: &_, b: &[f64], x0: &[f64]| solve_bicgstab(a, b, x0, cfg.energy_tolerance, cfg.energy_max_iterations);
        if let Some(delta) = correction(&sys, &theta, krylov) {
            for (t, d) in state.t.iter_mut().zip(delta) {
                *t += alpha * d;
            }
        }
    }
}
