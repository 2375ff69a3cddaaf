//! Manufactured-solution verification on the unit square.
//!
//! u = ∂ψ/∂y, v = −∂ψ/∂x with ψ = a sin²(πx) sin²(πy), so the field is
//! solenoidal and vanishes with its tangential part on every wall.
//! p = P cos(πx) cos(πy), T = 1 + b sin(πx) cos(πy). The forcing terms are
//! the residuals of the exact fields in the continuous equations.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::geometry::Grid;
use crate::materials::{JouleSource, MaterialId, MaterialProps, MaterialTable};
use crate::solver::{BoundaryConditions, FieldFn, FlowProblem, Forcing, SolutionState, SolverConfig, SolverError, ThermalBc};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    /// Stream-function amplitude; peak speed is `a·π`.
    pub a: f64,
    /// Pressure amplitude.
    pub p: f64,
    /// Temperature amplitude.
    pub b: f64,
    pub rho: f64,
    pub mu: f64,
    pub k: f64,
    pub cp: f64,
}

/// Normalized RMS errors of one manufactured-solution solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsErrors {
    pub n: usize,
    pub u: f64,
    pub v: f64,
    pub t: f64,
    pub iterations: usize,
}

impl Manufactured {
    pub fn u(&self, x: f64, y: f64) -> f64 {
        self.a * PI * (PI * x).sin().powi(2) * (2.0 * PI * y).sin()
    }

    pub fn v(&self, x: f64, y: f64) -> f64 {
        -self.a * PI * (2.0 * PI * x).sin() * (PI * y).sin().powi(2)
    }

    pub fn t(&self, x: f64, y: f64) -> f64 {
        1.0 + self.b * (PI * x).sin() * (PI * y).cos()
    }

    fn fx(&self, x: f64, y: f64) -> f64 {
        let (a, p3) = (self.a, PI.powi(3));
        let (s1x, s2x, c2x) = ((PI * x).sin(), (2.0 * PI * x).sin(), (2.0 * PI * x).cos());
        let (s2y, c2y) = ((2.0 * PI * y).sin(), (2.0 * PI * y).cos());
        let ux = a * PI * PI * s2x * s2y;
        let uy = 2.0 * a * PI * PI * s1x * s1x * c2y;
        let lap = 2.0 * a * p3 * c2x * s2y - 4.0 * a * p3 * s1x * s1x * s2y;
        let px = -self.p * PI * s1x * (PI * y).cos();
        self.rho * (self.u(x, y) * ux + self.v(x, y) * uy) + px - self.mu * lap
    }

    fn fy(&self, x: f64, y: f64) -> f64 {
        let (a, p3) = (self.a, PI.powi(3));
        let (s2x, c2x) = ((2.0 * PI * x).sin(), (2.0 * PI * x).cos());
        let (s1y, s2y, c2y) = ((PI * y).sin(), (2.0 * PI * y).sin(), (2.0 * PI * y).cos());
        let vx = -2.0 * a * PI * PI * c2x * s1y * s1y;
        let vy = -a * PI * PI * s2x * s2y;
        let lap = 4.0 * a * p3 * s2x * s1y * s1y - 2.0 * a * p3 * s2x * c2y;
        let py = -self.p * PI * (PI * x).cos() * s1y;
        self.rho * (self.u(x, y) * vx + self.v(x, y) * vy) + py - self.mu * lap
    }

    fn q(&self, x: f64, y: f64) -> f64 {
        let b = self.b;
        let tx = b * PI * (PI * x).cos() * (PI * y).cos();
        let ty = -b * PI * (PI * x).sin() * (PI * y).sin();
        let lap = -2.0 * PI * PI * b * (PI * x).sin() * (PI * y).cos();
        self.rho * self.cp * (self.u(x, y) * tx + self.v(x, y) * ty) - self.k * lap
    }

    /// Forced problem on an `n × n` grid whose exact solution is this field.
    pub fn problem(&self, n: usize) -> FlowProblem {
        let grid = Grid::uniform(n, n, 1.0, 1.0, MaterialId::Air).unwrap();
        let props = BTreeMap::from([(MaterialId::Air, MaterialProps::fluid(self.rho, self.k, self.cp, self.mu, 1.0))]);
        let table = MaterialTable::new(props, 1.0, [0.0, 0.0]).unwrap();
        let m = *self;
        let exact: FieldFn = Arc::new(move |x, y| m.t(x, y));
        let bc = BoundaryConditions {
            t_ambient: 1.0,
            p_atm: 1.0,
            west: ThermalBc::Profile(exact.clone()),
            east: ThermalBc::Profile(exact.clone()),
            south: ThermalBc::Profile(exact.clone()),
            north: ThermalBc::Profile(exact),
        };
        let forcing = Forcing {
            momentum_x: Arc::new(move |x, y| m.fx(x, y)),
            momentum_y: Arc::new(move |x, y| m.fy(x, y)),
            energy: Arc::new(move |x, y| m.q(x, y)),
        };
        FlowProblem::new(&grid, &table, &JouleSource::off(), bc).unwrap().with_forcing(forcing)
    }

    /// RMS errors of (u, v, T) normalized by the peak of each exact field.
    pub fn errors(&self, n: usize, cfg: &SolverConfig) -> Result<MmsErrors, SolverError> {
        self.errors_from(n, cfg, None).map(|(e, _)| e)
    }

    /// Errors on each grid in turn. When a grid doubles the previous one the
    /// coarse solution, interpolated, is the starting iterate.
    pub fn study(&self, ns: &[usize], cfg: &SolverConfig) -> Result<Vec<MmsErrors>, SolverError> {
        let mut out = Vec::with_capacity(ns.len());
        let mut prev: Option<SolutionState> = None;
        for &n in ns {
            let init = prev.take().filter(|s| 2 * s.nx == n).map(|s| s.refined());
            let (e, s) = self.errors_from(n, cfg, init)?;
            out.push(e);
            prev = Some(s);
        }
        Ok(out)
    }

    fn errors_from(&self, n: usize, cfg: &SolverConfig, init: Option<SolutionState>) -> Result<(MmsErrors, SolutionState), SolverError> {
        let pb = self.problem(n);
        let s = pb.solve(cfg, init)?;
        let g = &pb.grid;
        let rms = |sq: f64, count: usize| (sq / count as f64).sqrt();
        let (mut eu, mut nu) = (0.0, 0);
        for j in 0..n {
            for i in 1..n {
                eu += (s.u_at(i, j) - self.u(i as f64 * g.dx, g.yc(j))).powi(2);
                nu += 1;
            }
        }
        let (mut ev, mut nv) = (0.0, 0);
        for j in 1..n {
            for i in 0..n {
                ev += (s.v_at(i, j) - self.v(g.xc(i), j as f64 * g.dy)).powi(2);
                nv += 1;
            }
        }
        let et: f64 = (0..n * n).map(|c| (s.t[c] - self.t(g.xc(c % n), g.yc(c / n))).powi(2)).sum();
        let peak = self.a * PI;
        let errors = MmsErrors {
            n,
            u: rms(eu, nu) / peak,
            v: rms(ev, nv) / peak,
            t: rms(et, n * n) / self.b,
            iterations: s.iterations,
        };
        Ok((errors, s))
    }
}

/// Least-squares slope of log(error) against log(h).
pub fn observed_order(ns: &[usize], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ns.iter().zip(errors).map(|(&n, &e)| ((1.0 / n as f64).ln(), e.ln())).collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::AdvectionScheme;

    const M: Manufactured = Manufactured { a: 0.7, p: 1.3, b: 0.5, rho: 1.2, mu: 0.4, k: 0.6, cp: 1.1 };

    fn d(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-4;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn d2(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-3;
        (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    }

    #[test]
    fn exact_field_is_solenoidal_and_vanishes_on_walls() {
        for &(x, y) in &[(0.1, 0.2), (0.37, 0.81), (0.5, 0.5), (0.93, 0.05)] {
            let div = d(|s| M.u(s, y), x) + d(|s| M.v(x, s), y);
            assert!(div.abs() < 1e-7, "div {div} at ({x}, {y})");
        }
        for s in [0.0, 0.25, 0.6, 1.0] {
            for (x, y) in [(0.0, s), (1.0, s), (s, 0.0), (s, 1.0)] {
                assert!(M.u(x, y).abs() < 1e-14 && M.v(x, y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn forcing_matches_finite_differences() {
        let p = |x: f64, y: f64| M.p * (PI * x).cos() * (PI * y).cos();
        for &(x, y) in &[(0.21, 0.33), (0.64, 0.47), (0.88, 0.71)] {
            let (u, v) = (M.u(x, y), M.v(x, y));
            let lap = |f: &dyn Fn(f64, f64) -> f64| d2(|s| f(s, y), x) + d2(|s| f(x, s), y);
            let fx = M.rho * (u * d(|s| M.u(s, y), x) + v * d(|s| M.u(x, s), y)) + d(|s| p(s, y), x)
                - M.mu * lap(&|a, b| M.u(a, b));
            let fy = M.rho * (u * d(|s| M.v(s, y), x) + v * d(|s| M.v(x, s), y)) + d(|s| p(x, s), y)
                - M.mu * lap(&|a, b| M.v(a, b));
            let q = M.rho * M.cp * (u * d(|s| M.t(s, y), x) + v * d(|s| M.t(x, s), y)) - M.k * lap(&|a, b| M.t(a, b));
            let close = |a: f64, b: f64| (a - b).abs() < 1e-5 * b.abs().max(1.0);
            assert!(close(fx, M.fx(x, y)), "fx {fx} vs {}", M.fx(x, y));
            assert!(close(fy, M.fy(x, y)), "fy {fy} vs {}", M.fy(x, y));
            assert!(close(q, M.q(x, y)), "q {q} vs {}", M.q(x, y));
        }
    }

    #[test]
    fn observed_order_recovers_power_laws() {
        let ns = [16, 32, 64];
        for order in [1.0, 2.0, 2.5] {
            let e: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-order)).collect();
            assert!((observed_order(&ns, &e) - order).abs() < 1e-12);
        }
    }

    #[test]
    fn sequenced_study_matches_cold_starts() {
        let cfg = SolverConfig {
            advection_scheme: AdvectionScheme::CentralDeferred,
            velocity_relaxation: 0.95,
            pressure_relaxation: 0.05,
            outer_tolerance: 1e-10,
            max_outer_iterations: 20_000,
            ..SolverConfig::default()
        };
        let m = Manufactured { a: 1.0, p: 1.0, b: 0.5, rho: 1.0, mu: 1.0, k: 1.0, cp: 1.0 };
        let seq = m.study(&[8, 16], &cfg).unwrap();
        let cold = m.errors(16, &cfg).unwrap();
        assert!((seq[1].u - cold.u).abs() < 1e-3 * cold.u, "{} vs {}", seq[1].u, cold.u);
        assert!((seq[1].t - cold.t).abs() < 1e-3 * cold.t);
        assert!(seq[1].u < seq[0].u);
    }
}
