//! Finite-volume assembly of the momentum, pressure-correction and energy
//! equations on the staggered grid.
//!
//! Convection uses the advective (non-conservative) upwind form so that every
//! matrix is an M-matrix regardless of how well continuity is converged; the
//! central scheme is applied by deferred correction on top of it. Rows are
//! built in the correction-friendly form `A φ = b` with unrelaxed diagonal
//! `a_p` kept alongside for the SIMPLE `d` coefficients.

use crate::numerics::{MatrixBuilder, SparseMatrix};

use super::problem::{FlowProblem, ThermalBc, INACTIVE};
use super::AdvectionScheme;

/// Assembled linear system plus per-row data used for residual scaling.
pub(crate) struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Unrelaxed diagonal coefficient of each row.
    pub a_p: Vec<f64>,
    /// Sum of the magnitudes of every term in the row at the current iterate.
    pub magnitude: Vec<f64>,
}

enum Neighbour {
    Unknown { id: usize, value: f64 },
    Fixed(f64),
}

impl Neighbour {
    fn value(&self) -> f64 {
        match *self {
            Neighbour::Unknown { value, .. } | Neighbour::Fixed(value) => value,
        }
    }
}

struct Row {
    entries: Vec<(usize, f64)>,
    a_p: f64,
    b: f64,
    magnitude: f64,
}

impl Row {
    fn new() -> Self {
        Self { entries: Vec::with_capacity(5), a_p: 0.0, b: 0.0, magnitude: 0.0 }
    }

    /// Diffusive conductance `d` and outward convective flux `f_out` through
    /// one face towards `nb`.
    fn face(&mut self, nb: Neighbour, d: f64, f_out: f64, phi_p: f64, scheme: AdvectionScheme) {
        let a_nb = d + (-f_out).max(0.0);
        self.a_p += a_nb;
        let phi_n = nb.value();
        match nb {
            Neighbour::Unknown { id, value } => {
                self.entries.push((id, -a_nb));
                self.magnitude += (a_nb * value).abs();
            }
            Neighbour::Fixed(value) => {
                self.b += a_nb * value;
                self.magnitude += (a_nb * value).abs();
            }
        }
        if scheme == AdvectionScheme::CentralDeferred && f_out != 0.0 {
            let upwind = if f_out > 0.0 { phi_p } else { phi_n };
            let correction = -f_out * (0.5 * (phi_p + phi_n) - upwind);
            self.b += correction;
            self.magnitude += correction.abs();
        }
    }

    fn source(&mut self, s: f64) {
        self.b += s;
        self.magnitude += s.abs();
    }

    fn finish(
        mut self,
        row: usize,
        phi_p: f64,
        alpha: f64,
        builder: &mut MatrixBuilder,
        sys: &mut (Vec<f64>, Vec<f64>, Vec<f64>),
    ) {
        self.magnitude += (self.a_p * phi_p).abs();
        let diag = self.a_p / alpha;
        let b = self.b + (diag - self.a_p) * phi_p;
        builder.push(row, diag);
        for (c, v) in self.entries {
            builder.push(c, v);
        }
        builder.finish_row().expect("assembled rows are well formed");
        sys.0.push(b);
        sys.1.push(self.a_p);
        sys.2.push(self.magnitude);
    }
}

fn finish_system(builder: MatrixBuilder, sys: (Vec<f64>, Vec<f64>, Vec<f64>)) -> LinearSystem {
    LinearSystem {
        matrix: builder.build().expect("at least one row"),
        rhs: sys.0,
        a_p: sys.1,
        magnitude: sys.2,
    }
}

/// Current iterate as seen by the assembly routines.
pub(crate) struct FieldsRef<'a> {
    pub t: &'a [f64],
    pub p: &'a [f64],
    pub u: &'a [f64],
    pub v: &'a [f64],
}

/// x-momentum on the active x-faces.
pub(crate) fn assemble_u(
    pb: &FlowProblem,
    f: &FieldsRef,
    scheme: AdvectionScheme,
    alpha: f64,
) -> Option<LinearSystem> {
    let faces = &pb.faces;
    if faces.u_list.is_empty() {
        return None;
    }
    let fp = pb.fluid_props.expect("active faces imply a fluid");
    let g = &pb.grid;
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    let (rho, mu) = (fp.rho0, fp.mu);
    let fluid = |i: usize, j: usize| pb.is_fluid[j * nx + i];
    let unknown = |i: usize, j: usize| {
        let id = faces.u_unknown[pb.uidx(i, j)];
        if id == INACTIVE {
            Neighbour::Fixed(0.0)
        } else {
            Neighbour::Unknown { id, value: f.u[pb.uidx(i, j)] }
        }
    };
    let n = faces.u_list.len();
    let mut builder = MatrixBuilder::with_capacity(n, 5 * n);
    let mut sys = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (row, &(i, j)) in faces.u_list.iter().enumerate() {
        let up = f.u[pb.uidx(i, j)];
        let mut r = Row::new();

        let ue = f.u[pb.uidx(i + 1, j)];
        r.face(unknown(i + 1, j), mu * dy / dx, rho * dy * 0.5 * (up + ue), up, scheme);
        let uw = f.u[pb.uidx(i - 1, j)];
        r.face(unknown(i - 1, j), mu * dy / dx, -rho * dy * 0.5 * (up + uw), up, scheme);

        // Tangential neighbours: a wall lies half a cell away when both cells
        // across the face are solid (or outside the domain).
        if j + 1 < ny && (fluid(i - 1, j + 1) || fluid(i, j + 1)) {
            let fl = rho * dx * 0.5 * (f.v[pb.vidx(i - 1, j + 1)] + f.v[pb.vidx(i, j + 1)]);
            r.face(unknown(i, j + 1), mu * dx / dy, fl, up, scheme);
        } else {
            r.face(Neighbour::Fixed(0.0), 2.0 * mu * dx / dy, 0.0, up, scheme);
        }
        if j > 0 && (fluid(i - 1, j - 1) || fluid(i, j - 1)) {
            let fl = -rho * dx * 0.5 * (f.v[pb.vidx(i - 1, j)] + f.v[pb.vidx(i, j)]);
            r.face(unknown(i, j - 1), mu * dx / dy, fl, up, scheme);
        } else {
            r.face(Neighbour::Fixed(0.0), 2.0 * mu * dx / dy, 0.0, up, scheme);
        }

        let (cw, ce) = (g.idx(i - 1, j), g.idx(i, j));
        r.source((f.p[cw] - f.p[ce]) * dy);
        let theta = 0.5 * (f.t[cw] + f.t[ce]) - pb.t_ref;
        let mut body = -rho * fp.beta * theta * pb.gravity[0];
        if let Some(sf) = &pb.sampled_forcing {
            body += sf.u[pb.uidx(i, j)];
        }
        r.source(body * dx * dy);
        r.finish(row, up, alpha, &mut builder, &mut sys);
    }
    Some(finish_system(builder, sys))
}

/// y-momentum on the active y-faces.
pub(crate) fn assemble_v(
    pb: &FlowProblem,
    f: &FieldsRef,
    scheme: AdvectionScheme,
    alpha: f64,
) -> Option<LinearSystem> {
    let faces = &pb.faces;
    if faces.v_list.is_empty() {
        return None;
    }
    let fp = pb.fluid_props.expect("active faces imply a fluid");
    let g = &pb.grid;
    let (nx, dx, dy) = (g.nx, g.dx, g.dy);
    let (rho, mu) = (fp.rho0, fp.mu);
    let fluid = |i: usize, j: usize| pb.is_fluid[j * nx + i];
    let unknown = |i: usize, j: usize| {
        let id = faces.v_unknown[pb.vidx(i, j)];
        if id == INACTIVE {
            Neighbour::Fixed(0.0)
        } else {
            Neighbour::Unknown { id, value: f.v[pb.vidx(i, j)] }
        }
    };
    let n = faces.v_list.len();
    let mut builder = MatrixBuilder::with_capacity(n, 5 * n);
    let mut sys = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (row, &(i, j)) in faces.v_list.iter().enumerate() {
        let vp = f.v[pb.vidx(i, j)];
        let mut r = Row::new();

        let vn = f.v[pb.vidx(i, j + 1)];
        r.face(unknown(i, j + 1), mu * dx / dy, rho * dx * 0.5 * (vp + vn), vp, scheme);
        let vs = f.v[pb.vidx(i, j - 1)];
        r.face(unknown(i, j - 1), mu * dx / dy, -rho * dx * 0.5 * (vp + vs), vp, scheme);

        if i + 1 < nx && (fluid(i + 1, j - 1) || fluid(i + 1, j)) {
            let fl = rho * dy * 0.5 * (f.u[pb.uidx(i + 1, j - 1)] + f.u[pb.uidx(i + 1, j)]);
            r.face(unknown(i + 1, j), mu * dy / dx, fl, vp, scheme);
        } else {
            r.face(Neighbour::Fixed(0.0), 2.0 * mu * dy / dx, 0.0, vp, scheme);
        }
        if i > 0 && (fluid(i - 1, j - 1) || fluid(i - 1, j)) {
            let fl = -rho * dy * 0.5 * (f.u[pb.uidx(i, j - 1)] + f.u[pb.uidx(i, j)]);
            r.face(unknown(i - 1, j), mu * dy / dx, fl, vp, scheme);
        } else {
            r.face(Neighbour::Fixed(0.0), 2.0 * mu * dy / dx, 0.0, vp, scheme);
        }

        let (cs, cn) = (g.idx(i, j - 1), g.idx(i, j));
        r.source((f.p[cs] - f.p[cn]) * dx);
        let theta = 0.5 * (f.t[cs] + f.t[cn]) - pb.t_ref;
        let mut body = -rho * fp.beta * theta * pb.gravity[1];
        if let Some(sf) = &pb.sampled_forcing {
            body += sf.v[pb.vidx(i, j)];
        }
        r.source(body * dx * dy);
        r.finish(row, vp, alpha, &mut builder, &mut sys);
    }
    Some(finish_system(builder, sys))
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Energy equation for θ = T − T_ref on every cell.
pub(crate) fn assemble_energy(
    pb: &FlowProblem,
    f: &FieldsRef,
    scheme: AdvectionScheme,
    alpha: f64,
) -> LinearSystem {
    let g = &pb.grid;
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    let rho_cp = pb.fluid_props.map_or(0.0, |p| p.rho_cp());
    let faces = &pb.faces;
    let theta = |c: usize| f.t[c] - pb.t_ref;
    let n = g.len();
    let mut builder = MatrixBuilder::with_capacity(n, 5 * n);
    let mut sys = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));

    let boundary = |bc: &ThermalBc, x: f64, y: f64| -> Option<f64> {
        match bc {
            ThermalBc::Fixed(t) => Some(t - pb.t_ref),
            ThermalBc::Profile(func) => Some(func(x, y) - pb.t_ref),
            ThermalBc::Adiabatic => None,
        }
    };

    for j in 0..ny {
        for i in 0..nx {
            let c = g.idx(i, j);
            let tp = theta(c);
            let kp = pb.k[c];
            let mut r = Row::new();
            let (xc, yc) = (g.xc(i), g.yc(j));

            // (neighbour cell, conductance area, distance, face flux)
            let interior = |r: &mut Row, nb: usize, area: f64, dist: f64, vel: f64| {
                let d = harmonic(kp, pb.k[nb]) * area / dist;
                r.face(Neighbour::Unknown { id: nb, value: theta(nb) }, d, rho_cp * vel * area, tp, scheme);
            };
            let wall = |r: &mut Row, bc: &ThermalBc, area: f64, dist: f64, x: f64, y: f64| {
                if let Some(tb) = boundary(bc, x, y) {
                    r.face(Neighbour::Fixed(tb), kp * area / (0.5 * dist), 0.0, tp, scheme);
                }
            };
            let face_u = |i: usize| {
                let k = pb.uidx(i, j);
                if faces.u_unknown[k] == INACTIVE {
                    0.0
                } else {
                    f.u[k]
                }
            };
            let face_v = |j: usize| {
                let k = pb.vidx(i, j);
                if faces.v_unknown[k] == INACTIVE {
                    0.0
                } else {
                    f.v[k]
                }
            };

            if i + 1 < nx {
                interior(&mut r, c + 1, dy, dx, face_u(i + 1));
            } else {
                wall(&mut r, &pb.bc.east, dy, dx, g.width(), yc);
            }
            if i > 0 {
                interior(&mut r, c - 1, dy, dx, -face_u(i));
            } else {
                wall(&mut r, &pb.bc.west, dy, dx, 0.0, yc);
            }
            if j + 1 < ny {
                interior(&mut r, c + nx, dx, dy, face_v(j + 1));
            } else {
                wall(&mut r, &pb.bc.north, dx, dy, xc, g.height());
            }
            if j > 0 {
                interior(&mut r, c - nx, dx, dy, -face_v(j));
            } else {
                wall(&mut r, &pb.bc.south, dx, dy, xc, 0.0);
            }

            let mut s = pb.heat[c];
            if let Some(sf) = &pb.sampled_forcing {
                s += sf.cell[c];
            }
            r.source(s * dx * dy);
            if r.a_p == 0.0 {
                // Fully insulated isolated cell: keep the system regular.
                r.a_p = kp * (dx / dy + dy / dx) * 1e-12;
            }
            r.finish(c, tp, alpha, &mut builder, &mut sys);
        }
    }
    finish_system(builder, sys)
}

/// SIMPLE pressure-correction equation from the predicted velocities.
/// Returns the matrix and right-hand side (negative mass imbalance, kg/s per
/// unit depth), or `None` when there is no pressure unknown.
pub(crate) fn assemble_pressure_correction(
    pb: &FlowProblem,
    u: &[f64],
    v: &[f64],
    d_u: &[f64],
    d_v: &[f64],
) -> Option<(SparseMatrix, Vec<f64>)> {
    let faces = &pb.faces;
    if faces.p_list.is_empty() {
        return None;
    }
    let rho = pb.fluid_props.expect("pressure unknowns imply a fluid").rho0;
    let g = &pb.grid;
    let (nx, dx, dy) = (g.nx, g.dx, g.dy);
    let n = faces.p_list.len();
    let mut builder = MatrixBuilder::with_capacity(n, 5 * n);
    let mut rhs = Vec::with_capacity(n);
    for (row, &c) in faces.p_list.iter().enumerate() {
        let (i, j) = (c % nx, c / nx);
        let mut entries = Vec::with_capacity(4);
        let mut diag = 0.0;
        let mut imbalance = 0.0;
        // (face index into u or v, unknown id, neighbour cell, area, outward sign, is_u)
        let links = [
            (pb.uidx(i + 1, j), c + 1, dy, 1.0, true),
            (pb.uidx(i, j), c.wrapping_sub(1), dy, -1.0, true),
            (pb.vidx(i, j + 1), c + nx, dx, 1.0, false),
            (pb.vidx(i, j), c.wrapping_sub(nx), dx, -1.0, false),
        ];
        for (k, nb, area, sign, is_u) in links {
            let (id, vel, d) = if is_u {
                (faces.u_unknown[k], u[k], &d_u)
            } else {
                (faces.v_unknown[k], v[k], &d_v)
            };
            if id == INACTIVE {
                continue;
            }
            let a = rho * d[id] * area;
            diag += a;
            entries.push((faces.p_unknown[nb], -a));
            imbalance += sign * rho * vel * area;
        }
        builder.push(row, diag);
        for (col, val) in entries {
            builder.push(col, val);
        }
        builder.finish_row().expect("pressure rows are well formed");
        rhs.push(-imbalance);
    }
    Some((builder.build().expect("non-empty"), rhs))
}
