//! Potentials on a bounded cube with prescribed boundary values.
//!
//! The smooth part solves `-lap Phi_sm = 4 pi rho_m` with boundary data
//! `g - Phi_sr`, so that `Phi_sm + Phi_sr` takes the value `g` on the
//! boundary.

use crate::charges::ChargeSystem;
use crate::error::{Error, Result};
use crate::fem::{assemble_rhs, dirichlet_adjust, eval_lattice_field, mesh_lattice, DirichletProblem, Lattice1D, SolveReport};
use crate::mesh::{Mesh, Vec3};
use crate::screens::{assign_to_mesh, ScreenSolver};
use crate::shortrange::{CutoffPolicy, PotentialTable, ShortRange};

#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub lattice: Lattice1D,
    /// Order-`p` nodal smooth potential.
    pub phi_smooth: Vec<f64>,
    /// Short-range potential at the boundary nodes (zero at interior nodes).
    pub boundary_short: Vec<f64>,
    pub report: SolveReport,
}

impl DirichletSolution {
    pub fn n(&self) -> usize {
        self.lattice.n_nodes()
    }

    pub fn node_position(&self, idx: [usize; 3]) -> Vec3 {
        idx.map(|i| self.lattice.node_position(i))
    }

    pub fn eval_smooth(&self, mesh: &Mesh, point: Vec3) -> f64 {
        eval_lattice_field(&self.lattice, &self.phi_smooth, mesh.basis_p(), point)
    }

    /// `Phi_sm + Phi_sr` at `point`, with both parts evaluated afresh.
    pub fn eval_total(&self, mesh: &Mesh, sr: &ShortRange, charges: &ChargeSystem, point: Vec3) -> Result<f64> {
        Ok(self.eval_smooth(mesh, point) + sr.eval_point(charges, point)?)
    }
}

/// Solve the bounded problem for located `charges` on a bounded `mesh`,
/// with boundary potential `g`.
pub fn solve_dirichlet(
    charges: &ChargeSystem,
    mesh: &Mesh,
    tables: &PotentialTable,
    policy: CutoffPolicy,
    g: &dyn Fn(Vec3) -> f64,
    tol: f64,
) -> Result<DirichletSolution> {
    if mesh.periodic() {
        return Err(Error::Mode("Dirichlet solve needs a bounded mesh".into()));
    }
    let solver = ScreenSolver::for_mesh(mesh)?;
    let density = assign_to_mesh(charges, mesh, &solver)?;
    let rhs = assemble_rhs(&density, mesh, false)?;
    let problem = DirichletProblem::new(mesh_lattice(mesh, mesh.p))?;
    let sr = ShortRange::new(mesh, charges, tables, policy)?;

    let n = problem.n();
    let mut g_nodes = vec![0.0; n * n * n];
    let mut short = vec![0.0; n * n * n];
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                if !problem.is_boundary([ix, iy, iz]) {
                    continue;
                }
                let i = ix + n * (iy + n * iz);
                let x = [ix, iy, iz].map(|k| problem.lattice.node_position(k));
                g_nodes[i] = g(x);
                short[i] = sr.eval_point(charges, x)?;
            }
        }
    }
    let boundary = dirichlet_adjust(mesh, &g_nodes, &short)?;
    let (phi_smooth, report) = problem.solve(&rhs.values, &boundary, tol)?;
    Ok(DirichletSolution { lattice: problem.lattice, phi_smooth, boundary_short: short, report })
}
