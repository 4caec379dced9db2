//! Order-`p` finite element Poisson solves on uniform tensor-product meshes.
//!
//! On a uniform mesh the Galerkin stiffness matrix with tensor-product
//! Lagrange elements is exactly the Kronecker sum
//! `K (x) M (x) M + M (x) K (x) M + M (x) M (x) K` of 1D stiffness `K` and
//! mass `M` matrices. [`TensorStiffness`] applies it in that form;
//! [`assemble_stiffness`] builds the same matrix element by element in CSR
//! form for small meshes and cross-checks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{gauss_rule, Basis1D, Mesh, Vec3};
use crate::screens::MeshDensity;
use crate::tensor::{apply_along_axis, apply_tensor3, dense_along_axis, Dense1D, Sparse1D};

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Uniform 1D element lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice1D {
    pub n_el: usize,
    pub order: usize,
    pub h: f64,
    pub periodic: bool,
    /// Coordinate of the left edge of element 0.
    pub origin: f64,
}

impl Lattice1D {
    pub fn n_nodes(&self) -> usize {
        if self.periodic {
            self.n_el * self.order
        } else {
            self.n_el * self.order + 1
        }
    }

    pub fn node(&self, e: usize, a: usize) -> usize {
        let i = e * self.order + a;
        if self.periodic {
            i % (self.n_el * self.order)
        } else {
            i
        }
    }

    pub fn node_position(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.h / self.order as f64
    }

    pub fn with_order(&self, order: usize) -> Self {
        Self { order, ..*self }
    }

    /// Element containing `x` and the offset from its center; `x` is wrapped
    /// for periodic lattices and clamped to the last element otherwise.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let len = self.n_el as f64 * self.h;
        let mut t = x - self.origin;
        if self.periodic {
            t -= len * (t / len).floor();
            if t >= len {
                t = 0.0;
            }
        }
        let e = ((t / self.h).floor().max(0.0) as usize).min(self.n_el - 1);
        (e, t - (e as f64 + 0.5) * self.h)
    }
}

fn element_matrices(basis: &Basis1D) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = basis.order();
    let h = basis.h();
    let rule = gauss_rule(2 * k).mapped(-0.5 * h, 0.5 * h);
    let n = k + 1;
    let mut stiff = DMatrix::zeros(n, n);
    let mut mass = DMatrix::zeros(n, n);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = basis.values(x);
        let d = basis.derivatives(x);
        for a in 0..n {
            for b in 0..n {
                stiff[(a, b)] += w * d[a] * d[b];
                mass[(a, b)] += w * v[a] * v[b];
            }
        }
    }
    (stiff, mass)
}

fn assemble_1d(lattice: &Lattice1D, elem: &DMatrix<f64>) -> Sparse1D {
    let n = lattice.n_nodes();
    let mut m = Sparse1D::zeros(n, n);
    for e in 0..lattice.n_el {
        for a in 0..=lattice.order {
            for b in 0..=lattice.order {
                m.add(lattice.node(e, a), lattice.node(e, b), elem[(a, b)]);
            }
        }
    }
    m.finalize();
    m
}

/// Global 1D stiffness and mass matrices.
pub fn stiffness_and_mass_1d(lattice: &Lattice1D) -> (Sparse1D, Sparse1D) {
    let basis = Basis1D::new(lattice.order, lattice.h);
    let (ke, me) = element_matrices(&basis);
    (assemble_1d(lattice, &ke), assemble_1d(lattice, &me))
}

/// Matrix evaluating an order-`from.order` field at the nodes of `to`
/// (same elements). Exact when `to.order >= from.order` restricted to
/// polynomials but defined for any pair.
pub fn interpolation_1d(from: &Lattice1D, to: &Lattice1D) -> Sparse1D {
    let basis = Basis1D::new(from.order, from.h);
    let target = Basis1D::new(to.order, to.h);
    let mut m = Sparse1D::zeros(to.n_nodes(), from.n_nodes());
    let mut done = vec![false; to.n_nodes()];
    for e in 0..from.n_el {
        for a in 0..=to.order {
            let r = to.node(e, a);
            if done[r] {
                continue;
            }
            done[r] = true;
            let vals = basis.values(target.nodes()[a]);
            for (b, &v) in vals.iter().enumerate() {
                if v != 0.0 {
                    m.add(r, from.node(e, b), v);
                }
            }
        }
    }
    m.finalize();
    m
}

/// Linear operator interface used by the Krylov solver.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

/// Stiffness operator in Kronecker-sum form over an `n^3` node cube.
#[derive(Debug, Clone)]
pub struct TensorStiffness {
    pub n: usize,
    pub stiffness: Sparse1D,
    pub mass: Sparse1D,
}

impl TensorStiffness {
    pub fn new(stiffness: Sparse1D, mass: Sparse1D) -> Self {
        assert_eq!(stiffness.n_rows, mass.n_rows);
        Self { n: stiffness.n_rows, stiffness, mass }
    }

    pub fn for_lattice(lattice: &Lattice1D) -> Self {
        let (k, m) = stiffness_and_mass_1d(lattice);
        Self::new(k, m)
    }

    pub fn for_mesh(mesh: &Mesh) -> Self {
        Self::for_lattice(&mesh_lattice(mesh, mesh.p))
    }
}

impl LinearOperator for TensorStiffness {
    fn dim(&self) -> usize {
        self.n * self.n * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let d = [n, n, n];
        let len = n * n * n;
        let mut mx = vec![0.0; len];
        let mut kx = vec![0.0; len];
        apply_along_axis(&self.mass, 0, d, x, &mut mx);
        apply_along_axis(&self.stiffness, 0, d, x, &mut kx);
        let mut s = vec![0.0; len];
        let mut t = vec![0.0; len];
        apply_along_axis(&self.mass, 1, d, &kx, &mut s);
        apply_along_axis(&self.stiffness, 1, d, &mx, &mut t);
        s.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        apply_along_axis(&self.mass, 1, d, &mx, &mut t);
        apply_along_axis(&self.mass, 2, d, &s, y);
        apply_along_axis(&self.stiffness, 2, d, &t, &mut kx);
        y.iter_mut().zip(&kx).for_each(|(a, b)| *a += b);
    }

    fn diagonal(&self) -> Vec<f64> {
        let n = self.n;
        let k = self.stiffness.diagonal();
        let m = self.mass.diagonal();
        let mut out = Vec::with_capacity(n * n * n);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    out.push(k[ix] * m[iy] * m[iz] + m[ix] * k[iy] * m[iz] + m[ix] * m[iy] * k[iz]);
                }
            }
        }
        out
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).all(|k| self.get(self.cols[k], r) == self.vals[k])
        })
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[r] = s;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// Order-`order` lattice matching the mesh along one axis.
pub fn mesh_lattice(mesh: &Mesh, order: usize) -> Lattice1D {
    Lattice1D { n_el: mesh.n_el, order, h: mesh.h, periodic: mesh.periodic(), origin: 0.0 }
}

/// Reference element stiffness matrix of order `p` on a cube of edge `h`,
/// integrated with a tensor Gauss rule.
pub fn element_stiffness_3d(p: usize, h: f64) -> DMatrix<f64> {
    let basis = Basis1D::new(p, h);
    let rule = gauss_rule(2 * p).mapped(-0.5 * h, 0.5 * h);
    let n = p + 1;
    let nloc = n * n * n;
    let vals: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| basis.values(x)).collect();
    let ders: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| basis.derivatives(x)).collect();
    let mut ke = DMatrix::zeros(nloc, nloc);
    let mut grad = vec![[0.0; 3]; nloc];
    for (gz, &wz) in rule.weights.iter().enumerate() {
        for (gy, &wy) in rule.weights.iter().enumerate() {
            for (gx, &wx) in rule.weights.iter().enumerate() {
                let w = wx * wy * wz;
                for c in 0..n {
                    for b in 0..n {
                        for a in 0..n {
                            grad[a + n * (b + n * c)] = [
                                ders[gx][a] * vals[gy][b] * vals[gz][c],
                                vals[gx][a] * ders[gy][b] * vals[gz][c],
                                vals[gx][a] * vals[gy][b] * ders[gz][c],
                            ];
                        }
                    }
                }
                for i in 0..nloc {
                    for j in 0..nloc {
                        let g = grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1] + grad[i][2] * grad[j][2];
                        ke[(i, j)] += w * g;
                    }
                }
            }
        }
    }
    ke
}

/// Element-by-element Galerkin assembly of the order-`p` stiffness matrix
/// with periodic (or bounded) node numbering.
pub fn assemble_stiffness(mesh: &Mesh, p: usize) -> Result<CsrMatrix> {
    if p < 1 {
        return Err(Error::Input("stiffness order must be at least 1".into()));
    }
    let lat = mesh_lattice(mesh, p);
    let n1 = lat.n_nodes();
    let ndof = n1 * n1 * n1;
    let ke = element_stiffness_3d(p, mesh.h);
    let n = p + 1;
    let nloc = n * n * n;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ndof];
    let mut gidx = vec![0usize; nloc];
    for ez in 0..mesh.n_el {
        for ey in 0..mesh.n_el {
            for ex in 0..mesh.n_el {
                for c in 0..n {
                    for b in 0..n {
                        for a in 0..n {
                            gidx[a + n * (b + n * c)] =
                                lat.node(ex, a) + n1 * (lat.node(ey, b) + n1 * lat.node(ez, c));
                        }
                    }
                }
                for i in 0..nloc {
                    let row = &mut rows[gidx[i]];
                    for j in 0..nloc {
                        row.push((gidx[j], ke[(i, j)]));
                    }
                }
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(ndof + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for mut row in rows {
        row.sort_by_key(|e| e.0);
        let mut it = row.into_iter().peekable();
        while let Some((c, mut v)) = it.next() {
            while let Some(&(c2, v2)) = it.peek() {
                if c2 != c {
                    break;
                }
                v += v2;
                it.next();
            }
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    let mut csr = CsrMatrix { n: ndof, row_ptr, cols, vals };
    symmetrize(&mut csr);
    Ok(csr)
}

/// Average `A` and `A^T` entrywise so symmetry holds bit-for-bit regardless
/// of summation order.
fn symmetrize(a: &mut CsrMatrix) {
    let mut updates = Vec::new();
    for r in 0..a.n {
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            let c = a.cols[k];
            if c > r {
                let v = 0.5 * (a.vals[k] + a.get(c, r));
                updates.push((r, c, v));
            }
        }
    }
    for (r, c, v) in updates {
        for (rr, cc) in [(r, c), (c, r)] {
            let range = a.row_ptr[rr]..a.row_ptr[rr + 1];
            if let Ok(k) = a.cols[range.clone()].binary_search(&cc) {
                a.vals[range.start + k] = v;
            }
        }
    }
}

/// Preconditioner interface for [`pcg`].
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(op: &dyn LinearOperator) -> Self {
        let inv_diag = op
            .diagonal()
            .into_iter()
            .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Self { inv_diag }
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

/// Fast diagonalization of a Kronecker-sum operator: with `K V = M V L` and
/// `V^T M V = I`, the inverse is `(V (x) V (x) V) D^-1 (V (x) V (x) V)^T`
/// where `D = L_x + L_y + L_z`. Null modes (the constant for periodic
/// operators) are mapped to zero.
#[derive(Debug, Clone)]
pub struct FastDiagonalization {
    n: usize,
    v: Dense1D,
    inv_eig: Vec<f64>,
}

impl FastDiagonalization {
    pub fn new(op: &TensorStiffness) -> Result<Self> {
        let k = op.stiffness.to_dense();
        let m = op.mass.to_dense();
        let n = op.n;
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Config("1D mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("mass Cholesky factor is singular".into()))?;
        let c = &l_inv * &k * l_inv.transpose();
        let c = 0.5 * (&c + c.transpose());
        let eig = nalgebra::SymmetricEigen::new(c);
        let v = l_inv.transpose() * &eig.eigenvectors;
        let lam = eig.eigenvalues.as_slice().to_vec();
        let scale = lam.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut inv_eig = Vec::with_capacity(n * n * n);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let d = lam[ix] + lam[iy] + lam[iz];
                    inv_eig.push(if d.abs() <= 1e-10 * scale { 0.0 } else { 1.0 / d });
                }
            }
        }
        Ok(Self { n, v: Dense1D::from_nalgebra(&v), inv_eig })
    }
}

impl Preconditioner for FastDiagonalization {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let len = self.n * self.n * self.n;
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        dense_along_axis(&self.v, true, 0, r, &mut a);
        dense_along_axis(&self.v, true, 1, &a, &mut b);
        dense_along_axis(&self.v, true, 2, &b, &mut a);
        a.iter_mut().zip(&self.inv_eig).for_each(|(x, d)| *x *= d);
        dense_along_axis(&self.v, false, 0, &a, &mut b);
        dense_along_axis(&self.v, false, 1, &b, &mut a);
        dense_along_axis(&self.v, false, 2, &a, z);
    }
}

/// Preconditioner selection for mesh solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PreconditionerKind {
    Identity,
    Jacobi,
    FastDiagonalization,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target `||A x - b|| <= tol ||b||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Remove the constant component from the residual and every iterate.
    pub project_constants: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 5000, project_constants: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Flexible preconditioned conjugate gradients for `A x = b`, starting from
/// the contents of `x`. The reported residual is recomputed from scratch.
pub fn pcg(
    op: &dyn LinearOperator,
    pre: &dyn Preconditioner,
    b: &[f64],
    x: &mut [f64],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveReport { iterations: 0, relative_residual: 0.0 });
    }
    let project = |v: &mut [f64]| {
        if opts.project_constants {
            remove_mean(v);
        }
    };
    project(x);
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    project(&mut r);
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut r_prev = r.clone();
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut iterations = 0;
    while res > opts.tol && iterations < opts.max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        r_prev.copy_from_slice(&r);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project(x);
        project(&mut r);
        iterations += 1;
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= opts.tol {
            break;
        }
        pre.apply(&r, &mut z);
        project(&mut z);
        let rz_new = dot(&r, &z);
        let flex: f64 = z.iter().zip(r.iter().zip(&r_prev)).map(|(zi, (ri, rp))| zi * (ri - rp)).sum();
        let beta = flex / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    op.apply(x, &mut ap);
    let mut true_r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    project(&mut true_r);
    let relative_residual = dot(&true_r, &true_r).sqrt() / bnorm;
    if relative_residual > opts.tol {
        return Err(Error::Convergence { iterations, residual: relative_residual });
    }
    Ok(SolveReport { iterations, relative_residual })
}

/// Load vector of a screen density, in order-`p` nodes of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub n: usize,
    pub values: Vec<f64>,
    /// Uniform density removed before assembly (zero when none).
    pub background: f64,
}

/// `b_j = 4 pi int (rho_m - background) u_j dV` (Gaussian units, so that a
/// unit point charge has potential `1/R`): interpolate the order-`q`
/// density to order-`p` nodes (exact, `q < p`) and apply the order-`p`
/// mass operator. With `neutralize`, the uniform density `Q_tot / L^3` is
/// subtracted first.
pub fn assemble_rhs(density: &MeshDensity, mesh: &Mesh, neutralize: bool) -> Result<LoadVector> {
    if density.q != mesh.q || density.n != mesh.nodes_per_dim(mesh.q) {
        return Err(Error::Input("density does not match mesh".into()));
    }
    let lat_q = mesh_lattice(mesh, mesh.q);
    let lat_p = mesh_lattice(mesh, mesh.p);
    let interp = interpolation_1d(&lat_q, &lat_p);
    let mut rho_p = apply_tensor3(&interp, &density.values);
    let (_, mass) = stiffness_and_mass_1d(&lat_p);
    let mut background = 0.0;
    if neutralize {
        let integral = integrate_nodal(&rho_p, &mass);
        background = integral / mesh.length().powi(3);
        rho_p.iter_mut().for_each(|v| *v -= background);
    }
    let mut values = apply_tensor3(&mass, &rho_p);
    values.iter_mut().for_each(|v| *v *= FOUR_PI);
    Ok(LoadVector { n: lat_p.n_nodes(), values, background })
}

/// `int f dV` for a nodal field, using mass-matrix row sums.
pub fn integrate_nodal(values: &[f64], mass: &Sparse1D) -> f64 {
    let w: Vec<f64> = mass.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
    let n = w.len();
    let mut s = 0.0;
    for iz in 0..n {
        for iy in 0..n {
            let wyz = w[iy] * w[iz];
            let row = &values[n * (iy + n * iz)..n * (iy + n * iz) + n];
            s += wyz * row.iter().zip(&w).map(|(v, wx)| v * wx).sum::<f64>();
        }
    }
    s
}

/// Order-`p` nodal potential over the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothField {
    pub n: usize,
    pub p: usize,
    pub values: Vec<f64>,
    /// Volume average of the field.
    pub gauge_mean: f64,
}

/// Solve the periodic problem `A phi = b` with constants projected out.
pub fn solve_periodic(
    op: &dyn LinearOperator,
    pre: &dyn Preconditioner,
    b: &LoadVector,
    mesh: &Mesh,
    tol: f64,
    max_iter: usize,
) -> Result<(SmoothField, SolveReport)> {
    if !mesh.periodic() {
        return Err(Error::Mode("periodic solve requested on a bounded mesh".into()));
    }
    let total: f64 = b.values.iter().sum();
    let scale: f64 = b.values.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    if total.abs() > 1e-10 * scale {
        return Err(Error::Gauge(format!(
            "load vector sums to {total:.3e}; enable background correction for charged systems"
        )));
    }
    let mut x = vec![0.0; b.values.len()];
    let opts = SolverOptions { tol, max_iter, project_constants: true };
    let report = pcg(op, pre, &b.values, &mut x, &opts)?;
    let (_, mass) = stiffness_and_mass_1d(&mesh_lattice(mesh, mesh.p));
    let gauge_mean = integrate_nodal(&x, &mass) / mesh.length().powi(3);
    Ok((SmoothField { n: b.n, p: mesh.p, values: x, gauge_mean }, report))
}

/// Evaluate an order-`p` nodal field on a lattice cube at a point given in
/// lattice coordinates.
pub fn eval_lattice_field(lattice: &Lattice1D, values: &[f64], basis: &Basis1D, point: Vec3) -> f64 {
    let n1 = lattice.n_nodes();
    let k = lattice.order;
    let mut idx = [[0usize; 8]; 3];
    let mut w = [[0.0f64; 8]; 3];
    assert!(k < 8, "order too large for evaluation buffer");
    for d in 0..3 {
        let (e, t) = lattice.locate(point[d]);
        basis.eval_all(t, &mut w[d][..=k]);
        for a in 0..=k {
            idx[d][a] = lattice.node(e, a);
        }
    }
    let mut s = 0.0;
    for c in 0..=k {
        for b in 0..=k {
            let base = n1 * (idx[1][b] + n1 * idx[2][c]);
            let wbc = w[1][b] * w[2][c];
            let mut line = 0.0;
            for a in 0..=k {
                line += w[0][a] * values[base + idx[0][a]];
            }
            s += wbc * line;
        }
    }
    s
}

/// Evaluate the smooth potential through its order-`p` element expansion.
pub fn eval_smooth(field: &SmoothField, mesh: &Mesh, point: Vec3) -> f64 {
    let lat = mesh_lattice(mesh, field.p);
    eval_lattice_field(&lat, &field.values, mesh.basis_p(), point)
}

/// Interior-node Dirichlet problem on a bounded lattice cube, factorized once
/// for repeated solves.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub lattice: Lattice1D,
    full: TensorStiffness,
    interior: TensorStiffness,
    fdm: FastDiagonalization,
}

impl DirichletProblem {
    pub fn new(lattice: Lattice1D) -> Result<Self> {
        if lattice.periodic {
            return Err(Error::Mode("Dirichlet problem needs a bounded lattice".into()));
        }
        let full = TensorStiffness::for_lattice(&lattice);
        let keep: Vec<usize> = (1..lattice.n_nodes() - 1).collect();
        let interior = TensorStiffness::new(full.stiffness.restrict(&keep), full.mass.restrict(&keep));
        let fdm = FastDiagonalization::new(&interior)?;
        Ok(Self { lattice, full, interior, fdm })
    }

    pub fn n(&self) -> usize {
        self.lattice.n_nodes()
    }

    pub fn operator(&self) -> &TensorStiffness {
        &self.full
    }

    pub fn is_boundary(&self, idx: [usize; 3]) -> bool {
        let n = self.n();
        idx.iter().any(|&i| i == 0 || i == n - 1)
    }

    /// Solve with full-lattice load `b` and Dirichlet data taken from the
    /// boundary entries of `boundary`. Returns the full nodal solution.
    pub fn solve(&self, b: &[f64], boundary: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        let n = self.n();
        let ni = n - 2;
        let len = n * n * n;
        assert_eq!(b.len(), len);
        assert_eq!(boundary.len(), len);
        let mut g = vec![0.0; len];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    if self.is_boundary([ix, iy, iz]) {
                        let i = ix + n * (iy + n * iz);
                        g[i] = boundary[i];
                    }
                }
            }
        }
        let mut ag = vec![0.0; len];
        self.full.apply(&g, &mut ag);
        let mut rhs = vec![0.0; ni * ni * ni];
        for iz in 0..ni {
            for iy in 0..ni {
                for ix in 0..ni {
                    let i = (ix + 1) + n * ((iy + 1) + n * (iz + 1));
                    rhs[ix + ni * (iy + ni * iz)] = b[i] - ag[i];
                }
            }
        }
        let mut x = vec![0.0; rhs.len()];
        let opts = SolverOptions { tol, max_iter: 200, project_constants: false };
        let report = pcg(&self.interior, &self.fdm, &rhs, &mut x, &opts)?;
        let mut out = g;
        for iz in 0..ni {
            for iy in 0..ni {
                for ix in 0..ni {
                    out[(ix + 1) + n * ((iy + 1) + n * (iz + 1))] = x[ix + ni * (iy + ni * iz)];
                }
            }
        }
        Ok((out, report))
    }
}

/// Boundary values for the mesh solve: `g - phi_sr` on the boundary nodes.
pub fn dirichlet_adjust(mesh: &Mesh, g: &[f64], phi_short: &[f64]) -> Result<Vec<f64>> {
    if mesh.periodic() {
        return Err(Error::Mode("Dirichlet adjustment is undefined on a periodic mesh".into()));
    }
    if g.len() != phi_short.len() {
        return Err(Error::Input("boundary data and short-range values differ in length".into()));
    }
    Ok(g.iter().zip(phi_short).map(|(a, b)| a - b).collect())
}

/// Boundary node multi-indices of a bounded order-`p` mesh lattice.
pub fn boundary_nodes(mesh: &Mesh) -> Vec<[usize; 3]> {
    let n = mesh.nodes_per_dim(mesh.p);
    let mut out = Vec::new();
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                if [ix, iy, iz].iter().any(|&i| i == 0 || i == n - 1) {
                    out.push([ix, iy, iz]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trilinear_element_stiffness_closed_form() {
        // Unit cube, trilinear: diagonal 1/3, edge neighbours 0,
        // face diagonals -1/12, body diagonal -1/12.
        let ke = element_stiffness_3d(1, 1.0);
        let expected = |i: usize, j: usize| {
            let diff = (0..3).filter(|&d| (i >> d) & 1 != (j >> d) & 1).count();
            match diff {
                0 => 1.0 / 3.0,
                1 => 0.0,
                2 => -1.0 / 12.0,
                _ => -1.0 / 12.0,
            }
        };
        for i in 0..8 {
            for j in 0..8 {
                assert!((ke[(i, j)] - expected(i, j)).abs() < 1e-14, "({i},{j}) = {}", ke[(i, j)]);
            }
        }
    }

    #[test]
    fn assembled_matches_tensor_operator() {
        let mesh = Mesh::new(1.3, 3, 1).unwrap();
        let csr = assemble_stiffness(&mesh, 3).unwrap();
        assert!(csr.is_symmetric());
        let op = TensorStiffness::for_mesh(&mesh);
        assert_eq!(op.dim(), csr.dim());
        let x: Vec<f64> = (0..op.dim()).map(|i| ((i * 37) % 23) as f64 / 23.0 - 0.4).collect();
        let mut y1 = vec![0.0; op.dim()];
        let mut y2 = vec![0.0; op.dim()];
        op.apply(&x, &mut y1);
        csr.apply(&x, &mut y2);
        for i in 0..y1.len() {
            assert!((y1[i] - y2[i]).abs() < 1e-12);
        }
        let ones = vec![1.0; op.dim()];
        csr.apply(&ones, &mut y2);
        assert!(y2.iter().all(|v| v.abs() < 1e-12));
        for (a, b) in op.diagonal().iter().zip(csr.diagonal()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pcg_zero_rhs() {
        let mesh = Mesh::new(1.0, 3, 1).unwrap();
        let op = TensorStiffness::for_mesh(&mesh);
        let b = vec![0.0; op.dim()];
        let mut x = vec![1.0; op.dim()];
        let r = pcg(&op, &IdentityPreconditioner, &b, &mut x, &SolverOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn preconditioners_share_fixed_point() {
        let mesh = Mesh::new(1.0, 3, 1).unwrap();
        let op = TensorStiffness::for_mesh(&mesh);
        let n = op.dim();
        let mut b: Vec<f64> = (0..n).map(|i| ((i * 29) % 31) as f64 - 15.0).collect();
        remove_mean(&mut b);
        let opts = SolverOptions { tol: 1e-11, max_iter: 5000, project_constants: true };
        let mut x1 = vec![0.0; n];
        let mut x2 = vec![0.0; n];
        let mut x3 = vec![0.0; n];
        pcg(&op, &IdentityPreconditioner, &b, &mut x1, &opts).unwrap();
        pcg(&op, &JacobiPreconditioner::new(&op), &b, &mut x2, &opts).unwrap();
        let r = pcg(&op, &FastDiagonalization::new(&op).unwrap(), &b, &mut x3, &opts).unwrap();
        assert!(r.iterations <= 3);
        let scale = x1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            assert!((x1[i] - x2[i]).abs() < 1e-8 * scale);
            assert!((x1[i] - x3[i]).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn incompatible_rhs_is_a_gauge_error() {
        let mesh = Mesh::new(1.0, 3, 1).unwrap();
        let op = TensorStiffness::for_mesh(&mesh);
        let b = LoadVector { n: 9, values: vec![1.0; op.dim()], background: 0.0 };
        let r = solve_periodic(&op, &IdentityPreconditioner, &b, &mesh, 1e-7, 100);
        assert!(matches!(r, Err(Error::Gauge(_))));
    }

    #[test]
    fn interpolation_is_exact_for_lower_order() {
        let from = Lattice1D { n_el: 4, order: 2, h: 0.5, periodic: false, origin: 0.0 };
        let to = from.with_order(4);
        let m = interpolation_1d(&from, &to);
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x;
        let src: Vec<f64> = (0..from.n_nodes()).map(|i| f(from.node_position(i))).collect();
        for r in 0..to.n_nodes() {
            let v: f64 = m.rows[r].iter().map(|&(c, w)| w * src[c]).sum();
            assert!((v - f(to.node_position(r))).abs() < 1e-13);
        }
    }

    #[test]
    fn dirichlet_adjust_mode() {
        let mesh = Mesh::new(1.0, 3, 1).unwrap();
        assert!(matches!(dirichlet_adjust(&mesh, &[0.0], &[0.0]), Err(Error::Mode(_))));
        let bounded = Mesh::bounded(1.0, 3, 1).unwrap();
        let v = dirichlet_adjust(&bounded, &[1.0, 2.0], &[0.5, -1.0]).unwrap();
        assert_eq!(v, vec![0.5, 3.0]);
    }

    #[test]
    fn dirichlet_solve_reproduces_harmonic_polynomial() {
        // u = x^2 - y^2 + z is harmonic and lies in the order-3 space, so the
        // discrete solution with exact boundary data is exact.
        let lat = Lattice1D { n_el: 3, order: 3, h: 0.4, periodic: false, origin: -0.6 };
        let prob = DirichletProblem::new(lat).unwrap();
        let n = prob.n();
        let u = |x: f64, y: f64, z: f64| x * x - y * y + z;
        let mut exact = vec![0.0; n * n * n];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    exact[ix + n * (iy + n * iz)] =
                        u(lat.node_position(ix), lat.node_position(iy), lat.node_position(iz));
                }
            }
        }
        let b = vec![0.0; n * n * n];
        let (sol, rep) = prob.solve(&b, &exact, 1e-12).unwrap();
        assert!(rep.relative_residual <= 1e-12);
        for i in 0..sol.len() {
            assert!((sol[i] - exact[i]).abs() < 1e-10);
        }
    }
}
