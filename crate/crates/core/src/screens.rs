//! Polynomial screens built by moment cancellation.
//!
//! A charge in element `e` is screened by a combination of the `(q+1)^3`
//! order-`q` nodal functions whose nodes lie in `e` (interior and faces).
//! Their support is the `3 x 3 x 3` element block around `e`. The
//! coefficients are chosen so that every `(l, m, n)`-moment about the charge
//! with `0 <= l, m, n <= q` vanishes except the monopole, which is one.
//!
//! Coefficients are indexed x-fastest: `kappa = i + (q+1) j + (q+1)^2 k`.

use nalgebra::{DMatrix, DVector};

use crate::charges::ChargeSystem;
use crate::error::{Error, Result};
use crate::mesh::{gauss_rule, Basis1D, Mesh, Vec3};

/// Value of the global 1D screen basis function of host node `i` at `x`,
/// measured from the host element center. Nonzero on `[-3h/2, 3h/2]` at most.
pub fn screen_basis_1d(basis: &Basis1D, i: usize, x: f64) -> f64 {
    let h = basis.h();
    let q = basis.order();
    let half = 0.5 * h;
    if x.abs() <= half {
        basis.eval(i, x).unwrap_or(0.0)
    } else if i == 0 && x < -half && x >= -3.0 * half {
        basis.eval(q, x + h).unwrap_or(0.0)
    } else if i == q && x > half && x <= 3.0 * half {
        basis.eval(0, x - h).unwrap_or(0.0)
    } else {
        0.0
    }
}

/// Support segments of host node `i` on the 3-element line.
fn support_segments(q: usize, h: f64, i: usize) -> Vec<(f64, f64)> {
    let mut segs = vec![(-0.5 * h, 0.5 * h)];
    if i == 0 {
        segs.push((-1.5 * h, -0.5 * h));
    }
    if i == q {
        segs.push((0.5 * h, 1.5 * h));
    }
    segs
}

/// `int (x - shift)^l omega_i(x) dx` over the support of `omega_i`.
pub fn shifted_moment_1d(basis: &Basis1D, i: usize, l: usize, shift: f64) -> f64 {
    let q = basis.order();
    let rule = gauss_rule(q + l);
    support_segments(q, basis.h(), i)
        .into_iter()
        .map(|(a, b)| {
            rule.mapped(a, b)
                .integrate(|x| (x - shift).powi(l as i32) * screen_basis_1d(basis, i, x))
        })
        .sum()
}

/// Centered 1D moments `w[l][i] = int x^l omega_i(x) dx` for `l, i = 0..=q`.
pub fn centered_moments_1d(q: usize, h: f64) -> DMatrix<f64> {
    let basis = Basis1D::new(q, h);
    DMatrix::from_fn(q + 1, q + 1, |l, i| shifted_moment_1d(&basis, i, l, 0.0))
}

/// Nodal weights of one screen.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenCoefficients {
    pub q: usize,
    pub delta: Vec3,
    pub c: Vec<f64>,
}

impl ScreenCoefficients {
    pub fn n_sc(&self) -> usize {
        self.c.len()
    }
}

pub fn kappa(q: usize, i: usize, j: usize, k: usize) -> usize {
    let n = q + 1;
    i + n * (j + n * k)
}

pub fn unkappa(q: usize, kappa: usize) -> [usize; 3] {
    let n = q + 1;
    [kappa % n, (kappa / n) % n, kappa / (n * n)]
}

/// Screen solver for a fixed `(q, h)`: the inverted 1D centered moment
/// matrix shared by every charge on the mesh.
#[derive(Debug, Clone)]
pub struct ScreenSolver {
    q: usize,
    h: f64,
    inverse: DMatrix<f64>,
    basis: Basis1D,
}

impl ScreenSolver {
    pub fn new(q: usize, h: f64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Config("screen order must be at least 1".into()));
        }
        let moments = centered_moments_1d(q, h);
        let inverse = moments
            .try_inverse()
            .ok_or_else(|| Error::Config(format!("1D moment matrix singular for q={q}")))?;
        Ok(Self { q, h, inverse, basis: Basis1D::new(q, h) })
    }

    pub fn for_mesh(mesh: &Mesh) -> Result<Self> {
        Self::new(mesh.q, mesh.h)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn basis(&self) -> &Basis1D {
        &self.basis
    }

    /// 1D weights solving `sum_i w_i omega_i^(l) = delta^l`.
    pub fn weights_1d(&self, delta: f64) -> Vec<f64> {
        let n = self.q + 1;
        let mut f = vec![1.0; n];
        for l in 1..n {
            f[l] = f[l - 1] * delta;
        }
        (0..n)
            .map(|i| (0..n).map(|l| self.inverse[(i, l)] * f[l]).sum())
            .collect()
    }

    pub fn solve(&self, delta: Vec3) -> ScreenCoefficients {
        let wx = self.weights_1d(delta[0]);
        let wy = self.weights_1d(delta[1]);
        let wz = self.weights_1d(delta[2]);
        let n = self.q + 1;
        let mut c = Vec::with_capacity(n * n * n);
        for z in &wz {
            for y in &wy {
                let yz = y * z;
                for x in &wx {
                    c.push(x * yz);
                }
            }
        }
        ScreenCoefficients { q: self.q, delta, c }
    }
}

/// Separable screen solve using the pre-factorized 1D moment systems.
pub fn solve_screen_fast(delta: Vec3, solver: &ScreenSolver) -> Result<ScreenCoefficients> {
    check_offset(delta, solver.h)?;
    Ok(solver.solve(delta))
}

fn check_offset(delta: Vec3, h: f64) -> Result<()> {
    let limit = 0.5 * h * (1.0 + 1e-12);
    if delta.iter().any(|d| !d.is_finite() || d.abs() > limit) {
        return Err(Error::Input(format!("offset {delta:?} outside host element of size {h}")));
    }
    Ok(())
}

/// Screen basis functions of one host element together with the centered
/// moment matrix `C`, computed by 3D quadrature over the 27-element support.
#[derive(Debug, Clone)]
pub struct ScreenBasisSet {
    pub q: usize,
    pub h: f64,
    basis: Basis1D,
    centered: DMatrix<f64>,
}

impl ScreenBasisSet {
    pub fn new(q: usize, h: f64) -> Self {
        let basis = Basis1D::new(q, h);
        let n = q + 1;
        let n_sc = n * n * n;
        let rule = gauss_rule(2 * q);
        // Quadrature points and per-axis basis values on the 3-element line.
        let mut pts = Vec::new();
        for e in [-1.0, 0.0, 1.0] {
            let seg = rule.mapped((e - 0.5) * h, (e + 0.5) * h);
            for (&x, &w) in seg.nodes.iter().zip(&seg.weights) {
                let vals: Vec<f64> = (0..n).map(|i| screen_basis_1d(&basis, i, x)).collect();
                pts.push((x, w, vals));
            }
        }
        let mut centered = DMatrix::zeros(n_sc, n_sc);
        for (z, wz, vz) in &pts {
            for (y, wy, vy) in &pts {
                for (x, wx, vx) in &pts {
                    let w = wx * wy * wz;
                    for kap in 0..n_sc {
                        let [i, j, k] = unkappa(q, kap);
                        let psi = vx[i] * vy[j] * vz[k];
                        if psi == 0.0 {
                            continue;
                        }
                        let mut zp = 1.0;
                        for mn in 0..n {
                            let mut yp = 1.0;
                            for mm in 0..n {
                                let mut xp = 1.0;
                                for ml in 0..n {
                                    centered[(kappa(q, ml, mm, mn), kap)] += w * psi * xp * yp * zp;
                                    xp *= x;
                                }
                                yp *= y;
                            }
                            zp *= z;
                        }
                    }
                }
            }
        }
        Self { q, h, basis, centered }
    }

    /// Centered moment matrix; row `mu = l + (q+1) m + (q+1)^2 n`, column `kappa`.
    pub fn centered_matrix(&self) -> &DMatrix<f64> {
        &self.centered
    }

    pub fn basis(&self) -> &Basis1D {
        &self.basis
    }

    /// Right-hand side `f_mu = dx^l dy^m dz^n` of the centered system.
    pub fn centered_rhs(&self, delta: Vec3) -> DVector<f64> {
        let q = self.q;
        let n = q + 1;
        DVector::from_fn(n * n * n, |mu, _| {
            let [l, m, k] = unkappa(q, mu);
            delta[0].powi(l as i32) * delta[1].powi(m as i32) * delta[2].powi(k as i32)
        })
    }

    /// Moment matrix about the charge: entry `(mu, kappa)` is the
    /// `(l, m, n)`-moment of `psi_kappa` taken about `delta`.
    pub fn moment_matrix(&self, delta: Vec3) -> DMatrix<f64> {
        let q = self.q;
        let n = q + 1;
        let axis: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|d| {
                (0..n)
                    .map(|l| (0..n).map(|i| shifted_moment_1d(&self.basis, i, l, delta[d])).collect())
                    .collect()
            })
            .collect();
        DMatrix::from_fn(n * n * n, n * n * n, |mu, kap| {
            let [l, m, k] = unkappa(q, mu);
            let [i, j, kk] = unkappa(q, kap);
            axis[0][l][i] * axis[1][m][j] * axis[2][k][kk]
        })
    }
}

/// Dense solve of the full moment system about the charge.
pub fn solve_screen_dense(delta: Vec3, basis: &ScreenBasisSet) -> Result<ScreenCoefficients> {
    check_offset(delta, basis.h)?;
    let a = basis.moment_matrix(delta);
    let n_sc = a.nrows();
    let mut rhs = DVector::zeros(n_sc);
    rhs[0] = 1.0;
    let c = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Config(format!("moment matrix singular for q={}", basis.q)))?;
    Ok(ScreenCoefficients { q: basis.q, delta, c: c.iter().copied().collect() })
}

/// `(l, m, n)`-moment of the screen about its charge, integrated exactly.
pub fn screen_moment(screen: &ScreenCoefficients, basis: &Basis1D, exps: [usize; 3]) -> f64 {
    let q = screen.q;
    let n = q + 1;
    let axis: Vec<Vec<f64>> = (0..3)
        .map(|d| (0..n).map(|i| shifted_moment_1d(basis, i, exps[d], screen.delta[d])).collect())
        .collect();
    screen
        .c
        .iter()
        .enumerate()
        .map(|(kap, &c)| {
            let [i, j, k] = unkappa(q, kap);
            c * axis[0][i] * axis[1][j] * axis[2][k]
        })
        .sum()
}

/// Screen density sampled at the order-`q` nodes of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDensity {
    /// Nodes per direction.
    pub n: usize,
    pub q: usize,
    pub values: Vec<f64>,
}

/// Scatter `Q_i c(delta_i)` onto the host-element nodes of every charge.
pub fn assign_to_mesh(
    charges: &ChargeSystem,
    mesh: &Mesh,
    solver: &ScreenSolver,
) -> Result<MeshDensity> {
    let screens = solve_screens(charges, mesh, solver)?;
    assign_screens(charges, mesh, &screens)
}

/// Screen coefficients of every located charge.
pub fn solve_screens(
    charges: &ChargeSystem,
    mesh: &Mesh,
    solver: &ScreenSolver,
) -> Result<Vec<ScreenCoefficients>> {
    if !charges.is_located() {
        return Err(Error::Input("charges must be located before assignment".into()));
    }
    if solver.q() != mesh.q || (solver.h() - mesh.h).abs() > 1e-14 * mesh.h {
        return Err(Error::Config("screen solver does not match mesh".into()));
    }
    Ok(charges.locations().iter().map(|loc| solver.solve(loc.offset)).collect())
}

/// Scatter precomputed screens, one per charge, onto the mesh.
pub fn assign_screens(
    charges: &ChargeSystem,
    mesh: &Mesh,
    screens: &[ScreenCoefficients],
) -> Result<MeshDensity> {
    if !charges.is_located() || screens.len() != charges.len() {
        return Err(Error::Input("one screen per located charge required".into()));
    }
    let q = mesh.q;
    let n = mesh.nodes_per_dim(q);
    let mut values = vec![0.0; n * n * n];
    for ((&qi, loc), screen) in charges.charges.iter().zip(charges.locations()).zip(screens) {
        if !mesh.periodic() && loc.element.iter().any(|&e| e == 0 || e + 1 == mesh.n_el) {
            return Err(Error::Input(format!(
                "screen of charge in element {:?} leaves the bounded domain",
                loc.element
            )));
        }
        if screen.q != q {
            return Err(Error::Input("screen order does not match mesh".into()));
        }
        scatter_screen(&mut values, mesh, loc.element, qi, &screen.c);
    }
    Ok(MeshDensity { n, q, values })
}

pub(crate) fn scatter_screen(values: &mut [f64], mesh: &Mesh, element: [usize; 3], scale: f64, c: &[f64]) {
    let q = mesh.q;
    let n = mesh.nodes_per_dim(q);
    for k in 0..=q {
        let gz = mesh.node_index_1d(q, element[2], k);
        for j in 0..=q {
            let gy = mesh.node_index_1d(q, element[1], j);
            for i in 0..=q {
                let gx = mesh.node_index_1d(q, element[0], i);
                values[gx + n * (gy + n * gz)] += scale * c[kappa(q, i, j, k)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q1_centered_moments_closed_form() {
        let m = centered_moments_1d(1, 1.0);
        assert!((m[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((m[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((m[(1, 0)] + 0.5).abs() < 1e-15);
        assert!((m[(1, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn moment_symmetries() {
        for q in 1..=4 {
            let h = 0.3;
            let m = centered_moments_1d(q, h);
            // Host element contributes h; each end node adds its tail.
            let basis = Basis1D::new(q, h);
            let tail = gauss_rule(q).mapped(-0.5 * h, 0.5 * h).integrate(|x| basis.eval(0, x).unwrap());
            let total: f64 = (0..=q).map(|i| m[(0, i)]).sum();
            assert!((total - h - 2.0 * tail).abs() < 1e-14);
            for i in 0..=q {
                assert!((m[(1, i)] + m[(1, q - i)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn q1_zero_offset_is_uniform() {
        let s = ScreenSolver::new(1, 1.0).unwrap();
        let c = solve_screen_fast([0.0; 3], &s).unwrap();
        for v in c.c {
            assert!((v - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_offset_rhs() {
        let b = ScreenBasisSet::new(3, 1.0);
        let f = b.centered_rhs([0.0; 3]);
        assert_eq!(f[0], 1.0);
        assert!(f.iter().skip(1).all(|&v| v == 0.0));
    }

    #[test]
    fn rhs_in_kappa_order() {
        let b = ScreenBasisSet::new(2, 1.0);
        let d = [0.1, -0.2, 0.3];
        let f = b.centered_rhs(d);
        assert!((f[1] - 0.1).abs() < 1e-16);
        assert!((f[3] + 0.2).abs() < 1e-16);
        assert!((f[9] - 0.3).abs() < 1e-16);
        assert!((f[kappa(2, 2, 1, 1)] - 0.01 * -0.2 * 0.3).abs() < 1e-16);
    }

    #[test]
    fn offset_outside_element_rejected() {
        let s = ScreenSolver::new(2, 1.0).unwrap();
        assert!(solve_screen_fast([0.6, 0.0, 0.0], &s).is_err());
    }

    #[test]
    fn first_uncancelled_moment_is_nonzero() {
        for q in 1..=4 {
            let s = ScreenSolver::new(q, 1.0).unwrap();
            let c = s.solve([0.1, -0.2, 0.05]);
            let m = screen_moment(&c, s.basis(), [q + 1, 0, 0]);
            assert!(m.abs() > 1e-6, "q={q} residual moment {m}");
        }
    }
}
