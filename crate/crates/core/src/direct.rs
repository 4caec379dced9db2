//! Potential of a single screen density by direct adaptive quadrature.
//!
//! The screen density of an order-`q` separable screen factorizes as
//! `f_x(x) f_y(y) f_z(z)`, each factor a piecewise polynomial on the three
//! elements `[-3h/2, 3h/2]` around the host center. The Coulomb integral is
//! split into those 27 element boxes, and each box is subdivided until its
//! diameter is at most `ratio` times its distance to the evaluation point.

use crate::mesh::{gauss_legendre, Basis1D, Vec3};
use crate::screens::{screen_basis_1d, ScreenSolver};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Largest accepted `diameter / distance` for a leaf box.
    pub ratio: f64,
    /// Gauss points per direction in each leaf.
    pub points: usize,
    /// Subdivision depth limit; leaves at this depth are accepted as is.
    pub max_depth: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { ratio: 0.5, points: 10, max_depth: 10 }
    }
}

/// Screen density written per axis as `sum_i w[d][i] omega_i(x_d)`.
#[derive(Debug, Clone)]
pub struct SeparableScreen {
    basis: Basis1D,
    weights: [Vec<f64>; 3],
}

impl SeparableScreen {
    pub fn new(solver: &ScreenSolver, delta: Vec3) -> Self {
        let weights = [solver.weights_1d(delta[0]), solver.weights_1d(delta[1]), solver.weights_1d(delta[2])];
        Self { basis: solver.basis().clone(), weights }
    }

    pub fn h(&self) -> f64 {
        self.basis.h()
    }

    /// Density factor along axis `d` at `x` (measured from the host center).
    pub fn profile(&self, d: usize, x: f64) -> f64 {
        self.weights[d]
            .iter()
            .enumerate()
            .map(|(i, w)| w * screen_basis_1d(&self.basis, i, x))
            .sum()
    }

    pub fn density(&self, x: Vec3) -> f64 {
        self.profile(0, x[0]) * self.profile(1, x[1]) * self.profile(2, x[2])
    }

    /// Whether the density factor along `d` vanishes on element `seg`
    /// (`0, 1, 2` for left, host, right).
    fn segment_is_zero(&self, d: usize, seg: usize) -> bool {
        let q = self.basis.order();
        match seg {
            0 => self.weights[d][0] == 0.0,
            2 => self.weights[d][q] == 0.0,
            _ => self.weights[d].iter().all(|&w| w == 0.0),
        }
    }
}

/// `int rho(x) / |y - x| dx` for the screen density, with `y` measured from
/// the host element center.
pub fn screen_potential(screen: &SeparableScreen, y: Vec3, opts: &QuadratureOptions) -> f64 {
    let h = screen.h();
    let rule = gauss_legendre(opts.points);
    let mut total = 0.0;
    for sz in 0..3 {
        for sy in 0..3 {
            for sx in 0..3 {
                let segs = [sx, sy, sz];
                if (0..3).any(|d| screen.segment_is_zero(d, segs[d])) {
                    continue;
                }
                let lo: Vec3 = [0, 1, 2].map(|d| (segs[d] as f64 - 1.5) * h);
                let hi: Vec3 = [0, 1, 2].map(|d| lo[d] + h);
                total += integrate_box(screen, y, lo, hi, &rule.nodes, &rule.weights, opts, 0);
            }
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn integrate_box(
    screen: &SeparableScreen,
    y: Vec3,
    lo: Vec3,
    hi: Vec3,
    nodes: &[f64],
    weights: &[f64],
    opts: &QuadratureOptions,
    depth: usize,
) -> f64 {
    let half: Vec3 = [0, 1, 2].map(|d| 0.5 * (hi[d] - lo[d]));
    let mid: Vec3 = [0, 1, 2].map(|d| 0.5 * (hi[d] + lo[d]));
    let radius = (half[0] * half[0] + half[1] * half[1] + half[2] * half[2]).sqrt();
    let center_dist = ((y[0] - mid[0]).powi(2) + (y[1] - mid[1]).powi(2) + (y[2] - mid[2]).powi(2)).sqrt();
    let dist = center_dist - radius;
    if depth < opts.max_depth && (dist <= 0.0 || 2.0 * radius > opts.ratio * dist) {
        let mut s = 0.0;
        for corner in 0..8 {
            let mut a = lo;
            let mut b = hi;
            for d in 0..3 {
                if (corner >> d) & 1 == 0 {
                    b[d] = mid[d];
                } else {
                    a[d] = mid[d];
                }
            }
            s += integrate_box(screen, y, a, b, nodes, weights, opts, depth + 1);
        }
        return s;
    }
    let n = nodes.len();
    let mut xs = [[0.0; 32]; 3];
    let mut fw = [[0.0; 32]; 3];
    assert!(n <= 32, "at most 32 Gauss points per direction");
    for d in 0..3 {
        for k in 0..n {
            let x = mid[d] + half[d] * nodes[k];
            xs[d][k] = y[d] - x;
            fw[d][k] = half[d] * weights[k] * screen.profile(d, x);
        }
    }
    let mut s = 0.0;
    for kz in 0..n {
        let dz2 = xs[2][kz] * xs[2][kz];
        for ky in 0..n {
            let dyz2 = dz2 + xs[1][ky] * xs[1][ky];
            let wyz = fw[1][ky] * fw[2][kz];
            let mut line = 0.0;
            for kx in 0..n {
                let r2 = dyz2 + xs[0][kx] * xs[0][kx];
                line += fw[0][kx] / r2.sqrt();
            }
            s += wyz * line;
        }
    }
    s
}
