//! Uniform hexahedral meshes, 1D Lagrange bases and Gauss-Legendre quadrature.
//!
//! Elements are cubes of edge `h`. Element `e` along an axis covers
//! `[e h, (e + 1) h)` and has its center at `(e + 1/2) h`. Order-`k` nodes
//! are equispaced within each element, so a periodic mesh with `n_el`
//! elements per direction carries `(k n_el)^3` distinct nodes and a bounded
//! one `(k n_el + 1)^3`.

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Cubic cell `[0, L)^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicDomain {
    pub length: f64,
    pub periodic: bool,
}

impl PeriodicDomain {
    pub fn new(length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Input(format!("box length must be positive, got {length}")));
        }
        Ok(Self { length, periodic: true })
    }

    /// Wrap a coordinate into `[0, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.length;
        let w = x - l * (x / l).floor();
        if w >= l {
            0.0
        } else {
            w
        }
    }
}

/// One-dimensional Lagrange basis of order `k` on the reference element
/// `[-h/2, h/2]` with equispaced nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis1D {
    order: usize,
    h: f64,
    nodes: Vec<f64>,
    denominators: Vec<f64>,
}

impl Basis1D {
    pub fn new(order: usize, h: f64) -> Self {
        assert!(order >= 1, "basis order must be at least 1");
        let nodes: Vec<f64> = (0..=order)
            .map(|i| -0.5 * h + h * i as f64 / order as f64)
            .collect();
        let denominators = (0..=order)
            .map(|i| {
                (0..=order)
                    .filter(|&j| j != i)
                    .map(|j| nodes[i] - nodes[j])
                    .product()
            })
            .collect();
        Self { order, h, nodes, denominators }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value of the `i`-th nodal function at local coordinate `x`.
    pub fn eval(&self, i: usize, x: f64) -> Result<f64> {
        if i > self.order {
            return Err(Error::Input(format!(
                "basis index {i} out of range for order {}",
                self.order
            )));
        }
        Ok(self.eval_unchecked(i, x))
    }

    fn eval_unchecked(&self, i: usize, x: f64) -> f64 {
        let mut num = 1.0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            if j != i {
                num *= x - xj;
            }
        }
        num / self.denominators[i]
    }

    /// All nodal function values at `x`, written into `out`.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.order + 1);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.eval_unchecked(i, x);
        }
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.order + 1];
        self.eval_all(x, &mut v);
        v
    }

    /// Derivatives of all nodal functions at `x`.
    pub fn derivatives(&self, x: f64) -> Vec<f64> {
        let n = self.order + 1;
        (0..n)
            .map(|i| {
                let mut sum = 0.0;
                for m in 0..n {
                    if m == i {
                        continue;
                    }
                    let mut prod = 1.0;
                    for j in 0..n {
                        if j != i && j != m {
                            prod *= x - self.nodes[j];
                        }
                    }
                    sum += prod;
                }
                sum / self.denominators[i]
            })
            .collect()
    }
}

/// Gauss-Legendre rule on `[a, b]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree integrated exactly.
    pub degree: usize,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    /// Same rule transported to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> QuadratureRule {
        let (a0, b0) = self.interval;
        let scale = (b - a) / (b0 - a0);
        QuadratureRule {
            nodes: self.nodes.iter().map(|&x| a + (x - a0) * scale).collect(),
            weights: self.weights.iter().map(|&w| w * scale).collect(),
            degree: self.degree,
            interval: (a, b),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss-Legendre rule on `[-1, 1]` exact for polynomials up to `degree`,
/// using `ceil((degree + 1) / 2)` points.
pub fn gauss_rule(degree: usize) -> QuadratureRule {
    let n = degree / 2 + 1;
    gauss_legendre(n)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureRule { nodes, weights, degree: 2 * n - 1, interval: (-1.0, 1.0) }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Element index and center offset of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub element: [usize; 3],
    pub offset: Vec3,
}

/// Uniform cubic mesh with a screen basis of order `q` and a mesh basis of
/// order `p = q + 2`.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: PeriodicDomain,
    pub n_el: usize,
    pub h: f64,
    pub q: usize,
    pub p: usize,
    basis_q: Basis1D,
    basis_p: Basis1D,
}

impl Mesh {
    /// Periodic mesh of `n_el^3` elements on `[0, length)^3`.
    pub fn new(length: f64, n_el: usize, q: usize) -> Result<Self> {
        let domain = PeriodicDomain::new(length)?;
        Self::with_domain(domain, n_el, q)
    }

    /// Non-periodic mesh on `[0, length]^3`, used for Dirichlet problems.
    pub fn bounded(length: f64, n_el: usize, q: usize) -> Result<Self> {
        let mut domain = PeriodicDomain::new(length)?;
        domain.periodic = false;
        Self::with_domain(domain, n_el, q)
    }

    fn with_domain(domain: PeriodicDomain, n_el: usize, q: usize) -> Result<Self> {
        if n_el == 0 {
            return Err(Error::Input("mesh needs at least one element per direction".into()));
        }
        if q == 0 {
            return Err(Error::Input("screen order q must be at least 1".into()));
        }
        let h = domain.length / n_el as f64;
        let p = q + 2;
        Ok(Self {
            domain,
            n_el,
            h,
            q,
            p,
            basis_q: Basis1D::new(q, h),
            basis_p: Basis1D::new(p, h),
        })
    }

    pub fn periodic(&self) -> bool {
        self.domain.periodic
    }

    pub fn length(&self) -> f64 {
        self.domain.length
    }

    pub fn basis_q(&self) -> &Basis1D {
        &self.basis_q
    }

    pub fn basis_p(&self) -> &Basis1D {
        &self.basis_p
    }

    pub fn n_elements(&self) -> usize {
        self.n_el * self.n_el * self.n_el
    }

    /// Nodes per direction for an order-`k` node set.
    pub fn nodes_per_dim(&self, k: usize) -> usize {
        if self.periodic() {
            k * self.n_el
        } else {
            k * self.n_el + 1
        }
    }

    pub fn element_center(&self, element: [usize; 3]) -> Vec3 {
        element.map(|e| (e as f64 + 0.5) * self.h)
    }

    pub fn flat_element(&self, element: [usize; 3]) -> usize {
        element[0] + self.n_el * (element[1] + self.n_el * element[2])
    }

    pub fn unflatten_element(&self, idx: usize) -> [usize; 3] {
        let n = self.n_el;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    /// Element neighbour at a signed offset, wrapped periodically. Returns
    /// `None` when a bounded mesh has no such element.
    pub fn neighbor(&self, element: [usize; 3], offset: [i64; 3]) -> Option<[usize; 3]> {
        let n = self.n_el as i64;
        let mut out = [0usize; 3];
        for d in 0..3 {
            let e = element[d] as i64 + offset[d];
            if self.periodic() {
                out[d] = e.rem_euclid(n) as usize;
            } else if (0..n).contains(&e) {
                out[d] = e as usize;
            } else {
                return None;
            }
        }
        Some(out)
    }

    /// Coordinate of order-`k` node `i` along one axis.
    pub fn node_coordinate(&self, k: usize, i: usize) -> f64 {
        i as f64 * self.h / k as f64
    }

    /// Global node index along one axis for local node `a` of element `e`.
    pub fn node_index_1d(&self, k: usize, e: usize, a: usize) -> usize {
        let idx = e * k + a;
        if self.periodic() {
            idx % (k * self.n_el)
        } else {
            idx
        }
    }
}

/// Wrap a position into the primary cell and find its host element and
/// offset from the element center.
pub fn locate_charge(position: Vec3, mesh: &Mesh) -> Result<Location> {
    if position.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input(format!("non-finite coordinate {position:?}")));
    }
    let h = mesh.h;
    let l = mesh.length();
    let mut element = [0usize; 3];
    let mut offset = [0.0; 3];
    for d in 0..3 {
        let x = if mesh.periodic() {
            mesh.domain.wrap(position[d])
        } else {
            if position[d] < 0.0 || position[d] > l {
                return Err(Error::Input(format!(
                    "coordinate {} outside bounded domain [0, {l}]",
                    position[d]
                )));
            }
            position[d]
        };
        let e = ((x / h).floor() as usize).min(mesh.n_el - 1);
        element[d] = e;
        offset[d] = x - (e as f64 + 0.5) * h;
    }
    Ok(Location { element, offset })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinality_and_partition_of_unity() {
        for k in 1..=6 {
            let b = Basis1D::new(k, 0.7);
            for (j, &xj) in b.nodes().iter().enumerate() {
                for i in 0..=k {
                    let v = b.eval(i, xj).unwrap();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-13, "k={k} i={i} j={j} v={v}");
                }
            }
            for s in 0..100 {
                let x = -0.35 + 0.7 * (s as f64 + 0.37) / 100.0;
                let sum: f64 = b.values(x).iter().sum();
                assert!((sum - 1.0).abs() < 1e-13);
                let dsum: f64 = b.derivatives(x).iter().sum();
                assert!(dsum.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn q2_center_node() {
        let b = Basis1D::new(2, 1.0);
        let v = b.values(0.0);
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert!(v[0].abs() < 1e-15 && v[2].abs() < 1e-15);
    }

    #[test]
    fn basis_index_out_of_range() {
        let b = Basis1D::new(3, 1.0);
        assert!(matches!(b.eval(4, 0.0), Err(Error::Input(_))));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let b = Basis1D::new(4, 1.3);
        let x = 0.123;
        let eps = 1e-6;
        let d = b.derivatives(x);
        let hi = b.values(x + eps);
        let lo = b.values(x - eps);
        for i in 0..5 {
            let fd = (hi[i] - lo[i]) / (2.0 * eps);
            assert!((fd - d[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn gauss_rules() {
        let r1 = gauss_rule(1);
        assert_eq!(r1.len(), 1);
        assert!((r1.weights[0] - 2.0).abs() < 1e-15);
        let r3 = gauss_rule(3);
        assert_eq!(r3.len(), 2);
        assert!(r3.integrate(|x| x * x * x).abs() < 1e-15);
        for degree in 0..30 {
            let r = gauss_rule(degree);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for m in 0..=degree / 2 {
                let exact = 2.0 / (2 * m + 1) as f64;
                let got = r.integrate(|x| x.powi(2 * m as i32));
                assert!(((got - exact) / exact).abs() < 1e-13, "deg {degree} m {m}");
            }
        }
        let r = gauss_rule(7).mapped(-0.5, 0.5);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((r.integrate(|x| x.powi(6)) - 2.0 * 0.5f64.powi(7) / 7.0).abs() < 1e-15);
    }

    #[test]
    fn locate_center_and_wrap() {
        let mesh = Mesh::new(1.0, 10, 1).unwrap();
        let loc = locate_charge([0.35, 0.05, 0.95], &mesh).unwrap();
        assert_eq!(loc.element, [3, 0, 9]);
        for d in loc.offset {
            assert!(d.abs() < 1e-15);
        }
        let loc = locate_charge([1.0, 0.5, -1.0], &mesh).unwrap();
        assert_eq!(loc.element[0], 0);
        assert!((loc.offset[0] + 0.05).abs() < 1e-15);
        assert_eq!(loc.element[2], 0);
        assert!(locate_charge([f64::NAN, 0.0, 0.0], &mesh).is_err());
    }

    #[test]
    fn locate_boundary_goes_to_upper_element() {
        let mesh = Mesh::new(1.0, 4, 2).unwrap();
        let loc = locate_charge([0.25, 0.5, 0.75], &mesh).unwrap();
        assert_eq!(loc.element, [1, 2, 3]);
        for d in loc.offset {
            assert!((d + 0.125).abs() < 1e-15);
        }
    }
}
