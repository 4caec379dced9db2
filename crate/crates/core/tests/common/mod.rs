#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use polyscreen::mesh::{gauss_legendre, Basis1D, Vec3};
use polyscreen::screens::{screen_basis_1d, unkappa, ScreenCoefficients};
use polyscreen::shortrange::{build_tables, CutoffPolicy, PotentialTable, TableSpec};
use polyscreen::ChargeSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Screen potential through `1/r = 2/sqrt(pi) int_0^inf exp(-r^2 t^2) dt`.
///
/// The density is the plain nodal sum `sum_kappa c_kappa w_i w_j w_k`, so
/// each term factorizes into three 1D Gaussian integrals. Nothing here
/// shares code with the adaptive box quadrature.
pub fn gaussian_transform_potential(screen: &ScreenCoefficients, h: f64, y: Vec3) -> f64 {
    let q = screen.q;
    let basis = Basis1D::new(q, h);
    let support = 1.5 * h;
    let gap = y.iter().map(|v| (v.abs() - support).max(0.0)).map(|v| v * v).sum::<f64>().sqrt();
    let t_max = if gap > 0.0 { 6.5 / gap } else { 4000.0 / h };
    let rule = gauss_legendre(24);
    let fine = gauss_legendre(16);

    let factor = |d: usize, i: usize, t: f64| -> f64 {
        let mut brk = vec![-1.5 * h, -0.5 * h, 0.5 * h, 1.5 * h];
        let (lo, hi) = if t > 0.0 { (y[d] - 9.0 / t, y[d] + 9.0 / t) } else { (-support, support) };
        brk.push(y[d].clamp(-support, support));
        brk.retain(|b| *b >= lo.max(-support) && *b <= hi.min(support));
        brk.push(lo.max(-support));
        brk.push(hi.min(support));
        brk.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let width = if t > 0.0 { (1.0 / t).min(h) } else { h };
        let mut s = 0.0;
        for w in brk.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let pieces = ((b - a) / width).ceil().max(1.0) as usize;
            for k in 0..pieces {
                let pa = a + (b - a) * k as f64 / pieces as f64;
                let pb = a + (b - a) * (k + 1) as f64 / pieces as f64;
                s += fine
                    .mapped(pa, pb)
                    .integrate(|x| screen_basis_1d(&basis, i, x) * (-(t * (x - y[d])).powi(2)).exp());
            }
        }
        s
    };

    let integrand = |t: f64| -> f64 {
        let f: Vec<Vec<f64>> = (0..3).map(|d| (0..=q).map(|i| factor(d, i, t)).collect()).collect();
        screen
            .c
            .iter()
            .enumerate()
            .map(|(kappa, c)| {
                let [i, j, k] = unkappa(q, kappa);
                c * f[0][i] * f[1][j] * f[2][k]
            })
            .sum()
    };

    let mut edges = vec![0.0, 0.25 / h];
    while *edges.last().unwrap() < t_max {
        let next = (edges.last().unwrap() * 2.0).min(t_max);
        edges.push(next);
    }
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += rule.mapped(w[0], w[1]).integrate(integrand);
    }
    if gap == 0.0 {
        // Tail beyond t_max: the product of 1D factors tends to
        // rho(y) (sqrt(pi)/t)^3.
        let rho: f64 = screen
            .c
            .iter()
            .enumerate()
            .map(|(kappa, c)| {
                let [i, j, k] = unkappa(q, kappa);
                c * screen_basis_1d(&basis, i, y[0]) * screen_basis_1d(&basis, j, y[1]) * screen_basis_1d(&basis, k, y[2])
            })
            .sum();
        total += rho * std::f64::consts::PI.powf(1.5) / (2.0 * t_max * t_max);
    }
    2.0 / std::f64::consts::PI.sqrt() * total
}

/// Dirichlet potential of a unit charge at `src` in the unit cube with
/// zero boundary values, by alternating image sums over `n` layers.
pub fn cube_dirichlet_green(src: Vec3, x: Vec3, n: i64) -> f64 {
    let mut images: [Vec<(f64, f64)>; 3] = Default::default();
    for d in 0..3 {
        for k in -n..=n {
            images[d].push((2.0 * k as f64 + src[d] - x[d], 1.0));
            images[d].push((2.0 * k as f64 - src[d] - x[d], -1.0));
        }
    }
    let mut s = 0.0;
    for &(dz, sz) in &images[2] {
        for &(dy, sy) in &images[1] {
            for &(dx, sx) in &images[0] {
                s += sx * sy * sz / (dx * dx + dy * dy + dz * dz).sqrt();
            }
        }
    }
    s
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` charges of alternating sign, uniform in `[0, length)^3`.
pub fn random_neutral_system(n: usize, seed: u64, length: f64) -> ChargeSystem {
    let mut r = rng(seed);
    let pos = (0..n).map(|_| std::array::from_fn(|_| r.random::<f64>() * length)).collect();
    let q = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    ChargeSystem::new(pos, q).unwrap()
}

pub fn random_offset(r: &mut ChaCha8Rng, h: f64) -> Vec3 {
    std::array::from_fn(|_| (r.random::<f64>() - 0.5) * h)
}

pub fn unit_vector(r: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = std::array::from_fn(|_| 2.0 * r.random::<f64>() - 1.0);
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Default 7-block tables, built once per test binary.
pub fn default_tables(q: usize) -> &'static PotentialTable {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static PotentialTable>>> = OnceLock::new();
    let map = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap();
    guard.entry(q).or_insert_with(|| {
        let policy = CutoffPolicy::new(7).unwrap();
        Box::leak(Box::new(build_tables(&TableSpec::for_policy(q, &policy)).unwrap()))
    })
}
