//! Decay of the short-range potential `1/R - Phi_sc` with distance.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::direct::{screen_potential, QuadratureOptions, SeparableScreen};
use crate::error::Result;
use crate::mesh::Vec3;
use crate::screens::ScreenSolver;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayOptions {
    pub qs: Vec<usize>,
    /// Sampled distances in units of `h`.
    pub radii: Vec<f64>,
    pub n_directions: usize,
    pub n_offsets: usize,
    pub seed: u64,
    /// Radius window of the slope fit.
    pub fit_range: (f64, f64),
    pub quadrature: QuadratureOptions,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            qs: vec![1, 2, 3, 4],
            radii: vec![2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
            n_directions: 42,
            n_offsets: 84,
            seed: 2024,
            fit_range: (4.0, 12.0),
            quadrature: QuadratureOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurve {
    pub q: usize,
    pub radii: Vec<f64>,
    pub max_abs: Vec<f64>,
    pub mean_abs: Vec<f64>,
    /// Least-squares slope of `ln max_abs` against `ln R` over the fit window.
    pub slope: f64,
    pub expected_slope: f64,
    /// Slopes between consecutive radii.
    pub local_slopes: Vec<f64>,
    /// First radius from which every later local slope lies within 0.5 of
    /// the expected slope.
    pub onset: Option<f64>,
}

/// Quasi-uniform unit vectors on a Fibonacci spiral.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Latin-hypercube offsets in `[-1/2, 1/2)^3`: one sample per stratum in
/// every coordinate.
pub fn stratified_offsets(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perms: Vec<Vec<usize>> = (0..3).map(|_| (0..n).collect()).collect();
    for p in &mut perms {
        p.shuffle(&mut rng);
    }
    (0..n)
        .map(|k| std::array::from_fn(|d| (perms[d][k] as f64 + rng.random::<f64>()) / n as f64 - 0.5))
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Max and mean of `|1/R - Phi_sc|` for unit charges at `h = 1` over the
/// sampled offsets and directions, per radius and order.
pub fn decay_study(opts: &DecayOptions) -> Result<Vec<DecayCurve>> {
    let dirs = fibonacci_directions(opts.n_directions);
    let offsets = stratified_offsets(opts.n_offsets, opts.seed);
    let mut out = Vec::new();
    for &q in &opts.qs {
        let solver = ScreenSolver::new(q, 1.0)?;
        let screens: Vec<SeparableScreen> = offsets.iter().map(|&d| SeparableScreen::new(&solver, d)).collect();
        let mut max_abs = Vec::with_capacity(opts.radii.len());
        let mut mean_abs = Vec::with_capacity(opts.radii.len());
        for &r in &opts.radii {
            let mut mx = 0.0f64;
            let mut sum = 0.0;
            for (delta, screen) in offsets.iter().zip(&screens) {
                for u in &dirs {
                    let y = [delta[0] + r * u[0], delta[1] + r * u[1], delta[2] + r * u[2]];
                    let v = (1.0 / r - screen_potential(screen, y, &opts.quadrature)).abs();
                    mx = mx.max(v);
                    sum += v;
                }
            }
            max_abs.push(mx);
            mean_abs.push(sum / (offsets.len() * dirs.len()) as f64);
        }
        let (lo, hi) = opts.fit_range;
        let (fx, fy): (Vec<f64>, Vec<f64>) = opts
            .radii
            .iter()
            .zip(&max_abs)
            .filter(|(r, _)| **r >= lo - 1e-12 && **r <= hi + 1e-12)
            .map(|(r, m)| (*r, *m))
            .unzip();
        let slope = if fx.len() >= 2 { loglog_slope(&fx, &fy) } else { f64::NAN };
        let expected = -((q + 2) as f64);
        let local_slopes: Vec<f64> = (1..opts.radii.len())
            .map(|k| loglog_slope(&opts.radii[k - 1..=k], &max_abs[k - 1..=k]))
            .collect();
        let onset = (0..local_slopes.len())
            .find(|&k| local_slopes[k..].iter().all(|s| (s - expected).abs() <= 0.5))
            .map(|k| opts.radii[k]);
        out.push(DecayCurve {
            q,
            radii: opts.radii.clone(),
            max_abs,
            mean_abs,
            slope,
            expected_slope: expected,
            local_slopes,
            onset,
        });
    }
    Ok(out)
}

/// Plot-ready rows `q,r_hat,max_abs,mean_abs`.
pub fn decay_csv(curves: &[DecayCurve]) -> String {
    let mut s = String::from("q,r_hat,max_abs,mean_abs\n");
    for c in curves {
        for k in 0..c.radii.len() {
            s.push_str(&format!("{},{},{:e},{:e}\n", c.q, c.radii[k], c.max_abs[k], c.mean_abs[k]));
        }
    }
    s
}
