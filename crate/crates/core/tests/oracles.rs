mod common;

use common::*;
use polyscreen::cli::config::RunConfig;
use polyscreen::cli::generate::generate_biased_cubes;
use polyscreen::direct::{screen_potential, QuadratureOptions, SeparableScreen};
use polyscreen::dirichlet::solve_dirichlet;
use polyscreen::reference::{direct_sum, ewald_potential, rock_salt_cell, total_energy, EwaldParams, ShellWeighting};
use polyscreen::screens::{solve_screen_dense, ScreenBasisSet, ScreenSolver};
use polyscreen::shortrange::{eval_screen_potential, minimum_image, CutoffPolicy, ShortRange};
use polyscreen::{ChargeSystem, Mesh};

const MADELUNG_NACL: f64 = 1.747_564_594_633;

#[test]
fn box_quadrature_matches_gaussian_transform_outside_support() {
    let mut r = rng(11);
    for q in 1..=4 {
        let h = 0.7;
        let solver = ScreenSolver::new(q, h).unwrap();
        let dense = ScreenBasisSet::new(q, h);
        for _ in 0..3 {
            let delta = random_offset(&mut r, h);
            let u = unit_vector(&mut r);
            let y = [0, 1, 2].map(|d| delta[d] + 2.5 * h * u[d]);
            let sep = SeparableScreen::new(&solver, delta);
            let opts = QuadratureOptions { ratio: 0.25, points: 12, max_depth: 12 };
            let a = screen_potential(&sep, y, &opts);
            let b = gaussian_transform_potential(&solve_screen_dense(delta, &dense).unwrap(), h, y);
            assert!(rel_diff(a, b) < 1e-9, "q={q} y={y:?}: {a} vs {b}");
        }
    }
}

#[test]
fn box_quadrature_matches_gaussian_transform_inside_support() {
    let mut r = rng(12);
    for q in [1, 3] {
        let solver = ScreenSolver::new(q, 1.0).unwrap();
        let dense = ScreenBasisSet::new(q, 1.0);
        let delta = random_offset(&mut r, 1.0);
        let y = [0.9, -0.3, 0.55];
        let opts = QuadratureOptions { ratio: 0.25, points: 12, max_depth: 14 };
        let a = screen_potential(&SeparableScreen::new(&solver, delta), y, &opts);
        let b = gaussian_transform_potential(&solve_screen_dense(delta, &dense).unwrap(), 1.0, y);
        assert!(rel_diff(a, b) < 1e-7, "q={q}: {a} vs {b}");
    }
}

#[test]
fn tables_track_direct_quadrature() {
    // The tables carry the FEM error of the patch solve, at the mesh
    // resolution, so agreement is limited to that level.
    let mut r = rng(13);
    for q in 1..=2 {
        let t = default_tables(q);
        let solver = ScreenSolver::new(q, 1.0).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let delta = random_offset(&mut r, 1.0);
            let u = unit_vector(&mut r);
            let y = [0, 1, 2].map(|d| delta[d] + 3.0 * u[d]);
            let table = eval_screen_potential(1.0, delta, y, 1.0, t).unwrap();
            let exact = screen_potential(&SeparableScreen::new(&solver, delta), y, &QuadratureOptions::default());
            worst = worst.max(rel_diff(table, exact));
        }
        assert!(worst < 1e-3, "q={q}: {worst}");
    }
}

#[test]
fn table_scaling_with_h() {
    let t = default_tables(2);
    let delta = [0.01, -0.02, 0.015];
    let y = [0.2, 0.1, -0.05];
    let a = eval_screen_potential(2.0, delta, y, 0.1, t).unwrap();
    let b = eval_screen_potential(2.0, delta.map(|v| v * 10.0), y.map(|v| v * 10.0), 1.0, t).unwrap();
    assert!((a - 10.0 * b).abs() < 1e-12 * a.abs());
}

#[test]
fn ewald_matches_evjen_image_sum() {
    // A target-centered cubic shell sum differs from the tin-foil Ewald
    // value by (2 pi / 3V) sum_j Q_j |d_ij|^2, the second moment of the cell
    // seen from the target (d_ij the minimum-image displacement).
    let c = random_neutral_system(8, 3, 1.0);
    let e = ewald_potential(&c, 1.0, &EwaldParams { a2: 12.0, n_images: 3, k_max: 8, background: false }).unwrap();
    let d = direct_sum(&c, 1.0, 20, ShellWeighting::Evjen);
    for i in 0..8 {
        let second: f64 = (0..8)
            .map(|j| {
                let dx = [0, 1, 2].map(|k| c.positions[j][k] - c.positions[i][k]);
                let m = minimum_image(dx, 1.0);
                c.charges[j] * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2])
            })
            .sum();
        let corr = 2.0 * std::f64::consts::PI / 3.0 * second;
        assert!((e[i] - d[i] - corr).abs() < 5e-4, "{i}: {} vs {}", e[i], d[i] + corr);
    }
}

#[test]
fn rock_salt_madelung_from_ewald() {
    let cell = rock_salt_cell();
    let phi = ewald_potential(&cell, 2.0, &EwaldParams { a2: 2.0, n_images: 3, k_max: 6, background: false }).unwrap();
    let m = -total_energy(&cell, &phi).unwrap() / 4.0;
    assert!((m - MADELUNG_NACL).abs() < 1e-9, "{m}");
}

#[test]
fn ewald_independent_of_splitting() {
    let c = random_neutral_system(12, 9, 1.0);
    let base = ewald_potential(&c, 1.0, &EwaldParams { a2: 4.0, n_images: 4, k_max: 7, background: false }).unwrap();
    for a2 in [5.5, 7.0, 9.0] {
        let p = ewald_potential(&c, 1.0, &EwaldParams { a2, n_images: 4, k_max: 7, background: false }).unwrap();
        for (x, y) in base.iter().zip(&p) {
            assert!(rel_diff(*y, *x) < 1e-9, "a2={a2}: {y} vs {x}");
        }
    }
}

#[test]
fn default_ewald_settings_are_converged() {
    let c = generate_biased_cubes(200, 4, 1.0).unwrap();
    let cfg = RunConfig::default();
    let e = ewald_potential(&c, 1.0, &cfg.ewald()).unwrap();
    let tight = ewald_potential(&c, 1.0, &EwaldParams { a2: 6.25, n_images: 3, k_max: 7, background: false }).unwrap();
    let scale = e.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (a, b) in e.iter().zip(&tight) {
        assert!((a - b).abs() < 1e-8 * scale);
    }
}

#[test]
fn charged_system_background_is_uniform_shift() {
    let c = ChargeSystem::new(vec![[0.2, 0.3, 0.4], [0.7, 0.1, 0.9], [0.5, 0.5, 0.2]], vec![1.0, -0.5, 1.5]).unwrap();
    let p1 = ewald_potential(&c, 1.0, &EwaldParams { a2: 6.0, n_images: 4, k_max: 7, background: true }).unwrap();
    let p2 = ewald_potential(&c, 1.0, &EwaldParams { a2: 8.0, n_images: 4, k_max: 7, background: true }).unwrap();
    for (a, b) in p1.iter().zip(&p2) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn dirichlet_cube_matches_image_series() {
    let mesh = Mesh::bounded(1.0, 7, 1).unwrap();
    let policy = CutoffPolicy::new(7).unwrap();
    let tables = default_tables(1);
    let src = [0.51, 0.47, 0.53];
    let mut c = ChargeSystem::new(vec![src], vec![1.0]).unwrap();
    c.locate(&mesh).unwrap();
    let sol = solve_dirichlet(&c, &mesh, tables, policy, &|_| 0.0, 1e-10).unwrap();
    let sr = ShortRange::new(&mesh, &c, tables, policy).unwrap();
    for x in [[0.3, 0.5, 0.5], [0.7, 0.2, 0.5], [0.15, 0.8, 0.35]] {
        let phi = sol.eval_total(&mesh, &sr, &c, x).unwrap();
        let exact = cube_dirichlet_green(src, x, 30);
        assert!(rel_diff(phi, exact) < 1e-3, "{x:?}: {phi} vs {exact}");
    }
}

#[test]
fn dirichlet_boundary_reproduces_nonzero_data() {
    let mesh = Mesh::bounded(1.0, 7, 1).unwrap();
    let policy = CutoffPolicy::new(7).unwrap();
    let tables = default_tables(1);
    let mut c = ChargeSystem::new(vec![[0.45, 0.52, 0.49], [0.6, 0.4, 0.58]], vec![1.0, -0.7]).unwrap();
    c.locate(&mesh).unwrap();
    let g = |x: [f64; 3]| x[0] - 0.5 * x[1] * x[2];
    let sol = solve_dirichlet(&c, &mesh, tables, policy, &g, 1e-10).unwrap();
    let sr = ShortRange::new(&mesh, &c, tables, policy).unwrap();
    let n = sol.n();
    for &iy in &[0, n / 3, n - 1] {
        for &iz in &[0, n / 2, n - 1] {
            let x = sol.node_position([0, iy, iz]);
            let phi = sol.eval_total(&mesh, &sr, &c, x).unwrap();
            assert!((phi - g(x)).abs() < 1e-10, "{x:?}: {phi}");
        }
    }
}

#[test]
fn paper_setup_constants() {
    // h = 0.067 on a unit cube, a 343-element block with cutoff 3, a 1e-7
    // residual, and Ewald with two images, a^2 = 6.25 and four modes.
    let cfg = RunConfig::default();
    assert!((cfg.box_length / cfg.n_el as f64 - 0.067).abs() < 5e-4);
    let policy = cfg.policy().unwrap();
    assert_eq!(policy.block().pow(3), 343);
    assert_eq!(policy.radius(), 3.0);
    assert_eq!(cfg.solver_tol, 1e-7);
    let e = cfg.ewald();
    assert_eq!((e.a2, e.n_images, e.k_max), (6.25, 2, 4));
}

#[test]
fn biased_cubes_are_55_45() {
    let c = generate_biased_cubes(1000, 7, 1.0).unwrap();
    let (mut pos_lo, mut n_lo) = (0, 0);
    for (p, q) in c.positions.iter().zip(&c.charges) {
        if p.iter().all(|&x| x < 0.5) {
            n_lo += 1;
            if *q > 0.0 {
                pos_lo += 1;
            }
        } else {
            assert!(p.iter().all(|&x| x >= 0.5));
        }
    }
    assert_eq!(n_lo, 500);
    assert_eq!(pos_lo, 275);
    assert_eq!(c.total_charge(), 0.0);
}
