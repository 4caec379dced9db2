//! Wall-time sweeps over charge count and mesh size.

use std::time::Instant;

use serde::Serialize;

use super::decay::loglog_slope;
use super::generate::generate_biased_cubes;
use super::pipeline::make_preconditioner;
use crate::error::Result;
use crate::fem::{assemble_rhs, eval_smooth, solve_periodic, PreconditionerKind, TensorStiffness};
use crate::mesh::Mesh;
use crate::screens::{assign_screens, solve_screens, ScreenSolver};
use crate::shortrange::{build_tables, CutoffPolicy, ShortRange, TableSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct TimingOptions {
    pub q: usize,
    pub length: f64,
    pub seed: u64,
    pub tol: f64,
    pub sr_block: usize,
    /// Charge counts for the per-charge phases, on an `n_el_for_n` mesh.
    pub n_values: Vec<usize>,
    pub n_el_for_n: usize,
    /// Largest charge count for which the short-range phase is timed.
    pub short_range_limit: usize,
    /// Mesh sizes for the mesh-solve sweep, with `mesh_q` screens.
    pub n_el_values: Vec<usize>,
    pub mesh_q: usize,
    pub mesh_charges: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for TimingOptions {
    fn default() -> Self {
        Self {
            q: 1,
            length: 1.0,
            seed: 1,
            tol: 1e-7,
            sr_block: 7,
            n_values: vec![1000, 10_000, 100_000],
            n_el_for_n: 15,
            short_range_limit: 10_000,
            n_el_values: vec![7, 9, 11, 13, 15, 17, 19],
            mesh_q: 1,
            mesh_charges: 1000,
            preconditioner: PreconditionerKind::FastDiagonalization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargeSweepRow {
    pub n: usize,
    pub screen_construction: f64,
    pub transfer: f64,
    pub short_range: Option<f64>,
    pub evaluation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSweepRow {
    pub n_el: usize,
    /// Order-`p` unknowns.
    pub m: usize,
    pub mesh_solve: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub charge_sweep: Vec<ChargeSweepRow>,
    pub mesh_sweep: Vec<MeshSweepRow>,
    pub screen_exponent: f64,
    pub transfer_exponent: f64,
    pub short_range_exponent: Option<f64>,
    pub evaluation_exponent: f64,
    pub mesh_solve_exponent: f64,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

/// Exponent of a power-law fit, ignoring non-positive timings.
fn exponent(x: &[f64], y: &[f64]) -> f64 {
    let (fx, fy): (Vec<f64>, Vec<f64>) = x.iter().zip(y).filter(|(_, t)| **t > 0.0).map(|(a, b)| (*a, *b)).unzip();
    if fx.len() < 2 {
        f64::NAN
    } else {
        loglog_slope(&fx, &fy)
    }
}

pub fn timing_harness(opts: &TimingOptions) -> Result<TimingReport> {
    let policy = CutoffPolicy::new(opts.sr_block)?;
    let mesh = Mesh::new(opts.length, opts.n_el_for_n, opts.q)?;
    let solver = ScreenSolver::for_mesh(&mesh)?;
    let op = TensorStiffness::for_mesh(&mesh);
    let pre = make_preconditioner(opts.preconditioner, &op)?;
    let need_tables = opts.n_values.iter().any(|&n| n <= opts.short_range_limit);
    let tables = if need_tables { Some(build_tables(&TableSpec::for_policy(opts.q, &policy))?) } else { None };

    let mut charge_sweep = Vec::new();
    for &n in &opts.n_values {
        let mut charges = generate_biased_cubes(n, opts.seed, opts.length)?;
        let (screens, t_screen) = timed(|| {
            charges.locate(&mesh)?;
            solve_screens(&charges, &mesh, &solver)
        })?;
        let (rhs, t_transfer) = timed(|| {
            let density = assign_screens(&charges, &mesh, &screens)?;
            assemble_rhs(&density, &mesh, false)
        })?;
        let (field, _) = solve_periodic(&op, pre.as_ref(), &rhs, &mesh, opts.tol, 2000)?;
        let short_range = match &tables {
            Some(t) if n <= opts.short_range_limit => {
                let (_, ts) = timed(|| ShortRange::new(&mesh, &charges, t, policy)?.eval_all(&charges))?;
                Some(ts)
            }
            _ => None,
        };
        let (_, t_eval) = timed(|| {
            Ok(charges.positions.iter().map(|&x| eval_smooth(&field, &mesh, x)).sum::<f64>())
        })?;
        charge_sweep.push(ChargeSweepRow {
            n,
            screen_construction: t_screen,
            transfer: t_transfer,
            short_range,
            evaluation: t_eval,
        });
    }

    let mut mesh_sweep = Vec::new();
    for &n_el in &opts.n_el_values {
        let m = Mesh::new(opts.length, n_el, opts.mesh_q)?;
        let mut charges = generate_biased_cubes(opts.mesh_charges, opts.seed, opts.length)?;
        charges.locate(&m)?;
        let s = ScreenSolver::for_mesh(&m)?;
        let density = assign_screens(&charges, &m, &solve_screens(&charges, &m, &s)?)?;
        let rhs = assemble_rhs(&density, &m, false)?;
        let ((_, report), t_solve) = timed(|| {
            let op = TensorStiffness::for_mesh(&m);
            let pre = make_preconditioner(opts.preconditioner, &op)?;
            solve_periodic(&op, pre.as_ref(), &rhs, &m, opts.tol, 5000)
        })?;
        mesh_sweep.push(MeshSweepRow {
            n_el,
            m: m.nodes_per_dim(m.p).pow(3),
            mesh_solve: t_solve,
            iterations: report.iterations,
            relative_residual: report.relative_residual,
        });
    }

    let ns: Vec<f64> = charge_sweep.iter().map(|r| r.n as f64).collect();
    let col = |f: fn(&ChargeSweepRow) -> f64| -> Vec<f64> { charge_sweep.iter().map(f).collect() };
    let sr_rows: Vec<(f64, f64)> = charge_sweep
        .iter()
        .filter_map(|r| r.short_range.map(|t| (r.n as f64, t)))
        .collect();
    let short_range_exponent = if sr_rows.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = sr_rows.into_iter().unzip();
        Some(exponent(&x, &y))
    } else {
        None
    };
    let ms: Vec<f64> = mesh_sweep.iter().map(|r| r.m as f64).collect();
    let ts: Vec<f64> = mesh_sweep.iter().map(|r| r.mesh_solve).collect();
    Ok(TimingReport {
        screen_exponent: exponent(&ns, &col(|r| r.screen_construction)),
        transfer_exponent: exponent(&ns, &col(|r| r.transfer)),
        short_range_exponent,
        evaluation_exponent: exponent(&ns, &col(|r| r.evaluation)),
        mesh_solve_exponent: exponent(&ms, &ts),
        charge_sweep,
        mesh_sweep,
    })
}
