//! The full potential evaluation: screens, mesh solve, short-range sums and
//! optional Ewald comparison, with CSV and JSON reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::RunConfig;
use super::generate::generate_biased_cubes;
use crate::charges::ChargeSystem;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_rhs, eval_smooth, solve_periodic, FastDiagonalization, IdentityPreconditioner,
    JacobiPreconditioner, Preconditioner, PreconditionerKind, SolveReport, TensorStiffness,
};
use crate::mesh::Mesh;
use crate::reference::{error_metrics, ewald_potential, ErrorReport};
use crate::screens::{assign_screens, solve_screens, ScreenSolver};
use crate::shortrange::{load_or_build_tables, PotentialTable, ShortRange, TableSpec};

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Table cache file; built and written when missing.
    pub table_cache: Option<PathBuf>,
    /// Compute Ewald potentials and error metrics.
    pub oracle: bool,
    pub preconditioner: PreconditionerKind,
    pub max_iter: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            table_cache: None,
            oracle: true,
            preconditioner: PreconditionerKind::FastDiagonalization,
            max_iter: 2000,
        }
    }
}

/// Wall times in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub screen_construction: f64,
    pub transfer: f64,
    pub mesh_solve: f64,
    pub tables: f64,
    pub short_range: f64,
    pub evaluation: f64,
    pub ewald: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub charges: ChargeSystem,
    pub phi_total: Option<Vec<f64>>,
    pub phi_smooth: Option<Vec<f64>>,
    pub phi_short: Option<Vec<f64>>,
    pub phi_ewald: Option<Vec<f64>>,
    pub rel_err: Option<Vec<Option<f64>>>,
    pub error: Option<ErrorReport>,
    pub solve: Option<SolveReport>,
    /// Volume average of the smooth potential (its gauge constant).
    pub gauge_constant: Option<f64>,
    /// Uniform density removed from the mesh source.
    pub background_density: f64,
    pub table_residual: Option<f64>,
    pub times: PhaseTimes,
}

fn since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn make_preconditioner(kind: PreconditionerKind, op: &TensorStiffness) -> Result<Box<dyn Preconditioner>> {
    Ok(match kind {
        PreconditionerKind::Identity => Box::new(IdentityPreconditioner),
        PreconditionerKind::Jacobi => Box::new(JacobiPreconditioner::new(op)),
        PreconditionerKind::FastDiagonalization => Box::new(FastDiagonalization::new(op)?),
    })
}

/// Generate the configured two-cube system and run the pipeline on it.
pub fn run_pipeline(cfg: &RunConfig, opts: &PipelineOptions) -> Result<PipelineResult> {
    let charges = generate_biased_cubes(cfg.n, cfg.seed, cfg.box_length)?;
    run_pipeline_on(charges, cfg, opts, None)
}

/// Pipeline on a given system. `tables` overrides building or loading.
pub fn run_pipeline_on(
    mut charges: ChargeSystem,
    cfg: &RunConfig,
    opts: &PipelineOptions,
    tables: Option<&PotentialTable>,
) -> Result<PipelineResult> {
    let mut times = PhaseTimes::default();
    let mesh = Mesh::new(cfg.box_length, cfg.n_el, cfg.q)?;
    let policy = cfg.policy()?;

    let t = Instant::now();
    charges.locate(&mesh)?;
    let solver = ScreenSolver::for_mesh(&mesh)?;
    let screens = solve_screens(&charges, &mesh, &solver)?;
    times.screen_construction = since(t);

    let t = Instant::now();
    let density = assign_screens(&charges, &mesh, &screens)?;
    let rhs = assemble_rhs(&density, &mesh, cfg.background_correction)?;
    times.transfer = since(t);

    let t = Instant::now();
    let op = TensorStiffness::for_mesh(&mesh);
    let pre = make_preconditioner(opts.preconditioner, &op)?;
    let (field, report) = solve_periodic(&op, pre.as_ref(), &rhs, &mesh, cfg.solver_tol, opts.max_iter)?;
    times.mesh_solve = since(t);

    let t = Instant::now();
    let built;
    let tables = match tables {
        Some(t) => t,
        None => {
            built = load_or_build_tables(&TableSpec::for_policy(cfg.q, &policy), opts.table_cache.as_deref())?;
            &built
        }
    };
    times.tables = since(t);

    let t = Instant::now();
    let sr = ShortRange::new(&mesh, &charges, tables, policy)?;
    let phi_short = sr.eval_all(&charges)?;
    times.short_range = since(t);

    let t = Instant::now();
    let phi_smooth: Vec<f64> = charges.positions.iter().map(|&x| eval_smooth(&field, &mesh, x)).collect();
    let phi_total: Vec<f64> = phi_smooth.iter().zip(&phi_short).map(|(a, b)| a + b).collect();
    times.evaluation = since(t);

    let mut result = PipelineResult {
        charges,
        phi_total: Some(phi_total),
        phi_smooth: Some(phi_smooth),
        phi_short: Some(phi_short),
        phi_ewald: None,
        rel_err: None,
        error: None,
        solve: Some(report),
        gauge_constant: Some(field.gauge_mean),
        background_density: rhs.background,
        table_residual: Some(tables.max_residual),
        times,
    };
    if opts.oracle {
        attach_oracle(&mut result, cfg)?;
    }
    Ok(result)
}

fn attach_oracle(result: &mut PipelineResult, cfg: &RunConfig) -> Result<()> {
    let t = Instant::now();
    let phi_e = ewald_potential(&result.charges, cfg.box_length, &cfg.ewald())?;
    result.times.ewald = since(t);
    if let Some(total) = &result.phi_total {
        let (report, rel) = error_metrics(total, &phi_e)?;
        result.error = Some(report);
        result.rel_err = Some(rel);
    }
    result.phi_ewald = Some(phi_e);
    Ok(())
}

/// Ewald potentials only; no mesh or table work.
pub fn run_ewald_only(cfg: &RunConfig) -> Result<PipelineResult> {
    let charges = generate_biased_cubes(cfg.n, cfg.seed, cfg.box_length)?;
    let mut result = PipelineResult {
        charges,
        phi_total: None,
        phi_smooth: None,
        phi_short: None,
        phi_ewald: None,
        rel_err: None,
        error: None,
        solve: None,
        gauge_constant: None,
        background_density: 0.0,
        table_residual: None,
        times: PhaseTimes::default(),
    };
    attach_oracle(&mut result, cfg)?;
    Ok(result)
}

pub const CSV_HEADER: &str = "charge_id,x,y,z,q_charge,phi_total,phi_smooth,phi_short,phi_ewald,rel_err";

fn field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Potentials table in the fixed column order; absent values are empty.
pub fn potentials_csv(result: &PipelineResult) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    let pick = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map(|v| v[i]);
    for i in 0..result.charges.len() {
        let p = result.charges.positions[i];
        let rel = result.rel_err.as_ref().and_then(|r| r[i]);
        let _ = writeln!(
            s,
            "{i},{:e},{:e},{:e},{:e},{},{},{},{},{}",
            p[0],
            p[1],
            p[2],
            result.charges.charges[i],
            field(pick(&result.phi_total, i)),
            field(pick(&result.phi_smooth, i)),
            field(pick(&result.phi_short, i)),
            field(pick(&result.phi_ewald, i)),
            field(rel),
        );
    }
    s
}

#[derive(Serialize)]
struct Metadata<'a> {
    library_version: &'static str,
    config: &'a RunConfig,
    preconditioner: Option<PreconditionerKind>,
    solver_iterations: Option<usize>,
    achieved_residual: Option<f64>,
    phase_times_s: PhaseTimes,
    gauge_constant: Option<f64>,
    background_density: f64,
    table_max_residual: Option<f64>,
    error: Option<&'a ErrorReport>,
}

pub fn metadata_json(result: &PipelineResult, cfg: &RunConfig, opts: &PipelineOptions) -> String {
    let meta = Metadata {
        library_version: crate::VERSION,
        config: cfg,
        preconditioner: result.solve.map(|_| opts.preconditioner),
        solver_iterations: result.solve.map(|s| s.iterations),
        achieved_residual: result.solve.map(|s| s.relative_residual),
        phase_times_s: result.times,
        gauge_constant: result.gauge_constant,
        background_density: result.background_density,
        table_max_residual: result.table_residual,
        error: result.error.as_ref(),
    };
    serde_json::to_string_pretty(&meta).expect("metadata serializes")
}

/// Write `<prefix>_potentials.csv` and `<prefix>_run.json`.
pub fn write_reports(result: &PipelineResult, cfg: &RunConfig, opts: &PipelineOptions) -> Result<[PathBuf; 2]> {
    let csv = PathBuf::from(format!("{}_potentials.csv", cfg.out_prefix));
    let json = PathBuf::from(format!("{}_run.json", cfg.out_prefix));
    ensure_parent(&csv)?;
    std::fs::write(&csv, potentials_csv(result))?;
    std::fs::write(&json, metadata_json(result, cfg, opts))?;
    Ok([csv, json])
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(Error::Io)?;
        }
    }
    Ok(())
}
