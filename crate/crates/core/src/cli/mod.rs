//! Configuration-driven front end: experiment generators, the pipeline,
//! decay and timing studies, and their reports.

pub mod config;
pub mod decay;
pub mod generate;
pub mod pipeline;
pub mod timing;

use std::path::PathBuf;

use crate::error::Result;
use config::{Mode, RunConfig};
use pipeline::{ensure_parent, PipelineOptions};

/// Run the configured mode and write its reports. Returns the files
/// written.
pub fn run(cfg: &RunConfig, opts: &PipelineOptions) -> Result<Vec<PathBuf>> {
    match cfg.mode {
        Mode::Pipeline => {
            let result = pipeline::run_pipeline(cfg, opts)?;
            Ok(pipeline::write_reports(&result, cfg, opts)?.to_vec())
        }
        Mode::EwaldOnly => {
            let result = pipeline::run_ewald_only(cfg)?;
            Ok(pipeline::write_reports(&result, cfg, opts)?.to_vec())
        }
        Mode::DecayStudy => {
            let d = decay::DecayOptions { qs: (1..=cfg.q).collect(), seed: cfg.seed, ..Default::default() };
            let curves = decay::decay_study(&d)?;
            let csv = PathBuf::from(format!("{}_decay.csv", cfg.out_prefix));
            let json = PathBuf::from(format!("{}_decay.json", cfg.out_prefix));
            ensure_parent(&csv)?;
            std::fs::write(&csv, decay::decay_csv(&curves))?;
            let body = serde_json::json!({
                "library_version": crate::VERSION,
                "config": cfg,
                "curves": curves,
            });
            std::fs::write(&json, serde_json::to_string_pretty(&body).expect("serializable"))?;
            Ok(vec![csv, json])
        }
        Mode::Timing => {
            let n = cfg.n;
            let t = timing::TimingOptions {
                q: cfg.q,
                length: cfg.box_length,
                seed: cfg.seed,
                tol: cfg.solver_tol,
                sr_block: cfg.sr_block,
                n_values: [n / 100, n / 10, n].into_iter().filter(|&v| v >= 2).map(|v| v + v % 2).collect(),
                n_el_for_n: cfg.n_el,
                preconditioner: opts.preconditioner,
                ..Default::default()
            };
            let report = timing::timing_harness(&t)?;
            let json = PathBuf::from(format!("{}_timing.json", cfg.out_prefix));
            ensure_parent(&json)?;
            let body = serde_json::json!({
                "library_version": crate::VERSION,
                "config": cfg,
                "timing": report,
            });
            std::fs::write(&json, serde_json::to_string_pretty(&body).expect("serializable"))?;
            Ok(vec![json])
        }
    }
}
