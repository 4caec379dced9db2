//! Flat `key = value` run configuration.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::reference::EwaldParams;
use crate::shortrange::CutoffPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Pipeline,
    DecayStudy,
    Timing,
    EwaldOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pipeline" => Ok(Mode::Pipeline),
            "decay-study" => Ok(Mode::DecayStudy),
            "timing" => Ok(Mode::Timing),
            "ewald-only" => Ok(Mode::EwaldOnly),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected pipeline, decay-study, timing or ewald-only)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub q: usize,
    pub n_el: usize,
    pub box_length: f64,
    pub sr_block: usize,
    pub solver_tol: f64,
    pub seed: u64,
    pub mode: Mode,
    pub out_prefix: String,
    pub ewald_a2: f64,
    pub ewald_images: usize,
    pub ewald_kmax: usize,
    pub background_correction: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            q: 2,
            n_el: 15,
            box_length: 1.0,
            sr_block: 7,
            solver_tol: 1e-7,
            seed: 1,
            mode: Mode::Pipeline,
            out_prefix: "polyscreen".into(),
            ewald_a2: 6.25,
            ewald_images: 2,
            ewald_kmax: 4,
            background_correction: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse value '{value}' for key '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse value '{value}' for key '{key}' as a boolean"))),
    }
}

impl RunConfig {
    /// Parse config text. Lines are `key = value`; `#` starts a comment.
    /// Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            match key {
                "n" => cfg.n = parse(key, value)?,
                "q" => cfg.q = parse(key, value)?,
                "n_el" => cfg.n_el = parse(key, value)?,
                "box_length" => cfg.box_length = parse(key, value)?,
                "sr_block" => cfg.sr_block = parse(key, value)?,
                "solver_tol" => cfg.solver_tol = parse(key, value)?,
                "seed" => cfg.seed = parse(key, value)?,
                "mode" => cfg.mode = value.parse()?,
                "out_prefix" => cfg.out_prefix = value.to_string(),
                "ewald_a2" => cfg.ewald_a2 = parse(key, value)?,
                "ewald_images" => cfg.ewald_images = parse(key, value)?,
                "ewald_kmax" => cfg.ewald_kmax = parse(key, value)?,
                "background_correction" => cfg.background_correction = parse_bool(key, value)?,
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.n % 2 != 0 {
            return Err(Error::Config(format!("n = {} must be even for the two-cube generator", self.n)));
        }
        if !(1..=4).contains(&self.q) {
            return Err(Error::Config(format!("q = {} outside 1..=4", self.q)));
        }
        if !(self.box_length > 0.0) || !self.box_length.is_finite() {
            return Err(Error::Config("box_length must be positive".into()));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(Error::Config("solver_tol must lie in (0, 1)".into()));
        }
        if self.out_prefix.is_empty() {
            return Err(Error::Config("out_prefix must not be empty".into()));
        }
        let policy = CutoffPolicy::new(self.sr_block)?;
        if self.n_el < policy.block() {
            return Err(Error::Config(format!(
                "n_el = {} is smaller than the {}-element short-range block",
                self.n_el,
                policy.block()
            )));
        }
        if !(self.ewald_a2 > 0.0) || self.ewald_images < 1 || self.ewald_kmax < 1 {
            return Err(Error::Config("Ewald parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn ewald(&self) -> EwaldParams {
        EwaldParams {
            a2: self.ewald_a2,
            n_images: self.ewald_images,
            k_max: self.ewald_kmax,
            background: self.background_correction,
        }
    }

    pub fn policy(&self) -> Result<CutoffPolicy> {
        CutoffPolicy::new(self.sr_block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# demo\nn = 20\nq = 3\nn_el = 9\nbox_length = 2.5\nsr_block = 7\nsolver_tol = 1e-8\n\
                    seed = 7\nmode = ewald-only\nout_prefix = out/run\newald_a2 = 5\newald_images = 3\n\
                    ewald_kmax = 5\nbackground_correction = true\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.n, 20);
        assert_eq!(c.q, 3);
        assert_eq!(c.mode, Mode::EwaldOnly);
        assert_eq!(c.out_prefix, "out/run");
        assert!(c.background_correction);
        assert_eq!(c.ewald_kmax, 5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("q = 5").is_err());
        assert!(RunConfig::parse("sr_block = 8").is_err());
        assert!(RunConfig::parse("n = 11").is_err());
        assert!(RunConfig::parse("n_el = 5").is_err());
        assert!(RunConfig::parse("q = 2\nq = 3").is_err());
        assert!(RunConfig::parse("mode = fast").is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
    }
}
