//! Validation oracles: Ewald summation, explicit image sums, energies and
//! error metrics.
//!
//! All potentials are in Gaussian units (`Q / R` for a point charge) and
//! exclude each charge's own zero-image term. The Ewald sum uses conducting
//! (tin-foil) boundary conditions.

use serde::Serialize;

use crate::charges::ChargeSystem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EwaldParams {
    /// Splitting parameter `a^2` in inverse length squared.
    pub a2: f64,
    /// Real-space images `|n_d| <= n_images` per direction.
    pub n_images: usize,
    /// Reciprocal modes `|m_d| <= k_max` per direction, `k = 2 pi m / L`.
    pub k_max: usize,
    /// Add the uniform neutralizing background term for charged systems.
    pub background: bool,
}

impl Default for EwaldParams {
    fn default() -> Self {
        Self { a2: 6.25, n_images: 2, k_max: 4, background: false }
    }
}

impl EwaldParams {
    fn validate(&self) -> Result<()> {
        if !(self.a2 > 0.0) || !self.a2.is_finite() {
            return Err(Error::Config(format!("Ewald a^2 must be positive, got {}", self.a2)));
        }
        if self.n_images < 1 || self.k_max < 1 {
            return Err(Error::Config("Ewald image and mode counts must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_neutral(charges: &ChargeSystem, background: bool) -> Result<()> {
    let total = charges.total_charge();
    let scale: f64 = charges.charges.iter().map(|q| q.abs()).sum();
    if !background && total.abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::Gauge(format!(
            "net charge {total} requires the background correction"
        )));
    }
    Ok(())
}

/// Ewald potential at every charge of a periodic cube of edge `length`.
pub fn ewald_potential(charges: &ChargeSystem, length: f64, params: &EwaldParams) -> Result<Vec<f64>> {
    params.validate()?;
    if !(length > 0.0) {
        return Err(Error::Config("box length must be positive".into()));
    }
    check_neutral(charges, params.background)?;
    let a = params.a2.sqrt();
    let n = charges.len();
    let pos = &charges.positions;
    let q = &charges.charges;
    let mut phi = vec![0.0; n];

    let ni = params.n_images as i64;
    for i in 0..n {
        let mut s = 0.0;
        for (j, (xj, &qj)) in pos.iter().zip(q).enumerate() {
            let d0 = [pos[i][0] - xj[0], pos[i][1] - xj[1], pos[i][2] - xj[2]];
            for nz in -ni..=ni {
                let dz = d0[2] + nz as f64 * length;
                for ny in -ni..=ni {
                    let dy = d0[1] + ny as f64 * length;
                    for nx in -ni..=ni {
                        if i == j && nx == 0 && ny == 0 && nz == 0 {
                            continue;
                        }
                        let dx = d0[0] + nx as f64 * length;
                        let r = (dx * dx + dy * dy + dz * dz).sqrt();
                        s += qj * libm::erfc(a * r) / r;
                    }
                }
            }
        }
        phi[i] = s;
    }

    let volume = length.powi(3);
    let km = params.k_max as i64;
    let two_pi_l = 2.0 * std::f64::consts::PI / length;
    for mz in -km..=km {
        for my in -km..=km {
            for mx in -km..=km {
                if mx == 0 && my == 0 && mz == 0 {
                    continue;
                }
                let k = [mx as f64 * two_pi_l, my as f64 * two_pi_l, mz as f64 * two_pi_l];
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                let pref = 4.0 * std::f64::consts::PI / volume * (-k2 / (4.0 * params.a2)).exp() / k2;
                let mut re = 0.0;
                let mut im = 0.0;
                let phases: Vec<(f64, f64)> = pos
                    .iter()
                    .map(|x| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).sin_cos())
                    .collect();
                for (&(s, c), &qj) in phases.iter().zip(q) {
                    re += qj * c;
                    im += qj * s;
                }
                for (p, &(s, c)) in phi.iter_mut().zip(&phases) {
                    *p += pref * (c * re + s * im);
                }
            }
        }
    }

    let self_coef = 2.0 * a / std::f64::consts::PI.sqrt();
    let bg = if params.background {
        std::f64::consts::PI * charges.total_charge() / (volume * params.a2)
    } else {
        0.0
    };
    for (p, &qi) in phi.iter_mut().zip(q) {
        *p -= self_coef * qi + bg;
    }
    Ok(phi)
}

/// Image weighting for [`direct_sum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellWeighting {
    /// Every image with `|n_d| <= shells` counts fully.
    Plain,
    /// Charges inside the cube of half-width `(shells + 1/2) L` around the
    /// target count fully, those on its faces, edges and corners with
    /// weights 1/2, 1/4 and 1/8.
    Evjen,
}

/// Explicit image sum over `shells` image layers per direction.
pub fn direct_sum(
    charges: &ChargeSystem,
    length: f64,
    shells: usize,
    weighting: ShellWeighting,
) -> Vec<f64> {
    let n = charges.len();
    let pos = &charges.positions;
    let q = &charges.charges;
    let mut phi = vec![0.0; n];
    let half_width = (shells as f64 + 0.5) * length;
    let tol = 1e-9 * length;
    let reach = shells as i64 + 1;
    for i in 0..n {
        let mut s = 0.0;
        for (j, (xj, &qj)) in pos.iter().zip(q).enumerate() {
            let d0 = [xj[0] - pos[i][0], xj[1] - pos[i][1], xj[2] - pos[i][2]];
            let range = match weighting {
                ShellWeighting::Plain => shells as i64,
                ShellWeighting::Evjen => reach,
            };
            for nz in -range..=range {
                for ny in -range..=range {
                    for nx in -range..=range {
                        if i == j && nx == 0 && ny == 0 && nz == 0 {
                            continue;
                        }
                        let d = [
                            d0[0] + nx as f64 * length,
                            d0[1] + ny as f64 * length,
                            d0[2] + nz as f64 * length,
                        ];
                        let w = match weighting {
                            ShellWeighting::Plain => 1.0,
                            ShellWeighting::Evjen => d.iter().fold(1.0, |w, &c| {
                                let a = c.abs();
                                if a < half_width - tol {
                                    w
                                } else if a <= half_width + tol {
                                    0.5 * w
                                } else {
                                    0.0
                                }
                            }),
                        };
                        if w == 0.0 {
                            continue;
                        }
                        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                        s += w * qj / r;
                    }
                }
            }
        }
        phi[i] = s;
    }
    phi
}

/// `U = 1/2 sum_i Q_i Phi_i`.
pub fn total_energy(charges: &ChargeSystem, potentials: &[f64]) -> Result<f64> {
    if potentials.len() != charges.len() {
        return Err(Error::Input("one potential per charge required".into()));
    }
    Ok(0.5 * charges.charges.iter().zip(potentials).map(|(q, p)| q * p).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub rms_rel: f64,
    pub max_rel: f64,
    /// Constant added to the method potentials before comparison.
    pub gauge_shift: f64,
    /// Indices with a zero oracle value, left out of the metrics.
    pub excluded: Vec<usize>,
}

/// Gauge-aligned relative errors of `phi` against `oracle`. The shift is
/// `mean(oracle - phi)`. Returns the report and the per-charge relative
/// errors (`None` for excluded indices).
pub fn error_metrics(phi: &[f64], oracle: &[f64]) -> Result<(ErrorReport, Vec<Option<f64>>)> {
    if phi.len() != oracle.len() || phi.is_empty() {
        return Err(Error::Input("potential vectors must be non-empty and of equal length".into()));
    }
    let shift = oracle.iter().zip(phi).map(|(e, p)| e - p).sum::<f64>() / phi.len() as f64;
    let mut rel = Vec::with_capacity(phi.len());
    let mut excluded = Vec::new();
    let mut sum2 = 0.0;
    let mut max_rel = 0.0f64;
    let mut count = 0usize;
    for (i, (&p, &e)) in phi.iter().zip(oracle).enumerate() {
        if e == 0.0 {
            excluded.push(i);
            rel.push(None);
            continue;
        }
        let r = (p + shift - e) / e;
        sum2 += r * r;
        max_rel = max_rel.max(r.abs());
        count += 1;
        rel.push(Some(r));
    }
    if count == 0 {
        return Err(Error::Gauge("every oracle value is zero".into()));
    }
    let rms_rel = (sum2 / count as f64).sqrt();
    Ok((ErrorReport { rms_rel, max_rel, gauge_shift: shift, excluded }, rel))
}

/// Rock-salt arrangement of 8 unit ions in a cube of edge 2 (nearest
/// neighbor spacing 1).
pub fn rock_salt_cell() -> ChargeSystem {
    let mut pos = Vec::new();
    let mut q = Vec::new();
    for z in 0..2 {
        for y in 0..2 {
            for x in 0..2 {
                pos.push([x as f64, y as f64, z as f64]);
                q.push(if (x + y + z) % 2 == 0 { 1.0 } else { -1.0 });
            }
        }
    }
    ChargeSystem::new(pos, q).expect("valid rock-salt cell")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn madelung_from_evjen_sum() {
        let cell = rock_salt_cell();
        let phi = direct_sum(&cell, 2.0, 12, ShellWeighting::Evjen);
        let u = total_energy(&cell, &phi).unwrap();
        assert!((u / 4.0 + 1.747565).abs() < 1e-4, "{}", u / 4.0);
    }

    #[test]
    fn metrics_on_hand_vectors() {
        let oracle = [1.0, 2.0, 4.0];
        let phi = [1.1, 1.8, 4.0];
        // shift = (-0.1 + 0.2 + 0) / 3
        let s = 0.1 / 3.0;
        let (rep, rel) = error_metrics(&phi, &oracle).unwrap();
        let expect = [(0.1 + s) / 1.0, (-0.2 + s) / 2.0, s / 4.0];
        for (r, e) in rel.iter().zip(expect) {
            assert!((r.unwrap() - e).abs() < 1e-15);
        }
        let rms = (expect.iter().map(|e| e * e).sum::<f64>() / 3.0).sqrt();
        assert!((rep.rms_rel - rms).abs() < 1e-15);
        assert!((rep.max_rel - expect[0]).abs() < 1e-15);
    }

    #[test]
    fn zero_oracle_entries_are_excluded() {
        let (rep, rel) = error_metrics(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(rep.excluded, vec![1]);
        assert!(rel[1].is_none());
    }

    #[test]
    fn charged_system_needs_background() {
        let c = ChargeSystem::new(vec![[0.1, 0.2, 0.3]], vec![1.0]).unwrap();
        assert!(matches!(ewald_potential(&c, 1.0, &EwaldParams::default()), Err(Error::Gauge(_))));
        let p = EwaldParams { background: true, ..Default::default() };
        assert!(ewald_potential(&c, 1.0, &p).is_ok());
    }
}
