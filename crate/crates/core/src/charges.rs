use crate::error::{Error, Result};
use crate::mesh::{locate_charge, Location, Mesh, Vec3};

/// Point charges with their cached host elements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChargeSystem {
    pub positions: Vec<Vec3>,
    pub charges: Vec<f64>,
    locations: Vec<Location>,
}

impl ChargeSystem {
    pub fn new(positions: Vec<Vec3>, charges: Vec<f64>) -> Result<Self> {
        if positions.len() != charges.len() {
            return Err(Error::Input(format!(
                "{} positions but {} charge values",
                positions.len(),
                charges.len()
            )));
        }
        if let Some(i) = charges.iter().position(|q| !q.is_finite()) {
            return Err(Error::Input(format!("charge {i} is not finite")));
        }
        if let Some(i) = positions.iter().position(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(Error::Input(format!("position of charge {i} is not finite")));
        }
        Ok(Self { positions, charges, locations: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    pub fn total_charge(&self) -> f64 {
        self.charges.iter().sum()
    }

    /// Locate every charge on `mesh`, wrapping positions into the primary
    /// cell for periodic meshes.
    pub fn locate(&mut self, mesh: &Mesh) -> Result<()> {
        self.locations = self
            .positions
            .iter()
            .map(|&p| locate_charge(p, mesh))
            .collect::<Result<_>>()?;
        if mesh.periodic() {
            for (p, loc) in self.positions.iter_mut().zip(&self.locations) {
                let c = mesh.element_center(loc.element);
                for d in 0..3 {
                    p[d] = c[d] + loc.offset[d];
                }
            }
        }
        Ok(())
    }

    /// Cached locations; empty until [`ChargeSystem::locate`] has run.
    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn is_located(&self) -> bool {
        self.locations.len() == self.charges.len()
    }

    /// Copy with every charge value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.charges.iter_mut().for_each(|q| *q *= factor);
        out
    }
}
