use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic Saint Venant-Kirchhoff material.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Young's modulus (Pa).
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    /// Mass density (kg/m^3).
    pub density: f64,
}

impl Material {
    pub fn new(young_modulus: f64, poisson_ratio: f64, density: f64) -> Result<Self> {
        let m = Material { young_modulus, poisson_ratio, density };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0 && self.young_modulus.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "Young's modulus must be positive, got {}",
                self.young_modulus
            )));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "density must be positive, got {}",
                self.density
            )));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::InvalidMaterial(format!(
                "Poisson ratio must lie in (-1, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }

    /// Lame parameters `(lambda, mu)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young_modulus, self.poisson_ratio);
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        (lambda, mu)
    }

    pub fn with_poisson_ratio(&self, nu: f64) -> Result<Self> {
        Material::new(self.young_modulus, nu, self.density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_parameters() {
        assert!(Material::new(0.0, 0.3, 7800.0).is_err());
        assert!(Material::new(210e9, 0.5, 7800.0).is_err());
        assert!(Material::new(210e9, -1.0, 7800.0).is_err());
        assert!(Material::new(210e9, 0.3, -1.0).is_err());
        assert!(Material::new(210e9, 0.3, 7800.0).is_ok());
    }

    #[test]
    fn lame_parameters_at_zero_poisson() {
        let m = Material::new(2.0, 0.0, 1.0).unwrap();
        assert_eq!(m.lame(), (0.0, 1.0));
    }
}
