use crate::error::{Error, Result};

/// Isotropic material with shear correction factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    /// Young's modulus (N/m^2).
    pub e: f64,
    pub nu: f64,
    pub k_shear: f64,
}

impl Default for MaterialParams {
    /// `E = 1.092e7`, `nu = 0.3`, `k = 5/6`.
    fn default() -> Self {
        MaterialParams {
            e: 1.092e7,
            nu: 0.3,
            k_shear: 5.0 / 6.0,
        }
    }
}

impl MaterialParams {
    pub fn new(e: f64, nu: f64, k_shear: f64) -> Result<Self> {
        if !(e > 0.0) {
            return Err(Error::param("E", format!("Young's modulus must be positive, got {e}")));
        }
        if !(nu > 0.0 && nu < 0.5) {
            return Err(Error::param("nu", format!("Poisson ratio must lie in (0, 0.5), got {nu}")));
        }
        if !(k_shear > 0.0) {
            return Err(Error::param("k", format!("shear factor must be positive, got {k_shear}")));
        }
        Ok(MaterialParams { e, nu, k_shear })
    }

    /// Shear modulus `E / (2 (1 + nu))`.
    pub fn mu(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }

    /// Thickness-scaled bending stiffness `E / (12 (1 - nu^2))`.
    pub fn d_bend(&self) -> f64 {
        self.e / (12.0 * (1.0 - self.nu * self.nu))
    }

    /// Coefficient `mu k t^-2` of the shear term.
    pub fn shear_coefficient(&self, t: f64) -> f64 {
        self.mu() * self.k_shear / (t * t)
    }
}

/// Bending moments `C eps = D [(1 - nu) eps + nu tr(eps) I]`.
pub fn bending_stress(material: &MaterialParams, strain: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = material.d_bend();
    let nu = material.nu;
    let tr = strain[0][0] + strain[1][1];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = d * (1.0 - nu) * strain[i][j];
        }
        out[i][i] += d * nu * tr;
    }
    out
}
