//! Orthotropic elastic constants for the printed stainless steel and
//! the sensitivity sweep over Young's moduli.

use serde::{Deserialize, Serialize};

/// Which scalar modulus the beam surrogate uses for bending. The part
/// is printed diagonally, so neither material axis aligns exactly with
/// the screw axis; the policy makes the choice explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BendingPolicy {
    /// Build-direction modulus (conservative default).
    #[default]
    UseEZ,
    /// In-plane modulus.
    UseEXy,
    /// Geometric mean of the two.
    GeometricMean,
}

/// Orthotropic elastic constants in GPa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    /// In-plane (build plane) Young's modulus.
    pub e_xy: f64,
    /// Build-direction Young's modulus.
    pub e_z: f64,
    /// Poisson ratio, both couplings.
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// Shear modulus, held fixed across the sweep.
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default)]
    pub bending_policy: BendingPolicy,
}

fn default_nu() -> f64 {
    0.3
}

fn default_g() -> f64 {
    59.0
}

#[derive(Debug, thiserror::Error)]
pub enum MaterialError {
    #[error("domain error: {0}")]
    Domain(String),
}

impl MaterialModel {
    pub fn new(e_xy: f64, e_z: f64) -> Self {
        MaterialModel {
            e_xy,
            e_z,
            nu: default_nu(),
            g: default_g(),
            bending_policy: BendingPolicy::default(),
        }
    }

    /// Short label for reports and curve file names, e.g. "155/150".
    pub fn label(&self) -> String {
        format!("{:.0}/{:.0}", self.e_xy, self.e_z)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.e_xy > 0.0 && self.e_z > 0.0 && self.g > 0.0) {
            return Err(MaterialError::Domain(
                "moduli must be positive".to_string(),
            ));
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(MaterialError::Domain(format!(
                "nu = {} outside (0, 0.5)",
                self.nu
            )));
        }
        if self.e_z > self.e_xy {
            return Err(MaterialError::Domain(format!(
                "e_z = {} exceeds e_xy = {}",
                self.e_z, self.e_xy
            )));
        }
        Ok(())
    }
}

/// Shear modulus of an orthotropic material from the Huber relation:
/// `sqrt(e_a * e_b) / (2 * (1 + sqrt(nu_ab * nu_ba)))`.
///
/// Reduces to the isotropic `E / (2 (1 + nu))` when both moduli and
/// ratios coincide.
pub fn huber_shear_modulus(
    e_a: f64,
    e_b: f64,
    nu_ab: f64,
    nu_ba: f64,
) -> Result<f64, MaterialError> {
    if !(e_a > 0.0 && e_b > 0.0) {
        return Err(MaterialError::Domain(format!(
            "moduli must be positive, got e_a = {e_a}, e_b = {e_b}"
        )));
    }
    let nu_prod = nu_ab * nu_ba;
    if !(nu_prod >= 0.0 && nu_prod < 1.0) {
        return Err(MaterialError::Domain(format!(
            "nu_ab * nu_ba = {nu_prod} outside [0, 1)"
        )));
    }
    Ok((e_a * e_b).sqrt() / (2.0 * (1.0 + nu_prod.sqrt())))
}

/// The four-point Young's-modulus sensitivity set: (e_xy, e_z) pairs
/// (155/150), (165/160), (175/170), (185/180) GPa with nu = 0.3 and
/// G = 59 GPa fixed.
pub fn sensitivity_set() -> Vec<MaterialModel> {
    [155.0, 165.0, 175.0, 185.0]
        .iter()
        .map(|&e_xy| MaterialModel::new(e_xy, e_xy - 5.0))
        .collect()
}

/// Scalar modulus the beam surrogate uses for bending, per policy.
pub fn bending_modulus(m: &MaterialModel) -> f64 {
    match m.bending_policy {
        BendingPolicy::UseEZ => m.e_z,
        BendingPolicy::UseEXy => m.e_xy,
        BendingPolicy::GeometricMean => (m.e_xy * m.e_z).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn huber_paper_value() {
        let g = huber_shear_modulus(155.0, 150.0, 0.3, 0.3).unwrap();
        assert_relative_eq!(g, 58.646, max_relative = 1e-4);
        assert_eq!(g.round(), 59.0);
    }

    #[test]
    fn huber_upper_sweep_value() {
        // sqrt(185 * 180) / 2.6
        let g = huber_shear_modulus(185.0, 180.0, 0.3, 0.3).unwrap();
        assert_relative_eq!(g, 70.186, max_relative = 1e-4);
    }

    #[test]
    fn huber_rejects_nonpositive_modulus() {
        assert!(huber_shear_modulus(0.0, 150.0, 0.3, 0.3).is_err());
        assert!(huber_shear_modulus(155.0, -1.0, 0.3, 0.3).is_err());
    }

    #[test]
    fn sensitivity_set_matches_table() {
        let set = sensitivity_set();
        assert_eq!(set.len(), 4);
        assert_eq!(set[0].e_xy, 155.0);
        assert_eq!(set[0].e_z, 150.0);
        for m in &set {
            assert_eq!(m.g, 59.0);
            assert_eq!(m.nu, 0.3);
            assert_eq!(m.e_xy - m.e_z, 5.0);
            m.validate().unwrap();
        }
    }

    #[test]
    fn bending_modulus_policies() {
        let mut m = MaterialModel::new(155.0, 150.0);
        assert_eq!(bending_modulus(&m), 150.0);
        m.bending_policy = BendingPolicy::UseEXy;
        assert_eq!(bending_modulus(&m), 155.0);
        m.bending_policy = BendingPolicy::GeometricMean;
        assert_relative_eq!(bending_modulus(&m), 152.479, max_relative = 1e-4);
    }

    proptest! {
        #[test]
        fn huber_isotropic_identity(e in 1.0..500.0f64, nu in 0.01..0.49f64) {
            let g = huber_shear_modulus(e, e, nu, nu).unwrap();
            let iso = e / (2.0 * (1.0 + nu));
            prop_assert!((g - iso).abs() <= 1e-12 * iso.abs());
        }

        #[test]
        fn huber_symmetric_and_monotone(
            a in 1.0..500.0f64,
            b in 1.0..500.0f64,
            bump in 0.1..50.0f64,
        ) {
            let g_ab = huber_shear_modulus(a, b, 0.3, 0.3).unwrap();
            let g_ba = huber_shear_modulus(b, a, 0.3, 0.3).unwrap();
            prop_assert!((g_ab - g_ba).abs() <= 1e-12 * g_ab.abs());
            let g_up = huber_shear_modulus(a + bump, b, 0.3, 0.3).unwrap();
            prop_assert!(g_up > g_ab);
        }
    }
}
