//! Units, optical constants and nuclear resonance parameters.
//!
//! Natural units with ħ = c = ε0 = 1. Energies are carried in eV, lengths in nm,
//! and wave numbers in nm⁻¹ via ħc = 197.3269804 eV·nm. Frequencies that enter
//! the same expression as a wave number (ω_nuc, γ, detunings) are converted with
//! [`ev_to_inv_nm`].
//!
//! Refractive index convention: n = 1 − δ + iβ, ε = n², time dependence e^{−iωt},
//! so Im n > 0 is absorption.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// ħc in eV·nm (CODATA).
pub const HBAR_C_EV_NM: f64 = 197.3269804;

#[inline]
pub fn ev_to_inv_nm(e_ev: f64) -> f64 {
    e_ev / HBAR_C_EV_NM
}

/// Photon energy, grazing angle and (optionally) nuclear detuning of one scatter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyAngle {
    /// Photon energy in eV.
    pub photon_energy: f64,
    /// Grazing angle in rad, measured from the surface plane.
    pub incidence_angle: f64,
    /// Δ = ω − ω_nuc in units of the natural linewidth.
    pub detuning: f64,
}

impl EnergyAngle {
    pub fn new(photon_energy: f64, incidence_angle: f64) -> Self {
        Self::with_detuning(photon_energy, incidence_angle, 0.0)
    }

    pub fn with_detuning(photon_energy: f64, incidence_angle: f64, detuning: f64) -> Self {
        assert!(photon_energy > 0.0, "photon energy must be positive");
        assert!(
            incidence_angle > 0.0 && incidence_angle < std::f64::consts::FRAC_PI_2,
            "grazing angle must lie in (0, pi/2)"
        );
        Self {
            photon_energy,
            incidence_angle,
            detuning,
        }
    }

    /// Vacuum wave number k0 in nm⁻¹.
    pub fn k0(&self) -> f64 {
        ev_to_inv_nm(self.photon_energy)
    }

    /// k∥ = k0 cos θ.
    pub fn k_par(&self) -> f64 {
        self.k0() * self.incidence_angle.cos()
    }

    /// k⊥ = k0 sin θ.
    pub fn k_perp(&self) -> f64 {
        self.k0() * self.incidence_angle.sin()
    }
}

/// Electronic (off-resonant) optical constants of a material at the working energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalConstants {
    pub material_name: String,
    pub delta: f64,
    pub beta_abs: f64,
}

impl OpticalConstants {
    pub fn new(material_name: impl Into<String>, delta: f64, beta_abs: f64) -> Self {
        Self {
            material_name: material_name.into(),
            delta,
            beta_abs,
        }
    }

    pub fn vacuum() -> Self {
        Self::new("vacuum", 0.0, 0.0)
    }

    pub fn n(&self) -> Complex64 {
        Complex64::new(1.0 - self.delta, self.beta_abs)
    }

    pub fn epsilon(&self) -> Complex64 {
        let n = self.n();
        n * n
    }

    /// Problems with the constants; the first kind is fatal, the second a warning.
    pub fn check(&self) -> (Vec<String>, Vec<String>) {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        if !self.delta.is_finite() || !self.beta_abs.is_finite() {
            errors.push(format!("material '{}': non-finite optical constants", self.material_name));
        }
        if self.beta_abs < 0.0 {
            errors.push(format!(
                "material '{}': beta = {} < 0 (active medium)",
                self.material_name, self.beta_abs
            ));
        }
        if self.delta.abs() > 1e-2 || self.beta_abs > 1e-2 {
            warnings.push(format!(
                "material '{}': |delta| or beta above 1e-2, unusual for x-rays",
                self.material_name
            ));
        }
        (errors, warnings)
    }
}

/// Mössbauer transition parameters of the resonant isotope in a layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearSpecies {
    /// ω_nuc in eV.
    pub resonance_energy: f64,
    /// Full natural linewidth γ in eV (radiative + internal conversion).
    pub natural_linewidth_gamma: f64,
    pub internal_conversion_alpha: f64,
    pub lamb_moessbauer_f: f64,
    /// (2I_e + 1)/(2I_g + 1).
    pub spin_ratio: f64,
    /// Atomic number density of the element in nm⁻³.
    pub number_density: f64,
    /// Isotopic abundance of the resonant isotope.
    pub abundance: f64,
}

impl NuclearSpecies {
    /// Enriched α-⁵⁷Fe with the given Lamb-Mössbauer factor and abundance.
    pub fn fe57(lamb_moessbauer_f: f64, abundance: f64) -> Self {
        Self {
            resonance_energy: 14412.5,
            natural_linewidth_gamma: 4.66e-9,
            internal_conversion_alpha: 8.56,
            lamb_moessbauer_f,
            spin_ratio: 2.0,
            number_density: 84.87,
            abundance,
        }
    }

    pub fn validate(&self, label: &str) -> Vec<String> {
        let mut errs = Vec::new();
        let finite = [
            self.resonance_energy,
            self.natural_linewidth_gamma,
            self.internal_conversion_alpha,
            self.lamb_moessbauer_f,
            self.spin_ratio,
            self.number_density,
            self.abundance,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            errs.push(format!("{label}: non-finite species parameter"));
        }
        if !(self.resonance_energy > 0.0) {
            errs.push(format!("{label}: resonance_energy must be > 0"));
        }
        if !(self.natural_linewidth_gamma > 0.0) {
            errs.push(format!("{label}: natural_linewidth_gamma must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.lamb_moessbauer_f) {
            errs.push(format!("{label}: lamb_moessbauer_f must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.abundance) {
            errs.push(format!("{label}: abundance must lie in [0, 1]"));
        }
        if !(self.number_density > 0.0) {
            errs.push(format!("{label}: resonant species without positive number_density"));
        }
        if self.internal_conversion_alpha < 0.0 {
            errs.push(format!("{label}: internal_conversion_alpha must be >= 0"));
        }
        if !(self.spin_ratio > 0.0) {
            errs.push(format!("{label}: spin_ratio must be > 0"));
        }
        errs
    }

    /// k0 of the resonance, nm⁻¹.
    pub fn k0(&self) -> f64 {
        ev_to_inv_nm(self.resonance_energy)
    }

    /// γ as a wave number, nm⁻¹.
    pub fn gamma_inv_nm(&self) -> f64 {
        ev_to_inv_nm(self.natural_linewidth_gamma)
    }

    /// Number density of recoil-free resonant nuclei f_LM·ρ_N·abundance, nm⁻³.
    pub fn resonant_density(&self) -> f64 {
        self.lamb_moessbauer_f * self.number_density * self.abundance
    }
}

/// |d|² = (2πγ/k0³) · 1/(2(1+α)) · (2I_e+1)/(2I_g+1), in nm² (ħ = c = ε0 = 1).
pub fn effective_dipole_moment_sq(species: &NuclearSpecies) -> f64 {
    let k0 = species.k0();
    2.0 * std::f64::consts::PI * species.gamma_inv_nm() / k0.powi(3)
        / (2.0 * (1.0 + species.internal_conversion_alpha))
        * species.spin_ratio
}

/// Peak magnitude of the resonant index term, 2π(ρ f/k0³)/(2(1+α))·spin.
pub fn resonant_index_strength(species: &NuclearSpecies) -> f64 {
    let k0 = species.k0();
    2.0 * std::f64::consts::PI * species.resonant_density() / k0.powi(3)
        / (2.0 * (1.0 + species.internal_conversion_alpha))
        * species.spin_ratio
}

/// n(Δ) = n_base − strength/(2Δ + i), Δ in units of γ.
pub fn resonant_refractive_index(
    species: &NuclearSpecies,
    detuning: f64,
    base: &OpticalConstants,
) -> Complex64 {
    base.n() - resonant_index_strength(species) / Complex64::new(2.0 * detuning, 1.0)
}

/// Scattering polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    S,
    P,
}
