//! Effective nuclear level scheme at fixed k∥ from the Green's function,
//! its linear response, and reconstruction of the reflection amplitude.
//!
//! Every sub-ensemble l is a sheet of area density a_l/|d|² at depth z_l.
//! In units of the natural linewidth γ, the coupling element is
//!
//!   C_ll′ = Δ_ll′ + i γ_ll′/2,   with  K_ll′ = k0² √(a_l a_l′) G(z_l, z_l′)/γ,
//!   Δ_ll′ = −Re K_ll′,  γ_ll′/2 = Im K_ll′,
//!
//! and the propagator is M(Δ) = (Δ + i/2)·1 − C̄, where C̄ is the elementwise
//! conjugate. A single ensemble therefore responds as a Lorentzian centered at
//! Δ = Δ_11 of half-width (1 + γ_11)/2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NucavError, Result};
use crate::green::GreenContext;
use crate::spectrum::{AxisKind, Route, Spectrum};
use crate::stack::{EnsemblePartition, LayerStack, SubEnsemble};
use crate::units::{effective_dipole_moment_sq, ev_to_inv_nm};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// a_l = |d|² f ρ abundance t_l, dimensionless.
pub fn sheet_strength(e: &SubEnsemble) -> f64 {
    effective_dipole_moment_sq(&e.species) * e.area_density()
}

/// Coupling element C_ll′ in γ-units (Re: shift, Im: half decay rate).
pub fn curly_g(ctx: &GreenContext, a: &SubEnsemble, b: &SubEnsemble) -> Result<Complex64> {
    let g = ctx.green(a.z, b.z)?.value;
    let k0 = a.species.k0();
    let k = k0 * k0 * (sheet_strength(a) * sheet_strength(b)).sqrt() * g / a.species.gamma_inv_nm();
    Ok(Complex64::new(-k.re, k.im))
}

/// Radiative rate of a single sheet in free space at angle θ, in γ-units.
pub fn free_space_rate(e: &SubEnsemble, theta: f64) -> f64 {
    let k0 = e.species.k0();
    let beta0 = k0 * theta.sin();
    k0 * k0 * sheet_strength(e) / (beta0 * e.species.gamma_inv_nm())
}

#[derive(Debug, Clone)]
pub struct LevelScheme {
    pub energy: f64,
    pub theta: f64,
    pub ensembles: Vec<SubEnsemble>,
    /// C_ll′, γ-units.
    pub coupling: DMatrix<Complex64>,
    /// Unnormalized drive Ω_l = √(k0² a_l/(2β_0 γ)) α_in 𝓔⁰(z_l).
    pub drive_raw: DVector<Complex64>,
    pub input_amplitude: Complex64,
    /// r of the empty stack.
    pub r_empty: Complex64,
    /// √(k0² a_l/(2β_0 γ)) 𝓔⁰(z_l): the out-coupling weights.
    pub outcoupling: DVector<Complex64>,
}

impl LevelScheme {
    pub fn len(&self) -> usize {
        self.ensembles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ensembles.is_empty()
    }

    /// Shifts Δ_ll′ (γ-units).
    pub fn shifts(&self) -> DMatrix<f64> {
        self.coupling.map(|c| c.re)
    }

    /// Decay rates γ_ll′ (γ-units).
    pub fn decays(&self) -> DMatrix<f64> {
        self.coupling.map(|c| 2.0 * c.im)
    }

    /// Unit-norm drive. The overall phase is the physical one set by the input amplitude.
    pub fn drive(&self) -> DVector<Complex64> {
        let n = self.drive_raw.norm();
        if n > 0.0 {
            &self.drive_raw / Complex64::new(n, 0.0)
        } else {
            self.drive_raw.clone()
        }
    }

    /// M(Δ) = (Δ + i/2)·1 − C̄.
    pub fn propagator(&self, detuning: f64) -> DMatrix<Complex64> {
        let n = self.len();
        let mut m = self.coupling.map(|c| -c.conj());
        for l in 0..n {
            m[(l, l)] += Complex64::new(detuning, 0.5);
        }
        m
    }

    pub fn to_json(&self) -> String {
        let n = self.len();
        let drive = self.drive();
        let doc = SchemeExport {
            angle_mrad: self.theta * 1e3,
            energy_kev: self.energy * 1e-3,
            ensembles: self
                .ensembles
                .iter()
                .map(|e| EnsembleExport {
                    z_nm: e.z,
                    t_nm: e.t,
                    layer: e.layer,
                })
                .collect(),
            coupling_re: (0..n * n).map(|k| self.coupling[(k / n, k % n)].re).collect(),
            coupling_im: (0..n * n).map(|k| self.coupling[(k / n, k % n)].im).collect(),
            drive_re: drive.iter().map(|c| c.re).collect(),
            drive_im: drive.iter().map(|c| c.im).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("level scheme serializes")
    }
}

#[derive(Serialize)]
struct EnsembleExport {
    z_nm: f64,
    t_nm: f64,
    layer: usize,
}

#[derive(Serialize)]
struct SchemeExport {
    angle_mrad: f64,
    #[serde(rename = "energy_keV")]
    energy_kev: f64,
    ensembles: Vec<EnsembleExport>,
    coupling_re: Vec<f64>,
    coupling_im: Vec<f64>,
    drive_re: Vec<f64>,
    drive_im: Vec<f64>,
}

pub fn build_level_scheme(
    stack: &LayerStack,
    partition: &EnsemblePartition,
    energy: f64,
    theta: f64,
) -> Result<LevelScheme> {
    build_level_scheme_with_input(stack, partition, energy, theta, Complex64::new(1.0, 0.0))
}

pub fn build_level_scheme_with_input(
    stack: &LayerStack,
    partition: &EnsemblePartition,
    energy: f64,
    theta: f64,
    input_amplitude: Complex64,
) -> Result<LevelScheme> {
    if partition.is_empty() {
        return Err(NucavError::NoResonantLayers);
    }
    let empty = stack.without_resonances();
    let ctx = GreenContext::new(&empty, energy, theta);
    let ens = &partition.ensembles;
    let n = ens.len();
    let mut coupling = DMatrix::zeros(n, n);
    for l in 0..n {
        for m in l..n {
            let c = curly_g(&ctx, &ens[l], &ens[m])?;
            coupling[(l, m)] = c;
            coupling[(m, l)] = c;
        }
    }
    let k0 = ev_to_inv_nm(energy);
    let beta0 = ctx.beta0();
    let mut out = DVector::zeros(n);
    for (l, e) in ens.iter().enumerate() {
        let w = (k0 * k0 * sheet_strength(e) / (2.0 * beta0 * e.species.gamma_inv_nm())).sqrt();
        out[l] = w * ctx.e_top(e.z)?;
    }
    Ok(LevelScheme {
        energy,
        theta,
        ensembles: ens.clone(),
        coupling,
        drive_raw: &out * input_amplitude,
        input_amplitude,
        r_empty: ctx.reflection(),
        outcoupling: out,
    })
}

#[derive(Debug, Clone)]
pub struct NuclearResponse {
    pub detunings: Vec<f64>,
    /// σ(Δ) = M(Δ)⁻¹ Ω per detuning.
    pub sigma: Vec<DVector<Complex64>>,
}

pub fn linear_response(scheme: &LevelScheme, detunings: &[f64]) -> NuclearResponse {
    let sigma = detunings
        .par_iter()
        .map(|&d| {
            scheme
                .propagator(d)
                .lu()
                .solve(&scheme.drive_raw)
                .expect("M is regular for a positive natural linewidth")
        })
        .collect();
    NuclearResponse {
        detunings: detunings.to_vec(),
        sigma,
    }
}

/// r(Δ) = total field at the top surface over the input amplitude, minus the incident part.
pub fn reconstruct_reflection(scheme: &LevelScheme, response: &NuclearResponse) -> Spectrum {
    let r = response
        .sigma
        .iter()
        .map(|s| {
            let scattered = -I * scheme.outcoupling.iter().zip(s.iter()).map(|(w, x)| w * x).sum::<Complex64>();
            scheme.r_empty + scattered / scheme.input_amplitude
        })
        .collect();
    Spectrum {
        axis: AxisKind::DetuningGamma,
        grid: response.detunings.clone(),
        r,
        route: Route::Green,
    }
}

/// Level scheme, response and reconstruction in one call.
pub fn green_spectrum(
    stack: &LayerStack,
    partition: &EnsemblePartition,
    energy: f64,
    theta: f64,
    detunings: &[f64],
) -> Result<Spectrum> {
    let scheme = build_level_scheme(stack, partition, energy, theta)?;
    Ok(reconstruct_reflection(&scheme, &linear_response(&scheme, detunings)))
}
