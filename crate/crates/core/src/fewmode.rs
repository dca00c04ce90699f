//! Few-mode input-output theory for a uniform guiding layer on a perfect mirror.
//!
//! Cavity coordinate x runs from the mirror (x = 0) to the open surface
//! (x = L), so x = L − depth. The system basis is the Dirichlet set
//! χ̃_λ(x) = √(2/L) sin(πλx/L), λ ∈ Λ_Q. With β = k0 L sinθ, Ṽ = (1 − n²)k0²/2,
//! α = (β² − 2ṼL²)^{1/2}, u = α cot α and s = Σ_Λ 2λ²π²/(α² − λ²π²):
//!
//!   W_λ  = (√(πβ)/L) e^{−iβ} v_λ/(u − s − iβ)
//!   W†_λ = (√(πβ)/L) e^{+iβ} v_λ/(u − s + iβ)
//!   D    = diag((β²/L² − ω_λ²)/(2ω_λ)) + (π²/L²) v vᵀ/(u − s − iβ)
//!   S_bg = e^{−2iβ} (u − s + iβ)/(u − s − iβ)
//!
//! with v_λ = λ(−1)^λ/√ω_λ and ω_λ² = π²λ²/L² + 2Ṽ. The plane-wave amplitude
//! in the layer-formalism convention (phase referenced at the surface) is
//! r = −e^{2iβ} S_bg S_io. Quantities derived from the complex index are never
//! conjugated inside W†.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{NucavError, Result};
use crate::spectrum::{AxisKind, Map2D, Route, Spectrum};
use crate::stack::{EnsemblePartition, Layer, LayerStack, Thickness};
use crate::units::{effective_dipole_moment_sq, ev_to_inv_nm, NuclearSpecies};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Relative distance of α² from λ²π² below which the mode sum is reported singular.
pub const POLE_GUARD: f64 = 1e-9;

fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// Effective 1D index and scaled momentum for a plane wave at grazing angle θ.
pub fn map_3d_to_1d(n: Complex64, energy: f64, theta: f64, length: f64) -> (Complex64, f64) {
    let s = theta.sin();
    let n_eff = sqrt_upper((n - ONE) * (n + ONE) + s * s) / s;
    (n_eff, ev_to_inv_nm(energy) * length * s)
}

/// ω sinθ0/sinθ.
pub fn pheno_resonance_trajectory(theta: f64, theta0: f64, omega_nuc: f64) -> f64 {
    omega_nuc * theta0.sin() / theta.sin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FewModeBasis {
    pub modes: Vec<u32>,
    pub length: f64,
}

impl FewModeBasis {
    pub fn new(mut modes: Vec<u32>, length: f64) -> Result<Self> {
        modes.sort_unstable();
        modes.dedup();
        if modes.is_empty() || modes[0] == 0 {
            return Err(NucavError::InvalidArgument("mode set must be non-empty positive integers".into()));
        }
        if !(length > 0.0) {
            return Err(NucavError::FewModeGeometry(format!("cavity length {length} nm")));
        }
        Ok(Self { modes, length })
    }

    /// Λ_Q = {1, …, count}.
    pub fn first(count: u32, length: f64) -> Result<Self> {
        Self::new((1..=count).collect(), length)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// χ̃_λ(x), x measured from the mirror.
    pub fn chi(&self, lambda: u32, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (PI * lambda as f64 * x / self.length).sin()
    }

    /// Ξ_λλ′ = ∫_a^b χ̃_λ χ̃_λ′ dx.
    pub fn overlap(&self, a: f64, b: f64) -> DMatrix<f64> {
        let n = self.len();
        let p = PI / self.length;
        let l = self.length;
        DMatrix::from_fn(n, n, |i, j| {
            let (li, lj) = (self.modes[i] as f64, self.modes[j] as f64);
            let f = |x: f64| {
                let diff = if i == j { x } else { (p * (li - lj) * x).sin() / (p * (li - lj)) };
                (diff - (p * (li + lj) * x).sin() / (p * (li + lj))) / l
            };
            f(b) - f(a)
        })
    }
}

/// Resonant slab in cavity coordinates, a < b.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantSlab {
    pub a: f64,
    pub b: f64,
    pub species: NuclearSpecies,
}

/// Vacuum / uniform guiding layer (possibly split into resonant parts) / mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorCavity {
    pub n: Complex64,
    pub length: f64,
    pub slabs: Vec<ResonantSlab>,
}

/// Checks the stack is solvable by the few-mode route and returns its cavity data.
pub fn extract_cavity(stack: &LayerStack) -> Result<MirrorCavity> {
    let last = stack.last();
    if !stack.has_mirror() {
        return Err(NucavError::FewModeGeometry("the substrate must be a perfect mirror".into()));
    }
    let top = &stack.layers[0].material;
    if top.delta != 0.0 || top.beta_abs != 0.0 {
        return Err(NucavError::FewModeGeometry("the top medium must be vacuum".into()));
    }
    if last < 2 {
        return Err(NucavError::FewModeGeometry("no guiding layer between vacuum and mirror".into()));
    }
    let m0 = &stack.layers[1].material;
    for (j, l) in stack.layers[1..last].iter().enumerate() {
        if l.material.delta != m0.delta || l.material.beta_abs != m0.beta_abs {
            return Err(NucavError::FewModeGeometry(format!(
                "layer {} differs from the guiding material '{}'",
                j + 1,
                m0.material_name
            )));
        }
        if !matches!(l.thickness, Thickness::Finite(_)) {
            return Err(NucavError::FewModeGeometry(format!("layer {} is not finite", j + 1)));
        }
    }
    let length = stack.total_thickness();
    let tops = stack.interface_depths();
    let slabs = stack
        .resonant_layers()
        .into_iter()
        .map(|j| ResonantSlab {
            a: length - (tops[j] + stack.layers[j].d()),
            b: length - tops[j],
            species: stack.layers[j].resonant.clone().expect("resonant layer"),
        })
        .collect();
    Ok(MirrorCavity { n: m0.n(), length, slabs })
}

/// Closed-form system-bath couplings and propagator at one (E, θ).
#[derive(Debug, Clone)]
pub struct FewModeCouplings {
    pub basis: FewModeBasis,
    pub energy: f64,
    pub theta: f64,
    pub beta: f64,
    pub v_pot: Complex64,
    pub alpha: Complex64,
    pub u: Complex64,
    pub s: Complex64,
    pub omega: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub w: DVector<Complex64>,
    pub wdag: DVector<Complex64>,
    pub d: DMatrix<Complex64>,
    pub dinv: DMatrix<Complex64>,
    pub s_bg: Complex64,
}

pub fn build_couplings(basis: &FewModeBasis, n: Complex64, energy: f64, theta: f64) -> Result<FewModeCouplings> {
    let k0 = ev_to_inv_nm(energy);
    let l = basis.length;
    let beta = k0 * l * theta.sin();
    let v_pot = (ONE - n * n) * (k0 * k0 / 2.0);
    let alpha = sqrt_upper(beta * beta - v_pot * (2.0 * l * l));
    let a2 = alpha * alpha;
    let mut s = Complex64::default();
    for &lam in &basis.modes {
        let lp2 = (lam as f64 * PI).powi(2);
        let gap = (a2 - lp2).norm() / lp2;
        if gap < POLE_GUARD {
            return Err(NucavError::SingularMode { lambda: lam, gap });
        }
        s += 2.0 * lp2 / (a2 - lp2);
    }
    let u = alpha * alpha.cos() / alpha.sin();
    let omega: Vec<Complex64> = basis
        .modes
        .iter()
        .map(|&lam| sqrt_upper(Complex64::new((PI * lam as f64 / l).powi(2), 0.0) + 2.0 * v_pot))
        .collect();
    let v: Vec<Complex64> = basis
        .modes
        .iter()
        .zip(&omega)
        .map(|(&lam, w)| lam as f64 * if lam % 2 == 0 { 1.0 } else { -1.0 } / w.sqrt())
        .collect();
    let pre = (PI * beta).sqrt() / l;
    let ib = I * beta;
    let den_m = u - s - ib;
    let den_p = u - s + ib;
    let nm = basis.len();
    let w = DVector::from_fn(nm, |i, _| pre * (-ib).exp() * v[i] / den_m);
    let wdag = DVector::from_fn(nm, |i, _| pre * ib.exp() * v[i] / den_p);
    let q2 = beta * beta / (l * l);
    let c = PI * PI / (l * l);
    let d = DMatrix::from_fn(nm, nm, |i, j| {
        let diag = if i == j { (q2 - omega[i] * omega[i]) / (2.0 * omega[i]) } else { Complex64::default() };
        diag + c * v[i] * v[j] / den_m
    });
    let h: Vec<Complex64> = basis
        .modes
        .iter()
        .zip(&omega)
        .map(|(&lam, w)| 2.0 * lam as f64 * if lam % 2 == 0 { 1.0 } else { -1.0 } * w.sqrt() / (q2 - w * w))
        .collect();
    let dinv = DMatrix::from_fn(nm, nm, |i, j| {
        let diag = if i == j { 2.0 * omega[i] / (q2 - omega[i] * omega[i]) } else { Complex64::default() };
        diag - c / (u - ib) * h[i] * h[j]
    });
    let s_bg = (-2.0 * ib).exp() * den_p / den_m;
    Ok(FewModeCouplings {
        basis: basis.clone(),
        energy,
        theta,
        beta,
        v_pot,
        alpha,
        u,
        s,
        omega,
        v,
        w,
        wdag,
        d,
        dinv,
        s_bg,
    })
}

impl FewModeCouplings {
    /// S_io without nuclei.
    pub fn s_io_empty(&self) -> Complex64 {
        ONE - 2.0 * PI * I * (self.wdag.transpose() * &self.dinv * &self.w)[(0, 0)]
    }

    /// S_bg · S_io, the plane-wave scattering amplitude of the empty cavity.
    pub fn s_empty(&self) -> Complex64 {
        self.s_bg * self.s_io_empty()
    }

    /// Conversion of a plane-wave S to the layer-formalism reflection amplitude.
    pub fn to_reflection(&self, s: Complex64) -> Complex64 {
        -(2.0 * I * self.beta).exp() * s
    }

    pub fn reflection_empty(&self) -> Complex64 {
        self.to_reflection(self.s_empty())
    }
}

/// g_λ = −i d ω_nuc √(f ρ t/(2ω_λ)) χ̃_λ(x) for a sheet at x of thickness t, with its partner g†
/// (+i, ω_λ not conjugated).
pub fn nucleus_coupling(
    c: &FewModeCouplings,
    species: &NuclearSpecies,
    x: f64,
    t: f64,
) -> (DVector<Complex64>, DVector<Complex64>) {
    let d = effective_dipole_moment_sq(species).sqrt();
    let wn = species.k0();
    let dens = species.resonant_density() * t;
    let mag: Vec<Complex64> = c
        .basis
        .modes
        .iter()
        .zip(&c.omega)
        .map(|(&lam, om)| d * wn * (dens / 2.0).sqrt() / om.sqrt() * c.basis.chi(lam, x))
        .collect();
    let n = mag.len();
    (
        DVector::from_fn(n, |i, _| -I * mag[i]),
        DVector::from_fn(n, |i, _| I * mag[i]),
    )
}

/// Sheet couplings for all ensembles: g is L×N, g† is N×L.
#[derive(Debug, Clone)]
pub struct SheetCouplings {
    pub g: DMatrix<Complex64>,
    pub gdag: DMatrix<Complex64>,
    /// Natural linewidth in nm⁻¹ (common to all ensembles).
    pub gamma: f64,
}

/// Couplings of every sub-ensemble of the partition, positions mapped to cavity coordinates.
pub fn sheet_couplings(c: &FewModeCouplings, partition: &EnsemblePartition) -> Result<SheetCouplings> {
    if partition.is_empty() {
        return Err(NucavError::NoResonantLayers);
    }
    let n = c.basis.len();
    let l = partition.len();
    let mut g = DMatrix::zeros(l, n);
    let mut gdag = DMatrix::zeros(n, l);
    let gamma = partition.ensembles[0].species.gamma_inv_nm();
    for (k, e) in partition.ensembles.iter().enumerate() {
        let x = c.basis.length - e.z;
        if !(x > 0.0 && x < c.basis.length) {
            return Err(NucavError::FewModeGeometry(format!("ensemble at depth {} nm lies outside the cavity", e.z)));
        }
        let (gv, gd) = nucleus_coupling(c, &e.species, x, e.t);
        g.set_row(k, &gv.transpose());
        gdag.set_column(k, &gd);
    }
    Ok(SheetCouplings { g, gdag, gamma })
}

/// Continuum-limit interaction matrix A = Σ_slabs |d|² ω_nuc² f ρ Ξ/(2√ω_λ √ω_λ′) in nm⁻².
/// The roots are taken one by one, on the branch used by the sheet couplings.
pub fn thick_layer_delta(c: &FewModeCouplings, slabs: &[ResonantSlab]) -> DMatrix<Complex64> {
    let n = c.basis.len();
    let mut a = DMatrix::zeros(n, n);
    for slab in slabs {
        let xi = c.basis.overlap(slab.a, slab.b);
        let wn = slab.species.k0();
        let pre = effective_dipole_moment_sq(&slab.species) * wn * wn * slab.species.resonant_density();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] += pre * xi[(i, j)] / (2.0 * c.omega[i].sqrt() * c.omega[j].sqrt());
            }
        }
    }
    a
}

/// Interaction matrix of the sheets, g† g.
pub fn sheet_delta(sheets: &SheetCouplings) -> DMatrix<Complex64> {
    &sheets.gdag * &sheets.g
}

/// S(Δ) by direct inversion of D_int = D − A/(γ(Δ + i/2)).
pub fn scattering_direct(c: &FewModeCouplings, a: &DMatrix<Complex64>, gamma: f64, detunings: &[f64]) -> Vec<Complex64> {
    detunings
        .iter()
        .map(|&dl| {
            let dint = &c.d - a / Complex64::new(gamma * dl, gamma * 0.5);
            let x = dint.lu().solve(&c.w).expect("interacting propagator is regular");
            c.s_bg * (ONE - 2.0 * PI * I * c.wdag.dot(&x))
        })
        .collect()
}

/// Precomputed Woodbury factors, all in γ-units where dimensionful.
#[derive(Debug, Clone)]
pub struct WoodburyFactors {
    /// W† D⁻¹ g† (1×L).
    pub left: DVector<Complex64>,
    /// g D⁻¹ W (L).
    pub right: DVector<Complex64>,
    /// g D⁻¹ g† / γ (L×L).
    pub level: DMatrix<Complex64>,
    pub s_io_empty: Complex64,
    pub gamma: f64,
}

pub fn woodbury_factors(c: &FewModeCouplings, sheets: &SheetCouplings) -> WoodburyFactors {
    let dw = &c.dinv * &c.w;
    let left = (c.wdag.transpose() * &c.dinv * &sheets.gdag).transpose();
    let right = &sheets.g * &dw;
    let level = &sheets.g * &c.dinv * &sheets.gdag / Complex64::new(sheets.gamma, 0.0);
    WoodburyFactors {
        left,
        right,
        level,
        s_io_empty: c.s_io_empty(),
        gamma: sheets.gamma,
    }
}

/// S(Δ) = S_bg [S_io⁰ + 2πi W†D⁻¹g† (Λ⁻¹ + gD⁻¹g†)⁻¹ gD⁻¹W] with Λ⁻¹ = −(Δ + iγ/2).
pub fn scattering_with_nuclei(c: &FewModeCouplings, sheets: &SheetCouplings, detunings: &[f64]) -> Vec<Complex64> {
    let f = woodbury_factors(c, sheets);
    let l = f.level.nrows();
    detunings
        .iter()
        .map(|&dl| {
            let mut m = f.level.clone();
            for k in 0..l {
                m[(k, k)] -= Complex64::new(dl, 0.5);
            }
            let y = m.lu().solve(&f.right).expect("Λ⁻¹ + gD⁻¹g† is regular for γ > 0");
            c.s_bg * (f.s_io_empty + 2.0 * PI * I * f.left.dot(&y) / f.gamma)
        })
        .collect()
}

/// Single mode with degenerate ensembles: S = S_bg [S_io⁰ − 2πi W†W D⁻² A/(Δ + iγ/2 − D⁻¹A)].
pub fn single_mode_fano(c: &FewModeCouplings, sheets: &SheetCouplings, detunings: &[f64]) -> Result<Vec<Complex64>> {
    if c.basis.len() != 1 {
        return Err(NucavError::InvalidArgument("closed form needs exactly one mode".into()));
    }
    let a: Complex64 = (0..sheets.g.nrows()).map(|k| sheets.gdag[(0, k)] * sheets.g[(k, 0)]).sum();
    let dinv = c.dinv[(0, 0)];
    let ww = c.wdag[0] * c.w[0];
    let s0 = c.s_io_empty();
    Ok(detunings
        .iter()
        .map(|&dl| {
            let x = Complex64::new(sheets.gamma * dl, sheets.gamma * 0.5);
            c.s_bg * (s0 - 2.0 * PI * I * ww * dinv * dinv * a / (x - dinv * a))
        })
        .collect())
}

/// Effective level scheme of the few-mode route, γ-units.
#[derive(Debug, Clone)]
pub struct EffectiveSchemeFM {
    /// Ω = 2π g D⁻¹ W.
    pub omega: DVector<Complex64>,
    /// G = g D⁻¹ g†; its diagonal is F_l = Δ_LS − iΓ_S/2.
    pub g_eff: DMatrix<Complex64>,
    /// F_R = −2πi W†D⁻¹g† g D⁻¹W.
    pub f_r: Complex64,
}

impl EffectiveSchemeFM {
    /// (Δ_LS, Γ_S) of ensemble l.
    pub fn lamb_shift_and_rate(&self, l: usize) -> (f64, f64) {
        let f = self.g_eff[(l, l)];
        (f.re, -2.0 * f.im)
    }
}

pub fn effective_scheme_fm(c: &FewModeCouplings, sheets: &SheetCouplings) -> EffectiveSchemeFM {
    let f = woodbury_factors(c, sheets);
    EffectiveSchemeFM {
        omega: &f.right * Complex64::new(2.0 * PI, 0.0),
        f_r: -2.0 * PI * I * f.left.dot(&f.right) / f.gamma,
        g_eff: f.level,
    }
}

/// Nuclear model used along the few-mode route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuclearModel {
    /// Thin sheets from the ensemble partition, Woodbury-separated.
    Sheets,
    /// Continuum limit over each resonant layer.
    Continuum,
}

/// Empty-cavity reflection through the few-mode route.
pub fn fewmode_empty_reflection(stack: &LayerStack, modes: &[u32], energy: f64, theta: f64) -> Result<Complex64> {
    let cav = extract_cavity(stack)?;
    let basis = FewModeBasis::new(modes.to_vec(), cav.length)?;
    Ok(build_couplings(&basis, cav.n, energy, theta)?.reflection_empty())
}

fn spectrum_at(
    cav: &MirrorCavity,
    basis: &FewModeBasis,
    partition: &EnsemblePartition,
    model: NuclearModel,
    energy: f64,
    theta: f64,
    detunings: &[f64],
) -> Result<Vec<Complex64>> {
    let c = build_couplings(basis, cav.n, energy, theta)?;
    let s = match model {
        NuclearModel::Sheets => {
            let sheets = sheet_couplings(&c, partition)?;
            scattering_with_nuclei(&c, &sheets, detunings)
        }
        NuclearModel::Continuum => {
            if cav.slabs.is_empty() {
                return Err(NucavError::NoResonantLayers);
            }
            let a = thick_layer_delta(&c, &cav.slabs);
            scattering_direct(&c, &a, cav.slabs[0].species.gamma_inv_nm(), detunings)
        }
    };
    Ok(s.into_iter().map(|x| c.to_reflection(x)).collect())
}

/// Nuclear spectrum (layer-formalism reflection amplitude) at fixed (E, θ).
pub fn fewmode_spectrum(
    stack: &LayerStack,
    partition: &EnsemblePartition,
    modes: &[u32],
    model: NuclearModel,
    energy: f64,
    theta: f64,
    detunings: &[f64],
) -> Result<Spectrum> {
    let cav = extract_cavity(stack)?;
    let basis = FewModeBasis::new(modes.to_vec(), cav.length)?;
    let r = spectrum_at(&cav, &basis, partition, model, energy, theta, detunings)?;
    Ok(Spectrum {
        axis: AxisKind::DetuningGamma,
        grid: detunings.to_vec(),
        r,
        route: Route::FewMode,
    })
}

/// Nuclear spectra over angles (outer, rad) × detunings (inner, γ-units).
pub fn fewmode_nuclear_map(
    stack: &LayerStack,
    partition: &EnsemblePartition,
    modes: &[u32],
    model: NuclearModel,
    energy: f64,
    angles: &[f64],
    detunings: &[f64],
) -> Result<Map2D> {
    let cav = extract_cavity(stack)?;
    let basis = FewModeBasis::new(modes.to_vec(), cav.length)?;
    let rows: Vec<Vec<Complex64>> = angles
        .par_iter()
        .map(|&th| spectrum_at(&cav, &basis, partition, model, energy, th, detunings))
        .collect::<Result<_>>()?;
    Ok(Map2D {
        outer_axis: AxisKind::AngleMrad,
        outer: angles.iter().map(|a| a * 1e3).collect(),
        inner_axis: AxisKind::DetuningGamma,
        inner: detunings.to_vec(),
        r: rows.into_iter().flatten().collect(),
        route: Route::FewMode,
    })
}

/// Off-resonant rocking curve through the few-mode route.
pub fn fewmode_rocking_curve(stack: &LayerStack, modes: &[u32], energy: f64, angles: &[f64]) -> Result<Spectrum> {
    let cav = extract_cavity(stack)?;
    let basis = FewModeBasis::new(modes.to_vec(), cav.length)?;
    let r = angles
        .par_iter()
        .map(|&th| Ok(build_couplings(&basis, cav.n, energy, th)?.reflection_empty()))
        .collect::<Result<_>>()?;
    Ok(Spectrum {
        axis: AxisKind::AngleMrad,
        grid: angles.iter().map(|a| a * 1e3).collect(),
        r,
        route: Route::FewMode,
    })
}

/// Off-resonant energies (eV, outer) × angles (rad, inner) map through the few-mode route.
pub fn fewmode_energy_angle_map(stack: &LayerStack, modes: &[u32], energies: &[f64], angles: &[f64]) -> Result<Map2D> {
    let cav = extract_cavity(stack)?;
    let basis = FewModeBasis::new(modes.to_vec(), cav.length)?;
    let na = angles.len();
    let r = (0..energies.len() * na)
        .into_par_iter()
        .map(|k| Ok(build_couplings(&basis, cav.n, energies[k / na], angles[k % na])?.reflection_empty()))
        .collect::<Result<_>>()?;
    Ok(Map2D {
        outer_axis: AxisKind::EnergyKeV,
        outer: energies.iter().map(|e| e * 1e-3).collect(),
        inner_axis: AxisKind::AngleMrad,
        inner: angles.iter().map(|a| a * 1e3).collect(),
        r,
        route: Route::FewMode,
    })
}

/// The same mirror cavity with its single resonant layer replaced by a centered one of
/// thickness `t_res`. The abundance is rescaled so the number of nuclei per area is unchanged.
pub fn with_centered_resonant_layer(stack: &LayerStack, t_res: f64) -> Result<LayerStack> {
    let cav = extract_cavity(stack)?;
    if cav.slabs.len() != 1 {
        return Err(NucavError::FewModeGeometry(format!(
            "expected one resonant layer, found {}",
            cav.slabs.len()
        )));
    }
    if !(t_res > 0.0 && t_res < cav.length) {
        return Err(NucavError::FewModeGeometry(format!(
            "resonant thickness {t_res} nm does not fit in a {} nm cavity",
            cav.length
        )));
    }
    let slab = &cav.slabs[0];
    let mut species = slab.species.clone();
    species.abundance *= (slab.b - slab.a) / t_res;
    let material = stack.layers[1].material.clone();
    let side = 0.5 * (cav.length - t_res);
    LayerStack::new(vec![
        stack.layers[0].clone(),
        Layer::finite(material.clone(), side),
        Layer::finite(material.clone(), t_res).with_resonance(species),
        Layer::finite(material, side),
        Layer::mirror(),
    ])
}
