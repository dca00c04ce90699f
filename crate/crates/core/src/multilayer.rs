//! Layer formalism: adjacent-interface Fresnel coefficients, the composite
//! recursion between arbitrary layers, and Parratt reflectivity sweeps.
//!
//! Adjacent coefficients (γ^s = 1, γ^p = ε_i/ε_j):
//!
//!   r_ij = (β_i − γ β_j)/(β_i + γ β_j),   t_ij = √γ (1 + r_ij)
//!
//! Composite coefficients through an intermediate layer j (E = e^{iβ_j d_j}):
//!
//!   r_{i/k} = [r_{i/j} + (t_{i/j} t_{j/i} − r_{i/j} r_{j/i}) r_{j/k} E²] / D
//!   t_{i/k} = t_{i/j} t_{j/k} E / D,      D = 1 − r_{j/i} r_{j/k} E²
//!
//! Outer layers carry d = 0, so r_{0/n} is referenced at the top surface and
//! t_{0/n} at the top of the substrate.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::spectrum::{AxisKind, Map2D, Route, Spectrum};
use crate::stack::{LayerStack, Thickness};
use crate::units::{ev_to_inv_nm, resonant_refractive_index, Polarization};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// β = √(k0² n² − k∥²) with Im β ≥ 0, evaluated as k0 √((n−1)(n+1) + sin²θ) to avoid cancellation.
pub fn beta_z(n: Complex64, k0: f64, theta: f64) -> Complex64 {
    let s = theta.sin();
    let radicand = (n - ONE) * (n + ONE) + s * s;
    let b = radicand.sqrt() * k0;
    if b.im < 0.0 {
        -b
    } else {
        b
    }
}

/// Refractive index of every layer; resonant layers use n(Δ) when a detuning is given.
/// The mirror entry is a placeholder and never enters a formula.
pub fn layer_indices(stack: &LayerStack, detuning: Option<f64>) -> Vec<Complex64> {
    stack
        .layers
        .iter()
        .map(|l| match (&l.resonant, detuning) {
            (Some(sp), Some(d)) => resonant_refractive_index(sp, d, &l.material),
            _ => l.material.n(),
        })
        .collect()
}

/// Fresnel coefficients (r_ij, t_ij) between adjacent media.
pub fn fresnel_adjacent(
    q: Polarization,
    beta_i: Complex64,
    beta_j: Complex64,
    eps_i: Complex64,
    eps_j: Complex64,
) -> (Complex64, Complex64) {
    let gamma = match q {
        Polarization::S => ONE,
        Polarization::P => eps_i / eps_j,
    };
    let r = (beta_i - gamma * beta_j) / (beta_i + gamma * beta_j);
    (r, gamma.sqrt() * (ONE + r))
}

/// Reflection off the perfect mirror, seen from the layer above it.
pub fn mirror_reflection(q: Polarization) -> Complex64 {
    match q {
        Polarization::S => -ONE,
        Polarization::P => ONE,
    }
}

/// One step of the composite recursion through intermediate layer j.
#[allow(clippy::too_many_arguments)]
pub fn compose(
    r_ij: Complex64,
    t_ij: Complex64,
    t_ji: Complex64,
    r_ji: Complex64,
    r_jk: Complex64,
    t_jk: Complex64,
    beta_j: Complex64,
    d_j: f64,
) -> (Complex64, Complex64) {
    let e = (I * beta_j * d_j).exp();
    let e2 = e * e;
    let den = ONE - r_ji * r_jk * e2;
    let r = (r_ij + (t_ij * t_ji - r_ij * r_ji) * r_jk * e2) / den;
    let t = t_ij * t_jk * e / den;
    (r, t)
}

/// All composite coefficients needed by the mode profiles, for one (E, θ, Δ, q).
#[derive(Debug, Clone)]
pub struct StackCoefficients {
    pub q: Polarization,
    pub k0: f64,
    pub k_par: f64,
    pub n: Vec<Complex64>,
    pub eps: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub d: Vec<f64>,
    pub mirror: bool,
    /// r_{j,j+1}, t_{j,j+1}
    pub r_down: Vec<Complex64>,
    pub t_down: Vec<Complex64>,
    /// r_{j+1,j}, t_{j+1,j}
    pub r_up: Vec<Complex64>,
    pub t_up: Vec<Complex64>,
    /// r_{j/n}
    pub r_to_n: Vec<Complex64>,
    /// r_{j/0}
    pub r_to_0: Vec<Complex64>,
    /// t_{0/j}
    pub t_from_0: Vec<Complex64>,
    /// t_{n/j}
    pub t_from_n: Vec<Complex64>,
}

impl StackCoefficients {
    pub fn new(stack: &LayerStack, energy: f64, theta: f64, detuning: Option<f64>, q: Polarization) -> Self {
        let k0 = ev_to_inv_nm(energy);
        let n = layer_indices(stack, detuning);
        let m = n.len();
        let last = m - 1;
        let mirror = stack.has_mirror();
        let eps: Vec<Complex64> = n.iter().map(|x| x * x).collect();
        let mut beta: Vec<Complex64> = n.iter().map(|&x| beta_z(x, k0, theta)).collect();
        if mirror {
            beta[last] = Complex64::new(0.0, 0.0);
        }
        let d: Vec<f64> = stack.layers.iter().map(|l| l.d()).collect();

        let mut r_down = vec![Complex64::default(); m - 1];
        let mut t_down = r_down.clone();
        let mut r_up = r_down.clone();
        let mut t_up = r_down.clone();
        for j in 0..m - 1 {
            if mirror && j + 1 == last {
                r_down[j] = mirror_reflection(q);
                t_down[j] = Complex64::default();
                r_up[j] = Complex64::default();
                t_up[j] = Complex64::default();
            } else {
                let (r, t) = fresnel_adjacent(q, beta[j], beta[j + 1], eps[j], eps[j + 1]);
                let (rb, tb) = fresnel_adjacent(q, beta[j + 1], beta[j], eps[j + 1], eps[j]);
                r_down[j] = r;
                t_down[j] = t;
                r_up[j] = rb;
                t_up[j] = tb;
            }
        }

        let zero = Complex64::default();
        let mut r_to_n = vec![zero; m];
        r_to_n[last] = zero;
        if m >= 2 {
            r_to_n[last - 1] = r_down[last - 1];
            for j in (0..last.saturating_sub(1)).rev() {
                let (r, _) = compose(
                    r_down[j],
                    t_down[j],
                    t_up[j],
                    r_up[j],
                    r_to_n[j + 1],
                    zero,
                    beta[j + 1],
                    d[j + 1],
                );
                r_to_n[j] = r;
            }
        }

        let mut r_to_0 = vec![zero; m];
        let mut t_from_0 = vec![ONE; m];
        for j in 1..m {
            if mirror && j == last {
                t_from_0[j] = zero;
                r_to_0[j] = zero;
                continue;
            }
            // intermediate layer j-1 between 0 and j
            let (_, t) = compose(
                zero,
                t_from_0[j - 1],
                zero,
                r_to_0[j - 1],
                r_down[j - 1],
                t_down[j - 1],
                beta[j - 1],
                d[j - 1],
            );
            t_from_0[j] = t;
            let (r, _) = compose(
                r_up[j - 1],
                t_up[j - 1],
                t_down[j - 1],
                r_down[j - 1],
                r_to_0[j - 1],
                zero,
                beta[j - 1],
                d[j - 1],
            );
            r_to_0[j] = r;
        }

        let mut t_from_n = vec![ONE; m];
        if mirror {
            for v in t_from_n.iter_mut() {
                *v = zero;
            }
        } else {
            for j in (0..last).rev() {
                let (_, t) = compose(
                    zero,
                    t_from_n[j + 1],
                    zero,
                    r_to_n[j + 1],
                    r_up[j],
                    t_up[j],
                    beta[j + 1],
                    d[j + 1],
                );
                t_from_n[j] = t;
            }
        }

        Self {
            q,
            k0,
            k_par: k0 * theta.cos(),
            n,
            eps,
            beta,
            d,
            mirror,
            r_down,
            t_down,
            r_up,
            t_up,
            r_to_n,
            r_to_0,
            t_from_0,
            t_from_n,
        }
    }

    pub fn last(&self) -> usize {
        self.n.len() - 1
    }

    /// r_{0/n}: reflection of the whole stack at the top surface.
    pub fn reflection(&self) -> Complex64 {
        self.r_to_n[0]
    }

    /// t_{0/n}: transmission into the substrate, at its surface.
    pub fn transmission(&self) -> Complex64 {
        self.t_from_0[self.last()]
    }

    /// Adjacent (r, t) from layer a into neighbouring layer b.
    fn adjacent(&self, a: usize, b: usize) -> (Complex64, Complex64) {
        if b == a + 1 {
            (self.r_down[a], self.t_down[a])
        } else {
            (self.r_up[b], self.t_up[b])
        }
    }

    /// (r_{i/k}, t_{i/k}) for arbitrary i ≠ k, by direct recursion starting at the neighbour of i.
    pub fn composite(&self, i: usize, k: usize) -> (Complex64, Complex64) {
        assert!(i != k, "composite coefficients need distinct layers");
        let step = |x: usize| if k > i { x + 1 } else { x - 1 };
        let j = step(i);
        let (r_ij, t_ij) = self.adjacent(i, j);
        if j == k {
            return (r_ij, t_ij);
        }
        let (r_ji, t_ji) = self.adjacent(j, i);
        let (r_jk, t_jk) = self.composite(j, k);
        compose(r_ij, t_ij, t_ji, r_ji, r_jk, t_jk, self.beta[j], self.d[j])
    }

    /// (r_{i/k}, t_{i/k}) composed through an arbitrary intermediate j strictly between i and k.
    pub fn composite_via(&self, i: usize, j: usize, k: usize) -> (Complex64, Complex64) {
        let (r_ij, t_ij) = self.composite(i, j);
        let (r_ji, t_ji) = self.composite(j, i);
        let (r_jk, t_jk) = self.composite(j, k);
        compose(r_ij, t_ij, t_ji, r_ji, r_jk, t_jk, self.beta[j], self.d[j])
    }
}

/// Parratt recursion, bottom-up, returning r at the top surface.
fn parratt(stack: &LayerStack, k0: f64, theta: f64, detuning: Option<f64>) -> Complex64 {
    let n = layer_indices(stack, detuning);
    let last = n.len() - 1;
    let mirror = stack.has_mirror();
    let mut r = Complex64::default();
    let mut beta_below = beta_z(n[last], k0, theta);
    for j in (0..last).rev() {
        let beta_j = beta_z(n[j], k0, theta);
        r = if mirror && j + 1 == last {
            -ONE
        } else {
            let rj = (beta_j - beta_below) / (beta_j + beta_below);
            let ph = (I * beta_below * 2.0 * stack.layers[j + 1].d()).exp();
            (rj + r * ph) / (ONE + rj * r * ph)
        };
        beta_below = beta_j;
    }
    r
}

/// s-polarized reflection amplitude of the stack at the top surface.
pub fn stack_reflection(stack: &LayerStack, energy: f64, theta: f64, detuning: Option<f64>) -> Complex64 {
    parratt(stack, ev_to_inv_nm(energy), theta, detuning)
}

/// s-polarized transmission amplitude at the substrate surface (0 for a mirror).
pub fn stack_transmission(stack: &LayerStack, energy: f64, theta: f64, detuning: Option<f64>) -> Complex64 {
    if stack.has_mirror() {
        return Complex64::default();
    }
    StackCoefficients::new(stack, energy, theta, detuning, Polarization::S).transmission()
}

/// |r|² + Re(β_n)/β_0 |t|² for s-polarization.
pub fn flux_balance(stack: &LayerStack, energy: f64, theta: f64) -> f64 {
    let c = StackCoefficients::new(stack, energy, theta, None, Polarization::S);
    let last = c.last();
    let mut f = c.reflection().norm_sqr();
    if !c.mirror {
        f += c.beta[last].re / c.beta[0].re * c.transmission().norm_sqr();
    }
    f
}

/// Off-resonant reflectance versus angle (θ in rad, reported in mrad).
pub fn rocking_curve(stack: &LayerStack, energy: f64, angles: &[f64]) -> Spectrum {
    let r = angles
        .par_iter()
        .map(|&th| stack_reflection(stack, energy, th, None))
        .collect();
    Spectrum {
        axis: AxisKind::AngleMrad,
        grid: angles.iter().map(|a| a * 1e3).collect(),
        r,
        route: Route::Oracle,
    }
}

/// Off-resonant map over energies (eV, outer, reported in keV) and angles (rad, inner).
pub fn energy_angle_map(stack: &LayerStack, energies: &[f64], angles: &[f64]) -> Map2D {
    let na = angles.len();
    let r = (0..energies.len() * na)
        .into_par_iter()
        .map(|idx| stack_reflection(stack, energies[idx / na], angles[idx % na], None))
        .collect();
    Map2D {
        outer_axis: AxisKind::EnergyKeV,
        outer: energies.iter().map(|e| e * 1e-3).collect(),
        inner_axis: AxisKind::AngleMrad,
        inner: angles.iter().map(|a| a * 1e3).collect(),
        r,
        route: Route::Oracle,
    }
}

/// Nuclear spectrum at fixed (E, θ) over detunings in γ-units.
pub fn nuclear_spectrum(stack: &LayerStack, energy: f64, theta: f64, detunings: &[f64]) -> Spectrum {
    let r = detunings
        .par_iter()
        .map(|&d| stack_reflection(stack, energy, theta, Some(d)))
        .collect();
    Spectrum {
        axis: AxisKind::DetuningGamma,
        grid: detunings.to_vec(),
        r,
        route: Route::Oracle,
    }
}

/// Nuclear spectra over angles (outer, rad) × detunings (inner, γ-units).
pub fn nuclear_map(stack: &LayerStack, energy: f64, angles: &[f64], detunings: &[f64]) -> Map2D {
    let nd = detunings.len();
    let r = (0..angles.len() * nd)
        .into_par_iter()
        .map(|idx| stack_reflection(stack, energy, angles[idx / nd], Some(detunings[idx % nd])))
        .collect();
    Map2D {
        outer_axis: AxisKind::AngleMrad,
        outer: angles.iter().map(|a| a * 1e3).collect(),
        inner_axis: AxisKind::DetuningGamma,
        inner: detunings.to_vec(),
        r,
        route: Route::Oracle,
    }
}

/// True when the layer is a perfect mirror.
pub fn is_mirror(stack: &LayerStack, j: usize) -> bool {
    stack.layers[j].thickness == Thickness::Mirror
}
