//! In-plane Fourier-transformed Green's function of a layer stack.
//!
//! Depth z grows downward from the top surface (z = 0). The scalar s-s
//! component is normalized as the solution of
//!
//!   −(∂z² + β(z)²) G(z, z′) = δ(z − z′)
//!
//! so that in free space G = i e^{iβ|z−z′|}/(2β). With this choice the
//! vacuum self-Green's function reproduces the free-space radiative rate in
//! [`crate::level_scheme`] without further constants. For transparent stacks
//!
//!   G(z, z′) = i 𝓔ⁿ(z<) 𝓔⁰(z>) / (2 β_n t_{0/n}),
//!
//! where z< is the shallower point. For opaque stacks (mirror substrate)
//! 𝓔ⁿ/t_{0/n} is replaced by the upward solution u that equals e^{−iβ_0 z}
//! above the stack, and the normalization becomes the Wronskian 2iβ_0.

use num_complex::Complex64;

use crate::error::{NucavError, Result};
use crate::multilayer::StackCoefficients;
use crate::stack::LayerStack;
use crate::units::Polarization;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Extent of the evaluation window into each semi-infinite layer, nm.
pub const EVALUATION_WINDOW_NM: f64 = 1000.0;

/// Below this |t_{0/n}| the through-channel normalization is abandoned.
const OPAQUE_T: f64 = 1e-200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// 𝓔⁰: incident from the top medium.
    Top,
    /// 𝓔ⁿ: incident from the substrate.
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    ThroughChannel,
    Wronskian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValue {
    pub value: Complex64,
    pub normalization: Normalization,
    /// The δ(z − z′) contact term only exists in the zz component; the s-s value never carries it.
    pub contact_term_dropped: bool,
}

/// Immutable per-(E, θ) precomputation, shareable across threads.
#[derive(Debug, Clone)]
pub struct GreenContext {
    pub energy: f64,
    pub theta: f64,
    pub s: StackCoefficients,
    pub p: StackCoefficients,
    tops: Vec<f64>,
    total: f64,
    mirror: bool,
    up_down: Vec<Complex64>,
    up_up: Vec<Complex64>,
}

impl GreenContext {
    /// Profiles of the empty stack (electronic indices only).
    pub fn new(stack: &LayerStack, energy: f64, theta: f64) -> Self {
        Self::with_detuning(stack, energy, theta, None)
    }

    pub fn with_detuning(stack: &LayerStack, energy: f64, theta: f64, detuning: Option<f64>) -> Self {
        let s = StackCoefficients::new(stack, energy, theta, detuning, Polarization::S);
        let p = StackCoefficients::new(stack, energy, theta, detuning, Polarization::P);
        let tops = stack.interface_depths();
        let mirror = stack.has_mirror();
        let m = tops.len();
        let stop = if mirror { m - 1 } else { m };
        let mut a = vec![Complex64::default(); m];
        let mut b = vec![Complex64::default(); m];
        b[0] = ONE;
        for j in 0..stop - 1 {
            let beta = s.beta[j];
            let e = (I * beta * s.d[j]).exp();
            let down = a[j] * e;
            let upw = b[j] / e;
            let f = down + upw;
            let df = I * beta * (down - upw);
            let bn = I * s.beta[j + 1];
            a[j + 1] = (f + df / bn) * 0.5;
            b[j + 1] = (f - df / bn) * 0.5;
        }
        Self {
            energy,
            theta,
            total: stack.total_thickness(),
            s,
            p,
            tops,
            mirror,
            up_down: a,
            up_up: b,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        let hi = if self.mirror { self.total } else { self.total + EVALUATION_WINDOW_NM };
        (-EVALUATION_WINDOW_NM, hi)
    }

    fn check(&self, z: f64) -> Result<()> {
        let (lo, hi) = self.window();
        if z.is_finite() && z >= lo && z <= hi {
            Ok(())
        } else {
            Err(NucavError::OutsideWindow { z, lo, hi })
        }
    }

    /// Layer index and offset from its top. Interfaces belong to the shallower layer.
    fn locate(&self, z: f64) -> (usize, f64) {
        let last = self.tops.len() - 1;
        let mut j = 0;
        for k in (1..=last).rev() {
            if z > self.tops[k] {
                j = k;
                break;
            }
        }
        if self.mirror && j == last {
            j = last - 1;
        }
        (j, z - self.tops[j])
    }

    fn coefficients(&self, q: Polarization) -> &StackCoefficients {
        match q {
            Polarization::S => &self.s,
            Polarization::P => &self.p,
        }
    }

    /// Mode profile in the basis (k̂, k̂×ẑ, ẑ). s-modes only have the middle component.
    pub fn mode_profile(&self, q: Polarization, side: Side, z: f64) -> Result<[Complex64; 3]> {
        self.check(z)?;
        let c = self.coefficients(q);
        let (j, x) = self.locate(z);
        let beta = c.beta[j];
        let d = c.d[j];
        let e = (I * beta * d).exp();
        let den = ONE - c.r_to_0[j] * c.r_to_n[j] * e * e;
        let (amp, zeta, r, sign) = match side {
            Side::Top => (c.t_from_0[j], d - x, c.r_to_n[j], -1.0),
            Side::Bottom => (c.t_from_n[j], x, c.r_to_0[j], 1.0),
        };
        let pre = amp * e / den;
        let fwd = (-I * beta * zeta).exp();
        let back = r * (I * beta * zeta).exp();
        let zero = Complex64::default();
        Ok(match q {
            Polarization::S => [zero, pre * (fwd + back), zero],
            Polarization::P => {
                let kj = c.n[j] * c.k0;
                [
                    pre * sign * beta / kj * (fwd - back),
                    zero,
                    pre * c.k_par / kj * (fwd + back),
                ]
            }
        })
    }

    /// s-polarized 𝓔⁰(z).
    pub fn e_top(&self, z: f64) -> Result<Complex64> {
        Ok(self.mode_profile(Polarization::S, Side::Top, z)?[1])
    }

    /// s-polarized 𝓔ⁿ(z).
    pub fn e_bottom(&self, z: f64) -> Result<Complex64> {
        Ok(self.mode_profile(Polarization::S, Side::Bottom, z)?[1])
    }

    /// Upward-outgoing solution, e^{−iβ_0 z} above the stack.
    pub fn u_up(&self, z: f64) -> Result<Complex64> {
        self.check(z)?;
        let (j, x) = self.locate(z);
        let beta = self.s.beta[j];
        Ok(self.up_down[j] * (I * beta * x).exp() + self.up_up[j] * (-I * beta * x).exp())
    }

    /// r_{0/n} of the empty stack.
    pub fn reflection(&self) -> Complex64 {
        self.s.reflection()
    }

    pub fn beta0(&self) -> Complex64 {
        self.s.beta[0]
    }

    fn opaque(&self) -> bool {
        self.mirror || self.s.transmission().norm() < OPAQUE_T
    }

    /// G_ss(z, z′) with the printed through-channel normalization when available.
    pub fn green(&self, z: f64, zp: f64) -> Result<GreenValue> {
        if self.opaque() {
            return self.green_wronskian(z, zp);
        }
        let (zl, zg) = if z <= zp { (z, zp) } else { (zp, z) };
        let last = self.s.last();
        let value = I * self.e_bottom(zl)? * self.e_top(zg)? / (2.0 * self.s.beta[last] * self.s.transmission());
        Ok(GreenValue {
            value,
            normalization: Normalization::ThroughChannel,
            contact_term_dropped: false,
        })
    }

    /// G_ss(z, z′) from the upward solution and the Wronskian; valid for every stack.
    pub fn green_wronskian(&self, z: f64, zp: f64) -> Result<GreenValue> {
        let (zl, zg) = if z <= zp { (z, zp) } else { (zp, z) };
        let value = I * self.u_up(zl)? * self.e_top(zg)? / (2.0 * self.beta0());
        Ok(GreenValue {
            value,
            normalization: Normalization::Wronskian,
            contact_term_dropped: false,
        })
    }

    /// β(z)² = k0² ε(z) − k∥² of the layer containing z.
    pub fn beta_sq_at(&self, z: f64) -> Complex64 {
        let (j, _) = self.locate(z);
        self.s.beta[j] * self.s.beta[j]
    }
}

/// Convenience wrapper building a context for a single evaluation.
pub fn green_parallel(stack: &LayerStack, energy: f64, theta: f64, z: f64, zp: f64) -> Result<GreenValue> {
    GreenContext::new(stack, energy, theta).green(z, zp)
}

/// CSV dump of G(z, z′) on a square grid.
pub fn green_dump_csv(ctx: &GreenContext, grid: &[f64]) -> Result<String> {
    let mut out = String::from("z_nm,zp_nm,re_G,im_G\n");
    for &z in grid {
        for &zp in grid {
            let g = ctx.green(z, zp)?.value;
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", z, zp, g.re, g.im));
        }
    }
    Ok(out)
}
