//! Shared fixtures and an independent reference for the layer formalism.
//!
//! The reference propagates (E, dE/dz) through the stack with 2×2
//! characteristic matrices, top to bottom, and solves the boundary conditions
//! at the end. It shares no code with the library.
#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use nucav_core::stack::{load_stack, EnsemblePartition, LayerStack, Thickness};

pub const E0: f64 = 14412.5;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn load(name: &str) -> (LayerStack, EnsemblePartition) {
    load_stack(config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn mrad(x: f64) -> f64 {
    x * 1e-3
}

fn kz(n: Complex64, k0: f64, theta: f64) -> Complex64 {
    let c = theta.cos();
    let b = (n * n - c * c).sqrt() * k0;
    if b.im < 0.0 {
        -b
    } else {
        b
    }
}

fn index(layer: &nucav_core::Layer, detuning: Option<f64>) -> Complex64 {
    let base = Complex64::new(1.0 - layer.material.delta, layer.material.beta_abs);
    match (&layer.resonant, detuning) {
        (Some(sp), Some(d)) => {
            let k0 = sp.resonance_energy / 197.3269804;
            let amp = std::f64::consts::PI * sp.lamb_moessbauer_f * sp.number_density * sp.abundance
                / k0.powi(3)
                * sp.spin_ratio
                / (1.0 + sp.internal_conversion_alpha);
            base - amp / Complex64::new(2.0 * d, 1.0)
        }
        _ => base,
    }
}

/// s-polarized reflection amplitude by characteristic matrices.
pub fn reference_reflection(stack: &LayerStack, energy: f64, theta: f64, detuning: Option<f64>) -> Complex64 {
    let k0 = energy / 197.3269804;
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let layers = &stack.layers;
    let last = layers.len() - 1;
    // m maps (E, E') at the top surface to (E, E') at the substrate surface.
    let mut m = [[one, Complex64::default()], [Complex64::default(), one]];
    for l in &layers[1..last] {
        let d = match l.thickness {
            Thickness::Finite(d) => d,
            _ => unreachable!("inner layers are finite"),
        };
        let b = kz(index(l, detuning), k0, theta);
        let (c, s) = ((b * d).cos(), (b * d).sin());
        let step = [[c, s / b], [-b * s, c]];
        m = [
            [
                step[0][0] * m[0][0] + step[0][1] * m[1][0],
                step[0][0] * m[0][1] + step[0][1] * m[1][1],
            ],
            [
                step[1][0] * m[0][0] + step[1][1] * m[1][0],
                step[1][0] * m[0][1] + step[1][1] * m[1][1],
            ],
        ];
    }
    let b0 = kz(index(&layers[0], detuning), k0, theta);
    if layers[last].thickness == Thickness::Mirror {
        let num = m[0][0] + i * b0 * m[0][1];
        let den = m[0][0] - i * b0 * m[0][1];
        return -num / den;
    }
    let bn = kz(index(&layers[last], detuning), k0, theta);
    let a = m[1][0] - i * bn * m[0][0];
    let b = i * b0 * (m[1][1] - i * bn * m[0][1]);
    -(a + b) / (a - b)
}

pub fn max_abs_reflectance_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs()).fold(0.0, f64::max)
}
