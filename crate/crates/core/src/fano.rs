//! Fano line-shape fit R(Δ) = σ0 |q + ε|²/(1 + ε²), ε = (Δ − δ1)/(γ1/2).
//!
//! Damped Gauss-Newton (Levenberg-Marquardt) with an analytic Jacobian,
//! restarted from several asymmetry parameters q. Results are reported in the
//! canonical branch γ1 > 0, Im q ≥ 0, which leaves R unchanged.

use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64;

use crate::error::{NucavError, Result};
use crate::spectrum::Spectrum;

pub const MAX_ITERATIONS: usize = 500;
pub const REL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoParams {
    pub sigma0: f64,
    pub q: Complex64,
    pub delta1: f64,
    pub gamma1: f64,
}

impl FanoParams {
    pub fn reflectance(&self, detuning: f64) -> f64 {
        let e = 2.0 * (detuning - self.delta1) / self.gamma1;
        self.sigma0 * (self.q + e).norm_sqr() / (1.0 + e * e)
    }

    fn from_vec(v: &Vector5<f64>) -> Self {
        Self {
            sigma0: v[0],
            q: Complex64::new(v[1], v[2]),
            delta1: v[3],
            gamma1: v[4],
        }
    }

    fn canonical(mut self) -> Self {
        if self.gamma1 < 0.0 {
            self.gamma1 = -self.gamma1;
            self.q.re = -self.q.re;
        }
        self.q.im = self.q.im.abs();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoFit {
    pub params: FanoParams,
    /// RMS reflectance residual over the grid.
    pub residual: f64,
    pub iterations: usize,
}

fn residuals_and_jacobian(p: &Vector5<f64>, x: &[f64], y: &[f64], jac: Option<&mut Vec<Vector5<f64>>>) -> Vec<f64> {
    let (s0, qr, qi, d1, g1) = (p[0], p[1], p[2], p[3], p[4]);
    let mut res = Vec::with_capacity(x.len());
    let mut rows = Vec::new();
    let want = jac.is_some();
    for (&xi, &yi) in x.iter().zip(y) {
        let e = 2.0 * (xi - d1) / g1;
        let num = (qr + e).powi(2) + qi * qi;
        let den = 1.0 + e * e;
        res.push(s0 * num / den - yi);
        if want {
            let dr_de = s0 * (2.0 * (qr + e) * den - 2.0 * e * num) / (den * den);
            rows.push(Vector5::new(
                num / den,
                s0 * 2.0 * (qr + e) / den,
                s0 * 2.0 * qi / den,
                dr_de * (-2.0 / g1),
                dr_de * (-e / g1),
            ));
        }
    }
    if let Some(j) = jac {
        *j = rows;
    }
    res
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// One Levenberg-Marquardt run. Returns (params, cost, iterations, converged).
fn levenberg_marquardt(start: Vector5<f64>, x: &[f64], y: &[f64]) -> (Vector5<f64>, f64, usize, bool) {
    let mut p = start;
    let mut jac = Vec::new();
    let mut r = residuals_and_jacobian(&p, x, y, Some(&mut jac));
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    for it in 1..=MAX_ITERATIONS {
        let mut jtj = Matrix5::zeros();
        let mut jtr = Vector5::zeros();
        for (row, ri) in jac.iter().zip(&r) {
            jtj += row * row.transpose();
            jtr += row * *ri;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for k in 0..5 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let step = match a.lu().solve(&(-jtr)) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial = p + step;
            if trial[4] == 0.0 || !trial.iter().all(|v| v.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let rt = residuals_and_jacobian(&trial, x, y, None);
            let ct = cost(&rt);
            if ct < c {
                let rel = (c - ct) / c.max(f64::MIN_POSITIVE);
                p = trial;
                r = residuals_and_jacobian(&p, x, y, Some(&mut jac));
                c = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < REL_TOLERANCE || c < 1e-32 * scale {
                    return (p, c, it, true);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent direction left: stationary point.
            return (p, c, it, true);
        }
    }
    (p, c, MAX_ITERATIONS, false)
}

/// Least-squares Fano fit of reflectance samples.
pub fn fano_fit_data(detunings: &[f64], reflectance: &[f64]) -> Result<FanoFit> {
    let n = detunings.len();
    if n < 6 || n != reflectance.len() {
        return Err(NucavError::InvalidArgument("Fano fit needs at least six matching samples".into()));
    }
    let background = 0.5 * (reflectance[0] + reflectance[n - 1]);
    let (mut k_ext, mut dev) = (0, 0.0);
    for (k, &v) in reflectance.iter().enumerate() {
        if (v - background).abs() > dev {
            dev = (v - background).abs();
            k_ext = k;
        }
    }
    let centre = detunings[k_ext];
    let half = background + 0.5 * (reflectance[k_ext] - background);
    let crosses = |k: usize| (reflectance[k] - half) * (reflectance[k_ext] - half) <= 0.0;
    let lo = (0..k_ext).rev().find(|&k| crosses(k)).unwrap_or(0);
    let hi = (k_ext..n).find(|&k| crosses(k)).unwrap_or(n - 1);
    let width = (detunings[hi] - detunings[lo]).abs().max((detunings[1] - detunings[0]).abs());
    let sigma0 = background.max(1e-12);

    let mut best: Option<(Vector5<f64>, f64, usize, bool)> = None;
    for &qr in &[0.0, 0.3, -0.3, 1.0, -1.0, 3.0, -3.0] {
        for &qi in &[0.1, 1.0] {
            let start = Vector5::new(sigma0, qr, qi, centre, width);
            let run = levenberg_marquardt(start, detunings, reflectance);
            let better = match &best {
                None => true,
                Some(b) => (run.3 && !b.3) || (run.3 == b.3 && run.1 < b.1),
            };
            if better {
                best = Some(run);
            }
        }
    }
    let (p, c, iterations, converged) = best.expect("at least one start");
    if !converged {
        return Err(NucavError::FitFailed {
            iterations,
            cost: c,
            rel_decrease: f64::NAN,
        });
    }
    Ok(FanoFit {
        params: FanoParams::from_vec(&p).canonical(),
        residual: (2.0 * c / n as f64).sqrt(),
        iterations,
    })
}

pub fn fano_fit(spectrum: &Spectrum) -> Result<FanoFit> {
    fano_fit_data(&spectrum.grid, &spectrum.reflectance())
}

impl FanoFit {
    pub fn csv_header() -> &'static str {
        "angle_mrad,sigma0,re_q,im_q,delta1_gamma,gamma1_gamma,residual"
    }

    pub fn csv_row(&self, angle_mrad: f64) -> String {
        let p = &self.params;
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            angle_mrad, p.sigma0, p.q.re, p.q.im, p.delta1, p.gamma1, self.residual
        )
    }
}
