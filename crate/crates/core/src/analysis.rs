//! Grids, comparisons between routes, minimum search, convergence studies and file formats.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NucavError, Result};
use crate::fano::{fano_fit, FanoFit};
use crate::level_scheme::{build_level_scheme, green_spectrum, LevelScheme};
use crate::multilayer::nuclear_spectrum;
use crate::spectrum::{linspace, Map2D, Route, Spectrum};
use crate::stack::{EnsemblePartition, LayerStack};

/// Inclusive grid (start, stop, count).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        let g = Self { start, stop, count };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(NucavError::InvalidGrid(format!("{self:?}")));
        }
        if self.count > 1 && self.start == self.stop {
            return Err(NucavError::InvalidGrid(format!("{self:?} is not strictly monotone")));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }

    /// Parses "start:stop:count".
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || NucavError::InvalidGrid(format!("expected start:stop:count, got '{text}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let stop = parts[1].trim().parse().map_err(|_| bad())?;
        let count = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(start, stop, count)
    }

    /// Detuning ±200γ, 801 points.
    pub fn default_detuning() -> Self {
        Self { start: -200.0, stop: 200.0, count: 801 }
    }

    /// Angle 1–10 mrad, 901 points (values in mrad).
    pub fn default_angle_mrad() -> Self {
        Self { start: 1.0, stop: 10.0, count: 901 }
    }
}

/// Number of worker threads from NUCAV_THREADS, if set.
pub fn configured_threads() -> Option<usize> {
    std::env::var("NUCAV_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` inside a pool capped by NUCAV_THREADS (global pool otherwise).
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match configured_threads() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = format!("{},re_r,im_r,R\n", s.axis.column());
    for (x, r) in s.grid.iter().zip(&s.r) {
        out.push_str(&format!("{},{},{},{}\n", fmt(*x), fmt(r.re), fmt(r.im), fmt(r.norm_sqr())));
    }
    out
}

pub fn map_csv(m: &Map2D) -> String {
    let mut out = format!("{},{},re_r,im_r,R\n", m.outer_axis.column(), m.inner_axis.column());
    for (i, o) in m.outer.iter().enumerate() {
        for (j, x) in m.inner.iter().enumerate() {
            let r = m.at(i, j);
            out.push_str(&format!("{},{},{},{},{}\n", fmt(*o), fmt(*x), fmt(r.re), fmt(r.im), fmt(r.norm_sqr())));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub routes: (String, String),
    pub grid_size: usize,
    pub max_abs_dev: f64,
    pub max_rel_dev: f64,
    /// Grid index of the largest absolute deviation.
    pub worst_index: usize,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

impl ComparisonReport {
    /// Compares reflectances |r|². `metric` selects which deviation the threshold applies to.
    pub fn from_amplitudes(
        a: &[Complex64],
        b: &[Complex64],
        routes: (Route, Route),
        threshold: Option<(f64, Metric)>,
    ) -> Self {
        assert_eq!(a.len(), b.len(), "compared grids differ in size");
        let (mut max_abs, mut max_rel, mut worst) = (0.0f64, 0.0f64, 0);
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            let (ra, rb) = (x.norm_sqr(), y.norm_sqr());
            let d = (ra - rb).abs();
            if d > max_abs {
                max_abs = d;
                worst = k;
            }
            let rel = if rb > 0.0 { d / rb } else if d == 0.0 { 0.0 } else { f64::INFINITY };
            max_rel = max_rel.max(rel);
        }
        let pass = threshold.map(|(t, m)| match m {
            Metric::Absolute => max_abs < t,
            Metric::Relative => max_rel < t,
        });
        Self {
            routes: (routes.0.name().into(), routes.1.name().into()),
            grid_size: a.len(),
            max_abs_dev: max_abs,
            max_rel_dev: max_rel,
            worst_index: worst,
            threshold: threshold.map(|t| t.0),
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Absolute,
    Relative,
}

/// Local minima of R(θ): strict 3-point test, refined by a parabola through the triple.
pub fn find_rocking_minima(s: &Spectrum) -> Vec<f64> {
    let r = s.reflectance();
    let x = &s.grid;
    let mut out = Vec::new();
    for k in 1..r.len().saturating_sub(1) {
        if r[k] < r[k - 1] && r[k] <= r[k + 1] {
            let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
            let (y0, y1, y2) = (r[k - 1], r[k], r[k + 1]);
            let den = (x0 - x1) * (x0 - x2) * (x1 - x2);
            let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
            let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
            let v = if a > 0.0 { -b / (2.0 * a) } else { x1 };
            out.push(v.clamp(x0.min(x2), x0.max(x2)));
        }
    }
    out
}

/// Same as [`find_rocking_minima`], erroring when nothing is found.
pub fn require_minima(s: &Spectrum) -> Result<Vec<f64>> {
    let m = find_rocking_minima(s);
    if m.is_empty() {
        Err(NucavError::NoMinima)
    } else {
        Ok(m)
    }
}

/// Green's-function route over angles (outer, rad) × detunings (inner).
pub fn green_nuclear_map(
    stack: &LayerStack,
    partition: &EnsemblePartition,
    energy: f64,
    angles: &[f64],
    detunings: &[f64],
) -> Result<Map2D> {
    let rows: Vec<Spectrum> = angles
        .par_iter()
        .map(|&th| green_spectrum(stack, partition, energy, th, detunings))
        .collect::<Result<_>>()?;
    Ok(Map2D {
        outer_axis: crate::spectrum::AxisKind::AngleMrad,
        outer: angles.iter().map(|a| a * 1e3).collect(),
        inner_axis: crate::spectrum::AxisKind::DetuningGamma,
        inner: detunings.to_vec(),
        r: rows.into_iter().flat_map(|s| s.r).collect(),
        route: Route::Green,
    })
}

/// Deviation of a refinement sequence against a fixed reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStep {
    pub parameter: u32,
    pub max_abs_dev: f64,
    pub max_rel_dev: f64,
}

/// Max deviations of `run(p)` from `reference` for each refinement parameter p.
pub fn converge(
    reference: &[Complex64],
    parameters: &[u32],
    route: Route,
    mut run: impl FnMut(u32) -> Result<Vec<Complex64>>,
) -> Result<Vec<ConvergenceStep>> {
    parameters
        .iter()
        .map(|&p| {
            let r = run(p)?;
            let rep = ComparisonReport::from_amplitudes(&r, reference, (route, Route::Oracle), None);
            Ok(ConvergenceStep {
                parameter: p,
                max_abs_dev: rep.max_abs_dev,
                max_rel_dev: rep.max_rel_dev,
            })
        })
        .collect()
}

/// True when each step is no worse than the previous one times (1 + slack).
pub fn is_monotone(steps: &[ConvergenceStep], slack: f64, use_relative: bool) -> bool {
    steps.windows(2).all(|w| {
        let (a, b) = if use_relative {
            (w[0].max_rel_dev, w[1].max_rel_dev)
        } else {
            (w[0].max_abs_dev, w[1].max_abs_dev)
        };
        b <= a * (1.0 + slack)
    })
}

/// One row of a Fano sweep: fit of the oracle spectrum beside the level-scheme diagonal.
#[derive(Debug)]
pub struct FanoSweepRow {
    pub theta: f64,
    pub fit: Result<FanoFit>,
    pub scheme: LevelScheme,
}

impl FanoSweepRow {
    /// Δ_11 + i(1 + γ_11)/2: the predicted complex pole of the single-ensemble response.
    pub fn predicted_pole(&self) -> Complex64 {
        let c = self.scheme.coupling[(0, 0)];
        Complex64::new(c.re, 0.5 + c.im)
    }

    /// δ1 + iγ1/2 of the fit.
    pub fn fitted_pole(&self) -> Option<Complex64> {
        self.fit.as_ref().ok().map(|f| Complex64::new(f.params.delta1, 0.5 * f.params.gamma1))
    }
}

/// Fano fits of the oracle spectrum and level schemes across angles. The partition must contain one ensemble.
pub fn fano_sweep(
    stack: &LayerStack,
    partition: &EnsemblePartition,
    energy: f64,
    angles: &[f64],
    detunings: &[f64],
) -> Result<Vec<FanoSweepRow>> {
    if partition.len() != 1 {
        return Err(NucavError::InvalidArgument(format!(
            "Fano sweep needs a single ensemble, the partition has {}",
            partition.len()
        )));
    }
    angles
        .par_iter()
        .map(|&th| {
            let spec = nuclear_spectrum(stack, energy, th, detunings);
            Ok(FanoSweepRow {
                theta: th,
                fit: fano_fit(&spec),
                scheme: build_level_scheme(stack, partition, energy, th)?,
            })
        })
        .collect()
}
