//! Sweep results shared by all routes.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    AngleMrad,
    EnergyKeV,
    DetuningGamma,
}

impl AxisKind {
    pub fn column(&self) -> &'static str {
        match self {
            AxisKind::AngleMrad => "angle_mrad",
            AxisKind::EnergyKeV => "energy_keV",
            AxisKind::DetuningGamma => "detuning_gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Oracle,
    FewMode,
    Green,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Oracle => "oracle",
            Route::FewMode => "fewmode",
            Route::Green => "green",
        }
    }
}

/// Complex reflection amplitudes on a 1D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub axis: AxisKind,
    pub grid: Vec<f64>,
    pub r: Vec<Complex64>,
    pub route: Route,
}

impl Spectrum {
    pub fn reflectance(&self) -> Vec<f64> {
        self.r.iter().map(|r| r.norm_sqr()).collect()
    }
}

/// Complex reflection amplitudes on an outer × inner grid, stored row-major (outer index slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct Map2D {
    pub outer_axis: AxisKind,
    pub outer: Vec<f64>,
    pub inner_axis: AxisKind,
    pub inner: Vec<f64>,
    pub r: Vec<Complex64>,
    pub route: Route,
}

impl Map2D {
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.r[i * self.inner.len() + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n = self.inner.len();
        &self.r[i * n..(i + 1) * n]
    }

    pub fn reflectance(&self) -> Vec<f64> {
        self.r.iter().map(|r| r.norm_sqr()).collect()
    }
}

/// Inclusive linear grid of `count` points from `start` to `stop`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}
