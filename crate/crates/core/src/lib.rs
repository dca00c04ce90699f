//! Grazing-incidence x-ray cavity spectra with Mössbauer nuclei.
//!
//! Three independent routes to the same reflection amplitude:
//! the layer formalism ([`multilayer`]), the few-mode input-output theory
//! for mirror-backed cavities ([`fewmode`]) and the layered-media Green's
//! function with its effective nuclear level scheme ([`green`], [`level_scheme`]).

pub mod analysis;
pub mod error;
pub mod fano;
pub mod fewmode;
pub mod green;
pub mod level_scheme;
pub mod multilayer;
pub mod spectrum;
pub mod stack;
pub mod units;

pub use error::{NucavError, Result};
pub use spectrum::{linspace, AxisKind, Map2D, Route, Spectrum};
pub use stack::{load_stack, parse_stack, serialize_stack, EnsemblePartition, Layer, LayerStack, SubEnsemble, Thickness};
pub use units::{EnergyAngle, NuclearSpecies, OpticalConstants, Polarization};
