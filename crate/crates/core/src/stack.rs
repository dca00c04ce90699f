//! Layer stacks, resonant sub-ensembles and the stack configuration document.
//!
//! Geometry convention: depth z (nm) increases downward into the stack. The top
//! surface (bottom of the semi-infinite layer 0) sits at z = 0 and layer j ≥ 1
//! occupies [z̃_j, z̃_j + d_j]. The illumination side is layer 0.
//!
//! Document schema (TOML):
//!
//! ```toml
//! description = "..."            # optional
//! [materials.Fe]
//! delta = 7.42e-6
//! beta = 3.36e-7
//!
//! [[layers]]
//! material = "vacuum"           # built in, need not be listed
//! thickness_nm = "semi-infinite"
//!
//! [[layers]]
//! material = "Fe"
//! thickness_nm = 0.5
//! [layers.resonant]             # NuclearSpecies fields
//! resonance_energy = 14412.5
//! ...
//!
//! [[layers]]
//! thickness_nm = "mirror"
//!
//! [partition]                   # layer index -> sub-ensemble count
//! "2" = 3
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NucavError, Result};
use crate::units::{NuclearSpecies, OpticalConstants};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thickness {
    Finite(f64),
    SemiInfinite,
    /// Perfect mirror substrate: r = −1 (s), t = 0 at its surface.
    Mirror,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub material: OpticalConstants,
    pub thickness: Thickness,
    pub resonant: Option<NuclearSpecies>,
}

impl Layer {
    pub fn finite(material: OpticalConstants, d: f64) -> Self {
        Self {
            material,
            thickness: Thickness::Finite(d),
            resonant: None,
        }
    }

    pub fn semi_infinite(material: OpticalConstants) -> Self {
        Self {
            material,
            thickness: Thickness::SemiInfinite,
            resonant: None,
        }
    }

    pub fn mirror() -> Self {
        Self {
            material: OpticalConstants::new("mirror", 0.0, 0.0),
            thickness: Thickness::Mirror,
            resonant: None,
        }
    }

    pub fn with_resonance(mut self, species: NuclearSpecies) -> Self {
        self.resonant = Some(species);
        self
    }

    /// Thickness used by the recursion: 0 for the outer layers.
    pub fn d(&self) -> f64 {
        match self.thickness {
            Thickness::Finite(d) => d,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub description: Option<String>,
    pub layers: Vec<Layer>,
}

impl LayerStack {
    /// Builds a stack and checks the ordering invariants.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let s = Self {
            description: None,
            layers,
        };
        let errs = s.violations();
        if errs.is_empty() {
            Ok(s)
        } else {
            Err(NucavError::Config(errs))
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let n = self.layers.len();
        if n < 2 {
            errs.push(format!("stack needs at least 2 layers, found {n}"));
            return errs;
        }
        for (j, l) in self.layers.iter().enumerate() {
            let outer = j == 0 || j == n - 1;
            match l.thickness {
                Thickness::Finite(d) => {
                    if outer {
                        errs.push(format!("layer {j}: outer layers must be semi-infinite or a mirror"));
                    } else if !(d > 0.0) || !d.is_finite() {
                        errs.push(format!("layer {j}: non-positive thickness {d}"));
                    }
                }
                Thickness::SemiInfinite => {
                    if !outer {
                        errs.push(format!("layer {j}: only the first and last layer may be semi-infinite"));
                    }
                }
                Thickness::Mirror => {
                    if j != n - 1 || j == 0 {
                        errs.push(format!("layer {j}: a mirror may only terminate the stack"));
                    }
                    if l.resonant.is_some() {
                        errs.push(format!("layer {j}: mirror cannot carry a resonance"));
                    }
                }
            }
            if l.thickness != Thickness::Mirror {
                let (e, _) = l.material.check();
                errs.extend(e.into_iter().map(|m| format!("layer {j}: {m}")));
            }
            if let Some(sp) = &l.resonant {
                errs.extend(sp.validate(&format!("layer {j} resonance")));
                if outer {
                    errs.push(format!("layer {j}: resonant layers must be finite"));
                }
            }
        }
        errs
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Index of the last layer.
    pub fn last(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn has_mirror(&self) -> bool {
        self.layers.last().map(|l| l.thickness == Thickness::Mirror).unwrap_or(false)
    }

    /// Depth of the top surface of every layer (z̃_j). Entry 0 is the top surface, 0.
    pub fn interface_depths(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.layers.len());
        let mut acc = 0.0;
        z.push(0.0);
        for l in &self.layers[1..] {
            z.push(acc);
            acc += l.d();
        }
        z
    }

    /// Total thickness of the finite layers.
    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.d()).sum()
    }

    /// Layer containing depth z. Interfaces belong to the deeper layer.
    pub fn layer_at(&self, z: f64) -> usize {
        let tops = self.interface_depths();
        for j in (1..self.layers.len()).rev() {
            if z >= tops[j] {
                return j;
            }
        }
        0
    }

    pub fn resonant_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.resonant.is_some())
            .map(|(j, _)| j)
            .collect()
    }

    /// True when no layer absorbs (β = 0 everywhere).
    pub fn is_lossless(&self) -> bool {
        self.layers.iter().all(|l| l.material.beta_abs == 0.0)
    }

    /// The same stack illuminated from the substrate side. Not defined for mirrors.
    pub fn reversed(&self) -> Result<Self> {
        if self.has_mirror() {
            return Err(NucavError::InvalidArgument("cannot reverse a mirror-terminated stack".into()));
        }
        let mut layers = self.layers.clone();
        layers.reverse();
        Ok(Self {
            description: self.description.clone(),
            layers,
        })
    }

    /// Copy with every resonance removed (the empty cavity).
    pub fn without_resonances(&self) -> Self {
        let mut s = self.clone();
        for l in &mut s.layers {
            l.resonant = None;
        }
        s
    }
}

/// One sub-ensemble of a resonant layer, treated as a thin sheet at its center.
#[derive(Debug, Clone, PartialEq)]
pub struct SubEnsemble {
    pub layer: usize,
    /// Center depth, nm.
    pub z: f64,
    /// Sub-layer thickness, nm.
    pub t: f64,
    pub species: NuclearSpecies,
}

impl SubEnsemble {
    /// Area density of recoil-free resonant nuclei, nm⁻².
    pub fn area_density(&self) -> f64 {
        self.species.resonant_density() * self.t
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnsemblePartition {
    /// Sub-ensemble count per resonant layer index.
    pub counts: BTreeMap<usize, u32>,
    pub ensembles: Vec<SubEnsemble>,
}

impl EnsemblePartition {
    /// Partition every resonant layer; layers missing from `counts` get one ensemble.
    pub fn build(stack: &LayerStack, counts: &BTreeMap<usize, u32>) -> Result<Self> {
        let mut used = BTreeMap::new();
        let mut ensembles = Vec::new();
        for j in stack.resonant_layers() {
            let c = counts.get(&j).copied().unwrap_or(1);
            ensembles.extend(partition_layer(stack, j, c)?);
            used.insert(j, c);
        }
        Ok(Self {
            counts: used,
            ensembles,
        })
    }

    /// Same count for every resonant layer.
    pub fn uniform(stack: &LayerStack, count: u32) -> Result<Self> {
        let counts = stack.resonant_layers().into_iter().map(|j| (j, count)).collect();
        Self::build(stack, &counts)
    }

    pub fn len(&self) -> usize {
        self.ensembles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ensembles.is_empty()
    }
}

/// Splits resonant layer `layer` into `count` equal slices centered at their midpoints.
pub fn partition_layer(stack: &LayerStack, layer: usize, count: u32) -> Result<Vec<SubEnsemble>> {
    if count < 1 {
        return Err(NucavError::InvalidArgument("sub-ensemble count must be >= 1".into()));
    }
    let l = stack
        .layers
        .get(layer)
        .ok_or_else(|| NucavError::InvalidArgument(format!("no layer {layer}")))?;
    let species = l
        .resonant
        .clone()
        .ok_or_else(|| NucavError::InvalidArgument(format!("layer {layer} is not resonant")))?;
    let d = match l.thickness {
        Thickness::Finite(d) => d,
        _ => return Err(NucavError::InvalidArgument(format!("layer {layer} is not finite"))),
    };
    let top = stack.interface_depths()[layer];
    let t = d / count as f64;
    Ok((0..count)
        .map(|k| SubEnsemble {
            layer,
            z: top + (k as f64 + 0.5) * t,
            t,
            species: species.clone(),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// document (de)serialization

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MaterialEntry {
    delta: f64,
    beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ThicknessEntry {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    material: Option<String>,
    thickness_nm: ThicknessEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resonant: Option<NuclearSpecies>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StackDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default)]
    materials: BTreeMap<String, MaterialEntry>,
    layers: Vec<LayerEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    partition: BTreeMap<String, u32>,
}

/// Parses a stack document, reporting every violated invariant at once.
pub fn parse_stack(document: &str) -> Result<(LayerStack, EnsemblePartition)> {
    let doc: StackDocument = toml::from_str(document).map_err(|e| NucavError::Parse(e.to_string()))?;
    let mut errs = Vec::new();
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (j, entry) in doc.layers.iter().enumerate() {
        let thickness = match &entry.thickness_nm {
            ThicknessEntry::Value(d) => Thickness::Finite(*d),
            ThicknessEntry::Keyword(k) if k == "semi-infinite" => Thickness::SemiInfinite,
            ThicknessEntry::Keyword(k) if k == "mirror" => Thickness::Mirror,
            ThicknessEntry::Keyword(k) => {
                errs.push(format!("layer {j}: unknown thickness keyword '{k}'"));
                Thickness::SemiInfinite
            }
        };
        let material = if thickness == Thickness::Mirror {
            OpticalConstants::new(entry.material.clone().unwrap_or_else(|| "mirror".into()), 0.0, 0.0)
        } else {
            match entry.material.as_deref() {
                None => {
                    errs.push(format!("layer {j}: missing material"));
                    OpticalConstants::vacuum()
                }
                Some(name) => match doc.materials.get(name) {
                    Some(m) => OpticalConstants::new(name, m.delta, m.beta),
                    None if name == "vacuum" => OpticalConstants::vacuum(),
                    None => {
                        errs.push(format!("layer {j}: missing material '{name}'"));
                        OpticalConstants::vacuum()
                    }
                },
            }
        };
        layers.push(Layer {
            material,
            thickness,
            resonant: entry.resonant.clone(),
        });
    }
    let stack = LayerStack {
        description: doc.description.clone(),
        layers,
    };
    errs.extend(stack.violations());

    let mut counts = BTreeMap::new();
    for (key, &c) in &doc.partition {
        match key.parse::<usize>() {
            Ok(j) if j < stack.layers.len() && stack.layers[j].resonant.is_some() => {
                if c < 1 {
                    errs.push(format!("partition: layer {j} count must be >= 1"));
                }
                counts.insert(j, c);
            }
            Ok(j) => errs.push(format!("partition: layer {j} is not a resonant layer")),
            Err(_) => errs.push(format!("partition: key '{key}' is not a layer index")),
        }
    }
    if !errs.is_empty() {
        return Err(NucavError::Config(errs));
    }
    let partition = EnsemblePartition::build(&stack, &counts)?;
    Ok((stack, partition))
}

pub fn load_stack(path: impl AsRef<Path>) -> Result<(LayerStack, EnsemblePartition)> {
    parse_stack(&std::fs::read_to_string(path)?)
}

/// Writes a stack document that [`parse_stack`] reads back bit-exactly.
pub fn serialize_stack(stack: &LayerStack, partition: &EnsemblePartition) -> Result<String> {
    let mut materials = BTreeMap::new();
    let mut layers = Vec::new();
    for (j, l) in stack.layers.iter().enumerate() {
        let thickness_nm = match l.thickness {
            Thickness::Finite(d) => ThicknessEntry::Value(d),
            Thickness::SemiInfinite => ThicknessEntry::Keyword("semi-infinite".into()),
            Thickness::Mirror => ThicknessEntry::Keyword("mirror".into()),
        };
        if l.thickness != Thickness::Mirror && l.material.material_name != "vacuum" {
            let entry = MaterialEntry {
                delta: l.material.delta,
                beta: l.material.beta_abs,
            };
            if let Some(prev) = materials.get(&l.material.material_name) {
                let prev: &MaterialEntry = prev;
                if prev.delta.to_bits() != entry.delta.to_bits() || prev.beta.to_bits() != entry.beta.to_bits() {
                    return Err(NucavError::InvalidArgument(format!(
                        "layer {j}: material name '{}' reused with different constants",
                        l.material.material_name
                    )));
                }
            }
            materials.insert(l.material.material_name.clone(), entry);
        }
        if l.thickness != Thickness::Mirror && l.material.material_name == "vacuum" && (l.material.delta != 0.0 || l.material.beta_abs != 0.0) {
            return Err(NucavError::InvalidArgument(format!("layer {j}: 'vacuum' with nonzero constants")));
        }
        layers.push(LayerEntry {
            material: Some(l.material.material_name.clone()),
            thickness_nm,
            resonant: l.resonant.clone(),
        });
    }
    let partition = partition
        .counts
        .iter()
        .filter(|(_, &c)| c != 1)
        .map(|(j, c)| (j.to_string(), *c))
        .collect();
    let doc = StackDocument {
        description: stack.description.clone(),
        materials,
        layers,
        partition,
    };
    toml::to_string(&doc).map_err(|e| NucavError::Parse(e.to_string()))
}
