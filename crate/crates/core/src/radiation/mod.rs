//! Reverse ray tracing of PAR through a scene.
//!
//! Each triangle has two faces. The first pass gathers direct sun and
//! diffuse sky light on both faces with leaves treated as opaque. Unabsorbed
//! light is then re-emitted as Lambertian reflection (same face) and
//! transmission (opposite face) and shot to the receiving faces for a fixed
//! number of iterations. Power still in flight after the last iteration is
//! reported as residual. Per face, absorbed flux is incident flux times
//! `1 - rho - tau`.

mod sampling;
mod sensors;
mod trace;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SceneField;
use crate::geometry::{Organ, DEFAULT_MAX_WRAPS, GROUND_PLANT_ID};

pub use sensors::{default_sensors, read_sensors, SensorKind, SensorReading, SensorSpec, DEFAULT_LINE_HEIGHT};
pub use trace::{compute_diffuse, compute_direct, run_scattering};

/// Offset along the surface normal for rays leaving a surface, m.
pub const SURFACE_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiationConfig {
    pub leaf_reflectance: f64,
    pub leaf_transmittance: f64,
    /// Stem coefficients; leaf values are used when unset.
    pub stem_reflectance: Option<f64>,
    pub stem_transmittance: Option<f64>,
    pub ground_reflectance: f64,
    pub scattering_iterations: u32,
    pub direct_samples_per_primitive: u32,
    pub diffuse_samples_per_primitive: u32,
    pub scatter_samples_per_primitive: u32,
    pub max_wraps: u32,
    pub rng_seed: u64,
}

impl Default for RadiationConfig {
    fn default() -> Self {
        Self {
            leaf_reflectance: 0.1,
            leaf_transmittance: 0.1,
            stem_reflectance: None,
            stem_transmittance: None,
            ground_reflectance: 0.0,
            scattering_iterations: 5,
            direct_samples_per_primitive: 16,
            diffuse_samples_per_primitive: 64,
            scatter_samples_per_primitive: 32,
            max_wraps: DEFAULT_MAX_WRAPS,
            rng_seed: 0,
        }
    }
}

impl RadiationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidRadiationConfig(m));
        let pair = |name: &str, r: f64, t: f64| -> Result<()> {
            if !(r >= 0.0 && t >= 0.0 && r + t < 1.0) {
                return bad(format!(
                    "{name} reflectance and transmittance must be non-negative with sum below 1, got {r} + {t}"
                ));
            }
            Ok(())
        };
        pair("leaf", self.leaf_reflectance, self.leaf_transmittance)?;
        let (sr, st) = self.optical(Organ::Stem);
        pair("stem", sr, st)?;
        if !(self.ground_reflectance >= 0.0 && self.ground_reflectance < 1.0) {
            return bad(format!("ground reflectance must be in [0, 1), got {}", self.ground_reflectance));
        }
        if self.direct_samples_per_primitive == 0
            || self.diffuse_samples_per_primitive == 0
            || self.scatter_samples_per_primitive == 0
        {
            return bad("sample counts must be at least 1".into());
        }
        Ok(())
    }

    /// Reflectance and transmittance of an organ.
    pub fn optical(&self, organ: Organ) -> (f64, f64) {
        match organ {
            Organ::Leaf => (self.leaf_reflectance, self.leaf_transmittance),
            Organ::Stem => (
                self.stem_reflectance.unwrap_or(self.leaf_reflectance),
                self.stem_transmittance.unwrap_or(self.leaf_transmittance),
            ),
            Organ::Ground => (self.ground_reflectance, 0.0),
        }
    }

    /// Fraction of incident flux absorbed by an organ.
    pub fn absorptance(&self, organ: Organ) -> f64 {
        let (r, t) = self.optical(organ);
        1.0 - r - t
    }
}

/// Per-primitive fluxes (µmol m⁻² s⁻¹) indexed by primitive id, plus the
/// power bookkeeping of the scattering passes (µmol s⁻¹).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FluxMap {
    pub incident_direct: Vec<f64>,
    pub incident_diffuse: Vec<f64>,
    pub incident_scattered: Vec<f64>,
    pub absorbed: Vec<f64>,
    /// Incident flux of the current pass on the front and back faces.
    pub(crate) pending_front: Vec<f64>,
    pub(crate) pending_back: Vec<f64>,
    /// Cumulative scattered exitance of each face.
    pub exitance_front: Vec<f64>,
    pub exitance_back: Vec<f64>,
    /// Absorbed power per plant, ground excluded.
    pub plant_absorbed: BTreeMap<u32, f64>,
    pub ground_absorbed: f64,
    /// Power that left the scene without hitting anything.
    pub escaped: f64,
    /// Unabsorbed power still in flight after the last iteration.
    pub residual: f64,
    /// Power received in the first (direct plus diffuse) pass.
    pub first_pass: f64,
}

impl FluxMap {
    pub fn zeros(n: usize) -> Self {
        let z = vec![0.0; n];
        Self {
            incident_direct: z.clone(),
            incident_diffuse: z.clone(),
            incident_scattered: z.clone(),
            absorbed: z.clone(),
            pending_front: z.clone(),
            pending_back: z.clone(),
            exitance_front: z.clone(),
            exitance_back: z,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.absorbed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.absorbed.is_empty()
    }

    pub fn incident_total(&self, primitive_id: u32) -> f64 {
        let i = primitive_id as usize;
        self.incident_direct[i] + self.incident_diffuse[i] + self.incident_scattered[i]
    }

    /// Element-wise sum of two partial maps over the same scene.
    pub fn merged(&self, other: &FluxMap) -> FluxMap {
        assert_eq!(self.len(), other.len(), "flux maps over different scenes");
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f64>>();
        let mut plant_absorbed = self.plant_absorbed.clone();
        for (k, v) in &other.plant_absorbed {
            *plant_absorbed.entry(*k).or_default() += v;
        }
        FluxMap {
            incident_direct: add(&self.incident_direct, &other.incident_direct),
            incident_diffuse: add(&self.incident_diffuse, &other.incident_diffuse),
            incident_scattered: add(&self.incident_scattered, &other.incident_scattered),
            absorbed: add(&self.absorbed, &other.absorbed),
            pending_front: add(&self.pending_front, &other.pending_front),
            pending_back: add(&self.pending_back, &other.pending_back),
            exitance_front: add(&self.exitance_front, &other.exitance_front),
            exitance_back: add(&self.exitance_back, &other.exitance_back),
            plant_absorbed,
            ground_absorbed: self.ground_absorbed + other.ground_absorbed,
            escaped: self.escaped + other.escaped,
            residual: self.residual + other.residual,
            first_pass: self.first_pass + other.first_pass,
        }
    }

    /// Total absorbed power, canopy plus ground.
    pub fn total_absorbed(&self) -> f64 {
        self.canopy_absorbed() + self.ground_absorbed
    }

    pub fn canopy_absorbed(&self) -> f64 {
        self.plant_absorbed.values().sum()
    }

    /// Recomputes absorbed flux and the per-plant and ground power sums.
    pub(crate) fn finish_absorption(&mut self, scene: &SceneField, cfg: &RadiationConfig) {
        self.plant_absorbed.clear();
        self.ground_absorbed = 0.0;
        for (i, tri) in scene.mesh.triangles.iter().enumerate() {
            let inc = self.incident_direct[i] + self.incident_diffuse[i] + self.incident_scattered[i];
            let a = inc * cfg.absorptance(tri.organ);
            self.absorbed[i] = a;
            let power = a * tri.area();
            if tri.organ == Organ::Ground {
                self.ground_absorbed += power;
            } else {
                *self.plant_absorbed.entry(tri.plant_id).or_default() += power;
            }
        }
    }
}

/// Absorbed power per plant and per unit ground area.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantInterception {
    /// µmol s⁻¹ per plant id.
    pub per_plant: BTreeMap<u32, f64>,
    /// Canopy absorbed power over the ground area, µmol m⁻² s⁻¹; `None`
    /// for scenes without a periodic domain.
    pub per_ground_area: Option<f64>,
}

pub fn per_plant_interception(flux: &FluxMap, scene: &SceneField) -> PlantInterception {
    let mut per_plant: BTreeMap<u32, f64> = scene.plant_ids().into_iter().map(|id| (id, 0.0)).collect();
    for (id, p) in &flux.plant_absorbed {
        *per_plant.entry(*id).or_default() += p;
    }
    let total: f64 = per_plant.values().sum();
    PlantInterception {
        per_ground_area: scene.ground_area().map(|a| total / a),
        per_plant,
    }
}

/// Absorbed power of one plant.
pub fn plant_absorbed_power(flux: &FluxMap, scene: &SceneField, plant_id: u32) -> Result<f64> {
    if plant_id == GROUND_PLANT_ID || !scene.mesh.triangles.iter().any(|t| t.plant_id == plant_id) {
        return Err(Error::UnknownPlant(plant_id));
    }
    Ok(flux.plant_absorbed.get(&plant_id).copied().unwrap_or(0.0))
}

/// Direct, diffuse, and scattering passes in sequence.
pub fn compute_flux(scene: &SceneField, sun: &crate::solar::SolarState, cfg: &RadiationConfig) -> Result<FluxMap> {
    cfg.validate()?;
    if !sun.sun_up {
        return Ok(FluxMap::zeros(scene.mesh.len()));
    }
    let direct = compute_direct(scene, sun, cfg)?;
    let diffuse = compute_diffuse(scene, sun, cfg)?;
    Ok(run_scattering(scene, &direct.merged(&diffuse), cfg))
}
