//! Virtual PAR sensors: upward-facing horizontal points above the canopy
//! and a line sensor near the ground.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{cosine_direction, sample_rng, stratified_2d, PASS_SENSOR};
use super::trace::cast;
use super::{FluxMap, RadiationConfig};
use crate::error::{Error, Result};
use crate::field::SceneField;
use crate::geometry::Vec3;
use crate::solar::SolarState;

pub const DEFAULT_LINE_HEIGHT: f64 = 0.05;
pub const DEFAULT_LINE_SAMPLES: u32 = 50;
/// Height of the default above-canopy sensor over the canopy top, m.
const ABOVE_CLEARANCE: f64 = 0.5;

/// Sensor geometry in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensorKind {
    PointAbove { position: Vec3 },
    LineGround { start: Vec3, end: Vec3, samples: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: SensorKind,
}

impl SensorSpec {
    pub fn point_above(id: impl Into<String>, position: Vec3) -> Self {
        Self {
            id: id.into(),
            kind: SensorKind::PointAbove { position },
        }
    }

    pub fn line_ground(id: impl Into<String>, start: Vec3, end: Vec3, samples: u32) -> Self {
        Self {
            id: id.into(),
            kind: SensorKind::LineGround { start, end, samples },
        }
    }

    /// Sample positions in world coordinates.
    pub fn points(&self) -> Vec<Vec3> {
        match &self.kind {
            SensorKind::PointAbove { position } => vec![*position],
            SensorKind::LineGround { start, end, samples } => {
                let n = (*samples).max(1);
                (0..n)
                    .map(|k| *start + (*end - *start) * ((k as f64 + 0.5) / n as f64))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorReading {
    /// Mean flux per sensor, µmol m⁻² s⁻¹, in the order of the specs.
    pub par_flux: Vec<f64>,
    /// Clamped to `[0, 1]`; `None` at night or without both sensor kinds.
    pub fraction_intercepted: Option<f64>,
    /// The same ratio before clamping.
    pub fraction_unclamped: Option<f64>,
}

/// One above-canopy point over the domain centre and one line sensor
/// spanning every row at [`DEFAULT_LINE_HEIGHT`], offset a quarter plant
/// spacing from the plant positions.
pub fn default_sensors(scene: &SceneField) -> Vec<SensorSpec> {
    let (x_mid, y_lo, y_hi) = match (&scene.domain, &scene.layout) {
        (Some(d), Some(l)) => (
            d.origin.x + d.x_extent / 2.0 + 0.25 * l.plant_spacing,
            d.origin.y,
            d.origin.y + d.y_extent,
        ),
        (Some(d), None) => (d.origin.x + d.x_extent / 2.0, d.origin.y, d.origin.y + d.y_extent),
        _ => {
            let b = scene.mesh.bounds();
            (b.center().x, b.min.y, b.max.y)
        }
    };
    let y_mid = 0.5 * (y_lo + y_hi);
    let top = scene.canopy_top() + ABOVE_CLEARANCE;
    let w = |p: Vec3| scene.frame.to_world(p);
    vec![
        SensorSpec::point_above("above", w(Vec3::new(x_mid, y_mid, top))),
        SensorSpec::line_ground(
            "ground_line",
            w(Vec3::new(x_mid, y_lo, DEFAULT_LINE_HEIGHT)),
            w(Vec3::new(x_mid, y_hi, DEFAULT_LINE_HEIGHT)),
            DEFAULT_LINE_SAMPLES,
        ),
    ]
}

/// Flux on an upward-facing horizontal element at a local point.
fn horizontal_flux(
    scene: &SceneField,
    sun: &SolarState,
    flux: &FluxMap,
    cfg: &RadiationConfig,
    p: Vec3,
    key: (u64, u64),
) -> f64 {
    let s = scene.frame.to_local(sun.direction());
    let mut e = 0.0;
    if s.z > 0.0 && sun.direct_normal_par > 0.0 && cast(scene, p, s, cfg).is_none() {
        e += sun.direct_normal_par * s.z;
    }
    let n = cfg.diffuse_samples_per_primitive;
    let mut gathered = 0.0;
    for j in 0..n {
        let mut rng = sample_rng(cfg.rng_seed, PASS_SENSOR, key.0, key.1, j as u64);
        let (u1, u2) = stratified_2d(j, n, &mut rng);
        let d = cosine_direction(Vec3::Z, u1, u2);
        match cast(scene, p, d, cfg) {
            Some(h) => {
                let i = h.primitive_id as usize;
                gathered += if h.entering_front_face {
                    flux.exitance_front[i]
                } else {
                    flux.exitance_back[i]
                };
            }
            None if d.z > 0.0 => gathered += sun.diffuse_horizontal_par,
            None => {}
        }
    }
    e + gathered / n as f64
}

pub fn read_sensors(
    scene: &SceneField,
    sun: &SolarState,
    flux: &FluxMap,
    sensors: &[SensorSpec],
    cfg: &RadiationConfig,
) -> Result<SensorReading> {
    if flux.len() != scene.mesh.len() {
        return Err(Error::InvalidValue("flux map does not belong to this scene".into()));
    }
    if !sun.sun_up {
        return Ok(SensorReading {
            par_flux: vec![0.0; sensors.len()],
            fraction_intercepted: None,
            fraction_unclamped: None,
        });
    }
    let par_flux: Vec<f64> = sensors
        .iter()
        .enumerate()
        .map(|(si, spec)| {
            let pts = spec.points();
            let vals: Vec<f64> = pts
                .par_iter()
                .enumerate()
                .map(|(k, &p)| {
                    let local = scene.frame.to_local(p);
                    horizontal_flux(scene, sun, flux, cfg, local, (si as u64, k as u64))
                })
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();

    let mean_of = |want_above: bool| {
        let v: Vec<f64> = sensors
            .iter()
            .zip(&par_flux)
            .filter(|(s, _)| matches!(s.kind, SensorKind::PointAbove { .. }) == want_above)
            .map(|(_, f)| *f)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let raw = match (mean_of(true), mean_of(false)) {
        (Some(above), Some(ground)) if above > 0.0 => Some((above - ground) / above),
        _ => None,
    };
    Ok(SensorReading {
        par_flux,
        fraction_intercepted: raw.map(|f| f.clamp(0.0, 1.0)),
        fraction_unclamped: raw,
    })
}
