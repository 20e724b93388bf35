//! JSON run configuration.
//!
//! Every block is optional and falls back to its defaults. Unknown keys
//! are rejected; errors carry the line and column of the offending value.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{de, Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldLayout, OrientationMode, PlantSource, DEFAULT_GROUND_CELL};
use crate::geometry::{load_ply_with_unit, LengthUnit};
use crate::plantgen::{generate_maize, PlantModel, PlantParams};
use crate::radiation::RadiationConfig;
use crate::simdriver::{ClockTime, NamedLocation, ScenarioKey, ScenarioSpec, Schedule};
use crate::solar::{GeoLocation, SkyModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    Procedural {
        #[serde(default)]
        params: PlantParams,
    },
    Ply {
        path: PathBuf,
        #[serde(default)]
        unit: LengthUnit,
    },
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig::Procedural {
            params: PlantParams::default(),
        }
    }
}

impl PlantConfig {
    /// Builds the plant; relative PLY paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<PlantModel> {
        match self {
            PlantConfig::Procedural { params } => generate_maize(params),
            PlantConfig::Ply { path, unit } => {
                let path = base_dir.join(path);
                PlantModel::from_mesh(load_ply_with_unit(&path, *unit)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub rows: u32,
    pub plants_per_row: u32,
    pub row_spacing: f64,
    pub plant_spacing: f64,
    /// Unit of both spacings.
    pub unit: LengthUnit,
    pub row_azimuth_deg: f64,
    pub orientation: OrientationMode,
    /// m.
    pub ground_cell: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            rows: 4,
            plants_per_row: 15,
            row_spacing: 0.762,
            plant_spacing: 0.1524,
            unit: LengthUnit::M,
            row_azimuth_deg: 0.0,
            orientation: OrientationMode::OffRowParallel,
            ground_cell: DEFAULT_GROUND_CELL,
        }
    }
}

/// A sweep location: either a preset name or `{name, location}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LocationEntry(pub NamedLocation);

impl<'de> Deserialize<'de> for LocationEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;

        impl<'de> de::Visitor<'de> for Visitor {
            type Value = LocationEntry;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a location preset name or {name, location}")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<LocationEntry, E> {
                let loc = GeoLocation::preset(v).ok_or_else(|| E::custom(format!("unknown location preset `{v}`")))?;
                Ok(LocationEntry(NamedLocation::new(v, loc)))
            }

            fn visit_map<A: de::MapAccess<'de>>(self, map: A) -> std::result::Result<LocationEntry, A::Error> {
                NamedLocation::deserialize(de::value::MapAccessDeserializer::new(map)).map(LocationEntry)
            }
        }

        d.deserialize_any(Visitor)
    }
}

/// Sweep axes. Missing axes take the single value of the base field and
/// schedule.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// In the field unit.
    pub row_spacing: Vec<f64>,
    pub plant_spacing: Vec<f64>,
    pub orientation: Vec<OrientationMode>,
    pub row_azimuth_deg: Vec<f64>,
    pub locations: Vec<LocationEntry>,
}

fn default_seed() -> u64 {
    1
}

fn default_snapshot() -> ClockTime {
    ClockTime::hm(13, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of the ray sampling; overrides `radiation.rng_seed`.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Name of the location used in output tables.
    #[serde(default)]
    pub location_name: Option<String>,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub sky: SkyModelParams,
    #[serde(default)]
    pub radiation: RadiationConfig,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Clock time of the per-primitive flux table, on the first date.
    #[serde(default = "default_snapshot")]
    pub flux_snapshot: ClockTime,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        cfg.validate().map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.radiation.validate()?;
        self.sky.validate()?;
        self.schedule.validate()?;
        if let PlantConfig::Procedural { params } = &self.plant {
            params.validate()?;
        }
        let f = &self.field;
        for v in [f.row_spacing, f.plant_spacing] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidLayout(format!("spacings must be positive, got {v}")));
            }
        }
        if !f.row_azimuth_deg.is_finite() {
            return Err(Error::InvalidLayout("row_azimuth_deg must be finite".into()));
        }
        if let Some(s) = &self.sweep {
            let bad = s
                .row_spacing
                .iter()
                .chain(&s.plant_spacing)
                .find(|v| !(**v > 0.0 && v.is_finite()));
            if let Some(v) = bad {
                return Err(Error::InvalidScenario(format!("sweep spacings must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Radiation settings with the run seed applied.
    pub fn radiation_config(&self) -> RadiationConfig {
        RadiationConfig {
            rng_seed: self.seed,
            ..self.radiation
        }
    }

    pub fn location_label(&self) -> String {
        self.location_name.clone().unwrap_or_else(|| {
            let l = self.schedule.location;
            format!("{:.4}_{:.4}", l.latitude, l.longitude)
        })
    }

    pub fn layout(&self, plant: PlantModel) -> FieldLayout {
        let f = &self.field;
        let m = f.unit.meters_per_unit();
        FieldLayout {
            rows: f.rows,
            plants_per_row: f.plants_per_row,
            row_spacing: f.row_spacing * m,
            plant_spacing: f.plant_spacing * m,
            row_azimuth: f.row_azimuth_deg.to_radians(),
            orientation: f.orientation,
            plant_source: PlantSource::Single(plant),
            ground_cell: f.ground_cell,
        }
    }

    /// Axis values of the single configured scenario.
    pub fn scenario_key(&self) -> ScenarioKey {
        let m = self.field.unit.meters_per_unit();
        ScenarioKey {
            row_spacing: self.field.row_spacing * m,
            plant_spacing: self.field.plant_spacing * m,
            orientation: self.field.orientation,
            row_azimuth: self.field.row_azimuth_deg.to_radians(),
            location: self.location_label(),
        }
    }

    /// Sweep grid; without a `sweep` block this is the single configured scenario.
    pub fn scenario_spec(&self, plant: PlantModel) -> ScenarioSpec {
        let base = self.layout(plant);
        let m = self.field.unit.meters_per_unit();
        let sweep = self.sweep.clone().unwrap_or_default();
        let or_base = |v: Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v };
        ScenarioSpec {
            row_spacing: or_base(sweep.row_spacing, self.field.row_spacing)
                .into_iter()
                .map(|v| v * m)
                .collect(),
            plant_spacing: or_base(sweep.plant_spacing, self.field.plant_spacing)
                .into_iter()
                .map(|v| v * m)
                .collect(),
            orientation: if sweep.orientation.is_empty() {
                vec![self.field.orientation]
            } else {
                sweep.orientation
            },
            row_azimuth: or_base(sweep.row_azimuth_deg, self.field.row_azimuth_deg)
                .into_iter()
                .map(f64::to_radians)
                .collect(),
            locations: if sweep.locations.is_empty() {
                vec![NamedLocation::new(self.location_label(), self.schedule.location)]
            } else {
                sweep.locations.into_iter().map(|l| l.0).collect()
            },
            radiation: self.radiation_config(),
            sky: self.sky,
            schedule: self.schedule,
            base,
        }
    }
}
