//! CSV tables.
//!
//! Missing values (night-time fractions, ground areas of non-periodic
//! scenes) are written as empty fields. Ground primitives carry plant id -1.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{OrientationMode, SceneField};
use crate::geometry::GROUND_PLANT_ID;
use crate::radiation::{FluxMap, SensorReading, SensorSpec};
use crate::simdriver::{DailyResult, ScenarioKey, SeasonalResult, SweepTable};
use crate::solar::TimePoint;

pub const TABLE_HEADER: [&str; 9] = [
    "row_spacing_m",
    "plant_spacing_m",
    "orientation",
    "row_azimuth_deg",
    "location",
    "date",
    "par_per_ground_area_mol_m2",
    "par_per_plant_mol",
    "mean_fraction_intercepted",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn orientation_label(o: &OrientationMode) -> String {
    match o {
        OrientationMode::Random { seed } => format!("random:{seed}"),
        other => other.label().to_string(),
    }
}

fn key_fields(key: &ScenarioKey) -> [String; 5] {
    [
        key.row_spacing.to_string(),
        key.plant_spacing.to_string(),
        orientation_label(&key.orientation),
        key.row_azimuth.to_degrees().to_string(),
        key.location.clone(),
    ]
}

/// Creates a file for writing, with the path in any error.
pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct FluxRow {
    primitive_id: u32,
    plant_id: i64,
    organ: &'static str,
    area: f64,
    incident_direct: f64,
    incident_diffuse: f64,
    incident_scattered: f64,
    absorbed: f64,
}

pub fn write_flux<W: Write>(w: W, scene: &SceneField, flux: &FluxMap) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, tri) in scene.mesh.triangles.iter().enumerate() {
        out.serialize(FluxRow {
            primitive_id: tri.primitive_id,
            plant_id: if tri.plant_id == GROUND_PLANT_ID { -1 } else { tri.plant_id as i64 },
            organ: tri.organ.as_str(),
            area: tri.area(),
            incident_direct: flux.incident_direct[i],
            incident_diffuse: flux.incident_diffuse[i],
            incident_scattered: flux.incident_scattered[i],
            absorbed: flux.absorbed[i],
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Instantaneous values of every simulated timepoint.
pub fn write_timepoints<W: Write>(w: W, season: &SeasonalResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "date",
        "time",
        "zenith_deg",
        "azimuth_deg",
        "direct_normal_par",
        "diffuse_horizontal_par",
        "par_per_ground_area_umol_m2_s",
        "par_per_plant_umol_s",
        "fraction_intercepted",
    ])?;
    for day in &season.days {
        for tp in &day.timepoints {
            let n = tp.per_plant.len().max(1) as f64;
            let per_plant = tp.per_plant.values().sum::<f64>() / n;
            out.write_record([
                day.date.to_string(),
                tp.time.to_string(),
                tp.sun.zenith.to_degrees().to_string(),
                tp.sun.azimuth.to_degrees().to_string(),
                tp.sun.direct_normal_par.to_string(),
                tp.sun.diffuse_horizontal_par.to_string(),
                opt(tp.per_ground_area),
                per_plant.to_string(),
                opt(tp.fraction_intercepted),
            ])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn daily_record(key: &ScenarioKey, d: &DailyResult) -> Vec<String> {
    let mut r: Vec<String> = key_fields(key).into();
    r.push(d.date.to_string());
    r.push(opt(d.per_ground_area_mol));
    r.push(d.mean_per_plant_mol().to_string());
    r.push(opt(d.mean_fraction));
    r
}

fn season_record(key: &ScenarioKey, s: &SeasonalResult) -> Vec<String> {
    let mut r: Vec<String> = key_fields(key).into();
    r.push("SEASON".into());
    r.push(opt(s.per_ground_area_mol));
    r.push(s.mean_per_plant_mol().to_string());
    r.push(opt(s.mean_fraction));
    r
}

/// One row per simulated date.
pub fn write_daily<W: Write>(w: W, key: &ScenarioKey, season: &SeasonalResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TABLE_HEADER)?;
    for d in &season.days {
        out.write_record(daily_record(key, d))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// The season total row.
pub fn write_seasonal<W: Write>(w: W, key: &ScenarioKey, season: &SeasonalResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TABLE_HEADER)?;
    out.write_record(season_record(key, season))?;
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One season row per scenario, with an `error` column for failed ones.
pub fn write_sweep<W: Write>(w: W, table: &SweepTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = TABLE_HEADER.to_vec();
    header.push("error");
    out.write_record(&header)?;
    for row in &table.rows {
        let rec = match &row.outcome {
            Ok(s) => {
                let mut r = season_record(&row.key, s);
                r.push(String::new());
                r
            }
            Err(e) => {
                let mut r: Vec<String> = key_fields(&row.key).into();
                r.extend(["SEASON".into(), String::new(), String::new(), String::new(), e.clone()]);
                r
            }
        };
        out.write_record(rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Successful sweep rows ranked by seasonal PAR per ground area.
pub fn write_ranking<W: Write>(w: W, table: &SweepTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = vec!["rank"];
    header.extend_from_slice(&TABLE_HEADER);
    out.write_record(&header)?;
    for (rank, i) in table.ranking().into_iter().enumerate() {
        let row = &table.rows[i];
        if let Ok(s) = &row.outcome {
            let mut r = vec![(rank + 1).to_string()];
            r.extend(season_record(&row.key, s));
            out.write_record(r)?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Sensor readings, one row per sensor per timepoint.
pub fn write_sensors<W: Write>(w: W, readings: &[(TimePoint, Vec<SensorSpec>, SensorReading)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["timestamp", "sensor_id", "flux", "fraction"])?;
    for (t, specs, reading) in readings {
        for (spec, f) in specs.iter().zip(&reading.par_flux) {
            out.write_record([t.iso(), spec.id.clone(), f.to_string(), opt(reading.fraction_intercepted)])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
