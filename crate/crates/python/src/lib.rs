//! Python bindings: solar geometry, plant generation, single timepoints
//! and the R² harness.

use std::fmt::Display;

use canopy_par::config::RunConfig;
use canopy_par::field::build_field;
use canopy_par::geometry::{save_ply, PlyEncoding};
use canopy_par::plantgen::{generate_maize, PlantParams};
use canopy_par::radiation::default_sensors;
use canopy_par::simdriver::run_timepoint;
use canopy_par::solar::{self, GeoLocation, SkyModelParams, TimePoint};
use canopy_par::validate::{self, ValidationRecord};
use chrono::NaiveDate;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn timepoint(date: &str, hour: u32, minute: u32) -> PyResult<TimePoint> {
    let date: NaiveDate = date.parse().map_err(value_error)?;
    if hour > 23 || minute > 59 {
        return Err(value_error(format!("bad clock time {hour}:{minute}")));
    }
    Ok(TimePoint::new(date, hour, minute))
}

/// Solar zenith and compass azimuth in degrees.
#[pyfunction]
fn solar_position(latitude: f64, longitude: f64, utc_offset: f64, date: &str, hour: u32, minute: u32) -> PyResult<(f64, f64)> {
    let loc = GeoLocation::new(latitude, longitude, utc_offset).map_err(value_error)?;
    let (z, a) = solar::solar_position(&loc, &timepoint(date, hour, minute)?);
    Ok((z.to_degrees(), a.to_degrees()))
}

/// Clear-sky direct normal and diffuse horizontal PAR, µmol m⁻² s⁻¹.
#[pyfunction]
fn clear_sky(zenith_deg: f64) -> (f64, f64) {
    solar::clear_sky_par(zenith_deg.to_radians(), &SkyModelParams::default())
}

/// Writes a procedural plant to `path` and returns its leaf-plane azimuth.
#[pyfunction]
#[pyo3(signature = (path, params_json=None, binary=false))]
fn generate_plant(path: &str, params_json: Option<&str>, binary: bool) -> PyResult<f64> {
    let params: PlantParams = match params_json {
        Some(s) => serde_json::from_str(s).map_err(value_error)?,
        None => PlantParams::default(),
    };
    let plant = generate_maize(&params).map_err(value_error)?;
    let enc = if binary {
        PlyEncoding::BinaryLittleEndian
    } else {
        PlyEncoding::Ascii
    };
    save_ply(&plant.mesh, path, enc).map_err(value_error)?;
    Ok(plant.leaf_plane_azimuth)
}

/// Runs the configured field at one clock time.
#[pyfunction]
#[pyo3(signature = (date, hour, minute, config_json="{}"))]
fn simulate_timepoint<'py>(
    py: Python<'py>,
    date: &str,
    hour: u32,
    minute: u32,
    config_json: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = RunConfig::from_json(config_json, "config").map_err(value_error)?;
    let plant = cfg.plant.build(std::path::Path::new(".")).map_err(value_error)?;
    let scene = build_field(&cfg.layout(plant)).map_err(value_error)?;
    let sensors = default_sensors(&scene);
    let t = timepoint(date, hour, minute)?;
    let r = run_timepoint(&scene, &cfg.schedule.location, &t, &cfg.sky, &cfg.radiation_config(), &sensors)
        .map_err(value_error)?;
    let s = r.summary(&scene);

    let out = PyDict::new(py);
    out.set_item("zenith_deg", s.sun.zenith.to_degrees())?;
    out.set_item("azimuth_deg", s.sun.azimuth.to_degrees())?;
    out.set_item("per_ground_area", s.per_ground_area)?;
    out.set_item("fraction_intercepted", s.fraction_intercepted)?;
    out.set_item("per_plant", s.per_plant)?;
    Ok(out)
}

/// Coefficient of determination of `simulated` against `measured`.
#[pyfunction]
fn r_squared(measured: Vec<f64>, simulated: Vec<f64>) -> PyResult<f64> {
    if measured.len() != simulated.len() {
        return Err(value_error("measured and simulated differ in length"));
    }
    let records: Vec<_> = measured
        .into_iter()
        .zip(simulated)
        .enumerate()
        .map(|(i, (m, s))| ValidationRecord {
            genotype: i.to_string(),
            measured_fraction: m,
            simulated_fraction: s,
        })
        .collect();
    validate::r_squared(&records).map_err(value_error)
}

#[pymodule]
fn canopy_par_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solar_position, m)?)?;
    m.add_function(wrap_pyfunction!(clear_sky, m)?)?;
    m.add_function(wrap_pyfunction!(generate_plant, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_timepoint, m)?)?;
    m.add_function(wrap_pyfunction!(r_squared, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
