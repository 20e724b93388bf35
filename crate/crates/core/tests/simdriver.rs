mod common;

use std::f64::consts::FRAC_PI_2;

use canopy_par::field::*;
use canopy_par::geometry::{Mesh, PeriodicDomain, Vec3};
use canopy_par::output::{write_ranking, write_sweep};
use canopy_par::radiation::{default_sensors, per_plant_interception, RadiationConfig};
use canopy_par::simdriver::*;
use canopy_par::solar::*;
use common::*;

fn tiny_canopy() -> SceneField {
    horizontal_canopy(21, 1.2, 1.0, 0.1)
}

fn one_day(d: chrono::NaiveDate, step: u32) -> Schedule {
    Schedule {
        start_date: d,
        end_date: d,
        time_step_minutes: step,
        ..Default::default()
    }
}

#[test]
fn night_is_dark() {
    let scene = tiny_canopy();
    let sensors = default_sensors(&scene);
    let loc = GeoLocation::preset("ames").unwrap();
    let t = TimePoint::new(date(2020, 7, 20), 2, 0);
    let r = run_timepoint(&scene, &loc, &t, &SkyModelParams::default(), &reduced(1), &sensors).unwrap();
    assert!(!r.sun.sun_up);
    assert!(r.flux.absorbed.iter().all(|&v| v == 0.0));
    assert!(r.flux.incident_direct.iter().all(|&v| v == 0.0));
    assert_eq!(r.sensors.fraction_intercepted, None);
}

#[test]
fn noon_beats_early_morning() {
    let scene = tiny_canopy();
    let loc = GeoLocation::preset("ames").unwrap();
    let sky = SkyModelParams::default();
    let at = |h: u32| {
        let t = TimePoint::new(date(2020, 7, 20), h, 0);
        let r = run_timepoint(&scene, &loc, &t, &sky, &reduced(2), &[]).unwrap();
        (r.sun, r.summary(&scene).per_ground_area.unwrap())
    };
    let (sun8, p8) = at(8);
    let (sun13, p13) = at(13);
    // The clear-sky input itself is larger at noon.
    assert!(sun13.global_horizontal_par() > sun8.global_horizontal_par());
    assert!(p13 >= p8, "{p13} < {p8}");
}

#[test]
fn plate_timepoint_end_to_end() {
    let scene = SceneField::from_mesh(Mesh::new(plate(0.0, 0.0, 1.0, 0.5)), None).unwrap();
    let t = TimePoint::new(date(2020, 7, 20), 12, 0);
    let r = run_with_sun(&scene, &t, zenith_sun(1000.0, 0.0), &RadiationConfig::default(), &[]).unwrap();
    let pi = per_plant_interception(&r.flux, &scene);
    assert!((pi.per_plant[&0] - 800.0).abs() < 1e-9);
}

#[test]
fn constant_power_over_the_window() {
    let s = Schedule::default();
    let times = s.times();
    let p = vec![100.0; times.len()];
    assert!((integrate_trapezoid(&times, &p) - 4.68).abs() < 1e-12);
}

#[test]
fn triangle_profile_integral() {
    let s = Schedule {
        time_step_minutes: 15,
        ..Default::default()
    };
    let times = s.times();
    // Peak between grid points, zero at both ends of the window.
    let (a, b, peak_t, peak) = (420.0, 1200.0, 817.0, 1500.0);
    let f = |m: f64| {
        if m <= peak_t {
            peak * (m - a) / (peak_t - a)
        } else {
            peak * (b - m) / (b - peak_t)
        }
    };
    let p: Vec<f64> = times.iter().map(|t| f(t.minutes() as f64)).collect();
    let exact = 0.5 * peak * (b - a) * 60.0 / 1e6;
    let got = integrate_trapezoid(&times, &p);
    assert!((got - exact).abs() < 0.005 * exact, "{got} vs {exact}");
}

#[test]
fn polar_night_day_is_zero() {
    let scene = tiny_canopy();
    let mut s = one_day(date(2020, 7, 1), 60);
    s.location = GeoLocation::new(-80.0, 0.0, 0.0).unwrap();
    let d = run_day(&scene, &s, s.start_date, &SkyModelParams::default(), &reduced(1), &[]).unwrap();
    assert_eq!(d.per_ground_area_mol, Some(0.0));
    assert!(d.per_plant_mol.values().all(|&v| v == 0.0));
    assert_eq!(d.mean_fraction, None);
}

#[test]
fn season_is_the_sum_of_days() {
    let scene = tiny_canopy();
    let s = Schedule {
        end_date: date(2020, 7, 18),
        time_step_minutes: 180,
        ..Default::default()
    };
    let season = run_season(&scene, &s, &SkyModelParams::default(), &reduced(3), &[]).unwrap();
    assert_eq!(season.days.len(), 4);
    let sum = season
        .days
        .iter()
        .fold(0.0, |acc, d| acc + d.per_ground_area_mol.unwrap());
    assert_eq!(season.per_ground_area_mol.unwrap(), sum);

    let day = season.days[0].clone();
    let twice = SeasonalResult::from_days(vec![day.clone(), day.clone()], vec![1, 1]);
    assert_eq!(twice.per_ground_area_mol.unwrap(), 2.0 * day.per_ground_area_mol.unwrap());
    for (id, v) in &twice.per_plant_mol {
        assert_eq!(*v, 2.0 * day.per_plant_mol[id]);
    }
    for d in &season.days {
        for tp in &d.timepoints {
            assert!(tp.time >= s.start_time && tp.time <= s.end_time);
        }
    }
}

#[test]
fn default_window_has_thirty_two_days() {
    let s = Schedule::default();
    assert_eq!(s.dates().len(), 32);
    assert_eq!(s.sampled_dates().len(), 32);
    assert_eq!(s.dates()[0], date(2020, 7, 15));
    assert_eq!(*s.dates().last().unwrap(), date(2020, 8, 15));
}

#[test]
fn strided_season_tracks_the_full_one() {
    let scene = tiny_canopy();
    let sky = SkyModelParams::default();
    let cfg = reduced(4);
    let full = Schedule {
        time_step_minutes: 120,
        ..Default::default()
    };
    let strided = Schedule { day_stride: 4, ..full };
    let a = run_season(&scene, &full, &sky, &cfg, &[]).unwrap().per_ground_area_mol.unwrap();
    let b = run_season(&scene, &strided, &sky, &cfg, &[]).unwrap().per_ground_area_mol.unwrap();
    assert!((a - b).abs() < 0.03 * a, "{a} vs {b}");
}

fn small_spec(plant_in: Vec<f64>, row_in: Vec<f64>, orientation: Vec<OrientationMode>, azimuths: Vec<f64>) -> ScenarioSpec {
    let mut base = FieldLayout::new(default_plant());
    base.rows = 1;
    base.plants_per_row = 4;
    ScenarioSpec {
        base,
        row_spacing: row_in.into_iter().map(|v| v * INCH).collect(),
        plant_spacing: plant_in.into_iter().map(|v| v * INCH).collect(),
        orientation,
        row_azimuth: azimuths,
        locations: vec![NamedLocation::new("ames", GeoLocation::preset("ames").unwrap())],
        radiation: reduced(6),
        sky: SkyModelParams::default(),
        schedule: Schedule {
            time_step_minutes: 390,
            ..one_day(date(2020, 8, 1), 390)
        },
    }
}

#[test]
fn baseline_grid_has_nine_rows() {
    let modes = vec![
        OrientationMode::OnRowParallel,
        OrientationMode::OffRowParallel,
        OrientationMode::Random { seed: 1 },
    ];
    let spec = small_spec(vec![6.0], vec![36.0, 30.0, 20.0], modes.clone(), vec![0.0]);
    assert_eq!(spec.len(), 9);
    let table = run_sweep(&spec).unwrap();
    assert_eq!(table.rows.len(), 9);
    for (k, row) in table.rows.iter().enumerate() {
        assert_eq!(row.key.orientation, modes[k % 3]);
        assert!(row.outcome.is_ok());
    }
    assert!(table.rows[0].key.row_spacing > table.rows[3].key.row_spacing);
    assert_eq!(table.ranking().len(), 9);
}

#[test]
fn one_cell_sweep_is_a_season_run() {
    let spec = small_spec(vec![6.0], vec![30.0], vec![OrientationMode::OffRowParallel], vec![0.3]);
    let table = run_sweep(&spec).unwrap();
    let mut layout = spec.base.clone();
    layout.row_spacing = spec.row_spacing[0];
    layout.plant_spacing = spec.plant_spacing[0];
    layout.orientation = spec.orientation[0];
    layout.row_azimuth = 0.3;
    let scene = build_field(&layout).unwrap();
    let direct = run_season(&scene, &spec.schedule, &spec.sky, &spec.radiation, &default_sensors(&scene)).unwrap();
    assert_eq!(table.rows[0].outcome.as_ref().unwrap(), &direct);
}

#[test]
fn row_direction_sweep_and_report() {
    let dirs = vec![FRAC_PI_2, 0.0, FRAC_PI_2 / 2.0, 3.0 * FRAC_PI_2 / 2.0];
    let spec = small_spec(vec![6.0], vec![30.0], vec![OrientationMode::OffRowParallel], dirs.clone());
    let table = run_sweep(&spec).unwrap();
    assert_eq!(table.rows.len(), 4);
    for (row, d) in table.rows.iter().zip(&dirs) {
        assert_eq!(row.key.row_azimuth, *d);
    }
    let mut first = Vec::new();
    write_sweep(&mut first, &table).unwrap();
    let mut ranked = Vec::new();
    write_ranking(&mut ranked, &table).unwrap();
    assert_eq!(String::from_utf8(ranked).unwrap().lines().count(), 5);

    let mut again = Vec::new();
    write_sweep(&mut again, &run_sweep(&spec).unwrap()).unwrap();
    assert_eq!(first, again);
}

#[test]
fn failing_scenarios_are_recorded() {
    let spec = small_spec(vec![6.0, -1.0], vec![30.0], vec![OrientationMode::OffRowParallel], vec![0.0]);
    match run_sweep(&spec) {
        Ok(table) => {
            assert!(table.rows[0].outcome.is_ok());
            assert!(table.rows[1].outcome.is_err());
            let mut out = Vec::new();
            write_sweep(&mut out, &table).unwrap();
            let text = String::from_utf8(out).unwrap();
            assert!(text.lines().nth(2).unwrap().contains("spacing"));
        }
        Err(e) => panic!("sweep aborted: {e}"),
    }
}

#[test]
fn periodic_scene_reports_ground_area() {
    let domain = PeriodicDomain::new(2.0, 0.5, Vec3::ZERO).unwrap();
    let scene = SceneField::from_mesh(Mesh::new(plate(0.0, 0.0, 0.5, 0.5)), Some(domain)).unwrap();
    assert_eq!(scene.ground_area(), Some(1.0));
}
