#![allow(dead_code)]

use canopy_par::field::{add_ground, build_field, FieldLayout, OrientationMode, SceneField};
use canopy_par::geometry::{ray_triangle, Mesh, Organ, PeriodicDomain, Ray, Triangle, Vec3};
use canopy_par::plantgen::{generate_maize, PlantModel, PlantParams};
use canopy_par::radiation::RadiationConfig;
use canopy_par::rng::CounterRng;
use canopy_par::simdriver::Schedule;
use canopy_par::solar::SolarState;
use chrono::NaiveDate;

pub const INCH: f64 = 0.0254;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn unit_sphere(rng: &mut CounterRng) -> Vec3 {
    let z = 2.0 * rng.uniform() - 1.0;
    let phi = std::f64::consts::TAU * rng.uniform();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Random triangles with vertices scattered around centres in `[0, 1]^3`.
pub fn triangle_soup(rng: &mut CounterRng, n: usize, size: f64) -> Vec<Triangle> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let c = Vec3::new(rng.uniform(), rng.uniform(), rng.uniform());
        let mut v = || c + Vec3::new(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5) * size;
        let t = Triangle::new(v(), v(), v());
        if !t.is_degenerate() {
            let mut t = t;
            t.primitive_id = out.len() as u32;
            out.push(t);
        }
    }
    out
}

/// Nearest hit by testing every triangle, and with a domain every copy of
/// it in a block of cells, keeping hits whose cell lies within
/// `max_wraps` face crossings of the origin cell.
pub fn brute_force(tris: &[Triangle], ray: &Ray, domain: Option<&PeriodicDomain>, max_wraps: u32) -> Option<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    let mut consider = |id: u32, t: f64| {
        if best.map_or(true, |(_, b)| t < b) {
            best = Some((id, t));
        }
    };
    match domain {
        Some(d) if max_wraps > 0 => {
            let reach = max_wraps as i64 + 2;
            let (ci, cj) = d.cell_of(ray.origin);
            for tri in tris {
                for a in -reach..=reach {
                    for b in -reach..=reach {
                        let shift = Vec3::new(
                            (ci + a) as f64 * d.x_extent,
                            (cj + b) as f64 * d.y_extent,
                            0.0,
                        );
                        let copy = tri.map_vertices(|v| v + shift);
                        if let Some(t) = ray_triangle(&copy, ray.origin, ray.direction, ray.t_min, ray.t_max) {
                            let (hi, hj) = d.cell_of(ray.at(t));
                            if (hi - ci).abs() + (hj - cj).abs() <= max_wraps as i64 {
                                consider(tri.primitive_id, t);
                            }
                        }
                    }
                }
            }
        }
        _ => {
            for tri in tris {
                if let Some(t) = ray_triangle(tri, ray.origin, ray.direction, ray.t_min, ray.t_max) {
                    consider(tri.primitive_id, t);
                }
            }
        }
    }
    best
}

/// Square horizontal plate facing up, as two triangles.
pub fn plate(x0: f64, y0: f64, side: f64, z: f64) -> Vec<Triangle> {
    let p = |x: f64, y: f64| Vec3::new(x0 + x * side, y0 + y * side, z);
    vec![
        Triangle::new(p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)),
        Triangle::new(p(0.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)),
    ]
}

pub fn zenith_sun(dni: f64, dhi: f64) -> SolarState {
    SolarState::with_fluxes(0.0, 0.0, dni, dhi)
}

pub fn optics(rho: f64, tau: f64, iterations: u32) -> RadiationConfig {
    RadiationConfig {
        leaf_reflectance: rho,
        leaf_transmittance: tau,
        scattering_iterations: iterations,
        ..Default::default()
    }
}

/// Sampling used by the field-scale runs.
pub fn reduced(seed: u64) -> RadiationConfig {
    RadiationConfig {
        direct_samples_per_primitive: 4,
        diffuse_samples_per_primitive: 8,
        scatter_samples_per_primitive: 4,
        rng_seed: seed,
        ..Default::default()
    }
}

/// Horizontal square leaves with Poisson (uniform) positions and heights
/// in a periodic `side x side` domain over a ground plane.
pub fn horizontal_canopy(seed: u64, lai: f64, side: f64, leaf: f64) -> SceneField {
    let mut rng = CounterRng::new(seed, 77);
    let domain = PeriodicDomain::new(side, side, Vec3::ZERO).unwrap();
    let n = (lai * side * side / (leaf * leaf)).round() as usize;
    let mut mesh = Mesh::default();
    for k in 0..n {
        let x = rng.uniform() * side;
        let y = rng.uniform() * side;
        let z = 0.2 + rng.uniform();
        for t in plate(x - leaf / 2.0, y - leaf / 2.0, leaf, z) {
            mesh.push(t.with_plant(k as u32));
        }
    }
    add_ground(&mut mesh, &domain, 0.1);
    SceneField::from_mesh(mesh, Some(domain)).unwrap()
}

pub fn default_plant() -> PlantModel {
    generate_maize(&PlantParams::default()).unwrap()
}

/// Two rows of eight plants; spacings in inches.
pub fn small_field(plant: &PlantModel, row_in: f64, plant_in: f64, orientation: OrientationMode) -> SceneField {
    let mut layout = FieldLayout::new(plant.clone());
    layout.rows = 2;
    layout.plants_per_row = 8;
    layout.row_spacing = row_in * INCH;
    layout.plant_spacing = plant_in * INCH;
    layout.orientation = orientation;
    build_field(&layout).unwrap()
}

/// Five dates (every seventh day of the default window) and five times a day.
pub fn coarse_season() -> Schedule {
    Schedule {
        day_stride: 7,
        time_step_minutes: 195,
        ..Default::default()
    }
}

pub fn leaf_area(mesh: &Mesh) -> f64 {
    mesh.organ_area(Organ::Leaf)
}
