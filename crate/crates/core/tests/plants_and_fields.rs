mod common;

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use canopy_par::field::*;
use canopy_par::geometry::{Mesh, Organ, Vec3};
use canopy_par::plantgen::*;
use common::*;
use proptest::prelude::*;

/// Area of a strip of width `w(u)` swept along the drooping midrib,
/// integrated with Simpson's rule.
fn strip_area(p: &PlantParams) -> f64 {
    let (s, c) = p.leaf_inclination.sin_cos();
    let l = p.leaf_length;
    let f = |u: f64| {
        let w = p.leaf_width * (0.75 + 1.5 * u - 2.25 * u * u);
        let speed = ((l * s).powi(2) + (l * c - 2.0 * p.curvature * l * u).powi(2)).sqrt();
        w.max(0.0) * speed
    };
    let n = 2000;
    let h = 1.0 / n as f64;
    let mut sum = f(0.0) + f(1.0);
    for k in 1..n {
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    sum * h / 3.0
}

fn leaf_components(mesh: &Mesh) -> usize {
    let leaves: Vec<_> = mesh.triangles.iter().filter(|t| t.organ == Organ::Leaf).collect();
    let mut parent: Vec<usize> = (0..leaves.len()).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut owner: HashMap<[u64; 3], usize> = HashMap::new();
    for (i, t) in leaves.iter().enumerate() {
        for v in [t.v0, t.v1, t.v2] {
            let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
            if let Some(&j) = owner.get(&key) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            } else {
                owner.insert(key, i);
            }
        }
    }
    (0..leaves.len()).filter(|&i| find(&mut parent, i) == i).count()
}

#[test]
fn leaf_area_matches_swept_strip() {
    let p = PlantParams {
        leaf_count: 10,
        ..Default::default()
    };
    let plant = generate_maize(&p).unwrap();
    let want = 10.0 * strip_area(&p);
    assert!(
        (plant.total_leaf_area - want).abs() < 0.02 * want,
        "{} vs {want}",
        plant.total_leaf_area
    );
}

#[test]
fn leaf_strips_are_separate() {
    for n in [0, 1, 5, 12] {
        let plant = generate_maize(&PlantParams {
            leaf_count: n,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(leaf_components(&plant.mesh), n as usize);
    }
}

#[test]
fn estimate_follows_generator_axis() {
    for base in [0.0, 0.4, 1.3, 2.9] {
        let p = PlantParams {
            phyllotaxy_base_azimuth: base,
            phyllotaxy_noise_sd: 0.1,
            seed: 9,
            ..Default::default()
        };
        let plant = generate_maize(&p).unwrap();
        let est = estimate_leaf_plane_azimuth(&plant.mesh).unwrap();
        assert!(axis_difference(est, base) < 0.15, "base {base}: {est}");
    }
}

#[test]
fn orientation_modes_set_leaf_axes() {
    let plant = default_plant();
    for az in [0.0, 0.7, FRAC_PI_2] {
        for mode in [
            OrientationMode::OnRowParallel,
            OrientationMode::OffRowParallel,
            OrientationMode::Random { seed: 4 },
        ] {
            let mut layout = FieldLayout::new(plant.clone());
            layout.rows = 2;
            layout.plants_per_row = 3;
            layout.row_azimuth = az;
            layout.orientation = mode;
            let scene = build_field(&layout).unwrap();
            for p in &scene.plants {
                let est = estimate_leaf_plane_azimuth(&scene.plant_mesh_world(p.plant_id).unwrap()).unwrap();
                assert!(axis_difference(est, p.target_azimuth) < 1e-3);
                match mode {
                    OrientationMode::OnRowParallel => assert!(axis_difference(est, az) < 1e-3),
                    OrientationMode::OffRowParallel => assert!(axis_difference(est, az + FRAC_PI_2) < 1e-3),
                    OrientationMode::Random { .. } => {}
                }
            }
        }
    }
}

#[test]
fn tiling_is_seamless() {
    let mut layout = FieldLayout::new(default_plant());
    layout.rows = 3;
    layout.plants_per_row = 5;
    layout.row_azimuth = 0.5;
    let scene = build_field(&layout).unwrap();
    let d = scene.domain.unwrap();
    let local: Vec<Vec3> = scene.plants.iter().map(|p| scene.frame.to_local(p.position)).collect();
    for shift in [Vec3::new(d.x_extent, 0.0, 0.0), Vec3::new(0.0, d.y_extent, 0.0)] {
        for p in &local {
            let q = d.wrap_point(*p + shift);
            assert!(local.iter().any(|r| (*r - q).length() < 1e-9), "{q:?}");
        }
    }
}

#[test]
fn row_azimuth_rotates_the_field() {
    let plant = default_plant();
    let build = |az: f64| {
        let mut layout = FieldLayout::new(plant.clone());
        layout.rows = 2;
        layout.plants_per_row = 4;
        layout.row_azimuth = az;
        layout.orientation = OrientationMode::Random { seed: 2 };
        build_field(&layout).unwrap()
    };
    let delta = 0.65;
    let a = build(0.0);
    let b = build(delta);
    for (p, q) in a.plants.iter().zip(&b.plants) {
        // A compass (clockwise) rotation is a negative right-handed yaw.
        assert!((p.position.rotate_z(-delta) - q.position).length() < 1e-9);
        assert!(axis_difference(p.target_azimuth + delta, q.target_azimuth) < 1e-9);
    }
}

#[test]
fn spacing_conversions() {
    use canopy_par::geometry::LengthUnit;
    assert!((convert_spacing(30.0, LengthUnit::Inch).unwrap() - 0.762).abs() < 1e-12);
    assert!((convert_spacing(6.0, LengthUnit::Inch).unwrap() - 0.1524).abs() < 1e-12);
    assert_eq!(convert_spacing(1.0, LengthUnit::M).unwrap(), 1.0);
    assert!(convert_spacing(0.0, LengthUnit::Cm).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reorient_then_estimate_closes(
        target in 0.0..PI,
        base in 0.0..PI,
        noise in 0.0..0.3f64,
        seed in 0u64..500,
    ) {
        let plant = generate_maize(&PlantParams {
            phyllotaxy_base_azimuth: base,
            phyllotaxy_noise_sd: noise,
            seed,
            ..Default::default()
        })
        .unwrap();
        let r = reorient(&plant, target).unwrap();
        let est = estimate_leaf_plane_azimuth(&r.mesh).unwrap();
        prop_assert!(axis_difference(est, target) < 1e-3);
        prop_assert!(axis_difference(r.leaf_plane_azimuth, target) < 1e-6);
        let before = plant.mesh.total_area();
        prop_assert!((r.mesh.total_area() - before).abs() <= 1e-9 * before);
    }
}
