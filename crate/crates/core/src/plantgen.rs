//! Procedural maize plants and leaf-plane azimuth handling.
//!
//! Generated plants have a tapered cylindrical stem and distichous leaves:
//! each leaf is a strip swept along a parabolic midrib in a vertical plane,
//! with its width laid out horizontally across that plane. Consecutive leaves
//! alternate by half a turn around the stem.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{transform, Mesh, Organ, Triangle, Vec3};
use crate::rng::CounterRng;

/// Minimum ratio between the principal eigenvalues of the horizontal leaf
/// scatter for the leaf-plane axis to count as defined.
pub const AZIMUTH_EIGEN_RATIO_MIN: f64 = 1.05;

const STEM_SIDES: usize = 8;
const STEM_RINGS: usize = 6;
const STEM_TOP_TAPER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Stem height, m.
    pub height: f64,
    pub leaf_count: u32,
    /// Chord length of the undrooped midrib, m.
    pub leaf_length: f64,
    /// Maximum leaf width, m.
    pub leaf_width: f64,
    /// Compass azimuth of the first leaf, radians.
    pub phyllotaxy_base_azimuth: f64,
    /// Standard deviation of per-leaf azimuth scatter, radians.
    pub phyllotaxy_noise_sd: f64,
    /// Angle between the leaf base direction and the vertical, radians.
    pub leaf_inclination: f64,
    /// Parabolic droop coefficient of the midrib (dimensionless).
    pub curvature: f64,
    /// Stem radius at the base, m.
    pub stem_radius: f64,
    pub segments_per_leaf: u32,
    pub seed: u64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            height: 2.0,
            leaf_count: 12,
            leaf_length: 0.85,
            leaf_width: 0.09,
            phyllotaxy_base_azimuth: 0.0,
            phyllotaxy_noise_sd: 0.1,
            leaf_inclination: 0.6,
            curvature: 0.5,
            stem_radius: 0.012,
            segments_per_leaf: 10,
            seed: 1,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPlantParams(msg));
        let finite = [
            self.height,
            self.leaf_length,
            self.leaf_width,
            self.phyllotaxy_base_azimuth,
            self.phyllotaxy_noise_sd,
            self.leaf_inclination,
            self.curvature,
            self.stem_radius,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if !(self.height > 0.0) {
            return bad(format!("height must be positive, got {}", self.height));
        }
        if !(0.0..FRAC_PI_2).contains(&self.leaf_inclination) {
            return bad(format!(
                "leaf_inclination must be in [0, pi/2), got {}",
                self.leaf_inclination
            ));
        }
        if self.segments_per_leaf < 2 {
            return bad(format!(
                "segments_per_leaf must be at least 2, got {}",
                self.segments_per_leaf
            ));
        }
        if !(self.stem_radius > 0.0) {
            return bad("stem_radius must be positive".into());
        }
        if self.phyllotaxy_noise_sd < 0.0 || self.curvature < 0.0 {
            return bad("noise and curvature must be non-negative".into());
        }
        if self.leaf_count > 0 {
            if !(self.leaf_length > 0.0 && self.leaf_width > 0.0) {
                return bad("leaf_length and leaf_width must be positive".into());
            }
            let lowest = self.leaf_attach_height(0);
            if lowest + self.midrib_min_rise() < 0.0 {
                return bad("lowest leaf droops below the ground".into());
            }
        }
        Ok(())
    }

    /// Height at which leaf `i` joins the stem.
    pub fn leaf_attach_height(&self, i: u32) -> f64 {
        if self.leaf_count <= 1 {
            return 0.5 * self.height;
        }
        self.height * (0.15 + 0.7 * i as f64 / (self.leaf_count - 1) as f64)
    }

    /// Midrib position in the leaf's vertical plane at `u` in `[0, 1]`:
    /// (horizontal distance from the attachment, rise above it).
    pub fn midrib(&self, u: f64) -> (f64, f64) {
        let (s, c) = self.leaf_inclination.sin_cos();
        let l = self.leaf_length;
        (l * s * u, l * c * u - self.curvature * l * u * u)
    }

    /// Leaf width at `u`: 0.75 of the maximum at the collar, full width at a
    /// third of the length, zero at the tip.
    pub fn width_at(&self, u: f64) -> f64 {
        self.leaf_width * (0.75 + 1.5 * u - 2.25 * u * u)
    }

    fn midrib_min_rise(&self) -> f64 {
        let (_, end) = self.midrib(1.0);
        end.min(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct PlantModel {
    pub mesh: Mesh,
    /// Stem base; always at `z = 0`.
    pub base_anchor: Vec3,
    /// Compass azimuth of the leaf plane, in `[0, pi)`.
    pub leaf_plane_azimuth: f64,
    pub total_leaf_area: f64,
}

impl PlantModel {
    /// Wraps an arbitrary plant mesh. The mesh is shifted so the center of
    /// its footprint at ground level becomes the base anchor at the origin,
    /// and its leaf-plane azimuth is estimated from the leaves.
    pub fn from_mesh(mesh: Mesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let b = mesh.bounds();
        let shift = Vec3::new(-(b.min.x + b.max.x) * 0.5, -(b.min.y + b.max.y) * 0.5, -b.min.z);
        let mesh = transform(&mesh, 0.0, shift);
        let leaf_plane_azimuth = estimate_leaf_plane_azimuth(&mesh)?;
        Ok(Self {
            total_leaf_area: mesh.organ_area(Organ::Leaf),
            mesh,
            base_anchor: Vec3::ZERO,
            leaf_plane_azimuth,
        })
    }

    /// Copy rotated by a compass angle `delta` about the base anchor.
    pub fn rotated_compass(&self, delta: f64) -> PlantModel {
        let a = self.base_anchor;
        let mesh = transform(&transform(&self.mesh, 0.0, -a), -delta, a);
        PlantModel {
            mesh,
            base_anchor: a,
            leaf_plane_azimuth: wrap_pi(self.leaf_plane_azimuth + delta),
            total_leaf_area: self.total_leaf_area,
        }
    }
}

/// Reduces an angle to `[0, pi)`.
pub fn wrap_pi(a: f64) -> f64 {
    let r = a.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Smallest distance between two axis angles (period pi).
pub fn axis_difference(a: f64, b: f64) -> f64 {
    let d = wrap_pi(a - b);
    d.min(PI - d)
}

pub fn generate_maize(params: &PlantParams) -> Result<PlantModel> {
    params.validate()?;
    let mut mesh = Mesh::default();
    add_stem(&mut mesh, params);

    let mut rng = CounterRng::new(params.seed, 0x1eaf);
    for i in 0..params.leaf_count {
        let noise = if params.phyllotaxy_noise_sd > 0.0 {
            params.phyllotaxy_noise_sd * rng.normal()
        } else {
            0.0
        };
        let azimuth = params.phyllotaxy_base_azimuth + (i % 2) as f64 * PI + noise;
        add_leaf(&mut mesh, params, i, azimuth);
    }
    mesh.renumber(0);
    Ok(PlantModel {
        total_leaf_area: mesh.organ_area(Organ::Leaf),
        mesh,
        base_anchor: Vec3::ZERO,
        leaf_plane_azimuth: wrap_pi(params.phyllotaxy_base_azimuth),
    })
}

fn add_stem(mesh: &mut Mesh, p: &PlantParams) {
    let ring = |k: usize| -> Vec<Vec3> {
        let f = k as f64 / STEM_RINGS as f64;
        let z = p.height * f;
        let r = p.stem_radius * (1.0 - (1.0 - STEM_TOP_TAPER) * f);
        (0..STEM_SIDES)
            .map(|s| {
                let a = std::f64::consts::TAU * s as f64 / STEM_SIDES as f64;
                Vec3::new(r * a.cos(), r * a.sin(), z)
            })
            .collect()
    };
    let stem = |a, b, c| Triangle::new(a, b, c).with_organ(Organ::Stem);
    let mut lower = ring(0);
    for k in 1..=STEM_RINGS {
        let upper = ring(k);
        for s in 0..STEM_SIDES {
            let n = (s + 1) % STEM_SIDES;
            // Counterclockwise around +z, so normals face outward.
            mesh.push(stem(lower[s], lower[n], upper[n]));
            mesh.push(stem(lower[s], upper[n], upper[s]));
        }
        lower = upper;
    }
    let top = Vec3::new(0.0, 0.0, p.height);
    for s in 0..STEM_SIDES {
        let n = (s + 1) % STEM_SIDES;
        mesh.push(stem(lower[s], lower[n], top));
    }
}

fn add_leaf(mesh: &mut Mesh, p: &PlantParams, index: u32, azimuth: f64) {
    let out = Vec3::from_azimuth(azimuth);
    let across = Vec3::new(out.y, -out.x, 0.0);
    let base = out * p.stem_radius + Vec3::new(0.0, 0.0, p.leaf_attach_height(index));
    let segs = p.segments_per_leaf as usize;
    let edge = |k: usize| -> (Vec3, Vec3) {
        let u = k as f64 / segs as f64;
        let (h, v) = p.midrib(u);
        let c = base + out * h + Vec3::new(0.0, 0.0, v);
        let half = 0.5 * p.width_at(u).max(0.0);
        (c - across * half, c + across * half)
    };
    let (mut l0, mut r0) = edge(0);
    for k in 1..=segs {
        let (l1, r1) = edge(k);
        for t in [Triangle::new(l0, r0, r1), Triangle::new(l0, r1, l1)] {
            if !t.is_degenerate() {
                mesh.push(t.with_organ(Organ::Leaf));
            }
        }
        l0 = l1;
        r0 = r1;
    }
}

/// Compass azimuth in `[0, pi)` of the dominant horizontal axis of the
/// leaves: the principal eigenvector of the area-weighted scatter of leaf
/// triangle centroids projected to the ground plane.
pub fn estimate_leaf_plane_azimuth(mesh: &Mesh) -> Result<f64> {
    let leaves: Vec<(f64, f64, f64)> = mesh
        .triangles
        .iter()
        .filter(|t| t.organ == Organ::Leaf)
        .map(|t| {
            let c = t.centroid();
            (t.area(), c.x, c.y)
        })
        .collect();
    let total: f64 = leaves.iter().map(|l| l.0).sum();
    if leaves.is_empty() || !(total > 0.0) {
        return Err(Error::NoLeafTriangles);
    }
    let mx = leaves.iter().map(|l| l.0 * l.1).sum::<f64>() / total;
    let my = leaves.iter().map(|l| l.0 * l.2).sum::<f64>() / total;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(w, x, y) in &leaves {
        let (dx, dy) = (x - mx, y - my);
        sxx += w * dx * dx;
        sxy += w * dx * dy;
        syy += w * dy * dy;
    }
    let mean = 0.5 * (sxx + syy);
    let spread = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let (big, small) = (mean + spread, mean - spread);
    let ratio = if small > 0.0 { big / small } else { f64::INFINITY };
    if !(ratio >= AZIMUTH_EIGEN_RATIO_MIN) {
        return Err(Error::AmbiguousAzimuth { ratio });
    }
    // Principal axis angle counterclockwise from +x, converted to compass.
    let math_angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Ok(wrap_pi(FRAC_PI_2 - math_angle))
}

/// Rotates the plant about its base anchor so its leaf plane points along
/// `target_azimuth`. The current axis is estimated from the mesh.
pub fn reorient(plant: &PlantModel, target_azimuth: f64) -> Result<PlantModel> {
    let current = estimate_leaf_plane_azimuth(&plant.mesh)?;
    let mut out = plant.rotated_compass(target_azimuth - current);
    out.leaf_plane_azimuth = wrap_pi(target_azimuth);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stem_only_plant() {
        let p = PlantParams {
            leaf_count: 0,
            ..Default::default()
        };
        let m = generate_maize(&p).unwrap();
        assert_eq!(m.total_leaf_area, 0.0);
        assert!(m.mesh.triangles.iter().all(|t| t.organ == Organ::Stem));
        assert!(matches!(
            estimate_leaf_plane_azimuth(&m.mesh),
            Err(Error::NoLeafTriangles)
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let p = PlantParams::default();
        let a = generate_maize(&p).unwrap();
        let b = generate_maize(&p).unwrap();
        assert_eq!(a.mesh.triangles, b.mesh.triangles);
        let c = generate_maize(&PlantParams { seed: 2, ..p }).unwrap();
        assert_ne!(a.mesh.triangles, c.mesh.triangles);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let cases = [
            PlantParams { height: 0.0, ..Default::default() },
            PlantParams { leaf_inclination: FRAC_PI_2, ..Default::default() },
            PlantParams { segments_per_leaf: 1, ..Default::default() },
            PlantParams { curvature: 5.0, ..Default::default() },
            PlantParams { leaf_width: f64::NAN, ..Default::default() },
        ];
        for p in cases {
            assert!(matches!(generate_maize(&p), Err(Error::InvalidPlantParams(_))), "{p:?}");
        }
    }

    #[test]
    fn anchor_and_leaf_area_invariants() {
        let m = generate_maize(&PlantParams::default()).unwrap();
        assert_eq!(m.base_anchor.z, 0.0);
        let sum = m.mesh.organ_area(Organ::Leaf);
        assert!((sum - m.total_leaf_area).abs() <= 1e-9 * sum);
        assert!(m.mesh.bounds().min.z >= -1e-12);
    }

    #[test]
    fn leaves_in_xz_plane_point_east_west() {
        let leaf = |x0: f64, x1: f64| {
            Triangle::new(Vec3::new(x0, 0.0, 1.0), Vec3::new(x1, 0.0, 1.0), Vec3::new(x1, 0.0, 1.5))
        };
        let mesh = Mesh::new(vec![leaf(0.1, 0.6), leaf(-0.1, -0.6), leaf(0.2, 0.4)]);
        let az = estimate_leaf_plane_azimuth(&mesh).unwrap();
        assert!((az - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn isotropic_leaves_are_ambiguous() {
        let square = |dx: f64, dy: f64| {
            let c = Vec3::new(dx, dy, 1.0);
            Triangle::new(c, c + Vec3::new(0.01, 0.0, 0.0), c + Vec3::new(0.0, 0.01, 0.0))
        };
        let mesh = Mesh::new(vec![square(1.0, 0.0), square(-1.0, 0.0), square(0.0, 1.0), square(0.0, -1.0)]);
        assert!(matches!(
            estimate_leaf_plane_azimuth(&mesh),
            Err(Error::AmbiguousAzimuth { .. })
        ));
    }

    #[test]
    fn estimate_tracks_the_generator_axis() {
        for (seed, base) in [(1u64, 0.0), (2, 0.7), (3, 2.9), (4, 1.6)] {
            let p = PlantParams {
                seed,
                phyllotaxy_base_azimuth: base,
                phyllotaxy_noise_sd: 0.1,
                ..Default::default()
            };
            let m = generate_maize(&p).unwrap();
            let est = estimate_leaf_plane_azimuth(&m.mesh).unwrap();
            assert!(axis_difference(est, base) < 0.15, "seed {seed}: {est} vs {base}");
        }
    }

    #[test]
    fn rotation_shifts_the_estimate() {
        let m = generate_maize(&PlantParams::default()).unwrap();
        let est = estimate_leaf_plane_azimuth(&m.mesh).unwrap();
        for delta in [0.3, 1.0, -2.0, 4.0] {
            let r = m.rotated_compass(delta);
            let e = estimate_leaf_plane_azimuth(&r.mesh).unwrap();
            assert!(axis_difference(e, est + delta) < 1e-6);
        }
    }

    #[test]
    fn reorient_to_current_is_identity() {
        let m = generate_maize(&PlantParams::default()).unwrap();
        let est = estimate_leaf_plane_azimuth(&m.mesh).unwrap();
        let r = reorient(&m, est).unwrap();
        for (a, b) in m.mesh.triangles.iter().zip(&r.mesh.triangles) {
            for (p, q) in [(a.v0, b.v0), (a.v1, b.v1), (a.v2, b.v2)] {
                assert!((p - q).length() < 1e-12);
            }
        }
    }

    #[test]
    fn half_turn_keeps_the_axis() {
        let m = generate_maize(&PlantParams::default()).unwrap();
        let est = estimate_leaf_plane_azimuth(&m.mesh).unwrap();
        let r = reorient(&m, est + PI).unwrap();
        assert!(axis_difference(r.leaf_plane_azimuth, est) < 1e-9);
        let e = estimate_leaf_plane_azimuth(&r.mesh).unwrap();
        assert!(axis_difference(e, est) < 1e-6);
    }

    #[test]
    fn from_mesh_moves_anchor_to_origin() {
        let m = generate_maize(&PlantParams::default()).unwrap();
        let moved = transform(&m.mesh, 0.4, Vec3::new(3.0, -2.0, 1.5));
        let p = PlantModel::from_mesh(moved).unwrap();
        assert!(p.mesh.bounds().min.z.abs() < 1e-12);
        assert_eq!(p.base_anchor, Vec3::ZERO);
    }
}
