use serde::{Deserialize, Serialize};

use super::Vec3;

/// Triangles smaller than this are rejected as degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Organ {
    Leaf,
    Stem,
    Ground,
}

impl Organ {
    pub fn as_str(self) -> &'static str {
        match self {
            Organ::Leaf => "leaf",
            Organ::Stem => "stem",
            Organ::Ground => "ground",
        }
    }

    /// Integer code used by the PLY `organ` property.
    pub fn code(self) -> u8 {
        match self {
            Organ::Leaf => 0,
            Organ::Stem => 1,
            Organ::Ground => 2,
        }
    }

    pub fn from_code(code: i64) -> Option<Organ> {
        match code {
            0 => Some(Organ::Leaf),
            1 => Some(Organ::Stem),
            2 => Some(Organ::Ground),
            _ => None,
        }
    }
}

/// Plant id carried by ground triangles.
pub const GROUND_PLANT_ID: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub v0: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
    pub plant_id: u32,
    pub organ: Organ,
    pub primitive_id: u32,
}

impl Triangle {
    pub fn new(v0: Vec3, v1: Vec3, v2: Vec3) -> Self {
        Self {
            v0,
            v1,
            v2,
            plant_id: 0,
            organ: Organ::Leaf,
            primitive_id: 0,
        }
    }

    pub fn with_organ(mut self, organ: Organ) -> Self {
        self.organ = organ;
        self
    }

    pub fn with_plant(mut self, plant_id: u32) -> Self {
        self.plant_id = plant_id;
        self
    }

    /// Unnormalized normal; its length is twice the area.
    #[inline]
    pub fn scaled_normal(&self) -> Vec3 {
        (self.v1 - self.v0).cross(self.v2 - self.v0)
    }

    #[inline]
    pub fn normal(&self) -> Vec3 {
        self.scaled_normal().normalized()
    }

    #[inline]
    pub fn area(&self) -> f64 {
        0.5 * self.scaled_normal().length()
    }

    pub fn centroid(&self) -> Vec3 {
        (self.v0 + self.v1 + self.v2) / 3.0
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_point(self.v0).include(self.v1).include(self.v2)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.area() > MIN_TRIANGLE_AREA)
    }

    /// Point from barycentric weights of `v1` and `v2`.
    #[inline]
    pub fn point_at(&self, b1: f64, b2: f64) -> Vec3 {
        self.v0 + (self.v1 - self.v0) * b1 + (self.v2 - self.v0) * b2
    }

    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Triangle {
        Triangle {
            v0: f(self.v0),
            v1: f(self.v1),
            v2: f(self.v2),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Default for Aabb {
    fn default() -> Self {
        Self::empty()
    }
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::splat(f64::INFINITY),
            max: Vec3::splat(f64::NEG_INFINITY),
        }
    }

    pub fn from_point(p: Vec3) -> Self {
        Self { min: p, max: p }
    }

    pub fn include(self, p: Vec3) -> Self {
        Self {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn union(self, o: Aabb) -> Self {
        Self {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && self.max.x >= o.min.x
            && self.min.y <= o.max.y
            && self.max.y >= o.min.y
            && self.min.z <= o.max.z
            && self.max.z >= o.min.z
    }

    pub fn translated(&self, t: Vec3) -> Aabb {
        Aabb {
            min: self.min + t,
            max: self.max + t,
        }
    }

    /// Slab test; returns the entry/exit parameters clipped to `[t0, t1]`.
    #[inline]
    pub fn ray_range(&self, origin: Vec3, inv_dir: Vec3, t0: f64, t1: f64) -> Option<(f64, f64)> {
        let mut lo = t0;
        let mut hi = t1;
        for axis in 0..3 {
            let a = (self.min[axis] - origin[axis]) * inv_dir[axis];
            let b = (self.max[axis] - origin[axis]) * inv_dir[axis];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            // NaN (0 * inf) leaves the bounds untouched.
            if near > lo {
                lo = near;
            }
            if far < hi {
                hi = far;
            }
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }
}

/// A labeled triangle soup.
#[derive(Debug, Clone, Default)]
pub struct Mesh {
    pub triangles: Vec<Triangle>,
    bounds: Aabb,
}

impl Mesh {
    pub fn new(triangles: Vec<Triangle>) -> Self {
        let bounds = triangles
            .iter()
            .fold(Aabb::empty(), |b, t| b.union(t.bounds()));
        Self { triangles, bounds }
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(Triangle::area).sum()
    }

    pub fn organ_area(&self, organ: Organ) -> f64 {
        self.triangles
            .iter()
            .filter(|t| t.organ == organ)
            .map(Triangle::area)
            .sum()
    }

    pub fn push(&mut self, t: Triangle) {
        self.bounds = self.bounds.union(t.bounds());
        self.triangles.push(t);
    }

    pub fn extend(&mut self, other: &Mesh) {
        for t in &other.triangles {
            self.push(*t);
        }
    }

    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Mesh {
        Mesh::new(self.triangles.iter().map(|t| t.map_vertices(&f)).collect())
    }

    pub fn with_plant_id(mut self, plant_id: u32) -> Mesh {
        for t in &mut self.triangles {
            t.plant_id = plant_id;
        }
        self
    }

    /// Scales every vertex, e.g. for unit conversion.
    pub fn scaled(&self, factor: f64) -> Mesh {
        self.map_vertices(|v| v * factor)
    }

    /// Assigns sequential primitive ids starting at `first`.
    pub fn renumber(&mut self, first: u32) {
        for (i, t) in self.triangles.iter_mut().enumerate() {
            t.primitive_id = first + i as u32;
        }
    }
}

/// Rotates every vertex by `yaw` (right-handed about `+z`, around the origin)
/// and then translates it.
///
/// Plant meshes keep their base anchor at the origin, so rotating about the
/// origin is rotating about the anchor.
pub fn transform(mesh: &Mesh, yaw: f64, translation: Vec3) -> Mesh {
    if yaw == 0.0 {
        return mesh.map_vertices(|v| v + translation);
    }
    mesh.map_vertices(|v| v.rotate_z(yaw) + translation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tri(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Triangle {
        Triangle::new(
            Vec3::new(a[0], a[1], a[2]),
            Vec3::new(b[0], b[1], b[2]),
            Vec3::new(c[0], c[1], c[2]),
        )
    }

    #[test]
    fn identity_transform() {
        let m = Mesh::new(vec![tri([0.1, 0.2, 0.3], [1.0, 0.0, 0.5], [0.0, 2.0, 1.0])]);
        let out = transform(&m, 0.0, Vec3::ZERO);
        assert_eq!(out.triangles, m.triangles);
    }

    #[test]
    fn half_turn() {
        let p = Vec3::new(1.0, 0.0, 0.0).rotate_z(PI);
        assert!((p.x + 1.0).abs() < 1e-12);
        assert!(p.y.abs() < 1e-12);
        assert!(p.z.abs() < 1e-12);
    }

    #[test]
    fn bounds_cover_vertices() {
        let m = Mesh::new(vec![
            tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            tri([-2.0, 3.0, 1.0], [1.0, 5.0, 0.0], [0.0, 1.0, -4.0]),
        ]);
        for t in &m.triangles {
            for v in [t.v0, t.v1, t.v2] {
                assert!(m.bounds().contains(v));
            }
        }
        assert_eq!(m.bounds().min, Vec3::new(-2.0, 0.0, -4.0));
    }

    fn arb_point() -> impl Strategy<Value = Vec3> {
        (-5.0..5.0f64, -5.0..5.0f64, 0.0..3.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn rigid_motion_preserves_area_and_distances(
            pts in proptest::collection::vec((arb_point(), arb_point(), arb_point()), 1..20),
            yaw in -10.0..10.0f64,
            t in arb_point(),
        ) {
            let mesh = Mesh::new(pts.iter().map(|&(a, b, c)| Triangle::new(a, b, c)).collect());
            let moved = transform(&mesh, yaw, t);
            let (a0, a1) = (mesh.total_area(), moved.total_area());
            prop_assert!((a0 - a1).abs() <= 1e-9 * a0.max(1e-12));
            for (p, q) in mesh.triangles.iter().zip(&moved.triangles) {
                let d0 = (p.v1 - p.v0).length();
                let d1 = (q.v1 - q.v0).length();
                prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1e-12));
                let e0 = (p.v2 - p.v1).length();
                let e1 = (q.v2 - q.v1).length();
                prop_assert!((e0 - e1).abs() <= 1e-9 * e0.max(1e-12));
            }
        }
    }
}
