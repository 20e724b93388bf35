//! Meshes, PLY I/O, the BVH, and periodic ray casting.

mod bvh;
mod mesh;
mod periodic;
pub mod ply;
mod vec3;

pub use bvh::{intersect_triangle, ray_triangle, Bvh, LocalHit};
pub use mesh::{transform, Aabb, Mesh, Organ, Triangle, GROUND_PLANT_ID, MIN_TRIANGLE_AREA};
pub use periodic::{intersect, Hit, PeriodicDomain, Ray, DEFAULT_MAX_WRAPS};
pub use ply::{load_ply, load_ply_with_unit, save_ply, LengthUnit, PlyEncoding};
pub use vec3::Vec3;

/// Builds the acceleration structure for a triangle list.
pub fn build_bvh(triangles: &[Triangle]) -> crate::Result<Bvh> {
    Bvh::build(triangles)
}
