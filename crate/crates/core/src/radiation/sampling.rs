use std::f64::consts::TAU;

use crate::geometry::{Triangle, Vec3};
use crate::rng::CounterRng;

/// Stream tags separating the random sequences of each pass.
pub(crate) const PASS_DIRECT: u64 = 1;
pub(crate) const PASS_DIFFUSE: u64 = 2;
pub(crate) const PASS_SENSOR: u64 = 3;
pub(crate) const PASS_SCATTER: u64 = 16;

/// Generator for sample `sample` of face `face` of a primitive in a pass.
pub(crate) fn sample_rng(seed: u64, pass: u64, primitive: u64, face: u64, sample: u64) -> CounterRng {
    CounterRng::from_key(&[seed, pass, primitive, face, sample])
}

/// Area-uniform point on a triangle.
pub(crate) fn point_on(tri: &Triangle, u1: f64, u2: f64) -> Vec3 {
    let s = u1.sqrt();
    tri.point_at(s * (1.0 - u2), s * u2)
}

/// Value in stratum `j` of `n` along one dimension.
pub(crate) fn stratified(j: u32, n: u32, r: f64) -> f64 {
    (j as f64 + r) / n as f64
}

/// Two coordinates for sample `j` of `n`: a jittered square grid covers
/// the largest square number of samples, the rest are uniform.
pub(crate) fn stratified_2d(j: u32, n: u32, rng: &mut CounterRng) -> (f64, f64) {
    let k = (n as f64).sqrt().floor() as u32;
    let (r1, r2) = (rng.uniform(), rng.uniform());
    if j < k * k {
        (stratified(j % k, k, r1), stratified(j / k, k, r2))
    } else {
        (r1, r2)
    }
}

/// Cosine-weighted direction about the unit normal `n`.
pub(crate) fn cosine_direction(n: Vec3, u1: f64, u2: f64) -> Vec3 {
    let r = u1.sqrt();
    let phi = TAU * u2;
    let z = (1.0 - u1).max(0.0).sqrt();
    let (t, b) = n.orthonormal_basis();
    (t * (r * phi.cos()) + b * (r * phi.sin()) + n * z).normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_directions_have_expected_mean_cosine() {
        // E[cos] = 2/3 for a cosine-weighted hemisphere.
        let n = Vec3::new(0.3, -0.2, 0.9).normalized();
        let mut rng = CounterRng::new(3, 0);
        let m = 50_000;
        let mut sum = 0.0;
        for j in 0..m {
            let (a, b) = stratified_2d(j, m, &mut rng);
            let d = cosine_direction(n, a, b);
            assert!((d.length() - 1.0).abs() < 1e-12);
            assert!(d.dot(n) >= 0.0);
            sum += d.dot(n);
        }
        assert!((sum / m as f64 - 2.0 / 3.0).abs() < 2e-3);
    }

    #[test]
    fn triangle_points_are_inside() {
        let t = Triangle::new(Vec3::ZERO, Vec3::X, Vec3::Y);
        let mut rng = CounterRng::new(1, 1);
        let mut mean = Vec3::ZERO;
        let m = 20_000;
        for _ in 0..m {
            let p = point_on(&t, rng.uniform(), rng.uniform());
            assert!(p.x >= 0.0 && p.y >= 0.0 && p.x + p.y <= 1.0 + 1e-12);
            mean += p / m as f64;
        }
        assert!((mean.x - 1.0 / 3.0).abs() < 0.01 && (mean.y - 1.0 / 3.0).abs() < 0.01);
    }
}
