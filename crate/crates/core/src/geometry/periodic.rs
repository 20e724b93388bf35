//! Ray casting with optional periodic lateral boundaries.
//!
//! A periodic domain tiles the plane with copies of the scene. When a ray
//! leaves the domain cell through a lateral face it continues in the
//! neighbouring cell, which is equivalent to re-entering on the opposite
//! face. Geometry that overhangs the cell boundary is handled by testing
//! the neighbouring copies whose bounds reach into the current cell.
//! The vertical direction never wraps.

use serde::{Deserialize, Serialize};

use super::{Aabb, Bvh, Vec3};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_WRAPS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    /// Ray with an unbounded range. `direction` must be unit length.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        debug_assert!((direction.length() - 1.0).abs() < 1e-9, "ray direction must be unit");
        Self {
            origin,
            direction,
            t_min: 0.0,
            t_max: f64::INFINITY,
        }
    }

    pub fn with_range(mut self, t_min: f64, t_max: f64) -> Self {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    pub fn at(&self, s: f64) -> Vec3 {
        self.origin + self.direction * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub primitive_id: u32,
    /// Cumulative distance along the ray, including wrapped segments.
    pub distance: f64,
    pub entering_front_face: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicDomain {
    pub x_extent: f64,
    pub y_extent: f64,
    /// Lower corner of the base cell.
    pub origin: Vec3,
}

impl PeriodicDomain {
    pub fn new(x_extent: f64, y_extent: f64, origin: Vec3) -> Result<Self> {
        if !(x_extent > 0.0 && y_extent > 0.0) || !x_extent.is_finite() || !y_extent.is_finite() {
            return Err(Error::InvalidValue(format!(
                "periodic extents must be positive, got {x_extent} x {y_extent}"
            )));
        }
        Ok(Self {
            x_extent,
            y_extent,
            origin,
        })
    }

    pub fn area(&self) -> f64 {
        self.x_extent * self.y_extent
    }

    /// Index of the cell containing `p`.
    pub fn cell_of(&self, p: Vec3) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.x_extent).floor() as i64,
            ((p.y - self.origin.y) / self.y_extent).floor() as i64,
        )
    }

    /// Translates `p` into the base cell.
    pub fn wrap_point(&self, p: Vec3) -> Vec3 {
        let (i, j) = self.cell_of(p);
        Vec3::new(
            p.x - i as f64 * self.x_extent,
            p.y - j as f64 * self.y_extent,
            p.z,
        )
    }

    /// Range of copy offsets (relative to a cell) whose copy of `bounds`
    /// can reach into that cell, per lateral axis.
    fn neighbour_range(&self, bounds: &Aabb) -> ((i64, i64), (i64, i64)) {
        let axis = |lo: f64, ext: f64, bmin: f64, bmax: f64| {
            let a_min = ((lo - bmax) / ext).ceil() as i64;
            let a_max = ((lo - bmin) / ext + 1.0).floor() as i64;
            (a_min.min(0), a_max.max(0))
        };
        (
            axis(self.origin.x, self.x_extent, bounds.min.x, bounds.max.x),
            axis(self.origin.y, self.y_extent, bounds.min.y, bounds.max.y),
        )
    }
}

/// Nearest hit along `ray`.
///
/// With a domain and `max_wraps > 0` the ray may cross up to `max_wraps`
/// lateral cell faces; once the budget is spent, or the ray leaves the
/// vertical extent of the scene, it reports no hit. With `max_wraps == 0`
/// (or no domain) the ray is cast against the scene as-is.
pub fn intersect(bvh: &Bvh, ray: &Ray, domain: Option<&PeriodicDomain>, max_wraps: u32) -> Option<Hit> {
    let domain = match domain {
        Some(d) if max_wraps > 0 => d,
        _ => {
            return bvh
                .intersect_segment(ray.origin, ray.direction, ray.t_min, ray.t_max)
                .map(|h| Hit {
                    primitive_id: bvh.primitive_id(h.index),
                    distance: h.t,
                    entering_front_face: h.front,
                })
        }
    };

    // Padded so hits on geometry lying exactly on the bounding planes (the
    // ground, flat plates) survive rounding of the slab parameters.
    let scene = {
        let b = bvh.bounds();
        let pad = 1e-9 * (1.0 + b.extent().length());
        Aabb {
            min: b.min - Vec3::splat(pad),
            max: b.max + Vec3::splat(pad),
        }
    };
    let o = ray.origin;
    let d = ray.direction;
    let ((ax0, ax1), (ay0, ay1)) = domain.neighbour_range(&scene);

    // Parameter range in which the ray lies within the scene's z slab.
    let (slab_lo, slab_hi) = if d.z == 0.0 {
        if o.z < scene.min.z || o.z > scene.max.z {
            return None;
        }
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        let a = (scene.min.z - o.z) / d.z;
        let b = (scene.max.z - o.z) / d.z;
        (a.min(b), a.max(b))
    };
    let t_end = ray.t_max.min(slab_hi);
    let mut t = ray.t_min.max(slab_lo);
    if t > t_end {
        return None;
    }

    // Cell of the starting point. Rays that begin outside the slab are
    // advanced to it, which may already cross cells; that is part of the
    // straight path and counts toward the wrap budget.
    let (ci0, cj0) = domain.cell_of(ray.at(ray.t_min));
    let (mut ci, mut cj) = domain.cell_of(ray.at(t));
    let mut wraps = (ci - ci0).unsigned_abs() + (cj - cj0).unsigned_abs();
    if wraps > max_wraps as u64 {
        return None;
    }

    loop {
        let x_lo = domain.origin.x + ci as f64 * domain.x_extent;
        let y_lo = domain.origin.y + cj as f64 * domain.y_extent;
        let tx = if d.x > 0.0 {
            (x_lo + domain.x_extent - o.x) / d.x
        } else if d.x < 0.0 {
            (x_lo - o.x) / d.x
        } else {
            f64::INFINITY
        };
        let ty = if d.y > 0.0 {
            (y_lo + domain.y_extent - o.y) / d.y
        } else if d.y < 0.0 {
            (y_lo - o.y) / d.y
        } else {
            f64::INFINITY
        };
        let t_exit = tx.min(ty).min(t_end);

        let p0 = ray.at(t);
        let p1 = ray.at(t_exit);
        let seg = Aabb::from_point(p0).include(p1);
        let mut best: Option<Hit> = None;
        let mut best_t = t_exit;
        for a in ax0..=ax1 {
            for b in ay0..=ay1 {
                let shift = Vec3::new(
                    (ci + a) as f64 * domain.x_extent,
                    (cj + b) as f64 * domain.y_extent,
                    0.0,
                );
                if !scene.translated(shift).overlaps(&seg) {
                    continue;
                }
                if let Some(h) = bvh.intersect_segment(o - shift, d, t, best_t) {
                    let pid = bvh.primitive_id(h.index);
                    let better = match best {
                        None => true,
                        Some(prev) => h.t < prev.distance || (h.t == prev.distance && pid < prev.primitive_id),
                    };
                    if better {
                        best_t = h.t;
                        best = Some(Hit {
                            primitive_id: pid,
                            distance: h.t,
                            entering_front_face: h.front,
                        });
                    }
                }
            }
        }
        if best.is_some() {
            return best;
        }
        if t_exit >= t_end {
            return None;
        }
        wraps += 1;
        if wraps > max_wraps as u64 {
            return None;
        }
        if tx <= t_exit {
            ci += if d.x > 0.0 { 1 } else { -1 };
        }
        if ty <= t_exit {
            cj += if d.y > 0.0 { 1 } else { -1 };
        }
        t = t_exit;
    }
}
