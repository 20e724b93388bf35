//! Binned-SAH bounding volume hierarchy over triangles.

use super::{Aabb, Triangle, Vec3};
use crate::error::{Error, Result};

const MAX_LEAF_SIZE: usize = 4;
const SAH_BINS: usize = 16;
const TRAVERSAL_COST: f64 = 1.0;
const INTERSECT_COST: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`. Interior: index of the left child
    /// (the right child is stored at `start + 1`).
    start: u32,
    /// Number of primitives in a leaf, zero for interior nodes.
    count: u32,
}

/// Precomputed triangle data in the layout used by traversal.
#[derive(Debug, Clone, Copy)]
struct TriData {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
    normal: Vec3,
}

/// Nearest intersection found inside the BVH, in local triangle indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalHit {
    pub t: f64,
    pub index: u32,
    pub front: bool,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Permutation of triangle indices referenced by leaves.
    order: Vec<u32>,
    tris: Vec<TriData>,
    primitive_ids: Vec<u32>,
}

/// Two-sided Möller–Trumbore test. Returns `(t, front)` where `front` is set
/// when the ray meets the side the geometric normal points to.
#[inline]
pub fn intersect_triangle(
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
    origin: Vec3,
    dir: Vec3,
    t_min: f64,
    t_max: f64,
) -> Option<f64> {
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - v0;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    if t >= t_min && t <= t_max {
        Some(t)
    } else {
        None
    }
}

/// Convenience wrapper over [`intersect_triangle`] for a [`Triangle`].
pub fn ray_triangle(tri: &Triangle, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
    intersect_triangle(tri.v0, tri.v1 - tri.v0, tri.v2 - tri.v0, origin, dir, t_min, t_max)
}

struct BuildItem {
    bounds: Aabb,
    centroid: Vec3,
}

impl Bvh {
    /// Builds the hierarchy. Construction is deterministic for a fixed
    /// input order.
    pub fn build(triangles: &[Triangle]) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::EmptyBvh);
        }
        let items: Vec<BuildItem> = triangles
            .iter()
            .map(|t| {
                let b = t.bounds();
                BuildItem {
                    bounds: b,
                    centroid: b.center(),
                }
            })
            .collect();
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = vec![Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        }];
        // (node index, first, last exclusive)
        let mut stack = vec![(0usize, 0usize, triangles.len())];
        while let Some((ni, first, last)) = stack.pop() {
            let slice = &mut order[first..last];
            let bounds = slice
                .iter()
                .fold(Aabb::empty(), |b, &i| b.union(items[i as usize].bounds));
            nodes[ni].bounds = bounds;
            let n = last - first;
            let split = if n <= MAX_LEAF_SIZE {
                None
            } else {
                find_split(&items, slice, &bounds)
            };
            match split {
                None => {
                    nodes[ni].start = first as u32;
                    nodes[ni].count = n as u32;
                }
                Some((axis, pos)) => {
                    let mut mid = partition(slice, |i| items[i as usize].centroid[axis] < pos);
                    if mid == 0 || mid == n {
                        // Median split keeps both children nonempty.
                        slice.sort_by(|&a, &b| {
                            items[a as usize].centroid[axis]
                                .total_cmp(&items[b as usize].centroid[axis])
                                .then(a.cmp(&b))
                        });
                        mid = n / 2;
                    }
                    let left = nodes.len();
                    nodes.push(Node {
                        bounds: Aabb::empty(),
                        start: 0,
                        count: 0,
                    });
                    nodes.push(Node {
                        bounds: Aabb::empty(),
                        start: 0,
                        count: 0,
                    });
                    nodes[ni].start = left as u32;
                    nodes[ni].count = 0;
                    stack.push((left + 1, first + mid, last));
                    stack.push((left, first, first + mid));
                }
            }
        }

        let tris = triangles
            .iter()
            .map(|t| TriData {
                v0: t.v0,
                e1: t.v1 - t.v0,
                e2: t.v2 - t.v0,
                normal: t.normal(),
            })
            .collect();
        Ok(Self {
            nodes,
            order,
            tris,
            primitive_ids: triangles.iter().map(|t| t.primitive_id).collect(),
        })
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn len(&self) -> usize {
        self.tris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Maps a local triangle index to its `primitive_id`.
    pub fn primitive_id(&self, index: u32) -> u32 {
        self.primitive_ids[index as usize]
    }

    /// Local triangle indices in leaf order, each exactly once.
    pub fn leaf_primitives(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.count > 0)
            .flat_map(|n| self.order[n.start as usize..(n.start + n.count) as usize].iter().copied())
    }

    /// Checks that every node's box encloses its subtree.
    pub fn check_bounds(&self, triangles: &[Triangle]) -> bool {
        fn encloses(outer: &Aabb, inner: &Aabb) -> bool {
            outer.min.x <= inner.min.x
                && outer.min.y <= inner.min.y
                && outer.min.z <= inner.min.z
                && outer.max.x >= inner.max.x
                && outer.max.y >= inner.max.y
                && outer.max.z >= inner.max.z
        }
        self.nodes.iter().all(|n| {
            if n.count > 0 {
                self.order[n.start as usize..(n.start + n.count) as usize]
                    .iter()
                    .all(|&i| encloses(&n.bounds, &triangles[i as usize].bounds()))
            } else {
                let l = &self.nodes[n.start as usize];
                let r = &self.nodes[n.start as usize + 1];
                encloses(&n.bounds, &l.bounds) && encloses(&n.bounds, &r.bounds)
            }
        })
    }

    /// Nearest hit with `t` in `[t_min, t_max]`. Ties go to the lower
    /// local index so results do not depend on traversal order.
    pub fn intersect_segment(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<LocalHit> {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best_t = t_max;
        let mut best: Option<u32> = None;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        let root = &self.nodes[0];
        if root.bounds.ray_range(origin, inv, t_min, best_t).is_none() {
            return None;
        }
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if node.count > 0 {
                for &i in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    let tri = &self.tris[i as usize];
                    if let Some(t) = intersect_triangle(tri.v0, tri.e1, tri.e2, origin, dir, t_min, best_t) {
                        if t < best_t || best.is_none_or(|b| i < b) {
                            best_t = t;
                            best = Some(i);
                        }
                    }
                }
                continue;
            }
            let li = node.start;
            let ri = node.start + 1;
            let lr = self.nodes[li as usize].bounds.ray_range(origin, inv, t_min, best_t);
            let rr = self.nodes[ri as usize].bounds.ray_range(origin, inv, t_min, best_t);
            match (lr, rr) {
                (Some((ln, _)), Some((rn, _))) => {
                    // Push the far child first so the near one is visited next.
                    let (near, far) = if ln <= rn { (li, ri) } else { (ri, li) };
                    stack[sp] = far;
                    stack[sp + 1] = near;
                    sp += 2;
                }
                (Some(_), None) => {
                    stack[sp] = li;
                    sp += 1;
                }
                (None, Some(_)) => {
                    stack[sp] = ri;
                    sp += 1;
                }
                (None, None) => {}
            }
        }
        best.map(|i| LocalHit {
            t: best_t,
            index: i,
            front: dir.dot(self.tris[i as usize].normal) < 0.0,
        })
    }

    /// Whether anything is hit in `[t_min, t_max]`.
    pub fn occluded(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> bool {
        self.intersect_segment(origin, dir, t_min, t_max).is_some()
    }
}

fn partition(slice: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let mut i = 0;
    for j in 0..slice.len() {
        if pred(slice[j]) {
            slice.swap(i, j);
            i += 1;
        }
    }
    i
}

/// Returns `(axis, position)` of the cheapest binned SAH split, or `None`
/// when a leaf is cheaper or the centroids cannot be separated.
fn find_split(items: &[BuildItem], slice: &[u32], bounds: &Aabb) -> Option<(usize, f64)> {
    let cb = slice
        .iter()
        .fold(Aabb::empty(), |b, &i| b.include(items[i as usize].centroid));
    let ext = cb.extent();
    let parent_area = bounds.surface_area();
    let n = slice.len();
    let leaf_cost = INTERSECT_COST * n as f64;
    let mut best: Option<(f64, usize, f64)> = None;

    for axis in 0..3 {
        if !(ext[axis] > 0.0) {
            continue;
        }
        let lo = cb.min[axis];
        let scale = SAH_BINS as f64 / ext[axis];
        let mut bin_bounds = [Aabb::empty(); SAH_BINS];
        let mut bin_counts = [0usize; SAH_BINS];
        for &i in slice {
            let it = &items[i as usize];
            let b = (((it.centroid[axis] - lo) * scale) as usize).min(SAH_BINS - 1);
            bin_counts[b] += 1;
            bin_bounds[b] = bin_bounds[b].union(it.bounds);
        }
        let mut right_area = [0.0; SAH_BINS];
        let mut right_count = [0usize; SAH_BINS];
        let mut acc = Aabb::empty();
        let mut cnt = 0;
        for b in (1..SAH_BINS).rev() {
            acc = acc.union(bin_bounds[b]);
            cnt += bin_counts[b];
            right_area[b] = acc.surface_area();
            right_count[b] = cnt;
        }
        let mut acc = Aabb::empty();
        let mut cnt = 0;
        for b in 0..SAH_BINS - 1 {
            acc = acc.union(bin_bounds[b]);
            cnt += bin_counts[b];
            let rc = right_count[b + 1];
            if cnt == 0 || rc == 0 {
                continue;
            }
            let cost = TRAVERSAL_COST
                + INTERSECT_COST
                    * (acc.surface_area() * cnt as f64 + right_area[b + 1] * rc as f64)
                    / parent_area.max(f64::MIN_POSITIVE);
            if best.is_none_or(|(c, _, _)| cost < c) {
                let pos = lo + (b + 1) as f64 / scale;
                best = Some((cost, axis, pos));
            }
        }
    }

    match best {
        Some((cost, axis, pos)) if cost < leaf_cost || n > 4 * MAX_LEAF_SIZE => Some((axis, pos)),
        _ => None,
    }
}
