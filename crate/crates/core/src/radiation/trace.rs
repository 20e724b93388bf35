use rayon::prelude::*;

use super::sampling::{
    cosine_direction, point_on, sample_rng, stratified_2d, PASS_DIFFUSE, PASS_DIRECT, PASS_SCATTER,
};
use super::{FluxMap, RadiationConfig, SURFACE_OFFSET};
use crate::error::{Error, Result};
use crate::field::SceneField;
use crate::geometry::{intersect, Hit, Organ, Ray, Vec3};
use crate::solar::SolarState;

const FRONT: u64 = 0;
const BACK: u64 = 1;

pub(crate) fn cast(scene: &SceneField, origin: Vec3, dir: Vec3, cfg: &RadiationConfig) -> Option<Hit> {
    intersect(&scene.bvh, &Ray::new(origin, dir), scene.domain.as_ref(), cfg.max_wraps)
}

/// Direct-beam flux on every primitive. Leaves are opaque in this pass.
pub fn compute_direct(scene: &SceneField, sun: &SolarState, cfg: &RadiationConfig) -> Result<FluxMap> {
    if !sun.sun_up {
        return Err(Error::SunBelowHorizon);
    }
    let s = scene.frame.to_local(sun.direction());
    let n_samples = cfg.direct_samples_per_primitive;
    let per_prim: Vec<(f64, bool)> = (0..scene.mesh.len())
        .into_par_iter()
        .map(|i| {
            let tri = &scene.mesh.triangles[i];
            let n = tri.normal();
            let c = n.dot(s);
            if c == 0.0 || sun.direct_normal_par <= 0.0 {
                return (0.0, true);
            }
            let side = if c > 0.0 { n } else { -n };
            let mut visible = 0u32;
            for j in 0..n_samples {
                let mut rng = sample_rng(cfg.rng_seed, PASS_DIRECT, i as u64, FRONT, j as u64);
                let (u1, u2) = stratified_2d(j, n_samples, &mut rng);
                let p = point_on(tri, u1, u2) + side * SURFACE_OFFSET;
                if cast(scene, p, s, cfg).is_none() {
                    visible += 1;
                }
            }
            (sun.direct_normal_par * c.abs() * visible as f64 / n_samples as f64, c > 0.0)
        })
        .collect();

    let mut out = FluxMap::zeros(scene.mesh.len());
    for (i, &(flux, front)) in per_prim.iter().enumerate() {
        out.incident_direct[i] = flux;
        if front {
            out.pending_front[i] = flux;
        } else {
            out.pending_back[i] = flux;
        }
        out.first_pass += flux * scene.mesh.triangles[i].area();
    }
    out.finish_absorption(scene, cfg);
    Ok(out)
}

/// Diffuse sky flux on both faces of every primitive, for an isotropic sky.
pub fn compute_diffuse(scene: &SceneField, sun: &SolarState, cfg: &RadiationConfig) -> Result<FluxMap> {
    let dhi = sun.diffuse_horizontal_par;
    if !(dhi >= 0.0) {
        return Err(Error::InvalidValue(format!("diffuse flux must be non-negative, got {dhi}")));
    }
    let mut out = FluxMap::zeros(scene.mesh.len());
    if dhi == 0.0 || !sun.sun_up {
        return Ok(out);
    }
    let n_samples = cfg.diffuse_samples_per_primitive;
    let per_prim: Vec<(f64, f64)> = (0..scene.mesh.len())
        .into_par_iter()
        .map(|i| {
            let tri = &scene.mesh.triangles[i];
            let n = tri.normal();
            let face = |normal: Vec3, tag: u64| {
                let mut sky = 0u32;
                for j in 0..n_samples {
                    let mut rng = sample_rng(cfg.rng_seed, PASS_DIFFUSE, i as u64, tag, j as u64);
                    let p = point_on(tri, rng.uniform(), rng.uniform()) + normal * SURFACE_OFFSET;
                    let (u1, u2) = stratified_2d(j, n_samples, &mut rng);
                    let d = cosine_direction(normal, u1, u2);
                    if d.z > 0.0 && cast(scene, p, d, cfg).is_none() {
                        sky += 1;
                    }
                }
                dhi * sky as f64 / n_samples as f64
            };
            let front = face(n, FRONT);
            // Ground is lit from above only.
            let back = if tri.organ == Organ::Ground { 0.0 } else { face(-n, BACK) };
            (front, back)
        })
        .collect();

    for (i, &(f, b)) in per_prim.iter().enumerate() {
        out.incident_diffuse[i] = f + b;
        out.pending_front[i] = f;
        out.pending_back[i] = b;
        out.first_pass += (f + b) * scene.mesh.triangles[i].area();
    }
    out.finish_absorption(scene, cfg);
    Ok(out)
}

/// Power landing on a face: receiver primitive, front face flag, power.
type Deposit = (u32, bool, f64);

/// Multiple scattering starting from the first-pass fluxes in `first`.
pub fn run_scattering(scene: &SceneField, first: &FluxMap, cfg: &RadiationConfig) -> FluxMap {
    let n = scene.mesh.len();
    let mut out = first.clone();
    out.incident_scattered = vec![0.0; n];
    out.exitance_front = vec![0.0; n];
    out.exitance_back = vec![0.0; n];
    out.escaped = 0.0;
    out.residual = 0.0;

    let optics: Vec<(f64, f64)> = scene.mesh.triangles.iter().map(|t| cfg.optical(t.organ)).collect();
    let areas: Vec<f64> = scene.mesh.triangles.iter().map(|t| t.area()).collect();
    let mut pend_f = first.pending_front.clone();
    let mut pend_b = first.pending_back.clone();
    let n_samples = cfg.scatter_samples_per_primitive;

    for k in 0..cfg.scattering_iterations {
        let emit: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let (r, t) = optics[i];
                (r * pend_f[i] + t * pend_b[i], r * pend_b[i] + t * pend_f[i])
            })
            .collect();
        if emit.iter().all(|&(f, b)| f == 0.0 && b == 0.0) {
            pend_f.iter_mut().for_each(|x| *x = 0.0);
            pend_b.iter_mut().for_each(|x| *x = 0.0);
            break;
        }
        let pass = PASS_SCATTER + k as u64;
        let shots: Vec<(Vec<Deposit>, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let tri = &scene.mesh.triangles[i];
                let normal = tri.normal();
                let mut deposits = Vec::new();
                let mut escaped = 0.0;
                for (m, sign, tag) in [(emit[i].0, 1.0, FRONT), (emit[i].1, -1.0, BACK)] {
                    if m <= 0.0 {
                        continue;
                    }
                    let face_n = normal * sign;
                    let power = m * areas[i] / n_samples as f64;
                    for j in 0..n_samples {
                        let mut rng = sample_rng(cfg.rng_seed, pass, i as u64, tag, j as u64);
                        let p = point_on(tri, rng.uniform(), rng.uniform()) + face_n * SURFACE_OFFSET;
                        let (u1, u2) = stratified_2d(j, n_samples, &mut rng);
                        let d = cosine_direction(face_n, u1, u2);
                        match cast(scene, p, d, cfg) {
                            Some(h) => deposits.push((h.primitive_id, h.entering_front_face, power)),
                            None => escaped += power,
                        }
                    }
                }
                (deposits, escaped)
            })
            .collect();

        for i in 0..n {
            out.exitance_front[i] += emit[i].0;
            out.exitance_back[i] += emit[i].1;
        }
        pend_f.iter_mut().for_each(|x| *x = 0.0);
        pend_b.iter_mut().for_each(|x| *x = 0.0);
        for (deposits, escaped) in &shots {
            out.escaped += escaped;
            for &(r, front, power) in deposits {
                let r = r as usize;
                let flux = power / areas[r];
                if front {
                    pend_f[r] += flux;
                } else {
                    pend_b[r] += flux;
                }
            }
        }
        for i in 0..n {
            out.incident_scattered[i] += pend_f[i] + pend_b[i];
        }
    }

    out.residual = (0..n)
        .map(|i| (optics[i].0 + optics[i].1) * (pend_f[i] + pend_b[i]) * areas[i])
        .sum();
    out.pending_front = pend_f;
    out.pending_back = pend_b;
    out.finish_absorption(scene, cfg);
    out
}
