//! Virtual fields: plant replication, leaf orientation modes, the periodic
//! domain, and the traceable scene.
//!
//! Scenes are stored in a row-aligned local frame: local `+x` runs along the
//! row axis and local `+y` across the rows (90 degrees counterclockwise of
//! the row axis seen from above), so the periodic domain is axis-aligned for
//! any row direction. [`FieldFrame`] converts between local and world
//! (east/north/up) coordinates.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    transform, Bvh, LengthUnit, Mesh, Organ, PeriodicDomain, Triangle, Vec3, GROUND_PLANT_ID,
};
use crate::plantgen::{reorient, PlantModel};
use crate::rng::CounterRng;

pub const DEFAULT_GROUND_CELL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrientationMode {
    /// Leaf plane along the row.
    OnRowParallel,
    /// Leaf plane perpendicular to the row.
    OffRowParallel,
    /// Independent uniform leaf-plane axis per plant.
    Random { seed: u64 },
}

impl OrientationMode {
    pub fn label(&self) -> &'static str {
        match self {
            OrientationMode::OnRowParallel => "on_row",
            OrientationMode::OffRowParallel => "off_row",
            OrientationMode::Random { .. } => "random",
        }
    }
}

#[derive(Debug, Clone)]
pub enum PlantSource {
    Single(PlantModel),
    /// One model per position, indexed `row * plants_per_row + i`.
    PerPosition(Vec<PlantModel>),
}

#[derive(Debug, Clone)]
pub struct FieldLayout {
    pub rows: u32,
    pub plants_per_row: u32,
    /// Distance between rows, m.
    pub row_spacing: f64,
    /// Distance between plants within a row, m.
    pub plant_spacing: f64,
    /// Compass azimuth of the row axis, radians.
    pub row_azimuth: f64,
    pub orientation: OrientationMode,
    pub plant_source: PlantSource,
    /// Target edge length of ground cells, m.
    pub ground_cell: f64,
}

impl FieldLayout {
    pub fn new(plant: PlantModel) -> Self {
        Self {
            rows: 4,
            plants_per_row: 15,
            row_spacing: 0.762,
            plant_spacing: 0.1524,
            row_azimuth: 0.0,
            orientation: OrientationMode::OffRowParallel,
            plant_source: PlantSource::Single(plant),
            ground_cell: DEFAULT_GROUND_CELL,
        }
    }

    pub fn plants_per_m2(&self) -> f64 {
        1.0 / (self.row_spacing * self.plant_spacing)
    }

    pub fn plants_per_hectare(&self) -> f64 {
        self.plants_per_m2() * 1e4
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidLayout(m));
        if self.rows < 1 || self.plants_per_row < 1 {
            return bad("rows and plants_per_row must be at least 1".into());
        }
        if !(self.row_spacing > 0.0 && self.plant_spacing > 0.0)
            || !self.row_spacing.is_finite()
            || !self.plant_spacing.is_finite()
        {
            return bad("spacings must be positive and finite".into());
        }
        if !self.row_azimuth.is_finite() {
            return bad("row_azimuth must be finite".into());
        }
        if !(self.ground_cell > 0.0) {
            return bad("ground_cell must be positive".into());
        }
        if let PlantSource::PerPosition(list) = &self.plant_source {
            let n = (self.rows * self.plants_per_row) as usize;
            if list.len() != n {
                return bad(format!("per-position plant list has {} entries, expected {n}", list.len()));
            }
        }
        Ok(())
    }

    /// World compass azimuth of the leaf plane for the plant at `(i, row)`.
    pub fn target_azimuth(&self, i: u32, row: u32) -> f64 {
        match self.orientation {
            OrientationMode::OnRowParallel => self.row_azimuth,
            OrientationMode::OffRowParallel => self.row_azimuth + FRAC_PI_2,
            OrientationMode::Random { seed } => {
                let mut rng = CounterRng::from_key(&[seed, 0x0a21, i as u64, row as u64]);
                self.row_azimuth + PI * rng.uniform()
            }
        }
    }
}

/// Rotation between the row-aligned local frame and world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldFrame {
    /// Right-handed yaw taking world vectors to local ones.
    pub local_yaw: f64,
}

impl FieldFrame {
    pub const IDENTITY: FieldFrame = FieldFrame { local_yaw: 0.0 };

    pub fn for_row_azimuth(row_azimuth: f64) -> Self {
        // The row axis has math angle pi/2 - azimuth; rotate it onto +x.
        Self {
            local_yaw: row_azimuth - FRAC_PI_2,
        }
    }

    pub fn to_local(&self, v: Vec3) -> Vec3 {
        v.rotate_z(self.local_yaw)
    }

    pub fn to_world(&self, v: Vec3) -> Vec3 {
        v.rotate_z(-self.local_yaw)
    }
}

/// Layout parameters echoed into results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutEcho {
    pub rows: u32,
    pub plants_per_row: u32,
    pub row_spacing: f64,
    pub plant_spacing: f64,
    pub row_azimuth: f64,
    pub orientation: OrientationMode,
}

#[derive(Debug, Clone)]
pub struct PlacedPlant {
    pub plant_id: u32,
    /// Stem base in world coordinates.
    pub position: Vec3,
    /// World compass azimuth the plant was reoriented to.
    pub target_azimuth: f64,
}

/// A traceable scene: geometry in the local frame plus its BVH.
#[derive(Debug, Clone)]
pub struct SceneField {
    pub mesh: Mesh,
    pub bvh: Bvh,
    pub domain: Option<PeriodicDomain>,
    pub frame: FieldFrame,
    pub plants: Vec<PlacedPlant>,
    pub layout: Option<LayoutEcho>,
}

impl SceneField {
    /// Scene from an arbitrary mesh already in local coordinates. Primitive
    /// ids are reassigned to triangle indices.
    pub fn from_mesh(mut mesh: Mesh, domain: Option<PeriodicDomain>) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptyMesh);
        }
        mesh.renumber(0);
        let bvh = Bvh::build(&mesh.triangles)?;
        Ok(Self {
            mesh,
            bvh,
            domain,
            frame: FieldFrame::IDENTITY,
            plants: Vec::new(),
            layout: None,
        })
    }

    pub fn with_frame(mut self, frame: FieldFrame) -> Self {
        self.frame = frame;
        self
    }

    pub fn triangle(&self, primitive_id: u32) -> &Triangle {
        &self.mesh.triangles[primitive_id as usize]
    }

    /// Ground area represented by the scene, when periodic.
    pub fn ground_area(&self) -> Option<f64> {
        self.domain.map(|d| d.area())
    }

    pub fn canopy_top(&self) -> f64 {
        self.mesh
            .triangles
            .iter()
            .filter(|t| t.organ != Organ::Ground)
            .map(|t| t.v0.z.max(t.v1.z).max(t.v2.z))
            .fold(0.0, f64::max)
    }

    pub fn plant_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .mesh
            .triangles
            .iter()
            .filter(|t| t.organ != Organ::Ground)
            .map(|t| t.plant_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Mesh of one plant in world coordinates.
    pub fn plant_mesh_world(&self, plant_id: u32) -> Result<Mesh> {
        let tris: Vec<Triangle> = self
            .mesh
            .triangles
            .iter()
            .filter(|t| t.plant_id == plant_id && t.organ != Organ::Ground)
            .map(|t| t.map_vertices(|v| self.frame.to_world(v)))
            .collect();
        if tris.is_empty() {
            return Err(Error::UnknownPlant(plant_id));
        }
        Ok(Mesh::new(tris))
    }

    /// Whole scene in world coordinates, for export.
    pub fn world_mesh(&self) -> Mesh {
        self.mesh.map_vertices(|v| self.frame.to_world(v))
    }
}

/// Places every plant, applies the orientation mode, adds the ground, and
/// builds the BVH.
pub fn build_field(layout: &FieldLayout) -> Result<SceneField> {
    layout.validate()?;
    let frame = FieldFrame::for_row_azimuth(layout.row_azimuth);
    let x_extent = layout.plants_per_row as f64 * layout.plant_spacing;
    let y_extent = layout.rows as f64 * layout.row_spacing;
    let domain = PeriodicDomain::new(x_extent, y_extent, Vec3::ZERO)?;

    let mut mesh = Mesh::default();
    let mut plants = Vec::new();
    for row in 0..layout.rows {
        for i in 0..layout.plants_per_row {
            let plant_id = row * layout.plants_per_row + i;
            let model = match &layout.plant_source {
                PlantSource::Single(m) => m,
                PlantSource::PerPosition(list) => &list[plant_id as usize],
            };
            let target = layout.target_azimuth(i, row);
            let oriented = reorient(model, target)?;
            let local_pos = Vec3::new(
                (i as f64 + 0.5) * layout.plant_spacing,
                (row as f64 + 0.5) * layout.row_spacing,
                0.0,
            );
            let at_origin = transform(&oriented.mesh, 0.0, -oriented.base_anchor);
            let placed = transform(&at_origin, frame.local_yaw, local_pos).with_plant_id(plant_id);
            mesh.extend(&placed);
            plants.push(PlacedPlant {
                plant_id,
                position: frame.to_world(local_pos),
                target_azimuth: target,
            });
        }
    }
    add_ground(&mut mesh, &domain, layout.ground_cell);

    let mut scene = SceneField::from_mesh(mesh, Some(domain))?.with_frame(frame);
    scene.plants = plants;
    scene.layout = Some(LayoutEcho {
        rows: layout.rows,
        plants_per_row: layout.plants_per_row,
        row_spacing: layout.row_spacing,
        plant_spacing: layout.plant_spacing,
        row_azimuth: layout.row_azimuth,
        orientation: layout.orientation,
    });
    Ok(scene)
}

/// Tiles the base cell at `z = 0` with upward-facing ground triangles.
pub fn add_ground(mesh: &mut Mesh, domain: &PeriodicDomain, cell: f64) {
    let nx = (domain.x_extent / cell).ceil().max(1.0) as usize;
    let ny = (domain.y_extent / cell).ceil().max(1.0) as usize;
    let dx = domain.x_extent / nx as f64;
    let dy = domain.y_extent / ny as f64;
    let o = domain.origin;
    let p = |i: usize, j: usize| Vec3::new(o.x + i as f64 * dx, o.y + j as f64 * dy, 0.0);
    for j in 0..ny {
        for i in 0..nx {
            let ground = |a, b, c| {
                Triangle::new(a, b, c)
                    .with_organ(Organ::Ground)
                    .with_plant(GROUND_PLANT_ID)
            };
            mesh.push(ground(p(i, j), p(i + 1, j), p(i + 1, j + 1)));
            mesh.push(ground(p(i, j), p(i + 1, j + 1), p(i, j + 1)));
        }
    }
}

/// Converts a spacing to meters.
pub fn convert_spacing(value: f64, unit: LengthUnit) -> Result<f64> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidValue(format!("spacing must be positive, got {value}")));
    }
    Ok(value * unit.meters_per_unit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plantgen::{axis_difference, estimate_leaf_plane_azimuth, generate_maize, PlantParams};

    fn small_plant() -> PlantModel {
        generate_maize(&PlantParams {
            leaf_count: 4,
            segments_per_leaf: 4,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn conversions() {
        assert!((convert_spacing(30.0, LengthUnit::Inch).unwrap() - 0.762).abs() < 1e-12);
        assert!((convert_spacing(6.0, LengthUnit::Inch).unwrap() - 0.1524).abs() < 1e-12);
        assert_eq!(convert_spacing(1.0, LengthUnit::M).unwrap(), 1.0);
        assert!((convert_spacing(15.24, LengthUnit::Cm).unwrap() - 0.1524).abs() < 1e-12);
        assert!(convert_spacing(0.0, LengthUnit::M).is_err());
        assert!(convert_spacing(-3.0, LengthUnit::Inch).is_err());
    }

    #[test]
    fn baseline_density_is_near_field_value() {
        let layout = FieldLayout::new(small_plant());
        let per_ha = layout.plants_per_hectare();
        assert!((per_ha - 86_111.0).abs() < 50.0);
        assert!((per_ha - 84_000.0).abs() / 84_000.0 < 0.05);
    }

    #[test]
    fn off_row_single_plant_faces_east_west_for_north_rows() {
        let mut layout = FieldLayout::new(small_plant());
        layout.rows = 1;
        layout.plants_per_row = 1;
        layout.orientation = OrientationMode::OffRowParallel;
        let scene = build_field(&layout).unwrap();
        let az = estimate_leaf_plane_azimuth(&scene.plant_mesh_world(0).unwrap()).unwrap();
        assert!(axis_difference(az, FRAC_PI_2) < 1e-3);
    }

    #[test]
    fn random_mode_is_seeded() {
        let mut layout = FieldLayout::new(small_plant());
        layout.rows = 2;
        layout.plants_per_row = 3;
        layout.orientation = OrientationMode::Random { seed: 5 };
        let a = build_field(&layout).unwrap();
        let b = build_field(&layout).unwrap();
        assert_eq!(a.mesh.triangles, b.mesh.triangles);
        layout.orientation = OrientationMode::Random { seed: 6 };
        let c = build_field(&layout).unwrap();
        let ta: Vec<f64> = a.plants.iter().map(|p| p.target_azimuth).collect();
        let tc: Vec<f64> = c.plants.iter().map(|p| p.target_azimuth).collect();
        assert_ne!(ta, tc);
    }

    #[test]
    fn domain_matches_planted_grid_and_ids_map() {
        let mut layout = FieldLayout::new(small_plant());
        layout.rows = 2;
        layout.plants_per_row = 3;
        let scene = build_field(&layout).unwrap();
        let d = scene.domain.unwrap();
        assert!((d.x_extent - 3.0 * 0.1524).abs() < 1e-12);
        assert!((d.y_extent - 2.0 * 0.762).abs() < 1e-12);
        let ids: Vec<u32> = scene.plants.iter().map(|p| p.plant_id).collect();
        for t in &scene.mesh.triangles {
            assert!(t.plant_id == GROUND_PLANT_ID || ids.contains(&t.plant_id));
            assert_eq!(t.organ == Organ::Ground, t.plant_id == GROUND_PLANT_ID);
        }
        let ground: f64 = scene.mesh.organ_area(Organ::Ground);
        assert!((ground - d.area()).abs() < 1e-9);
    }

    #[test]
    fn invalid_layouts() {
        let mut layout = FieldLayout::new(small_plant());
        layout.rows = 0;
        assert!(build_field(&layout).is_err());
        let mut layout = FieldLayout::new(small_plant());
        layout.plant_spacing = -1.0;
        assert!(build_field(&layout).is_err());
        let mut layout = FieldLayout::new(small_plant());
        layout.plant_source = PlantSource::PerPosition(vec![small_plant()]);
        assert!(matches!(build_field(&layout), Err(Error::InvalidLayout(_))));
    }

    #[test]
    fn frame_round_trip() {
        let f = FieldFrame::for_row_azimuth(0.9);
        let v = Vec3::new(0.3, -1.2, 0.5);
        let back = f.to_world(f.to_local(v));
        assert!((back - v).length() < 1e-12);
        // Row axis maps to local +x.
        let row = f.to_local(Vec3::from_azimuth(0.9));
        assert!((row.x - 1.0).abs() < 1e-12 && row.y.abs() < 1e-12);
    }
}
