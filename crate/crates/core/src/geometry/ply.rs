//! PLY reading and writing.
//!
//! Reads ASCII and binary little-endian files with a `vertex` element
//! (`x`, `y`, `z`) and a `face` element carrying a vertex index list.
//! Polygons are fan-triangulated. An optional integer `organ` property on
//! faces or vertices (0 leaf, 1 stem, 2 ground) and an optional face
//! `plant_id` are carried onto the triangles; unlabeled faces are leaves.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Mesh, Organ, Triangle, Vec3};
use crate::error::{Error, Result};

/// Length unit of coordinates stored in a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    M,
    Cm,
    Mm,
    Inch,
}

impl LengthUnit {
    pub fn meters_per_unit(self) -> f64 {
        match self {
            LengthUnit::M => 1.0,
            LengthUnit::Cm => 0.01,
            LengthUnit::Mm => 0.001,
            LengthUnit::Inch => 0.0254,
        }
    }
}

impl FromStr for LengthUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m" | "meter" | "meters" => Ok(LengthUnit::M),
            "cm" => Ok(LengthUnit::Cm),
            "mm" => Ok(LengthUnit::Mm),
            "in" | "inch" | "inches" => Ok(LengthUnit::Inch),
            other => Err(Error::InvalidValue(format!("unknown length unit `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(Error::PlyFormat(format!("unknown scalar type `{other}`"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum PropKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut next_line = || -> Result<String> {
        let rest = &bytes[pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::PlyFormat("unterminated header".into()))?;
        pos += end + 1;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::PlyFormat("header is not UTF-8".into()))?;
        Ok(line.trim_end_matches('\r').trim().to_string())
    };

    if next_line()? != "ply" {
        return Err(Error::PlyFormat("missing `ply` magic".into()));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line()?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            None | Some("comment") | Some("obj_info") => continue,
            Some("format") => {
                encoding = Some(match tok.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLittleEndian,
                    Some(other) => {
                        return Err(Error::PlyFormat(format!("unsupported format `{other}`")))
                    }
                    None => return Err(Error::PlyFormat("format line without encoding".into())),
                });
            }
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| Error::PlyFormat("element without name".into()))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::PlyFormat(format!("bad count for element `{name}`")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::PlyFormat("property before any element".into()))?;
                let t = tok
                    .next()
                    .ok_or_else(|| Error::PlyFormat("property without type".into()))?;
                let kind = if t == "list" {
                    let count = Scalar::parse(tok.next().unwrap_or(""))?;
                    let item = Scalar::parse(tok.next().unwrap_or(""))?;
                    PropKind::List { count, item }
                } else {
                    PropKind::Scalar(Scalar::parse(t)?)
                };
                let name = tok
                    .next()
                    .ok_or_else(|| Error::PlyFormat("property without name".into()))?;
                el.props.push(Property {
                    name: name.to_string(),
                    kind,
                });
            }
            Some("end_header") => break,
            Some(other) => return Err(Error::PlyFormat(format!("unexpected header line `{other}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::PlyFormat("missing format line".into()))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: pos,
    })
}

/// One decoded element instance: scalar values and list values by property.
#[derive(Default)]
struct Record {
    scalars: Vec<f64>,
    lists: Vec<Vec<f64>>,
}

trait RecordSource {
    fn read(&mut self, el: &Element) -> Result<Record>;
}

struct AsciiSource<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl AsciiSource<'_> {
    fn next_num(&mut self) -> Result<f64> {
        let t = self
            .tokens
            .next()
            .ok_or_else(|| Error::PlyFormat("unexpected end of ASCII body".into()))?;
        t.parse()
            .map_err(|_| Error::PlyFormat(format!("bad number `{t}`")))
    }
}

impl RecordSource for AsciiSource<'_> {
    fn read(&mut self, el: &Element) -> Result<Record> {
        let mut rec = Record::default();
        for p in &el.props {
            match p.kind {
                PropKind::Scalar(_) => rec.scalars.push(self.next_num()?),
                PropKind::List { .. } => {
                    let n = self.next_num()?;
                    if n < 0.0 || n.fract() != 0.0 {
                        return Err(Error::PlyFormat(format!("bad list length {n}")));
                    }
                    let items = (0..n as usize)
                        .map(|_| self.next_num())
                        .collect::<Result<Vec<_>>>()?;
                    rec.lists.push(items);
                }
            }
        }
        Ok(rec)
    }
}

struct BinarySource<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BinarySource<'_> {
    fn take(&mut self, s: Scalar) -> Result<f64> {
        let n = s.size();
        if self.pos + n > self.bytes.len() {
            return Err(Error::PlyFormat("unexpected end of binary body".into()));
        }
        let v = s.read_le(&self.bytes[self.pos..self.pos + n]);
        self.pos += n;
        Ok(v)
    }
}

impl RecordSource for BinarySource<'_> {
    fn read(&mut self, el: &Element) -> Result<Record> {
        let mut rec = Record::default();
        for p in &el.props {
            match p.kind {
                PropKind::Scalar(s) => rec.scalars.push(self.take(s)?),
                PropKind::List { count, item } => {
                    let n = self.take(count)?;
                    if n < 0.0 {
                        return Err(Error::PlyFormat(format!("bad list length {n}")));
                    }
                    let items = (0..n as usize)
                        .map(|_| self.take(item))
                        .collect::<Result<Vec<_>>>()?;
                    rec.lists.push(items);
                }
            }
        }
        Ok(rec)
    }
}

fn scalar_index(el: &Element, name: &str) -> Option<usize> {
    el.props
        .iter()
        .filter(|p| matches!(p.kind, PropKind::Scalar(_)))
        .position(|p| p.name == name)
}

fn organ_from(code: f64) -> Result<Organ> {
    Organ::from_code(code as i64).ok_or_else(|| Error::PlyFormat(format!("unknown organ label {code}")))
}

/// Parses PLY bytes into a mesh, scaling coordinates by `meters_per_unit`.
pub fn parse_ply(bytes: &[u8], unit: LengthUnit) -> Result<Mesh> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];
    let ascii_text;
    let mut source: Box<dyn RecordSource> = match header.encoding {
        PlyEncoding::Ascii => {
            ascii_text = std::str::from_utf8(body)
                .map_err(|_| Error::PlyFormat("ASCII body is not UTF-8".into()))?;
            Box::new(AsciiSource {
                tokens: ascii_text.split_ascii_whitespace(),
            })
        }
        PlyEncoding::BinaryLittleEndian => Box::new(BinarySource { bytes: body, pos: 0 }),
    };

    let scale = unit.meters_per_unit();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut vertex_organs: Vec<Option<Organ>> = Vec::new();
    let mut triangles = Vec::new();
    let mut saw_vertex = false;
    let mut saw_face = false;

    for el in &header.elements {
        match el.name.as_str() {
            "vertex" => {
                saw_vertex = true;
                let (ix, iy, iz) = match (
                    scalar_index(el, "x"),
                    scalar_index(el, "y"),
                    scalar_index(el, "z"),
                ) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return Err(Error::PlyFormat("vertex element lacks x/y/z".into())),
                };
                let iorg = scalar_index(el, "organ");
                vertices.reserve(el.count);
                for _ in 0..el.count {
                    let r = source.read(el)?;
                    vertices.push(Vec3::new(r.scalars[ix], r.scalars[iy], r.scalars[iz]) * scale);
                    vertex_organs.push(match iorg {
                        Some(i) => Some(organ_from(r.scalars[i])?),
                        None => None,
                    });
                }
            }
            "face" => {
                saw_face = true;
                if !saw_vertex {
                    return Err(Error::PlyFormat("face element precedes vertex element".into()));
                }
                let list_pos = el
                    .props
                    .iter()
                    .filter(|p| matches!(p.kind, PropKind::List { .. }))
                    .position(|p| p.name == "vertex_indices" || p.name == "vertex_index")
                    .ok_or_else(|| Error::PlyFormat("face element lacks vertex_indices".into()))?;
                let iorg = scalar_index(el, "organ");
                let iplant = scalar_index(el, "plant_id");
                for face_no in 0..el.count {
                    let r = source.read(el)?;
                    let idx = &r.lists[list_pos];
                    if idx.len() < 3 {
                        return Err(Error::PlyFormat(format!(
                            "face {face_no} has {} vertices; cannot triangulate",
                            idx.len()
                        )));
                    }
                    let mut corners = Vec::with_capacity(idx.len());
                    for &i in idx {
                        if i < 0.0 || i as usize >= vertices.len() {
                            return Err(Error::PlyFormat(format!(
                                "face {face_no} references vertex {i} out of range"
                            )));
                        }
                        corners.push(i as usize);
                    }
                    let organ = match iorg {
                        Some(i) => organ_from(r.scalars[i])?,
                        None => vertex_organs[corners[0]].unwrap_or(Organ::Leaf),
                    };
                    let plant_id = iplant.map(|i| r.scalars[i] as u32).unwrap_or(0);
                    for k in 1..corners.len() - 1 {
                        let t = Triangle::new(
                            vertices[corners[0]],
                            vertices[corners[k]],
                            vertices[corners[k + 1]],
                        )
                        .with_organ(organ)
                        .with_plant(plant_id);
                        if t.is_degenerate() {
                            log::debug!("skipping degenerate triangle in face {face_no}");
                            continue;
                        }
                        triangles.push(t);
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    source.read(el)?;
                }
            }
        }
    }

    if !saw_vertex || !saw_face {
        return Err(Error::PlyFormat("file needs both vertex and face elements".into()));
    }
    if triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut mesh = Mesh::new(triangles);
    mesh.renumber(0);
    Ok(mesh)
}

/// Loads a PLY file whose coordinates are in meters.
pub fn load_ply(path: impl AsRef<Path>) -> Result<Mesh> {
    load_ply_with_unit(path, LengthUnit::M)
}

pub fn load_ply_with_unit(path: impl AsRef<Path>, unit: LengthUnit) -> Result<Mesh> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes, unit)
}

/// Serializes a mesh. Shared vertices are merged by exact coordinate
/// equality; faces carry `organ` and `plant_id` properties.
pub fn encode_ply(mesh: &Mesh, encoding: PlyEncoding) -> Vec<u8> {
    let mut index: HashMap<[u64; 3], u32> = HashMap::new();
    let mut verts: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::with_capacity(mesh.len());
    for t in &mesh.triangles {
        let mut f = [0u32; 3];
        for (k, v) in [t.v0, t.v1, t.v2].into_iter().enumerate() {
            let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
            f[k] = *index.entry(key).or_insert_with(|| {
                verts.push(v);
                (verts.len() - 1) as u32
            });
        }
        faces.push(f);
    }

    let mut out = Vec::new();
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    let _ = write!(
        out,
        "ply\nformat {format} 1.0\ncomment units meters\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar int vertex_indices\n\
         property uchar organ\nproperty uint plant_id\nend_header\n",
        verts.len(),
        faces.len()
    );
    match encoding {
        PlyEncoding::Ascii => {
            for v in &verts {
                let _ = writeln!(out, "{:?} {:?} {:?}", v.x, v.y, v.z);
            }
            for (f, t) in faces.iter().zip(&mesh.triangles) {
                let _ = writeln!(
                    out,
                    "3 {} {} {} {} {}",
                    f[0],
                    f[1],
                    f[2],
                    t.organ.code(),
                    t.plant_id
                );
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for v in &verts {
                out.extend_from_slice(&v.x.to_le_bytes());
                out.extend_from_slice(&v.y.to_le_bytes());
                out.extend_from_slice(&v.z.to_le_bytes());
            }
            for (f, t) in faces.iter().zip(&mesh.triangles) {
                out.push(3);
                for i in f {
                    out.extend_from_slice(&(*i as i32).to_le_bytes());
                }
                out.push(t.organ.code());
                out.extend_from_slice(&t.plant_id.to_le_bytes());
            }
        }
    }
    out
}

pub fn save_ply(mesh: &Mesh, path: impl AsRef<Path>, encoding: PlyEncoding) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ply(mesh, encoding)).map_err(|e| Error::io(path, e))
}
