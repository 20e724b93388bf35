use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PLY: {0}")]
    PlyFormat(String),

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("cannot build a BVH over zero primitives")]
    EmptyBvh,

    #[error("invalid plant parameters: {0}")]
    InvalidPlantParams(String),

    #[error("mesh has no leaf triangles")]
    NoLeafTriangles,

    #[error("leaf-plane azimuth is ambiguous (eigenvalue ratio {ratio:.4} < 1.05)")]
    AmbiguousAzimuth { ratio: f64 },

    #[error("invalid field layout: {0}")]
    InvalidLayout(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid radiation config: {0}")]
    InvalidRadiationConfig(String),

    #[error("sun is below the horizon")]
    SunBelowHorizon,

    #[error("unknown plant id {0}")]
    UnknownPlant(u32),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
