//! Address resolution: coordinates → 2 m grid cells → hospital ids.
//!
//! Coordinates are projected with a local equirectangular projection around a
//! city reference point, then floor-divided by the cell length. Hospital
//! polygons are rasterized by cell centre and stored in a [`GridIndex`]: a
//! cuckoo filter in front of an exact open-addressed payload table. Every
//! filter hit is confirmed against the payload, so resolution never returns a
//! false positive.

mod cuckoo;
mod polygon;
mod table;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

pub use cuckoo::{
    CuckooFilter, FilterError, DEFAULT_FINGERPRINT_BITS, DEFAULT_MAX_KICKS, MAX_LOAD_FACTOR,
    SLOTS_PER_BUCKET,
};
pub use polygon::PlanarPolygon;
pub use table::CellTable;

use crate::{HospitalId, LbsLog};

/// Mean Earth radius used by the projection and by haversine distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

const INDEX_MAGIC: &[u8; 4] = b"DSGI";
pub const INDEX_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("invalid hospital record {id}: {reason}")]
    InvalidHospital { id: HospitalId, reason: String },
    #[error("hospitals {first} and {second} both claim cell ({col}, {row})")]
    Overlap {
        first: HospitalId,
        second: HospitalId,
        col: i32,
        row: i32,
    },
    #[error("filter capacity exhausted: {0}")]
    Capacity(#[from] FilterError),
    #[error("not an index snapshot (bad magic)")]
    BadMagic,
    #[error("index snapshot version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("corrupt index snapshot: {0}")]
    Corrupt(&'static str),
    #[error("invalid grid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Grid geometry: cell edge length and the projection origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub cell_length_m: f64,
    pub ref_lat: f64,
    pub ref_lng: f64,
}

impl GridConfig {
    pub fn new(ref_lat: f64, ref_lng: f64) -> Self {
        GridConfig {
            cell_length_m: 2.0,
            ref_lat,
            ref_lng,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.cell_length_m > 0.0 && self.cell_length_m.is_finite()) {
            return Err(GridError::Config(format!(
                "cell length must be positive, got {}",
                self.cell_length_m
            )));
        }
        if !(self.ref_lat.abs() < 85.0) || !(self.ref_lng.abs() <= 180.0) {
            return Err(GridError::Config(format!(
                "reference point ({}, {}) out of range",
                self.ref_lat, self.ref_lng
            )));
        }
        Ok(())
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        // Central Beijing.
        GridConfig::new(39.9042, 116.4074)
    }
}

/// Equirectangular projection to meters east (`x`) and north (`y`) of the
/// reference point.
#[inline]
pub fn project(lat: f64, lng: f64, cfg: &GridConfig) -> (f64, f64) {
    let x = EARTH_RADIUS_M * (lng - cfg.ref_lng).to_radians() * cfg.ref_lat.to_radians().cos();
    let y = EARTH_RADIUS_M * (lat - cfg.ref_lat).to_radians();
    (x, y)
}

/// Inverse of [`project`].
#[inline]
pub fn unproject(x: f64, y: f64, cfg: &GridConfig) -> (f64, f64) {
    let lat = cfg.ref_lat + (y / EARTH_RADIUS_M).to_degrees();
    let lng = cfg.ref_lng + (x / (EARTH_RADIUS_M * cfg.ref_lat.to_radians().cos())).to_degrees();
    (lat, lng)
}

/// Cell coordinates packed into one word: column in the high half, row in
/// the low half, both as two's-complement `i32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u64);

impl CellId {
    pub fn new(col: i32, row: i32) -> Self {
        CellId(((col as u32 as u64) << 32) | row as u32 as u64)
    }

    pub fn col(self) -> i32 {
        (self.0 >> 32) as u32 as i32
    }

    pub fn row(self) -> i32 {
        self.0 as u32 as i32
    }

    /// Projected coordinates of the cell centre.
    pub fn center(self, cfg: &GridConfig) -> (f64, f64) {
        let a = cfg.cell_length_m;
        ((self.col() as f64 + 0.5) * a, (self.row() as f64 + 0.5) * a)
    }
}

#[inline]
pub fn cell_of_xy(x: f64, y: f64, cfg: &GridConfig) -> CellId {
    let a = cfg.cell_length_m;
    CellId::new((x / a).floor() as i32, (y / a).floor() as i32)
}

#[inline]
pub fn cell_of(lat: f64, lng: f64, cfg: &GridConfig) -> CellId {
    let (x, y) = project(lat, lng, cfg);
    cell_of_xy(x, y, cfg)
}

/// Projects a `[lat, lng]` vertex list.
pub fn project_polygon(polygon: &[[f64; 2]], cfg: &GridConfig) -> PlanarPolygon {
    PlanarPolygon::new(polygon.iter().map(|p| project(p[0], p[1], cfg)).collect())
}

/// Cells whose centre lies inside a projected polygon, in ascending id order.
pub fn rasterize_planar(polygon: &PlanarPolygon, cfg: &GridConfig) -> Result<Vec<CellId>, GridError> {
    if polygon.vertices().len() < 3 {
        return Err(GridError::DegeneratePolygon(format!(
            "{} vertices",
            polygon.vertices().len()
        )));
    }
    if polygon.area() <= 0.0 {
        return Err(GridError::DegeneratePolygon("zero area".into()));
    }
    let a = cfg.cell_length_m;
    let ((x0, y0), (x1, y1)) = polygon.bbox();
    let (c0, c1) = ((x0 / a).floor() as i64 - 1, (x1 / a).floor() as i64 + 1);
    let (r0, r1) = ((y0 / a).floor() as i64 - 1, (y1 / a).floor() as i64 + 1);
    let mut cells = BTreeSet::new();
    for col in c0..=c1 {
        for row in r0..=r1 {
            let id = CellId::new(col as i32, row as i32);
            let (cx, cy) = id.center(cfg);
            if polygon.contains(cx, cy) {
                cells.insert(id);
            }
        }
    }
    Ok(cells.into_iter().collect())
}

/// Cells whose centre lies inside a `[lat, lng]` polygon.
pub fn rasterize(polygon: &[[f64; 2]], cfg: &GridConfig) -> Result<Vec<CellId>, GridError> {
    rasterize_planar(&project_polygon(polygon, cfg), cfg)
}

/// Catalog entry for one hospital.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HospitalRecord {
    pub hospital_id: HospitalId,
    pub name: String,
    pub official_class: u8,
    /// Vertices as `[lat, lng]` degrees.
    pub polygon: Vec<[f64; 2]>,
    pub area_m2: f64,
    pub n_doctors: u32,
}

impl HospitalRecord {
    pub fn planar(&self, cfg: &GridConfig) -> PlanarPolygon {
        project_polygon(&self.polygon, cfg)
    }

    /// Centroid as `(lat, lng)`.
    pub fn centroid(&self, cfg: &GridConfig) -> (f64, f64) {
        let (x, y) = self.planar(cfg).centroid();
        unproject(x, y, cfg)
    }

    pub fn validate(&self, cfg: &GridConfig) -> Result<(), GridError> {
        let bad = |reason: String| GridError::InvalidHospital {
            id: self.hospital_id,
            reason,
        };
        if self.hospital_id.0 == u32::MAX {
            return Err(bad("id u32::MAX is reserved".into()));
        }
        if !(1..=9).contains(&self.official_class) {
            return Err(bad(format!("official class {} not in 1..9", self.official_class)));
        }
        if self.n_doctors == 0 {
            return Err(bad("n_doctors must be positive".into()));
        }
        let planar = self.planar(cfg);
        if planar.vertices().len() < 3 {
            return Err(bad("polygon needs at least 3 vertices".into()));
        }
        if !planar.is_simple() {
            return Err(bad("polygon self-intersects".into()));
        }
        let area = planar.area();
        if !(self.area_m2 > 0.0) || !(area > 0.0) {
            return Err(bad("area must be positive".into()));
        }
        if ((area - self.area_m2) / area).abs() > 0.05 {
            return Err(bad(format!(
                "declared area {:.1} m² differs from polygon area {:.1} m² by more than 5%",
                self.area_m2, area
            )));
        }
        Ok(())
    }
}

pub fn read_catalog(path: &Path) -> Result<Vec<HospitalRecord>, GridError> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

pub fn write_catalog(path: &Path, hospitals: &[HospitalRecord]) -> Result<(), GridError> {
    fs::write(path, serde_json::to_vec_pretty(hospitals)?)?;
    Ok(())
}

/// Filter parameters for [`GridIndex::build`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexOptions {
    pub fingerprint_bits: u8,
    pub max_kicks: u32,
    pub seed: u64,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions {
            fingerprint_bits: DEFAULT_FINGERPRINT_BITS,
            max_kicks: DEFAULT_MAX_KICKS,
            seed: 0x4453_4749,
        }
    }
}

/// Immutable cell → hospital index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridIndex {
    cfg: GridConfig,
    filter: CuckooFilter,
    payload: CellTable,
}

impl GridIndex {
    /// Rasterizes every hospital and inserts its cells.
    pub fn build(
        hospitals: &[HospitalRecord],
        cfg: GridConfig,
        opts: IndexOptions,
    ) -> Result<Self, GridError> {
        cfg.validate()?;
        let mut per_hospital = Vec::with_capacity(hospitals.len());
        for h in hospitals {
            h.validate(&cfg)?;
            per_hospital.push((h.hospital_id, rasterize(&h.polygon, &cfg)?));
        }
        let total: usize = per_hospital.iter().map(|(_, c)| c.len()).sum();
        GridIndex::from_cells(&per_hospital, cfg, opts, total)
    }

    /// Builds from precomputed cell sets (already validated geometry).
    pub fn from_cells(
        per_hospital: &[(HospitalId, Vec<CellId>)],
        cfg: GridConfig,
        opts: IndexOptions,
        total: usize,
    ) -> Result<Self, GridError> {
        let mut filter =
            CuckooFilter::with_capacity(total, opts.fingerprint_bits, opts.max_kicks, opts.seed)?;
        let mut payload = CellTable::with_capacity(total);
        for (id, cells) in per_hospital {
            for &cell in cells {
                if let Some(prev) = payload.insert(cell.0, id.0) {
                    return Err(GridError::Overlap {
                        first: HospitalId(prev),
                        second: *id,
                        col: cell.col(),
                        row: cell.row(),
                    });
                }
                filter.insert(cell.0)?;
            }
        }
        Ok(GridIndex {
            cfg,
            filter,
            payload,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.cfg
    }

    pub fn filter(&self) -> &CuckooFilter {
        &self.filter
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    /// Raw filter answer, without payload confirmation.
    pub fn filter_admits(&self, cell: CellId) -> bool {
        self.filter.contains(cell.0)
    }

    #[inline]
    pub fn lookup(&self, cell: CellId) -> Option<HospitalId> {
        if !self.filter.contains(cell.0) {
            return None;
        }
        self.payload.get(cell.0).map(HospitalId)
    }

    #[inline]
    pub fn resolve_point(&self, lat: f64, lng: f64) -> Option<HospitalId> {
        self.lookup(cell_of(lat, lng, &self.cfg))
    }

    #[inline]
    pub fn resolve(&self, log: &LbsLog) -> Option<HospitalId> {
        self.resolve_point(log.lat, log.lng)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        out.write_u16::<LittleEndian>(INDEX_VERSION).unwrap();
        for v in [self.cfg.cell_length_m, self.cfg.ref_lat, self.cfg.ref_lng] {
            out.write_f64::<LittleEndian>(v).unwrap();
        }
        self.filter.write_blob(&mut out);
        self.payload.write_blob(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GridError> {
        if bytes.len() < 6 || &bytes[..4] != INDEX_MAGIC {
            return Err(GridError::BadMagic);
        }
        let mut input = &bytes[4..];
        let version = input.read_u16::<LittleEndian>()?;
        if version != INDEX_VERSION {
            return Err(GridError::VersionMismatch {
                found: version,
                expected: INDEX_VERSION,
            });
        }
        let cfg = GridConfig {
            cell_length_m: input.read_f64::<LittleEndian>()?,
            ref_lat: input.read_f64::<LittleEndian>()?,
            ref_lng: input.read_f64::<LittleEndian>()?,
        };
        cfg.validate()?;
        let filter = CuckooFilter::read_blob(&mut input)?;
        let payload = CellTable::read_blob(&mut input).map_err(GridError::Corrupt)?;
        if filter.len() != payload.len() {
            return Err(GridError::Corrupt("filter and payload sizes differ"));
        }
        if !input.is_empty() {
            return Err(GridError::Corrupt("trailing bytes"));
        }
        Ok(GridIndex {
            cfg,
            filter,
            payload,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), GridError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        GridIndex::from_bytes(&fs::read(path)?)
    }
}
