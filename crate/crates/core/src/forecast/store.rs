//! `DSNN` model files and prediction CSVs.
//!
//! Model layout (little-endian): magic, u16 version, u32 short hidden size,
//! u32 long hidden size, u32 horizon, f64 scale, then each parameter tensor in
//! [`DualNet::TENSOR_NAMES`] order as a u64 length followed by f64 values.

use std::io::Write;
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{DualNet, ForecastError, LstmCell, HORIZON};
use crate::HospitalId;

pub const MODEL_MAGIC: &[u8; 4] = b"DSNN";
pub const MODEL_VERSION: u16 = 1;

impl DualNet {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.write_u16::<LE>(MODEL_VERSION).unwrap();
        out.write_u32::<LE>(self.short.hidden() as u32).unwrap();
        out.write_u32::<LE>(self.long.hidden() as u32).unwrap();
        out.write_u32::<LE>(HORIZON as u32).unwrap();
        out.write_f64::<LE>(self.scale).unwrap();
        for t in self.tensors() {
            out.write_u64::<LE>(t.len() as u64).unwrap();
            for &v in t {
                out.write_f64::<LE>(v).unwrap();
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ForecastError> {
        if bytes.len() < 6 || &bytes[..4] != MODEL_MAGIC {
            return Err(ForecastError::BadMagic);
        }
        let mut input = &bytes[4..];
        let version = input.read_u16::<LE>()?;
        if version != MODEL_VERSION {
            return Err(ForecastError::VersionMismatch {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let truncated = |_| ForecastError::Corrupt("truncated model");
        let hs = input.read_u32::<LE>().map_err(truncated)? as usize;
        let hl = input.read_u32::<LE>().map_err(truncated)? as usize;
        let horizon = input.read_u32::<LE>().map_err(truncated)? as usize;
        if horizon != HORIZON || hs == 0 || hl == 0 || hs > 4096 || hl > 4096 {
            return Err(ForecastError::Corrupt("unsupported shape"));
        }
        let scale = input.read_f64::<LE>().map_err(truncated)?;
        let mut net = DualNet {
            short: LstmCell::zeros(hs),
            long: LstmCell::zeros(hl),
            fusion_w: vec![0.0; HORIZON * (hs + hl + HORIZON)],
            fusion_b: vec![0.0; HORIZON],
            scale,
        };
        for t in net.tensors_mut() {
            let n = input.read_u64::<LE>().map_err(truncated)? as usize;
            if n != t.len() {
                return Err(ForecastError::Corrupt("tensor length"));
            }
            for v in t.iter_mut() {
                *v = input.read_f64::<LE>().map_err(truncated)?;
            }
        }
        if !input.is_empty() {
            return Err(ForecastError::Corrupt("trailing bytes"));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<(), ForecastError> {
        let tmp = path.with_extension("tmp");
        std::fs::File::create(&tmp)?.write_all(&self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ForecastError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// One predicted hour; `horizon_hour` runs 1..=24.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub hospital_id: HospitalId,
    pub issued_ts: i64,
    pub horizon_hour: u32,
    pub value: f64,
}

pub fn write_predictions_csv(path: &Path, rows: &[PredictionRow]) -> Result<(), ForecastError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictionRow>, ForecastError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(ForecastError::from)).collect()
}
