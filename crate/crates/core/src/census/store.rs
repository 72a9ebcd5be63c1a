//! `DSCL` state files and density CSVs.
//!
//! Layout (little-endian): magic, u16 version, u32 hospital id, config,
//! i64 last tick, i64 frontier, then the items, blacklist and sightings, each
//! as a u64 count followed by uid-ordered records.

use std::io::Write;
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{
    BlacklistEntry, BlacklistReason, CensusConfig, CensusError, CombineMode, CountingItem, DensitySnapshot,
    HospitalState,
};
use crate::{HospitalId, Uid};

pub const STATE_MAGIC: &[u8; 4] = b"DSCL";
pub const STATE_VERSION: u16 = 1;

fn write_days(out: &mut Vec<u8>, days: &[i64]) {
    out.write_u32::<LE>(days.len() as u32).unwrap();
    for &d in days {
        out.write_i64::<LE>(d).unwrap();
    }
}

fn read_days(input: &mut &[u8]) -> std::io::Result<Vec<i64>> {
    let n = input.read_u32::<LE>()? as usize;
    if n > input.len() / 8 {
        return Err(std::io::ErrorKind::UnexpectedEof.into());
    }
    (0..n).map(|_| input.read_i64::<LE>()).collect()
}

impl HospitalState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(STATE_MAGIC);
        out.write_u16::<LE>(STATE_VERSION).unwrap();
        out.write_u32::<LE>(self.hospital_id.0).unwrap();
        let c = &self.config;
        out.push(match c.mode {
            CombineMode::Clamp => 0,
            CombineMode::Mod1 => 1,
        });
        for v in [c.patient_after_s, c.long_stay_s, c.frequent_days as i64, c.window_days, c.tick_s] {
            out.write_i64::<LE>(v).unwrap();
        }
        out.write_f64::<LE>(c.delete_at).unwrap();
        out.write_i64::<LE>(c.blacklist_idle_s).unwrap();
        out.write_i64::<LE>(self.last_tick_ts).unwrap();
        out.write_i64::<LE>(self.frontier).unwrap();

        out.write_u64::<LE>(self.items.len() as u64).unwrap();
        for (uid, it) in &self.items {
            out.write_u64::<LE>(uid.0).unwrap();
            out.write_i64::<LE>(it.first_seen).unwrap();
            out.write_i64::<LE>(it.last_seen).unwrap();
            out.write_i64::<LE>(it.res_time).unwrap();
            out.write_f64::<LE>(it.c_hat).unwrap();
            out.push(it.is_patient as u8);
        }
        out.write_u64::<LE>(self.blacklist.len() as u64).unwrap();
        for (uid, e) in &self.blacklist {
            out.write_u64::<LE>(uid.0).unwrap();
            out.push(match e.reason {
                BlacklistReason::LongStay => 0,
                BlacklistReason::Frequent => 1,
            });
            out.write_i64::<LE>(e.last_seen).unwrap();
            write_days(&mut out, &e.observed_days);
        }
        out.write_u64::<LE>(self.sightings.len() as u64).unwrap();
        for (uid, days) in &self.sightings {
            out.write_u64::<LE>(uid.0).unwrap();
            write_days(&mut out, days);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CensusError> {
        let mut input = bytes;
        if input.len() < 6 || &input[..4] != STATE_MAGIC {
            return Err(CensusError::BadMagic);
        }
        input = &input[4..];
        let version = input.read_u16::<LE>()?;
        if version != STATE_VERSION {
            return Err(CensusError::VersionMismatch {
                found: version,
                expected: STATE_VERSION,
            });
        }
        Self::read_body(&mut input).map_err(|e| match e {
            CensusError::Io(_) => CensusError::Corrupt("truncated state"),
            other => other,
        })
    }

    fn read_body(input: &mut &[u8]) -> Result<Self, CensusError> {
        let hospital_id = HospitalId(input.read_u32::<LE>()?);
        let mode = match input.read_u8()? {
            0 => CombineMode::Clamp,
            1 => CombineMode::Mod1,
            _ => return Err(CensusError::Corrupt("unknown combine mode")),
        };
        let mut ints = [0i64; 5];
        for v in &mut ints {
            *v = input.read_i64::<LE>()?;
        }
        let config = CensusConfig {
            mode,
            patient_after_s: ints[0],
            long_stay_s: ints[1],
            frequent_days: ints[2] as usize,
            window_days: ints[3],
            tick_s: ints[4],
            delete_at: input.read_f64::<LE>()?,
            blacklist_idle_s: input.read_i64::<LE>()?,
        };
        if config.tick_s <= 0 {
            return Err(CensusError::Corrupt("non-positive tick length"));
        }
        let last_tick_ts = input.read_i64::<LE>()?;
        let frontier = input.read_i64::<LE>()?;
        let mut state = HospitalState::new(hospital_id, config, last_tick_ts);
        state.last_tick_ts = last_tick_ts;
        state.frontier = frontier;

        for _ in 0..input.read_u64::<LE>()? {
            let uid = Uid(input.read_u64::<LE>()?);
            let item = CountingItem {
                first_seen: input.read_i64::<LE>()?,
                last_seen: input.read_i64::<LE>()?,
                res_time: input.read_i64::<LE>()?,
                c_hat: input.read_f64::<LE>()?,
                is_patient: input.read_u8()? != 0,
            };
            state.items.insert(uid, item);
        }
        for _ in 0..input.read_u64::<LE>()? {
            let uid = Uid(input.read_u64::<LE>()?);
            let reason = match input.read_u8()? {
                0 => BlacklistReason::LongStay,
                1 => BlacklistReason::Frequent,
                _ => return Err(CensusError::Corrupt("unknown blacklist reason")),
            };
            let last_seen = input.read_i64::<LE>()?;
            let observed_days = read_days(input)?;
            state.blacklist.insert(
                uid,
                BlacklistEntry {
                    reason,
                    last_seen,
                    observed_days,
                },
            );
        }
        for _ in 0..input.read_u64::<LE>()? {
            let uid = Uid(input.read_u64::<LE>()?);
            state.sightings.insert(uid, read_days(input)?);
        }
        if !input.is_empty() {
            return Err(CensusError::Corrupt("trailing bytes"));
        }
        Ok(state)
    }

    /// Writes through a temporary file and renames, so a crash never leaves a
    /// half-written state behind.
    pub fn save(&self, path: &Path) -> Result<(), CensusError> {
        let tmp = path.with_extension("tmp");
        std::fs::File::create(&tmp)?.write_all(&self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CensusError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// `hospital_id,ts,n_total,n_over_2h,n_over_4h,n_over_6h`.
pub fn write_density_csv(path: &Path, snapshots: &[DensitySnapshot]) -> Result<(), CensusError> {
    let mut w = csv::Writer::from_path(path)?;
    for s in snapshots {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_density_csv(path: &Path) -> Result<Vec<DensitySnapshot>, CensusError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(CensusError::from)).collect()
}
