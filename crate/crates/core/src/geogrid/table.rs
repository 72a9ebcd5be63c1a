//! Open-addressed (linear probing) map from packed cell ids to hospital ids.
//! The layout is a pure function of the insertion sequence, which keeps the
//! serialized index byte-stable.

use crate::hashing::seeded;

const EMPTY: u32 = u32::MAX;
const TABLE_SALT: u64 = 0x6A09_E667_F3BC_C908;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellTable {
    keys: Vec<u64>,
    values: Vec<u32>,
    len: usize,
}

impl CellTable {
    /// Table with room for `n` entries at ≤ 50% occupancy.
    pub fn with_capacity(n: usize) -> Self {
        let slots = (n.max(1) * 2).next_power_of_two();
        CellTable {
            keys: vec![0; slots],
            values: vec![EMPTY; slots],
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn start(&self, key: u64) -> usize {
        (seeded(key, TABLE_SALT) as usize) & (self.keys.len() - 1)
    }

    /// Inserts or returns the value already stored under `key`.
    ///
    /// Panics if `value` is `u32::MAX` (reserved as the empty marker) or the
    /// table is full; both are caller bugs since capacity is fixed up front.
    pub fn insert(&mut self, key: u64, value: u32) -> Option<u32> {
        assert_ne!(value, EMPTY, "u32::MAX is reserved");
        assert!(self.len < self.keys.len(), "cell table is full");
        let mask = self.keys.len() - 1;
        let mut i = self.start(key);
        loop {
            if self.values[i] == EMPTY {
                self.keys[i] = key;
                self.values[i] = value;
                self.len += 1;
                return None;
            }
            if self.keys[i] == key {
                return Some(self.values[i]);
            }
            i = (i + 1) & mask;
        }
    }

    #[inline]
    pub fn get(&self, key: u64) -> Option<u32> {
        let mask = self.keys.len() - 1;
        let mut i = self.start(key);
        loop {
            let v = self.values[i];
            if v == EMPTY {
                return None;
            }
            if self.keys[i] == key {
                return Some(v);
            }
            i = (i + 1) & mask;
        }
    }

    /// Occupied entries in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.keys
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v != EMPTY)
            .map(|(&k, &v)| (k, v))
    }

    pub(crate) fn write_blob(&self, out: &mut Vec<u8>) {
        use byteorder::{LittleEndian, WriteBytesExt};
        out.write_u64::<LittleEndian>(self.keys.len() as u64).unwrap();
        out.write_u64::<LittleEndian>(self.len as u64).unwrap();
        for (k, v) in self.keys.iter().zip(&self.values) {
            out.write_u64::<LittleEndian>(*k).unwrap();
            out.write_u32::<LittleEndian>(*v).unwrap();
        }
    }

    pub(crate) fn read_blob(input: &mut &[u8]) -> Result<Self, &'static str> {
        use byteorder::{LittleEndian, ReadBytesExt};
        let slots = input.read_u64::<LittleEndian>().map_err(|_| "truncated")? as usize;
        let len = input.read_u64::<LittleEndian>().map_err(|_| "truncated")? as usize;
        if !slots.is_power_of_two() || len >= slots {
            return Err("bad table dimensions");
        }
        if input.len() < slots * 12 {
            return Err("truncated");
        }
        let mut keys = Vec::with_capacity(slots);
        let mut values = Vec::with_capacity(slots);
        for _ in 0..slots {
            keys.push(input.read_u64::<LittleEndian>().map_err(|_| "truncated")?);
            values.push(input.read_u32::<LittleEndian>().map_err(|_| "truncated")?);
        }
        if values.iter().filter(|&&v| v != EMPTY).count() != len {
            return Err("occupancy does not match length");
        }
        Ok(CellTable { keys, values, len })
    }
}
