//! Partial-key cuckoo filter over `u64` keys.
//!
//! Two candidate buckets of four slots each; the alternate bucket is derived
//! from the current bucket and the fingerprint alone, so entries can be moved
//! without knowing the original key. Fingerprints are at most 16 bits and the
//! value 0 marks an empty slot.

use crate::hashing::{mix64, seeded};

pub const SLOTS_PER_BUCKET: usize = 4;
pub const DEFAULT_FINGERPRINT_BITS: u8 = 16;
pub const DEFAULT_MAX_KICKS: u32 = 500;
pub const MAX_LOAD_FACTOR: f64 = 0.95;

// Buckets are sized for this load so the kick chain rarely runs long.
const TARGET_LOAD: f64 = 0.90;
const ALT_SALT: u64 = 0x2545_F491_4F6C_DD1D;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FilterError {
    #[error("cuckoo filter is full: no free slot after {0} kicks")]
    Full(u32),
    #[error("fingerprint width must be within 1..=16 bits, got {0}")]
    FingerprintWidth(u8),
    #[error("corrupt filter blob: {0}")]
    Corrupt(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuckooFilter {
    buckets: Vec<[u16; SLOTS_PER_BUCKET]>,
    mask: u64,
    fingerprint_bits: u8,
    max_kicks: u32,
    seed: u64,
    len: usize,
}

impl CuckooFilter {
    /// Filter sized for `expected_items` at no more than 90% load.
    pub fn with_capacity(
        expected_items: usize,
        fingerprint_bits: u8,
        max_kicks: u32,
        seed: u64,
    ) -> Result<Self, FilterError> {
        if !(1..=16).contains(&fingerprint_bits) {
            return Err(FilterError::FingerprintWidth(fingerprint_bits));
        }
        let wanted = (expected_items as f64 / (SLOTS_PER_BUCKET as f64 * TARGET_LOAD)).ceil() as usize;
        let n_buckets = wanted.max(1).next_power_of_two();
        Ok(CuckooFilter {
            buckets: vec![[0; SLOTS_PER_BUCKET]; n_buckets],
            mask: n_buckets as u64 - 1,
            fingerprint_bits,
            max_kicks,
            seed,
            len: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn fingerprint_bits(&self) -> u8 {
        self.fingerprint_bits
    }

    pub fn capacity(&self) -> usize {
        self.buckets.len() * SLOTS_PER_BUCKET
    }

    pub fn load_factor(&self) -> f64 {
        self.len as f64 / self.capacity() as f64
    }

    /// Analytic false-positive bound `2·b / 2^f`.
    pub fn fpr_bound(&self) -> f64 {
        2.0 * SLOTS_PER_BUCKET as f64 / (1u64 << self.fingerprint_bits) as f64
    }

    fn locate(&self, key: u64) -> (usize, u16) {
        let h = seeded(key, self.seed);
        let fp_mask = (1u64 << self.fingerprint_bits) - 1;
        let mut fp = ((h >> 32) & fp_mask) as u16;
        if fp == 0 {
            fp = 1;
        }
        ((h & self.mask) as usize, fp)
    }

    #[inline]
    fn alt_index(&self, index: usize, fp: u16) -> usize {
        ((index as u64) ^ (mix64(fp as u64 ^ ALT_SALT ^ self.seed) & self.mask)) as usize
    }

    fn try_place(&mut self, index: usize, fp: u16) -> bool {
        if let Some(slot) = self.buckets[index].iter_mut().find(|s| **s == 0) {
            *slot = fp;
            true
        } else {
            false
        }
    }

    /// Inserts `key`. Duplicate keys are stored as duplicate fingerprints, so
    /// each insert must be matched by one [`remove`](Self::remove).
    ///
    /// On failure the filter is restored to its state before the call.
    pub fn insert(&mut self, key: u64) -> Result<(), FilterError> {
        if (self.len + 1) as f64 > MAX_LOAD_FACTOR * self.capacity() as f64 {
            return Err(FilterError::Full(0));
        }
        let (i1, fp) = self.locate(key);
        let i2 = self.alt_index(i1, fp);
        if self.try_place(i1, fp) || self.try_place(i2, fp) {
            self.len += 1;
            return Ok(());
        }

        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut index = if mix64(key ^ self.seed) & 1 == 0 { i1 } else { i2 };
        let mut carried = fp;
        for kick in 0..self.max_kicks {
            let slot = (mix64(carried as u64 ^ ((kick as u64) << 16) ^ self.seed) % SLOTS_PER_BUCKET as u64) as usize;
            std::mem::swap(&mut carried, &mut self.buckets[index][slot]);
            path.push((index, slot));
            index = self.alt_index(index, carried);
            if self.try_place(index, carried) {
                self.len += 1;
                return Ok(());
            }
        }

        // Undo the chain so no previously stored fingerprint is lost.
        for &(b, s) in path.iter().rev() {
            std::mem::swap(&mut carried, &mut self.buckets[b][s]);
        }
        debug_assert_eq!(carried, fp);
        Err(FilterError::Full(self.max_kicks))
    }

    pub fn contains(&self, key: u64) -> bool {
        let (i1, fp) = self.locate(key);
        if self.buckets[i1].contains(&fp) {
            return true;
        }
        let i2 = self.alt_index(i1, fp);
        self.buckets[i2].contains(&fp)
    }

    /// Removes one copy of `key`'s fingerprint. Only call for keys that were
    /// inserted; removing a never-inserted key may evict a colliding one.
    pub fn remove(&mut self, key: u64) -> bool {
        let (i1, fp) = self.locate(key);
        let i2 = self.alt_index(i1, fp);
        for index in [i1, i2] {
            if let Some(slot) = self.buckets[index].iter_mut().find(|s| **s == fp) {
                *slot = 0;
                self.len -= 1;
                return true;
            }
        }
        false
    }

    pub(crate) fn write_blob(&self, out: &mut Vec<u8>) {
        use byteorder::{LittleEndian, WriteBytesExt};
        out.push(self.fingerprint_bits);
        out.write_u32::<LittleEndian>(self.max_kicks).unwrap();
        out.write_u64::<LittleEndian>(self.seed).unwrap();
        out.write_u64::<LittleEndian>(self.buckets.len() as u64).unwrap();
        out.write_u64::<LittleEndian>(self.len as u64).unwrap();
        for bucket in &self.buckets {
            for &fp in bucket {
                out.write_u16::<LittleEndian>(fp).unwrap();
            }
        }
    }

    pub(crate) fn read_blob(input: &mut &[u8]) -> Result<Self, FilterError> {
        use byteorder::{LittleEndian, ReadBytesExt};
        let short = |_| FilterError::Corrupt("truncated");
        let fingerprint_bits = input.read_u8().map_err(short)?;
        if !(1..=16).contains(&fingerprint_bits) {
            return Err(FilterError::FingerprintWidth(fingerprint_bits));
        }
        let max_kicks = input.read_u32::<LittleEndian>().map_err(short)?;
        let seed = input.read_u64::<LittleEndian>().map_err(short)?;
        let n_buckets = input.read_u64::<LittleEndian>().map_err(short)? as usize;
        let len = input.read_u64::<LittleEndian>().map_err(short)? as usize;
        if !n_buckets.is_power_of_two() {
            return Err(FilterError::Corrupt("bucket count is not a power of two"));
        }
        if input.len() < n_buckets * SLOTS_PER_BUCKET * 2 {
            return Err(FilterError::Corrupt("truncated"));
        }
        let mut buckets = vec![[0u16; SLOTS_PER_BUCKET]; n_buckets];
        let mut occupied = 0;
        for bucket in &mut buckets {
            for slot in bucket.iter_mut() {
                *slot = input.read_u16::<LittleEndian>().map_err(short)?;
                occupied += (*slot != 0) as usize;
            }
        }
        if occupied != len {
            return Err(FilterError::Corrupt("occupancy does not match length"));
        }
        Ok(CuckooFilter {
            buckets,
            mask: n_buckets as u64 - 1,
            fingerprint_bits,
            max_kicks,
            seed,
            len,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn inserted_keys_are_found() {
        let mut f = CuckooFilter::with_capacity(1000, 16, 500, 7).unwrap();
        for k in 0..1000u64 {
            f.insert(k * 7919).unwrap();
        }
        assert!((0..1000u64).all(|k| f.contains(k * 7919)));
        assert_eq!(f.len(), 1000);
        assert!(f.load_factor() <= MAX_LOAD_FACTOR);
    }

    #[test]
    fn remove_drops_one_copy() {
        let mut f = CuckooFilter::with_capacity(16, 16, 500, 1).unwrap();
        f.insert(42).unwrap();
        f.insert(42).unwrap();
        assert!(f.remove(42));
        assert!(f.contains(42));
        assert!(f.remove(42));
        assert!(!f.contains(42));
        assert!(!f.remove(42));
    }

    #[test]
    fn full_filter_reports_error_and_keeps_contents() {
        let mut f = CuckooFilter::with_capacity(8, 4, 20, 3).unwrap();
        let mut stored = Vec::new();
        let mut k = 0u64;
        loop {
            match f.insert(k) {
                Ok(()) => stored.push(k),
                Err(FilterError::Full(_)) => break,
                Err(e) => panic!("{e}"),
            }
            k += 1;
        }
        assert!(stored.iter().all(|&s| f.contains(s)));
        assert!(f.load_factor() <= MAX_LOAD_FACTOR + 1e-12);
    }

    #[test]
    fn rejects_bad_width() {
        assert_eq!(
            CuckooFilter::with_capacity(10, 0, 500, 0).unwrap_err(),
            FilterError::FingerprintWidth(0)
        );
        assert!(CuckooFilter::with_capacity(10, 17, 500, 0).is_err());
    }

    #[test]
    fn blob_roundtrip() {
        let mut f = CuckooFilter::with_capacity(100, 12, 500, 99).unwrap();
        for k in 0..90 {
            f.insert(k).unwrap();
        }
        let mut blob = Vec::new();
        f.write_blob(&mut blob);
        let back = CuckooFilter::read_blob(&mut blob.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn no_false_negatives_under_any_order(
            keys in proptest::collection::hash_set(any::<u64>(), 1..400),
            seed in any::<u64>(),
        ) {
            let mut keys: Vec<u64> = keys.into_iter().collect();
            keys.sort_unstable();
            // Permute deterministically from the seed.
            let n = keys.len();
            for i in (1..n).rev() {
                let j = (mix64(seed ^ i as u64) % (i as u64 + 1)) as usize;
                keys.swap(i, j);
            }
            let mut f = CuckooFilter::with_capacity(n, 16, 500, seed).unwrap();
            for &k in &keys {
                f.insert(k).unwrap();
            }
            let set: HashSet<u64> = keys.iter().copied().collect();
            prop_assert!(set.iter().all(|&k| f.contains(k)));
        }
    }
}
