use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use super::FitnessValue;
use crate::error::Result;
use crate::param_space::{Chromosome, ChromosomeKey};

/// Memo table of scored chromosomes keyed by the exact bit pattern of their
/// genes. Safe to share between threads; concurrent inserts of the same key
/// carry the same value, so the last write wins harmlessly.
#[derive(Debug, Default)]
pub struct FitnessCache {
    map: Mutex<HashMap<ChromosomeKey, FitnessValue>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

impl CacheStats {
    pub fn lookups(&self) -> u64 {
        self.hits + self.misses
    }
}

impl FitnessCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counted lookup.
    pub fn lookup(&self, c: &Chromosome) -> Option<FitnessValue> {
        let found = self.map.lock().unwrap().get(&c.key()).copied();
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// Uncounted lookup.
    pub fn peek(&self, c: &Chromosome) -> Option<FitnessValue> {
        self.map.lock().unwrap().get(&c.key()).copied()
    }

    pub fn insert(&self, c: &Chromosome, value: FitnessValue) {
        self.map.lock().unwrap().insert(c.key(), value);
    }

    /// Returns the cached value, or scores the chromosome with `score` and
    /// stores the result. The lock is not held while scoring.
    pub fn get_or_try_insert_with(
        &self,
        c: &Chromosome,
        score: impl FnOnce() -> Result<FitnessValue>,
    ) -> Result<FitnessValue> {
        if let Some(v) = self.lookup(c) {
            return Ok(v);
        }
        let v = score()?;
        self.insert(c, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            entries: self.len(),
        }
    }
}
