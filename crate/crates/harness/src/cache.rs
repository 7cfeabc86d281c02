//! Flat-file cache of continuum reference values.
//!
//! Entries are written once to a temporary file and renamed into place, so
//! concurrent writers never expose partial files.

use std::fs;
use std::path::{Path, PathBuf};

use multislip::energy::EnergyBreakdown;

use crate::config::hex_digest;
use crate::error::Result;

pub const CACHE_ENV: &str = "MULTISLIP_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    /// Cache rooted at `$MULTISLIP_CACHE_DIR`, disabled when unset.
    pub fn from_env() -> Self {
        Self { dir: std::env::var_os(CACHE_ENV).map(PathBuf::from) }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn key(parts: &[&str]) -> String {
        hex_digest(parts.join("\u{1f}").as_bytes())
    }

    fn path(dir: &Path, key: &str) -> PathBuf {
        dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<EnergyBreakdown> {
        let dir = self.dir.as_ref()?;
        let text = fs::read_to_string(Self::path(dir, key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, key: &str, value: &EnergyBreakdown) -> Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        fs::create_dir_all(dir)?;
        let target = Self::path(dir, key);
        if target.exists() {
            return Ok(());
        }
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        std::io::Write::write_all(&mut tmp, serde_json::to_string(value)?.as_bytes())?;
        // Another writer may have won the race; its entry is identical.
        let _ = tmp.persist_noclobber(&target);
        Ok(())
    }

    pub fn get_or_compute(
        &self,
        key: &str,
        compute: impl FnOnce() -> multislip::Result<EnergyBreakdown>,
    ) -> Result<EnergyBreakdown> {
        if let Some(v) = self.get(key) {
            return Ok(v);
        }
        let v = compute()?;
        self.put(key, &v)?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EnergyBreakdown {
        EnergyBreakdown {
            total: 1.5,
            g: 1.0,
            f_pairwise: 0.5,
            f_grid: None,
            gamma: 0.0,
            pairs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    #[test]
    fn round_trip_and_first_writer_wins() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::at(dir.path());
        let key = Cache::key(&["a", "b"]);
        assert!(cache.get(&key).is_none());
        let v = cache.get_or_compute(&key, || Ok(sample())).unwrap();
        assert_eq!(v, sample());
        let mut other = sample();
        other.total = 2.0;
        cache.put(&key, &other).unwrap();
        assert_eq!(cache.get(&key).unwrap(), sample());
        let hit = cache.get_or_compute(&key, || panic!("should be cached")).unwrap();
        assert_eq!(hit, sample());
    }

    #[test]
    fn disabled_cache_always_computes() {
        let cache = Cache::disabled();
        let key = Cache::key(&["x"]);
        cache.put(&key, &sample()).unwrap();
        assert!(cache.get(&key).is_none());
    }
}
