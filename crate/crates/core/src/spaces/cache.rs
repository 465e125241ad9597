//! On-disk cache of computed spaces, one JSON file per space.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletChar;
use crate::error::{Error, Result};
use crate::qseries::QSeries;

use super::{space_key, ModularFormSpace};

/// Bumped whenever the stored layout or the construction changes.
pub const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Stored {
    version: u32,
    weight_num: u64,
    level: u64,
    character: DirichletChar,
    cuspidal: bool,
    prec: usize,
    basis: Vec<QSeries>,
}

#[derive(Clone, Debug)]
pub struct SpaceCache {
    dir: PathBuf,
}

impl SpaceCache {
    pub fn new(dir: impl Into<PathBuf>) -> SpaceCache {
        SpaceCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// None on a miss, a stale version or an unreadable file.
    pub fn load(&self, key: &str) -> Option<ModularFormSpace> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let s: Stored = serde_json::from_str(&text).ok()?;
        if s.version != CACHE_VERSION {
            return None;
        }
        let space = ModularFormSpace::from_basis(s.weight_num, s.level, s.character, s.cuspidal, s.prec, s.basis).ok()?;
        (space.key() == key).then_some(space)
    }

    pub fn store(&self, space: &ModularFormSpace) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::Io(e.to_string()))?;
        let stored = Stored {
            version: CACHE_VERSION,
            weight_num: space.weight_num(),
            level: space.level(),
            character: space.character().clone(),
            cuspidal: space.cuspidal(),
            prec: space.prec(),
            basis: space.basis().to_vec(),
        };
        let text = serde_json::to_string(&stored).map_err(|e| Error::Io(e.to_string()))?;
        let path = self.path(&space.key());
        let tmp = self.dir.join(format!(".{}.{}.tmp", space.key(), std::process::id()));
        let mut f = fs::File::create(&tmp).map_err(|e| Error::Io(e.to_string()))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
        f.sync_all().map_err(|e| Error::Io(e.to_string()))?;
        fs::rename(&tmp, &path).map_err(|e| Error::Io(e.to_string()))?;
        Ok(path)
    }

    /// Load or build and store.
    pub fn get_or_build(
        &self,
        k2: u64,
        level: u64,
        chi: &DirichletChar,
        cuspidal: bool,
        prec: usize,
    ) -> Result<ModularFormSpace> {
        let chi = if chi.modulus() == level { chi.clone() } else { chi.extend(level)? };
        let key = space_key(k2, level, &chi, cuspidal, prec);
        if let Some(s) = self.load(&key) {
            return Ok(s);
        }
        let s = super::build_space(k2, level, &chi, cuspidal, prec)?;
        self.store(&s)?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpaceCache::new(dir.path());
        let chi = DirichletChar::trivial(11);
        let s = cache.get_or_build(4, 11, &chi, true, 30).unwrap();
        let key = s.key();
        let back = cache.load(&key).unwrap();
        assert_eq!(back.basis(), s.basis());
        assert_eq!(back.pivots(), s.pivots());
        // a stale version is ignored
        let path = cache.path(&key);
        let text = fs::read_to_string(&path).unwrap();
        let stale = text.replacen(&format!("\"version\":{CACHE_VERSION}"), "\"version\":0", 1);
        fs::write(&path, stale).unwrap();
        assert!(cache.load(&key).is_none());
        let again = cache.get_or_build(4, 11, &chi, true, 30).unwrap();
        assert_eq!(again.basis(), s.basis());
        assert!(cache.load(&key).is_some());
    }
}
