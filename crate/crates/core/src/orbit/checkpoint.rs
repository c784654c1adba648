//! Resumable enumeration state, written after every completed sphere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Checkpoint {
    pub version: u32,
    pub group: String,
    pub fingerprint: String,
    pub dedup: String,
    /// Last fully enumerated word length.
    pub completed: u32,
    /// `(word_length, bit patterns of mu)` of every record so far.
    pub records: Vec<(u32, Vec<u64>)>,
    /// Generator words of the spheres `completed - 1` and `completed`.
    pub previous: Vec<Vec<u16>>,
    pub current: Vec<Vec<u16>>,
}

impl Checkpoint {
    pub fn new(group: String, fingerprint: String, dedup: String) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            group,
            fingerprint,
            dedup,
            completed: 0,
            records: Vec::new(),
            previous: Vec::new(),
            current: Vec::new(),
        }
    }

    /// Writes to a sibling temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_vec(self).expect("checkpoint serializes");
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let cp: Checkpoint = serde_json::from_slice(&bytes)
            .map_err(|e| Error::parse(path, ParseError::new(e.line(), e.to_string())))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Version(format!("checkpoint {}", cp.version)));
        }
        Ok(cp)
    }
}
