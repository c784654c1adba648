//! Orbit datasets: Cartan projections of the elements of a word ball, or of a
//! synthetic point cloud, together with a self-describing header.

mod checkpoint;
mod dataset;
mod enumerate;
mod generators;

use std::fmt;
use std::str::FromStr;

pub use dataset::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, ReadError, FORMAT_VERSION};
pub use enumerate::{enumerate, predicted_ball_bound, EnumerateOptions, DEFAULT_RECORD_CAP, UNLIMITED_RECORDS};
pub use generators::GeneratorSet;

use crate::chamber::{ChamberVector, GroupDescriptor, RootSystem};
use crate::error::Error;

/// How group elements are identified during enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DedupMode {
    /// Integer matrices compared exactly.
    Exact,
    /// Entries rounded to a relative grid, confirmed at full precision.
    Float,
    /// No identification (synthetic point clouds).
    None,
}

impl fmt::Display for DedupMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DedupMode::Exact => "exact",
            DedupMode::Float => "float",
            DedupMode::None => "none",
        })
    }
}

impl FromStr for DedupMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "exact" => Ok(DedupMode::Exact),
            "float" => Ok(DedupMode::Float),
            "none" => Ok(DedupMode::None),
            other => Err(Error::InvalidConfig(format!("unknown dedup mode '{other}'"))),
        }
    }
}

/// One element of the orbit (or one synthetic point).
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub word_length: u32,
    pub mu: ChamberVector,
    pub norm: f64,
    pub rho_pairing: f64,
    /// Number of orbit points this record stands for; 1 for enumerated balls.
    pub weight: f64,
}

impl OrbitRecord {
    pub fn new(rs: &RootSystem, word_length: u32, mu: ChamberVector, weight: f64) -> Self {
        Self {
            word_length,
            norm: rs.norm(&mu),
            rho_pairing: rs.rho_pairing(&mu),
            mu,
            weight,
        }
    }

    /// Output order: word length, norm, then coordinates and weight.
    pub fn cmp_canonical(&self, other: &Self) -> std::cmp::Ordering {
        self.word_length
            .cmp(&other.word_length)
            .then(self.norm.total_cmp(&other.norm))
            .then_with(|| {
                self.mu
                    .coords()
                    .iter()
                    .zip(other.mu.coords())
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(self.weight.total_cmp(&other.weight))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub group: GroupDescriptor,
    /// Synthetic point cloud rather than an enumerated group.
    pub synthetic: bool,
    pub form: String,
    /// Hex SHA-256 of the generator set (or of the synthetic model).
    pub fingerprint: String,
    pub max_length: u32,
    pub dedup: DedupMode,
    pub weighted: bool,
    /// Free-form `key=value` annotations, kept in order.
    pub meta: Vec<(String, String)>,
}

impl DatasetHeader {
    pub fn group_label(&self) -> String {
        if self.synthetic {
            format!("synthetic {}", self.group)
        } else {
            self.group.to_string()
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitDataset {
    pub header: DatasetHeader,
    pub records: Vec<OrbitRecord>,
}

impl OrbitDataset {
    pub fn root_system(&self) -> RootSystem {
        RootSystem::new(&self.header.group)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sum of record weights, the number of orbit points represented.
    pub fn total_weight(&self) -> f64 {
        self.records.iter().map(|r| r.weight).sum()
    }

    pub fn sort_canonical(&mut self) {
        self.records.sort_by(OrbitRecord::cmp_canonical);
    }
}
