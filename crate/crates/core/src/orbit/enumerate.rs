//! Breadth-first enumeration of word balls.
//!
//! Spheres are built one word length at a time. A neighbor of the sphere of
//! radius `l` lies in the spheres `l - 1`, `l` or `l + 1`, so only the last
//! two spheres are kept for deduplication. Candidate products are generated
//! in parallel and then sorted, which makes the result independent of the
//! thread count.

use std::collections::HashMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::checkpoint::Checkpoint;
use super::{DatasetHeader, DedupMode, GeneratorSet, OrbitDataset, OrbitRecord};
use crate::cartan::{cartan_projection, GroupElement, ENTRY_LIMIT};
use crate::chamber::{ChamberVector, RootSystem};
use crate::error::{Error, Result};

pub const DEFAULT_RECORD_CAP: u64 = 10_000_000;
/// Disables the worst-case guard; only the actual record count is capped.
pub const UNLIMITED_RECORDS: u64 = u64::MAX;

/// Relative rounding grid of float keys.
const FLOAT_KEY_STEP: f64 = 1e-9;
/// Relative distance below which two elements in one bucket are equal.
const FLOAT_SAME: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    pub max_length: u32,
    pub dedup: DedupMode,
    /// Refuse runs whose worst-case ball size exceeds this many records.
    /// [`UNLIMITED_RECORDS`] skips that check, which abelian groups need:
    /// their balls are polynomial while the worst case is exponential.
    pub record_cap: u64,
    /// Written after every completed sphere.
    pub checkpoint: Option<PathBuf>,
    /// Continue from `checkpoint` when it exists.
    pub resume: bool,
}

impl EnumerateOptions {
    pub fn new(max_length: u32, dedup: DedupMode) -> Self {
        Self {
            max_length,
            dedup,
            record_cap: DEFAULT_RECORD_CAP,
            checkpoint: None,
            resume: false,
        }
    }
}

/// Worst-case ball size `|S|^L` for a symmetric generating set `S`.
pub fn predicted_ball_bound(generators: usize, max_length: u32) -> f64 {
    (generators as f64).powi(max_length as i32)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Exact(Vec<i128>),
    Float(Vec<i32>, Vec<i64>),
}

struct Node {
    word: Vec<u16>,
    element: GroupElement,
}

fn word_label(gens: &GeneratorSet, word: &[u16]) -> String {
    if word.is_empty() {
        return "e".into();
    }
    word.iter()
        .map(|&i| gens.labels()[i as usize].as_str())
        .collect::<Vec<_>>()
        .join("*")
}

fn float_max(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

// Each factor is rounded on its own scale: a product group can pair a huge
// factor with a small one, and a shared scale would erase the small one.
fn key_of(g: &GroupElement, mode: DedupMode) -> Option<Key> {
    match mode {
        DedupMode::Exact => Some(Key::Exact(
            g.exact()?.iter().flat_map(|m| m.entries().iter().copied()).collect(),
        )),
        _ => {
            let mut exps = Vec::with_capacity(g.factors().len());
            let mut entries = Vec::new();
            for m in g.factors() {
                let e = (FLOAT_KEY_STEP * float_max(m).max(1.0)).log2().ceil() as i32;
                let scale = 2f64.powi(e);
                exps.push(e);
                entries.extend(m.transpose().iter().map(|x| (x / scale).round() as i64));
            }
            Some(Key::Float(exps, entries))
        }
    }
}

fn same_at_full_precision(a: &GroupElement, b: &GroupElement) -> bool {
    a.factors().iter().zip(b.factors()).all(|(x, y)| {
        let scale = float_max(x).max(float_max(y)).max(1.0);
        (x - y).amax() <= FLOAT_SAME * scale
    })
}

/// Elements of the last two spheres, indexed by key.
struct Seen<'a> {
    map: HashMap<Key, &'a GroupElement>,
}

impl<'a> Seen<'a> {
    fn new(mode: DedupMode, spheres: [&'a [Node]; 2]) -> Self {
        let mut map = HashMap::new();
        for nodes in spheres {
            for n in nodes {
                if let Some(k) = key_of(&n.element, mode) {
                    map.insert(k, &n.element);
                }
            }
        }
        Self { map }
    }
}

fn element_of(gens: &GeneratorSet, word: &[u16]) -> GroupElement {
    let mut g = GroupElement::identity(&gens.sizes());
    for &i in word {
        g = g.mul(&gens.elements()[i as usize]);
    }
    g
}

/// Enumerates the ball of radius `opts.max_length` in the word metric of
/// `gens` and returns the Cartan projections of its distinct elements.
pub fn enumerate(rs: &RootSystem, gens: &GeneratorSet, opts: &EnumerateOptions) -> Result<OrbitDataset> {
    gens.check_group(rs.descriptor())?;
    match opts.dedup {
        DedupMode::Exact if !gens.is_integral() => {
            return Err(Error::InvalidConfig(
                "exact deduplication needs integer generators; use float mode".into(),
            ))
        }
        DedupMode::None => {
            return Err(Error::InvalidConfig("enumeration needs a dedup mode (exact or float)".into()))
        }
        _ => {}
    }
    let predicted = predicted_ball_bound(gens.len(), opts.max_length);
    if opts.record_cap != UNLIMITED_RECORDS && predicted > opts.record_cap as f64 {
        return Err(Error::RecordCap {
            predicted,
            cap: opts.record_cap,
        });
    }

    let fingerprint = gens.fingerprint();
    let mut state = Checkpoint::new(rs.descriptor().to_string(), fingerprint.clone(), opts.dedup.to_string());
    let resumed = match (&opts.checkpoint, opts.resume) {
        (Some(path), true) if path.exists() => {
            let cp = Checkpoint::load(path)?;
            if cp.group != state.group || cp.fingerprint != state.fingerprint || cp.dedup != state.dedup {
                return Err(Error::InvalidConfig(format!(
                    "checkpoint {} belongs to a different run",
                    path.display()
                )));
            }
            state = cp;
            true
        }
        _ => false,
    };

    let mut records: Vec<OrbitRecord>;
    let mut previous: Vec<Node>;
    let mut current: Vec<Node>;
    if resumed {
        records = state
            .records
            .iter()
            .filter(|(wl, _)| *wl <= opts.max_length)
            .map(|(wl, bits)| {
                let mu = ChamberVector::new(bits.iter().map(|&b| f64::from_bits(b)).collect());
                OrbitRecord::new(rs, *wl, mu, 1.0)
            })
            .collect();
        let rebuild = |words: &[Vec<u16>]| -> Vec<Node> {
            words
                .par_iter()
                .map(|w| Node {
                    element: element_of(gens, w),
                    word: w.clone(),
                })
                .collect()
        };
        previous = rebuild(&state.previous);
        current = rebuild(&state.current);
    } else {
        let identity = GroupElement::identity(&gens.sizes());
        records = vec![OrbitRecord::new(rs, 0, cartan_projection(rs, &identity)?, 1.0)];
        state.records = vec![(0, records[0].mu.coords().iter().map(|x| x.to_bits()).collect())];
        previous = Vec::new();
        current = vec![Node {
            word: Vec::new(),
            element: identity,
        }];
    }

    let start = state.completed + 1;
    for length in start..=opts.max_length {
        let next = next_sphere(gens, opts.dedup, &previous, &current)?;
        if records.len() as u64 + next.len() as u64 > opts.record_cap {
            return Err(Error::RecordCap {
                predicted: (records.len() + next.len()) as f64,
                cap: opts.record_cap,
            });
        }
        let projected: Vec<OrbitRecord> = next
            .par_iter()
            .map(|n| {
                cartan_projection(rs, &n.element)
                    .map(|mu| OrbitRecord::new(rs, length, mu, 1.0))
                    .map_err(|e| match e {
                        Error::Overflow { .. } => Error::Overflow {
                            word: word_label(gens, &n.word),
                        },
                        other => other,
                    })
            })
            .collect::<Result<_>>()?;
        if let Some(path) = &opts.checkpoint {
            state.completed = length;
            state.records.extend(
                projected
                    .iter()
                    .map(|r| (r.word_length, r.mu.coords().iter().map(|x| x.to_bits()).collect())),
            );
            state.previous = current.iter().map(|n| n.word.clone()).collect();
            state.current = next.iter().map(|n| n.word.clone()).collect();
            state.save(path)?;
        }
        records.extend(projected);
        previous = std::mem::replace(&mut current, next);
    }

    let mut ds = OrbitDataset {
        header: DatasetHeader {
            group: rs.descriptor().clone(),
            synthetic: false,
            form: rs.form_label().to_string(),
            fingerprint,
            max_length: opts.max_length,
            dedup: opts.dedup,
            weighted: false,
            meta: Vec::new(),
        },
        records,
    };
    ds.sort_canonical();
    Ok(ds)
}

fn next_sphere(gens: &GeneratorSet, mode: DedupMode, previous: &[Node], current: &[Node]) -> Result<Vec<Node>> {
    let mut candidates: Vec<(Key, Node)> = current
        .par_iter()
        .flat_map_iter(|n| {
            let last_inverse = n.word.last().map(|&i| gens.inverse_index(i as usize) as u16);
            (0..gens.len() as u16)
                .filter(move |&s| Some(s) != last_inverse)
                .map(move |s| {
                    let element = n.element.mul(&gens.elements()[s as usize]);
                    let mut word = n.word.clone();
                    word.push(s);
                    (element, word)
                })
        })
        .map(|(element, word)| {
            if element.max_abs_entry() > ENTRY_LIMIT {
                return Err(Error::Overflow {
                    word: word_label(gens, &word),
                });
            }
            let key = key_of(&element, mode).ok_or_else(|| Error::Overflow {
                word: word_label(gens, &word),
            })?;
            Ok((key, Node { word, element }))
        })
        .collect::<Result<_>>()?;
    candidates.par_sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.word.cmp(&b.1.word)));

    let seen = Seen::new(mode, [previous, current]);
    let check = |a: &GroupElement, b: &GroupElement, word: &[u16]| -> Result<()> {
        if mode == DedupMode::Float && !same_at_full_precision(a, b) {
            return Err(Error::DedupCollision {
                word: word_label(gens, word),
            });
        }
        Ok(())
    };

    let mut out: Vec<Node> = Vec::new();
    let mut iter = candidates.into_iter().peekable();
    while let Some((key, node)) = iter.next() {
        while let Some((k, dup)) = iter.next_if(|(k, _)| *k == key) {
            let _ = k;
            check(&node.element, &dup.element, &dup.word)?;
        }
        if let Some(old) = seen.map.get(&key) {
            check(old, &node.element, &node.word)?;
            continue;
        }
        out.push(node);
    }
    Ok(out)
}
