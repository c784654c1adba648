//! Generator files: one element per line, factors separated by `|`, each
//! factor written `n:a11,a12,...,ann` in row-major order. A line may start
//! with `label =`; `#` starts a comment. Inverses are appended when missing.

use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::cartan::{ExactMatrix, GroupElement};
use crate::chamber::GroupDescriptor;
use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone)]
pub struct GeneratorSet {
    elements: Vec<GroupElement>,
    labels: Vec<String>,
    /// Index of the inverse of each element within the set.
    inverses: Vec<usize>,
}

enum Entries {
    Int(Vec<i128>),
    Float(Vec<f64>),
}

fn parse_factor(text: &str, line: usize) -> std::result::Result<(usize, Entries), ParseError> {
    let (n, body) = text
        .split_once(':')
        .ok_or_else(|| ParseError::new(line, format!("factor '{}' lacks the 'n:' size prefix", text.trim())))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| ParseError::new(line, format!("bad factor size '{}'", n.trim())))?;
    let tokens: Vec<&str> = body.split(',').map(str::trim).collect();
    if tokens.len() != n * n {
        return Err(ParseError::new(
            line,
            format!("factor of size {n} needs {} entries, found {}", n * n, tokens.len()),
        ));
    }
    if let Ok(ints) = tokens.iter().map(|t| t.parse::<i128>()).collect::<std::result::Result<Vec<_>, _>>() {
        return Ok((n, Entries::Int(ints)));
    }
    let floats = tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ParseError::new(line, format!("bad matrix entry '{t}'")))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((n, Entries::Float(floats)))
}

fn same_element(a: &GroupElement, b: &GroupElement) -> bool {
    match (a.exact(), b.exact()) {
        (Some(x), Some(y)) => x == y,
        _ => a.factors().iter().zip(b.factors()).all(|(x, y)| {
            let scale = x.amax().max(y.amax()).max(1.0);
            (x - y).amax() <= 1e-12 * scale
        }),
    }
}

impl GeneratorSet {
    /// Builds a symmetric set from the given elements, appending inverses
    /// that are not already present.
    pub fn new(elements: Vec<GroupElement>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidGenerators("no generators".into()));
        }
        assert_eq!(elements.len(), labels.len());
        let sizes = elements[0].sizes();
        if elements.iter().any(|g| g.sizes() != sizes) {
            return Err(Error::InvalidGenerators("generators have different factor sizes".into()));
        }
        let mut all = elements;
        let mut labels = labels;
        let given = all.len();
        let mut inverses = vec![usize::MAX; given];
        for i in 0..given {
            let inv = all[i].inverse()?;
            match (0..all.len()).find(|&j| same_element(&all[j], &inv)) {
                Some(j) => inverses[i] = j,
                None => {
                    inverses[i] = all.len();
                    labels.push(format!("{}^-1", labels[i]));
                    all.push(inv);
                    inverses.push(i);
                }
            }
        }
        Ok(Self {
            elements: all,
            labels,
            inverses,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, ParseError> {
        let mut elements = Vec::new();
        let mut labels = Vec::new();
        let mut first_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if first_line == 0 {
                first_line = line;
            }
            let (label, body) = match content.split_once('=') {
                Some((l, b)) => (l.trim().to_string(), b),
                None => (format!("g{}", elements.len() + 1), content),
            };
            if label.is_empty() {
                return Err(ParseError::new(line, "empty label"));
            }
            let factors = body
                .split('|')
                .map(|f| parse_factor(f, line))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let element = if factors.iter().all(|(_, e)| matches!(e, Entries::Int(_))) {
                let exact = factors
                    .into_iter()
                    .map(|(n, e)| match e {
                        Entries::Int(v) => ExactMatrix::new(n, v),
                        Entries::Float(_) => unreachable!(),
                    })
                    .collect();
                GroupElement::from_exact(exact)
            } else {
                let float = factors
                    .into_iter()
                    .map(|(n, e)| match e {
                        Entries::Int(v) => DMatrix::from_row_iterator(n, n, v.into_iter().map(|x| x as f64)),
                        Entries::Float(v) => DMatrix::from_row_slice(n, n, &v),
                    })
                    .collect();
                GroupElement::new(float)
            }
            .map_err(|e| ParseError::new(line, e.to_string()))?;
            elements.push(element);
            labels.push(label);
        }
        if elements.is_empty() {
            return Err(ParseError::new(text.lines().count().max(1), "no generators found"));
        }
        Self::new(elements, labels).map_err(|e| ParseError::new(first_line, e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverses[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.elements[0].sizes()
    }

    /// Whether every generator carries an exact integer form.
    pub fn is_integral(&self) -> bool {
        self.elements.iter().all(|g| g.exact().is_some())
    }

    pub fn check_group(&self, group: &GroupDescriptor) -> Result<()> {
        if self.sizes() != group.factors() {
            return Err(Error::InvalidGenerators(format!(
                "generator factor sizes {:?} do not match group {group}",
                self.sizes()
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 of a canonical rendering of the (normalized) set.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for g in &self.elements {
            let mut line = String::new();
            match g.exact() {
                Some(ex) => {
                    for m in ex {
                        let entries: Vec<String> = m.entries().iter().map(i128::to_string).collect();
                        line.push_str(&format!("{}:{}|", m.size(), entries.join(",")));
                    }
                }
                None => {
                    for m in g.factors() {
                        let entries: Vec<String> =
                            m.transpose().iter().map(|x| format!("{x:.16e}")).collect();
                        line.push_str(&format!("{}:{}|", m.nrows(), entries.join(",")));
                    }
                }
            }
            line.push('\n');
            hasher.update(line.as_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
