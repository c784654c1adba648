//! Text serialization of orbit datasets.
//!
//! ```text
//! #cpd 1
//! #group sl2
//! #rank 1
//! #form trace
//! #gens <hex fingerprint>
//! #maxlen 8
//! #dedup exact
//! 0,0.0000000000000000e0,0.0000000000000000e0
//! ```
//!
//! Weighted datasets add `#weights 1` and a trailing weight column. Optional
//! `#meta key=value` lines carry annotations.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DatasetHeader, DedupMode, OrbitDataset, OrbitRecord};
use crate::chamber::{ChamberVector, GroupDescriptor, RootSystem, CHAMBER_TOL};
use crate::error::{Error, ParseError, Result};

pub const FORMAT_VERSION: u32 = 1;

pub fn write_dataset_to<W: Write>(ds: &OrbitDataset, out: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    let h = &ds.header;
    writeln!(w, "#cpd {FORMAT_VERSION}")?;
    writeln!(w, "#group {}", h.group_label())?;
    writeln!(w, "#rank {}", h.group.rank())?;
    writeln!(w, "#form {}", h.form)?;
    writeln!(w, "#gens {}", h.fingerprint)?;
    writeln!(w, "#maxlen {}", h.max_length)?;
    writeln!(w, "#dedup {}", h.dedup)?;
    if h.weighted {
        writeln!(w, "#weights 1")?;
    }
    for (k, v) in &h.meta {
        writeln!(w, "#meta {k}={v}")?;
    }
    let mut line = String::new();
    for r in &ds.records {
        use std::fmt::Write as _;
        line.clear();
        write!(line, "{}", r.word_length).unwrap();
        for x in r.mu.coords() {
            write!(line, ",{x:.16e}").unwrap();
        }
        if h.weighted {
            write!(line, ",{:.16e}", r.weight).unwrap();
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

pub fn write_dataset(ds: &OrbitDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(ds, file).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<OrbitDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(BufReader::new(file)).map_err(|e| match e {
        ReadError::Io(e) => Error::io(path, e),
        ReadError::Parse(p) => Error::parse(path, p),
        ReadError::Version(v) => Error::Version(v),
    })
}

#[derive(Debug)]
pub enum ReadError {
    Io(std::io::Error),
    Parse(ParseError),
    Version(String),
}

impl From<ParseError> for ReadError {
    fn from(e: ParseError) -> Self {
        ReadError::Parse(e)
    }
}

#[derive(Default)]
struct PartialHeader {
    group: Option<(GroupDescriptor, bool)>,
    rank: Option<(usize, usize)>,
    form: Option<String>,
    fingerprint: Option<String>,
    max_length: Option<u32>,
    dedup: Option<DedupMode>,
    weighted: bool,
    meta: Vec<(String, String)>,
}

impl PartialHeader {
    fn apply(&mut self, line: usize, key: &str, value: &str) -> std::result::Result<(), ParseError> {
        let bad = |what: &str| ParseError::new(line, format!("malformed {what} line '#{key} {value}'"));
        match key {
            "group" => {
                let (synthetic, desc) = match value.strip_prefix("synthetic") {
                    Some(rest) => (true, rest.trim()),
                    None => (false, value),
                };
                let g: GroupDescriptor = desc.parse().map_err(|_| bad("group"))?;
                self.group = Some((g, synthetic));
            }
            "rank" => self.rank = Some((value.parse().map_err(|_| bad("rank"))?, line)),
            "form" => self.form = Some(value.to_string()),
            "gens" => {
                if value.is_empty() || !value.chars().all(|c| c.is_ascii_hexdigit()) {
                    return Err(bad("gens"));
                }
                self.fingerprint = Some(value.to_string());
            }
            "maxlen" => self.max_length = Some(value.parse().map_err(|_| bad("maxlen"))?),
            "dedup" => self.dedup = Some(value.parse().map_err(|_| bad("dedup"))?),
            "weights" => {
                self.weighted = match value {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad("weights")),
                }
            }
            "meta" => {
                let (k, v) = value.split_once('=').ok_or_else(|| bad("meta"))?;
                self.meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            _ => return Err(ParseError::new(line, format!("unknown header key '#{key}'"))),
        }
        Ok(())
    }

    fn finish(self, line: usize) -> std::result::Result<DatasetHeader, ParseError> {
        let missing = |k: &str| ParseError::new(line, format!("header lacks '#{k}'"));
        let (group, synthetic) = self.group.ok_or_else(|| missing("group"))?;
        let (rank, rank_line) = self.rank.ok_or_else(|| missing("rank"))?;
        if rank != group.rank() {
            return Err(ParseError::new(
                rank_line,
                format!("rank {rank} does not match group {group} of rank {}", group.rank()),
            ));
        }
        let form = self.form.ok_or_else(|| missing("form"))?;
        if form != crate::chamber::FORM_LABEL {
            return Err(ParseError::new(line, format!("unsupported inner product '{form}'")));
        }
        Ok(DatasetHeader {
            group,
            synthetic,
            form,
            fingerprint: self.fingerprint.ok_or_else(|| missing("gens"))?,
            max_length: self.max_length.ok_or_else(|| missing("maxlen"))?,
            dedup: self.dedup.ok_or_else(|| missing("dedup"))?,
            weighted: self.weighted,
            meta: self.meta,
        })
    }
}

fn parse_record(
    rs: &RootSystem,
    weighted: bool,
    line: usize,
    text: &str,
) -> std::result::Result<OrbitRecord, ParseError> {
    let mut fields = text.split(',');
    let wl = fields.next().unwrap_or("");
    let word_length: u32 = wl
        .trim()
        .parse()
        .map_err(|_| ParseError::new(line, format!("bad word length '{wl}'")))?;
    let values = fields
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ParseError::new(line, format!("bad number '{t}'")))
        })
        .collect::<std::result::Result<Vec<f64>, _>>()?;
    let expected = rs.ambient_dim() + usize::from(weighted);
    if values.len() != expected {
        return Err(ParseError::new(
            line,
            format!("expected {expected} numeric fields, found {}", values.len()),
        ));
    }
    let mut values = values;
    let weight = if weighted { values.pop().unwrap() } else { 1.0 };
    if weight.is_nan() || weight <= 0.0 {
        return Err(ParseError::new(line, format!("nonpositive weight {weight}")));
    }
    let mu = ChamberVector::new(values);
    rs.check_vector(&mu).map_err(|e| ParseError::new(line, e.to_string()))?;
    let scale = mu.coords().iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    if rs.min_simple_pairing(&mu) < -CHAMBER_TOL * scale {
        return Err(ParseError::new(line, "record lies outside the closed chamber"));
    }
    Ok(OrbitRecord::new(rs, word_length, mu, weight))
}

pub fn read_dataset_from<R: BufRead>(reader: R) -> std::result::Result<OrbitDataset, ReadError> {
    let mut lines = reader.lines().enumerate();
    let first = match lines.next() {
        Some((_, l)) => l.map_err(ReadError::Io)?,
        None => return Err(ParseError::new(1, "empty file").into()),
    };
    let version = first
        .strip_prefix("#cpd ")
        .ok_or_else(|| ParseError::new(1, "missing '#cpd <version>' line"))?
        .trim();
    if version != FORMAT_VERSION.to_string() {
        return Err(ReadError::Version(version.to_string()));
    }

    let mut partial = PartialHeader::default();
    let mut header: Option<DatasetHeader> = None;
    let mut rs: Option<RootSystem> = None;
    let mut records = Vec::new();
    let mut last_line = 1;
    for (idx, l) in lines {
        let text = l.map_err(ReadError::Io)?;
        let line = idx + 1;
        last_line = line;
        if text.trim().is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix('#') {
            if header.is_some() {
                return Err(ParseError::new(line, "header line after the first record").into());
            }
            let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
            partial.apply(line, key, value.trim())?;
            continue;
        }
        if header.is_none() {
            let h = std::mem::take(&mut partial).finish(line)?;
            rs = Some(RootSystem::new(&h.group));
            header = Some(h);
        }
        let weighted = header.as_ref().unwrap().weighted;
        records.push(parse_record(rs.as_ref().unwrap(), weighted, line, &text)?);
    }
    let header = match header {
        Some(h) => h,
        None => partial.finish(last_line + 1)?,
    };
    Ok(OrbitDataset { header, records })
}
