//! Reproducibility headers and the estimate file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use cpd_core::estimate::GrowthIndicatorEstimate;
use cpd_core::{ChamberVector, GroupDescriptor};

use crate::CliError;

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

/// `(key, value)` pairs naming the tool, every resolved option that can
/// change the output, and the digest of each input file. Output paths and
/// the thread count are left out so equal runs give equal bytes.
pub fn provenance<C: Serialize>(config: &C, inputs: &[(&str, &Path)]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = vec![("tool".to_string(), format!("cpd {}", env!("CARGO_PKG_VERSION")))];
    let value = serde_json::to_value(config).expect("config serializes");
    let fields: BTreeMap<String, Value> = match value {
        Value::Object(map) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    };
    for (k, v) in fields {
        if v.is_null() || matches!(&v, Value::Array(a) if a.is_empty()) {
            continue;
        }
        out.push((format!("config.{k}"), scalar(&v)));
    }
    for (name, path) in inputs {
        out.push((format!("input.{name}.sha256"), file_sha256(path)?));
    }
    Ok(out)
}

pub fn comment_block(pairs: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        writeln!(s, "# {k}={v}").unwrap();
    }
    s
}

/// Parsed estimate file: its summary and the zero-angle growth indicator.
pub struct EstimateFile {
    pub summary: BTreeMap<String, String>,
    pub psi: GrowthIndicatorEstimate,
}

impl EstimateFile {
    pub fn group(&self) -> Result<GroupDescriptor, CliError> {
        let g = self
            .summary
            .get("group")
            .ok_or_else(|| CliError::Format("estimate file has no `#summary group=` line".into()))?;
        g.parse().map_err(|e: cpd_core::Error| CliError::Format(e.to_string()))
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.summary.get(key).map(String::as_str) {
            None | Some("na") => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Format(format!("estimate summary `{key}={v}` is not a number"))),
        }
    }
}

pub fn read_estimate(path: &Path) -> Result<EstimateFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, msg: &str| CliError::Format(format!("{}: line {line}: {msg}", path.display()));
    let mut summary = BTreeMap::new();
    let mut columns: Option<usize> = None;
    let mut directions = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(rest) = line.strip_prefix("#summary ") {
            let (k, v) = rest.split_once('=').ok_or_else(|| bad(n, "summary line lacks `=`"))?;
            summary.insert(k.trim().to_string(), v.trim().to_string());
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let Some(width) = columns else {
            if fields.first() != Some(&"direction_index") || fields.len() < 5 {
                return Err(bad(n, "expected the `direction_index,...` table header"));
            }
            columns = Some(fields.len());
            continue;
        };
        if fields.len() != width {
            return Err(bad(n, &format!("expected {width} fields, found {}", fields.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(n, &format!("bad number `{s}`")));
        if num(fields[width - 3])? != 0.0 {
            continue;
        }
        let coords = fields[1..width - 3].iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
        directions.push(ChamberVector::new(coords));
        values.push(num(fields[width - 2])?);
    }
    if columns.is_none() || directions.is_empty() {
        return Err(CliError::Format(format!("{}: no growth indicator rows", path.display())));
    }
    let count = directions.len();
    Ok(EstimateFile {
        summary,
        psi: GrowthIndicatorEstimate {
            directions,
            values,
            cone_angles: Vec::new(),
            extrapolated: true,
            slopes: vec![Vec::new(); count],
            stderrs: vec![Vec::new(); count],
            window: (0.0, 0.0),
        },
    })
}
