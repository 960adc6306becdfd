//! CSV tables, feature group files, reference vectors and the one-hot ingest path.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use shear_core::value::{compute_reference, FeatureGroup, FeatureKind, GroupMap, RefPolicy, ReferenceVector};

use crate::error::{Error, Result};

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), message: message.into() }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = open_csv(path)?;
        let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(c, field)| {
                    field.trim().parse::<f64>().map_err(|_| {
                        format_err(path, format!("row {}, column {:?}: {field:?} is not a number", r + 1, columns[c]))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Removes `label` and returns it as a separate vector.
    pub fn split_label(mut self, label: &str) -> Result<(Table, Vec<f64>)> {
        let c = self
            .column_index(label)
            .ok_or_else(|| Error::Config(format!("label column {label:?} not found")))?;
        self.columns.remove(c);
        let labels = self.rows.iter_mut().map(|r| r.remove(c)).collect();
        Ok((self, labels))
    }

    /// Drops `label` when present.
    pub fn without(self, label: Option<&str>) -> Table {
        match label {
            Some(l) if self.column_index(l).is_some() => self.split_label(l).map(|(t, _)| t).unwrap(),
            _ => self,
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| format_err(path, format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads and validates a group map for `input_dim` model inputs.
pub fn read_groups(path: &Path, input_dim: usize) -> Result<GroupMap> {
    let groups: GroupMap = read_json(path)?;
    groups.validate(input_dim)?;
    Ok(groups)
}

/// Group map from a file, or one feature per column named after the table header.
pub fn groups_or_singletons(path: Option<&Path>, columns: &[String]) -> Result<GroupMap> {
    match path {
        Some(p) => read_groups(p, columns.len()),
        None => {
            let g = GroupMap::singletons(columns);
            g.validate(columns.len())?;
            Ok(g)
        }
    }
}

/// References from background rows: continuous columns take the mean; categorical
/// groups take `categorical`. A multi-column categorical group under the mode policy
/// takes its most frequent column pattern, ties going to the smallest pattern.
pub fn reference_for(rows: &[Vec<f64>], groups: &GroupMap, categorical: RefPolicy) -> Result<ReferenceVector> {
    let width = rows.first().map(Vec::len).unwrap_or(0);
    let policy = groups.column_policies(width, categorical);
    let mut reference = compute_reference(rows, &policy)?;
    if categorical == RefPolicy::Mode {
        for g in groups.features.iter().filter(|g| g.kind == FeatureKind::Categorical && g.columns.len() > 1) {
            let mut counts: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
            for r in rows {
                let key: Vec<u64> = g.columns.iter().map(|&c| r[c].to_bits()).collect();
                *counts.entry(key).or_default() += 1;
            }
            let mut best: Option<(&Vec<u64>, usize)> = None;
            for (k, &n) in &counts {
                let smaller = |a: &[u64], b: &[u64]| {
                    a.iter().map(|&x| f64::from_bits(x)).partial_cmp(b.iter().map(|&x| f64::from_bits(x)))
                        == Some(std::cmp::Ordering::Less)
                };
                match best {
                    Some((bk, bn)) if n < bn || (n == bn && !smaller(k, bk)) => {}
                    _ => best = Some((k, n)),
                }
            }
            if let Some((k, _)) = best {
                for (&c, &bits) in g.columns.iter().zip(k) {
                    reference.values[c] = f64::from_bits(bits);
                }
            }
        }
    }
    Ok(reference)
}

/// A raw table with categorical text columns expanded to one-hot indicators.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub table: Table,
    pub labels: Option<Vec<f64>>,
    pub groups: GroupMap,
}

/// Reads a CSV whose `categorical` columns hold arbitrary text. Each such column
/// becomes one indicator column per distinct value, named `column=value` in sorted
/// value order, and one categorical feature group. Other columns must be numeric.
pub fn ingest_one_hot(path: &Path, label: Option<&str>, categorical: &[String]) -> Result<Ingested> {
    let mut rdr = open_csv(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    for c in categorical {
        if !header.contains(c) {
            return Err(Error::Config(format!("categorical column {c:?} not found")));
        }
    }
    let label_col = match label {
        Some(l) => Some(header.iter().position(|h| h == l).ok_or_else(|| Error::Config(format!("label column {l:?} not found")))?),
        None => None,
    };
    let raw: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let is_cat: Vec<bool> = header.iter().map(|h| categorical.contains(h)).collect();
    let levels: Vec<Vec<String>> = (0..header.len())
        .map(|c| {
            if is_cat[c] {
                raw.iter().map(|r| r[c].trim().to_string()).collect::<BTreeSet<_>>().into_iter().collect()
            } else {
                Vec::new()
            }
        })
        .collect();

    let mut columns = Vec::new();
    let mut features = Vec::new();
    for c in (0..header.len()).filter(|&c| Some(c) != label_col) {
        let start = columns.len();
        if is_cat[c] {
            columns.extend(levels[c].iter().map(|v| format!("{}={v}", header[c])));
        } else {
            columns.push(header[c].clone());
        }
        let kind = if is_cat[c] { FeatureKind::Categorical } else { FeatureKind::Continuous };
        features.push(FeatureGroup { name: header[c].clone(), columns: (start..columns.len()).collect(), kind });
    }

    let mut rows = Vec::with_capacity(raw.len());
    let mut labels = label_col.map(|_| Vec::with_capacity(raw.len()));
    let number = |r: usize, c: usize, s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format_err(path, format!("row {}, column {:?}: {s:?} is not a number", r + 1, header[c])))
    };
    for (r, rec) in raw.iter().enumerate() {
        let mut row = Vec::with_capacity(columns.len());
        for c in 0..header.len() {
            if Some(c) == label_col {
                labels.as_mut().unwrap().push(number(r, c, &rec[c])?);
            } else if is_cat[c] {
                let v = rec[c].trim();
                row.extend(levels[c].iter().map(|l| if l == v { 1.0 } else { 0.0 }));
            } else {
                row.push(number(r, c, &rec[c])?);
            }
        }
        rows.push(row);
    }
    let groups = GroupMap { features };
    groups.validate(columns.len())?;
    Ok(Ingested { table: Table { columns, rows }, labels, groups })
}

/// Resolves `p` against `base` unless it is absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
