//! Source catalogs in the SExtractor ASCII_HEAD layout.
//!
//! Header lines look like `#   2 X_IMAGE   Object position along x [pixel]`:
//! a 1-based column index and a column name. A name owns every column up to
//! the next declared index, so vector-valued columns are supported. Other
//! `#` lines are comments. Pixel coordinates are 1-based on disk and 0-based
//! in memory.

use std::io::BufRead;

use crate::error::{Error, Result};

/// One catalogued detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceRecord {
    pub id: u64,
    /// 0-based pixel coordinates.
    pub x: f64,
    pub y: f64,
    /// Instrumental magnitude; smaller is brighter.
    pub mag: f64,
    /// Extraction flag bitmask, carried for reporting only.
    pub flags: u32,
}

pub const REQUIRED_COLUMNS: [&str; 5] = ["NUMBER", "X_IMAGE", "Y_IMAGE", "MAG_BEST", "FLAGS"];

const DESCRIPTIONS: [&str; 5] = [
    "Running object number",
    "Object position along x                                    [pixel]",
    "Object position along y                                    [pixel]",
    "Best of MAG_AUTO and MAG_ISOCOR                            [mag]",
    "Extraction flags",
];

/// Raw rows of a catalog with its declared column layout.
#[derive(Debug, Clone)]
pub struct CatalogTable {
    /// `(name, first 0-based column)`, in column order.
    columns: Vec<(String, usize)>,
    rows: Vec<(usize, Vec<String>)>,
}

impl CatalogTable {
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut columns: Vec<(String, usize)> = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Format(format!("catalog line {lineno}: {e}")))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let mut toks = rest.split_whitespace();
                if let (Some(idx), Some(name)) = (toks.next(), toks.next()) {
                    if let Ok(idx) = idx.parse::<usize>() {
                        if idx == 0 {
                            return Err(Error::Format(format!("catalog line {lineno}: column index 0")));
                        }
                        columns.push((name.to_string(), idx - 1));
                    }
                }
                continue;
            }
            rows.push((lineno, trimmed.split_whitespace().map(str::to_string).collect()));
        }
        columns.sort_by_key(|c| c.1);
        Ok(Self { columns, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().find(|c| c.0 == name).map(|c| c.1)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Parses column `name` of every row.
    pub fn column<T: std::str::FromStr>(&self, name: &str) -> Result<Vec<T>> {
        let col = self
            .column_index(name)
            .ok_or_else(|| Error::Format(format!("catalog: missing required column {name}")))?;
        self.rows
            .iter()
            .map(|(lineno, fields)| {
                let raw = fields.get(col).ok_or_else(|| {
                    Error::Format(format!("catalog line {lineno}: no field for column {name}"))
                })?;
                raw.parse::<T>().map_err(|_| {
                    Error::Format(format!("catalog line {lineno}: {name} value `{raw}` is not numeric"))
                })
            })
            .collect()
    }
}

pub fn parse_catalog(reader: impl BufRead) -> Result<Vec<SourceRecord>> {
    records_from_table(&CatalogTable::parse(reader)?)
}

pub fn parse_catalog_str(text: &str) -> Result<Vec<SourceRecord>> {
    parse_catalog(text.as_bytes())
}

pub fn read_catalog(path: &std::path::Path) -> Result<Vec<SourceRecord>> {
    records_from_table(&read_catalog_table(path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// The raw table, for callers that need columns beyond the standard five.
pub fn read_catalog_table(path: &std::path::Path) -> Result<CatalogTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    CatalogTable::parse(std::io::BufReader::new(file))
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn records_from_table(table: &CatalogTable) -> Result<Vec<SourceRecord>> {
    for name in REQUIRED_COLUMNS {
        if table.column_index(name).is_none() {
            return Err(Error::Format(format!("catalog: missing required column {name}")));
        }
    }
    let ids: Vec<u64> = table.column("NUMBER")?;
    let xs: Vec<f64> = table.column("X_IMAGE")?;
    let ys: Vec<f64> = table.column("Y_IMAGE")?;
    let mags: Vec<f64> = table.column("MAG_BEST")?;
    let flags: Vec<u32> = table.column("FLAGS")?;
    Ok((0..ids.len())
        .map(|i| SourceRecord {
            id: ids[i],
            x: xs[i] - 1.0,
            y: ys[i] - 1.0,
            mag: mags[i],
            flags: flags[i],
        })
        .collect())
}

pub fn write_catalog(records: &[SourceRecord]) -> String {
    write_catalog_with(records, &[])
}

/// Writes the five standard columns followed by extra named numeric columns
/// (`extra[k].1[i]` is row `i` of extra column `k`).
pub fn write_catalog_with(records: &[SourceRecord], extra: &[(&str, Vec<f64>)]) -> String {
    let mut out = String::new();
    for (i, (name, desc)) in REQUIRED_COLUMNS.iter().zip(DESCRIPTIONS).enumerate() {
        out.push_str(&format!("# {:>3} {:<22} {desc}\n", i + 1, name));
    }
    for (k, (name, _)) in extra.iter().enumerate() {
        out.push_str(&format!("# {:>3} {name}\n", REQUIRED_COLUMNS.len() + k + 1));
    }
    for (i, r) in records.iter().enumerate() {
        out.push_str(&format!(
            "{:>10} {} {} {} {:>3}",
            r.id,
            r.x + 1.0,
            r.y + 1.0,
            r.mag,
            r.flags
        ));
        for (_, values) in extra {
            out.push_str(&format!(" {}", values[i]));
        }
        out.push('\n');
    }
    out
}
