//! File formats: numeric CSV input, label files, membership and curve tables,
//! and JSON reports.
//!
//! CSV is comma separated with an optional single header row; LF and CRLF
//! line endings are both accepted. Floats are written in Rust's shortest
//! round-trip form, so every table reads back to the exact values written.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use bbc_core::ensemble::MembershipMatrix;
use bbc_core::DataMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: no such file", .0.display())]
    NotFound(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] bbc_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            IoError::NotFound(path.to_path_buf())
        } else {
            IoError::Io { path: path.to_path_buf(), source }
        }
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn csv_error(e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => IoError::Io { path: PathBuf::new(), source },
        kind => IoError::Parse { line, message: format!("{kind:?}") },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// First line is a header.
    pub header: bool,
    /// Zero-based column holding class labels, excluded from the features.
    pub label_column: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    /// Row ids are `0..n` in file order.
    pub data: DataMatrix,
    /// Feature column names, when the file had a header.
    pub columns: Option<Vec<String>>,
    /// Raw label cells, when a label column was requested.
    pub labels: Option<Vec<String>>,
}

pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<LoadedCsv> {
    read_csv(BufReader::new(open(path)?), opts)
}

pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut columns = None;
    if opts.header {
        match records.next() {
            Some(rec) => {
                let rec = rec.map_err(csv_error)?;
                columns = Some(
                    rec.iter()
                        .enumerate()
                        .filter(|(c, _)| Some(*c) != opts.label_column)
                        .map(|(_, v)| v.trim().to_string())
                        .collect(),
                );
            }
            None => return Err(IoError::Parse { line: 1, message: "empty file".into() }),
        }
    }
    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        // a trailing blank line parses as one empty field
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if let Some(w) = width {
            if rec.len() != w {
                return Err(IoError::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", rec.len()),
                });
            }
        } else {
            if let Some(c) = opts.label_column {
                if c >= rec.len() {
                    return Err(IoError::Parse {
                        line,
                        message: format!("label column {c} but only {} fields", rec.len()),
                    });
                }
            }
            width = Some(rec.len());
        }
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == opts.label_column {
                labels.push(cell.trim().to_string());
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| IoError::Parse {
                line,
                message: format!("field {} is not a number: {cell:?}", c + 1),
            })?;
            if !v.is_finite() {
                return Err(IoError::Parse {
                    line,
                    message: format!("field {} is not finite: {cell:?}", c + 1),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    let width = width.ok_or(IoError::Parse {
        line: if opts.header { 2 } else { 1 },
        message: "no data rows".into(),
    })?;
    let cols = width - usize::from(opts.label_column.is_some());
    if cols == 0 {
        return Err(IoError::Format("no feature columns".into()));
    }
    let data = DataMatrix::new(rows, cols, values)?.with_row_ids((0..rows).collect())?;
    Ok(LoadedCsv {
        data,
        columns,
        labels: opts.label_column.map(|_| labels),
    })
}

/// Maps label strings to `0..classes` in order of first appearance.
pub fn encode_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut names: Vec<String> = Vec::new();
    let codes = raw
        .iter()
        .map(|s| match names.iter().position(|n| n == s) {
            Some(i) => i,
            None => {
                names.push(s.clone());
                names.len() - 1
            }
        })
        .collect();
    (codes, names)
}

/// A one-column label file with a `label` header.
pub fn write_labels<W: Write>(mut w: W, labels: &[usize]) -> Result<()> {
    let mut out = String::from("label\n");
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    w.write_all(out.as_bytes())
        .map_err(|source| IoError::Io { path: PathBuf::new(), source })
}

/// Reads one column of labels; a first line that is not an integer is taken
/// as a header.
pub fn load_labels(path: &Path, column: usize) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(open(path)?));
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let cell = rec.get(column).ok_or_else(|| IoError::Parse {
            line,
            message: format!("no column {column}"),
        })?;
        if i == 0 && cell.trim().parse::<i64>().is_err() {
            continue;
        }
        labels.push(cell.trim().to_string());
    }
    if labels.is_empty() {
        return Err(IoError::Parse { line: 1, message: "no labels".into() });
    }
    Ok(labels)
}

/// Numeric CSV with header `x1..xp`.
pub fn write_data<W: Write>(w: W, data: &DataMatrix) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let header: Vec<String> = (1..=data.cols()).map(|j| format!("x{j}")).collect();
    wtr.write_record(&header).map_err(csv_error)?;
    for row in data.iter_rows() {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_error)?;
    }
    wtr.flush().map_err(|source| IoError::Io { path: PathBuf::new(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// From the file extension; JSON unless it is `.csv`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// A report with a tabular CSV form.
pub trait CsvTable: Sized {
    fn write_csv<W: Write>(&self, w: W) -> Result<()>;
    fn read_csv<R: Read>(r: R) -> Result<Self>;
}

pub fn save_report<T: Serialize + CsvTable>(report: &T, path: &Path, format: Format) -> Result<()> {
    let mut w = create(path)?;
    match format {
        Format::Json => write_json(&mut w, report)?,
        Format::Csv => report.write_csv(&mut w)?,
    }
    w.flush().map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn load_report<T: DeserializeOwned + CsvTable>(path: &Path, format: Format) -> Result<T> {
    let r = BufReader::new(open(path)?);
    match format {
        Format::Json => serde_json::from_reader(r).map_err(json_error),
        Format::Csv => T::read_csv(r),
    }
}

fn json_error(e: serde_json::Error) -> IoError {
    IoError::Parse { line: e.line() as u64, message: e.to_string() }
}

/// Pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(json_error)?;
    w.write_all(b"\n")
        .map_err(|source| IoError::Io { path: PathBuf::new(), source })
}

pub fn save_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_json(&mut w, value)?;
    w.flush().map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(BufReader::new(open(path)?)).map_err(json_error)
}

/// Memberships keyed by row id: columns `id, u0 .. u{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipTable {
    pub k: usize,
    pub ids: Vec<usize>,
    /// `ids.len() × k`, row-major.
    pub u: Vec<f64>,
}

impl MembershipTable {
    pub fn new(k: usize, ids: Vec<usize>, u: Vec<f64>) -> Result<Self> {
        if k == 0 || u.len() != ids.len() * k {
            return Err(IoError::Format(format!(
                "{} membership values for {} rows and k = {k}",
                u.len(),
                ids.len()
            )));
        }
        Ok(Self { k, ids, u })
    }

    pub fn from_membership(m: &MembershipMatrix, ids: Vec<usize>) -> Result<Self> {
        Self::new(m.k, ids, m.u.clone())
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.u[i * self.k..(i + 1) * self.k]
    }
}

impl CsvTable for MembershipTable {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string()];
        header.extend((0..self.k).map(|j| format!("u{j}")));
        wtr.write_record(&header).map_err(csv_error)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.to_string()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&rec).map_err(csv_error)?;
        }
        wtr.flush().map_err(|source| IoError::Io { path: PathBuf::new(), source })
    }

    fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers().map_err(csv_error)?.clone();
        if header.get(0) != Some("id") || header.len() < 2 {
            return Err(IoError::Parse {
                line: 1,
                message: "membership header must be id,u0,...".into(),
            });
        }
        let k = header.len() - 1;
        let mut ids = Vec::new();
        let mut u = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |what: &str| IoError::Parse { line, message: format!("invalid {what}") };
            ids.push(rec[0].trim().parse().map_err(|_| bad("id"))?);
            for cell in rec.iter().skip(1) {
                u.push(cell.trim().parse().map_err(|_| bad("membership"))?);
            }
        }
        Self::new(k, ids, u)
    }
}

/// One point of a curve in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub dataset: String,
    #[serde(rename = "K")]
    pub k: usize,
    /// Empty for measures that do not depend on the prior scale.
    pub s: Option<f64>,
    pub measure: String,
    /// Empty where the measure is undefined.
    pub value: Option<f64>,
}

/// Long-format curves: `dataset, K, s, measure, value`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

impl CsvTable for CurveTable {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wtr.write_record(["dataset", "K", "s", "measure", "value"])
            .map_err(csv_error)?;
        for row in &self.rows {
            wtr.serialize(row).map_err(csv_error)?;
        }
        wtr.flush().map_err(|source| IoError::Io { path: PathBuf::new(), source })
    }

    fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_error)?;
        Ok(Self { rows })
    }
}

/// Chosen K per criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(rename = "K_by_mean_entropy")]
    pub k_by_mean_entropy: Option<usize>,
    #[serde(rename = "K_by_worst_pair")]
    pub k_by_worst_pair: Option<usize>,
    #[serde(rename = "silhouette_K")]
    pub silhouette_k: Option<usize>,
    #[serde(rename = "gap_K")]
    pub gap_k: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(header: bool) -> CsvOptions {
        CsvOptions { header, label_column: None }
    }

    #[test]
    fn reads_single_row() {
        let l = read_csv("1.0,2.0\n".as_bytes(), &opts(false)).unwrap();
        assert_eq!((l.data.rows(), l.data.cols()), (1, 2));
        assert_eq!(l.data.row(0), [1.0, 2.0]);
    }

    #[test]
    fn crlf_and_header() {
        let l = read_csv("a,b\r\n1,2\r\n3,4\r\n".as_bytes(), &opts(true)).unwrap();
        assert_eq!(l.data.values(), [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(l.columns.unwrap(), ["a", "b"]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = read_csv("a,b\n".as_bytes(), &opts(false)).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 1, .. }), "{e}");
        let e = read_csv("1,2\n3\n".as_bytes(), &opts(false)).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 2, .. }), "{e}");
        let e = read_csv("x,y\n1,2\n3,inf\n".as_bytes(), &opts(true)).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 3, .. }), "{e}");
        assert!(read_csv("".as_bytes(), &opts(false)).is_err());
        assert!(read_csv("x,y\n".as_bytes(), &opts(true)).is_err());
    }

    #[test]
    fn label_column_is_excluded() {
        let o = CsvOptions { header: true, label_column: Some(1) };
        let l = read_csv("a,cls,b\n1,x,2\n3,y,4\n5,x,6\n".as_bytes(), &o).unwrap();
        assert_eq!(l.data.cols(), 2);
        assert_eq!(l.columns.unwrap(), ["a", "b"]);
        let (codes, names) = encode_labels(&l.labels.unwrap());
        assert_eq!(codes, [0, 1, 0]);
        assert_eq!(names, ["x", "y"]);
    }

    #[test]
    fn empty_membership_is_header_only() {
        let t = MembershipTable::new(2, vec![], vec![]).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "id,u0,u1\n");
    }

    #[test]
    fn membership_layout() {
        let t = MembershipTable::new(2, vec![0, 1, 2], vec![1.0, 0.0, 0.25, 0.75, 0.5, 0.5]).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "id,u0,u1\n0,1,0\n1,0.25,0.75\n2,0.5,0.5\n");
        assert_eq!(MembershipTable::read_csv(text.as_bytes()).unwrap(), t);
    }
}
