//! CSV and bundle formats.
//!
//! Matrices are headerless numeric CSV. Data files are n×m with missing cells
//! written as `NA`; masks are 0/1.

use std::fs;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::cov_inputs::MaskedData;
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::sim::{GeneratedDataset, ModelSpec, NoiseMeta};

/// Which cell contents mark a value as missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingToken {
    /// Empty fields and `NA` both count as missing.
    #[default]
    Any,
    Empty,
    Na,
}

impl MissingToken {
    fn is_missing(self, cell: &str) -> bool {
        match self {
            MissingToken::Any => cell.is_empty() || cell == "NA",
            MissingToken::Empty => cell.is_empty(),
            MissingToken::Na => cell == "NA",
        }
    }
}

impl std::str::FromStr for MissingToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any" => Ok(Self::Any),
            "empty" => Ok(Self::Empty),
            "na" | "NA" => Ok(Self::Na),
            _ => Err(Error::Config(format!("unknown missing token {s:?} (any, empty, na)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DataCsvOptions {
    pub missing: MissingToken,
    pub header: bool,
}

/// Raw table: values (0 where missing), row-major mask, optional header.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub values: Mat<f64>,
    pub mask: Vec<bool>,
    pub header: Option<Vec<String>>,
}

fn reader(path: &Path, header: bool) -> Result<csv::Reader<fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?)
}

fn parse_records<R: std::io::Read>(
    rdr: &mut csv::Reader<R>,
    first_data_row: usize,
    mut cell: impl FnMut(usize, usize, &str) -> Result<()>,
) -> Result<(usize, usize)> {
    let mut width = None;
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + first_data_row;
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Parse {
                    row: line,
                    column: rec.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", rec.len()),
                })
            }
            _ => {}
        }
        for (j, c) in rec.iter().enumerate() {
            cell(line, j, c)?;
        }
        rows += 1;
    }
    Ok((rows, width.unwrap_or(0)))
}

fn parse_number(row: usize, col: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        row,
        column: col + 1,
        message: format!("cannot parse {cell:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column: col + 1,
            message: format!("non-finite value {cell:?}"),
        });
    }
    Ok(v)
}

/// Reads a data table. Row and column numbers in errors are 1-based file coordinates.
pub fn read_data_csv(path: &Path, opts: DataCsvOptions) -> Result<DataTable> {
    let mut rdr = reader(path, opts.header)?;
    let header = if opts.header {
        Some(rdr.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };
    let mut vals = Vec::new();
    let mut mask = Vec::new();
    let first = if opts.header { 2 } else { 1 };
    let (n, m) = parse_records(&mut rdr, first, |row, col, c| {
        if opts.missing.is_missing(c) {
            vals.push(0.0);
            mask.push(false);
        } else {
            vals.push(parse_number(row, col, c)?);
            mask.push(true);
        }
        Ok(())
    })?;
    if n == 0 || m == 0 {
        return Err(Error::Input(format!("{} contains no data", path.display())));
    }
    Ok(DataTable {
        values: Mat::from_fn(n, m, |i, j| vals[i * m + j]),
        mask,
        header,
    })
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Writes observed values, `NA` for unobserved cells.
pub fn write_data_csv(path: &Path, data: &MaskedData) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..data.nrows() {
        let row: Vec<String> = (0..data.ncols())
            .map(|j| if data.observed(i, j) { fmt(data.x()[(i, j)]) } else { "NA".into() })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mask_csv(path: &Path, data: &MaskedData) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..data.nrows() {
        w.write_record(data.row_mask(i).iter().map(|&b| if b { "1" } else { "0" }))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mask_csv(path: &Path) -> Result<(Vec<bool>, usize, usize)> {
    let mut rdr = reader(path, false)?;
    let mut mask = Vec::new();
    let (n, m) = parse_records(&mut rdr, 1, |row, col, c| {
        mask.push(match c {
            "1" | "true" => true,
            "0" | "false" => false,
            _ => {
                return Err(Error::Parse {
                    row,
                    column: col + 1,
                    message: format!("mask cell {c:?} is not 0/1"),
                })
            }
        });
        Ok(())
    })?;
    Ok((mask, n, m))
}

pub fn write_matrix_csv(path: &Path, s: &SymmetricMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..s.dim() {
        w.write_record((0..s.dim()).map(|j| fmt(s.get(i, j))))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a square symmetric matrix; entries may disagree with their transpose by at most `sym_tol`.
pub fn read_matrix_csv(path: &Path, sym_tol: f64) -> Result<SymmetricMatrix> {
    let mut rdr = reader(path, false)?;
    let mut vals = Vec::new();
    let (n, m) = parse_records(&mut rdr, 1, |row, col, c| {
        vals.push(parse_number(row, col, c)?);
        Ok(())
    })?;
    if n != m || n == 0 {
        return Err(Error::Input(format!("{} is {n}×{m}, expected a nonempty square matrix", path.display())));
    }
    let rows: Vec<Vec<f64>> = vals.chunks(m).map(<[f64]>::to_vec).collect();
    SymmetricMatrix::from_rows_checked(&rows, sym_tol)
}

/// Contents of `meta.json` in a dataset bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub model: ModelSpec,
    pub noise: NoiseMeta,
    /// Model for the row covariance B (Kronecker-sum data only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_model: Option<ModelSpec>,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

pub const BUNDLE_FILES: [&str; 5] = ["data.csv", "mask.csv", "A.csv", "theta_star.csv", "meta.json"];

/// Writes `data.csv`, `mask.csv`, `A.csv`, `theta_star.csv` and `meta.json` into `dir`.
pub fn write_bundle(dir: &Path, ds: &GeneratedDataset, model: ModelSpec, b_model: Option<ModelSpec>) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_data_csv(&dir.join("data.csv"), &ds.data)?;
    write_mask_csv(&dir.join("mask.csv"), &ds.data)?;
    write_matrix_csv(&dir.join("A.csv"), &ds.a)?;
    write_matrix_csv(&dir.join("theta_star.csv"), &ds.theta_star)?;
    let meta = BundleMeta {
        model,
        noise: ds.noise.clone(),
        b_model,
        n: ds.data.nrows(),
        m: ds.data.ncols(),
        seed: ds.seed,
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// A bundle read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub meta: BundleMeta,
    pub data: MaskedData,
    pub a: SymmetricMatrix,
    pub theta_star: SymmetricMatrix,
}

impl Bundle {
    pub fn is_bundle(dir: &Path) -> bool {
        dir.is_dir() && BUNDLE_FILES.iter().all(|f| dir.join(f).is_file())
    }
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    let meta: BundleMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    let table = read_data_csv(
        &dir.join("data.csv"),
        DataCsvOptions {
            missing: MissingToken::Na,
            header: false,
        },
    )?;
    let (mask, n, m) = read_mask_csv(&dir.join("mask.csv"))?;
    if (n, m) != (table.values.nrows(), table.values.ncols()) || (n, m) != (meta.n, meta.m) {
        return Err(Error::Input("bundle data, mask and meta dimensions disagree".into()));
    }
    if mask != table.mask {
        return Err(Error::Input("mask.csv disagrees with the NA cells of data.csv".into()));
    }
    let zeta = match &meta.noise {
        NoiseMeta::MissingData { zeta } => zeta.clone(),
        NoiseMeta::KronSum { .. } => vec![1.0; m],
    };
    let data = MaskedData::new(table.values, mask, zeta)?;
    let tol = 1e-8;
    Ok(Bundle {
        a: read_matrix_csv(&dir.join("A.csv"), tol)?,
        theta_star: read_matrix_csv(&dir.join("theta_star.csv"), tol)?,
        meta,
        data,
    })
}
