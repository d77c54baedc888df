//! CSV and JSON artifacts. Floats use the shortest representation that
//! round-trips, so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::loewner::{FrequencyDataSet, SvdReport};
use crate::rom::{ErrorReport, PoleReport, ReducedModel};

pub const SAMPLES_CSV: &str = "samples.csv";
pub const SINGVALS_CSV: &str = "singvals.csv";
pub const POLES_CSV: &str = "poles.csv";
pub const ERROR_CSV: &str = "error.csv";
pub const ROM_JSON: &str = "rom.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SWEEP_CSV: &str = "sweep.csv";

pub fn fmt_f64(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| "null".into())
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

/// Writes `header` and `rows` as comma-separated text.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(header).map_err(csv_error(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Reads a CSV with a header into rows of raw fields.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header = r.headers().map_err(csv_error(path))?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_error(path))?;
    Ok((header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    w.write_all(b"\n").map_err(io_error(path))?;
    w.flush().map_err(io_error(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })
}

pub fn write_samples(path: &Path, freqs: &[f64], data: &FrequencyDataSet) -> Result<(), CliError> {
    let rows = freqs.iter().zip(data.iter()).map(|(&f, (s, h))| {
        vec![fmt_f64(f), fmt_f64(s.re), fmt_f64(s.im), fmt_f64(h.re), fmt_f64(h.im)]
    });
    write_csv(path, &["freq_hz", "s_re", "s_im", "H_re", "H_im"], rows)
}

pub fn write_singvals<T>(path: &Path, svd: &SvdReport<T>) -> Result<(), CliError> {
    let (row_n, col_n) = (svd.sigma_row_normalized(), svd.sigma_col_normalized());
    let len = svd.sigma_row.len().max(svd.sigma_col.len());
    let cell = |v: &[f64], i: usize| v.get(i).map(|&x| fmt_f64(x)).unwrap_or_default();
    let rows = (0..len).map(|i| {
        vec![
            (i + 1).to_string(),
            cell(&svd.sigma_row, i),
            cell(&svd.sigma_col, i),
            cell(&row_n, i),
            cell(&col_n, i),
        ]
    });
    write_csv(
        path,
        &["index", "sigma_row", "sigma_col", "sigma_row_norm", "sigma_col_norm"],
        rows,
    )
}

pub fn write_poles(path: &Path, report: &PoleReport) -> Result<(), CliError> {
    let rows = report.poles.iter().map(|p| vec![fmt_f64(p.re), fmt_f64(p.im)]);
    write_csv(path, &["pole_re", "pole_im"], rows)
}

pub fn write_errors(path: &Path, freqs: &[f64], report: &ErrorReport) -> Result<(), CliError> {
    let rows = freqs.iter().zip(&report.abs).zip(&report.rel).map(|((&f, &a), r)| {
        vec![fmt_f64(f), fmt_f64(a), r.map(fmt_f64).unwrap_or_default()]
    });
    write_csv(path, &["freq_hz", "abs_err", "rel_err"], rows)
}

/// `rom.json` layout: matrices as nested row-major arrays, `B` a column, `C` a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomFile {
    pub order: usize,
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
}

fn rows_of(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn mat_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Mat<f64>, String> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(format!("{what} has rows of unequal length"));
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl RomFile {
    pub fn from_model(m: &ReducedModel<f64>) -> Self {
        Self {
            order: m.order(),
            e: rows_of(m.e()),
            a: rows_of(m.a()),
            b: m.b().iter().map(|&x| vec![x]).collect(),
            c: vec![m.c().to_vec()],
        }
    }

    pub fn to_model(&self) -> Result<ReducedModel<f64>, String> {
        let e = mat_from_rows(&self.e, "E")?;
        let a = mat_from_rows(&self.a, "A")?;
        if self.b.iter().any(|r| r.len() != 1) {
            return Err("B must be a column".into());
        }
        if self.c.len() != 1 {
            return Err("C must be a single row".into());
        }
        let b = self.b.iter().map(|r| r[0]).collect();
        let model = ReducedModel::new(e, a, b, self.c[0].clone()).map_err(|e| e.to_string())?;
        if model.order() != self.order {
            return Err(format!("order {} does not match matrix size {}", self.order, model.order()));
        }
        Ok(model)
    }
}

/// Joins a file name onto a directory, creating the directory on first use.
pub fn artifact(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    Ok(dir.join(name))
}
