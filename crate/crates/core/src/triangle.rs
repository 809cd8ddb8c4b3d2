//! Cumulative claims triangles: storage, index sets and CSV ingestion.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// How the numbers in an input file relate to cumulative claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Cumulative,
    Incremental,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cumulative" => Ok(Layout::Cumulative),
            "incremental" => Ok(Layout::Incremental),
            other => Err(Error::InvalidParameter(format!("unknown layout {other:?}"))),
        }
    }
}

/// Square run-off triangle of cumulative claims.
///
/// Row `i` holds development years `0..=I-i`; everything below the
/// anti-diagonal is unobserved and not stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimsTriangle {
    rows: Vec<Vec<f64>>,
}

/// Observed and future cells of a triangle, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleIndexSets {
    pub observed: Vec<(usize, usize)>,
    pub future: Vec<(usize, usize)>,
}

impl ClaimsTriangle {
    pub fn from_cumulative_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Degenerate("no accident years".into()));
        }
        let size = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size - i {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    size - i
                )));
            }
            for (j, &value) in row.iter().enumerate() {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(Error::NonPositive { i, j, value });
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn from_incremental_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cumulated = rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .scan(0.0, |acc, y| {
                        *acc += y;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Self::from_cumulative_rows(cumulated)
    }

    /// Index of the last accident year, `I` (equal to `J`).
    pub fn last(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn accident_years(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        i + j <= self.last()
    }

    /// Latest observed value `C_{i,I-i}` per accident year.
    pub fn anti_diagonal(&self) -> Vec<f64> {
        self.rows.iter().map(|r| *r.last().unwrap()).collect()
    }

    /// Copy with every cell multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {factor}")));
        }
        Self::from_cumulative_rows(
            self.rows
                .iter()
                .map(|r| r.iter().map(|v| v * factor).collect())
                .collect(),
        )
    }

    /// Row-wise differences, the inverse of cumulation.
    pub fn increments(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, &c)| if j == 0 { c } else { c - r[j - 1] })
                    .collect()
            })
            .collect()
    }

    pub fn index_sets(&self) -> TriangleIndexSets {
        let size = self.accident_years();
        let mut observed = Vec::new();
        let mut future = Vec::new();
        for i in 0..size {
            for j in 0..size {
                if self.is_observed(i, j) {
                    observed.push((i, j));
                } else {
                    future.push((i, j));
                }
            }
        }
        TriangleIndexSets { observed, future }
    }

    /// Cells carrying a one-step residual (`i+j <= I`, `j >= 1`), in
    /// row-major order by accident year. This is also the order of the
    /// claims part of the ABC summary vector.
    pub fn residual_cells(&self) -> Vec<(usize, usize)> {
        let last = self.last();
        (0..last)
            .flat_map(|i| (1..=last - i).map(move |j| (i, j)))
            .collect()
    }

    pub fn residual_count(&self) -> usize {
        let last = self.last();
        last * (last + 1) / 2
    }

    /// Observed cells in columns `0..=j` (the information set up to `j`).
    pub fn column_prefix(&self, j: usize) -> Vec<(usize, usize)> {
        let last = self.last();
        (0..=last)
            .flat_map(|i| (0..=j.min(last - i)).map(move |k| (i, k)))
            .collect()
    }

    /// Sum of column `j` over the accident years `0..rows`.
    pub(crate) fn column_sum(&self, j: usize, rows: usize) -> f64 {
        (0..rows).map(|i| self.rows[i][j]).sum()
    }

    pub fn load(path: impl AsRef<Path>, layout: Layout, scale: f64, has_header: bool) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read(file, layout, scale, has_header)
    }

    pub fn read<R: Read>(reader: R, layout: Layout, scale: f64, has_header: bool) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let mut grid: Vec<Vec<Option<f64>>> = Vec::new();
        let mut width = None;
        for (k, record) in rdr.records().enumerate() {
            let record = record?;
            let line = record.position().map_or(k + 1, |p| p.line() as usize);
            let expected = *width.get_or_insert(record.len());
            if record.len() != expected {
                return Err(Error::NotRectangular {
                    line,
                    found: record.len(),
                    expected,
                });
            }
            let cells = record
                .iter()
                .enumerate()
                .map(|(column, text)| {
                    if text.is_empty() {
                        Ok(None)
                    } else {
                        text.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                            line,
                            column: column + 1,
                            text: text.to_string(),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            grid.push(cells);
        }
        let width = width.ok_or_else(|| Error::Degenerate("input has no data rows".into()))?;
        if grid.len() != width {
            return Err(Error::NotSquare {
                accident_years: grid.len(),
                development_years: width,
            });
        }

        let last = width - 1;
        let mut rows = Vec::with_capacity(width);
        for (i, cells) in grid.into_iter().enumerate() {
            let mut row = Vec::with_capacity(width - i);
            for (j, cell) in cells.into_iter().enumerate() {
                match (cell, i + j <= last) {
                    (Some(v), true) => row.push(v * scale),
                    (None, true) => {
                        return Err(Error::BadMask {
                            i,
                            j,
                            problem: "is blank inside the observed region",
                        })
                    }
                    (Some(_), false) => {
                        return Err(Error::BadMask {
                            i,
                            j,
                            problem: "has a value below the anti-diagonal",
                        })
                    }
                    (None, false) => {}
                }
            }
            rows.push(row);
        }
        match layout {
            Layout::Cumulative => Self::from_cumulative_rows(rows),
            Layout::Incremental => Self::from_incremental_rows(rows),
        }
    }

    /// Writes the triangle as CSV with blank cells below the anti-diagonal.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let size = self.accident_years();
        let mut w = csv::WriterBuilder::new().flexible(false).from_writer(writer);
        for row in &self.rows {
            let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            fields.resize(size, String::new());
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }
}
