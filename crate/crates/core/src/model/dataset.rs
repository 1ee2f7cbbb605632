use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::graph::{DagSpec, NodeKind};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("columns {found:?} do not match the graph nodes {expected:?}")]
    ColumnMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("line {line}, column `{column}`: cannot parse `{value}`")]
    Parse { line: usize, column: String, value: String },
    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },
    #[error("row {row}, column `{column}`: level {value} outside 1..={levels}")]
    LevelOutOfRange { row: usize, column: String, value: f64, levels: usize },
    #[error("row {row} has {found} values, expected {expected}")]
    RowLength { row: usize, expected: usize, found: usize },
    #[error("dataset has no rows")]
    Empty,
}

/// Row-major table of node values. Continuous cells are reals, ordinal and
/// binary cells are integer levels `1..=K` stored as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(columns: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, DataError> {
        let d = columns.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(DataError::RowLength { row: i, expected: d, found: r.len() });
            }
            values.extend_from_slice(r);
        }
        Ok(Dataset { columns, values })
    }

    /// Builds from a flat row-major buffer.
    pub fn from_flat(columns: Vec<String>, values: Vec<f64>) -> Self {
        assert!(!columns.is_empty() && values.len().is_multiple_of(columns.len()));
        Dataset { columns, values }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.columns.len().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.width();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.columns.iter().position(|c| c == name).map(|j| self.column(j))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Reorders the columns to the node order of `spec` and checks every cell
    /// against its node type.
    pub fn aligned(&self, spec: &DagSpec) -> Result<Dataset, DataError> {
        let expected: Vec<String> = spec.nodes().iter().map(|n| n.name.clone()).collect();
        let mut sorted_found = self.columns.clone();
        sorted_found.sort();
        let mut sorted_expected = expected.clone();
        sorted_expected.sort();
        if sorted_found != sorted_expected {
            return Err(DataError::ColumnMismatch { expected, found: self.columns.clone() });
        }
        let perm: Vec<usize> = expected
            .iter()
            .map(|name| self.columns.iter().position(|c| c == name).expect("checked"))
            .collect();
        let mut values = Vec::with_capacity(self.values.len());
        for (i, row) in self.rows().enumerate() {
            for (j, &src) in perm.iter().enumerate() {
                let v = row[src];
                check_cell(spec.node(j).kind, v, i, &expected[j])?;
                values.push(v);
            }
        }
        if values.is_empty() {
            return Err(DataError::Empty);
        }
        Ok(Dataset { columns: expected, values })
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(i + 2, |p| p.line() as usize);
            if rec.len() != columns.len() {
                return Err(DataError::RowLength { row: i, expected: columns.len(), found: rec.len() });
            }
            for (field, column) in rec.iter().zip(&columns) {
                if field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan") {
                    return Err(DataError::MissingValue { row: i, column: column.clone() });
                }
                let v: f64 = field.parse().map_err(|_| DataError::Parse {
                    line,
                    column: column.clone(),
                    value: field.to_string(),
                })?;
                values.push(v);
            }
        }
        Ok(Dataset { columns, values })
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self, DataError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Writes a header row and one line per row; `comments` become leading
    /// `#` lines.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<(), DataError> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        let mut fields = Vec::with_capacity(self.width());
        for row in self.rows() {
            fields.clear();
            fields.extend(row.iter().map(|v| format_value(*v)));
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>, comments: &[String]) -> Result<(), DataError> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f, comments)
    }
}

/// Shortest representation that parses back to the same `f64`; integral
/// values print without a fractional part.
pub fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn check_cell(kind: NodeKind, v: f64, row: usize, column: &str) -> Result<(), DataError> {
    if !v.is_finite() {
        return Err(DataError::MissingValue { row, column: column.to_string() });
    }
    if let Some(levels) = kind.levels() {
        if v.fract() != 0.0 || v < 1.0 || v > levels as f64 {
            return Err(DataError::LevelOutOfRange { row, column: column.to_string(), value: v, levels });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_dag_spec;

    #[test]
    fn csv_round_trip_and_alignment() {
        let spec = parse_dag_spec("node A continuous\nnode B ordinal 3\nedge A -> B : ls").unwrap();
        let text = "# made up\nB,A\n1,0.25\n3,-1.5e-3\n";
        let ds = Dataset::read_csv(text.as_bytes()).unwrap();
        let aligned = ds.aligned(&spec).unwrap();
        assert_eq!(aligned.columns(), ["A", "B"]);
        assert_eq!(aligned.row(1), [-1.5e-3, 3.0]);
        let mut buf = Vec::new();
        aligned.write_csv(&mut buf, &["seed 1".into()]).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, aligned);
    }

    #[test]
    fn rejects_bad_columns_and_levels() {
        let spec = parse_dag_spec("node A continuous\nnode B binary").unwrap();
        let ds = Dataset::read_csv("A,C\n1,1\n".as_bytes()).unwrap();
        assert!(matches!(ds.aligned(&spec), Err(DataError::ColumnMismatch { .. })));
        let ds = Dataset::read_csv("A,B\n1,3\n".as_bytes()).unwrap();
        assert!(matches!(ds.aligned(&spec), Err(DataError::LevelOutOfRange { .. })));
        assert!(matches!(
            Dataset::read_csv("A,B\n1,\n".as_bytes()),
            Err(DataError::MissingValue { .. })
        ));
        assert!(matches!(
            Dataset::read_csv("A,B\n1,x\n".as_bytes()),
            Err(DataError::Parse { line: 2, .. })
        ));
    }
}
