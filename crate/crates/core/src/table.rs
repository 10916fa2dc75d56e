//! Column-typed CSV tables.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{EllipError, Result};
use crate::statellipse::{GroupedSample, Sample};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Column::Numeric(_))
    }
}

/// Rectangular table whose columns are numeric when every cell parses as a
/// finite number and categorical otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    header: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl DataTable {
    pub fn from_columns(header: Vec<String>, columns: Vec<Column>) -> Result<Self> {
        if header.len() != columns.len() || header.is_empty() {
            return Err(EllipError::dims(format!("{} columns", header.len()), format!("{}", columns.len())));
        }
        let len = |c: &Column| match c {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        };
        let n_rows = len(&columns[0]);
        if let Some(j) = columns.iter().position(|c| len(c) != n_rows) {
            return Err(EllipError::dims(format!("{n_rows} rows"), format!("{} in column `{}`", len(&columns[j]), header[j])));
        }
        for (h, c) in header.iter().zip(&columns) {
            if let Column::Numeric(v) = c {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(EllipError::NonFinite(format!("column `{h}`")));
                }
            }
        }
        Ok(Self { header, columns, n_rows })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EllipError::invalid(format!("no column named `{name}` (have: {})", self.header.join(", "))))
    }

    pub fn numeric(&self, name: &str) -> Result<DVector<f64>> {
        match &self.columns[self.index_of(name)?] {
            Column::Numeric(v) => Ok(DVector::from_column_slice(v)),
            Column::Categorical(_) => Err(EllipError::invalid(format!("column `{name}` is not numeric"))),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<Vec<String>> {
        match &self.columns[self.index_of(name)?] {
            Column::Categorical(v) => Ok(v.clone()),
            Column::Numeric(v) => Ok(v.iter().map(|x| x.to_string()).collect()),
        }
    }

    pub fn numeric_names(&self) -> Vec<String> {
        self.header.iter().zip(&self.columns).filter(|(_, c)| c.is_numeric()).map(|(h, _)| h.clone()).collect()
    }

    /// The named numeric columns as a matrix, in the order given.
    pub fn matrix(&self, names: &[String]) -> Result<DMatrix<f64>> {
        let cols = names.iter().map(|n| self.numeric(n)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(self.n_rows, cols.len(), |i, j| cols[j][i]))
    }

    pub fn sample(&self, names: &[String]) -> Result<Sample> {
        Sample::new(self.matrix(names)?, names.to_vec())
    }

    pub fn grouped(&self, names: &[String], group: &str) -> Result<GroupedSample> {
        GroupedSample::from_labels(&self.matrix(names)?, &self.categorical(group)?, names.to_vec())
    }
}

/// Parses CSV text with a header row.
pub fn parse_csv(text: &str) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| EllipError::Parse { line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(EllipError::Parse { line: 1, message: "empty file or missing header".into() });
    }
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    let mut n_rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| EllipError::Parse { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
        let line = rec.position().map_or(n_rows + 2, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(EllipError::Parse { line, message: format!("expected {} fields, found {}", header.len(), rec.len()) });
        }
        for (col, v) in cells.iter_mut().zip(rec.iter()) {
            col.push(v.to_string());
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(EllipError::Parse { line: 2, message: "no data rows".into() });
    }
    let mut columns = Vec::with_capacity(header.len());
    for (name, col) in header.iter().zip(cells) {
        let parsed: Option<Vec<f64>> = col.iter().map(|s| s.parse::<f64>().ok()).collect();
        match parsed {
            Some(v) => {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(EllipError::Parse { line: i + 2, message: format!("non-finite value in column `{name}`") });
                }
                columns.push(Column::Numeric(v));
            }
            None => columns.push(Column::Categorical(col)),
        }
    }
    Ok(DataTable { header, columns, n_rows })
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<DataTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| EllipError::Io(format!("{}: {e}", path.display())))?;
    parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_columns() {
        let t = parse_csv("a,b,g\n1,2.5,x\n3,4,y\n").unwrap();
        assert_eq!(t.n_rows(), 2);
        assert!(t.columns()[0].is_numeric() && t.columns()[1].is_numeric());
        assert!(!t.columns()[2].is_numeric());
        assert_eq!(t.numeric_names(), vec!["a", "b"]);
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = parse_csv("a,b\n1,2\n3\n").unwrap_err();
        assert!(matches!(err, EllipError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn empty_and_nonfinite_rejected() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b\n").is_err());
        assert!(matches!(parse_csv("a\n1\ninf\n"), Err(EllipError::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_column_is_named() {
        let t = parse_csv("a\n1\n").unwrap();
        assert!(t.numeric("zz").unwrap_err().to_string().contains("zz"));
    }
}
