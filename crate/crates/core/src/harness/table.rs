use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Rectangular table of reals with unique column names.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    /// Key/value provenance (seed, run counts, ...), echoed into manifests.
    pub meta: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(Error::config(format!("duplicate column {c:?}")));
            }
        }
        Ok(Self {
            columns,
            rows: Vec::new(),
            meta: Vec::new(),
        })
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::dim(self.columns.len(), row.len(), "table row"));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// CSV with a header row; values in shortest round-trip decimal form.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_ragged_rows() {
        assert!(ResultTable::new(vec!["a".into(), "a".into()]).is_err());
        let mut t = ResultTable::new(vec!["a".into(), "b".into()]).unwrap();
        assert!(t.push_row(vec![1.0]).is_err());
        t.push_row(vec![1.0, 2.5]).unwrap();
        assert_eq!(t.column("b"), Some(vec![2.5]));
        assert_eq!(t.column("c"), None);
    }

    #[test]
    fn csv_is_exact_and_quoted() {
        let mut t = ResultTable::new(vec!["x".into(), "odd,name".into()]).unwrap();
        t.push_row(vec![0.1 + 0.2, -10.0]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "x,\"odd,name\"\n0.30000000000000004,-10\n");
    }
}
