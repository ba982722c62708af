//! CSV tables with a `# meta:` header block.

use std::io::Write;
use std::path::{Path, PathBuf};

/// One cell; floats are written in shortest round-trip exponent form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:e}"),
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(if b { "true" } else { "false" }.into())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Appends the rows of another table with the same columns.
    pub fn extend(&mut self, other: Table) {
        debug_assert_eq!(self.columns, other.columns);
        self.rows.extend(other.rows);
    }

    pub fn write(&self, dir: &Path, meta: &[(String, String)]) -> std::io::Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        for (k, v) in meta {
            writeln!(file, "# meta: {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// `row![a, b, c]` builds a `Vec<Cell>`.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::output::Cell::from($x)),*]
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_block_precedes_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(row![0.125, "x"]);
        t.push(row![f64::INFINITY, 3usize]);
        let path = t.write(dir.path(), &[("hbar".into(), "1".into())]).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "# meta: hbar=1\na,b\n1.25e-1,x\ninf,3\n");
    }
}
