//! CSV tables: header row, LF endings, reals with 17 significant digits and a
//! `# key=value` metadata footer.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

pub fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) => real(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub footer: Vec<(String, String)>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.footer.push((key.into(), value.to_string()));
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let io = |e: csv::Error| CliError::Io(e.to_string());
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        let mut bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        for (k, v) in &self.footer {
            writeln!(bytes, "# {k}={v}").map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(bytes)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_bytes()?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dialect() {
        let mut t = Table::new(["t", "c_0", "note"]);
        t.push(vec![0.1.into(), (1.0 / 3.0).into(), "a,b".into()]);
        t.push(vec![Cell::Empty, f64::NAN.into(), 2usize.into()]);
        t.note("config_hash", "abc");
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(
            s,
            "t,c_0,note\n1.0000000000000001e-1,3.3333333333333331e-1,\"a,b\"\n,NaN,2\n# config_hash=abc\n"
        );
        // 17 significant digits round-trip
        let v: f64 = "3.3333333333333331e-1".parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }
}
