//! CSV tables with a fixed header and per-row finiteness checks.

use std::io::Write;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn is_finite(&self) -> bool {
        !matches!(self, Cell::Float(v) if !v.is_finite())
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
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

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    skipped: usize,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
            skipped: 0,
        }
    }

    /// Adds a row, or counts it as skipped if any float is not finite.
    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.header.len(), "row width");
        if cells.iter().all(Cell::is_finite) {
            self.rows.push(cells.iter().map(Cell::render).collect());
        } else {
            self.skipped += 1;
        }
    }

    /// Counts a row that could not be computed at all.
    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn write_to<W: Write>(&self, sink: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_rows_are_skipped() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0.into(), "x".into()]);
        t.push(vec![f64::NAN.into(), "y".into()]);
        t.push(vec![f64::INFINITY.into(), 3usize.into()]);
        assert_eq!((t.len(), t.skipped()), (1, 2));
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "a,b\n1.0000000000000000e0,x\n"
        );
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 12345.678901234567] {
            let s = Cell::Float(v).render();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
