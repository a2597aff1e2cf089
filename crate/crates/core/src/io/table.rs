use std::path::Path;

use super::container::write_atomic;
use super::IoError;

/// Rows of text cells under a fixed header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest text that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, IoError> {
        if let Some(i) = self.rows.iter().position(|r| r.len() != self.header.len()) {
            return Err(IoError::Schema(format!(
                "row {i} has {} cells, header has {}",
                self.rows[i].len(),
                self.header.len()
            )));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| IoError::Schema(e.to_string()))
    }

    pub fn parse_csv(bytes: &[u8]) -> Result<Self, IoError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| Ok(rec?.iter().map(String::from).collect())).collect::<Result<_, IoError>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].as_str()).collect())
    }
}

pub fn emit_csv(path: &Path, table: &Table) -> Result<(), IoError> {
    Ok(write_atomic(path, &table.to_csv()?)?)
}

pub fn read_csv(path: &Path) -> Result<Table, IoError> {
    Table::parse_csv(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_and_quoting() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.to_csv().unwrap(), b"a,b\r\n");
        let mut t = Table::new(&["name", "v"]);
        t.push(vec!["x, \"y\"".into(), num(0.1)]);
        let bytes = t.to_csv().unwrap();
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), "name,v\r\n\"x, \"\"y\"\"\",0.1\r\n");
        assert_eq!(Table::parse_csv(&bytes).unwrap(), t);
        t.push(vec!["short".into()]);
        assert!(t.to_csv().is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e21] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(opt(None), "");
    }
}
