//! CSV tables with a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Numeric table; `labels`, when present, becomes a leading text column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
            labels: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(&self.columns).map_err(csv_err)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = Vec::with_capacity(row.len() + 1);
            if let Some(l) = self.labels.get(i) {
                rec.push(l.clone());
            }
            rec.extend(row.iter().map(|v| format_number(*v)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Shortest round-trip decimal; exponent form outside [1e-4, 1e15).
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes `<stem>.csv` and `<stem>.meta.json` into `dir`.
pub fn write(dir: &Path, stem: &str, table: &Table, meta: &serde_json::Value) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let meta_path = dir.join(format!("{stem}.meta.json"));
    fs::write(&csv_path, table.to_csv()?)?;
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(&meta_path, text)?;
    Ok(vec![csv_path, meta_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -2.5, 1e-7, 6.02214076e23, 0.1 + 0.2, 1e-4, 123456.789] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(1.5e-7), "1.5e-7");
        assert_eq!(format_number(0.25), "0.25");
    }

    #[test]
    fn labels_lead() {
        let mut t = Table::new(&["name", "v"], vec![vec![1.0]]);
        t.labels = vec!["a".into()];
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "name,v\na,1\n");
    }
}
