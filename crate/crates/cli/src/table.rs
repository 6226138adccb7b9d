//! CSV output: a header row under `#`-prefixed provenance comment lines.
//! Values are written with Rust's shortest-roundtrip float formatting, so
//! re-running a command with the same configuration reproduces the file
//! byte for byte.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

pub struct Provenance {
    pub seed: u64,
    pub n_draws: usize,
    pub config_hash: String,
}

pub struct ResultTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row does not match header");
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, prov: &Provenance) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "# seed={}", prov.seed).expect("write to vec");
        writeln!(out, "# n_draws={}", prov.n_draws).expect("write to vec");
        writeln!(out, "# config_hash={}", prov.config_hash).expect("write to vec");
        writeln!(out, "{}", self.header.join(",")).expect("write to vec");
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).expect("write to vec");
        }
        std::fs::write(path, out)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt_q(v: Option<usize>) -> String {
    match v {
        Some(q) => q.to_string(),
        None => "not_reached".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_provenance_then_header_then_rows() {
        let dir = std::env::temp_dir().join("leakbound_table_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut table = ResultTable::new(vec!["a", "b"]);
        table.push(vec!["1".into(), fmt_f64(0.5)]);
        table
            .write(
                &path,
                &Provenance {
                    seed: 7,
                    n_draws: 10,
                    config_hash: "cafe".into(),
                },
            )
            .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# seed=7\n# n_draws=10\n# config_hash=cafe\na,b\n1,0.5\n");
    }
}
