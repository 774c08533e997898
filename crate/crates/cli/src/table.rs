//! Fixed-width two-column output.

use std::fmt::{self, Display};

use statespace::DenseMatrix;

const KEY_WIDTH: usize = 32;

#[derive(Debug, Default)]
pub struct Table {
    rows: Vec<(String, String)>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(&mut self, key: &str, value: impl Display) {
        self.rows.push((key.to_string(), value.to_string()));
    }

    /// One line per matrix row, entries as `re+imi`.
    pub fn matrix(&mut self, key: &str, m: &DenseMatrix) {
        for (i, r) in m.rows().enumerate() {
            let line = r
                .iter()
                .map(|z| format!("{:>9.6}{:+.6}i", z.re, z.im))
                .collect::<Vec<_>>()
                .join("  ");
            self.row(if i == 0 { key } else { "" }, line);
        }
    }
}

impl Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.rows {
            writeln!(f, "{k:<KEY_WIDTH$} {v}")?;
        }
        Ok(())
    }
}
