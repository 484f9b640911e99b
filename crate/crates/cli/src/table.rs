use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

/// Rows of already formatted cells, printable aligned or as CSV.
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: ToString>(&mut self, cells: impl IntoIterator<Item = S>) {
        let row: Vec<String> = cells.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut width: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&width)
                .map(|(c, w)| {
                    if c.parse::<f64>().is_ok() {
                        format!("{c:>w$}")
                    } else {
                        format!("{c:<w$}")
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.headers);
        let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
        out += &line(&rule);
        for r in &self.rows {
            out += &line(r);
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        // serialized first so that io errors (a closed pipe) surface as io::Error
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(&self.headers)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        w.write_all(&wr.into_inner()?)?;
        Ok(w.flush()?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f =
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.write_csv(f)
    }

    /// CSV on stdout when `csv` is set, otherwise the aligned form.
    pub fn print(&self, csv: bool) -> Result<()> {
        if csv {
            self.write_csv(std::io::stdout().lock())
        } else {
            Ok(std::io::stdout()
                .lock()
                .write_all(self.render().as_bytes())?)
        }
    }
}

/// A line on stdout; unlike `println!` a closed pipe is an error, not a panic.
pub fn say(line: impl std::fmt::Display) -> Result<()> {
    Ok(writeln!(std::io::stdout().lock(), "{line}")?)
}

pub fn f(v: f64, digits: usize) -> String {
    format!("{v:.digits$}")
}
