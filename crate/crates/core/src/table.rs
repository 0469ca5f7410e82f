//! Temperature x wind-bin result grids with row and column sums.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are temperature clusters, columns wind bins. Missing cells (skipped
/// sub-bins) are left out of every sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthTable {
    pub title: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
    pub row_sums: Vec<f64>,
    pub col_sums: Vec<f64>,
    pub total: f64,
}

impl HealthTable {
    pub fn new(
        title: impl Into<String>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        cells: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if cells.len() != row_labels.len() || cells.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::ShapeMismatch(
                "table cells do not match labels".into(),
            ));
        }
        let row_sums: Vec<f64> = cells.iter().map(|r| r.iter().flatten().sum()).collect();
        let col_sums: Vec<f64> = (0..col_labels.len())
            .map(|j| cells.iter().filter_map(|r| r[j]).sum())
            .collect();
        let total = cells.iter().flatten().flatten().sum();
        Ok(HealthTable {
            title: title.into(),
            row_labels,
            col_labels,
            cells,
            row_sums,
            col_sums,
            total,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row][col]
    }

    /// CSV with a trailing `sum` column and a final `sum` row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.col_labels.iter().cloned());
        header.push("sum".into());
        w.write_record(&header)?;
        for (i, row) in self.cells.iter().enumerate() {
            let mut rec = vec![self.row_labels[i].clone()];
            rec.extend(
                row.iter()
                    .map(|c| c.map(|v| v.to_string()).unwrap_or_default()),
            );
            rec.push(self.row_sums[i].to_string());
            w.write_record(&rec)?;
        }
        let mut rec = vec!["sum".to_string()];
        rec.extend(self.col_sums.iter().map(|v| v.to_string()));
        rec.push(self.total.to_string());
        w.write_record(&rec)?;
        w.flush().map_err(|e| Error::io("<table>", e))?;
        Ok(())
    }

    /// Fixed-precision text rendering for terminals.
    pub fn render(&self, decimals: usize) -> String {
        let fmt = |v: Option<f64>| {
            v.map(|x| format!("{x:.decimals$}"))
                .unwrap_or_else(|| "-".into())
        };
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec![String::new()];
        header.extend(self.col_labels.iter().cloned());
        header.push("sum".into());
        rows.push(header);
        for (i, r) in self.cells.iter().enumerate() {
            let mut line = vec![self.row_labels[i].clone()];
            line.extend(r.iter().map(|&c| fmt(c)));
            line.push(fmt(Some(self.row_sums[i])));
            rows.push(line);
        }
        let mut line = vec!["sum".to_string()];
        line.extend(self.col_sums.iter().map(|&c| fmt(Some(c))));
        line.push(fmt(Some(self.total)));
        rows.push(line);

        let ncols = rows[0].len();
        let widths: Vec<usize> = (0..ncols)
            .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{}\n", self.title);
        for r in &rows {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
