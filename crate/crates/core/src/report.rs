//! CSV tables with `#`-prefixed header lines.

use std::path::Path;

use crate::error::{Error, Result};
use crate::laplace::{LaplaceState, PastTimeline};
use crate::snapshot::write_atomic;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

impl Table {
    pub fn new<I, S>(columns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Column `name` parsed as numbers.
    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .columns
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                r[c].parse()
                    .map_err(|_| Error::InvalidArgument(format!("`{}` is not a number", r[c])))
            })
            .collect()
    }

    /// Renders header lines (each prefixed with `# `) followed by the CSV body.
    pub fn to_csv(&self, header: &[String]) -> Result<String> {
        let mut out = Vec::new();
        for line in header {
            for l in line.lines() {
                out.extend_from_slice(b"# ");
                out.extend_from_slice(l.as_bytes());
                out.push(b'\n');
            }
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path, header: &[String]) -> Result<()> {
        write_atomic(path, self.to_csv(header)?.as_bytes())
    }

    /// Parses text produced by [`Table::to_csv`], returning header lines
    /// (without the `# ` prefix) and the table.
    pub fn from_csv(text: &str) -> Result<(Vec<String>, Table)> {
        let mut header = Vec::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            match line.strip_prefix('#') {
                Some(rest) => {
                    header.push(rest.trim_start_matches(' ').trim_end_matches('\n').to_string());
                    body_start += line.len();
                }
                None => break,
            }
        }
        let mut r = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let mut table = Table {
            columns,
            rows: Vec::new(),
        };
        for rec in r.records() {
            table.push(rec?.iter().map(str::to_string).collect())?;
        }
        Ok((header, table))
    }
}

/// Laplace state as rows of `(s, stimulus, value)`.
pub fn laplace_table(state: &LaplaceState) -> Table {
    let mut t = Table::new(["s", "stimulus", "value"]);
    let vocab = state.vocab();
    for (r, &s) in state.grid().s_values().iter().enumerate() {
        for i in 0..vocab.len() {
            t.rows
                .push(vec![fmt_f64(s), vocab.name(i).to_string(), fmt_f64(state.get(r, i))]);
        }
    }
    t
}

/// Past timeline as rows of `(tau_star, stimulus, value)`.
pub fn timeline_table(past: &PastTimeline) -> Table {
    let mut t = Table::new(["tau_star", "stimulus", "value"]);
    let vocab = past.vocab();
    for (j, &tau) in past.grid().taus().iter().enumerate() {
        for i in 0..vocab.len() {
            t.rows
                .push(vec![fmt_f64(tau), vocab.name(i).to_string(), fmt_f64(past.get(j, i))]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TaustarGrid;
    use crate::vocab::StimulusVocabulary;
    use std::sync::Arc;

    #[test]
    fn csv_round_trip_keeps_header_and_bits() {
        let mut t = Table::new(["x", "name"]);
        t.push(vec![fmt_f64(0.1 + 0.2), "a,b".into()]).unwrap();
        t.push(vec![fmt_f64(-1e-300), "c".into()]).unwrap();
        let header = vec!["config: {\"seed\":1}".to_string(), "note".to_string()];
        let text = t.to_csv(&header).unwrap();
        assert!(text.starts_with("# config: {\"seed\":1}\n# note\nx,name\n"));
        let (h, back) = Table::from_csv(&text).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, t);
        assert_eq!(back.column_f64("x").unwrap()[0], 0.1 + 0.2);
        assert!(t.push(vec!["1".into()]).is_err());
    }

    #[test]
    fn header_only_table() {
        let t = Table::new(["t", "v"]);
        assert_eq!(t.to_csv(&["config: {}".into()]).unwrap(), "# config: {}\nt,v\n");
    }

    #[test]
    fn state_dumps_cover_every_entry() {
        let grid = Arc::new(TaustarGrid::build(0.5, 100.0, 16, 2).unwrap());
        let vocab = Arc::new(StimulusVocabulary::new(["a", "b"]).unwrap());
        let mut st = LaplaceState::new(grid.clone(), vocab);
        st.inject("a", 1.0).unwrap();
        st.decay(2.0).unwrap();
        assert_eq!(laplace_table(&st).len(), grid.n_rates() * 2);
        let past = timeline_table(&st.invert());
        assert_eq!(past.len(), 16 * 2);
        assert_eq!(past.columns(), ["tau_star", "stimulus", "value"]);
    }
}
