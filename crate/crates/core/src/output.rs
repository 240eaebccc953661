//! Plain-text tables: `# key=value` metadata lines, one header row, then
//! comma-separated numbers with 17 significant digits (exact round trip).

use std::fmt::Write as _;

use crate::chaoswf::ChaoticProfile;
use crate::correlators::CorrelatorSeries;
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), ..Default::default() }
    }

    pub fn meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::validation(format!("row has {} values for {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Rows `0, step, 2·step, …` plus the last one.
    pub fn downsampled(&self, step: usize) -> Table {
        let step = step.max(1);
        let n = self.rows.len();
        let rows = (0..n).filter(|&k| k % step == 0 || k + 1 == n).map(|k| self.rows[k].clone()).collect();
        Table { metadata: self.metadata.clone(), columns: self.columns.clone(), rows }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            // keep every metadata entry on one line
            let v = v.replace(['\n', '\r'], " ");
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let mut first = true;
            for x in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{x:.16e}");
            }
            out.push('\n');
        }
        out
    }

    /// The body without metadata, for comparisons that ignore run details.
    pub fn render_body(&self) -> String {
        Table { metadata: Vec::new(), ..self.clone() }.render()
    }

    pub fn parse(text: &str) -> Result<Table> {
        let mut table = Table::default();
        let mut header = false;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim_start()
                    .split_once('=')
                    .ok_or_else(|| Error::validation(format!("line {}: metadata without '='", lineno + 1)))?;
                table.metadata.push((k.to_string(), v.to_string()));
            } else if line.is_empty() {
                continue;
            } else if !header {
                table.columns = line.split(',').map(str::to_string).collect();
                header = true;
            } else {
                let row = line
                    .split(',')
                    .map(|f| f.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::validation(format!("line {}: {e}", lineno + 1)))?;
                table.push(row).map_err(|e| Error::validation(format!("line {}: {e}", lineno + 1)))?;
            }
        }
        if !header {
            return Err(Error::validation("table has no header row"));
        }
        Ok(table)
    }
}

/// `time, re, im` with the series' own tags as metadata.
pub fn series_table(series: &CorrelatorSeries) -> Table {
    let mut t = Table::new(["time", "re", "im"])
        .meta("kind", series.kind.name())
        .meta("observables", series.observable_tags.join(";"))
        .meta("hamiltonian_tag", series.hamiltonian_tag.name());
    t.rows = series.times.iter().zip(&series.values).map(|(&x, v)| vec![x, v.re, v.im]).collect();
    t
}

pub fn profile_table(profile: &ChaoticProfile) -> Table {
    let mut t = Table::new(["bin_center", "density"])
        .meta("bin_width", profile.bin_width)
        .meta("mu_window", format!("{}..{}", profile.mu_window.0, profile.mu_window.1))
        .meta("omega_mean", profile.omega_mean);
    t.rows = profile.bin_centers.iter().zip(&profile.bin_values).map(|(&c, &v)| vec![c, v]).collect();
    t
}

/// `time, exact_re, exact_im, pred_lorentzian, pred_gaussian` (real parts of
/// the predictions).
pub fn comparison_table(exact: &CorrelatorSeries, lorentzian: &CorrelatorSeries, gaussian: &CorrelatorSeries) -> Result<Table> {
    if exact.times != lorentzian.times || exact.times != gaussian.times {
        return Err(Error::validation("comparison series are on different time grids"));
    }
    let mut t = Table::new(["time", "exact_re", "exact_im", "pred_lorentzian", "pred_gaussian"])
        .meta("kind", exact.kind.name())
        .meta("observables", exact.observable_tags.join(";"));
    t.rows = (0..exact.len())
        .map(|k| vec![exact.times[k], exact.values[k].re, exact.values[k].im, lorentzian.values[k].re, gaussian.values[k].re])
        .collect();
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::{CorrelatorKind, HamiltonianTag};
    use crate::C64;
    use proptest::prelude::*;

    #[test]
    fn render_and_parse() {
        let s = CorrelatorSeries::new(vec![0.0, 0.5], vec![C64::new(1.0, 0.0), C64::new(0.1, -1.0 / 3.0)], CorrelatorKind::OnePoint)
            .unwrap()
            .with_tag(HamiltonianTag::Full)
            .with_observables(["sigma_x(1)"]);
        let t = series_table(&s).meta("params_hash", "abc");
        let text = t.render();
        assert!(text.starts_with("# kind=one_point\n"));
        assert!(text.contains("time,re,im\n"));
        assert!(text.contains("-3.3333333333333331e-1"));
        let back = Table::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.get_meta("hamiltonian_tag"), Some("full"));
        assert_eq!(back.column("im").unwrap()[1], -1.0 / 3.0);
    }

    #[test]
    fn parse_errors() {
        assert!(Table::parse("# a=1\n").is_err());
        assert!(Table::parse("a,b\n1,2\n3\n").is_err());
        assert!(Table::parse("a\nx\n").is_err());
        assert!(Table::parse("#novalue\na\n").is_err());
    }

    #[test]
    fn downsample_keeps_ends() {
        let mut t = Table::new(["x"]);
        for k in 0..10 {
            t.push(vec![k as f64]).unwrap();
        }
        assert_eq!(t.downsampled(4).column("x").unwrap(), vec![0.0, 4.0, 8.0, 9.0]);
        assert!(t.push(vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip(xs in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..20)) {
            let mut t = Table::new(["v"]);
            for &x in &xs {
                t.push(vec![x]).unwrap();
            }
            let back = Table::parse(&t.render()).unwrap();
            prop_assert_eq!(back.column("v").unwrap(), xs);
        }
    }
}
