//! Dataset loading, validation and summary statistics.

use crate::error::{EgseError, Result};
use crate::links::{Domain, LinkSpec};
use std::io::Write;
use std::path::Path;

/// An m×n table whose columns lie strictly inside their link domains.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    column_names: Vec<String>,
    values: Vec<f64>,
    domains: Vec<Domain>,
    rows: usize,
}

impl Dataset {
    /// Builds a dataset from rows, checking every value against its domain.
    pub fn new(column_names: Vec<String>, rows: Vec<Vec<f64>>, domains: Vec<Domain>) -> Result<Self> {
        let n = column_names.len();
        if n == 0 || domains.len() != n {
            return Err(EgseError::Argument(format!(
                "{} column names but {} domains",
                n,
                domains.len()
            )));
        }
        if rows.is_empty() {
            return Err(EgseError::Argument("dataset has no rows".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(EgseError::Io(format!("row {} has {} values, expected {n}", r + 1, row.len())));
            }
            for (c, &v) in row.iter().enumerate() {
                if !domains[c].contains(v) {
                    return Err(EgseError::DataDomain {
                        row: r + 1,
                        column: c + 1,
                        name: column_names[c].clone(),
                        value: v,
                        domain: domains[c].to_string(),
                    });
                }
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            column_names,
            values,
            domains,
            rows: rows.len(),
        })
    }

    /// Builds a dataset whose domains are those of the given links.
    pub fn with_links(column_names: Vec<String>, rows: Vec<Vec<f64>>, links: &[LinkSpec]) -> Result<Self> {
        Self::new(column_names, rows, links.iter().map(LinkSpec::domain).collect())
    }

    /// Unnamed columns `y1, ..., yn`.
    pub fn from_rows(rows: Vec<Vec<f64>>, links: &[LinkSpec]) -> Result<Self> {
        let names = (1..=links.len()).map(|i| format!("y{i}")).collect();
        Self::with_links(names, rows, links)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.ncols();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.ncols())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Checks that the links' domains contain the stored values.
    pub fn check_links(&self, links: &[LinkSpec]) -> Result<()> {
        if links.len() != self.ncols() {
            return Err(EgseError::Argument(format!(
                "{} links given for {} columns",
                links.len(),
                self.ncols()
            )));
        }
        for (r, row) in self.rows().enumerate() {
            for (c, (&v, link)) in row.iter().zip(links).enumerate() {
                if !link.domain().contains(v) {
                    return Err(EgseError::DataDomain {
                        row: r + 1,
                        column: c + 1,
                        name: self.column_names[c].clone(),
                        value: v,
                        domain: link.domain().to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Divide values by 100 in columns whose link domain is (0, 1).
    pub percent: bool,
}

/// Reads the named columns of a CSV file with a header row.
pub fn load_csv(path: impl AsRef<Path>, columns: &[&str], links: &[LinkSpec], opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    if columns.len() != links.len() {
        return Err(EgseError::Argument(format!(
            "{} columns requested but {} links given",
            columns.len(),
            links.len()
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| EgseError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let index: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| EgseError::Io(format!("column `{c}` not found in {}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(columns.len());
        for (c, &k) in index.iter().enumerate() {
            let cell = record.get(k).unwrap_or("");
            let mut v: f64 = cell.parse().map_err(|_| {
                EgseError::Io(format!(
                    "row {}, column {} ({}): `{cell}` is not a number",
                    r + 1,
                    c + 1,
                    columns[c]
                ))
            })?;
            if opts.percent && links[c].domain() == Domain::Unit {
                v /= 100.0;
            }
            row.push(v);
        }
        rows.push(row);
    }
    Dataset::with_links(columns.iter().map(|s| s.to_string()).collect(), rows, links)
}

/// Writes rows with 17 significant digits under the given header.
pub fn write_csv<W: Write>(out: W, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_sig17(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Formats with 17 significant digits, which round-trips any f64.
pub fn format_sig17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.16e}")
}

/// Per-column summary statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub n: usize,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
    /// Sample standard deviation (divisor m − 1).
    pub sd: f64,
    /// Coefficient of variation in percent.
    pub cv: f64,
    /// m₃/m₂^{3/2} with central moments mₖ.
    pub skewness: f64,
    /// m₄/m₂² − 3.
    pub kurtosis: f64,
    /// Set when the column has zero variance.
    pub degenerate: bool,
}

pub fn summarize_column(name: &str, values: &[f64]) -> Result<ColumnSummary> {
    let m = values.len();
    if m < 4 {
        return Err(EgseError::Argument(format!("column {name} needs at least 4 values, has {m}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let mf = m as f64;
    let mean = values.iter().sum::<f64>() / mf;
    let central = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / mf;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let sd = (m2 * mf / (mf - 1.0)).sqrt();
    let degenerate = m2 == 0.0;
    Ok(ColumnSummary {
        name: name.to_string(),
        n: m,
        min: sorted[0],
        median,
        mean,
        max: sorted[m - 1],
        sd,
        cv: 100.0 * sd / mean,
        skewness: if degenerate { f64::NAN } else { m3 / m2.powf(1.5) },
        kurtosis: if degenerate { f64::NAN } else { m4 / (m2 * m2) - 3.0 },
        degenerate,
    })
}

pub fn summarize(data: &Dataset) -> Result<Vec<ColumnSummary>> {
    (0..data.ncols())
        .map(|j| summarize_column(&data.column_names()[j], &data.column(j)))
        .collect()
}

/// Path of the bundled Swiss data relative to the workspace root.
pub const SWISS_RELATIVE_PATH: &str = "data/swiss.csv";

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn boundary_value_is_domain_error() {
        let err = Dataset::from_rows(vec![vec![0.5, 0.2], vec![1.0, 0.3]], &[LinkSpec::logit(), LinkSpec::logit()]).unwrap_err();
        assert_eq!(
            err,
            EgseError::DataDomain {
                row: 2,
                column: 1,
                name: "y1".into(),
                value: 1.0,
                domain: "(0, 1)".into()
            }
        );
    }

    #[test]
    fn constant_column_is_flagged() {
        let s = summarize_column("c", &[2.0; 6]).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.sd, 0.0);
        assert!(summarize_column("c", &[1.0, 2.0]).is_err());
    }

    #[test]
    fn moments_of_small_sample() {
        let s = summarize_column("x", &[1.0, 2.0, 3.0, 4.0, 10.0]).unwrap();
        assert_eq!(s.median, 3.0);
        assert_relative_eq!(s.mean, 4.0);
        assert_relative_eq!(s.sd, 12.5f64.sqrt(), epsilon = 1e-14);
        // central moments 10, 36, 278.8
        assert_relative_eq!(s.skewness, 36.0 / 10.0f64.powf(1.5), epsilon = 1e-14);
        assert_relative_eq!(s.kurtosis, 1394.0 / 5.0 / 100.0 - 3.0, epsilon = 1e-14);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let rows = vec![vec![0.1, 1.0 / 3.0], vec![2.0f64.sqrt() / 7.0, 0.999_999_999_999]];
        write_csv(std::fs::File::create(&path).unwrap(), &["a".into(), "b".into()], rows.clone().into_iter()).unwrap();
        let links = [LinkSpec::logit(), LinkSpec::logit()];
        let d = load_csv(&path, &["a", "b"], &links, &LoadOptions::default()).unwrap();
        assert_eq!(d.row(0), rows[0].as_slice());
        assert_eq!(d.row(1), rows[1].as_slice());
        assert!(load_csv(&path, &["a", "zz"], &links, &LoadOptions::default()).is_err());
    }

    #[test]
    fn percent_rescaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "a,b\n12.5,3\n50,4\n").unwrap();
        let links = [LinkSpec::logit(), LinkSpec::log()];
        let d = load_csv(&path, &["a", "b"], &links, &LoadOptions { percent: true }).unwrap();
        assert_eq!(d.row(0), &[0.125, 3.0]);
        std::fs::write(&path, "a,b\nx,3\n").unwrap();
        let err = load_csv(&path, &["a", "b"], &links, &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("not a number"));
    }
}
