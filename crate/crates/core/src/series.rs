//! Count series, CSV ingestion and the bundled fixture.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

const FIXTURE: &str = include_str!("../data/sexoffences.csv");

/// Ordered non-negative integer observations with optional opaque labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountSeries {
    values: Vec<u64>,
    labels: Option<Vec<String>>,
}

impl CountSeries {
    pub fn new(values: Vec<u64>) -> Self {
        Self {
            values,
            labels: None,
        }
    }

    pub fn with_labels(values: Vec<u64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::DomainMismatch(format!(
                "{} labels for {} values",
                labels.len(),
                values.len()
            )));
        }
        Ok(Self {
            values,
            labels: Some(labels),
        })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `n` observations (all of them if `n` exceeds the length).
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            values: self.values[..n].to_vec(),
            labels: self.labels.as_ref().map(|l| l[..n].to_vec()),
        }
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<u64>() as f64 / self.len() as f64
    }

    /// Sample variance with divisor n − 1.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values
            .iter()
            .map(|&v| (v as f64 - m).powi(2))
            .sum::<f64>()
            / (self.len() as f64 - 1.0)
    }

    pub fn summary(&self) -> Result<Summary> {
        if self.len() < 2 {
            return Err(Error::DegenerateSeries(
                "summary statistics need at least two observations".into(),
            ));
        }
        let mut sorted = self.values.clone();
        sorted.sort_unstable();
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        };
        let max = sorted[n - 1];
        let mut counts = vec![0usize; max as usize + 1];
        for &v in &sorted {
            counts[v as usize] += 1;
        }
        let mode = counts
            .iter()
            .enumerate()
            .fold(0, |best, (v, &c)| if c > counts[best] { v } else { best })
            as u64;
        let mean = self.mean();
        let variance = self.variance();
        Ok(Summary {
            n,
            total: sorted.iter().sum(),
            min: sorted[0],
            max,
            median,
            mode,
            mean,
            variance,
            dispersion_index: variance / mean,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub total: u64,
    pub min: u64,
    pub max: u64,
    pub median: f64,
    pub mode: u64,
    pub mean: f64,
    pub variance: f64,
    pub dispersion_index: f64,
}

/// Which CSV column holds the counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ColumnSelector {
    /// The last column of the header.
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

/// The bundled monthly sex-offences series (144 values, labelled `YYYY-MM`).
pub fn sex_offences() -> CountSeries {
    read_csv(FIXTURE.as_bytes(), &ColumnSelector::Name("count".into()))
        .expect("bundled fixture parses")
}

pub fn ingest_csv(path: impl AsRef<Path>, column: &ColumnSelector) -> Result<CountSeries> {
    let file = std::fs::File::open(path)?;
    read_csv(file, column)
}

/// Reads one header row then one count per record. Lines starting with `#`
/// are skipped. If the selected column is not the first, the first column
/// is kept as the label.
pub fn read_csv<R: Read>(reader: R, column: &ColumnSelector) -> Result<CountSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_error(&e))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Parse {
            line: 1,
            msg: "empty input: expected a header row".into(),
        });
    }
    let col = match column {
        ColumnSelector::Last => headers.len() - 1,
        ColumnSelector::Index(i) if *i < headers.len() => *i,
        ColumnSelector::Index(i) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("column {i} out of range ({} columns)", headers.len()),
            })
        }
        ColumnSelector::Name(name) => {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    msg: format!("no column named {name:?}"),
                })?
        }
    };
    let label_col = (col != 0).then_some(0);

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| parse_error(&e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let raw = record.get(col).unwrap_or("");
        values.push(parse_count(raw, line)?);
        if let Some(lc) = label_col {
            labels.push(record.get(lc).unwrap_or("").to_string());
        }
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "no observations after the header".into(),
        });
    }
    match label_col {
        Some(_) => CountSeries::with_labels(values, labels),
        None => Ok(CountSeries::new(values)),
    }
}

fn parse_count(raw: &str, line: usize) -> Result<u64> {
    let invalid = |msg| Error::InvalidValue {
        line,
        value: raw.to_string(),
        msg,
    };
    if raw.is_empty() {
        return Err(invalid("missing value"));
    }
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    match raw.parse::<f64>() {
        Ok(v) if v < 0.0 => Err(invalid("negative count")),
        Ok(_) => Err(invalid("count must be an integer")),
        Err(_) => Err(invalid("not a number")),
    }
}

fn parse_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shape() {
        let s = sex_offences();
        assert_eq!(s.len(), 144);
        assert_eq!(s.values().iter().sum::<u64>(), 85);
        assert_eq!(s.labels().unwrap()[0], "1990-01");
        assert_eq!(s.labels().unwrap()[143], "2001-12");
        // all of observations 141 through 144 are zero
        assert!(s.values()[140..].iter().all(|&v| v == 0));
    }

    #[test]
    fn fixture_summary() {
        let s = sex_offences().summary().unwrap();
        assert_eq!((s.min, s.max, s.mode), (0, 6, 0));
        assert_eq!(s.median, 0.0);
        assert!((s.mean - 0.5903).abs() < 5e-5);
        assert!((s.variance - 1.0268).abs() < 5e-5);
        // 1.73945 unrounded
        assert!((s.dispersion_index - 1.7395).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_values() {
        let neg = "t,count\n1,3\n2,-1\n";
        match read_csv(neg.as_bytes(), &ColumnSelector::Last) {
            Err(Error::InvalidValue { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(msg, "negative count");
            }
            other => panic!("{other:?}"),
        }
        let frac = "count\n1.5\n";
        assert!(matches!(
            read_csv(frac.as_bytes(), &ColumnSelector::Last),
            Err(Error::InvalidValue { line: 2, .. })
        ));
        let missing = "t,count\n1,\n";
        assert!(matches!(
            read_csv(missing.as_bytes(), &ColumnSelector::Last),
            Err(Error::InvalidValue {
                msg: "missing value",
                ..
            })
        ));
        assert!(matches!(
            read_csv("".as_bytes(), &ColumnSelector::Last),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            read_csv("count\n".as_bytes(), &ColumnSelector::Last),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn accepts_crlf_comments_and_selectors() {
        let text = "# produced by test\r\na,b\r\n1,4\r\n2,5\r\n";
        let s = read_csv(text.as_bytes(), &ColumnSelector::Name("b".into())).unwrap();
        assert_eq!(s.values(), &[4, 5]);
        assert_eq!(s.labels().unwrap(), &["1", "2"]);
        let s = read_csv(text.as_bytes(), &ColumnSelector::Index(0)).unwrap();
        assert_eq!(s.values(), &[1, 2]);
        assert!(s.labels().is_none());
    }

    #[test]
    fn prefix_clamps() {
        let s = sex_offences();
        assert_eq!(s.prefix(141).len(), 141);
        assert_eq!(s.prefix(1000).len(), 144);
    }
}
