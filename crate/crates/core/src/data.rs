//! Domain types for paired active/sham experiments, dataset ingestion and
//! validation, the corrected log-odds transform for count data, and the
//! sham-data chi-square diagnostic.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// One paired experiment reported as estimates and standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub id: String,
    /// Optional covariate (e.g. magnetic field frequency in Hz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Active-arm estimate.
    pub y1: f64,
    /// Active-arm standard error.
    pub s1: f64,
    /// Sham-arm estimate.
    pub y0: f64,
    /// Sham-arm standard error.
    pub s0: f64,
    /// Active-arm sample size, needed only for t-based procedures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<u32>,
    /// Sham-arm sample size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<u32>,
}

impl StudyRecord {
    fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("y1", self.y1),
            ("s1", self.s1),
            ("y0", self.y0),
            ("s0", self.s0),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid_for(field, &self.id, "must be finite"));
            }
        }
        if let Some(x) = self.x {
            if !x.is_finite() {
                return Err(Error::invalid_for("x", &self.id, "must be finite"));
            }
        }
        if self.s1 <= 0.0 {
            return Err(Error::invalid_for(
                "s1",
                &self.id,
                "standard error must be positive",
            ));
        }
        if self.s0 <= 0.0 {
            return Err(Error::invalid_for(
                "s0",
                &self.id,
                "standard error must be positive",
            ));
        }
        for (field, n) in [("n1", self.n1), ("n0", self.n0)] {
            if let Some(n) = n {
                if n < 2 {
                    return Err(Error::invalid_for(
                        field,
                        &self.id,
                        "sample size must be >= 2",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One paired experiment reported as remission counts out of totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub id: String,
    /// Remissions in the active arm.
    pub n1: u32,
    /// Total patients in the active arm.
    #[serde(rename = "N1")]
    pub total1: u32,
    /// Remissions in the sham arm.
    pub n0: u32,
    /// Total patients in the sham arm.
    #[serde(rename = "N0")]
    pub total0: u32,
}

impl CountRecord {
    fn validate(&self) -> Result<()> {
        if self.total1 < 1 {
            return Err(Error::invalid_for("N1", &self.id, "total must be >= 1"));
        }
        if self.total0 < 1 {
            return Err(Error::invalid_for("N0", &self.id, "total must be >= 1"));
        }
        if self.n1 > self.total1 {
            return Err(Error::invalid_for("n1", &self.id, "count exceeds total"));
        }
        if self.n0 > self.total0 {
            return Err(Error::invalid_for("n0", &self.id, "count exceeds total"));
        }
        Ok(())
    }
}

/// An ordered collection of studies, all of one kind. Index order is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Dataset {
    Summary { records: Vec<StudyRecord> },
    Count { records: Vec<CountRecord> },
}

impl Dataset {
    pub fn summary(records: Vec<StudyRecord>) -> Result<Self> {
        let d = Dataset::Summary { records };
        d.validate()?;
        Ok(d)
    }

    pub fn count(records: Vec<CountRecord>) -> Result<Self> {
        let d = Dataset::Count { records };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = std::collections::HashSet::new();
        for id in self.ids() {
            if !seen.insert(id.to_string()) {
                return Err(Error::DuplicateId(id.to_string()));
            }
        }
        match self {
            Dataset::Summary { records } => records.iter().try_for_each(|r| r.validate()),
            Dataset::Count { records } => records.iter().try_for_each(|r| r.validate()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Summary { records } => records.len(),
            Dataset::Count { records } => records.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<&str> {
        match self {
            Dataset::Summary { records } => records.iter().map(|r| r.id.as_str()).collect(),
            Dataset::Count { records } => records.iter().map(|r| r.id.as_str()).collect(),
        }
    }

    pub fn summary_records(&self) -> Result<&[StudyRecord]> {
        match self {
            Dataset::Summary { records } => Ok(records),
            Dataset::Count { .. } => Err(Error::Incompatible(
                "operation requires a summary-kind dataset".into(),
            )),
        }
    }

    pub fn count_records(&self) -> Result<&[CountRecord]> {
        match self {
            Dataset::Count { records } => Ok(records),
            Dataset::Summary { .. } => Err(Error::Incompatible(
                "operation requires a count-kind dataset".into(),
            )),
        }
    }

    /// Covariate vector, present only if every record carries `x`.
    pub fn covariates(&self) -> Option<Vec<f64>> {
        match self {
            Dataset::Summary { records } => records.iter().map(|r| r.x).collect(),
            Dataset::Count { .. } => None,
        }
    }
}

/// Input format accepted by [`ingest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IngestFormat {
    SummaryCsv,
    CountCsv,
    Json,
}

/// Read and validate a dataset from disk.
pub fn ingest(path: &Path, format: IngestFormat) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, format)
}

pub fn ingest_reader(reader: impl Read, format: IngestFormat) -> Result<Dataset> {
    match format {
        IngestFormat::SummaryCsv => read_summary_csv(reader),
        IngestFormat::CountCsv => read_count_csv(reader),
        IngestFormat::Json => {
            let d: Dataset = serde_json::from_reader(reader)?;
            d.validate()?;
            Ok(d)
        }
    }
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn parse_field<T: std::str::FromStr>(raw: &str, field: &'static str, row: usize) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        row,
        msg: format!("cannot parse `{raw}` as {field}"),
    })
}

fn parse_opt<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: Option<usize>,
    field: &'static str,
    row: usize,
) -> Result<Option<T>> {
    match idx.and_then(|i| record.get(i)) {
        None => Ok(None),
        Some(raw) if raw.trim().is_empty() => Ok(None),
        Some(raw) => parse_field(raw, field, row).map(Some),
    }
}

fn read_summary_csv(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let id_i = header_index(&headers, "id");
    let required: Vec<(&str, Option<usize>)> = ["y1", "s1", "y0", "s0"]
        .iter()
        .map(|&n| (n, header_index(&headers, n)))
        .collect();
    if id_i.is_none() || required.iter().any(|(_, i)| i.is_none()) {
        return Err(Error::Parse {
            row: 1,
            msg: "summary CSV must have header columns id,y1,s1,y0,s0 (x,n1,n0 optional)".into(),
        });
    }
    let x_i = header_index(&headers, "x");
    let n1_i = header_index(&headers, "n1");
    let n0_i = header_index(&headers, "n0");

    let mut records = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2; // 1-based, after the header line
        let rec = rec?;
        let get = |i: Option<usize>, field: &'static str| -> Result<f64> {
            let raw = i.and_then(|i| rec.get(i)).unwrap_or("");
            parse_field(raw, field, row)
        };
        records.push(StudyRecord {
            id: rec.get(id_i.unwrap()).unwrap_or("").trim().to_string(),
            x: parse_opt(&rec, x_i, "x", row)?,
            y1: get(required[0].1, "y1")?,
            s1: get(required[1].1, "s1")?,
            y0: get(required[2].1, "y0")?,
            s0: get(required[3].1, "s0")?,
            n1: parse_opt(&rec, n1_i, "n1", row)?,
            n0: parse_opt(&rec, n0_i, "n0", row)?,
        });
    }
    Dataset::summary(records)
}

fn read_count_csv(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<(&str, Option<usize>)> = ["id", "n1", "N1", "n0", "N0"]
        .iter()
        .map(|&n| (n, header_index(&headers, n)))
        .collect();
    if cols.iter().any(|(_, i)| i.is_none()) {
        return Err(Error::Parse {
            row: 1,
            msg: "count CSV must have header columns id,n1,N1,n0,N0".into(),
        });
    }
    let mut records = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let get = |slot: usize, field: &'static str| -> Result<u32> {
            let raw = cols[slot].1.and_then(|i| rec.get(i)).unwrap_or("");
            parse_field(raw, field, row)
        };
        records.push(CountRecord {
            id: rec.get(cols[0].1.unwrap()).unwrap_or("").trim().to_string(),
            n1: get(1, "n1")?,
            total1: get(2, "N1")?,
            n0: get(3, "n0")?,
            total0: get(4, "N0")?,
        });
    }
    Dataset::count(records)
}

/// Write a dataset as CSV using the same schema `ingest` reads.
pub fn write_csv(dataset: &Dataset, w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    match dataset {
        Dataset::Summary { records } => {
            wtr.write_record(["id", "x", "y1", "s1", "y0", "s0", "n1", "n0"])?;
            for r in records {
                wtr.write_record([
                    r.id.as_str(),
                    &r.x.map(|v| v.to_string()).unwrap_or_default(),
                    &r.y1.to_string(),
                    &r.s1.to_string(),
                    &r.y0.to_string(),
                    &r.s0.to_string(),
                    &r.n1.map(|v| v.to_string()).unwrap_or_default(),
                    &r.n0.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        Dataset::Count { records } => {
            wtr.write_record(["id", "n1", "N1", "n0", "N0"])?;
            for r in records {
                wtr.write_record([
                    r.id.as_str(),
                    &r.n1.to_string(),
                    &r.total1.to_string(),
                    &r.n0.to_string(),
                    &r.total0.to_string(),
                ])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Write a dataset as JSON mirroring the CSV schemas.
pub fn write_json(dataset: &Dataset, w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(w, dataset)?;
    Ok(())
}

/// Which corrected log-odds formula to apply to count data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogOddsConvention {
    /// log((n + 0.5) / (N + 1)), the corrected log-proportion form.
    #[default]
    Corrected,
    /// log((n + 0.5) / (N - n + 0.5)), the conventional Haldane-Anscombe odds.
    HaldaneAnscombe,
}

fn log_odds_arm(n: u32, total: u32, conv: LogOddsConvention) -> (f64, f64) {
    let n = n as f64;
    let total = total as f64;
    let y = match conv {
        LogOddsConvention::Corrected => ((n + 0.5) / (total + 1.0)).ln(),
        LogOddsConvention::HaldaneAnscombe => ((n + 0.5) / (total - n + 0.5)).ln(),
    };
    let s = (1.0 / (n + 0.5) + 1.0 / (total - n + 0.5)).sqrt();
    (y, s)
}

/// Convert remission counts to approximate-normal estimates and standard
/// errors, applying the 0.5 continuity correction to both arms.
pub fn log_odds_transform(c: &CountRecord, conv: LogOddsConvention) -> StudyRecord {
    let (y1, s1) = log_odds_arm(c.n1, c.total1, conv);
    let (y0, s0) = log_odds_arm(c.n0, c.total0, conv);
    StudyRecord {
        id: c.id.clone(),
        x: None,
        y1,
        s1,
        y0,
        s0,
        n1: None,
        n0: None,
    }
}

/// Apply [`log_odds_transform`] to every record of a count dataset.
pub fn log_odds_dataset(dataset: &Dataset, conv: LogOddsConvention) -> Result<Dataset> {
    let records = dataset
        .count_records()?
        .iter()
        .map(|c| log_odds_transform(c, conv))
        .collect();
    Dataset::summary(records)
}

/// Chi-square check of the sham estimates against pure noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub stat: f64,
    pub df: usize,
    /// P(chi^2_df <= stat); small values mean the sham spread is less than the
    /// reported standard errors imply.
    pub cdf: f64,
}

/// Sum of squared sham z-scores, referenced against chi^2 with J degrees of
/// freedom.
pub fn sham_chi_square(dataset: &Dataset) -> Result<ChiSquare> {
    let records = dataset.summary_records()?;
    let stat = records
        .iter()
        .map(|r| {
            let z = r.y0 / r.s0;
            z * z
        })
        .sum::<f64>();
    let df = records.len();
    Ok(ChiSquare {
        stat,
        df,
        cdf: math::chi_square_cdf(stat, df as f64),
    })
}

/// Multiply every sham standard error by `factor`, leaving all else unchanged.
pub fn rescale_sham_ses(dataset: &Dataset, factor: f64) -> Result<Dataset> {
    if factor <= 0.0 || !factor.is_finite() {
        return Err(Error::invalid(
            "factor",
            "rescale factor must be positive and finite",
        ));
    }
    let records = dataset
        .summary_records()?
        .iter()
        .map(|r| StudyRecord {
            s0: factor * r.s0,
            ..r.clone()
        })
        .collect();
    Dataset::summary(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, y1: f64, s1: f64, y0: f64, s0: f64) -> StudyRecord {
        StudyRecord {
            id: id.into(),
            x: None,
            y1,
            s1,
            y0,
            s0,
            n1: None,
            n0: None,
        }
    }

    #[test]
    fn ingest_published_summary_row() {
        let csv = "id,x,y1,s1,y0,s0,n1,n0\nf1,1,0.036,0.041,-0.005,0.041,32,32\n";
        let d = ingest_reader(csv.as_bytes(), IngestFormat::SummaryCsv).unwrap();
        let r = &d.summary_records().unwrap()[0];
        assert_eq!(r.x, Some(1.0));
        assert_eq!(r.y1, 0.036);
        assert_eq!(r.s1, 0.041);
        assert_eq!(r.y0, -0.005);
        assert_eq!(r.s0, 0.041);
        assert_eq!(r.n1, Some(32));
        assert_eq!(r.n0, Some(32));
    }

    #[test]
    fn ingest_count_row() {
        let csv = "id,n1,N1,n0,N0\ngeorge1997,1,7,0,5\n";
        let d = ingest_reader(csv.as_bytes(), IngestFormat::CountCsv).unwrap();
        let r = &d.count_records().unwrap()[0];
        assert_eq!((r.n1, r.total1, r.n0, r.total0), (1, 7, 0, 5));
    }

    #[test]
    fn ingest_rejects_nonpositive_se() {
        let csv = "id,y1,s1,y0,s0\na,0.1,0,0.0,0.2\n";
        let err = ingest_reader(csv.as_bytes(), IngestFormat::SummaryCsv).unwrap_err();
        assert!(err.to_string().contains("must be positive"), "{err}");
    }

    #[test]
    fn ingest_rejects_duplicate_ids() {
        let csv = "id,y1,s1,y0,s0\na,0.1,0.1,0.0,0.2\na,0.2,0.1,0.0,0.2\n";
        let err = ingest_reader(csv.as_bytes(), IngestFormat::SummaryCsv).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)), "{err}");
    }

    #[test]
    fn ingest_reports_row_number() {
        let csv = "id,y1,s1,y0,s0\na,0.1,0.1,0.0,0.2\nb,oops,0.1,0.0,0.2\n";
        let err = ingest_reader(csv.as_bytes(), IngestFormat::SummaryCsv).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn ingest_allows_missing_optional_columns() {
        let csv = "id,y1,s1,y0,s0\na,0.1,0.1,0.0,0.2\n";
        let d = ingest_reader(csv.as_bytes(), IngestFormat::SummaryCsv).unwrap();
        let r = &d.summary_records().unwrap()[0];
        assert_eq!(r.x, None);
        assert_eq!(r.n1, None);
    }

    #[test]
    fn ingest_rejects_count_exceeding_total() {
        let csv = "id,n1,N1,n0,N0\na,8,7,0,5\n";
        let err = ingest_reader(csv.as_bytes(), IngestFormat::CountCsv).unwrap_err();
        assert!(err.to_string().contains("exceeds total"), "{err}");
    }

    #[test]
    fn log_odds_published_values() {
        // George et al. (1997) sham arm: 0 of 5
        let c = CountRecord {
            id: "george1997".into(),
            n1: 1,
            total1: 7,
            n0: 0,
            total0: 5,
        };
        let r = log_odds_transform(&c, LogOddsConvention::Corrected);
        assert!((r.y0 - (0.5f64 / 6.0).ln()).abs() < 1e-12);
        assert!((r.y0 - (-2.48491)).abs() < 1e-4);
        assert!((r.s0 - (1.0f64 / 0.5 + 1.0 / 5.5).sqrt()).abs() < 1e-12);
        assert!((r.s0 - 1.47710).abs() < 1e-4);

        // Berman et al. (2000) active arm: 1 of 10
        let c = CountRecord {
            id: "berman2000".into(),
            n1: 1,
            total1: 10,
            n0: 0,
            total0: 10,
        };
        let r = log_odds_transform(&c, LogOddsConvention::Corrected);
        assert!((r.y1 - (-1.99243)).abs() < 1e-4);
        assert!((r.s1 - 0.87860).abs() < 1e-4);

        // Bakim et al. active arm: 9 of 23
        let c = CountRecord {
            id: "bakim".into(),
            n1: 9,
            total1: 23,
            n0: 1,
            total0: 12,
        };
        let r = log_odds_transform(&c, LogOddsConvention::Corrected);
        assert!((r.y1 - (9.5f64 / 24.0).ln()).abs() < 1e-12);
        assert!((r.y1 - (-0.92676)).abs() < 1e-4);
        assert!((r.s1 - 0.41741).abs() < 1e-4);
    }

    #[test]
    fn log_odds_conventional_denominator() {
        let c = CountRecord {
            id: "a".into(),
            n1: 9,
            total1: 23,
            n0: 0,
            total0: 5,
        };
        let r = log_odds_transform(&c, LogOddsConvention::HaldaneAnscombe);
        assert!((r.y1 - (9.5f64 / 14.5).ln()).abs() < 1e-12);
        // Standard errors agree between conventions.
        let rc = log_odds_transform(&c, LogOddsConvention::Corrected);
        assert_eq!(r.s1, rc.s1);
    }

    #[test]
    fn log_odds_monotone_in_count() {
        let total = 20;
        let mut prev = f64::NEG_INFINITY;
        for n in 0..=total {
            let c = CountRecord {
                id: "m".into(),
                n1: n,
                total1: total,
                n0: 0,
                total0: 5,
            };
            let r = log_odds_transform(&c, LogOddsConvention::Corrected);
            assert!(r.y1 > prev);
            prev = r.y1;
        }
    }

    #[test]
    fn chi_square_worked_example() {
        let d = Dataset::summary(vec![
            record("a", 0.0, 1.0, 0.1, 0.1),
            record("b", 0.0, 1.0, -0.2, 0.1),
        ])
        .unwrap();
        let c = sham_chi_square(&d).unwrap();
        assert!((c.stat - 5.0).abs() < 1e-12);
        assert_eq!(c.df, 2);
        assert!((c.cdf - (1.0 - (-2.5f64).exp())).abs() < 1e-10);
        assert!((c.cdf - 0.91792).abs() < 1e-5);
    }

    #[test]
    fn chi_square_zero_case() {
        let d = Dataset::summary(vec![record("a", 0.3, 1.0, 0.0, 0.1)]).unwrap();
        let c = sham_chi_square(&d).unwrap();
        assert_eq!(c.stat, 0.0);
        assert_eq!(c.cdf, 0.0);
    }

    #[test]
    fn rescale_identity_and_factor() {
        let d = Dataset::summary(vec![record("a", 0.1, 0.05, 0.0, 0.041)]).unwrap();
        let same = rescale_sham_ses(&d, 1.0).unwrap();
        assert_eq!(d, same);
        let factor = (21.3f64 / 38.0).sqrt();
        let scaled = rescale_sham_ses(&d, factor).unwrap();
        let r = &scaled.summary_records().unwrap()[0];
        assert!((r.s0 - 0.030698).abs() < 1e-4);
        assert_eq!(r.s1, 0.05);
        assert!(rescale_sham_ses(&d, 0.0).is_err());
        assert!(rescale_sham_ses(&d, f64::NAN).is_err());
    }

    #[test]
    fn csv_round_trip_exact() {
        let d = Dataset::summary(vec![
            StudyRecord {
                id: "f1".into(),
                x: Some(1.0),
                y1: 0.036,
                s1: 0.041,
                y0: -0.005,
                s0: 0.041,
                n1: Some(32),
                n0: None,
            },
            record("plain", 1.0 / 3.0, 0.1234567890123, -2.5e-7, 9.9),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), IngestFormat::SummaryCsv).unwrap();
        assert_eq!(d, back);

        let mut buf = Vec::new();
        write_json(&d, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), IngestFormat::Json).unwrap();
        assert_eq!(d, back);
    }
}
