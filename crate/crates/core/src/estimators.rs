//! The exposed-only and difference estimators with the p-value
//! classification used in the originally published analysis.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExposedOnly,
    Difference,
    LinearAdjust,
    Bayes,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::ExposedOnly => "exposed-only",
            Method::Difference => "difference",
            Method::LinearAdjust => "linear-adjust",
            Method::Bayes => "bayes",
        };
        f.write_str(s)
    }
}

/// One per-study point estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub id: String,
    pub estimate: f64,
    pub se: f64,
    /// Degrees of freedom for t-based significance, when sample sizes exist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
}

/// Per-study estimates from one method, in source-dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub method: Method,
    pub entries: Vec<Estimate>,
}

/// Estimate each effect by the active-arm measurement alone.
pub fn exposed_only(dataset: &Dataset) -> Result<EstimateSet> {
    let entries = dataset
        .summary_records()?
        .iter()
        .map(|r| Estimate {
            id: r.id.clone(),
            estimate: r.y1,
            se: r.s1,
            df: r.n1.map(|n| (n - 1) as f64),
        })
        .collect();
    Ok(EstimateSet {
        method: Method::ExposedOnly,
        entries,
    })
}

/// Estimate each effect by subtracting the sham measurement, adding variances.
pub fn difference(dataset: &Dataset) -> Result<EstimateSet> {
    let entries = dataset
        .summary_records()?
        .iter()
        .map(|r| Estimate {
            id: r.id.clone(),
            estimate: r.y1 - r.y0,
            se: (r.s1 * r.s1 + r.s0 * r.s0).sqrt(),
            df: r.n1.zip(r.n0).map(|(n1, n0)| (n1 + n0 - 2) as f64),
        })
        .collect();
    Ok(EstimateSet {
        method: Method::Difference,
        entries,
    })
}

/// Reference distribution for two-sided p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Normal,
    /// t with the per-study degrees of freedom carried on the estimates.
    TDist,
}

/// Significance band, half-open at both thresholds: p = 0.01 falls in the
/// middle band and p = 0.05 in the top band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "p<0.01")]
    Below01,
    #[serde(rename = "0.01<=p<0.05")]
    Between,
    #[serde(rename = "p>=0.05")]
    NotSignificant,
}

impl Band {
    pub fn from_p(p: f64) -> Band {
        if p < 0.01 {
            Band::Below01
        } else if p < 0.05 {
            Band::Between
        } else {
            Band::NotSignificant
        }
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Band::Below01 => "p<0.01",
            Band::Between => "0.01<=p<0.05",
            Band::NotSignificant => "p>=0.05",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub id: String,
    /// z or t statistic, estimate / se.
    pub statistic: f64,
    pub p: f64,
    pub band: Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTable {
    pub reference: Reference,
    pub rows: Vec<SignificanceRow>,
}

/// Two-sided p-values and band classification for an estimate set.
pub fn classify_significance(
    estimates: &EstimateSet,
    reference: Reference,
) -> Result<SignificanceTable> {
    let rows = estimates
        .entries
        .iter()
        .map(|e| {
            let statistic = e.estimate / e.se;
            let p = match reference {
                Reference::Normal => math::normal_two_sided_p(statistic),
                Reference::TDist => {
                    let df = e.df.ok_or_else(|| {
                        Error::invalid_for(
                            "df",
                            &e.id,
                            "t-based classification requires per-arm sample sizes",
                        )
                    })?;
                    math::student_t_two_sided_p(statistic, df)
                }
            };
            Ok(SignificanceRow {
                id: e.id.clone(),
                statistic,
                p,
                band: Band::from_p(p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SignificanceTable { reference, rows })
}
