//! File emission: CSV tables and versioned JSON documents. Floats are
//! written with the shortest round-trip representation so re-ingestion is
//! exact.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use shamstat::adjust::AdjustmentResult;
use shamstat::estimators::{EstimateSet, SignificanceTable};

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    payload: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    pub fn parse(spec: &str) -> Result<Formats> {
        let mut f = Formats {
            csv: false,
            json: false,
            svg: false,
        };
        for part in spec.split(',') {
            match part.trim() {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                "all" => {
                    f.csv = true;
                    f.json = true;
                    f.svg = true;
                }
                other => anyhow::bail!("unknown output format `{other}` (csv, json, svg, all)"),
            }
        }
        Ok(f)
    }
}

pub struct Emitter {
    pub dir: PathBuf,
    pub formats: Formats,
    pub written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, formats: Formats) -> Result<Emitter> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            formats,
            written: Vec::new(),
        })
    }

    fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<()> {
        if !self.formats.json {
            return Ok(());
        }
        let doc = serde_json::to_string_pretty(payload)?;
        self.write_bytes(name, format!("{doc}\n").as_bytes())
    }

    pub fn json_versioned<T: Serialize>(&mut self, name: &str, payload: T) -> Result<()> {
        if !self.formats.json {
            return Ok(());
        }
        let doc = serde_json::to_string_pretty(&Versioned {
            schema_version: 1,
            payload,
        })?;
        self.write_bytes(name, format!("{doc}\n").as_bytes())
    }

    pub fn svg(&mut self, name: &str, svg: &str) -> Result<()> {
        if !self.formats.svg {
            return Ok(());
        }
        self.write_bytes(name, svg.as_bytes())
    }

    pub fn csv_with<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        if !self.formats.csv {
            return Ok(());
        }
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    pub fn estimate_set(&mut self, stem: &str, e: &EstimateSet) -> Result<()> {
        self.csv_with(&format!("{stem}.csv"), |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["id", "estimate", "se", "df"])?;
            for entry in &e.entries {
                w.write_record([
                    entry.id.as_str(),
                    &entry.estimate.to_string(),
                    &entry.se.to_string(),
                    &entry.df.map(|d| d.to_string()).unwrap_or_default(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        self.json_versioned(&format!("{stem}.json"), e)
    }

    pub fn significance(&mut self, stem: &str, t: &SignificanceTable) -> Result<()> {
        self.csv_with(&format!("{stem}.csv"), |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["id", "statistic", "p", "band"])?;
            for row in &t.rows {
                w.write_record([
                    row.id.as_str(),
                    &row.statistic.to_string(),
                    &row.p.to_string(),
                    &row.band.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        self.json_versioned(&format!("{stem}.json"), t)
    }

    pub fn adjustment(&mut self, stem: &str, a: &AdjustmentResult) -> Result<()> {
        self.csv_with(&format!("{stem}.csv"), |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["id", "lambda", "b_hat", "s_post", "theta_hat", "se"])?;
            for row in &a.rows {
                w.write_record([
                    row.id.as_str(),
                    &row.lambda.to_string(),
                    &row.b_hat.to_string(),
                    &row.s_post.to_string(),
                    &row.theta_hat.to_string(),
                    &row.se.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        self.json_versioned(&format!("{stem}.json"), a)
    }
}
