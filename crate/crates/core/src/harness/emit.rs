//! Result rows, CSV round trip and gnuplot-friendly data blocks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment,M,K,snr_dB,method,metric,value,stderr,trials,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Empty for SNR-independent metrics.
    #[serde(rename = "snr_dB")]
    pub snr_db: Option<f64>,
    pub method: String,
    pub metric: String,
    pub value: f64,
    /// Present for Monte Carlo metrics only.
    pub stderr: Option<f64>,
    /// Channel realizations behind the value; 0 for closed forms.
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    /// Rows matching a method and metric, in table order.
    pub fn series<'a>(&'a self, method: &'a str, metric: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.method == method && r.metric == metric)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        if self.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::Config(format!("unexpected CSV header '{}'", header.join(","))));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// One block per `(experiment, method, metric)` separated by two blank
    /// lines, columns `M K snr_dB value stderr`; missing fields print as
    /// `NaN`.
    pub fn to_gnuplot_string(&self) -> Result<String> {
        if self.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut groups: BTreeMap<(&str, &str, &str), Vec<&ResultRow>> = BTreeMap::new();
        for r in &self.rows {
            groups
                .entry((&r.experiment, &r.method, &r.metric))
                .or_default()
                .push(r);
        }
        let mut out = String::new();
        for (i, ((exp, method, metric), rows)) in groups.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# {exp} {method} {metric}");
            let _ = writeln!(out, "# M K snr_dB value stderr");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {}",
                    r.m,
                    r.k,
                    r.snr_db.unwrap_or(f64::NAN),
                    r.value,
                    r.stderr.unwrap_or(f64::NAN)
                );
            }
        }
        Ok(out)
    }

    pub fn write_gnuplot(&self, path: &Path) -> Result<()> {
        let text = self.to_gnuplot_string()?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
