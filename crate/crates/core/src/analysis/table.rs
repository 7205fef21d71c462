//! Metric rows and their CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::accuracy::Estimate;
use crate::error::Result;
use crate::learning::Role;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub round: u32,
    pub variant: String,
    pub role: Option<Role>,
    pub metric: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub rows: Vec<MetricRow>,
}

impl MetricTable {
    pub fn push_value(&mut self, round: u32, variant: &str, role: Option<Role>, metric: &str, value: f64) {
        self.rows.push(MetricRow {
            round,
            variant: variant.to_string(),
            role,
            metric: metric.to_string(),
            value,
            lo: None,
            hi: None,
        });
    }

    pub fn push_estimate(&mut self, round: u32, variant: &str, role: Option<Role>, metric: &str, e: Estimate) {
        self.rows.push(MetricRow {
            round,
            variant: variant.to_string(),
            role,
            metric: metric.to_string(),
            value: e.value,
            lo: Some(e.lo),
            hi: Some(e.hi),
        });
    }

    pub fn get(&self, round: u32, variant: &str, role: Option<Role>, metric: &str) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.round == round && r.variant == variant && r.role == role && r.metric == metric)
    }

    pub fn value(&self, round: u32, variant: &str, role: Option<Role>, metric: &str) -> Option<f64> {
        self.get(round, variant, role, metric).map(|r| r.value)
    }

    /// Columns `round,variant,role,metric,value,lo,hi`; absent fields are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "variant", "role", "metric", "value", "lo", "hi"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.round.to_string(),
                r.variant.clone(),
                r.role.map(|x| x.to_string()).unwrap_or_default(),
                r.metric.clone(),
                r.value.to_string(),
                opt(r.lo),
                opt(r.hi),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
