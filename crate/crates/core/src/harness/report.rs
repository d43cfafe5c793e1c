use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CSV_HEADER: &str = "family,n,depth,width,m_weights,m_total,C,seed,fidelity,noise_floor,final_loss,elapsed_ms";

/// One trained-and-scored network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub family: String,
    pub n: usize,
    pub depth: usize,
    pub width: usize,
    pub m_weights: usize,
    pub m_total: usize,
    /// Achieved `m_total / 2^n`.
    #[serde(rename = "C")]
    pub compression: f64,
    pub seed: u64,
    pub fidelity: f64,
    pub noise_floor: f64,
    pub final_loss: f64,
    pub elapsed_ms: u64,
}

impl ResultRow {
    /// The row with its wall-time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            elapsed_ms: 0,
            ..self.clone()
        }
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(r);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Format(format!("unexpected result header {:?}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub family: String,
    pub n: usize,
    pub depth: usize,
    pub width: usize,
    pub m_total: usize,
    #[serde(rename = "C")]
    pub compression: f64,
    pub runs: usize,
    pub fidelity_mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub fidelity_std: f64,
    pub fidelity_median: f64,
    pub noise_floor_mean: f64,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean, standard deviation and median over seeds for each network shape.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, usize, usize, usize, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.family.clone(), r.n, r.depth, r.width, r.m_total))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((family, n, depth, width, m_total), rs)| {
            let fid: Vec<f64> = rs.iter().map(|r| r.fidelity).collect();
            let (mean, std) = mean_std(&fid);
            SummaryRow {
                family,
                n,
                depth,
                width,
                m_total,
                compression: rs[0].compression,
                runs: rs.len(),
                fidelity_mean: mean,
                fidelity_std: std,
                fidelity_median: median(&fid),
                noise_floor_mean: rs.iter().map(|r| r.noise_floor).sum::<f64>() / rs.len() as f64,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
