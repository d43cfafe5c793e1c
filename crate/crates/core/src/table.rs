//! Exact probability tables over the 2^n computational basis strings, plus
//! the QDST binary cache format and the CSV export.
//!
//! QDST layout: `b"QDST"`, version `u8 = 1`, `u8 n_qubits`, then 2^n
//! little-endian `f64` probabilities in basis order.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

pub const QDST_MAGIC: &[u8; 4] = b"QDST";
pub const QDST_VERSION: u8 = 1;

/// Largest number of dense entries (amplitudes or probabilities) the
/// generators will allocate.
pub const DEFAULT_ENTRY_BUDGET: u128 = 1 << 24;

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    n_qubits: usize,
    probs: Vec<f64>,
}

impl ProbabilityTable {
    pub fn new(n_qubits: usize, probs: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 64 {
            return Err(Error::invalid(format!("n_qubits must be in 1..=64, got {n_qubits}")));
        }
        if (probs.len() as u128) != 1u128 << n_qubits {
            return Err(Error::invalid(format!(
                "table for {n_qubits} qubits needs {} entries, got {}",
                1u128 << n_qubits,
                probs.len()
            )));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::invalid(format!("entry {i} is not a probability: {p}")));
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { n_qubits, probs })
    }

    /// Normalises integer counts into relative frequencies.
    pub fn from_counts(n_qubits: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("no counts to normalise"));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(n_qubits, probs)
    }

    pub fn uniform(n_qubits: usize) -> Result<Self> {
        let dim = check_dim(n_qubits)?;
        Self::new(n_qubits, vec![1.0 / dim as f64; dim])
    }

    pub fn point_mass(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = check_dim(n_qubits)?;
        if index >= dim {
            return Err(Error::invalid(format!("index {index} out of range for {n_qubits} qubits")));
        }
        let mut probs = vec![0.0; dim];
        probs[index] = 1.0;
        Self::new(n_qubits, probs)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Marginal probability that qubit `q` (0-based, 0 = most significant) reads 1.
    pub fn marginal_one(&self, q: usize) -> f64 {
        let shift = self.n_qubits - 1 - q;
        neumaier_sum(
            self.probs
                .iter()
                .enumerate()
                .filter(|(i, _)| (i >> shift) & 1 == 1)
                .map(|(_, p)| *p),
        )
    }

    pub fn total_variation(&self, other: &ProbabilityTable) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::invalid("tables have different qubit counts"));
        }
        let sum = neumaier_sum(self.probs.iter().zip(&other.probs).map(|(p, q)| (p - q).abs()));
        Ok(0.5 * sum)
    }

    pub fn to_qdst_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + 8 * self.probs.len());
        out.extend_from_slice(QDST_MAGIC);
        out.push(QDST_VERSION);
        out.push(self.n_qubits as u8);
        for p in &self.probs {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_qdst_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 6 || &bytes[..4] != QDST_MAGIC {
            return Err(Error::Format("missing QDST magic".into()));
        }
        if bytes[4] != QDST_VERSION {
            return Err(Error::Format(format!("unsupported QDST version {}", bytes[4])));
        }
        let n = bytes[5] as usize;
        if n == 0 || n > 40 {
            return Err(Error::Format(format!("implausible qubit count {n}")));
        }
        let body = &bytes[6..];
        if body.len() as u128 != 8 * (1u128 << n) {
            return Err(Error::Format(format!(
                "QDST body has {} bytes, expected {}",
                body.len(),
                8 * (1u128 << n)
            )));
        }
        let probs = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(n, probs).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_qdst(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_qdst_bytes())?;
        Ok(())
    }

    pub fn read_qdst(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_qdst_bytes(&bytes)
    }

    /// CSV with header `index,bitstring,probability`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "bitstring", "probability"])?;
        for (i, p) in self.probs.iter().enumerate() {
            w.write_record([i.to_string(), bitstring(i, self.n_qubits), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut n = None;
        let mut probs = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = || Error::Format(format!("bad CSV row {row}"));
            let index: usize = rec.get(0).ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let bits = rec.get(1).ok_or_else(bad)?;
            let p: f64 = rec.get(2).ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if index != row || parse_bitstring(bits) != Some(index) {
                return Err(bad());
            }
            n.get_or_insert(bits.len());
            probs.push(p);
        }
        Self::new(n.unwrap_or(0), probs)
    }
}

fn check_dim(n_qubits: usize) -> Result<usize> {
    if n_qubits == 0 || n_qubits > 40 {
        return Err(Error::invalid(format!("n_qubits must be in 1..=40, got {n_qubits}")));
    }
    let dim = 1u128 << n_qubits;
    if dim > DEFAULT_ENTRY_BUDGET {
        return Err(Error::ResourceLimit {
            what: "probability table",
            required: dim,
            budget: DEFAULT_ENTRY_BUDGET,
        });
    }
    Ok(dim as usize)
}

/// Big-endian bit string of `index` over `n` bits.
pub fn bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if (index >> (n - 1 - q)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bitstring(bits: &str) -> Option<usize> {
    if bits.is_empty() || bits.len() > 63 {
        return None;
    }
    bits.bytes().try_fold(0usize, |acc, b| match b {
        b'0' => Some(acc << 1),
        b'1' => Some((acc << 1) | 1),
        _ => None,
    })
}

/// Neumaier-compensated sum; the order of summation is the iterator order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
