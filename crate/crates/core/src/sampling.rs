//! Alias-method sampling of basis strings from an exact table, and
//! frequency tables from sampled strings.

use std::io::Write;

use rand::Rng;

use crate::rng::{stream, Purpose};
use crate::table::bitstring;
use crate::{Error, ProbabilityTable, Result};

/// Basis strings stored as big-endian indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    n_qubits: usize,
    indices: Vec<usize>,
}

impl SampleBatch {
    pub fn from_indices(n_qubits: usize, indices: Vec<usize>) -> Result<Self> {
        if let Some(bad) = indices.iter().find(|&&i| i >> n_qubits != 0) {
            return Err(Error::invalid(format!("index {bad} does not fit in {n_qubits} bits")));
        }
        Ok(Self { n_qubits, indices })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Bits of sample `k`, qubit 1 first.
    pub fn string(&self, k: usize) -> Vec<u8> {
        index_to_bits(self.indices[k], self.n_qubits)
    }

    pub fn strings(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        self.indices.iter().map(|&i| index_to_bits(i, self.n_qubits))
    }

    /// One ASCII bit string per line.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        for &i in &self.indices {
            writeln!(w, "{}", bitstring(i, self.n_qubits))?;
        }
        Ok(())
    }
}

pub fn index_to_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| ((index >> (n - 1 - q)) & 1) as u8).collect()
}

pub fn bits_to_index(bits: &[u8]) -> Result<usize> {
    bits.iter().try_fold(0usize, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as usize),
        _ => Err(Error::invalid(format!("bit value {b} is not 0 or 1"))),
    })
}

/// Vose alias table. Immutable after construction; draws name their stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    n_qubits: usize,
    accept: Vec<f64>,
    alias: Vec<usize>,
    seed: u64,
    next_stream: u64,
}

impl Sampler {
    pub fn new(table: &ProbabilityTable, seed: u64) -> Self {
        let probs = table.probs();
        let len = probs.len();
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * len as f64).collect();
        let mut accept = vec![0.0; len];
        let mut alias: Vec<usize> = (0..len).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..len).partition(|&i| scaled[i] < 1.0);

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            accept[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding. A zero-probability leftover must
        // never be accepted, so it is routed to the heaviest outcome instead.
        let heaviest = probs
            .iter()
            .enumerate()
            .fold(0, |best, (i, p)| if *p > probs[best] { i } else { best });
        for i in small.into_iter().chain(large) {
            if probs[i] > 0.0 {
                accept[i] = 1.0;
            } else {
                accept[i] = 0.0;
                alias[i] = heaviest;
            }
        }
        Self {
            n_qubits: table.n_qubits(),
            accept,
            alias,
            seed,
            next_stream: 0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Per-column acceptance weights of the alias table.
    pub fn acceptance(&self) -> &[f64] {
        &self.accept
    }

    #[inline]
    pub fn sample_one<R: Rng>(&self, rng: &mut R) -> usize {
        let col = rng.gen_range(0..self.accept.len());
        let u: f64 = rng.gen();
        if u < self.accept[col] {
            col
        } else {
            self.alias[col]
        }
    }

    /// `count` draws from the stream `stream_index`, independent of call order.
    pub fn draw_stream(&self, stream_index: u64, count: usize) -> SampleBatch {
        let mut rng = stream(self.seed, Purpose::Draw, stream_index);
        let indices = (0..count).map(|_| self.sample_one(&mut rng)).collect();
        SampleBatch {
            n_qubits: self.n_qubits,
            indices,
        }
    }

    /// Draws from the next unused stream.
    pub fn draw(&mut self, count: usize) -> Result<SampleBatch> {
        if count == 0 {
            return Err(Error::invalid("draw count must be at least 1"));
        }
        let batch = self.draw_stream(self.next_stream, count);
        self.next_stream += 1;
        Ok(batch)
    }
}

pub fn build_sampler(table: &ProbabilityTable, seed: u64) -> Sampler {
    Sampler::new(table, seed)
}

/// Relative frequencies of a stream of bit strings over `n` qubits.
pub fn empirical_table<I, S>(strings: I, n: usize) -> Result<ProbabilityTable>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut counts = vec![0u64; 1usize << n];
    for s in strings {
        let s = s.as_ref();
        if s.len() != n {
            return Err(Error::invalid(format!("string of length {} in a {n}-qubit stream", s.len())));
        }
        counts[bits_to_index(s)?] += 1;
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::invalid("cannot build an empirical table from an empty stream"));
    }
    ProbabilityTable::from_counts(n, &counts)
}

pub fn empirical_from_indices(indices: &[usize], n: usize) -> Result<ProbabilityTable> {
    if indices.is_empty() {
        return Err(Error::invalid("cannot build an empirical table from an empty stream"));
    }
    let mut counts = vec![0u64; 1usize << n];
    for &i in indices {
        *counts
            .get_mut(i)
            .ok_or_else(|| Error::invalid(format!("index {i} out of range")))? += 1;
    }
    ProbabilityTable::from_counts(n, &counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_only_emits_its_index() {
        let t = ProbabilityTable::point_mass(3, 5).unwrap();
        let mut s = build_sampler(&t, 1);
        let batch = s.draw(100).unwrap();
        assert!(batch.indices().iter().all(|&i| i == 5));
        assert!(batch.strings().all(|b| b == vec![1, 0, 1]));
    }

    #[test]
    fn uniform_table_has_flat_weights() {
        let t = ProbabilityTable::uniform(4).unwrap();
        let s = build_sampler(&t, 1);
        assert!(s.acceptance().iter().all(|&a| (a - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_count_is_rejected() {
        let t = ProbabilityTable::uniform(2).unwrap();
        assert!(build_sampler(&t, 0).draw(0).is_err());
    }

    #[test]
    fn empirical_edge_cases() {
        let one = empirical_table([vec![1u8, 1, 0]], 3).unwrap();
        assert_eq!(one.probs()[0b110], 1.0);
        let all = empirical_table((0..8).map(|i| index_to_bits(i, 3)), 3).unwrap();
        assert!(all.probs().iter().all(|&p| p == 0.125));
        let empty: Vec<Vec<u8>> = vec![];
        assert!(matches!(empirical_table(empty, 3), Err(Error::InvalidArgument(_))));
        assert!(empirical_table([vec![1u8, 0]], 3).is_err());
    }

    #[test]
    fn dump_is_ascii_bits() {
        let b = SampleBatch::from_indices(3, vec![0, 6]).unwrap();
        let mut out = Vec::new();
        b.write_dump(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "000\n110\n");
        assert!(SampleBatch::from_indices(2, vec![4]).is_err());
    }
}
