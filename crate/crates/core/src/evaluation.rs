//! Scoring a trained decoder: latent-space reconstruction, Bhattacharyya
//! fidelity, and the entanglement-based bond-dimension estimate.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, Purpose};
use crate::sampling::Sampler;
use crate::states::AmplitudeState;
use crate::table::neumaier_sum;
use crate::vae::{decoder_forward, Parameters};
use crate::{Error, ProbabilityTable, Result};

const RECONSTRUCT_CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityScore {
    pub value: f64,
    /// Samples behind the empirical side, 0 when both tables are exact.
    pub sample_count: u64,
    pub exact_vs_empirical: bool,
}

/// `Σ_i √(p_i q_i)`.
pub fn fidelity(p: &ProbabilityTable, q: &ProbabilityTable) -> Result<FidelityScore> {
    if p.n_qubits() != q.n_qubits() {
        return Err(Error::invalid(format!(
            "cannot compare a {}-qubit table with a {}-qubit table",
            p.n_qubits(),
            q.n_qubits()
        )));
    }
    let value = neumaier_sum(p.probs().iter().zip(q.probs()).map(|(a, b)| (a * b).sqrt()));
    Ok(FidelityScore {
        value,
        sample_count: 0,
        exact_vs_empirical: false,
    })
}

/// Fidelity of an exact table against an empirical estimate built from `sample_count` draws.
pub fn fidelity_vs_empirical(exact: &ProbabilityTable, empirical: &ProbabilityTable, sample_count: u64) -> Result<FidelityScore> {
    Ok(FidelityScore {
        sample_count,
        exact_vs_empirical: true,
        ..fidelity(exact, empirical)?
    })
}

pub fn default_sample_count(n: usize) -> u64 {
    100 * (1u64 << n)
}

/// Splits `total` draws into fixed chunks, each with its own stream, and
/// merges integer counts; the result does not depend on scheduling.
fn chunked_counts<F>(n: usize, total: u64, draw_chunk: F) -> Result<Vec<u64>>
where
    F: Fn(u64, u64, &mut [u64]) -> Result<()> + Sync,
{
    let chunks = total.div_ceil(RECONSTRUCT_CHUNK);
    let partial: Vec<Result<Vec<u64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = RECONSTRUCT_CHUNK.min(total - c * RECONSTRUCT_CHUNK);
            let mut counts = vec![0u64; 1usize << n];
            draw_chunk(c, len, &mut counts)?;
            Ok(counts)
        })
        .collect();
    let mut counts = vec![0u64; 1usize << n];
    for part in partial {
        for (a, b) in counts.iter_mut().zip(part?) {
            *a += b;
        }
    }
    Ok(counts)
}

/// Samples `z ~ N(0, I)`, decodes it and draws each output bit from its
/// Bernoulli probability; relative string frequencies form the table.
pub fn reconstruct_distribution(params: &Parameters, sample_count: u64, seed: u64) -> Result<ProbabilityTable> {
    if sample_count == 0 {
        return Err(Error::invalid("reconstruction needs at least one sample"));
    }
    let n = params.architecture().n();
    let latent = params.architecture().latent_dim();
    let counts = chunked_counts(n, sample_count, |c, len, counts| {
        let mut rng = stream(seed, Purpose::Reconstruct, c);
        let mut z = vec![0.0; latent];
        for _ in 0..len {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let probs = decoder_forward(params, &z)?;
            let idx = probs
                .iter()
                .fold(0usize, |acc, p| (acc << 1) | usize::from(rng.gen::<f64>() < *p));
            counts[idx] += 1;
        }
        Ok(())
    })?;
    ProbabilityTable::from_counts(n, &counts)
}

/// Empirical copy of `table` from `sample_count` exact draws.
pub fn resample_table(table: &ProbabilityTable, sample_count: u64, seed: u64) -> Result<ProbabilityTable> {
    if sample_count == 0 {
        return Err(Error::invalid("resampling needs at least one sample"));
    }
    let sampler = Sampler::new(table, seed);
    let counts = chunked_counts(table.n_qubits(), sample_count, |c, len, counts| {
        let mut rng = stream(seed, Purpose::NoiseFloor, c);
        for _ in 0..len {
            counts[sampler.sample_one(&mut rng)] += 1;
        }
        Ok(())
    })?;
    ProbabilityTable::from_counts(table.n_qubits(), &counts)
}

/// Fidelity between a table and an empirical copy of itself: the best score
/// any reconstruction scored with the same sample budget can expect.
pub fn noise_floor(table: &ProbabilityTable, sample_count: u64, seed: u64) -> Result<f64> {
    let copy = resample_table(table, sample_count, seed)?;
    Ok(fidelity(table, &copy)?.value)
}

/// Singular values of the `2^cut × 2^{n−cut}` amplitude matrix; rows index
/// the first `cut` qubits.
pub fn schmidt_coefficients(state: &AmplitudeState, cut: usize) -> Result<Vec<f64>> {
    let n = state.n_qubits();
    if cut == 0 || cut >= n {
        return Err(Error::invalid(format!("cut must lie in 1..={}, got {cut}", n.saturating_sub(1))));
    }
    let rows = 1usize << cut;
    let cols = 1usize << (n - cut);
    let amps = state.amplitudes();
    let m = DMatrix::from_fn(rows, cols, |r, c| amps[r * cols + c]);
    Ok(m.singular_values().iter().copied().collect())
}

/// Von Neumann entropy in bits across `cut`: `−Σ λ² log₂ λ²`.
pub fn entanglement_entropy(state: &AmplitudeState, cut: usize) -> Result<f64> {
    let sv = schmidt_coefficients(state, cut)?;
    Ok(entropy_of_weights(sv.iter().map(|s| s * s)))
}

pub(crate) fn entropy_of_weights(weights: impl IntoIterator<Item = f64>) -> f64 {
    let s = -neumaier_sum(
        weights
            .into_iter()
            .filter(|w| *w > 0.0)
            .map(|w| w * w.log2()),
    );
    s.max(0.0)
}

pub fn max_entanglement_entropy(state: &AmplitudeState) -> Result<f64> {
    (1..state.n_qubits()).try_fold(0.0f64, |best, cut| Ok(best.max(entanglement_entropy(state, cut)?)))
}

/// `D = 2^{S_max}`; 1 for a single qubit, which has no cut.
pub fn estimated_bond_dimension(state: &AmplitudeState) -> Result<f64> {
    Ok(max_entanglement_entropy(state)?.exp2())
}
