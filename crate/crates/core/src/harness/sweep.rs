use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{generate_state_cached, StateCache};
use super::config::{ExperimentConfig, StateFamily, TrainingOverrides};
use super::report::ResultRow;
use crate::evaluation::{default_sample_count, fidelity, noise_floor, reconstruct_distribution};
use crate::vae::{architecture_for, train};
use crate::{Error, ProbabilityTable, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub depth: usize,
    /// Target compression `C`; the achieved value is reported per row.
    pub compression: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub depth: usize,
    pub compression: f64,
    pub seed: u64,
    pub reason: String,
}

/// Provenance shared by every row of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub n_qubits: usize,
    pub skipped: Vec<SkippedPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub skipped: Vec<SkippedPoint>,
    pub metadata: Metadata,
}

impl ExperimentResult {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        super::report::write_rows(&self.rows, std::io::BufWriter::new(file))?;
        let meta_path = path.as_ref().with_extension("meta.json");
        std::fs::write(meta_path, serde_json::to_string_pretty(&self.metadata)?)?;
        Ok(())
    }
}

/// Trains, reconstructs and scores one network on `table`.
///
/// The seed drives parameter initialisation, batch sampling, noise,
/// reconstruction and the noise-floor estimate through separate streams.
pub fn run_point(
    table: &ProbabilityTable,
    family: &StateFamily,
    point: PointSpec,
    seed: u64,
    overrides: &TrainingOverrides,
    reconstruction_samples: Option<u64>,
) -> Result<ResultRow> {
    let n = table.n_qubits();
    let arch = architecture_for(n, point.depth, point.compression)?;
    let schedule = overrides.apply(seed);
    let (params, log) = train(table, &arch, &schedule)?;
    let samples = reconstruction_samples.unwrap_or_else(|| default_sample_count(n));
    let learned = reconstruct_distribution(&params, samples, seed)?;
    let score = fidelity(table, &learned)?;
    let floor = noise_floor(table, samples, seed)?;
    Ok(ResultRow {
        family: family.kind().to_string(),
        n,
        depth: arch.depth(),
        width: arch.penultimate_width(),
        m_weights: arch.decoder_weight_count(),
        m_total: arch.decoder_parameter_count(),
        compression: arch.compression(),
        seed,
        fidelity: score.value,
        noise_floor: floor,
        final_loss: log.final_loss(),
        elapsed_ms: log.elapsed_ms,
    })
}

fn run_grid(config: &ExperimentConfig, points: Vec<PointSpec>, cache: Option<&StateCache>) -> Result<ExperimentResult> {
    config.validate()?;
    let n_qubits = config.family.n_qubits()?;

    // one table per seed for random families, a single shared table otherwise
    let tables: Vec<ProbabilityTable> = if config.family.is_seeded() {
        config
            .seeds
            .par_iter()
            .map(|&s| generate_state_cached(&config.family, s, cache))
            .collect::<Result<_>>()?
    } else {
        vec![generate_state_cached(&config.family, 0, cache)?]
    };

    let jobs: Vec<(PointSpec, usize)> = points
        .iter()
        .flat_map(|&p| (0..config.seeds.len()).map(move |s| (p, s)))
        .collect();

    let outcomes: Vec<Result<std::result::Result<ResultRow, SkippedPoint>>> = jobs
        .par_iter()
        .map(|&(point, s)| {
            let seed = config.seeds[s];
            let table = &tables[if config.family.is_seeded() { s } else { 0 }];
            match run_point(table, &config.family, point, seed, &config.schedule, config.reconstruction_samples) {
                Ok(row) => Ok(Ok(row)),
                Err(e @ Error::InfeasibleCompression { .. }) => Ok(Err(SkippedPoint {
                    depth: point.depth,
                    compression: point.compression,
                    seed,
                    reason: e.to_string(),
                })),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o? {
            Ok(r) => rows.push(r),
            Err(s) => {
                log::warn!("skipping depth {} at C={}: {}", s.depth, s.compression, s.reason);
                skipped.push(s);
            }
        }
    }
    let metadata = Metadata {
        config_hash: config.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        n_qubits,
        skipped: skipped.clone(),
    };
    Ok(ExperimentResult {
        rows,
        skipped,
        metadata,
    })
}

/// Every depth at the fixed compression `compressions[0]`, so each depth
/// targets the same decoder parameter budget.
pub fn run_depth_sweep(config: &ExperimentConfig, cache: Option<&StateCache>) -> Result<ExperimentResult> {
    if config.compressions.len() != 1 {
        return Err(Error::invalid("a depth sweep takes exactly one fixed compression"));
    }
    let c = config.compressions[0];
    let points = config.depths.iter().map(|&depth| PointSpec { depth, compression: c }).collect();
    run_grid(config, points, cache)
}

/// Every compression at the fixed depth `depths[0]`.
pub fn run_compression_sweep(config: &ExperimentConfig, cache: Option<&StateCache>) -> Result<ExperimentResult> {
    if config.depths.len() != 1 {
        return Err(Error::invalid("a compression sweep takes exactly one fixed depth"));
    }
    let depth = config.depths[0];
    let points = config
        .compressions
        .iter()
        .map(|&compression| PointSpec { depth, compression })
        .collect();
    run_grid(config, points, cache)
}
