use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::arch::NetworkArchitecture;
use super::network::{gradient, Parameters};
use crate::rng::{stream, Purpose};
use crate::sampling::Sampler;
use crate::{Error, ProbabilityTable, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSchedule {
    pub total_batches: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Final weight on the KL term.
    pub warmup_final_weight: f64,
    /// Fraction of the run over which the KL weight ramps up linearly.
    pub warmup_fraction: f64,
    pub seed: u64,
    /// Record a log line every this many batches (the last batch is always logged).
    pub log_interval: usize,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self::desk(0)
    }
}

impl TrainingSchedule {
    /// 5,000 batches of 256 samples.
    pub fn desk(seed: u64) -> Self {
        Self {
            total_batches: 5_000,
            batch_size: 256,
            learning_rate: 1e-3,
            warmup_final_weight: 0.85,
            warmup_fraction: 1.0,
            seed,
            log_interval: 100,
        }
    }

    /// 50,000 batches of 1,000 samples.
    pub fn full(seed: u64) -> Self {
        Self {
            total_batches: 50_000,
            batch_size: 1_000,
            log_interval: 500,
            ..Self::desk(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_batches == 0 {
            return Err(Error::invalid("schedule needs at least one batch"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction <= 1.0) {
            return Err(Error::invalid("warm-up fraction must lie in (0, 1]"));
        }
        if !(self.warmup_final_weight.is_finite() && self.warmup_final_weight >= 0.0) {
            return Err(Error::invalid("warm-up final weight must be non-negative"));
        }
        Ok(())
    }

    pub fn beta(&self, step: usize) -> f64 {
        warmup_weight(step, self.total_batches, self.warmup_fraction, self.warmup_final_weight)
    }
}

/// `final · min(1, step / (fraction · total))`.
pub fn warmup_weight(step: usize, total: usize, fraction: f64, final_weight: f64) -> f64 {
    let span = fraction * total as f64;
    if span <= 0.0 {
        return final_weight;
    }
    final_weight * (step as f64 / span).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    pub loss: f64,
    pub beta: f64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
    /// Mean batch loss for every step.
    pub losses: Vec<f64>,
    pub elapsed_ms: u64,
}

impl TrainingLog {
    /// Mean batch loss over the trailing `fraction` of steps (at least one).
    pub fn tail_mean(&self, fraction: f64) -> f64 {
        let k = ((self.losses.len() as f64 * fraction).ceil() as usize).clamp(1, self.losses.len().max(1));
        let tail = &self.losses[self.losses.len().saturating_sub(k)..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }

    pub fn final_loss(&self) -> f64 {
        self.tail_mean(0.05)
    }

    /// CSV `step,loss,beta,elapsed_ms`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["step", "loss", "beta", "elapsed_ms"])?;
        for r in &self.records {
            w.write_record([r.step.to_string(), r.loss.to_string(), r.beta.to_string(), r.elapsed_ms.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains a fresh network on on-the-fly samples from `table`.
///
/// Batch `k` (0-based) draws its strings and its reparameterisation noise
/// from streams keyed by `k`, uses KL weight `β(k)` and Adam step `k + 1`.
pub fn train(
    table: &ProbabilityTable,
    arch: &NetworkArchitecture,
    schedule: &TrainingSchedule,
) -> Result<(Parameters, TrainingLog)> {
    schedule.validate()?;
    if arch.n() != table.n_qubits() {
        return Err(Error::invalid(format!(
            "network width {} does not match the {}-qubit table",
            arch.n(),
            table.n_qubits()
        )));
    }
    let start = Instant::now();
    let mut params = Parameters::init(arch, &mut stream(schedule.seed, Purpose::Init, 0));
    let mut adam = AdamState::new(params.len());
    let cfg = AdamConfig {
        learning_rate: schedule.learning_rate,
        ..AdamConfig::default()
    };
    let sampler = Sampler::new(table, schedule.seed);
    let latent = arch.latent_dim();
    let mut noise = vec![0.0; schedule.batch_size * latent];
    let mut log = TrainingLog {
        losses: Vec::with_capacity(schedule.total_batches),
        ..TrainingLog::default()
    };

    for k in 0..schedule.total_batches {
        let batch = sampler.draw_stream(k as u64, schedule.batch_size);
        let mut rng = stream(schedule.seed, Purpose::Noise, k as u64);
        noise.iter_mut().for_each(|e| *e = rng.sample(StandardNormal));
        let beta = schedule.beta(k);
        let (grads, batch_loss) = gradient(&params, &batch, &noise, beta).map_err(|e| at_step(e, k + 1))?;
        adam_step(&mut params, &grads, &mut adam, k as u64 + 1, &cfg)?;
        if let Some(i) = params.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(at_step(Error::numeric(params.path_of(i)), k + 1));
        }
        log.losses.push(batch_loss);
        let step = k + 1;
        if step % schedule.log_interval.max(1) == 0 || step == schedule.total_batches {
            log.records.push(LogRecord {
                step,
                loss: batch_loss,
                beta,
                elapsed_ms: start.elapsed().as_millis() as u64,
            });
        }
    }
    log.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok((params, log))
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::NumericFailure { location, .. } => Error::NumericFailure {
            location,
            step: Some(step),
        },
        other => other,
    }
}
