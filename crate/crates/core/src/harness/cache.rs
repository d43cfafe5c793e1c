use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::StateFamily;
use crate::hard::{hard_distribution, HardSpec};
use crate::states::{evolve_long_range, haar_random_state, product_random_state, HamiltonianSpec, DEFAULT_ALPHA};
use crate::{Error, ProbabilityTable, Result};

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "QVAE_CACHE_DIR";

/// Canonical parameter string for a state; random families include the seed.
pub fn cache_key(family: &StateFamily, seed: u64) -> String {
    match *family {
        StateFamily::Product { n } => format!("product:n={n}:seed={seed}"),
        StateFamily::Haar { n } => format!("haar:n={n}:seed={seed}"),
        StateFamily::Hard { hard_n, hard_l } => format!("hard:n={hard_n}:L={hard_l}"),
        StateFamily::Hamiltonian { n, time } => {
            format!("hamiltonian:n={n}:alpha={DEFAULT_ALPHA:?}:t={time:?}")
        }
    }
}

/// Exact table for a family, computed from scratch.
pub fn generate_state(family: &StateFamily, seed: u64) -> Result<ProbabilityTable> {
    family.validate()?;
    match *family {
        StateFamily::Product { n } => Ok(product_random_state(n, seed)?.probabilities()),
        StateFamily::Haar { n } => Ok(haar_random_state(n, seed)?.probabilities()),
        StateFamily::Hard { hard_n, hard_l } => hard_distribution(&HardSpec::new(hard_n, hard_l)?),
        StateFamily::Hamiltonian { n, time } => Ok(evolve_long_range(&HamiltonianSpec::new(n, time)?)?.probabilities()),
    }
}

/// QDST files keyed by the SHA-256 of [`cache_key`].
#[derive(Debug, Clone)]
pub struct StateCache {
    dir: PathBuf,
}

impl StateCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$QVAE_CACHE_DIR` when set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, family: &StateFamily, seed: u64) -> PathBuf {
        let key = cache_key(family, seed);
        let digest = Sha256::digest(key.as_bytes());
        let hex: String = digest.iter().take(12).map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{}-{hex}.qdst", family.kind()))
    }

    /// Returns the cached table, or generates and stores it.
    pub fn get_or_generate(&self, family: &StateFamily, seed: u64) -> Result<(ProbabilityTable, bool)> {
        let path = self.path_for(family, seed);
        if path.exists() {
            let bytes = std::fs::read(&path)?;
            let table = ProbabilityTable::from_qdst_bytes(&bytes)
                .map_err(|e| Error::CacheIntegrity(format!("{}: {e}", path.display())))?;
            if table.n_qubits() != family.n_qubits()? {
                return Err(Error::CacheIntegrity(format!(
                    "{} holds a {}-qubit table",
                    path.display(),
                    table.n_qubits()
                )));
            }
            return Ok((table, true));
        }
        let table = generate_state(family, seed)?;
        std::fs::create_dir_all(&self.dir)?;
        // write-then-rename so concurrent readers never see a partial file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, table.to_qdst_bytes())?;
        std::fs::rename(&tmp, &path)?;
        Ok((table, false))
    }
}

/// Uses the cache when one is configured.
pub fn generate_state_cached(family: &StateFamily, seed: u64, cache: Option<&StateCache>) -> Result<ProbabilityTable> {
    match cache {
        Some(c) => c.get_or_generate(family, seed).map(|(t, _)| t),
        None => generate_state(family, seed),
    }
}
