use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::hard::HardSpec;
use crate::states::DEFAULT_TIME;
use crate::vae::TrainingSchedule;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Product,
    Haar,
    Hard,
    Hamiltonian,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "product" => Ok(FamilyKind::Product),
            "haar" => Ok(FamilyKind::Haar),
            "hard" => Ok(FamilyKind::Hard),
            "hamiltonian" => Ok(FamilyKind::Hamiltonian),
            other => Err(Error::invalid(format!(
                "unknown state family {other:?} (expected product, haar, hard or hamiltonian)"
            ))),
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FamilyKind::Product => "product",
            FamilyKind::Haar => "haar",
            FamilyKind::Hard => "hard",
            FamilyKind::Hamiltonian => "hamiltonian",
        })
    }
}

/// A state family with its parameters. Random families take their state
/// seed from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum StateFamily {
    Product { n: usize },
    Haar { n: usize },
    Hard { hard_n: usize, hard_l: usize },
    Hamiltonian { n: usize, time: f64 },
}

impl StateFamily {
    /// Builds a family from the CLI-style tuple; absent values fall back to
    /// `hard_n = 3`, `hard_l = 4` and `time = 20`.
    pub fn from_parts(
        kind: FamilyKind,
        n: Option<usize>,
        hard_n: Option<usize>,
        hard_l: Option<usize>,
        time: Option<f64>,
    ) -> Result<Self> {
        let need_n = || n.ok_or_else(|| Error::invalid(format!("family {kind} needs a qubit count")));
        let fam = match kind {
            FamilyKind::Product => StateFamily::Product { n: need_n()? },
            FamilyKind::Haar => StateFamily::Haar { n: need_n()? },
            FamilyKind::Hard => StateFamily::Hard {
                hard_n: hard_n.unwrap_or(3),
                hard_l: hard_l.unwrap_or(4),
            },
            FamilyKind::Hamiltonian => StateFamily::Hamiltonian {
                n: need_n()?,
                time: time.unwrap_or(DEFAULT_TIME),
            },
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            StateFamily::Product { .. } => FamilyKind::Product,
            StateFamily::Haar { .. } => FamilyKind::Haar,
            StateFamily::Hard { .. } => FamilyKind::Hard,
            StateFamily::Hamiltonian { .. } => FamilyKind::Hamiltonian,
        }
    }

    pub fn n_qubits(&self) -> Result<usize> {
        match *self {
            StateFamily::Product { n } | StateFamily::Haar { n } | StateFamily::Hamiltonian { n, .. } => Ok(n),
            StateFamily::Hard { hard_n, hard_l } => Ok(HardSpec::new(hard_n, hard_l)?.n_qubits()),
        }
    }

    /// Whether the generated table depends on the seed.
    pub fn is_seeded(&self) -> bool {
        matches!(self, StateFamily::Product { .. } | StateFamily::Haar { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StateFamily::Product { n } | StateFamily::Haar { n } if n == 0 => {
                Err(Error::invalid("qubit count must be at least 1"))
            }
            StateFamily::Hamiltonian { n, time } => crate::states::HamiltonianSpec::new(n, time).map(|_| ()),
            StateFamily::Hard { hard_n, hard_l } => HardSpec::new(hard_n, hard_l).map(|_| ()),
            _ => Ok(()),
        }
    }
}

/// Optional replacements for the desk-scale schedule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingOverrides {
    pub batches: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub warmup_final: Option<f64>,
    pub warmup_fraction: Option<f64>,
    pub log_interval: Option<usize>,
}

impl TrainingOverrides {
    pub fn apply(&self, seed: u64) -> TrainingSchedule {
        let base = TrainingSchedule::desk(seed);
        TrainingSchedule {
            total_batches: self.batches.unwrap_or(base.total_batches),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            learning_rate: self.lr.unwrap_or(base.learning_rate),
            warmup_final_weight: self.warmup_final.unwrap_or(base.warmup_final_weight),
            warmup_fraction: self.warmup_fraction.unwrap_or(base.warmup_fraction),
            log_interval: self.log_interval.unwrap_or(base.log_interval),
            seed,
        }
    }

    /// Fields set in `other` win.
    pub fn merged(&self, other: &TrainingOverrides) -> TrainingOverrides {
        TrainingOverrides {
            batches: other.batches.or(self.batches),
            batch_size: other.batch_size.or(self.batch_size),
            lr: other.lr.or(self.lr),
            warmup_final: other.warmup_final.or(self.warmup_final),
            warmup_fraction: other.warmup_fraction.or(self.warmup_fraction),
            log_interval: other.log_interval.or(self.log_interval),
        }
    }
}

/// One sweep. A depth sweep holds `compressions[0]` fixed; a compression
/// sweep holds `depths[0]` fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub family: StateFamily,
    pub depths: Vec<usize>,
    pub compressions: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub schedule: TrainingOverrides,
    /// Latent draws for reconstruction; defaults to `100 · 2^n`.
    #[serde(default)]
    pub reconstruction_samples: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if self.depths.is_empty() || self.compressions.is_empty() {
            return Err(Error::invalid("depth and compression lists must be non-empty"));
        }
        if self.depths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("depth list must be strictly increasing"));
        }
        if self.compressions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("compression list must be strictly increasing"));
        }
        if self.depths.contains(&0) {
            return Err(Error::invalid("depths must be at least 1"));
        }
        if self.compressions.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("compressions must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("seeds must be distinct"));
        }
        self.schedule.apply(0).validate()?;
        if self.reconstruction_samples == Some(0) {
            return Err(Error::invalid("reconstruction needs at least one sample"));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of everything that affects results.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = None;
        canon.cache_dir = None;
        let json = serde_json::to_string(&canon).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            family: StateFamily::Hard { hard_n: 2, hard_l: 4 },
            depths: vec![1, 2, 3],
            compressions: vec![0.5],
            seeds: vec![1, 2],
            schedule: TrainingOverrides::default(),
            reconstruction_samples: None,
            out: None,
            cache_dir: None,
        }
    }

    #[test]
    fn json_mirrors_config() {
        let text = r#"{"family":"hard","hard_n":2,"hard_l":4,"depths":[1,2,3],
            "compressions":[0.5],"seeds":[1,2],"schedule":{"batches":100}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.family, StateFamily::Hard { hard_n: 2, hard_l: 4 });
        assert_eq!(cfg.schedule.batches, Some(100));
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_rules() {
        let mut c = base();
        c.depths = vec![2, 1];
        assert!(c.validate().is_err());
        let mut c = base();
        c.seeds = vec![3, 3];
        assert!(c.validate().is_err());
        let mut c = base();
        c.compressions = vec![];
        assert!(c.validate().is_err());
        assert!(base().validate().is_ok());
    }

    #[test]
    fn unknown_family_is_invalid() {
        assert!(matches!("bogus".parse::<FamilyKind>(), Err(Error::InvalidArgument(_))));
        assert_eq!("Hamiltonian".parse::<FamilyKind>().unwrap(), FamilyKind::Hamiltonian);
    }

    #[test]
    fn hard_defaults_to_eighteen_qubits() {
        let f = StateFamily::from_parts(FamilyKind::Hard, None, None, None, None).unwrap();
        assert_eq!(f.n_qubits().unwrap(), 18);
        assert!(StateFamily::from_parts(FamilyKind::Product, None, None, None, None).is_err());
    }

    #[test]
    fn hash_ignores_paths_only() {
        let a = base();
        let mut b = base();
        b.out = Some("x.csv".into());
        assert_eq!(a.hash(), b.hash());
        b.seeds = vec![1, 3];
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn overrides_merge_and_apply() {
        let file = TrainingOverrides {
            batches: Some(10),
            lr: Some(0.01),
            ..Default::default()
        };
        let cli = TrainingOverrides {
            batches: Some(20),
            ..Default::default()
        };
        let s = file.merged(&cli).apply(4);
        assert_eq!(s.total_batches, 20);
        assert_eq!(s.learning_rate, 0.01);
        assert_eq!(s.batch_size, 256);
        assert_eq!(s.seed, 4);
    }
}
