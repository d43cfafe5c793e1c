use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Layer widths of the encoder/decoder pair. The latent width equals the
/// qubit count and the encoder hidden stack is the decoder's mirrored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkArchitecture {
    n: usize,
    latent_dim: usize,
    /// Decoder hidden widths, latent side first.
    decoder_hidden: Vec<usize>,
}

impl NetworkArchitecture {
    pub fn new(n: usize, decoder_hidden: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("network width n must be at least 1"));
        }
        if decoder_hidden.is_empty() || decoder_hidden.contains(&0) {
            return Err(Error::invalid("need at least one hidden layer and no empty layers"));
        }
        Ok(Self {
            n,
            latent_dim: n,
            decoder_hidden,
        })
    }

    pub fn uniform(n: usize, depth: usize, width: usize) -> Result<Self> {
        Self::new(n, vec![width; depth])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn depth(&self) -> usize {
        self.decoder_hidden.len()
    }

    pub fn decoder_hidden(&self) -> &[usize] {
        &self.decoder_hidden
    }

    /// Encoder hidden widths, input side first.
    pub fn encoder_hidden(&self) -> Vec<usize> {
        self.decoder_hidden.iter().rev().copied().collect()
    }

    /// Width of the layer feeding the decoder output.
    pub fn penultimate_width(&self) -> usize {
        *self.decoder_hidden.last().expect("non-empty hidden stack")
    }

    /// Fewer than `n` penultimate neurons cannot address every output configuration.
    pub fn below_penultimate_bound(&self) -> bool {
        self.penultimate_width() < self.n
    }

    pub fn decoder_parameter_count(&self) -> usize {
        self.decoder_weight_count() + self.decoder_hidden.iter().sum::<usize>() + self.n
    }

    pub fn decoder_weight_count(&self) -> usize {
        let mut widths = vec![self.latent_dim];
        widths.extend(&self.decoder_hidden);
        widths.push(self.n);
        widths.windows(2).map(|w| w[0] * w[1]).sum()
    }

    pub fn compression(&self) -> f64 {
        self.decoder_parameter_count() as f64 / (1u128 << self.n) as f64
    }
}

pub fn decoder_parameter_count(arch: &NetworkArchitecture) -> usize {
    arch.decoder_parameter_count()
}

pub fn decoder_weight_count(arch: &NetworkArchitecture) -> usize {
    arch.decoder_weight_count()
}

/// Uniform hidden width: the largest `w` whose decoder parameter count
/// (weights and biases) stays within `round(C · 2^n)`.
pub fn architecture_for(n: usize, depth: usize, compression: f64) -> Result<NetworkArchitecture> {
    if n == 0 || n > 62 {
        return Err(Error::invalid(format!("qubit count must be in 1..=62, got {n}")));
    }
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    if !(compression.is_finite() && compression > 0.0) {
        return Err(Error::invalid(format!("compression must be positive, got {compression}")));
    }
    let target_f = (compression * (1u64 << n) as f64).round();
    let target = if target_f >= usize::MAX as f64 { usize::MAX } else { target_f as usize };
    let count = |w: usize| n * w + (depth - 1) * w * w + w * n + depth * w + n;
    let minimum = count(1);
    if minimum > target {
        return Err(Error::InfeasibleCompression {
            n,
            depth,
            target,
            minimum,
        });
    }
    // count is strictly increasing in w
    let (mut lo, mut hi) = (1usize, 2usize);
    while count(hi) <= target {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if count(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let arch = NetworkArchitecture::uniform(n, depth, lo)?;
    if arch.below_penultimate_bound() {
        log::warn!(
            "hidden width {lo} < n = {n}: the penultimate layer cannot express every output configuration"
        );
    }
    Ok(arch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizing_examples() {
        let a = architecture_for(8, 1, 0.5).unwrap();
        assert_eq!(a.decoder_hidden(), &[7]);
        assert_eq!(a.decoder_parameter_count(), 127);

        let a = architecture_for(4, 1, 13.0 / 16.0).unwrap();
        assert_eq!(a.decoder_hidden(), &[1]);
        assert_eq!(a.decoder_parameter_count(), 13);

        let a = architecture_for(8, 2, 0.5).unwrap();
        assert_eq!(a.decoder_hidden(), &[5, 5]);
        assert_eq!(a.decoder_parameter_count(), 123);
    }

    #[test]
    fn infeasible_compression() {
        let e = architecture_for(8, 1, 0.05).unwrap_err();
        assert!(matches!(e, Error::InfeasibleCompression { target: 13, minimum: 25, .. }));
        assert!(architecture_for(4, 0, 0.5).is_err());
        assert!(architecture_for(4, 1, -0.5).is_err());
    }

    #[test]
    fn weight_and_total_counts() {
        let a = NetworkArchitecture::new(4, vec![3, 5]).unwrap();
        // 4*3 + 3*5 + 5*4 weights, 3 + 5 + 4 biases
        assert_eq!(a.decoder_weight_count(), 47);
        assert_eq!(a.decoder_parameter_count(), 59);
        assert_eq!(a.encoder_hidden(), vec![5, 3]);
        assert_eq!(a.penultimate_width(), 5);
        assert!(!a.below_penultimate_bound());
    }
}
