//! Pure n-qubit states: random product states, Haar-random states and the
//! long-range XY time evolution of the fully polarized state.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::krylov::{self, KrylovOptions};
use crate::rng::{stream, Purpose};
use crate::table::{neumaier_sum, DEFAULT_ENTRY_BUDGET};
use crate::{Error, ProbabilityTable, Result};

const NORM_TOL: f64 = 1e-10;

/// Interaction exponent in `V(i, j) = 1 / |i - j|^alpha`.
pub const DEFAULT_ALPHA: f64 = 0.75;
pub const DEFAULT_TIME: f64 = 20.0;

/// Largest qubit count for which the dense eigendecomposition route is allowed.
pub const DENSE_MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl AmplitudeState {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_entries(n_qubits, "amplitude vector")?;
        if amplitudes.len() as u128 != 1u128 << n_qubits {
            return Err(Error::invalid(format!(
                "{n_qubits} qubits need {} amplitudes, got {}",
                1u128 << n_qubits,
                amplitudes.len()
            )));
        }
        let norm2 = neumaier_sum(amplitudes.iter().map(|a| a.norm_sqr()));
        if !norm2.is_finite() || (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state has squared norm {norm2}")));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// `2^{-n/2} Σ_i |i⟩`.
    pub fn uniform_superposition(n_qubits: usize) -> Result<Self> {
        let dim = check_entries(n_qubits, "amplitude vector")?;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Self::new(n_qubits, vec![a; dim])
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = check_entries(n_qubits, "amplitude vector")?;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(n_qubits, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        krylov::norm(&self.amplitudes)
    }

    pub fn probabilities(&self) -> ProbabilityTable {
        probabilities(self)
    }
}

fn check_entries(n_qubits: usize, what: &'static str) -> Result<usize> {
    if n_qubits == 0 {
        return Err(Error::invalid("qubit count must be at least 1"));
    }
    if n_qubits >= 64 || (1u128 << n_qubits) > DEFAULT_ENTRY_BUDGET {
        return Err(Error::ResourceLimit {
            what,
            required: 1u128 << n_qubits.min(127),
            budget: DEFAULT_ENTRY_BUDGET,
        });
    }
    Ok(1usize << n_qubits)
}

/// `p_i = |ψ_i|²`. Normalisation is inherited from the state invariant.
pub fn probabilities(state: &AmplitudeState) -> ProbabilityTable {
    let probs = state.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    ProbabilityTable::new(state.n_qubits, probs).expect("normalised state yields a valid table")
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// One Haar-random single-qubit state per qubit, tensored together.
pub fn single_qubit_factors(n: usize, seed: u64) -> Result<Vec<[Complex64; 2]>> {
    if n == 0 {
        return Err(Error::invalid("product state needs at least one qubit"));
    }
    let mut rng = stream(seed, Purpose::State, 0);
    Ok((0..n)
        .map(|_| {
            let a = complex_normal(&mut rng);
            let b = complex_normal(&mut rng);
            let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            [a / norm, b / norm]
        })
        .collect())
}

pub fn product_random_state(n: usize, seed: u64) -> Result<AmplitudeState> {
    let factors = single_qubit_factors(n, seed)?;
    let dim = check_entries(n, "amplitude vector")?;
    let amplitudes = (0..dim)
        .map(|idx| {
            factors
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (q, f)| acc * f[(idx >> (n - 1 - q)) & 1])
        })
        .collect::<Vec<_>>();
    let norm = krylov::norm(&amplitudes);
    AmplitudeState::new(n, amplitudes.into_iter().map(|a| a / norm).collect())
}

pub fn haar_random_state(n: usize, seed: u64) -> Result<AmplitudeState> {
    let dim = check_entries(n, "amplitude vector")?;
    let mut rng = stream(seed, Purpose::State, 1);
    let raw: Vec<Complex64> = (0..dim).map(|_| complex_normal(&mut rng)).collect();
    let norm = neumaier_sum(raw.iter().map(|a| a.norm_sqr())).sqrt();
    AmplitudeState::new(n, raw.into_iter().map(|a| a / norm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSpec {
    pub n_qubits: usize,
    pub alpha: f64,
    pub time: f64,
}

impl HamiltonianSpec {
    pub fn new(n_qubits: usize, time: f64) -> Result<Self> {
        let spec = Self {
            n_qubits,
            alpha: DEFAULT_ALPHA,
            time,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::invalid("long-range Hamiltonian needs at least 2 qubits"));
        }
        if !self.time.is_finite() || self.time < 0.0 {
            return Err(Error::invalid(format!("evolution time must be finite and >= 0, got {}", self.time)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::invalid("interaction exponent must be finite"));
        }
        Ok(())
    }
}

/// `H = Σ_{i<j} V(i,j) (σˣσˣ + σʸσʸ)` on an open chain.
///
/// On a basis state the pair term is `2 V(i,j)` times the state with bits
/// `i` and `j` swapped when they differ, and zero otherwise, so `H` is real
/// symmetric and conserves Hamming weight.
#[derive(Debug, Clone)]
pub struct LongRangeXY {
    n_qubits: usize,
    /// (bit mask of the pair, 2·V(i,j))
    pairs: Vec<(usize, f64)>,
}

impl LongRangeXY {
    pub fn new(n_qubits: usize, alpha: f64) -> Self {
        let mut pairs = Vec::new();
        for i in 0..n_qubits {
            for j in i + 1..n_qubits {
                let v = 1.0 / ((j - i) as f64).powf(alpha);
                let mask = (1usize << (n_qubits - 1 - i)) | (1usize << (n_qubits - 1 - j));
                pairs.push((mask, 2.0 * v));
            }
        }
        Self { n_qubits, pairs }
    }

    pub fn from_spec(spec: &HamiltonianSpec) -> Self {
        Self::new(spec.n_qubits, spec.alpha)
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let mask = (1usize << (self.n_qubits - 1 - i)) | (1usize << (self.n_qubits - 1 - j));
        self.pairs
            .iter()
            .find(|(m, _)| *m == mask)
            .map_or(0.0, |(_, c)| c / 2.0)
    }

    /// `out = H x`. Each output entry is gathered in a fixed pair order so the
    /// result does not depend on the thread count.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let body = |(b, o): (usize, &mut Complex64)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(mask, c) in &self.pairs {
                let m = b & mask;
                if m != 0 && m != mask {
                    acc += x[b ^ mask] * c;
                }
            }
            *o = acc;
        };
        if out.len() >= 1 << 12 {
            out.par_iter_mut().enumerate().for_each(body);
        } else {
            out.iter_mut().enumerate().for_each(body);
        }
    }

    pub fn dense(&self) -> Result<DMatrix<f64>> {
        if self.n_qubits > DENSE_MAX_QUBITS {
            return Err(Error::ResourceLimit {
                what: "dense Hamiltonian",
                required: 1u128 << (2 * self.n_qubits),
                budget: 1u128 << (2 * DENSE_MAX_QUBITS),
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for b in 0..dim {
            for &(mask, c) in &self.pairs {
                let m = b & mask;
                if m != 0 && m != mask {
                    h[(b ^ mask, b)] += c;
                }
            }
        }
        Ok(h)
    }

    pub fn energy(&self, state: &AmplitudeState) -> f64 {
        let mut h_psi = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
        self.apply(&state.amplitudes, &mut h_psi);
        krylov::dot(&state.amplitudes, &h_psi).re
    }
}

/// `e^{-iHt} 2^{-n/2} Σ_i |i⟩` by Krylov propagation.
pub fn evolve_long_range(spec: &HamiltonianSpec) -> Result<AmplitudeState> {
    spec.validate()?;
    let init = AmplitudeState::uniform_superposition(spec.n_qubits)?;
    evolve_state(spec, &init)
}

/// Krylov propagation of an arbitrary initial state under the long-range XY model.
pub fn evolve_state(spec: &HamiltonianSpec, init: &AmplitudeState) -> Result<AmplitudeState> {
    spec.validate()?;
    if init.n_qubits != spec.n_qubits {
        return Err(Error::invalid("initial state and Hamiltonian disagree on qubit count"));
    }
    // Lanczos keeps ~dim+1 vectors alive
    let opts = KrylovOptions::default();
    let needed = (opts.dim as u128 + 3) << spec.n_qubits;
    let budget = 32 * DEFAULT_ENTRY_BUDGET;
    if needed > budget {
        return Err(Error::ResourceLimit {
            what: "krylov workspace",
            required: needed,
            budget,
        });
    }
    let h = LongRangeXY::from_spec(spec);
    let (out, _) = krylov::expm_multiply(|x, o| h.apply(x, o), &init.amplitudes, spec.time, opts)?;
    AmplitudeState::new(spec.n_qubits, out)
}

/// Dense route: full eigendecomposition `H = U Λ Uᵀ`, then `U e^{-iΛt} Uᵀ ψ₀`.
pub fn evolve_long_range_dense(spec: &HamiltonianSpec) -> Result<AmplitudeState> {
    spec.validate()?;
    let init = AmplitudeState::uniform_superposition(spec.n_qubits)?;
    let h = LongRangeXY::from_spec(spec).dense()?;
    let eig = SymmetricEigen::new(h);
    let u = &eig.eigenvectors;
    let dim = init.amplitudes.len();
    let coeffs: Vec<Complex64> = (0..dim)
        .map(|k| {
            let overlap: Complex64 = (0..dim).map(|r| init.amplitudes[r] * u[(r, k)]).sum();
            overlap * Complex64::from_polar(1.0, -eig.eigenvalues[k] * spec.time)
        })
        .collect();
    let out = (0..dim)
        .map(|r| (0..dim).map(|k| coeffs[k] * u[(r, k)]).sum())
        .collect();
    AmplitudeState::new(spec.n_qubits, out)
}
