//! The permanent-based hard distribution `Pr[y] = |Q(Z_y)|² / (L^N n!)`.
//!
//! `Q` sums the monomials selected by permutation-matrix encodings, which is
//! the permanent of the `n × n` matrix of roots of unity `w^{y_{jn+k}}`
//! (row-major layout). Outcomes are indexed by concatenating each `y_j` as
//! `log₂ L` big-endian bits, coordinates in order.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::table::{neumaier_sum, DEFAULT_ENTRY_BUDGET};
use crate::{Error, ProbabilityTable, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardSpec {
    /// Permutation size.
    pub n: usize,
    /// Root-of-unity order, a power of two.
    pub l: usize,
}

impl HardSpec {
    pub fn new(n: usize, l: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("permutation size must be at least 1"));
        }
        if l < 2 || !l.is_power_of_two() {
            return Err(Error::invalid(format!("L must be a power of two >= 2, got {l}")));
        }
        if n > 12 {
            return Err(Error::invalid("permutation size above 12 is not supported"));
        }
        Ok(Self { n, l })
    }

    /// Coordinate count `N = n²`.
    pub fn coordinates(&self) -> usize {
        self.n * self.n
    }

    pub fn bits_per_coordinate(&self) -> usize {
        self.l.trailing_zeros() as usize
    }

    pub fn n_qubits(&self) -> usize {
        self.coordinates() * self.bits_per_coordinate()
    }

    pub fn n_factorial(&self) -> u64 {
        factorial(self.n)
    }

    /// `e^{2πi k / L}` from an exact (cos, sin) evaluation of the reduced power.
    pub fn root(&self, k: usize) -> Complex64 {
        let k = k % self.l;
        let theta = 2.0 * std::f64::consts::PI * k as f64 / self.l as f64;
        // exact values at the quarter turns
        match (4 * k).checked_rem(self.l) {
            Some(0) => match 4 * k / self.l {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            },
            _ => Complex64::new(theta.cos(), theta.sin()),
        }
    }
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseVector {
    y: Vec<usize>,
}

impl PhaseVector {
    pub fn new(spec: &HardSpec, y: Vec<usize>) -> Result<Self> {
        if y.len() != spec.coordinates() {
            return Err(Error::invalid(format!(
                "phase vector needs {} coordinates, got {}",
                spec.coordinates(),
                y.len()
            )));
        }
        if let Some(bad) = y.iter().find(|&&v| v >= spec.l) {
            return Err(Error::invalid(format!("coordinate {bad} outside [0, {})", spec.l)));
        }
        Ok(Self { y })
    }

    /// Unpacks an outcome index into coordinates.
    pub fn from_index(spec: &HardSpec, index: usize) -> Self {
        let bits = spec.bits_per_coordinate();
        let n_coord = spec.coordinates();
        let y = (0..n_coord)
            .map(|j| (index >> ((n_coord - 1 - j) * bits)) & (spec.l - 1))
            .collect();
        Self { y }
    }

    pub fn to_index(&self, spec: &HardSpec) -> usize {
        let bits = spec.bits_per_coordinate();
        self.y.iter().fold(0usize, |acc, &v| (acc << bits) | v)
    }

    pub fn values(&self) -> &[usize] {
        &self.y
    }
}

/// Decodes `index` through its factorial-number-system digits as a Lehmer
/// code: the most significant digit multiplies `(n-1)!` and picks among the
/// remaining elements by rank.
pub fn lehmer_decode(index: u64, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > 20 {
        return Err(Error::invalid(format!("permutation size must be in 1..=20, got {n}")));
    }
    let total = factorial(n);
    if index >= total {
        return Err(Error::invalid(format!("index {index} outside [0, {n}!)")));
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut rest = index;
    let mut out = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let radix = factorial(k);
        let digit = (rest / radix) as usize;
        rest %= radix;
        out.push(remaining.remove(digit));
    }
    Ok(out)
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::invalid(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Row-major flattening of the permutation matrix with `M[j][σ(j)] = 1`.
pub fn encode_permutation(perm: &[usize]) -> Result<Vec<u8>> {
    check_permutation(perm)?;
    let n = perm.len();
    let mut bits = vec![0u8; n * n];
    for (row, &col) in perm.iter().enumerate() {
        bits[row * n + col] = 1;
    }
    Ok(bits)
}

/// Square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::invalid(format!(
                "expected a non-empty square matrix, got {} entries for n={n}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("matrix is not square"));
        }
        Self::new(n, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }
}

/// Permanent by Ryser's inclusion–exclusion over column subsets, visiting
/// subsets in Gray-code order so each step updates the row sums by one column.
pub fn permanent(m: &SquareMatrix) -> Complex64 {
    let n = m.n;
    if n > 30 {
        panic!("permanent of order {n} is out of reach");
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray = 0usize;
    for k in 1usize..(1 << n) {
        let next = k ^ (k >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << col) != 0;
        for (r, s) in row_sums.iter_mut().enumerate() {
            let v = m.get(r, col);
            if added {
                *s += v;
            } else {
                *s -= v;
            }
        }
        gray = next;
        let prod = row_sums.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s);
        if (n - next.count_ones() as usize).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// The `n × n` matrix of roots of unity for `y`, entry `(j, k) = w^{y[j n + k]}`.
pub fn phase_matrix(spec: &HardSpec, y: &PhaseVector) -> SquareMatrix {
    SquareMatrix {
        n: spec.n,
        data: y.y.iter().map(|&v| spec.root(v)).collect(),
    }
}

/// `Q(Z_y)`, the permanent of the phase matrix.
pub fn evaluate_q(spec: &HardSpec, y: &PhaseVector) -> Result<Complex64> {
    if y.y.len() != spec.coordinates() {
        return Err(Error::invalid("phase vector length does not match the spec"));
    }
    Ok(permanent(&phase_matrix(spec, y)))
}

pub fn hard_distribution(spec: &HardSpec) -> Result<ProbabilityTable> {
    let qubits = spec.n_qubits();
    if qubits >= 64 || (1u128 << qubits) > DEFAULT_ENTRY_BUDGET {
        return Err(Error::ResourceLimit {
            what: "hard distribution table",
            required: 1u128 << qubits.min(127),
            budget: DEFAULT_ENTRY_BUDGET,
        });
    }
    let dim = 1usize << qubits;
    let denom = dim as f64 * spec.n_factorial() as f64;
    let probs: Vec<f64> = (0..dim)
        .into_par_iter()
        .map(|idx| {
            let y = PhaseVector::from_index(spec, idx);
            permanent(&phase_matrix(spec, &y)).norm_sqr() / denom
        })
        .collect();
    let total = neumaier_sum(probs.iter().copied());
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::numeric(format!("hard distribution sums to {total}")));
    }
    ProbabilityTable::new(qubits, probs)
}
