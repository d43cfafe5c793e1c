//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

use qvae_core::sampling::SampleBatch;
use qvae_core::vae::{loss, Parameters};

pub type C64 = Complex64;

/// All permutations of `0..n` by recursive insertion.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// `Σ_σ Π_j a[j][σ(j)]`.
pub fn permanent_by_sum(a: &[Vec<C64>]) -> C64 {
    let n = a.len();
    permutations(n)
        .iter()
        .map(|s| (0..n).fold(C64::new(1.0, 0.0), |acc, j| acc * a[j][s[j]]))
        .sum()
}

/// Brute-force `Pr[y]` for every outcome, indexing coordinates the same way
/// as the library (coordinate 0 in the most significant bits).
pub fn hard_table_by_sum(n: usize, l: usize) -> Vec<f64> {
    let bits = l.trailing_zeros() as usize;
    let coords = n * n;
    let dim = 1usize << (coords * bits);
    let perms = permutations(n);
    let w = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / l as f64);
    let norm = (l as f64).powi(coords as i32) * perms.len() as f64;
    (0..dim)
        .map(|idx| {
            let y: Vec<usize> = (0..coords)
                .map(|j| (idx >> ((coords - 1 - j) * bits)) % l)
                .collect();
            let q: C64 = perms
                .iter()
                .map(|s| (0..n).fold(C64::new(1.0, 0.0), |acc, j| acc * w(y[j * n + s[j]])))
                .sum();
            q.norm_sqr() / norm
        })
        .collect()
}

fn pauli_x() -> DMatrix<C64> {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    DMatrix::from_row_slice(2, 2, &[o, one, one, o])
}

fn pauli_y() -> DMatrix<C64> {
    let o = C64::new(0.0, 0.0);
    DMatrix::from_row_slice(2, 2, &[o, C64::new(0.0, -1.0), C64::new(0.0, 1.0), o])
}

/// Operator `a` on qubit `i` and `b` on qubit `j` of `n`, qubit 0 leftmost.
fn two_site(n: usize, i: usize, a: &DMatrix<C64>, j: usize, b: &DMatrix<C64>) -> DMatrix<C64> {
    let id = DMatrix::<C64>::identity(2, 2);
    (0..n).fold(DMatrix::<C64>::identity(1, 1), |acc, q| {
        let f = if q == i {
            a
        } else if q == j {
            b
        } else {
            &id
        };
        acc.kronecker(f)
    })
}

/// `Σ_{i<j} |i−j|^{−α} (σx σx + σy σy)` assembled from Kronecker products.
pub fn xy_hamiltonian_kron(n: usize, alpha: f64) -> DMatrix<C64> {
    let dim = 1usize << n;
    let (x, y) = (pauli_x(), pauli_y());
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..n {
        for j in i + 1..n {
            let v = ((j - i) as f64).powf(-alpha);
            h += (two_site(n, i, &x, j, &x) + two_site(n, i, &y, j, &y)) * C64::new(v, 0.0);
        }
    }
    h
}

/// `exp(−i H t)` by scaling and squaring with a truncated Taylor series.
pub fn expm_taylor(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let dim = h.nrows();
    let a = h * C64::new(0.0, -t);
    let norm1 = (0..dim)
        .map(|c| a.column(c).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let a = a * C64::new(0.5f64.powi(squarings), 0.0);
    let mut term = DMatrix::<C64>::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = &term * &a * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Reference evolution of the uniform superposition.
pub fn evolve_uniform_reference(n: usize, alpha: f64, t: f64) -> Vec<C64> {
    let dim = 1usize << n;
    let u = expm_taylor(&xy_hamiltonian_kron(n, alpha), t);
    let psi0 = nalgebra::DVector::from_element(dim, C64::new((dim as f64).sqrt().recip(), 0.0));
    (u * psi0).iter().copied().collect()
}

/// Entropy from the eigenvalues of the reduced density matrix `ρ_A = M M†`.
pub fn entropy_by_reduced_density(amps: &[C64], n: usize, cut: usize) -> f64 {
    let rows = 1usize << cut;
    let cols = 1usize << (n - cut);
    let m = DMatrix::from_fn(rows, cols, |r, c| amps[r * cols + c]);
    let rho = &m * m.adjoint();
    let eig = rho.symmetric_eigen();
    -eig.eigenvalues
        .iter()
        .filter(|&&l| l > 1e-300)
        .map(|l| l * l.log2())
        .sum::<f64>()
}

/// A network with every coordinate random, biases included, so no
/// pre-activation sits exactly on the LReLU kink.
pub fn random_network<R: rand::Rng>(arch: &qvae_core::vae::NetworkArchitecture, rng: &mut R) -> Parameters {
    let mut p = Parameters::init(arch, rng);
    for v in p.as_mut_slice() {
        *v += 0.1 * rng.sample::<f64, _>(rand_distr::StandardNormal);
    }
    p
}

/// Mean single-sample objective over a batch with fixed noise.
pub fn batch_loss(params: &Parameters, batch: &SampleBatch, noise: &[f64], beta: f64) -> f64 {
    let latent = params.architecture().latent_dim();
    let total: f64 = (0..batch.len())
        .map(|k| {
            let x: Vec<f64> = batch.string(k).iter().map(|&b| b as f64).collect();
            loss(params, &x, &noise[k * latent..(k + 1) * latent], beta).unwrap().loss
        })
        .sum();
    total / batch.len() as f64
}

/// Central differences of `batch_loss` for every parameter coordinate.
pub fn finite_difference_gradient(params: &Parameters, batch: &SampleBatch, noise: &[f64], beta: f64, h: f64) -> Vec<f64> {
    let mut p = params.clone();
    (0..params.len())
        .map(|i| {
            let orig = p.as_slice()[i];
            p.as_mut_slice()[i] = orig + h;
            let up = batch_loss(&p, batch, noise, beta);
            p.as_mut_slice()[i] = orig - h;
            let down = batch_loss(&p, batch, noise, beta);
            p.as_mut_slice()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Counts decoder entries by walking every connection and unit.
pub fn count_decoder_entries(n: usize, hidden: &[usize]) -> usize {
    let mut widths = vec![n];
    widths.extend_from_slice(hidden);
    widths.push(n);
    let mut count = 0;
    for pair in widths.windows(2) {
        for _out in 0..pair[1] {
            for _in in 0..pair[0] {
                count += 1;
            }
            count += 1;
        }
    }
    count
}
