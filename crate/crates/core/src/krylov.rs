//! Krylov-subspace (Lanczos) evaluation of `exp(-i H t) v` for a Hermitian
//! operator given only through its action on vectors.
//!
//! Each step builds an orthonormal Lanczos basis of the current vector,
//! exponentiates the small tridiagonal projection exactly and advances by a
//! step size chosen from the a-posteriori error estimate given by the
//! component along the first vector outside the retained subspace.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Lanczos basis size per step.
    pub dim: usize,
    /// Local error allowed per unit of propagated time.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            dim: 30,
            tol: 1e-13,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KrylovStats {
    pub steps: usize,
    pub rejected: usize,
    pub matvecs: usize,
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Basis became H-invariant; the projection is then exact.
    exhausted: bool,
}

impl Lanczos {
    /// Builds up to `dim + 1` orthonormal vectors from `start` (unit norm).
    fn build<F>(apply: &F, start: Vec<Complex64>, dim: usize, stats: &mut KrylovStats) -> Self
    where
        F: Fn(&[Complex64], &mut [Complex64]),
    {
        let len = start.len();
        let mut basis = vec![start];
        let mut alpha = Vec::with_capacity(dim + 1);
        let mut beta = Vec::with_capacity(dim);
        let mut w = vec![Complex64::new(0.0, 0.0); len];
        let scale_floor = 1e-14;
        let mut exhausted = false;

        for j in 0..=dim {
            apply(&basis[j], &mut w);
            stats.matvecs += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            if j == dim || len == basis.len() {
                exhausted = len == basis.len();
                break;
            }
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let b = norm(&w);
            if b <= scale_floor * (1.0 + a.abs()) {
                exhausted = true;
                break;
            }
            beta.push(b);
            let next: Vec<Complex64> = w.iter().map(|x| x / b).collect();
            basis.push(next);
        }
        Self {
            basis,
            alpha,
            beta,
            exhausted,
        }
    }

    fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let k = self.alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = self.alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        SymmetricEigen::new(t)
    }
}

/// `exp(-i T dt) e_1` from the eigendecomposition of the tridiagonal `T`.
fn small_exp(eig: &SymmetricEigen<f64, nalgebra::Dyn>, dt: f64) -> Vec<Complex64> {
    let k = eig.eigenvalues.len();
    let q = &eig.eigenvectors;
    (0..k)
        .map(|r| {
            (0..k).fold(Complex64::new(0.0, 0.0), |acc, c| {
                let phase = Complex64::from_polar(1.0, -eig.eigenvalues[c] * dt);
                acc + q[(r, c)] * phase * q[(0, c)]
            })
        })
        .collect()
}

/// Computes `exp(-i H t) v` where `apply(x, out)` writes `H x` into `out`.
pub fn expm_multiply<F>(
    apply: F,
    v: &[Complex64],
    t: f64,
    opts: KrylovOptions,
) -> Result<(Vec<Complex64>, KrylovStats)>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("evolution time must be finite and >= 0, got {t}")));
    }
    if opts.dim < 2 {
        return Err(Error::invalid("Krylov dimension must be at least 2"));
    }
    let mut stats = KrylovStats::default();
    let mut w = v.to_vec();
    let scale = norm(&w);
    if scale == 0.0 || t == 0.0 {
        return Ok((w, stats));
    }

    let mut done = 0.0f64;
    let mut dt = t;
    while done < t {
        if stats.steps >= opts.max_steps {
            return Err(Error::numeric("krylov propagation exceeded its step budget"));
        }
        let beta0 = norm(&w);
        let start: Vec<Complex64> = w.iter().map(|x| x / beta0).collect();
        let lanczos = Lanczos::build(&apply, start, opts.dim, &mut stats);
        let eig = lanczos.eigen();
        let remaining = t - done;
        dt = dt.min(remaining);

        let y = loop {
            let y = small_exp(&eig, dt);
            if lanczos.exhausted {
                dt = remaining;
                break small_exp(&eig, dt);
            }
            let err = beta0 * y.last().map_or(0.0, |c| c.norm());
            let allowed = opts.tol * dt.max(f64::MIN_POSITIVE);
            if !err.is_finite() {
                return Err(Error::numeric("krylov error estimate is not finite"));
            }
            if err <= allowed {
                // grow the next step from the observed error (order ~ dim)
                let grow = if err > 0.0 {
                    0.9 * (allowed / err).powf(1.0 / opts.dim as f64)
                } else {
                    2.0
                };
                done += dt;
                dt *= grow.clamp(1.0, 4.0);
                break y;
            }
            stats.rejected += 1;
            dt *= (0.9 * (allowed / err).powf(1.0 / opts.dim as f64)).clamp(0.1, 0.9);
        };
        if lanczos.exhausted {
            done = t;
        }

        let mut next = vec![Complex64::new(0.0, 0.0); w.len()];
        for (coef, vec) in y.iter().zip(&lanczos.basis) {
            let c = coef * beta0;
            for (n, b) in next.iter_mut().zip(vec) {
                *n += c * b;
            }
        }
        w = next;
        stats.steps += 1;
    }
    Ok((w, stats))
}
