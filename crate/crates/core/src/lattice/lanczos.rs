//! Restarted Lanczos with full reorthogonalization for the lowest eigenpair
//! of a real symmetric operator, optionally deflated against locked vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tridiagonal;
use super::Hamiltonian;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, scale};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Krylov dimension before an explicit restart.
    pub max_krylov: usize,
    /// Converged when ‖Hx − θx‖ ≤ tolerance · ‖H‖ (norm bound).
    pub tolerance: f64,
    pub max_restarts: usize,
    /// Seed of the deterministic random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_krylov: 60, tolerance: 1e-10, max_restarts: 30, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn orthogonalize(w: &mut [f64], against: &[&[f64]]) {
    // two classical Gram-Schmidt passes
    for _ in 0..2 {
        for q in against {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

fn random_start(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Lowest eigenpair of `op` restricted to the complement of `locked`.
pub(crate) fn lowest(
    op: &Hamiltonian,
    start: Option<&[f64]>,
    locked: &[&[f64]],
    opts: &LanczosOptions,
) -> Result<RitzPair> {
    let dim = op.dim();
    let norm_h = op.norm_bound();
    let target = opts.tolerance * norm_h;
    let krylov_cap = opts.max_krylov.min(dim - locked.len()).max(1);

    let mut v = match start {
        Some(s) => {
            assert_eq!(s.len(), dim);
            s.to_vec()
        }
        None => random_start(dim, opts.seed),
    };
    orthogonalize(&mut v, locked);
    if norm(&v) < 1e-8 {
        v = random_start(dim, opts.seed.wrapping_add(1));
        orthogonalize(&mut v, locked);
    }
    let n0 = norm(&v);
    scale(1.0 / n0, &mut v);

    let mut total = 0usize;
    let mut last_residual = f64::INFINITY;
    let mut w = vec![0.0; dim];
    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(krylov_cap);
        let mut beta: Vec<f64> = Vec::with_capacity(krylov_cap);
        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            total += 1;
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            axpy(-a, &basis[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            {
                let mut refs: Vec<&[f64]> = locked.to_vec();
                refs.extend(basis.iter().map(|b| b.as_slice()));
                orthogonalize(&mut w, &refs);
            }
            let b = norm(&w);
            let exhausted = b <= 1e-14 * norm_h;
            let full = basis.len() >= krylov_cap;
            if exhausted || full || (j + 1) % 5 == 0 {
                let theta = tridiagonal::eigenvalue(&alpha, &beta, 0);
                let y = tridiagonal::eigenvector(&alpha, &beta, theta);
                let estimate = b * y[y.len() - 1].abs();
                if exhausted || full || estimate <= target {
                    let mut x = vec![0.0; dim];
                    for (coef, q) in y.iter().zip(&basis) {
                        axpy(*coef, q, &mut x);
                    }
                    let nx = norm(&x);
                    scale(1.0 / nx, &mut x);
                    op.apply(&x, &mut w);
                    let value = dot(&x, &w);
                    axpy(-value, &x, &mut w);
                    let mut rw = w.clone();
                    orthogonalize(&mut rw, locked);
                    let residual = norm(&rw);
                    last_residual = residual;
                    if residual <= target {
                        return Ok(RitzPair { value, vector: x, residual, iterations: total });
                    }
                    v = x;
                    orthogonalize(&mut v, locked);
                    let nv = norm(&v);
                    scale(1.0 / nv, &mut v);
                    break;
                }
            }
            beta.push(b);
            let mut next = w.clone();
            scale(1.0 / b, &mut next);
            basis.push(next);
        }
    }
    Err(Error::NoConvergence { iterations: total, residual: last_residual })
}
