use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::hamiltonian::{DENSE_LIMIT, ITERATIVE_LIMIT};
use super::lanczos::{self, LanczosOptions};
use super::{Hamiltonian, DEGENERACY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{axpy, fix_sign_gauge, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverMethod {
    Dense,
    Iterative,
}

impl SolverMethod {
    /// Dense up to `threshold` dimensions, iterative above.
    pub fn auto(dim: usize, threshold: usize) -> Self {
        if dim <= threshold.min(DENSE_LIMIT) {
            SolverMethod::Dense
        } else {
            SolverMethod::Iterative
        }
    }
}

/// Lowest eigenpairs in ascending order, with the ground-gap diagnostics.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// `E1 − E0` when it was computed.
    pub gap: Option<f64>,
    /// Gap below `DEGENERACY_TOL · ‖H‖`.
    pub degenerate: bool,
    pub norm_bound: f64,
    pub method: SolverMethod,
    pub iterations: usize,
}

impl EigenSolution {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_vector(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn into_ground_vector(mut self) -> Vec<f64> {
        self.states.swap_remove(0)
    }
}

const GAP_TOLERANCE: f64 = 1e-8;

fn residual(h: &Hamiltonian, e: f64, v: &[f64]) -> f64 {
    let mut r = h.apply_vec(v);
    axpy(-e, v, &mut r);
    norm(&r)
}

/// Full dense spectrum sorted ascending, eigenvectors as columns (gauge-fixed).
pub(crate) fn dense_spectrum(h: &Hamiltonian) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = h.to_dense()?;
    let dim = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign_gauge(&mut v);
        vectors.set_column(col, &nalgebra::DVector::from_vec(v));
    }
    Ok((energies, vectors))
}

/// Lowest eigenpair with its gap to the first excited level.
pub fn ground_state(h: &Hamiltonian, method: SolverMethod) -> Result<EigenSolution> {
    match method {
        SolverMethod::Dense => {
            let (energies, vectors) = dense_spectrum(h)?;
            let v: Vec<f64> = vectors.column(0).iter().copied().collect();
            let gap = energies.get(1).map(|e1| e1 - energies[0]);
            Ok(finish(h, vec![energies[0]], vec![v], gap, SolverMethod::Dense, 0))
        }
        SolverMethod::Iterative => iterative_ground(h, None, true, &LanczosOptions::default()),
    }
}

/// Iterative ground state seeded with `start` (e.g. a nearby ground state).
/// The deflated second solve for the gap is skipped unless `with_gap`.
pub fn ground_state_from(
    h: &Hamiltonian,
    start: Option<&[f64]>,
    with_gap: bool,
    opts: &LanczosOptions,
) -> Result<EigenSolution> {
    iterative_ground(h, start, with_gap, opts)
}

fn iterative_ground(
    h: &Hamiltonian,
    start: Option<&[f64]>,
    with_gap: bool,
    opts: &LanczosOptions,
) -> Result<EigenSolution> {
    let dim = h.dim();
    if dim > ITERATIVE_LIMIT {
        return Err(Error::TooLarge { dim, limit: ITERATIVE_LIMIT, method: "iterative" });
    }
    let ground = lanczos::lowest(h, start, &[], opts)?;
    let mut iterations = ground.iterations;
    let gap = if with_gap {
        // Ritz values converge quadratically in the residual, so the gap
        // needs far less than the ground vector.
        let loose = LanczosOptions { tolerance: opts.tolerance.max(GAP_TOLERANCE), ..*opts };
        let excited = lanczos::lowest(h, None, &[&ground.vector], &loose)?;
        iterations += excited.iterations;
        Some(excited.value - ground.value)
    } else {
        None
    };
    let mut sol = finish(h, vec![ground.value], vec![ground.vector], gap, SolverMethod::Iterative, iterations);
    sol.residuals = vec![ground.residual];
    Ok(sol)
}

fn finish(
    h: &Hamiltonian,
    energies: Vec<f64>,
    mut states: Vec<Vec<f64>>,
    gap: Option<f64>,
    method: SolverMethod,
    iterations: usize,
) -> EigenSolution {
    let norm_bound = h.norm_bound();
    for s in &mut states {
        fix_sign_gauge(s);
    }
    let residuals = energies.iter().zip(&states).map(|(e, s)| residual(h, *e, s)).collect();
    let degenerate = gap.is_some_and(|g| g < DEGENERACY_TOL * norm_bound);
    EigenSolution { energies, states, residuals, gap, degenerate, norm_bound, method, iterations }
}

/// The `n` lowest eigenpairs from a dense solve.
pub fn low_spectrum(h: &Hamiltonian, n: usize) -> Result<EigenSolution> {
    let dim = h.dim();
    if n == 0 || n > dim {
        return Err(Error::invalid(format!("requested {n} eigenpairs of a {dim}-dimensional operator")));
    }
    if dim > DENSE_LIMIT {
        return Err(Error::TooLarge { dim, limit: DENSE_LIMIT, method: "dense" });
    }
    let (energies, vectors) = dense_spectrum(h)?;
    let gap = energies.get(1).map(|e1| e1 - energies[0]);
    let states = (0..n).map(|i| vectors.column(i).iter().copied().collect()).collect();
    Ok(finish(h, energies[..n].to_vec(), states, gap, SolverMethod::Dense, 0))
}
