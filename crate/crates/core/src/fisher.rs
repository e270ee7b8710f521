//! Quantum and classical Fisher information of the probe ground state.
//!
//! State derivatives come from one of three routes:
//!
//! * `Perturbation`: first-order sum over the full dense spectrum,
//!   `|∂Φ⟩ = Σ_{n>0} |n⟩⟨n|∂H|Φ⟩ / (E0 − En)`;
//! * `LinearResponse`: the same vector obtained by solving
//!   `(H − E0)|∂Φ⟩ = −Q ∂H|Φ⟩` on the complement of `|Φ⟩` with conjugate
//!   gradients, for sizes beyond dense diagonalization;
//! * `FiniteDifference`: gauge-aligned central differences of ground states.
//!
//! With `∂H/∂h_x = −Σσx` and `∂H/∂h_z = −Σσz`. The QFI matrix uses
//! `4 Re[⟨∂μΦ|∂νΦ⟩ − ⟨∂μΦ|Φ⟩⟨Φ|∂νΦ⟩]`; for the real ground states here the
//! second term vanishes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    apply_field_operator, dense_spectrum, ground_state, ground_state_from, magnetization, Direction, FieldPoint,
    Hamiltonian, LanczosOptions, ProbeConfig, SolverMethod,
};
use crate::linalg::{axpy, dot, norm, scale};

/// Fisher routines refuse ground states whose gap is below this fraction of
/// the operator norm bound.
pub const FISHER_GAP_TOL: f64 = 1e-8;
/// Largest condition number accepted when inverting an information matrix.
pub const MAX_CONDITION: f64 = 1e12;
/// Outcomes with probability below this floor are left out of the CFI sum.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Default finite-difference step (units of J).
pub const DEFAULT_STEP: f64 = 1e-4;
/// Dimensions at or below this use dense diagonalization when a method is
/// picked automatically (L ≤ 8).
pub const AUTO_DENSE_DIM: usize = 256;

const NORM_TOL: f64 = 1e-10;

/// Lanczos settings for solves whose eigenvectors get differentiated.
pub(crate) fn precise_lanczos() -> LanczosOptions {
    LanczosOptions { tolerance: 1e-13, ..LanczosOptions::default() }
}

/// Normalized real amplitude vector over the 2^L basis, sign gauge fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<f64>,
    length: usize,
}

impl QuantumState {
    pub fn new(mut amplitudes: Vec<f64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 4 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!("state dimension {dim} is not 2^L with L >= 2")));
        }
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state is not normalized (norm {n})")));
        }
        crate::linalg::fix_sign_gauge(&mut amplitudes);
        Ok(Self { length: dim.trailing_zeros() as usize, amplitudes })
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FisherKind {
    Quantum,
    Classical,
}

/// Symmetric 1×1 or 2×2 information matrix, ordered (h_x, h_z) when 2×2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    dim: usize,
    entries: [[f64; 2]; 2],
    kind: FisherKind,
}

impl FisherMatrix {
    pub fn scalar(kind: FisherKind, value: f64) -> Self {
        Self { dim: 1, entries: [[value, 0.0], [0.0, 0.0]], kind }
    }

    pub fn two_by_two(kind: FisherKind, entries: [[f64; 2]; 2]) -> Self {
        Self { dim: 2, entries, kind }
    }

    pub fn diagonal(kind: FisherKind, values: &[f64]) -> Self {
        match values {
            [a] => Self::scalar(kind, *a),
            [a, b] => Self::two_by_two(kind, [[*a, 0.0], [0.0, *b]]),
            _ => panic!("information matrices are 1x1 or 2x2"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FisherKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim);
        self.entries[i][j]
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.entries[i][j].abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.dim == 1
            || (self.entries[0][1] - self.entries[1][0]).abs() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim == 1 {
            return vec![self.entries[0][0]];
        }
        let [[a, b], [_, d]] = self.entries;
        let mean = 0.5 * (a + d);
        let radius = (0.5 * (a - d)).hypot(b);
        vec![mean - radius, mean + radius]
    }

    /// min eigenvalue ≥ −tol · max eigenvalue.
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        let ev = self.eigenvalues();
        let max = ev[ev.len() - 1].max(0.0);
        ev[0] >= -rel_tol * max
    }

    /// λ_max / λ_min, infinite when the matrix is not positive definite.
    pub fn condition(&self) -> f64 {
        let ev = self.eigenvalues();
        if ev[0] <= 0.0 {
            f64::INFINITY
        } else {
            ev[ev.len() - 1] / ev[0]
        }
    }

    /// Closed-form inverse with its condition number.
    pub fn inverse(&self) -> Result<([[f64; 2]; 2], f64)> {
        let condition = self.condition();
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularInformation { condition });
        }
        if self.dim == 1 {
            return Ok(([[1.0 / self.entries[0][0], 0.0], [0.0, 0.0]], condition));
        }
        let [[a, b], [c, d]] = self.entries;
        let det = a * d - b * c;
        Ok(([[d / det, -b / det], [-c / det, a / det]], condition))
    }

    /// `Tr[inv F]`
    pub fn trace_inverse(&self) -> Result<f64> {
        let (inv, _) = self.inverse()?;
        Ok((0..self.dim).map(|i| inv[i][i]).sum())
    }

    /// `self − other`, keeping this matrix's kind.
    pub fn difference(&self, other: &FisherMatrix) -> FisherMatrix {
        assert_eq!(self.dim, other.dim);
        let mut e = self.entries;
        for (i, row) in e.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= other.entries[i][j];
            }
        }
        Self { entries: e, ..*self }
    }
}

/// Which field components are being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameters {
    /// `h_z` only.
    Transverse,
    /// `(h_x, h_z)`.
    Skew,
}

impl Parameters {
    pub fn directions(&self) -> &'static [Direction] {
        match self {
            Parameters::Transverse => &[Direction::Z],
            Parameters::Skew => &[Direction::X, Direction::Z],
        }
    }

    pub fn dim(&self) -> usize {
        self.directions().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DerivativeMethod {
    Perturbation,
    LinearResponse,
    FiniteDifference { step: f64 },
}

impl DerivativeMethod {
    /// Perturbation for dense-friendly sizes, linear response beyond.
    pub fn auto(length: usize) -> Self {
        if (1usize << length) <= AUTO_DENSE_DIM {
            DerivativeMethod::Perturbation
        } else {
            DerivativeMethod::LinearResponse
        }
    }
}

fn check_gap(gap: Option<f64>, norm_bound: f64) -> Result<f64> {
    let threshold = FISHER_GAP_TOL * norm_bound;
    match gap {
        Some(g) if g > threshold => Ok(g),
        Some(g) => Err(Error::DegenerateGround { gap: g, threshold }),
        None => Err(Error::DegenerateGround { gap: 0.0, threshold }),
    }
}

/// `∂H/∂h_μ |v⟩ = −(Σ σ_μ)|v⟩`
fn apply_derivative_operator(direction: Direction, length: usize, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    apply_field_operator(direction, length, v, &mut out);
    scale(-1.0, &mut out);
    out
}

/// Dense spectrum of the probe, ready for sum-over-states derivatives.
struct DenseProbe {
    length: usize,
    energies: Vec<f64>,
    vectors: nalgebra::DMatrix<f64>,
    gap: f64,
}

impl DenseProbe {
    fn new(config: &ProbeConfig, h: &FieldPoint) -> Result<Self> {
        let ham = Hamiltonian::new(config, h)?;
        let (energies, vectors) = dense_spectrum(&ham)?;
        let gap = check_gap(energies.get(1).map(|e| e - energies[0]), ham.norm_bound())?;
        Ok(Self { length: config.length, energies, vectors, gap })
    }

    fn ground(&self) -> Vec<f64> {
        self.vectors.column(0).iter().copied().collect()
    }

    fn derivative(&self, direction: Direction) -> Vec<f64> {
        let phi = self.ground();
        let dh_phi = DVector::from_vec(apply_derivative_operator(direction, self.length, &phi));
        let mut c = self.vectors.tr_mul(&dh_phi);
        c[0] = 0.0;
        let e0 = self.energies[0];
        for n in 1..c.len() {
            c[n] /= e0 - self.energies[n];
        }
        (&self.vectors * c).iter().copied().collect()
    }
}

/// Iteratively solved ground state with its gap checked.
struct IterativeProbe {
    ham: Hamiltonian,
    energy: f64,
    ground: Vec<f64>,
    gap: f64,
}

impl IterativeProbe {
    fn new(config: &ProbeConfig, h: &FieldPoint) -> Result<Self> {
        let ham = Hamiltonian::new(config, h)?;
        let sol = ground_state_from(&ham, None, true, &LanczosOptions::default())?;
        let gap = check_gap(sol.gap, sol.norm_bound)?;
        let energy = sol.ground_energy();
        Ok(Self { ham, energy, ground: sol.into_ground_vector(), gap })
    }

    fn derivative(&self, direction: Direction) -> Result<Vec<f64>> {
        let rhs = apply_derivative_operator(direction, self.ham.length(), &self.ground);
        let mut rhs = rhs;
        let c = dot(&self.ground, &rhs);
        axpy(-c, &self.ground, &mut rhs);
        // (H − E0) x = −Q ∂H φ
        scale(-1.0, &mut rhs);
        solve_shifted_projected(&self.ham, self.energy, &self.ground, &rhs)
    }
}

/// Conjugate gradients for `Q (H − shift) Q x = b`, `x ⟂ φ`.
fn solve_shifted_projected(ham: &Hamiltonian, shift: f64, phi: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let dim = b.len();
    let project = |v: &mut Vec<f64>| {
        let c = dot(phi, v);
        axpy(-c, phi, v);
    };
    let mut x = vec![0.0; dim];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(x);
    }
    let target = 1e-12 * b_norm;
    let mut r = b.to_vec();
    project(&mut r);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; dim];
    let max_iter = 20_000;
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            project(&mut x);
            return Ok(x);
        }
        ham.apply(&p, &mut ap);
        axpy(-shift, &p, &mut ap);
        project(&mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: rr.sqrt() / b_norm })
}

/// First-order perturbative `|∂_μ Φ⟩` from the full dense spectrum.
pub fn state_derivative_pt(config: &ProbeConfig, h: &FieldPoint, direction: Direction) -> Result<Vec<f64>> {
    Ok(DenseProbe::new(config, h)?.derivative(direction))
}

/// `|∂_μ Φ⟩` by a projected linear solve against the iterative ground state.
pub fn state_derivative_lr(config: &ProbeConfig, h: &FieldPoint, direction: Direction) -> Result<Vec<f64>> {
    IterativeProbe::new(config, h)?.derivative(direction)
}

fn solver_for(config: &ProbeConfig) -> SolverMethod {
    SolverMethod::auto(config.dim(), AUTO_DENSE_DIM)
}

/// Ground state at `h`, with the gap requirement enforced.
fn checked_ground(config: &ProbeConfig, h: &FieldPoint) -> Result<Vec<f64>> {
    let ham = Hamiltonian::new(config, h)?;
    let sol = match solver_for(config) {
        SolverMethod::Dense => ground_state(&ham, SolverMethod::Dense)?,
        SolverMethod::Iterative => ground_state_from(&ham, None, true, &precise_lanczos())?,
    };
    check_gap(sol.gap, sol.norm_bound)?;
    Ok(sol.into_ground_vector())
}

/// Ground state at a nearby point, aligned to the sign of `reference`.
fn shifted_ground(config: &ProbeConfig, h: &FieldPoint, reference: &[f64]) -> Result<Vec<f64>> {
    let ham = Hamiltonian::new(config, h)?;
    let mut v = match solver_for(config) {
        SolverMethod::Dense => ground_state(&ham, SolverMethod::Dense)?.into_ground_vector(),
        SolverMethod::Iterative => {
            ground_state_from(&ham, Some(reference), false, &precise_lanczos())?.into_ground_vector()
        }
    };
    if dot(&v, reference) < 0.0 {
        scale(-1.0, &mut v);
    }
    Ok(v)
}

fn central_difference(plus: &[f64], minus: &[f64], step: f64) -> Vec<f64> {
    plus.iter().zip(minus).map(|(p, m)| (p - m) / (2.0 * step)).collect()
}

fn check_step(step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("finite-difference step must be positive, got {step}")))
    }
}

/// Gauge-aligned central difference `(|Φ(h+δ)⟩ − |Φ(h−δ)⟩)/(2δ)`.
pub fn state_derivative_fd(config: &ProbeConfig, h: &FieldPoint, direction: Direction, step: f64) -> Result<Vec<f64>> {
    check_step(step)?;
    let center = checked_ground(config, h)?;
    fd_from_center(config, h, direction, step, &center)
}

fn fd_from_center(
    config: &ProbeConfig,
    h: &FieldPoint,
    direction: Direction,
    step: f64,
    center: &[f64],
) -> Result<Vec<f64>> {
    let plus = shifted_ground(config, &h.shifted(direction, step), center)?;
    let minus = shifted_ground(config, &h.shifted(direction, -step), center)?;
    Ok(central_difference(&plus, &minus, step))
}

/// `[F_Q]_{μν} = 4 Re[⟨∂μΦ|∂νΦ⟩ − ⟨∂μΦ|Φ⟩⟨Φ|∂νΦ⟩]`
pub fn qfi_matrix_pure(phi: &QuantumState, derivatives: &[&[f64]]) -> Result<FisherMatrix> {
    let d = derivatives.len();
    if !(1..=2).contains(&d) {
        return Err(Error::invalid(format!("expected 1 or 2 derivative vectors, got {d}")));
    }
    if derivatives.iter().any(|v| v.len() != phi.dim()) {
        return Err(Error::invalid("derivative length does not match the state"));
    }
    let a = phi.amplitudes();
    let overlaps: Vec<f64> = derivatives.iter().map(|v| dot(v, a)).collect();
    let mut entries = [[0.0; 2]; 2];
    for mu in 0..d {
        for nu in mu..d {
            let value = 4.0 * (dot(derivatives[mu], derivatives[nu]) - overlaps[mu] * overlaps[nu]);
            entries[mu][nu] = value;
            entries[nu][mu] = value;
        }
    }
    Ok(if d == 1 {
        FisherMatrix::scalar(FisherKind::Quantum, entries[0][0])
    } else {
        FisherMatrix::two_by_two(FisherKind::Quantum, entries)
    })
}

/// QFI matrix at one point together with ground-state diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiEvaluation {
    pub matrix: FisherMatrix,
    /// `E1 − E0` of the unperturbed probe.
    pub gap: f64,
}

/// Ground state, derivatives and QFI matrix in one pass.
pub fn qfi_matrix(
    config: &ProbeConfig,
    h: &FieldPoint,
    parameters: Parameters,
    method: DerivativeMethod,
) -> Result<QfiEvaluation> {
    let directions = parameters.directions();
    let (phi, derivatives, gap) = match method {
        DerivativeMethod::Perturbation => {
            let probe = DenseProbe::new(config, h)?;
            let d: Vec<Vec<f64>> = directions.iter().map(|&dir| probe.derivative(dir)).collect();
            (probe.ground(), d, probe.gap)
        }
        DerivativeMethod::LinearResponse => {
            let probe = IterativeProbe::new(config, h)?;
            let d = directions.iter().map(|&dir| probe.derivative(dir)).collect::<Result<Vec<_>>>()?;
            (probe.ground.clone(), d, probe.gap)
        }
        DerivativeMethod::FiniteDifference { step } => {
            check_step(step)?;
            let ham = Hamiltonian::new(config, h)?;
            let sol = match solver_for(config) {
                SolverMethod::Dense => ground_state(&ham, SolverMethod::Dense)?,
                SolverMethod::Iterative => ground_state_from(&ham, None, true, &precise_lanczos())?,
            };
            let gap = check_gap(sol.gap, sol.norm_bound)?;
            let center = sol.into_ground_vector();
            let d = directions
                .iter()
                .map(|&dir| fd_from_center(config, h, dir, step, &center))
                .collect::<Result<Vec<_>>>()?;
            (center, d, gap)
        }
    };
    let state = QuantumState::new(phi)?;
    let refs: Vec<&[f64]> = derivatives.iter().map(|v| v.as_slice()).collect();
    Ok(QfiEvaluation { matrix: qfi_matrix_pure(&state, &refs)?, gap })
}

/// Distribution of the total magnetization `M = Σ σz` over its `L + 1`
/// eigenvalues `m = −L, −L+2, …, L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    length: usize,
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn outcomes(&self) -> Vec<i64> {
        (0..=self.length).map(|j| -(self.length as i64) + 2 * j as i64).collect()
    }

    /// Probabilities in the order of [`Self::outcomes`].
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, m: i64) -> f64 {
        let j = m + self.length as i64;
        if j < 0 || j % 2 != 0 || j / 2 > self.length as i64 {
            return 0.0;
        }
        self.probabilities[(j / 2) as usize]
    }
}

fn distribution_of(amplitudes: &[f64], length: usize) -> OutcomeDistribution {
    let mut probabilities = vec![0.0; length + 1];
    for (s, a) in amplitudes.iter().enumerate() {
        let m = magnetization(s, length);
        probabilities[((m + length as i64) / 2) as usize] += a * a;
    }
    OutcomeDistribution { length, probabilities }
}

pub fn magnetization_distribution(phi: &QuantumState) -> OutcomeDistribution {
    distribution_of(phi.amplitudes(), phi.length())
}

/// Classical Fisher information of the magnetization measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfiEvaluation {
    pub matrix: FisherMatrix,
    /// Probability mass of outcomes under the floor, left out of the sum.
    pub excluded_mass: f64,
}

/// `[F_C]_{μν} = Σ_k ∂μp_k ∂νp_k / p_k` with central-difference derivatives.
pub fn cfi_matrix(config: &ProbeConfig, h: &FieldPoint, parameters: Parameters, step: f64) -> Result<CfiEvaluation> {
    check_step(step)?;
    let center = checked_ground(config, h)?;
    let length = config.length;
    let p = distribution_of(&center, length);
    let derivatives = parameters
        .directions()
        .iter()
        .map(|&dir| {
            let plus = shifted_ground(config, &h.shifted(dir, step), &center)?;
            let minus = shifted_ground(config, &h.shifted(dir, -step), &center)?;
            let pp = distribution_of(&plus, length);
            let pm = distribution_of(&minus, length);
            Ok(pp
                .probabilities
                .iter()
                .zip(&pm.probabilities)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    cfi_from_distribution(&p, &derivatives)
}

/// Assemble the CFI matrix from outcome probabilities and their derivatives.
pub fn cfi_from_distribution(p: &OutcomeDistribution, derivatives: &[Vec<f64>]) -> Result<CfiEvaluation> {
    let d = derivatives.len();
    let mut entries = [[0.0; 2]; 2];
    let mut excluded_mass = 0.0;
    let mut kept = 0;
    for (k, &pk) in p.probabilities.iter().enumerate() {
        if pk < PROBABILITY_FLOOR {
            excluded_mass += pk;
            continue;
        }
        kept += 1;
        for mu in 0..d {
            for nu in 0..d {
                entries[mu][nu] += derivatives[mu][k] * derivatives[nu][k] / pk;
            }
        }
    }
    if kept == 0 {
        return Err(Error::EmptyDistribution { floor: PROBABILITY_FLOOR });
    }
    let matrix = if d == 1 {
        FisherMatrix::scalar(FisherKind::Classical, entries[0][0])
    } else {
        FisherMatrix::two_by_two(FisherKind::Classical, entries)
    };
    Ok(CfiEvaluation { matrix, excluded_mass })
}
