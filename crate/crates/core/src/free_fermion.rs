//! Exact solution of the transverse-field chain (no longitudinal field)
//! through Jordan–Wigner fermions and Bogoliubov rotations.
//!
//! Each positive momentum `k` carries a rotation angle
//! `θ_k = atan2(J sin k, h_z + J cos k)`. The ground state is a product over
//! modes, so the overlap of two ground states is `Π_k cos(Δθ_k / 2)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Ratio between the spin-chain energy and `−Σ_k ε_k` with `ε_k` as below.
pub const ENERGY_CALIBRATION: f64 = 2.0;

/// Default fidelity step, in units of `J`.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Relative disagreement between the `δ` and `δ/2` estimates that triggers
/// the step warning.
pub const STEP_WARNING: f64 = 0.01;

/// Positive momenta `(2m − 1)π/L`, `m = 1..L/2` (even fermion parity sector).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    length: usize,
    values: Vec<f64>,
}

impl MomentumGrid {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn momenta(length: usize) -> Result<MomentumGrid> {
    if length < 2 || length % 2 != 0 {
        return Err(Error::invalid(format!("free-fermion solution needs an even length >= 2, got {length}")));
    }
    let l = length as f64;
    let values = (1..=length / 2).map(|m| (2 * m - 1) as f64 * PI / l).collect();
    Ok(MomentumGrid { length, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovMode {
    pub momentum: f64,
    /// `ε_k = sqrt((h_z + J cos k)² + J² sin² k)`
    pub energy: f64,
    /// `θ_k ∈ [0, π]`
    pub angle: f64,
    /// `ε_k < 1e-14 · J`
    pub gapless: bool,
}

fn check_coupling(coupling: f64) -> Result<()> {
    if coupling.is_finite() && coupling > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("coupling J must be finite and positive, got {coupling}")))
    }
}

fn check_field(field: f64) -> Result<()> {
    if field.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("transverse field must be finite"))
    }
}

pub fn mode(momentum: f64, field: f64, coupling: f64) -> Result<BogoliubovMode> {
    check_coupling(coupling)?;
    check_field(field)?;
    if !(momentum > 0.0 && momentum <= PI) {
        return Err(Error::invalid(format!("momentum {momentum} outside (0, π]")));
    }
    let a = field + coupling * momentum.cos();
    let b = coupling * momentum.sin();
    let energy = a.hypot(b);
    Ok(BogoliubovMode { momentum, energy, angle: b.atan2(a), gapless: energy < 1e-14 * coupling })
}

fn validate(field: f64, coupling: f64, length: usize) -> Result<MomentumGrid> {
    check_coupling(coupling)?;
    check_field(field)?;
    momenta(length)
}

/// Ground energy of the spin chain, `−2 Σ_k ε_k`.
pub fn ground_energy(field: f64, coupling: f64, length: usize) -> Result<f64> {
    let grid = validate(field, coupling, length)?;
    let sum: f64 = grid.values.iter().map(|&k| (field + coupling * k.cos()).hypot(coupling * k.sin())).sum();
    Ok(-ENERGY_CALIBRATION * sum)
}

/// `ln F` for the ground states at `field` and `field + delta`.
fn log_fidelity(field: f64, delta: f64, coupling: f64, grid: &MomentumGrid) -> f64 {
    grid.values
        .iter()
        .map(|&k| {
            let (s, c) = k.sin_cos();
            let a1 = field + coupling * c;
            let a2 = field + delta + coupling * c;
            let b = coupling * s;
            // angle between (a1, b) and (a2, b) without cancellation
            let dtheta = (-delta * b).atan2(a1 * a2 + b * b);
            let half = 0.25 * dtheta;
            // ln cos(Δθ/2) = ln(1 − 2 sin²(Δθ/4))
            (-2.0 * half.sin().powi(2)).ln_1p()
        })
        .sum()
}

/// Ground-state overlap `F = Π_k cos((θ_k(h) − θ_k(h + δ)) / 2)`.
pub fn fidelity(field: f64, delta: f64, coupling: f64, length: usize) -> Result<f64> {
    let grid = validate(field, coupling, length)?;
    if !delta.is_finite() {
        return Err(Error::invalid("fidelity step must be finite"));
    }
    Ok(log_fidelity(field, delta, coupling, &grid).exp())
}

/// Fidelity, susceptibility and single-parameter QFI for one step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub step: f64,
    pub fidelity: f64,
    /// `χ = 2(1 − F)/δ²`
    pub susceptibility: f64,
    /// `4χ`
    pub qfi: f64,
    /// `4χ` at step `δ/2`.
    pub qfi_half_step: f64,
    /// Richardson combination `(4·qfi(δ/2) − qfi(δ))/3`.
    pub qfi_extrapolated: f64,
    /// `|qfi(δ) − qfi(δ/2)| / qfi(δ/2)`
    pub step_disagreement: f64,
    /// Set when `step_disagreement > STEP_WARNING`.
    pub step_warning: bool,
}

fn susceptibility(field: f64, delta: f64, coupling: f64, grid: &MomentumGrid) -> (f64, f64) {
    let ln_f = log_fidelity(field, delta, coupling, grid);
    let infidelity = -ln_f.exp_m1();
    (ln_f.exp(), 2.0 * infidelity / (delta * delta))
}

pub fn qfi_transverse(field: f64, coupling: f64, length: usize, delta: f64) -> Result<FidelityResult> {
    let grid = validate(field, coupling, length)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("fidelity step must be positive, got {delta}")));
    }
    let (fidelity, chi) = susceptibility(field, delta, coupling, &grid);
    let (_, chi_half) = susceptibility(field, 0.5 * delta, coupling, &grid);
    let qfi = 4.0 * chi;
    let qfi_half_step = 4.0 * chi_half;
    let qfi_extrapolated = (4.0 * qfi_half_step - qfi) / 3.0;
    let step_disagreement = if qfi_half_step > 0.0 { (qfi - qfi_half_step).abs() / qfi_half_step } else { 0.0 };
    Ok(FidelityResult {
        step: delta,
        fidelity,
        susceptibility: chi,
        qfi,
        qfi_half_step,
        qfi_extrapolated,
        step_disagreement,
        step_warning: step_disagreement > STEP_WARNING,
    })
}
