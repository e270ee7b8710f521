//! Periodic Ising chain in a skew magnetic field.
//!
//! The probe Hamiltonian is
//!
//! ```text
//! H = J Σ σx(i) σx(i+1) − Σ [ (Bx + hx) σx(i) + (Bz + hz) σz(i) ]
//! ```
//!
//! with site `L` identified with site `0`. States live in the σz product basis
//! with site 0 stored in the least significant bit; a set bit means spin down
//! (σz = −1).

mod eigen;
mod hamiltonian;
pub(crate) mod lanczos;
mod tridiagonal;

pub(crate) use eigen::dense_spectrum;
pub use eigen::{ground_state, ground_state_from, low_spectrum, EigenSolution, SolverMethod};
pub use hamiltonian::{apply_field_operator, magnetization, Hamiltonian, DENSE_LIMIT, ITERATIVE_LIMIT};
pub use lanczos::LanczosOptions;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap below which a ground doublet is reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Tunable control field `B = (Bx, Bz)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlField {
    pub x: f64,
    pub z: f64,
}

impl ControlField {
    pub fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn transverse(z: f64) -> Self {
        Self { x: 0.0, z }
    }
}

/// Unknown field `h = (hx, hz)`. Single-parameter sensing keeps `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldPoint {
    pub x: f64,
    pub z: f64,
}

impl FieldPoint {
    pub fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn transverse(z: f64) -> Self {
        Self { x: 0.0, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }

    /// Shift along one field direction.
    pub fn shifted(&self, direction: Direction, by: f64) -> Self {
        match direction {
            Direction::X => Self { x: self.x + by, z: self.z },
            Direction::Z => Self { x: self.x, z: self.z + by },
        }
    }
}

/// A field direction the unknown parameter can point along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    X,
    Z,
}

/// Probe definition: chain length, exchange coupling and control field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub length: usize,
    pub coupling: f64,
    pub control: ControlField,
}

impl ProbeConfig {
    pub fn new(length: usize, coupling: f64, control: ControlField) -> Result<Self> {
        let config = Self { length, coupling, control };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::invalid(format!("chain length must be at least 2, got {}", self.length)));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::invalid(format!("coupling J must be finite and positive, got {}", self.coupling)));
        }
        if !(self.control.x.is_finite() && self.control.z.is_finite()) {
            return Err(Error::invalid("control field must be finite"));
        }
        Ok(())
    }

    pub fn with_control(&self, control: ControlField) -> Self {
        Self { control, ..*self }
    }

    pub fn dim(&self) -> usize {
        1usize << self.length
    }
}
