use nalgebra::DMatrix;

use super::{Direction, FieldPoint, ProbeConfig};
use crate::error::{Error, Result};

/// Largest Hilbert-space dimension handled by dense diagonalization (L = 12).
pub const DENSE_LIMIT: usize = 1 << 12;
/// Largest Hilbert-space dimension handled by the iterative solver (L = 20).
pub const ITERATIVE_LIMIT: usize = 1 << 20;

/// Matrix-free periodic Ising Hamiltonian. Only the total fields `B + h`
/// enter, so two probes with equal totals build identical operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    length: usize,
    coupling: f64,
    field_x: f64,
    field_z: f64,
    bond_masks: Vec<usize>,
}

impl Hamiltonian {
    pub fn new(config: &ProbeConfig, h: &FieldPoint) -> Result<Self> {
        if config.length < 2 {
            return Err(Error::invalid(format!("chain length must be at least 2, got {}", config.length)));
        }
        if config.length > 20 {
            return Err(Error::TooLarge { dim: config.dim(), limit: ITERATIVE_LIMIT, method: "exact diagonalization" });
        }
        if !config.coupling.is_finite() {
            return Err(Error::invalid("coupling must be finite"));
        }
        if !h.is_finite() || !config.control.x.is_finite() || !config.control.z.is_finite() {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(Self::from_totals(config.length, config.coupling, config.control.x + h.x, config.control.z + h.z))
    }

    /// Build from total fields directly. Coupling may be zero here, which the
    /// decoupled-spin checks rely on.
    pub fn from_totals(length: usize, coupling: f64, field_x: f64, field_z: f64) -> Self {
        assert!((2..=20).contains(&length), "chain length {length} outside 2..=20");
        let bond_masks = (0..length).map(|i| (1usize << i) ^ (1usize << ((i + 1) % length))).collect();
        Self { length, coupling, field_x, field_z, bond_masks }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dim(&self) -> usize {
        1usize << self.length
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Total longitudinal (x) and transverse (z) fields.
    pub fn fields(&self) -> (f64, f64) {
        (self.field_x, self.field_z)
    }

    /// Upper bound on the spectral norm: Σ |couplings|.
    pub fn norm_bound(&self) -> f64 {
        let l = self.length as f64;
        (l * (self.coupling.abs() + self.field_x.abs() + self.field_z.abs())).max(f64::MIN_POSITIVE)
    }

    #[inline]
    fn diagonal(&self, state: usize) -> f64 {
        -self.field_z * magnetization(state, self.length) as f64
    }

    /// `out = H v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let dim = self.dim();
        assert_eq!(v.len(), dim);
        assert_eq!(out.len(), dim);
        for (s, (o, x)) in out.iter_mut().zip(v).enumerate() {
            *o = self.diagonal(s) * x;
        }
        for i in 0..self.length {
            let j = (i + 1) % self.length;
            if i != j {
                add_flipped(v, out, (1 << i) | (1 << j), self.coupling);
            }
            add_flipped(v, out, 1 << i, -self.field_x);
        }
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply(v, &mut out);
        out
    }

    /// Explicit matrix; refuses dimensions above [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > DENSE_LIMIT {
            return Err(Error::TooLarge { dim, limit: DENSE_LIMIT, method: "dense" });
        }
        let mut m = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            m[(s, s)] += self.diagonal(s);
            for &mask in &self.bond_masks {
                m[(s ^ mask, s)] += self.coupling;
            }
            for i in 0..self.length {
                m[(s ^ (1 << i), s)] -= self.field_x;
            }
        }
        Ok(m)
    }
}

/// `out[s] += coef · v[s ^ mask]` for a mask of one or two bits, streamed
/// block by block over the highest bit.
fn add_flipped(v: &[f64], out: &mut [f64], mask: usize, coef: f64) {
    let high = 1usize << (usize::BITS - 1 - mask.leading_zeros());
    let low = mask ^ high;
    for (vb, ob) in v.chunks_exact(2 * high).zip(out.chunks_exact_mut(2 * high)) {
        let (v0, v1) = vb.split_at(high);
        let (o0, o1) = ob.split_at_mut(high);
        if low == 0 {
            for (o, x) in o0.iter_mut().zip(v1) {
                *o += coef * x;
            }
            for (o, x) in o1.iter_mut().zip(v0) {
                *o += coef * x;
            }
        } else {
            for t in 0..high {
                o0[t] += coef * v1[t ^ low];
                o1[t] += coef * v0[t ^ low];
            }
        }
    }
}

/// Total σz of a basis state: L − 2·(number of down spins).
#[inline]
pub fn magnetization(state: usize, length: usize) -> i64 {
    length as i64 - 2 * state.count_ones() as i64
}

/// `out = (Σ_i σ_α(i)) v` for the field direction `α`.
pub fn apply_field_operator(direction: Direction, length: usize, v: &[f64], out: &mut [f64]) {
    match direction {
        Direction::X => {
            for (s, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..length {
                    acc += v[s ^ (1 << i)];
                }
                *o = acc;
            }
        }
        Direction::Z => {
            for (s, o) in out.iter_mut().enumerate() {
                *o = magnetization(s, length) as f64 * v[s];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ControlField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_eigenvalues(h: &Hamiltonian) -> Vec<f64> {
        let m = h.to_dense().unwrap();
        let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    fn assert_spectrum(actual: &[f64], expected: &[f64]) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn two_site_zero_field_doubles_the_bond() {
        let h = Hamiltonian::from_totals(2, 1.0, 0.0, 0.0);
        let m = h.to_dense().unwrap();
        // |00> <-> |11> and |01> <-> |10> with amplitude 2J
        assert_eq!(m[(3, 0)], 2.0);
        assert_eq!(m[(2, 1)], 2.0);
        assert_spectrum(&dense_eigenvalues(&h), &[-2.0, -2.0, 2.0, 2.0]);
    }

    #[test]
    fn decoupled_spins_in_a_field() {
        let h = Hamiltonian::from_totals(2, 0.0, 0.0, 1.0);
        assert_spectrum(&dense_eigenvalues(&h), &[-2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = ProbeConfig { length: 1, coupling: 1.0, control: ControlField::default() };
        assert!(Hamiltonian::new(&c, &FieldPoint::default()).is_err());
        let c = ProbeConfig { length: 4, coupling: 1.0, control: ControlField::default() };
        assert!(Hamiltonian::new(&c, &FieldPoint::new(f64::NAN, 0.0)).is_err());
        assert!(Hamiltonian::new(&c, &FieldPoint::new(0.0, f64::INFINITY)).is_err());
        let c = ProbeConfig { length: 4, coupling: 1.0, control: ControlField::new(f64::INFINITY, 0.0) };
        assert!(Hamiltonian::new(&c, &FieldPoint::default()).is_err());
    }

    #[test]
    fn matrix_free_matches_dense() {
        let h = Hamiltonian::from_totals(7, 1.0, 0.37, -0.81);
        let m = h.to_dense().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hv = h.apply_vec(&v);
        let dense = &m * nalgebra::DVector::from_vec(v);
        for (a, b) in hv.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    #[test]
    fn hermitian_on_random_pairs() {
        let h = Hamiltonian::from_totals(9, 1.0, 0.3, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = dot(&u, &h.apply_vec(&v));
            let rhs = dot(&h.apply_vec(&u), &v);
            assert!((lhs - rhs).abs() <= 1e-12 * norm(&u) * norm(&v) * h.norm_bound());
        }
    }

    fn cyclic_shift(v: &[f64], length: usize) -> Vec<f64> {
        // site i -> site i+1
        let mut out = vec![0.0; v.len()];
        let top = 1usize << (length - 1);
        for (s, &a) in v.iter().enumerate() {
            let shifted = ((s << 1) & ((1 << length) - 1)) | usize::from(s & top != 0);
            out[shifted] = a;
        }
        out
    }

    #[test]
    fn commutes_with_translation() {
        let length = 8;
        let h = Hamiltonian::from_totals(length, 1.0, 0.6, -0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let v: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = h.apply_vec(&cyclic_shift(&v, length));
            let b = cyclic_shift(&h.apply_vec(&v), length);
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            assert!(norm(&diff) <= 1e-12 * norm(&v));
        }
    }

    #[test]
    fn field_shift_is_exact_for_dyadic_offsets() {
        let base = ProbeConfig { length: 5, coupling: 1.0, control: ControlField::new(0.75, -0.5) };
        let h = FieldPoint::new(0.125, 0.25);
        let reference = Hamiltonian::new(&base, &h).unwrap().to_dense().unwrap();
        for c in [0.5, -0.375, 1.0 / 1024.0, 3.0] {
            let shifted = base.with_control(ControlField::new(base.control.x + c, base.control.z + c));
            let hs = FieldPoint::new(h.x - c, h.z - c);
            let other = Hamiltonian::new(&shifted, &hs).unwrap().to_dense().unwrap();
            assert_eq!(reference, other);
        }
    }

    #[test]
    fn field_operators() {
        let length = 3;
        let v: Vec<f64> = (0..8).map(|s| s as f64).collect();
        let mut out = vec![0.0; 8];
        apply_field_operator(Direction::Z, length, &v, &mut out);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 1.0); // one down spin: m = 1
        assert_eq!(out[7], -21.0);
        apply_field_operator(Direction::X, length, &v, &mut out);
        assert_eq!(out[0], 1.0 + 2.0 + 4.0);
    }
}
