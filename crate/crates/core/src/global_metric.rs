//! Average-uncertainty functionals over a sensing region.
//!
//! `g(B) = ∫ f(h) Tr[inv F_Q(h|B) · W] dh` with a uniform prior `f` over an
//! interval (one parameter) or rectangle (two parameters). With one
//! parameter this is `∫ f(h) / F_Q(h|B) dh`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{qfi_matrix, DerivativeMethod, FisherKind, FisherMatrix, Parameters, MAX_CONDITION};
use crate::free_fermion;
use crate::lattice::{FieldPoint, ProbeConfig};
use crate::quadrature::uniform_rule;

/// Information below this is treated as a diverging integrand.
pub const MIN_INFORMATION: f64 = 1e-12;

/// Interval or rectangle of unknown fields with a uniform prior.
///
/// A one-parameter region covers `h_z`; a two-parameter region is ordered
/// `(h_x, h_z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingRegion {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl SensingRegion {
    pub fn single(center: f64, width: f64) -> Result<Self> {
        Self::new(vec![center], vec![width])
    }

    pub fn rectangle(centers: [f64; 2], widths: [f64; 2]) -> Result<Self> {
        Self::new(centers.to_vec(), widths.to_vec())
    }

    fn new(centers: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if centers.iter().chain(&widths).any(|v| !v.is_finite()) {
            return Err(Error::invalid("region centers and widths must be finite"));
        }
        if widths.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid("region widths must be non-negative"));
        }
        Ok(Self { centers, widths })
    }

    pub fn dim(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Center of the `h_z` axis.
    pub fn center_z(&self) -> f64 {
        self.centers[self.dim() - 1]
    }

    /// Field at the region center.
    pub fn center_point(&self) -> FieldPoint {
        self.point(&self.centers)
    }

    /// Field point from per-axis coordinates.
    pub fn point(&self, coords: &[f64]) -> FieldPoint {
        match coords {
            [z] => FieldPoint::transverse(*z),
            [x, z] => FieldPoint::new(*x, *z),
            _ => unreachable!("regions are 1-D or 2-D"),
        }
    }

    /// Same widths, centers moved by `offset` (per axis).
    pub fn shifted(&self, offset: &[f64]) -> Self {
        assert_eq!(offset.len(), self.dim());
        let centers = self.centers.iter().zip(offset).map(|(c, o)| c + o).collect();
        Self { centers, widths: self.widths.clone() }
    }
}

/// Symmetric positive-definite weight on the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    dim: usize,
    entries: [[f64; 2]; 2],
}

impl WeightMatrix {
    pub fn identity(dim: usize) -> Self {
        assert!((1..=2).contains(&dim));
        Self { dim, entries: [[1.0, 0.0], [0.0, if dim == 2 { 1.0 } else { 0.0 }]] }
    }

    pub fn new(dim: usize, entries: [[f64; 2]; 2]) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid("weight matrix must be 1x1 or 2x2"));
        }
        let w = Self { dim, entries };
        let as_matrix = w.as_fisher();
        if entries.iter().flatten().any(|v| !v.is_finite())
            || !as_matrix.is_symmetric(1e-12)
            || as_matrix.eigenvalues()[0] <= 0.0
        {
            return Err(Error::invalid("weight matrix must be symmetric positive definite"));
        }
        Ok(w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut entries = self.entries;
        entries.iter_mut().flatten().for_each(|v| *v *= alpha);
        Self { entries, ..*self }
    }

    fn as_fisher(&self) -> FisherMatrix {
        if self.dim == 1 {
            FisherMatrix::scalar(FisherKind::Quantum, self.entries[0][0])
        } else {
            FisherMatrix::two_by_two(FisherKind::Quantum, self.entries)
        }
    }
}

/// `Tr[inv F · W]`
pub fn scalar_bound_trace(f: &FisherMatrix, w: &WeightMatrix) -> Result<f64> {
    if f.dim() != w.dim {
        return Err(Error::invalid(format!("information is {0}x{0} but weights are {1}x{1}", f.dim(), w.dim)));
    }
    let (inv, _) = f.inverse()?;
    let n = f.dim();
    let trace = (0..n).flat_map(|i| (0..n).map(move |k| (i, k))).map(|(i, k)| inv[i][k] * w.entries[k][i]).sum();
    Ok(trace)
}

/// Source of the QFI at a field point for a fixed probe.
pub trait InformationEngine: Sync {
    /// Number of estimated parameters.
    fn dim(&self) -> usize;
    fn information(&self, h: &FieldPoint) -> Result<FisherMatrix>;
}

impl<T: InformationEngine + ?Sized> InformationEngine for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn information(&self, h: &FieldPoint) -> Result<FisherMatrix> {
        (**self).information(h)
    }
}

/// Transverse-field QFI from the exact free-fermion solution (`h_x = B_x = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeFermionEngine {
    pub length: usize,
    pub coupling: f64,
    pub control_z: f64,
    pub step: f64,
}

impl FreeFermionEngine {
    pub fn new(length: usize, coupling: f64, control_z: f64) -> Self {
        Self { length, coupling, control_z, step: free_fermion::DEFAULT_STEP }
    }
}

impl InformationEngine for FreeFermionEngine {
    fn dim(&self) -> usize {
        1
    }

    fn information(&self, h: &FieldPoint) -> Result<FisherMatrix> {
        if h.x != 0.0 {
            return Err(Error::invalid("free-fermion engine needs a vanishing longitudinal field"));
        }
        let r = free_fermion::qfi_transverse(h.z + self.control_z, self.coupling, self.length, self.step)?;
        Ok(FisherMatrix::scalar(FisherKind::Quantum, r.qfi_extrapolated))
    }
}

/// QFI from exact diagonalization of the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactEngine {
    pub config: ProbeConfig,
    pub parameters: Parameters,
    pub method: DerivativeMethod,
}

impl ExactEngine {
    pub fn new(config: ProbeConfig, parameters: Parameters) -> Self {
        Self { config, parameters, method: DerivativeMethod::auto(config.length) }
    }
}

impl InformationEngine for ExactEngine {
    fn dim(&self) -> usize {
        self.parameters.dim()
    }

    fn information(&self, h: &FieldPoint) -> Result<FisherMatrix> {
        Ok(qfi_matrix(&self.config, h, self.parameters, self.method)?.matrix)
    }
}

/// Engine backed by a closure (tests, mocks).
pub struct FnEngine<F> {
    dim: usize,
    f: F,
}

impl<F> FnEngine<F>
where
    F: Fn(&FieldPoint) -> Result<FisherMatrix> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> InformationEngine for FnEngine<F>
where
    F: Fn(&FieldPoint) -> Result<FisherMatrix> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn information(&self, h: &FieldPoint) -> Result<FisherMatrix> {
        (self.f)(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Starting nodes per axis.
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Accept when doubling the nodes changes g by less than this fraction.
    pub rel_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { initial_nodes: 16, max_nodes: 128, rel_tol: 1e-3 }
    }
}

impl QuadratureOptions {
    pub fn validate(&self) -> Result<()> {
        if self.initial_nodes == 0 || self.max_nodes < self.initial_nodes {
            return Err(Error::invalid("quadrature needs 1 <= initial_nodes <= max_nodes"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSample {
    pub h_x: f64,
    pub h_z: f64,
    /// Prior-normalized quadrature weight.
    pub weight: f64,
    /// `Tr[inv F_Q · W]` at the node.
    pub integrand: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMetricResult {
    pub value: f64,
    pub nodes_per_axis: usize,
    /// Samples of the accepted rule.
    pub samples: Vec<NodeSample>,
    /// `(nodes per axis, g)` for every rule tried.
    pub refinement: Vec<(usize, f64)>,
    pub max_condition: f64,
    /// Whether the doubling criterion was met before `max_nodes`.
    pub converged: bool,
}

impl GlobalMetricResult {
    pub fn integrand_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.integrand), hi.max(s.integrand)))
    }
}

fn node_integrand(engine: &dyn InformationEngine, h: &FieldPoint, w: &WeightMatrix) -> Result<(f64, f64)> {
    let f = engine.information(h).map_err(|e| Error::NodeFailure { h_x: h.x, h_z: h.z, source: Box::new(e) })?;
    if f.dim() == 1 && !(f.get(0, 0) >= MIN_INFORMATION) {
        return Err(Error::DivergingIntegrand { h_x: h.x, h_z: h.z, information: f.get(0, 0) });
    }
    if f.dim() == 2 {
        let top = f.eigenvalues()[1];
        if !(top >= MIN_INFORMATION) {
            return Err(Error::DivergingIntegrand { h_x: h.x, h_z: h.z, information: top });
        }
    }
    let condition = f.condition();
    let value =
        scalar_bound_trace(&f, w).map_err(|e| Error::NodeFailure { h_x: h.x, h_z: h.z, source: Box::new(e) })?;
    Ok((value, condition))
}

fn evaluate_rule(
    engine: &dyn InformationEngine,
    region: &SensingRegion,
    w: &WeightMatrix,
    n: usize,
) -> Result<Vec<NodeSample>> {
    let rules: Vec<(Vec<f64>, Vec<f64>)> =
        region.centers.iter().zip(&region.widths).map(|(&c, &wd)| uniform_rule(c, wd, n)).collect();
    let mut nodes: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for (x, wt) in &rules {
        nodes = nodes
            .iter()
            .flat_map(|(coords, weight)| {
                x.iter().zip(wt).map(move |(xi, wi)| {
                    let mut c = coords.clone();
                    c.push(*xi);
                    (c, weight * wi)
                })
            })
            .collect();
    }
    nodes
        .par_iter()
        .map(|(coords, weight)| {
            let h = region.point(coords);
            let (integrand, condition) = node_integrand(engine, &h, w)?;
            Ok(NodeSample { h_x: h.x, h_z: h.z, weight: *weight, integrand, condition })
        })
        .collect()
}

fn weighted_sum(samples: &[NodeSample]) -> f64 {
    samples.iter().map(|s| s.weight * s.integrand).sum()
}

/// Adaptive tensor-product Gauss–Legendre evaluation of `g`.
pub fn g_multi(
    engine: &dyn InformationEngine,
    region: &SensingRegion,
    w: &WeightMatrix,
    opts: &QuadratureOptions,
) -> Result<GlobalMetricResult> {
    opts.validate()?;
    if engine.dim() != region.dim() || w.dim != region.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: engine {}, region {}, weights {}",
            engine.dim(),
            region.dim(),
            w.dim
        )));
    }
    let point_only = region.widths.iter().all(|&wd| wd == 0.0);
    let mut n = opts.initial_nodes;
    let mut samples = evaluate_rule(engine, region, w, n)?;
    let mut value = weighted_sum(&samples);
    let mut refinement = vec![(n, value)];
    let mut converged = point_only;
    while !converged && 2 * n <= opts.max_nodes {
        let finer = evaluate_rule(engine, region, w, 2 * n)?;
        let finer_value = weighted_sum(&finer);
        n *= 2;
        refinement.push((n, finer_value));
        converged = (finer_value - value).abs() < opts.rel_tol * finer_value.abs();
        samples = finer;
        value = finer_value;
    }
    let max_condition = samples.iter().map(|s| s.condition).fold(1.0, f64::max);
    if max_condition > MAX_CONDITION {
        return Err(Error::SingularInformation { condition: max_condition });
    }
    Ok(GlobalMetricResult { value, nodes_per_axis: n, samples, refinement, max_condition, converged })
}

/// One-parameter `g = ∫ f(h) / F_Q(h|B) dh`.
pub fn g_single(
    engine: &dyn InformationEngine,
    region: &SensingRegion,
    opts: &QuadratureOptions,
) -> Result<GlobalMetricResult> {
    if region.dim() != 1 {
        return Err(Error::invalid("single-parameter metric needs a 1-D region"));
    }
    g_multi(engine, region, &WeightMatrix::identity(1), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(value: f64) -> impl Fn(&FieldPoint) -> Result<FisherMatrix> + Sync {
        move |_| Ok(FisherMatrix::scalar(FisherKind::Quantum, value))
    }

    #[test]
    fn constant_information() {
        let engine = FnEngine::new(1, constant(4.0));
        let region = SensingRegion::single(0.3, 0.5).unwrap();
        let r = g_single(&engine, &region, &QuadratureOptions::default()).unwrap();
        assert!((r.value - 0.25).abs() < 1e-15);
        assert!(r.converged);
        assert_eq!(r.refinement.len(), 2);
    }

    #[test]
    fn diagonal_information() {
        let engine = FnEngine::new(2, |_: &FieldPoint| Ok(FisherMatrix::diagonal(FisherKind::Quantum, &[2.0, 8.0])));
        let region = SensingRegion::rectangle([0.0, 0.0], [0.1, 0.1]).unwrap();
        let r = g_multi(&engine, &region, &WeightMatrix::identity(2), &QuadratureOptions::default()).unwrap();
        assert!((r.value - 0.625).abs() < 1e-14);
    }

    #[test]
    fn zero_width_is_point_evaluation() {
        let engine = FnEngine::new(1, |h: &FieldPoint| Ok(FisherMatrix::scalar(FisherKind::Quantum, 1.0 + h.z * h.z)));
        let region = SensingRegion::single(2.0, 0.0).unwrap();
        let r = g_single(&engine, &region, &QuadratureOptions::default()).unwrap();
        assert_eq!(r.value, 0.2);
        assert_eq!(r.samples.len(), 1);
    }

    #[test]
    fn diverging_integrand_names_node() {
        let engine = FnEngine::new(1, |h: &FieldPoint| {
            Ok(FisherMatrix::scalar(FisherKind::Quantum, if h.z > 0.0 { 0.0 } else { 1.0 }))
        });
        let region = SensingRegion::single(0.0, 1.0).unwrap();
        match g_single(&engine, &region, &QuadratureOptions::default()) {
            Err(Error::DivergingIntegrand { h_z, .. }) => assert!(h_z > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn node_failures_carry_coordinates() {
        let engine = FnEngine::new(2, |h: &FieldPoint| {
            if h.x > 0.0 {
                Ok(FisherMatrix::two_by_two(FisherKind::Quantum, [[1.0, 1.0], [1.0, 1.0]]))
            } else {
                Ok(FisherMatrix::diagonal(FisherKind::Quantum, &[1.0, 1.0]))
            }
        });
        let region = SensingRegion::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        match g_multi(&engine, &region, &WeightMatrix::identity(2), &QuadratureOptions::default()) {
            Err(Error::NodeFailure { h_x, source, .. }) => {
                assert!(h_x > 0.0);
                assert!(matches!(*source, Error::SingularInformation { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trace_bound_examples() {
        let id = FisherMatrix::diagonal(FisherKind::Quantum, &[1.0, 1.0]);
        assert_eq!(scalar_bound_trace(&id, &WeightMatrix::identity(2)).unwrap(), 2.0);
        let f = FisherMatrix::diagonal(FisherKind::Quantum, &[4.0, 1.0]);
        assert_eq!(scalar_bound_trace(&f, &WeightMatrix::identity(2)).unwrap(), 1.25);
        let w = WeightMatrix::new(2, [[2.0, 0.5], [0.5, 1.0]]).unwrap();
        assert_eq!(scalar_bound_trace(&f, &w).unwrap(), 1.5);
        assert!(scalar_bound_trace(&f, &WeightMatrix::identity(1)).is_err());
        assert!(WeightMatrix::new(2, [[1.0, 2.0], [2.0, 1.0]]).is_err());
    }

    #[test]
    fn rejects_bad_regions() {
        assert!(SensingRegion::single(0.0, -0.1).is_err());
        assert!(SensingRegion::rectangle([f64::NAN, 0.0], [0.1, 0.1]).is_err());
    }
}
