//! Control-field optimization, size-scaling fits and measurement efficiency.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{cfi_matrix, qfi_matrix, DerivativeMethod, Parameters};
use crate::global_metric::{g_multi, InformationEngine, QuadratureOptions, SensingRegion, WeightMatrix};
use crate::lattice::{ControlField, Direction, FieldPoint, ProbeConfig};

/// Grid points within this relative distance of the minimum count as ties.
pub const TIE_TOL: f64 = 1e-10;

/// Closed search interval for one control component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub resolution: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, resolution: f64) -> Result<Self> {
        let b = Self { lo, hi, resolution };
        b.validate()?;
        Ok(b)
    }

    /// A single fixed value.
    pub fn fixed(value: f64) -> Self {
        Self { lo: value, hi: value, resolution: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::invalid(format!("bracket [{}, {}] is not a finite interval", self.lo, self.hi)));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::invalid("bracket resolution must be positive"));
        }
        Ok(())
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    /// Evenly spaced points including both ends, spacing at most `resolution`.
    pub fn grid(&self) -> Vec<f64> {
        if self.is_fixed() {
            return vec![self.lo];
        }
        let n = ((self.hi - self.lo) / self.resolution - 1e-9).ceil().max(1.0) as usize;
        (0..=n).map(|i| if i == n { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / n as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub x: Bracket,
    pub z: Bracket,
    /// Search only `B_z ≥ −h_z^cen`. The spin flip `σz → −σz` maps
    /// `g(B_x, B_z)` onto `g(B_x, −2h_z^cen − B_z)`, so the other half is a mirror
    /// copy.
    pub fold_mirror: bool,
    pub polish: bool,
    pub polish_tolerance: f64,
    pub polish_iterations: usize,
}

impl SearchSpec {
    pub fn transverse(z: Bracket) -> Self {
        Self::new(Bracket::fixed(0.0), z)
    }

    pub fn new(x: Bracket, z: Bracket) -> Self {
        Self { x, z, fold_mirror: true, polish: true, polish_tolerance: 1e-4, polish_iterations: 200 }
    }

    /// Default single-parameter bracket: `B_z ∈ [−3, 3]`, resolution 0.02.
    pub fn default_1d() -> Self {
        Self::transverse(Bracket { lo: -3.0, hi: 3.0, resolution: 0.02 })
    }

    /// Default two-parameter bracket: `[0, 3] × [−2, 2]`, resolution 0.05.
    pub fn default_2d() -> Self {
        Self::new(Bracket { lo: 0.0, hi: 3.0, resolution: 0.05 }, Bracket { lo: -2.0, hi: 2.0, resolution: 0.05 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub control: ControlField,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedPoint {
    pub control: ControlField,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub b_star: ControlField,
    pub g_star: f64,
    pub grid_best: SearchPoint,
    /// Every successful evaluation, grid first then polish, in evaluation order.
    pub trace: Vec<SearchPoint>,
    pub failed: Vec<FailedPoint>,
    pub resolution: [f64; 2],
    pub boundary_warning: bool,
    pub polish_iterations: usize,
}

/// Minimize `g(B)` over a control-field bracket: grid scan, then simplex polish.
///
/// `g_of` evaluates the objective for one control field; failures are
/// recorded and skipped.
pub fn minimize<G>(g_of: G, spec: &SearchSpec, mirror_center_z: f64) -> Result<OptimizationResult>
where
    G: Fn(ControlField) -> Result<f64> + Sync,
{
    spec.x.validate()?;
    spec.z.validate()?;
    let z_floor = if spec.fold_mirror { spec.z.lo.max(-mirror_center_z) } else { spec.z.lo };
    if z_floor > spec.z.hi {
        return Err(Error::invalid("folded z bracket is empty"));
    }
    let z_grid: Vec<f64> = if spec.fold_mirror && z_floor > spec.z.lo {
        let mut g: Vec<f64> = spec.z.grid().into_iter().filter(|z| *z >= z_floor - 1e-12).collect();
        if g.first().map_or(true, |z| (z - z_floor).abs() > 1e-12) {
            g.insert(0, z_floor);
        }
        g
    } else {
        spec.z.grid()
    };
    let x_grid = spec.x.grid();
    let points: Vec<ControlField> =
        x_grid.iter().flat_map(|&x| z_grid.iter().map(move |&z| ControlField::new(x, z))).collect();

    let evaluations: Vec<(ControlField, Result<f64>)> = points.par_iter().map(|&b| (b, g_of(b))).collect();
    let mut trace = Vec::new();
    let mut failed = Vec::new();
    for (b, r) in evaluations {
        match r {
            Ok(g) if g.is_finite() => trace.push(SearchPoint { control: b, g }),
            Ok(g) => failed.push(FailedPoint { control: b, error: format!("non-finite objective {g}") }),
            Err(e) => failed.push(FailedPoint { control: b, error: e.to_string() }),
        }
    }
    if trace.is_empty() {
        return Err(Error::SearchFailed(failed.len()));
    }
    let grid_best = best_point(&trace);

    let edge = |v: f64, lo: f64, hi: f64, fixed: bool| !fixed && ((v - lo).abs() < 1e-12 || (v - hi).abs() < 1e-12);
    let boundary_warning = edge(grid_best.control.x, spec.x.lo, spec.x.hi, spec.x.is_fixed())
        || (edge(grid_best.control.z, spec.z.lo, spec.z.hi, spec.z.is_fixed())
            && grid_best.control.z > z_floor + 1e-12)
        || (grid_best.control.z <= z_floor + 1e-12 && z_floor == spec.z.lo && !spec.z.is_fixed());

    let mut polish_iterations = 0;
    if spec.polish {
        let lower = [spec.x.lo, z_floor];
        let upper = [spec.x.hi, spec.z.hi];
        let free: Vec<usize> = [!spec.x.is_fixed(), !spec.z.is_fixed() && z_floor < spec.z.hi]
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.then_some(i))
            .collect();
        if !free.is_empty() {
            let start = [grid_best.control.x, grid_best.control.z];
            let steps = [spec.x.resolution, spec.z.resolution];
            let mut record = |b: ControlField, r: &Result<f64>| match r {
                Ok(g) if g.is_finite() => trace.push(SearchPoint { control: b, g: *g }),
                Ok(g) => failed.push(FailedPoint { control: b, error: format!("non-finite objective {g}") }),
                Err(e) => failed.push(FailedPoint { control: b, error: e.to_string() }),
            };
            let objective = |v: &[f64]| {
                let mut full = start;
                for (k, &i) in free.iter().enumerate() {
                    full[i] = v[k].clamp(lower[i], upper[i]);
                }
                let b = ControlField::new(full[0], full[1]);
                let r = g_of(b);
                record(b, &r);
                r.ok().filter(|g| g.is_finite()).unwrap_or(f64::INFINITY)
            };
            let x0: Vec<f64> = free.iter().map(|&i| start[i]).collect();
            let initial_steps: Vec<f64> = free
                .iter()
                .map(|&i| {
                    // step inward from an upper edge
                    if start[i] + steps[i] > upper[i] {
                        -steps[i]
                    } else {
                        steps[i]
                    }
                })
                .collect();
            polish_iterations =
                nelder_mead(objective, &x0, &initial_steps, spec.polish_tolerance, spec.polish_iterations);
        }
    }
    let best = best_point(&trace);
    Ok(OptimizationResult {
        b_star: best.control,
        g_star: best.g,
        grid_best,
        trace,
        failed,
        resolution: [if spec.x.is_fixed() { 0.0 } else { spec.x.resolution }, spec.z.resolution],
        boundary_warning,
        polish_iterations,
    })
}

/// Lowest `g`; ties within `TIE_TOL` go to the smallest `(B_x, B_z)`.
fn best_point(trace: &[SearchPoint]) -> SearchPoint {
    let g_min = trace.iter().map(|p| p.g).fold(f64::INFINITY, f64::min);
    let cutoff = g_min + TIE_TOL * g_min.abs();
    *trace
        .iter()
        .filter(|p| p.g <= cutoff)
        .min_by(|a, b| a.control.x.total_cmp(&b.control.x).then(a.control.z.total_cmp(&b.control.z)))
        .expect("non-empty trace")
}

/// Nelder–Mead on `f`, stopping once the simplex diameter drops below `tol`.
/// Returns the number of iterations.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], steps: &[f64], tol: f64, max_iter: usize) -> usize {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let diameter = |s: &[(Vec<f64>, f64)]| {
        let mut d: f64 = 0.0;
        for a in s {
            for b in s {
                let dist = a.0.iter().zip(&b.0).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                d = d.max(dist);
            }
        }
        d
    };
    let mut iter = 0;
    while iter < max_iter && diameter(&simplex) >= tol {
        iter += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[n].clone();
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&item.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fx = f(&x);
                    *item = (x, fx);
                }
            }
        }
    }
    iter
}

/// Minimize `g` for a region, building one engine per control field.
pub fn minimize_g<E, M>(
    make_engine: M,
    region: &SensingRegion,
    weights: &WeightMatrix,
    spec: &SearchSpec,
    quadrature: &QuadratureOptions,
) -> Result<OptimizationResult>
where
    E: InformationEngine,
    M: Fn(ControlField) -> Result<E> + Sync,
{
    let g_of = |b: ControlField| -> Result<f64> {
        let engine = make_engine(b)?;
        Ok(g_multi(&engine, region, weights, quadrature)?.value)
    };
    minimize(g_of, spec, region.center_z())
}

/// Fit of `g(L) = a L^{-b} + c` with `c ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `sqrt(Σ ((model − g)/g)²)`
    pub residual: f64,
    pub lengths: Vec<f64>,
    /// All `g` equal: the exponent is not determined by the data.
    pub degenerate: bool,
}

impl ScalingFit {
    pub fn predict(&self, length: f64) -> f64 {
        self.a * length.powf(-self.b) + self.c
    }
}

const EXPONENT_RANGE: (f64, f64) = (0.0, 5.0);

/// Relative-weighted least squares in `(a, c)` at fixed `b`, `c ≥ 0`.
fn linear_part(points: &[(f64, f64)], b: f64) -> (f64, f64, f64) {
    // rows: (L^{-b}/g, 1/g) · (a, c) ≈ 1
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(l, g) in points {
        let u = l.powf(-b) / g;
        let v = 1.0 / g;
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        r1 += u;
        r2 += v;
    }
    let det = s11 * s22 - s12 * s12;
    let (mut a, mut c) = if det.abs() > 1e-14 * s11 * s22 {
        ((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det)
    } else {
        (r1 / s11, 0.0)
    };
    if c < 0.0 {
        c = 0.0;
        a = r1 / s11;
    }
    let residual = points.iter().map(|&(l, g)| ((a * l.powf(-b) + c - g) / g).powi(2)).sum::<f64>().sqrt();
    (a, c, residual)
}

/// `a L^{-b} + c` by a scan over `b` with an inner linear solve, then a
/// golden-section polish of the best bracket.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::invalid(format!("scaling fit needs at least 4 points, got {}", points.len())));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid("scaling fit needs distinct lengths"));
    }
    if sorted.iter().any(|&(l, g)| !(l > 0.0 && l.is_finite() && g > 0.0 && g.is_finite())) {
        return Err(Error::invalid("scaling fit needs positive finite (L, g) pairs"));
    }
    let lengths = sorted.iter().map(|p| p.0).collect();
    let g0 = sorted[0].1;
    if sorted.iter().all(|p| (p.1 - g0).abs() <= 1e-12 * g0) {
        let c = sorted.iter().map(|p| p.1).sum::<f64>() / sorted.len() as f64;
        return Ok(ScalingFit { a: 0.0, b: 0.0, c, residual: 0.0, lengths, degenerate: true });
    }

    let cost = |b: f64| linear_part(&sorted, b).2;
    let step = 0.01;
    let n = ((EXPONENT_RANGE.1 - EXPONENT_RANGE.0) / step).round() as usize;
    let (best_i, _) = (0..=n)
        .map(|i| (i, cost(EXPONENT_RANGE.0 + step * i as f64)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty scan");
    let b_best = EXPONENT_RANGE.0 + step * best_i as f64;
    let lo = (b_best - step).max(EXPONENT_RANGE.0);
    let hi = (b_best + step).min(EXPONENT_RANGE.1);
    let b = golden_section(cost, lo, hi, 1e-12);
    let b = if cost(b) <= cost(b_best) { b } else { b_best };
    let (a, c, residual) = linear_part(&sorted, b);
    Ok(ScalingFit { a, b, c, residual, lengths, degenerate: false })
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Log-log least-squares fit `y = A L^p` (growth exponents such as QFI ∝ L²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub prefactor: f64,
    pub exponent: f64,
    /// RMS residual in `ln y`.
    pub log_residual: f64,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLaw> {
    if points.len() < 2 {
        return Err(Error::invalid("power-law fit needs at least 2 points"));
    }
    if points.iter().any(|&(l, y)| !(l > 0.0 && y > 0.0 && l.is_finite() && y.is_finite())) {
        return Err(Error::invalid("power-law fit needs positive finite points"));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("power-law fit needs distinct lengths"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let log_residual =
        (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(PowerLaw { prefactor: intercept.exp(), exponent, log_residual })
}

/// One node of an efficiency map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyNode {
    pub h_x: f64,
    pub h_z: f64,
    /// `Tr[inv F_Q] / Tr[inv F_C]` at the probe's control field.
    pub ratio_qfi_cfi: Option<f64>,
    /// `Tr[inv F_C(B=comparison)] / Tr[inv F_C(B)]`
    pub ratio_comparison: Option<f64>,
    pub excluded_mass: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMap {
    pub control: ControlField,
    pub comparison: ControlField,
    pub nodes: Vec<EfficiencyNode>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Fraction of valid comparison nodes where the optimized probe wins.
    pub comparison_above_one: f64,
    pub flagged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyOptions {
    pub points_per_axis: usize,
    pub step: f64,
    pub comparison: ControlField,
    pub method: DerivativeMethod,
}

impl EfficiencyOptions {
    pub fn new(points_per_axis: usize, length: usize) -> Self {
        Self {
            points_per_axis,
            step: crate::fisher::DEFAULT_STEP,
            comparison: ControlField::default(),
            method: DerivativeMethod::auto(length),
        }
    }
}

fn axis_points(center: f64, width: f64, n: usize) -> Vec<f64> {
    if n == 1 || width == 0.0 {
        return vec![center];
    }
    (0..n).map(|i| center - 0.5 * width + width * i as f64 / (n - 1) as f64).collect()
}

fn efficiency_node(config: &ProbeConfig, h: FieldPoint, opts: &EfficiencyOptions) -> Result<(f64, f64, f64)> {
    let w = WeightMatrix::identity(2);
    let fq = qfi_matrix(config, &h, Parameters::Skew, opts.method)?.matrix;
    let fc = cfi_matrix(config, &h, Parameters::Skew, opts.step)?;
    let tq = crate::global_metric::scalar_bound_trace(&fq, &w)?;
    let tc = crate::global_metric::scalar_bound_trace(&fc.matrix, &w)?;
    let reference = config.with_control(opts.comparison);
    let fc0 = cfi_matrix(&reference, &h, Parameters::Skew, opts.step)?;
    let tc0 = crate::global_metric::scalar_bound_trace(&fc0.matrix, &w)?;
    Ok((tq / tc, tc0 / tc, fc.excluded_mass))
}

/// `Tr[inv F_Q]/Tr[inv F_C]` and the cross-probe comparison over a grid
/// spanning a two-parameter region.
pub fn efficiency_map(config: &ProbeConfig, region: &SensingRegion, opts: &EfficiencyOptions) -> Result<EfficiencyMap> {
    config.validate()?;
    if region.dim() != 2 {
        return Err(Error::invalid("efficiency maps need a two-parameter region"));
    }
    if opts.points_per_axis == 0 {
        return Err(Error::invalid("efficiency grid needs at least one point per axis"));
    }
    let xs = axis_points(region.centers()[0], region.widths()[0], opts.points_per_axis);
    let zs = axis_points(region.centers()[1], region.widths()[1], opts.points_per_axis);
    let grid: Vec<FieldPoint> = xs.iter().flat_map(|&x| zs.iter().map(move |&z| FieldPoint::new(x, z))).collect();
    let nodes: Vec<EfficiencyNode> = grid
        .par_iter()
        .map(|&h| match efficiency_node(config, h, opts) {
            Ok((ratio, comparison, excluded)) => EfficiencyNode {
                h_x: h.x,
                h_z: h.z,
                ratio_qfi_cfi: Some(ratio),
                ratio_comparison: Some(comparison),
                excluded_mass: excluded,
                error: None,
            },
            Err(e) => EfficiencyNode {
                h_x: h.x,
                h_z: h.z,
                ratio_qfi_cfi: None,
                ratio_comparison: None,
                excluded_mass: 0.0,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let ratios: Vec<f64> = nodes.iter().filter_map(|n| n.ratio_qfi_cfi).collect();
    if ratios.is_empty() {
        return Err(Error::SearchFailed(nodes.len()));
    }
    let comparisons: Vec<f64> = nodes.iter().filter_map(|n| n.ratio_comparison).collect();
    let above = comparisons.iter().filter(|r| **r > 1.0).count();
    Ok(EfficiencyMap {
        control: config.control,
        comparison: opts.comparison,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        comparison_above_one: above as f64 / comparisons.len() as f64,
        flagged: nodes.iter().filter(|n| n.error.is_some()).count(),
        nodes,
    })
}

/// Total field component along `along` where the matching diagonal QFI entry
/// peaks, with the other component held at `fixed` and the scan on
/// `[lo, hi]`. This is the finite-size location of the critical line on that
/// cut. Points the Fisher routines refuse are skipped.
pub fn pseudo_critical(
    length: usize,
    coupling: f64,
    along: Direction,
    fixed: f64,
    lo: f64,
    hi: f64,
    resolution: f64,
) -> Result<f64> {
    let config = ProbeConfig::new(length, coupling, ControlField::default())?;
    let (point, index): (fn(f64, f64) -> FieldPoint, usize) = match along {
        Direction::X => (|v, f| FieldPoint::new(v, f), 0),
        Direction::Z => (|v, f| FieldPoint::new(f, v), 1),
    };
    let diag = |v: f64| -> Option<f64> {
        qfi_matrix(&config, &point(v, fixed), Parameters::Skew, DerivativeMethod::auto(length))
            .ok()
            .map(|q| q.matrix.get(index, index))
    };
    let scan = Bracket::new(lo, hi, resolution)?.grid();
    let values: Vec<(f64, Option<f64>)> = scan.par_iter().map(|&v| (v, diag(v))).collect();
    let (best, _) = values
        .iter()
        .filter_map(|(v, q)| q.map(|q| (*v, q)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::SearchFailed(values.len()))?;
    let neg = |v: f64| diag(v).map(|q| -q).unwrap_or(f64::INFINITY);
    let step = (hi - lo) / (scan.len().max(2) - 1) as f64;
    Ok(golden_section(neg, (best - step).max(lo), (best + step).min(hi), 1e-6))
}
