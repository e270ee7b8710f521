//! The five CLI commands.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{Command, EngineKind, RunConfig};
use super::output::Table;
use crate::error::{Error, Result};
use crate::fisher::{FisherKind, FisherMatrix, Parameters};
use crate::global_metric::{
    g_single, ExactEngine, FnEngine, FreeFermionEngine, InformationEngine, SensingRegion, WeightMatrix,
};
use crate::lattice::{ControlField, FieldPoint, ProbeConfig};
use crate::probe_optimizer::{
    efficiency_map, fit_scaling, minimize_g, Bracket, EfficiencyOptions, OptimizationResult, SearchSpec,
};

pub struct Outcome {
    pub table: Table,
    pub summary: Value,
    pub diagnostics: Value,
    pub warnings: Vec<String>,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::SweepG1d => sweep_g1d(cfg),
        Command::Scaling => scaling(cfg),
        Command::Optimize2d => optimize_2d(cfg),
        Command::Efficiency => efficiency(cfg),
        Command::QfiPoint => qfi_point(cfg),
    }
}

fn mock_engine(dim: usize, value: f64) -> Box<dyn InformationEngine> {
    Box::new(FnEngine::new(dim, move |_: &FieldPoint| {
        Ok(FisherMatrix::diagonal(FisherKind::Quantum, &vec![value; dim]))
    }))
}

/// Engine for `h_z` estimation at one control field.
fn engine_1d(cfg: &RunConfig, length: usize, control: ControlField) -> Result<Box<dyn InformationEngine>> {
    Ok(match cfg.engine {
        EngineKind::FreeFermion => Box::new(FreeFermionEngine {
            length,
            coupling: cfg.coupling,
            control_z: control.z,
            step: cfg.fidelity_step,
        }),
        EngineKind::ExactDiag => {
            let probe = ProbeConfig::new(length, cfg.coupling, control)?;
            let mut e = ExactEngine::new(probe, Parameters::Transverse);
            e.method = cfg.derivative.method(length, cfg.fd_step);
            Box::new(e)
        }
        EngineKind::Mock => mock_engine(1, cfg.mock_qfi),
    })
}

fn engine_2d(cfg: &RunConfig, control: ControlField) -> Result<Box<dyn InformationEngine>> {
    Ok(match cfg.engine {
        EngineKind::Mock => mock_engine(2, cfg.mock_qfi),
        _ => {
            let probe = ProbeConfig::new(cfg.length, cfg.coupling, control)?;
            let mut e = ExactEngine::new(probe, Parameters::Skew);
            e.method = cfg.derivative.method(cfg.length, cfg.fd_step);
            Box::new(e)
        }
    })
}

fn region_1d(cfg: &RunConfig) -> Result<SensingRegion> {
    SensingRegion::single(cfg.center[1], cfg.width[1])
}

fn region_2d(cfg: &RunConfig) -> Result<SensingRegion> {
    SensingRegion::rectangle(cfg.center, cfg.width)
}

fn first_error<T>(results: Vec<(f64, Result<T>)>) -> (Vec<(f64, T)>, Vec<Value>, Option<Error>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    let mut first = None;
    for (x, r) in results {
        match r {
            Ok(v) => ok.push((x, v)),
            Err(e) => {
                failed.push(json!({ "at": x, "error": e.to_string() }));
                first.get_or_insert(e);
            }
        }
    }
    (ok, failed, first)
}

fn sweep_g1d(cfg: &RunConfig) -> Result<Outcome> {
    let region = region_1d(cfg)?;
    let grid = cfg.bz.grid();
    let results: Vec<(f64, Result<_>)> = grid
        .par_iter()
        .map(|&bz| {
            let r = engine_1d(cfg, cfg.length, ControlField::transverse(bz))
                .and_then(|e| g_single(e.as_ref(), &region, &cfg.quadrature));
            (bz, r)
        })
        .collect();
    let (ok, failed, first) = first_error(results);
    if ok.is_empty() {
        return Err(first.unwrap_or(Error::SearchFailed(0)));
    }
    let mut table = Table::new(&["B_z", "g"]);
    let mut warnings = Vec::new();
    let mut nodes = Vec::new();
    for (bz, r) in &ok {
        table.push(vec![*bz, r.value]);
        nodes.push(json!({ "B_z": bz, "nodes_per_axis": r.nodes_per_axis, "converged": r.converged }));
        if !r.converged {
            warnings.push(format!("quadrature not converged at B_z = {bz}"));
        }
    }
    if !failed.is_empty() {
        warnings.push(format!("{} sweep points failed", failed.len()));
    }
    let (bz_min, best) = ok.iter().min_by(|a, b| a.1.value.total_cmp(&b.1.value)).expect("non-empty");
    Ok(Outcome {
        table,
        summary: json!({ "argmin_B_z": bz_min, "g_min": best.value, "points": ok.len(), "failed": failed.len() }),
        diagnostics: json!({ "quadrature": nodes, "failed": failed }),
        warnings,
    })
}

fn search_1d(cfg: &RunConfig) -> SearchSpec {
    SearchSpec { fold_mirror: cfg.fold_mirror, polish: cfg.polish, ..SearchSpec::transverse(cfg.bz) }
}

fn optimization_json(r: &OptimizationResult) -> Value {
    json!({
        "B_star": [r.b_star.x, r.b_star.z],
        "g_star": r.g_star,
        "grid_best": { "B": [r.grid_best.control.x, r.grid_best.control.z], "g": r.grid_best.g },
        "resolution": r.resolution,
        "boundary_warning": r.boundary_warning,
        "polish_iterations": r.polish_iterations,
        "evaluations": r.trace.len(),
        "failed": r.failed.len(),
    })
}

fn scaling(cfg: &RunConfig) -> Result<Outcome> {
    let region = region_1d(cfg)?;
    let spec = search_1d(cfg);
    let w = WeightMatrix::identity(1);
    let mut table = Table::new(&["L", "g_star"]);
    let mut per_length = Vec::new();
    let mut warnings = Vec::new();
    let mut points = Vec::new();
    for &l in &cfg.lengths {
        let r = minimize_g(|b| engine_1d(cfg, l, b), &region, &w, &spec, &cfg.quadrature)?;
        if r.boundary_warning {
            warnings.push(format!("L = {l}: optimum on the search boundary"));
        }
        table.push(vec![l as f64, r.g_star]);
        points.push((l as f64, r.g_star));
        per_length.push(json!({ "L": l, "optimization": optimization_json(&r) }));
    }
    let fit = fit_scaling(&points)?;
    if fit.degenerate {
        warnings.push("all g_star equal: exponent undetermined".into());
    }
    Ok(Outcome {
        table,
        summary: json!({
            "fit": { "a": fit.a, "b": fit.b, "c": fit.c, "residual": fit.residual, "degenerate": fit.degenerate },
        }),
        diagnostics: json!({ "per_length": per_length }),
        warnings,
    })
}

fn optimize_2d(cfg: &RunConfig) -> Result<Outcome> {
    let region = region_2d(cfg)?;
    let spec = SearchSpec { fold_mirror: cfg.fold_mirror, polish: cfg.polish, ..SearchSpec::new(cfg.bx, cfg.bz) };
    let r = minimize_g(|b| engine_2d(cfg, b), &region, &WeightMatrix::identity(2), &spec, &cfg.quadrature)?;
    let mut table = Table::new(&["B_x", "B_z", "g"]);
    for p in &r.trace {
        table.push(vec![p.control.x, p.control.z, p.g]);
    }
    let mut warnings = Vec::new();
    if r.boundary_warning {
        warnings.push("optimum on the search boundary".into());
    }
    if !r.failed.is_empty() {
        warnings.push(format!("{} control fields failed", r.failed.len()));
    }
    let failed: Vec<Value> =
        r.failed.iter().map(|f| json!({ "B": [f.control.x, f.control.z], "error": f.error })).collect();
    Ok(Outcome { table, summary: optimization_json(&r), diagnostics: json!({ "failed": failed }), warnings })
}

fn efficiency(cfg: &RunConfig) -> Result<Outcome> {
    let region = region_2d(cfg)?;
    let probe = ProbeConfig::new(cfg.length, cfg.coupling, ControlField::new(cfg.control[0], cfg.control[1]))?;
    let opts = EfficiencyOptions {
        points_per_axis: cfg.grid_points,
        step: cfg.cfi_step,
        comparison: ControlField::new(cfg.compare[0], cfg.compare[1]),
        method: cfg.derivative.method(cfg.length, cfg.fd_step),
    };
    let map = efficiency_map(&probe, &region, &opts)?;
    let mut table = Table::new(&["h_x", "h_z", "ratio_qfi_cfi", "ratio_b0_bstar"]);
    let mut flagged = Vec::new();
    let mut max_excluded: f64 = 0.0;
    for n in &map.nodes {
        match (n.ratio_qfi_cfi, n.ratio_comparison) {
            (Some(r), Some(c)) => {
                table.push(vec![n.h_x, n.h_z, r, c]);
                max_excluded = max_excluded.max(n.excluded_mass);
            }
            _ => flagged.push(json!({ "h": [n.h_x, n.h_z], "error": n.error })),
        }
    }
    let warnings = if flagged.is_empty() { vec![] } else { vec![format!("{} grid nodes flagged", flagged.len())] };
    Ok(Outcome {
        table,
        summary: json!({
            "min_ratio": map.min_ratio,
            "max_ratio": map.max_ratio,
            "comparison_above_one": map.comparison_above_one,
            "flagged": map.flagged,
        }),
        diagnostics: json!({ "flagged": flagged, "max_excluded_mass": max_excluded }),
        warnings,
    })
}

fn qfi_point(cfg: &RunConfig) -> Result<Outcome> {
    let control = ControlField::new(cfg.control[0], cfg.control[1]);
    let engine = engine_1d(cfg, cfg.length, control)?;
    let ed = if cfg.compare_ed {
        let probe = ProbeConfig::new(cfg.length, cfg.coupling, control)?;
        let mut e = ExactEngine::new(probe, Parameters::Transverse);
        e.method = cfg.derivative.method(cfg.length, cfg.fd_step);
        Some(e)
    } else {
        None
    };
    let grid = if cfg.hz.is_fixed() { vec![cfg.hz.lo] } else { Bracket::grid(&cfg.hz) };
    type Row = (f64, Option<f64>);
    let results: Vec<(f64, Result<Row>)> = grid
        .par_iter()
        .map(|&hz| {
            let h = FieldPoint::transverse(hz);
            let r = engine.information(&h).and_then(|f| {
                let ed_value = match &ed {
                    Some(e) => Some(e.information(&h)?.get(0, 0)),
                    None => None,
                };
                Ok((f.get(0, 0), ed_value))
            });
            (hz, r)
        })
        .collect();
    let (ok, failed, first) = first_error(results);
    if ok.is_empty() {
        return Err(first.unwrap_or(Error::SearchFailed(0)));
    }
    let mut table = if ed.is_some() { Table::new(&["h_z", "F_Q", "F_Q_ed"]) } else { Table::new(&["h_z", "F_Q"]) };
    let mut max_rel: f64 = 0.0;
    for (hz, (q, q_ed)) in &ok {
        let mut row = vec![*hz, *q];
        if let Some(v) = q_ed {
            row.push(*v);
            max_rel = max_rel.max((q - v).abs() / v.abs());
        }
        table.push(row);
    }
    let (peak_hz, (peak, _)) = ok.iter().max_by(|a, b| a.1 .0.total_cmp(&b.1 .0)).expect("non-empty");
    let mut summary = json!({ "peak_h_z": peak_hz, "peak_F_Q": peak, "points": ok.len(), "failed": failed.len() });
    if ed.is_some() {
        summary["max_relative_difference_ed"] = json!(max_rel);
    }
    let warnings = if failed.is_empty() { vec![] } else { vec![format!("{} points failed", failed.len())] };
    Ok(Outcome { table, summary, diagnostics: json!({ "failed": failed }), warnings })
}
