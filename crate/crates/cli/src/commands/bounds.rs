//! Closed-form `ε` at one point or over a `(T, L, ρ)` grid of uniform windows.

use std::collections::BTreeMap;

use arrival_ic::bounds::{
    epsilon_external, epsilon_swap, epsilon_with_tv, uniform_window_epsilon, BoundInputs, BoundReport, RegretKind,
    UniformWindowParams,
};
use serde::Serialize;

use super::Verdict;
use crate::config::{BoundsSpec, ExperimentConfig, SweepSpec};
use crate::error::CliError;
use crate::output::{num, OutDir};
use crate::svg::{Chart, Series};

#[derive(Serialize)]
struct SweepPoint {
    #[serde(flatten)]
    params: UniformWindowParams,
    report: BoundReport,
}

#[derive(Serialize)]
struct PointOutput {
    inputs: BoundInputs,
    report: BoundReport,
}

/// Direct evaluation of a single set of inputs.
pub fn evaluate_point(inputs: &BoundInputs) -> Result<BoundReport, CliError> {
    let report = if inputs.beta.is_some() {
        epsilon_with_tv(inputs)
    } else {
        match inputs.regret_kind {
            RegretKind::External => epsilon_external(inputs),
            RegretKind::Swap => epsilon_swap(inputs),
        }
    };
    report.map_err(|e| CliError::Config(format!("bounds.point: {e}")))
}

fn grid(sweep: &SweepSpec) -> Result<Vec<UniformWindowParams>, CliError> {
    let bad = |msg: &str| Err(CliError::Config(format!("bounds.sweep: {msg}")));
    if sweep.horizons.is_empty() || sweep.horizons.contains(&0) {
        return bad("T must be a non-empty list of positive integers");
    }
    let windows = |t: usize| -> Vec<usize> {
        let mut ls: Vec<usize> = match (&sweep.windows, &sweep.window_exponents) {
            (Some(ls), None) => ls.iter().copied().filter(|&l| l >= 1 && l <= t).collect(),
            (None, Some(es)) => es.iter().map(|e| ((t as f64).powf(*e).ceil() as usize).clamp(1, t)).collect(),
            _ => Vec::new(),
        };
        ls.sort_unstable();
        ls.dedup();
        ls
    };
    match (&sweep.windows, &sweep.window_exponents) {
        (Some(ls), None) if !ls.is_empty() => {}
        (None, Some(es)) if !es.is_empty() && es.iter().all(|e| e.is_finite() && (0.0..=1.0).contains(e)) => {}
        _ => return bad("give exactly one non-empty list of L or of L_exponent values in [0, 1]"),
    }
    let rhos = |l: usize| -> Vec<f64> {
        match (&sweep.rho, &sweep.rho_times_window) {
            (Some(r), None) => r.clone(),
            (None, Some(c)) => c.iter().map(|c| c / l as f64).collect(),
            _ => Vec::new(),
        }
    };
    match (&sweep.rho, &sweep.rho_times_window) {
        (Some(r), None) if !r.is_empty() => {}
        (None, Some(c)) if !c.is_empty() => {}
        _ => return bad("give exactly one non-empty list of rho or of rho_times_L values"),
    }
    let mut points = Vec::new();
    for &t in &sweep.horizons {
        for l in windows(t) {
            for rho in rhos(l) {
                points.push(UniformWindowParams {
                    horizon: t,
                    window: l,
                    arms: sweep.arms,
                    alpha: sweep.alpha,
                    gap: sweep.gap,
                    rho,
                    regret_constant: sweep.regret_constant,
                    tuning: sweep.tuning,
                });
            }
        }
    }
    Ok(points)
}

fn run_sweep(sweep: &SweepSpec, svg: bool, out: &OutDir) -> Result<usize, CliError> {
    let params = grid(sweep)?;
    let points = params
        .into_iter()
        .map(|p| {
            uniform_window_epsilon(&p)
                .map(|report| SweepPoint { params: p, report })
                .map_err(|e| CliError::Config(format!("bounds.sweep: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = out.csv("bounds_sweep.csv")?;
    csv.row(["T", "L", "rho", "regret", "delta_tilde", "c_term", "eta_psi", "eta_phi", "epsilon", "vacuous"])?;
    for s in &points {
        let r = &s.report;
        csv.row([
            s.params.horizon.to_string(),
            s.params.window.to_string(),
            num(s.params.rho),
            num(r.regret),
            num(r.delta_tilde),
            num(r.c_term),
            num(r.eta_psi),
            num(r.eta_phi),
            num(r.epsilon),
            r.is_vacuous().to_string(),
        ])?;
    }
    csv.finish()?;
    out.json("bounds_sweep.json", &points)?;

    if svg {
        let mut by_horizon: BTreeMap<usize, BTreeMap<String, Vec<(f64, f64)>>> = BTreeMap::new();
        for s in &points {
            let series = match (&sweep.rho, &sweep.rho_times_window) {
                (None, Some(_)) => format!("rho*L = {}", num(s.params.rho * s.params.window as f64)),
                _ => format!("rho = {}", num(s.params.rho)),
            };
            by_horizon
                .entry(s.params.horizon)
                .or_default()
                .entry(series)
                .or_default()
                .push((s.params.window as f64, s.report.epsilon));
        }
        for (t, series) in by_horizon {
            let title = format!("epsilon against window length, T = {t}");
            let chart = Chart { title: &title, x_label: "L", y_label: "epsilon", log_x: true, log_y: false };
            let series: Vec<Series> = series.into_iter().map(|(name, points)| Series { name, points }).collect();
            out.text(&format!("bounds_T{t}.svg"), &chart.render(&series))?;
        }
    }
    Ok(points.len())
}

pub fn run(cfg: &ExperimentConfig, out: &OutDir) -> Result<Verdict, CliError> {
    let spec: &BoundsSpec = cfg.bounds.as_ref().ok_or_else(|| CliError::Config("missing key: bounds".into()))?;
    if spec.point.is_none() && spec.sweep.is_none() {
        return Err(CliError::Config("bounds needs point or sweep".into()));
    }
    if let Some(inputs) = &spec.point {
        let report = evaluate_point(inputs)?;
        out.json("bounds_point.json", &PointOutput { inputs: *inputs, report })?;
        println!("bounds: point epsilon {}", num(report.epsilon));
    }
    if let Some(sweep) = &spec.sweep {
        let n = run_sweep(sweep, spec.svg, out)?;
        println!("bounds: {n} sweep points written to {}", out.root().display());
    }
    Ok(Verdict::Ok)
}
