//! CSV emission. Column order is fixed and documented in the README; data
//! files are meant for external plotting tools.

use super::runner::{HarnessError, MethodCurves};
use crate::bounds::{crude_v_bound, BoundParams};
use std::io::Write;
use std::path::Path;

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

/// Per-method curve file. Header:
/// `k,eta,beta,rel_residual_mean,rel_error_mean,bregman_mean,`
/// then `rel_residual_t{i}` for every trial, then `rel_error_t{i}`.
/// Empty cells stand for metrics that need a ground truth (or `beta` for
/// constant schedules).
pub fn write_method_csv(path: &Path, curves: &MethodCurves) -> Result<(), HarnessError> {
    let trials = curves.rel_residual_trials.len();
    let mut w = csv::Writer::from_path(path)?;

    let mut header = vec![
        "k".to_string(),
        "eta".to_string(),
        "beta".to_string(),
        "rel_residual_mean".to_string(),
        "rel_error_mean".to_string(),
        "bregman_mean".to_string(),
    ];
    for t in 0..trials {
        header.push(format!("rel_residual_t{t}"));
    }
    for t in 0..trials {
        header.push(format!("rel_error_t{t}"));
    }
    w.write_record(&header)?;

    for i in 0..curves.ks.len() {
        let mut row = vec![
            curves.ks[i].to_string(),
            format!("{}", curves.eta_mean[i]),
            fmt_opt(curves.beta_mean[i]),
            format!("{}", curves.rel_residual_mean[i]),
            fmt_opt(curves.rel_error_mean[i]),
            fmt_opt(curves.bregman_mean[i]),
        ];
        for t in 0..trials {
            row.push(format!("{}", curves.rel_residual_trials[t][i]));
        }
        for t in 0..trials {
            row.push(fmt_opt(curves.rel_error_trials[t][i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Bound overlay for an adaptive method with known `(gamma, beta0)`.
/// Header: `k,beta,beta_bound,crude_beta_bound,g_bound,iterate_bound,mean_sq_error`.
/// `beta` is the realized schedule state (mean over trials); the bounds
/// come from the closed forms; `mean_sq_error` is the trial mean of
/// `||x_k - xhat||^2` when a ground truth exists.
pub fn write_bounds_overlay_csv(
    path: &Path,
    ks: &[usize],
    beta_mean: &[Option<f64>],
    params: &BoundParams,
    mean_sq_error: Option<&[f64]>,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k",
        "beta",
        "beta_bound",
        "crude_beta_bound",
        "g_bound",
        "iterate_bound",
        "mean_sq_error",
    ])?;
    let v0 = params.gamma * params.beta0;
    for (i, &k) in ks.iter().enumerate() {
        let crude_beta = crude_v_bound(v0, params.gamma, k) / params.gamma;
        w.write_record([
            k.to_string(),
            fmt_opt(beta_mean[i]),
            format!("{}", params.beta_bound(k)),
            format!("{crude_beta}"),
            format!("{}", params.g_bound(k)),
            format!("{}", params.iterate_bound(k)),
            fmt_opt(mean_sq_error.map(|m| m[i])),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Standalone bound curves (the `bound` CLI subcommand): no realized data,
/// just the closed forms on `k = 0, stride, 2*stride, ..., max_k`.
/// Header: `k,beta_bound,crude_beta_bound,g_bound,iterate_bound`.
pub fn write_bound_curves<W: Write>(
    mut out: W,
    params: &BoundParams,
    max_k: usize,
    stride: usize,
) -> Result<(), HarnessError> {
    let stride = stride.max(1);
    writeln!(out, "k,beta_bound,crude_beta_bound,g_bound,iterate_bound")?;
    let v0 = params.gamma * params.beta0;
    let mut k = 0usize;
    loop {
        let crude_beta = crude_v_bound(v0, params.gamma, k) / params.gamma;
        writeln!(
            out,
            "{k},{},{crude_beta},{},{}",
            params.beta_bound(k),
            params.g_bound(k),
            params.iterate_bound(k)
        )?;
        if k >= max_k {
            break;
        }
        k = (k + stride).min(max_k);
    }
    Ok(())
}
