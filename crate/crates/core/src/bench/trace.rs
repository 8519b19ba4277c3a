use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spectrum::{spectrum, SpectrumMethod, DENSE_LIMIT};
use crate::error::{check_dim, Error, Result};
use crate::krylov::{pcg_split, pcg_split_observed, SolveConfig};
use crate::sparse::{dot, LowerTriangular, SparseSpd};

/// One row of a convergence trace, for iterate `x_k` with `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub residual_norm: f64,
    /// `‖x_k − x⋆‖_A`.
    pub error_a_norm: f64,
    /// `2 ((√κ − 1)/(√κ + 1))^k ‖x₀ − x⋆‖_A`.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct TraceConfig {
    pub rtol: f64,
    pub max_iters: Option<usize>,
    /// Condition number of `L⁻¹ A L⁻ᵀ`; estimated when absent.
    pub kappa: Option<f64>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            max_iters: None,
            kappa: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub kappa: f64,
    pub x_star: Vec<f64>,
}

/// Tight-tolerance reference solution used when none is supplied.
pub fn reference_solution(a: &SparseSpd, b: &[f64], l: &LowerTriangular) -> Result<Vec<f64>> {
    let cfg = SolveConfig {
        rtol: 1e-14,
        max_iters: Some(100 * a.n().max(1)),
        record_history: false,
    };
    Ok(pcg_split(a, b, l, &cfg)?.x)
}

fn a_norm(a: &SparseSpd, v: &[f64], scratch: &mut [f64]) -> f64 {
    a.spmv_into(v, scratch);
    dot(v, scratch).max(0.0).sqrt()
}

/// Runs split-preconditioned CG from `x₀ = 0` and records, per iteration,
/// the preconditioned residual, the A-norm error and the classical κ bound.
pub fn convergence_trace(
    a: &SparseSpd,
    b: &[f64],
    l: &LowerTriangular,
    x_star: Option<&[f64]>,
    cfg: &TraceConfig,
) -> Result<Trace> {
    let n = a.n();
    check_dim(n, b.len())?;
    check_dim(n, l.n())?;
    let x_star = match x_star {
        Some(x) => {
            check_dim(n, x.len())?;
            x.to_vec()
        }
        None => reference_solution(a, b, l)?,
    };
    let kappa = match cfg.kappa {
        Some(k) => k,
        None => {
            let method = if n <= DENSE_LIMIT {
                SpectrumMethod::Dense
            } else {
                SpectrumMethod::Extremal
            };
            spectrum(a, Some(l), method)?.kappa
        }
    };
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("condition number must be finite and >= 1, got {kappa}")));
    }
    let s = kappa.sqrt();
    let ratio = (s - 1.0) / (s + 1.0);

    let mut scratch = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let e0 = a_norm(a, &x_star, &mut scratch);
    let mut rows = Vec::new();
    let solve = SolveConfig {
        rtol: cfg.rtol,
        max_iters: cfg.max_iters,
        record_history: false,
    };
    pcg_split_observed(a, b, l, &solve, |view| {
        if view.k == 0 {
            return;
        }
        for i in 0..n {
            diff[i] = view.x[i] - x_star[i];
        }
        rows.push(TraceRow {
            k: view.k,
            residual_norm: view.residual_norm,
            error_a_norm: a_norm(a, &diff, &mut scratch),
            bound: 2.0 * ratio.powi(view.k as i32) * e0,
        });
    })?;
    Ok(Trace { rows, kappa, x_star })
}

pub fn write_trace_csv(rows: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    if rows.is_empty() {
        w.write_record(["k", "residual_norm", "error_a_norm", "bound"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
