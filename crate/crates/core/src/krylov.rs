//! Conjugate gradient and split-preconditioned conjugate gradient.
//!
//! The preconditioned solver works with a factor `L` of `P = L Lᵀ ≈ A` and
//! iterates on the preconditioned residual `r̂ = L⁻¹ r`:
//!
//! ```text
//! r₀ = A x₀ − b,  r̂₀ = L⁻¹ r₀,  p₀ = L⁻ᵀ r̂₀
//! loop
//!     a_k     = ⟨r̂_k, r̂_k⟩ / ⟨A p_k, p_k⟩
//!     x_{k+1} = x_k − a_k p_k
//!     r̂_{k+1} = r̂_k − a_k L⁻¹ A p_k
//!     β_k     = ⟨r̂_{k+1}, r̂_{k+1}⟩ / ⟨r̂_k, r̂_k⟩
//!     p_{k+1} = L⁻ᵀ r̂_{k+1} + β_k p_k
//! ```
//!
//! With the residual defined as `A x − b` the iterate must move against the
//! search direction for the recursive residual to stay equal to `L⁻¹(A x − b)`.
//! The starting guess is always zero.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sparse::{dot, norm2, LowerTriangular, SparseSpd};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub rtol: f64,
    /// Iteration cap; `None` means `10 · n`.
    pub max_iters: Option<usize>,
    pub record_history: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            max_iters: None,
            record_history: true,
        }
    }
}

impl SolveConfig {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            ..Self::default()
        }
    }

    fn validate(&self, n: usize) -> Result<usize> {
        if !(self.rtol > 0.0) {
            return Err(Error::InvalidArgument(format!("rtol must be positive, got {}", self.rtol)));
        }
        let max_iters = self.max_iters.unwrap_or(10 * n.max(1));
        if max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(max_iters)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    NumericalBreakdown,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖r̂_k‖₂` for `k = 0..=iterations` when recorded, else empty.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub termination: Termination,
    /// Seconds spent in the iteration loop.
    pub cg_time: f64,
    /// Final `‖r̂_k‖₂ / ‖r̂₀‖₂` as computed by the recurrence.
    pub relative_residual: f64,
    /// `‖A x − b‖₂ / ‖b‖₂` recomputed from the returned iterate.
    pub true_relative_residual: f64,
}

/// State visible to an observer after each iterate is formed.
#[derive(Debug, Clone, Copy)]
pub struct IterateView<'a> {
    /// Index of the iterate, starting with `x₀` at 0.
    pub k: usize,
    pub x: &'a [f64],
    /// Search direction that will produce `x_{k+1}`.
    pub p: &'a [f64],
    pub residual_norm: f64,
}

/// Unpreconditioned conjugate gradient.
pub fn cg(a: &SparseSpd, b: &[f64], cfg: &SolveConfig) -> Result<SolveReport> {
    cg_observed(a, b, cfg, |_| {})
}

pub fn cg_observed(
    a: &SparseSpd,
    b: &[f64],
    cfg: &SolveConfig,
    mut observe: impl FnMut(IterateView<'_>),
) -> Result<SolveReport> {
    let n = a.n();
    check_dim(n, b.len())?;
    let max_iters = cfg.validate(n)?;

    let start = Instant::now();
    let mut x = vec![0.0; n];
    // r = A x₀ − b with x₀ = 0
    let mut r: Vec<f64> = b.iter().map(|v| -v).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let r0 = rr.sqrt();
    let mut history = Vec::new();
    if cfg.record_history {
        history.push(r0);
    }

    let mut k = 0;
    let mut rel = if r0 > 0.0 { 1.0 } else { 0.0 };
    let termination = loop {
        observe(IterateView {
            k,
            x: &x,
            p: &p,
            residual_norm: rr.sqrt(),
        });
        if rel <= cfg.rtol || r0 == 0.0 {
            break Termination::Converged;
        }
        if k >= max_iters {
            break Termination::MaxIters;
        }
        a.spmv_into(&p, &mut ap);
        let pap = dot(&ap, &p);
        if !(pap > 0.0) || !pap.is_finite() {
            break Termination::NumericalBreakdown;
        }
        let step = rr / pap;
        for i in 0..n {
            x[i] -= step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
        k += 1;
        rel = rr.sqrt() / r0;
        if cfg.record_history {
            history.push(rr.sqrt());
        }
    };
    let cg_time = start.elapsed().as_secs_f64();
    Ok(finish(a, b, x, k, history, termination, cg_time, rel))
}

/// Split-preconditioned conjugate gradient with factor `l`.
pub fn pcg_split(
    a: &SparseSpd,
    b: &[f64],
    l: &LowerTriangular,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    pcg_split_observed(a, b, l, cfg, |_| {})
}

pub fn pcg_split_observed(
    a: &SparseSpd,
    b: &[f64],
    l: &LowerTriangular,
    cfg: &SolveConfig,
    mut observe: impl FnMut(IterateView<'_>),
) -> Result<SolveReport> {
    let n = a.n();
    check_dim(n, b.len())?;
    check_dim(n, l.n())?;
    let max_iters = cfg.validate(n)?;

    let start = Instant::now();
    let mut x = vec![0.0; n];
    let mut r_hat: Vec<f64> = b.iter().map(|v| -v).collect();
    l.forward_solve_in_place(&mut r_hat);
    let mut p = r_hat.clone();
    l.backward_solve_in_place(&mut p);
    let mut ap = vec![0.0; n];
    let mut z = vec![0.0; n];

    let mut rr = dot(&r_hat, &r_hat);
    let r0 = rr.sqrt();
    let mut history = Vec::new();
    if cfg.record_history {
        history.push(r0);
    }

    let mut k = 0;
    let mut rel = if r0 > 0.0 { 1.0 } else { 0.0 };
    let termination = loop {
        observe(IterateView {
            k,
            x: &x,
            p: &p,
            residual_norm: rr.sqrt(),
        });
        if rel <= cfg.rtol || r0 == 0.0 {
            break Termination::Converged;
        }
        if k >= max_iters {
            break Termination::MaxIters;
        }
        a.spmv_into(&p, &mut ap);
        let pap = dot(&ap, &p);
        if !(pap > 0.0) || !pap.is_finite() {
            break Termination::NumericalBreakdown;
        }
        let step = rr / pap;
        // ap becomes L⁻¹ A p
        l.forward_solve_in_place(&mut ap);
        for i in 0..n {
            x[i] -= step * p[i];
            r_hat[i] -= step * ap[i];
        }
        let rr_next = dot(&r_hat, &r_hat);
        let beta = rr_next / rr;
        z.copy_from_slice(&r_hat);
        l.backward_solve_in_place(&mut z);
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rr = rr_next;
        k += 1;
        rel = rr.sqrt() / r0;
        if cfg.record_history {
            history.push(rr.sqrt());
        }
    };
    let cg_time = start.elapsed().as_secs_f64();
    Ok(finish(a, b, x, k, history, termination, cg_time, rel))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    a: &SparseSpd,
    b: &[f64],
    x: Vec<f64>,
    iterations: usize,
    residual_history: Vec<f64>,
    termination: Termination,
    cg_time: f64,
    relative_residual: f64,
) -> SolveReport {
    let mut ax = vec![0.0; a.n()];
    a.spmv_into(&x, &mut ax);
    let res: Vec<f64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    let bn = norm2(b);
    let true_relative_residual = if bn > 0.0 { norm2(&res) / bn } else { norm2(&res) };
    SolveReport {
        x,
        iterations,
        residual_history,
        converged: termination == Termination::Converged,
        termination,
        cg_time,
        relative_residual,
        true_relative_residual,
    }
}

/// `2 ((√κ − 1)/(√κ + 1))^k` for `k = 0..=k_max`: the factor multiplying
/// `‖x⋆ − x₀‖_A` in the classical CG error bound.
pub fn kappa_bound_curve(kappa: f64, k_max: usize) -> Result<Vec<f64>> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "condition number must be finite and >= 1, got {kappa}"
        )));
    }
    let s = kappa.sqrt();
    let ratio = (s - 1.0) / (s + 1.0);
    Ok((0..=k_max)
        .map(|k| 2.0 * ratio.powi(k as i32))
        .collect())
}
