//! Training of the network against `‖L Lᵀ − A‖_F`, one matrix per step.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::graph::{build_graph, MatrixGraph};
use crate::model::{self, ModelParams};
use crate::sparse::{frobenius_distance, lower_times_lower_transpose, LowerTriangular, SparseSpd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub clip_norm: f64,
    pub plateau_factor: f64,
    /// Non-improving validations before the learning rate is reduced.
    pub plateau_patience: usize,
    /// Non-improving validations before training stops.
    pub early_stop_patience: usize,
    pub seed: u64,
    /// Where the best-validation model is written, if anywhere.
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 1,
            lr0: 0.1,
            clip_norm: 1.0,
            plateau_factor: 0.1,
            plateau_patience: 5,
            early_stop_patience: 10,
            seed: 0,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("train config: {what}")));
        if self.batch_size != 1 {
            return bad("batch_size must be 1");
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad("lr0 must be positive");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return bad("plateau_factor must lie in (0, 1)");
        }
        if self.plateau_patience == 0 || self.early_stop_patience == 0 {
            return bad("patience values must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean validation loss of the initial model.
    pub initial_val_loss: f64,
    /// Mean training-sample loss of the initial model.
    pub initial_train_loss: f64,
    /// Mean loss over each epoch's steps, measured before each update.
    pub train_loss: Vec<f64>,
    /// Mean validation loss after each epoch.
    pub val_loss: Vec<f64>,
    /// Learning rate used during each epoch.
    pub lr: Vec<f64>,
    /// Number of epochs actually run.
    pub stopped_epoch: usize,
    /// Epoch whose model was kept; 0 means the initial model.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub best_checkpoint: Option<PathBuf>,
}

/// `‖L Lᵀ − A‖_F`, with every fill-in entry of `L Lᵀ` counted.
pub fn loss(l: &LowerTriangular, a: &SparseSpd) -> Result<f64> {
    check_dim(a.n(), l.n())?;
    frobenius_distance(&lower_times_lower_transpose(l), a)
}

/// The loss together with its gradient with respect to the stored values of
/// `L`: `2 R L / ‖R‖_F` restricted to the pattern of `L`, where
/// `R = L Lᵀ − A`. A zero residual yields a zero gradient.
pub fn loss_and_grad(l: &LowerTriangular, a: &SparseSpd) -> Result<(f64, Vec<f64>)> {
    let n = a.n();
    check_dim(n, l.n())?;
    let lc = l.csr();
    let (row_ptr, col_idx, vals) = (lc.row_ptr(), lc.col_idx(), lc.values());
    // column view of L: for column j, the rows k ≥ j and values L_kj
    let lt = lc.transpose();
    let (t_ptr, t_idx, t_val) = (lt.row_ptr(), lt.col_idx(), lt.values());
    let ac = a.csr();

    let mut r_row = vec![0.0; n];
    let mut touched = Vec::with_capacity(n);
    let mut mark = vec![false; n];
    let mut grad = vec![0.0; lc.nnz()];
    let mut sq = 0.0;

    for i in 0..n {
        // row i of L Lᵀ: Σ_k L_ik L_jk
        for p in row_ptr[i]..row_ptr[i + 1] {
            let (k, lik) = (col_idx[p], vals[p]);
            for q in t_ptr[k]..t_ptr[k + 1] {
                let j = t_idx[q];
                if !mark[j] {
                    mark[j] = true;
                    touched.push(j);
                }
                r_row[j] += lik * t_val[q];
            }
        }
        let (acols, avals) = ac.row(i);
        for (&j, &v) in acols.iter().zip(avals) {
            if !mark[j] {
                mark[j] = true;
                touched.push(j);
            }
            r_row[j] -= v;
        }
        for &j in &touched {
            sq += r_row[j] * r_row[j];
        }
        // (R L)_ij = Σ_k R_ik L_kj over the stored column j of L
        for p in row_ptr[i]..row_ptr[i + 1] {
            let j = col_idx[p];
            let mut s = 0.0;
            for q in t_ptr[j]..t_ptr[j + 1] {
                s += r_row[t_idx[q]] * t_val[q];
            }
            grad[p] = s;
        }
        for &j in &touched {
            r_row[j] = 0.0;
            mark[j] = false;
        }
        touched.clear();
    }

    let norm = sq.sqrt();
    if norm == 0.0 {
        grad.iter_mut().for_each(|g| *g = 0.0);
    } else {
        let scale = 2.0 / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    Ok((norm, grad))
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), grads.len());
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Rescales `grads` so that their Euclidean norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// A training or validation matrix with its graph built once up front.
#[derive(Debug, Clone)]
pub struct Sample {
    pub a: SparseSpd,
    pub graph: MatrixGraph,
}

impl Sample {
    pub fn new(a: SparseSpd) -> Self {
        let graph = build_graph(&a);
        Self { a, graph }
    }
}

fn sample_loss(params: &ModelParams, s: &Sample, id: usize) -> Result<f64> {
    let l = model::forward_factor(params, &s.graph).map_err(|e| Error::Training {
        sample: id,
        reason: e.to_string(),
    })?;
    let v = loss(&l, &s.a)?;
    if !v.is_finite() {
        return Err(Error::Training {
            sample: id,
            reason: format!("non-finite loss {v}"),
        });
    }
    Ok(v)
}

pub fn mean_loss(params: &ModelParams, set: &[Sample]) -> Result<f64> {
    let mut total = 0.0;
    for (i, s) in set.iter().enumerate() {
        total += sample_loss(params, s, i)?;
    }
    Ok(total / set.len() as f64)
}

/// Loss of one sample and the gradient with respect to every parameter.
pub fn sample_gradient(params: &ModelParams, s: &Sample) -> Result<(f64, Vec<f64>)> {
    let (l, tape) = model::forward(params, &s.graph)?;
    let (v, gl) = loss_and_grad(&l, &s.a)?;
    let grads = model::backward(params, &tape, &gl)?;
    Ok((v, grads.to_flat()))
}

/// Trains `model` in place and leaves it holding the best-validation
/// parameters.
pub fn train(
    model: &mut ModelParams,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidArgument("training and validation sets must be nonempty".into()));
    }
    model.validate()?;

    let initial_val_loss = mean_loss(model, val_set)?;
    let initial_train_loss = mean_loss(model, train_set)?;
    let mut report = TrainReport {
        initial_val_loss,
        initial_train_loss,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        lr: Vec::new(),
        stopped_epoch: 0,
        best_epoch: 0,
        best_val_loss: initial_val_loss,
        best_checkpoint: None,
    };
    let mut best = model.clone();
    let save_best = |m: &ModelParams, report: &TrainReport| -> Result<()> {
        if let Some(path) = &cfg.checkpoint {
            let meta = serde_json::json!({
                "best_epoch": report.best_epoch,
                "best_val_loss": report.best_val_loss,
                "config": cfg,
            });
            model::save_model_with_metadata(m, Some(meta), path)?;
        }
        Ok(())
    };
    if cfg.epochs == 0 {
        return Ok(report);
    }
    save_best(&best, &report)?;
    report.best_checkpoint = cfg.checkpoint.clone();

    let mut theta = model.to_flat();
    let mut adam = Adam::new(theta.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut lr = cfg.lr0;
    let (mut since_best, mut since_reduce) = (0usize, 0usize);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &idx in &order {
            let (v, mut g) = sample_gradient(model, &train_set[idx]).map_err(|e| match e {
                Error::Training { .. } => e,
                other => Error::Training {
                    sample: idx,
                    reason: other.to_string(),
                },
            })?;
            if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
                return Err(Error::Training {
                    sample: idx,
                    reason: format!("non-finite loss or gradient (loss {v}) in epoch {epoch}"),
                });
            }
            total += v;
            clip_global_norm(&mut g, cfg.clip_norm);
            adam.step(&mut theta, &g, lr);
            model.set_flat(&theta)?;
        }
        let train_mean = total / train_set.len() as f64;
        let val = mean_loss(model, val_set)?;
        check_pattern(model, &val_set[0])?;
        report.train_loss.push(train_mean);
        report.val_loss.push(val);
        report.lr.push(lr);
        report.stopped_epoch = epoch;
        log::info!("epoch {epoch}: train {train_mean:.6e}, val {val:.6e}, lr {lr:.1e}");

        if val < report.best_val_loss {
            report.best_val_loss = val;
            report.best_epoch = epoch;
            best = model.clone();
            save_best(&best, &report)?;
            since_best = 0;
            since_reduce = 0;
        } else {
            since_best += 1;
            since_reduce += 1;
            if since_best >= cfg.early_stop_patience {
                log::info!("early stop after epoch {epoch}");
                break;
            }
            if since_reduce >= cfg.plateau_patience {
                lr *= cfg.plateau_factor;
                since_reduce = 0;
                log::info!("reducing learning rate to {lr:.1e}");
            }
        }
    }
    *model = best;
    Ok(report)
}

fn check_pattern(model: &ModelParams, s: &Sample) -> Result<()> {
    let l = model::forward_factor(model, &s.graph)?;
    let lower = s.a.lower_triangle();
    if !l.csr().same_pattern(&lower) {
        return Err(Error::InvalidStructure("learned factor left the pattern of A".into()));
    }
    Ok(())
}
