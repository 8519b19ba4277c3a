//! Benchmark harness: preconditioner × instance grids, the amortization
//! inequality, spectra and convergence traces.

pub mod eigen;
pub mod spectrum;
pub mod trace;

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::LoadedInstance;
use crate::error::{Error, Result};
use crate::krylov::{pcg_split, SolveConfig};
use crate::model::{neuralif_precondition, ModelParams};
use crate::precond::{self, PrecondKind, PrecondResult};
use crate::sparse::SparseSpd;

pub use spectrum::{spectrum, write_spectrum_csv, SpectrumMethod, SpectrumReport};
pub use trace::{convergence_trace, write_trace_csv, Trace, TraceConfig, TraceRow};

/// One instance × preconditioner measurement. Columns of `bench.csv`, in
/// this order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub precond: PrecondKind,
    pub p_time: f64,
    pub cg_time: Option<f64>,
    pub total_time: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    /// Sparsity of the factor, or of `A`'s lower triangle after a breakdown.
    pub sparsity: f64,
    pub kappa: Option<f64>,
    pub breakdown: bool,
}

pub const CSV_HEADER: [&str; 10] = [
    "instance",
    "precond",
    "p_time",
    "cg_time",
    "total_time",
    "iterations",
    "converged",
    "sparsity",
    "kappa",
    "breakdown",
];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub preconds: Vec<PrecondKind>,
    pub solve: SolveConfig,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    /// Condition-number estimate per record, if wanted.
    pub kappa: Option<SpectrumMethod>,
    /// Repetitions of the factor construction whose median is reported.
    pub p_repeats: usize,
    /// Instances with more stored entries than this are timed once.
    pub repeat_nnz_limit: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            preconds: PrecondKind::ALL.to_vec(),
            solve: SolveConfig {
                rtol: 1e-6,
                max_iters: None,
                record_history: false,
            },
            jobs: 0,
            kappa: None,
            p_repeats: 3,
            repeat_nnz_limit: 2_000_000,
        }
    }
}

/// Builds the factor for `kind`. `model` is required for
/// [`PrecondKind::NeuralIf`].
pub fn build_preconditioner(kind: PrecondKind, a: &SparseSpd, model: Option<&ModelParams>) -> Result<PrecondResult> {
    match kind {
        PrecondKind::None => Ok(precond::identity(a.n())),
        PrecondKind::Jacobi => precond::jacobi(a),
        PrecondKind::Ic0 => precond::ic0(a),
        PrecondKind::NeuralIf => {
            let model = model.ok_or_else(|| Error::InvalidArgument("neuralif requires a model checkpoint".into()))?;
            neuralif_precondition(model, a)
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn bench_one(
    inst: &LoadedInstance,
    kind: PrecondKind,
    cfg: &BenchConfig,
    model: Option<&ModelParams>,
) -> Result<BenchRecord> {
    let repeats = if inst.a.nnz() <= cfg.repeat_nnz_limit {
        cfg.p_repeats.max(1)
    } else {
        1
    };
    let mut times = Vec::with_capacity(repeats);
    let mut factor = None;
    for _ in 0..repeats {
        match build_preconditioner(kind, &inst.a, model) {
            Ok(p) => {
                times.push(p.p_time);
                factor = Some(p);
            }
            Err(e) if e.is_numerical() => {
                log::warn!("{} on instance {}: {e}", kind, inst.id);
                return Ok(BenchRecord {
                    instance: inst.id.clone(),
                    precond: kind,
                    p_time: 0.0,
                    cg_time: None,
                    total_time: None,
                    iterations: None,
                    converged: None,
                    sparsity: lower_sparsity(&inst.a),
                    kappa: None,
                    breakdown: true,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let p = factor.expect("at least one repetition");
    let p_time = median(&mut times);
    let report = pcg_split(&inst.a, &inst.b, &p.l, &cfg.solve)?;
    let kappa = match cfg.kappa {
        Some(method) => Some(spectrum(&inst.a, Some(&p.l), method)?.kappa),
        None => None,
    };
    Ok(BenchRecord {
        instance: inst.id.clone(),
        precond: kind,
        p_time,
        cg_time: Some(report.cg_time),
        total_time: Some(p_time + report.cg_time),
        iterations: Some(report.iterations),
        converged: Some(report.converged),
        sparsity: p.sparsity,
        kappa,
        breakdown: false,
    })
}

fn lower_sparsity(a: &SparseSpd) -> f64 {
    let n = a.n() as f64;
    1.0 - a.lower_triangle().nnz() as f64 / (n * n)
}

impl BenchRecord {
    /// Iterations as a number, with a breakdown counted as infinitely many.
    pub fn iterations_or_inf(&self) -> f64 {
        match (self.breakdown, self.iterations) {
            (false, Some(k)) => k as f64,
            _ => f64::INFINITY,
        }
    }
}

/// Instance ids that are integers sort numerically, others after them by
/// name.
fn instance_key(id: &str) -> (u64, &str) {
    (id.parse().unwrap_or(u64::MAX), id)
}

pub fn sort_records(records: &mut [BenchRecord]) {
    records.sort_by(|a, b| {
        instance_key(&a.instance)
            .cmp(&instance_key(&b.instance))
            .then(a.precond.cmp(&b.precond))
    });
}

/// Runs every selected preconditioner on every instance. Each worker owns
/// one instance end to end; the records come back sorted by instance id and
/// preconditioner, whatever the number of workers.
pub fn run_bench(
    instances: &[LoadedInstance],
    cfg: &BenchConfig,
    model: Option<&ModelParams>,
) -> Result<Vec<BenchRecord>> {
    if cfg.preconds.contains(&PrecondKind::NeuralIf) && model.is_none() {
        return Err(Error::InvalidArgument("neuralif requires a model checkpoint".into()));
    }
    if cfg.preconds.is_empty() {
        return Err(Error::InvalidArgument("no preconditioners selected".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let per_instance: Vec<Vec<BenchRecord>> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                cfg.preconds
                    .iter()
                    .map(|&kind| bench_one(inst, kind, cfg, model))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()
    })?;
    let mut records: Vec<BenchRecord> = per_instance.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

pub fn write_bench_csv(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_bench_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidArgument(format!("unexpected bench header {header:?}")));
    }
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amortization {
    pub satisfied: bool,
    /// `cg_time − (p_time + pcg_time)` in seconds.
    pub margin: f64,
}

/// Whether building the preconditioner and solving with it beats the
/// unpreconditioned solve: `p_time + pcg_time < cg_time`, strictly.
pub fn amortization(p_time: f64, pcg_time: f64, cg_time: f64) -> Amortization {
    let margin = cg_time - (p_time + pcg_time);
    Amortization {
        satisfied: margin > 0.0,
        margin,
    }
}

pub fn amortization_check(rec_pre: &BenchRecord, rec_none: &BenchRecord) -> Result<Amortization> {
    if rec_pre.instance != rec_none.instance {
        return Err(Error::InvalidArgument(format!(
            "records belong to different instances: {} and {}",
            rec_pre.instance, rec_none.instance
        )));
    }
    let cg = rec_none
        .total_time
        .ok_or_else(|| Error::InvalidArgument("reference record has no solve time".into()))?;
    match rec_pre.cg_time {
        Some(pcg) => Ok(amortization(rec_pre.p_time, pcg, cg)),
        None => Ok(Amortization {
            satisfied: false,
            margin: f64::NEG_INFINITY,
        }),
    }
}

/// Per-preconditioner aggregate over a record set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub precond: PrecondKind,
    pub instances: usize,
    pub breakdowns: usize,
    pub converged: usize,
    /// Breakdowns count as infinitely many iterations.
    pub median_iterations: f64,
    pub mean_iterations: f64,
    pub median_p_time: f64,
    pub median_cg_time: f64,
    pub median_total_time: f64,
    pub median_kappa: Option<f64>,
    /// Instances where the amortization inequality holds against `none`.
    pub amortized: Option<usize>,
}

pub fn summarize(records: &[BenchRecord]) -> Vec<Summary> {
    let mut kinds: Vec<PrecondKind> = records.iter().map(|r| r.precond).collect();
    kinds.sort();
    kinds.dedup();
    kinds
        .into_iter()
        .map(|kind| {
            let recs: Vec<&BenchRecord> = records.iter().filter(|r| r.precond == kind).collect();
            let mut iters: Vec<f64> = recs.iter().map(|r| r.iterations_or_inf()).collect();
            let mean_iterations = iters.iter().sum::<f64>() / iters.len() as f64;
            let ok: Vec<&&BenchRecord> = recs.iter().filter(|r| !r.breakdown).collect();
            let mut p: Vec<f64> = recs.iter().filter(|r| !r.breakdown).map(|r| r.p_time).collect();
            let mut cg: Vec<f64> = ok.iter().filter_map(|r| r.cg_time).collect();
            let mut total: Vec<f64> = ok.iter().filter_map(|r| r.total_time).collect();
            let mut kappa: Vec<f64> = recs
                .iter()
                .map(|r| if r.breakdown { Some(f64::INFINITY) } else { r.kappa })
                .collect::<Option<_>>()
                .unwrap_or_default();
            let amortized = if kind == PrecondKind::None {
                None
            } else {
                let mut count = 0;
                let mut any = false;
                for r in &recs {
                    let reference = records
                        .iter()
                        .find(|x| x.precond == PrecondKind::None && x.instance == r.instance);
                    if let Some(reference) = reference {
                        any = true;
                        if amortization_check(r, reference).is_ok_and(|a| a.satisfied) {
                            count += 1;
                        }
                    }
                }
                any.then_some(count)
            };
            Summary {
                precond: kind,
                instances: recs.len(),
                breakdowns: recs.len() - ok.len(),
                converged: ok.iter().filter(|r| r.converged == Some(true)).count(),
                median_iterations: median(&mut iters),
                mean_iterations,
                median_p_time: median(&mut p),
                median_cg_time: median(&mut cg),
                median_total_time: median(&mut total),
                median_kappa: (!kappa.is_empty()).then(|| median(&mut kappa)),
                amortized,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(instance: &str, precond: PrecondKind, p: f64, cg: f64) -> BenchRecord {
        BenchRecord {
            instance: instance.into(),
            precond,
            p_time: p,
            cg_time: Some(cg),
            total_time: Some(p + cg),
            iterations: Some(10),
            converged: Some(true),
            sparsity: 0.5,
            kappa: None,
            breakdown: false,
        }
    }

    #[test]
    fn amortization_examples() {
        let a = amortization(0.9, 3.37, 5.62);
        assert!(a.satisfied);
        assert!((a.margin - 1.35).abs() < 1e-12);
        let a = amortization(0.87, 7.00, 5.62);
        assert!(!a.satisfied);
        assert!((a.margin + 2.25).abs() < 1e-12);
        let a = amortization(0.0, 1.0, 1.0);
        assert!(!a.satisfied);
        assert_eq!(a.margin, 0.0);
    }

    #[test]
    fn amortization_against_records() {
        let none = record("0", PrecondKind::None, 0.0, 5.62);
        let nif = record("0", PrecondKind::NeuralIf, 0.9, 3.37);
        assert!(amortization_check(&nif, &none).unwrap().satisfied);
        assert!(!amortization_check(&none, &none).unwrap().satisfied);
        let other = record("1", PrecondKind::None, 0.0, 1.0);
        assert!(amortization_check(&nif, &other).is_err());
    }

    #[test]
    fn records_sort_numerically() {
        let mut r = vec![
            record("10", PrecondKind::None, 0.0, 1.0),
            record("2", PrecondKind::Ic0, 0.0, 1.0),
            record("2", PrecondKind::None, 0.0, 1.0),
        ];
        sort_records(&mut r);
        let keys: Vec<_> = r.iter().map(|r| (r.instance.as_str(), r.precond)).collect();
        assert_eq!(keys, vec![("2", PrecondKind::None), ("2", PrecondKind::Ic0), ("10", PrecondKind::None)]);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn breakdown_counts_as_infinite() {
        let mut r = record("0", PrecondKind::Ic0, 0.0, 0.0);
        r.breakdown = true;
        r.iterations = None;
        assert_eq!(r.iterations_or_inf(), f64::INFINITY);
    }
}
