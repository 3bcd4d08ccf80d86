//! Approximation of a tri-modal Gaussian density with RFF and ELM features
//! for increasing input dimension.
//!
//! Every (dimension, repeat) pair draws its own training and test samples,
//! shared by both feature families. The reported error is the test MSE
//! divided by the mean squared target on the same test sample, so values are
//! comparable across dimensions; the raw MSE is reported next to it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use bwl::bayes::{fit_posterior_from_gram, gram, solve_regularized_gram};
use bwl::sim::{sample_domain, trimodal_gaussian};
use bwl::{FeatureMap, NoiseModel, RngSeed, TrimodalSpec};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{check_positive, BenchConfig};
use crate::output::{ensure_dir, write_json, Cell, Report, Table};

pub const MAX_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rff,
    Elm,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Rff, Method::Elm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rff => "rff",
            Method::Elm => "elm",
        }
    }

    /// Published (mean, std) for dimension `d`.
    pub fn reference(self, d: usize) -> Option<(f64, f64)> {
        const RFF: [(f64, f64); MAX_DIM] = [
            (1.065e-7, 1.616e-4),
            (6.341e-6, 4.865e-3),
            (4.018e-1, 4.466e-3),
            (2.382e0, 3.922e-3),
            (1.435e0, 3.886e-3),
        ];
        const ELM: [(f64, f64); MAX_DIM] = [
            (2.148e-7, 2.080e-4),
            (6.168e-6, 4.210e-3),
            (1.697e-2, 9.304e-3),
            (7.872e-1, 4.131e-3),
            (8.884e-1, 3.998e-3),
        ];
        let table = match self {
            Method::Rff => &RFF,
            Method::Elm => &ELM,
        };
        d.checked_sub(1).and_then(|i| table.get(i)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fit {
    Ls,
    Bayes,
}

impl Fit {
    pub fn name(self) -> &'static str {
        match self {
            Fit::Ls => "ls",
            Fit::Bayes => "bayes",
        }
    }
}

/// Test error of one fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub d: usize,
    pub method: Method,
    pub fit: Fit,
    pub repeat: usize,
    pub relative_mse: f64,
    pub mse: f64,
}

/// Mean and sample standard deviation over repeats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub d: usize,
    pub method: Method,
    pub fit: Fit,
    pub repeats: usize,
    pub mean_relative_mse: f64,
    pub std_relative_mse: f64,
    pub mean_mse: f64,
    pub std_mse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchDetails {
    pub summaries: Vec<Summary>,
}

pub struct BenchOutcome {
    pub config: BenchConfig,
    pub runs: Vec<RunError>,
    pub summaries: Vec<Summary>,
}

impl BenchOutcome {
    pub fn summary(&self, d: usize, method: Method, fit: Fit) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.d == d && s.method == method && s.fit == fit)
    }
}

pub fn validate(cfg: &BenchConfig) -> anyhow::Result<()> {
    if cfg.dims.is_empty() {
        bail!("at least one dimension is required");
    }
    if let Some(d) = cfg.dims.iter().find(|&&d| d == 0 || d > MAX_DIM) {
        bail!("dimension {d} is outside 1..={MAX_DIM}");
    }
    if cfg.samples == 0 || cfg.test_samples == 0 || cfg.features == 0 || cfg.repeats == 0 {
        bail!("samples, test_samples, features and repeats must be at least 1");
    }
    if !(cfg.ridge >= 0.0 && cfg.ridge.is_finite()) {
        bail!("ridge must be nonnegative, got {}", cfg.ridge);
    }
    check_positive("reg_sigma", cfg.reg_sigma)?;
    check_positive("alpha", cfg.alpha)?;
    check_positive("rff_lengthscale", cfg.rff_lengthscale)?;
    check_positive("elm_input_scale", cfg.elm_input_scale)?;
    Ok(())
}

fn target(spec: &TrimodalSpec, x: &DMatrix<f64>) -> anyhow::Result<DMatrix<f64>> {
    let mut y = DMatrix::zeros(x.nrows(), 1);
    let mut row = vec![0.0; spec.dim];
    for i in 0..x.nrows() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = x[(i, j)];
        }
        y[i] = trimodal_gaussian(spec, &row)?;
    }
    Ok(y)
}

fn run_one(cfg: &BenchConfig, d: usize, method: Method, repeat: usize) -> anyhow::Result<Vec<RunError>> {
    let spec = TrimodalSpec::new(d)?;
    let seed = RngSeed(cfg.seed).derive(d as u64).derive(repeat as u64);
    let x_train = sample_domain(&spec, cfg.samples, seed.derive(0));
    let x_test = sample_domain(&spec, cfg.test_samples, seed.derive(1));
    let y_train = target(&spec, &x_train)?;
    let y_test = target(&spec, &x_test)?;

    let (map, scale) = match method {
        Method::Rff => (
            FeatureMap::sample_rff(cfg.features, d, cfg.rff_lengthscale, seed.derive(2))?,
            1.0,
        ),
        Method::Elm => (
            FeatureMap::sample_elm(cfg.features, d, cfg.elm_activation, seed.derive(3))?,
            cfg.elm_input_scale,
        ),
    };
    let phi = map.evaluate(&(x_train * scale))?;
    let phi_test = map.evaluate(&(x_test * scale))?;
    let g = gram(&phi);
    let rhs = phi.transpose() * &y_train;
    drop(phi);

    let signal = y_test.norm_squared() / y_test.nrows() as f64;
    let score = |coef: &DMatrix<f64>, fit: Fit| {
        let mse = (&phi_test * coef - &y_test).norm_squared() / y_test.nrows() as f64;
        RunError {
            d,
            method,
            fit,
            repeat,
            relative_mse: mse / signal,
            mse,
        }
    };

    let mut out = Vec::with_capacity(2);
    if cfg.fit.least_squares() {
        let coef = solve_regularized_gram(g.clone(), rhs.clone(), cfg.ridge)?;
        out.push(score(&coef, Fit::Ls));
    }
    if cfg.fit.bayes() {
        let post = fit_posterior_from_gram(g, rhs, NoiseModel::new(cfg.reg_sigma, cfg.alpha)?)?;
        out.push(score(post.mean(), Fit::Bayes));
    }
    Ok(out)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(runs: &[RunError]) -> Vec<Summary> {
    let mut keys: Vec<(usize, Method, Fit)> = runs.iter().map(|r| (r.d, r.method, r.fit)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(d, method, fit)| {
            let group: Vec<&RunError> = runs
                .iter()
                .filter(|r| r.d == d && r.method == method && r.fit == fit)
                .collect();
            let rel: Vec<f64> = group.iter().map(|r| r.relative_mse).collect();
            let raw: Vec<f64> = group.iter().map(|r| r.mse).collect();
            let (mean_relative_mse, std_relative_mse) = mean_std(&rel);
            let (mean_mse, std_mse) = mean_std(&raw);
            Summary {
                d,
                method,
                fit,
                repeats: group.len(),
                mean_relative_mse,
                std_relative_mse,
                mean_mse,
                std_mse,
            }
        })
        .collect()
}

pub fn run(cfg: &BenchConfig) -> anyhow::Result<BenchOutcome> {
    validate(cfg)?;
    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let tasks: Vec<(usize, Method, usize)> = dims
        .iter()
        .flat_map(|&d| {
            Method::ALL
                .into_iter()
                .flat_map(move |m| (0..cfg.repeats).map(move |r| (d, m, r)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .context("building worker pool")?;
    let results: Vec<anyhow::Result<Vec<RunError>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(d, m, r)| {
                log::debug!("d={d} {} repeat {r}", m.name());
                run_one(cfg, d, m, r)
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(tasks.len() * 2);
    for r in results {
        runs.extend(r?);
    }
    let summaries = summarize(&runs);
    Ok(BenchOutcome {
        config: cfg.clone(),
        runs,
        summaries,
    })
}

pub fn table1(o: &BenchOutcome) -> Table {
    let mut t = Table::new([
        "d",
        "method",
        "fit",
        "mean_relative_mse",
        "std_relative_mse",
        "mean_mse",
        "std_mse",
        "reference_mean",
        "reference_std",
        "repeats",
    ]);
    for s in &o.summaries {
        let (pm, ps) = s.method.reference(s.d).unwrap_or((f64::NAN, f64::NAN));
        t.push(vec![
            s.d.into(),
            s.method.name().into(),
            s.fit.name().into(),
            s.mean_relative_mse.into(),
            s.std_relative_mse.into(),
            s.mean_mse.into(),
            s.std_mse.into(),
            pm.into(),
            ps.into(),
            s.repeats.into(),
        ]);
    }
    t
}

pub fn runs_table(o: &BenchOutcome) -> Table {
    let mut t = Table::new(["d", "method", "fit", "repeat", "relative_mse", "mse"]);
    for r in &o.runs {
        t.push(vec![
            r.d.into(),
            r.method.name().into(),
            r.fit.name().into(),
            r.repeat.into(),
            Cell::Num(r.relative_mse),
            Cell::Num(r.mse),
        ]);
    }
    t
}

pub fn run_to_dir(cfg: &BenchConfig, out: &Path) -> anyhow::Result<BenchOutcome> {
    let start = Instant::now();
    let outcome = run(cfg).context("tri-modal benchmark")?;
    ensure_dir(out)?;
    table1(&outcome).write(&out.join("table1.csv"))?;
    runs_table(&outcome).write(&out.join("runs.csv"))?;
    let mut resolved = outcome.config.clone();
    resolved.out = out.to_path_buf();
    write_json(&out.join("resolved_config.json"), &resolved)?;
    let report = Report {
        command: "bench-gaussian".into(),
        config: resolved,
        metrics: Default::default(),
        tables: [
            ("table1".to_string(), PathBuf::from("table1.csv")),
            ("runs".to_string(), PathBuf::from("runs.csv")),
        ]
        .into(),
        details: BenchDetails {
            summaries: outcome.summaries.clone(),
        },
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn reference_lookup() {
        assert_eq!(Method::Rff.reference(4), Some((2.382, 3.922e-3)));
        assert_eq!(Method::Elm.reference(1), Some((2.148e-7, 2.080e-4)));
        assert_eq!(Method::Rff.reference(0), None);
        assert_eq!(Method::Elm.reference(6), None);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let mut cfg = BenchConfig::default();
        cfg.dims = vec![0];
        assert!(validate(&cfg).is_err());
        cfg.dims = vec![6];
        assert!(validate(&cfg).is_err());
        cfg.dims = vec![];
        assert!(validate(&cfg).is_err());
    }

    #[test]
    fn small_run_is_job_count_invariant() {
        let cfg = BenchConfig {
            dims: vec![2, 1],
            samples: 60,
            test_samples: 40,
            features: 30,
            repeats: 3,
            ..BenchConfig::default()
        };
        let a = run(&cfg).unwrap();
        let b = run(&BenchConfig { jobs: 3, ..cfg.clone() }).unwrap();
        assert_eq!(a.runs, b.runs);
        assert_eq!(a.runs.len(), 2 * 2 * 3 * 2);
        assert_eq!(a.summaries.len(), 8);
        assert_eq!(a.summaries[0].d, 1);
        let s = a.summary(1, Method::Rff, Fit::Ls).unwrap();
        let manual: Vec<f64> = a
            .runs
            .iter()
            .filter(|r| r.d == 1 && r.method == Method::Rff && r.fit == Fit::Ls)
            .map(|r| r.relative_mse)
            .collect();
        assert_eq!(s.mean_relative_mse, manual.iter().sum::<f64>() / 3.0);
    }
}
