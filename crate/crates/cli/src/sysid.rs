//! System identification benchmark: a forced second-order plant driven by a
//! random-phase Fourier input, modeled with a Bayesian RFF Wiener–Laguerre
//! model trained on the first half of the trajectory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use bwl::features::FeatureMapDescriptor;
use bwl::model::{evaluate, fit_on_latents, median_pairwise_distance};
use bwl::sim::{add_noise, fourier_input, simulate_forced_second_order};
use bwl::{
    BwlConfig, FeatureSpec, FittedBwl, FourierInputSpec, LaguerreBank, LaguerreConfig, Metrics,
    NoiseModel, PredictionResult, RngSeed, TrajectoryData,
};
use serde::{Deserialize, Serialize};

use crate::config::{check_fraction, check_positive, sample_count, Lengthscale, SysidConfig};
use crate::output::{ensure_dir, write_json, Cell, ReferenceValue, Report, Table};

/// Rows used for the median heuristic are strided down to at most this many.
const MEDIAN_MAX_ROWS: usize = 1500;

pub const REFERENCE: ReferenceValue = ReferenceValue {
    rmse: 0.07620,
    mean_latent_variance: 0.01519,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SysidDetails {
    pub lengthscale: f64,
    pub phases: Vec<f64>,
    pub feature_map: FeatureMapDescriptor,
    pub train_samples: usize,
    pub test_samples: usize,
    pub reference: ReferenceValue,
}

/// Everything a run produces, kept in memory.
pub struct SysidOutcome {
    pub config: SysidConfig,
    pub input: TrajectoryData,
    pub truth: TrajectoryData,
    pub observed: TrajectoryData,
    pub model: FittedBwl,
    pub prediction: PredictionResult,
    pub train: Metrics,
    pub test: Metrics,
    pub details: SysidDetails,
}

/// Seed streams of one run.
mod stream {
    pub const PHASES: u64 = 0;
    pub const NOISE: u64 = 1;
    pub const FEATURES: u64 = 2;
}

pub fn validate(cfg: &SysidConfig) -> anyhow::Result<()> {
    check_positive("lambda", cfg.lambda)?;
    check_positive("reg_sigma", cfg.reg_sigma)?;
    check_positive("alpha", cfg.alpha)?;
    check_positive("omega0", cfg.omega0)?;
    check_fraction("train_fraction", cfg.train_fraction)?;
    if cfg.order == 0 || cfg.features == 0 || cfg.harmonics == 0 {
        bail!("order, features and harmonics must be at least 1");
    }
    if !(cfg.noise_std >= 0.0 && cfg.noise_std.is_finite()) {
        bail!("noise_std must be nonnegative, got {}", cfg.noise_std);
    }
    Ok(())
}

pub fn run(cfg: &SysidConfig) -> anyhow::Result<SysidOutcome> {
    validate(cfg)?;
    let root = RngSeed(cfg.seed);
    let m = sample_count(cfg.t_end, cfg.dt)?;
    let split = (m as f64 * cfg.train_fraction).round() as usize;
    if split < 2 || split >= m {
        bail!("training split {split} leaves no train or test samples");
    }

    let spec = FourierInputSpec::with_random_phases(cfg.harmonics, cfg.omega0, root.derive(stream::PHASES))?;
    let input = fourier_input(&spec, m, cfg.dt)?;
    let truth = simulate_forced_second_order(&input, cfg.damping, cfg.stiffness, cfg.gain)?;
    let observed = add_noise(&truth, cfg.noise_std, root.derive(stream::NOISE))?;

    let bank_cfg = vec![LaguerreConfig::new(cfg.order, cfg.lambda)?];
    let bank = LaguerreBank::new(&bank_cfg, cfg.dt)?;
    let latents = bank.filter_signal(&input)?;

    let lengthscale = match cfg.lengthscale {
        Lengthscale::Fixed(l) => l,
        Lengthscale::Median => {
            let train_rows = latents.rows(0, split).into_owned();
            median_pairwise_distance(&train_rows, MEDIAN_MAX_ROWS)?
        }
    };
    let model_cfg = BwlConfig {
        bank: bank_cfg,
        feature: FeatureSpec::Rff {
            features: cfg.features,
            lengthscale,
            seed: root.derive(stream::FEATURES),
        },
        noise: NoiseModel::new(cfg.reg_sigma, cfg.alpha)?,
        sample_dt: cfg.dt,
    };
    let model = fit_on_latents(model_cfg, bank, &latents, &observed, 0..split)?;
    let prediction = model.predict_latents(&latents)?;
    let train = evaluate(&prediction, truth.values(), 0..split)?;
    let test = evaluate(&prediction, truth.values(), split..m)?;

    let mut resolved = cfg.clone();
    resolved.lengthscale = Lengthscale::Fixed(lengthscale);
    let details = SysidDetails {
        lengthscale,
        phases: spec.phases.clone(),
        feature_map: model.feature_map().descriptor(),
        train_samples: split,
        test_samples: m - split,
        reference: REFERENCE,
    };
    Ok(SysidOutcome {
        config: resolved,
        input,
        truth,
        observed,
        model,
        prediction,
        train,
        test,
        details,
    })
}

pub fn samples_table(o: &SysidOutcome) -> Table {
    let mut t = Table::new([
        "time",
        "region",
        "input",
        "truth",
        "observed",
        "mean",
        "latent_variance",
        "latent_plus_noise_variance",
    ]);
    let split = o.details.train_samples;
    for k in 0..o.truth.len() {
        t.push(vec![
            o.truth.time(k).into(),
            if k < split { "train" } else { "test" }.into(),
            Cell::Num(o.input.values()[(k, 0)]),
            Cell::Num(o.truth.values()[(k, 0)]),
            Cell::Num(o.observed.values()[(k, 0)]),
            Cell::Num(o.prediction.mean[(k, 0)]),
            Cell::Num(o.prediction.latent_variance[k]),
            Cell::Num(o.prediction.latent_plus_noise_variance[k]),
        ]);
    }
    t
}

/// Runs the benchmark and writes `report.json`, `samples.csv` and
/// `resolved_config.json` into `out`.
pub fn run_to_dir(cfg: &SysidConfig, out: &Path) -> anyhow::Result<SysidOutcome> {
    let start = Instant::now();
    let outcome = run(cfg).context("system identification run")?;
    ensure_dir(out)?;
    samples_table(&outcome).write(&out.join("samples.csv"))?;
    let mut resolved = outcome.config.clone();
    resolved.out = out.to_path_buf();
    write_json(&out.join("resolved_config.json"), &resolved)?;

    let report = Report {
        command: "sysid".into(),
        config: resolved,
        metrics: BTreeMap::from([
            ("train".to_string(), outcome.train),
            ("test".to_string(), outcome.test),
        ]),
        tables: BTreeMap::from([("samples".to_string(), PathBuf::from("samples.csv"))]),
        details: outcome.details.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(outcome)
}
