//! Time-series benchmark: the noisy Van der Pol oscillator learned as a
//! one-step-ahead operator with a Bayesian ELM Wiener–Laguerre model, then
//! extrapolated in closed loop past the training window.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use bwl::features::FeatureMapDescriptor;
use bwl::model::{evaluate, fit_on_latents, make_shifted_target};
use bwl::sim::{add_noise, simulate_van_der_pol};
use bwl::{
    BwlConfig, FeatureSpec, FittedBwl, LaguerreBank, LaguerreConfig, Metrics, NoiseModel,
    PredictionResult, RngSeed, Rollout, TrajectoryData,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{check_fraction, check_positive, sample_count, OrderMode, TimeseriesConfig};
use crate::output::{ensure_dir, write_json, Cell, ReferenceValue, Report, Table};

pub const REFERENCE: ReferenceValue = ReferenceValue {
    rmse: 0.9577,
    mean_latent_variance: 0.00234,
};

mod stream {
    pub const NOISE: u64 = 0;
    pub const FEATURES: u64 = 1;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeseriesDetails {
    /// Laguerre order of each channel.
    pub channel_orders: Vec<usize>,
    pub feature_map: FeatureMapDescriptor,
    /// Number of (input, shifted target) pairs used for training.
    pub train_pairs: usize,
    /// First series index produced by the closed-loop rollout.
    pub rollout_start: usize,
    pub rollout_steps: usize,
    pub max_abs_rollout_x: f64,
    pub reference: ReferenceValue,
}

pub struct TimeseriesOutcome {
    pub config: TimeseriesConfig,
    /// Clean simulated series.
    pub truth: TrajectoryData,
    /// Noisy observations of the series.
    pub observed: TrajectoryData,
    pub model: FittedBwl,
    /// One-step predictions for every pair; row `j` estimates series index `j + shift`.
    pub open_loop: PredictionResult,
    pub rollout: Rollout,
    pub metrics: BTreeMap<String, Metrics>,
    pub details: TimeseriesDetails,
}

impl TimeseriesOutcome {
    pub fn closed_loop_test(&self) -> Metrics {
        self.metrics["closed_loop_test"]
    }
}

pub fn validate(cfg: &TimeseriesConfig) -> anyhow::Result<()> {
    check_positive("lambda", cfg.lambda)?;
    check_positive("reg_sigma", cfg.reg_sigma)?;
    check_positive("alpha", cfg.alpha)?;
    check_fraction("train_fraction", cfg.train_fraction)?;
    if cfg.order == 0 || cfg.neurons == 0 || cfg.shift == 0 {
        bail!("order, neurons and shift must be at least 1");
    }
    if !(cfg.noise_std >= 0.0 && cfg.noise_std.is_finite()) {
        bail!("noise_std must be nonnegative, got {}", cfg.noise_std);
    }
    if cfg.order_mode == OrderMode::Split && cfg.order < 2 {
        bail!("split order mode needs an order of at least 2");
    }
    Ok(())
}

fn channel_orders(cfg: &TimeseriesConfig, channels: usize) -> Vec<usize> {
    match cfg.order_mode {
        OrderMode::PerChannel => vec![cfg.order; channels],
        OrderMode::Split => {
            let base = cfg.order / channels;
            (0..channels)
                .map(|c| base + usize::from(c < cfg.order % channels))
                .collect()
        }
    }
}

/// Both-channel and x-only error of `pred` against `truth` on `rows`.
fn metric_pair(
    pred: &PredictionResult,
    truth: &DMatrix<f64>,
) -> anyhow::Result<(Metrics, Metrics)> {
    let n = truth.nrows();
    let both = evaluate(pred, truth, 0..n)?;
    let x_only = PredictionResult {
        mean: pred.mean.columns(0, 1).into_owned(),
        latent_variance: pred.latent_variance.clone(),
        latent_plus_noise_variance: pred.latent_plus_noise_variance.clone(),
    };
    let x = evaluate(&x_only, &truth.columns(0, 1).into_owned(), 0..n)?;
    Ok((both, x))
}

pub fn run(cfg: &TimeseriesConfig) -> anyhow::Result<TimeseriesOutcome> {
    validate(cfg)?;
    let root = RngSeed(cfg.seed);
    let m = sample_count(cfg.t_end, cfg.dt)?;
    let k = cfg.shift;
    let truth = simulate_van_der_pol(cfg.mu, [cfg.x0, cfg.v0], m, cfg.dt)?;
    let observed = add_noise(&truth, cfg.noise_std, root.derive(stream::NOISE))?;

    let (input, target) = make_shifted_target(&observed, k)?;
    let pairs = input.len();
    let train_pairs = (pairs as f64 * cfg.train_fraction).round() as usize;
    if train_pairs < 2 || train_pairs >= pairs {
        bail!("training window of {train_pairs} pairs leaves no train or test samples");
    }

    let orders = channel_orders(cfg, truth.channels());
    let bank_cfg = orders
        .iter()
        .map(|&p| LaguerreConfig::new(p, cfg.lambda))
        .collect::<Result<Vec<_>, _>>()?;
    let bank = LaguerreBank::new(&bank_cfg, cfg.dt)?;
    let latents = bank.filter_signal(&input)?;
    let model_cfg = BwlConfig {
        bank: bank_cfg,
        feature: FeatureSpec::Elm {
            features: cfg.neurons,
            activation: cfg.activation,
            seed: root.derive(stream::FEATURES),
        },
        noise: NoiseModel::new(cfg.reg_sigma, cfg.alpha)?,
        sample_dt: cfg.dt,
    };
    let model = fit_on_latents(model_cfg, bank, &latents, &target, 0..train_pairs)?;
    let open_loop = model.predict_latents(&latents)?;

    // Pair j targets series index j + k; the clean reference for it:
    let clean_target = truth.values().rows(k, pairs).into_owned();

    // The rollout continues from every observation the training used.
    let rollout_start = train_pairs + k;
    let rollout_steps = m - rollout_start;
    let rollout = if k == 1 {
        model.rollout(&observed.slice(0..rollout_start), rollout_steps)?
    } else {
        bail!("closed-loop rollout is only defined for shift = 1");
    };

    let mut metrics = BTreeMap::new();
    let train_pred = slice_prediction(&open_loop, 0..train_pairs);
    let (train_both, train_x) =
        metric_pair(&train_pred, &clean_target.rows(0, train_pairs).into_owned())?;
    metrics.insert("open_loop_train".to_string(), train_both);
    metrics.insert("open_loop_train_x".to_string(), train_x);

    let test_pred = slice_prediction(&open_loop, train_pairs..pairs);
    let test_truth = clean_target.rows(train_pairs, pairs - train_pairs).into_owned();
    let (open_both, open_x) = metric_pair(&test_pred, &test_truth)?;
    metrics.insert("open_loop_test".to_string(), open_both);
    metrics.insert("open_loop_test_x".to_string(), open_x);

    let rollout_truth = truth.values().rows(rollout_start, rollout_steps).into_owned();
    let (closed_both, closed_x) = metric_pair(&rollout.prediction, &rollout_truth)?;
    metrics.insert("closed_loop_test".to_string(), closed_both);
    metrics.insert("closed_loop_test_x".to_string(), closed_x);

    let max_abs_rollout_x = rollout
        .prediction
        .mean
        .column(0)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let details = TimeseriesDetails {
        channel_orders: orders,
        feature_map: model.feature_map().descriptor(),
        train_pairs,
        rollout_start,
        rollout_steps,
        max_abs_rollout_x,
        reference: REFERENCE,
    };
    Ok(TimeseriesOutcome {
        config: cfg.clone(),
        truth,
        observed,
        model,
        open_loop,
        rollout,
        metrics,
        details,
    })
}

fn slice_prediction(pred: &PredictionResult, rows: std::ops::Range<usize>) -> PredictionResult {
    let n = rows.len();
    PredictionResult {
        mean: pred.mean.rows(rows.start, n).into_owned(),
        latent_variance: pred.latent_variance.rows(rows.start, n).into_owned(),
        latent_plus_noise_variance: pred.latent_plus_noise_variance.rows(rows.start, n).into_owned(),
    }
}

fn header(channels: usize) -> Vec<String> {
    let mut h = vec!["time".to_string(), "region".to_string()];
    for prefix in ["truth", "observed", "mean"] {
        h.extend((0..channels).map(|c| format!("{prefix}{c}")));
    }
    h.push("latent_variance".into());
    h.push("latent_plus_noise_variance".into());
    h
}

/// One row per series index `i` predicted by `pred` (row `r` ↔ index `first + r`).
fn prediction_table(
    o: &TimeseriesOutcome,
    pred: &PredictionResult,
    first: usize,
    region: impl Fn(usize) -> &'static str,
) -> Table {
    let c = o.truth.channels();
    let mut t = Table::new(header(c));
    for r in 0..pred.len() {
        let i = first + r;
        let mut row: Vec<Cell> = vec![o.truth.time(i).into(), region(r).into()];
        row.extend((0..c).map(|ch| Cell::Num(o.truth.values()[(i, ch)])));
        row.extend((0..c).map(|ch| Cell::Num(o.observed.values()[(i, ch)])));
        row.extend((0..c).map(|ch| Cell::Num(pred.mean[(r, ch)])));
        row.push(Cell::Num(pred.latent_variance[r]));
        row.push(Cell::Num(pred.latent_plus_noise_variance[r]));
        t.push(row);
    }
    t
}

pub fn samples_table(o: &TimeseriesOutcome) -> Table {
    let split = o.details.train_pairs;
    prediction_table(o, &o.open_loop, o.config.shift, |r| {
        if r < split {
            "train"
        } else {
            "test"
        }
    })
}

pub fn rollout_table(o: &TimeseriesOutcome) -> Table {
    prediction_table(o, &o.rollout.prediction, o.details.rollout_start, |_| "rollout")
}

pub fn run_to_dir(cfg: &TimeseriesConfig, out: &Path) -> anyhow::Result<TimeseriesOutcome> {
    let start = Instant::now();
    let outcome = run(cfg).context("time-series run")?;
    ensure_dir(out)?;
    samples_table(&outcome).write(&out.join("samples.csv"))?;
    rollout_table(&outcome).write(&out.join("rollout.csv"))?;
    let mut resolved = outcome.config.clone();
    resolved.out = out.to_path_buf();
    write_json(&out.join("resolved_config.json"), &resolved)?;
    let report = Report {
        command: "timeseries".into(),
        config: resolved,
        metrics: outcome.metrics.clone(),
        tables: BTreeMap::from([
            ("samples".to_string(), PathBuf::from("samples.csv")),
            ("rollout".to_string(), PathBuf::from("rollout.csv")),
        ]),
        details: outcome.details.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_modes() {
        let mut cfg = TimeseriesConfig::default();
        cfg.order_mode = OrderMode::PerChannel;
        assert_eq!(channel_orders(&cfg, 2), vec![50, 50]);
        cfg.order_mode = OrderMode::Split;
        assert_eq!(channel_orders(&cfg, 2), vec![25, 25]);
        cfg.order = 51;
        assert_eq!(channel_orders(&cfg, 2), vec![26, 25]);
    }
}
