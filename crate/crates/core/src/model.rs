//! The composite estimator: Laguerre filter bank → random features →
//! Bayesian linear readout.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bayes::{fit_posterior, GaussianPosterior, NoiseModel};
use crate::error::{ensure_positive, Error, Result};
use crate::features::{Activation, FeatureMap};
use crate::laguerre::{LaguerreBank, LaguerreConfig};
use crate::rng::RngSeed;
use crate::sim::TrajectoryData;

/// How the hidden units of the readout are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    Rff {
        features: usize,
        lengthscale: f64,
        seed: RngSeed,
    },
    Elm {
        features: usize,
        activation: Activation,
        seed: RngSeed,
    },
    #[doc(hidden)]
    PassThrough,
}

impl FeatureSpec {
    pub fn build(&self, input_dim: usize) -> Result<FeatureMap> {
        match *self {
            FeatureSpec::Rff {
                features,
                lengthscale,
                seed,
            } => FeatureMap::sample_rff(features, input_dim, lengthscale, seed),
            FeatureSpec::Elm {
                features,
                activation,
                seed,
            } => FeatureMap::sample_elm(features, input_dim, activation, seed),
            FeatureSpec::PassThrough => FeatureMap::pass_through(input_dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BwlConfig {
    pub bank: Vec<LaguerreConfig>,
    pub feature: FeatureSpec,
    pub noise: NoiseModel,
    pub sample_dt: f64,
}

impl BwlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bank.is_empty() {
            return Err(Error::InvalidParameter {
                name: "bank",
                reason: "at least one Laguerre channel is required".into(),
            });
        }
        for c in &self.bank {
            c.validate()?;
        }
        self.noise.validate()?;
        ensure_positive("sample_dt", self.sample_dt)?;
        match self.feature {
            FeatureSpec::Rff { features: 0, .. } | FeatureSpec::Elm { features: 0, .. } => {
                Err(Error::InvalidParameter {
                    name: "features",
                    reason: "at least one feature is required".into(),
                })
            }
            _ => Ok(()),
        }
    }

    pub fn total_order(&self) -> usize {
        self.bank.iter().map(|c| c.order).sum()
    }
}

/// Laguerre latent trajectory of `u`: one column block per input channel.
pub fn build_latents(config: &BwlConfig, u: &TrajectoryData) -> Result<DMatrix<f64>> {
    let bank = LaguerreBank::new(&config.bank, config.sample_dt)?;
    bank.filter_signal(u)
}

#[derive(Debug, Clone)]
pub struct FittedBwl {
    config: BwlConfig,
    bank: LaguerreBank,
    feature_map: FeatureMap,
    posterior: GaussianPosterior,
    training_span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub mean: DMatrix<f64>,
    pub latent_variance: DVector<f64>,
    pub latent_plus_noise_variance: DVector<f64>,
}

impl PredictionResult {
    pub fn len(&self) -> usize {
        self.mean.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.nrows() == 0
    }

    fn from_parts(mean: DMatrix<f64>, latent: DVector<f64>, noise_var: f64) -> Self {
        let latent_variance = latent.map(|v| v.max(0.0));
        let latent_plus_noise_variance = latent_variance.add_scalar(noise_var);
        Self {
            mean,
            latent_variance,
            latent_plus_noise_variance,
        }
    }
}

/// Closed-loop predictions with their time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub trajectory: TrajectoryData,
    pub prediction: PredictionResult,
}

/// What is fed back into the filter during a rollout.
#[derive(Debug, Clone, Copy)]
pub enum Feedback<'a> {
    /// The model's own posterior mean.
    Prediction,
    /// Observed continuation of the series; its row `i` is the sample at the
    /// `i`-th rollout time.
    Observed(&'a TrajectoryData),
}

fn check_range(range: &Range<usize>, len: usize, what: &str) -> Result<()> {
    if range.start >= range.end {
        return Err(Error::EmptySelection(format!("{what} range {range:?} is empty")));
    }
    if range.end > len {
        return Err(Error::DimensionMismatch {
            context: "index range end",
            expected: len,
            actual: range.end,
        });
    }
    Ok(())
}

/// Fits the readout on rows `train` of `(u, z)`.
///
/// The filter runs over the whole input, so latents in `train` carry the
/// state accumulated from every earlier sample.
pub fn fit(
    config: &BwlConfig,
    u: &TrajectoryData,
    z: &TrajectoryData,
    train: Range<usize>,
) -> Result<FittedBwl> {
    config.validate()?;
    if u.len() != z.len() {
        return Err(Error::DimensionMismatch {
            context: "input and target sample counts",
            expected: u.len(),
            actual: z.len(),
        });
    }
    if (u.dt() - z.dt()).abs() > 1e-9 * u.dt() || (u.t0() - z.t0()).abs() > 1e-9 * u.dt().max(1.0) {
        return Err(Error::SamplePeriodMismatch {
            expected: u.dt(),
            actual: z.dt(),
        });
    }
    check_range(&train, u.len(), "training")?;
    let bank = LaguerreBank::new(&config.bank, config.sample_dt)?;
    let latents = bank.filter_signal(u)?;
    fit_on_latents(config.clone(), bank, &latents, z, train)
}

/// Fits from precomputed latents (useful when the filter output is shared).
pub fn fit_on_latents(
    config: BwlConfig,
    bank: LaguerreBank,
    latents: &DMatrix<f64>,
    z: &TrajectoryData,
    train: Range<usize>,
) -> Result<FittedBwl> {
    check_range(&train, latents.nrows(), "training")?;
    let feature_map = config.feature.build(bank.total_order())?;
    let rows = latents.rows(train.start, train.len()).into_owned();
    let phi = feature_map.evaluate(&rows)?;
    let targets = z.values().rows(train.start, train.len()).into_owned();
    let posterior = fit_posterior(&phi, &targets, config.noise)?;
    Ok(FittedBwl {
        config,
        bank,
        feature_map,
        posterior,
        training_span: train,
    })
}

impl FittedBwl {
    pub fn config(&self) -> &BwlConfig {
        &self.config
    }

    pub fn bank(&self) -> &LaguerreBank {
        &self.bank
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn posterior(&self) -> &GaussianPosterior {
        &self.posterior
    }

    pub fn training_span(&self) -> Range<usize> {
        self.training_span.clone()
    }

    fn noise_variance(&self) -> f64 {
        let s = self.config.noise.sigma;
        s * s
    }

    /// Per-sample predictive mean and variances on latents already computed.
    pub fn predict_latents(&self, latents: &DMatrix<f64>) -> Result<PredictionResult> {
        let phi = self.feature_map.evaluate(latents)?;
        let (mean, var) = self.posterior.predict_batch(&phi)?;
        Ok(PredictionResult::from_parts(mean, var, self.noise_variance()))
    }

    /// Open-loop prediction: filter `u` from rest and read out every sample.
    pub fn predict(&self, u: &TrajectoryData) -> Result<PredictionResult> {
        let latents = self.bank.filter_signal(u)?;
        self.predict_latents(&latents)
    }

    /// Closed-loop generation for a model trained on one-step-shifted targets.
    ///
    /// `prefix` holds the observed series `s_0, …, s_{n-1}`. The first
    /// prediction is the one-step output at the end of the prefix (the
    /// estimate of `s_n`); each prediction is then fed back as the next input
    /// sample. Variances are one-step latent variances along the realized
    /// path.
    pub fn rollout(&self, prefix: &TrajectoryData, steps: usize) -> Result<Rollout> {
        self.rollout_with(prefix, steps, Feedback::Prediction)
    }

    pub fn rollout_with(
        &self,
        prefix: &TrajectoryData,
        steps: usize,
        feedback: Feedback<'_>,
    ) -> Result<Rollout> {
        if steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                reason: "rollout needs at least one step".into(),
            });
        }
        if prefix.is_empty() {
            return Err(Error::EmptySelection("rollout prefix is empty".into()));
        }
        self.bank.check_signal(prefix)?;
        let channels = prefix.channels();
        if self.posterior.output_dim() != channels {
            return Err(Error::DimensionMismatch {
                context: "rollout output channels vs input channels",
                expected: channels,
                actual: self.posterior.output_dim(),
            });
        }
        if let Feedback::Observed(obs) = feedback {
            if obs.channels() != channels || obs.len() + 1 < steps {
                return Err(Error::DimensionMismatch {
                    context: "observed feedback length",
                    expected: steps - 1,
                    actual: obs.len(),
                });
            }
        }

        let n = prefix.len();
        let mut state = self.bank.zero_state();
        let mut input = vec![0.0; channels];
        for k in 0..n - 1 {
            for (c, v) in input.iter_mut().enumerate() {
                *v = prefix.values()[(k, c)];
            }
            self.bank.step(&mut state, &input);
        }

        let mut means = DMatrix::zeros(steps, channels);
        let mut variances = DVector::zeros(steps);
        let mut latent_row = DMatrix::zeros(1, state.len());
        for i in 0..steps {
            latent_row.copy_from_slice(&state);
            let phi = self.feature_map.evaluate(&latent_row)?;
            let (mean, var) = self.posterior.predict_batch(&phi)?;
            means.row_mut(i).copy_from(&mean.row(0));
            variances[i] = var[0];
            if i + 1 == steps {
                break;
            }
            // Next input is the sample at time index n - 1 + i.
            for (c, v) in input.iter_mut().enumerate() {
                *v = if i == 0 {
                    prefix.values()[(n - 1, c)]
                } else {
                    match feedback {
                        Feedback::Prediction => means[(i - 1, c)],
                        Feedback::Observed(obs) => obs.values()[(i - 1, c)],
                    }
                };
            }
            self.bank.step(&mut state, &input);
        }

        let trajectory = TrajectoryData::new(prefix.time(n), prefix.dt(), means.clone())?;
        Ok(Rollout {
            trajectory,
            prediction: PredictionResult::from_parts(means, variances, self.noise_variance()),
        })
    }
}

/// Splits a series into `(input, target)` with `target[j] = series[j + k]`.
pub fn make_shifted_target(
    series: &TrajectoryData,
    k: usize,
) -> Result<(TrajectoryData, TrajectoryData)> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "shift",
            reason: "shift must be at least 1".into(),
        });
    }
    if series.len() <= k {
        return Err(Error::DimensionMismatch {
            context: "series length for shift",
            expected: k + 1,
            actual: series.len(),
        });
    }
    let m = series.len();
    let input = series.slice(0..m - k);
    let mut target = series.slice(k..m);
    // Targets share the input grid: row j of both is indexed by the input time.
    target = TrajectoryData::new(input.t0(), input.dt(), target.into_values())?;
    Ok((input, target))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mean_latent_variance: f64,
    pub sample_count: usize,
}

/// RMSE (averaged over outputs, then samples) and mean latent variance on
/// the rows in `mask`.
pub fn evaluate(
    pred: &PredictionResult,
    truth: &DMatrix<f64>,
    mask: Range<usize>,
) -> Result<Metrics> {
    if pred.mean.shape() != truth.shape() {
        return Err(Error::DimensionMismatch {
            context: "prediction vs truth rows",
            expected: pred.mean.nrows(),
            actual: truth.nrows(),
        });
    }
    check_range(&mask, truth.nrows(), "evaluation")?;
    let n_out = truth.ncols() as f64;
    let count = mask.len();
    let mut sq = 0.0;
    let mut var = 0.0;
    for j in mask {
        let mut row = 0.0;
        for c in 0..truth.ncols() {
            let d = pred.mean[(j, c)] - truth[(j, c)];
            row += d * d;
        }
        sq += row / n_out;
        var += pred.latent_variance[j];
    }
    Ok(Metrics {
        rmse: (sq / count as f64).sqrt(),
        mean_latent_variance: var / count as f64,
        sample_count: count,
    })
}

/// Median pairwise Euclidean distance between rows, the usual default RFF
/// lengthscale. Uses at most `max_rows` evenly strided rows.
pub fn median_pairwise_distance(x: &DMatrix<f64>, max_rows: usize) -> Result<f64> {
    let m = x.nrows();
    if m < 2 {
        return Err(Error::EmptySelection(
            "median heuristic needs at least two rows".into(),
        ));
    }
    let stride = m.div_ceil(max_rows.max(2));
    let rows: Vec<usize> = (0..m).step_by(stride.max(1)).collect();
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let mut s = 0.0;
            for c in 0..x.ncols() {
                let d = x[(i, c)] - x[(j, c)];
                s += d * d;
            }
            dists.push(s.sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    let median = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    if !(median > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lengthscale",
            reason: "median pairwise distance is zero".into(),
        });
    }
    Ok(median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ramp(m: usize, dt: f64) -> TrajectoryData {
        let v: Vec<f64> = (0..m).map(|k| (k as f64 * dt).sin()).collect();
        TrajectoryData::from_channel(0.0, dt, &v).unwrap()
    }

    fn config(dt: f64) -> BwlConfig {
        BwlConfig {
            bank: vec![LaguerreConfig::new(4, 2.0).unwrap()],
            feature: FeatureSpec::Rff {
                features: 40,
                lengthscale: 1.0,
                seed: RngSeed(1),
            },
            noise: NoiseModel::new(0.1, 1.0).unwrap(),
            sample_dt: dt,
        }
    }

    #[test]
    fn shift_index_arithmetic() {
        let s = TrajectoryData::from_channel(0.0, 1.0, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        let (i, t) = make_shifted_target(&s, 1).unwrap();
        assert_eq!(i.channel(0), vec![0.0, 1.0, 2.0]);
        assert_eq!(t.channel(0), vec![1.0, 2.0, 3.0]);
        let (i, t) = make_shifted_target(&s, 3).unwrap();
        assert_eq!((i.len(), t.len()), (1, 1));
        assert_eq!(t.channel(0), vec![3.0]);
        assert!(make_shifted_target(&s, 4).is_err());
        assert!(make_shifted_target(&s, 0).is_err());

        let c = TrajectoryData::from_channel(0.0, 1.0, &[2.5; 6]).unwrap();
        let (i, t) = make_shifted_target(&c, 2).unwrap();
        assert_eq!(i.values(), t.values());
    }

    #[test]
    fn shift_round_trip() {
        let s = ramp(20, 0.1);
        let (input, target) = make_shifted_target(&s, 3).unwrap();
        let mut rebuilt = input.channel(0);
        rebuilt.extend_from_slice(&target.channel(0)[target.len() - 3..]);
        assert_eq!(rebuilt, s.channel(0));
    }

    #[test]
    fn metrics_definitions() {
        let truth = DMatrix::from_fn(5, 2, |i, j| (i + j) as f64);
        let exact = PredictionResult::from_parts(truth.clone(), DVector::from_element(5, 0.2), 0.01);
        let m = evaluate(&exact, &truth, 0..5).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_abs_diff_eq!(m.mean_latent_variance, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(exact.latent_plus_noise_variance[0], 0.21, epsilon = 1e-15);

        let shifted = PredictionResult::from_parts(truth.add_scalar(-0.7), DVector::zeros(5), 0.0);
        let m = evaluate(&shifted, &truth, 1..4).unwrap();
        assert_abs_diff_eq!(m.rmse, 0.7, epsilon = 1e-14);
        assert_eq!(m.sample_count, 3);
        assert!(evaluate(&shifted, &truth, 2..2).is_err());
        assert!(evaluate(&shifted, &truth, 0..6).is_err());
    }

    #[test]
    fn latents_zero_input_and_duplicated_channels() {
        let mut cfg = config(0.1);
        let zero = TrajectoryData::new(0.0, 0.1, DMatrix::zeros(10, 1)).unwrap();
        assert!(build_latents(&cfg, &zero).unwrap().iter().all(|v| *v == 0.0));

        let u = ramp(30, 0.1);
        let single = build_latents(&cfg, &u).unwrap();
        let bank = LaguerreBank::new(&cfg.bank, 0.1).unwrap();
        assert_eq!(single, bank.filter_signal(&u).unwrap());

        cfg.bank.push(cfg.bank[0]);
        let both = TrajectoryData::new(
            0.0,
            0.1,
            DMatrix::from_fn(30, 2, |i, _| u.values()[(i, 0)]),
        )
        .unwrap();
        let w = build_latents(&cfg, &both).unwrap();
        assert_eq!(w.columns(0, 4), w.columns(4, 4));
    }

    #[test]
    fn fit_validates_inputs() {
        let cfg = config(0.1);
        let u = ramp(30, 0.1);
        let z = ramp(29, 0.1);
        assert!(fit(&cfg, &u, &z, 0..10).is_err());
        let z = ramp(30, 0.1);
        assert!(fit(&cfg, &u, &z, 5..5).is_err());
        assert!(fit(&cfg, &u, &z, 0..31).is_err());
        let bad_dt = ramp(30, 0.2);
        assert!(fit(&cfg, &bad_dt, &bad_dt, 0..10).is_err());
    }

    #[test]
    fn zero_target_strong_prior() {
        let mut cfg = config(0.05);
        cfg.noise = NoiseModel::new(0.1, 1e6).unwrap();
        let u = ramp(200, 0.05);
        let z = TrajectoryData::new(0.0, 0.05, DMatrix::zeros(200, 1)).unwrap();
        let model = fit(&cfg, &u, &z, 0..100).unwrap();
        let pred = model.predict(&u).unwrap();
        assert!(pred.mean.amax() < 1e-12);
        assert!(model.posterior().mean().amax() < 1e-12);
    }

    #[test]
    fn zero_input_constant_prediction() {
        let cfg = config(0.05);
        let u = ramp(200, 0.05);
        let model = fit(&cfg, &u, &u, 0..150).unwrap();
        let zero = TrajectoryData::new(0.0, 0.05, DMatrix::zeros(20, 1)).unwrap();
        let pred = model.predict(&zero).unwrap();
        let phi0 = model.feature_map().evaluate_point(&[0.0; 4]).unwrap();
        let expected = model.posterior().predict(&phi0).unwrap();
        for j in 0..20 {
            assert_eq!(pred.mean[(j, 0)], pred.mean[(0, 0)]);
            assert_abs_diff_eq!(pred.mean[(j, 0)], expected.mean[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn rollout_rejects_bad_arguments() {
        let cfg = config(0.05);
        let u = ramp(100, 0.05);
        let (input, target) = make_shifted_target(&u, 1).unwrap();
        let model = fit(&cfg, &input, &target, 0..60).unwrap();
        assert!(model.rollout(&input.slice(0..60), 0).is_err());
        assert!(model.rollout(&input.slice(0..0), 3).is_err());
        let r = model.rollout(&input.slice(0..60), 5).unwrap();
        assert_eq!(r.trajectory.len(), 5);
        assert_abs_diff_eq!(r.trajectory.t0(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn median_heuristic() {
        let x = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 3.0]);
        // distances 1, 3, 2
        assert_eq!(median_pairwise_distance(&x, 100).unwrap(), 2.0);
        assert!(median_pairwise_distance(&DMatrix::zeros(1, 2), 10).is_err());
        assert!(median_pairwise_distance(&DMatrix::zeros(5, 2), 10).is_err());
    }
}
