//! Run configurations for the benchmark commands.
//!
//! Each config is a flat JSON object. Missing fields take the defaults below,
//! unknown fields are rejected. The fully resolved config of every run is
//! written back as `resolved_config.json`, which can be fed to `--config` to
//! reproduce the run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use bwl::Activation;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn load_config<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// RFF lengthscale: a fixed value or the median pairwise distance of the
/// training latents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lengthscale {
    Median,
    Fixed(f64),
}

impl FromStr for Lengthscale {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(Lengthscale::Median);
        }
        let v: f64 = s
            .parse()
            .with_context(|| format!("lengthscale must be `median` or a number, got `{s}`"))?;
        if !(v > 0.0 && v.is_finite()) {
            bail!("lengthscale must be positive, got {v}");
        }
        Ok(Lengthscale::Fixed(v))
    }
}

impl fmt::Display for Lengthscale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lengthscale::Median => f.write_str("median"),
            Lengthscale::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Lengthscale {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Lengthscale::Median => s.serialize_str("median"),
            Lengthscale::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Lengthscale {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Lengthscale::from_str(&v.to_string()),
            Raw::Text(s) => Lengthscale::from_str(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Ls,
    Bayes,
    Both,
}

impl FitMode {
    pub fn least_squares(self) -> bool {
        matches!(self, FitMode::Ls | FitMode::Both)
    }

    pub fn bayes(self) -> bool {
        matches!(self, FitMode::Bayes | FitMode::Both)
    }
}

/// How a Laguerre order is spread over several input channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OrderMode {
    /// Every channel gets the full order.
    PerChannel,
    /// The order is divided evenly between channels.
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SysidConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    pub order: usize,
    pub lambda: f64,
    pub features: usize,
    pub noise_std: f64,
    pub reg_sigma: f64,
    pub alpha: f64,
    pub lengthscale: Lengthscale,
    pub t_end: f64,
    pub dt: f64,
    pub harmonics: usize,
    pub omega0: f64,
    pub damping: f64,
    pub stiffness: f64,
    pub gain: f64,
    pub train_fraction: f64,
}

impl Default for SysidConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out/sysid"),
            jobs: 1,
            order: 15,
            lambda: 30.0,
            features: 1000,
            noise_std: 0.02,
            reg_sigma: 0.08,
            alpha: 1.0,
            lengthscale: Lengthscale::Median,
            t_end: 50.0,
            dt: 0.01,
            harmonics: 5,
            omega0: 1.0,
            damping: 0.8,
            stiffness: 4.0,
            gain: 1.2,
            train_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeseriesConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    pub order: usize,
    pub order_mode: OrderMode,
    pub lambda: f64,
    pub neurons: usize,
    pub noise_std: f64,
    pub reg_sigma: f64,
    pub alpha: f64,
    pub mu: f64,
    pub x0: f64,
    pub v0: f64,
    pub shift: usize,
    pub activation: Activation,
    pub t_end: f64,
    pub dt: f64,
    pub train_fraction: f64,
}

impl Default for TimeseriesConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out/timeseries"),
            jobs: 1,
            order: 50,
            order_mode: OrderMode::Split,
            lambda: 3.0,
            neurons: 2000,
            noise_std: 0.1,
            reg_sigma: 0.5,
            alpha: 1.0,
            mu: 2.0,
            x0: 2.0,
            v0: 0.0,
            shift: 1,
            activation: Activation::Tanh,
            t_end: 40.0,
            dt: 0.01,
            train_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    pub dims: Vec<usize>,
    pub samples: usize,
    pub test_samples: usize,
    pub features: usize,
    pub repeats: usize,
    pub fit: FitMode,
    /// Ridge penalty of the least-squares fit.
    pub ridge: f64,
    /// Noise std of the Bayesian fit.
    pub reg_sigma: f64,
    pub alpha: f64,
    pub rff_lengthscale: f64,
    pub elm_activation: Activation,
    /// Inputs are multiplied by this factor before the ELM hidden layer.
    pub elm_input_scale: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out/bench-gaussian"),
            jobs: 1,
            dims: vec![1, 2, 3, 4, 5],
            samples: 2000,
            test_samples: 2000,
            features: 1500,
            repeats: 20,
            fit: FitMode::Both,
            ridge: 1e-8,
            reg_sigma: 1e-4,
            alpha: 1.0,
            rff_lengthscale: 5.0,
            elm_activation: Activation::Tanh,
            elm_input_scale: 0.1,
        }
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("`{name}` must be positive, got {v}");
    }
    Ok(())
}

pub(crate) fn check_fraction(name: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0 && v < 1.0) {
        bail!("`{name}` must lie in (0, 1), got {v}");
    }
    Ok(())
}

/// Number of samples on `[0, t_end]` with spacing `dt`, both endpoints included.
pub(crate) fn sample_count(t_end: f64, dt: f64) -> anyhow::Result<usize> {
    check_positive("t_end", t_end)?;
    check_positive("dt", dt)?;
    Ok((t_end / dt).round() as usize + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengthscale_parsing() {
        assert_eq!("median".parse::<Lengthscale>().unwrap(), Lengthscale::Median);
        assert_eq!("2.5".parse::<Lengthscale>().unwrap(), Lengthscale::Fixed(2.5));
        assert!("-1".parse::<Lengthscale>().is_err());
        assert!("wide".parse::<Lengthscale>().is_err());
        let json = serde_json::to_string(&Lengthscale::Fixed(0.1)).unwrap();
        assert_eq!(serde_json::from_str::<Lengthscale>(&json).unwrap(), Lengthscale::Fixed(0.1));
        assert_eq!(
            serde_json::from_str::<Lengthscale>("\"median\"").unwrap(),
            Lengthscale::Median
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<SysidConfig>(r#"{"ordr": 3}"#).unwrap_err();
        assert!(err.to_string().contains("ordr"));
        let partial: SysidConfig = serde_json::from_str(r#"{"order": 3}"#).unwrap();
        assert_eq!(partial.order, 3);
        assert_eq!(partial.lambda, 30.0);
    }

    #[test]
    fn configs_round_trip() {
        let c = TimeseriesConfig::default();
        let back: TimeseriesConfig =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
        let b = BenchConfig::default();
        let back: BenchConfig = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(b, back);
    }

    #[test]
    fn grid_size() {
        assert_eq!(sample_count(50.0, 0.01).unwrap(), 5001);
        assert_eq!(sample_count(40.0, 0.01).unwrap(), 4001);
        assert!(sample_count(0.0, 0.01).is_err());
    }
}
