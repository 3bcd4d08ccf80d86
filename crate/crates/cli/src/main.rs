use std::path::{Path, PathBuf};

use anyhow::Context;
use bwl::Activation;
use bwl_cli::config::{
    load_config, BenchConfig, FitMode, Lengthscale, OrderMode, SysidConfig, TimeseriesConfig,
};
use bwl_cli::plot::BandVariance;
use bwl_cli::{bench, plot, sysid, timeseries};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

/// Barron–Wiener–Laguerre benchmarks.
#[derive(Parser)]
#[command(name = "bwl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate a tri-modal Gaussian with RFF and ELM features.
    BenchGaussian {
        #[command(flatten)]
        common: Common,
        /// Comma-separated input dimensions.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        test_samples: Option<usize>,
        #[arg(long)]
        features: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long, value_enum)]
        fit: Option<FitMode>,
    },
    /// Identify a forced second-order plant with a Bayesian RFF model.
    Sysid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        features: Option<usize>,
        #[arg(long)]
        noise_std: Option<f64>,
        #[arg(long)]
        reg_sigma: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// `median` or a positive number.
        #[arg(long)]
        lengthscale: Option<Lengthscale>,
    },
    /// Learn and extrapolate the Van der Pol oscillator with a Bayesian ELM model.
    Timeseries {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum)]
        order_mode: Option<OrderMode>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        neurons: Option<usize>,
        #[arg(long)]
        noise_std: Option<f64>,
        #[arg(long)]
        reg_sigma: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        shift: Option<usize>,
        #[arg(long)]
        activation: Option<Activation>,
    },
    /// Write mean ± 2 std bands of a finished run as `bands.csv`.
    PlotData {
        /// Directory holding the run's `report.json`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "samples")]
        table: String,
        #[arg(long, value_enum, default_value = "latent")]
        variance: BandVariance,
        /// Output directory, defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config; command-line flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn base<T: DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    path.map_or_else(|| Ok(T::default()), load_config)
}

macro_rules! apply {
    ($cfg:ident; $($field:ident),* $(,)?) => {
        $(if let Some(v) = $field { $cfg.$field = v; })*
    };
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::BenchGaussian { common, dims, samples, test_samples, features, repeats, fit } => {
            let mut cfg: BenchConfig = base(common.config.as_deref())?;
            let Common { seed, out, jobs, .. } = common;
            apply!(cfg; seed, out, jobs, dims, samples, test_samples, features, repeats, fit);
            let o = bench::run_to_dir(&cfg, &cfg.out)?;
            for s in &o.summaries {
                log::info!(
                    "d={} {} {}: relative MSE {:.3e} ± {:.3e}",
                    s.d,
                    s.method.name(),
                    s.fit.name(),
                    s.mean_relative_mse,
                    s.std_relative_mse
                );
            }
            println!("{}", cfg.out.display());
        }
        Command::Sysid { common, order, lambda, features, noise_std, reg_sigma, alpha, lengthscale } => {
            let mut cfg: SysidConfig = base(common.config.as_deref())?;
            let Common { seed, out, jobs, .. } = common;
            apply!(cfg; seed, out, jobs, order, lambda, features, noise_std, reg_sigma, alpha, lengthscale);
            let o = sysid::run_to_dir(&cfg, &cfg.out)?;
            log::info!(
                "test RMSE {:.5}, mean latent variance {:.5} (reference {} / {})",
                o.test.rmse,
                o.test.mean_latent_variance,
                sysid::REFERENCE.rmse,
                sysid::REFERENCE.mean_latent_variance
            );
            println!("{}", cfg.out.display());
        }
        Command::Timeseries {
            common,
            order,
            order_mode,
            lambda,
            neurons,
            noise_std,
            reg_sigma,
            alpha,
            mu,
            shift,
            activation,
        } => {
            let mut cfg: TimeseriesConfig = base(common.config.as_deref())?;
            let Common { seed, out, jobs, .. } = common;
            apply!(cfg; seed, out, jobs, order, order_mode, lambda, neurons, noise_std, reg_sigma, alpha, mu, shift, activation);
            let o = timeseries::run_to_dir(&cfg, &cfg.out)?;
            let m = o.closed_loop_test();
            log::info!(
                "closed-loop RMSE {:.4}, mean latent variance {:.5}, max |x| {:.3} (reference {} / {})",
                m.rmse,
                m.mean_latent_variance,
                o.details.max_abs_rollout_x,
                timeseries::REFERENCE.rmse,
                timeseries::REFERENCE.mean_latent_variance
            );
            println!("{}", cfg.out.display());
        }
        Command::PlotData { input, table, variance, out } => {
            let out = out.unwrap_or_else(|| input.clone());
            let path = plot::run_to_dir(&input, &table, variance, &out)
                .with_context(|| format!("plotting {}", input.display()))?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
