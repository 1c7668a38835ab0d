//! Command-line and config-file arguments. Every field is optional so a
//! JSON config can fill what the flags leave out.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "mixfourier", version, about = "Fourier-domain estimation of Gaussian mixtures with a shared variance")]
pub struct Cli {
    /// Worker threads for experiment runs (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate order, variance, means and weights from samples or a model.
    Estimate(EstimateArgs),
    /// Monte-Carlo order-recovery experiment over log(SRF) x log(SNR).
    PhaseTransition(PhaseArgs),
    /// Compare the estimator with EM on simulated data.
    CompareEm(CompareArgs),
    /// Choose a cutoff frequency by bisection on the sample ECF.
    Cutoff(CutoffArgs),
}

/// Fills every `None` field of `$dst` from `$src`.
macro_rules! fill {
    ($dst:expr, $src:expr; $($field:ident),* $(,)?) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field.take(); } )*
    };
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("bad config {}: {e}", path.display())))
}

#[derive(Debug, Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateArgs {
    /// JSON file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Sample file, one value per line.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Mixture JSON (`means`, `weights`, `variance`); uses exact Fourier data.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Noise level added to model Fourier data.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Cutoff frequency, or `auto`.
    #[arg(long)]
    pub omega: Option<String>,
    /// Hankel size is K+1.
    #[arg(long = "K", alias = "half-count")]
    #[serde(rename = "K")]
    pub half_count: Option<usize>,
    #[arg(long)]
    pub vmax: Option<f64>,
    #[arg(long)]
    pub vstep: Option<f64>,
    /// Singular-value threshold T.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Set T = c/sqrt(n) instead.
    #[arg(long)]
    pub threshold_c: Option<f64>,
    #[arg(long)]
    pub known_order: Option<usize>,
    /// Bisection steps for `--omega auto`.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub omega_init: Option<f64>,
    /// Noise-floor multiplier for the bisection.
    #[arg(long)]
    pub tau: Option<f64>,
    /// MUSIC grid points.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Falls back to `MIXFOURIER_SEED`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EstimateArgs {
    pub fn resolve(mut self) -> Result<Self, Failure> {
        if let Some(path) = self.config.clone() {
            let mut file: EstimateArgs = read_config(&path)?;
            fill!(self, file; samples, model, sigma, omega, half_count, vmax, vstep, threshold, threshold_c,
                known_order, t, omega_init, tau, resolution, seed, out);
        }
        Ok(self)
    }
}

#[derive(Debug, Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of components k.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// log(SRF) range `lo:hi`.
    #[arg(long)]
    pub srf: Option<String>,
    /// log(SNR) range `lo:hi`.
    #[arg(long)]
    pub snr: Option<String>,
    /// `known` or `unknown`.
    #[arg(long)]
    pub variance: Option<String>,
    #[arg(long)]
    pub vmax: Option<f64>,
    #[arg(long)]
    pub vstep: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Falls back to `MIXFOURIER_SEED`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl PhaseArgs {
    pub fn resolve(mut self) -> Result<Self, Failure> {
        if let Some(path) = self.config.clone() {
            let mut file: PhaseArgs = read_config(&path)?;
            fill!(self, file; order, trials, srf, snr, variance, vmax, vstep, resolution, seed, out);
        }
        Ok(self)
    }
}

#[derive(Debug, Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CompareArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Mixture JSON to sample from (default: ±0.5, unit variance).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Not accepted here; present so the conflict is reported clearly.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Separation sweep `start:end:step` of two unit-variance components.
    #[arg(long)]
    pub separations: Option<String>,
    /// Sample sizes, comma separated.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long = "K", alias = "half-count")]
    #[serde(rename = "K")]
    pub half_count: Option<usize>,
    #[arg(long)]
    pub known_order: Option<usize>,
    /// Estimate the order instead of fixing it.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unknown_order: Option<bool>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub threshold_c: Option<f64>,
    #[arg(long)]
    pub vmax: Option<f64>,
    #[arg(long)]
    pub vstep: Option<f64>,
    /// Cutoff frequency, or `auto`.
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub omega_init: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// EM orders, comma separated.
    #[arg(long)]
    pub em_orders: Option<String>,
    #[arg(long)]
    pub em_tol: Option<f64>,
    #[arg(long)]
    pub em_max_iter: Option<usize>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Falls back to `MIXFOURIER_SEED`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CompareArgs {
    pub fn resolve(mut self) -> Result<Self, Failure> {
        if let Some(path) = self.config.clone() {
            let mut file: CompareArgs = read_config(&path)?;
            fill!(self, file; model, samples, separations, n, trials, half_count, known_order, unknown_order,
                threshold, threshold_c, vmax, vstep, omega, t, omega_init, tau, em_orders, em_tol, em_max_iter,
                resolution, seed, out);
        }
        Ok(self)
    }
}

#[derive(Debug, Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Bisection steps.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub omega_init: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
}

impl CutoffArgs {
    pub fn resolve(mut self) -> Result<Self, Failure> {
        if let Some(path) = self.config.clone() {
            let mut file: CutoffArgs = read_config(&path)?;
            fill!(self, file; samples, t, omega_init, tau);
        }
        Ok(self)
    }
}
