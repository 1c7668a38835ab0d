//! End-to-end estimation: ECF, singular-value ratios, MUSIC, weights.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{ecf, FourierData, FourierGrid};
use crate::model::{GaussianMixture, MixingDistribution, SampleSet};
use crate::spectral::{demodulate, estimate_weights, music_spectrum, DEFAULT_RESOLUTION};
use crate::svr::{estimate_fourier, SvrConfig, SvrSurface};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Cutoff frequency `Ω`.
    pub cutoff: f64,
    /// `K`; the Hankel matrix is `(K+1)×(K+1)`.
    pub half_count: usize,
    pub svr: SvrConfig,
    #[serde(default = "default_resolution")]
    pub music_resolution: usize,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

impl PipelineConfig {
    pub fn new(cutoff: f64, half_count: usize, svr: SvrConfig) -> Self {
        Self {
            cutoff,
            half_count,
            svr,
            music_resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn grid(&self) -> Result<FourierGrid> {
        FourierGrid::new(self.cutoff, self.half_count)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub ecf_ms: f64,
    pub svr_ms: f64,
    pub music_ms: f64,
    pub weights_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.ecf_ms + self.svr_ms + self.music_ms + self.weights_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `+∞` when the next singular value is at the rounding floor; written
    /// to JSON as `null`.
    #[serde(with = "ratio_json")]
    pub selected_ratio: f64,
    /// Order selected by the ratio surface before any merging of means.
    pub svr_order: usize,
    pub music_step: f64,
    /// Means closer than one MUSIC grid step were merged.
    pub merged_means: bool,
    pub rank_deficient: bool,
    pub weight_iterations: usize,
    pub weight_residual: f64,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// `v̂`, the modulation parameter.
    pub v: f64,
    /// `ŝ² = 2v̂`.
    pub variance: f64,
    pub order: usize,
    pub means: Vec<f64>,
    pub weights: Vec<f64>,
    pub cutoff: f64,
    pub half_count: usize,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    pub surface: Option<SvrSurface>,
}

impl EstimationResult {
    pub fn mixing_distribution(&self) -> Result<MixingDistribution> {
        MixingDistribution::new(self.means.clone(), self.weights.clone())
    }

    /// The fitted mixture; fails when `v̂ = 0` since the variance must be
    /// positive.
    pub fn mixture(&self) -> Result<GaussianMixture> {
        GaussianMixture::new(self.means.clone(), self.weights.clone(), self.variance)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

mod ratio_json {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
        if r.is_finite() {
            s.serialize_f64(*r)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Merges sorted means lying within `step` of their predecessor cluster.
fn merge_close(means: &[f64], step: f64) -> Vec<f64> {
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for &m in means {
        match clusters.last_mut() {
            Some(c) if m - c[c.len() - 1] <= step * (1.0 + 1e-9) => c.push(m),
            _ => clusters.push(vec![m]),
        }
    }
    clusters
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Runs the estimator on samples. The samples are read once, to form the
/// empirical characteristic function.
pub fn estimate(samples: &SampleSet, config: &PipelineConfig) -> Result<EstimationResult> {
    let start = Instant::now();
    let data = ecf(samples, &config.grid()?)?;
    let ecf_ms = elapsed_ms(start);
    let mut result = estimate_from_fourier(&data, config)?;
    result.diagnostics.timings.ecf_ms = ecf_ms;
    Ok(result)
}

/// Runs the estimator on Fourier data whose grid must match the config.
pub fn estimate_from_fourier(data: &FourierData, config: &PipelineConfig) -> Result<EstimationResult> {
    if data.grid() != &config.grid()? {
        return Err(Error::InvalidArgument("Fourier data grid does not match the configuration".into()));
    }
    let mut timings = StageTimings::default();

    let start = Instant::now();
    let svr = estimate_fourier(data, &config.svr)?;
    timings.svr_ms = elapsed_ms(start);

    let start = Instant::now();
    let demodulated = demodulate(data, svr.v)?;
    let spectrum = music_spectrum(&demodulated, svr.order, config.music_resolution)?;
    let means = merge_close(&spectrum.peaks, spectrum.step);
    let merged = means.len() < spectrum.peaks.len();
    timings.music_ms = elapsed_ms(start);

    let start = Instant::now();
    let solve = estimate_weights(data, &means, svr.v)?;
    timings.weights_ms = elapsed_ms(start);

    Ok(EstimationResult {
        v: svr.v,
        variance: 2.0 * svr.v,
        order: means.len(),
        means,
        weights: solve.weights,
        cutoff: config.cutoff,
        half_count: config.half_count,
        diagnostics: Diagnostics {
            selected_ratio: svr.ratio,
            svr_order: svr.order,
            music_step: spectrum.step,
            merged_means: merged,
            rank_deficient: solve.rank_deficient,
            weight_iterations: solve.iterations,
            weight_residual: solve.residual,
            timings,
        },
        surface: Some(svr.surface),
    })
}
