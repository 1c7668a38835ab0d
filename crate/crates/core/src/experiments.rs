//! Monte-Carlo harnesses: comparison with EM, separation sweeps, the
//! phase-transition diagram and closed-form resolution limits.
//!
//! Every trial derives its randomness from `(seed, trial id)` alone, so a
//! single trial can be rerun in isolation and results do not depend on the
//! number of worker threads.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{e_step, em_fit, EmConfig, EmState};
use crate::error::{Error, Result};
use crate::fourier::{cutoff_search_scaled, synth_fourier, FourierGrid};
use crate::metrics::{relative_error, wasserstein1, ScoreCard};
use crate::model::{GaussianMixture, SampleSet};
use crate::pipeline::{estimate, estimate_from_fourier, EstimationResult, PipelineConfig};
use crate::seed::{child_seed, rng};
use crate::spectral::DEFAULT_RESOLUTION;
use crate::svr::{candidate_grid, SvrConfig};

/// `√((2k-2)/v)`, the cutoff balancing envelope decay against resolution.
pub fn optimal_cutoff(order: usize, v: f64) -> Result<f64> {
    if order < 2 {
        return Err(Error::InvalidArgument(format!("optimal cutoff needs k >= 2, got {order}")));
    }
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidArgument(format!("modulation must be positive, got {v}")));
    }
    Ok(((2 * order - 2) as f64 / v).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    /// Uniform bound `‖W‖_∞` on the Fourier-domain noise.
    Fourier(f64),
    /// Sample size; the noise level is taken as `1/√n`.
    Samples(usize),
}

/// `√(v/(2k-2)) · (noise/π_min)^{1/(2k-2)}` with unit constant.
pub fn resolution_limit(v: f64, order: usize, min_weight: f64, noise: NoiseLevel) -> Result<f64> {
    if order < 2 {
        return Err(Error::InvalidArgument(format!("resolution limit needs k >= 2, got {order}")));
    }
    let level = match noise {
        NoiseLevel::Fourier(w) => w,
        NoiseLevel::Samples(n) if n > 0 => 1.0 / (n as f64).sqrt(),
        NoiseLevel::Samples(_) => return Err(Error::InvalidArgument("sample size must be positive".into())),
    };
    if [v, min_weight, level].iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidArgument("resolution limit inputs must be positive".into()));
    }
    let m = (2 * order - 2) as f64;
    Ok((v / m).sqrt() * (level / min_weight).powf(1.0 / m))
}

// ---------------------------------------------------------------------------
// Phase transition

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub order: usize,
    pub trials: usize,
    pub log_srf: (f64, f64),
    pub log_snr: (f64, f64),
    pub known_variance: bool,
    pub seed: u64,
    /// Upper end and step of the variance grid when the variance is unknown.
    pub vmax: f64,
    pub vstep: f64,
    pub music_resolution: usize,
}

impl PhaseConfig {
    pub fn new(order: usize, trials: usize, known_variance: bool, seed: u64) -> Self {
        Self {
            order,
            trials,
            log_srf: (0.0, 3.0),
            log_snr: (2.0, 10.0),
            known_variance,
            seed,
            vmax: 2.0,
            vstep: 0.02,
            music_resolution: DEFAULT_RESOLUTION,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidArgument(format!("phase transition needs k >= 2, got {}", self.order)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        for (lo, hi) in [self.log_srf, self.log_snr] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("empty region [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Unit variance for every phase-transition trial, so `v = 1/2`.
pub const PHASE_MODULATION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub log_srf: f64,
    pub log_snr: f64,
    pub srf: f64,
    pub snr: f64,
    pub d_min: f64,
    pub sigma: f64,
    pub omega: f64,
    pub k_true: usize,
    /// `0` when no ratio cell passed the threshold.
    pub k_hat: usize,
    pub v_hat: Option<f64>,
    pub w1: Option<f64>,
    pub svr_ms: f64,
    pub music_ms: f64,
    pub weights_ms: f64,
    pub success: bool,
}

/// One trial at a fixed point of the `(log SRF, log SNR)` plane.
pub fn phase_point(
    config: &PhaseConfig,
    log_srf: f64,
    log_snr: f64,
    trial: usize,
    seed: u64,
) -> Result<TrialRecord> {
    let k = config.order;
    let v = PHASE_MODULATION;
    let omega = optimal_cutoff(k, v)?;
    let srf = log_srf.exp();
    let snr = log_snr.exp();
    let d_min = PI / (srf * omega);
    let centre = 0.5 * (k - 1) as f64;
    let means: Vec<f64> = (0..k).map(|i| (i as f64 - centre) * d_min).collect();
    let mixture = GaussianMixture::from_modulation(means, vec![1.0 / k as f64; k], v)?;
    let sigma = mixture.min_weight() / snr;

    let grid = FourierGrid::new(omega, k)?;
    let (lo, hi) = grid.mean_range();
    if mixture.means().iter().any(|m| *m < lo || *m >= hi) {
        return Err(Error::InvalidArgument(format!("means leave the identifiable range at SRF {srf}")));
    }
    let data = synth_fourier(&mixture, &grid, sigma, child_seed(seed, 1))?;
    let svr = if config.known_variance {
        SvrConfig::new(vec![v], 0.0, None)?
    } else {
        SvrConfig::new(candidate_grid(config.vmax, config.vstep)?, 2.0 * sigma, None)?
    };
    let pipeline = PipelineConfig {
        cutoff: omega,
        half_count: k,
        svr,
        music_resolution: config.music_resolution,
    };

    let mut record = TrialRecord {
        trial,
        seed,
        log_srf,
        log_snr,
        srf,
        snr,
        d_min,
        sigma,
        omega,
        k_true: k,
        k_hat: 0,
        v_hat: None,
        w1: None,
        svr_ms: 0.0,
        music_ms: 0.0,
        weights_ms: 0.0,
        success: false,
    };
    match estimate_from_fourier(&data, &pipeline) {
        Ok(r) => {
            record.k_hat = r.diagnostics.svr_order;
            record.v_hat = Some(r.v);
            record.w1 = Some(wasserstein1(&mixture.mixing_distribution(), &r.mixing_distribution()?));
            record.svr_ms = r.diagnostics.timings.svr_ms;
            record.music_ms = r.diagnostics.timings.music_ms;
            record.weights_ms = r.diagnostics.timings.weights_ms;
            record.success = record.k_hat == k;
        }
        Err(Error::BelowThreshold { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(record)
}

/// Trial `id` of a phase-transition run, with `(log SRF, log SNR)` drawn
/// uniformly from the configured region.
pub fn phase_trial(config: &PhaseConfig, trial: usize) -> Result<TrialRecord> {
    let seed = child_seed(config.seed, trial as u64);
    let mut r = rng(seed);
    let log_srf = config.log_srf.0 + (config.log_srf.1 - config.log_srf.0) * r.random::<f64>();
    let log_snr = config.log_snr.0 + (config.log_snr.1 - config.log_snr.0) * r.random::<f64>();
    phase_point(config, log_srf, log_snr, trial, seed)
}

pub fn phase_transition(config: &PhaseConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| phase_trial(config, t))
        .collect()
}

/// Success rate over `trials` runs at one fixed point.
pub fn corner_probe(config: &PhaseConfig, log_srf: f64, log_snr: f64, trials: usize) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|t| phase_point(config, log_srf, log_snr, t, child_seed(config.seed, t as u64)))
        .collect::<Result<_>>()?;
    Ok(success_rate(&records))
}

pub fn success_rate(records: &[TrialRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.success).count() as f64 / records.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub intercept: f64,
    pub srf_coef: f64,
    pub snr_coef: f64,
    /// Slope of the 50% line in the `(log SRF, log SNR)` plane.
    pub slope: f64,
    pub iterations: usize,
}

/// Ridge-regularised logistic regression of success on
/// `(1, log SRF, log SNR)` by iteratively reweighted least squares. The ridge
/// keeps the fit finite when the two classes are separable.
pub fn logistic_fit(records: &[TrialRecord]) -> Result<LogisticFit> {
    const RIDGE: f64 = 1e-3;
    if records.is_empty() {
        return Err(Error::InvalidArgument("no trials to fit".into()));
    }
    let x = DMatrix::from_fn(records.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => records[i].log_srf,
        _ => records[i].log_snr,
    });
    let y = DVector::from_iterator(records.len(), records.iter().map(|r| if r.success { 1.0 } else { 0.0 }));
    let mut beta = DVector::zeros(3);
    let mut iterations = 0;
    for _ in 0..200 {
        iterations += 1;
        let eta = &x * &beta;
        let p = eta.map(|e: f64| 1.0 / (1.0 + (-e).exp()));
        let w = p.map(|q| (q * (1.0 - q)).max(1e-12));
        let mut hessian = x.transpose() * DMatrix::from_diagonal(&w) * &x;
        for d in 0..3 {
            hessian[(d, d)] += RIDGE;
        }
        let gradient = x.transpose() * (&y - &p) - &beta * RIDGE;
        let step = hessian
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("logistic fit lost positive definiteness".into()))?
            .solve(&gradient);
        beta += &step;
        if step.amax() < 1e-10 {
            break;
        }
    }
    Ok(LogisticFit {
        intercept: beta[0],
        srf_coef: beta[1],
        snr_coef: beta[2],
        slope: -beta[1] / beta[2],
        iterations,
    })
}

/// Success rates in `bins` equal-width log-SNR bins over `[lo, hi]`.
pub fn snr_bins(records: &[TrialRecord], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut hits = vec![0usize; bins];
    let mut counts = vec![0usize; bins];
    for r in records {
        let b = (((r.log_snr - lo) / (hi - lo)) * bins as f64).floor();
        let b = (b.max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
        hits[b] += r.success as usize;
    }
    hits.iter()
        .zip(&counts)
        .map(|(&h, &c)| if c == 0 { 0.0 } else { h as f64 / c as f64 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub order: usize,
    pub trials: usize,
    pub known_variance: bool,
    pub seed: u64,
    pub success_rate: f64,
    pub fit: LogisticFit,
    pub expected_slope: f64,
    pub snr_bin_success: Vec<f64>,
}

pub fn phase_summary(config: &PhaseConfig, records: &[TrialRecord]) -> Result<PhaseSummary> {
    Ok(PhaseSummary {
        order: config.order,
        trials: records.len(),
        known_variance: config.known_variance,
        seed: config.seed,
        success_rate: success_rate(records),
        fit: logistic_fit(records)?,
        expected_slope: 2.0 * config.order as f64,
        snr_bin_success: snr_bins(records, config.log_snr.0, config.log_snr.1, 5),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(
        "trial,seed,log_srf,log_snr,srf,snr,d_min,sigma,omega,k_true,k_hat,v_hat,w1,svr_ms,music_ms,weights_ms,success\n",
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},{:.6},{:.6},{:.6},{}",
            r.trial,
            r.seed,
            r.log_srf,
            r.log_snr,
            r.srf,
            r.snr,
            r.d_min,
            r.sigma,
            r.omega,
            r.k_true,
            r.k_hat,
            opt(r.v_hat),
            opt(r.w1),
            r.svr_ms,
            r.music_ms,
            r.weights_ms,
            r.success
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Comparison with EM

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffRule {
    Fixed(f64),
    /// Bisection against the floor `noise_multiplier/√n`.
    Search {
        iterations: usize,
        initial: f64,
        #[serde(default = "unit")]
        noise_multiplier: f64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    Fixed(f64),
    /// `T = c/√n`.
    PerSample(f64),
}

/// Settings of the proposed estimator inside a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedSettings {
    pub cutoff: CutoffRule,
    pub half_count: usize,
    pub vmax: f64,
    pub vstep: f64,
    pub threshold: ThresholdRule,
    pub known_order: Option<usize>,
    pub music_resolution: usize,
}

impl ProposedSettings {
    /// Two-component runs with known order: bisection cutoff from `Ω = 10`
    /// with 8 steps and floor `8/√n`, `K = 4`, grid `[0, 2]` step `0.01`,
    /// `T = 0`.
    pub fn known_two_components() -> Self {
        Self {
            cutoff: CutoffRule::Search {
                iterations: 8,
                initial: 10.0,
                noise_multiplier: 8.0,
            },
            half_count: 4,
            vmax: 2.0,
            vstep: 0.01,
            threshold: ThresholdRule::Fixed(0.0),
            known_order: Some(2),
            music_resolution: DEFAULT_RESOLUTION,
        }
    }

    /// Separation sweep: as above with `K = 2` and unknown order.
    pub fn separation_sweep() -> Self {
        Self {
            half_count: 2,
            known_order: None,
            ..Self::known_two_components()
        }
    }

    fn config_for(&self, samples: &SampleSet) -> Result<PipelineConfig> {
        let cutoff = match self.cutoff {
            CutoffRule::Fixed(c) => c,
            CutoffRule::Search {
                iterations,
                initial,
                noise_multiplier,
            } => cutoff_search_scaled(samples, iterations, initial, noise_multiplier)?,
        };
        let threshold = match self.threshold {
            ThresholdRule::Fixed(t) => t,
            ThresholdRule::PerSample(c) => crate::svr::sample_threshold(c, samples.len()),
        };
        let svr = SvrConfig::new(candidate_grid(self.vmax, self.vstep)?, threshold, self.known_order)?;
        Ok(PipelineConfig {
            cutoff,
            half_count: self.half_count,
            svr,
            music_resolution: self.music_resolution,
        })
    }

    /// Cutoff selection plus the estimator.
    pub fn run(&self, samples: &SampleSet) -> Result<EstimationResult> {
        estimate(samples, &self.config_for(samples)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub model: GaussianMixture,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub proposed: ProposedSettings,
    pub em: EmConfig,
    /// Orders of the EM fits run next to the proposed estimator.
    pub em_orders: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub separation: Option<f64>,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub method: String,
    pub order: usize,
    pub var_rel_err: f64,
    pub w1: f64,
    pub runtime_ms: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

/// Plug-in log-likelihood; weights may sit on the boundary of the simplex.
fn plug_in_loglik(means: &[f64], weights: &[f64], variance: f64, samples: &SampleSet) -> f64 {
    if !(variance > 0.0) {
        return f64::NEG_INFINITY;
    }
    let state = EmState {
        means: means.to_vec(),
        weights: weights.to_vec(),
        variance,
    };
    e_step(&state, samples.values()).1
}

fn record(
    model: &GaussianMixture,
    samples: &SampleSet,
    (separation, n, trial, seed): (Option<f64>, usize, usize, u64),
    method: String,
    (means, weights, variance): (&[f64], &[f64], f64),
    runtime_ms: f64,
) -> Result<ComparisonRecord> {
    let loglik = plug_in_loglik(means, weights, variance, samples);
    let card = ScoreCard::from_loglik(loglik, means.len(), samples.len());
    let estimate = crate::model::MixingDistribution::new(means.to_vec(), weights.to_vec())?;
    Ok(ComparisonRecord {
        separation,
        n,
        trial,
        seed,
        method,
        order: means.len(),
        var_rel_err: relative_error(variance, model.variance())?,
        w1: wasserstein1(&model.mixing_distribution(), &estimate),
        runtime_ms,
        loglik: card.loglik,
        aic: card.aic,
        bic: card.bic,
    })
}

/// One `(n, trial)` cell: the proposed estimator followed by every EM fit on
/// the same samples.
pub fn compare_trial(
    config: &CompareConfig,
    separation: Option<f64>,
    n: usize,
    trial: usize,
) -> Result<Vec<ComparisonRecord>> {
    let seed = child_seed(child_seed(config.seed, n as u64), trial as u64);
    let samples = config.model.sample(n, seed);
    let key = (separation, n, trial, seed);
    let mut out = Vec::with_capacity(1 + config.em_orders.len());

    let start = Instant::now();
    let r = config.proposed.run(&samples)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    out.push(record(
        &config.model,
        &samples,
        key,
        "proposed".into(),
        (&r.means, &r.weights, r.variance),
        ms,
    )?);

    for &k in &config.em_orders {
        let start = Instant::now();
        let fit = em_fit(&samples, k, child_seed(seed, 100 + k as u64), &config.em)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let m = &fit.mixture;
        out.push(record(
            &config.model,
            &samples,
            key,
            format!("em{k}"),
            (m.means(), m.weights(), m.variance()),
            ms,
        )?);
    }
    Ok(out)
}

fn validate_compare(config: &CompareConfig) -> Result<()> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if config.sizes.is_empty() || config.sizes.contains(&0) {
        return Err(Error::InvalidArgument("sample sizes must be non-empty and positive".into()));
    }
    Ok(())
}

fn run_cells(config: &CompareConfig, separation: Option<f64>) -> Result<Vec<ComparisonRecord>> {
    let cells: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let nested: Vec<Vec<ComparisonRecord>> = cells
        .into_par_iter()
        .map(|(n, t)| compare_trial(config, separation, n, t))
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

pub fn compare_em(config: &CompareConfig) -> Result<Vec<ComparisonRecord>> {
    validate_compare(config)?;
    run_cells(config, None)
}

/// Two equal-weight unit-variance components at `±s/2` for each separation
/// `s`; all other settings from `base` (whose model is ignored).
pub fn separation_sweep(base: &CompareConfig, separations: &[f64]) -> Result<Vec<ComparisonRecord>> {
    validate_compare(base)?;
    if separations.is_empty() {
        return Err(Error::InvalidArgument("no separations given".into()));
    }
    let mut out = Vec::new();
    for (i, &s) in separations.iter().enumerate() {
        let config = CompareConfig {
            model: GaussianMixture::equal_weights(vec![-0.5 * s, 0.5 * s], 1.0)?,
            seed: child_seed(base.seed, 1_000 + i as u64),
            ..base.clone()
        };
        out.extend(run_cells(&config, Some(s))?);
    }
    Ok(out)
}

pub fn comparison_csv(records: &[ComparisonRecord]) -> String {
    let sweep = records.iter().any(|r| r.separation.is_some());
    let mut out = String::new();
    if sweep {
        out.push_str("separation,");
    }
    out.push_str("n,trial,method,var_rel_err,w1,runtime_ms,loglik,aic,bic\n");
    for r in records {
        if sweep {
            let _ = write!(out, "{},", opt(r.separation));
        }
        let _ = writeln!(
            out,
            "{},{},{},{:.16e},{:.16e},{:.6},{:.16e},{:.16e},{:.16e}",
            r.n, r.trial, r.method, r.var_rel_err, r.w1, r.runtime_ms, r.loglik, r.aic, r.bic
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos - pos.floor());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                median: f64::NAN,
                q25: f64::NAN,
                q75: f64::NAN,
            };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            q25: quantile(&v, 0.25),
            q75: quantile(&v, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub separation: Option<f64>,
    pub n: usize,
    pub method: String,
    pub trials: usize,
    /// Share of trials whose order equals the true one.
    pub order_success: f64,
    pub var_rel_err: Stats,
    pub w1: Stats,
    pub runtime_ms: Stats,
    pub loglik: Stats,
    pub aic: Stats,
    pub bic: Stats,
}

/// Mean over trials of `EM - proposed` for log-likelihood, AIC and BIC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub separation: Option<f64>,
    pub n: usize,
    pub method: String,
    pub delta_ll: f64,
    pub delta_aic: f64,
    pub delta_bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub groups: Vec<GroupSummary>,
    pub deltas: Vec<DeltaSummary>,
}

pub fn summarize_comparison(records: &[ComparisonRecord], true_order: usize) -> ComparisonSummary {
    let mut keys: Vec<(Option<f64>, usize, String)> = Vec::new();
    for r in records {
        let key = (r.separation, r.n, r.method.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let column = |rs: &[&ComparisonRecord], f: fn(&ComparisonRecord) -> f64| -> Stats {
        Stats::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>())
    };
    let mut groups = Vec::new();
    let mut deltas = Vec::new();
    for (separation, n, method) in keys {
        let rs: Vec<&ComparisonRecord> = records
            .iter()
            .filter(|r| r.separation == separation && r.n == n && r.method == method)
            .collect();
        groups.push(GroupSummary {
            separation,
            n,
            method: method.clone(),
            trials: rs.len(),
            order_success: rs.iter().filter(|r| r.order == true_order).count() as f64 / rs.len() as f64,
            var_rel_err: column(&rs, |r| r.var_rel_err),
            w1: column(&rs, |r| r.w1),
            runtime_ms: column(&rs, |r| r.runtime_ms),
            loglik: column(&rs, |r| r.loglik),
            aic: column(&rs, |r| r.aic),
            bic: column(&rs, |r| r.bic),
        });
        if method == "proposed" {
            continue;
        }
        let (mut dl, mut da, mut db, mut count) = (0.0, 0.0, 0.0, 0usize);
        for r in &rs {
            if let Some(p) = records.iter().find(|p| {
                p.method == "proposed" && p.separation == separation && p.n == n && p.trial == r.trial
            }) {
                dl += r.loglik - p.loglik;
                da += r.aic - p.aic;
                db += r.bic - p.bic;
                count += 1;
            }
        }
        if count > 0 {
            let c = count as f64;
            deltas.push(DeltaSummary {
                separation,
                n,
                method,
                delta_ll: dl / c,
                delta_aic: da / c,
                delta_bic: db / c,
            });
        }
    }
    ComparisonSummary { groups, deltas }
}
