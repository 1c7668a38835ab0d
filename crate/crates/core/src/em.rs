//! Expectation-maximisation for Gaussian mixtures sharing one variance.

use std::f64::consts::PI;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GaussianMixture, SampleSet};
use crate::seed;

const COLLAPSE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// Stop when the log-likelihood grows by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub mixture: GaussianMixture,
    /// Log-likelihood after every E-step; the last entry belongs to
    /// `mixture`.
    pub trace: Vec<f64>,
    /// Completed M-steps.
    pub iterations: usize,
    pub converged: bool,
}

impl EmFit {
    pub fn log_likelihood(&self) -> f64 {
        *self.trace.last().expect("trace is never empty")
    }
}

/// Parameters of one EM iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct EmState {
    pub means: Vec<f64>,
    pub weights: Vec<f64>,
    pub variance: f64,
}

/// Responsibilities (`n × k`, row-major) and the log-likelihood of `state`.
pub fn e_step(state: &EmState, x: &[f64]) -> (Vec<f64>, f64) {
    let mut resp = vec![0.0; x.len() * state.means.len()];
    let ll = e_step_into(state, x, &mut resp);
    (resp, ll)
}

fn e_step_into(state: &EmState, x: &[f64], resp: &mut [f64]) -> f64 {
    let k = state.means.len();
    let log_norm = -0.5 * (2.0 * PI * state.variance).ln();
    let inv = 0.5 / state.variance;
    let offset: Vec<f64> = state.weights.iter().map(|w| w.ln() + log_norm).collect();
    let mut ll = 0.0;
    for (row, &xj) in resp.chunks_exact_mut(k).zip(x) {
        let mut top = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, ((r, &mu), &c)) in row.iter_mut().zip(&state.means).zip(&offset).enumerate() {
            let d = xj - mu;
            *r = c - d * d * inv;
            if *r > top {
                top = *r;
                arg = i;
            }
        }
        let mut total = 0.0;
        for (i, r) in row.iter_mut().enumerate() {
            *r = if i == arg { 1.0 } else { (*r - top).exp() };
            total += *r;
        }
        let scale = 1.0 / total;
        for r in row.iter_mut() {
            *r *= scale;
        }
        ll += top + total.ln();
    }
    ll
}

/// Weights, means and pooled variance from responsibilities. A component
/// with no responsibility keeps its previous mean.
pub fn m_step(resp: &[f64], x: &[f64], previous_means: &[f64]) -> Result<EmState> {
    let k = previous_means.len();
    let n = x.len() as f64;
    let mut mass = vec![0.0; k];
    let mut moment = vec![0.0; k];
    for (row, &xj) in resp.chunks(k).zip(x) {
        for i in 0..k {
            mass[i] += row[i];
            moment[i] += row[i] * xj;
        }
    }
    let means: Vec<f64> = (0..k)
        .map(|i| if mass[i] > 0.0 { moment[i] / mass[i] } else { previous_means[i] })
        .collect();
    let mut spread = 0.0;
    for (row, &xj) in resp.chunks(k).zip(x) {
        for i in 0..k {
            let d = xj - means[i];
            spread += row[i] * d * d;
        }
    }
    let variance = spread / n;
    if !(variance >= COLLAPSE) {
        return Err(Error::Collapse(variance));
    }
    Ok(EmState {
        means,
        weights: mass.iter().map(|m| m / n).collect(),
        variance,
    })
}

/// `Σ_j log Σ_i π_i g(x_j; μ_i, s²)`.
pub fn log_likelihood(mixture: &GaussianMixture, samples: &SampleSet) -> f64 {
    let state = EmState {
        means: mixture.means().to_vec(),
        weights: mixture.weights().to_vec(),
        variance: mixture.variance(),
    };
    e_step(&state, samples.values()).1
}

/// Initial iterate: `k` samples drawn without replacement as means, uniform
/// weights, and the sample variance.
pub fn initial_state(x: &[f64], order: usize, seed: u64) -> Result<EmState> {
    if order == 0 {
        return Err(Error::InvalidArgument("EM needs k >= 1".into()));
    }
    if x.len() < order {
        return Err(Error::InvalidArgument(format!("EM needs n >= k, got n = {} and k = {order}", x.len())));
    }
    let mut rng = seed::rng(seed);
    let means = index::sample(&mut rng, x.len(), order).into_iter().map(|i| x[i]).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let variance = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !(variance >= COLLAPSE) {
        return Err(Error::Collapse(variance));
    }
    Ok(EmState {
        means,
        weights: vec![1.0 / order as f64; order],
        variance,
    })
}

pub fn em_fit(samples: &SampleSet, order: usize, seed: u64, config: &EmConfig) -> Result<EmFit> {
    let x = samples.values();
    let mut state = initial_state(x, order, seed)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut resp = vec![0.0; x.len() * order];
    loop {
        let ll = e_step_into(&state, x, &mut resp);
        if let Some(&previous) = trace.last() {
            if ll - previous < config.tol {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations == config.max_iter {
            break;
        }
        state = m_step(&resp, x, &state.means)?;
        iterations += 1;
    }
    let mixture = GaussianMixture::new(state.means, state.weights, state.variance)?;
    Ok(EmFit {
        mixture,
        trace,
        iterations,
        converged,
    })
}
