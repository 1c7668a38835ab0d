//! Transport distance between mixing distributions and information criteria.

use serde::{Deserialize, Serialize};

use crate::em::log_likelihood;
use crate::error::{Error, Result};
use crate::model::{GaussianMixture, MixingDistribution, SampleSet};

/// `∫ |F_a(t) - F_b(t)| dt`, integrated exactly between the merged atoms
/// where both distribution functions are constant.
pub fn wasserstein1(a: &MixingDistribution, b: &MixingDistribution) -> f64 {
    let (xa, wa) = (a.support(), a.weights());
    let (xb, wb) = (b.support(), b.weights());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut last: Option<f64> = None;
    let mut total = 0.0;
    while i < xa.len() || j < xb.len() {
        let t = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        if let Some(prev) = last {
            total += (fa - fb).abs() * (t - prev);
        }
        while i < xa.len() && xa[i] == t {
            fa += wa[i];
            i += 1;
        }
        while j < xb.len() && xb[j] == t {
            fb += wb[j];
            j += 1;
        }
        last = Some(t);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Free parameters: `k` means, `k - 1` weights and one variance.
    pub p: usize,
    pub n: usize,
}

impl ScoreCard {
    pub fn from_loglik(loglik: f64, order: usize, n: usize) -> Self {
        let p = 2 * order;
        let pf = p as f64;
        Self {
            loglik,
            aic: 2.0 * pf - 2.0 * loglik,
            bic: pf * (n as f64).ln() - 2.0 * loglik,
            p,
            n,
        }
    }
}

/// Plug-in log-likelihood of `mixture` on `samples` with AIC and BIC.
pub fn scorecard(mixture: &GaussianMixture, samples: &SampleSet) -> ScoreCard {
    ScoreCard::from_loglik(log_likelihood(mixture, samples), mixture.order(), samples.len())
}

pub fn relative_error(estimate: f64, truth: f64) -> Result<f64> {
    if truth == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((estimate - truth).abs() / truth.abs())
}
