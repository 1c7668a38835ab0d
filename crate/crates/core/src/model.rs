//! Gaussian mixtures with a shared variance, their mixing distributions, and
//! sample sets.
//!
//! Sample-side code speaks the variance `s²`; Fourier-side code speaks the
//! modulation parameter `v = s²/2`, the coefficient of `-ω²` in the
//! characteristic function. [`GaussianMixture`] exposes both.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Tolerance accepted on the weight sum of user-supplied mixtures before
/// renormalisation.
const WEIGHT_SUM_INPUT_TOL: f64 = 1e-9;

/// Density of `N(mean, variance)` at `x`.
pub fn gaussian_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct GaussianMixture {
    means: Vec<f64>,
    weights: Vec<f64>,
    variance: f64,
}

/// Wire form of [`GaussianMixture`]: `{"means": [...], "weights": [...], "variance": s²}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub means: Vec<f64>,
    pub weights: Vec<f64>,
    pub variance: f64,
}

impl TryFrom<MixtureSpec> for GaussianMixture {
    type Error = Error;

    fn try_from(spec: MixtureSpec) -> Result<Self> {
        GaussianMixture::new(spec.means, spec.weights, spec.variance)
    }
}

impl From<GaussianMixture> for MixtureSpec {
    fn from(m: GaussianMixture) -> Self {
        MixtureSpec {
            means: m.means,
            weights: m.weights,
            variance: m.variance,
        }
    }
}

impl GaussianMixture {
    /// Builds a mixture from means, weights and the shared variance `s²`.
    ///
    /// Weights must be positive and sum to one within `1e-9`; they are
    /// renormalised so the stored sum is one to rounding. Means must be finite
    /// and pairwise distinct.
    pub fn new(means: Vec<f64>, weights: Vec<f64>, variance: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidMixture("at least one component required".into()));
        }
        if means.len() != weights.len() {
            return Err(Error::InvalidMixture(format!(
                "{} means but {} weights",
                means.len(),
                weights.len()
            )));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidMixture(format!("variance must be positive, got {variance}")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidMixture("means must be finite".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidMixture("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_INPUT_TOL {
            return Err(Error::InvalidMixture(format!("weights sum to {total}, not 1")));
        }
        for (i, a) in means.iter().enumerate() {
            if means[i + 1..].iter().any(|b| b == a) {
                return Err(Error::InvalidMixture(format!("duplicate mean {a}")));
            }
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            means,
            weights,
            variance,
        })
    }

    /// Builds a mixture from the modulation parameter `v = s²/2`.
    pub fn from_modulation(means: Vec<f64>, weights: Vec<f64>, v: f64) -> Result<Self> {
        Self::new(means, weights, 2.0 * v)
    }

    pub fn equal_weights(means: Vec<f64>, variance: f64) -> Result<Self> {
        let k = means.len().max(1);
        Self::new(means, vec![1.0 / k as f64; k], variance)
    }

    pub fn order(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The shared variance `s²`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// The modulation parameter `v = s²/2`.
    pub fn modulation(&self) -> f64 {
        self.variance / 2.0
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Minimum pairwise distance between means; `+∞` for a single component.
    pub fn min_separation(&self) -> f64 {
        let mut sorted = self.means.clone();
        sorted.sort_by(f64::total_cmp);
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.means
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| w * gaussian_density(x, m, self.variance))
            .sum()
    }

    /// `exp(-v ω²) Σ π_i exp(i μ_i ω)`.
    pub fn characteristic_function(&self, omega: f64) -> Complex64 {
        let envelope = (-self.modulation() * omega * omega).exp();
        let sum: Complex64 = self
            .means
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| Complex64::from_polar(w, m * omega))
            .sum();
        sum * envelope
    }

    /// Draws `n` samples: a component index from the weights, then a
    /// Gaussian draw around its mean.
    pub fn sample(&self, n: usize, seed: u64) -> SampleSet {
        let mut rng = seed::rng(seed);
        let sd = self.variance.sqrt();
        let mut cumulative = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cumulative.push(acc);
        }
        let last = cumulative.len() - 1;
        let values = (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                let idx = cumulative.partition_point(|&c| c <= u).min(last);
                let z: f64 = rng.sample(StandardNormal);
                self.means[idx] + sd * z
            })
            .collect();
        SampleSet {
            values,
            seed: Some(seed),
            reads: AtomicUsize::new(0),
        }
    }

    pub fn mixing_distribution(&self) -> MixingDistribution {
        MixingDistribution::new(self.means.clone(), self.weights.clone())
            .expect("mixture weights are a valid distribution")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mixture serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Discrete measure `Σ π_i δ_{μ_i}` with support sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl MixingDistribution {
    /// Zero weights are allowed; negative weights are not. Atoms are sorted
    /// by location with their weights carried along.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} atoms with {} weights",
                support.len(),
                weights.len()
            )));
        }
        if support.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("support must be finite".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidDistribution("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        let mut atoms: Vec<(f64, f64)> = support.into_iter().zip(weights).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (support, weights) = atoms.into_iter().unzip();
        Ok(Self { support, weights })
    }

    pub fn dirac(x: f64) -> Self {
        Self {
            support: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, t: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(x, _)| **x <= t)
            .map(|(_, w)| w)
            .sum()
    }
}

/// I.i.d. draws from a mixture, or externally supplied data.
///
/// Reads through [`SampleSet::values`] are counted so callers can check how
/// often an estimator touches the raw data.
#[derive(Debug)]
pub struct SampleSet {
    values: Vec<f64>,
    seed: Option<u64>,
    reads: AtomicUsize,
}

impl Clone for SampleSet {
    fn clone(&self) -> Self {
        Self {
            values: self.values.clone(),
            seed: self.seed,
            reads: AtomicUsize::new(0),
        }
    }
}

impl PartialEq for SampleSet {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.seed == other.seed
    }
}

impl SampleSet {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySamples);
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        Ok(Self {
            values,
            seed: None,
            reads: AtomicUsize::new(0),
        })
    }

    pub fn values(&self) -> &[f64] {
        self.reads.fetch_add(1, Ordering::Relaxed);
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Number of times [`SampleSet::values`] has been called.
    pub fn read_count(&self) -> usize {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance (divides by `n`).
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / self.values.len() as f64
    }

    /// One value per line, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        for x in &self.values {
            let _ = writeln!(out, "{x:.16e}");
        }
        out
    }

    /// Parses one float per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let x: f64 = line
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: '{line}' is not a number", lineno + 1)))?;
            values.push(x);
        }
        Self::from_values(values)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_component() -> GaussianMixture {
        GaussianMixture::equal_weights(vec![-0.5, 0.5], 1.0).unwrap()
    }

    #[test]
    fn standard_normal_peak() {
        let m = GaussianMixture::new(vec![0.0], vec![1.0], 1.0).unwrap();
        assert!((m.density(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn symmetric_mixture_density_is_even() {
        let m = GaussianMixture::equal_weights(vec![-1.0, 1.0], 1.0).unwrap();
        for x in [0.1, 0.7, 1.3, 2.9] {
            assert!((m.density(x) - m.density(-x)).abs() < 1e-15);
        }
    }

    #[test]
    fn density_matches_sum_of_two_gaussians() {
        // 0.5 (φ(0.8) + φ(-0.2)), φ the standard normal density
        let m = two_component();
        assert!((m.density(0.3) - 0.340_367_123_368_469_3).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        let m = GaussianMixture::new(vec![-2.0, 0.3, 1.7], vec![0.2, 0.5, 0.3], 0.6).unwrap();
        let s = m.variance().sqrt();
        let (a, b) = (-2.0 - 8.0 * s, 1.7 + 8.0 * s);
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut total = 0.5 * (m.density(a) + m.density(b));
        for i in 1..n {
            total += m.density(a + i as f64 * h);
        }
        assert!((total * h - 1.0).abs() < 1e-6);
    }

    #[test]
    fn characteristic_function_basics() {
        let m = GaussianMixture::new(vec![-1.3, 0.2, 2.5], vec![0.3, 0.3, 0.4], 0.8).unwrap();
        let at0 = m.characteristic_function(0.0);
        assert_eq!(at0.re, 1.0);
        assert_eq!(at0.im, 0.0);
        for w in [0.1, 0.5, 1.7, 4.0] {
            let a = m.characteristic_function(w);
            let b = m.characteristic_function(-w);
            assert!((a - b.conj()).norm() < 1e-15);
            assert!(a.norm() <= 1.0);
        }

        let std = GaussianMixture::new(vec![0.0], vec![1.0], 1.0).unwrap();
        for w in [0.3, 1.0, 2.2] {
            let c = std.characteristic_function(w);
            assert!((c.re - (-w * w / 2.0).exp()).abs() < 1e-15);
            assert_eq!(c.im, 0.0);
        }
    }

    #[test]
    fn symmetric_pair_gives_cosine() {
        let a = 0.9;
        let m = GaussianMixture::equal_weights(vec![-a, a], 0.7).unwrap();
        let v = m.modulation();
        for w in [0.2, 1.1, 2.6] {
            let c = m.characteristic_function(w);
            let expected = (-v * w * w).exp() * (a * w).cos();
            assert!((c.re - expected).abs() < 1e-15);
            assert!(c.im.abs() < 1e-15);
        }
    }

    #[test]
    fn modulation_is_half_variance() {
        let m = GaussianMixture::from_modulation(vec![0.0, 1.0], vec![0.5, 0.5], 0.45).unwrap();
        assert_eq!(m.variance(), 0.9);
        assert_eq!(m.modulation(), 0.45);
    }

    #[test]
    fn sampling_moments() {
        let m = GaussianMixture::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let s = m.sample(100_000, 11);
        assert!(s.mean().abs() < 0.02);
        assert!((s.variance() - 1.0).abs() < 0.05);

        // s² + Σπμ² - (Σπμ)² = 1 + 0.25
        let s = two_component().sample(100_000, 12);
        assert!((s.variance() - 1.25).abs() < 0.05);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = two_component();
        assert_eq!(m.sample(500, 3), m.sample(500, 3));
        assert_ne!(m.sample(500, 3).values(), m.sample(500, 4).values());
    }

    #[test]
    fn mixing_distribution_sorts_atoms() {
        let m = GaussianMixture::new(vec![2.0, -1.0, 0.5], vec![0.5, 0.2, 0.3], 1.0).unwrap();
        let nu = m.mixing_distribution();
        assert_eq!(nu.support(), &[-1.0, 0.5, 2.0]);
        assert_eq!(nu.weights(), &[0.2, 0.3, 0.5]);

        let single = GaussianMixture::new(vec![3.0], vec![1.0], 1.0).unwrap().mixing_distribution();
        assert_eq!(single.weights(), &[1.0]);

        let five = GaussianMixture::equal_weights(vec![-4.0, -2.0, 0.0, 2.0, 4.0], 1.0)
            .unwrap()
            .mixing_distribution();
        assert_eq!(five.support(), &[-4.0, -2.0, 0.0, 2.0, 4.0]);
        assert!(five.weights().iter().all(|&w| (w - 0.2).abs() < 1e-15));
    }

    #[test]
    fn rejects_invalid_mixtures() {
        assert!(GaussianMixture::new(vec![], vec![], 1.0).is_err());
        assert!(GaussianMixture::new(vec![0.0, 1.0], vec![1.0], 1.0).is_err());
        assert!(GaussianMixture::new(vec![0.0, 0.0], vec![0.5, 0.5], 1.0).is_err());
        assert!(GaussianMixture::new(vec![0.0, 1.0], vec![0.7, 0.7], 1.0).is_err());
        assert!(GaussianMixture::new(vec![0.0, 1.0], vec![1.0, 0.0], 1.0).is_err());
        assert!(GaussianMixture::new(vec![0.0], vec![1.0], 0.0).is_err());
    }

    #[test]
    fn json_and_text_round_trip() {
        let m = GaussianMixture::new(vec![-0.5, 0.5], vec![0.25, 0.75], 1.5).unwrap();
        let json = m.to_json();
        assert!(json.contains("\"variance\""));
        assert_eq!(GaussianMixture::from_json(&json).unwrap(), m);

        let s = m.sample(50, 9);
        let back = SampleSet::from_text(&s.to_text()).unwrap();
        assert_eq!(back.values(), s.values());
        assert!(SampleSet::from_text("\n# nothing\n").is_err());
        assert!(SampleSet::from_text("1.0\nabc\n").is_err());
    }

    #[test]
    fn read_counter_tracks_access() {
        let s = SampleSet::from_values(vec![1.0, 2.0]).unwrap();
        assert_eq!(s.read_count(), 0);
        let _ = s.values();
        let _ = s.values();
        assert_eq!(s.read_count(), 2);
        assert_eq!(s.len(), 2);
        assert_eq!(s.read_count(), 2);
    }
}
