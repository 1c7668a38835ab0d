//! Singular-value-ratio estimation of the modulation parameter and model
//! order.
//!
//! For each candidate `u` the singular values `σ(u,1) >= … >= σ(u,K+1)` of
//! `E(u) ∘ Hankel(Y)` are computed and the ratios
//! `r(u,l) = σ(u,l) / σ(u,l+1)`, `l = 1..=K`, are formed. The estimate is the
//! maximiser of `r` over all cells whose numerator exceeds the threshold `T`,
//! or over `r(·,k)` alone when the order `k` is known.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{ecf, FourierData, FourierGrid};
use crate::hankel::{check_modulation_range, modulated_singular_values};
use crate::model::SampleSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    candidates: Vec<f64>,
    threshold: f64,
    known_order: Option<usize>,
}

impl SvrConfig {
    /// `candidates` must be non-empty, finite, non-negative and strictly
    /// ascending; `threshold >= 0`.
    pub fn new(candidates: Vec<f64>, threshold: f64, known_order: Option<usize>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("candidate set is empty".into()));
        }
        if candidates.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return Err(Error::InvalidArgument("candidates must be finite and >= 0".into()));
        }
        if candidates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("candidates must be strictly ascending".into()));
        }
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
        }
        if known_order == Some(0) {
            return Err(Error::InvalidArgument("known order must be >= 1".into()));
        }
        Ok(Self {
            candidates,
            threshold,
            known_order,
        })
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn known_order(&self) -> Option<usize> {
        self.known_order
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = threshold;
        Self::new(self.candidates, self.threshold, self.known_order)
    }

    pub fn with_known_order(mut self, order: Option<usize>) -> Result<Self> {
        self.known_order = order;
        Self::new(self.candidates, self.threshold, self.known_order)
    }
}

/// Uniform candidate grid `0, step, 2·step, …` up to `max` (inclusive,
/// allowing for rounding).
pub fn candidate_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) || !(max.is_finite() && max >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad candidate grid: max {max}, step {step}")));
    }
    let count = (max / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| i as f64 * step).collect())
}

/// Uniform candidate grid over `[min, max]`.
pub fn candidate_range(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && min >= 0.0 && max >= min) {
        return Err(Error::InvalidArgument(format!("bad candidate range [{min}, {max}]")));
    }
    Ok(candidate_grid(max - min, step)?.into_iter().map(|x| min + x).collect())
}

/// `c / √n`, the sample-size dependent threshold.
pub fn sample_threshold(c: f64, n: usize) -> f64 {
    c / (n as f64).sqrt()
}

/// Ratio of consecutive singular values. A denominator at the rounding floor
/// `(K+1)·ε·σ_1` gives `+∞` when the numerator sits above the floor and `1`
/// when both do.
fn ratio(numerator: f64, denominator: f64, floor: f64) -> f64 {
    if denominator <= floor {
        if numerator > floor {
            f64::INFINITY
        } else {
            1.0
        }
    } else {
        numerator / denominator
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub u: f64,
    /// `σ(u,1..=K+1)`, descending.
    pub singular_values: Vec<f64>,
    /// `r(u,1..=K)`.
    pub ratios: Vec<f64>,
    /// `σ(u,l) > T` for `l = 1..=K`.
    pub passes: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrSurface {
    pub rows: Vec<SurfaceRow>,
    pub threshold: f64,
    pub known_order: Option<usize>,
    /// `(candidate index, order l)` of the maximiser, if any cell qualifies.
    pub selected: Option<(usize, usize)>,
}

impl SvrSurface {
    pub fn ratio(&self, candidate: usize, order: usize) -> f64 {
        self.rows[candidate].ratios[order - 1]
    }

    pub fn selected_u(&self) -> Option<f64> {
        self.selected.map(|(i, _)| self.rows[i].u)
    }

    pub fn selected_order(&self) -> Option<usize> {
        self.selected.map(|(_, l)| l)
    }

    pub fn selected_ratio(&self) -> Option<f64> {
        self.selected.map(|(i, l)| self.ratio(i, l))
    }

    /// Whether cell `(candidate, l)` may be selected.
    pub fn eligible(&self, candidate: usize, order: usize) -> bool {
        match self.known_order {
            Some(k) => order == k,
            None => self.rows[candidate].passes[order - 1],
        }
    }

    /// CSV with header `u,l,ratio,passes_threshold`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,l,ratio,passes_threshold\n");
        for row in &self.rows {
            for (l, (r, p)) in row.ratios.iter().zip(&row.passes).enumerate() {
                let _ = writeln!(out, "{:.16e},{},{:.16e},{}", row.u, l + 1, r, p);
            }
        }
        out
    }
}

/// Fills the ratio surface and selects its maximiser.
///
/// Cells are scanned by ascending `u`, then ascending `l`; a later cell
/// replaces the incumbent only if its ratio is strictly larger, so ties go
/// to the smallest `(u, l)`.
pub fn svr_surface(data: &FourierData, config: &SvrConfig) -> Result<SvrSurface> {
    let grid = data.grid();
    let k_max = grid.half_count();
    if let Some(k) = config.known_order {
        if k > k_max {
            return Err(Error::OrderOutOfRange {
                order: k,
                size: k_max + 1,
            });
        }
    }
    for &u in &config.candidates {
        check_modulation_range(grid, u)?;
    }
    let rows: Vec<SurfaceRow> = config
        .candidates
        .par_iter()
        .map(|&u| {
            let s = modulated_singular_values(data, u)?;
            let floor = (k_max + 1) as f64 * f64::EPSILON * s[0];
            let ratios = s.windows(2).map(|w| ratio(w[0], w[1], floor)).collect();
            let passes = s[..k_max].iter().map(|&x| x > config.threshold).collect();
            Ok(SurfaceRow {
                u,
                singular_values: s,
                ratios,
                passes,
            })
        })
        .collect::<Result<_>>()?;

    let mut surface = SvrSurface {
        rows,
        threshold: config.threshold,
        known_order: config.known_order,
        selected: None,
    };
    let mut best = f64::NEG_INFINITY;
    for i in 0..surface.rows.len() {
        for l in 1..=k_max {
            if surface.eligible(i, l) && surface.ratio(i, l) > best {
                best = surface.ratio(i, l);
                surface.selected = Some((i, l));
            }
        }
    }
    Ok(surface)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrEstimate {
    /// Estimated modulation parameter `v̂`; the variance estimate is `2v̂`.
    pub v: f64,
    pub order: usize,
    pub ratio: f64,
    pub surface: SvrSurface,
}

/// Variance and order from Fourier data.
pub fn estimate_fourier(data: &FourierData, config: &SvrConfig) -> Result<SvrEstimate> {
    let surface = svr_surface(data, config)?;
    match surface.selected {
        Some((i, l)) => Ok(SvrEstimate {
            v: surface.rows[i].u,
            order: l,
            ratio: surface.ratio(i, l),
            surface,
        }),
        None => Err(Error::BelowThreshold {
            threshold: config.threshold,
        }),
    }
}

/// Variance and order from raw samples: evaluates the empirical
/// characteristic function on `ω_q = qΩ/K` and delegates to
/// [`estimate_fourier`]. The Fourier data is returned for later stages.
pub fn estimate_samples(
    samples: &SampleSet,
    cutoff: f64,
    half_count: usize,
    config: &SvrConfig,
) -> Result<(SvrEstimate, FourierData)> {
    let grid = FourierGrid::new(cutoff, half_count)?;
    let data = ecf(samples, &grid)?;
    let estimate = estimate_fourier(&data, config)?;
    Ok((estimate, data))
}

/// Inputs of [`ratio_lower_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBoundInputs {
    pub min_weight: f64,
    pub min_separation: f64,
    /// Uniform bound on `|W(ω_q)|`.
    pub noise: f64,
    pub order: usize,
    pub half_count: usize,
    pub modulation: f64,
    pub step: f64,
    pub cutoff: f64,
}

/// `max_{1<=j<=k} (j-1)!(k-j)!`.
pub fn zeta(order: usize) -> f64 {
    let factorial = |m: usize| (1..=m).map(|i| i as f64).product::<f64>();
    (1..=order)
        .map(|j| factorial(j - 1) * factorial(order - j))
        .fold(0.0, f64::max)
}

/// Lower bound on `r(v,k)` when every `|W(ω_q)| < noise`:
///
/// `π_min/σ · (h d_min/π)^{2k-2} · exp(-Ω² v) · (K+1)^{-3/2} · ζ(k)²/k - 1`.
pub fn ratio_lower_bound(p: &RatioBoundInputs) -> Result<f64> {
    let positive = [p.min_weight, p.min_separation, p.noise, p.step, p.cutoff];
    if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) || !(p.modulation >= 0.0) {
        return Err(Error::InvalidArgument("ratio bound inputs must be positive".into()));
    }
    if p.order == 0 || p.half_count == 0 {
        return Err(Error::InvalidArgument("order and K must be >= 1".into()));
    }
    let k = p.order as f64;
    let z = zeta(p.order);
    let geometry = (p.step * p.min_separation / std::f64::consts::PI).powi(2 * p.order as i32 - 2);
    Ok(p.min_weight / p.noise
        * geometry
        * (-p.cutoff * p.cutoff * p.modulation).exp()
        * ((p.half_count + 1) as f64).powf(-1.5)
        * z
        * z
        / k
        - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::synth_fourier;
    use crate::model::GaussianMixture;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn exact(means: Vec<f64>, v: f64, cutoff: f64, k: usize) -> FourierData {
        let n = means.len();
        let m = GaussianMixture::from_modulation(means, vec![1.0 / n as f64; n], v).unwrap();
        synth_fourier(&m, &FourierGrid::new(cutoff, k).unwrap(), 0.0, 0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SvrConfig::new(vec![], 0.0, None).is_err());
        assert!(SvrConfig::new(vec![0.2, 0.1], 0.0, None).is_err());
        assert!(SvrConfig::new(vec![-0.1, 0.1], 0.0, None).is_err());
        assert!(SvrConfig::new(vec![0.1], -1.0, None).is_err());
        assert!(SvrConfig::new(vec![0.1], 0.0, Some(0)).is_err());
        let g = candidate_grid(2.0, 0.01).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 0.0);
        assert!((g[200] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ones_data_gives_infinite_ratio_at_zero() {
        let g = FourierGrid::new(2.0, 4).unwrap();
        let d = FourierData::new(g, vec![Complex64::new(1.0, 0.0); 9]).unwrap();
        let s = svr_surface(&d, &SvrConfig::new(vec![0.0, 0.1], 0.0, None).unwrap()).unwrap();
        assert_eq!(s.ratio(0, 1), f64::INFINITY);
        assert_eq!(s.selected, Some((0, 1)));
    }

    #[test]
    fn ratios_are_at_least_one() {
        let m = GaussianMixture::new(vec![-1.0, 0.5], vec![0.3, 0.7], 1.2).unwrap();
        let d = synth_fourier(&m, &FourierGrid::new(2.0, 6).unwrap(), 1e-3, 4).unwrap();
        let s = svr_surface(&d, &SvrConfig::new(candidate_grid(1.0, 0.05).unwrap(), 0.0, None).unwrap()).unwrap();
        for row in &s.rows {
            assert!(row.ratios.iter().all(|&r| r >= 1.0));
            assert!(row.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn noiseless_two_components() {
        let d = exact(vec![-0.8, 0.9], 0.5, 2.5, 4);
        let cfg = SvrConfig::new(candidate_grid(2.0, 0.01).unwrap(), 0.0, None).unwrap();
        let e = estimate_fourier(&d, &cfg).unwrap();
        assert_eq!(e.order, 2);
        assert!((e.v - 0.5).abs() < 1e-9);
    }

    #[test]
    fn known_order_one() {
        let d = exact(vec![0.4], 0.33, 2.0, 3);
        let cfg = SvrConfig::new(candidate_grid(1.0, 0.01).unwrap(), 0.0, Some(1)).unwrap();
        let e = estimate_fourier(&d, &cfg).unwrap();
        assert_eq!(e.order, 1);
        assert!((e.v - 0.33).abs() <= 0.01 + 1e-12);
    }

    #[test]
    fn known_order_ignores_threshold_and_range() {
        let d = exact(vec![-0.8, 0.9], 0.5, 2.5, 4);
        let cfg = SvrConfig::new(candidate_grid(1.0, 0.01).unwrap(), 1e6, Some(2)).unwrap();
        assert_eq!(estimate_fourier(&d, &cfg).unwrap().order, 2);
        let cfg = SvrConfig::new(vec![0.5], 0.0, Some(5)).unwrap();
        assert!(matches!(estimate_fourier(&d, &cfg), Err(Error::OrderOutOfRange { .. })));
    }

    #[test]
    fn threshold_above_everything_is_an_error() {
        let d = exact(vec![-0.8, 0.9], 0.5, 2.5, 4);
        let cfg = SvrConfig::new(candidate_grid(1.0, 0.1).unwrap(), 1e6, None).unwrap();
        assert!(matches!(estimate_fourier(&d, &cfg), Err(Error::BelowThreshold { .. })));
    }

    #[test]
    fn overflow_candidates_are_rejected() {
        let d = exact(vec![0.0], 0.5, 10.0, 4);
        let cfg = SvrConfig::new(vec![0.5, 3.5], 0.0, None).unwrap();
        assert!(matches!(svr_surface(&d, &cfg), Err(Error::ModulationOverflow { .. })));
    }

    #[test]
    fn selection_is_the_surface_maximum() {
        let m = GaussianMixture::new(vec![-1.5, 0.2, 1.4], vec![0.3, 0.3, 0.4], 0.8).unwrap();
        let d = synth_fourier(&m, &FourierGrid::new(1.8, 5).unwrap(), 1e-3, 6).unwrap();
        let cfg = SvrConfig::new(candidate_grid(1.0, 0.01).unwrap(), 0.05, None).unwrap();
        let s = svr_surface(&d, &cfg).unwrap();
        let (bi, bl) = s.selected.unwrap();
        for i in 0..s.rows.len() {
            for l in 1..=5 {
                if s.eligible(i, l) {
                    let r = s.ratio(i, l);
                    assert!(r <= s.ratio(bi, bl));
                    if r == s.ratio(bi, bl) {
                        assert!((i, l) >= (bi, bl));
                    }
                }
            }
        }
        assert!(s.rows[bi].passes[bl - 1]);
    }

    #[test]
    fn three_component_reference() {
        let d = synth_fourier(
            &GaussianMixture::from_modulation(vec![0.3 * PI, PI, 1.6 * PI], vec![1.0 / 3.0; 3], 0.45).unwrap(),
            &FourierGrid::new(1.5, 5).unwrap(),
            1e-5,
            1,
        )
        .unwrap();
        let cfg = SvrConfig::new(candidate_grid(2.0, 0.005).unwrap(), 0.0, None).unwrap();
        let e = estimate_fourier(&d, &cfg).unwrap();
        assert_eq!(e.order, 3);
        assert!((0.44..=0.47).contains(&e.v), "v = {}", e.v);
    }

    #[test]
    fn surface_csv_layout() {
        let d = exact(vec![-0.8, 0.9], 0.5, 2.5, 2);
        let s = svr_surface(&d, &SvrConfig::new(vec![0.0, 0.5], 0.0, None).unwrap()).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "u,l,ratio,passes_threshold");
        assert_eq!(lines.len(), 1 + 2 * 2);
    }

    #[test]
    fn zeta_values() {
        assert_eq!(zeta(1), 1.0);
        assert_eq!(zeta(2), 1.0);
        assert_eq!(zeta(3), 2.0);
        assert_eq!(zeta(4), 6.0);
    }

    #[test]
    fn bound_for_one_component_and_small_noise() {
        let p = RatioBoundInputs {
            min_weight: 1.0,
            min_separation: 1.0,
            noise: 1e-3,
            order: 1,
            half_count: 3,
            modulation: 0.5,
            step: 0.5,
            cutoff: 1.5,
        };
        let expected = 1.0 / 1e-3 * (-1.5f64 * 1.5 * 0.5).exp() * 4f64.powf(-1.5) - 1.0;
        assert!((ratio_lower_bound(&p).unwrap() - expected).abs() < 1e-9);
        let tiny = RatioBoundInputs { noise: 1e-300, ..p };
        assert!(ratio_lower_bound(&tiny).unwrap() > 1e290);
        assert!(ratio_lower_bound(&RatioBoundInputs { noise: 0.0, ..p }).is_err());
    }
}
