//! Frequency grids, empirical characteristic functions, synthetic Fourier
//! data and cutoff selection.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GaussianMixture, SampleSet};
use crate::seed;

/// Symmetric grid `ω_q = q Ω / K` for `q = -K..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    cutoff: f64,
    half_count: usize,
}

impl FourierGrid {
    pub fn new(cutoff: f64, half_count: usize) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff must be positive, got {cutoff}")));
        }
        if half_count == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        Ok(Self { cutoff, half_count })
    }

    /// The cutoff frequency `Ω`.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// `K`; the grid has `2K + 1` points.
    pub fn half_count(&self) -> usize {
        self.half_count
    }

    /// Sampling step `h = Ω / K`.
    pub fn step(&self) -> f64 {
        self.cutoff / self.half_count as f64
    }

    pub fn len(&self) -> usize {
        2 * self.half_count + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `ω_q`. Computed as `Ω · (q/K)` so that `ω_K == Ω` and `ω_{-q} == -ω_q`
    /// hold exactly.
    pub fn frequency(&self, q: i64) -> f64 {
        self.cutoff * (q as f64 / self.half_count as f64)
    }

    /// Frequencies in storage order, index `i` holding `ω_{i-K}`.
    pub fn frequencies(&self) -> Vec<f64> {
        let k = self.half_count as i64;
        (-k..=k).map(|q| self.frequency(q)).collect()
    }

    /// Storage index of `q`.
    pub fn index(&self, q: i64) -> usize {
        (q + self.half_count as i64) as usize
    }

    /// Half-open interval `[-π/(2h), π/(2h))` of identifiable means.
    pub fn mean_range(&self) -> (f64, f64) {
        let half = std::f64::consts::PI / (2.0 * self.step());
        (-half, half)
    }
}

/// Complex values on a [`FourierGrid`], index-aligned with
/// [`FourierGrid::frequencies`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierData {
    grid: FourierGrid,
    values: Vec<Complex64>,
}

impl FourierData {
    pub fn new(grid: FourierGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at `ω_q`.
    pub fn at(&self, q: i64) -> Complex64 {
        self.values[self.grid.index(q)]
    }

    /// Pointwise `exp(u ω_q²) · Y_q`.
    pub fn modulated(&self, u: f64) -> FourierData {
        let values = self
            .grid
            .frequencies()
            .iter()
            .zip(&self.values)
            .map(|(w, y)| y * (u * w * w).exp())
            .collect();
        FourierData {
            grid: self.grid,
            values,
        }
    }

    /// Scales every value by a complex constant.
    pub fn scaled(&self, factor: Complex64) -> FourierData {
        FourierData {
            grid: self.grid,
            values: self.values.iter().map(|y| y * factor).collect(),
        }
    }

    /// CSV with header `q,omega,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,omega,re,im\n");
        let k = self.grid.half_count as i64;
        for (q, (w, y)) in (-k..=k).zip(self.grid.frequencies().iter().zip(&self.values)) {
            let _ = writeln!(out, "{q},{w:.16e},{:.16e},{:.16e}", y.re, y.im);
        }
        out
    }

    /// Parses the [`FourierData::to_csv`] layout. Rows must cover
    /// `q = -K..=K` in order on a uniform grid.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 fields", lineno + 1)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad number '{s}'", lineno + 1)))
            };
            let q: i64 = fields[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad index", lineno + 1)))?;
            rows.push((q, parse(fields[1])?, Complex64::new(parse(fields[2])?, parse(fields[3])?)));
        }
        if rows.len() < 3 || rows.len() % 2 == 0 {
            return Err(Error::Parse(format!("need an odd number (>= 3) of rows, got {}", rows.len())));
        }
        let k = (rows.len() / 2) as i64;
        for (i, (q, _, _)) in rows.iter().enumerate() {
            if *q != i as i64 - k {
                return Err(Error::Parse(format!("row {} has q = {q}, expected {}", i + 1, i as i64 - k)));
            }
        }
        let cutoff = rows.last().map(|r| r.1).unwrap_or(0.0);
        let grid = FourierGrid::new(cutoff, k as usize)?;
        for (q, w, _) in &rows {
            if (grid.frequency(*q) - w).abs() > 1e-9 * cutoff.max(1.0) {
                return Err(Error::Parse(format!("omega at q = {q} is off the uniform grid")));
            }
        }
        FourierData::new(grid, rows.into_iter().map(|r| r.2).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `(1/n) Σ_j exp(i ω x_j)`.
fn ecf_point(values: &[f64], omega: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &x in values {
        let (s, c) = (omega * x).sin_cos();
        re += c;
        im += s;
    }
    let n = values.len() as f64;
    Complex64::new(re / n, im / n)
}

/// Empirical characteristic function on the grid.
///
/// Only `q >= 0` is summed; negative frequencies are filled by conjugation so
/// the symmetry `Y_{-q} = conj(Y_q)` is exact. This is the only routine in
/// the estimation path that reads the raw samples.
pub fn ecf(samples: &SampleSet, grid: &FourierGrid) -> Result<FourierData> {
    let values = samples.values();
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let k = grid.half_count() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for q in 0..=k {
        let y = if q == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            ecf_point(values, grid.frequency(q))
        };
        out[grid.index(q)] = y;
        out[grid.index(-q)] = y.conj();
    }
    FourierData::new(*grid, out)
}

/// Exact characteristic function plus i.i.d. noise `N(0,σ²) + i N(0,σ²)`
/// at every grid point.
pub fn synth_fourier(
    mixture: &GaussianMixture,
    grid: &FourierGrid,
    sigma: f64,
    seed: u64,
) -> Result<FourierData> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {sigma}")));
    }
    let mut values: Vec<Complex64> = grid
        .frequencies()
        .iter()
        .map(|&w| mixture.characteristic_function(w))
        .collect();
    if sigma > 0.0 {
        let mut rng = seed::rng(seed);
        for y in &mut values {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *y += Complex64::new(sigma * re, sigma * im);
        }
    }
    FourierData::new(*grid, values)
}

/// Final bracket `(Ω_min, Ω_max)` of the cutoff bisection.
///
/// Starting from `[0, Ω_init]`, each of the `iterations` steps probes the
/// midpoint and moves the upper end down when `|Y_n(Ω_mid)| < 1/√n`, the
/// lower end up otherwise.
pub fn cutoff_bracket(samples: &SampleSet, iterations: usize, initial: f64) -> Result<(f64, f64)> {
    cutoff_bracket_scaled(samples, iterations, initial, 1.0)
}

/// [`cutoff_bracket`] with the noise floor raised to `τ/√n`.
pub fn cutoff_bracket_scaled(samples: &SampleSet, iterations: usize, initial: f64, tau: f64) -> Result<(f64, f64)> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("cutoff search needs at least one iteration".into()));
    }
    if !(initial.is_finite() && initial > 0.0) {
        return Err(Error::InvalidArgument(format!("initial cutoff must be positive, got {initial}")));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!("noise multiplier must be positive, got {tau}")));
    }
    let values = samples.values();
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let floor = tau / (values.len() as f64).sqrt();
    let (mut lo, mut hi) = (0.0, initial);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if ecf_point(values, mid).norm() < floor {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Cutoff frequency chosen by bisection: the upper end of
/// [`cutoff_bracket`].
pub fn cutoff_search(samples: &SampleSet, iterations: usize, initial: f64) -> Result<f64> {
    cutoff_bracket(samples, iterations, initial).map(|(_, hi)| hi)
}

/// [`cutoff_search`] against the floor `τ/√n`; `τ = 1` is the plain search.
pub fn cutoff_search_scaled(samples: &SampleSet, iterations: usize, initial: f64, tau: f64) -> Result<f64> {
    cutoff_bracket_scaled(samples, iterations, initial, tau).map(|(_, hi)| hi)
}

/// `(4K+2) exp(-n^{-2ε}/2)`, the tail bound on `P(‖W‖_∞ >= n^{-1/2-ε})`.
/// Not clamped; see [`hoeffding_probability_bound`].
pub fn hoeffding_bound(n: usize, epsilon: f64, half_count: usize) -> f64 {
    let n = n as f64;
    (4.0 * half_count as f64 + 2.0) * (-0.5 * n.powf(-2.0 * epsilon)).exp()
}

/// [`hoeffding_bound`] clamped to `[0, 1]`.
pub fn hoeffding_probability_bound(n: usize, epsilon: f64, half_count: usize) -> f64 {
    hoeffding_bound(n, epsilon, half_count).clamp(0.0, 1.0)
}

/// `max_q |a_q - b_q|`.
pub fn sup_distance(a: &FourierData, b: &FourierData) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
