//! Mean recovery by MUSIC and weight recovery by least squares over the
//! probability simplex.
//!
//! MUSIC works on demodulated data `exp(v̂ω²)·Y`, whose Hankel matrix has the
//! column space spanned by `φ(μ) = (e^{iμω_{-K}}, …, e^{iμω_0})` at the true
//! means. With `U_2` the trailing `K+1-k` left singular vectors, the imaging
//! function `J(μ) = ‖φ(μ)‖ / ‖U_2* φ(μ)‖` blows up at the means.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierData;
use crate::hankel::{hankel, music_subspace};

pub const DEFAULT_RESOLUTION: usize = 1 << 12;

const MAX_ITERATIONS: usize = 10_000;
const MOVEMENT_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicSpectrum {
    pub mu: Vec<f64>,
    pub imaging: Vec<f64>,
    pub step: f64,
    pub peaks: Vec<f64>,
}

impl MusicSpectrum {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// CSV with header `mu,J`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,J\n");
        for (m, j) in self.mu.iter().zip(&self.imaging) {
            let _ = writeln!(out, "{m:.16e},{j:.16e}");
        }
        out
    }
}

/// `φ(μ)` on `ω_{-K}..=ω_0`.
pub fn steering(frequencies: &[f64], mu: f64) -> DVector<Complex64> {
    DVector::from_iterator(
        frequencies.len(),
        frequencies.iter().map(|&w| Complex64::from_polar(1.0, mu * w)),
    )
}

/// MUSIC imaging function on `resolution` equispaced points of
/// `[-π/(2h), π/(2h))`, together with its `order` largest peaks.
pub fn music_spectrum(modulated: &FourierData, order: usize, resolution: usize) -> Result<MusicSpectrum> {
    if resolution < 3 {
        return Err(Error::InvalidArgument(format!("MUSIC resolution must be >= 3, got {resolution}")));
    }
    let h = hankel(modulated)?;
    let noise = music_subspace(h.as_matrix(), order)?;
    let noise_adjoint = noise.adjoint();
    let grid = modulated.grid();
    let freqs: Vec<f64> = grid.frequencies()[..=grid.half_count()].to_vec();
    let norm = (freqs.len() as f64).sqrt();

    let (lo, hi) = grid.mean_range();
    let step = (hi - lo) / resolution as f64;
    let mu: Vec<f64> = (0..resolution).map(|i| lo + i as f64 * step).collect();
    let imaging: Vec<f64> = mu
        .par_iter()
        .map(|&m| {
            let projected = (&noise_adjoint * steering(&freqs, m)).norm();
            (norm / projected.max(f64::EPSILON * norm)).max(1.0)
        })
        .collect();

    let mut spectrum = MusicSpectrum {
        mu,
        imaging,
        step,
        peaks: Vec::new(),
    };
    spectrum.peaks = music_peaks(&spectrum, order);
    Ok(spectrum)
}

/// The `order` largest strict interior local maxima of `J`, ascending.
///
/// Equal heights prefer smaller `μ`. When fewer maxima exist, an endpoint
/// above its neighbour counts next (a mean at the edge of the range peaks
/// there). Remaining slots are filled by the largest values of `J` that are
/// more than one grid step away from everything already chosen.
pub fn music_peaks(spectrum: &MusicSpectrum, order: usize) -> Vec<f64> {
    let j = &spectrum.imaging;
    let n = j.len();
    let by_height = |idx: &mut Vec<usize>| idx.sort_by(|&a, &b| j[b].total_cmp(&j[a]).then(a.cmp(&b)));

    let mut maxima: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| j[i] > j[i - 1] && j[i] > j[i + 1])
        .collect();
    by_height(&mut maxima);
    let mut chosen: Vec<usize> = maxima.into_iter().take(order).collect();

    if chosen.len() < order && n >= 2 {
        let mut ends: Vec<usize> = [(0, 1), (n - 1, n - 2)]
            .into_iter()
            .filter(|&(e, next)| j[e] > j[next])
            .map(|(e, _)| e)
            .collect();
        by_height(&mut ends);
        chosen.extend(ends.into_iter().take(order - chosen.len()));
    }

    if chosen.len() < order {
        let mut rest: Vec<usize> = (0..n).collect();
        by_height(&mut rest);
        for &i in &rest {
            if chosen.len() == order {
                break;
            }
            if chosen.iter().all(|&c| c.abs_diff(i) > 1) {
                chosen.push(i);
            }
        }
        for &i in &rest {
            if chosen.len() == order {
                break;
            }
            if !chosen.contains(&i) {
                chosen.push(i);
            }
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| spectrum.mu[i]).collect()
}

/// Columns `ψ(μ; v)_q = e^{-vω_q²} e^{iμω_q}` for `q = -K..=K`.
pub fn design_matrix(frequencies: &[f64], means: &[f64], v: f64) -> DMatrix<Complex64> {
    DMatrix::from_fn(frequencies.len(), means.len(), |r, c| {
        let w = frequencies[r];
        Complex64::from_polar((-v * w * w).exp(), means[c] * w)
    })
}

/// Euclidean projection onto `{θ : θ >= 0, Σθ = 1}` by sorting.
pub fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if s - candidate > 0.0 {
            shift = candidate;
        }
    }
    x.iter().map(|&xi| (xi - shift).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSolve {
    pub weights: Vec<f64>,
    /// `‖y - Ẑθ‖₂`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rank_deficient: bool,
}

struct Stacked {
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    b_norm2: f64,
}

impl Stacked {
    fn new(z: &DMatrix<Complex64>, y: &[Complex64]) -> Self {
        let (rows, cols) = z.shape();
        let a = DMatrix::from_fn(2 * rows, cols, |r, c| {
            if r < rows {
                z[(r, c)].re
            } else {
                z[(r - rows, c)].im
            }
        });
        let b = DVector::from_fn(2 * rows, |r, _| if r < rows { y[r].re } else { y[r - rows].im });
        Stacked {
            gram: a.transpose() * &a,
            rhs: a.transpose() * &b,
            b_norm2: b.norm_squared(),
        }
    }

    /// `‖Aθ - b‖²` expanded through the Gram matrix.
    fn objective(&self, theta: &DVector<f64>) -> f64 {
        (theta.dot(&(&self.gram * theta)) - 2.0 * theta.dot(&self.rhs) + self.b_norm2).max(0.0)
    }
}

/// Minimiser of `‖y - Ẑθ‖₂` over the simplex by projected gradient.
///
/// The start point is the better of the barycenter and the projected
/// solution of the equality-constrained least-squares problem, so descent
/// from it never ends above the barycenter's objective.
pub fn estimate_weights(data: &FourierData, means: &[f64], v: f64) -> Result<WeightSolve> {
    if means.is_empty() {
        return Err(Error::InvalidArgument("weight solve needs at least one mean".into()));
    }
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidArgument(format!("modulation must be >= 0, got {v}")));
    }
    let z = design_matrix(&data.grid().frequencies(), means, v);
    let residual_of = |w: &[f64]| {
        let theta = DVector::from_iterator(w.len(), w.iter().map(|&x| Complex64::new(x, 0.0)));
        (&z * theta - DVector::from_column_slice(data.values())).norm()
    };
    let k = means.len();
    if k == 1 {
        return Ok(WeightSolve {
            residual: residual_of(&[1.0]),
            weights: vec![1.0],
            iterations: 0,
            converged: true,
            rank_deficient: false,
        });
    }

    let sys = Stacked::new(&z, data.values());
    let eigen = SymmetricEigen::new(sys.gram.clone()).eigenvalues;
    let lmax = eigen.max();
    let lmin = eigen.min();
    let rank_deficient = !(lmax > 0.0) || lmin / lmax < RANK_TOL;

    let barycenter = DVector::from_element(k, 1.0 / k as f64);
    let mut theta = barycenter.clone();
    if let Some(start) = constrained_least_squares(&sys.gram, &sys.rhs) {
        let start = DVector::from_vec(project_simplex(start.as_slice()));
        if sys.objective(&start) < sys.objective(&barycenter) {
            theta = start;
        }
    }

    let mut iterations = 0;
    let mut converged = false;
    if lmax > 0.0 {
        while iterations < MAX_ITERATIONS {
            let gradient = &sys.gram * &theta - &sys.rhs;
            let next = DVector::from_vec(project_simplex((&theta - gradient / lmax).as_slice()));
            let movement = (&next - &theta).norm();
            theta = next;
            iterations += 1;
            if movement < MOVEMENT_TOL {
                converged = true;
                break;
            }
        }
    } else {
        converged = true;
    }

    let total: f64 = theta.iter().sum();
    let weights: Vec<f64> = theta.iter().map(|t| t / total).collect();
    Ok(WeightSolve {
        residual: residual_of(&weights),
        weights,
        iterations,
        converged,
        rank_deficient,
    })
}

/// Solves `min ‖Aθ - b‖²` subject to `Σθ = 1` through its KKT system.
fn constrained_least_squares(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let k = gram.nrows();
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    kkt.view_mut((0, 0), (k, k)).copy_from(gram);
    for i in 0..k {
        kkt[(i, k)] = 1.0;
        kkt[(k, i)] = 1.0;
    }
    let mut b = DVector::zeros(k + 1);
    b.rows_mut(0, k).copy_from(rhs);
    b[k] = 1.0;
    let solution = kkt.lu().solve(&b)?;
    let theta = solution.rows(0, k).into_owned();
    theta.iter().all(|x| x.is_finite()).then_some(theta)
}

/// Demodulated data `exp(v ω²) Y` for MUSIC.
pub fn demodulate(data: &FourierData, v: f64) -> Result<FourierData> {
    crate::hankel::check_modulation_range(data.grid(), v)?;
    Ok(data.modulated(v))
}
