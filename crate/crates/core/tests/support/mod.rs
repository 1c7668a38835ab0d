//! Property checks and independent oracles shared by the property suite and
//! the acceptance runner. Each check returns `Err(description)` on violation.
#![allow(dead_code)]

use mixfourier::em::{em_fit, EmConfig};
use mixfourier::fourier::synth_fourier;
use mixfourier::hankel::{hankel, modulation, singular_values};
use mixfourier::metrics::wasserstein1;
use mixfourier::spectral::{demodulate, design_matrix, estimate_weights, music_spectrum, DEFAULT_RESOLUTION};
use mixfourier::{Complex64, FourierData, FourierGrid, GaussianMixture, MixingDistribution, SampleSet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ----- oracles ------------------------------------------------------------

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let total: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// Singular values of a complex matrix from the eigenvalues of the real
/// embedding `[[Re G, -Im G], [Im G, Re G]]` of `G = M*M`. Every eigenvalue
/// appears twice in the embedding.
pub fn oracle_singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let n = m.ncols();
    let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = (0..m.nrows()).map(|r| m[(r, i)].conj() * m[(r, j)]).sum();
        }
    }
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            big[i][j] = g[i][j].re;
            big[i + n][j + n] = g[i][j].re;
            big[i][j + n] = -g[i][j].im;
            big[i + n][j] = g[i][j].im;
        }
    }
    jacobi_eigenvalues(big)
        .into_iter()
        .step_by(2)
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

pub fn oracle_spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    oracle_singular_values(m)[0]
}

/// Optimal transport cost between two discrete measures on the line by
/// enumerating basic feasible solutions of the transportation LP. Only
/// practical for `m·n <= 12`.
pub fn transport_lp(a: &MixingDistribution, b: &MixingDistribution) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let basis = m + n - 1;
    let rhs = DVector::from_iterator(m + n, a.weights().iter().chain(b.weights()).copied());
    let mut best = f64::INFINITY;
    let mut choose = |subset: &[usize]| {
        let mut mat = DMatrix::zeros(m + n, subset.len());
        for (c, &cell) in subset.iter().enumerate() {
            let (i, j) = cells[cell];
            mat[(i, c)] = 1.0;
            mat[(m + j, c)] = 1.0;
        }
        let svd = mat.clone().svd(true, true);
        let Ok(x) = svd.solve(&rhs, 1e-12) else { return };
        if (&mat * &x - &rhs).amax() > 1e-10 || x.iter().any(|&v| v < -1e-12) {
            return;
        }
        let cost: f64 = subset
            .iter()
            .zip(x.iter())
            .map(|(&cell, &v)| {
                let (i, j) = cells[cell];
                v.max(0.0) * (a.support()[i] - b.support()[j]).abs()
            })
            .sum();
        best = best.min(cost);
    };
    let total = cells.len();
    let mut idx: Vec<usize> = (0..basis).collect();
    loop {
        choose(&idx);
        let mut i = basis;
        while i > 0 && idx[i - 1] == total - basis + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for k in i..basis {
            idx[k] = idx[k - 1] + 1;
        }
    }
    best
}

/// Cost of the monotone (north-west corner) coupling of sorted atoms.
pub fn monotone_coupling_cost(a: &MixingDistribution, b: &MixingDistribution) -> f64 {
    let (xa, wa, xb, wb) = (a.support(), a.weights(), b.support(), b.weights());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (wa[0], wb[0]);
    let mut cost = 0.0;
    while i < xa.len() && j < xb.len() {
        let t = ra.min(rb);
        cost += t * (xa[i] - xb[j]).abs();
        ra -= t;
        rb -= t;
        if ra <= rb {
            i += 1;
            if i < xa.len() {
                ra = wa[i];
            }
        } else {
            j += 1;
            if j < xb.len() {
                rb = wb[j];
            }
        }
    }
    cost
}

// ----- generators ---------------------------------------------------------

pub fn random_complex_matrix(r: &mut impl Rng, n: usize, scale: f64) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(scale * (2.0 * r.random::<f64>() - 1.0), scale * (2.0 * r.random::<f64>() - 1.0))
    })
}

/// Random measure with `atoms` distinct points in `[-3, 3]`.
pub fn random_measure(r: &mut impl Rng, atoms: usize) -> MixingDistribution {
    let x: Vec<f64> = (0..atoms).map(|_| (6.0 * r.random::<f64>() - 3.0) * 1e3).map(|v: f64| v.round() / 1e3).collect();
    let mut x = x;
    x.sort_by(f64::total_cmp);
    x.dedup();
    let w: Vec<f64> = x.iter().map(|_| 0.05 + r.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    MixingDistribution::new(x, w.iter().map(|v| v / s).collect()).unwrap()
}

/// `k` means in `[lo, hi)` with pairwise separation at least `d_min`.
pub fn separated_means(r: &mut impl Rng, k: usize, lo: f64, hi: f64, d_min: f64) -> Vec<f64> {
    loop {
        let mut m: Vec<f64> = (0..k).map(|_| lo + (hi - lo) * r.random::<f64>()).collect();
        m.sort_by(f64::total_cmp);
        if m.windows(2).all(|w| w[1] - w[0] >= d_min) {
            return m;
        }
    }
}

pub fn random_weights(r: &mut impl Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| 0.2 + r.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

// ----- checks -------------------------------------------------------------

pub fn check_weyl(m: &DMatrix<Complex64>, delta: &DMatrix<Complex64>) -> Check {
    let a = singular_values(m).map_err(|e| e.to_string())?;
    let b = singular_values(&(m + delta)).map_err(|e| e.to_string())?;
    let norm = oracle_spectral_norm(delta);
    let slack = 1e-10 * (1.0 + a[0] + norm);
    for (l, (x, y)) in a.iter().zip(&b).enumerate() {
        ensure((x - y).abs() <= norm + slack, || {
            format!("Weyl violated at l={}: |{x} - {y}| > {norm}", l + 1)
        })?;
    }
    Ok(())
}

/// `‖A∘B‖ <= √n · max|A_ij| · ‖B‖`.
pub fn check_hadamard(a: &DMatrix<f64>, b: &DMatrix<Complex64>) -> Check {
    let n = a.nrows() as f64;
    let product = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| b[(i, j)] * a[(i, j)]);
    let lhs = oracle_spectral_norm(&product);
    let amax = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let rhs = n.sqrt() * amax * oracle_spectral_norm(b);
    ensure(lhs <= rhs * (1.0 + 1e-10) + 1e-14, || format!("Hadamard bound violated: {lhs} > {rhs}"))
}

pub fn check_antidiagonal(data: &FourierData) -> Check {
    let h = hankel(data).map_err(|e| e.to_string())?;
    let n = h.size();
    for i in 0..n {
        for j in 0..n {
            let expected = data.values()[i + j];
            ensure(h.entry(i, j) == expected, || format!("entry ({i},{j}) is not Y[{}]", i + j))?;
            if i > 0 && j + 1 < n {
                ensure(h.entry(i, j) == h.entry(i - 1, j + 1), || format!("anti-diagonal {} not constant", i + j))?;
            }
        }
    }
    Ok(())
}

pub fn check_modulation_inverse(grid: &FourierGrid, u: f64) -> Check {
    let a = modulation(grid, u).map_err(|e| e.to_string())?;
    let b = modulation(grid, -u).map_err(|e| e.to_string())?;
    for i in 0..a.size() {
        for j in 0..a.size() {
            let p = a.entry(i, j) * b.entry(i, j);
            ensure((p - 1.0).abs() <= 1e-12, || format!("E(u)∘E(-u) = {p} at ({i},{j}) for u = {u}"))?;
        }
    }
    Ok(())
}

fn stacked_objective(data: &FourierData, means: &[f64], v: f64, theta: &[f64]) -> f64 {
    let z = design_matrix(&data.grid().frequencies(), means, v);
    let t = DVector::from_iterator(theta.len(), theta.iter().map(|&x| Complex64::new(x, 0.0)));
    (z * t - DVector::from_column_slice(data.values())).norm()
}

pub fn check_simplex_solver(data: &FourierData, means: &[f64], v: f64) -> Check {
    let solve = estimate_weights(data, means, v).map_err(|e| e.to_string())?;
    let w = &solve.weights;
    ensure(w.iter().all(|&x| x >= 0.0), || format!("negative weight in {w:?}"))?;
    let sum: f64 = w.iter().sum();
    ensure((sum - 1.0).abs() <= 1e-12, || format!("weights sum to {sum}"))?;
    let bary = vec![1.0 / means.len() as f64; means.len()];
    let at = stacked_objective(data, means, v, w);
    let base = stacked_objective(data, means, v, &bary);
    ensure(at <= base * (1.0 + 1e-12) + 1e-14, || format!("objective {at} above barycenter {base}"))
}

pub fn check_em_monotone(samples: &SampleSet, order: usize, seed: u64) -> Check {
    let fit = em_fit(samples, order, seed, &EmConfig { tol: 1e-8, max_iter: 200 }).map_err(|e| e.to_string())?;
    for (i, w) in fit.trace.windows(2).enumerate() {
        ensure(w[1] >= w[0] - 1e-9, || format!("log-likelihood fell at step {}: {} -> {}", i + 1, w[0], w[1]))?;
    }
    Ok(())
}

pub fn check_w1_oracle(a: &MixingDistribution, b: &MixingDistribution) -> Check {
    let w = wasserstein1(a, b);
    let coupling = monotone_coupling_cost(a, b);
    ensure((w - coupling).abs() <= 1e-9, || format!("W1 {w} vs monotone coupling {coupling}"))?;
    if a.len() * b.len() <= 12 {
        let lp = transport_lp(a, b);
        ensure((w - lp).abs() <= 1e-9, || format!("W1 {w} vs transport LP {lp}"))?;
    }
    Ok(())
}

pub fn check_w1_triangle(a: &MixingDistribution, b: &MixingDistribution, c: &MixingDistribution) -> Check {
    let (ab, ac, cb) = (wasserstein1(a, b), wasserstein1(a, c), wasserstein1(c, b));
    ensure(ab <= ac + cb + 1e-12, || format!("triangle inequality: {ab} > {ac} + {cb}"))
}

/// Noiseless data, demodulated at the true `v`: every MUSIC peak lies
/// within one grid step of a true mean.
pub fn check_music_recovery(mixture: &GaussianMixture, grid: &FourierGrid) -> Check {
    let data = synth_fourier(mixture, grid, 0.0, 0).map_err(|e| e.to_string())?;
    let demod = demodulate(&data, mixture.modulation()).map_err(|e| e.to_string())?;
    let s = music_spectrum(&demod, mixture.order(), DEFAULT_RESOLUTION).map_err(|e| e.to_string())?;
    for (p, t) in s.peaks.iter().zip(mixture.means()) {
        ensure((p - t).abs() <= s.step, || format!("peak {p} vs mean {t} (step {}) in {:?} K={}", s.step, mixture, grid.half_count()))?;
    }
    Ok(())
}
