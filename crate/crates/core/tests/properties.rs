//! Randomised invariants of the linear-algebra kernels, the weight solver,
//! EM and the Wasserstein distance.

mod support;

use std::f64::consts::PI;

use mixfourier::{Complex64, FourierData, FourierGrid, GaussianMixture};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use support::*;

fn lift(check: Check) -> Result<(), TestCaseError> {
    check.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weyl_perturbation(seed in any::<u64>(), n in 1usize..8, log_scale in -4.0f64..0.0) {
        let mut r = rng(seed);
        let m = random_complex_matrix(&mut r, n, 1.0);
        let d = random_complex_matrix(&mut r, n, 10f64.powf(log_scale));
        lift(check_weyl(&m, &d))?;
    }

    #[test]
    fn singular_values_match_gram_oracle(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let m = random_complex_matrix(&mut r, n, 2.0);
        let got = mixfourier::hankel::singular_values(&m).unwrap();
        let want = oracle_singular_values(&m);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + want[0]), "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn hadamard_bound(seed in any::<u64>(), n in 1usize..8, amax in 0.01f64..5.0) {
        let mut r = rng(seed);
        let b = random_complex_matrix(&mut r, n, 1.0);
        let a = DMatrix::from_fn(n, n, |_, _| amax * (2.0 * r.random::<f64>() - 1.0));
        lift(check_hadamard(&a, &b))?;
    }

    #[test]
    fn hankel_anti_diagonals(seed in any::<u64>(), k in 1usize..10, cutoff in 0.1f64..10.0) {
        let mut r = rng(seed);
        let grid = FourierGrid::new(cutoff, k).unwrap();
        let values: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
            .collect();
        lift(check_antidiagonal(&FourierData::new(grid, values).unwrap()))?;
    }

    #[test]
    fn modulation_inverse(k in 1usize..10, cutoff in 0.1f64..6.0, frac in 0.0f64..1.0) {
        let grid = FourierGrid::new(cutoff, k).unwrap();
        let u = frac * (300.0 / (cutoff * cutoff)).min(5.0);
        lift(check_modulation_inverse(&grid, u))?;
    }

    #[test]
    fn simplex_weights(seed in any::<u64>(), k in 1usize..5, v in 0.05f64..0.6, noise in 0.0f64..0.02) {
        let mut r = rng(seed);
        let kk = k + 2;
        let h = 0.5;
        let half = PI / (2.0 * h);
        let means = separated_means(&mut r, k, -half + 1e-9, half, 0.5);
        let m = GaussianMixture::from_modulation(means, random_weights(&mut r, k), v).unwrap();
        let grid = FourierGrid::new(h * kk as f64, kk).unwrap();
        let data = mixfourier::fourier::synth_fourier(&m, &grid, noise, r.random()).unwrap();
        let jitter: Vec<f64> = m.means().iter().map(|x| x + 0.05 * (r.random::<f64>() - 0.5)).collect();
        lift(check_simplex_solver(&data, &jitter, v))?;
    }

    #[test]
    fn music_peaks_near_true_means(seed in any::<u64>(), k in 1usize..5, v in 0.05f64..0.6) {
        let mut r = rng(seed);
        let kk = k + 2;
        let h = 0.5;
        let half = PI / (2.0 * h);
        let means = separated_means(&mut r, k, -half + 1e-9, half, 0.5);
        let m = GaussianMixture::from_modulation(means, random_weights(&mut r, k), v).unwrap();
        lift(check_music_recovery(&m, &FourierGrid::new(h * kk as f64, kk).unwrap()))?;
    }

    #[test]
    fn w1_agrees_with_oracles(seed in any::<u64>(), na in 1usize..6, nb in 1usize..6) {
        let mut r = rng(seed);
        let a = random_measure(&mut r, na);
        let b = random_measure(&mut r, nb);
        lift(check_w1_oracle(&a, &b))?;
        prop_assert!(mixfourier::metrics::wasserstein1(&a, &a).abs() < 1e-12);
        let ab = mixfourier::metrics::wasserstein1(&a, &b);
        let ba = mixfourier::metrics::wasserstein1(&b, &a);
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn w1_triangle(seed in any::<u64>(), na in 1usize..6, nb in 1usize..6, nc in 1usize..6) {
        let mut r = rng(seed);
        let a = random_measure(&mut r, na);
        let b = random_measure(&mut r, nb);
        let c = random_measure(&mut r, nc);
        lift(check_w1_triangle(&a, &b, &c))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn em_log_likelihood_never_decreases(seed in any::<u64>(), k in 1usize..4, fit in 1usize..4) {
        let mut r = rng(seed);
        let means = separated_means(&mut r, k, -3.0, 3.0, 0.5);
        let m = GaussianMixture::new(means, random_weights(&mut r, k), 0.3 + r.random::<f64>()).unwrap();
        let s = m.sample(400, r.random());
        lift(check_em_monotone(&s, fit, r.random()))?;
    }
}
