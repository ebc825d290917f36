use metersentry_core::stats::{anderson_darling, correlation_of, iqr_outliers, ks_normality, summarize};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn normals(seed: u64, n: usize, mean: f64, std: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(mean, std).unwrap();
    (0..n).map(|_| dist.inverse_cdf(rng.random_range(1e-12..1.0 - 1e-12))).collect()
}

proptest! {
    #[test]
    fn summary_is_affine_equivariant(xs in prop::collection::vec(-1e3f64..1e3, 2..200), a in 0.1f64..10.0, b in -1e3f64..1e3) {
        let s = summarize(&xs).unwrap();
        let t = summarize(&xs.iter().map(|x| a * x + b).collect::<Vec<_>>()).unwrap();
        let tol = 1e-9 * (1.0 + a * 1e3 + b.abs());
        prop_assert!((t.mean - (a * s.mean + b)).abs() <= tol);
        prop_assert!((t.std - a * s.std).abs() <= tol);
        for (u, v) in [(t.min, s.min), (t.q25, s.q25), (t.median, s.median), (t.q75, s.q75), (t.max, s.max)] {
            prop_assert!((u - (a * v + b)).abs() <= tol);
        }
    }

    #[test]
    fn iqr_mask_is_shift_invariant(xs in prop::collection::vec(-100i32..100, 4..200), c in -1000i32..1000) {
        // Integer data keeps the shifted quartiles exact.
        let v: Vec<f64> = xs.iter().map(|&x| f64::from(x)).collect();
        let w: Vec<f64> = xs.iter().map(|&x| f64::from(x + c)).collect();
        prop_assert_eq!(iqr_outliers(&v, 1.5).unwrap(), iqr_outliers(&w, 1.5).unwrap());
    }

    #[test]
    fn correlation_is_psd_with_unit_diagonal(seed in any::<u64>(), p in 2usize..8, n in 10usize..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let names: Vec<&str> = (0..p).map(|_| "c").collect();
        let r = correlation_of(&names, &cols).unwrap();
        let m = DMatrix::from_fn(p, p, |i, j| r[(i, j)]);
        for i in 0..p {
            prop_assert_eq!(r[(i, i)], 1.0);
            for j in 0..p {
                prop_assert_eq!(r[(i, j)], r[(j, i)]);
                prop_assert!(r[(i, j)].abs() <= 1.0);
            }
        }
        let min_eig = m.symmetric_eigen().eigenvalues.min();
        prop_assert!(min_eig >= -1e-9, "{}", min_eig);
    }
}

#[test]
fn ks_accepts_normal_samples_against_fitted_reference() {
    let v = normals(1, 10_000, 50.0, 7.0);
    let ks = ks_normality(&v).unwrap();
    assert!(ks.fitted.p_value.unwrap() > 0.05, "{:?}", ks.fitted);
    // The same data is far from the standard normal.
    assert!(ks.standard.p_value.unwrap() < 1e-6);
}

#[test]
fn ks_statistic_of_exact_quantiles_is_minimal() {
    let dist = Normal::new(0.0, 1.0).unwrap();
    let n = 1000;
    let v: Vec<f64> = (1..=n).map(|i| dist.inverse_cdf((i as f64 - 0.5) / n as f64)).collect();
    let ks = ks_normality(&v).unwrap();
    assert!(ks.standard.statistic <= 0.5 / n as f64 + 1e-12, "{}", ks.standard.statistic);
}

#[test]
fn anderson_darling_accepts_large_normal_sample() {
    let ad = anderson_darling(&normals(2, 33_000, 120.0, 15.0)).unwrap();
    assert!(ad.statistic < 0.787, "{}", ad.statistic);
    assert!(ad.verdict);
}

#[test]
fn anderson_darling_rejects_skewed_consumption() {
    // Right-skewed, heavy-tailed hourly consumption.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v: Vec<f64> = (0..33_000).map(|_| -30.0 * (1.0 - rng.random::<f64>()).ln()).collect();
    let ad = anderson_darling(&v).unwrap();
    assert!(ad.statistic > 1.092 && !ad.verdict, "{}", ad.statistic);
}
