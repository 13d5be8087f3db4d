//! Independent oracles and statistical checks across modules.

use ifs_ergodic::chain::{burn_in_sample, map_replicas, sample_symbols};
use ifs_ergodic::clt::estimate_sigma2;
use ifs_ergodic::ifs::{calibrate, IntervalMap};
use ifs_ergodic::ks::ks_statistic;
use ifs_ergodic::measure::{class_membership, tail_exponent_fit, EmpiricalMeasure};
use ifs_ergodic::{IfsSystem, StreamSpec};
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

#[test]
fn calibrated_inequalities_hold_on_a_fine_scan() {
    let am2 = IfsSystem::am2();
    for alpha in [0.1, 0.5] {
        let c = calibrate(&am2, alpha).unwrap();
        let points = 100_000;
        for (i, map) in am2.maps().iter().enumerate() {
            let (lo, hi) = (c.lambda_lo[i], c.lambda_hi[i]);
            for j in 0..=points {
                let x = c.epsilon * j as f64 / points as f64;
                let tol = 1e-15;
                assert!(map.apply(x) >= lo * x - tol);
                assert!(1.0 - map.apply(1.0 - x) >= hi * x - tol);
                assert!(map.apply_inverse(x) <= x / lo + tol);
                assert!(map.apply_inverse(1.0 - x) >= 1.0 - x / hi - tol);
            }
        }
        for (moment, name) in [(c.moment_lo, "lo"), (c.moment_hi, "hi")] {
            assert!(moment < (1.0 - c.delta).powf(alpha), "{name}");
        }
        assert!(c.m * c.epsilon.powf(alpha) >= 1.0);
        assert!((c.m * c.epsilon.powf(alpha) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn tail_fit_recovers_power_laws() {
    let mut rng = StdRng::seed_from_u64(17);
    let beta = 2.0;
    let powered: Vec<f64> = (0..100_000)
        .map(|_| rng.random::<f64>().powf(1.0 / beta))
        .collect();
    let (lo, hi) = tail_exponent_fit(&EmpiricalMeasure::from_samples(&powered).unwrap()).unwrap();
    assert!((lo - 2.0).abs() < 0.1, "{lo}");
    // Near 1 the law of u^(1/2) has density 2, so the upper exponent is 1.
    assert!((hi - 1.0).abs() < 0.1, "{hi}");

    let uniform: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
    let (lo, hi) = tail_exponent_fit(&EmpiricalMeasure::from_samples(&uniform).unwrap()).unwrap();
    assert!((lo - 1.0).abs() < 0.05, "{lo}");
    assert!((hi - 1.0).abs() < 0.05, "{hi}");
}

#[test]
fn sigma2_recovers_a_known_variance() {
    let mut rng = StdRng::seed_from_u64(3);
    let normal = Normal::new(0.0, 2.0).unwrap();
    let xs: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
    let est = estimate_sigma2(&xs).unwrap();
    assert!((est.value - 4.0).abs() <= 3.0 * est.stderr, "{est:?}");
}

#[test]
fn ks_p_values_are_calibrated() {
    let mut rng = StdRng::seed_from_u64(99);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let reps = 200;
    let rejected = (0..reps)
        .filter(|_| {
            let xs: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
            ks_statistic(&xs, 1.0).unwrap().p_value < 0.05
        })
        .count();
    let frac = rejected as f64 / reps as f64;
    assert!((frac - 0.05).abs() <= 0.05, "{frac}");
}

#[test]
fn burn_in_sample_respects_tail_class() {
    let am2 = IfsSystem::am2();
    let c = calibrate(&am2, 0.5).unwrap();
    let replicas = 100_000;
    let mu = burn_in_sample(&am2, 2_000, replicas, 21).unwrap();
    // Binomial allowance of three standard errors at each grid point.
    for i in 1..100 {
        let x = i as f64 / 100.0;
        let bound = c.m * x.powf(c.alpha);
        let se = (bound.min(1.0) * (1.0 - bound.min(1.0)) / replicas as f64).sqrt();
        assert!(mu.cdf(x).unwrap() <= bound + 3.0 * se, "x {x}");
        assert!(mu.upper_tail(1.0 - x) <= bound + 3.0 * se, "x {x}");
    }
    // The exact membership check may fail on sampling noise alone, so only
    // require that any excess stays within the same allowance.
    let report = class_membership(&mu, c.m, c.alpha);
    for (_, excess) in [report.worst_minus.unwrap(), report.worst_plus.unwrap()] {
        assert!(excess <= 3.0 * (0.25 / replicas as f64).sqrt());
    }
}

#[test]
fn symbol_streams_are_independent_of_each_other() {
    let am2 = IfsSystem::am2();
    // Agreement between words of neighbouring streams should be ½ per position.
    let agree = map_replicas(2000, |r| {
        let a = sample_symbols(&am2, 200, StreamSpec::new(1, r));
        let b = sample_symbols(&am2, 200, StreamSpec::new(1, r + 1));
        Ok(a.iter().zip(&b).filter(|(x, y)| x == y).count() as f64)
    })
    .unwrap();
    let frac = agree.iter().sum::<f64>() / (2000.0 * 200.0);
    assert!((frac - 0.5).abs() < 0.005, "{frac}");
}

proptest! {
    #[test]
    fn word_images_stay_between_endpoint_images(
        word in prop::collection::vec(0usize..2, 0..30),
        u in 0.0f64..1.0,
        v in 0.0f64..1.0,
        t in 0.0f64..=1.0,
    ) {
        let am2 = IfsSystem::am2();
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        let x = u + t * (v - u);
        let x = x.clamp(u, v);
        let fu = am2.word_apply(&word, u).unwrap();
        let fx = am2.word_apply(&word, x).unwrap();
        let fv = am2.word_apply(&word, v).unwrap();
        prop_assert!(fu <= fx && fx <= fv);
    }
}
