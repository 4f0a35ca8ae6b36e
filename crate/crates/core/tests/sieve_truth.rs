//! Sieve output checked against independent brute-force computations.

use addlab::afspec::AdditiveFunctionSpec;
use addlab::ldp::Horizon;
use addlab::sieve::{empirical_tail, exp_moment_direct, model_moments, sieve_values, SieveConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn specs() -> Vec<AdditiveFunctionSpec> {
    vec![
        AdditiveFunctionSpec::omega(),
        AdditiveFunctionSpec::omega_star(),
        AdditiveFunctionSpec::fractional_part(0.414_213_562_373_095).unwrap(),
        AdditiveFunctionSpec::table("t", [(2, -1.0), (3, 0.5), (97, 4.0)], 0.25).unwrap(),
    ]
}

/// Sum of `g(p)` over the distinct prime factors found by trial division.
fn trial_division_value(spec: &AdditiveFunctionSpec, mut n: u64) -> f64 {
    let mut total = 0.0;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            total += spec.value_at(p).unwrap();
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        total += spec.value_at(n).unwrap();
    }
    total
}

#[test]
fn random_values_match_trial_division() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in specs() {
        let result = sieve_values(&spec, 1_000_000, &SieveConfig::default()).unwrap();
        for _ in 0..10_000 {
            let n = rng.random_range(1..=1_000_000u64);
            let want = trial_division_value(&spec, n);
            assert!((result.value(n) - want).abs() <= 1e-12, "{} at {n}", spec.name());
        }
    }
}

#[test]
fn two_to_omega_sum_matches_squarefree_divisor_count() {
    let x = 1_000_000usize;
    // squarefree indicator by crossing out multiples of p^2
    let mut squarefree = vec![true; x + 1];
    let mut p = 2;
    while p * p <= x {
        for m in (p * p..=x).step_by(p * p) {
            squarefree[m] = false;
        }
        p += 1;
    }
    let oracle: u64 = (1..=x).filter(|&d| squarefree[d]).map(|d| (x / d) as u64).sum();
    let result = sieve_values(&AdditiveFunctionSpec::omega(), x as u64, &SieveConfig::default()).unwrap();
    let direct = exp_moment_direct(&result, 2f64.ln(), None).unwrap().value();
    assert!((direct - oracle as f64).abs() <= 1e-9 * oracle as f64, "{direct} vs {oracle}");
}

#[test]
fn variance_tracks_second_moment_times_loglog() {
    for spec in specs() {
        let m2 = spec.require_limit().unwrap().moment(2);
        for x in [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000, 100_000_000] {
            let loglog = Horizon::from_x(x as f64).unwrap().loglog();
            let sigma2 = model_moments(&spec, x).sigma2;
            assert!((sigma2 - m2 * loglog).abs() <= 5.0, "{} x={x}: {sigma2}", spec.name());
        }
    }
}

#[test]
fn tail_starts_at_one_on_the_minimum() {
    for spec in specs() {
        let result = sieve_values(&spec, 200_000, &SieveConfig::default()).unwrap();
        let sigma = result.sigma2().sqrt();
        let lowest = result.values().iter().copied().fold(f64::INFINITY, f64::min);
        let table = empirical_tail(&result, &[(lowest - result.mu()) / sigma]).unwrap();
        assert_eq!(table.empirical[0], 1.0, "{}", spec.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tail_is_non_increasing(mut deltas in prop::collection::vec(-4.0f64..6.0, 1..20), which in 0usize..4) {
        deltas.sort_by(f64::total_cmp);
        let spec = &specs()[which];
        let result = sieve_values(spec, 20_000, &SieveConfig::default()).unwrap();
        let table = empirical_tail(&result, &deltas).unwrap();
        for pair in table.empirical.windows(2) {
            prop_assert!(pair[1] <= pair[0]);
        }
        for &v in &table.empirical {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
