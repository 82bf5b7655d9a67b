use num_rational::BigRational;
use num_traits::ToPrimitive;

use poulsen_core::bfree::{generate_primitive_abundant, primes_up_to, BSet};
use poulsen_core::measures::empirical;

fn trial_division_free(moduli: &[u64], n: u64) -> Vec<bool> {
    (0..n).map(|i| moduli.iter().all(|&b| i % b != 0)).collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Count of integers in `[0, n)` free of every modulus, by inclusion–exclusion over subsets.
fn inclusion_exclusion_oracle(moduli: &[u64], n: u64) -> i64 {
    let mut total = 0i64;
    for mask in 0u32..(1 << moduli.len()) {
        let mut l = 1u64;
        for (i, &b) in moduli.iter().enumerate() {
            if mask >> i & 1 == 1 {
                l = l / gcd(l, b) * b;
            }
        }
        // multiples of l in [0, n)
        let multiples = (n - 1) / l + 1;
        let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        total += sign * multiples as i64;
    }
    total
}

#[test]
fn sieve_matches_trial_division_for_every_subset_of_two_to_twelve() {
    let pool: Vec<u64> = (2..=12).collect();
    let n = 2_520 * 2 + 37;
    for mask in 1u32..(1 << pool.len()) {
        let moduli: Vec<u64> = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &b)| b)
            .collect();
        let bset = BSet::explicit(moduli.clone()).unwrap();
        let window = bset.sieve_window(n);
        let oracle = trial_division_free(&moduli, n);
        assert_eq!(window.iter().collect::<Vec<_>>(), oracle, "{moduli:?}");
        let count = oracle.iter().filter(|&&b| b).count() as u64;
        assert_eq!(bset.count_free(n), count);
        assert_eq!(inclusion_exclusion_oracle(&moduli, n), count as i64);
        assert_eq!(bset.inclusion_exclusion_count(n).unwrap(), count);
    }
}

#[test]
fn exact_densities_agree_with_periodic_counts() {
    for moduli in [vec![2, 3], vec![4, 6, 9], vec![2, 5, 7], vec![6, 10, 15]] {
        let bset = BSet::explicit(moduli.clone()).unwrap();
        let lcm = bset.lcm_up_to(1 << 20).unwrap();
        let count = trial_division_free(&moduli, lcm)
            .iter()
            .filter(|&&b| b)
            .count();
        let exact = bset.inclusion_exclusion_density().unwrap().value;
        let direct = BigRational::new((count as i64).into(), (lcm as i64).into());
        assert!(
            (exact - direct.to_f64().unwrap()).abs() < 1e-15,
            "{moduli:?}"
        );
    }
}

#[test]
fn segment_boundaries_do_not_shift_the_sieve() {
    let bset = BSet::squares_of_primes(100);
    let n = (1 << 18) * 3 + 1001;
    let window = bset.sieve_window(n);
    for pos in [
        0,
        1,
        (1 << 18) - 1,
        1 << 18,
        (1 << 18) + 1,
        2 * (1 << 18) + 5,
        n - 1,
    ] {
        let squarefree_up_to_100 = bset.moduli().iter().all(|&b| pos % b != 0);
        assert_eq!(window.get(pos as i64), Some(squarefree_up_to_100), "{pos}");
    }
}

#[test]
fn squarefree_density_approaches_six_over_pi_squared() {
    let d = BSet::squares_of_primes(1000)
        .upper_density(2_000_000)
        .unwrap();
    assert!((d.value - 6.0 / std::f64::consts::PI.powi(2)).abs() < 2e-3);
}

#[test]
fn primes_match_trial_division() {
    let oracle: Vec<u64> = (2..500u64)
        .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
        .collect();
    assert_eq!(primes_up_to(499), oracle);
}

#[test]
fn primitive_abundant_numbers_match_a_divisor_sum_oracle() {
    let sigma = |n: u64| (1..=n).filter(|d| n.is_multiple_of(*d)).sum::<u64>();
    let abundant = |n: u64| sigma(n) > 2 * n;
    let oracle: Vec<u64> = (1..=400u64)
        .filter(|&n| abundant(n) && (1..n).filter(|d| n % d == 0).all(|d| !abundant(d)))
        .collect();
    assert_eq!(generate_primitive_abundant(400).moduli(), &oracle[..]);
}

#[test]
fn mirsky_block_frequencies_stabilize() {
    // the block law of eta is periodic with period lcm = 6, so windows of
    // different lengths see nearly the same 4-block distribution
    let bset = BSet::explicit([2, 3]).unwrap();
    let small = empirical(&bset.sieve_window(60_000), 4).unwrap();
    let large = empirical(&bset.sieve_window(600_000), 4).unwrap();
    let tv = poulsen_core::measures::tv_distance(&small, &large).unwrap();
    assert!(tv < 1e-3, "{tv}");
    assert!((large.marginal_one(0) - 1.0 / 3.0).abs() < 1e-4);
}

#[test]
fn admissibility_of_eta_and_of_windows_hitting_every_residue() {
    let bset = BSet::explicit([2, 3]).unwrap();
    assert!(bset.admissible(&bset.sieve_window(1000)));
    let all_ones = poulsen_core::BitWindow::ones(0, 10);
    assert!(!bset.admissible(&all_ones));
}
