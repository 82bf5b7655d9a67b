//! Exit criteria. Each test prints one `PASS`/`FAIL` line and asserts it.
//!
//! Run with `cargo test -p poulsen-core --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use poulsen_core::bfree::BSet;
use poulsen_core::counterexample::{
    cylinder_separation, entropy_estimate, hereditary_language, midpoint_unreachable_demo,
    mme_candidate, PeriodicSystem, Side, ORBIT_A, ORBIT_A_PRIME, ORBIT_B,
};
use poulsen_core::markov::{
    build_doubled_chain, build_single_chain, check_aperiodic, sample_schedule,
};
use poulsen_core::measures::{empirical, mix, selector_r, tv_distance};
use poulsen_core::{
    approximate_midpoint, BitWindow, Block, BlockMeasure, BlockSet, MidpointRequest,
};

const SEED: u64 = 20_240_601;

fn report(criterion: &str, checks: &[(&str, bool)], elapsed: Duration, budget: Option<Duration>) {
    let in_time = budget.is_none_or(|b| elapsed < b);
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| *name)
        .chain((!in_time).then_some("runtime"))
        .collect();
    let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "[{verdict}] {criterion} ({:.2}s{}){}",
        elapsed.as_secs_f64(),
        budget
            .map(|b| format!(" of {}s", b.as_secs()))
            .unwrap_or_default(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(": failed {}", failed.join(", "))
        }
    );
    assert!(failed.is_empty(), "{criterion}: failed {failed:?}");
}

#[test]
fn criterion_1_markov_identities() {
    let t = Instant::now();
    let mut stationary = true;
    let mut single_power = true;
    let mut doubled_power = true;
    for n0 in 2..=16usize {
        let single = build_single_chain(n0).unwrap();
        let doubled = build_doubled_chain(n0).unwrap();
        stationary &= single.is_row_stochastic() && single.is_stationary();
        stationary &= doubled.is_row_stochastic() && doubled.is_stationary();
        let s = check_aperiodic(&single, n0 + 1).unwrap();
        let d = check_aperiodic(&doubled, 2 * (n0 + 1)).unwrap();
        if !s || !d {
            println!(
                "    n0={n0}: single^{} positive={s}, doubled^{} positive={d}; \
                 smallest positive power {:?} / {:?}",
                n0 + 1,
                2 * (n0 + 1),
                single.primitivity_exponent(),
                doubled.primitivity_exponent()
            );
        }
        single_power &= s;
        doubled_power &= d;
    }
    report(
        "1 markov identities",
        &[
            ("exact stationarity", stationary),
            ("single chain power n0+1 positive", single_power),
            ("doubled chain power 2(n0+1) positive", doubled_power),
        ],
        t.elapsed(),
        Some(Duration::from_secs(1)),
    );
}

#[test]
fn criterion_2_bfree_density() {
    let t = Instant::now();
    let two_three = BSet::explicit([2, 3]).unwrap();
    let exact = two_three.inclusion_exclusion_density().unwrap().value;
    let sieve = two_three.upper_density(1_000_000).unwrap().value;
    let squares = BSet::squares_of_primes(1000)
        .upper_density(10_000_000)
        .unwrap()
        .value;
    // 1/ζ(2) from the Euler product over the first primes, independent of the sieve
    let euler: f64 = poulsen_core::bfree::primes_up_to(2_000_000)
        .iter()
        .map(|&p| 1.0 - 1.0 / (p as f64 * p as f64))
        .product();
    println!(
        "    {{2,3}}: sieve {sieve}, inclusion-exclusion {exact}; squares: {squares}, 6/pi^2 {}",
        6.0 / std::f64::consts::PI.powi(2)
    );
    report(
        "2 b-free density",
        &[
            (
                "{2,3} within 1e-5 of 1/3",
                (sieve - exact).abs() <= 1e-5 && (exact - 1.0 / 3.0).abs() < 1e-15,
            ),
            (
                "euler product agrees with 6/pi^2",
                (euler - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-6,
            ),
            (
                "squares within 1e-3 of 6/pi^2",
                (squares - euler).abs() <= 1e-3,
            ),
        ],
        t.elapsed(),
        Some(Duration::from_secs(30)),
    );
}

#[test]
fn criterion_3_entropy_identity() {
    let t = Instant::now();
    let alt = PeriodicSystem::parse("10").unwrap();
    let mut alternating = true;
    for n in [12, 24, 36] {
        let h = entropy_estimate(std::slice::from_ref(&alt), n).unwrap();
        println!("    C=10 n={n}: {h}");
        alternating &= h > 0.5 && h <= 0.5 + 12f64.log2() / n as f64;
    }
    let bset = BSet::explicit([2, 3]).unwrap();
    let values: Vec<f64> = [12, 24, 36]
        .iter()
        .map(|&n| {
            bset.hereditary_entropy_estimate(n, 1_000_000)
                .unwrap()
                .value
        })
        .collect();
    println!("    B={{2,3}} n=12,24,36: {values:?}");
    let bound = values[2] > 1.0 / 3.0 && values[2] <= 1.0 / 3.0 + 0.25;
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    report(
        "3 entropy identity",
        &[
            ("alternating bounds", alternating),
            ("{2,3} bound at n=36", bound),
            ("{2,3} nonincreasing", monotone),
        ],
        t.elapsed(),
        Some(Duration::from_secs(120)),
    );
}

#[test]
fn criterion_4_midpoint_construction() {
    let t = Instant::now();
    let eta = BSet::explicit([2, 3]).unwrap().sieve_window(1_000_000);
    let coin = BitWindow::bernoulli(0, eta.len(), 0.5, SEED).unwrap();
    let x2 = eta.multiply(&coin).unwrap();
    let mut checks = Vec::new();
    for k0 in [1usize, 2] {
        let req = MidpointRequest::new(
            eta.clone(),
            eta.clone(),
            x2.clone(),
            k0,
            0.05,
            SEED + k0 as u64,
        );
        let r = approximate_midpoint(&req).unwrap();
        let freq = r.achieved.marginal_one(0);
        println!(
            "    k0={k0}: n0={} tv={:.4} one-freq={:.4} coverage={:.4} barred={:.4} halves-tv={:.4}",
            r.n0, r.achieved_tv, freq, r.coverage.fraction, r.star_barred_fraction, r.stationarity_tv
        );
        let heredity = eta.dominates(&r.eta_bar).unwrap();
        let tv = r.achieved_tv <= 0.05;
        let one_freq = k0 != 1 || (freq - 0.25).abs() <= 0.05;
        let coverage = r.coverage.fraction >= 0.9;
        let split = (r.star_barred_fraction - 0.5).abs() <= 0.02;
        let halves = r.stationarity_tv <= 0.1;
        checks.extend([heredity, tv, one_freq, coverage, split, halves]);
    }
    let names = [
        "k0=1 heredity",
        "k0=1 tv",
        "k0=1 one-frequency",
        "k0=1 coverage",
        "k0=1 split",
        "k0=1 halves",
        "k0=2 heredity",
        "k0=2 tv",
        "k0=2 one-frequency",
        "k0=2 coverage",
        "k0=2 split",
        "k0=2 halves",
    ];
    let named: Vec<(&str, bool)> = names.iter().copied().zip(checks).collect();
    report(
        "4 midpoint construction",
        &named,
        t.elapsed(),
        Some(Duration::from_secs(60)),
    );
}

#[test]
fn criterion_5_counterexample() {
    let t = Instant::now();
    let a: Block = ORBIT_A.parse().unwrap();
    let b: Block = ORBIT_B.parse().unwrap();
    let sep = cylinder_separation(&a, &b).unwrap();
    // oracle: every phase of one support against the other, mod 9
    let support = |s: &str| -> Vec<usize> {
        s.char_indices()
            .filter(|(_, c)| *c == '1')
            .map(|(i, _)| i)
            .collect()
    };
    let (sa, sb) = (support(ORBIT_A), support(ORBIT_B));
    let embeds =
        |x: &[usize], y: &[usize]| (0..9).any(|t| x.iter().all(|o| y.contains(&((o + t) % 9))));
    let oracle = !embeds(&sa, &sb) && !embeds(&sb, &sa);
    let witnesses = sep.witness_a == [0, 2, 5] && sep.witness_b == [0, 2, 6];
    let demo = midpoint_unreachable_demo(&a, &b, &[0.25, 0.5, 0.75, 1.0], 1_000_000, SEED).unwrap();
    let mut zero = true;
    let mut far = true;
    for row in &demo.rows {
        println!(
            "    {:?} p={} freqA={:.5} freqB={:.5}",
            row.side, row.p, row.freq_a, row.freq_b
        );
        zero &= match row.side {
            Side::A => row.freq_b == 0.0,
            Side::B => row.freq_a == 0.0,
        };
        let dist = (row.freq_a - 1.0 / 18.0)
            .abs()
            .max((row.freq_b - 1.0 / 18.0).abs());
        far &= dist >= 1.0 / 18.0 - 1e-3;
    }
    report(
        "5 counterexample",
        &[
            ("separated", sep.separated && oracle),
            ("witness offsets", witnesses),
            ("one witness vanishes", zero),
            ("distance to midpoint", far && demo.rows.len() == 8),
        ],
        t.elapsed(),
        Some(Duration::from_secs(60)),
    );
}

#[test]
fn criterion_6_mme_candidate() {
    let t = Instant::now();
    let a: Block = ORBIT_A_PRIME.parse().unwrap();
    let r = mme_candidate(&a, 1_000_000, SEED, 18).unwrap();
    let h18 = r.block_entropies[17].1;
    println!(
        "    one-frequency {:.6}, H_18/18 = {h18:.4}",
        r.one_frequency
    );
    report(
        "6 mme candidate",
        &[
            ("one-frequency", (r.one_frequency - 2.0 / 9.0).abs() <= 1e-3),
            ("block entropy at k=18", h18 > 0.9 * 4.0 / 9.0),
        ],
        t.elapsed(),
        None,
    );
}

fn random_measure(rng: &mut ChaCha8Rng, k: usize) -> BlockMeasure {
    let support = rng.gen_range(1..=8);
    let raw: Vec<(u64, f64)> = (0..support)
        .map(|_| (rng.gen_range(0..1u64 << k), rng.gen_range(0.01..1.0)))
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    BlockMeasure::from_weights(
        k,
        raw.into_iter()
            .map(|(c, w)| (Block::new(k, c).unwrap(), w / total)),
        0,
    )
    .unwrap()
}

#[test]
fn criterion_7_property_suites() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut order = true;
    for k in 1..=12usize {
        for a in 0..1u64 << k {
            let ba = Block::new(k, a).unwrap();
            order &= ba.dominates(&ba).unwrap();
            for b in 0..1u64 << k {
                let bb = Block::new(k, b).unwrap();
                let (x, y) = (ba.dominates(&bb).unwrap(), bb.dominates(&ba).unwrap());
                order &= !(x && y) || a == b;
                order &= x == (0..k).all(|i| !bb.bit(i) || ba.bit(i));
            }
        }
    }
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=12);
        let m = (1u64 << k) - 1;
        let (a, b, c) = (
            rng.gen::<u64>() & m,
            rng.gen::<u64>() & m,
            rng.gen::<u64>() & m,
        );
        let (a, b, c) = (a | b | c, b | c, c);
        let (ba, bb, bc) = (
            Block::new(k, a).unwrap(),
            Block::new(k, b).unwrap(),
            Block::new(k, c).unwrap(),
        );
        order &=
            ba.dominates(&bb).unwrap() && bb.dominates(&bc).unwrap() && ba.dominates(&bc).unwrap();
    }

    let mut metric = true;
    for _ in 0..1000 {
        let (p, q, r) = (
            random_measure(&mut rng, 4),
            random_measure(&mut rng, 4),
            random_measure(&mut rng, 4),
        );
        let pq = tv_distance(&p, &q).unwrap();
        metric &= tv_distance(&p, &p).unwrap() == 0.0;
        metric &= (pq - tv_distance(&q, &p).unwrap()).abs() < 1e-12;
        metric &= (0.0..=1.0 + 1e-12).contains(&pq);
        metric &= pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12;
        metric &= (tv_distance(&p, &mix(&p, &q, 0.5).unwrap()).unwrap() - pq / 2.0).abs() < 1e-9;
    }

    let mut selector = true;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=12);
        let m = (1u64 << n) - 1;
        let u = Block::new(n, rng.gen::<u64>() & m).unwrap();
        let mut codes: Vec<u64> = (0..rng.gen_range(1..20))
            .map(|_| rng.gen::<u64>() & m)
            .collect();
        codes.push(u.code() & rng.gen::<u64>());
        let f = BlockSet::new(n, codes.iter().map(|&c| Block::new(n, c).unwrap())).unwrap();
        let r = selector_r(&u, &f).unwrap();
        let best = codes
            .iter()
            .map(|&c| Block::new(n, c).unwrap())
            .filter(|w| u.dominates(w).unwrap())
            .map(|w| w.to_string())
            .min()
            .unwrap();
        selector &= f.contains(&r) && u.dominates(&r).unwrap() && r.to_string() == best;
    }

    let mut closure = true;
    for period in ["1", "10", "110", ORBIT_A, ORBIT_B, ORBIT_A_PRIME, "1101001"] {
        let sys = PeriodicSystem::parse(period).unwrap();
        for n in 1..=16 {
            let l = hereditary_language(std::slice::from_ref(&sys), n).unwrap();
            closure &= l.iter().all(|u| {
                (0..n)
                    .filter(|&i| u.bit(i))
                    .all(|i| l.contains(&Block::new(n, u.code() & !(1 << i)).unwrap()))
            });
        }
    }

    let twice = |seed: u64| {
        let eta = BSet::explicit([2, 3]).unwrap().sieve_window(100_000);
        let coin = BitWindow::bernoulli(0, eta.len(), 0.5, seed).unwrap();
        let x2 = eta.multiply(&coin).unwrap();
        let r = approximate_midpoint(&MidpointRequest::new(eta.clone(), eta, x2, 2, 0.05, seed))
            .unwrap();
        let s = sample_schedule(&build_doubled_chain(7).unwrap(), 10_000, seed);
        (coin, empirical(&r.eta_bar, 2).unwrap(), r.eta_bar, s)
    };
    let determinism = twice(SEED) == twice(SEED);

    report(
        "7 property suites",
        &[
            ("domination partial order", order),
            ("tv metric axioms", metric),
            ("selector contract", selector),
            ("downward closure", closure),
            ("seed determinism", determinism),
        ],
        t.elapsed(),
        None,
    );
}
