mod common;

use num::{BigRational, BigUint, One, Zero};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermo_core::detect::lp::chebyshev;
use thermo_core::detect::{
    chebyshev_defect, fit_h, periodic_defect, uniform_defect, Candidate, CandidateDoc,
};
use thermo_core::exact::ratio;
use thermo_core::factor::OneBlockFactor;
use thermo_core::gibbs::{transfer_pressure, weak_gibbs_constants, MarkovMeasure, Pressure};
use thermo_core::potential::LocallyConstantPotential;
use thermo_core::seq::{additive_table, build_g_table, check_subadditive, partition_sum, pressure_estimate, SeqTable};
use thermo_core::shift::{primitive_period, Sft};

struct System {
    pi: OneBlockFactor,
    f: LocallyConstantPotential,
}

fn system(seed: u64, max_symbols: usize) -> System {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=max_symbols);
    let names: Vec<String> = (0..k).map(|i| format!("s{i}")).collect();
    let sft = Sft::new(names, common::random_irreducible(&mut rng, k)).unwrap();
    let (map, target) = common::random_map(&mut rng, k);
    let pi = OneBlockFactor::new(sft.clone(), map, target).unwrap();
    let f = common::random_potential(&mut rng, &sft);
    System { pi, f }
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 256,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(0x7e57),
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn block_counts_match_enumeration(seed in any::<u64>(), n in 1usize..7) {
        let s = system(seed, 4);
        let sft = s.pi.domain();
        prop_assert_eq!(sft.count_blocks(n), BigUint::from(sft.enumerate_blocks(n).len()));
    }

    #[test]
    fn periodic_orbits_account_for_traces(seed in any::<u64>(), q in 1usize..7) {
        let sft = system(seed, 4).pi.domain().clone();
        // Σ_{d | q} d · #(orbits of primitive period d) = trace(A^q)
        let total: usize = sft
            .periodic_points(q)
            .iter()
            .filter(|p| q % p.period() == 0)
            .map(|p| p.period())
            .sum();
        prop_assert_eq!(BigUint::from(total), sft.trace_power(q));
        for p in sft.periodic_points(q) {
            prop_assert_eq!(primitive_period(&p.block), p.period());
        }
    }

    #[test]
    fn bridges_join_words(seed in any::<u64>()) {
        let sft = system(seed, 4).pi.domain().clone();
        let p = sft.weak_spec_number().unwrap();
        for u in sft.enumerate_blocks(2) {
            for v in sft.enumerate_blocks(2) {
                let w = sft.bridge(&u, &v, p).expect("irreducible shifts bridge within p");
                prop_assert!(w.len() <= p);
                let joined = u.concat(&w).concat(&v);
                prop_assert!(sft.is_allowable(&joined));
            }
        }
    }

    #[test]
    fn fibers_match_brute_force(seed in any::<u64>(), n in 1usize..6) {
        let s = system(seed, 4);
        let sft = s.pi.domain();
        let matrix: Vec<Vec<u8>> = (0..sft.len())
            .map(|a| (0..sft.len()).map(|b| u8::from(sft.allowed(a, b))).collect())
            .collect();
        let brute = common::brute_fiber_counts(&matrix, s.pi.symbol_map(), n);
        let image = s.pi.image_blocks(n);
        prop_assert_eq!(image.len(), brute.len());
        for y in image {
            let fiber = s.pi.fiber_words(&y);
            prop_assert_eq!(BigUint::from(fiber.len()), brute[&y.0].clone());
            prop_assert!(fiber.iter().all(|x| s.pi.project(x) == y && sft.is_allowable(x)));
        }
    }

    #[test]
    fn birkhoff_sums_are_additive(seed in any::<u64>(), n in 1usize..5, m in 1usize..5) {
        let s = system(seed, 3);
        let sft = s.pi.domain();
        let r = s.f.range();
        for z in sft.enumerate_blocks(n + m + r - 1) {
            let whole = s.f.window_sum(&z, n + m);
            let split = s.f.window_sum(&z, n) + s.f.window_sum(&z[n..], m);
            prop_assert!((whole - split).abs() <= 1e-12);
        }
        for u in sft.enumerate_blocks(n) {
            prop_assert!(s.f.birkhoff_sup(sft, &u).unwrap() >= s.f.birkhoff_inf(sft, &u).unwrap());
        }
    }

    #[test]
    fn relative_tables_are_subadditive(seed in any::<u64>()) {
        let s = system(seed, 4);
        let t = build_g_table(&s.pi, &s.f, 7).unwrap();
        let report = check_subadditive(&t).unwrap();
        prop_assert!(report.holds, "worst slack {}", report.worst_slack);
    }

    #[test]
    fn fiber_sums_partition_the_domain(seed in any::<u64>()) {
        let s = system(seed, 4);
        let t = build_g_table(&s.pi, &s.f, 6).unwrap();
        let x = additive_table(s.pi.domain(), &s.f, 6).unwrap();
        for n in 1..=6 {
            let (zy, zx) = (partition_sum(&t, n).unwrap(), partition_sum(&x, n).unwrap());
            prop_assert!((zy - zx).abs() <= 1e-9 * zx.abs().max(1.0), "n={}: {} vs {}", n, zy, zx);
        }
    }

    #[test]
    fn fekete_bounds_the_transfer_pressure(seed in any::<u64>()) {
        let s = system(seed, 3);
        let sft = s.pi.domain();
        let est = pressure_estimate(&additive_table(sft, &s.f, 10).unwrap()).unwrap();
        let gibbs = transfer_pressure(sft, &s.f).unwrap();
        prop_assert!(est.fekete_upper >= gibbs.pressure - 1e-9);
        prop_assert!(gibbs.residual < 1e-10);
        prop_assert!(gibbs.measure.check_support(sft).is_ok());
    }

    #[test]
    fn markov_masses_sum_to_one(seed in any::<u64>(), n in 1usize..6) {
        let s = system(seed, 3);
        let sft = s.pi.domain();
        let mu = transfer_pressure(sft, &s.f).unwrap().measure;
        let total: f64 = sft.enumerate_blocks(n).iter().map(|u| mu.cylinder(u)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
        let pushed: f64 = s.pi.image_blocks(n).iter().map(|y| s.pi.pushforward_cylinder(&mu, y).unwrap()).sum();
        prop_assert!((pushed - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn exact_pushforwards_are_consistent(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(2..=4);
        let sft = Sft::full(k);
        let (map, target) = common::random_map(&mut rng, k);
        let pi = OneBlockFactor::new(sft.clone(), map, target).unwrap();
        let weights: Vec<u64> = (0..k).map(|_| rng.random_range(1..10)).collect();
        let total: u64 = weights.iter().sum();
        let mu = MarkovMeasure::bernoulli_exact(
            sft.alphabet().to_vec(),
            weights.iter().map(|&w| ratio(w, total)).collect(),
        )
        .unwrap();
        let mut sum = BigRational::zero();
        for y in pi.image_blocks(n) {
            let m = pi.pushforward_cylinder_exact(&mu, &y).unwrap();
            let ext: BigRational = (0..pi.target_alphabet().len())
                .map(|s| pi.pushforward_cylinder_exact(&mu, &y.concat(&[s])).unwrap())
                .sum();
            prop_assert_eq!(&m, &ext);
            sum += m;
        }
        prop_assert!(sum.is_one());
    }

    #[test]
    fn uniform_defects_dominate_periodic_ones(seed in any::<u64>(), r in 1usize..3) {
        let s = system(seed, 3);
        let depth = 8;
        let t = build_g_table(&s.pi, &s.f, depth).unwrap();
        let h = fit_h(&t, r, depth - r + 1).unwrap().candidate;
        for y in s.pi.image_periodic_points(4) {
            let j_max = (depth + 1 - r) / y.period();
            if j_max == 0 {
                continue;
            }
            for d in periodic_defect(&t, &h, &y.block, j_max).unwrap() {
                let u = uniform_defect(&t, &h, d.n).unwrap();
                prop_assert!(u.value >= 0.0);
                // Rounding allowance: the two sides are summed along different extensions.
                prop_assert!(
                    d.value.abs() <= u.value + u.log_variation_h / d.n as f64 + 1e-12,
                    "{} j={}: |d| = {}, u = {}, slack = {}",
                    s.pi.format_image_word(&y.block),
                    d.j,
                    d.value.abs(),
                    u.value,
                    u.log_variation_h / d.n as f64
                );
            }
        }
    }

    #[test]
    fn chebyshev_fits_are_locally_optimal(seed in any::<u64>()) {
        let s = system(seed, 3);
        let depth = 7;
        let t = build_g_table(&s.pi, &s.f, depth).unwrap();
        let fit = fit_h(&t, 1, depth).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let base: Vec<_> = fit.candidate.potential().entries().collect();
        for _ in 0..20 {
            let values = base.iter().map(|(w, v)| (w.clone(), v + rng.random_range(-1e-3..=1e-3)));
            let h = LocallyConstantPotential::on_words(t.alphabet().to_vec(), 1, values).unwrap();
            let d = chebyshev_defect(&t, &Candidate::from_potential(h), depth).unwrap();
            prop_assert!(d >= fit.t_star - 1e-12);
        }
    }

    #[test]
    fn wider_ranges_fit_at_least_as_well(seed in any::<u64>()) {
        let s = system(seed, 3);
        let t = build_g_table(&s.pi, &s.f, 8).unwrap();
        let one = fit_h(&t, 1, 7).unwrap().t_star;
        let two = fit_h(&t, 2, 7).unwrap().t_star;
        prop_assert!(two <= one + 1e-9, "r=2 gives {} > r=1 gives {}", two, one);
    }

    #[test]
    fn candidates_survive_json(seed in any::<u64>()) {
        let s = system(seed, 3);
        let t = build_g_table(&s.pi, &s.f, 6).unwrap();
        let c = fit_h(&t, 2, 5).unwrap().candidate;
        let json = serde_json::to_string(&c).unwrap();
        let doc: CandidateDoc = serde_json::from_str(&json).unwrap();
        let back = Candidate::from_doc(&doc, t.alphabet()).unwrap();
        prop_assert_eq!(back.is_exact(), c.is_exact());
        for (w, v) in c.potential().entries() {
            prop_assert_eq!(back.potential().try_value(&w), Some(v));
        }
    }

    #[test]
    fn lp_optimum_beats_random_points(seed in any::<u64>(), rows in 3usize..25, dim in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<Vec<f64>> = (0..rows).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let b: Vec<f64> = (0..rows).map(|_| rng.random_range(-5.0..5.0)).collect();
        let sol = chebyshev(&a, &b, dim).unwrap();
        let defect = |x: &[f64]| {
            a.iter()
                .zip(&b)
                .map(|(row, bi)| (row.iter().zip(x).map(|(r, xi)| r * xi).sum::<f64>() - bi).abs())
                .fold(0.0, f64::max)
        };
        prop_assert!((defect(&sol.x) - sol.t).abs() <= 1e-9 * sol.t.max(1.0));
        for _ in 0..50 {
            let x: Vec<f64> = sol.x.iter().map(|v| v + rng.random_range(-0.1..0.1)).collect();
            prop_assert!(defect(&x) >= sol.t - 1e-9);
        }
    }
}

#[test]
fn transfer_pressure_matches_long_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let shifts = [Sft::full(2), Sft::golden_mean()];
    for sft in &shifts {
        for _ in 0..10 {
            let f = common::random_potential(&mut rng, sft);
            let est = pressure_estimate(&additive_table(sft, &f, 20).unwrap()).unwrap();
            let p = transfer_pressure(sft, &f).unwrap().pressure;
            assert!((est.extrapolated - p).abs() <= 1e-8, "{} vs {p}", est.extrapolated);
        }
    }
}

#[test]
fn parry_measure_is_gibbs_at_every_depth() {
    let sft = Sft::golden_mean();
    let f = LocallyConstantPotential::zero(&sft);
    let g = transfer_pressure(&sft, &f).unwrap();
    let t: SeqTable = additive_table(&sft, &f, 12).unwrap();
    let mu: &MarkovMeasure = &g.measure;
    let r = weak_gibbs_constants(mu, &t, &Pressure::Transfer { value: g.pressure }, 12).unwrap();
    let bound = r.entries.iter().filter_map(|e| e.log_c).fold(0.0, f64::max);
    // μ[u] e^{nP} lies between 1/φ² and φ² up to rounding for the Parry measure.
    let phi = common::perron_2x2(1.0, 1.0, 1.0, 0.0);
    assert!(bound <= 2.0 * phi.ln() + 1e-9, "{bound}");
}
