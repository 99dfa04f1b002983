//! Values frozen from independent computations: closed forms, and a
//! separate brute-force enumeration of the trap factor's fibers.

mod common;

use num::BigUint;

use thermo_core::detect::{fit_h, Candidate};
use thermo_core::exact::LogMonomial;
use thermo_core::gibbs::transfer_pressure;
use thermo_core::potential::LocallyConstantPotential;
use thermo_core::seq::{additive_table, build_g_table, defect_profile, pressure_estimate};

#[test]
fn trap_profile_matches_enumeration() {
    let pi = common::factor("trap.json");
    let t = build_g_table(&pi, &LocallyConstantPotential::zero(pi.domain()), 10).unwrap();
    let p = defect_profile(&t, 0.05).unwrap();
    let exact = |n: usize, m: usize| {
        p.entries.iter().find(|e| e.n == n && e.m == m).and_then(|e| e.exact_c.clone()).unwrap()
    };
    let c1 = ["3", "5", "9", "17", "33", "65", "129", "257", "513"];
    for (m, want) in (1..).zip(c1) {
        assert_eq!(exact(1, m), format!("{want}/1"), "C_(1,{m})");
    }
    let c2 = ["5", "5", "9", "17", "33", "65", "129", "257"];
    for (m, want) in (1..).zip(c2) {
        assert_eq!(exact(2, m), format!("{want}/1"), "C_(2,{m})");
    }
    assert!(p.growth.fired);
    let slope = p.growth.fit.unwrap().slope;
    assert!((slope - 2f64.ln()).abs() < 0.05, "{slope}");
}

#[test]
fn golden_potential_pressure() {
    let sft = common::sft("golden.json");
    let f = common::potential("golden_potential.json", &sft);
    // ln of the Perron root of [[e^{1/4}, e^{-1/2}], [e^{3/4}, 0]]
    let frozen = 0.6649520792604184;
    let g = transfer_pressure(&sft, &f).unwrap();
    assert!((g.pressure - frozen).abs() < 1e-12, "{}", g.pressure);
    let closed = common::perron_2x2(0.25f64.exp(), (-0.5f64).exp(), 0.75f64.exp(), 0.0).ln();
    assert!((closed - frozen).abs() < 1e-15);
    let est = pressure_estimate(&additive_table(&sft, &f, 20).unwrap()).unwrap();
    assert!((est.extrapolated - frozen).abs() < 1e-6, "{}", est.extrapolated);
    assert!(est.fekete_upper >= frozen);
}

#[test]
fn golden_counts_are_fibonacci() {
    let sft = common::sft("golden.json");
    let t = additive_table(&sft, &LocallyConstantPotential::zero(&sft), 20).unwrap();
    let est = pressure_estimate(&t).unwrap();
    let (mut a, mut b) = (2.0f64, 3.0f64);
    for n in 1..=20 {
        assert_eq!(est.log_z[n - 1], a.ln(), "Z_{n}");
        (a, b) = (b, a + b);
    }
    // Z_20 = F_22 = 17711
    assert_eq!(est.fekete_upper, 17711f64.ln() / 20.0);
}

#[test]
fn amalgam_compensation_is_constant_log_two() {
    let pi = common::factor("amalgam.json");
    let t = build_g_table(&pi, &LocallyConstantPotential::zero(pi.domain()), 8).unwrap();
    let fit = fit_h(&t, 1, 8).unwrap();
    let ln2 = LogMonomial::ln_uint(&BigUint::from(2u32));
    let c: &Candidate = &fit.candidate;
    for s in [0, 1] {
        assert_eq!(c.exact_value(&[s]).unwrap().sub(&ln2).is_zero(), Some(true));
    }
    assert!(fit.exact);
    assert_eq!(fit.t_star, 0.0);
}
