#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num::BigUint;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;

use thermo_core::factor::{FactorDoc, OneBlockFactor};
use thermo_core::potential::{LocallyConstantPotential, PotentialDoc};
use thermo_core::seq::{SeqTable, TableDoc};
use thermo_core::shift::{Sft, SftDoc};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read<T: DeserializeOwned>(name: &str) -> T {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn factor(name: &str) -> OneBlockFactor {
    OneBlockFactor::from_doc(&read::<FactorDoc>(name)).unwrap()
}

pub fn sft(name: &str) -> Sft {
    Sft::from_doc(&read::<SftDoc>(name)).unwrap()
}

pub fn potential(name: &str, sft: &Sft) -> LocallyConstantPotential {
    LocallyConstantPotential::from_doc(&read::<PotentialDoc>(name), sft).unwrap()
}

pub fn table(name: &str) -> SeqTable {
    SeqTable::from_doc(&read::<TableDoc>(name)).unwrap()
}

pub fn collapse() -> OneBlockFactor {
    factor("collapse.json")
}

/// Fiber sizes by brute force: every word over the domain alphabet, kept
/// when each adjacent pair is a 1 in the transition matrix, grouped by image.
pub fn brute_fiber_counts(matrix: &[Vec<u8>], map: &[usize], n: usize) -> BTreeMap<Vec<usize>, BigUint> {
    let k = matrix.len();
    let mut out: BTreeMap<Vec<usize>, BigUint> = BTreeMap::new();
    let mut x = vec![0usize; n];
    loop {
        if x.windows(2).all(|p| matrix[p[0]][p[1]] == 1) {
            let y: Vec<usize> = x.iter().map(|&s| map[s]).collect();
            *out.entry(y).or_default() += 1u32;
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            x[i] += 1;
            if x[i] < k {
                break;
            }
            x[i] = 0;
        }
    }
}

/// Largest root of `λ² - (a+d)λ + (ad - bc)`.
pub fn perron_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let tr = a + d;
    let det = a * d - b * c;
    (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0
}

/// Random irreducible transition matrix on `k` symbols.
pub fn random_irreducible(rng: &mut ChaCha8Rng, k: usize) -> Vec<Vec<u8>> {
    loop {
        let m: Vec<Vec<u8>> = (0..k)
            .map(|_| (0..k).map(|_| u8::from(rng.random_bool(0.6))).collect())
            .collect();
        let names = (0..k).map(|i| format!("s{i}")).collect();
        if let Ok(s) = Sft::new(names, m.clone()) {
            if s.is_irreducible() {
                return m;
            }
        }
    }
}

/// Random surjection of `k` symbols onto `1..=k` image symbols.
pub fn random_map(rng: &mut ChaCha8Rng, k: usize) -> (Vec<usize>, Vec<String>) {
    let l = rng.random_range(1..=k);
    let mut map: Vec<usize> = (0..k).map(|i| if i < l { i } else { rng.random_range(0..l) }).collect();
    for i in (1..k).rev() {
        let j = rng.random_range(0..=i);
        map.swap(i, j);
    }
    let names = (0..l).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    (map, names)
}

/// Random locally constant potential of range 1 or 2 with values in [-1, 1].
pub fn random_potential(rng: &mut ChaCha8Rng, sft: &Sft) -> LocallyConstantPotential {
    let r = rng.random_range(1..=2);
    let values: Vec<f64> = (0..sft.len().pow(r as u32)).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let k = sft.len();
    LocallyConstantPotential::from_fn(sft, r, |w| values[w.iter().fold(0, |acc, &s| acc * k + s)]).unwrap()
}
