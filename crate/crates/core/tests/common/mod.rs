#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use toricube::model::parse_spec;
use toricube::{rng, ToricCubeSpec};

pub const FIXTURES: [&str; 6] = ["segment", "square", "triangle", "diagonal_split", "zero", "monomial"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.json"))
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn fixture(name: &str) -> ToricCubeSpec {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    ToricCubeSpec::new(parse_spec(&text).unwrap())
}

/// Seeded random specs with `1 <= d <= 4`, `1 <= n <= 6`, entries in `0..=3`.
pub fn regression_family(count: usize, seed: u64) -> Vec<ToricCubeSpec> {
    (0..count)
        .map(|i| {
            let mut r = rng::seeded(rng::derive_seed(seed, &[i as u64]));
            let d = r.random_range(1..=4usize);
            let n = r.random_range(1..=6usize);
            let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(0..=3)).collect()).collect();
            ToricCubeSpec::from_rows(d, &rows)
        })
        .collect()
}

pub fn describe(spec: &ToricCubeSpec) -> String {
    spec.matrix().to_canonical_json()
}
