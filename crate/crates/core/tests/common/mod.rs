#![allow(dead_code)]

use porofrac::discretization::{build_bonds, build_grid, BondTable, GridConfig, Influence, NodeGrid};
use porofrac::solid::SolidMaterial;
use porofrac::Vec2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn lattice(nx: usize, ny: usize, spacing: f64) -> (NodeGrid, BondTable) {
    let cfg = GridConfig::new(nx as f64 * spacing, ny as f64 * spacing, spacing);
    let grid = build_grid(&cfg).unwrap();
    let bonds = build_bonds(&grid, cfg.horizon(), Influence::Gaussian).unwrap();
    (grid, bonds)
}

pub fn rock() -> SolidMaterial {
    SolidMaterial { youngs_modulus: 1e8, poisson_ratio: 0.2, density: 2000.0, fracture_energy: 100.0 }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_field(rng: &mut StdRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn random_vecs(rng: &mut StdRng, n: usize, scale: f64) -> Vec<Vec2> {
    (0..n).map(|_| Vec2::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))).collect()
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}
