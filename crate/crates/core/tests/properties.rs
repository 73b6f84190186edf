mod common;

use common::{lattice, rock};
use porofrac::cli_io::bench::fluid_driven_preset;
use porofrac::cli_io::ScenarioConfig;
use porofrac::coupling::{apertures, classify, DomainThresholds};
use porofrac::discretization::build_fluid_mesh;
use porofrac::flow::{assemble, ElementProps};
use porofrac::linalg::{asymmetry, matvec};
use porofrac::solid::{damage, Kinematics, PlaneMode, SolidModel};
use porofrac::Vec2;
use proptest::prelude::*;

fn vecs(n: usize, scale: f64) -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec((-scale..scale, -scale..scale).prop_map(|(x, y)| Vec2::new(x, y)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn indicators_partition_unity(phi in 0.0..=1.0f64, c1 in 0.0..0.9f64, gap in 0.01..0.5f64) {
        let t = DomainThresholds { c1, c2: (c1 + gap).min(1.0) };
        let (r, f) = classify(phi, &t);
        prop_assert!((0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&f));
        prop_assert!((r + f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn forces_balance_with_broken_bonds(
        u in vecs(49, 1e-4),
        p in prop::collection::vec(-1e6..1e6f64, 49),
        cuts in prop::collection::vec(any::<prop::sample::Index>(), 0..40),
        geometric in any::<bool>(),
    ) {
        let (_, mut b) = lattice(6, 6, 0.1);
        let nb = b.bonds.len();
        for c in &cuts {
            b.break_bond(c.index(nb));
        }
        let kin = if geometric { Kinematics::Geometric } else { Kinematics::Linearized };
        let mut m = SolidModel::new(rock(), PlaneMode::PlaneStrain, kin);
        let f = m.internal_force(&b, &u, &p, &vec![0.8; 49]).unwrap();
        let total: Vec2 = f.iter().zip(&b.volumes).map(|(v, w)| v * *w).sum();
        let size: f64 = f.iter().zip(&b.volumes).map(|(v, w)| v.norm() * w).sum();
        prop_assert!(total.norm() <= 1e-10 * size.max(1e-300));
        let phi = damage(&b);
        prop_assert!(phi.iter().all(|d| (0.0..=1.0).contains(d)));
    }

    #[test]
    fn apertures_are_never_negative(u in vecs(49, 2e-2), radius in 0.05..0.3f64) {
        let (_, b) = lattice(6, 6, 0.1);
        for kin in [Kinematics::Geometric, Kinematics::Linearized] {
            let a = apertures(&b, &u, radius, b.horizon, kin).unwrap();
            prop_assert!(a.iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn conductance_is_symmetric_and_kills_constants(
        mobility in prop::collection::vec(1e-12..1e-6f64, 25),
        storage in prop::collection::vec(0.0..1e-8f64, 25),
    ) {
        let (g, _) = lattice(5, 5, 0.2);
        let mesh = build_fluid_mesh(&g);
        let props: Vec<ElementProps> = mobility
            .iter()
            .zip(&storage)
            .map(|(&mobility, &storage)| ElementProps { storage, mobility, coupling_alpha: 1.0, fluid_density: 1000.0 })
            .collect();
        let mats = assemble(&mesh, &g.positions, &props, Vec2::zeros()).unwrap();
        prop_assert!(asymmetry(&mats.h) < 1e-12);
        prop_assert!(asymmetry(&mats.s) < 1e-12);
        let hmax = mobility.iter().cloned().fold(0.0, f64::max);
        prop_assert!(matvec(&mats.h, &vec![1.0; g.node_count()]).iter().all(|v| v.abs() < 1e-12 * hmax));
    }

    #[test]
    fn config_round_trips(
        e in 1e6..1e11f64,
        nu in 0.0..0.45f64,
        k in 1e-18..1e-10f64,
        theta in 0.5..=1.0f64,
        dt in 1e-6..1e2f64,
        rate in 1e-6..1e-2f64,
    ) {
        let mut cfg = fluid_driven_preset(0.05, rate);
        cfg.solid.youngs_modulus = e;
        cfg.solid.poisson_ratio = nu;
        cfg.flow.permeability = k;
        cfg.time.theta = theta;
        cfg.time.dt = dt;
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
