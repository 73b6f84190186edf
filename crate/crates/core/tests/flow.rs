mod common;

use common::{lattice, max_abs, random_field, rng};
use porofrac::discretization::build_fluid_mesh;
use porofrac::flow::{assemble, element_matrices, ElementProps, FlowBcs, FlowMaterial, FlowMatrices};
use porofrac::linalg::{asymmetry, csr_from_triplets, matvec, matvec_transpose, solve_spd, Constraints};
use porofrac::solvers::FlowStepper;
use porofrac::Vec2;

fn unit_square() -> [Vec2; 4] {
    [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)]
}

fn props(storage: f64, mobility: f64, alpha: f64) -> ElementProps {
    ElementProps { storage, mobility, coupling_alpha: alpha, fluid_density: 1000.0 }
}

/// Exact conductance of a bilinear square with unit mobility, by hand:
/// `int dNa.dNb` over the unit square.
fn hand_conductance(a: usize, b: usize) -> f64 {
    match (a as i32 - b as i32).rem_euclid(4) {
        0 => 2.0 / 3.0,
        2 => -1.0 / 3.0,
        _ => -1.0 / 6.0,
    }
}

fn material() -> FlowMaterial {
    FlowMaterial {
        biot_alpha: 1.0,
        porosity: 0.4,
        permeability: 1e-12,
        viscosity: 1e-3,
        fluid_bulk: 1e8,
        solid_bulk: None,
        storage: None,
        fluid_density: 1000.0,
    }
}

#[test]
fn unit_element_conductance() {
    let em = element_matrices(&unit_square(), &props(1.0, 1.0, 1.0), 1.0, Vec2::zeros()).unwrap();
    for a in 0..4 {
        for b in 0..4 {
            assert!((em.conductance[(a, b)] - hand_conductance(a, b)).abs() < 1e-14, "({a},{b})");
        }
        assert!(em.conductance.row(a).sum().abs() < 1e-14);
    }
    let doubled = element_matrices(&unit_square(), &props(1.0, 2.0, 1.0), 1.0, Vec2::zeros()).unwrap();
    assert_eq!(doubled.conductance, 2.0 * em.conductance);
}

#[test]
fn unit_element_storage() {
    let h = 0.5;
    let corners = unit_square().map(|c| h * c);
    let em = element_matrices(&corners, &props(1.0, 1.0, 1.0), 2.0, Vec2::zeros()).unwrap();
    for a in 0..4 {
        assert!((em.storage.row(a).sum() - h * h / 4.0 * 2.0).abs() < 1e-15);
    }
    assert_eq!(em.storage, em.storage.transpose());
    let zero = element_matrices(&corners, &props(0.0, 1.0, 1.0), 2.0, Vec2::zeros()).unwrap();
    assert!(zero.storage.iter().all(|&v| v == 0.0));
}

#[test]
fn unit_element_coupling() {
    let em = element_matrices(&unit_square(), &props(1.0, 1.0, 1.0), 1.0, Vec2::zeros()).unwrap();
    // Unit pressure: each corner collects half of each adjacent edge's
    // outward normal times its length.
    let normals = [Vec2::new(0.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, 0.0)];
    let f = em.coupling * nalgebra::Vector4::repeat(1.0);
    let mut total = Vec2::zeros();
    for a in 0..4 {
        // Corner `a` starts edge `a` and ends edge `a - 1`.
        let expected = 0.5 * (normals[a] + normals[(a + 3) % 4]);
        let got = Vec2::new(f[2 * a], f[2 * a + 1]);
        assert!((got - expected).norm() < 1e-14, "corner {a}: {got:?}");
        total += got;
    }
    assert!(total.norm() < 1e-14);
    let none = element_matrices(&unit_square(), &props(1.0, 1.0, 0.0), 1.0, Vec2::zeros()).unwrap();
    assert!(none.coupling.iter().all(|&v| v == 0.0));
}

#[test]
fn global_matrices() {
    let (g, _) = lattice(6, 4, 0.1);
    let mesh = build_fluid_mesh(&g);
    let p = vec![ElementProps::uniform(&material()); mesh.element_count()];
    let m = assemble(&mesh, &g.positions, &p, Vec2::zeros()).unwrap();
    let n = g.node_count();
    assert_eq!(asymmetry(&m.s), 0.0);
    assert!(asymmetry(&m.h) < 1e-15);
    let hs = max_abs(m.h.values().iter().copied());
    assert!(max_abs(matvec(&m.h, &vec![1.0; n])) < 1e-12 * hs);
    let total: f64 = matvec(&m.s, &vec![1.0; n]).iter().sum();
    assert!((total - material().storage() * 0.6 * 0.4).abs() < 1e-12 * total);
    // Shared node of two elements sums both contributions.
    let a = g.id(1, 0);
    let single = element_matrices(&[g.positions[0], g.positions[1], g.positions[g.id(1, 1)], g.positions[g.id(0, 1)]], &p[0], 1.0, Vec2::zeros())
        .unwrap();
    assert!((porofrac::linalg::entry(&m.s, a, a) - 2.0 * single.storage[(1, 1)]).abs() < 1e-25);
    // Frozen solid: no volumetric source.
    assert!(max_abs(matvec_transpose(&m.q, &vec![0.0; 2 * n])) == 0.0);
}

#[test]
fn negative_mobility_rejected_by_material() {
    let mut m = material();
    m.permeability = -1.0;
    assert!(m.validate().is_err());
}

#[test]
fn linear_darcy_profile_is_exact() {
    let (g, _) = lattice(10, 3, 0.1);
    let mesh = build_fluid_mesh(&g);
    let p = vec![ElementProps::uniform(&material()); mesh.element_count()];
    let m = assemble(&mesh, &g.positions, &p, Vec2::zeros()).unwrap();
    let mut c = Constraints::new();
    for iy in 0..=g.ny {
        c.insert(g.id(0, iy), 2e5).unwrap();
        c.insert(g.id(g.nx, iy), 1e5).unwrap();
    }
    let n = g.node_count();
    let rhs = c.reduce_rhs(&m.h, &vec![0.0; n]);
    let x = solve_spd(&c.reduce_matrix(&m.h), &rhs).unwrap();
    let sol = c.expand(n, &x);
    for (a, (v, x)) in sol.iter().zip(&g.positions).enumerate() {
        let exact = 2e5 - 1e5 * x.x;
        assert!((v - exact).abs() < 1e-9 * 2e5, "node {a}: {v} vs {exact}");
    }
}

#[test]
fn discrete_mass_balance() {
    let (g, _) = lattice(6, 6, 0.1);
    let mesh = build_fluid_mesh(&g);
    let n = g.node_count();
    let mut r = rng(1);
    let props: Vec<ElementProps> =
        (0..mesh.element_count()).map(|_| props(rand::Rng::gen_range(&mut r, 1e-9..1e-8), 1e-9, 0.8)).collect();
    let m = assemble(&mesh, &g.positions, &props, Vec2::zeros()).unwrap();
    let bcs = FlowBcs { dirichlet: Constraints::new(), sources: vec![(g.id(3, 3), 1e-3), (g.id(1, 4), -2e-4)] };
    let dt = 0.01;
    for theta in [0.5, 1.0] {
        let stepper = FlowStepper::new(&m, &bcs, theta, dt, 1.0).unwrap();
        let p0 = random_field(&mut r, n, 1e5);
        let du = random_field(&mut r, 2 * n, 1e-6);
        let p1 = stepper.step(&p0, &du).unwrap();
        let dp: Vec<f64> = p1.iter().zip(&p0).map(|(a, b)| a - b).collect();
        let stored: f64 = matvec(&m.s, &dp).iter().sum::<f64>() + matvec_transpose(&m.q, &du).iter().sum::<f64>();
        let injected = dt * (1e-3 - 2e-4);
        assert!((stored - injected).abs() <= 1e-8 * injected, "theta {theta}: {stored} vs {injected}");
    }
}

#[test]
fn uniform_pressure_is_a_fixed_point() {
    let (g, _) = lattice(4, 4, 0.1);
    let mesh = build_fluid_mesh(&g);
    let p = vec![ElementProps::uniform(&material()); mesh.element_count()];
    let m = assemble(&mesh, &g.positions, &p, Vec2::zeros()).unwrap();
    let stepper = FlowStepper::new(&m, &FlowBcs::default(), 1.0, 10.0, 1.0).unwrap();
    let p0 = vec![3e5; g.node_count()];
    let p1 = stepper.step(&p0, &[]).unwrap();
    assert!(p1.iter().all(|v| (v - 3e5).abs() < 1e-9 * 3e5));
}

#[test]
fn injection_raises_pressure() {
    let (g, _) = lattice(4, 4, 0.1);
    let mesh = build_fluid_mesh(&g);
    let p = vec![ElementProps::uniform(&material()); mesh.element_count()];
    let m = assemble(&mesh, &g.positions, &p, Vec2::zeros()).unwrap();
    let bcs = FlowBcs { dirichlet: Constraints::new(), sources: vec![(g.id(2, 2), 1e-4)] };
    let p1 = FlowStepper::new(&m, &bcs, 1.0, 1e-3, 1.0).unwrap().step(&vec![0.0; g.node_count()], &[]).unwrap();
    assert!(p1[g.id(2, 2)] > 0.0);
    assert_eq!(max_abs(p1.iter().copied()), p1[g.id(2, 2)]);
}

fn random_spd(r: &mut rand::rngs::StdRng, n: usize, shift: f64) -> Vec<(usize, usize, f64)> {
    let b: Vec<f64> = random_field(r, n * n, 1.0);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum();
            t.push((i, j, v + if i == j { shift } else { 0.0 }));
        }
    }
    t
}

#[test]
fn homogeneous_step_does_not_grow_the_storage_norm() {
    let n = 12;
    let mut r = rng(42);
    for trial in 0..20 {
        let s = csr_from_triplets(n, n, &random_spd(&mut r, n, 0.1));
        // Rank-deficient conductance, like a floating pressure field.
        let mut h_trip = random_spd(&mut r, n - 3, 0.0);
        h_trip.iter_mut().for_each(|t| t.2 *= 10.0);
        let h = csr_from_triplets(n, n, &h_trip);
        let mats = FlowMatrices { s: s.clone(), h, q: csr_from_triplets(2 * n, n, &[]), gravity: vec![0.0; n] };
        let s_norm = |p: &[f64]| matvec(&s, p).iter().zip(p).map(|(a, b)| a * b).sum::<f64>().sqrt();
        for theta in [0.5, 1.0] {
            for dt in [1e-3, 1.0, 1e3] {
                let stepper = FlowStepper::new(&mats, &FlowBcs::default(), theta, dt, 1.0).unwrap();
                let mut p = random_field(&mut r, n, 1.0);
                for _ in 0..5 {
                    let next = stepper.step(&p, &[]).unwrap();
                    assert!(s_norm(&next) <= s_norm(&p) * (1.0 + 1e-10), "trial {trial} theta {theta} dt {dt}");
                    p = next;
                }
            }
        }
    }
}

#[test]
fn unstable_theta_is_rejected() {
    let (g, _) = lattice(2, 2, 0.1);
    let mesh = build_fluid_mesh(&g);
    let p = vec![ElementProps::uniform(&material()); mesh.element_count()];
    let m = assemble(&mesh, &g.positions, &p, Vec2::zeros()).unwrap();
    assert!(FlowStepper::new(&m, &FlowBcs::default(), 0.3, 1.0, 1.0).is_err());
    assert!(FlowStepper::new(&m, &FlowBcs::default(), 1.0, 0.0, 1.0).is_err());
}
