mod common;

use common::lattice;
use porofrac::coupling::{
    apertures, assemble_qpd, classify, element_properties, fracture_permeability, nodal_properties, DomainThresholds,
};
use porofrac::discretization::{build_fluid_mesh, Bond};
use porofrac::flow::{assemble, ElementProps, FlowMaterial};
use porofrac::linalg::{entry, matvec};
use porofrac::solid::{Kinematics, PlaneMode};
use porofrac::Vec2;

fn reservoir() -> FlowMaterial {
    FlowMaterial {
        biot_alpha: 0.8,
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
fn domain_indicators() {
    let t = DomainThresholds::default();
    assert_eq!(classify(0.2, &t), (1.0, 0.0));
    assert_eq!(classify(0.0, &t), (1.0, 0.0));
    assert_eq!(classify(0.35, &t), (0.0, 1.0));
    assert_eq!(classify(0.9, &t), (0.0, 1.0));
    let (r, f) = classify(0.275, &t);
    assert!((r - 0.5).abs() < 1e-12 && (f - 0.5).abs() < 1e-12);
    for k in 0..=100 {
        let (r, f) = classify(k as f64 / 100.0, &t);
        assert!((0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&f));
        assert_eq!(r + f, 1.0);
    }
    assert!(DomainThresholds { c1: 0.4, c2: 0.3 }.validate().is_err());
    assert!(DomainThresholds { c1: 0.3, c2: 0.3 }.validate().is_err());
}

#[test]
fn cubic_law() {
    assert!((fracture_permeability(3e-5) - 7.5e-11).abs() < 1e-24);
}

#[test]
fn property_blending() {
    let res = reservoir();
    let t = DomainThresholds::default();
    let props = nodal_properties(&[0.0, 1.0, 0.275], &[0.0, 3e-5, 3e-5], &res, 2000.0, &t).unwrap();
    let r = props[0];
    assert_eq!((r.permeability, r.storage, r.porosity, r.solid_alpha, r.flow_alpha), (1e-12, res.storage(), 0.4, 0.8, 0.8));
    let f = props[1];
    assert_eq!((f.permeability, f.porosity, f.solid_alpha, f.flow_alpha), (7.5e-11, 1.0, 1.0, 0.0));
    assert_eq!(f.storage, 1.0 / res.fluid_bulk);
    let m = props[2];
    assert!((m.permeability - 3.8e-11).abs() < 1e-24);
    assert!(nodal_properties(&[0.0], &[], &res, 2000.0, &t).is_err());
}

#[test]
fn aperture_of_a_single_opened_bond() {
    let (g, b) = lattice(4, 4, 0.05);
    let (i, j) = (g.id(1, 2), g.id(2, 2));
    let mut u = vec![Vec2::zeros(); g.node_count()];
    // Deformed length 0.06 along the original direction.
    u[j] = Vec2::new(0.01, 0.0);
    let a = apertures(&b, &u, 0.1, b.horizon, Kinematics::Geometric).unwrap();
    assert!((a[i] - 0.01).abs() < 1e-15);
    // Same deformed length but turned 60 degrees: projected opening
    // 0.03 - 0.05 < 0, so nothing counts.
    let y = 0.06 * Vec2::new(0.5, 3f64.sqrt() / 2.0);
    u[j] = y - Vec2::new(0.05, 0.0);
    let a = apertures(&b, &u, 0.1, b.horizon, Kinematics::Geometric).unwrap();
    assert_eq!(a[i], 0.0);
}

#[test]
fn sheared_closed_crack_has_no_aperture() {
    let (g, b) = lattice(8, 8, 0.05);
    // Upper half slides along x.
    let u: Vec<Vec2> = g.positions.iter().map(|x| if x.y > 0.2 { Vec2::new(0.02, 0.0) } else { Vec2::zeros() }).collect();
    let s = 0.05;
    let a = apertures(&b, &u, s, b.horizon, Kinematics::Geometric).unwrap();
    for iy in [4, 5] {
        for ix in 3..=5 {
            assert!(a[g.id(ix, iy)] < 0.02 * 0.6, "{}", a[g.id(ix, iy)]);
        }
    }
    let none = apertures(&b, &vec![Vec2::zeros(); g.node_count()], s, b.horizon, Kinematics::Geometric).unwrap();
    assert!(none.iter().all(|&v| v == 0.0));
}

#[test]
fn operator_structure() {
    let (g, b) = lattice(6, 6, 0.1);
    let n = g.node_count();
    let alpha = vec![1.0; n];
    let q = assemble_qpd(&b, &vec![Vec2::zeros(); n], &alpha, PlaneMode::PlaneStrain, Kinematics::Linearized).unwrap();
    // Uniform pressure on a free body: no net force.
    let f = matvec(&q, &vec![2e6; n]);
    let (fx, fy): (f64, f64) = (f.iter().step_by(2).sum(), f.iter().skip(1).step_by(2).sum());
    let size: f64 = f.iter().map(|v| v.abs()).sum();
    assert!(fx.abs() <= 1e-10 * size && fy.abs() <= 1e-10 * size);
    // Two interior nodes with identical weighted volume: the bond's rows for
    // one end are the negatives of the other's. Keep only that bond.
    let (g, b) = lattice(10, 10, 0.1);
    let n = g.node_count();
    let alpha = vec![1.0; n];
    let (i, j) = (g.id(4, 5), g.id(5, 5));
    assert_eq!(b.unit_weighted_volume[i], b.unit_weighted_volume[j]);
    let k = b.find(i, j).unwrap();
    let single = {
        let mut bt = b.clone();
        bt.bonds.clear();
        bt.offsets = vec![0; n + 1];
        for o in bt.offsets.iter_mut().skip(i + 1) {
            *o = 1;
        }
        for o in bt.offsets.iter_mut().skip(j + 1) {
            *o = 2;
        }
        let fwd = Bond { reverse: 1, ..b.bonds[k] };
        let back = Bond { j: i, xi: -fwd.xi, reverse: 0, ..fwd };
        bt.bonds = vec![fwd, back];
        bt.intact = vec![true; 2];
        assemble_qpd(&bt, &vec![Vec2::zeros(); n], &alpha, PlaneMode::PlaneStrain, Kinematics::Linearized).unwrap()
    };
    for c in [i, j] {
        for d in 0..2 {
            assert_eq!(entry(&single, 2 * j + d, c), -entry(&single, 2 * i + d, c));
        }
    }
}

#[test]
fn undamaged_properties_rebuild_the_same_matrices() {
    let (g, _) = lattice(6, 5, 0.1);
    let mesh = build_fluid_mesh(&g);
    let res = reservoir();
    let n = g.node_count();
    let nodal = nodal_properties(&vec![0.0; n], &vec![0.0; n], &res, 2000.0, &DomainThresholds::default()).unwrap();
    let ep = element_properties(&mesh, &nodal, res.viscosity, res.fluid_density);
    let a = assemble(&mesh, &g.positions, &ep, Vec2::zeros()).unwrap();
    let b = assemble(&mesh, &g.positions, &ep, Vec2::zeros()).unwrap();
    assert_eq!(a.s, b.s);
    assert_eq!(a.h, b.h);
    assert_eq!(a.q, b.q);
    let base = assemble(&mesh, &g.positions, &vec![ElementProps::uniform(&res); mesh.element_count()], Vec2::zeros()).unwrap();
    for (x, y) in a.h.values().iter().zip(base.h.values()) {
        assert!((x - y).abs() <= 1e-15 * y.abs());
    }
}

#[test]
fn cracked_line_raises_only_its_conductance() {
    let (g, _) = lattice(8, 6, 0.1);
    let mesh = build_fluid_mesh(&g);
    let res = reservoir();
    let n = g.node_count();
    let t = DomainThresholds::default();
    let intact = nodal_properties(&vec![0.0; n], &vec![0.0; n], &res, 2000.0, &t).unwrap();
    let mut phi = vec![0.0; n];
    let mut ap = vec![0.0; n];
    for ix in 0..=g.nx {
        phi[g.id(ix, 3)] = 0.5;
        ap[g.id(ix, 3)] = 1e-4;
    }
    let cracked = nodal_properties(&phi, &ap, &res, 2000.0, &t).unwrap();
    let h0 = assemble(&mesh, &g.positions, &element_properties(&mesh, &intact, 1e-3, 1000.0), Vec2::zeros()).unwrap().h;
    let h1 = assemble(&mesh, &g.positions, &element_properties(&mesh, &cracked, 1e-3, 1000.0), Vec2::zeros()).unwrap().h;
    // Brute force: an entry changes exactly when an element touching both
    // of its nodes touches the cracked row.
    let touches = |e: &[usize; 4]| e.iter().any(|&a| g.ij(a).1 == 3);
    let node_elems = mesh.node_elements();
    for r in 0..n {
        for c in 0..n {
            let shared: Vec<usize> = node_elems[r].iter().filter(|e| node_elems[c].contains(e)).copied().collect();
            let (a, b) = (entry(&h0, r, c), entry(&h1, r, c));
            if shared.iter().any(|&e| touches(&mesh.elements[e])) {
                assert!(b.abs() > a.abs(), "({r},{c})");
            } else {
                assert_eq!(a, b);
            }
        }
    }
}
