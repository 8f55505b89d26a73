mod common;

use std::collections::BTreeSet;

use common::{energy_norm_sq, mass_bilinear, pencil, random_states, rng};
use hww_core::hspace::{default_tolerance, read_snapshot, write_snapshot, DofMap, StateH};
use hww_core::{
    build_default_geometry, energy, gram_matrix, inner_h, validate_membership, Condition, Error,
    RawState, Region,
};

#[test]
fn dof_blocks_partition_the_unknowns() {
    for r in 0..=2 {
        let mesh = build_default_geometry::<f64>(r).unwrap();
        let dofs = DofMap::new(&mesh);
        let sizes = dofs.sizes();
        assert_eq!(
            sizes.total(),
            dofs.u_interior.len() + dofs.gamma.len() + dofs.w0_all.len() + dofs.w1_interior.len()
        );
        let interface: BTreeSet<usize> = mesh.interface().cycle_nodes().into_iter().collect();
        let gamma: BTreeSet<usize> = dofs.gamma.iter().copied().collect();
        assert_eq!(gamma, interface);
        let outer: BTreeSet<usize> = mesh.outer_boundary().iter().copied().collect();
        for v in &outer {
            assert!(dofs.fluid_velocity_index(*v).is_none());
            assert!(!dofs.u_interior.contains(v));
        }
        // velocity unknowns: every fluid node off Γ_f exactly once
        let fluid: BTreeSet<usize> = mesh.region_nodes(Region::Fluid).into_iter().collect();
        let lhs: BTreeSet<usize> = dofs.u_interior.iter().chain(&dofs.gamma).copied().collect();
        assert_eq!(lhs, fluid.difference(&outer).copied().collect());
        assert_eq!(lhs.len(), dofs.u_interior.len() + dofs.gamma.len());
        // solid: w0 on all nodes, w1 off the interface
        let solid: BTreeSet<usize> = mesh.region_nodes(Region::Solid).into_iter().collect();
        assert_eq!(dofs.w0_all.iter().copied().collect::<BTreeSet<_>>(), solid);
        assert_eq!(
            dofs.w1_interior.iter().copied().collect::<BTreeSet<_>>(),
            solid.difference(&interface).copied().collect()
        );
    }
}

#[test]
fn zero_raw_gives_zero_state() {
    let mesh = build_default_geometry::<f64>(1).unwrap();
    let x = validate_membership(&RawState::zeros(&mesh), &mesh, 1e-12).unwrap();
    assert!(x.values().iter().all(|&v| v == 0.0));
}

#[test]
fn matching_trace_is_accepted() {
    let mesh = build_default_geometry::<f64>(1).unwrap();
    let mut raw = RawState::zeros(&mesh);
    for v in mesh.interface().cycle_nodes() {
        raw.w0[v] = 1.0;
    }
    for h in raw.h0.iter_mut() {
        h.iter_mut().for_each(|v| *v = 1.0);
    }
    let x = validate_membership(&raw, &mesh, 1e-12).unwrap();
    assert!(x.h0().iter().all(|&v| v == 1.0));
}

#[test]
fn trace_mismatch_is_condition_i() {
    let mesh = build_default_geometry::<f64>(1).unwrap();
    let mut raw = RawState::zeros(&mesh);
    let node = mesh.interface().edges()[2].nodes[1];
    raw.h0[2][1] = 1e-3;
    match validate_membership(&raw, &mesh, 1e-12) {
        Err(Error::Compatibility {
            condition: Condition::TraceMatch,
            node: n,
            deviation,
        }) => {
            assert_eq!(n, node);
            assert!((deviation - 1e-3).abs() < 1e-15);
        }
        other => panic!("expected condition (i), got {other:?}"),
    }
}

#[test]
fn split_corner_is_condition_ii() {
    let mesh = build_default_geometry::<f64>(0).unwrap();
    let tol = 1e-8;
    let mut raw = RawState::zeros(&mesh);
    // each h0 sits within tol of the trace, but the two disagree by more
    let k = mesh.interface().edges()[0].nodes.len();
    raw.h0[0][k - 1] = 0.9 * tol;
    raw.h0[1][0] = -0.9 * tol;
    let corner = mesh.interface().edges()[1].nodes[0];
    match validate_membership(&raw, &mesh, tol) {
        Err(Error::Compatibility {
            condition: Condition::JunctionContinuity,
            node,
            ..
        }) => assert_eq!(node, corner),
        other => panic!("expected condition (ii), got {other:?}"),
    }
}

#[test]
fn kinematic_violations() {
    let mesh = build_default_geometry::<f64>(0).unwrap();
    let mut raw = RawState::zeros(&mesh);
    let outer = mesh.outer_boundary()[3];
    raw.u[outer] = 1e-6;
    assert!(matches!(
        validate_membership(&raw, &mesh, 1e-12),
        Err(Error::Compatibility {
            condition: Condition::Kinematic,
            node,
            ..
        }) if node == outer
    ));

    let mut raw = RawState::zeros(&mesh);
    let v = mesh.interface().edges()[0].nodes[1];
    raw.u[v] = 0.5;
    raw.h1[0][1] = 0.5;
    // w1 trace left at zero
    assert!(matches!(
        validate_membership(&raw, &mesh, 1e-12),
        Err(Error::Compatibility {
            condition: Condition::Kinematic,
            node,
            ..
        }) if node == v
    ));
}

#[test]
fn consolidation_averages_within_tolerance() {
    let p = pencil(1);
    let x = &random_states(&p, 1, 3)[0];
    let mut raw = RawState::from_state(x, p.mesh(), p.space().dofs());
    let back = validate_membership(&raw, p.mesh(), default_tolerance(&raw)).unwrap();
    assert_eq!(&back, x);
    let v = p.mesh().interface().edges()[0].nodes[1];
    raw.h0[0][1] += 2e-11;
    let nudged = validate_membership(&raw, p.mesh(), default_tolerance(&raw)).unwrap();
    let k = p.space().dofs().gamma_index(v).unwrap();
    assert!((nudged.h0()[k] - (x.h0()[k] + 1e-11)).abs() < 1e-15);
}

#[test]
fn gram_is_symmetric_and_positive_definite() {
    for r in 0..=1 {
        let mesh = build_default_geometry::<f64>(r).unwrap();
        let g = gram_matrix(&mesh);
        assert!(g.is_symmetric_exact());
        let lo = common::min_eigenvalue_sym(&g);
        assert!(lo > 0.0, "refinement {r}: {lo}");
    }
}

fn constant_w0(mesh: &hww_core::Mesh) -> StateH<f64> {
    let sizes = DofMap::new(mesh).sizes();
    let mut x = StateH::zeros(sizes);
    let off = sizes.w0_offset();
    x.values_mut()[off..off + sizes.w0_all]
        .iter_mut()
        .for_each(|v| *v = 1.0);
    x
}

#[test]
fn constant_displacement_has_perimeter_norm() {
    for r in 0..=2 {
        let mesh = build_default_geometry::<f64>(r).unwrap();
        let g = gram_matrix(&mesh);
        let x = constant_w0(&mesh);
        assert!((inner_h(&x, &x, &g).unwrap() - 2.0).abs() < 1e-12);
        assert!((energy(&x, &g) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn inner_product_basics() {
    let p = pencil(1);
    let g = p.space().gram();
    let xs = random_states(&p, 101, 11);
    let zero = p.space().zero_state();
    assert_eq!(inner_h(&zero, &xs[0], g).unwrap(), 0.0);
    for pair in xs.windows(2) {
        let ab = inner_h(&pair[0], &pair[1], g).unwrap();
        let ba = inner_h(&pair[1], &pair[0], g).unwrap();
        assert!((ab - ba).abs() <= 1e-14 * ab.abs().max(1.0));
    }
    assert_eq!(energy(&zero, g), 0.0);
    let x = &xs[0];
    let e = energy(x, g);
    assert!(e > 0.0);
    assert!((energy(&x.scaled(2.0), g) - 4.0 * e).abs() <= 1e-13 * e);
    let other = StateH::<f64>::zeros(pencil(0).sizes());
    assert!(matches!(
        inner_h(x, &other, g),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn energy_norm_matches_fem_norms_block_by_block() {
    let p = pencil(2);
    let sizes = p.sizes();
    let mut r = rng(5);
    let x = StateH::random(sizes, &mut r);
    let only = |lo: usize, hi: usize| {
        let mut y = StateH::zeros(sizes);
        y.values_mut()[lo..hi].copy_from_slice(&x.values()[lo..hi]);
        y
    };
    let blocks = [
        (0, sizes.gamma_offset()),
        (sizes.gamma_offset(), sizes.w0_offset()),
        (sizes.w0_offset(), sizes.w1_offset()),
        (sizes.w1_offset(), sizes.total()),
    ];
    for (lo, hi) in blocks {
        let y = only(lo, hi);
        let lib = p.space().norm(&y).powi(2);
        let oracle = energy_norm_sq(&p, &y);
        assert!(
            (lib - oracle).abs() <= 1e-12 * oracle,
            "block {lo}..{hi}: {lib} vs {oracle}"
        );
    }
    // the fluid block alone is the plain L² norm of u
    let y = only(0, sizes.gamma_offset());
    let f = common::fields(&p, &y);
    let l2 = mass_bilinear(p.mesh(), Region::Fluid, &f.u, &f.u);
    assert!((p.space().norm(&y).powi(2) - l2).abs() <= 1e-12 * l2);
    // and the whole state
    let lib = p.space().norm(&x).powi(2);
    assert!((lib - energy_norm_sq(&p, &x)).abs() <= 1e-12 * lib);
}

#[test]
fn snapshot_round_trip() {
    let p = pencil(1);
    let x = &random_states(&p, 1, 9)[0];
    let text = write_snapshot(x);
    assert!(text.starts_with("u_interior "));
    let back: StateH<f64> = read_snapshot(&text).unwrap();
    assert_eq!(&back, x);
    let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
    assert!(matches!(
        read_snapshot::<f64>(&cut),
        Err(Error::Parse { .. })
    ));
}
