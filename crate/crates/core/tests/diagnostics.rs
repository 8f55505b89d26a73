mod common;

use common::{heat_gradient_sq, pencil, random_states, rng};
use hww_core::diagnostics::{
    decoupled_eig_reference, gradient_energy_quadrature, harmonic_extension,
    manufactured_resolvent_case, recover_flux_with_rate, recover_interface_flux,
    solid_dirichlet_ground_state,
};
use hww_core::hspace::StateH;
use hww_core::{solve_static, Error, Region};
use rand::Rng;

const PI2: f64 = std::f64::consts::PI * std::f64::consts::PI;

/// Node coordinates of the solid layout (`w0_all` order).
fn solid_coords(p: &hww_core::Pencil) -> Vec<[f64; 2]> {
    p.space()
        .dofs()
        .w0_all
        .iter()
        .map(|&v| p.mesh().node(v))
        .collect()
}

#[test]
fn harmonic_extension_reproduces_affine_data() {
    let p = pencil(2);
    let ng = p.sizes().gamma;
    let ones = harmonic_extension(p.space(), &vec![1.0; ng]).unwrap();
    assert!(ones.iter().all(|&v| (v - 1.0).abs() <= 1e-13));
    let xy = solid_coords(&p);
    let g: Vec<f64> = xy[..ng].iter().map(|c| c[0]).collect();
    let f = harmonic_extension(p.space(), &g).unwrap();
    for (v, c) in f.iter().zip(&xy) {
        assert!((v - c[0]).abs() <= 1e-13, "{v} vs {}", c[0]);
    }
}

#[test]
fn harmonic_extension_is_linear_and_bounded() {
    let p = pencil(2);
    let ng = p.sizes().gamma;
    let mut r = rng(51);
    let g1: Vec<f64> = (0..ng).map(|_| r.gen_range(-1.0..1.0)).collect();
    let g2: Vec<f64> = (0..ng).map(|_| r.gen_range(-1.0..1.0)).collect();
    let (a, b) = (2.5, -0.75);
    let mix: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| a * x + b * y).collect();
    let f1 = harmonic_extension(p.space(), &g1).unwrap();
    let f2 = harmonic_extension(p.space(), &g2).unwrap();
    let fm = harmonic_extension(p.space(), &mix).unwrap();
    for i in 0..fm.len() {
        assert!((fm[i] - (a * f1[i] + b * f2[i])).abs() <= 1e-12);
    }
    // the default mesh is right-angled, so the discrete maximum principle holds
    let (lo, hi) = g1
        .iter()
        .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(f1.iter().all(|&v| v >= lo - 1e-13 && v <= hi + 1e-13));
    assert!(matches!(
        harmonic_extension(p.space(), &g1[1..]),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn zero_state_has_zero_fluxes() {
    let p = pencil(1);
    let f = recover_interface_flux(&p.space().zero_state(), &p).unwrap();
    assert!(f
        .flux_u
        .iter()
        .chain(&f.flux_w)
        .chain(&f.thin_residual)
        .all(|&v| v == 0.0));
    assert_eq!(f.residual_dual_norm, 0.0);
    assert_eq!(f.to_csv().lines().count(), p.sizes().gamma + 1);
}

#[test]
fn static_solution_satisfies_the_thin_balance() {
    let p = pencil(2);
    for phi in random_states(&p, 5, 52) {
        let x = solve_static(&p, &phi).unwrap();
        let f = recover_interface_flux(&x, &p).unwrap();
        let data = p.space().norm(&phi);
        assert!(
            f.residual_dual_norm <= 1e-8 * data,
            "{} vs {data}",
            f.residual_dual_norm
        );
    }
}

#[test]
fn linear_profile_gives_its_slope() {
    // u = y − 1/4 on every fluid unknown: linear on the support of each
    // bottom-edge hat, whose normal into the solid is +y
    let p = pencil(2);
    let sizes = p.sizes();
    let dofs = p.space().dofs();
    let mut x = StateH::zeros(sizes);
    for v in p.mesh().region_nodes(Region::Fluid) {
        if let Some(k) = dofs.fluid_velocity_index(v) {
            x.values_mut()[sizes.velocity_to_full(k)] = p.mesh().node(v)[1] - 0.25;
        }
    }
    let rate = StateH::zeros(sizes);
    let f = recover_flux_with_rate(p.space(), &x, &rate).unwrap();
    let density = f.density_u();
    let bottom = p
        .mesh()
        .interface()
        .edges()
        .iter()
        .find(|e| e.tangent[0] > 0.5)
        .unwrap();
    let inner = &bottom.nodes[1..bottom.nodes.len() - 1];
    assert!(!inner.is_empty());
    for &v in inner {
        let d = density[dofs.gamma_index(v).unwrap()];
        assert!((d - 1.0).abs() <= 1e-12, "node {v}: {d}");
    }
}

#[test]
fn reference_eigenvalues() {
    let ev = decoupled_eig_reference(Region::Solid, 3).unwrap();
    assert!((ev[0] - 8.0 * PI2).abs() <= 1e-12);
    assert!((ev[0] - 78.9568).abs() <= 1e-4);
    assert_eq!(ev[1], ev[2]);
    assert!((ev[1] - 20.0 * PI2).abs() <= 1e-12);
    assert!(matches!(
        decoupled_eig_reference(Region::Fluid, 1),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn ground_state_converges_at_second_order() {
    let exact = 8.0 * PI2;
    let mu: Vec<f64> = (0..=4)
        .map(|r| solid_dirichlet_ground_state(pencil(r).space()).unwrap())
        .collect();
    let err: Vec<f64> = mu.iter().map(|m| m - exact).collect();
    let ratios: Vec<f64> = err.windows(2).map(|w| w[0] / w[1]).collect();
    println!("ground state {mu:?}, error ratios {ratios:?}");
    assert!(err.iter().all(|&e| e > 0.0));
    for r in &ratios {
        assert!((3.5..=4.5).contains(r), "{r}");
    }
}

#[test]
fn quadrature_gradient_energy_matches_oracle() {
    let p = pencil(2);
    for x in random_states(&p, 5, 53) {
        let q = gradient_energy_quadrature(p.space(), &x);
        let o = heat_gradient_sq(&p, &x);
        assert!((q - o).abs() <= 1e-12 * o);
    }
}

#[test]
fn manufactured_cases() {
    let p = pencil(1);
    let a = manufactured_resolvent_case(&p, 1.0, 9).unwrap();
    let b = manufactured_resolvent_case(&p, 1.0, 9).unwrap();
    assert_eq!(a, b);
    // λ = 0: A x = −φ*, so the static solve of −φ* is x
    let (x, phi) = manufactured_resolvent_case(&p, 0.0, 10).unwrap();
    let back = solve_static(&p, &phi.scaled(-1.0)).unwrap();
    assert!(back.sub(&x).unwrap().max_abs() <= 1e-8 * x.max_abs());
    assert!(matches!(
        manufactured_resolvent_case(&p, -1.0, 0),
        Err(Error::Domain { .. })
    ));
}
