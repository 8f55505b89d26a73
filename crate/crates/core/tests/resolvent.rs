mod common;

use common::{fields, grad_bilinear, min_eigenvalue_sym, pencil, random_states};
use hww_core::diagnostics::manufactured_resolvent_case;
use hww_core::hspace::StateH;
use hww_core::resolvent::{solve_resolvent_monolithic, LAMBDA_MIN};
use hww_core::{
    apply_generator, assemble_b_form, junction_flux_sum, rhs_f_lambda, solve_resolvent,
    solve_static, Error, Region,
};

fn rel(a: &StateH<f64>, b: &StateH<f64>) -> f64 {
    a.sub(b).unwrap().max_abs() / b.max_abs().max(f64::MIN_POSITIVE)
}

fn velocity_state(p: &hww_core::Pencil, v: &[f64]) -> StateH<f64> {
    StateH::from_parts(p.sizes(), v, &vec![0.0; p.sizes().w0_all]).unwrap()
}

#[test]
fn b_form_is_spd_and_symmetric() {
    let p = pencil(1);
    let sys = assemble_b_form(&p, 1.0).unwrap();
    assert!(sys.matrix().is_symmetric_exact());
    assert!(min_eigenvalue_sym(sys.matrix()) > 0.0);
}

#[test]
fn large_lambda_is_dominated_by_mass() {
    let lambda = 1e6;
    // coarse meshes: the whole of B is λ·(mass part) to 1e−4
    for r in 0..=1 {
        let p = pencil(r);
        let b = assemble_b_form(&p, lambda).unwrap();
        let mass = p.space().mass_velocity().scaled(lambda);
        let diff =
            hww_core::sparse::CsrMatrix::linear_combination(&[(1.0, b.matrix()), (-1.0, &mass)]);
        let ratio = diff.frobenius_norm() / b.matrix().frobenius_norm();
        assert!(ratio <= 1e-4, "refinement {r}: {ratio}");
    }
    // finer: the fluid stiffness does not scale with λ; the rest still does
    let p = pencil(2);
    let b = assemble_b_form(&p, lambda).unwrap();
    for x in random_states(&p, 10, 31) {
        let v = x.velocity();
        let u = fields(&p, &velocity_state(&p, &v)).u;
        let expected = lambda * p.space().mass_velocity().bilinear(&v, &v)
            + grad_bilinear(p.mesh(), Region::Fluid, &u, &u);
        let got = b.matrix().bilinear(&v, &v);
        assert!((got - expected).abs() <= 1e-4 * got, "{got} vs {expected}");
    }
}

#[test]
fn rhs_is_zero_local_and_linear() {
    let p = pencil(1);
    let sizes = p.sizes();
    let zero = p.space().zero_state();
    assert!(rhs_f_lambda(&p, &zero, 0.5)
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));

    // fluid-only data: rows of the solid velocities stay zero
    let mut x = random_states(&p, 1, 32).remove(0);
    x.values_mut()[sizes.u_interior..]
        .iter_mut()
        .for_each(|v| *v = 0.0);
    let f = rhs_f_lambda(&p, &x, 0.5).unwrap();
    assert!(f[sizes.u_interior + sizes.gamma..]
        .iter()
        .all(|&v| v == 0.0));

    let xs = random_states(&p, 2, 33);
    let (a, b) = (1.7, -0.3);
    let combo = xs[0].scaled(a).axpy(b, &xs[1]).unwrap();
    let lhs = rhs_f_lambda(&p, &combo, 0.5).unwrap();
    let fa = rhs_f_lambda(&p, &xs[0], 0.5).unwrap();
    let fb = rhs_f_lambda(&p, &xs[1], 0.5).unwrap();
    for i in 0..lhs.len() {
        let e = a * fa[i] + b * fb[i];
        assert!((lhs[i] - e).abs() <= 1e-13 * (1.0 + e.abs()));
    }
}

#[test]
fn zero_data_gives_zero() {
    let p = pencil(1);
    let zero = p.space().zero_state();
    assert_eq!(solve_resolvent(&p, &zero, 1.0).unwrap().max_abs(), 0.0);
    assert_eq!(solve_static(&p, &zero).unwrap().max_abs(), 0.0);
}

#[test]
fn manufactured_case_round_trips() {
    let p = pencil(2);
    for lambda in [0.1, 1.0, 10.0] {
        let (x, phi) = manufactured_resolvent_case(&p, lambda, 3).unwrap();
        let back = solve_resolvent(&p, &phi, lambda).unwrap();
        let err = rel(&back, &x);
        assert!(err <= 1e-8, "λ = {lambda}: {err}");
    }
}

#[test]
fn resolvent_is_a_contraction() {
    let p = pencil(2);
    for lambda in [1.0, 0.1] {
        let sys = assemble_b_form(&p, lambda).unwrap();
        for phi in random_states(&p, 20, 34) {
            let x = sys.solve(&p, &phi).unwrap();
            let bound = p.space().norm(&phi) / lambda;
            assert!(
                p.space().norm(&x) <= bound * (1.0 + 1e-12),
                "λ = {lambda}: {} > {bound}",
                p.space().norm(&x)
            );
        }
    }
}

#[test]
fn static_solve_is_bounded() {
    let p = pencil(2);
    for x in random_states(&p, 5, 35) {
        let back = solve_static(&p, &apply_generator(&p, &x).unwrap()).unwrap();
        assert!(rel(&back, &x) <= 1e-8);
    }
    let ratios: Vec<f64> = random_states(&p, 50, 36)
        .iter()
        .map(|phi| p.space().norm(&solve_static(&p, phi).unwrap()) / p.space().norm(phi))
        .collect();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    println!("bounded inverse: max ‖x‖/‖φ*‖ over 50 draws = {worst:.6}");
    assert!(worst.is_finite() && worst < 1e3, "{worst}");
}

#[test]
fn factored_route_matches_dense_route() {
    let p = pencil(2);
    for (i, lambda) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        let phi = &random_states(&p, 1, 37 + i as u64)[0];
        let a = solve_resolvent(&p, phi, lambda).unwrap();
        let b = solve_resolvent_monolithic(&p, phi, lambda).unwrap();
        assert!(rel(&a, &b) <= 1e-9, "λ = {lambda}");
    }
}

#[test]
fn resolvent_identity() {
    // R(λ₁) − R(λ₂) = (λ₂ − λ₁) R(λ₁) R(λ₂)
    let p = pencil(1);
    let (l1, l2) = (0.5, 2.0);
    let r1 = assemble_b_form(&p, l1).unwrap();
    let r2 = assemble_b_form(&p, l2).unwrap();
    for y in random_states(&p, 10, 40) {
        let lhs = r1
            .solve(&p, &y)
            .unwrap()
            .sub(&r2.solve(&p, &y).unwrap())
            .unwrap();
        let rhs = r1
            .solve(&p, &r2.solve(&p, &y).unwrap())
            .unwrap()
            .scaled(l2 - l1);
        assert!(rel(&lhs, &rhs) <= 1e-8);
    }
}

#[test]
fn static_solution_balances_junctions() {
    let p = pencil(2);
    for phi in random_states(&p, 10, 41) {
        let x = solve_static(&p, &phi).unwrap();
        let s = junction_flux_sum(&p, &x).unwrap();
        assert!(s.abs() <= 1e-12 * (1.0 + x.max_abs()), "{s}");
    }
}

#[test]
fn lambda_guards() {
    let p = pencil(0);
    let x = p.space().zero_state();
    for l in [0.0, -2.0, LAMBDA_MIN / 2.0, f64::INFINITY] {
        assert!(
            matches!(solve_resolvent(&p, &x, l), Err(Error::Domain { .. })),
            "{l}"
        );
        assert!(matches!(rhs_f_lambda(&p, &x, l), Err(Error::Domain { .. })));
    }
    assert!(assemble_b_form(&p, LAMBDA_MIN).is_ok());
    let wrong = StateH::<f64>::zeros(pencil(1).sizes());
    assert!(matches!(
        solve_static(&p, &wrong),
        Err(Error::Dimension { .. })
    ));
}
