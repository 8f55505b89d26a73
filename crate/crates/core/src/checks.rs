//! The invariant battery behind `hww check`: every structural identity of
//! the discretization, evaluated on seeded random states.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assembly::{
    apply_adjoint, apply_generator, assemble_adjoint, corner_fluxes, junction_flux_sum,
    OperatorPencil,
};
use crate::diagnostics::{gradient_energy_quadrature, manufactured_resolvent_case};
use crate::error::{Condition, Error, Result};
use crate::hspace::{validate_membership, RawState, StateH};
use crate::resolvent::{solve_resolvent, solve_resolvent_monolithic, solve_static};
use crate::scalar::{contract_tol, Real};
use crate::stepper::simulate;

/// Largest pencil for which the dense monolithic comparison is run.
const MONOLITHIC_MAX_DIM: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckSettings {
    pub seed: u64,
    /// Random states per identity.
    pub samples: usize,
    pub dt: f64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            seed: 20240601,
            samples: 20,
            dt: 0.01,
        }
    }
}

fn outcome(name: &'static str, r: Result<(bool, String)>) -> CheckOutcome {
    match r {
        Ok((passed, detail)) => CheckOutcome {
            name,
            passed,
            detail,
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn rel_err<T: Real>(a: &StateH<T>, b: &StateH<T>) -> Result<T> {
    let d = a.sub(b)?.max_abs();
    Ok(d / b.max_abs().max(T::eps()))
}

pub fn run_checks<T: Real>(p: &OperatorPencil<T>, settings: &CheckSettings) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let states: Vec<StateH<T>> = (0..settings.samples.max(1))
        .map(|_| StateH::random(p.sizes(), &mut rng))
        .collect();
    vec![
        outcome("dissipation", dissipation(p, &states)),
        outcome("adjoint-transpose", adjoint_transpose(p)),
        outcome("adjoint-identity", adjoint_identity(p, &states)),
        outcome("resolvent-roundtrip", resolvent_roundtrip(p, settings.seed)),
        outcome("static-roundtrip", static_roundtrip(p, &states)),
        outcome("junction-cancellation", junction_cancellation(p, &states)),
        outcome("compatibility", compatibility(p, &states[0])),
        outcome("contraction", contraction(p, &states[0], settings.dt)),
    ]
}

fn dissipation<T: Real>(p: &OperatorPencil<T>, states: &[StateH<T>]) -> Result<(bool, String)> {
    let tol = contract_tol::<T>(1e-10);
    let mut worst = T::zero();
    for x in states {
        let q = p.k().bilinear(x.values(), x.values());
        let g = gradient_energy_quadrature(p.space(), x);
        worst = worst.max((q + g).abs() / p.space().norm(x).powi(2));
    }
    Ok((
        worst <= tol,
        format!("max |x'Kx + |grad u|^2| / |x|_H^2 = {worst:e} (tol {tol:e})"),
    ))
}

fn adjoint_transpose<T: Real>(p: &OperatorPencil<T>) -> Result<(bool, String)> {
    let a = assemble_adjoint(p)?;
    Ok((
        true,
        format!("|K_adj - K^T|_max = {:e}", a.transpose_mismatch),
    ))
}

fn adjoint_identity<T: Real>(
    p: &OperatorPencil<T>,
    states: &[StateH<T>],
) -> Result<(bool, String)> {
    let a = assemble_adjoint(p)?;
    let tol = contract_tol::<T>(1e-10);
    let space = p.space();
    let mut worst = T::zero();
    for pair in states.windows(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let lhs = space.inner(&apply_generator(p, x)?, y)?;
        let rhs = space.inner(x, &apply_adjoint(p, &a, y)?)?;
        let scale = space.norm(&apply_generator(p, x)?) * space.norm(y);
        worst = worst.max((lhs - rhs).abs() / scale.max(T::eps()));
    }
    Ok((
        worst <= tol,
        format!("max relative <Ax,y> - <x,A*y> = {worst:e} (tol {tol:e})"),
    ))
}

fn resolvent_roundtrip<T: Real>(p: &OperatorPencil<T>, seed: u64) -> Result<(bool, String)> {
    let tol = contract_tol::<T>(1e-8);
    let route_tol = contract_tol::<T>(1e-9);
    let mut worst = T::zero();
    let mut route = T::zero();
    for (i, lambda) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        let lambda = T::lit(lambda);
        let (x, phi) = manufactured_resolvent_case(p, lambda, seed.wrapping_add(i as u64))?;
        let got = solve_resolvent(p, &phi, lambda)?;
        worst = worst.max(rel_err(&got, &x)?);
        if p.dim() <= MONOLITHIC_MAX_DIM {
            let mono = solve_resolvent_monolithic(p, &phi, lambda)?;
            route = route.max(rel_err(&got, &mono)?);
        }
    }
    Ok((
        worst <= tol && route <= route_tol,
        format!(
            "recovery {worst:e} (tol {tol:e}); B-route vs monolithic {route:e} (tol {route_tol:e})"
        ),
    ))
}

fn static_roundtrip<T: Real>(
    p: &OperatorPencil<T>,
    states: &[StateH<T>],
) -> Result<(bool, String)> {
    let tol = contract_tol::<T>(1e-8);
    let mut worst = T::zero();
    let mut bound = T::zero();
    for x in states {
        let y = apply_generator(p, x)?;
        let back = solve_static(p, &y)?;
        worst = worst.max(rel_err(&back, x)?);
        bound = bound.max(p.space().norm(x) / p.space().norm(&y));
    }
    Ok((
        worst <= tol,
        format!("max relative error {worst:e} (tol {tol:e}); max |x|/|Ax| = {bound:e}"),
    ))
}

fn junction_cancellation<T: Real>(
    p: &OperatorPencil<T>,
    states: &[StateH<T>],
) -> Result<(bool, String)> {
    let tol = contract_tol::<T>(1e-13);
    let mut worst = T::zero();
    for x in states {
        let sum = junction_flux_sum(p, x)?;
        let dofs = p.space().dofs();
        let scale: T = corner_fluxes(p, x)?
            .iter()
            .map(|f| (f.flux * x.gamma()[dofs.gamma_index(f.node).expect("interface node")]).abs())
            .sum();
        worst = worst.max(sum.abs() / scale.max(T::eps()));
    }
    Ok((
        worst <= tol,
        format!("max |sum| / sum of |terms| = {worst:e} (tol {tol:e})"),
    ))
}

fn compatibility<T: Real>(p: &OperatorPencil<T>, x: &StateH<T>) -> Result<(bool, String)> {
    let mesh = p.mesh();
    let raw = RawState::from_state(x, mesh, p.space().dofs());
    let back = validate_membership(&raw, mesh, T::lit(1e-12))?;
    let exact = back == *x;
    // perturb h0 at an edge-interior node if there is one, else at a corner
    let edge = &mesh.interface().edges()[0];
    let i = if edge.nodes.len() > 2 { 1 } else { 0 };
    let mut bad = raw.clone();
    bad.h0[0][i] += T::lit(1e-3);
    let rejected = matches!(
        validate_membership(&bad, mesh, T::lit(1e-12)),
        Err(Error::Compatibility {
            condition: Condition::TraceMatch,
            ..
        })
    );
    Ok((
        exact && rejected,
        format!("exact round trip: {exact}; perturbed trace rejected as (i): {rejected}"),
    ))
}

fn contraction<T: Real>(p: &OperatorPencil<T>, x: &StateH<T>, dt: f64) -> Result<(bool, String)> {
    let dt = T::lit(dt);
    let x0 = x.scaled(T::one() / p.space().energy(x).sqrt());
    let (trace, _) = simulate(p, &x0, dt, dt * T::lit(20.0))?;
    let tol = contract_tol::<T>(1e-9);
    Ok(match trace.first_violation(tol) {
        None => (
            true,
            format!("{} steps monotone, ledger within {tol:e}", trace.len() - 1),
        ),
        Some(v) => (false, format!("step {}: {}", v.step, v.detail)),
    })
}
