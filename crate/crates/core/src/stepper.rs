//! Backward Euler (one resolvent solve per step, `λ = 1/Δt`), the θ-scheme,
//! and the energy ledger
//!
//! `E_{n+1} − E_n = −Δt‖∇u_{n+1}‖² − ½‖x_{n+1} − x_n‖²_H`.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::assembly::{apply_generator, OperatorPencil};
use crate::error::{Error, Result};
use crate::hspace::{EnergyComponents, StateH};
use crate::resolvent::{assemble_b_form, dense_solve, ResolventSystem};
use crate::scalar::{fmt17, Real};
use crate::sparse::CsrMatrix;

pub const DT_MIN: f64 = 1e-6;
pub const DT_MAX: f64 = 1e2;
pub const MAX_STEPS: f64 = 1e6;

pub const TRACE_HEADER: &str =
    "t,E_total,E_fluid,E_thin_grad,E_thin_mass,E_thin_kin,E_thick_grad,E_thick_kin,diss_heat,diss_numerical";

pub fn check_dt<T: Real>(dt: T) -> Result<()> {
    if !(dt >= T::lit(DT_MIN) && dt <= T::lit(DT_MAX)) {
        return Err(Error::Domain {
            what: "dt",
            requirement: "1e-6 <= dt <= 1e2",
            value: dt.as_f64(),
        });
    }
    Ok(())
}

pub fn check_theta<T: Real>(theta: T) -> Result<()> {
    if !(theta >= T::lit(0.5) && theta <= T::one()) {
        return Err(Error::Domain {
            what: "theta",
            requirement: "0.5 <= theta <= 1",
            value: theta.as_f64(),
        });
    }
    Ok(())
}

/// Energy ledger of a run. Row 0 is the initial state (no dissipation).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace<T> {
    pub times: Vec<T>,
    pub total_energy: Vec<T>,
    /// `Δt‖∇u_{n}‖²` for the step that produced row `n`.
    pub heat_dissipation: Vec<T>,
    /// `½‖x_n − x_{n−1}‖²_H`.
    pub numerical_dissipation: Vec<T>,
    pub components: Vec<EnergyComponents<T>>,
}

/// A step whose ledger does not balance or whose energy grew.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerViolation {
    pub step: usize,
    pub detail: String,
}

impl<T: Real> Default for EnergyTrace<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> EnergyTrace<T> {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            total_energy: Vec::new(),
            heat_dissipation: Vec::new(),
            numerical_dissipation: Vec::new(),
            components: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: T, c: EnergyComponents<T>, heat: T, numerical: T) {
        self.times.push(t);
        self.total_energy.push(c.total());
        self.heat_dissipation.push(heat);
        self.numerical_dissipation.push(numerical);
        self.components.push(c);
    }

    /// Ledger residual of step `n ≥ 1`, relative to `max(E_{n−1}, tiny)`.
    pub fn ledger_residual(&self, n: usize) -> T {
        let e0 = self.total_energy[n - 1];
        let e1 = self.total_energy[n];
        let r = e1 - e0 + self.heat_dissipation[n] + self.numerical_dissipation[n];
        let scale = e0.abs().max(T::eps() * T::eps());
        r.abs() / scale
    }

    /// First step that breaks monotonicity or the ledger beyond `rel_tol`.
    pub fn first_violation(&self, rel_tol: T) -> Option<LedgerViolation> {
        for n in 1..self.len() {
            let (e0, e1) = (self.total_energy[n - 1], self.total_energy[n]);
            if e1 > e0 {
                return Some(LedgerViolation {
                    step: n,
                    detail: format!("energy increased from {} to {}", fmt17(e0), fmt17(e1)),
                });
            }
            let r = self.ledger_residual(n);
            if r > rel_tol {
                return Some(LedgerViolation {
                    step: n,
                    detail: format!("ledger residual {} exceeds {}", fmt17(r), fmt17(rel_tol)),
                });
            }
        }
        None
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for n in 0..self.len() {
            let c = &self.components[n];
            let cols = [
                self.times[n],
                self.total_energy[n],
                c.fluid,
                c.thin_grad,
                c.thin_mass,
                c.thin_kinetic,
                c.thick_grad,
                c.thick_kinetic,
                self.heat_dissipation[n],
                self.numerical_dissipation[n],
            ];
            let row: Vec<String> = cols.iter().map(|&v| fmt17(v)).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Backward Euler with the factorization of `B(1/Δt)` kept across steps.
#[derive(Debug, Clone)]
pub struct BackwardEuler<'a, T> {
    pencil: &'a OperatorPencil<T>,
    dt: T,
    system: ResolventSystem<T>,
}

impl<'a, T: Real> BackwardEuler<'a, T> {
    pub fn new(pencil: &'a OperatorPencil<T>, dt: T) -> Result<Self> {
        check_dt(dt)?;
        let system = assemble_b_form(pencil, T::one() / dt)?;
        Ok(Self { pencil, dt, system })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn step(&self, x: &StateH<T>) -> Result<StateH<T>> {
        let lambda = self.system.lambda();
        self.system.solve(self.pencil, &x.scaled(lambda))
    }
}

pub fn step_backward_euler<T: Real>(
    p: &OperatorPencil<T>,
    x: &StateH<T>,
    dt: T,
) -> Result<StateH<T>> {
    BackwardEuler::new(p, dt)?.step(x)
}

/// Runs backward Euler from `x0` to `t_end` (rounded to a whole number of
/// steps) and returns the trace and the final state.
pub fn simulate<T: Real>(
    p: &OperatorPencil<T>,
    x0: &StateH<T>,
    dt: T,
    t_end: T,
) -> Result<(EnergyTrace<T>, StateH<T>)> {
    simulate_with(p, x0, dt, t_end, |_, _| {})
}

/// [`simulate`] with a callback on every accepted state (step index, state).
pub fn simulate_with<T: Real>(
    p: &OperatorPencil<T>,
    x0: &StateH<T>,
    dt: T,
    t_end: T,
    mut observe: impl FnMut(usize, &StateH<T>),
) -> Result<(EnergyTrace<T>, StateH<T>)> {
    let steps = step_count(dt, t_end)?;
    let stepper = BackwardEuler::new(p, dt)?;
    let space = p.space();
    let mut trace = EnergyTrace::new();
    trace.push(T::zero(), space.components(x0), T::zero(), T::zero());
    observe(0, x0);
    let mut x = x0.clone();
    for n in 1..=steps {
        let next = stepper.step(&x)?;
        let heat = dt * space.heat_gradient_sq(&next);
        let numerical = space.energy(&next.sub(&x)?);
        trace.push(
            T::from_count(n) * dt,
            space.components(&next),
            heat,
            numerical,
        );
        observe(n, &next);
        x = next;
    }
    Ok((trace, x))
}

pub fn step_count<T: Real>(dt: T, t_end: T) -> Result<usize> {
    check_dt(dt)?;
    if !(t_end > T::zero()) || !t_end.is_finite() {
        return Err(Error::Domain {
            what: "t_end",
            requirement: "t_end > 0",
            value: t_end.as_f64(),
        });
    }
    let steps = (t_end / dt).as_f64().round();
    if steps > MAX_STEPS {
        return Err(Error::Domain {
            what: "t_end / dt",
            requirement: "at most 1e6 steps",
            value: steps,
        });
    }
    Ok((steps as usize).max(1))
}

/// `(M − θΔtK)x⁺ = (M + (1−θ)ΔtK)x`, solved as the resolvent at
/// `λ = 1/(θΔt)` with data `λ(x + (1−θ)Δt·A x)`.
pub fn theta_step<T: Real>(
    p: &OperatorPencil<T>,
    x: &StateH<T>,
    dt: T,
    theta: T,
) -> Result<StateH<T>> {
    ThetaScheme::new(p, dt, theta)?.step(x)
}

/// θ-scheme with the factorization of `B(1/(θΔt))` kept across steps.
///
/// Its ledger is `E_{n+1} − E_n = −Δt‖∇u_θ‖² − (2θ − 1)·½‖x_{n+1} − x_n‖²_H`
/// with `u_θ` the heat part of `θx_{n+1} + (1 − θ)x_n`; at `θ = 1` this is the
/// backward Euler ledger.
#[derive(Debug, Clone)]
pub struct ThetaScheme<'a, T> {
    pencil: &'a OperatorPencil<T>,
    dt: T,
    theta: T,
    system: ResolventSystem<T>,
}

impl<'a, T: Real> ThetaScheme<'a, T> {
    pub fn new(pencil: &'a OperatorPencil<T>, dt: T, theta: T) -> Result<Self> {
        check_dt(dt)?;
        check_theta(theta)?;
        let system = assemble_b_form(pencil, T::one() / (theta * dt))?;
        Ok(Self {
            pencil,
            dt,
            theta,
            system,
        })
    }

    pub fn step(&self, x: &StateH<T>) -> Result<StateH<T>> {
        let lambda = self.system.lambda();
        let explicit = (T::one() - self.theta) * self.dt;
        let data = if explicit == T::zero() {
            x.clone()
        } else {
            x.axpy(explicit, &apply_generator(self.pencil, x)?)?
        };
        self.system.solve(self.pencil, &data.scaled(lambda))
    }
}

/// [`simulate`] with the θ-scheme; the trace uses the θ-ledger terms.
pub fn simulate_theta<T: Real>(
    p: &OperatorPencil<T>,
    x0: &StateH<T>,
    dt: T,
    t_end: T,
    theta: T,
) -> Result<(EnergyTrace<T>, StateH<T>)> {
    let steps = step_count(dt, t_end)?;
    let scheme = ThetaScheme::new(p, dt, theta)?;
    let space = p.space();
    let mut trace = EnergyTrace::new();
    trace.push(T::zero(), space.components(x0), T::zero(), T::zero());
    let mut x = x0.clone();
    let weight = theta + theta - T::one();
    for n in 1..=steps {
        let next = scheme.step(&x)?;
        let mid = x.scaled(T::one() - theta).axpy(theta, &next)?;
        let heat = dt * space.heat_gradient_sq(&mid);
        let numerical = weight * space.energy(&next.sub(&x)?);
        trace.push(
            T::from_count(n) * dt,
            space.components(&next),
            heat,
            numerical,
        );
        x = next;
    }
    Ok((trace, x))
}

/// θ-step of an arbitrary small pencil `(m, k)` by dense LU.
pub fn theta_step_dense<T: Real>(
    m: &CsrMatrix<T>,
    k: &CsrMatrix<T>,
    x: &[T],
    dt: T,
    theta: T,
) -> Result<Vec<T>> {
    check_dt(dt)?;
    check_theta(theta)?;
    let (md, kd) = (m.to_dense(), k.to_dense());
    let lhs = &md - &kd * (theta * dt);
    let rhs = (&md + &kd * ((T::one() - theta) * dt)) * DVector::from_column_slice(x);
    dense_solve(lhs, rhs, "theta step")
}
