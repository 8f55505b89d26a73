//! Resolvent `(λ − A)x = φ*` through the velocity-only elliptic form, the
//! static problem `A x = φ*`, and a dense monolithic reference route.
//!
//! Eliminating the positions from `(λM − K)x = Mφ*` with `w0 = (P v + w0*)/λ`
//! leaves, on the velocity layout,
//!
//! ```text
//! B(λ) v = F_λ,   B(λ) = λ M_v + S_f + (1/λ) Pᵀ M_p P,
//!                 F_λ  = M_v v* − (1/λ) Pᵀ M_p w0*.
//! ```
//!
//! `B(λ)` is symmetric positive definite for every `λ > 0`.

use nalgebra::{DMatrix, DVector};

use crate::assembly::OperatorPencil;
use crate::cholesky::SparseCholesky;
use crate::error::{Error, Result};
use crate::hspace::StateH;
use crate::scalar::{contract_tol, Real};
use crate::sparse::{norm2, CsrMatrix, Triplets};

/// Smallest accepted resolvent parameter.
pub const LAMBDA_MIN: f64 = 1e-6;
/// Relative residual contract of every solve in this module.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// `B(λ)` on the velocity layout with its factorization.
#[derive(Debug, Clone)]
pub struct ResolventSystem<T> {
    lambda: T,
    b: CsrMatrix<T>,
    factor: SparseCholesky<T>,
}

pub fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::Domain {
            what: "lambda",
            requirement: "lambda > 0",
            value: lambda.as_f64(),
        });
    }
    if lambda < T::lit(LAMBDA_MIN) {
        return Err(Error::Domain {
            what: "lambda",
            requirement: "lambda >= 1e-6",
            value: lambda.as_f64(),
        });
    }
    Ok(())
}

/// `Pᵀ M_p P`: the position block pulled back to the solid velocities.
fn pulled_back_position_block<T: Real>(p: &OperatorPencil<T>) -> CsrMatrix<T> {
    let sizes = p.sizes();
    let nv = sizes.velocity_dim();
    let ptv = |a: usize| Some(sizes.position_to_velocity(a));
    let mut t = Triplets::new(nv, nv);
    t.push_mapped(p.space().mass_position(), T::one(), ptv, ptv);
    t.build()
}

pub fn assemble_b_form<T: Real>(p: &OperatorPencil<T>, lambda: T) -> Result<ResolventSystem<T>> {
    check_lambda(lambda)?;
    let space = p.space();
    let ptmp = pulled_back_position_block(p);
    let b = CsrMatrix::linear_combination(&[
        (lambda, space.mass_velocity()),
        (T::one(), &space.fluid_stiff),
        (T::one() / lambda, &ptmp),
    ]);
    let factor = SparseCholesky::factor(&b, "resolvent form B")?;
    Ok(ResolventSystem { lambda, b, factor })
}

impl<T: Real> ResolventSystem<T> {
    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.b
    }

    /// Solves `(λ − A)x = φ*` and checks the residual of
    /// `(λM − K)x = Mφ*`.
    pub fn solve(&self, p: &OperatorPencil<T>, phi_star: &StateH<T>) -> Result<StateH<T>> {
        let f = rhs_f_lambda(p, phi_star, self.lambda)?;
        let tol = contract_tol::<T>(RESIDUAL_TOL);
        let v = self
            .factor
            .solve_refined(&f, tol * T::lit(0.1), "resolvent velocity solve")?;
        let sizes = p.sizes();
        let inv = T::one() / self.lambda;
        let position: Vec<T> = (0..sizes.w0_all)
            .map(|a| (v[sizes.position_to_velocity(a)] + phi_star.w0()[a]) * inv)
            .collect();
        let x = StateH::from_parts(sizes, &v, &position)?;
        let rel = resolvent_residual(p, &x, phi_star, self.lambda);
        if rel > tol {
            return Err(Error::Numeric {
                what: "resolvent equation",
                residual: rel.as_f64(),
            });
        }
        Ok(x)
    }
}

/// `F_λ` on the velocity layout.
pub fn rhs_f_lambda<T: Real>(
    p: &OperatorPencil<T>,
    phi_star: &StateH<T>,
    lambda: T,
) -> Result<Vec<T>> {
    check_lambda(lambda)?;
    if phi_star.sizes() != p.sizes() {
        return Err(Error::Dimension {
            expected: p.dim(),
            found: phi_star.values().len(),
        });
    }
    let sizes = p.sizes();
    let mut f = p.space().mass_velocity().mul_vec(&phi_star.velocity());
    let mw = p.space().mass_position().mul_vec(phi_star.w0());
    let inv = T::one() / lambda;
    for (a, &m) in mw.iter().enumerate() {
        f[sizes.position_to_velocity(a)] -= inv * m;
    }
    Ok(f)
}

/// `‖(λM − K)x − Mφ*‖ / max(‖Mφ*‖, ‖λMx‖ + ‖Kx‖)`.
pub fn resolvent_residual<T: Real>(
    p: &OperatorPencil<T>,
    x: &StateH<T>,
    phi_star: &StateH<T>,
    lambda: T,
) -> T {
    let mx = p.m().mul_vec(x.values());
    let kx = p.k().mul_vec(x.values());
    let mphi = p.m().mul_vec(phi_star.values());
    let r: Vec<T> = (0..mx.len())
        .map(|i| lambda * mx[i] - kx[i] - mphi[i])
        .collect();
    let scale = norm2(&mphi).max(lambda * norm2(&mx) + norm2(&kx));
    if scale == T::zero() {
        T::zero()
    } else {
        norm2(&r) / scale
    }
}

pub fn solve_resolvent<T: Real>(
    p: &OperatorPencil<T>,
    phi_star: &StateH<T>,
    lambda: T,
) -> Result<StateH<T>> {
    assemble_b_form(p, lambda)?.solve(p, phi_star)
}

/// `A x = φ*`, i.e. `K x = M φ*`.
///
/// The position rows force `P v = w0*`: the interface velocity and the thick
/// velocity are read off `w0*` directly. The heat field then solves a
/// Dirichlet problem with that interface data, and finally the positions
/// solve the elliptic `M_p` system whose data is the variational flux of `u`
/// and the solid inertia.
pub fn solve_static<T: Real>(p: &OperatorPencil<T>, phi_star: &StateH<T>) -> Result<StateH<T>> {
    if phi_star.sizes() != p.sizes() {
        return Err(Error::Dimension {
            expected: p.dim(),
            found: phi_star.values().len(),
        });
    }
    let space = p.space();
    let sizes = p.sizes();
    let tol = contract_tol::<T>(RESIDUAL_TOL);
    let nv = sizes.velocity_dim();

    let mut v = vec![T::zero(); nv];
    for (a, &w) in phi_star.w0().iter().enumerate() {
        v[sizes.position_to_velocity(a)] = w;
    }

    let mut mfu = space.fluid_mass.mul_vec(&phi_star.velocity());
    let nu = sizes.u_interior;
    if nu > 0 {
        let int: Vec<usize> = (0..nu).collect();
        let rest: Vec<usize> = (nu..nv).collect();
        let s_ii = space.fluid_stiff.submatrix(&int, &int);
        let s_ir = space.fluid_stiff.submatrix(&int, &rest);
        let lift = s_ir.mul_vec(&v[nu..]);
        let rhs: Vec<T> = (0..nu).map(|i| -mfu[i] - lift[i]).collect();
        let chol = SparseCholesky::factor(&s_ii, "fluid Dirichlet stiffness")?;
        let u = chol.solve_refined(&rhs, tol * T::lit(0.1), "fluid Dirichlet solve")?;
        v[..nu].copy_from_slice(&u);
    }

    // velocity rows at the solid velocities: Pᵀ M_p w0 = −S_f v − M_v v*
    let sfv = space.fluid_stiff.mul_vec(&v);
    let ms_w1 = space.solid_mass.mul_vec(&phi_star.w1_all());
    let me_h1 = space.edge_mass.mul_vec(phi_star.gamma());
    for (i, m) in mfu.iter_mut().enumerate() {
        *m += sfv[i];
    }
    let rhs: Vec<T> = (0..sizes.w0_all)
        .map(|a| {
            let k = sizes.position_to_velocity(a);
            let thin = if a < sizes.gamma { me_h1[a] } else { T::zero() };
            -mfu[k] - thin - ms_w1[a]
        })
        .collect();
    let chol = SparseCholesky::factor(space.mass_position(), "position block")?;
    let w0 = chol.solve_refined(&rhs, tol * T::lit(0.1), "position solve")?;

    let x = StateH::from_parts(sizes, &v, &w0)?;
    let kx = p.k().mul_vec(x.values());
    let mphi = p.m().mul_vec(phi_star.values());
    let r: Vec<T> = kx.iter().zip(&mphi).map(|(&a, &b)| a - b).collect();
    let scale = norm2(&mphi).max(norm2(&kx));
    let rel = if scale == T::zero() {
        T::zero()
    } else {
        norm2(&r) / scale
    };
    if rel > tol {
        return Err(Error::Numeric {
            what: "static equation",
            residual: rel.as_f64(),
        });
    }
    Ok(x)
}

/// Dense LU of `λM − K`: an independent route to the same resolvent.
pub fn solve_resolvent_monolithic<T: Real>(
    p: &OperatorPencil<T>,
    phi_star: &StateH<T>,
    lambda: T,
) -> Result<StateH<T>> {
    check_lambda(lambda)?;
    let a = p.m().to_dense() * lambda - p.k().to_dense();
    let rhs = DVector::from_vec(p.m().mul_vec(phi_star.values()));
    let x = dense_solve(a, rhs, "monolithic resolvent")?;
    StateH::from_vec(p.sizes(), x)
}

/// LU solve of a dense system; a singular matrix is a numeric failure.
pub fn dense_solve<T: Real>(a: DMatrix<T>, b: DVector<T>, what: &'static str) -> Result<Vec<T>> {
    let x = a.lu().solve(&b).ok_or(Error::Numeric {
        what,
        residual: f64::INFINITY,
    })?;
    Ok(x.iter().copied().collect())
}
