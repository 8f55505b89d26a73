//! Independent oracles and interface diagnostics: the solid Dirichlet map,
//! variational flux recovery, decoupled eigenvalue references and
//! manufactured resolvent data.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assembly::{apply_generator, OperatorPencil};
use crate::cholesky::SparseCholesky;
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::hspace::{EnergySpace, StateH};
use crate::scalar::{contract_tol, fmt17, Real};
use crate::sparse::dot;

/// Discrete harmonic extension of interface data `g` (in `gamma` order)
/// into the solid. The result is indexed like `w0_all`: `g` itself followed
/// by the interior values.
pub fn harmonic_extension<T: Real>(space: &EnergySpace<T>, g: &[T]) -> Result<Vec<T>> {
    let sizes = space.sizes();
    if g.len() != sizes.gamma {
        return Err(Error::Dimension {
            expected: sizes.gamma,
            found: g.len(),
        });
    }
    let boundary: Vec<usize> = (0..sizes.gamma).collect();
    let interior: Vec<usize> = (sizes.gamma..sizes.w0_all).collect();
    let mut out = g.to_vec();
    if interior.is_empty() {
        return Ok(out);
    }
    let s_ii = space.solid_stiff.submatrix(&interior, &interior);
    let s_ib = space.solid_stiff.submatrix(&interior, &boundary);
    let rhs: Vec<T> = s_ib.mul_vec(g).into_iter().map(|v| -v).collect();
    let chol = SparseCholesky::factor(&s_ii, "solid Dirichlet stiffness")?;
    out.extend(chol.solve_refined(&rhs, contract_tol(1e-13), "harmonic extension")?);
    Ok(out)
}

/// Interface fluxes recovered as residual functionals, one entry per
/// interface node (`gamma` order).
///
/// `flux_u[i] ≈ ∫ ∂u/∂ν φ_i` and `flux_w[i] ≈ ∫ ∂w0/∂ν φ_i` with `ν` pointing
/// into the solid; `thin_residual` is the thin-wave balance
/// `ḣ1 − Δh0 + h0 − ∂w0/∂ν + ∂u/∂ν` tested against the interface basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxRecovery<T> {
    pub nodes: Vec<usize>,
    pub flux_u: Vec<T>,
    pub flux_w: Vec<T>,
    pub thin_residual: Vec<T>,
    /// `sqrt(rᵀ M_Γ⁻¹ r)` of the thin residual.
    pub residual_dual_norm: T,
    /// Row sums of the interface mass, for pointwise flux densities.
    lumped_mass: Vec<T>,
}

impl<T: Real> FluxRecovery<T> {
    /// Pointwise `∂u/∂ν` at every interface node (lumped-mass division).
    pub fn density_u(&self) -> Vec<T> {
        self.flux_u
            .iter()
            .zip(&self.lumped_mass)
            .map(|(&f, &m)| f / m)
            .collect()
    }

    pub fn density_w(&self) -> Vec<T> {
        self.flux_w
            .iter()
            .zip(&self.lumped_mass)
            .map(|(&f, &m)| f / m)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,flux_u,flux_w,thin_residual\n");
        for i in 0..self.nodes.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.nodes[i],
                fmt17(self.flux_u[i]),
                fmt17(self.flux_w[i]),
                fmt17(self.thin_residual[i])
            );
        }
        out
    }
}

/// Flux recovery with the time derivative taken from the generator,
/// `ẋ = A_h x`.
pub fn recover_interface_flux<T: Real>(
    x: &StateH<T>,
    p: &OperatorPencil<T>,
) -> Result<FluxRecovery<T>> {
    let rate = apply_generator(p, x)?;
    recover_flux_with_rate(p.space(), x, &rate)
}

/// Flux recovery with an explicitly supplied rate `ẋ`.
pub fn recover_flux_with_rate<T: Real>(
    space: &EnergySpace<T>,
    x: &StateH<T>,
    rate: &StateH<T>,
) -> Result<FluxRecovery<T>> {
    x.check_layout(rate)?;
    if x.sizes() != space.sizes() {
        return Err(Error::Dimension {
            expected: space.sizes().total(),
            found: x.values().len(),
        });
    }
    let sizes = space.sizes();
    let ng = sizes.gamma;
    let g0 = sizes.gamma_offset();

    // fluid: ∫ ∂u/∂ν φ = (u̇, φ) + (∇u, ∇φ) for φ supported at the interface
    let fluid_rate = {
        let mut v = rate.velocity();
        v[g0 + ng..].iter_mut().for_each(|e| *e = T::zero());
        v
    };
    let fluid_u = {
        let mut v = x.velocity();
        v[g0 + ng..].iter_mut().for_each(|e| *e = T::zero());
        v
    };
    let mu = space.fluid_mass.mul_vec(&fluid_rate);
    let su = space.fluid_stiff.mul_vec(&fluid_u);
    let flux_u: Vec<T> = (0..ng).map(|i| mu[g0 + i] + su[g0 + i]).collect();

    // solid, outward normal −ν: ∫ ∂w/∂ν ξ = −(ẇ1, ξ) − (∇w0, ∇ξ)
    let mw = space.solid_mass.mul_vec(&rate.w1_all());
    let sw = space.solid_stiff.mul_vec(x.w0());
    let flux_w: Vec<T> = (0..ng).map(|i| -mw[i] - sw[i]).collect();

    let me = space.edge_mass.mul_vec(rate.gamma());
    let se = space.edge_stiff.mul_vec(x.h0());
    let mh = space.edge_mass.mul_vec(x.h0());
    let thin_residual: Vec<T> = (0..ng)
        .map(|i| me[i] + se[i] + mh[i] - flux_w[i] + flux_u[i])
        .collect();

    let chol = SparseCholesky::factor(&space.edge_mass, "interface mass")?;
    let z = chol.solve(&thin_residual);
    let residual_dual_norm = dot(&thin_residual, &z).max(T::zero()).sqrt();
    let lumped_mass = (0..ng)
        .map(|i| space.edge_mass.row(i).1.iter().copied().sum())
        .collect();

    Ok(FluxRecovery {
        nodes: space.dofs().gamma.clone(),
        flux_u,
        flux_w,
        thin_residual,
        residual_dual_norm,
        lumped_mass,
    })
}

/// Side length of the default solid square.
pub const DEFAULT_SOLID_SIDE: f64 = 0.5;

/// Analytic Dirichlet-Laplacian eigenvalues `π²(m² + n²)/L²` of the default
/// solid square, ascending with multiplicity.
pub fn decoupled_eig_reference(region: Region, count: usize) -> Result<Vec<f64>> {
    match region {
        Region::Solid => {}
        Region::Fluid => {
            return Err(Error::Unsupported(
                "no closed-form Dirichlet spectrum for the square annulus fluid region".into(),
            ))
        }
    }
    let side = DEFAULT_SOLID_SIDE;
    // every pair with m² + n² ≤ bound is enumerated; count pairs fit below
    let mut bound = 2usize;
    loop {
        let mut vals: Vec<f64> = Vec::new();
        let top = (bound as f64).sqrt() as usize + 1;
        for m in 1..=top {
            for n in 1..=top {
                if m * m + n * n <= bound {
                    let k2 = (m * m + n * n) as f64;
                    vals.push(std::f64::consts::PI.powi(2) * k2 / (side * side));
                }
            }
        }
        if vals.len() >= count {
            vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            vals.truncate(count);
            return Ok(vals);
        }
        bound *= 2;
    }
}

/// Smallest discrete Dirichlet eigenvalue of the solid, `S v = μ M v` on the
/// interior nodes, by inverse iteration.
pub fn solid_dirichlet_ground_state<T: Real>(space: &EnergySpace<T>) -> Result<T> {
    let dofs = space.dofs();
    let idx: Vec<usize> = dofs
        .w1_interior
        .iter()
        .map(|&v| dofs.solid_index(v).expect("solid node"))
        .collect();
    if idx.is_empty() {
        return Err(Error::Unsupported("solid has no interior node".into()));
    }
    let s = space.solid_stiff.submatrix(&idx, &idx);
    let m = space.solid_mass.submatrix(&idx, &idx);
    let chol = SparseCholesky::factor(&s, "solid Dirichlet stiffness")?;
    let mut v = vec![T::one(); idx.len()];
    let mut mu = T::zero();
    for _ in 0..1000 {
        let w = chol.solve(&m.mul_vec(&v));
        let next = s.bilinear(&w, &w) / m.bilinear(&w, &w);
        let scale = T::one() / m.bilinear(&w, &w).sqrt();
        v = w.into_iter().map(|e| e * scale).collect();
        if (next - mu).abs() <= T::lit(1e-14) * next {
            return Ok(next);
        }
        mu = next;
    }
    Err(Error::Numeric {
        what: "inverse iteration for the solid ground state",
        residual: f64::NAN,
    })
}

/// `‖∇u_h‖²` summed triangle by triangle from nodal gradients, independent
/// of the assembled stiffness matrix.
pub fn gradient_energy_quadrature<T: Real>(space: &EnergySpace<T>, x: &StateH<T>) -> T {
    let mesh = space.mesh();
    let u = space.u_nodal(x);
    let mut total = T::zero();
    for tri in mesh.triangles_in(Region::Fluid) {
        let [a, b, c] = tri.nodes.map(|v| mesh.node(v));
        let [ua, ub, uc] = tri.nodes.map(|v| u[v]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        // ∇u solves [b−a; c−a] ∇u = [ub−ua; uc−ua]
        let gx = ((ub - ua) * (c[1] - a[1]) - (uc - ua) * (b[1] - a[1])) / det;
        let gy = ((uc - ua) * (b[0] - a[0]) - (ub - ua) * (c[0] - a[0])) / det;
        total += (gx * gx + gy * gy) * det * T::lit(0.5);
    }
    total
}

/// Deterministic `x` and the data `φ* = M⁻¹(λM − K)x = λx − A_h x`, so that
/// the resolvent at `λ` maps `φ*` back to `x`. For `λ = 0` the pair
/// satisfies `A_h x = −φ*`.
pub fn manufactured_resolvent_case<T: Real>(
    p: &OperatorPencil<T>,
    lambda: T,
    seed: u64,
) -> Result<(StateH<T>, StateH<T>)> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::Domain {
            what: "lambda",
            requirement: "lambda >= 0",
            value: lambda.as_f64(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = StateH::random(p.sizes(), &mut rng);
    let ax = apply_generator(p, &x)?;
    let phi = x.scaled(lambda).axpy(-T::one(), &ax)?;
    Ok((x, phi))
}
