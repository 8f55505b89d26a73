//! The semidiscrete generator `M ẋ = K x` and its adjoint.
//!
//! With the state split into velocities `v = [u_interior, gamma, w1_interior]`
//! and positions `p = w0_all`, and `P` the map that picks the solid
//! velocities (`gamma`, then `w1_interior`) out of `v`:
//!
//! ```text
//! M = [ M_v   0  ]      K = [ -S_f   -Pᵀ M_p ]
//!     [  0   M_p ]          [ M_p P     0    ]
//! ```
//!
//! Velocity rows are the monolithic weak form of the heat, thin-wave and
//! thick-wave equations tested with one shared velocity test function, so the
//! interface fluxes cancel and are never assembled. Position rows say
//! `ẇ0 = w1` (and hence `ḣ0 = h1`) in the `M_p` inner product.

use crate::cholesky::SparseCholesky;
use crate::error::{Error, Result};
use crate::geometry::{FsiMesh, Region};
use crate::hspace::{BlockSizes, EnergySpace, StateH};
use crate::scalar::{contract_tol, Real};
use crate::sparse::{CsrMatrix, Triplets};

/// Deliberate assembly faults, used to prove that the invariant battery
/// notices broken operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flips the sign of the position-from-velocity block of `K`.
    SignFlip,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sign-flip" => Ok(Fault::SignFlip),
            other => Err(format!("unknown fault `{other}` (expected sign-flip)")),
        }
    }
}

/// Generator pencil `(M, K)` together with the space it acts on.
#[derive(Debug, Clone)]
pub struct OperatorPencil<T> {
    space: EnergySpace<T>,
    k: CsrMatrix<T>,
    m_factor: SparseCholesky<T>,
}

/// The adjoint pencil `(M, K_adj)`.
#[derive(Debug, Clone)]
pub struct AdjointPencil<T> {
    pub k_adj: CsrMatrix<T>,
    /// `‖K_adj − Kᵀ‖_max` measured at construction.
    pub transpose_mismatch: T,
}

/// Extra factorizations for the generator solve use this residual target.
const GENERATOR_TOL: f64 = 1e-12;
/// Allowed `‖K_adj − Kᵀ‖_max`.
pub const ADJOINT_TOL: f64 = 1e-12;

/// Block couplings of `K` between velocities and positions: `sign_vp` in
/// front of `Pᵀ M_p`, `sign_pv` in front of `M_p P`.
fn assemble_generator<T: Real>(space: &EnergySpace<T>, sign_vp: T, sign_pv: T) -> CsrMatrix<T> {
    let sizes = space.sizes();
    let n = sizes.total();
    let vel = |k: usize| Some(sizes.velocity_to_full(k));
    let pos = |k: usize| Some(sizes.position_to_full(k));
    // P maps position index a to velocity index position_to_velocity(a)
    let pos_as_vel = |a: usize| Some(sizes.velocity_to_full(sizes.position_to_velocity(a)));
    let mut t = Triplets::new(n, n);
    t.push_mapped(&space.fluid_stiff, -T::one(), vel, vel);
    t.push_mapped(space.mass_position(), sign_vp, pos_as_vel, pos);
    t.push_mapped(space.mass_position(), sign_pv, pos, pos_as_vel);
    t.build()
}

impl<T: Real> OperatorPencil<T> {
    pub fn new(space: EnergySpace<T>) -> Result<Self> {
        Self::with_fault(space, None)
    }

    pub fn with_fault(space: EnergySpace<T>, fault: Option<Fault>) -> Result<Self> {
        let sign_pv = match fault {
            Some(Fault::SignFlip) => -T::one(),
            None => T::one(),
        };
        let k = assemble_generator(&space, -T::one(), sign_pv);
        let m_factor = SparseCholesky::factor(space.gram(), "Gram matrix")?;
        Ok(Self { space, k, m_factor })
    }

    pub fn space(&self) -> &EnergySpace<T> {
        &self.space
    }

    pub fn mesh(&self) -> &FsiMesh<T> {
        self.space.mesh()
    }

    pub fn sizes(&self) -> BlockSizes {
        self.space.sizes()
    }

    pub fn dim(&self) -> usize {
        self.sizes().total()
    }

    pub fn m(&self) -> &CsrMatrix<T> {
        self.space.gram()
    }

    pub fn k(&self) -> &CsrMatrix<T> {
        &self.k
    }

    /// `M⁻¹ b` to the generator residual target.
    pub fn solve_mass(&self, b: &[T]) -> Result<Vec<T>> {
        self.m_factor
            .solve_refined(b, contract_tol(GENERATOR_TOL), "Gram solve")
    }
}

pub fn assemble_pencil<T: Real>(mesh: &FsiMesh<T>) -> Result<OperatorPencil<T>> {
    OperatorPencil::new(EnergySpace::new(mesh.clone()))
}

/// `y = A_h x`, i.e. the solution of `M y = K x`.
pub fn apply_generator<T: Real>(p: &OperatorPencil<T>, x: &StateH<T>) -> Result<StateH<T>> {
    check_dim(p, x)?;
    let kx = p.k.mul_vec(x.values());
    StateH::from_vec(p.sizes(), p.solve_mass(&kx)?)
}

fn check_dim<T: Real>(p: &OperatorPencil<T>, x: &StateH<T>) -> Result<()> {
    if x.sizes() != p.sizes() {
        return Err(Error::Dimension {
            expected: p.dim(),
            found: x.values().len(),
        });
    }
    Ok(())
}

/// Adjoint pencil assembled from its own block signs — identifications
/// negated, thin `(I − Δ)` and thick `−Δ` couplings flipped — then compared
/// with `Kᵀ`.
pub fn assemble_adjoint<T: Real>(p: &OperatorPencil<T>) -> Result<AdjointPencil<T>> {
    let k_adj = assemble_generator(&p.space, T::one(), -T::one());
    let transpose_mismatch = k_adj.max_abs_diff(&p.k.transpose())?;
    if transpose_mismatch > T::lit(ADJOINT_TOL) {
        return Err(Error::Consistency {
            what: "adjoint pencil against the transpose of K",
            mismatch: transpose_mismatch.as_f64(),
            tolerance: ADJOINT_TOL,
        });
    }
    Ok(AdjointPencil {
        k_adj,
        transpose_mismatch,
    })
}

/// `y = A*_h x`.
pub fn apply_adjoint<T: Real>(
    p: &OperatorPencil<T>,
    a: &AdjointPencil<T>,
    x: &StateH<T>,
) -> Result<StateH<T>> {
    check_dim(p, x)?;
    let kx = a.k_adj.mul_vec(x.values());
    StateH::from_vec(p.sizes(), p.solve_mass(&kx)?)
}

/// Corner flux of `h0` on every edge endpoint.
///
/// The thin operator `(I − Δ)h0` is represented globally on the interface by
/// `q = M_Γ⁻¹ (S_Γ + M_Γ) h0`. Edge `j`'s residual against that common
/// representation, `(S_j + M_j) h0 − M_j q`, vanishes at edge-interior nodes
/// and equals the discrete endpoint derivative `∂h0/∂n_j` at its two ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerFlux<T> {
    pub node: usize,
    pub edge: usize,
    pub end: crate::geometry::End,
    pub flux: T,
}

pub fn corner_fluxes<T: Real>(p: &OperatorPencil<T>, x: &StateH<T>) -> Result<Vec<CornerFlux<T>>> {
    check_dim(p, x)?;
    let space = &p.space;
    let h0 = x.h0();
    let graph = space.mesh().interface();
    let thin = CsrMatrix::linear_combination(&[
        (T::one(), &space.edge_stiff),
        (T::one(), &space.edge_mass),
    ]);
    let edge_mass = SparseCholesky::factor(&space.edge_mass, "interface mass")?;
    let q = edge_mass.solve_refined(
        &thin.mul_vec(h0),
        contract_tol(1e-14),
        "interface mass solve",
    )?;
    let mut out = Vec::with_capacity(2 * graph.num_edges());
    for at in graph.edge_ends() {
        let (s_j, m_j) = &space.edge_parts[at.edge];
        let node = graph.endpoint_node(at);
        let c = space
            .dofs()
            .gamma_index(node)
            .expect("endpoint on interface");
        let row = |m: &CsrMatrix<T>, v: &[T]| {
            let (cols, vals) = m.row(c);
            cols.iter().zip(vals).map(|(&k, &a)| a * v[k]).sum::<T>()
        };
        let flux = row(s_j, h0) + row(m_j, h0) - row(m_j, &q);
        out.push(CornerFlux {
            node,
            edge: at.edge,
            end: at.end,
            flux,
        });
    }
    Ok(out)
}

/// `Σ_j Σ_{c ∈ ∂Γ_j} (∂h0/∂n_j)(c) · h1(c)`: the corner pairing, which
/// cancels across the two edges meeting at every junction.
pub fn junction_flux_sum<T: Real>(p: &OperatorPencil<T>, x: &StateH<T>) -> Result<T> {
    let dofs = p.space.dofs();
    Ok(corner_fluxes(p, x)?
        .iter()
        .map(|f| f.flux * x.gamma()[dofs.gamma_index(f.node).expect("interface node")])
        .sum())
}

/// Frozen-interface thick wave: states `[w1, w0]` on the solid interior
/// nodes with homogeneous Dirichlet data, `M = diag(M_s, S_s)`,
/// `K = [[0, −S_s], [S_s, 0]]`. Its spectrum is `±i√μ_k`.
#[derive(Debug, Clone)]
pub struct DecoupledThickPencil<T> {
    pub m: CsrMatrix<T>,
    pub k: CsrMatrix<T>,
    /// Solid interior node ids, in block order.
    pub nodes: Vec<usize>,
}

pub fn decoupled_thick_pencil<T: Real>(space: &EnergySpace<T>) -> DecoupledThickPencil<T> {
    let dofs = space.dofs();
    let nodes = dofs.w1_interior.clone();
    let idx: Vec<usize> = nodes
        .iter()
        .map(|&v| dofs.solid_index(v).expect("solid node"))
        .collect();
    let s = space.solid_stiff.submatrix(&idx, &idx);
    let m_s = space.solid_mass.submatrix(&idx, &idx);
    let n = idx.len();
    let lo = |k: usize| Some(k);
    let hi = |k: usize| Some(n + k);
    let mut m = Triplets::new(2 * n, 2 * n);
    m.push_mapped(&m_s, T::one(), lo, lo);
    m.push_mapped(&s, T::one(), hi, hi);
    let mut k = Triplets::new(2 * n, 2 * n);
    k.push_mapped(&s, -T::one(), lo, hi);
    k.push_mapped(&s, T::one(), hi, lo);
    DecoupledThickPencil {
        m: m.build(),
        k: k.build(),
        nodes,
    }
}

/// Number of fluid and solid triangles, for reports.
pub fn region_counts<T: Real>(mesh: &FsiMesh<T>) -> (usize, usize) {
    (
        mesh.triangles_in(Region::Fluid).count(),
        mesh.triangles_in(Region::Solid).count(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_default_geometry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pencil(r: usize) -> OperatorPencil<f64> {
        assemble_pencil(&build_default_geometry(r).unwrap()).unwrap()
    }

    #[test]
    fn quadratic_form_is_minus_heat_gradient() {
        let p = pencil(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = StateH::random(p.sizes(), &mut rng);
            let q = p.k().bilinear(x.values(), x.values());
            let g = p.space().heat_gradient_sq(&x);
            assert!((q + g).abs() <= 1e-12 * p.space().norm(&x).powi(2));
        }
    }

    #[test]
    fn adjoint_is_transpose() {
        let p = pencil(0);
        let a = assemble_adjoint(&p).unwrap();
        assert_eq!(a.transpose_mismatch, 0.0);
    }

    #[test]
    fn sign_flip_breaks_adjoint() {
        let space = EnergySpace::new(build_default_geometry::<f64>(0).unwrap());
        let p = OperatorPencil::with_fault(space, Some(Fault::SignFlip)).unwrap();
        assert!(matches!(
            assemble_adjoint(&p),
            Err(Error::Consistency { .. })
        ));
    }

    #[test]
    fn decoupled_thick_pencil_is_skew() {
        let p = pencil(1);
        let d = decoupled_thick_pencil(p.space());
        let kt = d.k.transpose();
        let sum = CsrMatrix::linear_combination(&[(1.0, &d.k), (1.0, &kt)]);
        assert_eq!(sum.max_abs(), 0.0);
        assert_eq!(d.m.nrows(), 2 * d.nodes.len());
    }
}
