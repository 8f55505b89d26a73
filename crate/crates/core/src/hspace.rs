//! The discrete energy space: consolidated degree-of-freedom layout, states,
//! and the energy inner product.
//!
//! Unknowns are stored in four blocks, in this order:
//!
//! | block         | nodes                                  | carries                |
//! |---------------|----------------------------------------|------------------------|
//! | `u_interior`  | fluid nodes off `Γ_f` and off `Γ_s`      | heat `u`               |
//! | `gamma`       | interface nodes, cycle order           | `u = h1 = w1` on `Γ_s`   |
//! | `w0_all`      | solid nodes, interface first           | `w0` (and `h0 = w0|_Γ`)  |
//! | `w1_interior` | solid nodes off `Γ_s`                   | thick velocity `w1`    |
//!
//! Trace matching, junction continuity and the kinematic identification are
//! encoded by shared storage, so every coefficient vector is a compatible
//! state. `Γ_f` nodes carry no unknown.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Condition, Error, Result};
use crate::fem;
use crate::geometry::{FsiMesh, Region};
use crate::scalar::{fmt17, parse_real, Real};
use crate::sparse::{CsrMatrix, Triplets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockSizes {
    pub u_interior: usize,
    pub gamma: usize,
    pub w0_all: usize,
    pub w1_interior: usize,
}

impl BlockSizes {
    pub fn total(&self) -> usize {
        self.u_interior + self.gamma + self.w0_all + self.w1_interior
    }

    /// Length of the velocity sub-layout `[u_interior, gamma, w1_interior]`.
    pub fn velocity_dim(&self) -> usize {
        self.u_interior + self.gamma + self.w1_interior
    }

    pub fn gamma_offset(&self) -> usize {
        self.u_interior
    }

    pub fn w0_offset(&self) -> usize {
        self.u_interior + self.gamma
    }

    pub fn w1_offset(&self) -> usize {
        self.u_interior + self.gamma + self.w0_all
    }

    pub fn velocity_to_full(&self, k: usize) -> usize {
        if k < self.u_interior + self.gamma {
            k
        } else {
            k + self.w0_all
        }
    }

    pub fn position_to_full(&self, k: usize) -> usize {
        self.w0_offset() + k
    }

    /// Velocity-layout index of the velocity that lives at solid position `k`.
    pub fn position_to_velocity(&self, k: usize) -> usize {
        self.u_interior + k
    }

    pub fn names() -> [&'static str; 4] {
        ["u_interior", "gamma", "w0_all", "w1_interior"]
    }

    fn as_array(&self) -> [usize; 4] {
        [self.u_interior, self.gamma, self.w0_all, self.w1_interior]
    }
}

/// Node ids behind every block of the layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub u_interior: Vec<usize>,
    pub gamma: Vec<usize>,
    pub w0_all: Vec<usize>,
    pub w1_interior: Vec<usize>,
    sizes: BlockSizes,
    fluid_velocity: Vec<Option<usize>>,
    solid: Vec<Option<usize>>,
    gamma_of: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new<T: Real>(mesh: &FsiMesh<T>) -> Self {
        let n = mesh.num_nodes();
        let gamma = mesh.interface().cycle_nodes();
        let mut gamma_of = vec![None; n];
        for (k, &v) in gamma.iter().enumerate() {
            gamma_of[v] = Some(k);
        }
        let mut on_outer = vec![false; n];
        for &v in mesh.outer_boundary() {
            on_outer[v] = true;
        }
        let u_interior: Vec<usize> = mesh
            .region_nodes(Region::Fluid)
            .into_iter()
            .filter(|&v| !on_outer[v] && gamma_of[v].is_none())
            .collect();
        let w1_interior: Vec<usize> = mesh
            .region_nodes(Region::Solid)
            .into_iter()
            .filter(|&v| gamma_of[v].is_none())
            .collect();
        let w0_all: Vec<usize> = gamma.iter().chain(&w1_interior).copied().collect();
        let sizes = BlockSizes {
            u_interior: u_interior.len(),
            gamma: gamma.len(),
            w0_all: w0_all.len(),
            w1_interior: w1_interior.len(),
        };

        let mut fluid_velocity = vec![None; n];
        for (k, &v) in u_interior.iter().enumerate() {
            fluid_velocity[v] = Some(k);
        }
        for (k, &v) in gamma.iter().enumerate() {
            fluid_velocity[v] = Some(sizes.u_interior + k);
        }
        let mut solid = vec![None; n];
        for (k, &v) in w0_all.iter().enumerate() {
            solid[v] = Some(k);
        }
        Self {
            u_interior,
            gamma,
            w0_all,
            w1_interior,
            sizes,
            fluid_velocity,
            solid,
            gamma_of,
        }
    }

    pub fn sizes(&self) -> BlockSizes {
        self.sizes
    }

    pub fn total_dim(&self) -> usize {
        self.sizes.total()
    }

    /// Velocity-layout index of the fluid unknown at `node` (`None` on `Γ_f`
    /// and outside the fluid).
    pub fn fluid_velocity_index(&self, node: usize) -> Option<usize> {
        self.fluid_velocity[node]
    }

    /// Index into `w0_all`.
    pub fn solid_index(&self, node: usize) -> Option<usize> {
        self.solid[node]
    }

    /// Velocity-layout index of the thick velocity at `node`.
    pub fn solid_velocity_index(&self, node: usize) -> Option<usize> {
        self.solid[node].map(|k| self.sizes.position_to_velocity(k))
    }

    pub fn gamma_index(&self, node: usize) -> Option<usize> {
        self.gamma_of[node]
    }
}

/// A compatible discrete state stored in the consolidated layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StateH<T> {
    sizes: BlockSizes,
    values: Vec<T>,
}

impl<T: Real> StateH<T> {
    pub fn zeros(sizes: BlockSizes) -> Self {
        Self {
            sizes,
            values: vec![T::zero(); sizes.total()],
        }
    }

    pub fn from_vec(sizes: BlockSizes, values: Vec<T>) -> Result<Self> {
        if values.len() != sizes.total() {
            return Err(Error::Dimension {
                expected: sizes.total(),
                found: values.len(),
            });
        }
        Ok(Self { sizes, values })
    }

    /// Reassembles a state from its velocity sub-vector and `w0`.
    pub fn from_parts(sizes: BlockSizes, velocity: &[T], position: &[T]) -> Result<Self> {
        if velocity.len() != sizes.velocity_dim() || position.len() != sizes.w0_all {
            return Err(Error::Dimension {
                expected: sizes.velocity_dim() + sizes.w0_all,
                found: velocity.len() + position.len(),
            });
        }
        let mut values = vec![T::zero(); sizes.total()];
        for (k, &v) in velocity.iter().enumerate() {
            values[sizes.velocity_to_full(k)] = v;
        }
        values[sizes.w0_offset()..sizes.w1_offset()].copy_from_slice(position);
        Ok(Self { sizes, values })
    }

    pub fn sizes(&self) -> BlockSizes {
        self.sizes
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn u_interior(&self) -> &[T] {
        &self.values[..self.sizes.gamma_offset()]
    }

    /// Shared interface velocity: `u|_Γ = h1 = w1|_Γ`.
    pub fn gamma(&self) -> &[T] {
        &self.values[self.sizes.gamma_offset()..self.sizes.w0_offset()]
    }

    pub fn w0(&self) -> &[T] {
        &self.values[self.sizes.w0_offset()..self.sizes.w1_offset()]
    }

    /// Thin displacement on the interface, read from the `w0` trace.
    pub fn h0(&self) -> &[T] {
        &self.w0()[..self.sizes.gamma]
    }

    pub fn w1_interior(&self) -> &[T] {
        &self.values[self.sizes.w1_offset()..]
    }

    /// `[u_interior, gamma, w1_interior]`.
    pub fn velocity(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.sizes.velocity_dim());
        v.extend_from_slice(&self.values[..self.sizes.w0_offset()]);
        v.extend_from_slice(self.w1_interior());
        v
    }

    /// Thick velocity on every solid node, in `w0_all` order.
    pub fn w1_all(&self) -> Vec<T> {
        self.gamma()
            .iter()
            .chain(self.w1_interior())
            .copied()
            .collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            sizes: self.sizes,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: T, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self {
            sizes: self.sizes,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| x + a * y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-T::one(), other)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn check_layout(&self, other: &Self) -> Result<()> {
        if self.sizes != other.sizes {
            return Err(Error::Dimension {
                expected: self.sizes.total(),
                found: other.sizes.total(),
            });
        }
        Ok(())
    }

    /// Independent uniform entries in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(sizes: BlockSizes, rng: &mut R) -> Self {
        let values = (0..sizes.total())
            .map(|_| T::lit(rng.gen_range(-1.0..=1.0)))
            .collect();
        Self { sizes, values }
    }
}

/// Unvalidated state data: `u`, `w0`, `w1` indexed by global node id (only
/// the entries of the relevant region are read), `h0`, `h1` per interface
/// edge in edge node order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawState<T> {
    pub u: Vec<T>,
    pub h0: Vec<Vec<T>>,
    pub h1: Vec<Vec<T>>,
    pub w0: Vec<T>,
    pub w1: Vec<T>,
}

impl<T: Real> RawState<T> {
    pub fn zeros(mesh: &FsiMesh<T>) -> Self {
        let n = mesh.num_nodes();
        let per_edge: Vec<Vec<T>> = mesh
            .interface()
            .edges()
            .iter()
            .map(|e| vec![T::zero(); e.nodes.len()])
            .collect();
        Self {
            u: vec![T::zero(); n],
            h0: per_edge.clone(),
            h1: per_edge,
            w0: vec![T::zero(); n],
            w1: vec![T::zero(); n],
        }
    }

    /// Expands a consolidated state back into separate arrays.
    pub fn from_state(x: &StateH<T>, mesh: &FsiMesh<T>, dofs: &DofMap) -> Self {
        let mut raw = Self::zeros(mesh);
        for (k, &v) in dofs.u_interior.iter().enumerate() {
            raw.u[v] = x.u_interior()[k];
        }
        for (k, &v) in dofs.gamma.iter().enumerate() {
            raw.u[v] = x.gamma()[k];
            raw.w1[v] = x.gamma()[k];
        }
        for (k, &v) in dofs.w0_all.iter().enumerate() {
            raw.w0[v] = x.w0()[k];
        }
        for (k, &v) in dofs.w1_interior.iter().enumerate() {
            raw.w1[v] = x.w1_interior()[k];
        }
        for (j, e) in mesh.interface().edges().iter().enumerate() {
            for (i, &v) in e.nodes.iter().enumerate() {
                raw.h0[j][i] = raw.w0[v];
                raw.h1[j][i] = raw.u[v];
            }
        }
        raw
    }

    pub fn max_abs(&self) -> T {
        self.u
            .iter()
            .chain(&self.w0)
            .chain(&self.w1)
            .chain(self.h0.iter().flatten())
            .chain(self.h1.iter().flatten())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// Default ingestion tolerance: `1e-10 · max(max |coefficient|, 1)`.
pub fn default_tolerance<T: Real>(raw: &RawState<T>) -> T {
    T::lit(1e-10) * raw.max_abs().max(T::one())
}

/// Arithmetic mean; identical values come back bit for bit.
fn mean<T: Real>(xs: &[T]) -> T {
    if spread(xs) == T::zero() {
        return xs[0];
    }
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

fn spread<T: Real>(xs: &[T]) -> T {
    let hi = xs.iter().copied().fold(xs[0], |m, v| m.max(v));
    let lo = xs.iter().copied().fold(xs[0], |m, v| m.min(v));
    hi - lo
}

/// Checks the compatibility conditions within `tol` and consolidates the
/// raw arrays into a state by averaging the values that share storage.
pub fn validate_membership<T: Real>(
    raw: &RawState<T>,
    mesh: &FsiMesh<T>,
    tol: T,
) -> Result<StateH<T>> {
    let n = mesh.num_nodes();
    let graph = mesh.interface();
    for (len, expected) in [(raw.u.len(), n), (raw.w0.len(), n), (raw.w1.len(), n)] {
        if len != expected {
            return Err(Error::Dimension {
                expected,
                found: len,
            });
        }
    }
    for per_edge in [&raw.h0, &raw.h1] {
        if per_edge.len() != graph.num_edges() {
            return Err(Error::Dimension {
                expected: graph.num_edges(),
                found: per_edge.len(),
            });
        }
        for (e, vals) in graph.edges().iter().zip(per_edge) {
            if vals.len() != e.nodes.len() {
                return Err(Error::Dimension {
                    expected: e.nodes.len(),
                    found: vals.len(),
                });
            }
        }
    }
    let violation = |condition, node, deviation: T| Error::Compatibility {
        condition,
        node,
        deviation: deviation.as_f64(),
    };

    for &v in mesh.outer_boundary() {
        if raw.u[v].abs() > tol {
            return Err(violation(Condition::Kinematic, v, raw.u[v].abs()));
        }
    }

    let dofs = DofMap::new(mesh);
    // per interface node: every h0 and h1 value attached to it, with the
    // edge-only and junction nodes distinguished
    let mut h0_at: Vec<Vec<T>> = vec![Vec::new(); n];
    let mut h1_at: Vec<Vec<T>> = vec![Vec::new(); n];
    for (j, e) in graph.edges().iter().enumerate() {
        for (i, &v) in e.nodes.iter().enumerate() {
            h0_at[v].push(raw.h0[j][i]);
            h1_at[v].push(raw.h1[j][i]);
        }
    }
    for &v in &dofs.gamma {
        for &h in &h0_at[v] {
            let dev = (raw.w0[v] - h).abs();
            if dev > tol {
                return Err(violation(Condition::TraceMatch, v, dev));
            }
        }
    }
    for junction in graph.junctions() {
        let v = junction.node;
        let dev = spread(&h0_at[v]);
        if dev > tol {
            return Err(violation(Condition::JunctionContinuity, v, dev));
        }
    }
    for &v in &dofs.gamma {
        let mut kin = h1_at[v].clone();
        kin.push(raw.u[v]);
        kin.push(raw.w1[v]);
        let dev = spread(&kin);
        if dev > tol {
            return Err(violation(Condition::Kinematic, v, dev));
        }
    }

    let sizes = dofs.sizes();
    let mut values = Vec::with_capacity(sizes.total());
    values.extend(dofs.u_interior.iter().map(|&v| raw.u[v]));
    for &v in &dofs.gamma {
        let mut kin = h1_at[v].clone();
        kin.push(raw.u[v]);
        kin.push(raw.w1[v]);
        values.push(mean(&kin));
    }
    for &v in &dofs.w0_all {
        if dofs.gamma_index(v).is_some() {
            let mut pos = h0_at[v].clone();
            pos.push(raw.w0[v]);
            values.push(mean(&pos));
        } else {
            values.push(raw.w0[v]);
        }
    }
    values.extend(dofs.w1_interior.iter().map(|&v| raw.w1[v]));
    StateH::from_vec(sizes, values)
}

/// The six quadratic terms of the energy, each with the `½` factor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyComponents<T> {
    pub fluid: T,
    pub thin_grad: T,
    pub thin_mass: T,
    pub thin_kinetic: T,
    pub thick_grad: T,
    pub thick_kinetic: T,
}

impl<T: Real> EnergyComponents<T> {
    pub fn total(&self) -> T {
        self.fluid
            + self.thin_grad
            + self.thin_mass
            + self.thin_kinetic
            + self.thick_grad
            + self.thick_kinetic
    }
}

/// Mesh, layout and every assembled P1 building block of the coupled
/// system. All matrices are immutable after construction.
#[derive(Debug, Clone)]
pub struct EnergySpace<T> {
    mesh: FsiMesh<T>,
    dofs: DofMap,
    /// Fluid stiffness on the velocity layout (`Γ_f` rows dropped).
    pub(crate) fluid_stiff: CsrMatrix<T>,
    pub(crate) fluid_mass: CsrMatrix<T>,
    /// Solid stiffness and mass on `w0_all` indexing.
    pub(crate) solid_stiff: CsrMatrix<T>,
    pub(crate) solid_mass: CsrMatrix<T>,
    /// Edge stiffness and mass summed over all edges, `gamma` indexing.
    pub(crate) edge_stiff: CsrMatrix<T>,
    pub(crate) edge_mass: CsrMatrix<T>,
    /// Per-edge stiffness and mass, `gamma` indexing.
    pub(crate) edge_parts: Vec<(CsrMatrix<T>, CsrMatrix<T>)>,
    mass_velocity: CsrMatrix<T>,
    mass_position: CsrMatrix<T>,
    gram: CsrMatrix<T>,
}

impl<T: Real> EnergySpace<T> {
    pub fn new(mesh: FsiMesh<T>) -> Self {
        let dofs = DofMap::new(&mesh);
        let sizes = dofs.sizes();
        let nv = sizes.velocity_dim();
        let (fluid_stiff, fluid_mass) =
            fem::assemble_region(&mesh, Region::Fluid, nv, |v| dofs.fluid_velocity_index(v));
        let (solid_stiff, solid_mass) =
            fem::assemble_region(&mesh, Region::Solid, sizes.w0_all, |v| dofs.solid_index(v));
        let (edge_stiff, edge_mass) =
            fem::assemble_interface(&mesh, None, sizes.gamma, |v| dofs.gamma_index(v));
        let edge_parts = (0..mesh.interface().num_edges())
            .map(|j| fem::assemble_interface(&mesh, Some(j), sizes.gamma, |v| dofs.gamma_index(v)))
            .collect();

        let gamma_to_vel = |k: usize| Some(sizes.gamma_offset() + k);
        let pos_to_vel = |k: usize| Some(sizes.position_to_velocity(k));
        let mut mv = Triplets::new(nv, nv);
        mv.push_mapped(&fluid_mass, T::one(), Some, Some);
        mv.push_mapped(&edge_mass, T::one(), gamma_to_vel, gamma_to_vel);
        mv.push_mapped(&solid_mass, T::one(), pos_to_vel, pos_to_vel);
        let mass_velocity = mv.build();

        let mut mp = Triplets::new(sizes.w0_all, sizes.w0_all);
        mp.push_mapped(&solid_stiff, T::one(), Some, Some);
        mp.push_mapped(&edge_stiff, T::one(), Some, Some);
        mp.push_mapped(&edge_mass, T::one(), Some, Some);
        let mass_position = mp.build();

        let n = sizes.total();
        let mut g = Triplets::new(n, n);
        let vel_to_full = |k: usize| Some(sizes.velocity_to_full(k));
        let pos_to_full = |k: usize| Some(sizes.position_to_full(k));
        g.push_mapped(&mass_velocity, T::one(), vel_to_full, vel_to_full);
        g.push_mapped(&mass_position, T::one(), pos_to_full, pos_to_full);
        let gram = g.build();

        Self {
            mesh,
            dofs,
            fluid_stiff,
            fluid_mass,
            solid_stiff,
            solid_mass,
            edge_stiff,
            edge_mass,
            edge_parts,
            mass_velocity,
            mass_position,
            gram,
        }
    }

    pub fn mesh(&self) -> &FsiMesh<T> {
        &self.mesh
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn sizes(&self) -> BlockSizes {
        self.dofs.sizes()
    }

    /// Gram matrix `M_H` of the energy inner product.
    pub fn gram(&self) -> &CsrMatrix<T> {
        &self.gram
    }

    /// Velocity block of `M_H`: fluid mass + edge mass + solid mass.
    pub fn mass_velocity(&self) -> &CsrMatrix<T> {
        &self.mass_velocity
    }

    /// Position block of `M_H`: solid stiffness + edge stiffness + edge mass.
    pub fn mass_position(&self) -> &CsrMatrix<T> {
        &self.mass_position
    }

    pub fn zero_state(&self) -> StateH<T> {
        StateH::zeros(self.sizes())
    }

    pub fn inner(&self, a: &StateH<T>, b: &StateH<T>) -> Result<T> {
        inner_h(a, b, &self.gram)
    }

    pub fn energy(&self, x: &StateH<T>) -> T {
        energy(x, &self.gram)
    }

    pub fn norm(&self, x: &StateH<T>) -> T {
        self.gram
            .bilinear(x.values(), x.values())
            .max(T::zero())
            .sqrt()
    }

    /// `‖∇u‖²` over the fluid.
    pub fn heat_gradient_sq(&self, x: &StateH<T>) -> T {
        let u = fluid_part(x);
        self.fluid_stiff.bilinear(&u, &u)
    }

    pub fn components(&self, x: &StateH<T>) -> EnergyComponents<T> {
        let half = T::lit(0.5);
        let u = fluid_part(x);
        let w1 = x.w1_all();
        EnergyComponents {
            fluid: half * self.fluid_mass.bilinear(&u, &u),
            thin_grad: half * self.edge_stiff.bilinear(x.h0(), x.h0()),
            thin_mass: half * self.edge_mass.bilinear(x.h0(), x.h0()),
            thin_kinetic: half * self.edge_mass.bilinear(x.gamma(), x.gamma()),
            thick_grad: half * self.solid_stiff.bilinear(x.w0(), x.w0()),
            thick_kinetic: half * self.solid_mass.bilinear(&w1, &w1),
        }
    }

    /// Unit-energy random state with uniform coefficients before scaling.
    pub fn random_unit_energy<R: Rng + ?Sized>(&self, rng: &mut R) -> StateH<T> {
        let x = StateH::random(self.sizes(), rng);
        let e = self.energy(&x);
        x.scaled(T::one() / e.sqrt())
    }

    /// Heat field on every mesh node (zero outside the fluid and on `Γ_f`).
    pub fn u_nodal(&self, x: &StateH<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.mesh.num_nodes()];
        let v = x.velocity();
        for node in self.mesh.region_nodes(Region::Fluid) {
            if let Some(k) = self.dofs.fluid_velocity_index(node) {
                out[node] = v[k];
            }
        }
        out
    }

    /// Values of `h0` along interface edge `j`, in edge node order.
    pub fn h0_on_edge(&self, x: &StateH<T>, j: usize) -> Vec<T> {
        self.mesh.interface().edges()[j]
            .nodes
            .iter()
            .map(|&v| x.h0()[self.dofs.gamma_index(v).expect("interface node")])
            .collect()
    }

    /// Values of `h1` along interface edge `j`, in edge node order.
    pub fn h1_on_edge(&self, x: &StateH<T>, j: usize) -> Vec<T> {
        self.mesh.interface().edges()[j]
            .nodes
            .iter()
            .map(|&v| x.gamma()[self.dofs.gamma_index(v).expect("interface node")])
            .collect()
    }
}

/// Fluid unknowns `[u_interior, gamma]` padded with zeros for the
/// `w1_interior` tail, i.e. the velocity vector with the solid part removed.
fn fluid_part<T: Real>(x: &StateH<T>) -> Vec<T> {
    let mut v = x.velocity();
    let cut = x.sizes().u_interior + x.sizes().gamma;
    v[cut..].iter_mut().for_each(|e| *e = T::zero());
    v
}

/// Gram matrix of the energy inner product on the consolidated layout.
pub fn gram_matrix<T: Real>(mesh: &FsiMesh<T>) -> CsrMatrix<T> {
    EnergySpace::new(mesh.clone()).gram
}

pub fn inner_h<T: Real>(a: &StateH<T>, b: &StateH<T>, gram: &CsrMatrix<T>) -> Result<T> {
    a.check_layout(b)?;
    if gram.nrows() != a.values().len() {
        return Err(Error::Dimension {
            expected: gram.nrows(),
            found: a.values().len(),
        });
    }
    Ok(gram.bilinear(a.values(), b.values()))
}

/// `½ xᵀ M_H x`.
pub fn energy<T: Real>(x: &StateH<T>, gram: &CsrMatrix<T>) -> T {
    T::lit(0.5) * gram.bilinear(x.values(), x.values()).max(T::zero())
}

/// State snapshot text: a `<block> <len>` header per block, then one
/// coefficient per line.
pub fn write_snapshot<T: Real>(x: &StateH<T>) -> String {
    let mut out = String::new();
    let blocks = [x.u_interior(), x.gamma(), x.w0(), x.w1_interior()];
    for (name, block) in BlockSizes::names().into_iter().zip(blocks) {
        let _ = writeln!(out, "{name} {}", block.len());
        for &v in block {
            let _ = writeln!(out, "{}", fmt17(v));
        }
    }
    out
}

pub fn read_snapshot<T: Real>(text: &str) -> Result<StateH<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut lens = [0usize; 4];
    let mut values = Vec::new();
    for (slot, name) in BlockSizes::names().into_iter().enumerate() {
        let (line, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing block header `{name}`"),
        })?;
        let mut toks = header.split_whitespace();
        if toks.next() != Some(name) {
            return Err(Error::Parse {
                line,
                message: format!("expected block header `{name} <len>`"),
            });
        }
        let len: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line,
                message: "block length is not an integer".into(),
            })?;
        lens[slot] = len;
        for _ in 0..len {
            let (line, tok) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("block `{name}` ends early"),
            })?;
            values.push(parse_real::<T>(tok).ok_or_else(|| Error::Parse {
                line,
                message: format!("bad coefficient `{tok}`"),
            })?);
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            message: "trailing data after the last block".into(),
        });
    }
    let sizes = BlockSizes {
        u_interior: lens[0],
        gamma: lens[1],
        w0_all: lens[2],
        w1_interior: lens[3],
    };
    if sizes.w0_all != sizes.gamma + sizes.w1_interior {
        return Err(Error::Parse {
            line: 0,
            message: "w0_all length must equal gamma + w1_interior".into(),
        });
    }
    debug_assert_eq!(sizes.as_array(), lens);
    StateH::from_vec(sizes, values)
}
