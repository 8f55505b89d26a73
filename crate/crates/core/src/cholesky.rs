//! Envelope Cholesky factorization for sparse symmetric positive definite
//! matrices, after reverse Cuthill–McKee reordering.
//!
//! Row `i` of the permuted lower factor is stored densely from its first
//! structural nonzero to the diagonal. Fill stays inside that envelope, so
//! the profile computed from the pattern is exact.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::{norm2, CsrMatrix};

/// Number of refinement sweeps attempted by [`SparseCholesky::solve_refined`].
const MAX_REFINEMENT_SWEEPS: usize = 4;

#[derive(Debug, Clone)]
pub struct SparseCholesky<T> {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `iperm[old] = new`
    iperm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<T>,
    matrix: CsrMatrix<T>,
}

/// Reverse Cuthill–McKee ordering of the symmetric pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).0.iter().copied().filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        // lowest-degree unvisited node seeds the next component
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node exists");
        let seed = pseudo_peripheral(seed, &adj, &degree, &visited);
        let mut queue = VecDeque::from([seed]);
        visited[seed] = true;
        while let Some(node) = queue.pop_front() {
            order.push(node);
            let mut next: Vec<usize> = adj[node].iter().copied().filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize], blocked: &[bool]) -> usize {
    let mut current = seed;
    let mut eccentricity = 0;
    for _ in 0..8 {
        let levels = bfs_levels(current, adj, blocked);
        let depth = levels.iter().filter_map(|l| *l).max().unwrap_or(0);
        if depth <= eccentricity && current != seed {
            break;
        }
        eccentricity = depth;
        let candidate = (0..adj.len())
            .filter(|&i| levels[i] == Some(depth))
            .min_by_key(|&i| (degree[i], i))
            .unwrap_or(current);
        if candidate == current {
            break;
        }
        current = candidate;
    }
    current
}

fn bfs_levels(root: usize, adj: &[Vec<usize>], blocked: &[bool]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let l = level[v].expect("queued nodes have a level");
        for &w in &adj[v] {
            if level[w].is_none() && !blocked[w] {
                level[w] = Some(l + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

impl<T: Real> SparseCholesky<T> {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// of `a` is read (after permutation); `what` names the matrix in errors.
    pub fn factor(a: &CsrMatrix<T>, what: &'static str) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                found: a.ncols(),
            });
        }
        let perm = reverse_cuthill_mckee(a);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (r, c, _) in a.iter() {
            let (i, j) = (iperm[r], iperm[c]);
            let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
            first[hi] = first[hi].min(lo);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut offset = 0;
        for (i, &f) in first.iter().enumerate() {
            start.push(offset);
            offset += i - f + 1;
        }
        start.push(offset);

        let mut data = vec![T::zero(); offset];
        for (r, c, v) in a.iter() {
            let (i, j) = (iperm[r], iperm[c]);
            if j <= i {
                data[start[i] + j - first[i]] = v;
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[start[i] + j - fi];
                for k in k0..j {
                    s -= data[start[i] + k - fi] * data[start[j] + k - fj];
                }
                data[start[i] + j - fi] = s / data[start[j] + j - fj];
            }
            let mut d = data[start[i] + i - fi];
            for k in fi..i {
                let l = data[start[i] + k - fi];
                d -= l * l;
            }
            if !(d > T::zero()) {
                return Err(Error::Factorization {
                    what,
                    pivot: perm[i],
                });
            }
            data[start[i] + i - fi] = d.sqrt();
        }

        Ok(Self {
            n,
            perm,
            iperm,
            first,
            start,
            data,
            matrix: a.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor (envelope size).
    pub fn envelope(&self) -> usize {
        self.data.len()
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    /// One forward/backward substitution without refinement.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for k in fi..i {
                y[k] -= row[k - fi] * xi;
            }
        }
        (0..self.n).map(|old| y[self.iperm[old]]).collect()
    }

    /// Solve with iterative refinement until the relative residual
    /// `‖b − A x‖ / ‖b‖` is at most `rel_tol`.
    pub fn solve_refined(&self, b: &[T], rel_tol: T, what: &'static str) -> Result<Vec<T>> {
        let bnorm = norm2(b);
        if bnorm == T::zero() {
            return Ok(vec![T::zero(); self.n]);
        }
        let mut x = self.solve(b);
        let mut rel = T::zero();
        for _ in 0..MAX_REFINEMENT_SWEEPS {
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
            rel = norm2(&r) / bnorm;
            if rel <= rel_tol {
                return Ok(x);
            }
            let dx = self.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, &d)| *xi += d);
        }
        let ax = self.matrix.mul_vec(&x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        rel = rel.min(norm2(&r) / bnorm);
        if rel <= rel_tol {
            Ok(x)
        } else {
            Err(Error::Numeric {
                what,
                residual: rel.as_f64(),
            })
        }
    }
}
