//! Dense spectral analysis of the pencil `(K, M)`: all generalized
//! eigenvalues, the adjoint spectrum, and smallest singular values of
//! `iβM − K` along the imaginary axis.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, Schur};
use num_complex::Complex;
use rayon::prelude::*;

use crate::assembly::{AdjointPencil, OperatorPencil};
use crate::error::{Error, Result};
use crate::scalar::{fmt17, Real};
use crate::sparse::CsrMatrix;

/// Largest pencil handled by the dense solvers.
pub const MAX_DENSE_DIM: usize = 4000;
pub const MAX_BETA: f64 = 1e4;
/// Relative tolerance of conjugate pairing.
pub const PAIRING_TOL: f64 = 1e-9;
/// Adjoint eigenvalues must match conjugated primal ones to this tolerance,
/// relative to `max(1, |λ|)`.
pub const ADJOINT_MATCH_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample<T> {
    pub beta: T,
    pub sigma_min: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport<T> {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<T>>,
    pub spectral_abscissa: T,
    pub min_modulus: T,
    /// `min |Re λ|`.
    pub axis_distance: T,
    /// Largest relative defect found while pairing conjugates.
    pub conjugate_mismatch: T,
    pub refinement_level: Option<usize>,
    pub resolvent_scan: Vec<ScanSample<T>>,
}

impl<T: Real> SpectrumReport<T> {
    pub fn is_stable(&self) -> bool {
        self.spectral_abscissa < T::zero() && self.min_modulus > T::zero()
    }

    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("re,im\n");
        for z in &self.eigenvalues {
            let _ = writeln!(out, "{},{}", fmt17(z.re), fmt17(z.im));
        }
        out
    }

    pub fn scan_csv(&self) -> String {
        scan_csv(&self.resolvent_scan)
    }
}

pub fn scan_csv<T: Real>(samples: &[ScanSample<T>]) -> String {
    let mut out = String::from("beta,sigma_min\n");
    for s in samples {
        let _ = writeln!(out, "{},{}", fmt17(s.beta), fmt17(s.sigma_min));
    }
    out
}

fn check_dim(n: usize) -> Result<()> {
    if n > MAX_DENSE_DIM {
        return Err(Error::Bounds {
            what: "pencil dimension",
            value: n.to_string(),
            range: "<= 4000",
        });
    }
    Ok(())
}

/// `L⁻¹ K L⁻ᵀ` with `M = L Lᵀ`.
fn reduce<T: Real>(m: &CsrMatrix<T>, k: &CsrMatrix<T>) -> Result<DMatrix<T>> {
    check_dim(m.nrows())?;
    let l = Cholesky::new(m.to_dense())
        .ok_or(Error::Factorization {
            what: "dense Gram matrix",
            pivot: 0,
        })?
        .unpack();
    let x = l
        .solve_lower_triangular(&k.to_dense())
        .expect("Cholesky factor has a positive diagonal");
    // L⁻¹ (L⁻¹ K)ᵀ = (L⁻¹ K L⁻ᵀ)ᵀ
    let y = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor has a positive diagonal");
    Ok(y.transpose())
}

fn eigenvalues_of<T: Real>(g: DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let n = g.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(g, T::eps(), 200 * n).ok_or(Error::Numeric {
        what: "Schur iteration",
        residual: f64::INFINITY,
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn modulus<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

fn sort_spectrum<T: Real>(ev: &mut [Complex<T>]) {
    ev.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Pairs every eigenvalue with its conjugate and symmetrizes the pair; real
/// eigenvalues lose their round-off imaginary part. Returns the largest
/// relative pairing defect.
fn enforce_conjugate_symmetry<T: Real>(ev: &mut [Complex<T>]) -> Result<T> {
    let n = ev.len();
    let scale = |z: Complex<T>| modulus(z).max(T::one());
    let tol = T::lit(PAIRING_TOL);
    let mut used = vec![false; n];
    let mut worst = T::zero();
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = ev[i];
        if z.im.abs() <= tol * scale(z) {
            worst = worst.max(z.im.abs() / scale(z));
            ev[i].im = T::zero();
            continue;
        }
        let target = z.conj();
        let mut best: Option<(usize, T)> = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let d = modulus(ev[j] - target);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let Some((j, d)) = best else {
            return Err(Error::Consistency {
                what: "conjugate pairing of the spectrum",
                mismatch: f64::INFINITY,
                tolerance: PAIRING_TOL,
            });
        };
        let rel = d / scale(z);
        if rel > tol {
            return Err(Error::Consistency {
                what: "conjugate pairing of the spectrum",
                mismatch: rel.as_f64(),
                tolerance: PAIRING_TOL,
            });
        }
        worst = worst.max(rel);
        used[j] = true;
        let re = (z.re + ev[j].re) * T::lit(0.5);
        let im = (z.im.abs() + ev[j].im.abs()) * T::lit(0.5);
        ev[i] = Complex::new(re, im * z.im.signum());
        ev[j] = Complex::new(re, -im * z.im.signum());
    }
    Ok(worst)
}

/// Generalized eigenvalues of `K x = λ M x` for SPD `M`.
pub fn pencil_eigenvalues<T: Real>(m: &CsrMatrix<T>, k: &CsrMatrix<T>) -> Result<Vec<Complex<T>>> {
    let mut ev = eigenvalues_of(reduce(m, k)?)?;
    sort_spectrum(&mut ev);
    Ok(ev)
}

pub fn spectrum_of<T: Real>(m: &CsrMatrix<T>, k: &CsrMatrix<T>) -> Result<SpectrumReport<T>> {
    let mut ev = eigenvalues_of(reduce(m, k)?)?;
    let conjugate_mismatch = enforce_conjugate_symmetry(&mut ev)?;
    sort_spectrum(&mut ev);
    let extreme = |f: fn(&Complex<T>) -> T, pick_max: bool| {
        ev.iter()
            .map(f)
            .reduce(|a, b| if pick_max { a.max(b) } else { a.min(b) })
    };
    let spectral_abscissa = extreme(|z| z.re, true).unwrap_or(T::zero());
    let min_modulus = extreme(|z| modulus(*z), false).unwrap_or(T::zero());
    let axis_distance = extreme(|z| z.re.abs(), false).unwrap_or(T::zero());
    Ok(SpectrumReport {
        eigenvalues: ev,
        spectral_abscissa,
        min_modulus,
        axis_distance,
        conjugate_mismatch,
        refinement_level: None,
        resolvent_scan: Vec::new(),
    })
}

pub fn compute_spectrum<T: Real>(p: &OperatorPencil<T>) -> Result<SpectrumReport<T>> {
    spectrum_of(p.m(), p.k())
}

/// Largest `|μ − conj λ|` between greedily matched adjoint and primal
/// eigenvalues, relative to `max(1, |λ|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointSpectrumReport<T> {
    pub max_mismatch: T,
    pub abscissa: T,
    pub adjoint_abscissa: T,
    pub adjoint_min_modulus: T,
}

pub fn adjoint_spectrum_check<T: Real>(
    p: &OperatorPencil<T>,
    a: &AdjointPencil<T>,
) -> Result<AdjointSpectrumReport<T>> {
    let primal = pencil_eigenvalues(p.m(), p.k())?;
    let adjoint = pencil_eigenvalues(p.m(), &a.k_adj)?;
    let mut used = vec![false; adjoint.len()];
    let mut worst = T::zero();
    for z in &primal {
        let target = z.conj();
        let (j, d) = adjoint
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, modulus(*w - target)))
            .fold(None, |best: Option<(usize, T)>, (j, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((j, d)),
            })
            .expect("spectra have equal size");
        used[j] = true;
        worst = worst.max(d / modulus(*z).max(T::one()));
    }
    let abscissa = |ev: &[Complex<T>]| ev.iter().map(|z| z.re).reduce(|a, b| a.max(b));
    let report = AdjointSpectrumReport {
        max_mismatch: worst,
        abscissa: abscissa(&primal).unwrap_or(T::zero()),
        adjoint_abscissa: abscissa(&adjoint).unwrap_or(T::zero()),
        adjoint_min_modulus: adjoint
            .iter()
            .map(|z| modulus(*z))
            .reduce(|a, b| a.min(b))
            .unwrap_or(T::zero()),
    };
    if worst > T::lit(ADJOINT_MATCH_TOL) {
        return Err(Error::Consistency {
            what: "adjoint spectrum against the conjugated spectrum",
            mismatch: worst.as_f64(),
            tolerance: ADJOINT_MATCH_TOL,
        });
    }
    Ok(report)
}

/// Lanczos steps per restart in [`smallest_singular_value`].
const LANCZOS_STEPS: usize = 60;
const LANCZOS_RESTARTS: usize = 40;

/// Smallest singular value of a square complex matrix: LU once, then
/// restarted Lanczos on the Hermitian `C⁻¹C⁻ᴴ`, whose top eigenvalue is
/// `σ_min⁻²`. Returns 0 for a singular matrix.
pub fn smallest_singular_value<T: Real>(c: DMatrix<Complex<T>>) -> T {
    let n = c.nrows();
    if n == 0 {
        return T::zero();
    }
    let lu = c.lu();
    if !lu.is_invertible() {
        return T::zero();
    }
    let (perm, l, u) = lu.unpack();
    // C⁻ᴴ z: solve Uᴴ a = z, Lᴴ b = a, then undo the row permutation.
    let apply = |z: &DVector<Complex<T>>| -> Option<DVector<Complex<T>>> {
        let a = u.ad_solve_upper_triangular(z)?;
        let mut y = l.ad_solve_lower_triangular(&a)?;
        perm.inv_permute_rows(&mut y);
        perm.permute_rows(&mut y);
        let a = l.solve_lower_triangular(&y)?;
        let w = u.solve_upper_triangular(&a)?;
        w.iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
            .then_some(w)
    };
    // deterministic start with components in every direction
    let mut start = DVector::from_fn(n, |i, _| {
        let t = T::from_count(i + 1);
        Complex::new(
            T::one() + (t * T::lit(0.618_033_988_75)).sin(),
            (t * T::lit(0.414_213_562_37)).cos(),
        )
    });
    let steps = LANCZOS_STEPS.min(n);
    let tol = T::lit(1e-13);
    let mut top = T::zero();
    for _ in 0..LANCZOS_RESTARTS {
        start /= Complex::from(start.norm());
        let mut basis: Vec<DVector<Complex<T>>> = vec![start.clone()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut ritz = (T::zero(), DVector::zeros(1), T::zero());
        for j in 0..steps {
            let Some(mut w) = apply(&basis[j]) else {
                return T::zero();
            };
            alpha.push(basis[j].dotc(&w).re);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for q in &basis {
                    let h = q.dotc(&w);
                    w.axpy(-h, q, Complex::from(T::one()));
                }
            }
            let b = w.norm();
            let k = alpha.len();
            let t = DMatrix::from_fn(k, k, |r, s| {
                if r == s {
                    alpha[r]
                } else if r.abs_diff(s) == 1 {
                    beta[r.min(s)]
                } else {
                    T::zero()
                }
            });
            let eig = t.symmetric_eigen();
            let (imax, &theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .reduce(|m, e| if *e.1 > *m.1 { e } else { m })
                .expect("tridiagonal is non-empty");
            let s = eig.eigenvectors.column(imax).into_owned();
            let residual = b * s[k - 1].abs();
            ritz = (theta, s, residual);
            if residual <= tol * theta || b <= T::eps() * theta || j + 1 == steps {
                break;
            }
            beta.push(b);
            basis.push(w / Complex::from(b));
        }
        let (theta, s, residual) = ritz;
        top = theta;
        if residual <= tol * theta || basis.len() == n {
            break;
        }
        start = basis
            .iter()
            .zip(s.iter())
            .fold(DVector::zeros(n), |acc, (q, &c)| acc + q * Complex::from(c));
    }
    if !(top > T::zero()) {
        return T::zero();
    }
    T::one() / top.sqrt()
}

/// `σ_min(iβM − K)` for every β, in input order.
pub fn resolvent_scan<T: Real>(p: &OperatorPencil<T>, betas: &[T]) -> Result<Vec<ScanSample<T>>> {
    resolvent_scan_of(p.m(), p.k(), betas)
}

pub fn resolvent_scan_of<T: Real>(
    m: &CsrMatrix<T>,
    k: &CsrMatrix<T>,
    betas: &[T],
) -> Result<Vec<ScanSample<T>>> {
    check_dim(m.nrows())?;
    for &b in betas {
        if !b.is_finite() || b.abs() > T::lit(MAX_BETA) {
            return Err(Error::Domain {
                what: "beta",
                requirement: "finite with |beta| <= 1e4",
                value: b.as_f64(),
            });
        }
    }
    let md = m.to_dense();
    let kd = k.to_dense();
    Ok(betas
        .par_iter()
        .map(|&beta| {
            let c = DMatrix::from_fn(md.nrows(), md.ncols(), |i, j| {
                Complex::new(-kd[(i, j)], beta * md[(i, j)])
            });
            ScanSample {
                beta,
                sigma_min: smallest_singular_value(c),
            }
        })
        .collect())
}

/// `per_decade` log-spaced points over `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n.max(1) as f64))
        .collect()
}

/// β = 0 followed by 400 points per decade over `[1e-2, 1e3]`.
pub fn default_betas() -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend(log_grid(1e-2, 1e3, 400));
    b
}

/// Parses a β-grid spec: `default`, or comma-separated items that are
/// either numbers or `log:<lo>:<hi>:<points per decade>`.
pub fn parse_betas(spec: &str) -> std::result::Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec == "default" {
        return Ok(default_betas());
    }
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(rest) = item.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let bad = || format!("bad log grid `{item}` (expected log:<lo>:<hi>:<per decade>)");
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].parse().map_err(|_| bad())?;
            let per: usize = parts[2].parse().map_err(|_| bad())?;
            if !(lo > 0.0 && hi > lo && per > 0) {
                return Err(bad());
            }
            out.extend(log_grid(lo, hi, per));
        } else {
            out.push(item.parse().map_err(|_| format!("bad beta `{item}`"))?);
        }
    }
    if out.is_empty() {
        return Err("empty beta grid".into());
    }
    Ok(out)
}
