mod common;

use common::{dense, pencil, sigma_min_svd, spectral_norm, trace_minv_k};
use hww_core::assembly::decoupled_thick_pencil;
use hww_core::spectral::{log_grid, modulus, parse_betas, pencil_eigenvalues};
use hww_core::{adjoint_spectrum_check, assemble_adjoint, compute_spectrum, resolvent_scan, Error};
use nalgebra::Cholesky;

#[test]
fn refinement_one_is_stable() {
    let p = pencil(1);
    let s = compute_spectrum(&p).unwrap();
    assert_eq!(s.eigenvalues.len(), p.dim());
    assert!(s.spectral_abscissa < 0.0, "{}", s.spectral_abscissa);
    assert!(s.min_modulus > 0.0);
    assert!(s.is_stable());
    assert!(s.conjugate_mismatch <= 1e-9);
}

#[test]
fn eigenvalue_sum_is_the_trace() {
    for r in 0..=1 {
        let p = pencil(r);
        let s = compute_spectrum(&p).unwrap();
        let sum_re: f64 = s.eigenvalues.iter().map(|z| z.re).sum();
        let sum_im: f64 = s.eigenvalues.iter().map(|z| z.im).sum();
        let tr = trace_minv_k(p.m(), p.k());
        assert!((sum_re - tr).abs() <= 1e-6 * tr.abs(), "{sum_re} vs {tr}");
        assert!(sum_im.abs() <= 1e-6 * tr.abs());
    }
}

#[test]
fn spectrum_is_closed_under_conjugation() {
    let p = pencil(1);
    let s = compute_spectrum(&p).unwrap();
    for z in &s.eigenvalues {
        let hit = s
            .eigenvalues
            .iter()
            .any(|w| modulus(*w - z.conj()) <= 1e-9 * modulus(*z).max(1.0));
        assert!(hit, "{z} has no conjugate partner");
    }
}

#[test]
fn scan_at_zero_matches_svd() {
    let p = pencil(1);
    let s = resolvent_scan(&p, &[0.0]).unwrap()[0].sigma_min;
    let oracle = sigma_min_svd(p.m(), p.k(), 0.0);
    assert!(s > 0.0);
    assert!((s - oracle).abs() <= 1e-8 * oracle, "{s} vs {oracle}");
}

#[test]
fn scan_matches_svd_across_frequencies() {
    let p = pencil(1);
    let betas = [0.05, 0.7, 3.0, 9.5, 41.0, 300.0];
    for s in resolvent_scan(&p, &betas).unwrap() {
        let oracle = sigma_min_svd(p.m(), p.k(), s.beta);
        assert!(
            (s.sigma_min - oracle).abs() <= 1e-8 * oracle,
            "β = {}: {} vs {oracle}",
            s.beta,
            s.sigma_min
        );
    }
}

#[test]
fn scan_is_lipschitz_in_beta() {
    let p = pencil(1);
    let betas = log_grid(1e-1, 1e2, 20);
    let scan = resolvent_scan(&p, &betas).unwrap();
    let norm_m = spectral_norm(p.m());
    for w in scan.windows(2) {
        let bound = norm_m * (w[1].beta - w[0].beta);
        assert!((w[1].sigma_min - w[0].sigma_min).abs() <= bound * (1.0 + 1e-8));
        assert!(w[0].sigma_min > 0.0);
    }
}

#[test]
fn scan_minimum_across_refinements() {
    let mut betas = vec![0.0];
    betas.extend(log_grid(1e-2, 1e2, 4));
    let mins: Vec<f64> = (0..=2)
        .map(|r| {
            resolvent_scan(&pencil(r), &betas)
                .unwrap()
                .iter()
                .map(|s| s.sigma_min)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    println!("min_β s(β) per refinement: {mins:?}");
    assert!(mins.iter().all(|&m| m > 0.0));
}

#[test]
fn adjoint_spectrum_is_conjugate() {
    let p = pencil(0);
    let a = assemble_adjoint(&p).unwrap();
    let r = adjoint_spectrum_check(&p, &a).unwrap();
    assert!(r.max_mismatch < 1e-7);
    assert!((r.abscissa - r.adjoint_abscissa).abs() <= 1e-9);
    assert!(r.adjoint_min_modulus > 0.0);
}

#[test]
fn decoupled_thick_wave_spectrum_is_imaginary() {
    let p = pencil(1);
    let d = decoupled_thick_pencil(p.space());
    let n = d.nodes.len();
    let ev = pencil_eigenvalues(&d.m, &d.k).unwrap();
    assert_eq!(ev.len(), 2 * n);
    // oracle: μ from S v = μ M_s v, read off the lower-right and upper-left blocks
    let (md, kd) = (dense(&d.m), dense(&d.k));
    let ms = md.view((0, 0), (n, n)).into_owned();
    let s = kd.view((n, 0), (n, n)).into_owned();
    let l = Cholesky::new(ms).unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let mut mu: Vec<f64> = (&li * s * li.transpose())
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    mu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut freq: Vec<f64> = ev.iter().filter(|z| z.im > 0.0).map(|z| z.im).collect();
    freq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(freq.len(), n);
    let top = mu[n - 1].sqrt();
    for (f, m) in freq.iter().zip(&mu) {
        assert!((f - m.sqrt()).abs() <= 1e-9 * top, "{f} vs {}", m.sqrt());
    }
    assert!(ev.iter().all(|z| z.re.abs() <= 1e-9 * top));
}

#[test]
fn guards() {
    let big = pencil(4);
    assert!(big.dim() > 4000);
    assert!(matches!(compute_spectrum(&big), Err(Error::Bounds { .. })));
    assert!(matches!(
        resolvent_scan(&big, &[0.0]),
        Err(Error::Bounds { .. })
    ));
    let p = pencil(0);
    for b in [2e4, f64::NAN, f64::INFINITY] {
        assert!(
            matches!(resolvent_scan(&p, &[b]), Err(Error::Domain { .. })),
            "{b}"
        );
    }
    assert!(parse_betas("log:1:0.5:3").is_err());
    assert!(parse_betas("").is_err());
    assert_eq!(parse_betas("0, 2.5").unwrap(), vec![0.0, 2.5]);
}
