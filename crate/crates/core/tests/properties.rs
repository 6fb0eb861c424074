use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use gsym::darboux::{self, build_l, factorize, Tridiagonal};
use gsym::diagnostics;
use gsym::measures::{
    self, chebyshev_measure, custom_measure, MeasureSpec, SignedMeasureSpec, Tail,
};
use gsym::spectral::{self, matched_distance};
use gsym::{jacobi, pade, Error};

fn table_measure() -> impl Strategy<Value = MeasureSpec> {
    (
        prop::collection::vec(0.2f64..1.0, 1..6),
        prop::collection::vec(-0.5f64..0.5, 1..6),
        prop::bool::ANY,
    )
        .prop_map(|(a, b, periodic)| {
            let tail = if periodic {
                Tail::Periodic
            } else {
                Tail::Repeat
            };
            custom_measure(&a, &b, tail).unwrap()
        })
}

/// Tables whose spectrum stays inside `[-1, 1]` (Gershgorin).
fn contained_measure() -> impl Strategy<Value = MeasureSpec> {
    (
        prop::collection::vec(0.1f64..0.4, 1..5),
        prop::collection::vec(-0.2f64..0.2, 1..5),
    )
        .prop_map(|(a, b)| custom_measure(&a, &b, Tail::Periodic).unwrap())
}

fn any_measure() -> impl Strategy<Value = MeasureSpec> {
    prop_oneof![Just(chebyshev_measure()), table_measure()]
}

fn factorize_or_skip(
    m: &MeasureSpec,
    x: f64,
    n: usize,
) -> Result<darboux::ShiftedFactorization, TestCaseError> {
    match factorize(m, x, n) {
        Ok(f) => Ok(f),
        Err(e) if e.is_breakdown() => Err(TestCaseError::reject("breakdown")),
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}

/// `(J^k)_{00}` for `k < count` by repeated products with a truncation large
/// enough that the edge never reaches the first row.
fn moments_by_powers(m: &MeasureSpec, count: usize) -> Vec<f64> {
    let size = count + 1;
    let (a, b) = m.coeffs(size).unwrap();
    let mut v = vec![0.0; size];
    v[0] = 1.0;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(v[0]);
        let mut w = vec![0.0; size];
        for i in 0..size {
            w[i] += b[i] * v[i];
            if i + 1 < size {
                w[i] += a[i] * v[i + 1];
                w[i + 1] += a[i] * v[i];
            }
        }
        v = w;
    }
    out
}

#[test]
fn gauss_moments_match_riemann_sums() {
    // midpoint rule in theta for (1/pi) int_0^pi cos^k(theta) d theta
    let points = 1_000_000;
    let h = PI / points as f64;
    let mut riemann = [0.0f64; 20];
    for i in 0..points {
        let c = ((i as f64 + 0.5) * h).cos();
        let mut p = 1.0;
        for r in riemann.iter_mut() {
            *r += p;
            p *= c;
        }
    }
    for r in riemann.iter_mut() {
        *r /= points as f64;
    }
    let rule = jacobi::gauss_quadrature(&chebyshev_measure(), 10).unwrap();
    for (k, want) in riemann.iter().enumerate() {
        let got = rule.integrate(|t| t.powi(k as i32));
        assert!((got - want).abs() <= 1e-12, "k={k}: {got} vs {want}");
    }
    let m = measures::moments(&chebyshev_measure(), 20).unwrap();
    for (k, want) in riemann.iter().enumerate() {
        assert!((m[k] - want).abs() <= 1e-12, "k={k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, max_global_rejects: 4096, ..ProptestConfig::default() })]

    #[test]
    fn factorization_roundtrip(m in any_measure(), x in -2.0f64..2.0, n in 3usize..500) {
        let f = factorize_or_skip(&m, x, n)?;
        let j = darboux::inverse_transform(&build_l(&f), &f.eps, x).unwrap();
        let want = jacobi::truncate(&m, n).unwrap();
        let scale = want
            .diag()
            .iter()
            .chain(want.offdiag())
            .chain(&f.d)
            .fold(x.abs(), |s, v| s.max(v.abs()));
        for k in 0..n - 1 {
            prop_assert!((j.diag()[k] - want.diag()[k]).abs() <= 1e-12 * scale, "diag {k}");
            prop_assert!((j.offdiag()[k] - want.offdiag()[k]).abs() <= 1e-12 * scale, "offdiag {k}");
        }
    }

    #[test]
    fn pivots_are_polynomial_ratios(m in any_measure(), x in -2.0f64..2.0) {
        let n = 201;
        let f = factorize_or_skip(&m, x, n)?;
        let p = jacobi::eval_polys(&m, x, n).unwrap().values;
        // a small pivot cancels in its own step and hands the loss to the next one
        let mut prev_cancel = 1.0;
        for j in 0..n {
            let (a, b) = m.coeff(j).unwrap();
            let carried = if j > 0 { m.coeff(j - 1).unwrap().0.powi(2) / f.d[j - 1].abs() } else { 0.0 };
            let cancel = ((b - x).abs() + carried) / f.d[j].abs();
            let r = -a * p[j + 1] / p[j];
            if r.is_finite() && p[j] != 0.0 {
                let tol = 1e-9 * cancel.max(1.0) * prev_cancel;
                prop_assert!((f.d[j] - r).abs() <= tol * r.abs().max(f64::MIN_POSITIVE), "j={j}");
            }
            prev_cancel = cancel.max(1.0);
        }
        // the checkpoints of the boundedness sweep carry the same pivots
        let rep = diagnostics::bcond_sup(&m, x, n).unwrap();
        for c in &rep.checkpoints {
            prop_assert_eq!(c.d_j, f.d[c.j]);
        }
    }

    #[test]
    fn transform_is_exactly_g_symmetric(m in any_measure(), x in -2.0f64..2.0, n in 2usize..120) {
        let f = factorize_or_skip(&m, x, n)?;
        let t = darboux::darboux_transform(&f);
        for j in 0..n - 1 {
            prop_assert_eq!(t.g().get(j) * t.sup()[j], t.g().get(j + 1) * t.sub()[j]);
            prop_assert!(t.sup()[j] > 0.0);
        }
    }

    #[test]
    fn krein_form_is_a_sum_of_squares(m in any_measure(), x in -2.0f64..2.0, n in 1usize..150, seed: u64) {
        let f = factorize_or_skip(&m, x, n)?;
        let k = diagnostics::nonnegativity_check(&f, 20, seed).unwrap();
        prop_assert!(k.min_form >= -1e-10);
        prop_assert!(k.max_discrepancy <= 1e-11);
    }

    #[test]
    fn transformed_polynomials_satisfy_the_recurrence(x in -2.0f64..2.0, t in -1.0f64..1.0) {
        let m = chebyshev_measure();
        let n = 30;
        let tr = match darboux::darboux_truncation(&m, x, n + 1) {
            Ok(tr) => tr,
            Err(e) if e.is_breakdown() => return Err(TestCaseError::reject("breakdown")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let p = darboux::christoffel_eval(&m, x, t, n).unwrap();
        let scale = tr.matrix().scale().max(1.0) * p.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for j in 1..n {
            let row = tr.sub()[j - 1] * p[j - 1] + tr.diag()[j] * p[j] + tr.sup()[j] * p[j + 1];
            prop_assert!((row - t * p[j]).abs() <= 1e-9 * scale, "row {j}");
        }
    }

    #[test]
    fn ab_and_ba_share_their_spectrum(m in any_measure(), x in -2.0f64..2.0, n in 1usize..200) {
        let f = factorize_or_skip(&m, x, n)?;
        let c = spectral::ab_ba_check(&build_l(&f), &f.eps, x).unwrap();
        let big = c.spec_ab.iter().fold(1.0f64, |s, z| s.max(z.norm()));
        // near a small pivot G L^T L carries entries of size a^2/|d| although its spectrum stays bounded
        let l = build_l(&f);
        let norm = (0..n).fold(0.0f64, |acc, j| {
            let s = if j + 1 < n { l.sub[j] } else { 0.0 };
            let next = if j + 1 < n { (s * l.diag[j + 1]).abs() } else { 0.0 };
            acc.max(l.diag[j] * l.diag[j] + s * s).max(next)
        });
        prop_assert!(c.distance <= 1e-8 * big + 1e-10 * norm, "distance {}", c.distance);
    }

    #[test]
    fn spectrum_moves_with_the_shift(x in -2.0f64..2.0, n in 1usize..60) {
        let s = SignedMeasureSpec::new(chebyshev_measure(), vec![x]).unwrap();
        let sweep = spectral::pole_sweep(&s, &[n]);
        prop_assume!(sweep.skipped.is_empty());
        let t = darboux::darboux_truncation(&chebyshev_measure(), x, n).unwrap();
        let shifted = Tridiagonal::new(
            t.diag().iter().map(|d| d - x).collect(),
            t.sup().to_vec(),
            t.sub().to_vec(),
        )
        .unwrap();
        let mut e: Vec<Complex64> = spectral::tridiag_eigs(&shifted).unwrap().into_iter().map(|z| z + x).collect();
        spectral::sort_complex(&mut e);
        let scale = t.matrix().scale().max(1.0);
        // rounding d - x moves eigenvalues of the non-normal edge block by about eps * scale^2
        prop_assert!(matched_distance(&e, &sweep.reports[0].eigs) <= 1e-12 * scale + 1e-13 * scale * scale);
    }

    #[test]
    fn positive_products_use_the_symmetric_route(
        diag in prop::collection::vec(-1.0f64..1.0, 2..40),
        seed in prop::collection::vec((0.05f64..1.0, 0.05f64..1.0, prop::bool::ANY), 39),
    ) {
        let n = diag.len();
        let (sup, sub): (Vec<f64>, Vec<f64>) = seed[..n - 1]
            .iter()
            .map(|&(p, q, neg)| if neg { (-p, -q) } else { (p, q) })
            .unzip();
        let off: Vec<f64> = sup.iter().zip(&sub).map(|(p, q)| (p * q).sqrt()).collect();
        let t = Tridiagonal::new(diag.clone(), sup, sub).unwrap();
        let e = spectral::tridiag_eigs(&t).unwrap();
        let j = gsym::JacobiTruncation::new(diag, off).unwrap();
        let want = jacobi::sym_eigs(&j).unwrap();
        for (z, w) in e.iter().zip(&want) {
            prop_assert_eq!(z.im, 0.0);
            prop_assert!((z.re - w).abs() <= 1e-11);
        }
    }

    #[test]
    fn poles_are_truncation_eigenvalues(x in -2.0f64..2.0, n in 1usize..=60) {
        let s = SignedMeasureSpec::new(chebyshev_measure(), vec![x]).unwrap();
        let p = match pade::diagonal_pade(&s, n) {
            Ok(p) => p,
            Err(e) if e.is_breakdown() => return Err(TestCaseError::reject("breakdown")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let t = darboux::chain_transform(&s, n).unwrap();
        let e = spectral::tridiag_eigs(&t).unwrap();
        prop_assert!(matched_distance(&p.poles, &e) <= 1e-8);
    }

    #[test]
    fn pade_matches_moments_and_hankel(x in prop_oneof![-2.0f64..-0.05, 0.05f64..2.0], n in 1usize..=10) {
        let s = SignedMeasureSpec::new(chebyshev_measure(), vec![x]).unwrap();
        let p = match pade::diagonal_pade(&s, n) {
            Ok(p) => p,
            Err(e) if e.is_breakdown() => return Err(TestCaseError::reject("breakdown")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let mom = measures::signed_moments(&s, 2 * n + 1).unwrap();
        match pade::hankel_oracle(&mom, n) {
            Ok(h) => {
                for (a, b) in p.denom.iter().zip(&h) {
                    prop_assert!((a - b).abs() <= 1e-6, "n={n}: {a} vs {b}");
                }
            }
            Err(Error::SingularHankel { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
        if n <= 8 {
            // rounding the coefficients to f64 costs about eps * rho^k once a spurious pole sits at rho > 1
            let rho = p.poles.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let c = p.laurent(2 * n);
            for k in 0..2 * n {
                let tol = 1e-8 * mom[k].abs() + 1e-14 * rho.powi(k as i32);
                prop_assert!((c[k] + mom[k]).abs() <= tol, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn gauss_nodes_are_polynomial_zeros(m in contained_measure(), n in 1usize..=50) {
        let rule = jacobi::gauss_quadrature(&m, n).unwrap();
        let grid_max = (0..=2000)
            .map(|i| -1.0 + i as f64 / 1000.0)
            .map(|t| jacobi::eval_polys(&m, t, n).unwrap().values[n].abs())
            .fold(0.0, f64::max);
        for &t in &rule.nodes {
            let v = jacobi::eval_polys(&m, t, n).unwrap().values[n];
            prop_assert!(v.abs() <= 1e-9 * grid_max);
        }
    }

    #[test]
    fn gauss_rule_is_exact(m in table_measure(), n in 1usize..=12, coeffs in prop::collection::vec(-1.0f64..1.0, 24)) {
        let deg = 2 * n - 1;
        let q = &coeffs[..=deg];
        let mom = moments_by_powers(&m, deg + 1);
        let want: f64 = q.iter().zip(&mom).map(|(c, mk)| c * mk).sum();
        let rule = jacobi::gauss_quadrature(&m, n).unwrap();
        let got = rule.integrate(|t| q.iter().rev().fold(0.0, |acc, c| acc * t + c));
        let scale = q.iter().zip(&mom).map(|(c, mk)| (c * mk).abs()).sum::<f64>().max(1.0);
        prop_assert!((got - want).abs() <= 1e-11 * scale);
    }

    #[test]
    fn chebyshev_polynomials_are_cosines(x in -1.0f64..=1.0) {
        let p = jacobi::eval_polys(&chebyshev_measure(), x, 200).unwrap().values;
        let theta = x.acos();
        prop_assert_eq!(p[0], 1.0);
        for (k, &pk) in p.iter().enumerate().take(201).skip(1) {
            let want = 2f64.sqrt() * (k as f64 * theta).cos();
            prop_assert!((pk - want).abs() <= 1e-10, "k={k}");
        }
    }

    #[test]
    fn signed_moments_are_single_steps(x in -2.0f64..2.0, count in 1usize..30) {
        let s = SignedMeasureSpec::new(chebyshev_measure(), vec![x]).unwrap();
        let got = measures::signed_moments(&s, count).unwrap();
        let m = measures::moments(&chebyshev_measure(), count + 1).unwrap();
        for k in 0..count {
            prop_assert_eq!(got[k], m[k + 1] - x * m[k]);
        }
    }

    #[test]
    fn verdict_is_reproducible(x in -2.0f64..2.0, n in 100usize..400) {
        let m = chebyshev_measure();
        let a = diagnostics::verdict(&m, x, n, 1e3);
        let b = diagnostics::verdict(&m, x, n, 1e3);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.to_json(), b.to_json()),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }
}
