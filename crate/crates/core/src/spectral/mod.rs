//! Spectra of general tridiagonal truncations, the finite `AB`/`BA`
//! identity and pole sweeps over truncation orders.

pub mod hessenberg;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::darboux::{self, BidiagonalL, GSymmetricTridiagonal, Signature, Tridiagonal};
use crate::error::{Error, Result};
use crate::jacobi::{self, JacobiTruncation};
use crate::measures::SignedMeasureSpec;

use hessenberg::Dense;

/// Distance from the support interval above which an eigenvalue counts as outside.
pub const TOL_SUPPORT: f64 = 1e-6;

/// Read access to the three diagonals of a tridiagonal matrix.
pub trait TridiagonalView {
    fn diag(&self) -> &[f64];
    fn sup(&self) -> &[f64];
    fn sub(&self) -> &[f64];
}

impl TridiagonalView for JacobiTruncation {
    fn diag(&self) -> &[f64] {
        JacobiTruncation::diag(self)
    }
    fn sup(&self) -> &[f64] {
        self.offdiag()
    }
    fn sub(&self) -> &[f64] {
        self.offdiag()
    }
}

impl TridiagonalView for Tridiagonal {
    fn diag(&self) -> &[f64] {
        &self.diag
    }
    fn sup(&self) -> &[f64] {
        &self.sup
    }
    fn sub(&self) -> &[f64] {
        &self.sub
    }
}

impl TridiagonalView for GSymmetricTridiagonal {
    fn diag(&self) -> &[f64] {
        GSymmetricTridiagonal::diag(self)
    }
    fn sup(&self) -> &[f64] {
        GSymmetricTridiagonal::sup(self)
    }
    fn sub(&self) -> &[f64] {
        GSymmetricTridiagonal::sub(self)
    }
}

/// Lexicographic order on `(re, im)`.
pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// All eigenvalues, sorted by `(re, im)`.
///
/// When every `sub_j sup_j > 0` the matrix is diagonally similar to the
/// symmetric tridiagonal with off-diagonal `sqrt(sub_j sup_j)`, and the
/// spectrum comes out exactly real. Otherwise the matrix goes through
/// balancing and the double-shift Hessenberg QR.
pub fn tridiag_eigs<T: TridiagonalView + ?Sized>(t: &T) -> Result<Vec<Complex64>> {
    let (diag, sup, sub) = (t.diag(), t.sup(), t.sub());
    if diag.is_empty() {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if sup.iter().zip(sub).all(|(p, q)| p * q > 0.0) {
        let off: Vec<f64> = sup.iter().zip(sub).map(|(p, q)| (p * q).sqrt()).collect();
        let (vals, _) = jacobi::symmetric_tridiagonal_eig(diag, &off, false)?;
        return Ok(vals.into_iter().map(|v| Complex64::new(v, 0.0)).collect());
    }
    general_tridiag_eigs(diag, sup, sub)
}

/// Hessenberg QR regardless of the sign pattern.
pub fn general_tridiag_eigs(diag: &[f64], sup: &[f64], sub: &[f64]) -> Result<Vec<Complex64>> {
    let n = diag.len();
    let mut rows = vec![vec![0.0; n]; n];
    for j in 0..n {
        rows[j][j] = diag[j];
        if j + 1 < n {
            rows[j][j + 1] = sup[j];
            rows[j + 1][j] = sub[j];
        }
    }
    let mut m = Dense::from_rows(&rows);
    hessenberg::balance(&mut m);
    let mut e = hessenberg::hessenberg_eigenvalues(&mut m)?;
    sort_complex(&mut e);
    Ok(e)
}

/// Distance from `z` to the real interval `[lo, hi]`.
pub fn interval_distance(z: Complex64, (lo, hi): (f64, f64)) -> f64 {
    let re = z.re.clamp(lo, hi);
    (z.re - re).hypot(z.im)
}

/// Eigenvalue summary of one truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub n: usize,
    pub eigs: Vec<Complex64>,
    pub max_abs: f64,
    pub outside_count: usize,
    pub real_count: usize,
}

impl SpectrumReport {
    pub fn new(eigs: Vec<Complex64>, support: (f64, f64)) -> Self {
        let max_abs = eigs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let outside_count = eigs
            .iter()
            .filter(|z| interval_distance(**z, support) > TOL_SUPPORT)
            .count();
        let real_count = eigs.iter().filter(|z| z.im.abs() <= TOL_SUPPORT).count();
        SpectrumReport {
            n: eigs.len(),
            eigs,
            max_abs,
            outside_count,
            real_count,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumReportWire {
    n: usize,
    eigs: Vec<[f64; 2]>,
    max_abs: f64,
    outside: usize,
}

impl Serialize for SpectrumReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpectrumReportWire {
            n: self.n,
            eigs: self.eigs.iter().map(|z| [z.re, z.im]).collect(),
            max_abs: self.max_abs,
            outside: self.outside_count,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectrumReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = SpectrumReportWire::deserialize(d)?;
        let eigs: Vec<Complex64> = w.eigs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        let real_count = eigs.iter().filter(|z| z.im.abs() <= TOL_SUPPORT).count();
        Ok(SpectrumReport {
            n: w.n,
            eigs,
            max_abs: w.max_abs,
            outside_count: w.outside,
            real_count,
        })
    }
}

/// Largest distance between paired entries of two spectra: both are sorted,
/// then each entry of `a` takes the nearest unused entry of `b`.
pub fn matched_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort_complex(&mut a);
    sort_complex(&mut b);
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for z in &a {
        let (best, dist) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[best] = true;
        worst = worst.max(dist);
    }
    worst
}

/// Spectra of `L G L^T` and `G L^T L` for square `n x n` factors.
#[derive(Debug, Clone, PartialEq)]
pub struct AbBaCheck {
    pub x: f64,
    pub spec_ab: Vec<Complex64>,
    pub spec_ba: Vec<Complex64>,
    pub distance: f64,
}

/// Finite `sigma(AB) = sigma(BA)` with `A = L`, `B = G L^T`. `L G L^T` is
/// symmetric tridiagonal and goes through the symmetric solver; `G L^T L` goes
/// through [`tridiag_eigs`]. The spectra are of `J - xI` and `J~ - xI`.
pub fn ab_ba_check(l: &BidiagonalL, g: &Signature, x: f64) -> Result<AbBaCheck> {
    let n = l.n();
    if g.len() != n {
        return Err(Error::InvalidArgument(
            "signature length must equal the order".into(),
        ));
    }
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n {
        let mut v = g.get(j) * l.diag[j] * l.diag[j];
        if j > 0 {
            v += g.get(j - 1) * l.sub[j - 1] * l.sub[j - 1];
        }
        diag.push(v);
        if j + 1 < n {
            off.push(g.get(j) * l.diag[j] * l.sub[j]);
        }
    }
    let (ab, _) = jacobi::symmetric_tridiagonal_eig(&diag, &off, false)?;
    let spec_ab: Vec<Complex64> = ab.into_iter().map(|v| Complex64::new(v, 0.0)).collect();

    let ba = darboux::gltl_plus_x(l, g, 0.0, None);
    let spec_ba = tridiag_eigs(&ba)?;
    let distance = matched_distance(&spec_ab, &spec_ba);
    Ok(AbBaCheck {
        x,
        spec_ab,
        spec_ba,
        distance,
    })
}

/// An order skipped by a sweep, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedOrder {
    pub n: usize,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleSweep {
    pub reports: Vec<SpectrumReport>,
    pub skipped: Vec<SkippedOrder>,
}

impl PoleSweep {
    /// Largest eigenvalue modulus over all successful orders.
    pub fn max_abs(&self) -> f64 {
        self.reports.iter().fold(0.0, |m, r| m.max(r.max_abs))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "reports": self.reports,
            "skipped": self.skipped.iter().map(|s| serde_json::json!({
                "n": s.n,
                "error": s.error.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Eigenvalues of the `n x n` transformed truncation for each requested
/// order; these are the poles of the order-`n` diagonal Pade approximant.
/// Orders whose transform breaks down are reported in `skipped`.
pub fn pole_sweep(s: &SignedMeasureSpec, n_list: &[usize]) -> PoleSweep {
    let support = s.base.support_hint();
    let outcomes: Vec<(usize, Result<SpectrumReport>)> = n_list
        .par_iter()
        .map(|&n| {
            let r = darboux::chain_transform(s, n)
                .and_then(|t| tridiag_eigs(&t))
                .map(|e| SpectrumReport::new(e, support));
            (n, r)
        })
        .collect();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for (n, r) in outcomes {
        match r {
            Ok(rep) => reports.push(rep),
            Err(error) => skipped.push(SkippedOrder { n, error }),
        }
    }
    PoleSweep { reports, skipped }
}
