//! Diagonal Pade approximants to `sF(lambda) = int dnu(t) / (t - lambda)`
//! for `dnu = prod (t - x_i) dmu`.
//!
//! The denominator is the characteristic polynomial of the transformed
//! truncation, so its zeros are eigenvalues of a `G`-symmetric tridiagonal
//! matrix. The numerator follows from the moments of `nu`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::darboux::{self, GSymmetricTridiagonal};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::jacobi;
use crate::measures::{self, SignedMeasureSpec};
use crate::spectral::{self, interval_distance};

/// Relative pivot size below which the Hankel solve is declared singular.
/// The moments carry only double precision, so this sits just above their
/// rounding level rather than at double-double resolution.
pub const HANKEL_SINGULAR_RTOL: f64 = 1e-14;

/// Gauss nodes used by the quadrature route of [`markov_value`].
pub const MARKOV_QUAD_NODES: usize = 400;

/// Probes closer than this to a pole are flagged in error tables.
pub const NEAR_POLE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct PadeApproximant {
    pub n: usize,
    /// Ascending coefficients of the monic denominator, length `n + 1`.
    pub denom: Vec<f64>,
    /// Ascending coefficients of the numerator, length `n`.
    pub numer: Vec<f64>,
    /// Zeros of `denom`, eigenvalues of the transformed truncation.
    pub poles: Vec<Complex64>,
    /// Interval used to separate support poles from spurious ones.
    pub support: (f64, f64),
}

impl PadeApproximant {
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        horner(&self.numer, lambda) / horner(&self.denom, lambda)
    }

    /// First `count` Laurent coefficients `c_k` of `numer / denom` at
    /// infinity, `Q/P = sum c_k lambda^{-k-1}`, by long division in
    /// double-double.
    pub fn laurent(&self, count: usize) -> Vec<f64> {
        let n = self.n;
        let p: Vec<Dd> = (0..=n).map(|j| Dd::from(self.denom[n - j])).collect();
        let q: Vec<Dd> = (0..n).map(|j| Dd::from(self.numer[n - 1 - j])).collect();
        let mut c: Vec<Dd> = Vec::with_capacity(count);
        for k in 0..count {
            let mut v = q.get(k).copied().unwrap_or(Dd::ZERO);
            for j in 1..=k.min(n) {
                v -= p[j] * c[k - j];
            }
            c.push(v);
        }
        c.into_iter().map(Dd::to_f64).collect()
    }
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Ascending coefficients of `det(tI - T)` by the three-term recurrence
/// `p_{k+1} = (t - diag_k) p_k - sub_{k-1} sup_{k-1} p_{k-1}`.
pub fn char_poly(t: &GSymmetricTridiagonal) -> Vec<f64> {
    let (diag, sup, sub) = (t.diag(), t.sup(), t.sub());
    let mut prev: Vec<f64> = Vec::new();
    let mut cur = vec![1.0];
    for k in 0..diag.len() {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= diag[k] * c;
        }
        if k > 0 {
            let w = sub[k - 1] * sup[k - 1];
            for (i, &c) in prev.iter().enumerate() {
                next[i] -= w * c;
            }
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Numerator `Q(lambda) = -int (P(lambda) - P(t)) / (lambda - t) dnu(t)` from
/// the moments `s_k` of `nu`; coefficient `i` is `-sum_{k>i} p_k s_{k-1-i}`.
pub fn numerator(denom: &[f64], s: &[f64]) -> Vec<f64> {
    let n = denom.len() - 1;
    (0..n)
        .map(|i| {
            let acc = (i + 1..=n).fold(Dd::ZERO, |acc, k| acc + Dd::from(denom[k]) * s[k - 1 - i]);
            -acc.to_f64()
        })
        .collect()
}

/// Diagonal and off-diagonal products `w_j = sub_j sup_j` of the exact
/// `n x n` transformed truncation, carried in double-double.
///
/// Every step, the first from `J` and the monic ones after it, has the form
/// `u_0 = diag_0 - x`, `u_{j+1} = diag_{j+1} - x - w_j / u_j`, then
/// `diag'_j = u_j + w_j / u_j + x` and `w'_j = w_j u_{j+1} / u_j`, and drops
/// one row.
fn transformed_entries_extended(s: &SignedMeasureSpec, n: usize) -> Result<(Vec<Dd>, Vec<Dd>)> {
    let size = n + s.shifts().len();
    let (a, b) = s.base.coeffs(size)?;
    let mut diag: Vec<Dd> = b.iter().map(|&v| Dd::from(v)).collect();
    let mut w: Vec<Dd> = a[..size - 1].iter().map(|&v| Dd::from(v).sqr()).collect();
    for (k, &x) in s.shifts().iter().enumerate() {
        let m = diag.len();
        let mut u = Vec::with_capacity(m);
        u.push(diag[0] - x);
        for j in 0..m - 1 {
            if u[j].hi == 0.0 {
                return Err(Error::Breakdown { shift: k, pivot: j });
            }
            let next = diag[j + 1] - x - w[j] / u[j];
            u.push(next);
        }
        let nd: Vec<Dd> = (0..m - 1).map(|j| u[j] + w[j] / u[j] + x).collect();
        let nw: Vec<Dd> = (0..m.saturating_sub(2))
            .map(|j| w[j] * u[j + 1] / u[j])
            .collect();
        diag = nd;
        w = nw;
    }
    Ok((diag, w))
}

/// Ascending monic coefficients of `det(tI - T)` from `diag` and the
/// off-diagonal products, in double-double.
fn char_poly_extended(diag: &[Dd], w: &[Dd]) -> Vec<f64> {
    let mut prev: Vec<Dd> = Vec::new();
    let mut cur = vec![Dd::ONE];
    for k in 0..diag.len() {
        let mut next = vec![Dd::ZERO; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= diag[k] * c;
        }
        if k > 0 {
            for (i, &c) in prev.iter().enumerate() {
                next[i] -= w[k - 1] * c;
            }
        }
        prev = cur;
        cur = next;
    }
    cur.into_iter().map(Dd::to_f64).collect()
}

/// The order-`n` diagonal Pade approximant of `sF`. The denominator comes
/// from the transformed recurrence carried in double-double; the poles are
/// eigenvalues of the double-precision transformed truncation.
pub fn diagonal_pade(s: &SignedMeasureSpec, n: usize) -> Result<PadeApproximant> {
    let t = darboux::chain_transform(s, n)?;
    let (diag, w) = transformed_entries_extended(s, n)?;
    let denom = char_poly_extended(&diag, &w);
    let moments = measures::signed_moments(s, 2 * n + 1)?;
    let numer = numerator(&denom, &moments);
    let poles = spectral::tridiag_eigs(&t)?;
    Ok(PadeApproximant {
        n,
        denom,
        numer,
        poles,
        support: s.base.support_hint(),
    })
}

/// Monic orthogonal polynomial of degree `n` for the moment functional,
/// from `sum_j p_j s_{i+j} = -s_{i+n}`, `i < n`, solved in double-double
/// with partial pivoting. Returns `n + 1` ascending coefficients.
pub fn hankel_oracle(moments: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("order must be positive".into()));
    }
    if moments.len() < 2 * n {
        return Err(Error::InvalidArgument(format!(
            "order {n} needs {} moments, got {}",
            2 * n,
            moments.len()
        )));
    }
    let scale = moments[..2 * n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::SingularHankel { order: n });
    }
    let mut a: Vec<Vec<Dd>> = (0..n)
        .map(|i| {
            let mut row: Vec<Dd> = (0..n).map(|j| Dd::from(moments[i + j])).collect();
            row.push(-Dd::from(moments[i + n]));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].abs().to_f64() <= HANKEL_SINGULAR_RTOL * scale {
            return Err(Error::SingularHankel { order: n });
        }
        a.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut() {
            let f = row[col] / pivot_row[col];
            for (x, &t) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * t;
            }
        }
    }
    let mut p = vec![Dd::ZERO; n];
    for i in (0..n).rev() {
        let mut v = a[i][n];
        for j in i + 1..n {
            v -= a[i][j] * p[j];
        }
        p[i] = v / a[i][i];
    }
    let mut out: Vec<f64> = p.into_iter().map(Dd::to_f64).collect();
    out.push(1.0);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkovMethod {
    /// Chebyshev base only: `F_0(lambda) = -1/sqrt(lambda^2 - 1)`.
    Closed,
    /// Gauss rule of the base measure on `prod (t - x_i) / (t - lambda)`.
    Quadrature,
}

/// `-1 / sqrt(lambda^2 - 1)` on the branch with `sqrt(lambda^2 - 1) ~ lambda`.
fn chebyshev_markov(lambda: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    -one / ((lambda - one).sqrt() * (lambda + one).sqrt())
}

/// `sF(lambda) = int prod (t - x_i) dmu(t) / (t - lambda)`.
///
/// The closed route applies `sF_k = s_0^{(k-1)} + (lambda - x_k) sF_{k-1}`
/// once per shift, starting from the Chebyshev Markov function.
pub fn markov_value(
    s: &SignedMeasureSpec,
    lambda: Complex64,
    method: MarkovMethod,
) -> Result<Complex64> {
    let (lo, hi) = s.base.support_hint();
    let on_support = lambda.im == 0.0 && lambda.re >= lo && lambda.re <= hi;
    if (lambda * lambda - 1.0).norm() < 1e-12 || on_support || !lambda.is_finite() {
        return Err(Error::BranchAmbiguity {
            re: lambda.re,
            im: lambda.im,
        });
    }
    match method {
        MarkovMethod::Closed => {
            if !s.base.is_chebyshev() {
                return Err(Error::UnsupportedMeasure(s.base.name().to_string()));
            }
            let mut f = chebyshev_markov(lambda);
            let mut m = measures::moments(&s.base, s.shifts().len() + 1)?;
            for &x in s.shifts() {
                f = m[0] + (lambda - x) * f;
                m = measures::shift_moments(&m, x);
            }
            Ok(f)
        }
        MarkovMethod::Quadrature => {
            let rule = jacobi::gauss_quadrature(&s.base, MARKOV_QUAD_NODES)?;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let p: f64 = s.shifts().iter().map(|x| t - x).product();
                acc += w * p / (t - lambda);
            }
            Ok(acc)
        }
    }
}

/// Splits poles into those within `tol` of the support and the rest.
pub fn classify_spurious(p: &PadeApproximant, tol: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    p.poles
        .iter()
        .partition(|z| interval_distance(**z, p.support) <= tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub probe: Complex64,
    pub abs_err: f64,
    pub near_pole: bool,
}

/// `|Q_n/P_n - sF|` for every order and probe. Orders without an
/// approximant are left out.
pub fn approximation_error(
    s: &SignedMeasureSpec,
    n_list: &[usize],
    probes: &[Complex64],
) -> Result<Vec<ErrorRow>> {
    let method = if s.base.is_chebyshev() {
        MarkovMethod::Closed
    } else {
        MarkovMethod::Quadrature
    };
    let exact = probes
        .iter()
        .map(|&z| markov_value(s, z, method))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<ErrorRow>> = n_list
        .par_iter()
        .map(|&n| match diagonal_pade(s, n) {
            Ok(p) => probes
                .iter()
                .zip(&exact)
                .map(|(&z, &f)| ErrorRow {
                    n,
                    probe: z,
                    abs_err: (p.eval(z) - f).norm(),
                    near_pole: p.poles.iter().any(|w| (w - z).norm() < NEAR_POLE),
                })
                .collect(),
            Err(_) => Vec::new(),
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Pole table: `n,re,im,class`.
pub fn write_poles_csv<W: Write>(
    w: W,
    approximants: &[PadeApproximant],
    tol: f64,
) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "re", "im", "class"])?;
    for p in approximants {
        for z in &p.poles {
            let class = if interval_distance(*z, p.support) <= tol {
                "support"
            } else {
                "spurious"
            };
            out.write_record([
                p.n.to_string(),
                z.re.to_string(),
                z.im.to_string(),
                class.to_string(),
            ])?;
        }
    }
    out.flush()
}

/// Error table: `n,probe_re,probe_im,abs_err,near_pole_flag`.
pub fn write_errors_csv<W: Write>(w: W, rows: &[ErrorRow]) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "probe_re", "probe_im", "abs_err", "near_pole_flag"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.probe.re.to_string(),
            r.probe.im.to_string(),
            r.abs_err.to_string(),
            u8::from(r.near_pole).to_string(),
        ])?;
    }
    out.flush()
}
