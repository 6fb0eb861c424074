//! Truncated Jacobi matrices, orthonormal polynomial recurrences, the
//! symmetric tridiagonal eigensolver and Gauss quadrature.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::measures::MeasureSpec;

/// Maximum implicit QL sweeps spent on one eigenvalue.
pub const MAX_QL_SWEEPS: usize = 50;

/// Leading `n x n` block of a Jacobi matrix: diagonal `b_0..b_{n-1}` and
/// positive off-diagonal `a_0..a_{n-2}` (stored once).
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiTruncation {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl JacobiTruncation {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(format!(
                "jacobi truncation needs n >= 1 diagonal and n - 1 off-diagonal entries, got {} and {}",
                diag.len(),
                offdiag.len()
            )));
        }
        if let Some(index) = offdiag.iter().position(|&a| a.is_nan() || a <= 0.0) {
            return Err(Error::NotJacobi { index });
        }
        Ok(JacobiTruncation { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Largest absolute entry.
    pub fn scale(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.offdiag)
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Leading principal `n x n` submatrix of the Jacobi matrix of `m`.
pub fn truncate(m: &MeasureSpec, n: usize) -> Result<JacobiTruncation> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "truncation order must be positive".into(),
        ));
    }
    let (mut a, b) = m.coeffs(n)?;
    a.truncate(n - 1);
    JacobiTruncation::new(b, a)
}

/// Values `P_0(x)..P_n(x)` and whether the recurrence overflowed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyValues {
    pub values: Vec<f64>,
    pub overflow: bool,
}

/// Orthonormal polynomials by forward recurrence
/// `a_k P_{k+1} = (x - b_k) P_k - a_{k-1} P_{k-1}`, `P_{-1} = 0`, `P_0 = 1`.
pub fn eval_polys(m: &MeasureSpec, x: f64, n: usize) -> Result<PolyValues> {
    let mut values = Vec::with_capacity(n + 1);
    values.push(1.0);
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut a_prev = 0.0;
    for k in 0..n {
        let (a, b) = m.coeff(k)?;
        let next = ((x - b) * cur - a_prev * prev) / a;
        values.push(next);
        prev = cur;
        cur = next;
        a_prev = a;
    }
    let overflow = values.iter().any(|v| !v.is_finite());
    Ok(PolyValues { values, overflow })
}

/// Same recurrence in double-double arithmetic.
pub fn eval_polys_extended(m: &MeasureSpec, x: f64, n: usize) -> Result<Vec<Dd>> {
    let x = Dd::from(x);
    let mut values = Vec::with_capacity(n + 1);
    values.push(Dd::ONE);
    let (mut prev, mut cur) = (Dd::ZERO, Dd::ONE);
    let mut a_prev = Dd::ZERO;
    for k in 0..n {
        let (a, b) = m.coeff(k)?;
        let next = ((x - b) * cur - a_prev * prev) / a;
        values.push(next);
        prev = cur;
        cur = next;
        a_prev = Dd::from(a);
    }
    Ok(values)
}

/// Values and first derivatives of `P_0..P_n` at `x`, the derivatives from the
/// differentiated recurrence `a_k P'_{k+1} = (x - b_k) P'_k + P_k - a_{k-1} P'_{k-1}`.
pub fn eval_polys_with_derivative(
    m: &MeasureSpec,
    x: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut p = Vec::with_capacity(n + 1);
    let mut dp = Vec::with_capacity(n + 1);
    p.push(1.0);
    dp.push(0.0);
    let mut a_prev = 0.0;
    for k in 0..n {
        let (a, b) = m.coeff(k)?;
        let (p_prev, dp_prev) = if k == 0 {
            (0.0, 0.0)
        } else {
            (p[k - 1], dp[k - 1])
        };
        p.push(((x - b) * p[k] - a_prev * p_prev) / a);
        dp.push(((x - b) * dp[k] + p[k] - a_prev * dp_prev) / a);
        a_prev = a;
    }
    Ok((p, dp))
}

/// Eigenvalues of the truncation in ascending order.
pub fn sym_eigs(j: &JacobiTruncation) -> Result<Vec<f64>> {
    let (vals, _) = symmetric_tridiagonal_eig(j.diag(), j.offdiag(), false)?;
    Ok(vals)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix.
///
/// `off` may have any sign (only `|off|` matters for the spectrum). Returns
/// ascending eigenvalues and, when `first_components` is set, the first
/// component of each normalized eigenvector.
pub fn symmetric_tridiagonal_eig(
    diag: &[f64],
    off: &[f64],
    first_components: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::InvalidArgument(
            "symmetric tridiagonal shape mismatch".into(),
        ));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if sweeps == MAX_QL_SWEEPS {
                return Err(Error::IterationLimit {
                    context: format!("symmetric QL, eigenvalue {l} after {MAX_QL_SWEEPS} sweeps"),
                });
            }
            sweeps += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals = idx.iter().map(|&i| d[i]).collect();
    let comps = if first_components {
        idx.iter().map(|&i| z[i]).collect()
    } else {
        Vec::new()
    };
    Ok((vals, comps))
}

/// An `n`-point Gauss rule for a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Golub-Welsch: nodes are the eigenvalues of the `n x n` truncation, weights
/// the squared first eigenvector components (the measure has unit mass).
pub fn gauss_quadrature(m: &MeasureSpec, n: usize) -> Result<GaussRule> {
    let j = truncate(m, n)?;
    let (nodes, first) = symmetric_tridiagonal_eig(j.diag(), j.offdiag(), true)?;
    let weights = first.iter().map(|z| z * z).collect();
    Ok(GaussRule { nodes, weights })
}
