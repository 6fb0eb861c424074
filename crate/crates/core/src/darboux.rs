//! Signed factorization `J - xI = L G L^T` of a Jacobi matrix and the shifted
//! Darboux (Christoffel) transform `J~(x) = G L^T L + xI`.
//!
//! With `J - xI = 𝓛 D 𝓛^T`, `𝓛` unit lower bidiagonal with multipliers `v_j`
//! and `D = diag(d_j)`, the sweep is
//!
//! ```text
//! d_0 = b_0 - x,   v_j = a_j / d_j,   d_{j+1} = b_{j+1} - x - d_j v_j^2
//! ```
//!
//! and `L = 𝓛 |D|^{1/2}`, `G = sign D`. The transform is the matrix of the
//! polynomials orthogonal with respect to `(t - x) dmu(t)`; it is
//! `G`-symmetric (`G J~` is symmetric) but not symmetric.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::jacobi::{self, JacobiTruncation};
use crate::measures::{MeasureSpec, SignedMeasureSpec};
use crate::Precision;

/// A pivot is treated as zero below this multiple of the running matrix scale.
pub const PIVOT_RTOL: f64 = 1e-13;

/// Relative tolerance of the `G`-symmetry check.
pub const G_SYMMETRY_RTOL: f64 = 1e-13;

/// Diagonal signature matrix, entries `+1` / `-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature(Vec<i8>);

impl Signature {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(
                "signature entries must be +1 or -1".into(),
            ));
        }
        Ok(Signature(signs))
    }

    pub fn positive(n: usize) -> Self {
        Signature(vec![1; n])
    }

    /// Signs of the given non-zero reals.
    pub fn of(values: &[f64]) -> Self {
        Signature(
            values
                .iter()
                .map(|&v| if v > 0.0 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        f64::from(self.0[j])
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn is_definite(&self) -> bool {
        self.0.iter().all(|&s| s == self.0[0])
    }

    fn truncated(&self, n: usize) -> Self {
        Signature(self.0[..n].to_vec())
    }
}

/// Pivots `d_j`, multipliers `v_j` and signs `eps_j` of `J - xI = L G L^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedFactorization {
    pub x: f64,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub eps: Signature,
}

impl ShiftedFactorization {
    pub fn n(&self) -> usize {
        self.d.len()
    }
}

/// Running state of the pivot sweep, shared by both precisions.
pub(crate) struct PivotScale(pub(crate) f64);

impl PivotScale {
    pub(crate) fn see(&mut self, v: f64) {
        self.0 = self.0.max(v.abs());
    }

    pub(crate) fn is_zero(&self, pivot: f64) -> bool {
        pivot.is_nan() || pivot.abs() < PIVOT_RTOL * self.0 || pivot == 0.0
    }
}

/// Signed factorization of the `n x n` truncation of `J - xI`.
pub fn factorize(m: &MeasureSpec, x: f64, n: usize) -> Result<ShiftedFactorization> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "factorization order must be positive".into(),
        ));
    }
    let mut d = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n - 1);
    let mut scale = PivotScale(0.0);
    let (mut a, b) = m.coeff(0)?;
    scale.see(a);
    scale.see(b - x);
    let mut dj = b - x;
    for j in 0..n {
        if scale.is_zero(dj) {
            return Err(Error::Breakdown { shift: 0, pivot: j });
        }
        d.push(dj);
        if j + 1 == n {
            break;
        }
        let vj = a / dj;
        v.push(vj);
        let (a_next, b_next) = m.coeff(j + 1)?;
        scale.see(a_next);
        scale.see(b_next - x);
        dj = b_next - x - dj * vj * vj;
        a = a_next;
    }
    let eps = Signature::of(&d);
    Ok(ShiftedFactorization { x, d, v, eps })
}

/// The same sweep carried in double-double arithmetic and rounded at the end.
pub fn factorize_extended(m: &MeasureSpec, x: f64, n: usize) -> Result<ShiftedFactorization> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "factorization order must be positive".into(),
        ));
    }
    let mut d = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n - 1);
    let mut scale = PivotScale(0.0);
    let (mut a, b) = m.coeff(0)?;
    scale.see(a);
    scale.see(b - x);
    let xd = Dd::from(x);
    let mut dj = Dd::from(b) - xd;
    for j in 0..n {
        if scale.is_zero(dj.to_f64()) {
            return Err(Error::Breakdown { shift: 0, pivot: j });
        }
        d.push(dj.to_f64());
        if j + 1 == n {
            break;
        }
        let vj = Dd::from(a) / dj;
        v.push(vj.to_f64());
        let (a_next, b_next) = m.coeff(j + 1)?;
        scale.see(a_next);
        scale.see(b_next - x);
        dj = Dd::from(b_next) - xd - vj * a;
        a = a_next;
    }
    let eps = Signature::of(&d);
    Ok(ShiftedFactorization { x, d, v, eps })
}

pub fn factorize_with(
    m: &MeasureSpec,
    x: f64,
    n: usize,
    precision: Precision,
) -> Result<ShiftedFactorization> {
    match precision {
        Precision::Standard => factorize(m, x, n),
        Precision::Extended => factorize_extended(m, x, n),
    }
}

/// Lower bidiagonal `L = 𝓛 |D|^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagonalL {
    /// `sqrt|d_j|`, strictly positive.
    pub diag: Vec<f64>,
    /// `v_j sqrt|d_j|`, below the diagonal.
    pub sub: Vec<f64>,
}

impl BidiagonalL {
    pub fn new(diag: Vec<f64>, sub: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || sub.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(
                "bidiagonal factor shape mismatch".into(),
            ));
        }
        if diag.iter().any(|&l| l.is_nan() || l <= 0.0) {
            return Err(Error::InvalidArgument(
                "bidiagonal factor needs a positive diagonal".into(),
            ));
        }
        Ok(BidiagonalL { diag, sub })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `L f` for `f` of length `n`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(f).map(|(l, x)| l * x).collect();
        for (j, s) in self.sub.iter().enumerate() {
            out[j + 1] += s * f[j];
        }
        out
    }
}

pub fn build_l(f: &ShiftedFactorization) -> BidiagonalL {
    let diag: Vec<f64> = f.d.iter().map(|d| d.abs().sqrt()).collect();
    let sub = f.v.iter().zip(&diag).map(|(v, l)| v * l).collect();
    BidiagonalL { diag, sub }
}

/// Real tridiagonal matrix with independent super- and sub-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `T[j][j+1]`
    pub sup: Vec<f64>,
    /// `T[j+1][j]`
    pub sub: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, sup: Vec<f64>, sub: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || sup.len() + 1 != diag.len() || sub.len() != sup.len() {
            return Err(Error::InvalidArgument("tridiagonal shape mismatch".into()));
        }
        Ok(Tridiagonal { diag, sup, sub })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn leading(&self, n: usize) -> Tridiagonal {
        let k = n.saturating_sub(1);
        Tridiagonal {
            diag: self.diag[..n].to_vec(),
            sup: self.sup[..k].to_vec(),
            sub: self.sub[..k].to_vec(),
        }
    }

    /// `T v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out: Vec<f64> = self.diag.iter().zip(v).map(|(d, x)| d * x).collect();
        for j in 0..n - 1 {
            out[j] += self.sup[j] * v[j + 1];
            out[j + 1] += self.sub[j] * v[j];
        }
        out
    }

    /// Row-major dense copy.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut a = vec![vec![0.0; n]; n];
        for j in 0..n {
            a[j][j] = self.diag[j];
            if j + 1 < n {
                a[j][j + 1] = self.sup[j];
                a[j + 1][j] = self.sub[j];
            }
        }
        a
    }

    pub fn scale(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.sup)
            .chain(&self.sub)
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// One monic Darboux step: `T - xI = 𝓛 𝓤` (unit lower times upper
    /// bidiagonal, Doolittle) followed by `𝓤 𝓛 + xI`.
    ///
    /// Only the leading `n - 1` rows of the result are kept, which are exact
    /// whenever the leading rows of `self` are. Returns the new matrix and
    /// the first pivot `u_0`.
    pub fn monic_darboux_step(&self, x: f64) -> Result<(Tridiagonal, f64)> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidArgument(
                "monic step needs at least two rows".into(),
            ));
        }
        let mut scale = PivotScale(0.0);
        let mut u = Vec::with_capacity(n - 1);
        let mut l = Vec::with_capacity(n - 1);
        let mut uj = self.diag[0] - x;
        scale.see(uj);
        for j in 0..n - 1 {
            scale.see(self.sub[j]);
            scale.see(self.sup[j]);
            if scale.is_zero(uj) {
                return Err(Error::Breakdown { shift: 0, pivot: j });
            }
            let lj = self.sub[j] / uj;
            u.push(uj);
            l.push(lj);
            let next = self.diag[j + 1] - x;
            scale.see(next);
            uj = next - lj * self.sup[j];
        }
        let k = n - 1;
        let diag = (0..k).map(|j| u[j] + self.sup[j] * l[j] + x).collect();
        let sup = self.sup[..k - 1].to_vec();
        let sub = (0..k - 1).map(|j| u[j + 1] * l[j]).collect();
        Ok((Tridiagonal { diag, sup, sub }, u[0]))
    }
}

/// Tridiagonal `M` with a signature `G` such that `G M` is symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct GSymmetricTridiagonal {
    matrix: Tridiagonal,
    g: Signature,
}

impl GSymmetricTridiagonal {
    /// Checks `sub_j = g_j g_{j+1} sup_j` and `sup_j != 0`.
    pub fn new(matrix: Tridiagonal, g: Signature) -> Result<Self> {
        if g.len() != matrix.n() {
            return Err(Error::InvalidArgument(
                "signature length must equal the order".into(),
            ));
        }
        for j in 0..matrix.sup.len() {
            let sup = matrix.sup[j];
            if sup == 0.0 || !sup.is_finite() {
                return Err(Error::NotSignSymmetric { index: j });
            }
            let mirrored = g.get(j) * g.get(j + 1) * sup;
            if (matrix.sub[j] - mirrored).abs() > G_SYMMETRY_RTOL * sup.abs() {
                return Err(Error::InvalidArgument(format!(
                    "G-symmetry violated at off-diagonal {j}"
                )));
            }
        }
        Ok(GSymmetricTridiagonal { matrix, g })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    pub fn diag(&self) -> &[f64] {
        &self.matrix.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.matrix.sup
    }

    pub fn sub(&self) -> &[f64] {
        &self.matrix.sub
    }

    pub fn g(&self) -> &Signature {
        &self.g
    }

    pub fn leading(&self, n: usize) -> GSymmetricTridiagonal {
        GSymmetricTridiagonal {
            matrix: self.matrix.leading(n),
            g: self.g.truncated(n),
        }
    }

    /// Off-diagonal magnitudes `sqrt|sub_j sup_j|` of the symmetric `G M`.
    pub fn symmetric_offdiag(&self) -> Vec<f64> {
        self.matrix
            .sup
            .iter()
            .zip(&self.matrix.sub)
            .map(|(p, q)| (p * q).abs().sqrt())
            .collect()
    }

    /// Indefinite form `[M v, w] = (G M v, w)`.
    pub fn krein_form(&self, v: &[f64], w: &[f64]) -> f64 {
        let mv = self.matrix.apply(v);
        mv.iter()
            .zip(w)
            .enumerate()
            .map(|(j, (a, b))| self.g.get(j) * a * b)
            .sum()
    }
}

/// `G L^T L + xI` built entrywise from `L` (`l_j` diagonal, `s_j` below);
/// `edge` supplies `s_{n-1}` when the exact truncation is wanted.
pub(crate) fn gltl_plus_x(
    l: &BidiagonalL,
    g: &Signature,
    x: f64,
    edge: Option<f64>,
) -> Tridiagonal {
    let n = l.n();
    let s = |j: usize| {
        if j + 1 < n {
            l.sub[j]
        } else {
            edge.unwrap_or(0.0)
        }
    };
    let diag = (0..n)
        .map(|j| g.get(j) * (l.diag[j] * l.diag[j] + s(j) * s(j)) + x)
        .collect();
    let mut sup = Vec::with_capacity(n.saturating_sub(1));
    let mut sub = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n.saturating_sub(1) {
        let c = l.sub[j] * l.diag[j + 1];
        sup.push(g.get(j) * c);
        sub.push(g.get(j + 1) * c);
    }
    Tridiagonal { diag, sup, sub }
}

/// `J~(x) = G L^T L + xI` for the `n x n` factors. The last diagonal entry
/// lacks the `d_{n-1} v_{n-1}^2` term of the semi-infinite matrix.
pub fn darboux_transform(f: &ShiftedFactorization) -> GSymmetricTridiagonal {
    let l = build_l(f);
    let m = gltl_plus_x(&l, &f.eps, f.x, None);
    GSymmetricTridiagonal::new(m, f.eps.clone()).expect("G L^T L is G-symmetric by construction")
}

/// Exact leading `n x n` block of the semi-infinite transform.
pub fn darboux_truncation(m: &MeasureSpec, x: f64, n: usize) -> Result<GSymmetricTridiagonal> {
    let f = factorize(m, x, n)?;
    let (a_edge, _) = m.coeff(n - 1)?;
    let l = build_l(&f);
    let edge = a_edge / f.d[n - 1] * l.diag[n - 1];
    let t = gltl_plus_x(&l, &f.eps, x, Some(edge));
    Ok(GSymmetricTridiagonal::new(t, f.eps).expect("G L^T L is G-symmetric by construction"))
}

/// Favard direction: `J = L G L^T + xI`.
pub fn inverse_transform(l: &BidiagonalL, g: &Signature, x: f64) -> Result<JacobiTruncation> {
    let n = l.n();
    if g.len() != n {
        return Err(Error::InvalidArgument(
            "signature length must equal the order".into(),
        ));
    }
    if l.diag.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::InvalidArgument(
            "bidiagonal factor needs a positive diagonal".into(),
        ));
    }
    let mut b = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n {
        let mut bj = g.get(j) * l.diag[j] * l.diag[j] + x;
        if j > 0 {
            bj += g.get(j - 1) * l.sub[j - 1] * l.sub[j - 1];
        }
        b.push(bj);
        if j + 1 < n {
            let aj = g.get(j) * l.diag[j] * l.sub[j];
            if aj.is_nan() || aj <= 0.0 {
                return Err(Error::NotJacobi { index: j });
            }
            a.push(aj);
        }
    }
    JacobiTruncation::new(b, a)
}

/// Transformed polynomials `P~_0(t)..P~_n(t)`:
///
/// ```text
/// P~_j(t) = eps_j sqrt|d_j| (P_j(t) - P_j(x)/P_{j+1}(x) P_{j+1}(t)) / (t - x)
/// ```
///
/// normalised so that `int P~_i P~_j (t - x) dmu = eps_i delta_ij`. Near
/// `t = x` the derivative limit is used.
pub fn christoffel_eval(m: &MeasureSpec, x: f64, t: f64, n: usize) -> Result<Vec<f64>> {
    let f = factorize(m, x, n + 1)?;
    let (a_n, _) = m.coeff(n)?;
    let mut v = f.v.clone();
    v.push(a_n / f.d[n]);
    let weight = |j: usize| f.eps.get(j) * f.d[j].abs().sqrt();

    let h = t - x;
    if h.abs() < 1e-8 * x.abs().max(1.0) {
        let (_, dp) = jacobi::eval_polys_with_derivative(m, x, n + 1)?;
        return Ok((0..=n)
            .map(|j| weight(j) * (dp[j] + v[j] * dp[j + 1]))
            .collect());
    }
    let p = jacobi::eval_polys(m, t, n + 1)?.values;
    // P_j(x) / P_{j+1}(x) = -v_j
    Ok((0..=n)
        .map(|j| weight(j) * (p[j] + v[j] * p[j + 1]) / h)
        .collect())
}

/// Exact `n x n` truncation of the matrix of `prod (t - x_i) dmu`, built by
/// one signed Darboux step for the first shift and monic steps for the rest.
///
/// The result is rescaled by a positive diagonal similarity so that
/// `sup_j = sqrt|sub_j sup_j| > 0`, with `g` recovered from the signs of the
/// products and `g_0` the sign of the zeroth moment.
pub fn chain_transform(s: &SignedMeasureSpec, n: usize) -> Result<GSymmetricTridiagonal> {
    if n == 0 {
        return Err(Error::InvalidArgument("order must be positive".into()));
    }
    let shifts = s.shifts();
    let first = darboux_truncation(&s.base, shifts[0], n + shifts.len() - 1)?;
    let mut g0 = first.g().get(0);
    let mut t = first.matrix().clone();
    for (k, &x) in shifts.iter().enumerate().skip(1) {
        let (next, u0) = t.monic_darboux_step(x).map_err(|e| e.with_shift(k))?;
        g0 *= u0.signum();
        t = next;
    }
    debug_assert_eq!(t.n(), n);
    if shifts.len() == 1 {
        return Ok(first.leading(n));
    }
    balance_to_signature(&t, g0)
}

fn balance_to_signature(t: &Tridiagonal, g0: f64) -> Result<GSymmetricTridiagonal> {
    let n = t.n();
    let mut g = Vec::with_capacity(n);
    g.push(if g0 > 0.0 { 1i8 } else { -1 });
    let mut sup = Vec::with_capacity(n - 1);
    let mut sub = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let prod = t.sub[j] * t.sup[j];
        if prod == 0.0 || !prod.is_finite() {
            return Err(Error::NotSignSymmetric { index: j });
        }
        let mag = prod.abs().sqrt();
        let sign: i8 = if prod > 0.0 { 1 } else { -1 };
        g.push(g[j] * sign);
        sup.push(mag);
        sub.push(f64::from(sign) * mag);
    }
    GSymmetricTridiagonal::new(
        Tridiagonal {
            diag: t.diag.clone(),
            sup,
            sub,
        },
        Signature(g),
    )
}

/// `cos(pi y)` with exact zeros at half-integers.
pub fn cospi(y: f64) -> f64 {
    let mut r = y.abs() % 2.0;
    if r > 1.0 {
        r = 2.0 - r;
    }
    let (r, sign) = if r > 0.5 { (1.0 - r, -1.0) } else { (r, 1.0) };
    let c = if r == 0.5 {
        0.0
    } else if r > 0.25 {
        (std::f64::consts::PI * (0.5 - r)).sin()
    } else {
        (std::f64::consts::PI * r).cos()
    };
    sign * c
}

/// `sin(pi y)`.
pub fn sinpi(y: f64) -> f64 {
    cospi(y - 0.5)
}

/// Closed-form pivot data for the Chebyshev matrix at `x = cos(pi alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StahlPivot {
    pub d: f64,
    pub v: f64,
    /// `-(cos pi a - sin pi a tan j pi a) / 2`, defined for `j >= 1`.
    pub d_tan_form: Option<f64>,
}

/// `d_j = -cos((j+1) pi a) / (2 cos(j pi a))` and
/// `v_j = -cos(j pi a) / cos((j+1) pi a)` for `j >= 1`. The first row carries
/// `a_0 = 1/sqrt 2`, so `d_0 = -cos(pi a)` and `v_0 = -1 / (sqrt 2 cos(pi a))`.
pub fn stahl_closed_form(alpha: f64, j: usize) -> Result<StahlPivot> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let cj = cospi(j as f64 * alpha);
    let cj1 = cospi((j + 1) as f64 * alpha);
    if cj.abs() < 1e-300 || cj1.abs() < 1e-300 {
        return Err(Error::Breakdown { shift: 0, pivot: j });
    }
    if j == 0 {
        return Ok(StahlPivot {
            d: -cj1,
            v: -std::f64::consts::FRAC_1_SQRT_2 / cj1,
            d_tan_form: None,
        });
    }
    let v = -cj / cj1;
    let tan = sinpi(j as f64 * alpha) / cj;
    Ok(StahlPivot {
        d: -0.5 * cj1 / cj,
        v,
        d_tan_form: Some(-0.5 * (cospi(alpha) - sinpi(alpha) * tan)),
    })
}
