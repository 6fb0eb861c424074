//! Positive measures given by their Jacobi recurrence coefficients, and
//! signed measures obtained from them by polynomial factors `prod (t - x_i)`.
//!
//! A measure is always the probability measure of its Jacobi matrix, so the
//! zeroth moment is 1 by construction.

use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi;

type Generator = Arc<dyn Fn(usize) -> (f64, f64) + Send + Sync>;

/// How a finite coefficient table is continued past its last entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// The last supplied value repeats forever.
    #[default]
    Repeat,
    /// The supplied table is cycled.
    Periodic,
}

impl Tail {
    fn pick(self, table: &[f64], k: usize) -> f64 {
        match self {
            Tail::Repeat => table[k.min(table.len() - 1)],
            Tail::Periodic => table[k % table.len()],
        }
    }
}

enum CoeffSource {
    Chebyshev,
    Table {
        a: Vec<f64>,
        b: Vec<f64>,
        tail: Tail,
    },
    Generator {
        f: Generator,
        cache: RwLock<Vec<(f64, f64)>>,
    },
}

/// A positive probability measure on the real line, described by the
/// coefficients `(a_k, b_k)` of its orthonormal three-term recurrence.
pub struct MeasureSpec {
    name: String,
    source: CoeffSource,
    support_hint: (f64, f64),
}

impl Clone for MeasureSpec {
    fn clone(&self) -> Self {
        let source = match &self.source {
            CoeffSource::Chebyshev => CoeffSource::Chebyshev,
            CoeffSource::Table { a, b, tail } => CoeffSource::Table {
                a: a.clone(),
                b: b.clone(),
                tail: *tail,
            },
            CoeffSource::Generator { f, cache } => CoeffSource::Generator {
                f: Arc::clone(f),
                cache: RwLock::new(cache.read().map(|c| c.clone()).unwrap_or_default()),
            },
        };
        MeasureSpec {
            name: self.name.clone(),
            source,
            support_hint: self.support_hint,
        }
    }
}

impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            CoeffSource::Chebyshev => "chebyshev",
            CoeffSource::Table { .. } => "table",
            CoeffSource::Generator { .. } => "generator",
        };
        f.debug_struct("MeasureSpec")
            .field("name", &self.name)
            .field("kind", &kind)
            .field("support_hint", &self.support_hint)
            .finish()
    }
}

impl MeasureSpec {
    /// Measure backed by an arbitrary coefficient generator. Values are
    /// memoized, so the generator runs at most once per index.
    pub fn from_generator<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(usize) -> (f64, f64) + Send + Sync + 'static,
    {
        MeasureSpec {
            name: name.into(),
            source: CoeffSource::Generator {
                f: Arc::new(f),
                cache: RwLock::new(Vec::new()),
            },
            support_hint: (-1.0, 1.0),
        }
    }

    /// Parses the measure-definition JSON:
    /// `{ "name": str, "a": [..], "b": [..], "tail": "repeat" | "periodic" }`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("measure file: {e}")))?;
        let mut m = custom_measure(&file.a, &file.b, file.tail)?;
        m.name = file.name;
        Ok(m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support_hint(&self) -> (f64, f64) {
        self.support_hint
    }

    pub fn with_support_hint(mut self, lo: f64, hi: f64) -> Self {
        self.support_hint = (lo, hi);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn is_chebyshev(&self) -> bool {
        matches!(self.source, CoeffSource::Chebyshev)
    }

    fn raw(&self, k: usize) -> (f64, f64) {
        match &self.source {
            CoeffSource::Chebyshev => {
                if k == 0 {
                    (std::f64::consts::FRAC_1_SQRT_2, 0.0)
                } else {
                    (0.5, 0.0)
                }
            }
            CoeffSource::Table { a, b, tail } => (tail.pick(a, k), tail.pick(b, k)),
            CoeffSource::Generator { f, cache } => {
                if let Some(&v) = cache.read().ok().and_then(|c| c.get(k).copied()).as_ref() {
                    return v;
                }
                let mut c = match cache.write() {
                    Ok(c) => c,
                    Err(poisoned) => poisoned.into_inner(),
                };
                while c.len() <= k {
                    let next = f(c.len());
                    c.push(next);
                }
                c[k]
            }
        }
    }

    /// Recurrence pair `(a_k, b_k)`, validated on access.
    pub fn coeff(&self, k: usize) -> Result<(f64, f64)> {
        let (a, b) = self.raw(k);
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFiniteCoefficient { index: k });
        }
        if a <= 0.0 {
            return Err(Error::NonPositiveCoefficient { index: k, value: a });
        }
        Ok((a, b))
    }

    /// The first `n` coefficients as separate `(a, b)` vectors.
    pub fn coeffs(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for k in 0..n {
            let (ak, bk) = self.coeff(k)?;
            a.push(ak);
            b.push(bk);
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeasureFile {
    name: String,
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(default)]
    tail: Tail,
}

/// Chebyshev measure `dt / (pi sqrt(1 - t^2))` on `[-1, 1]`:
/// `a_0 = 1/sqrt 2`, `a_k = 1/2` for `k >= 1`, `b_k = 0`.
pub fn chebyshev_measure() -> MeasureSpec {
    MeasureSpec {
        name: "chebyshev".to_string(),
        source: CoeffSource::Chebyshev,
        support_hint: (-1.0, 1.0),
    }
}

/// Measure from finite coefficient tables, continued according to `tail`.
pub fn custom_measure(a: &[f64], b: &[f64], tail: Tail) -> Result<MeasureSpec> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "coefficient tables must be non-empty".into(),
        ));
    }
    for (k, &ak) in a.iter().enumerate() {
        if !ak.is_finite() {
            return Err(Error::NonFiniteCoefficient { index: k });
        }
        if ak <= 0.0 {
            return Err(Error::NonPositiveCoefficient {
                index: k,
                value: ak,
            });
        }
    }
    if let Some(k) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteCoefficient { index: k });
    }
    Ok(MeasureSpec {
        name: "custom".to_string(),
        source: CoeffSource::Table {
            a: a.to_vec(),
            b: b.to_vec(),
            tail,
        },
        support_hint: (-1.0, 1.0),
    })
}

/// Signed measure `prod_i (t - x_i) dmu(t)`.
#[derive(Debug, Clone)]
pub struct SignedMeasureSpec {
    pub base: MeasureSpec,
    shifts: Vec<f64>,
}

impl SignedMeasureSpec {
    pub fn new(base: MeasureSpec, shifts: Vec<f64>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one shift is required".into(),
            ));
        }
        if shifts.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("shifts must be finite".into()));
        }
        Ok(SignedMeasureSpec { base, shifts })
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }
}

/// Moments `m_0..m_{count-1}` by a Gauss rule exact to degree `count - 1`.
pub fn moments(m: &MeasureSpec, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "moment count must be positive".into(),
        ));
    }
    let nodes = count / 2 + 1;
    let rule = jacobi::gauss_quadrature(m, nodes)?;
    let mut out = vec![0.0; count];
    out[0] = 1.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let mut p = w;
        for mk in out.iter_mut().skip(1) {
            p *= t;
            *mk += p;
        }
    }
    Ok(out)
}

/// Moments of the signed measure: one pass of `s_k = m_{k+1} - x m_k` per shift.
pub fn signed_moments(s: &SignedMeasureSpec, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "moment count must be positive".into(),
        ));
    }
    let mut cur = moments(&s.base, count + s.shifts.len())?;
    for &x in &s.shifts {
        cur = shift_moments(&cur, x);
    }
    cur.truncate(count);
    Ok(cur)
}

/// One application of the factor `(t - x)` to a moment sequence.
pub fn shift_moments(m: &[f64], x: f64) -> Vec<f64> {
    m.windows(2).map(|w| w[1] - x * w[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_coefficients() {
        let m = chebyshev_measure();
        assert_eq!(m.coeff(0).unwrap(), (std::f64::consts::FRAC_1_SQRT_2, 0.0));
        assert_eq!(m.coeff(1).unwrap(), (0.5, 0.0));
        assert_eq!(m.coeff(1_000_000).unwrap(), (0.5, 0.0));
    }

    #[test]
    fn table_tails() {
        let rep = custom_measure(&[1.0], &[0.0], Tail::Repeat).unwrap();
        assert_eq!(rep.coeff(7).unwrap(), (1.0, 0.0));
        let gap = custom_measure(&[0.5, 0.25], &[0.0], Tail::Periodic).unwrap();
        let a: Vec<f64> = (0..5).map(|k| gap.coeff(k).unwrap().0).collect();
        assert_eq!(a, vec![0.5, 0.25, 0.5, 0.25, 0.5]);
    }

    #[test]
    fn rejects_non_positive_a() {
        let err = custom_measure(&[-1.0], &[0.0], Tail::Repeat).unwrap_err();
        assert!(matches!(
            err,
            Error::NonPositiveCoefficient { index: 0, .. }
        ));
        assert!(custom_measure(&[], &[0.0], Tail::Repeat).is_err());
    }

    #[test]
    fn generator_is_checked_and_memoized() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let calls = Arc::new(AtomicUsize::new(0));
        let c = Arc::clone(&calls);
        let m = MeasureSpec::from_generator("g", move |k| {
            c.fetch_add(1, Ordering::SeqCst);
            (if k == 3 { -1.0 } else { 0.5 }, 0.0)
        });
        assert!(m.coeff(2).is_ok());
        assert!(matches!(
            m.coeff(3),
            Err(Error::NonPositiveCoefficient { index: 3, .. })
        ));
        m.coeff(1).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn json_definition() {
        let m =
            MeasureSpec::from_json(r#"{"name":"gap","a":[0.5,0.25],"b":[0.0],"tail":"periodic"}"#)
                .unwrap();
        assert_eq!(m.name(), "gap");
        assert_eq!(m.coeff(3).unwrap().0, 0.25);
        let d = MeasureSpec::from_json(r#"{"name":"c","a":[1.0],"b":[0.0]}"#).unwrap();
        assert_eq!(d.coeff(9).unwrap(), (1.0, 0.0));
        assert!(MeasureSpec::from_json(r#"{"name":"bad","a":[0.0],"b":[0.0]}"#).is_err());
    }

    #[test]
    fn chebyshev_moments_small() {
        let m = moments(&chebyshev_measure(), 5).unwrap();
        assert_eq!(m[0], 1.0);
        assert!(m[1].abs() < 1e-15);
        assert!((m[2] - 0.5).abs() < 1e-15);
        assert!(m[3].abs() < 1e-15);
        assert!((m[4] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn signed_moment_examples() {
        let x = 0.37;
        let s = SignedMeasureSpec::new(chebyshev_measure(), vec![x]).unwrap();
        let sm = signed_moments(&s, 4).unwrap();
        assert!((sm[0] + x).abs() < 1e-15);
        assert!((sm[1] - 0.5).abs() < 1e-15);

        let z = SignedMeasureSpec::new(chebyshev_measure(), vec![0.0]).unwrap();
        let base = moments(&chebyshev_measure(), 6).unwrap();
        let sz = signed_moments(&z, 5).unwrap();
        assert_eq!(&sz[..], &base[1..6]);
    }

    #[test]
    fn signed_moments_are_one_fused_step_per_entry() {
        let base = moments(&chebyshev_measure(), 12).unwrap();
        let x = -0.731;
        let s = SignedMeasureSpec::new(chebyshev_measure(), vec![x]).unwrap();
        let sm = signed_moments(&s, 11).unwrap();
        for k in 0..11 {
            assert_eq!(sm[k].to_bits(), (base[k + 1] - x * base[k]).to_bits());
        }
    }

    #[test]
    fn shifts_must_be_nonempty_and_finite() {
        assert!(SignedMeasureSpec::new(chebyshev_measure(), vec![]).is_err());
        assert!(SignedMeasureSpec::new(chebyshev_measure(), vec![f64::NAN]).is_err());
    }
}
