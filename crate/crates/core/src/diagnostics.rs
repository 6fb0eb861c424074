//! Finite-section diagnostics for the shifted factorization: running sup of
//! the pivots, Carleman partial sums of the transformed matrix, the Krein
//! quadratic form, Kronecker statistics for `x = cos(pi alpha)` and a
//! heuristic verdict built from them.
//!
//! Every verdict is evidence from a finite prefix. Boundedness of the pivot
//! sequence is a statement about all indices and cannot be decided here.

use serde::Serialize;

use crate::darboux::{self, cospi, PivotScale, ShiftedFactorization};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::measures::MeasureSpec;
use crate::{GSymmetricTridiagonal, Precision};

pub const SCHEMA: &str = "v1";
pub const DEFAULT_BOUND_THRESHOLD: f64 = 1e3;
pub const DEFAULT_SEED: u64 = 0x2545_f491_4f6c_dd1d;
/// Sweeps longer than this run in double-double unless told otherwise.
pub const EXTENDED_ABOVE: usize = 10_000;
/// Relative growth of the running sup over the last decade that still
/// counts as a plateau.
pub const PLATEAU_GROWTH: f64 = 0.01;
/// Growth factor over the last decade that counts as divergence.
pub const DIVERGENT_GROWTH: f64 = 2.0;
pub const KREIN_ORDER: usize = 100;
pub const KREIN_TRIALS: usize = 100;

/// SplitMix64 (Steele, Lea, Flood): `state += 0x9e3779b97f4a7c15`, then
/// two xor-shift-multiply rounds with `0xbf58476d1ce4e5b9` and
/// `0x94d049bb133111eb`.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    /// Last pivot index included.
    pub j: usize,
    pub d_j: f64,
    /// `max_{i <= j} |d_i|`.
    pub running_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcondReport {
    pub x: f64,
    /// Number of pivots requested.
    #[serde(rename = "N")]
    pub n: usize,
    /// Number of pivots actually computed.
    pub computed: usize,
    pub sup_d: f64,
    pub argmax_j: usize,
    pub precision: Precision,
    pub checkpoints: Vec<Checkpoint>,
}

impl BcondReport {
    /// Running sup over the first `len` pivots, if a checkpoint sits there.
    pub fn sup_at(&self, len: usize) -> Option<f64> {
        self.checkpoints
            .iter()
            .find(|c| c.j + 1 == len)
            .map(|c| c.running_sup)
    }
}

/// A pivot sweep that stopped early, with what was computed before.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct BcondFailure {
    pub error: Error,
    pub partial: BcondReport,
}

fn checkpoint_lengths(n: usize) -> Vec<usize> {
    let mut v = vec![n, (n / 10).max(1)];
    let mut p = 1usize;
    while p <= n {
        v.push(p);
        p = match p.checked_mul(10) {
            Some(q) => q,
            None => break,
        };
    }
    v.sort_unstable();
    v.dedup();
    v
}

/// Running sup of `|d_j|`, `j < n`. Sweeps longer than [`EXTENDED_ABOVE`]
/// use double-double.
pub fn bcond_sup(
    m: &MeasureSpec,
    x: f64,
    n: usize,
) -> std::result::Result<BcondReport, BcondFailure> {
    let p = if n > EXTENDED_ABOVE {
        Precision::Extended
    } else {
        Precision::Standard
    };
    bcond_sup_with(m, x, n, p)
}

pub fn bcond_sup_with(
    m: &MeasureSpec,
    x: f64,
    n: usize,
    precision: Precision,
) -> std::result::Result<BcondReport, BcondFailure> {
    let mut rep = BcondReport {
        x,
        n,
        computed: 0,
        sup_d: 0.0,
        argmax_j: 0,
        precision,
        checkpoints: Vec::new(),
    };
    if n == 0 {
        return Err(BcondFailure {
            error: Error::InvalidArgument("sweep length must be positive".into()),
            partial: rep,
        });
    }
    let marks = checkpoint_lengths(n);
    let mut next_mark = 0;
    let mut record = |rep: &mut BcondReport, j: usize, dj: f64| {
        if dj.abs() > rep.sup_d {
            rep.sup_d = dj.abs();
            rep.argmax_j = j;
        }
        rep.computed = j + 1;
        if marks.get(next_mark) == Some(&(j + 1)) {
            rep.checkpoints.push(Checkpoint {
                j,
                d_j: dj,
                running_sup: rep.sup_d,
            });
            next_mark += 1;
        }
    };
    let fail = |error: Error, rep: BcondReport| BcondFailure {
        error,
        partial: rep,
    };

    let mut scale = PivotScale(0.0);
    let (mut a, b) = m.coeff(0).map_err(|e| fail(e, rep.clone()))?;
    scale.see(a);
    scale.see(b - x);
    match precision {
        Precision::Standard => {
            let mut dj = b - x;
            for j in 0..n {
                if scale.is_zero(dj) {
                    return Err(fail(Error::Breakdown { shift: 0, pivot: j }, rep));
                }
                record(&mut rep, j, dj);
                if j + 1 == n {
                    break;
                }
                let (an, bn) = m.coeff(j + 1).map_err(|e| fail(e, rep.clone()))?;
                scale.see(an);
                scale.see(bn - x);
                let vj = a / dj;
                dj = bn - x - dj * vj * vj;
                a = an;
            }
        }
        Precision::Extended => {
            let xd = Dd::from(x);
            let mut dj = Dd::from(b) - xd;
            for j in 0..n {
                if scale.is_zero(dj.to_f64()) {
                    return Err(fail(Error::Breakdown { shift: 0, pivot: j }, rep));
                }
                record(&mut rep, j, dj.to_f64());
                if j + 1 == n {
                    break;
                }
                let (an, bn) = m.coeff(j + 1).map_err(|e| fail(e, rep.clone()))?;
                scale.see(an);
                scale.see(bn - x);
                let vj = Dd::from(a) / dj;
                dj = Dd::from(bn) - xd - vj * a;
                a = an;
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarlemanPoint {
    pub k: usize,
    pub sum: f64,
}

/// `S_K = sum_{k < K} 1 / sqrt|sub_k sup_k|` at each checkpoint `K` that the
/// matrix can supply (`K <= n - 1`).
pub fn carleman_sums(t: &GSymmetricTridiagonal, checkpoints: &[usize]) -> Vec<CarlemanPoint> {
    let mut ks: Vec<usize> = checkpoints.iter().copied().filter(|&k| k < t.n()).collect();
    ks.sort_unstable();
    ks.dedup();
    let (sup, sub) = (t.sup(), t.sub());
    let mut out = Vec::with_capacity(ks.len());
    let mut acc = 0.0;
    let mut k = 0;
    for target in ks {
        while k < target {
            acc += 1.0 / (sub[k] * sup[k]).abs().sqrt();
            k += 1;
        }
        out.push(CarlemanPoint {
            k: target,
            sum: acc,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KreinCheck {
    pub trials: usize,
    /// `min [(J~ - x) v, v]_G / |v|^2` over the trials.
    pub min_form: f64,
    /// Largest `|direct - |Lv|^2| / max(|Lv|^2, |v|^2)`.
    pub max_discrepancy: f64,
}

/// Evaluates the Krein form of `J~ - x` on seeded random vectors with random
/// finite support, directly from the transformed matrix and as `|Lv|^2`.
pub fn nonnegativity_check(
    f: &ShiftedFactorization,
    trials: usize,
    seed: u64,
) -> Result<KreinCheck> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is needed".into(),
        ));
    }
    let n = f.n();
    let t = darboux::darboux_transform(f);
    let l = darboux::build_l(f);
    let mut rng = SplitMix64::new(seed);
    let mut min_form = f64::INFINITY;
    let mut max_discrepancy = 0.0f64;
    for _ in 0..trials {
        let len = 1 + (rng.next_u64() % n as u64) as usize;
        let mut v = vec![0.0; n];
        for e in v.iter_mut().take(len) {
            *e = rng.uniform(-1.0, 1.0);
        }
        let norm2: f64 = v.iter().map(|e| e * e).sum();
        if norm2 == 0.0 {
            continue;
        }
        let tv = t.matrix().apply(&v);
        let direct: f64 = (0..n)
            .map(|j| t.g().get(j) * (tv[j] - f.x * v[j]) * v[j])
            .sum();
        let lv = l.apply(&v);
        let via_l: f64 = lv.iter().map(|e| e * e).sum();
        min_form = min_form.min(direct / norm2);
        max_discrepancy = max_discrepancy.max((direct - via_l).abs() / via_l.max(norm2));
    }
    Ok(KreinCheck {
        trials,
        min_form,
        max_discrepancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KroneckerStats {
    /// `min_{1 <= j <= N} |cos(j pi alpha)|`.
    pub min_abs_cos: f64,
    /// Largest gap between consecutive points of `{j alpha mod 1}` and the
    /// endpoints `0`, `1`.
    pub fill_distance: f64,
}

pub fn kronecker_stats(alpha: f64, n: usize) -> Result<KroneckerStats> {
    if n == 0 || !alpha.is_finite() {
        return Err(Error::InvalidArgument(
            "need N >= 1 and a finite alpha".into(),
        ));
    }
    let mut min_abs_cos = f64::INFINITY;
    let mut frac = Vec::with_capacity(n + 2);
    frac.push(0.0);
    frac.push(1.0);
    for j in 1..=n {
        let y = j as f64 * alpha;
        min_abs_cos = min_abs_cos.min(cospi(y).abs());
        frac.push(y.rem_euclid(1.0));
    }
    frac.sort_by(f64::total_cmp);
    let fill_distance = frac.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(KroneckerStats {
        min_abs_cos,
        fill_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DefinitizableEvidence,
    NonDefinitizableEvidence,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownInfo {
    pub shift: usize,
    pub pivot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub schema: &'static str,
    pub measure: String,
    pub x: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub precision: Precision,
    pub sup_d: f64,
    pub argmax_j: usize,
    /// Running sup over the first `N/10` pivots.
    pub sup_d_tenth: f64,
    pub growth: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub carleman_sums: Vec<CarlemanPoint>,
    pub min_quadratic_form: Option<f64>,
    pub quadratic_form_discrepancy: Option<f64>,
    pub kronecker_min_cos: Option<f64>,
    pub kronecker_fill_distance: Option<f64>,
    pub bound_threshold: f64,
    pub seed: u64,
    pub breakdown: Option<BreakdownInfo>,
    pub verdict: Verdict,
}

impl DiagnosticsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictOptions {
    pub bound_threshold: f64,
    pub seed: u64,
    /// `None` picks double-double above [`EXTENDED_ABOVE`].
    pub precision: Option<Precision>,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        VerdictOptions {
            bound_threshold: DEFAULT_BOUND_THRESHOLD,
            seed: DEFAULT_SEED,
            precision: None,
        }
    }
}

/// Classifies `(m, x)` from the growth of `sup |d_j|` between `N/10` and `N`.
pub fn verdict(
    m: &MeasureSpec,
    x: f64,
    n: usize,
    bound_threshold: f64,
) -> Result<DiagnosticsReport> {
    verdict_with(
        m,
        x,
        n,
        &VerdictOptions {
            bound_threshold,
            ..VerdictOptions::default()
        },
    )
}

pub fn verdict_with(
    m: &MeasureSpec,
    x: f64,
    n: usize,
    opts: &VerdictOptions,
) -> Result<DiagnosticsReport> {
    if n < 100 {
        return Err(Error::InvalidArgument(format!(
            "verdict needs N >= 100, got {n}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::InvalidArgument("shift must be finite".into()));
    }
    let precision = opts.precision.unwrap_or(if n > EXTENDED_ABOVE {
        Precision::Extended
    } else {
        Precision::Standard
    });
    let (bc, breakdown) = match bcond_sup_with(m, x, n, precision) {
        Ok(r) => (r, None),
        Err(BcondFailure {
            error: Error::Breakdown { shift, pivot },
            partial,
        }) => (partial, Some(BreakdownInfo { shift, pivot })),
        Err(f) => return Err(f.error),
    };
    let tenth = (n / 10).max(1);
    let sup_d_tenth = bc.sup_at(tenth).unwrap_or(f64::NAN);
    let growth = bc.sup_d / sup_d_tenth;

    let (carleman, krein) = if breakdown.is_none() {
        let f = darboux::factorize_with(m, x, n, precision)?;
        let t = darboux::darboux_transform(&f);
        let ks: Vec<usize> = checkpoint_lengths(n - 1).into_iter().collect();
        let carleman = carleman_sums(&t, &ks);
        let fk = darboux::factorize_with(m, x, n.min(KREIN_ORDER), precision)?;
        let krein = nonnegativity_check(&fk, KREIN_TRIALS, opts.seed)?;
        (carleman, Some(krein))
    } else {
        (Vec::new(), None)
    };

    let kron = if x.abs() < 1.0 {
        Some(kronecker_stats(x.acos() / std::f64::consts::PI, n)?)
    } else {
        None
    };

    let verdict = if breakdown.is_some() || !growth.is_finite() {
        Verdict::Inconclusive
    } else if growth < 1.0 + PLATEAU_GROWTH && bc.sup_d <= opts.bound_threshold {
        Verdict::DefinitizableEvidence
    } else if growth >= DIVERGENT_GROWTH {
        Verdict::NonDefinitizableEvidence
    } else {
        Verdict::Inconclusive
    };

    Ok(DiagnosticsReport {
        schema: SCHEMA,
        measure: m.name().to_string(),
        x,
        n,
        precision,
        sup_d: bc.sup_d,
        argmax_j: bc.argmax_j,
        sup_d_tenth,
        growth,
        checkpoints: bc.checkpoints,
        carleman_sums: carleman,
        min_quadratic_form: krein.as_ref().map(|k| k.min_form),
        quadratic_form_discrepancy: krein.as_ref().map(|k| k.max_discrepancy),
        kronecker_min_cos: kron.map(|k| k.min_abs_cos),
        kronecker_fill_distance: kron.map(|k| k.fill_distance),
        bound_threshold: opts.bound_threshold,
        seed: opts.seed,
        breakdown,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{chebyshev_measure, custom_measure, Tail};
    use crate::{factorize, Signature, Tridiagonal};

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0 from the reference C implementation
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(r.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        let u = r.next_f64();
        assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn single_pivot() {
        let r = bcond_sup(&chebyshev_measure(), 0.3, 1).unwrap();
        assert_eq!(r.sup_d, 0.3);
        assert_eq!(r.argmax_j, 0);
        assert_eq!(r.checkpoints.len(), 1);
    }

    #[test]
    fn bounded_sweep() {
        let r = bcond_sup(&chebyshev_measure(), -1.5, 10_000).unwrap();
        assert!(r.sup_d <= 2.0);
        assert_eq!(r.argmax_j, 0);
        assert_eq!(r.precision, Precision::Standard);
    }

    #[test]
    fn breakdown_keeps_partial() {
        // a_k = 1, b_k = 0, x = 1: d_0 = -1, d_1 = -1 + 1 = 0
        let m = custom_measure(&[1.0], &[0.0], Tail::Repeat).unwrap();
        let e = bcond_sup(&m, 1.0, 10).unwrap_err();
        assert_eq!(e.error, Error::Breakdown { shift: 0, pivot: 1 });
        assert_eq!(e.partial.computed, 1);
        assert_eq!(e.partial.sup_d, 1.0);
    }

    #[test]
    fn standard_and_extended_agree_early() {
        let x = cospi(golden());
        let s = bcond_sup_with(&chebyshev_measure(), x, 1000, Precision::Standard).unwrap();
        let e = bcond_sup_with(&chebyshev_measure(), x, 1000, Precision::Extended).unwrap();
        assert_eq!(s.argmax_j, e.argmax_j);
        assert!((s.sup_d - e.sup_d).abs() <= 1e-8 * e.sup_d);
    }

    #[test]
    fn carleman_constant_case() {
        let n = 50;
        let t = Tridiagonal::new(vec![0.0; n], vec![0.5; n - 1], vec![0.5; n - 1]).unwrap();
        let g = GSymmetricTridiagonal::new(t, Signature::positive(n)).unwrap();
        let s = carleman_sums(&g, &[10, 49, 50]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].sum, 20.0);
        assert_eq!(s[1].sum, 98.0);
        let one = GSymmetricTridiagonal::new(
            Tridiagonal::new(vec![1.0], vec![], vec![]).unwrap(),
            Signature::positive(1),
        )
        .unwrap();
        assert!(carleman_sums(&one, &[1, 2]).is_empty());
    }

    #[test]
    fn krein_form_is_nonnegative() {
        let f = factorize(&chebyshev_measure(), 0.3, 100).unwrap();
        let k = nonnegativity_check(&f, 100, 7).unwrap();
        assert!(k.min_form >= -1e-10);
        assert!(k.max_discrepancy <= 1e-11);
    }

    #[test]
    fn first_basis_vector() {
        let f = factorize(&chebyshev_measure(), 0.3, 5).unwrap();
        let l = darboux::build_l(&f);
        let mut e0 = vec![0.0; 5];
        e0[0] = 1.0;
        let lv: f64 = l.apply(&e0).iter().map(|v| v * v).sum();
        let want = f.d[0].abs() * (1.0 + f.v[0] * f.v[0]);
        assert!((lv - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn kronecker_basics() {
        let a = golden();
        let one = kronecker_stats(a, 1).unwrap();
        assert_eq!(one.fill_distance, a.max(1.0 - a));
        let k = kronecker_stats(a, 1000).unwrap();
        assert!(k.fill_distance <= 0.01);
        let k2 = kronecker_stats(a, 2000).unwrap();
        assert!(k2.min_abs_cos <= k.min_abs_cos);
    }

    #[test]
    fn verdicts() {
        let bounded = verdict(&chebyshev_measure(), -1.5, 10_000, DEFAULT_BOUND_THRESHOLD).unwrap();
        assert_eq!(bounded.verdict, Verdict::DefinitizableEvidence);
        assert!(bounded.kronecker_min_cos.is_none());
        let stahl = verdict(
            &chebyshev_measure(),
            cospi(golden()),
            10_000,
            DEFAULT_BOUND_THRESHOLD,
        )
        .unwrap();
        assert_eq!(stahl.verdict, Verdict::NonDefinitizableEvidence);
        assert!(stahl.sup_d >= 50.0);
        assert!(verdict(&chebyshev_measure(), 0.3, 99, 1e3).is_err());
    }

    #[test]
    fn report_bytes_are_reproducible() {
        let m = chebyshev_measure();
        let a = verdict(&m, 0.3, 500, 1e3).unwrap().to_json();
        let b = verdict(&m, 0.3, 500, 1e3).unwrap().to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schema"], "v1");
        assert!(v.get("breakdown").is_some());
    }

    #[test]
    fn breakdown_is_reported_in_verdict() {
        let r = verdict(&chebyshev_measure(), 0.0, 200, 1e3).unwrap();
        assert_eq!(r.breakdown, Some(BreakdownInfo { shift: 0, pivot: 0 }));
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }
}
